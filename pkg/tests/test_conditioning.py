import json

import numpy as np
import pytest

from profill import conditioning


def _first_uniform(seed):
    return np.random.default_rng(seed).uniform()


def test_keep_branch_returns_real_vector():
    seed = next(s for s in range(100) if _first_uniform(s) < 0.5)
    rng = np.random.default_rng(seed)
    real = np.array([1, 0, 1])
    assert np.array_equal(conditioning.sample_fake_attributes(rng, real), real)


def test_flip_branch_single_attribute():
    seed = next(s for s in range(100) if _first_uniform(s) >= 0.5)
    rng = np.random.default_rng(seed)
    assert np.array_equal(conditioning.sample_fake_attributes(rng, [0]), [1])


def test_flip_distance_never_exceeds_one():
    rng = np.random.default_rng(42)
    real = np.array([0, 1, 0, 1, 1])
    for _ in range(500):
        fake = conditioning.sample_fake_attributes(rng, real)
        assert int(np.sum(fake != real)) in (0, 1)


def test_fake_attribute_statistics():
    # Monte Carlo frequency oracle over 10,000 draws with N = 2
    rng = np.random.default_rng(123)
    real = np.array([0, 1])
    kept = 0
    flip_counts = [0, 0]
    n = 10_000
    for _ in range(n):
        fake = conditioning.sample_fake_attributes(rng, real)
        if np.array_equal(fake, real):
            kept += 1
        else:
            flip_counts[int(np.argmax(fake != real))] += 1
    assert abs(kept / n - 0.5) <= 0.02
    flipped = sum(flip_counts)
    for count in flip_counts:
        assert abs(count / flipped - 0.5) <= 0.03


def test_sample_rejects_empty_vector():
    with pytest.raises(ValueError):
        conditioning.sample_fake_attributes(np.random.default_rng(0), [])


def test_sample_rejects_nonbinary():
    with pytest.raises(ValueError):
        conditioning.sample_fake_attributes(np.random.default_rng(0), [0, 2])


def test_encode_constant_tiling():
    fm = conditioning.encode_attributes([1, 0], 4, 4)
    assert fm.shape == (4, 4, 2)
    assert np.all(fm[:, :, 0] == 1.0)
    assert np.all(fm[:, :, 1] == 0.0)


def test_encode_empty_vector():
    fm = conditioning.encode_attributes([], 4, 4)
    assert fm.shape == (4, 4, 0)


def test_encode_all_ones_enumeration():
    fm = conditioning.encode_attributes([1, 1], 2, 2)
    for y in range(2):
        for x in range(2):
            for c in range(2):
                assert fm[y, x, c] == 1.0


def test_encode_injective_on_vectors():
    seen = {}
    for values in ([0, 0], [0, 1], [1, 0], [1, 1]):
        key = conditioning.encode_attributes(values, 3, 3).tobytes()
        assert key not in seen
        seen[key] = values


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "attrs.jsonl"
    records = [("a.png", np.array([1, 0])), ("b.png", np.array([0, 1]))]
    conditioning.write_attribute_manifest(path, records, ("Male", "Smiling"))
    got, names = conditioning.read_attribute_manifest(path)
    assert names == ("Male", "Smiling")
    assert [(f, v.tolist()) for f, v in got] == [("a.png", [1, 0]), ("b.png", [0, 1])]


def test_manifest_rejects_nonbinary(tmp_path):
    path = tmp_path / "attrs.jsonl"
    path.write_text(json.dumps({"file": "a.png", "attrs": {"Male": 0.5}}) + "\n")
    with pytest.raises(conditioning.ManifestError):
        conditioning.read_attribute_manifest(path)


def test_manifest_rejects_inconsistent_names(tmp_path):
    path = tmp_path / "attrs.jsonl"
    rows = [
        {"file": "a.png", "attrs": {"Male": 1, "Smiling": 0}},
        {"file": "b.png", "attrs": {"Male": 0}},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    with pytest.raises(conditioning.ManifestError):
        conditioning.read_attribute_manifest(path)
