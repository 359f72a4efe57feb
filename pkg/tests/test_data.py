import numpy as np
import pytest

from profill import data
from profill.conditioning import write_attribute_manifest
from oracles import bilinear_resize_loops, block_mean_loops, hflip_loops


def _write_images(directory, count, res=8, seed=0):
    rng = np.random.default_rng(seed)
    names = []
    for i in range(count):
        img = rng.uniform(-1, 1, (res, res, 3))
        name = f"img{i:03d}.png"
        data.encode_image(img, directory / name)
        names.append(name)
    return names


def test_split_sizes_small(tmp_path):
    _write_images(tmp_path, 10)
    train, test = data.load_dataset(tmp_path, split_seed=0, test_fraction=0.1)
    assert (len(train), len(test)) == (9, 1)


def test_split_formula_matches_reported_sizes():
    assert int(30_000 * 0.1) == 3_000
    assert 30_000 - int(30_000 * 0.1) == 27_000


def test_split_deterministic_and_disjoint(tmp_path):
    _write_images(tmp_path, 12)
    a_train, a_test = data.load_dataset(tmp_path, split_seed=5, test_fraction=0.25)
    b_train, b_test = data.load_dataset(tmp_path, split_seed=5, test_fraction=0.25)
    assert a_train.paths == b_train.paths and a_test.paths == b_test.paths
    assert not (set(a_train.paths) & set(a_test.paths))
    assert len(a_train) + len(a_test) == 12


def test_load_dataset_with_manifest(tmp_path):
    names = _write_images(tmp_path, 4)
    manifest = tmp_path / "attrs.jsonl"
    write_attribute_manifest(
        manifest, [(n, np.array([i % 2])) for i, n in enumerate(names)], ("Bright",)
    )
    train, test = data.load_dataset(tmp_path, manifest=manifest, split_seed=1, test_fraction=0.25)
    assert train.attribute_names == ("Bright",)
    assert len(train) == 3 and len(test) == 1
    assert train.image(0).shape == (8, 8, 3)
    assert train.attribute_vector(0).shape == (1,)


def test_load_dataset_rejects_missing_and_nonsquare(tmp_path):
    names = _write_images(tmp_path, 2)
    data.encode_image(np.zeros((4, 6, 3)), tmp_path / "bad.png")
    manifest = tmp_path / "attrs.jsonl"
    write_attribute_manifest(
        manifest,
        [(names[0], [0]), (names[1], [1]), ("bad.png", [0]), ("gone.png", [1])],
        ("Bright",),
    )
    with pytest.raises(data.IngestError) as err:
        data.load_dataset(tmp_path, manifest=manifest)
    message = str(err.value)
    assert "gone.png" in message and "bad.png" in message


def test_image_decode_range(tmp_path):
    img = np.linspace(-1, 1, 8 * 8 * 3).reshape(8, 8, 3)
    data.encode_image(img, tmp_path / "x.png")
    decoded = data.decode_image(tmp_path / "x.png")
    assert decoded.min() >= -1.0 and decoded.max() <= 1.0
    assert np.allclose(decoded, img, atol=1 / 127.5)


def test_downsample_constant():
    img = np.full((16, 16, 3), 0.375)
    for res in (8, 4):
        assert np.allclose(data.downsample_image(img, res), 0.375)


def test_downsample_mean_of_mixed_block():
    img = np.array([[-1.0, -1.0], [1.0, 1.0]])[:, :, None] * np.ones(3)
    assert np.allclose(data.downsample_image(img, 1), 0.0)


def test_downsample_matches_block_oracle():
    rng = np.random.default_rng(2)
    img = rng.uniform(-1, 1, (8, 8, 3))
    for res in (4, 2):
        assert np.allclose(data.downsample_image(img, res), block_mean_loops(img, res), atol=1e-10)


def test_downsample_rejects_nondivisible():
    with pytest.raises(ValueError):
        data.downsample_image(np.zeros((8, 8, 3)), 3)


def test_pyramid_consistency():
    rng = np.random.default_rng(9)
    img = rng.uniform(-1, 1, (16, 16, 3))
    direct = data.downsample_image(img, 4)
    chained = data.downsample_image(data.downsample_image(img, 8), 4)
    assert np.allclose(direct, chained, atol=1e-12)


def test_blur_probe_constant_and_identity():
    img = np.full((8, 8, 3), -0.25)
    assert np.allclose(data.blur_context_probe(img, 2), img)
    rng = np.random.default_rng(4)
    img = rng.uniform(-1, 1, (8, 8, 3))
    assert np.allclose(data.blur_context_probe(img, 8), img)


def test_blur_probe_matches_composed_oracle():
    rng = np.random.default_rng(6)
    img = rng.uniform(-1, 1, (8, 8, 3))
    got = data.blur_context_probe(img, 2)
    want = bilinear_resize_loops(block_mean_loops(img, 2), 8, 8)
    assert np.allclose(got, want, atol=1e-10)


def test_hflip_matches_index_reversal():
    rng = np.random.default_rng(8)
    img = rng.uniform(-1, 1, (4, 4, 3))
    assert np.allclose(data.hflip(img), hflip_loops(img), atol=0)


def test_flip_twice_is_identity():
    rng = np.random.default_rng(10)
    img = rng.uniform(-1, 1, (6, 6, 3))
    mask = (rng.random((6, 6)) > 0.5).astype(np.float64)
    f_img, f_mask = data.hflip(img, mask)
    ff_img, ff_mask = data.hflip(f_img, f_mask)
    assert np.array_equal(ff_img, img)
    assert np.array_equal(ff_mask, mask)


def test_rotation_zero_is_identity():
    rng = np.random.default_rng(12)
    img = rng.uniform(-1, 1, (8, 8, 3))
    mask = (rng.random((8, 8)) > 0.5).astype(np.float64)
    r_img, r_mask = data.rotate(img, mask, 0.0)
    assert np.allclose(r_img, img, atol=1e-6)
    assert np.array_equal(r_mask, mask)


def test_augment_mask_stays_binary_and_in_range():
    rng = np.random.default_rng(14)
    img = rng.uniform(-1, 1, (8, 8, 3))
    mask = (rng.random((8, 8)) > 0.5).astype(np.float64)
    for _ in range(20):
        out_img, out_mask = data.augment(rng, img, mask)
        assert out_img.shape == img.shape and out_mask.shape == mask.shape
        assert out_img.min() >= -1.0 and out_img.max() <= 1.0
        assert set(np.unique(out_mask)) <= {0.0, 1.0}


def test_augment_deterministic_under_seed():
    img = np.random.default_rng(1).uniform(-1, 1, (8, 8, 3))
    mask = masking_center()
    a = data.augment(np.random.default_rng(77), img, mask)
    b = data.augment(np.random.default_rng(77), img, mask)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def masking_center():
    from profill.masking import center_mask

    return center_mask(8, 8)
