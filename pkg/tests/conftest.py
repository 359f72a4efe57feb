"""Session-scoped trained fixtures shared by the acceptance suite."""

import numpy as np
import pytest
import torch

from profill.data import Dataset
from profill.generator import GeneratorConfig
from profill.imageops import bilinear_resize
from profill.losses import LossWeights
from profill.training import TrainConfig, train


def smooth_images(count, res, seed, amplitude=0.9):
    """Low-resolution noise upsampled to smooth random probe images."""
    rng = np.random.default_rng(seed)
    return [
        np.clip(bilinear_resize(rng.uniform(-amplitude, amplitude, (4, 4, 3)), res, res), -1, 1)
        for _ in range(count)
    ]


@pytest.fixture(scope="session")
def overfit_run(tmp_path_factory):
    """Unconditional overfit on 8 fixed images, stages 4 -> 16."""
    images = smooth_images(8, 16, seed=0)
    dataset = Dataset.from_arrays(images, [np.zeros(0, dtype=np.int64)] * 8)
    cfg = TrainConfig(
        generator=GeneratorConfig(max_resolution=16, base_channels=16, max_channels=64),
        stages=(4, 8, 16),
        steps_fade=100,
        steps_stable=1566,
        batch_size=8,
        unconditional=True,
        seed=0,
        learning_rate=5e-4,
        adam_beta1=0.9,
        checkpoint_every=100_000,
        weights=LossWeights(
            target_weight=0.5,
            attribute=2.0,
            reconstruction=4000.0,
            feature=10.0,
            boundary=1000.0,
        ),
    )
    out_dir = tmp_path_factory.mktemp("overfit")
    result = train(cfg, dataset, out_dir=out_dir)
    return {"result": result, "images": images, "cfg": cfg, "out_dir": out_dir}


ATTRIBUTE_PATCH = (slice(4, 12), slice(4, 12))  # center 8x8 at 16x16


def patch_faces(count, seed):
    """Synthetic 2-attribute dataset: brightness lives in the center patch
    (the region masks cover), tilt is a weak global gradient, and the
    border texture carries no attribute information at all."""
    rng = np.random.default_rng(seed)
    res = 16
    col = np.linspace(-0.15, 0.15, res)
    images, attrs = [], []
    for i in range(count):
        bright = i % 2
        tilt = (i // 2) % 2
        background = np.clip(bilinear_resize(rng.uniform(-0.25, 0.25, (4, 4, 3)), res, res), -1, 1)
        img = background + col[None, :, None] * (1.0 if tilt else -1.0)
        img[ATTRIBUTE_PATCH] = (0.5 if bright else -0.5) + rng.uniform(-0.05, 0.05, (8, 8, 3))
        images.append(np.clip(img, -1, 1))
        attrs.append(np.array([bright, tilt], dtype=np.int64))
    return images, attrs


@pytest.fixture(scope="session")
def conditional_run(tmp_path_factory):
    """Conditional training on the synthetic bright/tilt dataset."""
    images, attrs = patch_faces(32, seed=1)
    dataset = Dataset.from_arrays(images, attrs, ("bright", "tilt"))
    cfg = TrainConfig(
        generator=GeneratorConfig(
            max_resolution=16,
            base_channels=16,
            max_channels=64,
            n_attributes=2,
            skip_variant="residual",
        ),
        attribute_names=("bright", "tilt"),
        stages=(4, 8, 16),
        steps_fade=200,
        steps_stable=1400,
        batch_size=16,
        learning_rate=3e-4,
        adam_beta1=0.9,
        unconditional=False,
        seed=2,
        checkpoint_every=100_000,
        weights=LossWeights(
            target_weight=0.7, attribute=50.0, reconstruction=100.0, feature=1.0, boundary=100.0
        ),
    )
    out_dir = tmp_path_factory.mktemp("conditional")
    result = train(cfg, dataset, out_dir=out_dir)
    return {"result": result, "images": images, "attrs": attrs, "cfg": cfg, "out_dir": out_dir}


def complete_tensor(generator, image, mask, attrs=None):
    """Torch-side completion of one (H, W, 3) image under an (H, W) mask."""
    t = torch.from_numpy(np.moveaxis(image, -1, 0).astype(np.float32))[None]
    m = torch.from_numpy(mask.astype(np.float32))[None, None]
    n_attr = generator.config.n_attributes
    a = torch.zeros((1, n_attr)) if attrs is None else torch.from_numpy(
        np.asarray(attrs, dtype=np.float32)
    )[None]
    with torch.no_grad():
        out = generator(t * (1 - m), m, a)
    return np.moveaxis(out[0].numpy().astype(np.float64), 0, -1)
