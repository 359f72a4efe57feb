"""Dataset ingestion, resolution pyramid, and augmentation.

Images are (H, W, 3) float64 arrays in [-1, 1] decoded from square PNGs.
Datasets pair images with attribute vectors read from a JSON-lines
manifest (see conditioning); an empty manifest means unconditional mode.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image
from scipy import ndimage

from .conditioning import read_attribute_manifest, validate_attributes
from .imageops import bilinear_resize, block_mean


class IngestError(ValueError):
    """Dataset ingestion failed; the message lists every offender."""


def decode_image(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0 * 2.0 - 1.0


def encode_image(image: np.ndarray, path) -> None:
    arr = np.clip(np.asarray(image, dtype=np.float64), -1.0, 1.0)
    u8 = np.round((arr + 1.0) / 2.0 * 255.0).astype(np.uint8)
    Image.fromarray(u8, mode="RGB").save(path, format="PNG")


@dataclass
class Dataset:
    """Square same-resolution images with one attribute vector each."""

    paths: list
    attributes: list
    attribute_names: tuple
    resolution: int
    split: str = "train"
    _images: list = field(default_factory=list, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self._images) if self._images else len(self.paths)

    def image(self, index: int) -> np.ndarray:
        if self._images:
            return self._images[index]
        if index not in self._cache:
            self._cache[index] = decode_image(self.paths[index])
        return self._cache[index]

    def attribute_vector(self, index: int) -> np.ndarray:
        return self.attributes[index]

    @classmethod
    def from_arrays(cls, images, attributes, attribute_names=(), split="train"):
        images = [np.asarray(im, dtype=np.float64) for im in images]
        res = images[0].shape[0]
        attrs = [validate_attributes(a) for a in attributes]
        ds = cls(
            paths=[f"<memory:{i}>" for i in range(len(images))],
            attributes=attrs,
            attribute_names=tuple(attribute_names),
            resolution=res,
            split=split,
        )
        ds._images = images
        return ds


def load_dataset(directory, manifest=None, split_seed: int = 0, test_fraction: float = 0.1):
    """Load a directory of square PNGs, split deterministically.

    With a manifest, only manifest rows are loaded (with their attribute
    vectors); without one, every *.png in the directory is loaded
    unconditionally. Returns (train, test); the test split holds
    int(n * test_fraction) records.
    """
    if not (0.0 <= test_fraction < 1.0):
        raise ValueError("test_fraction must lie in [0, 1)")
    if manifest is not None:
        records, names = read_attribute_manifest(manifest)
        files = [(os.path.join(directory, f), attrs) for f, attrs in records]
    else:
        names = ()
        listing = sorted(f for f in os.listdir(directory) if f.lower().endswith(".png"))
        files = [(os.path.join(directory, f), np.zeros(0, dtype=np.int64)) for f in listing]
    if not files:
        raise IngestError(f"no images found in {directory}")

    offenders = []
    resolution = None
    for path, _ in files:
        if not os.path.exists(path):
            offenders.append(f"{path}: missing file")
            continue
        with Image.open(path) as im:
            w, h = im.size
        if w != h:
            offenders.append(f"{path}: not square ({w}x{h})")
        elif h < 4 or h & (h - 1):
            offenders.append(f"{path}: side {h} is not a power of two")
        elif resolution is None:
            resolution = h
        elif h != resolution:
            offenders.append(f"{path}: resolution {h} differs from {resolution}")
    if offenders:
        raise IngestError("ingestion rejected:\n" + "\n".join(offenders))

    rng = np.random.default_rng(split_seed)
    order = rng.permutation(len(files))
    n_test = int(len(files) * test_fraction)
    test_idx = set(order[:n_test].tolist())

    def build(selected, split):
        return Dataset(
            paths=[files[i][0] for i in selected],
            attributes=[files[i][1] for i in selected],
            attribute_names=tuple(names),
            resolution=resolution,
            split=split,
        )

    train_sel = [i for i in range(len(files)) if i not in test_idx]
    test_sel = [i for i in range(len(files)) if i in test_idx]
    return build(train_sel, "train"), build(test_sel, "test")


def downsample_image(image: np.ndarray, target_res: int) -> np.ndarray:
    """Average-pool an image to target_res (non-overlapping block means)."""
    return block_mean(image, target_res)


def blur_context_probe(image: np.ndarray, low_res: int = 32) -> np.ndarray:
    """Average-pool to low_res, then bilinearly upsample back to the input size."""
    arr = np.asarray(image, dtype=np.float64)
    pooled = block_mean(arr, low_res)
    return bilinear_resize(pooled, arr.shape[0], arr.shape[1])


def hflip(image: np.ndarray, mask=None):
    """Mirror left-right; applied identically to the mask when given."""
    flipped = np.asarray(image, dtype=np.float64)[:, ::-1].copy()
    if mask is None:
        return flipped
    return flipped, np.asarray(mask, dtype=np.float64)[:, ::-1].copy()


ROTATION_RANGE_DEG = 30.0


def rotate(image: np.ndarray, mask: np.ndarray, angle_deg: float):
    """Rotate image and mask together: bilinear, reflection padding.

    The mask is re-binarized at 0.5 after resampling so it stays in {0, 1}.
    """
    img = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if angle_deg == 0.0:
        return img.copy(), m.copy()
    axes = (1, 0)
    rotated = ndimage.rotate(img, angle_deg, axes=axes, reshape=False, order=1, mode="reflect")
    rotated = np.clip(rotated, -1.0, 1.0)
    m_rot = ndimage.rotate(m, angle_deg, axes=axes, reshape=False, order=1, mode="reflect")
    return rotated, (m_rot >= 0.5).astype(np.float64)


def augment(rng: np.random.Generator, image: np.ndarray, mask: np.ndarray):
    """Random horizontal flip (p = 0.5) then rotation U[-30, 30] degrees.

    Draw order: flip uniform, then angle uniform; both consumed every call
    so augmentation stays reproducible under a seeded generator.
    """
    img = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if img.shape[0] != img.shape[1]:
        raise ValueError("augment expects square inputs")
    do_flip = rng.uniform() < 0.5
    angle = rng.uniform(-ROTATION_RANGE_DEG, ROTATION_RANGE_DEG)
    if do_flip:
        img, m = hflip(img, m)
    return rotate(img, m, angle)
