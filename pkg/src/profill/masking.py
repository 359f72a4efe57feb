"""Training-mask synthesis, observed-image derivation, boundary weights.

Masks are (H, W) float64 arrays with values in {0, 1}: 1 marks the target
region to complete, 0 the preserved context. The two regions partition the
pixel lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imageops import bilinear_resize, block_mean


class MaskSamplingError(RuntimeError):
    """Rejection sampling exhausted its resample budget."""


@dataclass(frozen=True)
class MaskSpec:
    """Parameters of the random-mask sampler."""

    kind: str = "random"
    min_coverage: float = 0.10
    max_coverage: float = 0.30
    noise_res: int = 4
    threshold: float = 0.5
    max_resamples: int = 100

    def __post_init__(self) -> None:
        if self.kind not in ("random", "center"):
            raise ValueError(f"unknown mask kind {self.kind!r}")
        if not (0.0 < self.min_coverage <= self.max_coverage < 1.0):
            raise ValueError("coverage bounds must satisfy 0 < min <= max < 1")
        if self.noise_res < 2:
            raise ValueError("noise_res must be >= 2")
        if self.max_resamples < 1:
            raise ValueError("max_resamples must be >= 1")


def validate_mask(mask: np.ndarray) -> np.ndarray:
    """Check the binary-mask invariant and return the array as float64."""
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-d, got shape {arr.shape}")
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    return arr


# Rectangle side lengths are drawn uniformly from this fraction band of the
# image side; together with Bernoulli(~0.5) thresholded noise this lands
# coverage in the accepted band most of the time.
RECT_FRACTION_LOW = 0.3
RECT_FRACTION_HIGH = 0.8


def sample_random_mask(
    rng: np.random.Generator,
    height: int,
    width: int,
    spec: MaskSpec = MaskSpec(),
) -> np.ndarray:
    """Sample a random training mask by thresholded low-resolution noise.

    A rectangle of random size and location is filled with noise_res x
    noise_res uniform noise, bilinearly upsampled to the rectangle and
    thresholded. Candidates are rejected until coverage falls inside
    [min_coverage, max_coverage]; the sampler is deterministic given the
    generator state.
    """
    if height < spec.noise_res or width < spec.noise_res:
        raise ValueError(f"image sides must be >= noise_res, got {height}x{width}")
    for _ in range(spec.max_resamples):
        rect_h = max(1, int(round(rng.uniform(RECT_FRACTION_LOW, RECT_FRACTION_HIGH) * height)))
        rect_w = max(1, int(round(rng.uniform(RECT_FRACTION_LOW, RECT_FRACTION_HIGH) * width)))
        top = int(rng.integers(0, height - rect_h + 1))
        left = int(rng.integers(0, width - rect_w + 1))
        noise = rng.uniform(0.0, 1.0, size=(spec.noise_res, spec.noise_res))
        patch = bilinear_resize(noise, rect_h, rect_w)
        mask = np.zeros((height, width), dtype=np.float64)
        mask[top : top + rect_h, left : left + rect_w] = (patch > spec.threshold).astype(np.float64)
        coverage = mask.mean()
        if spec.min_coverage <= coverage <= spec.max_coverage:
            return mask
    raise MaskSamplingError(
        f"no mask with coverage in [{spec.min_coverage}, {spec.max_coverage}] "
        f"after {spec.max_resamples} attempts at {height}x{width}"
    )


def center_mask(height: int, width: int) -> np.ndarray:
    """Centered square target covering exactly a quarter of the image.

    Sides must be even; the square spans half of each side.
    """
    if height % 2 or width % 2:
        raise ValueError(f"center_mask needs even sides, got {height}x{width}")
    mask = np.zeros((height, width), dtype=np.float64)
    top, left = height // 4, width // 4
    mask[top : top + height // 2, left : left + width // 2] = 1.0
    return mask


def boundary_weights(mask: np.ndarray, kernel_size: int = 7) -> np.ndarray:
    """Weights peaked at the mask boundary, zero far from it.

    w = meanfilter(M) * (1 - M) + meanfilter(1 - M) * M, with the mean
    filter zero-padded at image borders. Values lie in [0, 1] and vanish
    beyond the filter radius from the boundary, and everywhere when the
    mask is constant.
    """
    m = validate_mask(mask)
    if kernel_size < 3 or kernel_size % 2 == 0:
        raise ValueError(f"kernel_size must be odd and >= 3, got {kernel_size}")
    blur_target = ndimage.uniform_filter(m, size=kernel_size, mode="constant", cval=0.0)
    blur_context = ndimage.uniform_filter(1.0 - m, size=kernel_size, mode="constant", cval=0.0)
    return blur_target * (1.0 - m) + blur_context * m


def apply_mask(image: np.ndarray, mask: np.ndarray, fill: float = 0.0) -> np.ndarray:
    """Replace the target region with a constant fill (0 = mid gray in [-1, 1])."""
    img = np.asarray(image, dtype=np.float64)
    m = validate_mask(mask)
    if img.shape[:2] != m.shape:
        raise ValueError(f"image {img.shape} and mask {m.shape} spatial shapes differ")
    m_b = m if img.ndim == 2 else m[:, :, None]
    return img * (1.0 - m_b) + fill * m_b


def downsample_mask(mask: np.ndarray, target_res: int) -> np.ndarray:
    """Average-pool a mask to target_res and re-binarize (majority wins)."""
    m = validate_mask(mask)
    if target_res < 4:
        raise ValueError(f"target_res must be >= 4, got {target_res}")
    pooled = block_mean(m, target_res)
    return (pooled >= 0.5).astype(np.float64)


def save_mask_png(mask: np.ndarray, path) -> None:
    """Write a mask as single-channel 8-bit PNG (1 -> 255, 0 -> 0)."""
    from PIL import Image

    m = validate_mask(mask)
    Image.fromarray((m * 255).astype(np.uint8), mode="L").save(path, format="PNG")


def load_mask_png(path) -> np.ndarray:
    """Read a single-channel PNG back to a binary mask (>=128 -> 1)."""
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr >= 128).astype(np.float64)
