"""Resampling primitives shared by the masking, data, and inference paths.

Images are numpy arrays, (H, W) or (H, W, C), float64, values nominally in
[-1, 1]. All arithmetic happens in float64 so brute-force reference
implementations agree to machine precision.
"""

from __future__ import annotations

import numpy as np


def block_mean(image: np.ndarray, target_res: int) -> np.ndarray:
    """Non-overlapping block averaging down to target_res x target_res.

    Both spatial sides must be divisible by target_res.
    """
    src = np.asarray(image, dtype=np.float64)
    if src.ndim not in (2, 3):
        raise ValueError(f"expected (H, W) or (H, W, C) array, got shape {src.shape}")
    h, w = src.shape[:2]
    if target_res < 1:
        raise ValueError(f"target_res must be positive, got {target_res}")
    if h % target_res or w % target_res:
        raise ValueError(f"image sides {h}x{w} not divisible by target_res {target_res}")
    bh, bw = h // target_res, w // target_res
    shaped = src.reshape(target_res, bh, target_res, bw, *src.shape[2:])
    return shaped.mean(axis=(1, 3))


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment.

    Destination pixel (i, j) samples the source at
    ((i + 0.5) * H/out_h - 0.5, (j + 0.5) * W/out_w - 0.5), clamped to the
    source extent. Matches torch's interpolate(align_corners=False).
    """
    src = np.asarray(image, dtype=np.float64)
    if src.ndim not in (2, 3):
        raise ValueError(f"expected (H, W) or (H, W, C) array, got shape {src.shape}")
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")
    in_h, in_w = src.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    xs = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = ys - y0
    wx = xs - x0
    if src.ndim == 3:
        wy = wy[:, None, None]
        wx = wx[None, :, None]
    else:
        wy = wy[:, None]
        wx = wx[None, :]
    top = src[np.ix_(y0, x0)] * (1.0 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1.0 - wx) + src[np.ix_(y1, x1)] * wx
    return top * (1.0 - wy) + bottom * wy
