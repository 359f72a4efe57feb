"""Independent brute-force reference implementations used as test oracles.

Everything here is deliberately written as plain loops over numpy arrays
in float64, recomputing what the package implements with vectorized or
torch code. Keep these dumb and obviously correct.
"""

from __future__ import annotations

import numpy as np

NORM_EPS = 1e-5


def mean_filter_loops(arr: np.ndarray, k: int) -> np.ndarray:
    """Centered k x k mean filter with zero padding, one pixel at a time."""
    h, w = arr.shape
    r = k // 2
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            total = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        total += arr[yy, xx]
            out[y, x] = total / (k * k)
    return out


def boundary_weights_loops(mask: np.ndarray, k: int = 7) -> np.ndarray:
    m = np.asarray(mask, dtype=np.float64)
    return mean_filter_loops(m, k) * (1.0 - m) + mean_filter_loops(1.0 - m, k) * m


def block_mean_loops(image: np.ndarray, target: int) -> np.ndarray:
    src = np.asarray(image, dtype=np.float64)
    h, w = src.shape[:2]
    bh, bw = h // target, w // target
    out_shape = (target, target) + src.shape[2:]
    out = np.zeros(out_shape, dtype=np.float64)
    for i in range(target):
        for j in range(target):
            total = np.zeros(src.shape[2:], dtype=np.float64)
            for y in range(i * bh, (i + 1) * bh):
                for x in range(j * bw, (j + 1) * bw):
                    total = total + src[y, x]
            out[i, j] = total / (bh * bw)
    return out


def downsample_mask_loops(mask: np.ndarray, target: int) -> np.ndarray:
    """Per block: 1 iff at least half the pixels are ones."""
    m = np.asarray(mask, dtype=np.float64)
    bh = m.shape[0] // target
    bw = m.shape[1] // target
    out = np.zeros((target, target), dtype=np.float64)
    for i in range(target):
        for j in range(target):
            ones = 0
            for y in range(i * bh, (i + 1) * bh):
                for x in range(j * bw, (j + 1) * bw):
                    ones += int(m[y, x])
            out[i, j] = 1.0 if 2 * ones >= bh * bw else 0.0
    return out


def bilinear_resize_loops(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Pixel-center-aligned bilinear sampling, one output pixel at a time."""
    src = np.asarray(image, dtype=np.float64)
    in_h, in_w = src.shape[:2]
    out = np.zeros((out_h, out_w) + src.shape[2:], dtype=np.float64)
    for i in range(out_h):
        for j in range(out_w):
            sy = min(max((i + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1.0)
            sx = min(max((j + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1.0)
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            y1, x1 = min(y0 + 1, in_h - 1), min(x0 + 1, in_w - 1)
            wy, wx = sy - y0, sx - x0
            out[i, j] = (
                src[y0, x0] * (1 - wy) * (1 - wx)
                + src[y0, x1] * (1 - wy) * wx
                + src[y1, x0] * wy * (1 - wx)
                + src[y1, x1] * wy * wx
            )
    return out


def hflip_loops(image: np.ndarray) -> np.ndarray:
    src = np.asarray(image, dtype=np.float64)
    out = np.zeros_like(src)
    h, w = src.shape[:2]
    for y in range(h):
        for x in range(w):
            out[y, x] = src[y, w - 1 - x]
    return out


# ---------------------------------------------------------------------------
# Network-layer primitives (NCHW, float64)


def conv2d_loops(x, weight, bias, stride=1, pad=0):
    n, c_in, h, w = x.shape
    c_out, _, kh, kw = weight.shape
    xp = np.zeros((n, c_in, h + 2 * pad, w + 2 * pad), dtype=np.float64)
    xp[:, :, pad : pad + h, pad : pad + w] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    out = np.zeros((n, c_out, oh, ow), dtype=np.float64)
    for b in range(n):
        for co in range(c_out):
            for oy in range(oh):
                for ox in range(ow):
                    patch = xp[b, :, oy * stride : oy * stride + kh, ox * stride : ox * stride + kw]
                    out[b, co, oy, ox] = np.sum(patch * weight[co]) + bias[co]
    return out


def instance_norm_loops(x, eps=NORM_EPS):
    n, c, h, w = x.shape
    out = np.zeros_like(x)
    for b in range(n):
        for ch in range(c):
            v = x[b, ch]
            mean = v.mean()
            var = ((v - mean) ** 2).mean()
            out[b, ch] = (v - mean) / np.sqrt(var + eps)
    return out


def leaky_relu_loops(x, slope):
    return np.where(x >= 0, x, slope * x)


def avg_pool2_loops(x):
    n, c, h, w = x.shape
    out = np.zeros((n, c, h // 2, w // 2), dtype=np.float64)
    for b in range(n):
        for ch in range(c):
            for y in range(h // 2):
                for xx in range(w // 2):
                    out[b, ch, y, xx] = x[b, ch, 2 * y : 2 * y + 2, 2 * xx : 2 * xx + 2].mean()
    return out


def nn_upsample_loops(x):
    n, c, h, w = x.shape
    out = np.zeros((n, c, 2 * h, 2 * w), dtype=np.float64)
    for y in range(2 * h):
        for xx in range(2 * w):
            out[:, :, y, xx] = x[:, :, y // 2, xx // 2]
    return out


def sigmoid_loops(x):
    return 1.0 / (1.0 + np.exp(-x))


def _params(net):
    return {k: v.detach().numpy().astype(np.float64) for k, v in net.state_dict().items()}


def _conv_block(p, prefix, x, slope):
    h = conv2d_loops(x, p[f"{prefix}.conv.weight"], p[f"{prefix}.conv.bias"], stride=1, pad=1)
    return leaky_relu_loops(instance_norm_loops(h), slope)


def _adapter(p, prefix, x, slope):
    h = conv2d_loops(x, p[f"{prefix}.conv.weight"], p[f"{prefix}.conv.bias"], stride=1, pad=0)
    return leaky_relu_loops(h, slope)


def generator_reference_forward(net, observed, mask, attributes):
    """Recompute the stable-path generator forward with plain loops."""
    cfg = net.config
    slope = cfg.leaky_slope
    residual = cfg.skip_variant == "residual"
    p = _params(net)
    stage = net.stage
    x = np.concatenate(
        [np.asarray(observed, dtype=np.float64), np.asarray(mask, dtype=np.float64)], axis=1
    )
    h = _adapter(p, f"from_input.{stage}", x, slope)
    skips = {}
    res = stage
    while res > 4:
        b1 = _conv_block(p, f"enc_levels.{res}.block1", h, slope)
        h = h + b1 if residual else b1
        skips[res] = h
        h = _conv_block(p, f"enc_levels.{res}.block2", h, slope)
        h = avg_pool2_loops(h)
        res //= 2
    b1 = _conv_block(p, "enc_bottleneck.block1", h, slope)
    h = h + b1 if residual else b1
    b2 = _conv_block(p, "enc_bottleneck.block2", h, slope)
    h = h + b2 if residual else b2
    if cfg.n_attributes:
        a = np.asarray(attributes, dtype=np.float64)
        tiled = np.broadcast_to(a[:, :, None, None], (a.shape[0], a.shape[1], 4, 4))
        h = np.concatenate([h, tiled], axis=1)
    h = _conv_block(p, "dec_bottleneck.block1", h, slope)
    h = _conv_block(p, "dec_bottleneck.block2", h, slope)
    res = 8
    while res <= stage:
        h = nn_upsample_loops(h)
        h = _conv_block(p, f"dec_levels.{res}.block1", h, slope)
        if cfg.skip_variant == "concat":
            h = _conv_block(p, f"dec_levels.{res}.block2", np.concatenate([h, skips[res]], axis=1), slope)
        else:
            s = _conv_block(p, f"dec_levels.{res}.skip_block", skips[res], slope)
            h = _conv_block(p, f"dec_levels.{res}.block2", h + s, slope)
        res *= 2
    out = conv2d_loops(h, p[f"out_head.{stage}.weight"], p[f"out_head.{stage}.bias"], stride=1, pad=0)
    return np.tanh(out)


def discriminator_reference_forward(net, image):
    """Recompute the stable-path discriminator forward with plain loops."""
    cfg = net.config
    slope = cfg.leaky_slope
    p = _params(net)
    res = net.stage
    h = _adapter(p, f"from_input.{res}", np.asarray(image, dtype=np.float64), slope)
    while res > 4:
        h = _conv_block(p, f"levels.{res}.block1", h, slope)
        h = _conv_block(p, f"levels.{res}.block2", h, slope)
        h = avg_pool2_loops(h)
        res //= 2
    h = _conv_block(p, "bottleneck.block1", h, slope)
    h = _conv_block(p, "bottleneck.block2", h, slope)
    flat = h.reshape(h.shape[0], -1)
    p_real = sigmoid_loops(flat @ p["cls_head.weight"].T + p["cls_head.bias"])[:, 0]
    if cfg.n_attributes:
        a_hat = sigmoid_loops(flat @ p["attr_head.weight"].T + p["attr_head.bias"])
    else:
        a_hat = np.zeros((flat.shape[0], 0), dtype=np.float64)
    return p_real, a_hat


# ---------------------------------------------------------------------------
# Shape-walking parameter-count oracles (computed from config numbers only)


def _plan(base, cap, max_res):
    plan, res = {}, 4
    while res <= max_res:
        plan[res] = min(cap, base * max_res // res)
        res *= 2
    return plan


def _levels(stage):
    out, res = [], 4
    while res <= stage:
        out.append(res)
        res *= 2
    return out


def generator_param_count(cfg, stage):
    c = _plan(cfg.base_channels, cfg.max_channels, cfg.max_resolution)
    n = cfg.n_attributes
    total = 0
    for res in _levels(stage):
        total += 1 * 1 * 4 * c[res] + c[res]          # input adapter
        total += 1 * 1 * c[res] * 3 + 3               # output head
        if res > 4:
            total += 9 * c[res] * c[res] + c[res]      # enc block1
            total += 9 * c[res] * c[res // 2] + c[res // 2]  # enc block2
            total += 9 * c[res // 2] * c[res] + c[res]  # dec block1
            if cfg.skip_variant == "concat":
                total += 9 * (2 * c[res]) * c[res] + c[res]  # dec block2
            else:
                total += 9 * c[res] * c[res] + c[res]   # dec skip block
                total += 9 * c[res] * c[res] + c[res]   # dec block2
    c4 = c[4]
    total += 9 * c4 * c4 + c4                          # enc bottleneck block1
    total += 9 * c4 * c4 + c4                          # enc bottleneck block2
    total += 9 * (c4 + n) * c4 + c4                    # dec bottleneck block1
    total += 9 * c4 * c4 + c4                          # dec bottleneck block2
    return total


def discriminator_param_count(cfg, stage):
    c = _plan(cfg.base_channels, cfg.max_channels, cfg.max_resolution)
    total = 0
    for res in _levels(stage):
        total += 1 * 1 * 3 * c[res] + c[res]          # input adapter
        if res > 4:
            total += 9 * c[res] * c[res] + c[res]
            total += 9 * c[res] * c[res // 2] + c[res // 2]
    c4 = c[4]
    total += 9 * c4 * c4 + c4
    total += 9 * c4 * c4 + c4
    total += c4 * 16 * 1 + 1                          # real/fake head
    if cfg.n_attributes:
        total += c4 * 16 * cfg.n_attributes + cfg.n_attributes
    return total
