"""Single-forward-pass completion from a trained checkpoint.

The loaded model is frozen: requests never mutate parameters, every
completion is exactly one generator forward (counted), and the returned
image is the network output with no paste-back or blending.
"""

from __future__ import annotations

import io
import threading
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image

from .checkpoint import CheckpointError, read_container
from .generator import CompletionGenerator, GeneratorConfig
from .imageops import bilinear_resize, block_mean
from .masking import validate_mask


class RequestError(ValueError):
    """Invalid completion request; `code` is a machine-readable reason."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


@dataclass
class CompletionRequest:
    image_png: bytes
    mask_png: bytes
    attributes: dict = field(default_factory=dict)
    resolution: int | None = None


class CompletionModel:
    """Frozen completion generator plus request plumbing."""

    def __init__(self, generator: CompletionGenerator, attribute_names, format_version: int) -> None:
        generator.eval()
        generator.requires_grad_(False)
        self.generator = generator
        self.attribute_names = tuple(attribute_names)
        self.format_version = format_version
        self.forward_count = 0
        self._lock = threading.Lock()

    @property
    def stage(self) -> int:
        return self.generator.stage

    def attribute_vector(self, attributes: dict | None) -> np.ndarray:
        """Resolve a name->bit map against the checkpoint's attribute order.

        Unknown names are rejected; omitted names default to 0.
        """
        attributes = attributes or {}
        unknown = set(attributes) - set(self.attribute_names)
        if unknown:
            raise RequestError("unknown_attribute", f"unknown attribute names: {sorted(unknown)}")
        values = []
        for name in self.attribute_names:
            v = attributes.get(name, 0)
            if v not in (0, 1):
                raise RequestError("bad_attribute_value", f"attribute {name!r} must be 0 or 1, got {v!r}")
            values.append(int(v))
        return np.asarray(values, dtype=np.int64)

    def complete_array(
        self,
        image: np.ndarray,
        mask: np.ndarray,
        attributes: dict | None = None,
        resolution: int | None = None,
    ) -> np.ndarray:
        """Complete an (H, W, 3) image in [-1, 1] under an (H, W) binary mask."""
        img = np.asarray(image, dtype=np.float64)
        m = validate_mask(mask)
        if img.ndim != 3 or img.shape[2] != 3:
            raise RequestError("bad_image", f"expected (H, W, 3) image, got shape {img.shape}")
        if img.shape[:2] != m.shape:
            raise RequestError("shape_mismatch", f"image {img.shape[:2]} and mask {m.shape} differ")
        if img.shape[0] != img.shape[1]:
            raise RequestError("bad_image", "image must be square")
        side = img.shape[0]
        stage = self.stage
        out_res = resolution if resolution is not None else min(side, stage)
        if out_res > stage:
            raise RequestError(
                "resolution_exceeds_stage",
                f"requested resolution {out_res} exceeds checkpoint stage {stage}",
            )
        if out_res < stage and stage % out_res:
            raise RequestError("bad_resolution", f"output resolution must divide stage {stage}")
        if side > stage:
            if side % stage:
                raise RequestError("bad_image", f"input side {side} not divisible by stage {stage}")
            img = block_mean(img, stage)
            m = (block_mean(m, stage) >= 0.5).astype(np.float64)
        elif side < stage:
            img = bilinear_resize(img, stage, stage)
            m = (bilinear_resize(m, stage, stage) >= 0.5).astype(np.float64)

        vec = self.attribute_vector(attributes)
        observed = img * (1.0 - m[:, :, None])
        obs_t = torch.from_numpy(np.moveaxis(observed, -1, 0).astype(np.float32)[None])
        mask_t = torch.from_numpy(m.astype(np.float32))[None, None]
        attr_t = torch.from_numpy(vec.astype(np.float32))[None]
        with self._lock, torch.no_grad():
            self.forward_count += 1
            out = self.generator(obs_t, mask_t, attr_t)
        completed = np.moveaxis(out[0].numpy().astype(np.float64), 0, -1)
        if out_res < stage:
            completed = block_mean(completed, out_res)
        return np.clip(completed, -1.0, 1.0)


def load_model(path) -> CompletionModel:
    """Read a checkpoint container and rebuild the generator alone."""
    header, arrays = read_container(path)
    if header.get("kind") != "training":
        raise CheckpointError(f"{path} is not a model checkpoint")
    config = GeneratorConfig(**header["generator_config"])
    generator = CompletionGenerator(config, header["stage"], seed=0)
    with torch.no_grad():
        for name, param in generator.named_parameters():
            key = f"generator/{name}"
            if key not in arrays:
                raise CheckpointError(f"missing parameter array {key!r}")
            if tuple(arrays[key].shape) != tuple(param.shape):
                raise CheckpointError(f"shape-manifest mismatch for {key!r}")
            param.copy_(torch.from_numpy(arrays[key]))
    generator.fade_alpha = float(header.get("fade_alpha", 1.0))
    return CompletionModel(generator, header.get("attribute_names", ()), header["format_version"])


def decode_request_image(png_bytes: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(png_bytes)) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except Exception as exc:
        raise RequestError("bad_image", f"cannot decode image PNG: {exc}") from exc
    return arr / 255.0 * 2.0 - 1.0


def decode_request_mask(png_bytes: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(png_bytes)) as im:
            arr = np.asarray(im.convert("L"))
    except Exception as exc:
        raise RequestError("bad_mask", f"cannot decode mask PNG: {exc}") from exc
    return (arr >= 128).astype(np.float64)


def encode_png(image: np.ndarray) -> bytes:
    arr = np.clip(np.asarray(image, dtype=np.float64), -1.0, 1.0)
    u8 = np.round((arr + 1.0) / 2.0 * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(u8, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def complete(model: CompletionModel, request: CompletionRequest) -> tuple[bytes, dict]:
    """Decode a request, run one forward pass, return (PNG bytes, echo vector)."""
    image = decode_request_image(request.image_png)
    mask = decode_request_mask(request.mask_png)
    vec = model.attribute_vector(request.attributes)
    completed = model.complete_array(image, mask, request.attributes, request.resolution)
    echo = {name: int(v) for name, v in zip(model.attribute_names, vec)}
    return encode_png(completed), echo
