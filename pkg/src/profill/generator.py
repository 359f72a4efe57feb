"""U-shaped completion network with progressive growth and fade-in.

The generator encodes (observed image, mask) down to a 4x4 bottleneck,
concatenates tiled attribute channels there, and decodes back up with
skip connections between mirrored encoder and decoder levels. It grows by
powers of two; right after growth the output is a fade blend between the
new full-resolution path and the bilinearly upsampled previous-stage
output on average-pooled inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .blocks import ConvBlock, InputAdapter, channel_plan, init_conv_, level_resolutions

SKIP_VARIANTS = ("concat", "residual")


@dataclass(frozen=True)
class GeneratorConfig:
    max_resolution: int = 64
    base_channels: int = 16
    max_channels: int = 128
    n_attributes: int = 0
    skip_variant: str = "concat"
    leaky_slope: float = 0.2

    def __post_init__(self) -> None:
        r = self.max_resolution
        if r < 8 or r & (r - 1):
            raise ValueError(f"max_resolution must be a power of two >= 8, got {r}")
        if self.base_channels < 4:
            raise ValueError("base_channels must be >= 4")
        if self.max_channels < self.base_channels:
            raise ValueError("max_channels must be >= base_channels")
        if self.n_attributes < 0:
            raise ValueError("n_attributes must be >= 0")
        if self.skip_variant not in SKIP_VARIANTS:
            raise ValueError(f"skip_variant must be one of {SKIP_VARIANTS}")


def _validate_stage(config: GeneratorConfig, stage: int) -> None:
    if stage < 4 or stage > config.max_resolution or stage & (stage - 1):
        raise ValueError(
            f"stage must be a power of two in [4, {config.max_resolution}], got {stage}"
        )


class _EncoderLevel(nn.Module):
    """Two conv blocks at one resolution; block2 transitions channel width.

    In the residual variant, block1 (channel-preserving) gets an identity
    shortcut. Skip features for the decoder are taken after block1.
    """

    def __init__(self, channels: int, out_channels: int, slope: float, residual: bool) -> None:
        super().__init__()
        self.block1 = ConvBlock(channels, channels, slope)
        self.block2 = ConvBlock(channels, out_channels, slope)
        self.residual = residual

    def forward(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = x + self.block1(x) if self.residual else self.block1(x)
        return h, self.block2(h)


class _Bottleneck(nn.Module):
    """Two conv blocks at 4x4; identity shortcuts where channels allow."""

    def __init__(self, in_channels: int, channels: int, slope: float, residual: bool) -> None:
        super().__init__()
        self.block1 = ConvBlock(in_channels, channels, slope)
        self.block2 = ConvBlock(channels, channels, slope)
        self.res1 = residual and in_channels == channels
        self.res2 = residual

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = x + self.block1(x) if self.res1 else self.block1(x)
        return (h + self.block2(h)) if self.res2 else self.block2(h)


class _DecoderLevel(nn.Module):
    """Upsampled features meet the mirrored encoder skip at one resolution."""

    def __init__(self, in_channels: int, channels: int, slope: float, variant: str) -> None:
        super().__init__()
        self.block1 = ConvBlock(in_channels, channels, slope)
        self.variant = variant
        if variant == "concat":
            self.block2 = ConvBlock(2 * channels, channels, slope)
        else:
            self.skip_block = ConvBlock(channels, channels, slope)
            self.block2 = ConvBlock(channels, channels, slope)

    def forward(self, x: torch.Tensor, skip: torch.Tensor) -> torch.Tensor:
        h = self.block1(x)
        if self.variant == "concat":
            return self.block2(torch.cat([h, skip], dim=1))
        return self.block2(h + self.skip_block(skip))


class CompletionGenerator(nn.Module):
    """Image completion generator G(observed, mask, attributes)."""

    def __init__(self, config: GeneratorConfig, stage: int, seed: int = 0) -> None:
        super().__init__()
        _validate_stage(config, stage)
        self.config = config
        self.stage = stage
        self.fade_alpha = 1.0
        self._ablate_skips = False  # test hook: zero out skip features
        self._plan = channel_plan(config.base_channels, config.max_channels, config.max_resolution)
        self.from_input = nn.ModuleDict()
        self.out_head = nn.ModuleDict()
        self.enc_levels = nn.ModuleDict()
        self.dec_levels = nn.ModuleDict()
        c4 = self._plan[4]
        slope = config.leaky_slope
        residual = config.skip_variant == "residual"
        # Residual shortcuts live on the encoder side only; the decoder's
        # residual behavior is its skip-merge blocks.
        self.enc_bottleneck = _Bottleneck(c4, c4, slope, residual)
        self.dec_bottleneck = _Bottleneck(c4 + config.n_attributes, c4, slope, residual=False)
        gen = torch.Generator().manual_seed(seed)
        self.apply(lambda m: init_conv_(m, gen))
        for res in level_resolutions(stage):
            self._add_resolution(res, gen)

    def _add_resolution(self, res: int, gen: torch.Generator) -> None:
        cfg, plan = self.config, self._plan
        slope = cfg.leaky_slope
        fresh: list[nn.Module] = []
        key = str(res)
        self.from_input[key] = InputAdapter(4, plan[res], slope)
        self.out_head[key] = nn.Conv2d(plan[res], 3, 1)
        fresh += [self.from_input[key], self.out_head[key]]
        if res > 4:
            self.enc_levels[key] = _EncoderLevel(
                plan[res], plan[res // 2], slope, cfg.skip_variant == "residual"
            )
            self.dec_levels[key] = _DecoderLevel(plan[res // 2], plan[res], slope, cfg.skip_variant)
            fresh += [self.enc_levels[key], self.dec_levels[key]]
        for module in fresh:
            module.apply(lambda m: init_conv_(m, gen))

    def grow(self, seed: int = 0) -> None:
        """Double the operating resolution; existing parameters are untouched."""
        if self.stage >= self.config.max_resolution:
            raise ValueError(f"already at max resolution {self.config.max_resolution}")
        gen = torch.Generator().manual_seed(seed)
        self.stage *= 2
        self._add_resolution(self.stage, gen)
        self.fade_alpha = 0.0

    def _check_inputs(self, observed: torch.Tensor, mask: torch.Tensor, attributes: torch.Tensor):
        if observed.ndim != 4 or observed.shape[1] != 3:
            raise ValueError(f"observed must be (B, 3, H, W), got {tuple(observed.shape)}")
        if observed.shape[2] != self.stage or observed.shape[3] != self.stage:
            raise ValueError(
                f"inputs must be at stage resolution {self.stage}, got {tuple(observed.shape[2:])}"
            )
        if mask.shape != (observed.shape[0], 1, self.stage, self.stage):
            raise ValueError(f"mask must be (B, 1, {self.stage}, {self.stage}), got {tuple(mask.shape)}")
        if attributes.ndim != 2 or attributes.shape != (observed.shape[0], self.config.n_attributes):
            raise ValueError(
                f"attributes must be (B, {self.config.n_attributes}), got {tuple(attributes.shape)}"
            )

    def run_at(self, stage: int, observed: torch.Tensor, mask: torch.Tensor, attributes: torch.Tensor) -> torch.Tensor:
        """One clean pass of the sub-network whose outermost level is `stage`."""
        x = torch.cat([observed, mask], dim=1)
        h = self.from_input[str(stage)](x)
        skips: dict[int, torch.Tensor] = {}
        res = stage
        while res > 4:
            skip, h = self.enc_levels[str(res)](h)
            skips[res] = torch.zeros_like(skip) if self._ablate_skips else skip
            h = F.avg_pool2d(h, 2)
            res //= 2
        h = self.enc_bottleneck(h)
        if self.config.n_attributes:
            tiled = attributes.to(h.dtype)[:, :, None, None].expand(-1, -1, 4, 4)
            h = torch.cat([h, tiled], dim=1)
        h = self.dec_bottleneck(h)
        res = 8
        while res <= stage:
            h = F.interpolate(h, scale_factor=2, mode="nearest")
            h = self.dec_levels[str(res)](h, skips[res])
            res *= 2
        return torch.tanh(self.out_head[str(stage)](h))

    def forward(self, observed: torch.Tensor, mask: torch.Tensor, attributes: torch.Tensor) -> torch.Tensor:
        self._check_inputs(observed, mask, attributes)
        if self.fade_alpha >= 1.0 or self.stage == 4:
            return self.run_at(self.stage, observed, mask, attributes)
        new_out = self.run_at(self.stage, observed, mask, attributes)
        small_obs = F.avg_pool2d(observed, 2)
        small_mask = (F.avg_pool2d(mask, 2) >= 0.5).to(mask.dtype)
        old_out = self.run_at(self.stage // 2, small_obs, small_mask, attributes)
        old_up = F.interpolate(old_out, scale_factor=2, mode="bilinear", align_corners=False)
        return (1.0 - self.fade_alpha) * old_up + self.fade_alpha * new_out


def build_generator(config: GeneratorConfig, stage: int, seed: int = 0) -> CompletionGenerator:
    return CompletionGenerator(config, stage, seed=seed)


def generator_forward(net: CompletionGenerator, observed, mask, attributes) -> torch.Tensor:
    return net(observed, mask, attributes)


def grow_generator(net: CompletionGenerator, seed: int = 0) -> CompletionGenerator:
    net.grow(seed=seed)
    return net
