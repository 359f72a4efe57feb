"""Two-head discriminator: shared backbone, real/fake and attribute heads.

The backbone mirrors the generator's encoder (per-resolution input
adapters, two conv blocks per level, average-pool downsampling to 4x4) and
feeds two sigmoid heads from the flattened 4x4 features. Progressive
growth fades on the input side: the new level's pooled features blend with
the previous adapter applied to the pooled image.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .blocks import ConvBlock, InputAdapter, channel_plan, init_conv_, level_resolutions
from .generator import GeneratorConfig, _validate_stage


class _BackboneLevel(nn.Module):
    def __init__(self, channels: int, out_channels: int, slope: float) -> None:
        super().__init__()
        self.block1 = ConvBlock(channels, channels, slope)
        self.block2 = ConvBlock(channels, out_channels, slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.block2(self.block1(x))


class TwoHeadDiscriminator(nn.Module):
    """D(image) -> (real probability, attribute probabilities)."""

    def __init__(self, config: GeneratorConfig, stage: int, seed: int = 0) -> None:
        super().__init__()
        _validate_stage(config, stage)
        self.config = config
        self.stage = stage
        self.fade_alpha = 1.0
        self._plan = channel_plan(config.base_channels, config.max_channels, config.max_resolution)
        self.from_input = nn.ModuleDict()
        self.levels = nn.ModuleDict()
        c4 = self._plan[4]
        slope = config.leaky_slope
        self.bottleneck = _BackboneLevel(c4, c4, slope)
        self.cls_head = nn.Linear(c4 * 16, 1)
        self.attr_head = nn.Linear(c4 * 16, config.n_attributes) if config.n_attributes else None
        gen = torch.Generator().manual_seed(seed)
        self.apply(lambda m: init_conv_(m, gen))
        for res in level_resolutions(stage):
            self._add_resolution(res, gen)

    def _add_resolution(self, res: int, gen: torch.Generator) -> None:
        slope = self.config.leaky_slope
        key = str(res)
        fresh: list[nn.Module] = [InputAdapter(3, self._plan[res], slope)]
        self.from_input[key] = fresh[0]
        if res > 4:
            level = _BackboneLevel(self._plan[res], self._plan[res // 2], slope)
            self.levels[key] = level
            fresh.append(level)
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

    def forward(self, image: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if image.ndim != 4 or image.shape[1] != 3:
            raise ValueError(f"image must be (B, 3, H, W), got {tuple(image.shape)}")
        if image.shape[2] != self.stage or image.shape[3] != self.stage:
            raise ValueError(
                f"image must be at stage resolution {self.stage}, got {tuple(image.shape[2:])}"
            )
        res = self.stage
        h = self.from_input[str(res)](image)
        if res > 4:
            h = F.avg_pool2d(self.levels[str(res)](h), 2)
            if self.fade_alpha < 1.0:
                old = self.from_input[str(res // 2)](F.avg_pool2d(image, 2))
                h = (1.0 - self.fade_alpha) * old + self.fade_alpha * h
            res //= 2
            while res > 4:
                h = F.avg_pool2d(self.levels[str(res)](h), 2)
                res //= 2
        h = self.bottleneck(h)
        flat = h.flatten(1)
        p_real = torch.sigmoid(self.cls_head(flat)).squeeze(1)
        if self.attr_head is None:
            a_hat = flat.new_zeros((flat.shape[0], 0))
        else:
            a_hat = torch.sigmoid(self.attr_head(flat))
        return p_real, a_hat


def build_discriminator(config: GeneratorConfig, stage: int, seed: int = 0) -> TwoHeadDiscriminator:
    return TwoHeadDiscriminator(config, stage, seed=seed)


def discriminator_forward(net: TwoHeadDiscriminator, image) -> tuple[torch.Tensor, torch.Tensor]:
    return net(image)


def grow_discriminator(net: TwoHeadDiscriminator, seed: int = 0) -> TwoHeadDiscriminator:
    net.grow(seed=seed)
    return net
