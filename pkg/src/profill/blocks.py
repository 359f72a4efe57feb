"""Shared building blocks for the completion generator and discriminator."""

from __future__ import annotations

import math

import torch
from torch import nn

NORM_EPS = 1e-5


def level_resolutions(stage: int) -> list[int]:
    """Pyramid resolutions [4, 8, ..., stage]."""
    res, out = 4, []
    while res <= stage:
        out.append(res)
        res *= 2
    return out


def channel_plan(base_channels: int, max_channels: int, max_resolution: int) -> dict[int, int]:
    """Channels per level resolution, capped at max_channels.

    Width doubles each time the resolution halves, keyed to the absolute
    level resolution so the plan is stable under progressive growth.
    """
    return {
        res: min(max_channels, base_channels * max_resolution // res)
        for res in level_resolutions(max_resolution)
    }


def init_conv_(module: nn.Module, generator: torch.Generator) -> None:
    """Fan-in-scaled Gaussian init (std = sqrt(2/fan_in)), zero bias."""
    if isinstance(module, nn.Conv2d):
        fan_in = module.in_channels * module.kernel_size[0] * module.kernel_size[1]
    elif isinstance(module, nn.Linear):
        fan_in = module.in_features
    else:
        return
    with torch.no_grad():
        module.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=generator)
        if module.bias is not None:
            module.bias.zero_()


class ConvBlock(nn.Module):
    """3x3 convolution + instance normalization + leaky ReLU."""

    def __init__(self, in_channels: int, out_channels: int, slope: float) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.norm = nn.InstanceNorm2d(out_channels, eps=NORM_EPS, affine=False)
        self.act = nn.LeakyReLU(slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.norm(self.conv(x)))


class InputAdapter(nn.Module):
    """1x1 convolution adapting raw inputs to a level's channel width."""

    def __init__(self, in_channels: int, out_channels: int, slope: float) -> None:
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 1)
        self.act = nn.LeakyReLU(slope)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.act(self.conv(x))
