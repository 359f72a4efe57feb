"""Loss terms of the completion objective and the frozen feature extractor.

All losses are mean-normalized per element and return 0-dim torch tensors;
they are dtype-agnostic so gradient checks can run in float64.
Probabilities are clamped to [eps, 1-eps] to keep the logs finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .checkpoint import CheckpointError, read_container, write_container

PROB_EPS = 1e-7

G_LOSS_TERMS = ("adversarial", "attribute", "reconstruction", "feature", "boundary")


class NonFiniteLossError(RuntimeError):
    """A loss term became NaN or infinite; `term` names the offender."""

    def __init__(self, term: str, value: float) -> None:
        super().__init__(f"loss term {term!r} is non-finite ({value})")
        self.term = term


@dataclass(frozen=True)
class LossWeights:
    """Trade-off coefficients of the combined generator objective."""

    target_weight: float = 0.7
    attribute: float = 2.0
    reconstruction: float = 500.0
    feature: float = 10.0
    boundary: float = 5000.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.target_weight <= 1.0):
            raise ValueError("target_weight must lie in [0, 1]")
        for name in ("attribute", "reconstruction", "feature", "boundary"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} weight must be nonnegative")


def _clamp_probs(p: torch.Tensor) -> torch.Tensor:
    return p.clamp(min=PROB_EPS, max=1.0 - PROB_EPS)


def adversarial_d_loss(p_real: torch.Tensor, p_fake: torch.Tensor) -> torch.Tensor:
    """Cross-entropy the discriminator minimizes: reals called real, fakes fake."""
    pr = _clamp_probs(p_real)
    pf = _clamp_probs(p_fake)
    return -(torch.log(pr).mean() + torch.log(1.0 - pf).mean())


def adversarial_g_loss(p_fake: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator term: -log D(fake), minimized."""
    return -torch.log(_clamp_probs(p_fake)).mean()


def binary_attribute_cross_entropy(predicted: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Cross-entropy summed over attributes, averaged over the batch.

    Accepts (N,) single vectors or (B, N) batches; empty vectors give 0.
    """
    p = _clamp_probs(torch.atleast_2d(predicted))
    t = torch.atleast_2d(target).to(p.dtype)
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {tuple(p.shape)} != target shape {tuple(t.shape)}")
    if p.shape[1] == 0:
        return p.sum() * 0.0
    per_sample = -(t * torch.log(p) + (1.0 - t) * torch.log(1.0 - p)).sum(dim=1)
    return per_sample.mean()


def attribute_loss(a_hat_real, a_real, a_hat_syn, a_obs) -> torch.Tensor:
    """Attribute cross-entropy on the real pair plus the synthesized pair."""
    return binary_attribute_cross_entropy(a_hat_real, a_real) + binary_attribute_cross_entropy(
        a_hat_syn, a_obs
    )


def _check_image_pair(i_real: torch.Tensor, i_syn: torch.Tensor) -> None:
    if i_real.shape != i_syn.shape:
        raise ValueError(f"image shapes differ: {tuple(i_real.shape)} vs {tuple(i_syn.shape)}")


def reconstruction_loss(
    i_real: torch.Tensor, i_syn: torch.Tensor, mask: torch.Tensor, target_weight: float
) -> torch.Tensor:
    """Weighted L1 over target and context regions, mean over all elements."""
    _check_image_pair(i_real, i_syn)
    diff = i_real - i_syn
    m = mask.to(diff.dtype)
    target_term = (m * diff).abs().mean()
    context_term = ((1.0 - m) * diff).abs().mean()
    return target_weight * target_term + (1.0 - target_weight) * context_term


def feature_loss(extractor, i_real: torch.Tensor, i_syn: torch.Tensor) -> torch.Tensor:
    """Mean squared distance between frozen feature maps of the two images."""
    _check_image_pair(i_real, i_syn)
    delta = extractor(i_real) - extractor(i_syn)
    return (delta * delta).mean()


def boundary_loss(i_real: torch.Tensor, i_syn: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """L1 close to the mask boundary, weighted by the boundary kernel."""
    _check_image_pair(i_real, i_syn)
    return (weights.to(i_real.dtype) * (i_real - i_syn)).abs().mean()


def total_g_loss(components: dict, weights: LossWeights) -> torch.Tensor:
    """Combined generator objective; rejects non-finite terms by name."""
    unknown = set(components) - set(G_LOSS_TERMS)
    if unknown:
        raise ValueError(f"unknown loss components {sorted(unknown)}")
    for term in G_LOSS_TERMS:
        if term not in components:
            raise ValueError(f"missing loss component {term!r}")
        value = components[term]
        finite = torch.isfinite(value).all() if torch.is_tensor(value) else bool(
            value == value and abs(value) != float("inf")
        )
        if not finite:
            raise NonFiniteLossError(
                term, float(value.detach()) if torch.is_tensor(value) else float(value)
            )
    return (
        components["adversarial"]
        + weights.attribute * components["attribute"]
        + weights.reconstruction * components["reconstruction"]
        + weights.feature * components["feature"]
        + weights.boundary * components["boundary"]
    )


class ConvFeatureExtractor(nn.Module):
    """Frozen convolutional stack used as the perceptual feature map.

    The layer plan is a sequence of ("conv", out_channels, stride) and
    ("pool", size) entries; every conv is 3x3 (padding 1) followed by ReLU.
    Parameters are never trained.
    """

    def __init__(self, layers, in_channels: int = 3, seed: int = 0, tag: str = "") -> None:
        super().__init__()
        self.plan = tuple(tuple(entry) for entry in layers)
        self.in_channels = in_channels
        self.tag = tag
        convs = []
        gen = torch.Generator().manual_seed(seed)
        c = in_channels
        for entry in self.plan:
            if entry[0] == "conv":
                _, out_c, stride = entry
                conv = nn.Conv2d(c, int(out_c), 3, stride=int(stride), padding=1)
                with torch.no_grad():
                    fan_in = c * 9
                    conv.weight.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=gen)
                    conv.bias.zero_()
                convs.append(conv)
                c = int(out_c)
            elif entry[0] != "pool":
                raise ValueError(f"unknown layer entry {entry!r}")
        self.convs = nn.ModuleList(convs)
        self.out_channels = c
        self.requires_grad_(False)
        self.eval()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        i = 0
        for entry in self.plan:
            if entry[0] == "conv":
                x = F.relu(self.convs[i](x))
                i += 1
            else:
                x = F.max_pool2d(x, int(entry[1]))
        return x


def default_feature_extractor(seed: int = 0) -> ConvFeatureExtractor:
    """Fixed random 4-conv stack, spatial extent halved twice."""
    plan = (("conv", 16, 1), ("conv", 32, 2), ("conv", 32, 1), ("conv", 64, 2))
    return ConvFeatureExtractor(plan, seed=seed, tag="random-stack-4")


def save_feature_extractor(extractor: ConvFeatureExtractor, path) -> None:
    header = {
        "kind": "feature-extractor",
        "layer_plan": [list(entry) for entry in extractor.plan],
        "in_channels": extractor.in_channels,
        "layer_tag": extractor.tag,
    }
    arrays = {name: p.detach().numpy() for name, p in extractor.named_parameters()}
    write_container(path, header, arrays)


def load_feature_extractor(path) -> ConvFeatureExtractor:
    header, arrays = read_container(path)
    if header.get("kind") != "feature-extractor":
        raise CheckpointError(f"{path} is not a feature-extractor checkpoint")
    extractor = ConvFeatureExtractor(
        header["layer_plan"], in_channels=header["in_channels"], tag=header.get("layer_tag", "")
    )
    with torch.no_grad():
        for name, param in extractor.named_parameters():
            if name not in arrays:
                raise CheckpointError(f"missing array {name!r} in {path}")
            if tuple(arrays[name].shape) != tuple(param.shape):
                raise CheckpointError(f"array {name!r} shape mismatch in {path}")
            param.copy_(torch.from_numpy(arrays[name]))
    return extractor
