"""profill: progressive conditional GAN for single-pass image completion."""

from .conditioning import encode_attributes, sample_fake_attributes
from .discriminator import TwoHeadDiscriminator, build_discriminator
from .generator import CompletionGenerator, GeneratorConfig, build_generator
from .inference import CompletionModel, CompletionRequest, complete, load_model
from .losses import (
    LossWeights,
    adversarial_d_loss,
    adversarial_g_loss,
    attribute_loss,
    boundary_loss,
    default_feature_extractor,
    feature_loss,
    reconstruction_loss,
    total_g_loss,
)
from .masking import (
    MaskSpec,
    apply_mask,
    boundary_weights,
    center_mask,
    downsample_mask,
    sample_random_mask,
)
from .training import HistoryBuffer, TrainConfig, TrainingSession, fade_alpha, train

__version__ = "0.1.0"

__all__ = [
    "CompletionGenerator",
    "CompletionModel",
    "CompletionRequest",
    "GeneratorConfig",
    "HistoryBuffer",
    "LossWeights",
    "MaskSpec",
    "TrainConfig",
    "TrainingSession",
    "TwoHeadDiscriminator",
    "adversarial_d_loss",
    "adversarial_g_loss",
    "apply_mask",
    "attribute_loss",
    "boundary_loss",
    "boundary_weights",
    "build_discriminator",
    "build_generator",
    "center_mask",
    "complete",
    "default_feature_extractor",
    "downsample_mask",
    "encode_attributes",
    "fade_alpha",
    "feature_loss",
    "load_model",
    "reconstruction_loss",
    "sample_fake_attributes",
    "total_g_loss",
    "train",
]
