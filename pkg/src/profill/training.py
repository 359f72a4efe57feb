"""Progressive minimax training: schedule, alternating updates, history
buffer, checkpointing.

Each stage runs steps_fade fading steps (linear ramp of fade_alpha) and
steps_stable stable steps; the generator and discriminator grow together
between stages. The discriminator trains on real images plus a history of
past completions; the generator trains on fresh completions with the
combined objective. Everything is deterministic given the config seed.
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field, asdict

import numpy as np
import torch

from . import masking
from .checkpoint import CheckpointError, read_container, write_container
from .conditioning import sample_fake_attributes
from .data import Dataset, downsample_image
from .discriminator import TwoHeadDiscriminator
from .generator import CompletionGenerator, GeneratorConfig
from .losses import (
    LossWeights,
    NonFiniteLossError,
    adversarial_d_loss,
    adversarial_g_loss,
    binary_attribute_cross_entropy,
    boundary_loss,
    default_feature_extractor,
    feature_loss,
    reconstruction_loss,
    total_g_loss,
)

CHECKPOINT_KIND = "training"


@dataclass(frozen=True)
class TrainConfig:
    generator: GeneratorConfig = GeneratorConfig()
    attribute_names: tuple = ()
    stages: tuple = (4, 8, 16, 32, 64)
    steps_fade: int = 4000
    steps_stable: int = 4000
    batch_size: int = 16
    learning_rate: float = 1e-4
    adam_beta1: float = 0.0
    adam_beta2: float = 0.99
    weights: LossWeights = LossWeights()
    unconditional: bool = False
    seed: int = 0
    checkpoint_every: int = 1000
    mask_spec: masking.MaskSpec = masking.MaskSpec()
    center_mask_rate: float = 0.2
    buffer_capacity: int = 50

    def __post_init__(self) -> None:
        if not self.stages or self.stages[0] != 4:
            raise ValueError("stage schedule must start at 4")
        for a, b in zip(self.stages, self.stages[1:]):
            if b != 2 * a:
                raise ValueError(f"stages must strictly double, got {self.stages}")
        if self.stages[-1] > self.generator.max_resolution:
            raise ValueError("final stage exceeds generator max_resolution")
        if self.steps_fade < 0 or self.steps_stable < 0 or self.steps_fade + self.steps_stable < 1:
            raise ValueError("per-stage step counts must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        n_attr = self.generator.n_attributes
        if self.unconditional and n_attr != 0:
            raise ValueError("unconditional training requires n_attributes = 0")
        if not self.unconditional and n_attr != len(self.attribute_names):
            raise ValueError("attribute_names must match generator.n_attributes")


def fade_alpha(step_in_stage: int, steps_fade: int) -> float:
    """Linear fade ramp; 1 when fading is disabled (steps_fade = 0)."""
    if step_in_stage < 0 or steps_fade < 0:
        raise ValueError("counts must be >= 0")
    if steps_fade == 0:
        return 1.0
    return min(1.0, step_in_stage / steps_fade)


def derive_seed(base: int, *tags) -> int:
    """Stable named sub-seed: SeedSequence keyed by crc32 of the tags."""
    key = tuple(zlib.crc32(str(t).encode("utf-8")) for t in tags)
    return int(np.random.SeedSequence(entropy=base, spawn_key=key).generate_state(1)[0])


class HistoryBuffer:
    """Pool of past completions mixed into discriminator batches.

    Below capacity every fresh entry is stored and returned. At capacity,
    each slot draws u = rng.random(); if u < 0.5 a random stored entry
    (index rng.integers(capacity)) is returned and replaced by the fresh
    one, otherwise the fresh entry passes through unstored.
    """

    def __init__(self, capacity: int = 50, rng: np.random.Generator | None = None) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.rng = rng if rng is not None else np.random.default_rng()
        self.entries: list = []

    def __len__(self) -> int:
        return len(self.entries)

    def clear(self) -> None:
        self.entries.clear()

    def mix(self, images: torch.Tensor, masks: torch.Tensor, attrs: torch.Tensor):
        """Mix a fresh completed batch with buffered history (see class doc)."""
        if images.shape[0] == 0:
            raise ValueError("fresh batch must be nonempty")
        out = []
        for i in range(images.shape[0]):
            entry = (images[i].detach().clone(), masks[i].detach().clone(), attrs[i].detach().clone())
            if len(self.entries) < self.capacity:
                self.entries.append(entry)
                out.append(entry)
            elif self.rng.random() < 0.5:
                j = int(self.rng.integers(0, self.capacity))
                out.append(self.entries[j])
                self.entries[j] = entry
            else:
                out.append(entry)
        mixed_images = torch.stack([e[0] for e in out])
        mixed_masks = torch.stack([e[1] for e in out])
        mixed_attrs = torch.stack([e[2] for e in out])
        return mixed_images, mixed_masks, mixed_attrs


def buffer_mix(buffer: HistoryBuffer, images, masks, attrs):
    return buffer.mix(images, masks, attrs)


@dataclass
class TrainResult:
    checkpoint_path: str | None
    metrics: list
    events: list
    session: "TrainingSession" = field(repr=False, default=None)


class TrainingSession:
    """Owns both networks, their optimizers, and every random stream."""

    def __init__(self, cfg: TrainConfig, feature_extractor=None) -> None:
        self.cfg = cfg
        seed = cfg.seed
        self.generator = CompletionGenerator(cfg.generator, cfg.stages[0], seed=derive_seed(seed, "init", "g"))
        self.discriminator = TwoHeadDiscriminator(cfg.generator, cfg.stages[0], seed=derive_seed(seed, "init", "d"))
        self.phi = feature_extractor if feature_extractor is not None else default_feature_extractor(
            seed=derive_seed(seed, "phi") % (2**31)
        )
        if isinstance(self.phi, torch.nn.Module):
            self.phi.requires_grad_(False)
        self.mask_rng = np.random.default_rng(derive_seed(seed, "masks"))
        self.attr_rng = np.random.default_rng(derive_seed(seed, "attrs"))
        self.data_rng = np.random.default_rng(derive_seed(seed, "data"))
        self.buffer = HistoryBuffer(cfg.buffer_capacity, np.random.default_rng(derive_seed(seed, "buffer")))
        self.opt_g = self._make_optimizer(self.generator)
        self.opt_d = self._make_optimizer(self.discriminator)
        self.global_step = 0
        self.stage_index = 0
        self.step_in_stage = 0

    def _make_optimizer(self, net: torch.nn.Module) -> torch.optim.Adam:
        return torch.optim.Adam(
            net.parameters(),
            lr=self.cfg.learning_rate,
            betas=(self.cfg.adam_beta1, self.cfg.adam_beta2),
        )

    @property
    def stage(self) -> int:
        return self.cfg.stages[self.stage_index]

    @property
    def conditional(self) -> bool:
        return self.cfg.generator.n_attributes > 0

    def grow(self) -> list:
        """Grow both networks one stage; history restarts at the new scale."""
        seed = self.cfg.seed
        next_stage = self.generator.stage * 2
        self.generator.grow(seed=derive_seed(seed, "grow", "g", next_stage))
        self.discriminator.grow(seed=derive_seed(seed, "grow", "d", next_stage))
        for net, opt in ((self.generator, self.opt_g), (self.discriminator, self.opt_d)):
            known = {p for group in opt.param_groups for p in group["params"]}
            new_params = [p for p in net.parameters() if p not in known]
            if new_params:
                opt.add_param_group({"params": new_params})
        self.buffer.clear()
        return [
            {"event": "grow", "network": "generator", "stage": self.generator.stage},
            {"event": "grow", "network": "discriminator", "stage": self.discriminator.stage},
        ]

    def set_fade(self, alpha: float) -> None:
        self.generator.fade_alpha = alpha
        self.discriminator.fade_alpha = alpha

    def _sample_masks(self, batch: int, res: int) -> np.ndarray:
        masks = []
        for _ in range(batch):
            if self.mask_rng.uniform() < self.cfg.center_mask_rate:
                masks.append(masking.center_mask(res, res))
            else:
                masks.append(masking.sample_random_mask(self.mask_rng, res, res, self.cfg.mask_spec))
        return np.stack(masks)

    def step(self, images: torch.Tensor, attrs: torch.Tensor) -> dict:
        """One alternating D/G update on a batch at the current stage."""
        res = self.generator.stage
        if images.shape[2] != res or images.shape[3] != res:
            raise ValueError(f"batch resolution {tuple(images.shape[2:])} != stage {res}")
        batch = images.shape[0]
        masks_np = self._sample_masks(batch, res)
        bweights_np = np.stack([masking.boundary_weights(m) for m in masks_np])
        masks = torch.from_numpy(masks_np.astype(np.float32)).unsqueeze(1)
        bweights = torch.from_numpy(bweights_np.astype(np.float32)).unsqueeze(1)

        if self.conditional:
            a_obs_np = np.stack(
                [sample_fake_attributes(self.attr_rng, a) for a in attrs.numpy()]
            )
            a_obs = torch.from_numpy(a_obs_np.astype(np.float32))
        else:
            a_obs = images.new_zeros((batch, 0))

        observed = images * (1.0 - masks)
        completed = self.generator(observed, masks, a_obs)
        d_metrics = self.update_discriminator(images, attrs, completed.detach(), masks, a_obs)
        g_metrics = self.update_generator(images, completed, masks, bweights, a_obs)
        return {**d_metrics, **g_metrics}

    def update_discriminator(self, images, attrs, fake_images, masks, a_obs) -> dict:
        """Reals up, history-mixed fakes down, attribute term on reals only."""
        weights = self.cfg.weights
        self.opt_d.zero_grad(set_to_none=True)
        p_real, a_hat_real = self.discriminator(images)
        mixed_images, _, _ = self.buffer.mix(fake_images, masks, a_obs)
        p_fake_hist, _ = self.discriminator(mixed_images)
        adv_d = adversarial_d_loss(p_real, p_fake_hist)
        attr_d = binary_attribute_cross_entropy(a_hat_real, attrs.to(p_real.dtype))
        d_total = adv_d + weights.attribute * attr_d
        if not torch.isfinite(d_total):
            term = "adversarial" if not torch.isfinite(adv_d) else "attribute"
            raise NonFiniteLossError(f"discriminator/{term}", float(d_total))
        d_total.backward()
        self.opt_d.step()
        return {
            "adv_d": float(adv_d.detach()),
            "attr_d": float(attr_d.detach()),
            "loss_d": float(d_total.detach()),
        }

    def update_generator(self, images, completed, masks, bweights, a_obs) -> dict:
        """Combined objective on the fresh completions."""
        weights = self.cfg.weights
        self.opt_g.zero_grad(set_to_none=True)
        p_fake, a_hat_syn = self.discriminator(completed)
        components = {
            "adversarial": adversarial_g_loss(p_fake),
            "attribute": binary_attribute_cross_entropy(a_hat_syn, a_obs),
            "reconstruction": reconstruction_loss(images, completed, masks, weights.target_weight),
            "feature": feature_loss(self.phi, images, completed),
            "boundary": boundary_loss(images, completed, bweights),
        }
        g_total = total_g_loss(components, weights)
        g_total.backward()
        self.opt_g.step()
        return {
            "adv_g": float(components["adversarial"].detach()),
            "attr_g": float(components["attribute"].detach()),
            "rec": float(components["reconstruction"].detach()),
            "feat": float(components["feature"].detach()),
            "bdy": float(components["boundary"].detach()),
            "loss_g": float(g_total.detach()),
        }

    def sample_batch(self, dataset: Dataset, res: int):
        """Seeded draw of a training batch, average-pooled to the stage scale."""
        idx = self.data_rng.integers(0, len(dataset), size=self.cfg.batch_size)
        images, attrs = [], []
        for i in idx:
            img = dataset.image(int(i))
            if img.shape[0] != res:
                img = downsample_image(img, res)
            images.append(np.moveaxis(img, -1, 0).astype(np.float32))
            attrs.append(dataset.attribute_vector(int(i)).astype(np.float32))
        return torch.from_numpy(np.stack(images)), torch.from_numpy(np.stack(attrs))


def save_training_checkpoint(path, session: TrainingSession) -> None:
    cfg = session.cfg
    arrays: dict[str, np.ndarray] = {}
    opt_steps: dict[str, int] = {}
    for prefix, net, opt in (
        ("generator", session.generator, session.opt_g),
        ("discriminator", session.discriminator, session.opt_d),
    ):
        state = opt.state
        for name, param in net.named_parameters():
            arrays[f"{prefix}/{name}"] = param.detach().numpy()
            if param in state:
                s = state[param]
                arrays[f"opt/{prefix}/{name}/exp_avg"] = s["exp_avg"].numpy()
                arrays[f"opt/{prefix}/{name}/exp_avg_sq"] = s["exp_avg_sq"].numpy()
                opt_steps[f"{prefix}/{name}"] = int(s["step"])
    header = {
        "kind": CHECKPOINT_KIND,
        "stage": session.generator.stage,
        "fade_alpha": session.generator.fade_alpha,
        "step": session.global_step,
        "stage_index": session.stage_index,
        "step_in_stage": session.step_in_stage,
        "attribute_names": list(cfg.attribute_names),
        "generator_config": asdict(cfg.generator),
        "train_config": _config_snapshot(cfg),
        "optimizer_steps": opt_steps,
        "rng_state": {
            "masks": session.mask_rng.bit_generator.state,
            "attrs": session.attr_rng.bit_generator.state,
            "data": session.data_rng.bit_generator.state,
            "buffer": session.buffer.rng.bit_generator.state,
        },
    }
    write_container(path, header, arrays)


def _config_snapshot(cfg: TrainConfig) -> dict:
    return asdict(cfg)  # recurses into the nested config dataclasses


def _restore_net(arrays: dict, prefix: str, net: torch.nn.Module) -> None:
    with torch.no_grad():
        for name, param in net.named_parameters():
            key = f"{prefix}/{name}"
            if key not in arrays:
                raise CheckpointError(f"missing parameter array {key!r}")
            if tuple(arrays[key].shape) != tuple(param.shape):
                raise CheckpointError(f"shape mismatch for {key!r}")
            param.copy_(torch.from_numpy(arrays[key]))


def load_training_checkpoint(path, feature_extractor=None) -> TrainingSession:
    header, arrays = read_container(path)
    if header.get("kind") != CHECKPOINT_KIND:
        raise CheckpointError(f"{path} is not a training checkpoint")
    snap = header["train_config"]
    cfg = TrainConfig(
        generator=GeneratorConfig(**header["generator_config"]),
        attribute_names=tuple(header["attribute_names"]),
        stages=tuple(snap["stages"]),
        steps_fade=snap["steps_fade"],
        steps_stable=snap["steps_stable"],
        batch_size=snap["batch_size"],
        learning_rate=snap["learning_rate"],
        adam_beta1=snap["adam_beta1"],
        adam_beta2=snap["adam_beta2"],
        weights=LossWeights(**snap["weights"]),
        unconditional=snap["unconditional"],
        seed=snap["seed"],
        checkpoint_every=snap["checkpoint_every"],
        mask_spec=masking.MaskSpec(**snap["mask_spec"]),
        center_mask_rate=snap["center_mask_rate"],
        buffer_capacity=snap["buffer_capacity"],
    )
    session = TrainingSession(cfg, feature_extractor=feature_extractor)
    while session.generator.stage < header["stage"]:
        session.generator.grow()
        session.discriminator.grow()
    session.opt_g = session._make_optimizer(session.generator)
    session.opt_d = session._make_optimizer(session.discriminator)
    _restore_net(arrays, "generator", session.generator)
    _restore_net(arrays, "discriminator", session.discriminator)
    session.set_fade(header["fade_alpha"])
    session.global_step = header["step"]
    session.stage_index = header["stage_index"]
    session.step_in_stage = header["step_in_stage"]
    opt_steps = header.get("optimizer_steps", {})
    for prefix, net, opt in (
        ("generator", session.generator, session.opt_g),
        ("discriminator", session.discriminator, session.opt_d),
    ):
        for name, param in net.named_parameters():
            key = f"{prefix}/{name}"
            if key in opt_steps:
                opt.state[param] = {
                    "step": torch.tensor(float(opt_steps[key])),
                    "exp_avg": torch.from_numpy(arrays[f"opt/{key}/exp_avg"].copy()),
                    "exp_avg_sq": torch.from_numpy(arrays[f"opt/{key}/exp_avg_sq"].copy()),
                }
    rng_state = header.get("rng_state", {})
    for attr_name, rng in (
        ("masks", session.mask_rng),
        ("attrs", session.attr_rng),
        ("data", session.data_rng),
        ("buffer", session.buffer.rng),
    ):
        if attr_name in rng_state:
            rng.bit_generator.state = rng_state[attr_name]
    return session


def train(
    cfg: TrainConfig,
    dataset: Dataset,
    out_dir=None,
    feature_extractor=None,
    resume=None,
) -> TrainResult:
    """Run the full progressive schedule over the dataset.

    Writes numbered checkpoints plus metrics.jsonl into out_dir when given;
    returns the final checkpoint path, per-step metrics, and growth events.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if not cfg.unconditional and tuple(dataset.attribute_names) != tuple(cfg.attribute_names):
        raise ValueError(
            f"dataset attributes {dataset.attribute_names} do not match config {cfg.attribute_names}"
        )
    if dataset.resolution < cfg.stages[-1]:
        raise ValueError("dataset resolution is below the final stage")

    if resume is not None:
        session = load_training_checkpoint(resume, feature_extractor=feature_extractor)
    else:
        session = TrainingSession(cfg, feature_extractor=feature_extractor)

    metrics_log: list = []
    events: list = []
    log_fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_fh = open(os.path.join(out_dir, "metrics.jsonl"), "a", encoding="utf-8")

    def emit(record: dict) -> None:
        metrics_log.append(record)
        if log_fh is not None:
            log_fh.write(json.dumps(record) + "\n")
            log_fh.flush()

    def checkpoint(tag: str) -> str:
        path = os.path.join(out_dir, f"checkpoint-{tag}.pfck")
        save_training_checkpoint(path, session)
        return path

    last_path = None
    steps_per_stage = cfg.steps_fade + cfg.steps_stable
    try:
        while session.stage_index < len(cfg.stages):
            stage = cfg.stages[session.stage_index]
            if session.generator.stage < stage:
                grow_events = session.grow()
                events.extend(grow_events)
                for ev in grow_events:
                    emit(ev)
            while session.step_in_stage < steps_per_stage:
                alpha = 1.0 if session.stage_index == 0 else fade_alpha(
                    session.step_in_stage, cfg.steps_fade
                )
                session.set_fade(alpha)
                images, attrs = session.sample_batch(dataset, stage)
                step_metrics = session.step(images, attrs)
                session.global_step += 1
                session.step_in_stage += 1
                emit(
                    {
                        "step": session.global_step,
                        "stage": stage,
                        "fade_alpha": alpha,
                        **step_metrics,
                    }
                )
                if out_dir is not None and session.global_step % cfg.checkpoint_every == 0:
                    last_path = checkpoint(f"step{session.global_step:07d}")
            if out_dir is not None:
                last_path = checkpoint(f"stage{stage}")
            session.stage_index += 1
            session.step_in_stage = 0
    finally:
        if log_fh is not None:
            log_fh.close()

    if out_dir is not None:
        last_path = os.path.join(out_dir, "checkpoint-final.pfck")
        save_training_checkpoint(last_path, session)
    return TrainResult(checkpoint_path=last_path, metrics=metrics_log, events=events, session=session)
