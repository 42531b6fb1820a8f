"""Progressive training orchestrator.

Schedules the three stages over epochs, runs the asymmetric update loop
(n_critic critic updates, then one generator update, then one classifier
update per step), logs every loss component per step as JSON lines, and
writes resumable checkpoints: a single file holding all five networks'
weights, optimizer moments, the sampling RNG state, and a config snapshot.

Training is exactly resumable: dataset order is a pure function of
(seed, epoch), and all other randomness flows through one checkpointed
torch.Generator, so (checkpoint, seed) determine the remainder of a run
bitwise.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from facehall.classifier import AttributeClassifier, build_classifier, classifier_loss
from facehall.critics import (
    STAGE_RESOLUTIONS,
    Critic,
    build_critic,
    interpolated_gradient_norm,
)
from facehall.data import SampleRecord, make_training_sample, read_manifest
from facehall.features import FeatureExtractor, build_feature_extractor
from facehall.generator import Generator, GeneratorConfig, build_generator
from facehall.losses import LossWeights, critic_loss, generator_loss

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """Raised for unreadable, corrupt, or version-mismatched checkpoints."""


class TrainingDiverged(RuntimeError):
    """Raised when a loss component leaves the finite range; names the component."""


@dataclass
class TrainConfig:
    stage_epochs: tuple[int, int, int] = (4, 4, 8)
    batch_size: int = 8
    n_critic: int = 5
    learning_rate: float = 1e-4
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    checkpoint_every: int = 200
    output_dir: str = "runs/facehall"
    # architecture knobs (desk-scale defaults are configurable)
    base_channels: int = 64
    critic_channels: int = 64
    classifier_channels: int = 32
    encoder_depth: int = 2
    residual_blocks_per_stage: int = 2
    extractor_kind: str = "vggface_random"
    extractor_weights: str | None = None
    adam_betas: tuple[float, float] = (0.5, 0.9)
    # alternatives exposed as flags, both off by default
    joint_stage_losses: bool = False
    continuous_attributes: bool = False
    cache_samples: bool = True

    def validate(self) -> None:
        if len(self.stage_epochs) != 3 or any(e < 1 for e in self.stage_epochs):
            raise ValueError(f"stage_epochs must be 3 values >= 1, got {self.stage_epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.n_critic < 1:
            raise ValueError(f"n_critic must be >= 1, got {self.n_critic}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.checkpoint_every < 0:
            raise ValueError("checkpoint_every must be >= 0 (0 disables periodic saves)")
        self.weights.validate()
        self.generator_config().validate()

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(
            base_channels=self.base_channels,
            encoder_depth=self.encoder_depth,
            residual_blocks_per_stage=self.residual_blocks_per_stage,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stage_epochs"] = list(self.stage_epochs)
        d["adam_betas"] = list(self.adam_betas)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        if "weights" in d and isinstance(d["weights"], dict):
            d["weights"] = LossWeights(**d["weights"])
        if "stage_epochs" in d:
            d["stage_epochs"] = tuple(d["stage_epochs"])
        if "adam_betas" in d:
            d["adam_betas"] = tuple(d["adam_betas"])
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        """Read a JSON config whose keys mirror the TrainConfig field names."""
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")


class TrainState:
    """All mutable training state: networks, optimizers, RNG, and progress."""

    def __init__(self, config: TrainConfig):
        config.validate()
        self.config = config
        self.generator: Generator = build_generator(config.generator_config(), config.seed)
        self.critics: list[Critic] = [
            build_critic(stage, config.seed + stage, base_channels=config.critic_channels)
            for stage in (1, 2, 3)
        ]
        self.classifier: AttributeClassifier = build_classifier(
            config.seed + 4, base_channels=config.classifier_channels
        )
        self.extractor: FeatureExtractor = build_feature_extractor(
            kind=config.extractor_kind,
            weights_path=config.extractor_weights,
            seed=config.seed + 5,
        )
        betas = tuple(config.adam_betas)
        self.gen_opt = torch.optim.Adam(
            self.generator.parameters(), lr=config.learning_rate, betas=betas
        )
        self.critic_opts = [
            torch.optim.Adam(c.parameters(), lr=config.learning_rate, betas=betas)
            for c in self.critics
        ]
        self.clf_opt = torch.optim.Adam(
            self.classifier.parameters(), lr=config.learning_rate, betas=betas
        )
        self.noise_rng = torch.Generator().manual_seed(config.seed)
        self.epoch = 0
        self.global_step = 0
        self.active_stage = 1


def stage_for_epoch(epoch: int, stage_epochs) -> int:
    """Stage index for an epoch: hard switches at the cumulative boundaries."""
    if epoch < 0:
        raise ValueError(f"epoch must be >= 0, got {epoch}")
    if epoch < stage_epochs[0]:
        return 1
    if epoch < stage_epochs[0] + stage_epochs[1]:
        return 2
    return 3


def epoch_order(seed: int, epoch: int, n: int) -> np.ndarray:
    """Deterministic sample order for an epoch; pure function of (seed, epoch, n)."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def sample_attribute_batch(
    rng: torch.Generator, batch_size: int, continuous: bool = False
) -> torch.Tensor:
    """Randomized conditioning vectors a*: Bernoulli(0.5) rows (or uniform if continuous)."""
    if continuous:
        return torch.rand((batch_size, 12), generator=rng)
    return torch.randint(0, 2, (batch_size, 12), generator=rng).float()


class SampleLoader:
    """Loads and collates training samples; optionally caches prepared tensors."""

    def __init__(self, records: list[SampleRecord], cache: bool = True):
        self.records = records
        self.cache_enabled = cache
        self._cache: dict[int, dict] = {}

    def __len__(self) -> int:
        return len(self.records)

    def _prepared(self, idx: int) -> dict:
        if idx in self._cache:
            return self._cache[idx]
        sample = make_training_sample(self.records[idx])
        item = {
            "lr": torch.from_numpy(sample.lr.transpose(2, 0, 1)),
            "targets": {
                res: torch.from_numpy(img.transpose(2, 0, 1))
                for res, img in sample.targets.items()
            },
            "attrs": torch.from_numpy(sample.attributes),
        }
        if self.cache_enabled:
            self._cache[idx] = item
        return item

    def batch(self, indices) -> dict:
        items = [self._prepared(int(i)) for i in indices]
        return {
            "lr": torch.stack([it["lr"] for it in items]),
            "targets": {
                res: torch.stack([it["targets"][res] for it in items])
                for res in items[0]["targets"]
            },
            "attrs": torch.stack([it["attrs"] for it in items]),
        }


def _check_finite(name: str, value: torch.Tensor) -> None:
    if not torch.isfinite(value).all():
        raise TrainingDiverged(f"loss component {name!r} is non-finite ({value.item()!r})")


def train_step(state: TrainState, batch: dict) -> dict:
    """One training step at the active stage; returns the per-step loss log.

    Runs n_critic critic updates with fresh interpolation factors, one
    generator update with a fresh randomized attribute batch, then one
    classifier update. Deterministic given (state, batch).
    """
    cfg = state.config
    stages = list(range(1, state.active_stage + 1)) if cfg.joint_stage_losses else [
        state.active_stage
    ]
    lr = batch["lr"]
    attrs = batch["attrs"]
    n = lr.shape[0]
    log: dict[str, float] = {}

    state.generator.train()
    for c in state.critics:
        c.train()
    state.classifier.train()

    # --- critic updates ---
    with torch.no_grad():
        fakes = state.generator(lr, attrs, state.active_stage)
    for _ in range(cfg.n_critic):
        for stage in stages:
            res = STAGE_RESOLUTIONS[stage]
            critic = state.critics[stage - 1]
            t = torch.rand(n, generator=state.noise_rng)
            state.critic_opts[stage - 1].zero_grad(set_to_none=True)
            total, comps = critic_loss(
                stage, batch["targets"][res], fakes[res], attrs, critic, cfg.weights, t
            )
            for key, val in comps.items():
                _check_finite(f"critic_{key}", val)
            total.backward()
            state.critic_opts[stage - 1].step()
            if stage == state.active_stage:
                log.update({f"critic_{k}": float(v.item()) for k, v in comps.items()})
                log["critic_total"] = float(total.item())

    # --- generator update ---
    a_star = sample_attribute_batch(state.noise_rng, n, cfg.continuous_attributes)
    state.gen_opt.zero_grad(set_to_none=True)
    outputs_gt = state.generator(lr, attrs, state.active_stage)
    outputs_rand = state.generator(lr, a_star, state.active_stage)
    gen_total = None
    for stage in stages:
        res = STAGE_RESOLUTIONS[stage]
        total, comps = generator_loss(
            stage,
            outputs_gt[res],
            outputs_rand[res],
            batch["targets"][res],
            a_star,
            state.critics[stage - 1],
            state.extractor,
            cfg.weights,
        )
        for key, val in comps.items():
            _check_finite(f"gen_{key}", val)
        gen_total = total if gen_total is None else gen_total + total
        if stage == state.active_stage:
            log.update({f"gen_{k}": float(v.item()) for k, v in comps.items()})
            log["gen_total"] = float(total.item())
    gen_total.backward()
    state.gen_opt.step()

    # --- classifier update ---
    state.clf_opt.zero_grad(set_to_none=True)
    pred = state.classifier(lr)
    clf_total = classifier_loss(pred, attrs)
    _check_finite("classifier_loss", clf_total)
    clf_total.backward()
    state.clf_opt.step()
    log["classifier_loss"] = float(clf_total.item())

    # diagnostic: how close the critic keeps interpolated gradients to unit norm
    res = STAGE_RESOLUTIONS[state.active_stage]
    t = torch.rand(n, generator=state.noise_rng)
    grad_norm = interpolated_gradient_norm(
        state.critics[state.active_stage - 1], batch["targets"][res], fakes[res], t
    )
    log["critic_grad_norm"] = float(grad_norm.item())

    state.global_step += 1
    return log


def save_checkpoint(state: TrainState, path: str | Path) -> Path:
    """Atomically write the full training state to one container file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "config": state.config.to_dict(),
        "epoch": state.epoch,
        "global_step": state.global_step,
        "stage": state.active_stage,
        "generator": state.generator.state_dict(),
        "critics": [c.state_dict() for c in state.critics],
        "classifier": state.classifier.state_dict(),
        "optimizers": {
            "generator": state.gen_opt.state_dict(),
            "critics": [opt.state_dict() for opt in state.critic_opts],
            "classifier": state.clf_opt.state_dict(),
        },
        "noise_rng": state.noise_rng.get_state(),
    }
    tmp = path.with_name(path.name + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)
    return path


def _load_payload(path: str | Path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as exc:
        raise CheckpointError(f"corrupt or unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"{path} is not a facehall checkpoint")
    if payload["format_version"] != FORMAT_VERSION:
        raise CheckpointError(
            f"checkpoint format {payload['format_version']} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    return payload


def load_checkpoint(path: str | Path) -> TrainState:
    """Rebuild a TrainState from a checkpoint; exact bitwise round trip.

    The architecture comes from the checkpoint's config snapshot; epoch,
    step, and active stage are restored from the checkpoint, not the caller's
    config.
    """
    payload = _load_payload(path)
    config = TrainConfig.from_dict(payload["config"])
    state = TrainState(config)
    state.generator.load_state_dict(payload["generator"])
    for critic, sd in zip(state.critics, payload["critics"]):
        critic.load_state_dict(sd)
    state.classifier.load_state_dict(payload["classifier"])
    state.gen_opt.load_state_dict(payload["optimizers"]["generator"])
    for opt, sd in zip(state.critic_opts, payload["optimizers"]["critics"]):
        opt.load_state_dict(sd)
    state.clf_opt.load_state_dict(payload["optimizers"]["classifier"])
    state.noise_rng.set_state(payload["noise_rng"])
    state.epoch = int(payload["epoch"])
    state.global_step = int(payload["global_step"])
    state.active_stage = int(payload["stage"])
    return state


def run_training(
    config: TrainConfig,
    manifest: str | Path,
    resume: str | Path | None = None,
    log_cb=None,
) -> Path:
    """Full progressive run over the manifest's train split.

    Writes train_log.jsonl (one JSON object per step), periodic checkpoints,
    a checkpoint at the end of every stage, and final.pt. Returns the final
    checkpoint path. ``log_cb``, when given, receives each step log dict.
    """
    records = read_manifest(manifest, split="train")
    if not records:
        raise ValueError(f"manifest {manifest} has no train records")

    if resume is not None:
        state = load_checkpoint(resume)
        config = state.config
    else:
        config.validate()
        state = TrainState(config)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save(out_dir / "train_config.json")
    log_path = out_dir / "train_log.jsonl"
    log_file = open(log_path, "a" if resume is not None else "w")

    loader = SampleLoader(records, cache=config.cache_samples)
    steps_per_epoch = math.ceil(len(records) / config.batch_size)
    total_epochs = sum(config.stage_epochs)

    try:
        while state.epoch < total_epochs:
            stage = stage_for_epoch(state.epoch, config.stage_epochs)
            state.active_stage = max(stage, state.active_stage)
            order = epoch_order(config.seed, state.epoch, len(records))
            first_batch = state.global_step - state.epoch * steps_per_epoch
            for b in range(first_batch, steps_per_epoch):
                idx = order[b * config.batch_size : (b + 1) * config.batch_size]
                batch = loader.batch(idx)
                step_log = train_step(state, batch)
                entry = {
                    "step": state.global_step,
                    "epoch": state.epoch,
                    "stage": state.active_stage,
                    **step_log,
                    "wall_time": time.time(),
                }
                log_file.write(json.dumps(entry) + "\n")
                log_file.flush()
                if log_cb is not None:
                    log_cb(entry)
                if config.checkpoint_every and state.global_step % config.checkpoint_every == 0:
                    save_checkpoint(state, out_dir / f"step{state.global_step:08d}.pt")
            state.epoch += 1
            end_of_run = state.epoch >= total_epochs
            if end_of_run or stage_for_epoch(state.epoch, config.stage_epochs) != stage:
                save_checkpoint(state, out_dir / f"stage{stage}_end.pt")
    finally:
        log_file.close()

    final_path = save_checkpoint(state, out_dir / "final.pt")
    return final_path
