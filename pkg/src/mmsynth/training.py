"""Adversarial curriculum training.

Batching is full-random: every slice in a batch draws its own scenario,
independently, from the curriculum phase's allowed set. Objectives are
least-squares GAN losses; the reconstruction term is a mean absolute error
pooled over missing-channel pixels only, so present channels contribute no
gradient. All per-epoch randomness comes from streams derived from
(seed, purpose, epoch), which is what makes epoch-boundary resume reproduce
the original run's loss trajectory.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError, TrainingDiverged
from .model import (
    Discriminator,
    DiscriminatorSpec,
    Generator,
    GeneratorSpec,
    ic_merge,
    presence_tensor,
)
from .preprocess import ShardManifest, iter_shard, shard_path
from .scenarios import (
    CurriculumSchedule,
    ScenarioMask,
    enumerate_scenarios,
    max_drop,
    sample_scenario,
)

# spawn-key tags for the per-epoch random streams
RNG_TRAIN = 0
RNG_VAL = 1


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 4
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    lambda_rec: float = 100.0
    lambda_adv: float = 1.0
    seed: int = 0
    base_width: int = 64
    disc_width: int = 64
    checkpoint_every: int = 5
    phase_boundaries: tuple[int, int] | None = None
    max_batches: int = 0  # per-epoch cap; 0 = no cap
    val_batches: int = 8

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.lambda_rec < 0 or self.lambda_adv < 0:
            raise ConfigError("loss weights must be nonnegative")
        if self.base_width < 1 or self.disc_width < 1:
            raise ConfigError("model widths must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")
        if self.phase_boundaries is not None:
            self.phase_boundaries = tuple(int(b) for b in self.phase_boundaries)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigError(f"unknown training config keys: {', '.join(unknown)}")
        return cls(**mapping)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["phase_boundaries"] is not None:
            d["phase_boundaries"] = list(d["phase_boundaries"])
        return d


def epoch_rng(seed: int, tag: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, epoch)))


@dataclass
class Batch:
    real: torch.Tensor      # (N, 4, H, W) float32
    zeroed: torch.Tensor    # real with missing channels zeroed
    present: torch.Tensor   # (N, 4, 1, 1) bool
    masks: list[ScenarioMask]


def make_batch(channels: list[np.ndarray], masks: list[ScenarioMask], device="cpu") -> Batch:
    real = torch.from_numpy(np.stack(channels).astype(np.float32, copy=False)).to(device)
    present = presence_tensor(masks, real.shape[0], device=device)
    zeroed = torch.where(present, real, torch.zeros((), dtype=real.dtype, device=device))
    return Batch(real, zeroed, present, list(masks))


def d_loss_fn(pred_real: torch.Tensor, pred_fake: torch.Tensor) -> torch.Tensor:
    """Least-squares discriminator loss: real -> 1, fake -> 0."""
    return 0.5 * (((pred_real - 1.0) ** 2).mean() + (pred_fake**2).mean())


def adv_loss_fn(pred_fake: torch.Tensor) -> torch.Tensor:
    """Least-squares generator adversarial loss: fool D toward 1."""
    return ((pred_fake - 1.0) ** 2).mean()


def rec_loss_fn(out: torch.Tensor, real: torch.Tensor, present: torch.Tensor) -> torch.Tensor:
    """MAE pooled over missing-channel pixels; 0 when nothing is missing."""
    missing = (~present).to(out.dtype)
    denom = missing.sum() * out.shape[2] * out.shape[3]
    if denom.item() == 0:
        return torch.zeros((), dtype=out.dtype, device=out.device)
    return ((out - real).abs() * missing).sum() / denom


def train_step(
    generator: Generator,
    discriminator: Discriminator,
    opt_g,
    opt_d,
    batch: Batch,
    config: TrainConfig,
    step: int = 0,
) -> dict:
    """One full-random update: D on (real, merged fake), then G."""
    out = generator(batch.zeroed)
    merged = ic_merge(batch.real, out, batch.masks)

    opt_d.zero_grad()
    loss_d = d_loss_fn(discriminator(batch.real), discriminator(merged.detach()))
    loss_d.backward()
    opt_d.step()

    opt_g.zero_grad()
    l_adv = adv_loss_fn(discriminator(merged))
    l_rec = rec_loss_fn(out, batch.real, batch.present)
    loss_g = config.lambda_rec * l_rec + config.lambda_adv * l_adv
    loss_g.backward()
    opt_g.step()

    losses = {
        "loss_d": float(loss_d.detach()),
        "loss_g": float(loss_g.detach()),
        "l_rec": float(l_rec.detach()),
        "l_adv": float(l_adv.detach()),
    }
    if not all(np.isfinite(v) for v in losses.values()):
        raise TrainingDiverged(step, [str(m) for m in batch.masks], losses)
    return losses


def _stream_epoch(manifest, data_dir, shard_ids, rng):
    """Records from the given shards, shard order permuted per epoch."""
    order = [shard_ids[int(i)] for i in rng.permutation(len(shard_ids))]
    for sid in order:
        yield from iter_shard(shard_path(manifest, data_dir, sid))


def _validate(generator, manifest, data_dir, val_ids, config) -> dict | None:
    """Fixed sweep: record i gets the i-th canonical scenario, cyclically."""
    if not val_ids:
        return None
    scenarios = enumerate_scenarios()
    total, count = 0.0, 0
    budget = config.val_batches * config.batch_size
    buffer, masks = [], []
    with torch.no_grad():
        for i, sample in enumerate(_stream_epoch(manifest, data_dir, val_ids, np.random.default_rng(0))):
            if i >= budget:
                break
            buffer.append(sample.channels)
            masks.append(scenarios[i % len(scenarios)])
            if len(buffer) == config.batch_size:
                batch = make_batch(buffer, masks)
                out = generator(batch.zeroed)
                total += float(rec_loss_fn(out, batch.real, batch.present)) * len(buffer)
                count += len(buffer)
                buffer, masks = [], []
        if buffer:
            batch = make_batch(buffer, masks)
            out = generator(batch.zeroed)
            total += float(rec_loss_fn(out, batch.real, batch.present)) * len(buffer)
            count += len(buffer)
    if count == 0:
        return None
    return {"rec": total / count, "n": count}


@dataclass
class TrainResult:
    start_epoch: int
    epochs: int
    history: list = field(default_factory=list)
    log_path: Path | None = None
    checkpoints: list = field(default_factory=list)

    @property
    def final_checkpoint(self) -> Path:
        return self.checkpoints[-1]


def train(
    data_dir,
    out_dir,
    config: TrainConfig,
    *,
    resume_from=None,
    device: str = "cpu",
) -> TrainResult:
    """Run the curriculum training loop over the manifest's train shards.

    Resumable at epoch boundaries: a run resumed from the checkpoint of
    epoch e reproduces the original epochs e+1.. exactly, because every
    random decision in epoch k is derived from (seed, k) alone and the
    checkpoint restores models and optimizers bit-exact.
    """
    data_dir = Path(data_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = ShardManifest.load(data_dir)
    train_ids = manifest.shards_for_role("train")
    if not train_ids:
        raise ConfigError("manifest has no train shards")
    val_ids = manifest.shards_for_role("val")

    schedule = CurriculumSchedule(config.epochs, config.phase_boundaries)
    torch.manual_seed(config.seed)
    generator = Generator(GeneratorSpec(base_width=config.base_width)).to(device)
    discriminator = Discriminator(DiscriminatorSpec(base_width=config.disc_width)).to(device)
    opt_g = torch.optim.Adam(generator.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=config.lr, betas=(config.beta1, config.beta2))

    start_epoch = 0
    if resume_from is not None:
        doc = load_checkpoint(resume_from, generator, discriminator, opt_g, opt_d)
        stored = doc["meta"].get("config")
        if stored is not None and stored != config.to_dict():
            diff = sorted(k for k in stored if stored.get(k) != config.to_dict().get(k))
            raise ConfigError(f"resume config mismatch on: {', '.join(diff)}")
        start_epoch = int(doc["meta"]["epoch"]) + 1
        if start_epoch >= config.epochs:
            raise ConfigError(
                f"checkpoint already at epoch {start_epoch - 1} of {config.epochs}"
            )

    log_path = out_dir / "train_log.jsonl"
    result = TrainResult(start_epoch=start_epoch, epochs=config.epochs, log_path=log_path)
    step = 0
    with open(log_path, "a") as log:
        for epoch in range(start_epoch, config.epochs):
            md = max_drop(schedule, epoch)
            rng = epoch_rng(config.seed, RNG_TRAIN, epoch)
            sums = {"loss_d": 0.0, "loss_g": 0.0, "l_rec": 0.0, "l_adv": 0.0}
            scenario_counts: dict[str, int] = {}
            n_batches = 0
            n_samples = 0
            buffer, masks = [], []

            def flush():
                nonlocal n_batches, n_samples, step
                batch = make_batch(buffer, masks, device=device)
                losses = train_step(generator, discriminator, opt_g, opt_d, batch, config, step)
                for k in sums:
                    sums[k] += losses[k]
                n_batches += 1
                n_samples += len(buffer)
                step += 1

            for sample in _stream_epoch(manifest, data_dir, train_ids, rng):
                if config.max_batches and n_batches >= config.max_batches:
                    break
                buffer.append(sample.channels)
                mask = sample_scenario(md, rng)
                masks.append(mask)
                scenario_counts[str(mask)] = scenario_counts.get(str(mask), 0) + 1
                if len(buffer) == config.batch_size:
                    flush()
                    buffer, masks = [], []
            if buffer and not (config.max_batches and n_batches >= config.max_batches):
                flush()

            if n_batches == 0:
                raise ConfigError("train shards contain no records")
            entry = {
                "epoch": epoch,
                "max_drop": md,
                "n_batches": n_batches,
                "n_samples": n_samples,
                "scenario_counts": scenario_counts,
                "val": _validate(generator, manifest, data_dir, val_ids, config),
            }
            entry.update({k: v / n_batches for k, v in sums.items()})
            log.write(json.dumps(entry, sort_keys=True) + "\n")
            log.flush()
            result.history.append(entry)

            last = epoch == config.epochs - 1
            if last or (epoch + 1) % config.checkpoint_every == 0:
                meta = {"epoch": epoch, "step": step, "config": config.to_dict()}
                path = save_checkpoint(
                    out_dir / f"checkpoint_{epoch:04d}.npz",
                    generator,
                    discriminator,
                    opt_g,
                    opt_d,
                    meta=meta,
                )
                result.checkpoints.append(path)
    return result
