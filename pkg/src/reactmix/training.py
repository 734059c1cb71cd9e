"""Adversarial training loop, configuration, and loss reporting."""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import yaml

from .datasets import DatasetManifest
from .errors import TrainingDivergedError
from .labels import encode_label
from .losses import (
    DISCRIMINATOR_ROLE,
    GENERATOR_ROLE,
    loss_bone,
    loss_cgan,
    loss_continuity,
    loss_l1,
)
from .model import (
    DiscriminatorHParams,
    GeneratorHParams,
    MotionDiscriminator,
    ReactionGenerator,
    save_checkpoint,
)

DEFAULT_EPOCHS = {"SBU": 1600, "2C": 2000}


@dataclass(frozen=True)
class AblationFlags:
    """Exact switches: a disabled term contributes nothing, not epsilon."""

    no_discriminator: bool = False
    no_bone_loss: bool = False
    no_continuity: bool = False
    no_fc_encoding: bool = False
    no_multi_hot: bool = False


@dataclass(frozen=True)
class TrainingConfig:
    lambda_b: float = 0.01
    lambda_c: float = 1.0
    lambda_1: float = 1.0
    learning_rate: float = 0.01
    batch_size: int = 16
    epochs: int | None = None  # None -> dataset default (1600 SBU / 2000 2C)
    optimizer: str = "rmsprop"
    ablations: AblationFlags = field(default_factory=AblationFlags)
    seed: int = 0
    teacher_forcing: bool = False
    grad_clip: float = 5.0
    checkpoint_every: int = 0  # 0 -> final checkpoint only
    lr_decay: float = 1.0  # per-epoch multiplicative decay; 1.0 = constant lr

    def resolve_epochs(self, dataset_id: str) -> int:
        if self.epochs is not None:
            return self.epochs
        return DEFAULT_EPOCHS.get(dataset_id, 200)


def load_training_config(path: str | Path) -> TrainingConfig:
    """Read a YAML file whose keys mirror TrainingConfig exactly."""
    raw = yaml.safe_load(Path(path).read_text()) or {}
    known = {f.name for f in dataclasses.fields(TrainingConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown training-config keys: {sorted(unknown)}")
    if "ablations" in raw and raw["ablations"] is not None:
        raw["ablations"] = AblationFlags(**raw["ablations"])
    return TrainingConfig(**raw)


@dataclass
class LossReport:
    epoch: int
    l1: float
    adversarial_g: float
    adversarial_d: float
    bone: float
    continuity: float
    total_g: float

    def as_row(self) -> list:
        return [
            self.epoch, self.l1, self.adversarial_g, self.adversarial_d,
            self.bone, self.continuity, self.total_g,
        ]


REPORT_COLUMNS = ["epoch", "l1", "adversarial_g", "adversarial_d", "bone", "continuity", "total_g"]


def write_loss_reports(path: str | Path, reports: list[LossReport]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow(r.as_row())


@dataclass
class TrainResult:
    generator: ReactionGenerator
    discriminator: MotionDiscriminator | None
    reports: list[LossReport]
    checkpoint_path: Path | None


def _batches(indices: np.ndarray, size: int):
    for start in range(0, len(indices), size):
        yield indices[start : start + size]


def generator_objective(
    generator: ReactionGenerator,
    discriminator: MotionDiscriminator | None,
    pairs,
    class_indices,
    skeleton,
    config: TrainingConfig,
) -> dict[str, torch.Tensor]:
    """Per-batch generator terms, averaged over the batch.

    Disabled terms are returned as detached zeros so they carry no gradient
    and report exactly 0.
    """
    flags = config.ablations
    zero = torch.zeros(())
    terms = {"l1": zero.clone(), "bone": zero.clone(), "cont": zero.clone(), "adv": zero.clone()}
    for (x_a, x_b), class_index in zip(pairs, class_indices):
        label = torch.as_tensor(encode_label(class_index, generator.hparams.num_classes).values,
                                dtype=torch.float32)
        truth = x_b if config.teacher_forcing else None
        fake = generator(x_a, label, truth)
        terms["l1"] = terms["l1"] + loss_l1(fake, x_b)
        if not flags.no_bone_loss:
            terms["bone"] = terms["bone"] + loss_bone(fake, skeleton)
        if not flags.no_continuity:
            terms["cont"] = terms["cont"] + loss_continuity(fake, x_b)
        if discriminator is not None:
            p_fake = discriminator(fake)
            terms["adv"] = terms["adv"] + loss_cgan(None, p_fake, class_index, GENERATOR_ROLE)
    n = len(pairs)
    return {k: v / n for k, v in terms.items()}


def train(
    manifest: DatasetManifest,
    fold: tuple[tuple[int, ...], tuple[int, ...]],
    config: TrainingConfig,
    gen_hparams: GeneratorHParams | None = None,
    disc_hparams: DiscriminatorHParams | None = None,
    out_dir: str | Path | None = None,
) -> TrainResult:
    """Alternating min-max training on one fold's training indices.

    Each batch performs one discriminator update (real reactions labeled
    with their class, generated ones with the fidelity class) followed by
    one generator update on the weighted objective. RMSprop updates, global
    gradient-norm clipping, fully seeded.
    """
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    n_classes = manifest.num_classes
    skeleton = manifest.skeleton
    flags = config.ablations

    if gen_hparams is None:
        gen_hparams = GeneratorHParams(num_classes=n_classes)
    gen_hparams = dataclasses.replace(
        gen_hparams,
        num_classes=n_classes,
        use_fc_encoding=not flags.no_fc_encoding,
        use_label=not flags.no_multi_hot,
    )
    generator = ReactionGenerator(skeleton, gen_hparams)

    discriminator = None
    if not flags.no_discriminator:
        if disc_hparams is None:
            disc_hparams = DiscriminatorHParams(num_outputs=n_classes + 1)
        discriminator = MotionDiscriminator(skeleton.joint_count * 3, disc_hparams)

    if config.optimizer != "rmsprop":
        raise ValueError(f"unsupported optimizer {config.optimizer!r}")
    g_opt = torch.optim.RMSprop(generator.parameters(), lr=config.learning_rate)
    d_opt = (
        torch.optim.RMSprop(discriminator.parameters(), lr=config.learning_rate)
        if discriminator is not None
        else None
    )

    train_indices = np.array(fold[0], dtype=int)
    tensors = [
        (
            torch.as_tensor(manifest.pairs[i].motion_a.frames, dtype=torch.float32),
            torch.as_tensor(manifest.pairs[i].motion_b.frames, dtype=torch.float32),
        )
        for i in range(len(manifest.pairs))
    ]

    out_dir = Path(out_dir) if out_dir is not None else None
    epochs = config.resolve_epochs(manifest.dataset_id)
    reports: list[LossReport] = []
    checkpoint_path: Path | None = None

    def save(tag: str) -> Path:
        assert out_dir is not None
        path = out_dir / f"checkpoint_{tag}.pt"
        save_checkpoint(
            path, generator, discriminator, manifest.class_names, manifest.dataset_id,
            metadata={"epochs": epochs, "seed": config.seed, "tag": tag},
        )
        return path

    for epoch in range(1, epochs + 1):
        if config.lr_decay != 1.0:
            lr = config.learning_rate * config.lr_decay ** (epoch - 1)
            for opt in filter(None, (g_opt, d_opt)):
                for group in opt.param_groups:
                    group["lr"] = lr
        order = train_indices.copy()
        rng.shuffle(order)
        sums = {"l1": 0.0, "adv_g": 0.0, "adv_d": 0.0, "bone": 0.0, "cont": 0.0}
        n_batches = 0
        for batch in _batches(order, config.batch_size):
            batch_pairs = [tensors[i] for i in batch]
            batch_classes = [manifest.pairs[i].class_index for i in batch]

            if discriminator is not None:
                d_loss = torch.zeros(())
                for (x_a, x_b), class_index in zip(batch_pairs, batch_classes):
                    label = torch.as_tensor(
                        encode_label(class_index, n_classes).values, dtype=torch.float32
                    )
                    with torch.no_grad():
                        fake = generator(x_a, label)
                    d_loss = d_loss + loss_cgan(
                        discriminator(x_b), discriminator(fake), class_index, DISCRIMINATOR_ROLE
                    )
                d_loss = d_loss / len(batch)
                d_opt.zero_grad()
                d_loss.backward()
                torch.nn.utils.clip_grad_norm_(discriminator.parameters(), config.grad_clip)
                d_opt.step()
                sums["adv_d"] += d_loss.item()

            terms = generator_objective(
                generator, discriminator, batch_pairs, batch_classes, skeleton, config
            )
            total = (
                terms["adv"]
                + config.lambda_b * terms["bone"]
                + config.lambda_c * terms["cont"]
                + config.lambda_1 * terms["l1"]
            )
            g_opt.zero_grad()
            if d_opt is not None:
                d_opt.zero_grad()
            total.backward()
            torch.nn.utils.clip_grad_norm_(generator.parameters(), config.grad_clip)
            g_opt.step()

            sums["l1"] += terms["l1"].item()
            sums["adv_g"] += terms["adv"].item()
            sums["bone"] += terms["bone"].item()
            sums["cont"] += terms["cont"].item()
            n_batches += 1

        avg = {k: v / n_batches for k, v in sums.items()}
        report = LossReport(
            epoch=epoch,
            l1=avg["l1"],
            adversarial_g=avg["adv_g"],
            adversarial_d=avg["adv_d"],
            bone=avg["bone"],
            continuity=avg["cont"],
            total_g=avg["adv_g"]
            + config.lambda_b * avg["bone"]
            + config.lambda_c * avg["cont"]
            + config.lambda_1 * avg["l1"],
        )
        reports.append(report)

        if not all(np.isfinite(v) for v in avg.values()):
            snapshot = save(f"diverged_epoch{epoch}") if out_dir is not None else None
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch}: {avg}", snapshot_path=snapshot
            )

        if out_dir is not None and config.checkpoint_every > 0 and epoch % config.checkpoint_every == 0:
            checkpoint_path = save(f"epoch{epoch:05d}")

    if out_dir is not None:
        checkpoint_path = save("final")
        write_loss_reports(out_dir / "loss_reports.csv", reports)
    return TrainResult(
        generator=generator,
        discriminator=discriminator,
        reports=reports,
        checkpoint_path=checkpoint_path,
    )
