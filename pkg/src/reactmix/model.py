"""Reaction generator and multi-class sequence discriminator.

The generator is a hierarchical bidirectional recurrent encoder (one
single-layer Bi-LSTM per body structure) feeding an attentive bidirectional
recurrent decoder. Per decoder step, additive attention scores every encoder
frame against the previous decoder state (score = w1 . tanh(W2 [h_e; h_dec])),
the softmaxed weights mix encoder states into a context vector, and the step
consumes the context concatenated with the previously generated pose.

The discriminator is a two-layer Bi-LSTM over the reaction alone with a
softmax head over N+1 classes: the N interaction classes plus one fidelity
class reserved for generated motion.
"""
from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .encoding import STRUCTURES, StructuralEncoder
from .errors import CheckpointError, DataError
from .labels import LabelVector
from .motion import MotionSequence, Skeleton
from .seqio import skeleton_from_dict, skeleton_to_dict

CHECKPOINT_FORMAT = "reactive-motion/checkpoint"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class GeneratorHParams:
    """Widths of the generator. ``structure_hidden`` is the bidirectional
    output width of one structure encoder (80 and 200 in the reference
    configurations); the decoder width is locked to 6x that (480, 1200)."""

    num_classes: int
    structure_hidden: int = 80
    fc_width: int = 80
    attn_width: int | None = None
    use_fc_encoding: bool = True
    use_label: bool = True

    def __post_init__(self):
        if self.structure_hidden % 2 != 0:
            raise ValueError("structure_hidden must be even (bidirectional halves)")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")

    @property
    def decoder_width(self) -> int:
        return 6 * self.structure_hidden


@dataclass(frozen=True)
class DiscriminatorHParams:
    """Two stacked Bi-LSTM layers and a softmax head.

    ``num_outputs`` is N+1 for the adversarial discriminator; the
    recognition classifier reuses the structure with N outputs.
    """

    num_outputs: int
    hidden: int = 64


def attention_weights(
    encoder_states: torch.Tensor,
    decoder_state_prev: torch.Tensor,
    w1: torch.Tensor,
    w2: torch.Tensor,
) -> torch.Tensor:
    """Softmax attention over encoder steps for one decoder step.

    ``encoder_states`` is (T, H); ``decoder_state_prev`` is (Q,);
    ``w2`` is (A, H+Q) and ``w1`` is (A,). Returns a length-T simplex.
    """
    if encoder_states.dim() != 2:
        raise ValueError(f"encoder_states must be (T, H), got {tuple(encoder_states.shape)}")
    if decoder_state_prev.dim() != 1:
        raise ValueError("decoder_state_prev must be a vector")
    t, h = encoder_states.shape
    q = decoder_state_prev.shape[0]
    if w2.shape[1] != h + q:
        raise ValueError(f"w2 has {w2.shape[1]} columns; expected {h + q}")
    if w1.shape != (w2.shape[0],):
        raise ValueError(f"w1 must have shape ({w2.shape[0]},), got {tuple(w1.shape)}")
    query = decoder_state_prev.unsqueeze(0).expand(t, -1)
    scores = torch.tanh(torch.cat([encoder_states, query], dim=1) @ w2.T) @ w1
    return torch.softmax(scores, dim=0)


def context_vector(weights: torch.Tensor, encoder_states: torch.Tensor) -> torch.Tensor:
    """Convex combination of encoder states under attention weights."""
    if weights.dim() != 1 or encoder_states.dim() != 2:
        raise ValueError("expected weights (T,) and encoder_states (T, H)")
    if weights.shape[0] != encoder_states.shape[0]:
        raise ValueError("weights and encoder_states disagree on T")
    return weights @ encoder_states


class ReactionGenerator(nn.Module):
    def __init__(self, skeleton: Skeleton, hparams: GeneratorHParams):
        super().__init__()
        self.skeleton = skeleton
        self.hparams = hparams
        h = hparams.structure_hidden
        assert hparams.decoder_width == 6 * h  # the 6-structure width contract
        self.encoder_fc = StructuralEncoder(
            skeleton,
            hparams.num_classes,
            hparams.fc_width,
            use_fc=hparams.use_fc_encoding,
            use_label=hparams.use_label,
        )
        self.encoders = nn.ModuleDict(
            {
                s: nn.LSTM(self.encoder_fc.output_widths[s], h // 2, bidirectional=True)
                for s in STRUCTURES
            }
        )
        enc_width = hparams.decoder_width
        dec_half = enc_width // 2
        attn = hparams.attn_width or enc_width
        pose_dim = skeleton.joint_count * 3
        self.attn_w2 = nn.Parameter(torch.empty(attn, enc_width + dec_half))
        self.attn_w1 = nn.Parameter(torch.empty(attn))
        nn.init.xavier_uniform_(self.attn_w2)
        nn.init.uniform_(self.attn_w1, -(attn**-0.5), attn**-0.5)
        self.decoder_fwd = nn.LSTMCell(enc_width + pose_dim, dec_half)
        self.decoder_bwd = nn.LSTMCell(enc_width + pose_dim, dec_half)
        self.pose_feedback_fwd = nn.Linear(dec_half, pose_dim)
        self.pose_feedback_bwd = nn.Linear(dec_half, pose_dim)
        self.out_map = nn.Linear(enc_width, pose_dim)

    def encoder_states(self, frames: torch.Tensor, label: torch.Tensor) -> torch.Tensor:
        """Concatenated six-structure Bi-LSTM outputs, (T, decoder_width)."""
        encoded = self.encoder_fc(frames, label)
        outputs = [self.encoders[s](encoded[s])[0] for s in STRUCTURES]
        return torch.cat(outputs, dim=1)

    def _decode_direction(
        self,
        states: torch.Tensor,
        order: range,
        cell: nn.LSTMCell,
        feedback: nn.Linear,
        truth_flat: torch.Tensor | None,
    ) -> list[torch.Tensor]:
        t = states.shape[0]
        dec_half = cell.hidden_size
        h = states.new_zeros(dec_half)
        c = states.new_zeros(dec_half)
        prev_pose = states.new_zeros(feedback.out_features)
        out: list[torch.Tensor | None] = [None] * t
        for step in order:
            phi = attention_weights(states, h, self.attn_w1, self.attn_w2)
            ctx = context_vector(phi, states)
            h, c = cell(torch.cat([ctx, prev_pose]).unsqueeze(0), (h.unsqueeze(0), c.unsqueeze(0)))
            h, c = h.squeeze(0), c.squeeze(0)
            out[step] = h
            # feedback for the next step in this scan direction
            prev_pose = truth_flat[step] if truth_flat is not None else feedback(h)
        return out  # type: ignore[return-value]

    def forward(
        self,
        frames: torch.Tensor,
        label: torch.Tensor,
        truth: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """frames (T, J, 3), label (N,) -> generated reaction (T, J, 3).

        ``truth`` enables teacher forcing: the pose feedback is taken from
        the ground-truth reaction instead of the provisional pose heads.
        """
        t = frames.shape[0]
        states = self.encoder_states(frames, label)
        truth_flat = truth.reshape(t, -1) if truth is not None else None
        fwd = self._decode_direction(
            states, range(t), self.decoder_fwd, self.pose_feedback_fwd, truth_flat
        )
        bwd = self._decode_direction(
            states, range(t - 1, -1, -1), self.decoder_bwd, self.pose_feedback_bwd, truth_flat
        )
        merged = torch.stack([torch.cat([f, b]) for f, b in zip(fwd, bwd)])
        poses = self.out_map(merged)
        return poses.reshape(t, self.skeleton.joint_count, 3)


def generate(
    motion_a: MotionSequence,
    label: LabelVector,
    generator: ReactionGenerator,
) -> MotionSequence:
    """Synthesize the reaction for one input sequence (deterministic)."""
    if label.num_classes != generator.hparams.num_classes:
        raise ValueError(
            f"label has {label.num_classes} classes; generator expects "
            f"{generator.hparams.num_classes}"
        )
    if motion_a.num_joints != generator.skeleton.joint_count:
        raise ValueError("input sequence does not match the generator skeleton")
    dtype = next(generator.parameters()).dtype
    with torch.no_grad():
        out = generator(
            torch.as_tensor(motion_a.frames, dtype=dtype),
            torch.as_tensor(label.values, dtype=dtype),
        )
    frames = out.numpy().astype(np.float64)
    if not np.all(np.isfinite(frames)):
        bad = int(np.argwhere(~np.isfinite(frames).all(axis=(1, 2)))[0, 0])
        raise DataError(f"non-finite activation in generated pose at frame {bad}")
    return MotionSequence(
        frames=frames, frame_rate=motion_a.frame_rate, skeleton_ref=motion_a.skeleton_ref
    )


class MotionDiscriminator(nn.Module):
    """Sequence classifier over the reaction only (never sees the action)."""

    def __init__(self, pose_dim: int, hparams: DiscriminatorHParams):
        super().__init__()
        self.hparams = hparams
        self.pose_dim = pose_dim
        self.lstm = nn.LSTM(pose_dim, hparams.hidden, num_layers=2, bidirectional=True)
        self.head = nn.Linear(2 * hparams.hidden, hparams.num_outputs)

    def features(self, frames: torch.Tensor) -> torch.Tensor:
        """Penultimate embedding: time-pooled Bi-LSTM output, (2*hidden,)."""
        if frames.dim() == 3:
            frames = frames.reshape(frames.shape[0], -1)
        if frames.shape[1] != self.pose_dim:
            raise ValueError(f"expected pose dimension {self.pose_dim}, got {frames.shape[1]}")
        out, _ = self.lstm(frames)
        return out.mean(dim=0)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        """Probability simplex over the output classes."""
        return torch.softmax(self.head(self.features(frames)), dim=0)


def discriminate(motion_b: MotionSequence, model: MotionDiscriminator) -> np.ndarray:
    """Class probabilities for one reaction sequence."""
    if not np.all(np.isfinite(motion_b.frames)):
        raise DataError("non-finite coordinates in discriminator input")
    dtype = next(model.parameters()).dtype
    with torch.no_grad():
        probs = model(torch.as_tensor(motion_b.frames, dtype=dtype))
    return probs.numpy().astype(np.float64)


# ---------------------------------------------------------------------------
# checkpoint container

@dataclass
class Checkpoint:
    """A loaded checkpoint: rebuilt modules plus their metadata."""

    generator: ReactionGenerator
    discriminator: MotionDiscriminator | None
    skeleton: Skeleton
    class_names: list[str]
    dataset_id: str
    metadata: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


def save_checkpoint(
    path: str | Path,
    generator: ReactionGenerator,
    discriminator: MotionDiscriminator | None,
    class_names: list[str],
    dataset_id: str,
    metadata: dict | None = None,
) -> None:
    """Atomic write (tmp + rename) of the versioned checkpoint container."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "dataset_id": dataset_id,
        "class_names": list(class_names),
        "skeleton": skeleton_to_dict(generator.skeleton),
        "generator_hparams": asdict(generator.hparams),
        "generator_state": generator.state_dict(),
        "metadata": metadata or {},
    }
    if discriminator is not None:
        payload["discriminator_hparams"] = asdict(discriminator.hparams)
        payload["discriminator_state"] = discriminator.state_dict()
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            torch.save(payload, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint {path} does not exist")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a checkpoint container")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    skeleton = skeleton_from_dict(payload["skeleton"])
    gen_hp = GeneratorHParams(**payload["generator_hparams"])
    class_names = list(payload["class_names"])
    if gen_hp.num_classes != len(class_names):
        raise CheckpointError(
            f"checkpoint declares {len(class_names)} classes but the generator "
            f"was built for {gen_hp.num_classes}"
        )
    generator = ReactionGenerator(skeleton, gen_hp)
    generator.load_state_dict(payload["generator_state"])
    generator.eval()
    discriminator = None
    if "discriminator_state" in payload:
        disc_hp = DiscriminatorHParams(**payload["discriminator_hparams"])
        discriminator = MotionDiscriminator(skeleton.joint_count * 3, disc_hp)
        discriminator.load_state_dict(payload["discriminator_state"])
        discriminator.eval()
    return Checkpoint(
        generator=generator,
        discriminator=discriminator,
        skeleton=skeleton,
        class_names=class_names,
        dataset_id=payload["dataset_id"],
        metadata=dict(payload.get("metadata", {})),
    )


def checkpoint_digest(path: str | Path) -> str:
    """Content hash used to tag synthesized artifacts."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]
