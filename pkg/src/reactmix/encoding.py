"""Body-partitioned structural encoding: the six-channel generator front end.

Each of the five body parts is encoded from its own joints only; the sixth
channel sees the whole skeleton concatenated with the class-label vector.
Keeping the label out of the part channels prevents the class signal from
saturating every branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .labels import LabelVector
from .motion import BODY_PARTS, MotionSequence, Skeleton

WHOLE_BODY = "whole_body"
STRUCTURES = BODY_PARTS + (WHOLE_BODY,)


@dataclass
class StructuralEncoding:
    """Six per-structure feature sequences; the label reaches only the last."""

    per_structure: dict[str, np.ndarray]  # name -> (T, width)
    label_attached_to: str = WHOLE_BODY


class StructuralEncoder(nn.Module):
    """Per-structure affine map + tanh over sliced joint coordinates.

    With ``use_fc=False`` (the no-FC ablation) the slices pass through
    unchanged and the channel widths become the raw slice widths.
    """

    def __init__(
        self,
        skeleton: Skeleton,
        num_classes: int,
        width: int,
        use_fc: bool = True,
        use_label: bool = True,
    ):
        super().__init__()
        self.skeleton = skeleton
        self.num_classes = num_classes
        self.use_fc = use_fc
        self.use_label = use_label
        self.part_joints = {p: list(skeleton.partition[p]) for p in BODY_PARTS}
        j = skeleton.joint_count
        label_width = num_classes if use_label else 0
        self.input_widths = {p: 3 * len(self.part_joints[p]) for p in BODY_PARTS}
        self.input_widths[WHOLE_BODY] = 3 * j + label_width
        if use_fc:
            self.maps = nn.ModuleDict(
                {s: nn.Linear(self.input_widths[s], width) for s in STRUCTURES}
            )
            self.output_widths = {s: width for s in STRUCTURES}
        else:
            self.maps = nn.ModuleDict()
            self.output_widths = dict(self.input_widths)

    def forward(self, frames: torch.Tensor, label: torch.Tensor) -> dict[str, torch.Tensor]:
        """frames: (T, J, 3); label: (N,). Returns name -> (T, width)."""
        if frames.dim() != 3 or frames.shape[1] != self.skeleton.joint_count:
            raise ValueError(
                f"frames must be (T, {self.skeleton.joint_count}, 3), got {tuple(frames.shape)}"
            )
        if label.shape != (self.num_classes,):
            raise ValueError(
                f"label must have length {self.num_classes}, got {tuple(label.shape)}"
            )
        t = frames.shape[0]
        slices = {
            p: frames[:, self.part_joints[p], :].reshape(t, -1) for p in BODY_PARTS
        }
        whole = frames.reshape(t, -1)
        if self.use_label:
            whole = torch.cat([whole, label.unsqueeze(0).expand(t, -1)], dim=1)
        slices[WHOLE_BODY] = whole
        if not self.use_fc:
            return slices
        return {s: torch.tanh(self.maps[s](slices[s])) for s in STRUCTURES}


def partition_and_encode(
    seq: MotionSequence,
    skeleton: Skeleton,
    label: LabelVector,
    encoder: StructuralEncoder,
) -> StructuralEncoding:
    """Run the encoder on one sequence and return numpy feature sequences."""
    if seq.num_joints != skeleton.joint_count:
        raise ValueError("sequence does not match skeleton joint count")
    dtype = next(encoder.parameters()).dtype if encoder.use_fc else torch.get_default_dtype()
    with torch.no_grad():
        out = encoder(
            torch.as_tensor(seq.frames, dtype=dtype),
            torch.as_tensor(label.values, dtype=dtype),
        )
    return StructuralEncoding(per_structure={s: v.numpy() for s, v in out.items()})
