"""Class-label vectors: one-hot for training, multi-hot for inference.

Training labels are strict indicator vectors (entry c is 1 iff the pair
belongs to class c). At inference the same slot structure is reused as a
real-valued control signal: +1 asks for a reaction style, 0 is neutral,
-1 asks to avoid it, and fractional values blend. The [-1, 1] range is
enforced by default; pass ``clamp=False`` to probe values outside it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRAIN_ONE_HOT = "train_one_hot"
INFERENCE_MULTI_HOT = "inference_multi_hot"


@dataclass(frozen=True)
class LabelVector:
    """Length-N real label vector plus the mode it was built under."""

    values: np.ndarray
    mode: str
    clamped: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"label vector must be 1-D, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("label vector contains non-finite values")
        if self.mode == TRAIN_ONE_HOT:
            ones = np.flatnonzero(values == 1.0)
            if len(ones) != 1 or not np.all(np.isin(values, (0.0, 1.0))):
                raise ValueError("training labels must be exactly one-hot")
        elif self.mode == INFERENCE_MULTI_HOT:
            if self.clamped and (values.min() < -1.0 or values.max() > 1.0):
                raise ValueError(
                    "multi-hot entries must lie in [-1, 1]; use clamp=False to override"
                )
        else:
            raise ValueError(f"unknown label mode {self.mode!r}")
        object.__setattr__(self, "values", values)

    @property
    def num_classes(self) -> int:
        return len(self.values)


def encode_label(class_index: int, num_classes: int) -> LabelVector:
    """One-hot indicator for a training class."""
    if not 0 <= class_index < num_classes:
        raise ValueError(f"class_index {class_index} out of range [0, {num_classes})")
    values = np.zeros(num_classes, dtype=np.float64)
    values[class_index] = 1.0
    return LabelVector(values=values, mode=TRAIN_ONE_HOT)


def make_multi_hot(
    spec: dict[int, float],
    num_classes: int,
    clamp: bool = True,
) -> LabelVector:
    """Multi-hot vector from a {class index: value} map; zeros elsewhere.

    With ``clamp=True`` (default) values outside [-1, 1] are rejected.
    """
    values = np.zeros(num_classes, dtype=np.float64)
    for idx, value in spec.items():
        if not 0 <= int(idx) < num_classes:
            raise ValueError(f"class index {idx} out of range [0, {num_classes})")
        value = float(value)
        if not np.isfinite(value):
            raise ValueError(f"label value for class {idx} is not finite")
        if clamp and not -1.0 <= value <= 1.0:
            raise ValueError(
                f"label value {value} for class {idx} outside [-1, 1] (clamp enabled)"
            )
        values[int(idx)] = value
    return LabelVector(values=values, mode=INFERENCE_MULTI_HOT, clamped=clamp)


def resolve_label_spec(named: dict[str, float], class_names: list[str]) -> dict[int, float]:
    """Map class names to indices, rejecting unknown names with the valid list."""
    lookup = {name: i for i, name in enumerate(class_names)}
    resolved: dict[int, float] = {}
    for name, value in named.items():
        if name not in lookup:
            raise ValueError(
                f"unknown class {name!r}; valid classes: {', '.join(class_names)}"
            )
        resolved[lookup[name]] = float(value)
    return resolved


def parse_label_option(text: str, class_names: list[str], clamp: bool = True) -> LabelVector:
    """Parse CLI syntax like ``"hug=+1,kick=-1"`` into a multi-hot vector."""
    named: dict[str, float] = {}
    text = text.strip()
    if text:
        for chunk in text.split(","):
            if "=" not in chunk:
                raise ValueError(f"bad label entry {chunk!r}; expected name=value")
            name, _, raw = chunk.partition("=")
            try:
                named[name.strip()] = float(raw)
            except ValueError as e:
                raise ValueError(f"bad numeric value in label entry {chunk!r}") from e
    return make_multi_hot(resolve_label_spec(named, class_names), len(class_names), clamp=clamp)
