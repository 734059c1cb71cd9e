"""Parser for hierarchical joint-angle capture files (BVH subset).

Supports a HIERARCHY block (ROOT/JOINT/End Site with OFFSET and CHANNELS)
followed by a MOTION block of per-frame channel rows. Rotation channels are
applied intrinsically in the order they are listed, which is the standard
interpretation for this family of formats. End sites are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError
from .motion import BODY_PARTS, axis_rotation_matrix

_POSITION_CHANNELS = {"Xposition": 0, "Yposition": 1, "Zposition": 2}
_ROTATION_CHANNELS = {"Xrotation": "x", "Yrotation": "y", "Zrotation": "z"}


@dataclass
class HierarchyCapture:
    """Parsed capture: structure plus per-frame rotations and root motion."""

    joint_names: list[str]
    parent_index: list[int]
    offsets: np.ndarray          # (J, 3)
    rotations: np.ndarray        # (T, J, 3, 3) local rotation matrices
    root_translation: np.ndarray  # (T, 3)
    frame_rate: float


class _Tokens:
    def __init__(self, text: str, path):
        self.items = text.split()
        self.pos = 0
        self.path = path

    def next(self) -> str:
        if self.pos >= len(self.items):
            raise ParseError("unexpected end of file", path=self.path)
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def peek(self) -> str:
        if self.pos >= len(self.items):
            raise ParseError("unexpected end of file", path=self.path)
        return self.items[self.pos]

    def expect(self, expected: str) -> None:
        tok = self.next()
        if tok.upper() != expected.upper():
            raise ParseError(f"expected {expected!r}, found {tok!r}", path=self.path)

    def floats(self, n: int) -> list[float]:
        return [float(self.next()) for _ in range(n)]


def parse_hierarchy_file(path: str | Path) -> HierarchyCapture:
    path = Path(path)
    return parse_hierarchy_text(path.read_text(), path=path)


def parse_hierarchy_text(text: str, path=None) -> HierarchyCapture:
    toks = _Tokens(text, path)
    toks.expect("HIERARCHY")
    names: list[str] = []
    parents: list[int] = []
    offsets: list[list[float]] = []
    channels: list[list[str]] = []

    def parse_joint(parent: int) -> None:
        kind = toks.next().upper()
        if kind not in ("ROOT", "JOINT"):
            raise ParseError(f"expected ROOT or JOINT, found {kind!r}", path=path)
        name = toks.next()
        idx = len(names)
        names.append(name)
        parents.append(parent)
        toks.expect("{")
        toks.expect("OFFSET")
        offsets.append(toks.floats(3))
        toks.expect("CHANNELS")
        n = int(toks.next())
        chan = [toks.next() for _ in range(n)]
        for c in chan:
            if c not in _POSITION_CHANNELS and c not in _ROTATION_CHANNELS:
                raise ParseError(f"unknown channel {c!r} on joint {name}", path=path)
        channels.append(chan)
        while True:
            nxt = toks.peek()
            if nxt == "}":
                toks.next()
                return
            if nxt.upper() == "END":
                toks.next()
                site = toks.next()  # "Site"
                if site.upper() != "SITE":
                    raise ParseError(f"expected End Site, found End {site!r}", path=path)
                toks.expect("{")
                toks.expect("OFFSET")
                toks.floats(3)
                toks.expect("}")
            else:
                parse_joint(idx)

    parse_joint(-1)

    toks.expect("MOTION")
    toks.expect("Frames:")
    num_frames = int(toks.next())
    tok = toks.next()  # "Frame"
    if tok.upper() != "FRAME":
        raise ParseError(f"expected 'Frame Time:', found {tok!r}", path=path)
    toks.expect("Time:")
    frame_time = float(toks.next())
    if frame_time <= 0:
        raise ParseError(f"non-positive frame time {frame_time}", path=path)

    j = len(names)
    row_width = sum(len(c) for c in channels)
    remaining = len(toks.items) - toks.pos
    if remaining != num_frames * row_width:
        raise ParseError(
            f"motion block has {remaining} values; expected {num_frames} frames x "
            f"{row_width} channels",
            path=path,
        )
    try:
        data = np.array(toks.items[toks.pos:], dtype=np.float64).reshape(num_frames, row_width)
    except ValueError as e:
        raise ParseError(f"non-numeric value in motion block: {e}", path=path) from e

    rotations = np.tile(np.eye(3), (num_frames, j, 1, 1))
    root_translation = np.zeros((num_frames, 3))
    col = 0
    for joint, chan in enumerate(channels):
        for c in chan:
            values = data[:, col]
            col += 1
            if c in _POSITION_CHANNELS:
                if parents[joint] == -1:
                    root_translation[:, _POSITION_CHANNELS[c]] = values
                # non-root position channels are ignored: rigid skeleton
            else:
                axis = _ROTATION_CHANNELS[c]
                for t in range(num_frames):
                    rotations[t, joint] = rotations[t, joint] @ axis_rotation_matrix(axis, values[t])

    return HierarchyCapture(
        joint_names=names,
        parent_index=parents,
        offsets=np.asarray(offsets, dtype=np.float64),
        rotations=rotations,
        root_translation=root_translation,
        frame_rate=1.0 / frame_time,
    )


_ARM_WORDS = ("shoulder", "arm", "elbow", "wrist", "hand", "clavicle", "collar")
_LEG_WORDS = ("hip", "upleg", "leg", "knee", "ankle", "foot", "toe", "thigh", "shin")


def partition_from_names(
    joint_names: list[str], table: dict[str, list[str]] | None = None
) -> dict[str, tuple[int, ...]]:
    """Body-part partition for named joints.

    An explicit ``table`` (part name -> joint names) wins. Without one,
    joints are assigned by name keywords: left/right + arm words to the arm
    parts, left/right + leg words (including hips) to the leg parts, and
    everything else to the trunk.
    """
    if table is not None:
        index = {n: i for i, n in enumerate(joint_names)}
        out: dict[str, tuple[int, ...]] = {}
        for part in BODY_PARTS:
            members = table.get(part, [])
            missing = [m for m in members if m not in index]
            if missing:
                raise ParseError(f"partition table names unknown joints: {missing}")
            out[part] = tuple(index[m] for m in members)
        return out

    parts: dict[str, list[int]] = {p: [] for p in BODY_PARTS}
    for i, raw in enumerate(joint_names):
        n = raw.lower()
        side = "left" if ("left" in n or n.startswith("l_")) else None
        if side is None and ("right" in n or n.startswith("r_")):
            side = "right"
        target = "trunk"
        if side is not None:
            if any(w in n for w in _ARM_WORDS):
                target = f"{side}_arm"
            elif any(w in n for w in _LEG_WORDS):
                target = f"{side}_leg"
        parts[target].append(i)
    return {p: tuple(v) for p, v in parts.items()}
