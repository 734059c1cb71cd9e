"""Canonical on-disk formats: sequence files and dataset manifests.

A sequence file is a self-describing JSON document:

    {
      "format": "reactive-motion/sequence",
      "version": 1,
      "skeleton": {
        "name": str,
        "joint_names": [str, ...],
        "parent_index": [int, ...],          # root is -1
        "rest_offsets": [[x, y, z], ...],
        "partition": {part: [joint index, ...]}
      },
      "frame_rate": float,
      "frames": [[[x, y, z] per joint] per frame]
    }

A manifest is a JSON document referencing sequence files (paths relative to
the manifest location):

    {
      "format": "reactive-motion/manifest",
      "version": 1,
      "dataset_id": str,
      "class_names": [str, ...],
      "skeleton": {...},                      # shared by all sequences
      "pairs": [
        {"pair_id": str, "class_index": int, "subject_id": str,
         "motion_a": "relative/path.json", "motion_b": "relative/path.json"}
      ]
    }
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .motion import InteractionPair, MotionSequence, Skeleton

SEQUENCE_FORMAT = "reactive-motion/sequence"
MANIFEST_FORMAT = "reactive-motion/manifest"
FORMAT_VERSION = 1


def skeleton_to_dict(skeleton: Skeleton) -> dict:
    return {
        "name": skeleton.name,
        "joint_names": list(skeleton.joint_names),
        "parent_index": list(skeleton.parent_index),
        "rest_offsets": skeleton.rest_offsets.tolist(),
        "partition": {k: list(v) for k, v in skeleton.partition.items()},
    }


def skeleton_from_dict(d: dict) -> Skeleton:
    try:
        return Skeleton(
            joint_names=tuple(d["joint_names"]),
            parent_index=tuple(d["parent_index"]),
            rest_offsets=np.asarray(d["rest_offsets"], dtype=np.float64),
            partition={k: tuple(v) for k, v in d["partition"].items()},
            name=d.get("name", "skeleton"),
        )
    except KeyError as e:
        raise ParseError(f"skeleton record missing field {e}") from e


def sequence_to_dict(seq: MotionSequence, skeleton: Skeleton) -> dict:
    return {
        "format": SEQUENCE_FORMAT,
        "version": FORMAT_VERSION,
        "skeleton": skeleton_to_dict(skeleton),
        "frame_rate": seq.frame_rate,
        "frames": seq.frames.tolist(),
    }


def sequence_from_dict(d: dict) -> tuple[MotionSequence, Skeleton]:
    if d.get("format") != SEQUENCE_FORMAT:
        raise ParseError(f"not a sequence document (format={d.get('format')!r})")
    if d.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported sequence version {d.get('version')!r}")
    for key in ("skeleton", "frame_rate", "frames"):
        if key not in d:
            raise ParseError(f"sequence document missing field {key!r}")
    skeleton = skeleton_from_dict(d["skeleton"])
    seq = MotionSequence(
        frames=np.asarray(d["frames"], dtype=np.float64),
        frame_rate=float(d["frame_rate"]),
        skeleton_ref=skeleton.name,
    )
    if seq.num_joints != skeleton.joint_count:
        raise ParseError(
            f"frames have {seq.num_joints} joints but skeleton declares {skeleton.joint_count}"
        )
    return seq, skeleton


def save_sequence(path: str | Path, seq: MotionSequence, skeleton: Skeleton) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(sequence_to_dict(seq, skeleton), sort_keys=True))


def load_sequence(path: str | Path) -> tuple[MotionSequence, Skeleton]:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from e
    return sequence_from_dict(d)
