"""Dataset importers, split protocols, and a synthetic pair generator.

Two real corpora are supported. The depth-sensor corpus stores both
characters' joint positions in per-sequence text files (one row per frame:
frame index plus 90 comma-separated values for 2 persons x 15 joints x 3
coordinates). The mocap corpus stores per-character joint-angle capture
files that are run through forward kinematics and rescaled.

Every import path ends with :func:`reactmix.motion.standardize_pair`, so all
stored pairs have character A's root at the origin with zero facing yaw at
the first frame.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bvh import parse_hierarchy_file, partition_from_names
from .errors import ParseError, ProtocolError
from .motion import (
    InteractionPair,
    MotionSequence,
    Skeleton,
    forward_kinematics_from_matrices,
    scale_sequence,
    standardize_pair,
)
from .seqio import (
    MANIFEST_FORMAT,
    FORMAT_VERSION,
    load_sequence,
    save_sequence,
    skeleton_from_dict,
    skeleton_to_dict,
)

SBU_CLASSES = ["kick", "push", "shake-hands", "hug", "exchange-objects", "punch"]
TWO_CHAR_CLASSES = ["kick", "punch"]

# Category folders of the depth-sensor corpus; None = excluded (the two
# classes whose reactions are standing still).
SBU_CATEGORY_MAP = {
    "01": None,          # approaching
    "02": None,          # departing
    "03": "kick",
    "04": "push",
    "05": "shake-hands",
    "06": "hug",
    "07": "exchange-objects",
    "08": "punch",
}

SBU_JOINT_NAMES = [
    "head", "neck", "torso",
    "left_shoulder", "left_elbow", "left_hand",
    "right_shoulder", "right_elbow", "right_hand",
    "left_hip", "left_knee", "left_foot",
    "right_hip", "right_knee", "right_foot",
]
# torso is the root: the corpus has no dedicated hip-center joint.
SBU_PARENTS = [1, 2, -1, 1, 3, 4, 1, 6, 7, 2, 9, 10, 2, 12, 13]
SBU_PARTITION = {
    "trunk": (0, 1, 2),
    "left_arm": (3, 4, 5),
    "right_arm": (6, 7, 8),
    "left_leg": (9, 10, 11),
    "right_leg": (12, 13, 14),
}
SBU_FRAME_RATE = 15.0


@dataclass
class DatasetManifest:
    """A named collection of standardized interaction pairs."""

    dataset_id: str
    class_names: list[str]
    skeleton: Skeleton
    pairs: list[InteractionPair]
    split_spec: dict | None = None
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.dataset_id == "SBU" and self.class_names != SBU_CLASSES:
            raise ValueError(f"SBU manifests must carry classes {SBU_CLASSES}")
        if self.dataset_id == "2C" and self.class_names != TWO_CHAR_CLASSES:
            raise ValueError(f"2C manifests must carry classes {TWO_CHAR_CLASSES}")
        for p in self.pairs:
            if not 0 <= p.class_index < len(self.class_names):
                raise ValueError(f"pair {p.pair_id} class {p.class_index} out of range")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def pair_indices_by_class(self) -> dict[int, list[int]]:
        by_class: dict[int, list[int]] = {c: [] for c in range(self.num_classes)}
        for i, p in enumerate(self.pairs):
            by_class[p.class_index].append(i)
        return by_class


# ---------------------------------------------------------------------------
# depth-sensor corpus (positions)

def _parse_sbu_file(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Rows of 'frame, 90 values' -> two (T, 15, 3) arrays."""
    frames_a, frames_b = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip().rstrip(",;")
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 91:
                raise ParseError(
                    f"expected frame index + 90 values, found {len(cells)} cells",
                    path=path, line=lineno,
                )
            try:
                values = np.array([float(c) for c in cells[1:]], dtype=np.float64)
            except ValueError as e:
                raise ParseError(f"non-numeric cell: {e}", path=path, line=lineno) from e
            frames_a.append(values[:45].reshape(15, 3))
            frames_b.append(values[45:].reshape(15, 3))
    return np.asarray(frames_a), np.asarray(frames_b)


def _sbu_skeleton_from_data(all_frames: list[np.ndarray]) -> Skeleton:
    """Topology is fixed; rest offsets are estimated from the corpus.

    Offset direction comes from the first frame seen; magnitude is the
    per-bone median length over every frame of every character, which is
    the proper target for the bone-length regularizer on noisy captures.
    """
    first = all_frames[0][0]
    stacked = np.concatenate(all_frames, axis=0)
    offsets = np.zeros((15, 3))
    for j, parent in enumerate(SBU_PARENTS):
        if parent == -1:
            continue
        direction = first[j] - first[parent]
        norm = np.linalg.norm(direction)
        if norm < 1e-9:
            direction, norm = np.array([0.0, 1.0, 0.0]), 1.0
        median_len = float(np.median(np.linalg.norm(stacked[:, j] - stacked[:, parent], axis=1)))
        offsets[j] = direction / norm * max(median_len, 1e-6)
    return Skeleton(
        joint_names=tuple(SBU_JOINT_NAMES),
        parent_index=tuple(SBU_PARENTS),
        rest_offsets=offsets,
        partition=SBU_PARTITION,
        name="sbu-15",
    )


def import_sbu(root_path: str | Path, category_map: dict | None = None) -> DatasetManifest:
    """Import the depth-sensor corpus from ``root/<subject-set>/<category>/...``.

    The first path component under the root is the subject-set identifier
    used for leave-one-subject-out folds; the second names the interaction
    category, looked up in ``category_map`` (class name, or None to skip).
    """
    root = Path(root_path)
    if not root.is_dir():
        raise ParseError(f"dataset root {root} is not a directory")
    category_map = dict(SBU_CATEGORY_MAP if category_map is None else category_map)

    records = []  # (subject, class_name, rel_path, frames_a, frames_b)
    warnings: list[str] = []
    for path in sorted(root.rglob("*.txt")):
        rel = path.relative_to(root)
        if len(rel.parts) < 3:
            continue
        subject, category = rel.parts[0], rel.parts[1]
        if category not in category_map:
            warnings.append(f"skipped {rel}: unknown category {category!r}")
            continue
        class_name = category_map[category]
        if class_name is None:
            continue
        frames_a, frames_b = _parse_sbu_file(path)
        if len(frames_a) == 0:
            warnings.append(f"skipped {rel}: empty sequence")
            continue
        if len(frames_a) < 2:
            warnings.append(f"skipped {rel}: single-frame sequence")
            continue
        records.append((subject, class_name, str(rel), frames_a, frames_b))

    if not records:
        raise ParseError(f"no usable sequences under {root}")

    skeleton = _sbu_skeleton_from_data(
        [r[3] for r in records] + [r[4] for r in records]
    )
    pairs = []
    for subject, class_name, rel, frames_a, frames_b in records:
        pair = InteractionPair(
            motion_a=MotionSequence(frames_a, SBU_FRAME_RATE, skeleton.name),
            motion_b=MotionSequence(frames_b, SBU_FRAME_RATE, skeleton.name),
            class_index=SBU_CLASSES.index(class_name),
            subject_id=subject,
            dataset_id="SBU",
            pair_id=rel.replace("/", "_").removesuffix(".txt"),
        )
        pairs.append(standardize_pair(pair, skeleton))

    return DatasetManifest(
        dataset_id="SBU", class_names=list(SBU_CLASSES), skeleton=skeleton,
        pairs=pairs, warnings=warnings,
    )


# ---------------------------------------------------------------------------
# mocap corpus (joint angles)

MOCAP_SCALE = 100.0


def import_2c(
    root_path: str | Path,
    partition_table: dict[str, list[str]] | None = None,
    scale: float = MOCAP_SCALE,
) -> DatasetManifest:
    """Import the mocap corpus from ``root/<class>/<pair>/{a,b}.bvh``.

    Angles are converted to positions with forward kinematics and all
    coordinates (and the skeleton's rest offsets) are divided by ``scale``.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise ParseError(f"dataset root {root} is not a directory")

    pair_dirs = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        if class_dir.name not in TWO_CHAR_CLASSES:
            continue
        for pair_dir in sorted(p for p in class_dir.iterdir() if p.is_dir()):
            pair_dirs.append((class_dir.name, pair_dir))
    if not pair_dirs:
        raise ParseError(f"no class/pair directories under {root}")

    skeleton: Skeleton | None = None
    pairs = []
    warnings: list[str] = []
    for class_name, pair_dir in pair_dirs:
        files = {f.stem.lower(): f for f in pair_dir.glob("*.bvh")}
        if "a" not in files or "b" not in files:
            warnings.append(f"skipped {pair_dir.name}: missing a.bvh/b.bvh")
            continue
        cap_a = parse_hierarchy_file(files["a"])
        cap_b = parse_hierarchy_file(files["b"])
        if cap_a.joint_names != cap_b.joint_names or cap_a.parent_index != cap_b.parent_index:
            raise ParseError("characters use different hierarchies", path=pair_dir)
        if cap_a.rotations.shape[0] != cap_b.rotations.shape[0]:
            raise ParseError(
                f"frame counts differ: {cap_a.rotations.shape[0]} vs {cap_b.rotations.shape[0]}",
                path=pair_dir,
            )
        if skeleton is None:
            skeleton = Skeleton(
                joint_names=tuple(cap_a.joint_names),
                parent_index=tuple(cap_a.parent_index),
                rest_offsets=cap_a.offsets / scale,
                partition=partition_from_names(cap_a.joint_names, partition_table),
                name="mocap-rig",
            )
        elif tuple(cap_a.joint_names) != skeleton.joint_names:
            raise ParseError("hierarchy differs from the first pair's rig", path=pair_dir)

        # FK runs in the capture's raw units; stored offsets were already
        # divided, so rebuild a raw-unit skeleton for the kinematics.
        skeleton_for_fk = replace(skeleton, rest_offsets=skeleton.rest_offsets * scale)

        def to_seq(cap):
            seq = forward_kinematics_from_matrices(
                skeleton_for_fk, cap.rotations, cap.root_translation, cap.frame_rate
            )
            return scale_sequence(seq, scale)

        pair = InteractionPair(
            motion_a=to_seq(cap_a),
            motion_b=to_seq(cap_b),
            class_index=TWO_CHAR_CLASSES.index(class_name),
            subject_id=pair_dir.name,
            dataset_id="2C",
            pair_id=f"{class_name}_{pair_dir.name}",
        )
        pairs.append(standardize_pair(pair, skeleton))

    if skeleton is None or not pairs:
        raise ParseError(f"no complete pairs under {root}")
    return DatasetManifest(
        dataset_id="2C", class_names=list(TWO_CHAR_CLASSES), skeleton=skeleton,
        pairs=pairs, warnings=warnings,
    )


# ---------------------------------------------------------------------------
# split protocols

def _stratified_test_counts(sizes: list[int], total_test: int) -> list[int]:
    """Per-class test counts summing exactly to ``total_test``.

    Base allocation is proportional (floor); the remainder goes to the
    classes with the largest fractional parts, ties broken by class index.
    """
    n = sum(sizes)
    base = [s * total_test // n for s in sizes]
    remainders = [(s * total_test / n) - b for s, b in zip(sizes, base)]
    deficit = total_test - sum(base)
    order = sorted(range(len(sizes)), key=lambda i: (-remainders[i], i))
    for i in order[:deficit]:
        base[i] += 1
    for i, (b, s) in enumerate(zip(base, sizes)):
        if b > s:
            raise ProtocolError(f"class {i} too small for requested split")
    return base


def make_splits(
    manifest: DatasetManifest,
    protocol: str,
    seed: int = 0,
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """(train, test) index folds under a named protocol.

    ``leave_one_subject_out`` yields one fold per subject-set;
    ``ratio_3_1`` and ``half_half`` yield a single stratified fold with a
    1/4 (resp. 1/2) test share. Deterministic for a given seed.
    """
    n = len(manifest.pairs)
    if protocol == "leave_one_subject_out":
        subjects = sorted({p.subject_id for p in manifest.pairs})
        if not all(p.subject_id for p in manifest.pairs):
            raise ProtocolError("leave_one_subject_out requires subject ids on every pair")
        folds = []
        for s in subjects:
            test = tuple(i for i, p in enumerate(manifest.pairs) if p.subject_id == s)
            train = tuple(i for i in range(n) if i not in set(test))
            folds.append((train, test))
        return folds

    if protocol in ("ratio_3_1", "half_half"):
        total_test = n // 4 if protocol == "ratio_3_1" else n // 2
        by_class = manifest.pair_indices_by_class()
        sizes = [len(by_class[c]) for c in range(manifest.num_classes)]
        test_counts = _stratified_test_counts(sizes, total_test)
        rng = np.random.default_rng(seed)
        test: list[int] = []
        for c in range(manifest.num_classes):
            members = np.array(by_class[c], dtype=int)
            rng.shuffle(members)
            test.extend(members[: test_counts[c]].tolist())
        test_set = set(test)
        train = tuple(i for i in range(n) if i not in test_set)
        return [(train, tuple(sorted(test)))]

    raise ProtocolError(f"unknown split protocol {protocol!r}")


# ---------------------------------------------------------------------------
# synthetic pairs

@dataclass(frozen=True)
class SyntheticConfig:
    """Controls the procedurally generated desk-scale dataset."""

    num_classes: int = 2
    pairs_per_class: int = 8
    frames: int = 20
    joints: int = 6
    noise: float = 0.0
    seed: int = 0
    num_subjects: int = 4
    frame_rate: float = 30.0
    class_counts: tuple[int, ...] | None = None  # overrides pairs_per_class

    def counts(self) -> list[int]:
        if self.class_counts is not None:
            if len(self.class_counts) != self.num_classes:
                raise ValueError("class_counts length must equal num_classes")
            return list(self.class_counts)
        return [self.pairs_per_class] * self.num_classes


def synthetic_skeleton(joints: int) -> Skeleton:
    """Articulated stick figure: pelvis root, four limb chains, spine chain."""
    if joints < 6:
        raise ValueError("synthetic skeleton needs at least 6 joints")
    names = ["pelvis", "left_hip", "right_hip", "left_shoulder", "right_shoulder", "spine"]
    parents = [-1, 0, 0, 5, 5, 0]
    offsets = [
        [0.0, 0.0, 0.0],
        [-0.15, -0.05, 0.0],
        [0.15, -0.05, 0.0],
        [-0.2, 0.05, 0.0],
        [0.2, 0.05, 0.0],
        [0.0, 0.3, 0.0],
    ]
    parts = {
        "trunk": [0, 5],
        "left_leg": [1],
        "right_leg": [2],
        "left_arm": [3],
        "right_arm": [4],
    }
    chain_specs = [
        ("left_arm", [-0.25, 0.0, 0.0]),
        ("right_arm", [0.25, 0.0, 0.0]),
        ("left_leg", [0.0, -0.35, 0.0]),
        ("right_leg", [0.0, -0.35, 0.0]),
        ("trunk", [0.0, 0.25, 0.0]),
    ]
    tips = {part: parts[part][-1] for part, _ in chain_specs}
    k = 0
    while len(names) < joints:
        part, offset = chain_specs[k % len(chain_specs)]
        parent = tips[part]
        idx = len(names)
        names.append(f"{part}_{idx}")
        parents.append(parent)
        offsets.append(list(offset))
        parts[part].append(idx)
        tips[part] = idx
        k += 1
    return Skeleton(
        joint_names=tuple(names),
        parent_index=tuple(parents),
        rest_offsets=np.asarray(offsets),
        partition={p: tuple(v) for p, v in parts.items()},
        name=f"synthetic-{joints}",
    )


def synthetic_reaction_transform(class_index: int, skeleton: Skeleton, frames: int):
    """The deterministic map from A's frames to B's frames for one class.

    B faces A (yaw flip), stands at a class-specific displacement, and adds
    a class-specific periodic flourish on the arm (even classes) or leg
    (odd classes) joints. Returns a function of a (T, J, 3) array.
    """
    flip = np.diag([-1.0, 1.0, -1.0])  # 180 degrees about y
    dx = 1.2 + 0.6 * (class_index % 3)
    dz = 0.8 * (class_index // 3)
    displacement = np.array([dx, 0.0, dz])
    side = ("left_arm", "right_arm") if class_index % 2 == 0 else ("left_leg", "right_leg")
    joints = [j for part in side for j in skeleton.partition[part]]
    freq = 0.5 * (1.0 + class_index)
    t = np.arange(frames) / max(frames - 1, 1)
    flourish = 0.2 * np.sin(2.0 * np.pi * freq * t + 0.3 * class_index)

    def transform(frames_a: np.ndarray) -> np.ndarray:
        out = frames_a @ flip.T + displacement
        out = out.copy()
        out[:, joints, 1] += flourish[:, None]
        return out

    return transform


def _random_actor_motion(skeleton: Skeleton, frames: int, rng: np.random.Generator) -> np.ndarray:
    """Class-free base motion: rest pose + smooth per-joint wiggle + drift."""
    j = skeleton.joint_count
    rest = np.zeros((j, 3))
    for idx in skeleton.topological_order():
        p = skeleton.parent_index[idx]
        rest[idx] = skeleton.rest_offsets[idx] + (rest[p] if p != -1 else 0.0)
    t = np.arange(frames) / max(frames - 1, 1)
    motion = np.tile(rest, (frames, 1, 1))
    # low-frequency wiggle: each pair is distinct but stays desk-scale learnable
    phases = rng.uniform(0, 2 * np.pi, size=(j, 3))
    amps = rng.uniform(0.02, 0.10, size=(j, 3))
    freqs = rng.uniform(0.25, 0.75, size=(j, 3))
    motion += amps * np.sin(2 * np.pi * freqs * t[:, None, None] + phases)
    drift = rng.uniform(-0.2, 0.2, size=3) * t[:, None]
    motion += drift[:, None, :]
    return motion


def generate_synthetic(config: SyntheticConfig) -> DatasetManifest:
    """Reproducible pairs whose reaction is a per-class transform of the action."""
    skeleton = synthetic_skeleton(config.joints)
    rng = np.random.default_rng(config.seed)
    class_names = [f"class{i:02d}" for i in range(config.num_classes)]
    transforms = [
        synthetic_reaction_transform(c, skeleton, config.frames)
        for c in range(config.num_classes)
    ]
    pairs = []
    counts = config.counts()
    serial = 0
    for c in range(config.num_classes):
        for k in range(counts[c]):
            frames_a = _random_actor_motion(skeleton, config.frames, rng)
            pair = InteractionPair(
                motion_a=MotionSequence(frames_a, config.frame_rate, skeleton.name),
                motion_b=MotionSequence(frames_a, config.frame_rate, skeleton.name),
                class_index=c,
                subject_id=f"subj{serial % config.num_subjects:02d}",
                dataset_id="SYNTH",
                pair_id=f"synth-{c:02d}-{k:03d}",
            )
            # standardize A first so the stored action/reaction relation is
            # exactly the class transform (standardization is then a no-op).
            pair = standardize_pair(pair, skeleton)
            frames_b = transforms[c](pair.motion_a.frames)
            if config.noise > 0:
                frames_b = frames_b + rng.normal(0.0, config.noise, size=frames_b.shape)
            pair = replace(
                pair, motion_b=MotionSequence(frames_b, config.frame_rate, skeleton.name)
            )
            pairs.append(standardize_pair(pair, skeleton))
            serial += 1
    return DatasetManifest(
        dataset_id="SYNTH", class_names=class_names, skeleton=skeleton, pairs=pairs
    )


# ---------------------------------------------------------------------------
# manifest persistence

def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write ``manifest.json`` plus one canonical sequence file per motion."""
    path = Path(path)
    base = path.parent
    seq_dir = base / "sequences"
    seq_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for pair in manifest.pairs:
        rel_a = f"sequences/{pair.pair_id}_a.json"
        rel_b = f"sequences/{pair.pair_id}_b.json"
        save_sequence(base / rel_a, pair.motion_a, manifest.skeleton)
        save_sequence(base / rel_b, pair.motion_b, manifest.skeleton)
        entries.append(
            {
                "pair_id": pair.pair_id,
                "class_index": pair.class_index,
                "subject_id": pair.subject_id,
                "motion_a": rel_a,
                "motion_b": rel_b,
            }
        )
    doc = {
        "format": MANIFEST_FORMAT,
        "version": FORMAT_VERSION,
        "dataset_id": manifest.dataset_id,
        "class_names": manifest.class_names,
        "skeleton": skeleton_to_dict(manifest.skeleton),
        "pairs": entries,
        "warnings": manifest.warnings,
    }
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=path, line=e.lineno) from e
    if doc.get("format") != MANIFEST_FORMAT:
        raise ParseError(f"not a manifest document (format={doc.get('format')!r})", path=path)
    skeleton = skeleton_from_dict(doc["skeleton"])
    base = path.parent
    pairs = []
    for entry in doc["pairs"]:
        seq_a, _ = load_sequence(base / entry["motion_a"])
        seq_b, _ = load_sequence(base / entry["motion_b"])
        pairs.append(
            InteractionPair(
                motion_a=seq_a,
                motion_b=seq_b,
                class_index=int(entry["class_index"]),
                subject_id=entry["subject_id"],
                dataset_id=doc["dataset_id"],
                pair_id=entry["pair_id"],
            )
        )
    return DatasetManifest(
        dataset_id=doc["dataset_id"],
        class_names=list(doc["class_names"]),
        skeleton=skeleton,
        pairs=pairs,
        warnings=list(doc.get("warnings", [])),
    )
