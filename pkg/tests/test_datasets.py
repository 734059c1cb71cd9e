import dataclasses

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from reactmix.bvh import parse_hierarchy_file, partition_from_names
from reactmix.datasets import (
    SBU_CLASSES,
    DatasetManifest,
    SyntheticConfig,
    generate_synthetic,
    import_2c,
    import_sbu,
    load_manifest,
    make_splits,
    save_manifest,
    synthetic_reaction_transform,
)
from reactmix.errors import ParseError, ProtocolError
from reactmix.metrics import resample_time
from reactmix.motion import bone_lengths, facing_yaw_of, forward_kinematics_from_matrices

# ---------------------------------------------------------------------------
# fixture corpora

SBU_BASE_POSE = np.array(
    [
        [0.00, 1.70, 0.0], [0.00, 1.50, 0.0], [0.00, 1.20, 0.0],
        [-0.20, 1.45, 0.0], [-0.30, 1.20, 0.0], [-0.35, 0.95, 0.0],
        [0.20, 1.45, 0.0], [0.30, 1.20, 0.0], [0.35, 0.95, 0.0],
        [-0.12, 0.90, 0.0], [-0.12, 0.50, 0.0], [-0.12, 0.10, 0.0],
        [0.12, 0.90, 0.0], [0.12, 0.50, 0.0], [0.12, 0.10, 0.0],
    ]
)


def _sbu_rows(rng, frames=4):
    rows = []
    for t in range(frames):
        a = SBU_BASE_POSE + rng.normal(0, 0.02, size=(15, 3)) + [0.2, 0, 0.1]
        b = SBU_BASE_POSE + rng.normal(0, 0.02, size=(15, 3)) + [1.2, 0, 0.1]
        values = np.concatenate([a.ravel(), b.ravel()])
        rows.append(f"{t + 1}," + ",".join(f"{v:.6f}" for v in values))
    return "\n".join(rows) + "\n"


@pytest.fixture()
def sbu_root(tmp_path):
    rng = np.random.default_rng(123)
    root = tmp_path / "sbu"
    for subject in ("s01s02", "s03s04"):
        for category in ("01", "03", "04", "05", "06", "07", "08"):
            for run in ("001", "002"):
                f = root / subject / category / run / "skeleton_pos.txt"
                f.parent.mkdir(parents=True)
                f.write_text(_sbu_rows(rng))
    return root


BVH_TEMPLATE = """HIERARCHY
ROOT Hips
{{
    OFFSET 0 0 0
    CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
    JOINT Chest
    {{
        OFFSET 0 30 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        JOINT LeftShoulder
        {{
            OFFSET -25 5 0
            CHANNELS 3 Zrotation Xrotation Yrotation
            End Site
            {{
                OFFSET 0 10 0
            }}
        }}
        JOINT RightShoulder
        {{
            OFFSET 25 5 0
            CHANNELS 3 Zrotation Xrotation Yrotation
            End Site
            {{
                OFFSET 0 10 0
            }}
        }}
    }}
    JOINT LeftHip
    {{
        OFFSET -15 -5 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        End Site
        {{
            OFFSET 0 -40 0
        }}
    }}
    JOINT RightHip
    {{
        OFFSET 15 -5 0
        CHANNELS 3 Zrotation Xrotation Yrotation
        End Site
        {{
            OFFSET 0 -40 0
        }}
    }}
}}
MOTION
Frames: {frames}
Frame Time: 0.0333333
{rows}
"""


def write_bvh(path, frames, rng=None, zero=False):
    # 21 channels: root position+rotation, then 5 joints x 3 rotations
    rows = []
    for _ in range(frames):
        values = np.zeros(21) if zero else np.concatenate(
            [rng.normal(0, 30, size=3), rng.uniform(-40, 40, size=18)]
        )
        rows.append(" ".join(f"{v:.5f}" for v in values))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(BVH_TEMPLATE.format(frames=frames, rows="\n".join(rows)))


@pytest.fixture()
def mocap_root(tmp_path):
    rng = np.random.default_rng(9)
    root = tmp_path / "2c"
    for class_name in ("kick", "punch"):
        for k in range(2):
            d = root / class_name / f"take{k}"
            write_bvh(d / "a.bvh", frames=5, rng=rng)
            write_bvh(d / "b.bvh", frames=5, rng=rng)
    return root


# ---------------------------------------------------------------------------
# depth-sensor importer

def test_import_sbu_counts_and_classes(sbu_root):
    m = import_sbu(sbu_root)
    assert m.class_names == SBU_CLASSES
    # 2 subjects x 6 kept categories x 2 runs
    assert len(m.pairs) == 24
    assert {p.subject_id for p in m.pairs} == {"s01s02", "s03s04"}
    assert m.skeleton.joint_count == 15
    for p in m.pairs:
        assert p.motion_a.num_frames == 4
        assert p.motion_a.num_joints == 15


def test_import_sbu_standardizes_every_pair(sbu_root):
    m = import_sbu(sbu_root)
    root_idx = m.skeleton.root_index
    for p in m.pairs:
        np.testing.assert_allclose(p.motion_a.frames[0, root_idx], 0.0, atol=1e-9)
        assert abs(facing_yaw_of(p.motion_a, m.skeleton)) < 1e-9


def test_import_sbu_two_row_file(tmp_path):
    rng = np.random.default_rng(5)
    f = tmp_path / "sbu" / "s05s06" / "03" / "001" / "skeleton_pos.txt"
    f.parent.mkdir(parents=True)
    f.write_text(_sbu_rows(rng, frames=2))
    m = import_sbu(tmp_path / "sbu")
    assert len(m.pairs) == 1
    assert m.pairs[0].motion_a.num_frames == 2


def test_import_sbu_bad_arity_reports_location(tmp_path):
    f = tmp_path / "sbu" / "s01s02" / "03" / "001" / "skeleton_pos.txt"
    f.parent.mkdir(parents=True)
    f.write_text("1,0.5,0.5\n")
    with pytest.raises(ParseError, match="skeleton_pos.txt:1"):
        import_sbu(tmp_path / "sbu")


def test_import_sbu_skips_empty_file_with_warning(sbu_root):
    empty = sbu_root / "s01s02" / "03" / "003" / "skeleton_pos.txt"
    empty.parent.mkdir(parents=True)
    empty.write_text("")
    m = import_sbu(sbu_root)
    assert len(m.pairs) == 24
    assert any("empty" in w for w in m.warnings)


def test_manifest_round_trip(tmp_path, sbu_root):
    m = import_sbu(sbu_root)
    save_manifest(m, tmp_path / "out" / "manifest.json")
    loaded = load_manifest(tmp_path / "out" / "manifest.json")
    assert loaded.dataset_id == m.dataset_id
    assert loaded.class_names == m.class_names
    assert len(loaded.pairs) == len(m.pairs)
    for a, b in zip(m.pairs, loaded.pairs):
        assert a.pair_id == b.pair_id
        np.testing.assert_array_equal(a.motion_a.frames, b.motion_a.frames)
        np.testing.assert_array_equal(a.motion_b.frames, b.motion_b.frames)


# ---------------------------------------------------------------------------
# mocap importer

def test_parse_bvh_and_fk_matches_transform_chain_oracle(tmp_path):
    rng = np.random.default_rng(21)
    path = tmp_path / "take.bvh"
    write_bvh(path, frames=4, rng=rng)
    cap = parse_hierarchy_file(path)
    assert cap.joint_names == ["Hips", "Chest", "LeftShoulder", "RightShoulder", "LeftHip", "RightHip"]

    from reactmix.motion import Skeleton
    skeleton = Skeleton(
        joint_names=tuple(cap.joint_names),
        parent_index=tuple(cap.parent_index),
        rest_offsets=cap.offsets,
        partition=partition_from_names(cap.joint_names),
        name="rig",
    )
    seq = forward_kinematics_from_matrices(skeleton, cap.rotations, cap.root_translation)

    text = path.read_text().splitlines()
    motion = [list(map(float, line.split())) for line in text[-4:]]
    for frame in rng.choice(4, size=3, replace=False):
        row = motion[frame]
        world = {}
        # channel order per joint: Z X Y intrinsic
        def rot(cells):
            return Rotation.from_euler("ZXY", cells, degrees=True).as_matrix()

        r_hips = rot(row[3:6])
        world[0] = (r_hips, np.array(row[0:3]) + cap.offsets[0])
        order = [(1, 0, row[6:9]), (2, 1, row[9:12]), (3, 1, row[12:15]),
                 (4, 0, row[15:18]), (5, 0, row[18:21])]
        for joint, parent, cells in order:
            pr, pp = world[parent]
            world[joint] = (pr @ rot(cells), pp + pr @ cap.offsets[joint])
        expected = np.array([world[j][1] for j in range(6)])
        np.testing.assert_allclose(seq.frames[frame], expected, atol=1e-9)


def test_import_2c_counts_and_scale(mocap_root):
    m = import_2c(mocap_root)
    assert m.class_names == ["kick", "punch"]
    assert len(m.pairs) == 4
    assert m.skeleton.joint_count == 6
    # coordinates divided by 100: bone lengths match the scaled offsets
    lengths = bone_lengths(m.pairs[0].motion_a, m.skeleton)
    np.testing.assert_allclose(
        lengths, np.tile(m.skeleton.rest_bone_lengths(), (5, 1)), rtol=1e-9
    )
    assert m.skeleton.rest_bone_lengths().max() < 1.0  # raw offsets were tens of units


def test_import_2c_zero_angles_gives_rest_pose(tmp_path):
    d = tmp_path / "2c" / "kick" / "take0"
    write_bvh(d / "a.bvh", frames=3, zero=True)
    write_bvh(d / "b.bvh", frames=3, zero=True)
    m = import_2c(tmp_path / "2c")
    seq = m.pairs[0].motion_a
    sk = m.skeleton
    rest = np.zeros((6, 3))
    for idx in sk.topological_order():
        p = sk.parent_index[idx]
        rest[idx] = sk.rest_offsets[idx] + (rest[p] if p != -1 else 0.0)
    np.testing.assert_allclose(seq.frames[0], rest, atol=1e-12)


def test_import_2c_standardizes(mocap_root):
    m = import_2c(mocap_root)
    for p in m.pairs:
        np.testing.assert_allclose(p.motion_a.frames[0, m.skeleton.root_index], 0.0, atol=1e-9)
        assert abs(facing_yaw_of(p.motion_a, m.skeleton)) < 1e-9


def test_import_2c_frame_count_mismatch(tmp_path):
    rng = np.random.default_rng(2)
    d = tmp_path / "2c" / "kick" / "take0"
    write_bvh(d / "a.bvh", frames=4, rng=rng)
    write_bvh(d / "b.bvh", frames=5, rng=rng)
    with pytest.raises(ParseError, match="frame counts differ"):
        import_2c(tmp_path / "2c")


# ---------------------------------------------------------------------------
# splits

def test_loso_folds(sbu_root):
    m = import_sbu(sbu_root)
    folds = make_splits(m, "leave_one_subject_out")
    assert len(folds) == 2
    all_indices = set(range(len(m.pairs)))
    for train, test in folds:
        assert set(train) | set(test) == all_indices
        assert set(train) & set(test) == set()
        subjects = {m.pairs[i].subject_id for i in test}
        assert len(subjects) == 1


def test_loso_requires_subject_ids(tiny_manifest):
    pairs = [dataclasses.replace(p, subject_id="") for p in tiny_manifest.pairs]
    m = DatasetManifest(
        dataset_id="SYNTH", class_names=tiny_manifest.class_names,
        skeleton=tiny_manifest.skeleton, pairs=pairs,
    )
    with pytest.raises(ProtocolError):
        make_splits(m, "leave_one_subject_out")


def test_ratio_split_44_pairs():
    m = generate_synthetic(SyntheticConfig(num_classes=2, pairs_per_class=22, frames=6, seed=0))
    (train, test), = make_splits(m, "ratio_3_1", seed=1)
    assert len(train) == 33 and len(test) == 11
    assert set(train) | set(test) == set(range(44))
    assert set(train) & set(test) == set()


def test_half_half_197_pairs():
    m = generate_synthetic(
        SyntheticConfig(num_classes=6, frames=6, seed=0, class_counts=(33, 33, 33, 33, 33, 32))
    )
    (train, test), = make_splits(m, "half_half", seed=0)
    assert len(train) == 99 and len(test) == 98


def test_split_determinism(tiny_manifest):
    a = make_splits(tiny_manifest, "ratio_3_1", seed=7)
    b = make_splits(tiny_manifest, "ratio_3_1", seed=7)
    assert a == b
    c = make_splits(tiny_manifest, "ratio_3_1", seed=8)
    assert a != c  # different seed shuffles differently (tiny chance of collision)


def test_unknown_protocol(tiny_manifest):
    with pytest.raises(ProtocolError):
        make_splits(tiny_manifest, "bootstrap")


# ---------------------------------------------------------------------------
# synthetic generator

def test_synthetic_deterministic():
    cfg = SyntheticConfig(num_classes=3, pairs_per_class=2, frames=8, joints=7, seed=42)
    m1, m2 = generate_synthetic(cfg), generate_synthetic(cfg)
    for a, b in zip(m1.pairs, m2.pairs):
        np.testing.assert_array_equal(a.motion_a.frames, b.motion_a.frames)
        np.testing.assert_array_equal(a.motion_b.frames, b.motion_b.frames)


def test_synthetic_transform_reconstructs_reaction(tiny_manifest):
    for p in tiny_manifest.pairs:
        tr = synthetic_reaction_transform(
            p.class_index, tiny_manifest.skeleton, p.motion_a.num_frames
        )
        np.testing.assert_allclose(tr(p.motion_a.frames), p.motion_b.frames, atol=1e-12)


def test_synthetic_noise_breaks_exactness():
    cfg = SyntheticConfig(num_classes=2, pairs_per_class=1, frames=8, seed=0, noise=0.05)
    m = generate_synthetic(cfg)
    p = m.pairs[0]
    tr = synthetic_reaction_transform(0, m.skeleton, 8)
    assert not np.allclose(tr(p.motion_a.frames), p.motion_b.frames, atol=1e-6)


def test_nearest_neighbour_classifier_is_perfect_at_zero_noise():
    m = generate_synthetic(SyntheticConfig(num_classes=3, pairs_per_class=6, frames=10, seed=4))
    (train, test), = make_splits(m, "half_half", seed=0)

    def features(pair):
        a = resample_time(pair.motion_a.frames, 10).ravel()
        b = resample_time(pair.motion_b.frames, 10).ravel()
        return np.concatenate([a, b])

    correct = 0
    for i in test:
        target = features(m.pairs[i])
        best = min(train, key=lambda j: np.linalg.norm(features(m.pairs[j]) - target))
        correct += m.pairs[best].class_index == m.pairs[i].class_index
    assert correct == len(test)
