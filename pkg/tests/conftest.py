import numpy as np
import pytest

from reactmix.datasets import SyntheticConfig, generate_synthetic
from reactmix.motion import InteractionPair, MotionSequence, Skeleton


@pytest.fixture(scope="session")
def chain4_skeleton() -> Skeleton:
    """4-joint kinematic chain with enough partition structure to be legal."""
    return Skeleton(
        joint_names=("root", "a", "b", "c"),
        parent_index=(-1, 0, 1, 2),
        rest_offsets=np.array([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.3, 0.5, 0.0], [0.0, 0.0, 0.7]]),
        partition={
            "trunk": (0,),
            "left_arm": (1,),
            "right_arm": (2,),
            "left_leg": (),
            "right_leg": (3,),
        },
        name="chain4",
    )


@pytest.fixture(scope="session")
def human6_skeleton() -> Skeleton:
    """Minimal humanoid: pelvis, two hips, two shoulders, spine."""
    return Skeleton(
        joint_names=("pelvis", "lhip", "rhip", "lshoulder", "rshoulder", "spine"),
        parent_index=(-1, 0, 0, 5, 5, 0),
        rest_offsets=np.array(
            [
                [0.0, 0.0, 0.0],
                [-0.15, -0.05, 0.0],
                [0.15, -0.05, 0.0],
                [-0.2, 0.05, 0.0],
                [0.2, 0.05, 0.0],
                [0.0, 0.3, 0.0],
            ]
        ),
        partition={
            "trunk": (0, 5),
            "left_leg": (1,),
            "right_leg": (2,),
            "left_arm": (3,),
            "right_arm": (4,),
        },
        name="human6",
    )


def random_pose_sequence(skeleton: Skeleton, frames: int, rng, scale=0.5) -> MotionSequence:
    """Random but finite positions around the rest pose."""
    rest = np.zeros((skeleton.joint_count, 3))
    for idx in skeleton.topological_order():
        p = skeleton.parent_index[idx]
        rest[idx] = skeleton.rest_offsets[idx] + (rest[p] if p != -1 else 0.0)
    noise = rng.normal(0.0, scale, size=(frames, skeleton.joint_count, 3))
    return MotionSequence(rest[None] + noise, 30.0, skeleton.name)


def random_pair(skeleton: Skeleton, frames: int, rng) -> InteractionPair:
    return InteractionPair(
        motion_a=random_pose_sequence(skeleton, frames, rng),
        motion_b=random_pose_sequence(skeleton, frames, rng),
        class_index=0,
        subject_id="s00",
        dataset_id="TEST",
        pair_id="t0",
    )


@pytest.fixture(scope="session")
def tiny_manifest():
    """4 pairs, 2 classes, T=20, J=6: the overfit-scale dataset."""
    return generate_synthetic(
        SyntheticConfig(num_classes=2, pairs_per_class=2, frames=20, joints=6, seed=3)
    )
