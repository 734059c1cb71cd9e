"""Loss terms for the adversarial reaction objective.

All terms operate on torch tensors so gradients flow to whichever side is
being optimized; convenience coercion accepts MotionSequence and numpy
inputs. Sequences are (T, J, 3); padded batches are (B, T, J, 3) with a
boolean (B, T) validity mask, and padded frames contribute nothing.
"""
from __future__ import annotations

import numpy as np
import torch

from .motion import MotionSequence, Skeleton

GENERATOR_ROLE = "generator"
DISCRIMINATOR_ROLE = "discriminator"

_LOG_EPS = 1e-12


def _frames(x) -> torch.Tensor:
    if isinstance(x, MotionSequence):
        return torch.as_tensor(x.frames)
    return torch.as_tensor(x)


def _check_same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ValueError(f"sequence shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")


def _frame_mask(frames: torch.Tensor, mask) -> torch.Tensor | None:
    """Validate an optional (B, T) mask against (B, T, J, 3) frames."""
    if mask is None:
        return None
    m = torch.as_tensor(mask, dtype=torch.bool)
    if frames.dim() != 4:
        raise ValueError("masks apply to batched (B, T, J, 3) input")
    if m.shape != frames.shape[:2]:
        raise ValueError(f"mask shape {tuple(m.shape)} != batch/time {tuple(frames.shape[:2])}")
    return m


def loss_l1(generated, truth, mask=None) -> torch.Tensor:
    """Mean absolute coordinate difference over valid frames."""
    g, t = _frames(generated), _frames(truth)
    _check_same_shape(g, t)
    diff = (g - t).abs()
    m = _frame_mask(g, mask)
    if m is None:
        return diff.mean()
    weights = m[..., None, None].to(diff.dtype)
    return (diff * weights).sum() / (weights.sum() * g.shape[-2] * g.shape[-1])


def loss_bone(generated, skeleton: Skeleton, mask=None) -> torch.Tensor:
    """Mean absolute deviation of bone lengths from the rest lengths."""
    g = _frames(generated)
    if g.shape[-2] != skeleton.joint_count:
        raise ValueError(
            f"sequence has {g.shape[-2]} joints, skeleton {skeleton.joint_count}"
        )
    bones = skeleton.bone_joint_indices()
    parents = [skeleton.parent_index[i] for i in bones]
    seg = g[..., bones, :] - g[..., parents, :]
    lengths = torch.linalg.vector_norm(seg, dim=-1)  # (..., J-1)
    rest = torch.as_tensor(skeleton.rest_bone_lengths(), dtype=g.dtype)
    dev = (lengths - rest).abs()
    m = _frame_mask(g, mask)
    if m is None:
        return dev.mean()
    weights = m[..., None].to(dev.dtype)
    return (dev * weights).sum() / (weights.sum() * len(bones))


def loss_continuity(generated, truth, mask=None) -> torch.Tensor:
    """Mean absolute difference of frame-to-frame velocities.

    Invariant to constant offsets of either sequence; requires T >= 2.
    """
    g, t = _frames(generated), _frames(truth)
    _check_same_shape(g, t)
    time_axis = 0 if g.dim() == 3 else 1
    if g.shape[time_axis] < 2:
        raise ValueError("continuity loss needs at least 2 frames")
    if time_axis == 0:
        vg, vt = g[1:] - g[:-1], t[1:] - t[:-1]
        dev = (vg - vt).abs()
        if mask is not None:
            raise ValueError("masks apply to batched input")
        return dev.mean()
    vg, vt = g[:, 1:] - g[:, :-1], t[:, 1:] - t[:, :-1]
    dev = (vg - vt).abs()
    m = _frame_mask(g, mask)
    if m is None:
        return dev.mean()
    valid = (m[:, 1:] & m[:, :-1])[..., None, None].to(dev.dtype)
    return (dev * valid).sum() / (valid.sum() * g.shape[-2] * g.shape[-1])


def _check_simplex(p: torch.Tensor, name: str) -> torch.Tensor:
    p = torch.as_tensor(p)
    if p.dim() != 1:
        raise ValueError(f"{name} must be a 1-D probability vector")
    with torch.no_grad():
        if p.min() < -1e-6 or p.max() > 1 + 1e-6:
            raise ValueError(f"{name} entries must lie in [0, 1]")
        if abs(float(p.sum()) - 1.0) > 1e-4:
            raise ValueError(f"{name} must sum to 1, got {float(p.sum()):.6f}")
    return p


def loss_cgan(d_probs_real, d_probs_fake, true_class: int, role: str) -> torch.Tensor:
    """Conditional-GAN loss over N+1 classes (last class = generated).

    Discriminator role: recognize real reactions as their interaction class
    and generated ones as the fidelity class. Generator role: push the
    generated reaction toward its interaction class (and thus away from the
    fidelity class).
    """
    fake = _check_simplex(d_probs_fake, "d_probs_fake")
    n_plus_1 = fake.shape[0]
    if not 0 <= true_class < n_plus_1 - 1:
        raise ValueError(f"true_class {true_class} out of range [0, {n_plus_1 - 1})")
    if role == GENERATOR_ROLE:
        return -torch.log(fake[true_class].clamp_min(_LOG_EPS))
    if role == DISCRIMINATOR_ROLE:
        real = _check_simplex(d_probs_real, "d_probs_real")
        if real.shape != fake.shape:
            raise ValueError("real and fake probability vectors differ in length")
        return -torch.log(real[true_class].clamp_min(_LOG_EPS)) - torch.log(
            fake[n_plus_1 - 1].clamp_min(_LOG_EPS)
        )
    raise ValueError(f"unknown role {role!r}")
