"""Evaluation: frame-distance and distribution metrics, baselines, exports.

AFD is the deterministic geometric metric: the mean over frames of the
Euclidean distance between stacked pose vectors. The distribution metric is
the Frechet distance between Gaussian fits of feature distributions, with
features taken from the penultimate layer of a recognition classifier
trained on real data only (frozen before any generator is scored, so
comparisons across model variants share one feature space).
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import torch

from .datasets import DatasetManifest, make_splits
from .errors import ProtocolError
from .labels import encode_label
from .model import (
    DiscriminatorHParams,
    MotionDiscriminator,
    ReactionGenerator,
    generate,
)
from .motion import InteractionPair, MotionSequence

# ---------------------------------------------------------------------------
# frame distance

def afd(generated, truth) -> float:
    """Average frame distance between two equal-shape sequences."""
    g = generated.frames if isinstance(generated, MotionSequence) else np.asarray(generated)
    t = truth.frames if isinstance(truth, MotionSequence) else np.asarray(truth)
    if g.shape != t.shape:
        raise ValueError(f"sequence shapes differ: {g.shape} vs {t.shape}")
    diff = (g - t).reshape(g.shape[0], -1)
    return float(np.linalg.norm(diff, axis=1).mean())


def resample_time(frames: np.ndarray, new_length: int) -> np.ndarray:
    """Uniform linear time-resampling of a (T, J, 3) array to new_length."""
    t = frames.shape[0]
    if new_length == t:
        return frames.copy()
    if t == 1:
        return np.repeat(frames, new_length, axis=0)
    src = np.linspace(0.0, t - 1.0, new_length)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, t - 1)
    w = (src - lo)[:, None, None]
    return frames[lo] * (1.0 - w) + frames[hi] * w


def nn_baseline(train_pairs: list[InteractionPair], test_motion_a: MotionSequence) -> MotionSequence:
    """Reaction of the training pair whose action is AFD-nearest the query.

    The query is linearly resampled to each candidate's length before the
    distance is computed, so variable-length corpora compare cleanly.
    """
    if not train_pairs:
        raise ValueError("nn_baseline needs a non-empty training set")
    best_idx, best_dist = -1, np.inf
    for i, pair in enumerate(train_pairs):
        cand = pair.motion_a.frames
        query = resample_time(test_motion_a.frames, cand.shape[0])
        d = afd(query, cand)
        if d < best_dist:
            best_idx, best_dist = i, d
    return train_pairs[best_idx].motion_b


# ---------------------------------------------------------------------------
# Frechet distance

@dataclass
class FidResult:
    value: float
    regularized: bool = False


def _psd_sqrt_trace(matrix: np.ndarray) -> float:
    """Trace of the PSD square root; eigenvalues in (-1e-6, 0) are zeroed."""
    w = np.linalg.eigvalsh((matrix + matrix.T) / 2.0)
    w = np.where((w < 0) & (w > -1e-6), 0.0, w)
    if (w < 0).any():
        raise FloatingPointError(f"matrix strongly non-PSD (min eigenvalue {w.min():.3e})")
    return float(np.sqrt(w).sum())


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((matrix + matrix.T) / 2.0)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def fid_details(features_real: np.ndarray, features_gen: np.ndarray) -> FidResult:
    """Frechet distance between Gaussian fits of two feature samples.

    ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^{1/2}), computed through
    the symmetric product S_r^{1/2} S_g S_r^{1/2}. A singular/ill-conditioned
    pair falls back to +1e-6 diagonal regularization, reported in the result.
    """
    xr = np.asarray(features_real, dtype=np.float64)
    xg = np.asarray(features_gen, dtype=np.float64)
    if xr.ndim != 2 or xg.ndim != 2:
        raise ValueError("feature sets must be (n_samples, dim) arrays")
    if xr.shape[1] != xg.shape[1]:
        raise ValueError(f"feature dimensions differ: {xr.shape[1]} vs {xg.shape[1]}")
    if xr.shape[0] < 2 or xg.shape[0] < 2:
        raise ValueError("need at least 2 samples per side")
    mu_r, mu_g = xr.mean(axis=0), xg.mean(axis=0)
    cov_r = np.atleast_2d(np.cov(xr, rowvar=False))
    cov_g = np.atleast_2d(np.cov(xg, rowvar=False))

    def compute(cr: np.ndarray, cg: np.ndarray) -> float:
        sr = _psd_sqrt(cr)
        cross = _psd_sqrt_trace(sr @ cg @ sr)
        mean_term = float(((mu_r - mu_g) ** 2).sum())
        value = mean_term + float(np.trace(cr) + np.trace(cg)) - 2.0 * cross
        # clip the tiny negatives that sample-identical inputs produce
        return max(value, 0.0) if value > -1e-6 else value

    try:
        value = compute(cov_r, cov_g)
        if value < 0:
            raise FloatingPointError(f"negative distance {value:.3e}")
        return FidResult(value=value, regularized=False)
    except FloatingPointError:
        eye = np.eye(cov_r.shape[0]) * 1e-6
        return FidResult(value=compute(cov_r + eye, cov_g + eye), regularized=True)


def fid(features_real: np.ndarray, features_gen: np.ndarray) -> float:
    return fid_details(features_real, features_gen).value


# ---------------------------------------------------------------------------
# feature extractor and classifier training

@dataclass
class FeatureExtractor:
    """Deterministic MotionSequence -> vector map for distribution metrics."""

    model: MotionDiscriminator
    source: str = "trained_classifier_penultimate"

    @property
    def dimension(self) -> int:
        return 2 * self.model.hparams.hidden

    def __call__(self, frames: np.ndarray | MotionSequence) -> np.ndarray:
        x = frames.frames if isinstance(frames, MotionSequence) else np.asarray(frames)
        with torch.no_grad():
            out = self.model.features(torch.as_tensor(x, dtype=torch.float32))
        return out.numpy().astype(np.float64)


def train_classifier(
    sequences: list[np.ndarray],
    class_indices: list[int],
    num_classes: int,
    hidden: int = 64,
    epochs: int = 30,
    learning_rate: float = 0.005,
    batch_size: int = 16,
    seed: int = 0,
) -> MotionDiscriminator:
    """Supervised N-class training of the discriminator architecture.

    ``sequences`` are (T, D) arrays (any per-frame feature layout).
    """
    if not sequences:
        raise ValueError("no training sequences")
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    pose_dim = sequences[0].shape[1]
    model = MotionDiscriminator(pose_dim, DiscriminatorHParams(num_outputs=num_classes, hidden=hidden))
    opt = torch.optim.RMSprop(model.parameters(), lr=learning_rate)
    tensors = [torch.as_tensor(s, dtype=torch.float32) for s in sequences]
    targets = list(class_indices)
    idx = np.arange(len(tensors))
    for _ in range(epochs):
        rng.shuffle(idx)
        for start in range(0, len(idx), batch_size):
            batch = idx[start : start + batch_size]
            loss = torch.zeros(())
            for i in batch:
                probs = model(tensors[i])
                loss = loss - torch.log(probs[targets[i]].clamp_min(1e-12))
            loss = loss / len(batch)
            opt.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), 5.0)
            opt.step()
    model.eval()
    return model


def train_feature_extractor(
    manifest: DatasetManifest,
    train_indices: tuple[int, ...] | None = None,
    hidden: int = 64,
    epochs: int = 30,
    seed: int = 0,
) -> FeatureExtractor:
    """Fit the frozen feature space on real reactions only."""
    indices = range(len(manifest.pairs)) if train_indices is None else train_indices
    seqs = [manifest.pairs[i].motion_b.frames.reshape(manifest.pairs[i].motion_b.num_frames, -1)
            for i in indices]
    labels = [manifest.pairs[i].class_index for i in indices]
    model = train_classifier(
        seqs, labels, manifest.num_classes, hidden=hidden, epochs=epochs, seed=seed
    )
    return FeatureExtractor(model=model)


# ---------------------------------------------------------------------------
# evaluation reports

@dataclass
class EvaluationReport:
    per_class_afd: dict[str, float] = field(default_factory=dict)
    per_class_fid: dict[str, float] = field(default_factory=dict)
    fold_id: str = ""
    checkpoint_id: str = ""
    config_hash: str = ""
    fid_regularized: bool = False

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def evaluate_afd(
    generator: ReactionGenerator,
    manifest: DatasetManifest,
    test_indices: tuple[int, ...],
    fold_id: str = "",
    checkpoint_id: str = "",
) -> EvaluationReport:
    """Per-class mean AFD of generated vs ground-truth reactions."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for i in test_indices:
        pair = manifest.pairs[i]
        label = encode_label(pair.class_index, manifest.num_classes)
        gen_seq = generate(pair.motion_a, label, generator)
        d = afd(gen_seq, pair.motion_b)
        sums[pair.class_index] = sums.get(pair.class_index, 0.0) + d
        counts[pair.class_index] = counts.get(pair.class_index, 0) + 1
    per_class = {
        manifest.class_names[c]: sums[c] / counts[c] for c in sorted(sums)
    }
    return EvaluationReport(
        per_class_afd=per_class, fold_id=fold_id, checkpoint_id=checkpoint_id
    )


def evaluate_fid(
    generator: ReactionGenerator,
    manifest: DatasetManifest,
    test_indices: tuple[int, ...],
    extractor: FeatureExtractor,
    fold_id: str = "",
    checkpoint_id: str = "",
) -> EvaluationReport:
    """Per-class Frechet distance between real and generated reaction features."""
    feats_real: dict[int, list[np.ndarray]] = {}
    feats_gen: dict[int, list[np.ndarray]] = {}
    for i in test_indices:
        pair = manifest.pairs[i]
        label = encode_label(pair.class_index, manifest.num_classes)
        gen_seq = generate(pair.motion_a, label, generator)
        feats_real.setdefault(pair.class_index, []).append(extractor(pair.motion_b))
        feats_gen.setdefault(pair.class_index, []).append(extractor(gen_seq))
    per_class: dict[str, float] = {}
    regularized = False
    for c in sorted(feats_real):
        if len(feats_real[c]) < 2 or len(feats_gen[c]) < 2:
            raise ProtocolError(
                f"class {manifest.class_names[c]} has too few samples for a "
                "distribution metric; pool more folds"
            )
        result = fid_details(np.stack(feats_real[c]), np.stack(feats_gen[c]))
        per_class[manifest.class_names[c]] = result.value
        regularized = regularized or result.regularized
    return EvaluationReport(
        per_class_fid=per_class, fold_id=fold_id, checkpoint_id=checkpoint_id,
        fid_regularized=regularized,
    )


# ---------------------------------------------------------------------------
# embedding export

def export_embeddings(
    generator: ReactionGenerator,
    manifest: DatasetManifest,
) -> list[tuple[str, str, np.ndarray]]:
    """(pair_id, class name, vector) rows for external projection tools.

    The vector is the temporal mean of the concatenated six-structure
    encoder states for the pair's action under its one-hot label, so its
    length is the decoder width (6 x structure hidden size).
    """
    if generator.hparams.num_classes != manifest.num_classes:
        raise ValueError(
            f"generator expects {generator.hparams.num_classes} classes, manifest "
            f"has {manifest.num_classes}"
        )
    dtype = next(generator.parameters()).dtype
    rows = []
    for pair in manifest.pairs:
        label = encode_label(pair.class_index, manifest.num_classes)
        with torch.no_grad():
            states = generator.encoder_states(
                torch.as_tensor(pair.motion_a.frames, dtype=dtype),
                torch.as_tensor(label.values, dtype=dtype),
            )
        rows.append(
            (pair.pair_id, manifest.class_names[pair.class_index],
             states.mean(dim=0).numpy().astype(np.float64))
        )
    return rows


def write_embeddings_csv(path, rows: list[tuple[str, str, np.ndarray]]) -> None:
    import csv
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dim = len(rows[0][2]) if rows else 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", "class"] + [f"v{i+1}" for i in range(dim)])
        for pair_id, class_name, vec in rows:
            writer.writerow([pair_id, class_name] + [repr(float(v)) for v in vec])


# ---------------------------------------------------------------------------
# data augmentation for recognition

@dataclass
class AugmentationReport:
    synthesized_count: int
    original_train: int
    original_test: int
    augmented_train: int
    augmented_test: int
    original_accuracy: dict[str, float]
    augmented_accuracy: dict[str, float]
    original_confusion: np.ndarray
    augmented_confusion: np.ndarray

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["original_confusion"] = self.original_confusion.tolist()
        d["augmented_confusion"] = self.augmented_confusion.tolist()
        return d


def synthesize_labeled_pairs(
    generator: ReactionGenerator,
    manifest: DatasetManifest,
    per_class: int,
    seed: int = 0,
) -> list[InteractionPair]:
    """per_class x N new pairs: real actions with generated reactions.

    Actions are drawn per class (cycling through that class's pairs in a
    seeded order); each reaction is generated under the class's one-hot
    label.
    """
    rng = np.random.default_rng(seed)
    by_class = manifest.pair_indices_by_class()
    out = []
    for c in range(manifest.num_classes):
        members = np.array(by_class[c], dtype=int)
        if len(members) == 0:
            raise ProtocolError(f"class {manifest.class_names[c]} has no pairs to draw actions from")
        order = members[rng.permutation(len(members))]
        label = encode_label(c, manifest.num_classes)
        for k in range(per_class):
            src = manifest.pairs[order[k % len(order)]]
            gen_seq = generate(src.motion_a, label, generator)
            out.append(
                InteractionPair(
                    motion_a=src.motion_a,
                    motion_b=gen_seq,
                    class_index=c,
                    subject_id=src.subject_id,
                    dataset_id=manifest.dataset_id,
                    pair_id=f"aug-{manifest.class_names[c]}-{k:03d}",
                )
            )
    return out


def _interaction_features(pair: InteractionPair) -> np.ndarray:
    a = pair.motion_a.frames.reshape(pair.motion_a.num_frames, -1)
    b = pair.motion_b.frames.reshape(pair.motion_b.num_frames, -1)
    return np.concatenate([a, b], axis=1)


def _per_class_accuracy(
    model: MotionDiscriminator, pairs: list[InteractionPair], num_classes: int
) -> tuple[dict[int, float], np.ndarray]:
    confusion = np.zeros((num_classes, num_classes), dtype=int)
    for pair in pairs:
        x = torch.as_tensor(_interaction_features(pair), dtype=torch.float32)
        with torch.no_grad():
            pred = int(model(x).argmax())
        confusion[pair.class_index, pred] += 1
    acc = {}
    for c in range(num_classes):
        total = confusion[c].sum()
        if total > 0:
            acc[c] = float(confusion[c, c] / total)
    return acc, confusion


def augmentation_experiment(
    generator: ReactionGenerator,
    manifest: DatasetManifest,
    per_class: int = 50,
    augment_train: int = 25,
    augment_test: int = 25,
    classifier_epochs: int = 30,
    classifier_hidden: int = 64,
    seed: int = 0,
) -> tuple[AugmentationReport, list[InteractionPair]]:
    """Original vs augmented recognition accuracy, plus the synthesized set.

    The original split is the stratified half-half recognition protocol.
    The augmented split adds an evenly divided slice of the synthesized set
    (defaults reproduce the reference split sizes) to each side.
    """
    (train_idx, test_idx) = make_splits(manifest, "half_half", seed=seed)[0]
    synthesized = synthesize_labeled_pairs(generator, manifest, per_class, seed=seed)
    if augment_train + augment_test > len(synthesized):
        raise ProtocolError("not enough synthesized pairs for the requested augmentation")

    # round-robin over classes so both slices stay class-balanced
    by_class: dict[int, list[InteractionPair]] = {}
    for p in synthesized:
        by_class.setdefault(p.class_index, []).append(p)
    interleaved: list[InteractionPair] = []
    k = 0
    while len(interleaved) < len(synthesized):
        for c in sorted(by_class):
            if k < len(by_class[c]):
                interleaved.append(by_class[c][k])
        k += 1
    aug_train = interleaved[:augment_train]
    aug_test = interleaved[augment_train : augment_train + augment_test]

    original_train = [manifest.pairs[i] for i in train_idx]
    original_test = [manifest.pairs[i] for i in test_idx]
    augmented_train = original_train + aug_train
    augmented_test = original_test + aug_test

    def fit(pairs: list[InteractionPair]) -> MotionDiscriminator:
        return train_classifier(
            [_interaction_features(p) for p in pairs],
            [p.class_index for p in pairs],
            manifest.num_classes,
            hidden=classifier_hidden,
            epochs=classifier_epochs,
            seed=seed,
        )

    model_original = fit(original_train)
    acc_o, conf_o = _per_class_accuracy(model_original, original_test, manifest.num_classes)
    model_augmented = fit(augmented_train)
    acc_a, conf_a = _per_class_accuracy(model_augmented, augmented_test, manifest.num_classes)

    names = manifest.class_names
    report = AugmentationReport(
        synthesized_count=len(synthesized),
        original_train=len(original_train),
        original_test=len(original_test),
        augmented_train=len(augmented_train),
        augmented_test=len(augmented_test),
        original_accuracy={names[c]: v for c, v in acc_o.items()},
        augmented_accuracy={names[c]: v for c, v in acc_a.items()},
        original_confusion=conf_o,
        augmented_confusion=conf_a,
    )
    return report, synthesized
