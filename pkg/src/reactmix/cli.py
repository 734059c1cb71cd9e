"""Command-line entry point wiring the toolkit's pipelines together."""
from __future__ import annotations

import json
import os
import time
from pathlib import Path

import click
import numpy as np
import torch

from . import datasets as ds
from .errors import ReactmixError
from .labels import parse_label_option
from .metrics import (
    augmentation_experiment,
    evaluate_afd,
    evaluate_fid,
    export_embeddings,
    synthesize_labeled_pairs,
    train_feature_extractor,
    write_embeddings_csv,
)
from .model import (
    DiscriminatorHParams,
    GeneratorHParams,
    checkpoint_digest,
    generate,
    load_checkpoint,
)
from .seqio import load_sequence, save_sequence
from .training import TrainingConfig, load_training_config, train

CHECKPOINT_DIR_ENV = "REACTMIX_CHECKPOINT_DIR"


def _resolve_checkpoint(path: str) -> Path:
    """Absolute/relative path, else a file under $REACTMIX_CHECKPOINT_DIR."""
    p = Path(path)
    if p.exists():
        return p
    base = os.environ.get(CHECKPOINT_DIR_ENV)
    if base:
        candidate = Path(base) / path
        if candidate.exists():
            return candidate
    raise click.ClickException(f"checkpoint {path!r} not found")


@click.group()
def main():
    """Reactive two-character motion synthesis toolkit."""


# ---------------------------------------------------------------------------
# data

@main.group()
def data():
    """Dataset import and synthesis."""


@data.command("import")
@click.option("--dataset", type=click.Choice(["sbu", "2c"]), required=True)
@click.option("--root", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--class-map", type=click.Path(exists=True), default=None,
              help="JSON table mapping category folders to class names (sbu).")
@click.option("--partition", type=click.Path(exists=True), default=None,
              help="JSON table mapping body parts to joint names (2c).")
def data_import(dataset, root, out, class_map, partition):
    """Import a corpus and write a manifest plus canonical sequence files."""
    try:
        if dataset == "sbu":
            table = json.loads(Path(class_map).read_text()) if class_map else None
            manifest = ds.import_sbu(root, category_map=table)
        else:
            table = json.loads(Path(partition).read_text()) if partition else None
            manifest = ds.import_2c(root, partition_table=table)
    except ReactmixError as e:
        raise click.ClickException(str(e))
    ds.save_manifest(manifest, out)
    for w in manifest.warnings:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"imported {len(manifest.pairs)} pairs ({manifest.num_classes} classes) -> {out}")


@data.command("synth")
@click.option("--classes", "num_classes", type=int, default=2)
@click.option("--per-class", type=int, default=8)
@click.option("--seed", type=int, default=0)
@click.option("--frames", type=int, default=20)
@click.option("--joints", type=int, default=6)
@click.option("--noise", type=float, default=0.0)
@click.option("--out", type=click.Path(), required=True)
def data_synth(num_classes, per_class, seed, frames, joints, noise, out):
    """Generate the reproducible synthetic interaction dataset."""
    config = ds.SyntheticConfig(
        num_classes=num_classes, pairs_per_class=per_class, frames=frames,
        joints=joints, noise=noise, seed=seed,
    )
    manifest = ds.generate_synthetic(config)
    ds.save_manifest(manifest, out)
    click.echo(f"synthesized {len(manifest.pairs)} pairs -> {out}")


# ---------------------------------------------------------------------------
# training

@main.command("train")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--protocol", type=click.Choice(["leave_one_subject_out", "ratio_3_1", "half_half", "all"]),
              default="all", help="'all' trains on every pair (no held-out fold).")
@click.option("--fold", type=int, default=0, help="fold index for leave_one_subject_out")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--structure-hidden", type=int, default=80)
@click.option("--fc-width", type=int, default=80)
@click.option("--disc-hidden", type=int, default=64)
def cli_train(manifest_path, protocol, fold, config_path, out_dir, structure_hidden, fc_width, disc_hidden):
    """Adversarial training on one fold; writes checkpoints and a loss CSV."""
    manifest = ds.load_manifest(manifest_path)
    config = load_training_config(config_path) if config_path else TrainingConfig()
    if protocol == "all":
        indices = tuple(range(len(manifest.pairs)))
        fold_spec = (indices, ())
    else:
        folds = ds.make_splits(manifest, protocol, seed=config.seed)
        if not 0 <= fold < len(folds):
            raise click.ClickException(f"fold {fold} out of range (have {len(folds)})")
        fold_spec = folds[fold]
    gh = GeneratorHParams(
        num_classes=manifest.num_classes, structure_hidden=structure_hidden, fc_width=fc_width
    )
    dh = DiscriminatorHParams(num_outputs=manifest.num_classes + 1, hidden=disc_hidden)
    try:
        result = train(manifest, fold_spec, config, gen_hparams=gh, disc_hparams=dh, out_dir=out_dir)
    except ReactmixError as e:
        raise click.ClickException(str(e))
    click.echo(f"trained {len(result.reports)} epochs; final l1 {result.reports[-1].l1:.6f}")
    click.echo(f"checkpoint: {result.checkpoint_path}")


# ---------------------------------------------------------------------------
# evaluation

def _eval_fold(manifest, protocol, fold, seed):
    if protocol == "all":
        return (tuple(range(len(manifest.pairs))), tuple(range(len(manifest.pairs))))
    folds = ds.make_splits(manifest, protocol, seed=seed)
    if not 0 <= fold < len(folds):
        raise click.ClickException(f"fold {fold} out of range (have {len(folds)})")
    return folds[fold]


@main.group("eval")
def eval_group():
    """Evaluation metrics against a manifest."""


@eval_group.command("afd")
@click.option("--checkpoint", required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--protocol", default="all",
              type=click.Choice(["leave_one_subject_out", "ratio_3_1", "half_half", "all"]))
@click.option("--fold", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def eval_afd(checkpoint, manifest_path, protocol, fold, seed, out):
    ckpt_path = _resolve_checkpoint(checkpoint)
    ckpt = load_checkpoint(ckpt_path)
    manifest = ds.load_manifest(manifest_path)
    _, test_idx = _eval_fold(manifest, protocol, fold, seed)
    report = evaluate_afd(
        ckpt.generator, manifest, test_idx,
        fold_id=f"{protocol}:{fold}", checkpoint_id=checkpoint_digest(ckpt_path),
    )
    Path(out).write_text(json.dumps(report.as_dict(), indent=1, sort_keys=True))
    for name, value in report.per_class_afd.items():
        click.echo(f"afd[{name}] = {value:.4f}")


@eval_group.command("fid")
@click.option("--checkpoint", required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--protocol", default="all",
              type=click.Choice(["leave_one_subject_out", "ratio_3_1", "half_half", "all"]))
@click.option("--fold", type=int, default=0)
@click.option("--seed", type=int, default=0)
@click.option("--extractor-epochs", type=int, default=30)
@click.option("--out", type=click.Path(), required=True)
def eval_fid(checkpoint, manifest_path, protocol, fold, seed, extractor_epochs, out):
    ckpt_path = _resolve_checkpoint(checkpoint)
    ckpt = load_checkpoint(ckpt_path)
    manifest = ds.load_manifest(manifest_path)
    train_idx, test_idx = _eval_fold(manifest, protocol, fold, seed)
    extractor = train_feature_extractor(
        manifest, train_idx, epochs=extractor_epochs, seed=seed
    )
    try:
        report = evaluate_fid(
            ckpt.generator, manifest, test_idx, extractor,
            fold_id=f"{protocol}:{fold}", checkpoint_id=checkpoint_digest(ckpt_path),
        )
    except ReactmixError as e:
        raise click.ClickException(str(e))
    Path(out).write_text(json.dumps(report.as_dict(), indent=1, sort_keys=True))
    for name, value in report.per_class_fid.items():
        click.echo(f"fid[{name}] = {value:.4f}")


# ---------------------------------------------------------------------------
# synthesis

@main.command("synthesize")
@click.option("--checkpoint", required=True)
@click.option("--input", "input_path", type=click.Path(exists=True), required=True,
              help="Canonical sequence file with the input action.")
@click.option("--label", "label_text", default="", help='e.g. "hug=+1,kick=-1"')
@click.option("--no-clamp", is_flag=True, default=False,
              help="Allow label values outside [-1, 1].")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
def cli_synthesize(checkpoint, input_path, label_text, no_clamp, seed, out):
    """Generate a reaction sequence; writes the sequence plus a sidecar record."""
    ckpt_path = _resolve_checkpoint(checkpoint)
    ckpt = load_checkpoint(ckpt_path)
    seq, _ = load_sequence(input_path)
    try:
        label = parse_label_option(label_text, ckpt.class_names, clamp=not no_clamp)
    except ValueError as e:
        raise click.ClickException(str(e))
    torch.manual_seed(seed)
    started = time.time()
    try:
        result = generate(seq, label, ckpt.generator)
    except ReactmixError as e:
        raise click.ClickException(str(e))
    elapsed = time.time() - started
    save_sequence(out, result, ckpt.skeleton)
    sidecar = {
        "label_vector": label.values.tolist(),
        "label_spec": label_text,
        "checkpoint": checkpoint_digest(ckpt_path),
        "seed": seed,
        "elapsed_seconds": elapsed,
        "input": str(input_path),
    }
    Path(str(out) + ".meta.json").write_text(json.dumps(sidecar, indent=1, sort_keys=True))
    click.echo(f"wrote {out} ({result.num_frames} frames)")


# ---------------------------------------------------------------------------
# augmentation export and embeddings

@main.command("export-augmented")
@click.option("--checkpoint", required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--per-class", type=int, default=50)
@click.option("--seed", type=int, default=0)
@click.option("--with-accuracy", is_flag=True, default=False,
              help="Also run the recognition experiment and write its report.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cli_export_augmented(checkpoint, manifest_path, per_class, seed, with_accuracy, out_dir):
    """Export the synthesized augmentation set (and optionally its study)."""
    ckpt = load_checkpoint(_resolve_checkpoint(checkpoint))
    manifest = ds.load_manifest(manifest_path)
    out_dir = Path(out_dir)
    if with_accuracy:
        report, synthesized = augmentation_experiment(
            ckpt.generator, manifest, per_class=per_class, seed=seed
        )
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "augmentation_report.json").write_text(
            json.dumps(report.as_dict(), indent=1, sort_keys=True)
        )
        click.echo(
            f"original {report.original_train}/{report.original_test}, "
            f"augmented {report.augmented_train}/{report.augmented_test}"
        )
    else:
        synthesized = synthesize_labeled_pairs(ckpt.generator, manifest, per_class, seed=seed)
    aug_manifest = ds.DatasetManifest(
        dataset_id="SYNTH", class_names=manifest.class_names,
        skeleton=manifest.skeleton, pairs=synthesized,
    )
    ds.save_manifest(aug_manifest, out_dir / "manifest.json")
    click.echo(f"exported {len(synthesized)} synthesized pairs -> {out_dir}")


@main.command("embeddings")
@click.option("--checkpoint", required=True)
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True)
def cli_embeddings(checkpoint, manifest_path, out):
    """Export per-pair encoder embeddings as CSV for t-SNE style projection."""
    ckpt = load_checkpoint(_resolve_checkpoint(checkpoint))
    manifest = ds.load_manifest(manifest_path)
    rows = export_embeddings(ckpt.generator, manifest)
    write_embeddings_csv(out, rows)
    click.echo(f"wrote {len(rows)} embeddings of dim {len(rows[0][2])} -> {out}")


# ---------------------------------------------------------------------------
# service

@main.command("serve")
@click.option("--checkpoint", required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8080)
def cli_serve(checkpoint, host, port):
    """Run the HTTP synthesis service."""
    import uvicorn

    from .service import create_app

    app = create_app(_resolve_checkpoint(checkpoint))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
