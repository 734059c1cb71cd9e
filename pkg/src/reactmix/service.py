"""HTTP synthesis service: generation against a shared checkpoint snapshot.

The loaded checkpoint lives in an immutable snapshot object; request
handlers only read it, so concurrent synthesis is safe, and the admin
swap endpoint replaces the whole snapshot reference atomically (the new
checkpoint is fully loaded and validated before the swap).
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path

import torch
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import CheckpointError, DataError, ParseError, ReactmixError
from .labels import make_multi_hot, resolve_label_spec
from .model import Checkpoint, checkpoint_digest, generate, load_checkpoint
from .seqio import load_sequence, sequence_from_dict, sequence_to_dict


@dataclass(frozen=True)
class ModelSnapshot:
    checkpoint: Checkpoint
    digest: str
    path: str


class SynthesisOptions(BaseModel):
    seed: int = 0
    clamp_labels: bool = True


class SynthesisRequest(BaseModel):
    motion_a: dict | None = None          # canonical sequence payload
    sequence_path: str | None = None      # server-readable alternative
    label_spec: dict[str, float] = Field(default_factory=dict)
    options: SynthesisOptions = Field(default_factory=SynthesisOptions)


class CheckpointSwapRequest(BaseModel):
    path: str


def _request_id(body: dict, digest: str) -> str:
    canon = json.dumps(body, sort_keys=True) + digest
    return hashlib.sha256(canon.encode()).hexdigest()[:20]


def create_app(checkpoint_path: str | Path) -> FastAPI:
    snapshot = _load_snapshot(checkpoint_path)
    app = FastAPI(title="reactive-motion synthesis service")
    app.state.snapshot = snapshot
    app.state.results: dict[str, dict] = {}
    app.state.results_lock = threading.Lock()

    @app.get("/health")
    def health():
        snap: ModelSnapshot = app.state.snapshot
        return {"status": "ok", "checkpoint": snap.digest, "dataset_id": snap.checkpoint.dataset_id}

    @app.get("/classes")
    def classes():
        snap: ModelSnapshot = app.state.snapshot
        return {"class_names": snap.checkpoint.class_names}

    @app.post("/synthesize")
    def synthesize(request: SynthesisRequest):
        snap: ModelSnapshot = app.state.snapshot
        ckpt = snap.checkpoint
        try:
            spec = resolve_label_spec(request.label_spec, ckpt.class_names)
            label = make_multi_hot(
                spec, ckpt.num_classes, clamp=request.options.clamp_labels
            )
        except ValueError as e:
            raise HTTPException(status_code=422, detail={"field": "label_spec", "message": str(e)})
        if (request.motion_a is None) == (request.sequence_path is None):
            raise HTTPException(
                status_code=422,
                detail={"field": "motion_a", "message": "provide exactly one of motion_a or sequence_path"},
            )
        try:
            if request.motion_a is not None:
                seq, _ = sequence_from_dict(request.motion_a)
            else:
                seq, _ = load_sequence(request.sequence_path)
        except (ParseError, ReactmixError) as e:
            raise HTTPException(status_code=400, detail={"field": "motion_a", "message": str(e)})
        if seq.num_joints != ckpt.skeleton.joint_count:
            raise HTTPException(
                status_code=400,
                detail={
                    "field": "motion_a",
                    "message": f"sequence has {seq.num_joints} joints; checkpoint skeleton "
                    f"has {ckpt.skeleton.joint_count}",
                },
            )
        torch.manual_seed(request.options.seed)
        try:
            out = generate(seq, label, ckpt.generator)
        except DataError as e:
            rid = _request_id(request.model_dump(), snap.digest)
            raise HTTPException(
                status_code=500, detail={"diagnostic_id": rid, "message": str(e)}
            )
        body = {
            "sequence_id": _request_id(request.model_dump(), snap.digest),
            "sequence": sequence_to_dict(out, ckpt.skeleton),
            "label_vector": label.values.tolist(),
            "class_names": ckpt.class_names,
            "checkpoint": snap.digest,
            "seed": request.options.seed,
        }
        with app.state.results_lock:
            app.state.results[body["sequence_id"]] = body
        return body

    @app.get("/sequences/{sequence_id}")
    def get_sequence(sequence_id: str):
        with app.state.results_lock:
            body = app.state.results.get(sequence_id)
        if body is None:
            raise HTTPException(status_code=404, detail={"message": f"no result {sequence_id!r}"})
        return body

    @app.post("/admin/checkpoint")
    def swap_checkpoint(request: CheckpointSwapRequest):
        try:
            new_snapshot = _load_snapshot(request.path)
        except CheckpointError as e:
            raise HTTPException(status_code=400, detail={"field": "path", "message": str(e)})
        app.state.snapshot = new_snapshot  # atomic reference swap
        return {"status": "ok", "checkpoint": new_snapshot.digest}

    return app


def _load_snapshot(path: str | Path) -> ModelSnapshot:
    ckpt = load_checkpoint(path)
    ckpt.generator.eval()
    for p in ckpt.generator.parameters():
        p.requires_grad_(False)
    return ModelSnapshot(checkpoint=ckpt, digest=checkpoint_digest(path), path=str(path))
