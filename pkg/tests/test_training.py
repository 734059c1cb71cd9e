import numpy as np
import pytest
import torch

from reactmix.errors import TrainingDivergedError
from reactmix.labels import encode_label
from reactmix.model import DiscriminatorHParams, GeneratorHParams
from reactmix.training import (
    REPORT_COLUMNS,
    AblationFlags,
    TrainingConfig,
    generator_objective,
    load_training_config,
    train,
    write_loss_reports,
)

TINY_GH = GeneratorHParams(num_classes=2, structure_hidden=8, fc_width=8)
TINY_DH = DiscriminatorHParams(num_outputs=3, hidden=8)


def _short_config(**kw):
    defaults = dict(epochs=3, seed=0, batch_size=2)
    defaults.update(kw)
    return TrainingConfig(**defaults)


def test_default_weights_match_reference_settings():
    cfg = TrainingConfig()
    assert cfg.lambda_b == 0.01
    assert cfg.lambda_c == 1.0
    assert cfg.lambda_1 == 1.0
    assert cfg.learning_rate == 0.01
    assert cfg.batch_size == 16
    assert cfg.optimizer == "rmsprop"
    assert cfg.resolve_epochs("SBU") == 1600
    assert cfg.resolve_epochs("2C") == 2000


def test_training_is_deterministic(tiny_manifest):
    fold = (tuple(range(4)), ())
    r1 = train(tiny_manifest, fold, _short_config(), TINY_GH, TINY_DH)
    r2 = train(tiny_manifest, fold, _short_config(), TINY_GH, TINY_DH)
    assert [r.as_row() for r in r1.reports] == [r.as_row() for r in r2.reports]


def test_total_g_is_the_weighted_sum(tiny_manifest):
    fold = (tuple(range(4)), ())
    cfg = _short_config(lambda_b=0.01, lambda_c=1.0, lambda_1=1.0)
    res = train(tiny_manifest, fold, cfg, TINY_GH, TINY_DH)
    for r in res.reports:
        expected = r.adversarial_g + 0.01 * r.bone + 1.0 * r.continuity + 1.0 * r.l1
        np.testing.assert_allclose(r.total_g, expected, rtol=1e-12)


def test_no_discriminator_zeroes_adversarial_terms(tiny_manifest):
    fold = (tuple(range(4)), ())
    cfg = _short_config(ablations=AblationFlags(no_discriminator=True))
    res = train(tiny_manifest, fold, cfg, TINY_GH, TINY_DH)
    assert res.discriminator is None
    for r in res.reports:
        assert r.adversarial_g == 0.0
        assert r.adversarial_d == 0.0


@pytest.mark.parametrize(
    "flag,term",
    [("no_bone_loss", "bone"), ("no_continuity", "continuity")],
)
def test_loss_flags_zero_their_reports(tiny_manifest, flag, term):
    fold = (tuple(range(4)), ())
    cfg = _short_config(ablations=AblationFlags(**{flag: True}))
    res = train(tiny_manifest, fold, cfg, TINY_GH, TINY_DH)
    for r in res.reports:
        assert getattr(r, term) == 0.0


def test_ablation_zeroes_gradient_contribution(tiny_manifest):
    """With a term disabled, total gradients equal the remaining terms' sum."""
    skeleton = tiny_manifest.skeleton
    gen_hp = GeneratorHParams(num_classes=2, structure_hidden=4, fc_width=4)
    from reactmix.model import ReactionGenerator

    pairs = [
        (
            torch.as_tensor(p.motion_a.frames, dtype=torch.float32),
            torch.as_tensor(p.motion_b.frames, dtype=torch.float32),
        )
        for p in tiny_manifest.pairs[:2]
    ]
    classes = [p.class_index for p in tiny_manifest.pairs[:2]]

    def grads_for(config):
        torch.manual_seed(0)
        gen = ReactionGenerator(skeleton, gen_hp)
        terms = generator_objective(gen, None, pairs, classes, skeleton, config)
        total = (
            terms["adv"]
            + config.lambda_b * terms["bone"]
            + config.lambda_c * terms["cont"]
            + config.lambda_1 * terms["l1"]
        )
        gs = torch.autograd.grad(total, list(gen.parameters()), allow_unused=True)
        return [torch.zeros(1) if g is None else g for g in gs]

    flagged = grads_for(_short_config(ablations=AblationFlags(no_bone_loss=True, no_continuity=True)))
    manual = grads_for(_short_config(lambda_b=0.0, lambda_c=0.0))
    for a, b in zip(flagged, manual):
        assert torch.equal(a, b)


def test_no_fc_and_no_label_flags_change_architecture(tiny_manifest):
    fold = (tuple(range(4)), ())
    cfg = _short_config(
        ablations=AblationFlags(no_fc_encoding=True, no_multi_hot=True), epochs=1
    )
    res = train(tiny_manifest, fold, cfg, TINY_GH, TINY_DH)
    assert not res.generator.hparams.use_fc_encoding
    assert not res.generator.hparams.use_label


def test_teacher_forcing_changes_training(tiny_manifest):
    fold = (tuple(range(4)), ())
    base = train(tiny_manifest, fold, _short_config(), TINY_GH, TINY_DH)
    forced = train(tiny_manifest, fold, _short_config(teacher_forcing=True), TINY_GH, TINY_DH)
    assert [r.l1 for r in base.reports] != [r.l1 for r in forced.reports]


def test_checkpoint_and_csv_outputs(tmp_path, tiny_manifest):
    fold = (tuple(range(4)), ())
    res = train(
        tiny_manifest, fold, _short_config(checkpoint_every=2), TINY_GH, TINY_DH,
        out_dir=tmp_path,
    )
    assert res.checkpoint_path == tmp_path / "checkpoint_final.pt"
    assert (tmp_path / "checkpoint_epoch00002.pt").exists()
    csv_path = tmp_path / "loss_reports.csv"
    header = csv_path.read_text().splitlines()[0].split(",")
    assert header == REPORT_COLUMNS
    assert len(csv_path.read_text().splitlines()) == 4  # header + 3 epochs


def test_divergence_aborts_with_snapshot(tmp_path, tiny_manifest, monkeypatch):
    import reactmix.training as training_module

    def poisoned(generated, truth, mask=None):
        return torch.tensor(float("nan"), requires_grad=True)

    monkeypatch.setattr(training_module, "loss_l1", poisoned)
    fold = (tuple(range(4)), ())
    with pytest.raises(TrainingDivergedError) as info:
        train(tiny_manifest, fold, _short_config(), TINY_GH, TINY_DH, out_dir=tmp_path)
    assert info.value.snapshot_path is not None
    assert info.value.snapshot_path.exists()


def test_config_yaml_round_trip(tmp_path):
    path = tmp_path / "train.yaml"
    path.write_text(
        "learning_rate: 0.005\nbatch_size: 4\nepochs: 12\nseed: 9\n"
        "ablations:\n  no_bone_loss: true\n"
    )
    cfg = load_training_config(path)
    assert cfg.learning_rate == 0.005
    assert cfg.batch_size == 4
    assert cfg.epochs == 12
    assert cfg.ablations.no_bone_loss is True
    assert cfg.lambda_b == 0.01  # untouched default


def test_config_yaml_rejects_unknown_keys(tmp_path):
    path = tmp_path / "train.yaml"
    path.write_text("learning_rte: 0.005\n")
    with pytest.raises(ValueError, match="learning_rte"):
        load_training_config(path)


def test_write_loss_reports(tmp_path):
    from reactmix.training import LossReport

    reports = [LossReport(1, 0.5, 0.1, 0.2, 0.01, 0.3, 0.91)]
    write_loss_reports(tmp_path / "r.csv", reports)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert lines[1].startswith("1,0.5,")
