import csv
import math
import statistics

import numpy as np
import pytest

import liftpose as lp


def tiny(**overrides):
    cfg = lp.config(
        "desk",
        epochs=2,
        batch_size=16,
        architecture={
            "base_width": 24,
            "full_blocks": 2,
            "local_blocks": 1,
            "combiner_blocks": 1,
            "feature_width": 8,
            "disc_width": 16,
            "disc_blocks": 1,
            "dropout": 0.1,
        },
    )
    cfg.update(overrides)
    return cfg


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    lp.synthesize(root / "train.jsonl", 48, seed=1)
    lp.synthesize(root / "eval.jsonl", 16, seed=2)
    return root


def test_representations_share_a_parameter_budget():
    assert lp.representations() == ["full", "sr-lt", "ind-lt", "sr-5", "ind-5"]
    for profile in ("desk", "large"):
        counts = lp.parameter_counts(profile)
        for rep, n in counts.items():
            assert abs(n / counts["full"] - 1.0) <= 0.02, rep


def test_loss_and_metric_arithmetic():
    half = np.full((8, 1), 0.5)
    assert lp.lsgan_losses(half, half) == (0.25, 0.125)
    assert lp.total_generator_loss(0.2, 0.3, 0.5, 1.0, 2.0, 1.0) == pytest.approx(1.3)

    rng = np.random.default_rng(0)
    a, b = rng.uniform(-500, 500, (16, 3)), rng.uniform(-500, 500, (16, 3))
    assert lp.mpjpe(a, b) == pytest.approx(np.linalg.norm(a - b, axis=1).mean(), abs=1e-12)

    errors = rng.uniform(0, 250, (10, 16))
    pck, auc = lp.pck3d_auc(errors)
    assert pck == pytest.approx(100 * np.mean(errors <= 150), abs=1e-12)
    grid = np.arange(0, 151, 5)
    assert auc == pytest.approx(np.mean([np.mean(errors <= t) for t in grid]), abs=1e-12)


def test_alignment_recovers_a_similarity_transform():
    rng = np.random.default_rng(1)
    gt = rng.uniform(-500, 500, (16, 3))
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    moved = 2.5 * gt @ q.T + np.array([10.0, -40.0, 7.0])
    assert lp.mpjpe(lp.rigid_align(moved, gt), gt) < 1e-8


def test_rotations_and_quarter_turns():
    for r in lp.sample_rotations(200, seed=3):
        assert np.abs(r.T @ r - np.eye(3)).max() < 1e-9
        assert abs(np.linalg.det(r) - 1.0) < 1e-9
    pose = np.random.default_rng(4).uniform(-1, 1, (16, 3))
    projected = lp.project(lp.rotate_quarter_turns(pose, 1))
    assert np.array_equal(projected[:, 0], pose[:, 2])
    assert np.array_equal(projected[:, 1], pose[:, 1])


def test_normalization():
    raw = np.random.default_rng(5).uniform(-300, 300, (16, 2))
    coords, scale = lp.normalize_pose(raw)
    assert np.abs(coords).max() == pytest.approx(1.0)
    assert scale > 0
    with pytest.raises(lp.NormalizationError):
        lp.normalize_pose(np.zeros((16, 2)))


def test_train_evaluate_probe(corpus, tmp_path):
    run = lp.train_run(corpus / "train.jsonl", tiny(representation="ind-lt"), eval=corpus / "eval.jsonl",
                       out=tmp_path / "run")
    assert len(run["epochs"]) == 2
    assert all(math.isfinite(e["g_loss"]) and math.isfinite(e["eval_mpjpe"]) for e in run["epochs"])
    assert run["groups"] == ["legs", "torso"]

    lifter = lp.Lifter(tmp_path / "run" / "model.ckpt")
    assert lifter.representation == "ind-lt"
    poses = lp.load_poses(corpus / "eval.jsonl")
    depth = lifter.lift(poses["x"], poses["y"])
    assert depth.shape == (16, 16)
    report = lifter.evaluate(corpus / "eval.jsonl")
    assert report["count"] == 16
    assert report["mpjpe"] == pytest.approx(np.mean(report["per_pose"]))

    probe = lifter.probe(corpus / "eval.jsonl", max_poses=4, out=tmp_path / "probe")
    assert probe["values"].shape == (16, 201, 16)
    assert probe["cross_leg_torso"] == 0.0
    assert (tmp_path / "probe" / "sensitivity.csv").exists()


def test_same_seed_same_record(corpus):
    a = lp.train_run(corpus / "train.jsonl", tiny(seed=9))
    b = lp.train_run(corpus / "train.jsonl", tiny(seed=9))
    assert a == b


def read_rows(path):
    with open(path, newline="") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def test_stability_statistics_match_the_written_curves(corpus, tmp_path):
    out = tmp_path / "stability"
    summary = lp.stability_study(corpus / "train.jsonl", [0, 1, 2], tiny(epochs=4), eval=corpus / "eval.jsonl",
                                 window=(2, 4), out=out, jobs=1)

    curves = {}
    for row in read_rows(out / "stability_curves.csv"):
        curves.setdefault(int(row["seed"]), {})[int(row["epoch"])] = float(row["mpjpe"])
    assert sorted(curves) == [0, 1, 2]
    finals = [c[4] for c in curves.values()]
    mins = [min(c.values()) for c in curves.values()]
    per_epoch = [[c[e] for c in curves.values()] for e in range(2, 5)]
    expected = {
        "final": (statistics.mean(finals), statistics.stdev(finals)),
        "min": (statistics.mean(mins), statistics.stdev(mins)),
        "windowed": (statistics.mean(map(statistics.mean, per_epoch)),
                     statistics.mean(map(statistics.stdev, per_epoch))),
    }
    for key, (mean, std) in expected.items():
        assert summary[key]["mean"] == pytest.approx(mean, rel=1e-9)
        assert summary[key]["std"] == pytest.approx(std, rel=1e-9)

    written = {row["statistic"]: row for row in read_rows(out / "stability_summary.csv")}
    names = {"final": "final_epoch", "windowed": "window", "min": "min_epoch"}
    for key, (mean, std) in expected.items():
        assert float(written[names[key]]["mean"]) == pytest.approx(mean, rel=1e-9)
        assert float(written[names[key]]["std"]) == pytest.approx(std, rel=1e-9)
    assert (int(written["window"]["first_epoch"]), int(written["window"]["last_epoch"])) == (2, 4)


def test_errors_surface_as_python_exceptions(corpus, tmp_path):
    with pytest.raises(lp.ConfigError):
        lp.train_run(corpus / "train.jsonl", {"representation": "half"})
    with pytest.raises(lp.ConfigError):
        lp.config(no_such_option=1)
    with pytest.raises(lp.FormatError):
        lp.load_poses(tmp_path / "missing.jsonl")
    with pytest.raises(lp.ConfigError):
        lp.stability_study(corpus / "train.jsonl", [0], tiny())
    assert issubclass(lp.ConfigError, lp.LiftposeError)
