"""Harness behavior: synthetic generation, corruption semantics, metrics,
config parsing, dataset CSV round trips, and the command-line interface."""

import itertools
import subprocess
import sys

import numpy as np
import pytest

from evifuse.config import load_config, parse_config_text
from evifuse.data import (
    CorruptionSpec,
    MultiViewBatch,
    SyntheticConfig,
    corrupt,
    generate_synthetic,
    load_dataset_csv,
    save_dataset_csv,
)
from evifuse.errors import ConfigError
from evifuse.evidence import Opinion, ds_combine_multi
from evifuse.metrics import (
    MetricsReport,
    accuracy,
    clustering_accuracy,
    contingency,
    lloyd_clusters,
    macro_f1,
)
from evifuse.model import TrainConfig, predict, train


class TestSyntheticData:
    def test_determinism(self):
        cfg = SyntheticConfig(seed=5, n_train=100, n_test=50)
        a_train, a_test = generate_synthetic(cfg)
        b_train, b_test = generate_synthetic(cfg)
        for a, b in ((a_train, b_train), (a_test, b_test)):
            assert all(np.array_equal(x, y) for x, y in zip(a.views, b.views))
            assert np.array_equal(a.labels, b.labels)
            assert np.array_equal(a.mask, b.mask)

    def test_balanced_classes(self):
        cfg = SyntheticConfig(k=3, n_train=99, n_test=30, seed=0)
        train_b, test_b = generate_synthetic(cfg)
        assert np.bincount(train_b.labels).tolist() == [33, 33, 33]
        assert np.bincount(test_b.labels).tolist() == [10, 10, 10]

    def test_zero_separation_gives_chance_accuracy(self):
        cfg = SyntheticConfig(separation=0.0, n_train=600, n_test=300, seed=3)
        train_b, test_b = generate_synthetic(cfg)
        model, _ = train(train_b, TrainConfig(epochs=15, seed=3))
        acc = accuracy(predict(model, test_b).labels, test_b.labels)
        assert abs(acc - 1.0 / 3.0) <= 0.1

    def test_large_separation_is_linearly_separable(self):
        cfg = SyntheticConfig(separation=10.0, n_train=300, n_test=150, seed=1)
        train_b, test_b = generate_synthetic(cfg)
        model, _ = train(train_b, TrainConfig(epochs=15, seed=1, hidden=0))
        assert accuracy(predict(model, test_b).labels, test_b.labels) >= 0.99

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SyntheticConfig(k=1)
        with pytest.raises(ValueError):
            SyntheticConfig(dims=(8,))
        with pytest.raises(ValueError):
            SyntheticConfig(separation=-1.0)


class TestCorrupt:
    def test_noop_is_bitwise_identity(self):
        batch, _ = generate_synthetic(SyntheticConfig(seed=2, n_train=50, n_test=10))
        out = corrupt(batch, CorruptionSpec(), seed=0)
        assert all(np.array_equal(a, b) for a, b in zip(out.views, batch.views))
        assert np.array_equal(out.mask, batch.mask)

    def test_full_missing_rate_clears_target_view(self):
        batch, _ = generate_synthetic(SyntheticConfig(seed=2, n_train=50, n_test=10))
        out = corrupt(batch, CorruptionSpec(missing_rate=1.0, target_views=(1,)), 0)
        assert not out.mask[:, 1].any()
        assert out.mask[:, 0].all()

    def test_realized_missing_fraction(self):
        n = 10_000
        batch = MultiViewBatch(
            [np.zeros((n, 2)), np.zeros((n, 2))],
            np.zeros(n, dtype=int),
            np.ones((n, 2), dtype=bool),
        )
        eta = 0.3
        out = corrupt(batch, CorruptionSpec(missing_rate=eta, target_views=(0,)), 4)
        frac = 1.0 - out.mask[:, 0].mean()
        sd = np.sqrt(eta * (1 - eta) / n)
        assert abs(frac - eta) <= 3.0 * sd

    def test_noise_variance(self):
        n = 20_000
        batch = MultiViewBatch(
            [np.zeros((n, 4))], np.zeros(n, dtype=int), np.ones((n, 1), dtype=bool)
        )
        out = corrupt(batch, CorruptionSpec(noise_sigma2=0.03), 9)
        assert out.views[0].var() == pytest.approx(0.03, rel=0.05)
        assert abs(out.views[0].mean()) <= 0.01

    def test_untargeted_views_untouched(self):
        batch, _ = generate_synthetic(SyntheticConfig(seed=6, n_train=40, n_test=10))
        out = corrupt(batch, CorruptionSpec(noise_sigma2=0.5, target_views=(0,)), 1)
        assert np.array_equal(out.views[1], batch.views[1])
        assert not np.array_equal(out.views[0], batch.views[0])

    def test_bad_target_view(self):
        batch, _ = generate_synthetic(SyntheticConfig(seed=6, n_train=10, n_test=10))
        with pytest.raises(ValueError):
            corrupt(batch, CorruptionSpec(missing_rate=0.1, target_views=(5,)), 0)


class TestClassificationMetrics:
    def test_perfect_prediction(self):
        y = np.array([0, 1, 2, 1, 0])
        assert accuracy(y, y) == 1.0
        assert macro_f1(y, y) == 1.0

    def test_single_class_collapse(self):
        truth = np.array([0, 0, 1, 1])
        pred = np.zeros(4, dtype=int)
        assert accuracy(pred, truth) == 0.5
        assert macro_f1(pred, truth) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_empty_agreement(self):
        assert accuracy(np.array([1, 1]), np.array([0, 0])) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            accuracy(np.array([0]), np.array([0, 1]))


class TestClusteringAccuracy:
    def test_identity_and_permutation(self):
        truth = np.array([0, 1, 2, 0, 1, 2])
        assert clustering_accuracy(truth, truth, 3) == 1.0
        permuted = np.array([2, 0, 1, 2, 0, 1])
        assert clustering_accuracy(permuted, truth, 3) == 1.0

    def test_matches_factorial_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(40):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(10, 60))
            pred = rng.integers(0, k, n)
            truth = rng.integers(0, k, n)
            fast = clustering_accuracy(pred, truth, k)
            table = contingency(pred, truth, k)
            brute = max(
                sum(table[i, perm[i]] for i in range(k)) / n
                for perm in itertools.permutations(range(k))
            )
            assert fast == brute

    def test_relabeling_invariance_exact(self):
        rng = np.random.default_rng(8)
        pred = rng.integers(0, 4, 100)
        truth = rng.integers(0, 4, 100)
        base = clustering_accuracy(pred, truth, 4)
        perm = rng.permutation(4)
        assert clustering_accuracy(perm[pred], truth, 4) == base

    def test_k_bound(self):
        with pytest.raises(ValueError):
            clustering_accuracy(np.zeros(5, int), np.zeros(5, int), 21)

    def test_lloyd_trivial_and_deterministic(self):
        pts = np.random.default_rng(1).standard_normal((30, 2))
        assert np.array_equal(lloyd_clusters(pts, 1, 0), np.zeros(30, dtype=int))
        assert np.array_equal(lloyd_clusters(pts, 3, 5), lloyd_clusters(pts, 3, 5))


def test_metrics_report_rejects_out_of_range():
    with pytest.raises(ValueError):
        MetricsReport(accuracy=1.2, macro_f1=0.5, fused_accuracy=0.5)


class TestConfig:
    def test_parse_values(self):
        text = """
        # comment
        data.k = 4
        train.learning_rate = 1e-2   # trailing comment
        model.use_pseudo = false
        data.dims = 3, 5
        train.regularizer = kl
        """
        parsed = parse_config_text(text)
        assert parsed["data.k"] == 4
        assert parsed["train.learning_rate"] == 0.01
        assert parsed["model.use_pseudo"] is False
        assert parsed["data.dims"] == [3, 5]
        assert parsed["train.regularizer"] == "kl"

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("data.wat = 1\n")
        with pytest.raises(ConfigError, match="data.wat"):
            load_config(path)

    def test_invalid_value_names_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("holder.alpha_h = 0.5\n")
        with pytest.raises(ConfigError, match="holder.alpha_h"):
            load_config(path)

    def test_dims_must_match_views(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("data.views = 3\ndata.dims = 4, 4\n")
        with pytest.raises(ConfigError, match="data.dims"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_defaults_validate(self):
        cfg = load_config(None)
        assert cfg["data.k"] == 3

    def test_default_grid_axes(self):
        # the stock exponent/power grid is 6 x 6 = 36 cells
        cfg = load_config(None)
        assert cfg["grid.alpha_h"] == [1.1, 1.3, 1.5, 1.7, 2.0, 2.5]
        assert cfg["grid.gamma"] == [0.5, 0.8, 1.0, 1.3, 1.5, 2.0]

    def test_bundled_quickstart_config_parses(self):
        import pathlib

        bundled = pathlib.Path(__file__).resolve().parents[1] / "configs" / "quickstart.cfg"
        cfg = load_config(bundled)
        assert cfg["kalman.enabled"] is True
        assert cfg["data.n_train"] == 600


class TestDatasetCsv:
    def test_round_trip_with_missing_views(self, tmp_path):
        batch, _ = generate_synthetic(SyntheticConfig(seed=9, n_train=40, n_test=10))
        spec = CorruptionSpec(missing_rate=0.4, target_views=(1,))
        batch = corrupt(batch, spec, seed=2)
        path = tmp_path / "data.csv"
        save_dataset_csv(batch, path)
        loaded = load_dataset_csv(path)
        assert np.array_equal(loaded.labels, batch.labels)
        assert np.array_equal(loaded.mask, batch.mask)
        for m in range(batch.m):
            present = batch.mask[:, m]
            assert np.allclose(loaded.views[m][present], batch.views[m][present])

    def test_conflicting_labels_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("view,sample,label,f0\n0,0,1,0.5\n1,0,2,0.5\n")
        with pytest.raises(ValueError, match="conflicting"):
            load_dataset_csv(path)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n0,0,0\n")
        with pytest.raises(ValueError):
            load_dataset_csv(path)


def run_cli(*args):
    proc = subprocess.run(
        [sys.executable, "-m", "evifuse.cli", *args],
        capture_output=True,
        text=True,
        timeout=600,
    )
    return proc


class TestCli:
    def test_divergence_row(self):
        proc = run_cli(
            "--seed", "3", "divergence",
            "--p", "2,2", "--q", "3,1",
            "--alpha-h", "2.0", "--gamma", "1.0", "--n-samples", "20000",
        )
        assert proc.returncode == 0
        fields = proc.stdout.strip().split(",")
        assert len(fields) == 7
        closed, est, se = float(fields[4]), float(fields[5]), float(fields[6])
        assert abs(closed - est) <= max(4.0 * float(se), 5e-3)

    def test_divergence_bad_vector_exits_2(self):
        proc = run_cli("divergence", "--p", "2,zebra", "--q", "1,1")
        assert proc.returncode == 2

    def test_divergence_invalid_region_exits_3(self):
        proc = run_cli(
            "divergence", "--p", "0.2,2", "--q", "2,2", "--gamma", "2.0"
        )
        assert proc.returncode == 3

    def test_fuse_matches_library(self, tmp_path):
        ops = [
            Opinion(np.array([0.6, 0.2]), 0.2),
            Opinion(np.array([0.4, 0.4]), 0.2),
            Opinion(np.array([0.1, 0.3]), 0.6),
        ]
        path = tmp_path / "ops.csv"
        lines = ["b0,b1,u"]
        lines += [f"{o.beliefs[0]},{o.beliefs[1]},{o.uncertainty}" for o in ops]
        path.write_text("\n".join(lines) + "\n")
        proc = run_cli("fuse", str(path))
        assert proc.returncode == 0
        out_lines = proc.stdout.strip().splitlines()
        assert sum(1 for line in out_lines if line.startswith("step,")) == 2
        fused_line = [line for line in out_lines if line.startswith("fused,")][0]
        parts = fused_line.split(",")
        expected = ds_combine_multi(ops)
        assert float(parts[1]) == pytest.approx(expected.beliefs[0], abs=1e-12)
        assert float(parts[2]) == pytest.approx(expected.beliefs[1], abs=1e-12)
        assert float(parts[3]) == pytest.approx(expected.uncertainty, abs=1e-12)

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no.such.key = 1\n")
        proc = run_cli("--config", str(cfg), "quickstart")
        assert proc.returncode == 2

    def test_train_then_eval(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text(
            "data.n_train = 120\ndata.n_test = 60\ntrain.epochs = 5\nseed = 3\n"
        )
        out = tmp_path / "run"
        proc = run_cli("--config", str(cfg), "--out", str(out), "train")
        assert proc.returncode == 0, proc.stderr
        assert (out / "model.kphd").exists()
        assert (out / "trace.csv").exists()
        proc = run_cli(
            "--config", str(cfg), "--out", str(tmp_path / "eval"),
            "eval", "--model", str(out / "model.kphd"),
        )
        assert proc.returncode == 0, proc.stderr
        header = (tmp_path / "eval" / "metrics.csv").read_text().splitlines()[0]
        assert header.startswith("run_id,alpha_h,gamma,regularizer,sigma2,eta,acc_view_0")

    def test_grid_row_count(self, tmp_path):
        cfg = tmp_path / "grid.cfg"
        cfg.write_text(
            "data.n_train = 90\ndata.n_test = 30\ntrain.epochs = 2\n"
            "grid.alpha_h = 1.5, 2.0\ngrid.gamma = 0.5, 1.0\nseed = 1\n"
            "cluster.enabled = false\n"
        )
        out = tmp_path / "grid_out"
        proc = run_cli("--config", str(cfg), "--out", str(out), "grid")
        assert proc.returncode == 0, proc.stderr
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        assert len(lines) == 1 + 4
        assert [l.split(",")[0] for l in lines[1:]] == [
            f"grid-{i:03d}" for i in range(4)
        ]

    def test_ablation_rows(self, tmp_path):
        cfg = tmp_path / "ab.cfg"
        cfg.write_text(
            "data.n_train = 90\ndata.n_test = 30\ntrain.epochs = 2\nseed = 1\n"
            "cluster.enabled = false\n"
        )
        out = tmp_path / "ab_out"
        proc = run_cli("--config", str(cfg), "--out", str(out), "ablate")
        assert proc.returncode == 0, proc.stderr
        lines = (out / "metrics.csv").read_text().strip().splitlines()
        regs = [l.split(",")[3] for l in lines[1:]]
        assert regs == ["kl", "holder", "holder_dir"]

    def test_rates_in_unit_interval(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text(
            "data.n_train = 120\ndata.n_test = 60\ntrain.epochs = 4\nseed = 2\n"
        )
        out = tmp_path / "rates"
        proc = run_cli("--config", str(cfg), "--out", str(out), "quickstart")
        assert proc.returncode == 0, proc.stderr
        header, row = (out / "metrics.csv").read_text().strip().splitlines()
        cols = header.split(",")
        vals = row.split(",")
        for name, val in zip(cols, vals):
            if name.startswith(("acc_", "f1_", "ca", "mean_u_")) and val:
                assert 0.0 <= float(val) <= 1.0
