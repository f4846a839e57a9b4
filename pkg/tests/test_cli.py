import json

import numpy as np
import pytest

from qaead import cli, synth
from qaead import pipeline as pl


def write_config(tmp_path, csv_path, **kw):
    cfg = {
        "out": str(tmp_path / "runs"),
        "seed": 42,
        "model": {"kind": "qae", "qubits": 4, "layers": 6,
                  "measure_qubits": [0, 1], "hidden": [8, 4]},
        "train": {"epochs": 3, "batch_size": 8, "patience": 3},
        "eval": {"threshold_percentile": 99.0},
        "datasets": [{
            "name": "demo",
            "schema": "generic-csv",
            "window": 10,
            "stride": 5,
            "split_fraction": 0.5,
            "feature_columns": [0, 1, 2, 3, 4],
            "label_column": 5,
            "subsets": [{"name": "m1", "values": str(csv_path)}],
        }],
    }
    cfg.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def demo_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "series.csv"
    record = synth.machine_series(t_total=900, seed=3)
    synth.write_csv(record, path, header=False)
    return path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestPrepare:
    def test_prepare_writes_cache_and_manifest(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        assert run_cli("prepare", "--config", cfg) == 0
        cache = tmp_path / "runs" / "demo" / "m1" / "cache"
        manifest = json.loads((cache / "manifest.json").read_text())
        assert manifest["window"] == 10
        assert manifest["counts"]["train_windows_total"] == (450 - 10) // 5 + 1
        assert (cache / "train.wset").exists() and (cache / "test.wset").exists()
        train_w = pl.load_window_set(cache / "train.wset")
        assert not train_w.labels.any()

    def test_rerun_hits_cache(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        run_cli("prepare", "--config", cfg)
        cache = tmp_path / "runs" / "demo" / "m1" / "cache" / "train.wset"
        mtime = cache.stat().st_mtime_ns
        logs = []
        args = cli.build_parser().parse_args(["prepare", "--config", str(cfg)])
        cli.run_command(args, log=logs.append)
        assert cache.stat().st_mtime_ns == mtime
        assert any("cache hit" in m for m in logs)

    def test_missing_file_is_reported(self, tmp_path, capsys):
        cfg = write_config(tmp_path, tmp_path / "absent.csv")
        code = run_cli("prepare", "--config", cfg)
        assert code == 3
        assert "absent.csv" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run_cli("prepare", "--config", tmp_path / "no.json") == 2


@pytest.fixture(scope="module")
def trained(tmp_path_factory, demo_csv):
    tmp_path = tmp_path_factory.mktemp("run")
    cfg = write_config(tmp_path, demo_csv)
    assert run_cli("train", "--config", cfg) == 0
    assert run_cli("eval", "--config", cfg) == 0
    return tmp_path, cfg


class TestTrainEval:
    def test_model_artifacts(self, trained):
        tmp_path, _ = trained
        mdir = tmp_path / "runs" / "demo" / "m1" / "qae"
        for name in ("params.qad", "history.csv", "threshold.json",
                     "report.json", "report.csv", "violin.csv"):
            assert (mdir / name).exists(), name

    def test_report_schema(self, trained):
        tmp_path, _ = trained
        report = json.loads(
            (tmp_path / "runs" / "demo" / "m1" / "qae" / "report.json").read_text())
        metrics = report["metrics"]
        for key in ("auc", "precision", "recall", "f1", "accuracy",
                    "balanced_accuracy", "threshold", "counts"):
            assert key in metrics
        assert report["model"] == "qae"

    def test_eval_is_deterministic(self, trained):
        tmp_path, cfg = trained
        mdir = tmp_path / "runs" / "demo" / "m1" / "qae"
        before = (mdir / "report.json").read_bytes()
        assert run_cli("eval", "--config", cfg) == 0
        assert (mdir / "report.json").read_bytes() == before

    def test_plot_renders_svg(self, trained):
        tmp_path, cfg = trained
        assert run_cli("plot", "--config", cfg) == 0
        svg = (tmp_path / "runs" / "demo" / "m1" / "qae" / "violin.svg").read_text()
        assert svg.startswith("<svg") and "test-anomalous" in svg

    def test_ae_model_flag(self, trained):
        tmp_path, cfg = trained
        assert run_cli("train", "--config", cfg, "--model", "ae",
                       "--hidden", "8,4") == 0
        mdir = tmp_path / "runs" / "demo" / "m1" / "ae-8-4"
        assert (mdir / "params.qad").exists()

    def test_eval_without_model_fails_cleanly(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        run_cli("prepare", "--config", cfg)
        assert run_cli("eval", "--config", cfg) == 2


class TestZeroEpochOverride:
    def test_params_equal_initialization(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv,
                           train={"epochs": 0, "batch_size": 8, "patience": 1})
        assert run_cli("train", "--config", cfg) == 0
        from qaead import qae
        params, qcfg = qae.load_params(
            tmp_path / "runs" / "demo" / "m1" / "qae" / "params.qad")
        fresh = qae.init_params(qcfg)
        np.testing.assert_array_equal(params.weights, fresh.weights)
        np.testing.assert_array_equal(params.biases, fresh.biases)


class TestBenchmark:
    def test_grid_table_layout(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        assert run_cli("benchmark", "--config", cfg) == 0
        table = (tmp_path / "runs" / "demo" / "benchmark.csv").read_text().splitlines()
        assert table[0] == "model,metric,m1,mean"
        # 4 models x 6 metrics
        assert len(table) == 1 + 4 * 6
        models = {line.split(",")[0] for line in table[1:]}
        assert models == {"qae", "ae-3", "ae-16-8", "ae-256-128"}
        payload = json.loads((tmp_path / "runs" / "demo" / "benchmark.json").read_text())
        assert payload["failures"] == []

    def test_single_subset_mean_equals_value(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        run_cli("benchmark", "--config", cfg)
        for line in (tmp_path / "runs" / "demo" / "benchmark.csv")\
                .read_text().splitlines()[1:]:
            cells = line.split(",")
            assert cells[2] == cells[3]  # single subset: mean == value

    def test_failures_recorded_and_grid_continues(self, tmp_path, demo_csv, capsys):
        # second subset points at a missing file: its cells fail, m1 proceeds
        cfg_path = write_config(tmp_path, demo_csv)
        raw = json.loads(cfg_path.read_text())
        raw["datasets"][0]["subsets"].append(
            {"name": "broken", "values": str(tmp_path / "gone.csv")})
        cfg_path.write_text(json.dumps(raw))
        assert run_cli("benchmark", "--config", cfg_path) == 0
        payload = json.loads((tmp_path / "runs" / "demo" / "benchmark.json").read_text())
        assert any(f["subset"] == "broken" for f in payload["failures"])
        assert payload["models"]["qae"].get("m1") is not None


class TestConfigOverrides:
    def test_flag_overrides_win(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        args = cli.build_parser().parse_args(
            ["train", "--config", str(cfg), "--seed", "7",
             "--out", str(tmp_path / "other"), "--percentile", "95"])
        config = cli.load_run_config(args.config, overrides=args)
        assert config.seed == 7
        assert config.out == tmp_path / "other"
        assert config.percentile == 95.0

    def test_unknown_dataset_filter(self, tmp_path, demo_csv):
        cfg = write_config(tmp_path, demo_csv)
        assert run_cli("train", "--config", cfg, "--dataset", "nope") == 2


class TestFullScaleManifest:
    def test_machine_geometry_counts(self, tmp_path):
        csv_path = tmp_path / "machine.csv"
        synth.write_csv(synth.machine_series(), csv_path, header=False)
        cfg = write_config(tmp_path, csv_path)
        raw = json.loads(cfg.read_text())
        raw["datasets"][0].update({"window": 100, "stride": 50})
        cfg.write_text(json.dumps(raw))
        assert run_cli("prepare", "--config", cfg) == 0
        manifest = json.loads((tmp_path / "runs" / "demo" / "m1" / "cache"
                               / "manifest.json").read_text())
        assert manifest["counts"]["train_windows_total"] == 568
        assert manifest["counts"]["test_windows"] == 568


class TestNoAnomalyTestSet:
    def test_auc_undefined_but_run_continues(self, tmp_path):
        rng = np.random.default_rng(1)
        path = tmp_path / "clean.csv"
        with open(path, "w") as fh:
            for _ in range(400):
                row = ",".join(f"{v:.4f}" for v in rng.uniform(size=5))
                fh.write(row + ",0\n")
        cfg = write_config(tmp_path, path)
        assert run_cli("train", "--config", cfg) == 0
        assert run_cli("eval", "--config", cfg) == 0
        report = json.loads((tmp_path / "runs" / "demo" / "m1" / "qae"
                             / "report.json").read_text())
        assert report["metrics"]["auc"] is None
        csv_text = (tmp_path / "runs" / "demo" / "m1" / "qae"
                    / "report.csv").read_text()
        assert ",NA," in csv_text.splitlines()[1] + ","


class TestSchemas:
    def test_pasta_and_mscm_subsets(self, tmp_path):
        pasta = tmp_path / "pasta.csv"
        rng = np.random.default_rng(0)
        lines = ["QTY_1,QTY_2,PROMO_1,PROMO_2"]
        for t in range(240):
            promo = 1 if 200 <= t < 215 else 0
            lines.append(f"{rng.uniform():.4f},{rng.uniform():.4f},0,{promo}")
        pasta.write_text("\n".join(lines) + "\n")

        mscm = tmp_path / "mscm.csv"
        lines = ["timestamp,value,anomaly"]
        for t in range(240):
            anom = 1 if 210 <= t < 220 else 0
            value = rng.uniform() + (3.0 if anom else 0.0)
            lines.append(f"{t},{value:.4f},{anom}")
        mscm.write_text("\n".join(lines) + "\n")

        cfg = {
            "out": str(tmp_path / "runs"),
            "seed": 1,
            "model": {"kind": "qae", "qubits": 4, "layers": 4,
                      "measure_qubits": [0, 1]},
            "train": {"epochs": 2, "batch_size": 8, "patience": 2},
            "datasets": [
                {"name": "pasta", "schema": "pasta", "window": 10, "stride": 5,
                 "subsets": [{"name": "b1", "values": str(pasta)}]},
                {"name": "mscm", "schema": "mscm", "window": 10, "stride": 5,
                 "subsets": [{"name": "s1", "values": str(mscm)}]},
            ],
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli("prepare", "--config", cfg_path) == 0
        for ds in ("pasta", "mscm"):
            manifest = json.loads(
                (tmp_path / "runs" / ds / ("b1" if ds == "pasta" else "s1")
                 / "cache" / "manifest.json").read_text())
            assert manifest["counts"]["test_anomalous_windows"] > 0
