import os

import numpy as np
import pytest

from qcbnn import cli
from qcbnn.circuits import Architecture
from qcbnn.config import ConfigError, RunConfig, apply_settings, format_config, parse_config
from qcbnn.experiment import run_report, run_toy_adversarial, run_train
from qcbnn.training import DivergenceError

TINY = [
    "--sampler", "classical", "--seed", "0,1", "--epochs", "2",
    "--set", "synth_samples=30", "--set", "n_ensemble=8",
    "--set", "eval_ensemble=4", "--set", "batch_size=7",
    "--set", "split_fractions=0.7,0.3",
]


class TestParseConfig:
    def test_empty_gives_defaults(self):
        config = parse_config("")
        assert config == RunConfig()

    def test_arch_key(self):
        config = parse_config("arch = circuit_iii\n")
        assert config.archs == [Architecture.CIRCUIT_III]

    def test_unknown_arch_lists_valid(self):
        with pytest.raises(ConfigError, match="matic_i"):
            parse_config("arch = circuit_v\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key 'learning'"):
            parse_config("learning = fast\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="bad value for epochs"):
            parse_config("epochs = many\n")

    def test_conflicting_sweep_lengths(self):
        with pytest.raises(ConfigError, match="conflicting sweep lengths"):
            parse_config("layers = 1,2\nreupload = false\n")

    def test_sections_and_comments_ignored(self):
        text = "# header\n[train]\nepochs = 3  # trailing\n\n[data]\nseed = 5,6\n"
        config = parse_config(text)
        assert config.epochs == 3 and config.seeds == [5, 6]

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config("epochs 3\n")

    def test_echo_round_trips(self):
        config = apply_settings(RunConfig(), {"arch": "matic_ii,romero",
                                              "seeds": "4,5",
                                              "alpha": "0.5"})
        assert parse_config(format_config(config)) == config

    def test_flag_aliases(self):
        config = apply_settings(RunConfig(), {"ensemble": "17", "layers": "2",
                                              "reupload": "true"})
        assert config.n_ensemble == 17
        assert config.layers_list == [2] and config.reupload_list == [True]


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    code = cli.main(["train"] + TINY + ["--out", str(out), "--quiet"])
    assert code == cli.EXIT_OK
    return str(out)


class TestTrainCommand:
    def test_artifacts_exist(self, tiny_run):
        assert os.path.exists(os.path.join(tiny_run, "config_echo.cfg"))
        assert os.path.exists(os.path.join(tiny_run, "summary.csv"))
        for seed in (0, 1):
            run_dir = os.path.join(tiny_run, "classical", f"seed{seed}")
            for name in ("epochs.csv", "checkpoint.qckpt", "eval_test.csv",
                         "weight_samples.csv", "config.cfg"):
                assert os.path.exists(os.path.join(run_dir, name)), name

    def test_epoch_csv_schema(self, tiny_run):
        path = os.path.join(tiny_run, "classical", "seed0", "epochs.csv")
        header = open(path).readline().strip()
        assert header == "epoch,split,likelihood,kl,disc,combined,accuracy"

    def test_rerun_is_byte_identical(self, tiny_run, tmp_path):
        second = tmp_path / "again"
        assert cli.main(["train"] + TINY + ["--out", str(second), "--quiet"]) == 0
        for rel in ("summary.csv", "classical/seed0/epochs.csv",
                    "classical/seed1/eval_test.csv",
                    "classical/seed0/weight_samples.csv"):
            a = open(os.path.join(tiny_run, rel), "rb").read()
            b = open(os.path.join(second, rel), "rb").read()
            assert a == b, rel

    def test_env_out_override(self, tmp_path, monkeypatch):
        target = tmp_path / "env_out"
        monkeypatch.setenv("QBNN_OUT", str(target))
        assert cli.main(["train"] + TINY + ["--quiet"]) == 0
        assert target.exists() and (target / "summary.csv").exists()

    def test_config_error_exit_code(self, capsys):
        assert cli.main(["train", "--arch", "circuit_v"]) == cli.EXIT_CONFIG
        assert "valid" in capsys.readouterr().err

    def test_divergence_exit_code(self, monkeypatch, tmp_path):
        def explode(*args, **kwargs):
            raise DivergenceError("non-finite training loss")

        monkeypatch.setattr("qcbnn.experiment.train_model", explode)
        code = cli.main(["train"] + TINY + ["--out", str(tmp_path / "x"), "--quiet"])
        assert code == cli.EXIT_DIVERGENCE

    def test_unknown_set_key(self, capsys):
        assert cli.main(["train", "--set", "warp=9"]) == cli.EXIT_CONFIG


class TestSweeps:
    def test_all_architecture_sweep_summarizes_each(self, tmp_path):
        out = tmp_path / "archsweep"
        archs = ",".join(a.value for a in Architecture)
        code = cli.main([
            "train", "--arch", archs, "--seed", "0", "--epochs", "1",
            "--set", "synth_samples=24", "--set", "n_ensemble=4",
            "--set", "eval_ensemble=2", "--set", "batch_size=8",
            "--set", "split_fractions=0.7,0.3", "--out", str(out), "--quiet",
        ])
        assert code == 0
        summary = open(out / "summary.csv").read()
        labels = {line.split(",")[0] for line in summary.splitlines()[1:]}
        assert labels == {f"{a.value}_L1" for a in Architecture}

    def test_depth_sweep_report_compares_layer_counts(self, tmp_path):
        out = tmp_path / "depthsweep"
        code = cli.main([
            "train", "--arch", "circuit_iii", "--seed", "0",
            "--layers", "1,2", "--reupload", "false,false", "--epochs", "1",
            "--set", "synth_samples=24", "--set", "n_ensemble=4",
            "--set", "eval_ensemble=2", "--set", "batch_size=8",
            "--set", "split_fractions=0.7,0.3", "--out", str(out), "--quiet",
        ])
        assert code == 0
        assert cli.main(["report", str(out), "--no-svg"]) == 0
        curves = open(out / "figures" / "train_curves.csv").read()
        assert "circuit_iii_L1" in curves and "circuit_iii_L2" in curves


class TestEvaluateCommand:
    def test_evaluate_stored_run(self, tiny_run, tmp_path):
        run_dir = os.path.join(tiny_run, "classical", "seed0")
        out_csv = tmp_path / "eval.csv"
        code = cli.main(["evaluate", run_dir, "--split", "test",
                         "--ensemble", "5", "--out-csv", str(out_csv)])
        assert code == 0
        text = out_csv.read_text()
        assert text.startswith("metric,subset,value")
        assert "accuracy,all," in text

    def test_missing_run_dir(self, tmp_path, capsys):
        assert cli.main(["evaluate", str(tmp_path / "nope")]) == cli.EXIT_CONFIG


class TestSampleWeightsCommand:
    def test_fresh_model_dump(self, tmp_path):
        out_csv = tmp_path / "ws.csv"
        code = cli.main(["sample-weights", "--arch", "circuit_iii", "--seed", "4",
                         "--draws", "3", "--out-csv", str(out_csv)])
        assert code == 0
        lines = out_csv.read_text().strip().splitlines()
        assert lines[0] == "pass_index,qubit,value"
        assert len(lines) == 1 + 3 * 16 * 4

    def test_from_stored_run(self, tiny_run, tmp_path):
        run_dir = os.path.join(tiny_run, "classical", "seed1")
        out_csv = tmp_path / "ws2.csv"
        code = cli.main(["sample-weights", "--run-dir", run_dir, "--draws", "2",
                         "--out-csv", str(out_csv)])
        assert code == 0 and out_csv.exists()


class TestToyAdversarialCommand:
    def test_short_run_writes_trace(self, tmp_path, capsys):
        code = cli.main(["toy-adversarial", "--steps", "40", "--seed", "1",
                         "--out", str(tmp_path / "toy")])
        assert code == 0
        assert "final KS statistic" in capsys.readouterr().out
        assert (tmp_path / "toy" / "toy_trace.csv").exists()
        assert (tmp_path / "toy" / "toy_samples.csv").exists()


class TestReportCommand:
    def test_full_report(self, tiny_run):
        assert cli.main(["report", tiny_run]) == 0
        fig_dir = os.path.join(tiny_run, "figures")
        for name in ("train_curves.csv", "test_scores.csv", "weight_kde.csv",
                     "difference_scatter.csv", "calibration.csv",
                     "confidence_error_density.csv"):
            assert os.path.exists(os.path.join(fig_dir, name)), name
        for name in ("train_curves.svg", "weight_kde.svg"):
            path = os.path.join(fig_dir, name)
            assert open(path).readline().startswith("<svg")

    def test_missing_inputs_named(self, tiny_run, tmp_path, capsys):
        import shutil

        partial = tmp_path / "partial"
        shutil.copytree(tiny_run, partial)
        shutil.rmtree(partial / "figures", ignore_errors=True)
        for seed in (0, 1):
            os.remove(partial / "classical" / f"seed{seed}" / "eval_test.csv")
        assert cli.main(["report", str(partial)]) == 0
        out = capsys.readouterr().out
        assert "eval_test.csv" in out and "calibration figure skipped" in out

    def test_empty_dir_is_config_error(self, tmp_path):
        assert cli.main(["report", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_report_is_pure_function_of_results(self, tiny_run, tmp_path):
        import shutil

        copy_a = tmp_path / "a"
        shutil.copytree(tiny_run, copy_a)
        shutil.rmtree(copy_a / "figures")
        assert cli.main(["report", str(copy_a)]) == 0
        for name in ("train_curves.csv", "weight_kde.csv", "test_scores.csv"):
            a = open(os.path.join(tiny_run, "figures", name), "rb").read()
            b = open(copy_a / "figures" / name, "rb").read()
            assert a == b
