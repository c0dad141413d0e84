"""
命令行测试：直接调用 main(argv)，检查退出码和输出文件
"""
import json

import pytest

from cachepilot.errors import ExitCodes
from cachepilot.main import main
from cachepilot.workload import read_trace


class TestGenTrace:

    def test_writes_trace(self, tmp_path, capsys):
        code = main(["gen-trace", "--family", "zipf", "--param", "0.7", "--data-gb", "0.1", "--length", "5000",
                     "--seed", "3", "--out", str(tmp_path), "--csv"])
        assert code == ExitCodes.OK
        path = tmp_path / "tenant-1_zipf_0.7.cpt"
        trace = read_trace(path)
        assert len(trace) == 5000
        assert (tmp_path / "tenant-1_zipf_0.7.csv").exists()
        assert "✅" in capsys.readouterr().out

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a", "b"):
            main(["gen-trace", "--family", "uniform", "--data-gb", "0.1", "--length", "2000", "--seed", "8",
                  "--out", str(tmp_path / name)])
        a = (tmp_path / "a" / "tenant-1_uniform_0.0.cpt").read_bytes()
        b = (tmp_path / "b" / "tenant-1_uniform_0.0.cpt").read_bytes()
        assert a == b

    def test_unknown_family(self, tmp_path, capsys):
        code = main(["gen-trace", "--family", "pareto", "--out", str(tmp_path)])
        assert code == ExitCodes.USAGE
        assert "❌" in capsys.readouterr().out


class TestArguments:

    def test_missing_command(self):
        with pytest.raises(SystemExit):
            main([])

    def test_bad_choice(self):
        with pytest.raises(SystemExit):
            main(["gen-training", "--family", "pareto"])

    def test_workers_must_be_positive(self, tmp_path):
        code = main(["gen-trace", "--family", "uniform", "--workers", "0", "--out", str(tmp_path)])
        assert code == ExitCodes.USAGE

    def test_negative_seed_trace(self, tmp_path, capsys):
        code = main(["gen-trace", "--family", "uniform", "--data-gb", "0.1", "--length", "100", "--seed", "-1",
                     "--out", str(tmp_path)])
        assert code == ExitCodes.USAGE
        assert "--seed" in capsys.readouterr().out
        assert not any(tmp_path.iterdir())

    def test_negative_seed_training(self, tmp_path):
        code = main(["gen-training", "--family", "uniform", "--queries-per-point", "1000", "--seed", "-1",
                     "--out", str(tmp_path / "data")])
        assert code == ExitCodes.USAGE
        assert not (tmp_path / "data").exists()

    def test_bad_counts(self, tmp_path):
        code = main(["accuracy-study", "--counts", "100,abc", "--out", str(tmp_path)])
        assert code == ExitCodes.USAGE


class TestTrainingPipeline:

    def test_gen_training_then_train(self, tmp_path, capsys):
        data_dir = tmp_path / "data"
        code = main(["gen-training", "--family", "uniform", "--queries-per-point", "2000", "--seed", "1",
                     "--out", str(data_dir)])
        assert code == ExitCodes.OK
        train_csv = data_dir / "train_uniform.csv"
        assert train_csv.exists()
        assert main(["gen-training", "--family", "uniform", "--split", "test", "--queries-per-point", "2000",
                     "--seed", "2", "--out", str(data_dir)]) == ExitCodes.OK
        test_csv = data_dir / "test_uniform.csv"

        models_dir = tmp_path / "models"
        code = main(["train", "--family", "uniform", "--kind", "logfit", "--in", str(train_csv),
                     "--test-csv", str(test_csv), "--models", str(models_dir), "--out", str(tmp_path / "reports")])
        assert code == ExitCodes.OK
        assert (models_dir / "uniform.logfit.cpm").exists()
        assert (tmp_path / "reports" / "evaluation_uniform_logfit.csv").exists()
        assert "MSE" in capsys.readouterr().out

    def test_family_mismatch(self, tmp_path):
        data_dir = tmp_path / "data"
        main(["gen-training", "--family", "uniform", "--queries-per-point", "1000", "--out", str(data_dir)])
        code = main(["train", "--family", "zipf", "--kind", "logfit", "--in", str(data_dir / "train_uniform.csv"),
                     "--models", str(tmp_path / "models")])
        assert code == ExitCodes.USAGE

    def test_missing_training_file(self, tmp_path):
        code = main(["train", "--family", "zipf", "--kind", "logfit", "--in", str(tmp_path / "absent.csv")])
        assert code == ExitCodes.DATA


class TestRunAndReport:

    @pytest.fixture
    def scenario_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "name": "cli_single",
            "kind": "single_resize",
            "model_kind": "logfit",
            "queries": 20_000,
            "report_window": 1000,
            "sample_window": 2000,
            "warmup_exclusion": 2000,
            "run_oracle": False,
            "max_gb": 1.0,
            "tenants": [{"tenant_id": "t1", "data_gb": 0.5, "family": "uniform", "initial_alloc_gb": 0.1}],
        }), encoding="utf-8")
        return path

    def test_run_then_report(self, tmp_path, scenario_file, logfit_models_dir, capsys):
        out = tmp_path / "out"
        code = main(["run", "--scenario", str(scenario_file), "--models", str(logfit_models_dir),
                     "--out", str(out)])
        assert code == ExitCodes.OK
        assert (out / "summary.csv").exists()
        capsys.readouterr()

        code = main(["report", "--dir", str(out)])
        assert code == ExitCodes.OK
        text = capsys.readouterr().out
        assert "t1" in text
        assert (out / "figure_t1.csv").exists()

    def test_run_without_models(self, tmp_path, scenario_file):
        code = main(["run", "--scenario", str(scenario_file), "--models", str(tmp_path / "none"),
                     "--out", str(tmp_path / "out")])
        assert code == ExitCodes.DATA

    def test_missing_scenario_file(self, tmp_path):
        assert main(["run", "--scenario", str(tmp_path / "absent.json")]) == ExitCodes.DATA

    def test_report_missing_dir(self, tmp_path):
        assert main(["report", "--dir", str(tmp_path / "absent")]) == ExitCodes.DATA


def test_accuracy_study_command(tmp_path, capsys):
    code = main(["accuracy-study", "--counts", "100", "--trials", "2", "--seed", "4", "--out", str(tmp_path)])
    assert code == ExitCodes.OK
    assert (tmp_path / "accuracy.csv").exists()
    assert "样本数" in capsys.readouterr().out
