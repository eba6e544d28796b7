"""Command-line surface: subcommands, exit codes, and round trips."""
import numpy as np
import pytest

from ctgsvm.cli import main
from ctgsvm.data import load_dataset
from ctgsvm.svm import load_model


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "small.csv"
    assert main(["synth", "--out", str(path), "--rows", "400"]) == 0
    return str(path)


class TestSynthCommand:
    def test_writes_full_table(self, tmp_path):
        out = tmp_path / "full.csv"
        assert main(["synth", "--out", str(out)]) == 0
        ds = load_dataset(out, class_column="NSP")
        assert ds.n_rows == 2126 and ds.n_features == 22


class TestSelectCommand:
    def test_ranker_writes_scores(self, small_csv, tmp_path):
        out = tmp_path / "sel.csv"
        assert main(["select", "--selector", "FS4", "--data", small_csv, "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("selector,n_features,search_value,features")
        assert "feature,method,score,rank" in text
        assert text.count("info_gain") >= 21

    def test_best_first_with_trace(self, small_csv, tmp_path):
        out = tmp_path / "sel.csv"
        trace = tmp_path / "trace.csv"
        code = main(
            ["select", "--selector", "FS1", "--search", "best_first",
             "--data", small_csv, "--out", str(out), "--trace", str(trace)]
        )
        assert code == 0
        assert trace.read_text().startswith("iteration,subset_hex,score")
        first = out.read_text().splitlines()[1]
        assert first.startswith("FS1-best_first,")
        assert int(first.split(",")[1]) >= 1

    def test_unknown_selector_is_data_error(self, small_csv, tmp_path):
        code = main(
            ["select", "--selector", "FS9", "--data", small_csv, "--out", str(tmp_path / "x.csv")]
        )
        assert code == 3

    def test_missing_required_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["select", "--data", "x.csv"])
        assert exc.value.code == 2


class TestTrainPredict:
    def test_round_trip_matches_in_memory(self, small_csv, tmp_path):
        model_path = tmp_path / "model.txt"
        assert main(
            ["train", "--data", small_csv, "--c", "10", "--degree", "3", "--out", str(model_path)]
        ) == 0
        preds_path = tmp_path / "preds.csv"
        assert main(
            ["predict", "--model", str(model_path), "--data", small_csv, "--out", str(preds_path)]
        ) == 0
        lines = preds_path.read_text().strip().splitlines()
        ds = load_dataset(small_csv, class_column="NSP")
        assert len(lines) == ds.n_rows + 1

        from ctgsvm.data import mask_by_names, select_features

        work = select_features(ds, mask_by_names(ds, drop=["CLASS"]))
        model = load_model(model_path)
        expect, _ = model.predict_dataset(work)
        got = [ln.split(",")[1] for ln in lines[1:]]
        assert got == expect

    def test_separable_training_recall(self, tmp_path):
        from ctgsvm.data import export_csv
        from conftest import numeric_dataset

        rng = np.random.default_rng(0)
        rows = np.vstack([rng.normal(0, 0.3, (20, 2)), rng.normal(6, 0.3, (20, 2))])
        ds = numeric_dataset(rows, ["a"] * 20 + ["b"] * 20)
        data = tmp_path / "toy.csv"
        export_csv(ds, data)
        model_path = tmp_path / "m.txt"
        preds = tmp_path / "p.csv"
        assert main(["train", "--data", str(data), "--class-column", "cls",
                     "--out", str(model_path)]) == 0
        assert main(["predict", "--model", str(model_path), "--data", str(data),
                     "--class-column", "cls", "--out", str(preds)]) == 0
        body = preds.read_text().strip().splitlines()[1:]
        assert all(ln.split(",")[1] == ln.split(",")[2] for ln in body)

    def test_feature_count_mismatch_is_data_error(self, small_csv, tmp_path):
        from ctgsvm.data import export_csv
        from conftest import numeric_dataset

        model_path = tmp_path / "model.txt"
        assert main(["train", "--data", small_csv, "--out", str(model_path)]) == 0
        narrow = tmp_path / "narrow.csv"
        export_csv(numeric_dataset([[1.0], [2.0]], ["a", "b"]), narrow)
        code = main(["predict", "--model", str(model_path), "--data", str(narrow),
                     "--class-column", "cls", "--out", str(tmp_path / "p.csv")])
        assert code == 3

    def test_version_mismatch_is_data_error(self, small_csv, tmp_path):
        model_path = tmp_path / "model.txt"
        assert main(["train", "--data", small_csv, "--out", str(model_path)]) == 0
        text = model_path.read_text().replace("ctgsvm-model 1", "ctgsvm-model 9", 1)
        model_path.write_text(text)
        code = main(["predict", "--model", str(model_path), "--data", small_csv,
                     "--out", str(tmp_path / "p.csv")])
        assert code == 3

    def test_bagged_train_and_predict(self, small_csv, tmp_path):
        model_path = tmp_path / "ens.txt"
        assert main(["train", "--data", small_csv, "--members", "3", "--c", "100",
                     "--degree", "2", "--out", str(model_path)]) == 0
        assert model_path.read_text().startswith("ctgsvm-ensemble 1")
        assert main(["predict", "--model", str(model_path), "--data", small_csv,
                     "--out", str(tmp_path / "p.csv")]) == 0


class TestExperimentCommand:
    def test_missing_data_is_data_error(self, tmp_path):
        code = main(["experiment", "--id", "exp1", "--data", str(tmp_path / "absent.csv"),
                     "--out", str(tmp_path)])
        assert code == 3

    def test_bad_id_is_usage_error(self, small_csv):
        with pytest.raises(SystemExit) as exc:
            main(["experiment", "--id", "exp9", "--data", small_csv])
        assert exc.value.code == 2

    def test_quick_exp1_writes_outputs(self, small_csv, tmp_path):
        out = tmp_path / "results"
        code = main(["experiment", "--id", "exp1", "--data", small_csv, "--quick",
                     "--out", str(out)])
        assert code in (0, 4)
        grid = out / "exp1_grid_seed42.csv"
        assert grid.is_file()
        lines = grid.read_text().strip().splitlines()
        assert len(lines) == 31  # header + 6 C values x 5 degrees
        assert (out / "exp1_timing_seed42.csv").is_file()
        assert (out / "exp1_confusion_seed42.csv").is_file()

    def test_env_var_sets_output_dir(self, small_csv, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("CTGSVM_OUT", str(target))
        code = main(["experiment", "--id", "exp5", "--data", small_csv, "--quick"])
        assert code in (0, 4)
        assert (target / "exp5_summary_seed42.csv").is_file()

    def test_config_file_plus_override(self, small_csv, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            f"data={small_csv}\nquick=true\nseed=7\nc_grid=10,100\ndegree_grid=2,3\n",
            encoding="utf-8",
        )
        out = tmp_path / "cfgout"
        code = main(["experiment", "--id", "exp1", "--config", str(cfgfile),
                     "--out", str(out), "--seed", "9"])
        assert code in (0, 4)
        grid = out / "exp1_grid_seed9.csv"  # CLI seed wins over the file
        assert grid.is_file()
        assert len(grid.read_text().strip().splitlines()) == 5

    def test_markdown_format_also_written(self, small_csv, tmp_path):
        out = tmp_path / "md"
        code = main(["experiment", "--id", "exp5", "--data", small_csv, "--quick",
                     "--format", "markdown", "--out", str(out)])
        assert code in (0, 4)
        assert (out / "exp5_summary_seed42.md").is_file()


class TestReportCommand:
    def test_markdown_rendering(self, small_csv, tmp_path, capsys):
        out = tmp_path / "results"
        main(["experiment", "--id", "exp5", "--data", small_csv, "--quick", "--out", str(out)])
        code = main(["report", "--in", str(out / "exp5_summary_seed42.csv")])
        assert code == 0
        top = capsys.readouterr().out.splitlines()[0]
        assert top.startswith("| experiment |")
