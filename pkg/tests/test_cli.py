import csv
import json

import numpy as np
import pytest

from gpreg import Design, TrainingData, fixed_model
from gpreg.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_NUMERICAL, main, read_matrix
from helpers import dense_predict, gauss_corr, near_singular_instance, series_inverse


def write_csv(path, rows, header=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(header)
        w.writerows(rows)
    return str(path)


def read_out(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# gpreg ")
    meta = json.loads(lines[0][len("# gpreg "):])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], rows[1:]


@pytest.fixture
def toy(tmp_path):
    x = [[0.0], [0.5], [1.0]]
    y = [[1.0], [2.5], [2.0]]
    return write_csv(tmp_path / "design.csv", x, ["x1"]), write_csv(tmp_path / "resp.csv", y, ["y"])


def save_model(tmp_path, model, name="model.json"):
    path = tmp_path / name
    path.write_text(model.to_json())
    return str(path)


class TestReadMatrix:
    def test_comments_header_blank(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("# comment\nx1,x2\n\n0.1,0.2\n0.3,0.4\n")
        assert read_matrix(p).tolist() == [[0.1, 0.2], [0.3, 0.4]]

    def test_bad_value_names_line(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("x1,x2\n0.1,0.2\n0.3,abc\n")
        with pytest.raises(Exception, match="line 3"):
            read_matrix(p)

    def test_ragged_names_line(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("0.1,0.2\n0.3\n")
        with pytest.raises(Exception, match="line 2"):
            read_matrix(p)


class TestFit:
    def test_toy_fit(self, tmp_path, toy):
        out = tmp_path / "model.json"
        assert main(["fit", *toy, "-o", str(out), "--restarts", "2", "--m-max", "3"]) == 0
        doc = json.loads(out.read_text())
        assert doc["format"] == "gpreg-model/1"
        assert doc["delta"] == 0.0
        assert doc["report"]["xi0"][0]["xi0"] <= -12
        assert [r["M"] for r in doc["report"]["xi0"]] == [1, 2, 3]
        meta = doc["meta"]
        assert meta["version"] and meta["seed"] == 0 and meta["config"]["threshold_a"] == 25
        assert set(meta["inputs"]) == {"design.csv", "resp.csv"}

    def test_rerun_is_byte_identical(self, tmp_path, toy):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["fit", *toy, "-o", str(a), "--restarts", "2", "--seed", "7"])
        # same resolved config, including the output name, reproduces the file exactly
        first = a.read_bytes()
        main(["fit", *toy, "-o", str(a), "--restarts", "2", "--seed", "7"])
        assert a.read_bytes() == first
        main(["fit", *toy, "-o", str(b), "--restarts", "2", "--seed", "7"])
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        for doc in (da, db):
            doc["meta"]["config"].pop("output")
        assert da == db

    def test_popular_flag(self, tmp_path, toy):
        out = tmp_path / "pop.json"
        assert main(["fit", *toy, "-o", str(out), "--popular", "--delta-floor", "1e-5", "--restarts", "2"]) == 0
        doc = json.loads(out.read_text())
        assert doc["method"] == "popular" and doc["report"]["variant"] == "popular"
        assert doc["delta"] >= 1e-5 * (1 - 1e-12)
        assert doc["meta"]["config"]["delta_floor"] == 1e-5

    def test_duplicate_rows_named(self, tmp_path, capsys):
        d = write_csv(tmp_path / "d.csv", [[0.1, 0.2], [0.4, 0.4], [0.1, 0.2]])
        r = write_csv(tmp_path / "r.csv", [[1.0], [2.0], [3.0]])
        assert main(["fit", d, r, "-o", str(tmp_path / "m.json")]) == EXIT_INPUT
        assert "1,3" in capsys.readouterr().err

    def test_malformed_csv_line_number(self, tmp_path, capsys):
        d = tmp_path / "d.csv"
        d.write_text("0.1\n0.2\nnope\n")
        r = write_csv(tmp_path / "r.csv", [[1.0], [2.0], [3.0]])
        assert main(["fit", str(d), r]) == EXIT_INPUT
        assert "line 3" in capsys.readouterr().err

    def test_row_mismatch(self, tmp_path):
        d = write_csv(tmp_path / "d.csv", [[0.1], [0.2]])
        r = write_csv(tmp_path / "r.csv", [[1.0]])
        assert main(["fit", d, r]) == EXIT_INPUT

    def test_out_of_cube_needs_rescale(self, tmp_path, capsys):
        d = write_csv(tmp_path / "d.csv", [[10.0], [15.0], [20.0], [30.0]])
        r = write_csv(tmp_path / "r.csv", [[1.0], [2.0], [1.5], [0.0]])
        assert main(["fit", d, r, "-o", str(tmp_path / "m.json")]) == EXIT_INPUT
        assert "--rescale" in capsys.readouterr().err
        out = tmp_path / "m.json"
        assert main(["fit", d, r, "-o", str(out), "--rescale", "--restarts", "2"]) == 0
        doc = json.loads(out.read_text())
        assert doc["rescale"] == {"lower": [10.0], "upper": [30.0]}
        # predicting in original units maps back through the stored box
        q = write_csv(tmp_path / "q.csv", [[15.0], [30.0]])
        pred = tmp_path / "p.csv"
        assert main(["predict", str(out), q, "-o", str(pred)]) == 0
        _, header, rows = read_out(pred)
        assert [float(r[0]) for r in rows] == [15.0, 30.0]
        assert float(rows[0][1]) == pytest.approx(2.0, abs=1e-8)

    def test_all_restarts_fail_exit_code(self, tmp_path, toy, monkeypatch):
        import gpreg.gp as gp
        monkeypatch.setattr(gp, "_evaluate", lambda *a, **k: gp._failed())
        with pytest.warns(RuntimeWarning):
            code = main(["fit", *toy, "-o", str(tmp_path / "m.json"), "--restarts", "2"])
        assert code == EXIT_NUMERICAL

    def test_missing_file(self, tmp_path):
        assert main(["fit", str(tmp_path / "nope.csv"), str(tmp_path / "nope2.csv")]) == EXIT_INPUT


class TestPredict:
    def test_constant_model(self, tmp_path):
        X = np.linspace(0, 1, 4)[:, None]
        model = fixed_model(TrainingData(Design(X), np.full(4, 7.0)), [3.0])
        q = write_csv(tmp_path / "q.csv", [[0.1], [0.95]])
        out = tmp_path / "p.csv"
        assert main(["predict", save_model(tmp_path, model), q, "-o", str(out), "--m", "3"]) == 0
        meta, header, rows = read_out(out)
        assert header == ["x1", "mean", "mse", "variant", "M"]
        assert [float(r[1]) for r in rows] == pytest.approx([7.0, 7.0], rel=1e-12)
        assert rows[0][3] == "exact" and rows[0][4] == "3"
        assert meta["command"] == "predict" and "model.json" in meta["inputs"]

    def test_training_sites_interpolated(self, tmp_path):
        X = np.array([[0.1], [0.4], [0.7], [0.9]])
        y = np.array([1.0, -2.0, 0.5, 3.0])
        model = fixed_model(TrainingData(Design(X), y), [20.0])
        q = write_csv(tmp_path / "q.csv", X.tolist())
        out = tmp_path / "p.csv"
        main(["predict", save_model(tmp_path, model), q, "-o", str(out)])
        _, _, rows = read_out(out)
        assert np.allclose([float(r[1]) for r in rows], y, rtol=1e-10)
        assert all(float(r[2]) <= 1e-8 * model.sigma2_hat for r in rows)

    def test_dense_oracle(self, tmp_path):
        X = np.array([[0.0], [0.4], [1.0]])
        y = np.array([1.0, -0.5, 2.0])
        model = fixed_model(TrainingData(Design(X), y), [2.0], delta=0.1)
        xs = np.array([[0.2], [0.75]])
        q = write_csv(tmp_path / "q.csv", xs.tolist())
        out = tmp_path / "p.csv"
        main(["predict", save_model(tmp_path, model), q, "-o", str(out), "--m", "3"])
        _, _, rows = read_out(out)
        mean, mse = dense_predict(X, y, 2.0, xs, series_inverse(gauss_corr(X, X, 2.0), 0.1, 3),
                                  sigma2=model.sigma2_hat)
        assert np.allclose([float(r[1]) for r in rows], mean, rtol=1e-12)
        assert np.allclose([float(r[2]) for r in rows], mse, rtol=1e-10)

    def test_wrong_query_width(self, tmp_path):
        model = fixed_model(TrainingData(Design([[0.1], [0.9]]), [1.0, 2.0]), [1.0])
        q = write_csv(tmp_path / "q.csv", [[0.1, 0.2]])
        assert main(["predict", save_model(tmp_path, model), q]) == EXIT_INPUT

    def test_bad_model_file(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{not json")
        q = write_csv(tmp_path / "q.csv", [[0.1]])
        assert main(["predict", str(p), q]) == EXIT_INPUT


class TestDiagnose:
    def test_exact_model_single_row(self, tmp_path):
        # far-apart sites with a huge theta give R = I and exact interpolation
        model = fixed_model(TrainingData(Design([[0.0], [1.0]]), [1.0, 3.0]), [1000.0])
        assert model.delta == 0.0
        out = tmp_path / "diag.csv"
        assert main(["diagnose", save_model(tmp_path, model), "-o", str(out)]) == 0
        text = out.read_text().splitlines()
        # golden schema: meta line, header, one row
        assert text[1:] == ["k,xi0,xi", "1,-16.0,-16.0"]
        meta, _, _ = read_out(out)
        assert meta["stop_order"] == 1 and meta["converged"] is True

    def test_near_singular_columns(self, tmp_path):
        X, y = near_singular_instance()
        model = fixed_model(TrainingData(Design(X), y), [1.0])
        out = tmp_path / "diag.csv"
        assert main(["diagnose", save_model(tmp_path, model), "-o", str(out), "--m-max", "6"]) == 0
        _, header, rows = read_out(out)
        assert header == ["k", "xi0", "xi"] and len(rows) == 6
        assert rows[0][2] == "nan"
        xi0 = [float(r[1]) for r in rows]
        assert all(b <= a + 1e-9 for a, b in zip(xi0, xi0[1:]))
        xi = [float(r[2]) for r in rows[1:]]
        assert xi[-1] < xi[0]

    def test_strict_not_converged(self, tmp_path, capsys):
        X, y = near_singular_instance()
        model = fixed_model(TrainingData(Design(X), y), [1.0])
        path = save_model(tmp_path, model)
        args = ["diagnose", path, "-o", str(tmp_path / "d.csv"), "--m-max", "3", "--tol-xi", "-15"]
        assert main(args) == 0
        assert main(args + ["--strict"]) == EXIT_NOT_CONVERGED


class TestCalibrate:
    def test_writes_table(self, tmp_path):
        out = tmp_path / "cal.csv"
        args = ["calibrate", "--grid", "5x2,8x1", "--reps", "10", "--seed", "3", "-o", str(out)]
        assert main(args) == 0
        meta, header, rows = read_out(out)
        assert header == ["n", "d", "prop_singular", "mean_log_kappa"]
        assert [r[:2] for r in rows] == [["5", "2"], ["8", "1"]]
        assert meta["seed"] == 3 and meta["reps"] == 10 and "log-uniform" in meta["theta_sampling"]
        first = out.read_bytes()
        main(args)
        assert out.read_bytes() == first

    def test_seed_required(self):
        with pytest.raises(SystemExit):
            main(["calibrate", "--grid", "5x2"])

    def test_bad_grid(self, tmp_path):
        assert main(["calibrate", "--grid", "5by2", "--seed", "1", "-o", str(tmp_path / "c.csv")]) == EXIT_INPUT


class TestBench:
    def test_campaign_outputs(self, tmp_path):
        args = ["bench", "--func", "perm", "--n", "8", "--method", "lb_M1,lb_M5", "--method", "popular_1e5",
                "--reps", "2", "--seed", "4", "--restarts", "2", "--beta", "1.0", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        doc = json.loads((tmp_path / "report.json").read_text())
        assert set(doc["reports"]) == {"lb_M1", "lb_M5", "popular_1e5"}
        assert doc["reports"]["lb_M1"]["params"] == {"beta": 1.0}
        assert len(doc["reports"]["lb_M1"]["xi0_values"]) == 2
        meta, header, rows = read_out(tmp_path / "summary.csv")
        assert header[:3] == ["func", "n", "method"] and [r[2] for r in rows] == ["lb_M1", "lb_M5", "popular_1e5"]
        first = (tmp_path / "summary.csv").read_bytes()
        main(args)
        assert (tmp_path / "summary.csv").read_bytes() == first

    def test_unknown_method(self, tmp_path):
        args = ["bench", "--func", "perm", "--n", "8", "--method", "lb_M7", "--reps", "1", "--seed", "0",
                "--out-dir", str(tmp_path)]
        assert main(args) == EXIT_INPUT
