import json
import math

import pytest

from hermix.cli import main
from hermix.estimator import choose_ell
from hermix.mixture import model_from_dict, sample
from hermix.serialize import sha256_of_file

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _model_dict(r=40.0, half=0.25):
    """Two uniform mixing densities r apart, equal weights."""
    def comp(lo, hi):
        return {"interval": [lo, hi],
                "mixing": {"type": "piecewise",
                           "pieces": [[lo, hi, 1.0 / (hi - lo)]]}}
    return {"weights": [0.5, 0.5],
            "components": [comp(-half, half), comp(r - half, r + half)]}


def _close_model_dict():
    """Point masses only 20 apart: too close for the interval search."""
    def comp(c):
        return {"interval": [c - 0.25, c + 0.25],
                "mixing": {"type": "atoms",
                           "locations": [c], "masses": [1.0]}}
    return {"weights": [0.5, 0.5], "components": [comp(0.0), comp(20.0)]}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cliws")
    model = ws / "model.json"
    model.write_text(json.dumps(_model_dict()))
    samples = ws / "samples.csv"
    assert main(["--quiet", "sample", str(model), "4000", str(samples)]) == 0
    estimate = ws / "estimate.json"
    assert main(["--quiet", "estimate", str(samples), str(estimate),
                 "--intervals=-0.25,0.25;39.75,40.25", "--ell", "4"]) == 0
    return {"dir": ws, "model": model, "samples": samples,
            "estimate": estimate}


# ---------------------------------------------------------------------------
# sample


def test_sample_csv_and_manifest(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(_model_dict()))
    out = tmp_path / "s.csv"
    assert main(["sample", str(model), "100", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x"
    assert len(lines) == 101
    manifest = json.loads((tmp_path / "s.csv.manifest.json").read_text())
    assert manifest["command"] == "sample"
    assert manifest["seed"] == 0
    assert list(manifest["args"]) == sorted(manifest["args"])
    assert manifest["output_digests"][str(out)] == sha256_of_file(str(out))
    assert manifest["input_digests"][str(model)] == sha256_of_file(str(model))


def test_sample_reproducible_and_seed_sensitive(tmp_path):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(_model_dict()))
    out = tmp_path / "s.csv"
    assert main(["--quiet", "sample", str(model), "50", str(out)]) == 0
    first = out.read_bytes()
    first_manifest = (tmp_path / "s.csv.manifest.json").read_bytes()
    assert main(["--quiet", "sample", str(model), "50", str(out)]) == 0
    assert out.read_bytes() == first
    assert (tmp_path / "s.csv.manifest.json").read_bytes() == first_manifest
    assert main(["--quiet", "--seed", "1", "sample", str(model), "50",
                 str(out)]) == 0
    assert out.read_bytes() != first


def test_bad_model_schema_is_schema_error(tmp_path, capsys):
    bad = _model_dict()
    bad["weights"] = [0.5, 0.4]
    model = tmp_path / "model.json"
    model.write_text(json.dumps(bad))
    rc = main(["sample", str(model), "10", str(tmp_path / "s.csv")])
    assert rc == 2
    assert "weights" in capsys.readouterr().err


def test_missing_input_is_io_error(tmp_path):
    rc = main(["sample", str(tmp_path / "nope.json"), "10",
               str(tmp_path / "s.csv")])
    assert rc == 1


def test_quiet_suppresses_status(tmp_path, capsys):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(_model_dict()))
    assert main(["--quiet", "sample", str(model), "10",
                 str(tmp_path / "s.csv")]) == 0
    assert capsys.readouterr().out == ""


# ---------------------------------------------------------------------------
# estimate


def test_estimate_payload_schema(workspace):
    payload = json.loads(workspace["estimate"].read_text())
    assert sorted(payload) == ["centers", "ell", "intervals", "lambda_hat",
                               "lambda_hat_dec", "pdf_grid", "w_hat"]
    assert payload["ell"] == 4
    assert payload["intervals"] == [[-0.25, 0.25], [39.75, 40.25]]
    assert len(payload["lambda_hat"]) == 8
    assert abs(payload["w_hat"][0] - 0.5) < 0.05


def test_estimate_reproducible_bytes(workspace, tmp_path):
    out = tmp_path / "estimate.json"
    args = ["--quiet", "estimate", str(workspace["samples"]), str(out),
            "--intervals=-0.25,0.25;39.75,40.25", "--ell", "4"]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_estimate_requires_exactly_one_order_flag(workspace, tmp_path):
    out = str(tmp_path / "e.json")
    base = ["estimate", str(workspace["samples"]), out,
            "--intervals=-0.25,0.25;39.75,40.25"]
    assert main(base) == 2
    assert main(base + ["--ell", "4", "--epsilon", "0.1"]) == 2


def test_estimate_epsilon_selects_order(workspace, tmp_path):
    out = tmp_path / "e.json"
    assert main(["--quiet", "estimate", str(workspace["samples"]), str(out),
                 "--intervals=-0.25,0.25;39.75,40.25",
                 "--epsilon", "0.05"]) == 0
    payload = json.loads(out.read_text())
    assert payload["ell"] == choose_ell(0.05)


def test_estimate_rejects_overlapping_intervals(workspace, tmp_path):
    rc = main(["estimate", str(workspace["samples"]),
               str(tmp_path / "e.json"), "--intervals=0,1;0.5,2",
               "--ell", "4"])
    assert rc == 2


def test_estimate_auto_needs_search_flags(workspace, tmp_path):
    rc = main(["estimate", str(workspace["samples"]),
               str(tmp_path / "e.json"), "--intervals", "auto",
               "--ell", "4"])
    assert rc == 2


def test_estimate_auto_finds_intervals(workspace, tmp_path):
    out = tmp_path / "e.json"
    assert main(["--quiet", "estimate", str(workspace["samples"]), str(out),
                 "--intervals", "auto", "--w-min", "0.4", "--s-min", "0.25",
                 "--ell", "4"]) == 0
    payload = json.loads(out.read_text())
    search = payload["interval_search"]
    assert sorted(search) == ["i1", "i2", "q_points", "scale_index", "t"]
    i1, i2 = payload["intervals"]
    assert i1[0] < -0.25 < 0.25 < i1[1]
    assert i2[0] < 39.75 < 40.25 < i2[1]
    assert i1[1] < i2[0]


def test_singular_system_reports_remedy(tmp_path, capsys):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(_model_dict()))
    samples = tmp_path / "s.csv"
    assert main(["--quiet", "sample", str(model), "200", str(samples)]) == 0
    rc = main(["--precision-bits", "64", "estimate", str(samples),
               str(tmp_path / "e.json"),
               "--intervals=0,0.001;0.002,0.003", "--ell", "6"])
    assert rc == 4
    err = capsys.readouterr().err
    assert "--precision-bits" in err and "--ell" in err


# ---------------------------------------------------------------------------
# find-intervals


def test_find_intervals_json(workspace, tmp_path):
    out = tmp_path / "iv.json"
    args = ["--quiet", "find-intervals", str(workspace["samples"]), str(out),
            "--w-min", "0.4", "--s-min", "0.25"]
    assert main(args) == 0
    payload = json.loads(out.read_text())
    assert sorted(payload) == ["i1", "i2", "q_points", "scale_index", "t"]
    assert payload["i1"][1] < payload["i2"][0]
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_find_intervals_close_components_exit_3(tmp_path, capsys):
    model = tmp_path / "model.json"
    model.write_text(json.dumps(_close_model_dict()))
    samples = tmp_path / "s.csv"
    assert main(["--quiet", "sample", str(model), "100000", str(samples)]) == 0
    rc = main(["find-intervals", str(samples), str(tmp_path / "iv.json"),
               "--w-min", "0.4", "--s-min", "0.25"])
    assert rc == 3
    assert capsys.readouterr().err.startswith("error:")


# ---------------------------------------------------------------------------
# hard-instance / rates / distinguish / eval


def test_hard_instance_roundtrip(tmp_path):
    out = tmp_path / "hard.json"
    assert main(["--quiet", "hard-instance", "0.25", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["m"] == 4
    assert abs(payload["beta"] - 0.066962146) / 0.066962146 < 1e-6
    assert payload["beta_dec"].startswith("0.0669621464")
    assert abs(payload["c_plus"] - float(payload["c_plus_dec"])) < 1e-6
    model = model_from_dict(payload["f_prime"])
    xs = sample(model, 10, 3).values
    assert xs.shape == (10,)
    first = out.read_bytes()
    assert main(["--quiet", "hard-instance", "0.25", str(out)]) == 0
    assert out.read_bytes() == first


def test_rates_csv(tmp_path):
    out = tmp_path / "rates.csv"
    args = ["--quiet", "rates", "0.5,0.25", str(out)]
    assert main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ("delta,m,beta,c_plus,c_minus,balance_error,"
                        "l2_total,l2_comp,l1_total,l1_comp")
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[1] == "2"
    assert abs(float(row[2]) - 0.28918323) < 1e-6
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first
    assert main(["rates", "", str(out)]) == 2


def test_distinguish_prints_rate(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert main(["--quiet", "distinguish", "0.5", "1", "50",
                 "--out", str(out)]) == 0
    printed = float(capsys.readouterr().out.strip())
    assert 0.0 <= printed <= 1.0
    payload = json.loads(out.read_text())
    assert payload["success_rate"] == printed
    assert payload["trials"] == 50


def test_eval_reports_best_ordering(workspace, tmp_path, capsys):
    out = tmp_path / "eval.json"
    rc = main(["--quiet", "eval", str(workspace["model"]),
               str(workspace["estimate"]), "--out", str(out)])
    assert rc == 0
    final = capsys.readouterr().out.strip().splitlines()[-1].split()
    printed = [float(v) for v in final]
    payload = json.loads(out.read_text())
    assert sorted(payload) == ["l1", "l1_direct", "l1_swapped"]
    assert payload["l1"] == printed
    assert max(payload["l1"]) == min(max(payload["l1_direct"]),
                                     max(payload["l1_swapped"]))
    assert max(printed) < 0.5


# ---------------------------------------------------------------------------
# report


def test_report_from_rates_csv(tmp_path):
    rates = tmp_path / "rates.csv"
    assert main(["--quiet", "rates", "0.5,0.25,0.2", str(rates)]) == 0
    fig = tmp_path / "rates.png"
    assert main(["--quiet", "report", str(rates), str(fig)]) == 0
    assert fig.read_bytes()[:8] == PNG_MAGIC
    manifest = json.loads((tmp_path / "rates.png.manifest.json").read_text())
    assert manifest["command"] == "report"
    first = fig.read_bytes()
    assert main(["--quiet", "report", str(rates), str(fig)]) == 0
    assert fig.read_bytes() == first


def test_report_from_estimate_json(workspace, tmp_path):
    fig = tmp_path / "est.png"
    assert main(["--quiet", "report", str(workspace["estimate"]),
                 str(fig)]) == 0
    assert fig.read_bytes()[:8] == PNG_MAGIC


def test_report_rejects_unknown_kind(tmp_path):
    stray = tmp_path / "notes.txt"
    stray.write_text("hello")
    rc = main(["report", str(stray), str(tmp_path / "x.png")])
    assert rc == 2
