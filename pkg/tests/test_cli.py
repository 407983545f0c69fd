import json
import math
import os

import numpy as np
import pytest

from bdspec import (
    DiscreteMeasure,
    dn_spectral_measure,
    make_context,
    measure_stieltjes,
)
from bdspec.cli import compile_rate_expr, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestExpressions:
    def test_arithmetic(self):
        f = compile_rate_expr("2*n^2 + 3*n - 1")
        assert f(3) == 2 * 9 + 9 - 1

    def test_comparison_indicator(self):
        f = compile_rate_expr("1*(n>0)")
        assert f(0) == 0.0
        assert f(5) == 1.0

    def test_nested(self):
        f = compile_rate_expr("(n+1)^2 / (2*(n+2))")
        assert f(2) == pytest.approx(9 / 8)

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            compile_rate_expr("n +")
        with pytest.raises(ValueError):
            compile_rate_expr("import os")


class TestClassifyCommand:
    def test_quartic(self, capsys):
        code, out, _ = run_cli(
            capsys, "classify", "--family", "quartic", "--c", "0", "--mu", "0"
        )
        assert code == 0
        rep = json.loads(out)
        assert rep["outputs"]["verdict"] == "INDET_S_INDET_H"

    def test_stieltjes_dn(self, capsys):
        code, out, _ = run_cli(capsys, "classify", "--family", "stieltjes-dn", "--k2", "0.5")
        assert code == 0
        assert json.loads(out)["outputs"]["verdict"] == "DET_H"

    def test_custom_bounded(self, capsys):
        code, out, _ = run_cli(
            capsys, "classify", "--lambda", "1", "--mu", "1*(n>0)", "--nmax", "800"
        )
        assert code == 0
        assert json.loads(out)["outputs"]["verdict"] == "DET_H"

    def test_bad_input_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "classify", "--family", "stieltjes-dn", "--k2", "1.5")
        assert code == 2
        assert "k2" in err


class TestTransformCommand:
    def test_markov_matches_measure_oracle(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "transform", "--family", "stieltjes-dn", "--k2", "0.5",
            "--x", "0,1", "--mode", "markov",
        )
        assert code == 0
        rep = json.loads(out)
        v = complex(rep["outputs"]["value"]["re"], rep["outputs"]["value"]["im"])
        oracle = measure_stieltjes(dn_spectral_measure(make_context(0.5), 60), 1j)
        assert abs(v - oracle) < 1e-8
        assert rep["outputs"]["converged"] is True

    def test_krein_on_quartic(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "transform", "--family", "quartic", "--c", "0", "--mu", "0",
            "--x", "10,10", "--mode", "krein", "--max-iter", "5000", "--tol", "1e-7",
        )
        assert code == 0
        rep = json.loads(out)
        v = complex(rep["outputs"]["value"]["re"], rep["outputs"]["value"]["im"])
        # frozen from the Nevanlinna series C/D at 10+10i
        assert abs(v - (0.044995413928543 - 0.045752013312697j)) < 1e-6

    def test_nevanlinna_mode(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "transform", "--family", "quartic", "--c", "0", "--mu", "0",
            "--x", "4,3", "--mode", "nevanlinna:0",
        )
        assert code == 0
        rep = json.loads(out)
        v = complex(rep["outputs"]["value"]["re"], rep["outputs"]["value"]["im"])
        from bdspec import nevanlinna_eval, quartic_rates

        nv = nevanlinna_eval(quartic_rates(0, 0), 4 + 3j)
        assert abs(v - nv.C / nv.D) < 1e-9
        assert rep["diagnostics"]["det_defect"] < 1e-9

    def test_extended_markov_env(self, capsys, monkeypatch):
        monkeypatch.setenv("BDSPEC_EXTENDED", "1")
        code, out, _ = run_cli(
            capsys,
            "transform", "--family", "stieltjes-dn", "--k2", "0.5",
            "--x", "0,1", "--mode", "markov",
        )
        assert code == 0
        rep = json.loads(out)
        v = complex(rep["outputs"]["value"]["re"], rep["outputs"]["value"]["im"])
        oracle = measure_stieltjes(dn_spectral_measure(make_context(0.5), 60), 1j)
        assert abs(v - oracle) < 1e-9

    def test_mode_conflict_exit_3(self, capsys):
        code, _, err = run_cli(
            capsys,
            "transform", "--family", "stieltjes-dn", "--k2", "0.5",
            "--x", "0,1", "--mode", "friedrichs",
        )
        assert code == 3
        assert "classification" in err

    def test_bad_x_exit_2(self, capsys):
        code, _, _ = run_cli(
            capsys,
            "transform", "--family", "stieltjes-dn", "--k2", "0.5",
            "--x", "1", "--mode", "markov",
        )
        assert code == 2


class TestSpectrumCommand:
    def test_dn_measure_json(self, capsys, tmp_path):
        out_path = str(tmp_path / "psi.json")
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--family", "stieltjes-dn", "--k2", "0.5",
            "--mode", "dn-measure", "--nmax", "30", "--out", out_path,
        )
        assert code == 0
        m = DiscreteMeasure.from_json(open(out_path).read())
        K = make_context(0.5).K
        assert np.allclose(m.support, (np.arange(31) * math.pi / K) ** 2)

    def test_border_csv_first_atom(self, capsys, tmp_path, qspec):
        out_path = str(tmp_path / "fr.csv")
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--family", "quartic", "--c", "0", "--mu", "0",
            "--mode", "border:friedrichs", "--out", out_path, "--nmax", "12",
        )
        assert code == 0
        m = DiscreteMeasure.from_csv(open(out_path).read())
        assert m.support[0] == pytest.approx((math.pi / qspec.qperiod) ** 4, rel=1e-12)

    def test_gauss_one(self, capsys, tmp_path):
        out_path = str(tmp_path / "g.json")
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--family", "stieltjes-dn", "--k2", "0.5",
            "--mode", "gauss:1", "--out", out_path,
        )
        assert code == 0
        m = DiscreteMeasure.from_json(open(out_path).read())
        assert m.support == pytest.approx([0.5])
        assert m.mass == pytest.approx([1.0])

    def test_determinism_byte_identical(self, capsys, tmp_path):
        args = [
            "spectrum", "--family", "stieltjes-dn", "--k2", "0.37",
            "--mode", "dn-measure", "--nmax", "25",
        ]
        p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        code1, out1, _ = run_cli(capsys, *args, "--out", p1)
        code2, out2, _ = run_cli(capsys, *args, "--out", p2)
        assert code1 == code2 == 0
        assert open(p1, "rb").read() == open(p2, "rb").read()
        assert out1.replace(p1, "X") == out2.replace(p2, "X")

    def test_nextremal_mode(self, capsys, tmp_path, qspec):
        out_path = str(tmp_path / "nx.json")
        code, out, _ = run_cli(
            capsys,
            "spectrum", "--family", "quartic", "--c", "0", "--mu", "0",
            "--mode", "nextremal:0", "--window=-0.5,200", "--out", out_path,
        )
        assert code == 0
        m = DiscreteMeasure.from_json(open(out_path).read())
        assert m.support[0] == pytest.approx(0.0, abs=1e-10)
        assert m.mass[0] == pytest.approx(math.pi / qspec.qperiod**2, rel=1e-8)
        assert not m.normalized  # window-limited slice

    def test_io_error_exit_4(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys,
            "spectrum", "--family", "stieltjes-dn", "--k2", "0.5",
            "--mode", "gauss:2", "--out", str(tmp_path / "no" / "dir" / "x.json"),
        )
        assert code == 4


def test_version_flag(capsys):
    code = main(["--version"])
    out = capsys.readouterr().out
    assert code == 0
    assert "bdspec 0.1.0" in out
