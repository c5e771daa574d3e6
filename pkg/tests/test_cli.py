import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from edskey import core, dsbs, gaussian
from edskey.cli import SweepSpec, UsageError, main
from edskey.numerics import LN2


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def column(header, rows, name):
    i = header.index(name)
    return [r[i] for r in rows]


class TestSweepSpec:
    def test_parse(self):
        s = SweepSpec.parse("gamma", "0.1:10:5:log")
        np.testing.assert_allclose(s.values(), [0.1, 0.316227766, 1, 3.16227766, 10], rtol=1e-8)
        assert SweepSpec.parse("r_sk", "0:1:3").values().tolist() == [0, 0.5, 1]

    @pytest.mark.parametrize("text", ["1:0:3", "0:1:1", "0:1:3:log", "0:1", "a:b:c", "0:1:3:cubic"])
    def test_invalid(self, text):
        with pytest.raises(UsageError):
            SweepSpec.parse("gamma", text)

    def test_bad_variable(self):
        with pytest.raises(UsageError):
            SweepSpec("mu", 0, 1, 3)


class TestCapacity:
    def test_gaussian_threshold_structure(self, capsys):
        code, out, _ = run(["capacity", "--snr", "1:2:41"], capsys)
        assert code == 0
        h, rows = table(out)
        assert h == ["gamma", "i_k", "c_k", "lambda_c"]
        g = np.array(column(h, rows, "gamma"), dtype=float)
        lam = np.array(column(h, rows, "lambda_c"), dtype=float)
        ik = np.array(column(h, rows, "i_k"), dtype=float)
        ck = np.array(column(h, rows, "c_k"), dtype=float)
        gc = gaussian.gamma_c()
        assert np.all(lam[g >= gc] == 1.0) and np.all(lam[g < gc] < 1.0)
        assert np.all(ck >= ik - 1e-11)
        np.testing.assert_allclose(ck[g >= gc], ik[g >= gc], rtol=1e-11)

    def test_dsbs_threshold_structure(self, capsys):
        code, out, _ = run(["capacity", "--model", "dsbs", "--snr", "1:1.6:31"], capsys)
        h, rows = table(out)
        g = np.array(column(h, rows, "gamma"), dtype=float)
        lam = np.array(column(h, rows, "lambda_c"), dtype=float)
        gc = dsbs.binary_gamma_c()
        assert np.all(lam[g >= gc] == 1.0) and np.all(lam[g < gc] < 1.0)

    def test_single_point(self, capsys):
        _, out, _ = run(["capacity", "--snr", "1"], capsys)
        h, rows = table(out)
        assert len(rows) == 1
        assert float(rows[0][1]) == pytest.approx(math.log(4 / 3), rel=1e-11)

    def test_twelve_significant_digits(self, capsys):
        _, out, _ = run(["capacity", "--snr", "1"], capsys)
        assert out.splitlines()[1].split(",")[1] == f"{math.log(4 / 3):.12g}"

    def test_snr_db(self, capsys):
        _, a, _ = run(["capacity", "--snr-db", "0"], capsys)
        _, b, _ = run(["capacity", "--snr", "1"], capsys)
        assert a == b

    def test_units_round_trip(self, capsys):
        _, nats, _ = run(["capacity", "--snr", "0.1:5:9:log"], capsys)
        _, bits, _ = run(["capacity", "--snr", "0.1:5:9:log", "--units", "bits"], capsys)
        hn, rn = table(nats)
        hb, rb = table(bits)
        for name in ("i_k", "c_k"):
            a = np.array(column(hn, rn, name), dtype=float)
            b = np.array(column(hb, rb, name), dtype=float)
            np.testing.assert_allclose(b * LN2, a, rtol=1e-11)
        assert column(hn, rn, "lambda_c") == column(hb, rb, "lambda_c")

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "cap.csv"
        code, out, _ = run(["capacity", "--snr", "1", "--out", str(path)], capsys)
        assert code == 0 and out == ""
        assert path.read_text().startswith("gamma,i_k,c_k,lambda_c\n")


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["capacity", "--snr", "2:1:4"],
            ["capacity", "--snr", "1", "--snr-db", "0"],
            ["capacity", "--model", "qpsk"],
            ["nonsense"],
            ["energy", "--b-key", "64"],
            ["energy", "--model", "dsbs", "--b-key", "64", "--epsilon", "0.01"],
            ["tradeoff", "--theta", "0.1"],
            ["tradeoff", "--theta", "0.1", "--w", "0"],
            ["exponents", "--model", "dsbs", "--r-sk", "1.5", "--units", "bits"],
            ["simulate", "--n", "16", "--r-sk", "0.1", "--r-m", "0.3", "--theta", "0.1", "--exact"],
            ["simulate", "--n", "12", "--r-sk", "0.1", "--r-m", "0.3", "--theta", "0.1", "--w", "0.2", "--exact"],
        ],
    )
    def test_exit_two(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2
        assert err

    def test_help_is_success(self, capsys):
        assert run(["--help"], capsys)[0] == 0


class TestEnergy:
    def test_asymptotic_columns(self, capsys):
        _, out, _ = run(["energy", "--snr", "0.01:10:60:log"], capsys)
        h, rows = table(out)
        g = np.array(column(h, rows, "gamma"), dtype=float)
        const = np.array(column(h, rows, "energy_const"), dtype=float)
        onoff = np.array(column(h, rows, "energy_onoff"), dtype=float)
        gc = gaussian.gamma_c()
        np.testing.assert_allclose(onoff[g <= gc], gaussian.min_energy_per_key_bit(), rtol=1e-9)
        assert np.all(onoff <= const + 1e-12)
        # grid argmin of the constant column sits next to the threshold
        i = int(np.argmin(const))
        assert g[max(i - 1, 0)] <= gc <= g[min(i + 1, len(g) - 1)]

    def test_finite_block_columns(self, capsys):
        argv = ["energy", "--snr", "0.05:10:25:log", "--epsilon", "0.01"]
        _, out64, _ = run(argv + ["--b-key", "64"], capsys)
        _, out128, _ = run(argv + ["--b-key", "128"], capsys)
        h, r64 = table(out64)
        _, r128 = table(out128)
        assert h[-4:] == ["block_energy_const", "n_const", "block_energy_onoff", "n_onoff"]
        e64 = np.array(column(h, r64, "block_energy_onoff"), dtype=float)
        e128 = np.array(column(h, r128, "block_energy_onoff"), dtype=float)
        assert np.all(e128 >= e64)
        for row in r64:
            c = row[h.index("block_energy_const")]
            if c != "infeasible":
                assert float(row[h.index("block_energy_onoff")]) <= float(c)

    def test_marks_infeasible_rows(self, capsys):
        _, out, _ = run(["energy", "--snr", "0.001:1:4:log", "--b-key", "64", "--epsilon", "0.01"], capsys)
        h, rows = table(out)
        assert rows[0][h.index("n_const")] == "infeasible"

    def test_all_infeasible_exit_three(self, capsys):
        code, _, err = run(["energy", "--snr", "1e-6", "--b-key", "128", "--epsilon", "0.01"], capsys)
        assert code == 3
        assert "infeasible" in err


class TestExponents:
    def test_region_one_rows(self, capsys):
        _, out, _ = run(["exponents", "--snr", "1", "--r-sk", "0:1:21"], capsys)
        h, rows = table(out)
        ik = gaussian.i_k(1.0)
        for r in rows:
            if float(r[1]) >= ik:
                assert r[h.index("region")] == "1" and float(r[h.index("e_r")]) == 0.0

    @pytest.mark.parametrize("model", ["gaussian", "dsbs"])
    def test_onoff_dominates(self, model, capsys):
        _, out, _ = run(["exponents", "--model", model, "--snr", "0.1:3:6:log",
                         "--r-sk", "0:0.3:7", "--onoff"], capsys)
        h, rows = table(out)
        for r in rows:
            assert float(r[h.index("e_r_onoff")]) >= float(r[h.index("e_r")]) - 1e-12

    def test_continuity(self, capsys):
        _, out, _ = run(["exponents", "--snr", "10", "--r-sk", "0:2:2001"], capsys)
        h, rows = table(out)
        e = np.array(column(h, rows, "e_r"), dtype=float)
        step = 2 / 2000
        assert np.max(np.abs(np.diff(e))) <= step * 1.0001

    def test_bits_input(self, capsys):
        _, out, _ = run(["exponents", "--model", "dsbs", "--snr", "2", "--r-sk", "0.1", "--units", "bits"], capsys)
        h, rows = table(out)
        assert float(rows[0][h.index("e_r")]) == pytest.approx(dsbs.reliability_exponent(0.1, 2.0), rel=1e-11)


class TestTradeoff:
    def test_regimes(self, capsys):
        _, out, _ = run(["tradeoff", "--theta", "0.01", "--w", "0.3", "--units", "bits",
                         "--r-sk", "0.2", "--r-m", "0:1:201"], capsys)
        h, rows = table(out)
        rm = np.array(column(h, rows, "r_m"), dtype=float)
        er = np.array(column(h, rows, "e_r"), dtype=float)
        es = np.array(column(h, rows, "e_s"), dtype=float)
        assert np.all(er[rm <= 0.0808] == 0) and np.all(er[rm > 0.0809] > 0)
        assert np.all(es[rm + 0.2 > 0.8813] == 0) and np.all(es[rm + 0.2 < 0.8812] > 0)
        assert np.all(np.diff(er) >= -1e-12) and np.all(np.diff(es) <= 1e-12)

    def test_surface_rows(self, capsys):
        _, out, _ = run(["tradeoff", "--theta", "0.1", "--w", "0.4", "--r-sk", "0:0.3:4", "--r-m", "0:1:11"], capsys)
        _, rows = table(out)
        assert len(rows) == 4 * 11

    def test_model_file(self, tmp_path, capsys):
        m = core.bsc_model(0.05, w=0.3)
        path = tmp_path / "bsc.json"
        core.save_model(path, m, core.StateDistribution.point(m, "s0"))
        argv = ["tradeoff", "--r-sk", "0.1", "--r-m", "0:0.6:7", "--units", "bits"]
        _, a, _ = run(argv + ["--model-file", str(path)], capsys)
        _, b, _ = run(argv + ["--theta", "0.05", "--w", "0.3"], capsys)
        _, ra = table(a)
        _, rb = table(b)
        np.testing.assert_allclose(np.array(ra, dtype=float), np.array(rb, dtype=float), atol=1e-9)


class TestSimulate:
    ARGS = ["simulate", "--n", "10", "--r-sk", "0.3", "--r-m", "0.9", "--theta", "0.1",
            "--units", "bits", "--trials", "4000", "--seed", "12"]

    def test_deterministic(self, capsys):
        _, a, _ = run(self.ARGS, capsys)
        _, b, _ = run(self.ARGS, capsys)
        assert a == b

    def test_positive_exponent(self, capsys):
        _, out, _ = run(self.ARGS, capsys)
        doc = json.loads(out)
        assert doc["empirical_exponent"] > 0
        assert doc["seed"] == 12
        assert doc["r_m_nats"] == pytest.approx(0.9 * LN2)
        assert {"e_r_nats", "e_s_nats"} <= set(doc["analytic"])

    def test_noiseless(self, capsys):
        argv = ["simulate", "--n", "8", "--r-sk", "0.1", "--r-m", "0.3", "--theta", "0", "--trials", "500"]
        _, out, _ = run(argv, capsys)
        doc = json.loads(out)
        assert doc["error_estimate"] == 0 and doc["empirical_exponent"] is None

    def test_exact_fields(self, capsys):
        _, out, _ = run(self.ARGS + ["--exact"], capsys)
        doc = json.loads(out)
        ex = doc["exact"]
        assert ex["error_probability"] <= ex["decoding_error_probability"]
        assert ex["leakage_nats"] == doc["leakage_nats"]
        assert abs(doc["error_estimate"] - ex["error_probability"]) <= 4 * doc["error_ci_halfwidth"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "edskey", "capacity", "--snr", "1"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert r.stdout.startswith("gamma,i_k,c_k,lambda_c")
