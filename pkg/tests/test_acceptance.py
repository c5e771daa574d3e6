"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and then
asserts the criterion at its stated tolerance.
"""
import csv
import io
import math

import numpy as np

from conftest import record
from edskey import binning, core, dsbs, gaussian
from edskey.cli import finite_block_rows, main
from edskey.core import FiniteEdms, RatePoint, StateDistribution
from edskey.numerics import LN2, binary_entropy_bits


def test_criterion_01_gaussian_threshold():
    gc = gaussian.gamma_c()
    db = 10 * math.log10(gc)
    ok = abs(gc - 1.535) <= 1e-3 and abs(db - 1.86) <= 0.01
    record(1, ok, f"gamma_c = {gc:.6f} ({db:.4f} dB), target 1.535 +/- 0.001 (1.86 dB +/- 0.01)")
    assert ok


def test_criterion_02_binary_threshold():
    gc = dsbs.binary_gamma_c()
    ok = abs(gc - 1.28) <= 0.01
    record(2, ok, f"binary gamma_c = {gc:.6f}, target 1.28 +/- 0.01")
    assert ok


def test_criterion_03_minimum_energy():
    gc = gaussian.gamma_c()
    gammas = np.geomspace(gc * 1e-4, gc, 10)
    e = np.array([g / gaussian.capacity(g)[0] * LN2 for g in gammas])
    var = (e.max() - e.min()) / e.min()
    target = gc * LN2 / gaussian.i_k(gc)
    gap = abs(e.mean() - target) / target
    ok = var < 1e-9 and gap < 1e-9
    record(3, ok, f"energy per key bit {e.mean():.10f}, relative variation {var:.2e}, gap to threshold value {gap:.2e}")
    assert ok


def _random_edms(rng):
    states = int(rng.integers(1, 4))
    na, nb, ne = (int(v) for v in rng.integers(2, 5, size=3))
    t = rng.random((states, na, nb, ne)) + 1e-3
    t /= t.reshape(states, -1).sum(axis=1)[:, None, None, None]
    return FiniteEdms(range(states), range(na), range(nb), range(ne), t, np.zeros(states))


def _shape_errors(f, slope0, concave):
    """Worst violation of the zero/slope/monotone/curvature conditions on [0, 1]."""
    h = 1e-4
    xs = np.linspace(0, 1, 201)
    v = np.array([f(x) for x in xs])
    d1 = np.diff(v)
    d2 = v[2:] - 2 * v[1:-1] + v[:-2]
    if concave:
        d2 = -d2
    fd = (f(h) - f(0.0)) / h
    # forward difference error is O(h * curvature)
    return max(abs(f(0.0)), abs(fd - slope0) - 1e-4, -d1.min(), -d2.min() - 1e-12, 0.0)


def test_criterion_04_exponent_function_shapes():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(5):
        m = _random_edms(rng)
        for s in m.states:
            p = StateDistribution.point(m, s)
            h_ab = core.conditional_entropy_ab(m, p)
            h_ae = core.conditional_entropy_ae(m, p)
            worst = max(worst, _shape_errors(lambda r: core.e0_tilde(m, r, s), h_ab, concave=False))
            worst = max(worst, _shape_errors(lambda a: core.f0_tilde(m, a, s), h_ae, concave=True))
    ok = worst <= 1e-4
    record(4, ok, f"worst shape violation over 5 random instances {worst:.2e} (tolerance 1e-4)")
    assert ok


def test_criterion_05_cross_module_equivalence():
    params = np.linspace(0.005, 0.495, 50)
    rates = np.linspace(0.0, 1.0, 50)
    worst_r = worst_s = 0.0
    for q in params:
        m = core.bsc_model(q)
        p = StateDistribution.point(m, "s0")
        for r in rates:
            got = core.reliability_exponent(m, p, r * LN2) / LN2
            worst_r = max(worst_r, abs(got - dsbs.reliability_exponent_rm(r, q)))
        m = core.bsc_model(0.1, w=q)
        p = StateDistribution.point(m, "s0")
        for r in rates:
            got = core.secrecy_exponent(m, p, RatePoint(0.0, r * LN2)) / LN2
            worst_s = max(worst_s, abs(got - dsbs.secrecy_exponent(r, q)))
    ok = max(worst_r, worst_s) <= 1e-9
    record(5, ok, f"max |dsbs - core| reliability {worst_r:.2e}, secrecy {worst_s:.2e} bits on 50x50 grids")
    assert ok


def test_criterion_06_region_structure():
    jumps, zero_ok, regions = [], True, {}
    for g in (1.0, 3.0, 10.0):
        ik, ic = gaussian.i_k(g), gaussian.i_c(g)
        for b in (ik, ic):
            if b > 0:
                jumps.append(abs(gaussian.reliability_exponent(b * (1 - 1e-12), g)
                                 - gaussian.reliability_exponent(b * (1 + 1e-12), g)))
        rs = np.linspace(0, 1.5 * ik, 20001)
        e = np.array([gaussian.reliability_exponent(r, g) for r in rs])
        # fine-grid steps are bounded by the slope (at most 1) times the spacing
        jumps.append(max(float(np.max(np.abs(np.diff(e)))) - (rs[1] - rs[0]), 0.0))
        zero_ok &= bool(np.all(e[rs >= ik] == 0.0))
        regions[g] = sorted({gaussian.reliability_region(r, g) for r in rs})
    two_region = regions[1.0] == [1, 2] and gaussian.gamma_eq(1.0) < 1
    three_region = regions[3.0] == [1, 2, 3] and regions[10.0] == [1, 2, 3]
    jump = max(jumps)
    ok = jump <= 1e-9 and zero_ok and two_region and three_region
    record(6, ok, f"max boundary jump {jump:.2e}, zero on region 1: {zero_ok}, regions seen {regions}")
    assert ok


def test_criterion_07_crossover_monte_carlo():
    detail, ok = [], True
    for i, g in enumerate((0.5, 2.0, 10.0)):
        est, se = dsbs.sample_crossover(g, 10**6, seed=700 + i)
        z = abs(est - dsbs.theta_from_snr(g)) / se
        ok &= z <= 3
        detail.append(f"gamma={g:g}: {z:.2f} se")
    record(7, ok, "crossover vs 1e6-sample estimate " + ", ".join(detail))
    assert ok


def test_criterion_08_gallager_bound():
    detail, ok = [], True
    for r_m in (0.6, 0.8, 1.0):
        c = binning.ensemble_error_check(8, r_m * LN2, 0.1, 200, seed=8)
        ok &= c.holds
        detail.append(f"R_M={r_m}: {c.mean_error:.4f}+/-{c.std_error:.4f} vs bound {c.gallager_bound:.4f}")
    record(8, ok, "; ".join(detail))
    assert ok


def test_criterion_09_simulator_trend():
    theta, r_m, r_sk, codes = 0.1, 0.9 * LN2, 0.3 * LN2, 20
    e_r = dsbs.reliability_exponent_rm(0.9, theta) * LN2
    ns = (6, 8, 10, 12)
    exps, leaks = [], []
    for n in ns:
        err, leak = [], []
        for s in binning.code_seeds(9000 + n, codes):
            code = binning.generate_code(n, r_sk, r_m, int(s))
            err.append(binning.exact_error_probability(code, theta)[0])
            leak.append(binning.exact_leakage(code, 0.5))
        exps.append(-math.log(np.mean(err)) / n)
        leaks.append(float(np.mean(leak)))
    nondecreasing = all(b >= a for a, b in zip(exps, exps[1:]))
    reaches = exps[-1] >= e_r - 0.1
    leak_down = all(b < a for a, b in zip(leaks, leaks[1:]))
    ok = nondecreasing and reaches and leak_down
    record(9, ok, f"-(1/n)log err {np.round(exps, 4).tolist()} (nondecreasing: {nondecreasing}, "
                  f">= E_R-0.1={e_r - 0.1:.4f} at n=12: {reaches}); "
                  f"leakage {np.round(leaks, 4).tolist()} (decreasing: {leak_down})")
    assert ok


def test_criterion_10_regime_anchors(capsys):
    hb_t, hb_w = binary_entropy_bits(0.01), binary_entropy_bits(0.3)
    anchors = round(hb_t, 2) == 0.08 and round(hb_w, 2) == 0.88
    main(["tradeoff", "--theta", "0.01", "--w", "0.3", "--units", "bits", "--r-sk", "0", "--r-m", "0:1:101"])
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    h, rows = rows[0], np.array(rows[1:], dtype=float)
    er, es = rows[:, h.index("e_r")], rows[:, h.index("e_s")]
    up = bool(np.all(np.diff(er) >= 0)) and er[-1] > er[0]
    down = bool(np.all(np.diff(es) <= 0)) and es[-1] < es[0]
    ok = anchors and up and down
    record(10, ok, f"H_B(0.01)={hb_t:.4f}, H_B(0.3)={hb_w:.4f} bits; E_R nondecreasing: {up}, E_S nonincreasing: {down}")
    assert ok


def test_criterion_11_onoff_dominance():
    gammas = np.geomspace(0.01, 100, 40)
    rates = np.linspace(0.0, 0.5, 40)
    worst = math.inf
    for g in gammas:
        for r in rates:
            worst = min(worst, gaussian.onoff_reliability_exponent(r, g)[0] - gaussian.reliability_exponent(r, g))
            worst = min(worst, dsbs.onoff_reliability_exponent(r, g)[0] - dsbs.reliability_exponent(r, g))
    gain_g = gaussian.onoff_reliability_exponent(0.01, 0.2)[0] - gaussian.reliability_exponent(0.01, 0.2)
    gain_b = dsbs.onoff_reliability_exponent(0.01, 0.2)[0] - dsbs.reliability_exponent(0.01, 0.2)
    ok = worst >= 0 and gain_g > 0 and gain_b > 0
    record(11, ok, f"min(on-off - constant) {worst:.2e} over 40x40 grids; gain at (0.2, 0.01) "
                   f"gaussian {gain_g:.4e}, dsbs {gain_b:.4e}")
    assert ok


def test_criterion_12_finite_block_energy():
    gammas = gaussian.energy_grid()
    gc = gaussian.gamma_c()
    detail, ok = [], True
    for b in (64, 128):
        rows = finite_block_rows(b, 0.01, gammas)
        onoff = np.array([r[1][0] if r[1] else math.inf for r in rows])
        const = np.array([r[0][0] if r[0] else math.inf for r in rows])
        below = onoff[gammas <= gc]
        flat = (below.max() - below.min()) / below.min()
        dominated = bool(np.all(onoff <= const))
        ok &= dominated and flat < 0.01
        detail.append(f"b={b}: on-off <= constant everywhere {dominated}, variation below gamma_c {flat:.2%}")
    record(12, ok, "; ".join(detail))
    assert ok
