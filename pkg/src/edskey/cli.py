"""Command-line front end: sweeps as CSV, simulation reports as JSON.

Exit status is 0 on success, 2 on a usage or domain error and 3 when the
request is infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import binning, core, dsbs, gaussian
from .errors import CapacityError, DomainError, InfeasibleError
from .numerics import LN2

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

DEFAULT_SNR = "0.01:10:50:log"
INFEASIBLE = "infeasible"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """``start:stop:points[:scale]`` grid for one swept variable."""

    variable: str
    start: float
    stop: float
    points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in ("gamma", "r_sk", "r_m", "lambda", "n"):
            raise UsageError(f"unknown sweep variable {self.variable!r}")
        if not self.start < self.stop:
            raise UsageError("sweep needs start < stop")
        if self.points < 2:
            raise UsageError("sweep needs at least 2 points")
        if self.scale not in ("linear", "log"):
            raise UsageError("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.start <= 0:
            raise UsageError("log sweep needs start > 0")

    @classmethod
    def parse(cls, variable, text):
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise UsageError(f"bad sweep {text!r}; expected start:stop:points[:linear|log]")
        try:
            start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad sweep {text!r}") from None
        return cls(variable, start, stop, points, parts[3] if len(parts) == 4 else "linear")

    def values(self):
        if self.scale == "log":
            v = np.geomspace(self.start, self.stop, self.points)
        else:
            v = np.linspace(self.start, self.stop, self.points)
        v[0], v[-1] = self.start, self.stop
        return v


def parse_values(variable, text):
    """A single number or a sweep."""
    if ":" in text:
        return SweepSpec.parse(variable, text).values()
    try:
        return np.array([float(text)])
    except ValueError:
        raise UsageError(f"bad value {text!r} for {variable}") from None


def snr_values(args, default=DEFAULT_SNR):
    if args.snr is not None and args.snr_db is not None:
        raise UsageError("give --snr or --snr-db, not both")
    if args.snr_db is not None:
        return 10.0 ** (parse_values("gamma", args.snr_db) / 10.0)
    g = parse_values("gamma", args.snr if args.snr is not None else default)
    if np.any(g < 0):
        raise UsageError("SNR must be nonnegative")
    return g


def native_unit(model):
    return "bits" if model == "dsbs" else "nats"


def to_output(x, native, units):
    if native == units or x is None:
        return x
    return x / LN2 if units == "bits" else x * LN2


def to_native(x, native, units):
    if native == units:
        return x
    return x * LN2 if units == "bits" else x / LN2


def fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


# subcommands return (header, rows) for tables or a str for JSON


def cmd_capacity(args):
    units, native = args.units, native_unit(args.model)
    mod = dsbs if args.model == "dsbs" else gaussian
    ik = dsbs.key_rate_from_snr if args.model == "dsbs" else gaussian.i_k
    rows = []
    for g in snr_values(args):
        g = float(g)
        c, lam = mod.capacity(g)
        rows.append((g, to_output(ik(g), native, units), to_output(c, native, units), lam))
    return ["gamma", "i_k", "c_k", "lambda_c"], rows


def _rate_bits(model, g, onoff):
    if model == "dsbs":
        return dsbs.capacity(g)[0] if onoff else dsbs.key_rate_from_snr(g)
    return (gaussian.capacity(g)[0] if onoff else gaussian.i_k(g)) / LN2


def finite_block_rows(b_key, epsilon, gammas):
    """Per-SNR ``(gamma n, n)`` for constant and on-off excitation; None if infeasible."""
    out = []
    for g in gammas:
        row = []
        for onoff in (False, True):
            n = gaussian.block_length(b_key, epsilon, float(g), use_onoff=onoff)
            row.append(None if n is None else (float(g) * n, n))
        out.append(row)
    return out


def cmd_energy(args):
    gammas = snr_values(args)
    header = ["gamma", "energy_const", "energy_onoff"]
    rows = []
    for g in gammas:
        g = float(g)
        r_c, r_o = _rate_bits(args.model, g, False), _rate_bits(args.model, g, True)
        rows.append([g, g / r_c if r_c > 0 else math.inf, g / r_o if r_o > 0 else math.inf])
    if args.b_key is None and args.epsilon is None:
        return header, rows
    if args.b_key is None or args.epsilon is None:
        raise UsageError("finite-block energy needs both --b-key and --epsilon")
    if args.model != "gaussian":
        raise UsageError("finite-block energy is available for the gaussian model only")
    header += ["block_energy_const", "n_const", "block_energy_onoff", "n_onoff"]
    fb = finite_block_rows(args.b_key, args.epsilon, gammas)
    if all(c is None and o is None for c, o in fb):
        raise InfeasibleError(f"no SNR on the grid reaches error {args.epsilon} for {args.b_key} bits")
    for row, cells in zip(rows, fb):
        for cell in cells:
            row += [INFEASIBLE, INFEASIBLE] if cell is None else list(cell)
    return header, rows


def _exponent_row(model, r, g, onoff):
    if model == "dsbs":
        th = dsbs.theta_from_snr(g)
        row = [dsbs.reliability_region(r, th), dsbs.reliability_exponent_theta(r, th)]
        if onoff:
            row += list(dsbs.onoff_reliability_exponent(r, g))
    else:
        row = [gaussian.reliability_region(r, g), gaussian.reliability_exponent(r, g)]
        if onoff:
            row += list(gaussian.onoff_reliability_exponent(r, g))
    return row


def cmd_exponents(args):
    units, native = args.units, native_unit(args.model)
    rates = parse_values("r_sk", args.r_sk)
    if np.any(rates < 0):
        raise UsageError("key rate must be nonnegative")
    header = ["gamma", "r_sk", "region", "e_r"]
    if args.onoff:
        header += ["e_r_onoff", "lambda_e"]
    rows = []
    for g in snr_values(args, default="1"):
        for r in rates:
            r_nat = to_native(float(r), native, units)
            vals = _exponent_row(args.model, r_nat, float(g), args.onoff)
            vals[1] = to_output(vals[1], native, units)
            if args.onoff:
                vals[2] = to_output(vals[2], native, units)
            rows.append([float(g), float(r)] + vals)
    return header, rows


def cmd_tradeoff(args):
    units = args.units
    r_sks = parse_values("r_sk", args.r_sk)
    r_ms = parse_values("r_m", args.r_m)
    if np.any(r_sks < 0) or np.any(r_ms < 0):
        raise UsageError("rates must be nonnegative")
    rows = []
    if args.model_file:
        model, p_s = core.load_model(args.model_file)
        if p_s is None:
            raise UsageError("model file has no state_distribution")
        for rk in r_sks:
            for rm in r_ms:
                rk_n, rm_n = to_native(float(rk), "nats", units), to_native(float(rm), "nats", units)
                t = core.exponent_triple(model, p_s, core.RatePoint(rk_n, rm_n))
                rows.append([float(rk), float(rm), to_output(t.e_r, "nats", units),
                             to_output(t.e_s, "nats", units)])
        return ["r_sk", "r_m", "e_r", "e_s"], rows
    if args.theta is None or args.w is None:
        raise UsageError("tradeoff needs --theta and --w (or --model-file)")
    for rk in r_sks:
        for rm in r_ms:
            rk_b, rm_b = to_native(float(rk), "bits", units), to_native(float(rm), "bits", units)
            e_r = dsbs.reliability_exponent_rm(rm_b, args.theta)
            e_s = dsbs.secrecy_exponent(rk_b + rm_b, args.w)
            rows.append([float(rk), float(rm), to_output(e_r, "bits", units),
                         to_output(e_s, "bits", units)])
    return ["r_sk", "r_m", "e_r", "e_s"], rows


def simulate_report(n, r_sk, r_m, theta, w, trials, seed, exact=False):
    """Run the binning simulator; rates in nats. Returns the JSON-ready dict."""
    code_seed, trial_seed = (int(s) for s in binning.code_seeds(seed, 2))
    code = binning.generate_code(n, r_sk, r_m, code_seed)
    report = binning.monte_carlo_run(code, theta, w, trials, trial_seed)
    doc = report.to_dict()
    doc["seed"] = int(seed)
    e_r = dsbs.reliability_exponent_rm(r_m / LN2, theta) * LN2
    e_s = dsbs.secrecy_exponent((r_sk + r_m) / LN2, w) * LN2 if w > 0 else 0.0
    doc["analytic"] = {"e_r_nats": e_r, "e_s_nats": e_s}
    if exact:
        if n > binning.MAX_EXACT_ERROR_N:
            raise CapacityError(f"--exact needs n <= {binning.MAX_EXACT_ERROR_N}")
        if not binning.leakage_available(n, w):
            raise CapacityError(
                f"--exact leakage needs n <= {binning.MAX_LEAKAGE_N} when w < 1/2")
        p_key, p_x = binning.exact_error_probability(code, theta)
        doc["exact"] = {
            "error_probability": p_key,
            "decoding_error_probability": p_x,
            "leakage_nats": binning.exact_leakage(code, w),
        }
    return doc


def cmd_simulate(args):
    units = args.units
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    r_sk = to_native(args.r_sk, "nats", units)
    r_m = to_native(args.r_m, "nats", units)
    doc = simulate_report(args.n, r_sk, r_m, args.theta, args.w, args.trials, args.seed, args.exact)
    return json.dumps(doc, indent=2)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=("gaussian", "dsbs"), default="gaussian")
    common.add_argument("--units", choices=("nats", "bits"), default="nats",
                        help="units of rate/exponent inputs and outputs")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    def snr_flags(p):
        p.add_argument("--snr", default=None, help="linear SNR: value or start:stop:points[:log]")
        p.add_argument("--snr-db", default=None, help="SNR in dB: value or sweep")

    ap = argparse.ArgumentParser(prog="edskey", description="Secret-key rates and exponents.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", parents=[common], help="key rate vs SNR, constant and on-off")
    snr_flags(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("energy", parents=[common], help="energy per key bit")
    snr_flags(p)
    p.add_argument("--b-key", type=int, default=None, help="key length in bits")
    p.add_argument("--epsilon", type=float, default=None, help="target disagreement probability")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("exponents", parents=[common], help="reliability exponent tables")
    snr_flags(p)
    p.add_argument("--r-sk", default="0.01", help="key rate: value or sweep")
    p.add_argument("--onoff", action="store_true", help="add on-off columns")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("tradeoff", parents=[common], help="(E_R, E_S) vs message rate")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--w", type=float, default=None)
    p.add_argument("--r-sk", default="0")
    p.add_argument("--r-m", default="0:1:101")
    p.add_argument("--model-file", default=None, help="JSON finite-source model instead of a DSBS")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("simulate", parents=[common], help="random-binning simulation (JSON)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r-sk", type=float, required=True)
    p.add_argument("--r-m", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--w", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--exact", action="store_true", help="add exact error and leakage")
    p.set_defaults(func=cmd_simulate)
    return ap


def render(args):
    """Run a parsed command and return its output text."""
    result = args.func(args)
    if isinstance(result, str):
        return result + "\n"
    buf = io.StringIO()
    write_csv(buf, *result)
    return buf.getvalue()


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    try:
        text = render(args)
    except (UsageError, DomainError, CapacityError) as e:
        print(f"edskey {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as e:
        print(f"edskey {args.command}: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
