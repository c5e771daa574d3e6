"""Random-binning key agreement over a DSBS, simulated exactly or by sampling.

Sequences of length ``n`` are stored as integers with the first symbol in the
most significant bit, so integer order is lexicographic order.

Alice observes ``x``, publishes the message bin ``g(x)`` and keeps the key
bin ``f(x)``. Bob sees ``y = x xor e`` with ``e`` i.i.d. Bernoulli(theta),
decodes ``x_hat`` inside the announced bin and takes ``f(x_hat)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .errors import CapacityError, DomainError

MAX_MATERIALIZED_N = 24
MAX_EXACT_ERROR_N = 14
MAX_LEAKAGE_N = 10
MAX_LEAKAGE_N_INDEPENDENT = 20

_Z95 = float(norm.ppf(0.975))
_POPCOUNT_CACHE: dict[int, np.ndarray] = {}


def bin_count(n: int, rate: float) -> int:
    """``floor(e^{n rate})`` with a floor of one bin.

    The small guard keeps exact powers of two (``rate = k log 2 / n``) from
    rounding down.
    """
    if rate < 0:
        raise DomainError("rate must be nonnegative")
    return max(int(math.floor(math.exp(n * rate) * (1.0 + 1e-12))), 1)


def _popcount(n):
    tab = _POPCOUNT_CACHE.get(n)
    if tab is None:
        tab = np.bitwise_count(np.arange(1 << n, dtype=np.uint32)).astype(np.int8)
        _POPCOUNT_CACHE[n] = tab
    return tab


def to_bits(x: int, n: int) -> np.ndarray:
    return np.array([(x >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.uint8)


def from_bits(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


@dataclass(frozen=True, eq=False)
class BinningCode:
    """Two independent uniform binnings of ``{0,1}^n``.

    ``key_map[x]`` is the key bin and ``msg_map[x]`` the public message bin
    of the sequence with integer label ``x``.
    """

    n: int
    r_sk: float
    r_m: float
    key_bins: int
    msg_bins: int
    seed: int
    key_map: np.ndarray
    msg_map: np.ndarray

    def key(self, x):
        return self.key_map[x]

    def message(self, x):
        return self.msg_map[x]

    def bin_members(self, phi: int) -> np.ndarray:
        """Sorted members of message bin ``phi``."""
        return np.flatnonzero(self.msg_map == phi)

    def members_by_bin(self):
        order = np.argsort(self.msg_map, kind="stable")
        bounds = np.searchsorted(self.msg_map[order], np.arange(self.msg_bins + 1))
        return [order[bounds[i]:bounds[i + 1]] for i in range(self.msg_bins)]


def generate_code(n: int, r_sk: float, r_m: float, seed: int) -> BinningCode:
    """Draw a code from the random-binning ensemble; rates in nats.

    The key map and the message map come from two independent child streams
    of ``seed``.
    """
    if n < 1:
        raise DomainError("blocklength must be at least 1")
    if n > MAX_MATERIALIZED_N:
        raise CapacityError(f"n={n} exceeds the materialization cap {MAX_MATERIALIZED_N}")
    k_bins, m_bins = bin_count(n, r_sk), bin_count(n, r_m)
    key_ss, msg_ss = np.random.SeedSequence(seed).spawn(2)
    size = 1 << n
    key_map = np.random.default_rng(key_ss).integers(0, k_bins, size=size)
    msg_map = np.random.default_rng(msg_ss).integers(0, m_bins, size=size)
    return BinningCode(n, r_sk, r_m, k_bins, m_bins, int(seed), key_map, msg_map)


def ml_decode(code: BinningCode, phi: int, y, theta: float = 0.1):
    """Most likely member of bin ``phi`` given Bob's sequence ``y``.

    For ``theta < 1/2`` this is the member closest to ``y`` in Hamming
    distance; ties go to the smallest integer. ``y`` may be an int or a bit
    array. Returns ``None`` for an empty bin.
    """
    if not 0 <= theta <= 0.5:
        raise DomainError("theta must lie in [0, 1/2]")
    if not 0 <= phi < code.msg_bins:
        raise DomainError("message index out of range")
    if not isinstance(y, (int, np.integer)):
        y = from_bits(y)
    members = code.bin_members(phi)
    if members.size == 0:
        return None
    if theta == 0.5:
        return int(members[0])
    d = _popcount(code.n)[members ^ int(y)]
    return int(members[np.argmin(d)])


def _check_theta(theta):
    if not 0 <= theta <= 0.5:
        raise DomainError("theta must lie in [0, 1/2]")


def _pattern_weights(n, p):
    d = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(d == 0, 1.0, p ** d) * np.where(d == n, 1.0, (1.0 - p) ** (n - d))
    return w


def exact_error_probability(code: BinningCode, theta: float):
    """Exact ``(Pr(K_a != K_b), Pr(x_hat != x))`` for a fixed code.

    Enumerates every ``(x, y)`` pair bin by bin; the Hamming-distance weight
    table turns the inner sum into a lookup.
    """
    _check_theta(theta)
    n = code.n
    if n > MAX_EXACT_ERROR_N:
        raise CapacityError(f"exact error needs n <= {MAX_EXACT_ERROR_N}")
    if theta == 0.0:
        return 0.0, 0.0
    pc = _popcount(n)
    wt = _pattern_weights(n, theta)
    ys = np.arange(1 << n)
    ok_x = ok_k = 0.0
    for members in code.members_by_bin():
        if members.size == 0:
            continue
        d = pc[ys[:, None] ^ members[None, :]]
        if theta == 0.5:
            best = np.zeros(ys.size, dtype=np.intp)
        else:
            best = np.argmin(d, axis=1)
        w = wt[d]
        hit = best[:, None] == np.arange(members.size)[None, :]
        ok_x += float(w[hit].sum())
        keys = code.key_map[members]
        same_key = keys[best][:, None] == keys[None, :]
        ok_k += float(w[same_key].sum())
    scale = 2.0 ** -n
    p_key = min(max(1.0 - ok_k * scale, 0.0), 1.0)
    p_x = min(max(1.0 - ok_x * scale, 0.0), 1.0)
    return p_key, p_x


def gallager_bound(n: int, msg_bins: int, theta: float, rho_points: int = 100):
    """Ensemble bound on Pr(x_hat != x) minimized over a rho grid on [0, 1].

    Returns ``(bound, rho)``. For a DSBS the sum over Bob's sequences
    factorizes into ``(theta^{1/(1+rho)} + (1-theta)^{1/(1+rho)})^{n(1+rho)}``.
    """
    _check_theta(theta)
    rhos = np.linspace(0.0, 1.0, rho_points)
    if theta == 0.0:
        inner = np.zeros_like(rhos)
    else:
        s = 1.0 / (1.0 + rhos)
        inner = (1.0 + rhos) * np.log(theta ** s + (1.0 - theta) ** s)
    log_b = -rhos * math.log(msg_bins) + n * inner
    i = int(np.argmin(log_b))
    return float(min(math.exp(log_b[i]), 1.0)), float(rhos[i])


def code_seeds(seed: int, count: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)


@dataclass
class EnsembleCheck:
    mean_error: float
    std_error: float
    gallager_bound: float
    rho: float
    holds: bool
    mean_key_error: float
    codes: int


def ensemble_error_check(n, r_m, theta, num_codes, seed, r_sk=0.0):
    """Average exact decoding error over seeded codes and compare to the bound.

    ``holds`` is true when the mean Pr(x_hat != x) is within three standard
    errors (across codes) of the ensemble bound.
    """
    if num_codes < 1:
        raise DomainError("need at least one code")
    if n > MAX_EXACT_ERROR_N:
        raise CapacityError(f"exact error needs n <= {MAX_EXACT_ERROR_N}")
    px, pk = [], []
    for s in code_seeds(seed, num_codes):
        code = generate_code(n, r_sk, r_m, int(s))
        k, x = exact_error_probability(code, theta)
        px.append(x)
        pk.append(k)
    px = np.asarray(px)
    mean = float(px.mean())
    se = float(px.std(ddof=1) / math.sqrt(num_codes)) if num_codes > 1 else 0.0
    bound, rho = gallager_bound(n, bin_count(n, r_m), theta)
    return EnsembleCheck(mean, se, bound, rho, mean <= bound + 3.0 * se,
                         float(np.mean(pk)), num_codes)


def _entropy_of(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _mi_from_counts(joint):
    """Mutual information (nats) of a 2-D table of nonnegative weights."""
    total = joint.sum()
    p = joint / total
    return max(_entropy_of(p.sum(1)) + _entropy_of(p.sum(0)) - _entropy_of(p.ravel()), 0.0)


def key_entropy(code: BinningCode) -> float:
    """``H(K_a)`` in nats under a uniform source."""
    return _entropy_of(np.bincount(code.key_map, minlength=code.key_bins) / (1 << code.n))


def exact_leakage(code: BinningCode, w: float, eve_output: bool = True) -> float:
    """Exact ``I(K_a; Y_e, Phi)`` in nats for Eve behind a BSC(w).

    With ``w = 1/2`` or ``eve_output=False`` Eve's sequence is dropped and
    the result is ``I(K_a; Phi)``. The DSBS crossover between Alice and Bob
    plays no part: Eve's view depends on Alice's sequence only.
    """
    if not 0 <= w <= 0.5:
        raise DomainError("w must lie in [0, 1/2]")
    n = code.n
    pair = code.key_map.astype(np.int64) * code.msg_bins + code.msg_map
    if w == 0.5 or not eve_output:
        if n > MAX_LEAKAGE_N_INDEPENDENT:
            raise CapacityError(f"leakage needs n <= {MAX_LEAKAGE_N_INDEPENDENT}")
        counts = np.bincount(pair, minlength=code.key_bins * code.msg_bins)
        return _mi_from_counts(counts.reshape(code.key_bins, code.msg_bins).astype(float))
    if n > MAX_LEAKAGE_N:
        raise CapacityError(f"leakage with Eve's output needs n <= {MAX_LEAKAGE_N}")
    xs = np.arange(1 << n)
    chan = _pattern_weights(n, w)[_popcount(n)[xs[:, None] ^ xs[None, :]]]
    used, inverse = np.unique(pair, return_inverse=True)
    joint = np.zeros((used.size, 1 << n))
    np.add.at(joint, inverse, chan)
    # rows are (key, message) pairs; Eve sees (message, y)
    msgs = used % code.msg_bins
    h_kmy = _entropy_of(joint.ravel() / (1 << n))
    eve = np.zeros((code.msg_bins, 1 << n))
    np.add.at(eve, msgs, joint)
    h_my = _entropy_of(eve.ravel() / (1 << n))
    return max(key_entropy(code) + h_my - h_kmy, 0.0)


def wilson_halfwidth(errors: int, trials: int, z: float = _Z95) -> float:
    p = errors / trials
    denom = 1.0 + z * z / trials
    return z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4.0 * trials * trials))


def _trial_draws(n, theta, trials, seed):
    """Alice's sequence and the error pattern for each trial.

    Trial ``t`` reads its own Philox stream keyed by ``seed`` with ``t`` in
    the upper counter word, so any subset of trials can be replayed alone.
    """
    x = np.empty(trials, dtype=np.int64)
    e = np.empty(trials, dtype=np.int64)
    weights = 1 << np.arange(n - 1, -1, -1)
    for t in range(trials):
        g = np.random.Generator(np.random.Philox(key=seed, counter=[0, t, 0, 0]))
        x[t] = g.integers(0, 1 << n)
        e[t] = int(((g.random(n) < theta) * weights).sum())
    return x, e


@dataclass
class SimReport:
    n: int
    r_sk_nats: float
    r_m_nats: float
    theta: float
    w: float
    trials: int
    seed: int
    error_estimate: float
    error_ci_halfwidth: float
    leakage_nats: float | None
    leakage_exact: bool
    empirical_exponent: float | None
    gallager_bound: float

    def to_dict(self):
        return asdict(self)

    def to_json(self, **extra):
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=False)


def leakage_available(n: int, w: float) -> bool:
    return n <= (MAX_LEAKAGE_N_INDEPENDENT if w == 0.5 else MAX_LEAKAGE_N)


def monte_carlo_run(code: BinningCode, theta: float, w: float, trials: int, seed: int) -> SimReport:
    """Sample the protocol ``trials`` times and summarize key disagreement.

    Leakage is filled in only when it can be enumerated exactly.
    """
    _check_theta(theta)
    if not 0 <= w <= 0.5:
        raise DomainError("w must lie in [0, 1/2]")
    if trials < 1:
        raise DomainError("need at least one trial")
    n = code.n
    x, e = _trial_draws(n, theta, trials, seed)
    y = x ^ e
    phi = code.msg_map[x]
    decoded = np.full(trials, -1, dtype=np.int64)
    pc = _popcount(n)
    order = np.argsort(phi, kind="stable")
    cuts = np.searchsorted(phi[order], np.arange(code.msg_bins + 1))
    bins = code.members_by_bin()
    for b in np.unique(phi):
        idx = order[cuts[b]:cuts[b + 1]]
        members = bins[b]
        d = pc[y[idx][:, None] ^ members[None, :]]
        pick = np.zeros(idx.size, dtype=np.intp) if theta == 0.5 else np.argmin(d, axis=1)
        decoded[idx] = members[pick]
    errors = int(np.count_nonzero(code.key_map[decoded] != code.key_map[x]))
    p_hat = errors / trials
    leak, exact = None, False
    if leakage_available(n, w):
        leak, exact = exact_leakage(code, w), True
    return SimReport(
        n=n,
        r_sk_nats=code.r_sk,
        r_m_nats=code.r_m,
        theta=theta,
        w=w,
        trials=trials,
        seed=int(seed),
        error_estimate=p_hat,
        error_ci_halfwidth=wilson_halfwidth(errors, trials),
        leakage_nats=leak,
        leakage_exact=exact,
        empirical_exponent=None if errors == 0 else -math.log(p_hat) / n,
        gallager_bound=gallager_bound(n, code.msg_bins, theta)[0],
    )
