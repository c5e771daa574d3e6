"""Exponent engine for finite-alphabet excited sources.

A model is a table ``p(x_a, x_b, x_e | s)`` per excitation state ``s`` plus a
per-state cost. All rates and exponents are in nats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError
from .numerics import entropy, golden_max, grid_refine_max

SCHEMA = "edms-model/1"
_TOL = 1e-12


@dataclass(frozen=True)
class FiniteEdms:
    """Per-state joint tables ``joint[s, a, b, e]`` over finite alphabets.

    Parameters
    ----------
    states, alphabet_a, alphabet_b, alphabet_e : sequences of labels
    joint : array_like, shape (|S|, |X_a|, |X_b|, |X_e|)
    cost : sequence of float, one nonnegative cost per state
    degraded : bool
        Declared by the builder (X_a - X_b - X_e in every state). Not inferred;
        see :func:`is_degraded` for a checker.
    """

    states: tuple
    alphabet_a: tuple
    alphabet_b: tuple
    alphabet_e: tuple
    joint: np.ndarray
    cost: np.ndarray
    degraded: bool = False

    def __post_init__(self):
        for name in ("states", "alphabet_a", "alphabet_b", "alphabet_e"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        joint = np.array(self.joint, dtype=float)
        cost = np.array(self.cost, dtype=float).reshape(-1)
        shape = (len(self.states), len(self.alphabet_a), len(self.alphabet_b), len(self.alphabet_e))
        if joint.shape != shape:
            raise DomainError(f"joint table has shape {joint.shape}, expected {shape}")
        if cost.shape != (len(self.states),):
            raise DomainError("need exactly one cost per state")
        if np.any(joint < 0):
            raise DomainError("negative probability in joint table")
        sums = joint.reshape(len(self.states), -1).sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _TOL):
            raise DomainError(f"per-state tables must sum to 1, got {sums}")
        if np.any(cost < 0) or not np.all(np.isfinite(cost)):
            raise DomainError("state costs must be finite and nonnegative")
        if len(set(self.states)) != len(self.states):
            raise DomainError("duplicate state labels")
        joint.setflags(write=False)
        cost.setflags(write=False)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "cost", cost)

    def index(self, s) -> int:
        try:
            return self.states.index(s)
        except ValueError:
            raise DomainError(f"unknown state {s!r}") from None

    def p_ab(self, s) -> np.ndarray:
        return self.joint[self.index(s)].sum(axis=2)

    def p_ae(self, s) -> np.ndarray:
        return self.joint[self.index(s)].sum(axis=1)

    # Q_s(x_b), W_s(x_a|x_b), Q~_s(x_e), V_s(x_a|x_e)
    def q_b(self, s) -> np.ndarray:
        return self.p_ab(s).sum(axis=0)

    def q_e(self, s) -> np.ndarray:
        return self.p_ae(s).sum(axis=0)

    def w_ab(self, s) -> np.ndarray:
        """Conditional ``W_s(x_a|x_b)``; columns with zero mass are left at 0."""
        return _conditional(self.p_ab(s))

    def v_ae(self, s) -> np.ndarray:
        return _conditional(self.p_ae(s))


def _conditional(pxy):
    col = pxy.sum(axis=0)
    out = np.zeros_like(pxy)
    nz = col > 0
    out[:, nz] = pxy[:, nz] / col[nz]
    return out


@dataclass(frozen=True)
class StateDistribution:
    """Excitation distribution over the states of a model, with a cost budget."""

    states: tuple
    mass: np.ndarray
    cost_budget: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        mass = np.array(self.mass, dtype=float).reshape(-1)
        if mass.shape != (len(self.states),):
            raise DomainError("one mass per state required")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > _TOL:
            raise DomainError(f"state masses must be a distribution, got {mass}")
        if self.cost_budget < 0:
            raise DomainError("cost budget must be nonnegative")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def for_model(cls, model: FiniteEdms, mass: Mapping | Sequence, cost_budget=math.inf):
        """Build from a ``{state: prob}`` mapping (or a vector in state order) and
        check the expected-cost constraint against ``model``."""
        if isinstance(mass, Mapping):
            unknown = set(mass) - set(model.states)
            if unknown:
                raise DomainError(f"unknown states {sorted(map(str, unknown))}")
            vec = [float(mass.get(s, 0.0)) for s in model.states]
        else:
            vec = list(mass)
        p = cls(model.states, vec, cost_budget)
        p.check(model)
        return p

    @classmethod
    def point(cls, model: FiniteEdms, s, cost_budget=math.inf):
        return cls.for_model(model, {s: 1.0}, cost_budget)

    def expected_cost(self, model: FiniteEdms) -> float:
        self._match(model)
        return float(self.mass @ model.cost)

    def check(self, model: FiniteEdms):
        if self.expected_cost(model) > self.cost_budget + _TOL:
            raise InfeasibleError("state distribution exceeds its cost budget")

    def _match(self, model):
        if self.states != model.states:
            raise DomainError("state distribution and model have different state sets")

    def as_dict(self):
        return dict(zip(self.states, map(float, self.mass)))


@dataclass(frozen=True)
class RatePoint:
    r_sk: float
    r_m: float

    def __post_init__(self):
        if self.r_sk < 0 or self.r_m < 0:
            raise DomainError("rates must be nonnegative")


@dataclass(frozen=True)
class ExponentTriple:
    r_sk: float
    e_r: float
    e_s: float

    def __post_init__(self):
        if self.e_r < 0 or self.e_s < 0:
            raise DomainError("exponents must be nonnegative")


def _check_unit(x, name):
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")


def _e0_tilde_table(p_ab, rho):
    # Q(b) (sum_a W(a|b)^{1/(1+rho)})^{1+rho} == (sum_a p(a,b)^{1/(1+rho)})^{1+rho};
    # zero-mass columns drop out on their own.
    inner = np.power(p_ab, 1.0 / (1.0 + rho)).sum(axis=0)
    return math.log(float(np.power(inner, 1.0 + rho).sum()))


def _f0_tilde_table(p_ae, alpha):
    q = p_ae.sum(axis=0)
    nz = q > 0
    v = p_ae[:, nz] / q[nz]
    return -math.log(float((q[nz] * np.power(v, 1.0 + alpha).sum(axis=0)).sum()))


def e0_tilde(model: FiniteEdms, rho: float, s) -> float:
    """State-wise Gallager function ``log sum_b Q_s(b) (sum_a W_s(a|b)^{1/(1+rho)})^{1+rho}``."""
    _check_unit(rho, "rho")
    return max(_e0_tilde_table(model.p_ab(s), rho), 0.0)


def f0_tilde(model: FiniteEdms, alpha: float, s) -> float:
    """State-wise secrecy function ``-log sum_e Q~_s(e) sum_a V_s(a|e)^{1+alpha}``."""
    _check_unit(alpha, "alpha")
    return max(_f0_tilde_table(model.p_ae(s), alpha), 0.0)


def e0(model: FiniteEdms, p_s: StateDistribution, rho: float) -> float:
    _check_unit(rho, "rho")
    p_s._match(model)
    return float(sum(m * e0_tilde(model, rho, s) for s, m in zip(model.states, p_s.mass) if m > 0))


def f0(model: FiniteEdms, p_s: StateDistribution, alpha: float) -> float:
    _check_unit(alpha, "alpha")
    p_s._match(model)
    return float(sum(m * f0_tilde(model, alpha, s) for s, m in zip(model.states, p_s.mass) if m > 0))


def _state_cond_entropy(pxy):
    return entropy(pxy) - entropy(pxy.sum(axis=0))


def _per_state(model, fn):
    return np.array([fn(model.joint[i]) for i in range(len(model.states))])


def _h_ab_states(model):
    return _per_state(model, lambda t: _state_cond_entropy(t.sum(axis=2)))


def _h_ae_states(model):
    return _per_state(model, lambda t: _state_cond_entropy(t.sum(axis=1)))


def conditional_entropy_ab(model: FiniteEdms, p_s: StateDistribution) -> float:
    """H(X_a | X_b, S) in nats under ``p_s``."""
    p_s._match(model)
    return float(p_s.mass @ _h_ab_states(model))


def conditional_entropy_ae(model: FiniteEdms, p_s: StateDistribution) -> float:
    """H(X_a | X_e, S) in nats under ``p_s``."""
    p_s._match(model)
    return float(p_s.mass @ _h_ae_states(model))


def reliability_exponent(model: FiniteEdms, p_s: StateDistribution, r_m: float) -> float:
    """``max_{0<=rho<=1} rho*r_m - E_0(rho, p_s)``.

    Zero whenever ``r_m`` does not exceed H(X_a|X_b,S).
    """
    if r_m < 0:
        raise DomainError("message rate must be nonnegative")
    if r_m <= conditional_entropy_ab(model, p_s):
        return 0.0
    _, val = golden_max(lambda rho: rho * r_m - e0(model, p_s, rho), 0.0, 1.0)
    return max(val, 0.0)


def secrecy_exponent(model: FiniteEdms, p_s: StateDistribution, rates: RatePoint) -> float:
    """``max_{0<=alpha<=1} F_0(alpha, p_s) - alpha*(r_m + r_sk)``."""
    r_sum = rates.r_sk + rates.r_m
    if r_sum >= conditional_entropy_ae(model, p_s):
        return 0.0
    _, val = golden_max(lambda a: f0(model, p_s, a) - a * r_sum, 0.0, 1.0)
    return max(val, 0.0)


def exponent_triple(model, p_s, rates: RatePoint) -> ExponentTriple:
    return ExponentTriple(
        rates.r_sk,
        reliability_exponent(model, p_s, rates.r_m),
        secrecy_exponent(model, p_s, rates),
    )


def _mutual_info(pxy):
    return entropy(pxy.sum(axis=1)) + entropy(pxy.sum(axis=0)) - entropy(pxy)


def state_key_rates(model: FiniteEdms) -> np.ndarray:
    """Per-state ``|I(X_a;X_b|S=s) - I(X_a;X_e|S=s)|^+``."""
    return _per_state(
        model, lambda t: max(_mutual_info(t.sum(axis=2)) - _mutual_info(t.sum(axis=1)), 0.0)
    )


def state_upper_rates(model: FiniteEdms) -> np.ndarray:
    """Per-state ``I(X_a;X_b|X_e,S=s)``."""

    def cmi(t):
        # I(A;B|E) = H(A,E) + H(B,E) - H(A,B,E) - H(E)
        return max(
            entropy(t.sum(axis=1)) + entropy(t.sum(axis=0)) - entropy(t) - entropy(t.sum(axis=(0, 1))),
            0.0,
        )

    return _per_state(model, cmi)


def best_two_point(values, cost, budget):
    """Maximize ``sum p_s values_s`` subject to ``sum p_s cost_s <= budget``.

    One linear constraint on the simplex puts an optimum on a vertex with at
    most two support points, so all singletons and budget-tight pairs are
    enumerated.

    Returns
    -------
    (value, mass) : float, ndarray
    """
    values = np.asarray(values, dtype=float)
    cost = np.asarray(cost, dtype=float)
    feasible = cost <= budget + _TOL
    if not feasible.any():
        raise InfeasibleError(f"every state costs more than the budget {budget}")
    k = len(values)
    idx = np.flatnonzero(feasible)
    i = idx[np.argmax(values[idx])]
    best, mass = float(values[i]), np.eye(k)[i]
    for i in idx:
        for j in np.flatnonzero(cost > budget + _TOL):
            lam = (budget - cost[i]) / (cost[j] - cost[i])
            v = (1.0 - lam) * values[i] + lam * values[j]
            if v > best:
                best = float(v)
                mass = np.zeros(k)
                mass[i], mass[j] = 1.0 - lam, lam
    return best, mass


def degraded_capacity(model: FiniteEdms, cost_budget: float = math.inf) -> float:
    """Key capacity for an EDMS with degraded states under an expected-cost budget."""
    if not model.degraded:
        raise DomainError("model is not declared degraded")
    return best_two_point(state_key_rates(model), model.cost, cost_budget)[0]


def capacity_upper_bound(model: FiniteEdms, cost_budget: float = math.inf) -> float:
    """``max_{p_S} I(X_a; X_b | X_e, S)`` within the budget."""
    return best_two_point(state_upper_rates(model), model.cost, cost_budget)[0]


def optimized_reliability_exponent(
    model: FiniteEdms, cost_budget: float, r_sk: float, points: int = 200
) -> float:
    """Reliability exponent at key rate ``r_sk`` jointly optimized over ``p_S``.

    Uses ``r_m = H(X_a|X_e,S) - r_sk``. For fixed rho the objective is linear
    in p_S, so the inner problem is :func:`best_two_point`; the outer rho
    search is a grid refined by golden section.
    """
    if r_sk < 0:
        raise DomainError("key rate must be nonnegative")
    if not (model.cost <= cost_budget + _TOL).any():
        raise InfeasibleError(f"every state costs more than the budget {cost_budget}")
    h_ae = _h_ae_states(model)
    n_states = len(model.states)

    def objective(rho):
        vals = [rho * (h_ae[i] - r_sk) - _e0_tilde_table(model.joint[i].sum(axis=2), rho)
                for i in range(n_states)]
        return best_two_point(vals, model.cost, cost_budget)[0]

    _, val = grid_refine_max(objective, 0.0, 1.0, points=points)
    return max(val, 0.0)


def tradeoff_surface(model: FiniteEdms, p_s: StateDistribution, r_sk: float, r_m_grid):
    """Rows ``(r_m, e_r, e_s)`` along an ascending message-rate grid."""
    grid = [float(r) for r in r_m_grid]
    if not grid:
        raise DomainError("empty message-rate grid")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("message-rate grid must be ascending")
    return [
        (r, reliability_exponent(model, p_s, r), secrecy_exponent(model, p_s, RatePoint(r_sk, r)))
        for r in grid
    ]


def is_degraded(model: FiniteEdms, tol: float = 1e-9) -> bool:
    """True if ``p(a,b,e|s) = p(a,b|s) p(e|b,s)`` in every state."""
    for t in model.joint:
        p_ab = t.sum(axis=2)
        p_be = t.sum(axis=0)
        q_b = p_be.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_e_b = np.where(q_b[:, None] > 0, p_be / q_b[:, None], 0.0)
        if np.max(np.abs(t - p_ab[:, :, None] * p_e_b[None, :, :])) > tol:
            return False
    return True


# -- model files -------------------------------------------------------------


def model_to_dict(model: FiniteEdms, p_s: StateDistribution | None = None) -> dict:
    out = {
        "schema": SCHEMA,
        "states": list(model.states),
        "alphabets": {
            "x_a": list(model.alphabet_a),
            "x_b": list(model.alphabet_b),
            "x_e": list(model.alphabet_e),
        },
        "tables": [t.reshape(-1).tolist() for t in model.joint],
        "costs": model.cost.tolist(),
        "degraded": model.degraded,
    }
    if p_s is not None:
        out["state_distribution"] = p_s.mass.tolist()
        if math.isfinite(p_s.cost_budget):
            out["cost_budget"] = p_s.cost_budget
    return out


def model_from_dict(doc: dict):
    """Parse an ``edms-model/1`` document.

    Returns
    -------
    (model, p_s) : FiniteEdms, StateDistribution or None
    """
    if doc.get("schema") != SCHEMA:
        raise DomainError(f"unsupported schema {doc.get('schema')!r}, expected {SCHEMA!r}")
    try:
        alph = doc["alphabets"]
        states = doc["states"]
        shape = (len(alph["x_a"]), len(alph["x_b"]), len(alph["x_e"]))
        tables = [np.asarray(t, dtype=float).reshape(shape) for t in doc["tables"]]
        model = FiniteEdms(
            states, alph["x_a"], alph["x_b"], alph["x_e"],
            np.stack(tables) if tables else np.zeros((0,) + shape),
            doc["costs"],
            bool(doc.get("degraded", False)),
        )
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed model document: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"malformed model document: {exc}") from exc
    p_s = None
    if "state_distribution" in doc:
        p_s = StateDistribution.for_model(
            model, doc["state_distribution"], float(doc.get("cost_budget", math.inf))
        )
    return model, p_s


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def save_model(path, model: FiniteEdms, p_s: StateDistribution | None = None):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, p_s), fh, indent=2)
        fh.write("\n")


# -- model builders ------------------------------------------------------------


def bsc_model(theta: float, w: float = 0.5, cost: float = 0.0) -> FiniteEdms:
    """One-state binary model: uniform X_a, X_b = X_a xor BSC(theta), X_e = X_a xor BSC(w).

    Bob and Eve's noises are independent given X_a.
    """
    return binary_model([(theta, w, cost)], states=("s0",))


def binary_model(params, states=None, degraded=False) -> FiniteEdms:
    """Multi-state binary model from ``(theta, w, cost)`` triples."""
    states = tuple(states) if states is not None else tuple(f"s{i}" for i in range(len(params)))
    tables = []
    for theta, w, _ in params:
        t = np.zeros((2, 2, 2))
        for a in range(2):
            for b in range(2):
                for e in range(2):
                    t[a, b, e] = 0.5 * (theta if a != b else 1 - theta) * (w if a != e else 1 - w)
        tables.append(t)
    return FiniteEdms(states, (0, 1), (0, 1), (0, 1), np.stack(tables),
                      [c for _, _, c in params], degraded)
