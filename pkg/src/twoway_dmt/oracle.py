"""Brute-force minimisation of SNR exponents over eigenvalue-exponent events.

An event is a set of piecewise-affine constraints over the exponent vectors
``alpha`` (true channel) and ``alpha_hat`` (estimated channel).  The event's
probability exponent is the minimum of the joint density exponent over the
set.  The minimum is located on a coarse-to-fine grid and then sharpened by
solving the linear piece containing the best grid point exactly (vertex
enumeration), so no LP package is needed.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dmt

PERFECT_CSI = "perfect"
TRAINED_CSI = "trained"


def density_weights(m: int, n: int) -> np.ndarray:
    """Weights ``2i - 1 + |n - m|`` of the eigenvalue-exponent density."""
    return np.array([2 * i - 1 + abs(n - m) for i in range(1, min(m, n) + 1)], dtype=float)


@dataclass
class Term:
    """Affine function ``coef . x + const`` of ``x = [alpha, alpha_hat]``."""
    coef: np.ndarray
    const: float


@dataclass
class Constraint:
    """``sum_j (term_j)^+  <= rhs`` (or ``>=``); ``clip=False`` drops the positive part."""
    terms: list
    rhs: float
    sense: str = "le"
    clip: bool = True

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for t in self.terms:
            v = X @ t.coef + t.const
            total += np.maximum(v, 0.0) if self.clip else v
        return total

    def holds(self, X: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        v = self.evaluate(X)
        return v <= self.rhs + tol if self.sense == "le" else v >= self.rhs - tol

    def __call__(self, alpha, alpha_hat=None) -> bool:
        alpha = np.asarray(alpha, dtype=float)
        alpha_hat = alpha if alpha_hat is None else np.asarray(alpha_hat, dtype=float)
        x = np.concatenate([alpha, alpha_hat])[None]
        return bool(self.holds(x)[0])


@dataclass
class ExponentEvent:
    m: int
    n: int
    constraints: list = field(default_factory=list)
    objective_mode: str = PERFECT_CSI
    train_power_exponent: float = 0.0
    partitions: tuple | None = None  # restrict the resolution partitions searched (trained mode only)
    scale: float = 1.0               # largest power exponent appearing in the constraints
    label: str = ""

    def __post_init__(self):
        if self.objective_mode not in (PERFECT_CSI, TRAINED_CSI):
            raise ValueError(f"unknown objective mode {self.objective_mode!r}")
        if self.objective_mode == TRAINED_CSI and self.train_power_exponent <= 0:
            raise ValueError("trained mode requires a positive training exponent")

    @property
    def size(self) -> int:
        return min(self.m, self.n)


@dataclass
class ExponentResult:
    value: float
    alpha: np.ndarray | None
    alpha_hat: np.ndarray | None
    partition: int | None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)


# helpers for building terms -------------------------------------------------

def _unit(size: int, idx: int, hat: bool = False, scale: float = 1.0) -> np.ndarray:
    v = np.zeros(2 * size)
    v[idx + (size if hat else 0)] = scale
    return v


def gap_terms(size: int, level: float, hat: bool = False) -> list:
    """Terms ``level - alpha_i`` (or ``alpha_hat_i``) for every eigenvalue."""
    return [Term(-_unit(size, i, hat), float(level)) for i in range(size)]


def strongest_gap(size: int, level: float, hat: bool = False) -> list:
    """Single term ``level - alpha_min``: received-power exponent through the strongest mode."""
    return [Term(-_unit(size, size - 1, hat), float(level))]


# the per-partition search space ----------------------------------------------

@dataclass
class _Space:
    T: np.ndarray      # x = T z
    lo: np.ndarray
    hi: np.ndarray
    order: list        # pairs (i, j) with z_i >= z_j
    c: np.ndarray      # objective = c . z + c0
    c0: float
    k: int | None


def _spaces(event: ExponentEvent, alpha_max: float) -> list:
    s = event.size
    w = density_weights(event.m, event.n)
    out = []
    if event.objective_mode == PERFECT_CSI:
        T = np.vstack([np.eye(s), np.eye(s)])
        order = [(i, i + 1) for i in range(s - 1)]
        out.append(_Space(T, np.zeros(s), np.full(s, alpha_max), order, w.copy(), 0.0, None))
        return out
    p = event.train_power_exponent
    ks = range(s + 1) if event.partitions is None else event.partitions
    for k in ks:
        d = s + k
        T = np.zeros((2 * s, d))
        T[:s, :s] = np.eye(s)
        for i in range(s):
            T[s + i, s + i if i < k else i] = 1.0
        lo = np.array([p if i < k else 0.0 for i in range(s)] + [p] * k)
        hi = np.array([alpha_max if i < k else p for i in range(s)] + [alpha_max] * k)
        order = [(i, i + 1) for i in range(s - 1)] + [(s + i, s + i + 1) for i in range(k - 1)]
        c = np.concatenate([w, w[:k]])
        c0 = -k * p * (abs(event.n - event.m) + k)
        out.append(_Space(T, lo, hi, order, c, c0, k))
    return out


def _axis(lo: float, hi: float, step: float, center=None, halfwidth=None) -> np.ndarray:
    a, b = lo, hi
    if center is not None:
        a, b = max(lo, center - halfwidth), min(hi, center + halfwidth)
    if b < a:
        return np.array([])
    start = math.ceil(a / step - 1e-9) * step
    pts = np.arange(start, b + 1e-12, step)
    extra = [x for x in (lo, hi) if a - 1e-12 <= x <= b + 1e-12]
    return np.unique(np.round(np.concatenate([pts, extra]), 12))


def _evaluate(event: ExponentEvent, sp: _Space, Z: np.ndarray):
    if Z.size == 0:
        return np.array([]), np.zeros(0, dtype=bool)
    ok = np.ones(Z.shape[0], dtype=bool)
    for i, j in sp.order:
        ok &= Z[:, i] >= Z[:, j] - 1e-12
    X = Z @ sp.T.T
    for con in event.constraints:
        ok &= con.holds(X)
    return Z @ sp.c + sp.c0, ok


def _product(axes) -> np.ndarray:
    if not axes:
        return np.zeros((1, 0))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


_MAX_POINTS = 3_000_000


def _grid_search(event, sp: _Space, grid_step: float, keep: int = 24):
    d = len(sp.lo)
    if d == 0:
        vals, ok = _evaluate(event, sp, np.zeros((1, 0)))
        return (vals[0], np.zeros(0)) if ok[0] else (math.inf, None)
    # coarsest level: a power-of-two multiple of grid_step with a bounded point count
    span = float(np.max(sp.hi - sp.lo))
    level = 0
    while (span / (grid_step * 2 ** level) + 2) ** d > 4e5:
        level += 1
    best_pts = None
    while best_pts is None:
        step = grid_step * 2 ** level
        Z = _product([_axis(sp.lo[i], sp.hi[i], step) for i in range(d)])
        vals, ok = _evaluate(event, sp, Z)
        if ok.any():
            idx = np.flatnonzero(ok)
            idx = idx[np.argsort(vals[idx], kind="stable")[:keep]]
            best_pts, best_vals = Z[idx], vals[idx]
        elif level == 0 or (span / (grid_step * 2 ** (level - 1)) + 2) ** d > _MAX_POINTS:
            return math.inf, None
        else:
            level -= 1
    while level > 0:
        prev = grid_step * 2 ** level
        level -= 1
        step = grid_step * 2 ** level
        chunks = []
        for z in best_pts:
            axes = [_axis(sp.lo[i], sp.hi[i], step, z[i], 2 * prev) for i in range(d)]
            chunks.append(_product(axes))
        Z = np.unique(np.round(np.vstack(chunks + [best_pts]), 12), axis=0)
        vals, ok = _evaluate(event, sp, Z)
        idx = np.flatnonzero(ok)
        idx = idx[np.argsort(vals[idx], kind="stable")[:keep]]
        best_pts, best_vals = Z[idx], vals[idx]
    return float(best_vals[0]), best_pts[0]


def _piece_rows(event, sp: _Space, z_star: np.ndarray):
    """Linear inequalities ``A z <= b`` describing the affine piece containing ``z_star``."""
    d = len(z_star)
    rows, rhs = [], []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        rows += [e, -e]
        rhs += [sp.hi[i], -sp.lo[i]]
    for i, j in sp.order:
        e = np.zeros(d)
        e[i], e[j] = -1.0, 1.0
        rows.append(e)
        rhs.append(0.0)
    x_star = sp.T @ z_star
    for con in event.constraints:
        a_sum, b_sum = np.zeros(d), 0.0
        for t in con.terms:
            a = t.coef @ sp.T
            val = t.coef @ x_star + t.const
            if not con.clip or val > 1e-12:
                a_sum += a
                b_sum += t.const
                if con.clip:
                    rows.append(-a)
                    rhs.append(t.const)
            elif con.clip:
                rows.append(a)
                rhs.append(-t.const)
        if con.sense == "le":
            rows.append(a_sum)
            rhs.append(con.rhs - b_sum)
        else:
            rows.append(-a_sum)
            rhs.append(b_sum - con.rhs)
    A = np.array(rows)
    b = np.array(rhs)
    keyed = np.unique(np.round(np.column_stack([A, b]), 12), axis=0)
    return keyed[:, :-1], keyed[:, -1]


def _exact_piece(event, sp: _Space, z_star: np.ndarray):
    """Minimum of the linear objective over the piece, by enumerating its vertices."""
    A, b = _piece_rows(event, sp, z_star)
    d = A.shape[1]
    if d == 0 or math.comb(A.shape[0], d) > 400_000:
        return None
    combos = np.array(list(itertools.combinations(range(A.shape[0]), d)))
    M = A[combos]
    rhs = b[combos]
    det = np.linalg.det(M)
    good = np.abs(det) > 1e-10
    if not good.any():
        return None
    Zv = np.linalg.solve(M[good], rhs[good][..., None])[..., 0]
    feas = np.all(Zv @ A.T <= b + 1e-9, axis=1)
    if not feas.any():
        return None
    Zv = Zv[feas]
    vals = Zv @ sp.c + sp.c0
    i = int(np.argmin(vals))
    # guard against numerical drift: the vertex must satisfy the original event
    v2, ok = _evaluate(event, sp, Zv[i:i + 1])
    if not ok[0]:
        return None
    return float(vals[i]), Zv[i]


def min_exponent(event: ExponentEvent, grid_step: float = 0.01, alpha_max: float | None = None,
                 refine: bool = True) -> ExponentResult:
    """Minimum density exponent over the event; ``+inf`` when the event is empty."""
    if not (0 < grid_step <= 0.1):
        raise ValueError("grid_step must lie in (0, 0.1]")
    if alpha_max is None:
        alpha_max = max(event.scale, event.train_power_exponent) + event.size + 1.0
    best = ExponentResult(math.inf, None, None, None)
    for sp in _spaces(event, alpha_max):
        val, z = _grid_search(event, sp, grid_step)
        if z is None:
            continue
        if refine:
            exact = _exact_piece(event, sp, z)
            if exact is not None and exact[0] < val:
                val, z = exact
        if val < best.value:
            x = sp.T @ z
            s = event.size
            best = ExponentResult(val, x[:s], x[s:], sp.k)
    return best


# catalog ------------------------------------------------------------------

@dataclass
class CatalogCase:
    case_id: str
    source: str
    defaults: dict
    build: Callable
    target: Callable
    note: str = ""


def _p_klevel(r, eps, m, n, u):
    return min(dmt.nested_outage_exponent(r + eps, u, m, n), dmt.low_region_exponent(r, m))


def _event(m, n, constraints, mode=PERFECT_CSI, p=0.0, scale=1.0, partitions=None, label=""):
    return ExponentEvent(m, n, constraints, mode, p, partitions, scale, label)


def _kl_case1(m, n, r, eps, delta, K, **_):
    s = min(m, n)
    return _event(m, n, [Constraint(gap_terms(s, 1.0), r + eps, "ge"),
                         Constraint(gap_terms(s, 1.0), r, "le")], label="good at SNR yet short at >= SNR")


def _kl_case2(m, n, r, eps, delta, K, u, **_):
    s = min(m, n)
    level = 1.0 + _p_klevel(r, eps, m, n, u - 1)
    return _event(m, n, [Constraint(gap_terms(s, level), r, "le"),
                         Constraint(gap_terms(s, level, hat=True), r + eps, "ge")],
                  TRAINED_CSI, 1.0, scale=level)


def _kl_case3_level(m, n, r, eps, K):
    return 1.0 + dmt.outage_exponent(r + eps, 1.0 + _p_klevel(r, eps, m, n, K - 2), m, n)


def _kl_case3(m, n, r, eps, delta, K, **_):
    s = min(m, n)
    P = _kl_case3_level(m, n, r, eps, K)
    return _event(m, n, [Constraint(strongest_gap(s, P), dmt.low_region_exponent(r, m) + delta / (m * n))], scale=P)


def _kl_case4_pi(m, n, r, eps, K):
    return min(dmt.nested_outage_exponent(r + eps, K - 1, m, n), dmt.outage_exponent(r, 1.0 + dmt.low_region_exponent(r, m), m, n))


def _kl_case4(m, n, r, eps, delta, K, **_):
    s = min(m, n)
    level = 1.0 + _kl_case4_pi(m, n, r, eps, K)
    return _event(m, n, [Constraint(gap_terms(s, level), r)], scale=level)


def _kl_top(m, n, r, eps, delta, K, **_):
    s = min(m, n)
    level = 1.0 + _p_klevel(r, eps, m, n, K - 2)
    return _event(m, n, [Constraint(gap_terms(s, level, hat=True), r + eps)], TRAINED_CSI, 1.0, scale=level)


def _it_feedback(m, n, r, eps, delta, u, **_):
    s = min(m, n)
    P = 1.0 + dmt.nested_outage_exponent(r + eps, u - 1, m, n)
    return _event(m, n, [Constraint(strongest_gap(s, P), eps / (m * n))], scale=P)


def _it_first(m, n, r, eps, delta, **_):
    s = min(m, n)
    return _event(m, n, [Constraint(gap_terms(s, 1.0, hat=True), r + eps)], TRAINED_CSI, 1.0)


def _it_silent_training(m, n, r, eps, delta, **_):
    s = min(m, n)
    P = 1.0 + dmt.nested_outage_exponent(r + eps, 1, m, n)
    return _event(m, n, [Constraint(gap_terms(s, 1.0), r + eps, "ge"),
                         Constraint(strongest_gap(s, P), eps)], scale=P)


def _it_resolved(m, n, r, eps, delta, u, **_):
    s = min(m, n)
    p = 1.0 + dmt.nested_outage_exponent(r + eps, u - 1, m, n)
    return _event(m, n, [Constraint(gap_terms(s, p), r, "le"),
                         Constraint(gap_terms(s, p, hat=True), r + eps, "ge")], TRAINED_CSI, p, scale=p)


def _it_outage(m, n, r, eps, delta, K, **_):
    s = min(m, n)
    level = 1.0 + dmt.nested_outage_exponent(r + eps, K - 1, m, n)
    return _event(m, n, [Constraint(gap_terms(s, level), r)], scale=level)


def _noisy_pc_terms(m, n, backoff):
    s = min(m, n)
    w = density_weights(m, n)
    hat_part = np.concatenate([np.zeros(s), w])
    return [Term(hat_part - _unit(s, i), 1.0 - backoff) for i in range(s)]


def _noisy_pc(m, n, r, eps, delta, p, partitions=None, **_):
    mn = m * n
    return _event(m, n, [Constraint(_noisy_pc_terms(m, n, eps / mn), r)], TRAINED_CSI, p,
                  scale=1.0 + mn * p, partitions=partitions)


def _noisy_partial(m, n, r, eps, delta, p, k, **_):
    return _noisy_pc(m, n, r, eps, delta, p, partitions=(k,))


def _tdd_q2(m, n, r, eps, delta, **_):
    return _event(m, n, [Constraint(_noisy_pc_terms(m, n, 0.0), r + eps)], TRAINED_CSI, 1.0, scale=1.0 + m * n)


def _tdd_miss(m, n, r, eps, delta, u, **_):
    s = min(m, n)
    P = 1.0 + dmt.tdd_round_exponent(r + eps, u - 1, m, n, eps)
    return _event(m, n, [Constraint(strongest_gap(s, P), eps / (m * n))], scale=P)


def _tdd_outage(m, n, r, eps, delta, K, **_):
    return _tdd_miss(m, n, r, eps, delta, K)


def _nofb_outage(m, n, r, **_):
    return _event(m, n, [Constraint(gap_terms(min(m, n), 1.0), r)])


_INF = lambda **_: math.inf  # noqa: E731

CATALOG = {c.case_id: c for c in [
    CatalogCase("NoCSIT-outage", "no feedback", dict(m=2, n=2, r=1.0),
                _nofb_outage, lambda m, n, r, **_: dmt.outage_exponent(r, 1.0, m, n)),
    CatalogCase("klevel-good-stays-good", "K-level outage case 1", dict(m=1, n=1, r=0.5, eps=0.05, K=3),
                _kl_case1, _INF, "channel good at SNR never in outage at a larger power"),
    CatalogCase("klevel-no-lower-region", "K-level outage case 2", dict(m=1, n=1, r=0.5, eps=0.05, K=4, u=2),
                _kl_case2, _INF, "estimate never places a resolvable channel in a lower region"),
    CatalogCase("klevel-middle-outage", "K-level outage case 3", dict(m=1, n=1, r=1 / 6, eps=0.05, delta=0.01, K=3),
                _kl_case3,
                lambda m, n, r, eps, delta, K, **_: m * n * (_kl_case3_level(m, n, r, eps, K) - dmt.low_region_exponent(r, m)) - delta),
    CatalogCase("klevel-low-outage", "K-level outage case 4", dict(m=1, n=1, r=0.5, eps=0.0, K=2),
                _kl_case4,
                lambda m, n, r, eps, K, **_: dmt.outage_exponent(r, 1.0 + _kl_case4_pi(m, n, r, eps, K), m, n)),
    CatalogCase("klevel-top-region", "K-level top region probability", dict(m=2, n=2, r=1.5, eps=0.05, K=3),
                _kl_top,
                lambda m, n, r, eps, K, **_: dmt.outage_exponent(r + eps, 1.0 + _p_klevel(r, eps, m, n, K - 2), m, n)),
    CatalogCase("iter-feedback-flip", "iterative feedback flip", dict(m=1, n=1, r=0.5, eps=0.05, u=1),
                _it_feedback,
                lambda m, n, r, eps, u, **_: m * n * (1.0 + dmt.nested_outage_exponent(r + eps, u - 1, m, n)) - eps),
    CatalogCase("iter-first-bad", "iterative first-round Bad index", dict(m=2, n=2, r=0.5, eps=0.05),
                _it_first, lambda m, n, r, eps, **_: dmt.nested_outage_exponent(r + eps, 1, m, n)),
    CatalogCase("iter-silent-training", "good estimate with silent later training", dict(m=1, n=1, r=0.5, eps=0.05),
                _it_silent_training, _INF),
    CatalogCase("iter-misquantised", "iterative later-round misquantisation", dict(m=2, n=2, r=0.5, eps=0.05, u=2),
                _it_resolved, _INF),
    CatalogCase("iter-outage", "iterative final outage", dict(m=1, n=1, r=0.5, eps=0.05, K=3),
                _it_outage, lambda m, n, r, eps, K, **_: dmt.outage_exponent(r, 1.0 + dmt.nested_outage_exponent(r + eps, K - 1, m, n), m, n)),
    CatalogCase("noisy-pc-outage", "power control on a noisy estimate", dict(m=1, n=1, r=0.5, eps=0.0, p=1.0),
                _noisy_pc,
                lambda m, n, r, eps, p, **_: m * n * p + dmt.outage_exponent(r, 1.0 + (m * n - 1) * p - eps / (m * n), m, n)),
    CatalogCase("noisy-partial-partition", "outage inside a partially resolved partition",
                dict(m=2, n=2, r=1.0, eps=0.0, p=1.0, k=1), _noisy_partial, _INF),
    CatalogCase("tdd-second-bad", "iterative TDD second-round Bad index", dict(m=1, n=1, r=0.5, eps=0.05),
                _tdd_q2, lambda m, n, r, eps, **_: dmt.tdd_round_exponent(r + eps, 2, m, n)),
    CatalogCase("tdd-feedback-miss", "iterative TDD missed high-power feedback",
                dict(m=1, n=1, r=0.5, eps=0.05, u=3),
                _tdd_miss, lambda m, n, r, eps, u, **_: m * n * (1.0 + dmt.tdd_round_exponent(r + eps, u - 1, m, n, eps)) - eps),
    CatalogCase("tdd-outage", "iterative TDD final outage", dict(m=1, n=1, r=0.5, eps=0.05, K=3),
                _tdd_outage, lambda m, n, r, eps, K, **_: dmt.tdd_round_exponent(r + eps, K, m, n, eps)),
]}

_BASE = dict(m=1, n=1, r=0.5, eps=0.0, delta=0.0, p=1.0, K=2, u=1, k=0)


def _params(catalog_id: str, params: dict | None) -> tuple[CatalogCase, dict]:
    if catalog_id not in CATALOG:
        raise KeyError(f"unknown catalog case {catalog_id!r}; known: {', '.join(CATALOG)}")
    case = CATALOG[catalog_id]
    merged = dict(_BASE)
    merged.update(case.defaults)
    if params:
        merged.update({k: v for k, v in params.items() if v is not None})
    return case, merged


def build_event(catalog_id: str, params: dict | None = None) -> ExponentEvent:
    case, p = _params(catalog_id, params)
    event = case.build(**p)
    event.label = event.label or catalog_id
    return event


def catalog_target(catalog_id: str, params: dict | None = None) -> float:
    case, p = _params(catalog_id, params)
    return float(case.target(**p))


def check_case(catalog_id: str, params: dict | None = None, grid_step: float = 0.01, tol: float = 5e-2):
    """Return ``(computed, target, passed)`` for one catalog case."""
    value = min_exponent(build_event(catalog_id, params), grid_step).value
    target = catalog_target(catalog_id, params)
    if math.isinf(target) or math.isinf(value):
        return value, target, value == target
    return value, target, abs(value - target) <= tol
