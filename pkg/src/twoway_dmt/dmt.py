"""Closed-form diversity-multiplexing tradeoff curves and exponent recursions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

_TOL = 1e-12


class CurveKind(str, Enum):
    NoCSIT = "NoCSIT"
    FDD_1bit_1p5 = "FDD_1bit_1p5"
    FDD_Klevel_1p5 = "FDD_Klevel_1p5"
    FDD_iterative = "FDD_iterative"
    TDD_1p5 = "TDD_1p5"
    TDD_iterative = "TDD_iterative"
    QuantizedPerfect = "QuantizedPerfect"


@dataclass
class DmtCurve:
    protocol: CurveKind
    m: int
    n: int
    K: int
    points: list = field(default_factory=list)


def outage_knots(p: float, m: int, n: int):
    """Knots ``(k p, p (m-k)(n-k))`` of the no-CSIT outage exponent at power exponent ``p``."""
    return [(k * p, p * (m - k) * (n - k)) for k in range(min(m, n) + 1)]


def outage_exponent(r: float, p: float, m: int, n: int) -> float:
    """Outage exponent at multiplexing gain ``r`` and power exponent ``p`` (perfect CSIR)."""
    if p <= 0:
        raise ValueError("power exponent p must be positive")
    mn = min(m, n)
    if r < -_TOL or r > mn * p + 1e-9:
        raise ValueError(f"r={r} outside [0, {mn * p}]")
    r = min(max(r, 0.0), mn * p)
    k = min(int(math.floor(r / p)), mn - 1)
    x0, y0 = k * p, p * (m - k) * (n - k)
    y1 = p * (m - k - 1) * (n - k - 1)
    return y0 + (y1 - y0) * (r - x0) / p


def nested_outage_exponent(r: float, K: int, m: int, n: int) -> float:
    """Apply ``outage_exponent(r, 1 + previous)`` K times, starting from 0."""
    if K < 0:
        raise ValueError("K must be >= 0")
    value = 0.0
    for _ in range(K):
        value = outage_exponent(r, 1.0 + value, m, n)
    return value


def low_region_exponent(r: float, m: int) -> float:
    return max((r - m + 1.0) / m, 0.0)


def dmt_no_feedback(r: float, m: int, n: int) -> float:
    return outage_exponent(r, 1.0, m, n)


def dmt_fdd_1bit(r: float, m: int, n: int) -> float:
    return nested_outage_exponent(r, 2, m, n)


def dmt_fdd_klevel(r: float, K: int, m: int, n: int) -> float:
    if K < 2:
        raise ValueError("K-level protocol needs K >= 2")
    cm = low_region_exponent(r, m)
    inner = outage_exponent(r, 1.0 + cm, m, n)
    return min(outage_exponent(r, 1.0 + inner, m, n), nested_outage_exponent(r, K, m, n))


def dmt_fdd_klevel_limit(r: float, m: int, n: int) -> float:
    """Large-K limit of the K-level curve."""
    return outage_exponent(r, 1.0 + outage_exponent(r, 1.0 + low_region_exponent(r, m), m, n), m, n)


def dmt_fdd_iterative(r: float, K: int, m: int, n: int) -> float:
    if K < 1:
        raise ValueError("K must be >= 1")
    return nested_outage_exponent(r, K, m, n)


def dmt_tdd_15(r: float, m: int, n: int) -> float:
    if r < 1:
        return m * n * (2.0 - r)
    return outage_exponent(r, 1.0, m, n)


def tdd_round_exponent(r: float, k: int, m: int, n: int, eps: float = 0.0) -> float:
    """Round exponent: 0 at round 1, ``mn + outage_exponent(r, mn)`` at round 2, then ``mn (1 + previous) - eps``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return 0.0
    mn = m * n
    value = mn + outage_exponent(r, float(mn), m, n)
    for _ in range(3, k + 1):
        value = mn * (1.0 + value) - eps
    return value


def dmt_tdd_iterative(r: float, K: int, m: int, n: int) -> float:
    if K < 2:
        raise ValueError("iterative TDD protocol needs K >= 2")
    mn = m * n
    if mn == 1:
        return K - r
    return mn * (mn ** K - 1) / (mn - 1) - mn ** (K - 2) * (m + n - 1) * r


def tdd_iterative_recursive_form(r: float, K: int, m: int, n: int) -> float:
    """``mn (1 + tdd_round_exponent(r, K - 1))``, the recursive counterpart of the closed form."""
    return m * n * (1.0 + tdd_round_exponent(r, K - 1, m, n))


def noisy_training_exponent(r: float, p: float, m: int, n: int) -> tuple[float, float]:
    """Outage exponent with power control on a noisy transmitter estimate trained at ``SNR^p``.

    Returns ``(mn p + G(r, 1 + (mn-1) p), mn (1 + p mn) - (m+n-1) r)``.
    """
    if p < 1:
        raise ValueError("training exponent p must be >= 1")
    mn = m * n
    via_g = mn * p + outage_exponent(r, 1.0 + (mn - 1) * p, m, n)
    closed = mn * (1.0 + p * mn) - (m + n - 1) * r
    return via_g, closed


def bits_about_channel(r: float, m: int, n: int = 1) -> float:
    """Number of reliably derivable feedback bits about the forward channel."""
    if r < 0 or r >= m:
        raise ValueError("need 0 <= r < m")
    if r == 0:
        return 1.0
    if m == 1 and n == 1:
        # r in ((K-1)/K, K/(K+1)]  <=>  K = ceil(r / (1 - r))
        K = max(1, math.ceil(r / (1.0 - r) - 1e-12))
        return math.log2(K + 2)
    if r <= m - 1:
        return 1.0
    cm = low_region_exponent(r, m)
    K = 0
    while cm > nested_outage_exponent(r, K + 1, m, n):
        K += 1
    return math.log2(K + 3)


def curve_value(kind, r: float, m: int, n: int, K: int) -> float:
    kind = CurveKind(kind)
    if kind is CurveKind.NoCSIT:
        return dmt_no_feedback(r, m, n)
    if kind is CurveKind.FDD_1bit_1p5:
        return dmt_fdd_1bit(r, m, n)
    if kind is CurveKind.FDD_Klevel_1p5:
        return dmt_fdd_klevel(r, K, m, n)
    if kind is CurveKind.FDD_iterative:
        return dmt_fdd_iterative(r, K, m, n)
    if kind is CurveKind.TDD_1p5:
        return dmt_tdd_15(r, m, n)
    if kind is CurveKind.TDD_iterative:
        return dmt_tdd_iterative(r, K, m, n)
    return nested_outage_exponent(r, K, m, n)


def dmt_curve(kind, m: int, n: int, K: int = 2, r_step: float = 0.1) -> DmtCurve:
    """Sample a curve on ``[0, min(m, n)]`` at ``r_step``, always including integer knots."""
    if r_step <= 0:
        raise ValueError("r_step must be positive")
    top = min(m, n)
    steps = int(round(top / r_step))
    rs = {round(i * r_step, 12) for i in range(steps + 1) if i * r_step <= top + 1e-12}
    rs |= {float(k) for k in range(top + 1)}
    points = [(r, curve_value(kind, r, m, n, K)) for r in sorted(rs)]
    return DmtCurve(CurveKind(kind), m, n, K, points)


def write_curve_csv(curve: DmtCurve, path_or_buf) -> None:
    lines = ["r,d"] + [f"{_fmt(r)},{_fmt(d)}" for r, d in curve.points]
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


def is_nonincreasing(values, tol: float = 1e-9) -> bool:
    v = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(v) <= tol))
