"""Outage-probability estimation, diversity-slope fits and power audits.

Trials are split into fixed-size chunks.  Chunk ``c`` draws its channels
and protocol noise from ``default_rng([seed, c])``, so a result depends only
on ``(cfg, trials, seed)`` and never on how chunks are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .protocols import ProtocolConfig, run_batch, sample_channels

CHUNK = 65536
Z95 = 1.959963984540054


class InsufficientDataError(ValueError):
    """Raised when fewer than two usable points are available for a fit."""


@dataclass
class SimResult:
    protocol: str
    m: int
    n: int
    K: int
    r: float
    epsilon: float
    delta: float
    snr: float
    trials: int
    outages: int
    rate: float
    ci_lo: float
    ci_hi: float
    tx_energy_mean: float
    rx_energy_mean: float
    seed: int
    snr_db: float | None = None  # exact dB value when the point was specified in dB

    def db(self) -> float:
        return self.snr_db if self.snr_db is not None else 10.0 * math.log10(self.snr)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SlopeFit:
    points: list
    slope: float
    intercept: float
    slope_stderr: float
    points_used: int

    @property
    def diversity(self) -> float:
        return -self.slope


@dataclass
class AuditResult:
    node: str
    slope: float
    intercept: float
    margin: float
    passed: bool
    points: list = field(default_factory=list)


def wilson_interval(k: int, n: int, z: float = Z95):
    if n <= 0:
        raise ValueError("need at least one trial")
    p = k / n
    den = 1.0 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    # rounding can push a bound past the point estimate at k = 0 or k = n
    return min(max(0.0, mid - half), p), max(min(1.0, mid + half), p)


def _chunk_sizes(trials: int):
    full, rest = divmod(trials, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def _run_chunk(args):
    cfg, size, seed, index = args
    rng = np.random.default_rng([seed, index])
    H, Hf = sample_channels(cfg, size, rng)
    out = run_batch(cfg, H, Hf, rng)
    return int(out.outage.sum()), float(out.tx_energy.sum()), float(out.rx_energy.sum())


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def estimate_outage(cfg: ProtocolConfig, trials: int, seed: int, workers: int = 1) -> SimResult:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(cfg, size, seed, i) for i, size in enumerate(_chunk_sizes(trials))]
    parts = _map(_run_chunk, jobs, workers)
    outages = sum(p[0] for p in parts)
    tx = math.fsum(p[1] for p in parts) / trials
    rx = math.fsum(p[2] for p in parts) / trials
    lo, hi = wilson_interval(outages, trials)
    return SimResult(cfg.kind.value, cfg.m, cfg.n, cfg.K, cfg.r, cfg.epsilon, cfg.delta,
                     float(cfg.snr), trials, outages, outages / trials, lo, hi, tx, rx, seed)


def sample_transcripts(cfg: ProtocolConfig, count: int, seed: int):
    """The first ``count`` per-trial transcripts of the run ``estimate_outage`` would make."""
    if count <= 0:
        return []
    size = min(CHUNK, max(count, 1))
    rng = np.random.default_rng([seed, 0])
    H, Hf = sample_channels(cfg, size, rng)
    out = run_batch(cfg, H, Hf, rng)
    return [out.transcript(i) for i in range(min(count, size))]


def sweep(cfg: ProtocolConfig, snr_grid, trials: int, seed: int, workers: int = 1) -> list:
    """One result per SNR, sorted by SNR; every point reuses ``seed`` (common random numbers)."""
    results = [estimate_outage(replace(cfg, snr=float(s)), trials, seed, workers) for s in snr_grid]
    return sorted(results, key=lambda r: r.snr)


def _ols(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    dof = len(x) - 2
    if dof > 0:
        resid = y - A @ coef
        s2 = float(resid @ resid) / dof
        sxx = float(np.sum((x - x.mean()) ** 2))
        stderr = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    else:
        stderr = 0.0
    return slope, intercept, stderr


def fit_diversity_slope(results) -> SlopeFit:
    """OLS of log10 outage rate on log10 SNR over points with at least one outage."""
    pts = [(math.log10(r.snr), math.log10(r.rate)) for r in results if r.outages > 0]
    if len(pts) < 2:
        raise InsufficientDataError(f"need >= 2 points with outages, got {len(pts)}")
    xs, ys = zip(*pts)
    if len(set(xs)) < 2:
        raise InsufficientDataError("need at least two distinct SNR values")
    slope, intercept, stderr = _ols(xs, ys)
    return SlopeFit(pts, slope, intercept, stderr, len(pts))


def power_audit(results, node: str, margin: float = 0.1) -> AuditResult:
    """Fit log mean energy against log SNR for ``node`` and pass iff the slope is at most ``1 + margin``."""
    if node not in ("transmitter", "receiver"):
        raise ValueError("node must be 'transmitter' or 'receiver'")
    attr = "tx_energy_mean" if node == "transmitter" else "rx_energy_mean"
    pts = [(math.log10(r.snr), math.log10(getattr(r, attr))) for r in results if getattr(r, attr) > 0]
    if not pts:
        # a node that never transmits trivially meets its constraint
        return AuditResult(node, 0.0, -math.inf, margin, True, [])
    if len({p[0] for p in pts}) < 2:
        raise InsufficientDataError("need energies at two or more SNR values")
    xs, ys = zip(*pts)
    slope, intercept, _ = _ols(xs, ys)
    return AuditResult(node, slope, intercept, margin, slope <= 1.0 + margin, pts)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
