"""Two-node training/feedback protocols as vectorised state machines.

Every protocol is written once as a batch engine that processes ``T``
independent channel realisations at a time.  ``run_*`` wraps the engine for
a single :class:`FadingPair` and returns a :class:`Transcript`; the
Monte-Carlo layer calls the engines directly.

Powers are carried as SNR exponents (``-inf`` for a silent codeword) so
that every recorded level can be compared exactly against the configured
levels.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import dmt
from .channel import (
    ChannelEstimate,
    Duplex,
    FadingPair,
    alpha_batch,
    complex_normal,
    estimate_batch,
    logdet2,
    mi_pc_batch,
    mutual_info_lower_bound,
    pc_estimate_batch,
    received_energy_batch,
)
from .oracle import density_weights

SILENT = -math.inf


class ProtocolKind(str, Enum):
    NoCSIT = "NoCSIT"
    FDD_1bit = "FDD_1bit"
    FDD_Klevel = "FDD_Klevel"
    FDD_iterative = "FDD_iterative"
    TDD_1p5 = "TDD_1p5"
    TDD_iterative = "TDD_iterative"
    GenieCSIT = "GenieCSIT"
    GenieCSIR = "GenieCSIR"


DUPLEX = {
    ProtocolKind.NoCSIT: Duplex.FDD,
    ProtocolKind.FDD_1bit: Duplex.FDD,
    ProtocolKind.FDD_Klevel: Duplex.FDD,
    ProtocolKind.FDD_iterative: Duplex.FDD,
    ProtocolKind.TDD_1p5: Duplex.TDD,
    ProtocolKind.TDD_iterative: Duplex.TDD,
    ProtocolKind.GenieCSIT: Duplex.TDD,
    ProtocolKind.GenieCSIR: Duplex.TDD,
}


@dataclass
class ProtocolConfig:
    kind: ProtocolKind
    m: int = 1
    n: int = 1
    K: int = 2
    r: float = 0.5
    epsilon: float = 0.05
    delta: float = 0.01
    snr: float = 1e3
    noiseless_debug: bool = False
    feedback_repeats: int = 1  # pilot blocks averaged by every power detector

    def __post_init__(self):
        self.kind = ProtocolKind(self.kind)
        self.validate()

    @property
    def duplex(self) -> Duplex:
        return DUPLEX[self.kind]

    @property
    def mn(self) -> int:
        return self.m * self.n

    @property
    def rate_bits(self) -> float:
        return self.r * math.log2(self.snr)

    def validate(self) -> None:
        k = self.kind
        if self.m < 1 or self.n < 1:
            raise ValueError("antenna counts must be >= 1")
        if self.snr <= 1:
            raise ValueError("snr must exceed 1")
        if self.feedback_repeats < 1:
            raise ValueError("feedback_repeats must be >= 1")
        top = min(self.m, self.n)
        if not (0 < self.r < top):
            raise ValueError(f"need 0 < r < min(m, n) = {top}")
        if k in (ProtocolKind.NoCSIT, ProtocolKind.GenieCSIT):
            if k is ProtocolKind.GenieCSIT and not (0 <= self.epsilon):
                raise ValueError("epsilon must be nonnegative")
            return
        if not (0 < self.delta < self.epsilon):
            raise ValueError("need 0 < delta < epsilon")
        if self.r + self.epsilon > top:
            raise ValueError("need r + epsilon <= min(m, n)")
        if k in (ProtocolKind.FDD_1bit, ProtocolKind.FDD_Klevel):
            if not (self.epsilon < self.r < self.m - self.epsilon):
                raise ValueError("need epsilon < r < m - epsilon")
        if k in (ProtocolKind.FDD_Klevel, ProtocolKind.FDD_iterative, ProtocolKind.TDD_iterative) and self.K < 2:
            raise ValueError("K must be >= 2 for this protocol")
        if k is ProtocolKind.GenieCSIR and self.K < 1:
            raise ValueError("K must be >= 1")


@dataclass
class RoundRecord:
    index: int
    direction: str          # "forward" (transmitter -> receiver) or "reverse"
    transmit_power: float
    power_exponent: float
    q: int | None = None
    q_hat: int | None = None
    estimate_summary: list | None = None
    label: str = ""


@dataclass
class Transcript:
    rounds: list = field(default_factory=list)
    data_power: float = 0.0
    data_power_exponent: float = 0.0
    tx_energy_total: float = 0.0
    rx_energy_total: float = 0.0
    outage: bool = False
    final_mutual_info: float = 0.0

    def to_json_line(self, trial: int | None = None) -> str:
        rec = {
            "trial": trial,
            "rounds": [
                {
                    "round": rr.index,
                    "direction": rr.direction,
                    "power_exponent": None if math.isinf(rr.power_exponent) else rr.power_exponent,
                    "q": rr.q,
                    "q_hat": rr.q_hat,
                }
                for rr in self.rounds
            ],
            "data_power_exponent": self.data_power_exponent,
            "outage": self.outage,
            "final_mutual_info": self.final_mutual_info,
        }
        return json.dumps(rec, sort_keys=True)


# batch outcome -------------------------------------------------------------

@dataclass
class _Round:
    index: int
    direction: str
    exponent: np.ndarray
    q: np.ndarray | None = None
    q_hat: np.ndarray | None = None
    alpha: np.ndarray | None = None
    label: str = ""


@dataclass
class BatchOutcome:
    snr: float
    rounds: list
    data_exponent: np.ndarray
    mi: np.ndarray
    rate_bits: float

    @property
    def outage(self) -> np.ndarray:
        return self.mi < self.rate_bits

    def _node_energy(self, direction: str) -> np.ndarray:
        total = np.zeros_like(self.data_exponent)
        for rd in self.rounds:
            if rd.direction == direction:
                total = total + _lin(self.snr, rd.exponent)
        return total

    @property
    def tx_energy(self) -> np.ndarray:
        return self._node_energy("forward")

    @property
    def rx_energy(self) -> np.ndarray:
        return self._node_energy("reverse")

    def transcript(self, i: int) -> Transcript:
        recs = []
        for rd in self.rounds:
            e = float(rd.exponent[i])
            recs.append(RoundRecord(
                rd.index, rd.direction, float(_lin(self.snr, e)), e,
                None if rd.q is None else int(rd.q[i]),
                None if rd.q_hat is None else int(rd.q_hat[i]),
                None if rd.alpha is None else [float(a) for a in rd.alpha[i]],
                rd.label,
            ))
        de = float(self.data_exponent[i])
        return Transcript(recs, float(_lin(self.snr, de)), de, float(self.tx_energy[i]),
                          float(self.rx_energy[i]), bool(self.outage[i]), float(self.mi[i]))


def _lin(snr, exponent):
    # near-singular channels give huge exponents; inf power just saturates the detector
    with np.errstate(over="ignore"):
        return np.power(float(snr), exponent)


def _exp(snr, power):
    with np.errstate(divide="ignore"):
        return np.log(power) / math.log(snr)


def detect_batch(energy: np.ndarray, thresholds_exp, snr: float) -> np.ndarray:
    """Number of ascending energy thresholds (given as SNR exponents) met or exceeded."""
    thr = np.power(float(snr), np.asarray(thresholds_exp, dtype=float))
    return np.sum(energy[:, None] >= thr[None, :], axis=1)


def map_power_detect(received_energy: float, candidate_power_exponents, threshold_exponent, snr: float) -> int:
    """Index of the largest candidate level whose detection threshold the energy reaches.

    ``threshold_exponent`` is a single exponent for a binary alphabet, or one
    exponent per boundary between adjacent candidates.
    """
    cands = list(candidate_power_exponents)
    if len(cands) <= 1:
        return 0
    thr = np.atleast_1d(np.asarray(threshold_exponent, dtype=float))
    if thr.size == 1 and len(cands) > 2:
        raise ValueError("need one threshold per boundary for more than two candidates")
    return int(detect_batch(np.array([float(received_energy)]), thr, snr)[0])


def outage_decision(estimate: ChannelEstimate, data_power: float, cfg: ProtocolConfig):
    """``(outage, mutual_info)`` for the decoder's final estimate."""
    mi = mutual_info_lower_bound(estimate, data_power, cfg.snr)
    return mi < cfg.rate_bits, mi


def _full(T, value):
    return np.full(T, float(value))


# engines -------------------------------------------------------------------

def _decode_pc(cfg, H, data_exp, rng):
    P = _lin(cfg.snr, data_exp)
    G = pc_estimate_batch(H, P, rng)
    return mi_pc_batch(G, P)


def _engine_nocsit(cfg, H, Hf, rng):
    T = H.shape[0]
    data = _full(T, 1.0)
    mi = logdet2(H, cfg.snr / cfg.m)
    return BatchOutcome(cfg.snr, [_Round(1, "forward", data, label="data")], data, mi, cfg.rate_bits)


def _engine_fdd_1bit(cfg, H, Hf, rng):
    S, T = cfg.snr, H.shape[0]
    target = (cfg.r + cfg.epsilon) * math.log2(S)
    hi = 1.0 + dmt.outage_exponent(cfg.r + cfg.epsilon, 1.0, cfg.m, cfg.n)
    Hhat = estimate_batch(H, S, rng)
    q = (logdet2(Hhat, S) < target).astype(int)
    fb = np.where(q == 1, hi, 0.0)
    E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
    qhat = detect_batch(E, [cfg.delta / cfg.mn], S)
    data = np.where(qhat == 1, hi, 1.0)
    rounds = [
        _Round(1, "forward", _full(T, 1.0), alpha=alpha_batch(Hhat, S), label="training"),
        _Round(1, "reverse", fb, q=q, q_hat=qhat, label="feedback"),
        _Round(2, "forward", data, label="training+data"),
    ]
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def klevel_levels(cfg):
    """Feedback exponents, detection thresholds and data exponents of the K-level protocol."""
    K, m, n = cfg.K, cfg.m, cfg.n
    re = cfg.r + cfg.epsilon
    G = [dmt.nested_outage_exponent(re, u, m, n) for u in range(K)]
    cm = dmt.low_region_exponent(cfg.r, m)
    p = [min(g, cm) for g in G]
    fb = [max(cm - G[u], 0.0) for u in range(K - 1)]
    fb.append(1.0 + dmt.outage_exponent(re, 1.0 + p[K - 2], m, n))
    data = [1.0 + max(p[u] - cfg.delta, 0.0) for u in range(K - 1)]
    data.append(1.0 + min(G[K - 1], dmt.outage_exponent(re, 1.0 + cm, m, n)))
    region = [1.0 + min(cm, G[u]) for u in range(K - 1)]
    return dict(G=G, cm=cm, p=p, feedback=fb, data=data, region=region)


def _engine_fdd_klevel(cfg, H, Hf, rng):
    S, T, K = cfg.snr, H.shape[0], cfg.K
    lv = klevel_levels(cfg)
    target = (cfg.r + cfg.epsilon) * math.log2(S)
    Hhat = estimate_batch(H, S, rng)
    top = logdet2(Hhat, _lin(S, lv["region"][K - 2])) < target
    q = np.full(T, K - 2)
    assigned = top.copy()
    for u in range(K - 1):
        good = (~assigned) & (logdet2(Hhat, _lin(S, lv["region"][u])) >= target)
        q[good] = u
        assigned |= good
    q[top] = K - 1
    fb_levels = np.array(lv["feedback"])
    fb = fb_levels[q]
    E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
    # ties between levels sharing a feedback power resolve to the highest index
    uniq = np.unique(fb_levels)
    owner = np.array([max(u for u in range(K) if fb_levels[u] == e) for e in uniq])
    qhat = owner[detect_batch(E, uniq[:-1] + cfg.delta / cfg.mn, S)]
    data = np.array(lv["data"])[qhat]
    rounds = [
        _Round(1, "forward", _full(T, 1.0), alpha=alpha_batch(Hhat, S), label="training"),
        _Round(1, "reverse", fb, q=q, q_hat=qhat, label="feedback"),
        _Round(2, "forward", data, label="training+data"),
    ]
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def _engine_fdd_iterative(cfg, H, Hf, rng):
    S, T, K = cfg.snr, H.shape[0], cfg.K
    m, n = cfg.m, cfg.n
    re = cfg.r + cfg.epsilon
    G = [dmt.nested_outage_exponent(re, u, m, n) for u in range(K)]
    target = re * math.log2(S)
    thr_tx = [cfg.epsilon / cfg.mn]
    rounds = []

    Hhat = estimate_batch(H, S, rng)
    q = (logdet2(Hhat, S) < target).astype(int)
    fb = np.where(q == 0, 1.0, SILENT)
    E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
    qhat = np.where(detect_batch(E, thr_tx, S) == 1, 0, 1)
    rounds.append(_Round(1, "forward", _full(T, 1.0), alpha=alpha_batch(Hhat, S), label="training"))
    rounds.append(_Round(1, "reverse", fb, q=q, q_hat=qhat, label="feedback"))
    checking = q == 0
    qhats = [qhat]

    for i in range(2, K):
        level = 1.0 + G[i - 1]
        P = np.where(qhat == 0, SILENT, level)
        # check mode: detect whether the transmitter trained at all
        Et = received_energy_batch(_lin(S, P), H, rng, cfg.feedback_repeats)
        q_check = np.where(detect_batch(Et, [cfg.epsilon], S) == 1, 0, 1)
        # estimation mode: estimate assuming the scheduled training power
        Hi = estimate_batch(H, _lin(S, P), rng, assumed_power=_full(T, _lin(S, level)))
        q_est = (logdet2(Hi, _lin(S, level)) < target).astype(int)
        q = np.where(checking, q_check, q_est)
        checking = checking | (q == 0)
        fb = np.where(q == 0, level, SILENT)
        E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
        heard = np.where(detect_batch(E, thr_tx, S) == 1, 0, 1)
        qhat = np.where(qhat == 0, 0, heard)
        rounds.append(_Round(i, "forward", P, alpha=alpha_batch(Hi, S), label="training"))
        rounds.append(_Round(i, "reverse", fb, q=q, q_hat=qhat, label="feedback"))
        qhats.append(qhat)

    Q = np.stack(qhats, axis=1)  # columns v = 1 .. K-1
    first_good = np.where((Q == 0).any(axis=1), np.argmax(Q == 0, axis=1) + 1, K)
    data = 1.0 + np.array(G)[first_good - 1]
    rounds.append(_Round(K, "forward", data, label="training+data"))
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def _transmitter_estimate(Hf, power, rng):
    """Transmitter's estimate of the forward channel from reverse training over ``Hf``."""
    return np.swapaxes(estimate_batch(Hf, power, rng), 1, 2)


def _engine_tdd_15(cfg, H, Hf, rng):
    S, T = cfg.snr, H.shape[0]
    Hhat = _transmitter_estimate(Hf, S, rng)
    row_power = np.sum(np.abs(Hhat) ** 2, axis=2)
    P = S ** (1.0 - cfg.epsilon / cfg.mn) / np.min(row_power, axis=1)
    data = _exp(S, P)
    rounds = [
        _Round(1, "reverse", _full(T, 1.0), alpha=alpha_batch(Hhat, S), label="training"),
        _Round(2, "forward", data, label="training+data"),
    ]
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def _weighted_exponent(A, snr, w):
    """``sum_i w_i alpha_i`` with exponents clipped at zero (strong modes need no boost)."""
    return np.maximum(alpha_batch(A, snr), 0.0) @ w


def _engine_tdd_iterative(cfg, H, Hf, rng):
    S, T, K = cfg.snr, H.shape[0], cfg.K
    m, n, mn = cfg.m, cfg.n, cfg.mn
    re = cfg.r + cfg.epsilon
    w = density_weights(m, n)
    target = re * math.log2(S)
    rounds = []

    Hhat = _transmitter_estimate(Hf, S, rng)
    boost = _weighted_exponent(Hhat, S, w)
    rounds.append(_Round(1, "reverse", _full(T, 1.0), alpha=alpha_batch(Hhat, S), label="training"))
    data = 1.0 + boost
    qhat = np.ones(T, dtype=int)
    q_prev = None
    for u in range(2, K):
        P = np.where(qhat == 0, SILENT, 1.0 - cfg.delta / mn + boost)
        Pl = _lin(S, P)
        Et = received_energy_batch(Pl, H, rng, cfg.feedback_repeats)
        Gu = pc_estimate_batch(H, Pl, rng)
        q_est = (logdet2(Gu, 1.0) < target).astype(int)
        if q_prev is None:
            q = q_est
        else:
            quiet = detect_batch(Et, [cfg.epsilon / (2 * mn)], S) == 0
            q = np.where(q_prev == 0, 0, np.where(quiet, 1, q_est))
        level = 1.0 + dmt.tdd_round_exponent(re, u, m, n, cfg.epsilon)
        fb = np.where(q == 1, level, SILENT)
        E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
        qhat = (E > S ** (cfg.epsilon / mn)).astype(int)
        # re-estimate from the feedback pilots assuming the high level was sent
        Hu = np.swapaxes(estimate_batch(Hf, _lin(S, fb), rng, assumed_power=_full(T, _lin(S, level))), 1, 2)
        boost_u = _weighted_exponent(Hu, S, w)
        boost = np.where(qhat == 1, boost_u, boost)
        data = np.where(qhat == 1, np.maximum(data, 1.0 + boost_u), data)
        rounds.append(_Round(u, "forward", P, label="training"))
        rounds.append(_Round(u, "reverse", fb, q=q, q_hat=qhat, label="feedback"))
        q_prev = q
    rounds.append(_Round(K, "forward", data, label="training+data"))
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def _engine_genie_csit(cfg, H, Hf, rng):
    S, T = cfg.snr, H.shape[0]
    w = density_weights(cfg.m, cfg.n)
    data = 1.0 - cfg.epsilon / cfg.mn + _weighted_exponent(H, S, w)
    rounds = [_Round(1, "forward", data, alpha=alpha_batch(H, S), label="training+data")]
    return BatchOutcome(S, rounds, data, _decode_pc(cfg, H, data, rng), cfg.rate_bits)


def genie_csir_levels(cfg):
    re = min(cfg.r + cfg.epsilon, min(cfg.m, cfg.n))
    return [1.0 + dmt.nested_outage_exponent(re, i, cfg.m, cfg.n) for i in range(cfg.K)]


def _engine_genie_csir(cfg, H, Hf, rng):
    S, T, K = cfg.snr, H.shape[0], cfg.K
    levels = np.array(genie_csir_levels(cfg))
    R = cfg.rate_bits
    idx = np.full(T, K - 1)
    found = np.zeros(T, dtype=bool)
    for i in range(K):
        ok = (~found) & (logdet2(H, _lin(S, levels[i]) / cfg.m) >= R)
        idx[ok] = i
        found |= ok
    alpha_min = np.min(alpha_batch(H, S), axis=1)
    fb = alpha_min + (idx + 1) / (2.0 * K)
    E = received_energy_batch(_lin(S, fb), Hf, rng, cfg.feedback_repeats)
    thr = [(j + 1) / (2.0 * K) + 1.0 / (4.0 * K) for j in range(K - 1)]
    idx_hat = detect_batch(E, thr, S)
    data = levels[idx_hat]
    mi = logdet2(H, _lin(S, data) / cfg.m)
    rounds = [
        _Round(1, "reverse", fb, q=idx, q_hat=idx_hat, label="feedback"),
        _Round(2, "forward", data, label="data"),
    ]
    return BatchOutcome(S, rounds, data, mi, R)


ENGINES = {
    ProtocolKind.NoCSIT: _engine_nocsit,
    ProtocolKind.FDD_1bit: _engine_fdd_1bit,
    ProtocolKind.FDD_Klevel: _engine_fdd_klevel,
    ProtocolKind.FDD_iterative: _engine_fdd_iterative,
    ProtocolKind.TDD_1p5: _engine_tdd_15,
    ProtocolKind.TDD_iterative: _engine_tdd_iterative,
    ProtocolKind.GenieCSIT: _engine_genie_csit,
    ProtocolKind.GenieCSIR: _engine_genie_csir,
}


def run_batch(cfg: ProtocolConfig, H: np.ndarray, Hf: np.ndarray, rng) -> BatchOutcome:
    """Run ``cfg``'s protocol on stacked channels; ``rng`` drives all protocol noise."""
    return ENGINES[cfg.kind](cfg, H, Hf, None if cfg.noiseless_debug else rng)


def sample_channels(cfg: ProtocolConfig, T: int, rng: np.random.Generator):
    H = complex_normal(rng, (T, cfg.n, cfg.m))
    if cfg.duplex is Duplex.TDD:
        Hf = np.swapaxes(H, 1, 2).copy()
    else:
        Hf = complex_normal(rng, (T, cfg.m, cfg.n))
    return H, Hf


def _run(kind, pair: FadingPair, cfg: ProtocolConfig, rng) -> Transcript:
    if cfg.kind is not kind:
        raise ValueError(f"config is for {cfg.kind.value}, not {kind.value}")
    if pair.forward.shape != (cfg.n, cfg.m):
        raise ValueError("channel shape does not match the configured antenna counts")
    want = DUPLEX[kind]
    if want is Duplex.TDD and not np.array_equal(pair.backward, pair.forward.T):
        raise ValueError("TDD protocols need a reciprocal channel pair")
    out = run_batch(cfg, pair.forward[None], pair.backward[None], rng)
    return out.transcript(0)


def run_no_feedback(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.NoCSIT, pair, cfg, rng)


def run_fdd_1bit(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.FDD_1bit, pair, cfg, rng)


def run_fdd_klevel(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.FDD_Klevel, pair, cfg, rng)


def run_fdd_iterative(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.FDD_iterative, pair, cfg, rng)


def run_tdd_15(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.TDD_1p5, pair, cfg, rng)


def run_tdd_iterative(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.TDD_iterative, pair, cfg, rng)


def run_genie_csit(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.GenieCSIT, pair, cfg, rng)


def run_genie_csir(pair, cfg, rng=None) -> Transcript:
    return _run(ProtocolKind.GenieCSIR, pair, cfg, rng)


def run_protocol(pair, cfg, rng=None) -> Transcript:
    return _run(cfg.kind, pair, cfg, rng)


def configured_levels(cfg: ProtocolConfig) -> dict:
    """Finite set of power exponents each (direction, round) may use, for discrete-power protocols."""
    S, K, m, n = cfg.snr, cfg.K, cfg.m, cfg.n
    re = cfg.r + cfg.epsilon
    k = cfg.kind
    if k is ProtocolKind.FDD_1bit:
        hi = 1.0 + dmt.outage_exponent(re, 1.0, m, n)
        return {("forward", 1): {1.0}, ("reverse", 1): {0.0, hi}, ("forward", 2): {1.0, hi}}
    if k is ProtocolKind.FDD_Klevel:
        lv = klevel_levels(cfg)
        return {("forward", 1): {1.0}, ("reverse", 1): set(lv["feedback"]), ("forward", 2): set(lv["data"])}
    if k is ProtocolKind.FDD_iterative:
        G = [dmt.nested_outage_exponent(re, u, m, n) for u in range(K)]
        out = {("forward", 1): {1.0}, ("reverse", 1): {1.0, SILENT}}
        for i in range(2, K):
            out[("forward", i)] = {SILENT, 1.0 + G[i - 1]}
            out[("reverse", i)] = {SILENT, 1.0 + G[i - 1]}
        out[("forward", K)] = {1.0 + g for g in G}
        return out
    raise ValueError(f"{k.value} uses continuous power control")
