"""Two-way Rayleigh MIMO channels, MMSE training and mutual-information bounds.

All functions accept a ``numpy.random.Generator`` for noise.  Passing
``rng=None`` selects the zero-noise debug path, which keeps every
computation deterministic given the channel.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Duplex(str, Enum):
    FDD = "FDD"
    TDD = "TDD"


@dataclass
class FadingPair:
    forward: np.ndarray   # n x m, transmitter -> receiver
    backward: np.ndarray  # m x n, receiver -> transmitter
    mode: Duplex

    @property
    def m(self) -> int:
        return self.forward.shape[1]

    @property
    def n(self) -> int:
        return self.forward.shape[0]


@dataclass
class ChannelEstimate:
    estimate: np.ndarray
    train_power: float
    per_entry_error_variance: float
    power_controlled: bool = False


@dataclass
class EigenProfile:
    eigenvalues: np.ndarray  # ascending
    alpha: np.ndarray        # descending, alpha_i = -log(lambda_i) / log(snr)
    snr: float


def complex_normal(rng, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples, or zeros when ``rng`` is None."""
    if rng is None:
        return np.zeros(shape, dtype=complex)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_fading_pair(m: int, n: int, mode, rng: np.random.Generator) -> FadingPair:
    if m < 1 or n < 1:
        raise ValueError(f"antenna counts must be >= 1, got m={m}, n={n}")
    mode = Duplex(mode)
    forward = complex_normal(rng, (n, m))
    if mode is Duplex.TDD:
        backward = forward.T.copy()
    else:
        backward = complex_normal(rng, (m, n))
    return FadingPair(forward, backward, mode)


def _check_power(power):
    if np.any(np.asarray(power) < 0):
        raise ValueError("transmit/training power must be nonnegative")


def mmse_estimate(channel: np.ndarray, train_power: float, rng=None) -> ChannelEstimate:
    """Per-entry MMSE estimate from ``y = sqrt(P) h + w`` with an orthonormal pilot."""
    _check_power(train_power)
    channel = np.asarray(channel, dtype=complex)
    P = float(train_power)
    y = np.sqrt(P) * channel + complex_normal(rng, channel.shape)
    est = np.sqrt(P) / (1.0 + P) * y
    return ChannelEstimate(est, P, 1.0 / (1.0 + P), False)


def power_controlled_estimate(channel: np.ndarray, transmit_power: float, rng=None) -> ChannelEstimate:
    """Estimate of the scaled channel ``sqrt(P) H``; the error stays at the noise floor."""
    _check_power(transmit_power)
    channel = np.asarray(channel, dtype=complex)
    P = float(transmit_power)
    y = np.sqrt(P) * channel + complex_normal(rng, channel.shape)
    est = P / (1.0 + P) * y
    return ChannelEstimate(est, P, P / (1.0 + P), True)


def eigen_profile(matrix: np.ndarray, snr: float) -> EigenProfile:
    if snr <= 1:
        raise ValueError("snr must exceed 1 so that log(snr) > 0")
    M = np.asarray(matrix, dtype=complex)
    gram = M @ M.conj().T if M.shape[0] <= M.shape[1] else M.conj().T @ M
    lam = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    with np.errstate(divide="ignore"):
        alpha = -np.log(lam) / np.log(snr)
    return EigenProfile(lam, alpha, float(snr))


def mutual_info_lower_bound(estimate: ChannelEstimate, data_power: float, snr: float | None = None) -> float:
    """``log2 det(I + (P/m) Hhat Hhat^H / (1 + P n m s2))`` in bits per channel use.

    For a power-controlled estimate the power is already inside the
    estimate, so the gain and the error variance are taken per unit power.
    """
    _check_power(data_power)
    est = np.asarray(estimate.estimate, dtype=complex)
    n, m = est.shape
    if estimate.power_controlled:
        gain, err = 1.0, estimate.per_entry_error_variance
    else:
        gain, err = float(data_power), float(data_power) * estimate.per_entry_error_variance
    scale = gain / m / (1.0 + n * m * err)
    return float(logdet2(est[None], scale)[0])


def received_energy(transmit_power: float, channel: np.ndarray, rng=None, repeats: int = 1) -> float:
    """Energy of ``sqrt(P) C beta_f + noise`` per pilot block, averaged over ``repeats`` blocks."""
    _check_power(transmit_power)
    channel = np.asarray(channel, dtype=complex)
    return float(received_energy_batch(np.array([transmit_power]), channel[None], rng, repeats)[0])


# batch helpers used by the protocol engines ---------------------------------

def logdet2(A: np.ndarray, scale) -> np.ndarray:
    """``log2 det(I + scale * A A^H)`` for a stack of matrices ``A`` (T x a x b)."""
    A = np.asarray(A)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), A.shape[:1])
    if A.shape[1] == 1 and A.shape[2] == 1:
        return np.log2(1.0 + scale * np.abs(A[:, 0, 0]) ** 2)
    if A.shape[1] <= A.shape[2]:
        gram = A @ np.conj(np.swapaxes(A, 1, 2))
    else:
        gram = np.conj(np.swapaxes(A, 1, 2)) @ A
    lam = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    return np.sum(np.log2(1.0 + scale[:, None] * lam), axis=1)


def eigenvalues_batch(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of ``A A^H`` restricted to the min(a, b) nontrivial ones."""
    if A.shape[1] == 1 and A.shape[2] == 1:
        return np.abs(A[:, 0, :1]) ** 2
    if A.shape[1] <= A.shape[2]:
        gram = A @ np.conj(np.swapaxes(A, 1, 2))
    else:
        gram = np.conj(np.swapaxes(A, 1, 2)) @ A
    return np.clip(np.linalg.eigvalsh(gram), 0.0, None)


def alpha_batch(A: np.ndarray, snr: float) -> np.ndarray:
    """Descending SNR exponents of the eigenvalues of ``A A^H``."""
    lam = eigenvalues_batch(A)
    with np.errstate(divide="ignore"):
        return -np.log(lam) / np.log(snr)


def estimate_batch(H: np.ndarray, power, rng, assumed_power=None) -> np.ndarray:
    """MMSE estimates of a stack of channels; ``assumed_power`` is what the receiver believes."""
    power = np.asarray(power, dtype=float).reshape(-1, 1, 1)
    a = power if assumed_power is None else np.asarray(assumed_power, dtype=float).reshape(-1, 1, 1)
    y = np.sqrt(power) * H + complex_normal(rng, H.shape)
    return np.sqrt(a) / (1.0 + a) * y


def pc_estimate_batch(H: np.ndarray, power, rng) -> np.ndarray:
    power = np.asarray(power, dtype=float).reshape(-1, 1, 1)
    y = np.sqrt(power) * H + complex_normal(rng, H.shape)
    return power / (1.0 + power) * y


def received_energy_batch(power, C: np.ndarray, rng, repeats: int = 1) -> np.ndarray:
    power = np.asarray(power, dtype=float).reshape(-1, 1, 1)
    signal = np.sqrt(power) * C
    if rng is None:
        return np.sum(np.abs(signal) ** 2, axis=(1, 2))
    total = np.zeros(C.shape[0])
    for _ in range(repeats):
        total += np.sum(np.abs(signal + complex_normal(rng, C.shape)) ** 2, axis=(1, 2))
    return total / repeats


def mi_pc_batch(G: np.ndarray, power) -> np.ndarray:
    """Mutual-information bound for power-controlled estimates ``G`` trained at ``power``."""
    n, m = G.shape[1], G.shape[2]
    power = np.asarray(power, dtype=float)
    err = power / (1.0 + power)
    return logdet2(G, 1.0 / m / (1.0 + n * m * err))
