"""Recursive cross-spectral estimation, short-time coherence and coherence models."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .filterbank import ConfigurationError, FilterbankConfig, analyze

SOUND_SPEED = 343.0
PSD_FLOOR = 1e-12


@dataclass
class CrossSpectra:
    """Recursively averaged auto- and cross-power spectra.

    Arrays are either per bin (a single frame) or frames x bins.
    """

    phi11: np.ndarray
    phi22: np.ndarray
    phi12: np.ndarray
    lam: float

    @classmethod
    def zeros(cls, bins: int, lam: float) -> "CrossSpectra":
        _check_lambda(lam)
        return cls(np.zeros(bins), np.zeros(bins), np.zeros(bins, dtype=complex), lam)


@dataclass
class CoherenceField:
    gamma: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class CoherenceModels:
    """Direct-path and noise coherence models on a frequency grid."""

    gamma_s: np.ndarray | None
    gamma_n: np.ndarray | None
    freqs: np.ndarray
    mic_distance: float = 0.08
    c: float = SOUND_SPEED
    tdoa: float | None = None

    @classmethod
    def build(
        cls,
        freqs,
        mic_distance: float = 0.08,
        tdoa: float | None = None,
        noise_model: str | None = "diffuse",
        c: float = SOUND_SPEED,
    ) -> "CoherenceModels":
        freqs = np.asarray(freqs, dtype=float)
        gs = None if tdoa is None else model_plane_wave(tdoa, freqs)
        if noise_model is None:
            gn = None
        elif noise_model == "diffuse":
            gn = model_diffuse(mic_distance, freqs, c)
        elif noise_model in ("2d-iso", "2d", "cylindrical"):
            gn = model_2d_isotropic(mic_distance, freqs, c)
        else:
            raise ConfigurationError(f"unknown noise model {noise_model!r}")
        return cls(gs, gn, freqs, mic_distance, c, tdoa)


def _check_lambda(lam: float):
    if not 0.0 < lam < 1.0:
        raise ConfigurationError(f"forgetting factor must lie in (0, 1), got {lam}")


def update_psd(prev: CrossSpectra, x1_frame, x2_frame, lam: float | None = None) -> CrossSpectra:
    """One step of exponential averaging of the auto/cross spectra."""
    lam = prev.lam if lam is None else lam
    _check_lambda(lam)
    x1 = np.asarray(x1_frame)
    x2 = np.asarray(x2_frame)
    if x1.shape != x2.shape:
        raise ValueError("frames must have the same number of bins")
    a = 1.0 - lam
    return CrossSpectra(
        lam * prev.phi11 + a * np.abs(x1) ** 2,
        lam * prev.phi22 + a * np.abs(x2) ** 2,
        lam * prev.phi12 + a * x1 * np.conj(x2),
        lam,
    )


def recursive_average(values: np.ndarray, lam: float, axis: int = 0) -> np.ndarray:
    """Exponential average along ``axis`` starting from zero state."""
    _check_lambda(lam)
    return lfilter([1.0 - lam], [1.0, -lam], values, axis=axis)


def estimate_psd(X1: np.ndarray, X2: np.ndarray, lam: float) -> CrossSpectra:
    """Run the recursion over all frames of two spectrograms (frames x bins)."""
    X1 = np.asarray(X1)
    X2 = np.asarray(X2)
    if X1.shape != X2.shape:
        raise ValueError("spectrograms must have equal shape")
    return CrossSpectra(
        recursive_average(np.abs(X1) ** 2, lam),
        recursive_average(np.abs(X2) ** 2, lam),
        recursive_average(X1 * np.conj(X2), lam),
        lam,
    )


def estimate_coherence(cs: CrossSpectra, floor: float = PSD_FLOOR) -> CoherenceField:
    """Short-time coherence, magnitude clamped to one.

    Bins where either auto-spectrum is at or below ``floor`` are flagged
    invalid and set to 0.
    """
    p11 = np.asarray(cs.phi11, dtype=float)
    p22 = np.asarray(cs.phi22, dtype=float)
    valid = (p11 > floor) & (p22 > floor)
    denom = np.sqrt(np.where(valid, p11 * p22, 1.0))
    gamma = np.where(valid, np.asarray(cs.phi12) / denom, 0.0 + 0.0j)
    mag = np.abs(gamma)
    over = mag > 1.0
    if np.any(over):
        gamma = np.where(over, gamma / np.where(over, mag, 1.0), gamma)
        # the division can leave |gamma| one ulp above 1
        for _ in range(4):
            over = np.abs(gamma) > 1.0
            if not np.any(over):
                break
            gamma = np.where(over, gamma * np.nextafter(1.0, 0.0), gamma)
    return CoherenceField(gamma, valid)


def long_term_coherence(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Coherence from PSDs averaged uniformly over all frames."""
    p11 = np.mean(np.abs(X1) ** 2, axis=0)
    p22 = np.mean(np.abs(X2) ** 2, axis=0)
    p12 = np.mean(X1 * np.conj(X2), axis=0)
    return estimate_coherence(CrossSpectra(p11, p22, p12, 0.5)).gamma


def tdoa_from_doa(theta: float, d: float = 0.08, c: float = SOUND_SPEED) -> float:
    if d <= 0 or c <= 0:
        raise ValueError("mic distance and sound speed must be positive")
    return d * math.sin(theta) / c


def model_plane_wave(dt: float, freqs) -> np.ndarray:
    return np.exp(2j * np.pi * np.asarray(freqs, dtype=float) * dt)


def model_diffuse(d: float, freqs, c: float = SOUND_SPEED) -> np.ndarray:
    if d <= 0:
        raise ValueError("mic distance must be positive")
    # np.sinc(x) = sin(pi x)/(pi x), kd = 2 pi f d / c
    return np.sinc(2.0 * np.asarray(freqs, dtype=float) * d / c)


_J0_SWITCH = 12.0


def _j0_series(x: np.ndarray) -> np.ndarray:
    q = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 80):
        term = term * q / (k * k)
        total = total + term
        if np.all(np.abs(term) < 1e-18 * np.maximum(1.0, np.abs(total))):
            break
    return total


def _j0_asymptotic(x: np.ndarray) -> np.ndarray:
    # Hankel expansion J0 = sqrt(2/(pi x)) (P cos(x - pi/4) - Q sin(x - pi/4))
    P = np.ones_like(x)
    Q = np.zeros_like(x)
    z = 8.0 * x
    t = np.ones_like(x)
    # terms shrink until k ~ 2x; 22 terms stays inside that range for x >= 12
    for k in range(1, 23):
        t = t * -((2 * k - 1) ** 2) / (k * z)
        if k % 2:
            Q = Q + (-1) ** ((k - 1) // 2) * t
        else:
            P = P + (-1) ** (k // 2) * t
    chi = x - np.pi / 4
    return np.sqrt(2.0 / (np.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi))


def bessel_j0(x) -> np.ndarray:
    """Zeroth-order Bessel function of the first kind (real argument)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < _J0_SWITCH
    out[small] = _j0_series(x[small])
    if np.any(~small):
        out[~small] = _j0_asymptotic(x[~small])
    return out


def model_2d_isotropic(d: float, freqs, c: float = SOUND_SPEED) -> np.ndarray:
    if d <= 0:
        raise ValueError("mic distance must be positive")
    return bessel_j0(2.0 * np.pi * np.asarray(freqs, dtype=float) * d / c)


def mix_coherence(cdr, gamma_s, gamma_n):
    """Coherence of a mixture of a field with coherence ``gamma_s`` and one with
    ``gamma_n`` at power ratio ``cdr`` (``inf`` allowed)."""
    cdr = np.asarray(cdr, dtype=float)
    gamma_s = np.asarray(gamma_s)
    gamma_n = np.asarray(gamma_n)
    with np.errstate(divide="ignore"):
        w = 1.0 / (cdr + 1.0)
    return gamma_s + w * (gamma_n - gamma_s)


def parse_pairs(spec: str | None, channels: int) -> list[tuple[int, int]]:
    """``"0-1,1-2"`` to index pairs; ``None`` means all neighbouring pairs."""
    if not spec:
        return [(i, i + 1) for i in range(channels - 1)]
    pairs = []
    for item in spec.split(","):
        a, _, b = item.partition("-")
        i, j = int(a), int(b)
        if not (0 <= i < channels and 0 <= j < channels) or i == j:
            raise ValueError(f"invalid channel pair {item!r} for {channels} channels")
        pairs.append((i, j))
    return pairs


def pair_coherence(signals, pairs=None, fb_cfg=None) -> np.ndarray:
    """Long-term complex coherence averaged over channel pairs.

    ``signals`` is channels x samples; ``pairs`` defaults to neighbours.
    """
    signals = np.atleast_2d(np.asarray(signals, dtype=float))
    fb_cfg = fb_cfg or FilterbankConfig()
    pairs = pairs or [(i, i + 1) for i in range(signals.shape[0] - 1)]
    if not pairs:
        raise ValueError("need at least two channels")
    used = sorted({i for p in pairs for i in p})
    spec = {i: analyze(signals[i], fb_cfg).data for i in used}
    return np.mean([long_term_coherence(spec[i], spec[j]) for i, j in pairs], axis=0)
