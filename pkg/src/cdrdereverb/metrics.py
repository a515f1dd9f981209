"""Evaluation measures: early-to-late ratio, diffuseness MSE, frequency-weighted
segmental SNR and reverberation time from the energy decay curve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import recursive_average
from .estimators import diffuseness
from .filterbank import FilterbankConfig, Spectrogram, analyze

ELR_FLOOR = 1e-10


class MetricError(ValueError):
    pass


def _spec(x, fb_cfg: FilterbankConfig | None) -> np.ndarray:
    if isinstance(x, Spectrogram):
        return x.data
    x = np.asarray(x)
    if np.iscomplexobj(x) or x.ndim == 2:
        return x
    return analyze(x, fb_cfg or FilterbankConfig()).data


@dataclass
class ElrField:
    """Early-to-late ratio of one signal pair.

    ``elr_db`` is per (frame, bin) from recursively smoothed powers;
    ``per_frequency_db`` is the ratio of powers summed over time in each bin;
    ``mean_db`` averages ``per_frequency_db`` over valid bins.  Invalid entries
    (late power at or below the floor) hold ``inf`` and are excluded from the
    averages.
    """

    elr_db: np.ndarray
    valid: np.ndarray
    per_frequency_db: np.ndarray
    frequency_valid: np.ndarray
    te: float
    lam: float

    @property
    def mean_db(self) -> float:
        v = self.per_frequency_db[self.frequency_valid]
        return float(np.mean(v)) if v.size else float("inf")

    def band_mean_db(self, freqs, f_lo: float = 0.0, f_hi: float = np.inf) -> float:
        sel = self.frequency_valid & (freqs >= f_lo) & (freqs <= f_hi)
        return float(np.mean(self.per_frequency_db[sel])) if np.any(sel) else float("inf")


def _ratio_db(num: np.ndarray, den: np.ndarray, valid: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.inf)
    with np.errstate(divide="ignore"):
        out[valid] = 10 * np.log10(num[valid] / den[valid])
    return out


def power_ratio_field(Pe: np.ndarray, Pl: np.ndarray, lam: float, floor: float = ELR_FLOOR):
    """Smoothed power ratio and validity for frames x bins power arrays."""
    Se = recursive_average(Pe, lam)
    Sl = recursive_average(Pl, lam)
    total = np.mean(Pe + Pl)
    valid = Sl > floor * total
    return Se, Sl, valid


def elr(early, late, te: float = 0.05, lam: float = 0.68, floor: float = ELR_FLOOR,
        fb_cfg: FilterbankConfig | None = None) -> ElrField:
    """ELR of early/late components given as time signals or spectrograms."""
    E = _spec(early, fb_cfg)
    L = _spec(late, fb_cfg)
    if E.shape != L.shape:
        raise MetricError(f"early and late shapes differ: {E.shape} vs {L.shape}")
    Pe = np.abs(E) ** 2
    Pl = np.abs(L) ** 2
    Se, Sl, valid = power_ratio_field(Pe, Pl, lam, floor)
    elr_db = _ratio_db(Se, Sl, valid)
    te_sum = Pe.sum(axis=0)
    tl_sum = Pl.sum(axis=0)
    fvalid = tl_sum > floor * np.mean(te_sum + tl_sum)
    return ElrField(elr_db, valid, _ratio_db(te_sum, tl_sum, fvalid), fvalid, te, lam)


def true_cdr_field(early_specs, late_specs, lam: float = 0.68, floor: float = ELR_FLOOR):
    """Reference CDR per (frame, bin) from separately rendered components.

    ``early_specs`` and ``late_specs`` are sequences of per-microphone
    spectrograms; powers are averaged over microphones and smoothed with the
    same recursion as the coherence estimate.  Returns ``(cdr, valid)``.
    """
    Pe = np.mean([np.abs(_spec(e, None)) ** 2 for e in early_specs], axis=0)
    Pl = np.mean([np.abs(_spec(l, None)) ** 2 for l in late_specs], axis=0)
    Se, Sl, valid = power_ratio_field(Pe, Pl, lam, floor)
    cdr = np.full(Se.shape, np.inf)
    cdr[valid] = Se[valid] / Sl[valid]
    return cdr, valid


def diffuseness_mse(true_cdr, est_cdr, valid=None) -> float:
    """Mean squared diffuseness difference over valid entries."""
    t = np.asarray(true_cdr, dtype=float)
    e = np.asarray(est_cdr, dtype=float)
    if t.shape != e.shape:
        raise MetricError(f"field shapes differ: {t.shape} vs {e.shape}")
    d = (diffuseness(t) - diffuseness(e)) ** 2
    if valid is not None:
        d = d[np.asarray(valid, dtype=bool)]
    if d.size == 0:
        raise MetricError("no valid bins")
    return float(np.mean(d))


@dataclass(frozen=True)
class FwSegConfig:
    num_bands: int = 23
    f_lo: float = 125.0
    f_hi: float = 8000.0
    segment: float = 0.025
    hop: float = 0.010
    gamma: float = 0.2  # band weight exponent on the reference magnitude
    clip_lo: float = -10.0
    clip_hi: float = 35.0
    silence: float = 1e-10  # relative to the loudest reference segment
    normalize: bool = True  # scale each segment spectrum to unit area before banding


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(num_bands: int, nfft: int, sample_rate: int, f_lo: float, f_hi: float) -> np.ndarray:
    """Triangular mel filters (bands x nfft//2+1)."""
    f_hi = min(f_hi, sample_rate / 2)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(f_lo), _hz_to_mel(f_hi), num_bands + 2))
    f = np.fft.rfftfreq(nfft, 1.0 / sample_rate)
    fb = np.zeros((num_bands, f.size))
    for b in range(num_bands):
        lo, mid, hi = edges[b : b + 3]
        up = (f - lo) / (mid - lo)
        down = (hi - f) / (hi - mid)
        fb[b] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def fwsegsnr(reference, test, sample_rate: int = 16000, cfg: FwSegConfig | None = None) -> float:
    """Frequency-weighted segmental SNR in dB.

    Per segment: band magnitudes from triangular mel filters on the
    (optionally unit-area) magnitude spectra, band SNR
    ``10 log10(R^2 / (R - T)^2)`` weighted by ``R**gamma``, and the weighted
    mean clipped to ``[clip_lo, clip_hi]``.  Segments whose reference energy is
    below ``silence`` times the loudest one are skipped.
    """
    cfg = cfg or FwSegConfig()
    ref = np.asarray(reference, dtype=float)
    tst = np.asarray(test, dtype=float)
    if ref.shape != tst.shape or ref.ndim != 1:
        raise MetricError("reference and test must be 1-D signals of equal length")
    seg = int(round(cfg.segment * sample_rate))
    hop = int(round(cfg.hop * sample_rate))
    if ref.size < seg:
        raise MetricError("signal shorter than one segment")
    nfft = 1 << (seg - 1).bit_length()
    win = np.hanning(seg)
    n = 1 + (ref.size - seg) // hop
    idx = np.arange(n)[:, None] * hop + np.arange(seg)
    R = np.abs(np.fft.rfft(ref[idx] * win, nfft, axis=1))
    T = np.abs(np.fft.rfft(tst[idx] * win, nfft, axis=1))
    fb = mel_filterbank(cfg.num_bands, nfft, sample_rate, cfg.f_lo, cfg.f_hi)
    energy = np.sum(ref[idx] ** 2, axis=1)
    active = energy > cfg.silence * energy.max() if energy.max() > 0 else np.zeros(n, bool)
    if not np.any(active):
        raise MetricError("reference is silent")
    R, T = R[active], T[active]
    if cfg.normalize:
        # unit-area spectra per segment, as in the reference implementation
        R = R / np.maximum(R.sum(axis=1, keepdims=True), np.finfo(float).tiny)
        T = T / np.maximum(T.sum(axis=1, keepdims=True), np.finfo(float).tiny)
    Rb = R @ fb.T
    Tb = T @ fb.T
    err = np.maximum((Rb - Tb) ** 2, np.finfo(float).eps * np.maximum(Rb**2, np.finfo(float).tiny))
    with np.errstate(divide="ignore"):
        snr = 10 * np.log10(Rb**2 / err)
    # empty reference band: no signal to preserve, counts at the floor (weight is zero anyway)
    snr = np.where(Rb > 0, snr, cfg.clip_lo)
    w = Rb**cfg.gamma
    wsum = w.sum(axis=1)
    seg_snr = (w * snr).sum(axis=1) / np.where(wsum > 0, wsum, 1.0)
    seg_snr = np.clip(np.where(wsum > 0, seg_snr, cfg.clip_lo), cfg.clip_lo, cfg.clip_hi)
    return float(np.mean(seg_snr))


def edc_db(h) -> np.ndarray:
    """Schroeder backward-integrated energy decay in dB re total energy."""
    h = np.asarray(getattr(h, "samples", h), dtype=float)
    e = np.cumsum(h[::-1] ** 2)[::-1]
    if e[0] <= 0:
        raise MetricError("impulse response has no energy")
    with np.errstate(divide="ignore"):
        return 10 * np.log10(e / e[0])


def t60_from_edc(rir, sample_rate: int | None = None, fit=(-5.0, -25.0)) -> float:
    """Reverberation time from a line fit to the EDC between ``fit`` levels."""
    fs = sample_rate or getattr(rir, "sample_rate", None)
    if fs is None:
        raise MetricError("sample rate is required")
    edc = edc_db(rir)
    finite = edc[np.isfinite(edc)]
    if finite.min() > -30.0:
        raise MetricError("impulse response has less than 30 dB decay range")
    sel = np.flatnonzero((edc <= fit[0]) & (edc >= fit[1]))
    if sel.size < 10:
        raise MetricError("too few samples in the EDC fit range")
    t = sel / fs
    slope, _ = np.polyfit(t, edc[sel], 1)
    if slope >= 0:
        raise MetricError("energy decay curve does not decay")
    return -60.0 / slope


def classify_by_elr(gamma, elr_db, valid=None, threshold: float = 10.0):
    """Split coherence values into high-ELR (> threshold) and low-ELR (< -threshold) sets."""
    gamma = np.asarray(gamma)
    elr_db = np.asarray(elr_db, dtype=float)
    ok = np.ones(gamma.shape, bool) if valid is None else np.asarray(valid, bool)
    ok &= np.isfinite(elr_db)
    return gamma[ok & (elr_db > threshold)], gamma[ok & (elr_db < -threshold)]
