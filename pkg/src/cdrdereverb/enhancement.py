"""CDR-driven dereverberation: magnitude-averaging preprocessor plus
spectral magnitude subtraction postfilter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import (
    SOUND_SPEED,
    CoherenceModels,
    CrossSpectra,
    estimate_coherence,
    estimate_psd,
    update_psd,
)
from .estimators import ESTIMATORS, NEEDS_NOISE, NEEDS_TDOA, diffuseness, estimate_cdr
from .filterbank import ConfigurationError, FilterbankConfig, Spectrogram, analyze, synthesize

DOA_INDEPENDENT = {"prop3", "thiergart2"}
NOISE_MODELS = ("diffuse", "2d-iso")


@dataclass(frozen=True)
class PostfilterConfig:
    mu: float = 1.3
    g_min: float = 0.1
    lam: float = 0.68
    estimator: str = "prop2"
    noise_model: str = "diffuse"
    tdoa: float | None = None
    mic_distance: float = 0.08
    c: float = SOUND_SPEED

    def __post_init__(self):
        if self.mu < 0:
            raise ConfigurationError("mu must be nonnegative")
        if not 0 < self.g_min <= 1:
            raise ConfigurationError("g_min must lie in (0, 1]")
        if not 0 < self.lam < 1:
            raise ConfigurationError("lambda must lie in (0, 1)")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"unknown estimator {self.estimator!r}")
        if self.noise_model not in NOISE_MODELS:
            raise ConfigurationError(f"noise_model must be one of {NOISE_MODELS}")
        if self.estimator in NEEDS_TDOA and self.tdoa is None:
            raise ConfigurationError(f"estimator {self.estimator!r} requires a TDOA")
        if self.estimator in DOA_INDEPENDENT and self.tdoa is not None:
            raise ConfigurationError(f"estimator {self.estimator!r} does not take a TDOA")
        if self.mic_distance <= 0 or self.c <= 0:
            raise ConfigurationError("mic distance and sound speed must be positive")

    def models(self, freqs) -> CoherenceModels:
        noise = self.noise_model if self.estimator in NEEDS_NOISE else None
        return CoherenceModels.build(freqs, self.mic_distance, self.tdoa, noise, self.c)


def preprocess(x1_frame, x2_frame):
    """Magnitude average of both channels with the phase of channel 1."""
    X1 = np.asarray(x1_frame)
    X2 = np.asarray(x2_frame)
    if X1.shape != X2.shape:
        raise ValueError("channel spectra must have equal shape")
    mag = 0.5 * np.sqrt(np.abs(X1) ** 2 + np.abs(X2) ** 2)
    return mag * np.exp(1j * np.angle(X1))


def gain(cdr, cfg: PostfilterConfig):
    """Spectral magnitude subtraction gain, floored at ``g_min``."""
    return np.maximum(cfg.g_min, 1.0 - np.sqrt(cfg.mu * diffuseness(cdr)))


@dataclass
class DereverbResult:
    output: np.ndarray
    Y: Spectrogram  # preprocessed spectrum before the gain
    gamma: np.ndarray
    cdr: np.ndarray
    gain: np.ndarray
    valid: np.ndarray

    @property
    def diffuseness(self) -> np.ndarray:
        return diffuseness(self.cdr)


def estimate_cdr_field(X1, X2, cfg: PostfilterConfig, freqs):
    """Coherence and CDR per (frame, bin) from two channel spectrograms."""
    cs = estimate_psd(X1, X2, cfg.lam)
    coh = estimate_coherence(cs)
    cdr = estimate_cdr(cfg.estimator, coh.gamma, cfg.models(freqs))
    cdr = np.where(coh.valid, cdr, 0.0)
    return coh, cdr


def dereverberate(x1, x2, cfg: PostfilterConfig | None = None, fb_cfg: FilterbankConfig | None = None) -> DereverbResult:
    cfg = cfg or PostfilterConfig(estimator="prop3")
    fb_cfg = fb_cfg or FilterbankConfig()
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"channel lengths differ: {x1.shape} vs {x2.shape}")
    S1 = analyze(x1, fb_cfg)
    S2 = analyze(x2, fb_cfg)
    coh, cdr = estimate_cdr_field(S1.data, S2.data, cfg, fb_cfg.freqs)
    g = gain(cdr, cfg)
    Y = Spectrogram(preprocess(S1.data, S2.data), fb_cfg, S1.length)
    Z = Spectrogram(g * Y.data, fb_cfg, S1.length)
    return DereverbResult(synthesize(Z), Y, coh.gamma, cdr, g, coh.valid)


class StreamingPostfilter:
    """Frame-by-frame form of the postfilter for one two-channel stream."""

    def __init__(self, cfg: PostfilterConfig, fb_cfg: FilterbankConfig | None = None):
        self.cfg = cfg
        self.fb_cfg = fb_cfg or FilterbankConfig()
        self.models = cfg.models(self.fb_cfg.freqs)
        self.state = CrossSpectra.zeros(self.fb_cfg.bins, cfg.lam)

    def process(self, X1_frame, X2_frame):
        """Return ``(Z_frame, gain_frame)`` for one frame of both channels."""
        self.state = update_psd(self.state, X1_frame, X2_frame)
        coh = estimate_coherence(self.state)
        cdr = np.where(coh.valid, estimate_cdr(self.cfg.estimator, coh.gamma, self.models), 0.0)
        g = gain(cdr, self.cfg)
        return g * preprocess(X1_frame, X2_frame), g
