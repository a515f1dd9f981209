"""DFT-based uniform analysis/synthesis filterbank.

The analysis stage multiplies each block of ``window_len`` samples by a
lowpass prototype, folds the block onto ``fft_size`` samples (polyphase time
aliasing) and takes a one-sided real DFT.  Synthesis inverts the DFT, tiles
the block back to ``window_len`` samples, applies the same prototype and
overlap-adds with the hop size.

Framing: the signal is zero-padded with ``window_len - hop`` samples in front
and with ``window_len - hop + (-len % hop)`` samples at the end, so every input
sample is covered by the same number of frames.  The resulting frame count is::

    frames = (len + (-len % hop)) // hop + window_len // hop - 1

and :func:`synthesize` with ``align=False`` returns the raw overlap-add output,
in which the input appears delayed by :attr:`FilterbankConfig.delay`
(``window_len - hop``) samples.  With ``align=True`` (default) that delay is
removed and the output has the input's length.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq


class ConfigurationError(ValueError):
    """Raised for inconsistent filterbank or postfilter parameters."""


@dataclass(frozen=True)
class FilterbankConfig:
    sample_rate: int = 16000
    window_len: int = 1024
    fft_size: int = 512
    hop: int = 128
    prototype: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if min(self.sample_rate, self.window_len, self.fft_size, self.hop) <= 0:
            raise ConfigurationError("filterbank sizes must be positive")
        if self.window_len % self.fft_size:
            raise ConfigurationError(
                f"window_len={self.window_len} is not a multiple of fft_size={self.fft_size}"
            )
        if self.fft_size % self.hop:
            raise ConfigurationError(f"hop={self.hop} does not divide fft_size={self.fft_size}")
        if self.prototype is not None:
            p = np.asarray(self.prototype)
            if p.shape != (self.window_len,) or np.iscomplexobj(p) or not np.all(np.isfinite(p)):
                raise ConfigurationError("prototype must be a finite real sequence of length window_len")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def delay(self) -> int:
        """Latency in samples of the causal (unaligned) analysis/synthesis chain."""
        return self.window_len - self.hop

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.bins) * self.sample_rate / self.fft_size

    def window(self) -> np.ndarray:
        if self.prototype is not None:
            return np.asarray(self.prototype, dtype=float)
        return design_prototype(self)

    def key(self) -> tuple:
        return (self.sample_rate, self.window_len, self.fft_size, self.hop)


@dataclass
class Spectrogram:
    data: np.ndarray  # complex, frames x bins
    config: FilterbankConfig
    length: int  # number of input samples that produced the frames

    @property
    def frames(self) -> int:
        return self.data.shape[0]

    @property
    def bins(self) -> int:
        return self.data.shape[1]

    @property
    def freqs(self) -> np.ndarray:
        return self.config.freqs


def _reconstruction_terms(h: np.ndarray, fft_size: int, hop: int) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-residue gains of the analysis/synthesis chain.

    ``c0[n]`` multiplies ``x[n]`` in the output; ``cq[n]`` multiplies the
    time-aliased copies ``x[n +- q*fft_size]``.  Perfect reconstruction means
    ``c0`` constant and every ``cq`` zero.
    """
    L = len(h)
    blocks = L // fft_size
    padded = np.concatenate([h, np.zeros((-L) % hop)])
    c0 = (padded.reshape(-1, hop) ** 2).sum(axis=0)
    cq = []
    for q in range(1, blocks):
        prod = np.zeros(len(padded))
        prod[: L - q * fft_size] = h[: L - q * fft_size] * h[q * fft_size :]
        cq.append(prod.reshape(-1, hop).sum(axis=0))
    return c0, cq


def _distortion_bound(h: np.ndarray, fft_size: int, hop: int) -> float:
    c0, cq = _reconstruction_terms(h, fft_size, hop)
    mean = c0.mean()
    err = np.max(np.abs(c0 - mean)) + 2.0 * sum(np.max(np.abs(c)) for c in cq)
    return err / mean


def _kaiser_sinc(window_len: int, cutoff: float, beta: float) -> np.ndarray:
    t = np.arange(window_len) - (window_len - 1) / 2
    return np.kaiser(window_len, beta) * np.sinc(cutoff * t / np.pi)


@functools.lru_cache(maxsize=16)
def _design(window_len: int, fft_size: int, hop: int) -> np.ndarray:
    if window_len == fft_size:
        # single-block case: no time aliasing, a root-Hann window is exactly COLA
        h = np.sqrt(0.5 - 0.5 * np.cos(2 * np.pi * np.arange(window_len) / window_len))
    else:
        def lag_corr(w, beta):
            h = _kaiser_sinc(window_len, w, beta)
            return np.dot(h[: window_len - fft_size], h[fft_size:])

        best = None
        # cutoff chosen so the prototype's autocorrelation vanishes at lag fft_size;
        # take the first zero crossing above a quarter channel width
        grid = np.linspace(0.25, 2.0, 36) * np.pi / fft_size
        for beta in np.arange(4.0, 14.01, 0.5):
            vals = np.array([lag_corr(w, beta) for w in grid])
            cross = np.flatnonzero(vals[:-1] * vals[1:] < 0)
            if cross.size == 0:
                continue
            i = cross[0]
            wc = brentq(lag_corr, grid[i], grid[i + 1], args=(beta,), xtol=1e-15)
            h = _kaiser_sinc(window_len, wc, beta)
            err = _distortion_bound(h, fft_size, hop)
            if best is None or err < best[0]:
                best = (err, h)
        if best is None:
            raise ConfigurationError("no usable prototype for this window/fft/hop combination")
        h = best[1]
    c0, _ = _reconstruction_terms(h, fft_size, hop)
    h = h / np.sqrt(c0.mean())
    h.setflags(write=False)
    return h


def design_prototype(config: FilterbankConfig) -> np.ndarray:
    """Return the lowpass prototype used by both analysis and synthesis.

    For ``window_len == fft_size`` this is a root-Hann window.  Otherwise it is
    a Kaiser-windowed sinc whose cutoff makes the prototype's autocorrelation
    vanish at lag ``fft_size`` (cancelling the time-aliasing terms) and whose
    Kaiser ``beta`` minimises the worst-case distortion/aliasing gain.  The
    prototype is scaled so the chain has unit gain.
    """
    if config.window_len % config.fft_size:
        raise ConfigurationError("window_len must be a multiple of fft_size")
    return _design(config.window_len, config.fft_size, config.hop)


def reconstruction_error_bound(config: FilterbankConfig) -> float:
    """Worst-case relative distortion plus aliasing gain of the chain (linear)."""
    return _distortion_bound(config.window(), config.fft_size, config.hop)


def _frame_index(n_frames: int, cfg: FilterbankConfig) -> np.ndarray:
    return np.arange(n_frames)[:, None] * cfg.hop + np.arange(cfg.window_len)


def num_frames(length: int, config: FilterbankConfig) -> int:
    return (length + (-length) % config.hop) // config.hop + config.window_len // config.hop - 1


def analyze(signal, config: FilterbankConfig | None = None) -> Spectrogram:
    config = config or FilterbankConfig()
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("analyze expects a one-dimensional signal")
    if x.size == 0:
        raise ValueError("cannot analyze an empty signal")
    if not np.all(np.isfinite(x)):
        raise ValueError("signal contains non-finite samples")
    h = config.window()
    head = config.window_len - config.hop
    tail = head + (-x.size) % config.hop
    xp = np.concatenate([np.zeros(head), x, np.zeros(tail)])
    n_frames = num_frames(x.size, config)
    blocks = xp[_frame_index(n_frames, config)] * h
    folded = blocks.reshape(n_frames, -1, config.fft_size).sum(axis=1)
    return Spectrogram(np.fft.rfft(folded, axis=1), config, x.size)


def synthesize(spec: Spectrogram, config: FilterbankConfig | None = None, align: bool = True) -> np.ndarray:
    """Weighted overlap-add synthesis.

    With ``align=True`` the output is trimmed to the original signal length
    and time-aligned with the analysed input.
    """
    if config is not None and config.key() != spec.config.key():
        raise ValueError("spectrogram was produced with a different filterbank configuration")
    cfg = spec.config
    data = np.asarray(spec.data)
    if data.ndim != 2 or data.shape[1] != cfg.bins:
        raise ValueError(f"expected frames x {cfg.bins} spectrogram, got {data.shape}")
    h = cfg.window()
    n_frames = data.shape[0]
    blocks = np.fft.irfft(data, n=cfg.fft_size, axis=1)
    blocks = np.tile(blocks, (1, cfg.window_len // cfg.fft_size)) * h
    out_len = (n_frames - 1) * cfg.hop + cfg.window_len
    out = np.zeros(out_len)
    # hop divides fft_size, so frames can be accumulated in window_len//hop strided passes
    step = cfg.window_len // cfg.hop
    for start in range(step):
        sel = blocks[start::step]
        if sel.size == 0:
            continue
        seg = sel.reshape(-1)
        off = start * cfg.hop
        out[off : off + seg.size] += seg
    if not align:
        return out
    return out[cfg.delay : cfg.delay + spec.length]
