"""Coherent-to-diffuse power ratio (CDR) estimators.

Every estimator maps a coherence estimate ``gamma_x`` (``|gamma_x| <= 1``)
together with the direct-path model ``gamma_s`` (unit magnitude) and/or the
real noise coherence model ``gamma_n`` to a CDR in ``[0, inf]``.  Inputs are
broadcast with numpy rules, so a frames x bins coherence field combines with
per-bin models directly.

Singular points are resolved by the limit direction: a zero denominator gives
``inf`` where the raw ratio tends to ``+inf`` and ``0`` where it would be
clipped as negative (or is 0/0).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .coherence import CoherenceModels

PROP4_MIN_IMAG = 1e-6
_UNIT_TOL = 4 * np.finfo(float).eps

# which model each estimator consumes
NEEDS_TDOA = {"jeub", "thiergart1", "prop1", "prop2", "prop2u", "prop4"}
NEEDS_NOISE = {"jeub", "thiergart1", "prop1", "prop2", "prop2u", "thiergart2", "prop3"}


def _c(a) -> np.ndarray:
    return np.asarray(a, dtype=complex)


def _r(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


def _mag(gamma_x) -> np.ndarray:
    """|gamma_x| with values within a few ulps of 1 snapped to exactly 1."""
    mag = np.abs(gamma_x)
    return np.where(np.abs(mag - 1.0) <= _UNIT_TOL, 1.0, mag)


def _ratio(num, den):
    """num/den for den <= 0 (and num real), with limits for den == 0."""
    num, den = np.broadcast_arrays(_r(num), _r(den))
    out = np.empty(num.shape)
    zero = den == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        np.divide(num, den, out=out, where=~zero)
    # den -> 0 from below: negative numerator gives +inf, otherwise clipped to 0
    out[zero] = np.where(num[zero] < 0, np.inf, 0.0)
    return out


def cdr_ideal(gamma_x, gamma_s, gamma_n):
    """Complex CDR obtained by solving the mixing line for the CDR."""
    gamma_x, gamma_s, gamma_n = _c(gamma_x), _c(gamma_s), _c(gamma_n)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (gamma_n - gamma_x) / (gamma_x - gamma_s)


def cdr_jeub(gamma_x, gamma_s, gamma_n):
    """Time-aligned estimator; biased for nonzero TDOA."""
    rot = np.real(np.conj(_c(gamma_s)) * _c(gamma_x))
    return np.maximum(0.0, _ratio(_r(gamma_n) - rot, rot - 1.0))


def cdr_thiergart1(gamma_x, gamma_s, gamma_n):
    gamma_x, gamma_s, gamma_n = _c(gamma_x), _c(gamma_s), _c(gamma_n)
    num, den = np.broadcast_arrays(gamma_n - gamma_x, gamma_x - gamma_s)
    out = np.empty(num.shape)
    zero = den == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~zero] = np.real(num[~zero] / den[~zero])
    # gamma_x on the direct-path model itself
    out[zero] = np.where(num[zero] != 0, np.inf, 0.0)
    return np.maximum(0.0, out)


def cdr_prop1(gamma_x, gamma_s, gamma_n):
    gamma_x, gamma_s = _c(gamma_x), _c(gamma_s)
    gs_conj = np.conj(gamma_s)
    num = np.real(gs_conj * (_r(gamma_n) - gamma_x))
    den = np.real(gs_conj * gamma_x) - 1.0
    return np.maximum(0.0, _ratio(num, den))


def cdr_prop2_uncompensated(gamma_x, gamma_s, gamma_n):
    gamma_x, gamma_s = _c(gamma_x), _c(gamma_s)
    gs_conj = np.conj(gamma_s)
    num = np.abs(gs_conj * (_r(gamma_n) - gamma_x))
    den = -np.abs(np.real(gs_conj * gamma_x) - 1.0)
    return _ratio(-num, den)


def prop2_compensation(gamma_s, gamma_n):
    """Factor that removes the TDOA-dependent bias of the uncompensated variant.

    Equals 1 where the two models coincide (the DC bin at zero TDOA).
    """
    gamma_s, gamma_n = _c(gamma_s), _r(gamma_n)
    num = 1.0 - gamma_n * np.cos(np.angle(gamma_s))
    den = np.abs(gamma_n - gamma_s)
    num, den = np.broadcast_arrays(num, den)
    out = np.ones(num.shape)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def cdr_prop2(gamma_x, gamma_s, gamma_n):
    return prop2_compensation(gamma_s, gamma_n) * cdr_prop2_uncompensated(gamma_x, gamma_s, gamma_n)


def cdr_thiergart2(gamma_x, gamma_n):
    """DOA-independent estimator using the phase of ``gamma_x`` as the direct model.

    With ``s = exp(j arg x)`` the ratio ``(g - x)/(x - s)`` has denominator
    ``s (|x| - 1)``, so its real part reduces to
    ``(g cos(arg x) - |x|) / (|x| - 1)``.
    """
    gamma_x = _c(gamma_x)
    mag = _mag(gamma_x)
    num = _r(gamma_n) * np.cos(np.angle(gamma_x)) - mag
    return np.maximum(0.0, _ratio(num, mag - 1.0))


def cdr_prop3(gamma_x, gamma_n):
    """Unbiased DOA-independent estimator (positive root of the unit-circle condition).

    Evaluates ``(g Re - |x|^2 - sqrt(disc)) / (|x|^2 - 1)`` with the radicand
    written as ``(g - Re)^2 + (1 - g^2) Im^2`` (identical, but free of
    cancellation).  Where ``a = g Re - |x|^2`` is nonnegative the root is
    rationalised to ``|x - g|^2 / (a + sqrt(disc))``, which avoids subtracting
    nearly equal numbers close to the noise model.
    """
    gamma_x = _c(gamma_x)
    gn = _r(gamma_n)
    re = np.real(gamma_x)
    im = np.imag(gamma_x)
    gx, gn, re, im = np.broadcast_arrays(gamma_x, gn, re, im)
    disc = (gn - re) ** 2 + (1.0 - gn**2) * im**2
    root = np.sqrt(np.maximum(disc, 0.0))
    a = re * (gn - re) - im**2
    one_minus_mag2 = 1.0 - _mag(gx) ** 2
    out = np.empty(gx.shape)
    pos = a >= 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sq = np.abs(gx - gn) ** 2
        out[pos] = np.where(sq[pos] == 0, 0.0, sq[pos] / (a[pos] + root[pos]))
        neg = ~pos
        out[neg] = _ratio(-(root[neg] - a[neg]), -one_minus_mag2[neg])
    return np.maximum(0.0, out)


def cdr_prop4(gamma_x, gamma_s, return_valid: bool = False):
    """Noise-model-free estimator from imaginary parts.

    Bins with ``|Im gamma_s| < 1e-6`` cannot be resolved and return 0 (and are
    reported invalid when ``return_valid`` is set).
    """
    im_x = np.imag(_c(gamma_x))
    im_s = np.imag(_c(gamma_s))
    im_x, im_s = np.broadcast_arrays(im_x, im_s)
    valid = np.abs(im_s) >= PROP4_MIN_IMAG
    out = np.zeros(im_x.shape)
    r = np.zeros(im_x.shape)
    r[valid] = im_x[valid] / im_s[valid]
    mid = valid & (r > 0) & (r < 1)
    out[mid] = im_x[mid] / (im_s[mid] - im_x[mid])
    out[valid & (r >= 1)] = np.inf
    if return_valid:
        return out, valid
    return out


def diffuseness(cdr):
    cdr = _r(cdr)
    with np.errstate(divide="ignore"):
        return 1.0 / (cdr + 1.0)


ESTIMATORS: dict[str, Callable[[np.ndarray, CoherenceModels], np.ndarray]] = {
    "jeub": lambda gx, m: cdr_jeub(gx, m.gamma_s, m.gamma_n),
    "thiergart1": lambda gx, m: cdr_thiergart1(gx, m.gamma_s, m.gamma_n),
    "prop1": lambda gx, m: cdr_prop1(gx, m.gamma_s, m.gamma_n),
    "prop2u": lambda gx, m: cdr_prop2_uncompensated(gx, m.gamma_s, m.gamma_n),
    "prop2": lambda gx, m: cdr_prop2(gx, m.gamma_s, m.gamma_n),
    "thiergart2": lambda gx, m: cdr_thiergart2(gx, m.gamma_n),
    "prop3": lambda gx, m: cdr_prop3(gx, m.gamma_n),
    "prop4": lambda gx, m: cdr_prop4(gx, m.gamma_s),
}


def estimate_cdr(method: str, gamma_x, models: CoherenceModels) -> np.ndarray:
    """Dispatch by estimator identifier."""
    try:
        fn = ESTIMATORS[method]
    except KeyError:
        raise ValueError(f"unknown estimator {method!r}; choose from {sorted(ESTIMATORS)}") from None
    if method in NEEDS_TDOA and models.gamma_s is None:
        raise ValueError(f"estimator {method!r} needs a direct-path model (TDOA)")
    if method in NEEDS_NOISE and models.gamma_n is None:
        raise ValueError(f"estimator {method!r} needs a noise coherence model")
    return fn(gamma_x, models)


def estimate_valid(method: str, gamma_x, models: CoherenceModels) -> np.ndarray:
    """Per-bin validity flag for ``method`` (only prop4 has unresolved bins)."""
    shape = np.broadcast(np.asarray(gamma_x), np.asarray(models.freqs)).shape
    if method == "prop4":
        _, valid = cdr_prop4(gamma_x, models.gamma_s, return_valid=True)
        return np.broadcast_to(valid, shape)
    return np.ones(shape, dtype=bool)
