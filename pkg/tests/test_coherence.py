import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrdereverb.coherence import (
    CoherenceModels,
    CrossSpectra,
    bessel_j0,
    estimate_coherence,
    estimate_psd,
    long_term_coherence,
    mix_coherence,
    model_2d_isotropic,
    model_diffuse,
    model_plane_wave,
    pair_coherence,
    parse_pairs,
    recursive_average,
    tdoa_from_doa,
    update_psd,
)
from cdrdereverb.filterbank import ConfigurationError, analyze


def test_diffuse_model_against_sin_over_kd():
    f = np.linspace(1.0, 8000.0, 50)
    kd = 2 * np.pi * f * 0.08 / 343.0
    np.testing.assert_allclose(model_diffuse(0.08, f), np.sin(kd) / kd, rtol=1e-12)
    assert model_diffuse(0.08, 0.0) == 1.0


def test_bessel_j0_against_scipy():
    # scipy only serves as the oracle; the package evaluates its own series/asymptotic forms
    x = np.concatenate([np.linspace(0, 30, 3001), np.linspace(30, 200, 500)])
    np.testing.assert_allclose(bessel_j0(x), scipy.special.j0(x), atol=2e-13)


def test_2d_model_matches_j0_of_kd():
    f = np.array([0.0, 500.0, 4000.0])
    kd = 2 * np.pi * f * 0.08 / 343.0
    np.testing.assert_allclose(model_2d_isotropic(0.08, f), scipy.special.j0(kd), atol=1e-13)


def test_plane_wave_model_unit_magnitude():
    g = model_plane_wave(1e-4, np.linspace(0, 8000, 100))
    np.testing.assert_allclose(np.abs(g), 1.0)
    assert np.angle(model_plane_wave(1e-4, 1000.0)) == pytest.approx(2 * np.pi * 0.1)


def test_mix_coherence_endpoints():
    gs, gn = np.exp(0.3j), 0.4
    assert mix_coherence(np.inf, gs, gn) == gs
    assert mix_coherence(0.0, gs, gn) == gn
    assert mix_coherence(1.0, gs, gn) == pytest.approx((gs + gn) / 2)


def test_tdoa_from_doa():
    assert tdoa_from_doa(math.pi / 2, 0.08, 343.0) == pytest.approx(0.08 / 343.0)
    assert tdoa_from_doa(0.0) == 0.0
    with pytest.raises(ValueError):
        tdoa_from_doa(0.1, d=0.0)


def test_recursive_average_matches_loop(rng):
    x = rng.standard_normal((50, 3))
    lam = 0.68
    ref = np.zeros_like(x)
    s = np.zeros(3)
    for t in range(50):
        s = lam * s + (1 - lam) * x[t]
        ref[t] = s
    np.testing.assert_allclose(recursive_average(x, lam), ref, rtol=1e-12)


@pytest.mark.parametrize("lam", [0.0, 1.0, -0.5])
def test_lambda_range(lam):
    with pytest.raises(ConfigurationError):
        recursive_average(np.ones(3), lam)


def test_streaming_update_equals_batch(rng):
    X1 = rng.standard_normal((20, 5)) + 1j * rng.standard_normal((20, 5))
    X2 = rng.standard_normal((20, 5)) + 1j * rng.standard_normal((20, 5))
    batch = estimate_psd(X1, X2, 0.68)
    st_ = CrossSpectra.zeros(5, 0.68)
    for t in range(20):
        st_ = update_psd(st_, X1[t], X2[t])
    np.testing.assert_allclose(st_.phi12, batch.phi12[-1], rtol=1e-12)
    np.testing.assert_allclose(st_.phi11, batch.phi11[-1], rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(0.05, 0.95))
def test_coherence_magnitude_bounded(seed, lam):
    rng = np.random.default_rng(seed)
    X1 = rng.standard_normal((30, 8)) + 1j * rng.standard_normal((30, 8))
    X2 = 0.7 * X1 + 0.3 * (rng.standard_normal((30, 8)) + 1j * rng.standard_normal((30, 8)))
    coh = estimate_coherence(estimate_psd(X1, X2, lam))
    assert np.all(np.abs(coh.gamma) <= 1.0)


def test_identical_channels_have_unit_coherence(rng):
    X = rng.standard_normal((10, 4)) + 1j * rng.standard_normal((10, 4))
    coh = estimate_coherence(estimate_psd(X, X, 0.68))
    np.testing.assert_allclose(coh.gamma, 1.0, atol=1e-12)


def test_silent_bins_are_invalid():
    X = np.zeros((5, 3), complex)
    X[:, 1] = 1.0
    coh = estimate_coherence(estimate_psd(X, X, 0.5))
    assert coh.valid[:, 1].all() and not coh.valid[:, 0].any()
    assert np.all(coh.gamma[:, 0] == 0)


def test_independent_noise_has_low_long_term_coherence(rng):
    x1, x2 = rng.standard_normal((2, 160000))
    g = long_term_coherence(analyze(x1).data, analyze(x2).data)
    assert np.mean(np.abs(g[1:-1]) ** 2) < 0.01


def test_pair_parsing():
    assert parse_pairs(None, 4) == [(0, 1), (1, 2), (2, 3)]
    assert parse_pairs("0-2,3-1", 4) == [(0, 2), (3, 1)]
    for bad in ("0-0", "0-4", "x-1"):
        with pytest.raises(ValueError):
            parse_pairs(bad, 4)


def test_pair_coherence_averages_pairs(rng):
    s = rng.standard_normal(20000)
    sig = np.stack([s, s, rng.standard_normal(20000)])
    g01 = pair_coherence(sig, [(0, 1)])
    g = pair_coherence(sig, [(0, 1), (1, 2)])
    np.testing.assert_allclose(g01[1:-1].real, 1.0, atol=1e-9)
    assert np.mean(g.real[1:-1]) == pytest.approx(0.5, abs=0.1)


def test_models_build():
    f = np.array([0.0, 1000.0])
    m = CoherenceModels.build(f, 0.08, 1e-4, "2d-iso")
    np.testing.assert_allclose(m.gamma_n, model_2d_isotropic(0.08, f))
    assert CoherenceModels.build(f, tdoa=None).gamma_s is None
    with pytest.raises(ConfigurationError):
        CoherenceModels.build(f, noise_model="bogus")
