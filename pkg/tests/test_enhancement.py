import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrdereverb.enhancement import (
    PostfilterConfig,
    StreamingPostfilter,
    dereverberate,
    gain,
    preprocess,
)
from cdrdereverb.filterbank import ConfigurationError, FilterbankConfig, analyze
from cdrdereverb.simulator import synthesize_isotropic


def test_default_parameters():
    cfg = PostfilterConfig(tdoa=0.0)
    assert (cfg.mu, cfg.g_min, cfg.lam, cfg.estimator) == (1.3, 0.1, 0.68, "prop2")


@pytest.mark.parametrize(
    "kw",
    [
        dict(estimator="prop2"),  # needs a TDOA
        dict(estimator="prop3", tdoa=1e-4),  # takes none
        dict(estimator="prop3", g_min=0.0),
        dict(estimator="prop3", lam=1.0),
        dict(estimator="prop3", mu=-1.0),
        dict(estimator="bogus"),
        dict(estimator="prop3", noise_model="3d"),
        dict(estimator="prop3", mic_distance=0.0),
    ],
)
def test_config_rejects(kw):
    with pytest.raises(ConfigurationError):
        PostfilterConfig(**kw)


@settings(max_examples=100, deadline=None)
@given(
    cdr=st.floats(0.0, 1e6) | st.just(np.inf),
    mu=st.floats(0.0, 4.0),
    gmin=st.floats(1e-3, 1.0),
)
def test_gain_range(cdr, mu, gmin):
    g = gain(cdr, PostfilterConfig(mu=mu, g_min=gmin, estimator="prop3"))
    assert gmin <= g <= 1.0


def test_gain_formula():
    cfg = PostfilterConfig(estimator="prop3")
    assert gain(np.inf, cfg) == 1.0
    assert gain(0.0, cfg) == 0.1
    assert gain(3.0, cfg) == pytest.approx(1 - np.sqrt(1.3 * 0.25))


def test_preprocess_magnitude_and_phase():
    X1 = np.array([3 + 4j, -1j])
    X2 = np.array([0.0, 2.0])
    Y = preprocess(X1, X2)
    np.testing.assert_allclose(np.abs(Y), 0.5 * np.sqrt(np.abs(X1) ** 2 + np.abs(X2) ** 2))
    np.testing.assert_allclose(np.angle(Y), np.angle(X1))
    with pytest.raises(ValueError):
        preprocess(X1, X2[:1])


def test_zero_input_gives_zero_output():
    res = dereverberate(np.zeros(4000), np.zeros(4000))
    assert np.all(res.output == 0)
    assert not res.valid.any()


def test_coherent_limit(rng):
    # identical channels: fully coherent, gain 1 except the DC bin where the models coincide
    x = rng.standard_normal(16000)
    res = dereverberate(x, x, PostfilterConfig(estimator="prop1", tdoa=0.0))
    assert np.all(res.gain[:, 1:][res.valid[:, 1:]] > 1.0 - 1e-5)
    mid = slice(2000, 14000)
    err = res.output[mid] - x[mid] / np.sqrt(2)
    # only the DC bin is attenuated
    assert np.sqrt(np.mean(err**2)) < 0.02 * np.sqrt(np.mean(x[mid] ** 2))


def test_diffuse_input_is_attenuated(rng):
    x1, x2 = rng.standard_normal((2, 32000))
    res = dereverberate(x1, x2)
    assert np.mean(res.gain) < 0.3
    assert np.all(res.gain >= 0.1 - 1e-15)


def test_streaming_matches_batch(rng):
    fb = FilterbankConfig()
    x1, x2 = rng.standard_normal((2, 8000))
    cfg = PostfilterConfig(estimator="prop2", tdoa=5e-5)
    batch = dereverberate(x1, x2, cfg, fb)
    X1, X2 = analyze(x1, fb).data, analyze(x2, fb).data
    pf = StreamingPostfilter(cfg, fb)
    Z = np.empty_like(X1)
    G = np.empty(X1.shape)
    for t in range(X1.shape[0]):
        Z[t], G[t] = pf.process(X1[t], X2[t])
    np.testing.assert_allclose(G, batch.gain, atol=1e-12)
    np.testing.assert_allclose(Z, batch.gain * batch.Y.data, atol=1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError):
        dereverberate(np.zeros(100), np.zeros(101))


def test_result_diffuseness_matches_cdr(rng):
    x1, x2 = rng.standard_normal((2, 4000))
    res = dereverberate(x1, x2)
    np.testing.assert_allclose(res.diffuseness, 1 / (res.cdr + 1))


def test_preprocess_arithmetic():
    assert preprocess(np.array([2.0 + 0j]), np.array([2.0 + 0j]))[0] == pytest.approx(np.sqrt(8) / 2)
    assert gain(12.0, PostfilterConfig(estimator="prop3")) == pytest.approx(1 - np.sqrt(0.1))


def test_diffuse_field_median_gain():
    mics = np.array([[-0.04, 0.0, 0.0], [0.04, 0.0, 0.0]])
    x = synthesize_isotropic("spherical", mics, 4.0, seed=5, num_sources=128)
    res = dereverberate(x[0], x[1], PostfilterConfig(estimator="prop3"))
    steady = res.gain[20:, 2:]
    assert np.median(steady) <= 0.2
