import numpy as np
import pytest

from cdrdereverb.metrics import (
    FwSegConfig,
    MetricError,
    classify_by_elr,
    diffuseness_mse,
    edc_db,
    elr,
    fwsegsnr,
    mel_filterbank,
    t60_from_edc,
    true_cdr_field,
)


def test_elr_of_scaled_signals(rng):
    x = rng.standard_normal(16000)
    y = rng.standard_normal(16000)
    r = elr(x, 0.1 * y)
    # 20 dB up to the random spectral differences between two noise draws
    assert r.mean_db == pytest.approx(20.0, abs=0.5)
    assert r.elr_db.shape == r.valid.shape


def test_elr_invalid_where_late_is_silent(rng):
    x = rng.standard_normal(8000)
    r = elr(x, np.zeros(8000))
    assert not r.valid.any() and r.mean_db == np.inf
    with pytest.raises(MetricError):
        elr(np.zeros((3, 4), complex), np.zeros((3, 5), complex))


def test_elr_band_mean(rng):
    x = rng.standard_normal(16000)
    r = elr(x, x)
    f = np.arange(257) * 31.25
    assert r.band_mean_db(f, 300, 4000) == pytest.approx(0.0, abs=1e-9)


def test_true_cdr_and_mse():
    E = [np.ones((4, 3), complex) * 2.0]
    L = [np.ones((4, 3), complex)]
    cdr, valid = true_cdr_field(E, L)
    np.testing.assert_allclose(cdr, 4.0)
    assert valid.all()
    assert diffuseness_mse(cdr, cdr) == 0.0
    assert diffuseness_mse([0.0], [np.inf]) == 1.0
    with pytest.raises(MetricError):
        diffuseness_mse([1.0], [1.0], [False])
    with pytest.raises(MetricError):
        diffuseness_mse([1.0, 2.0], [1.0])


def test_exponential_decay_t60():
    # oracle: h = n(t) exp(-6.91 t / T) decays 60 dB in T
    fs, T = 16000, 0.5
    t = np.arange(int(1.5 * fs)) / fs
    h = np.random.default_rng(0).standard_normal(t.size) * np.exp(-3 * np.log(10) * t / T)
    assert t60_from_edc(h, fs) == pytest.approx(T, rel=0.05)


def test_t60_needs_a_decay():
    with pytest.raises(MetricError):
        t60_from_edc(np.r_[1.0, np.zeros(100)], 16000)
    with pytest.raises(MetricError):
        t60_from_edc(np.ones(100), 16000)  # only 20 dB of decay
    with pytest.raises(MetricError):
        edc_db(np.zeros(10))
    with pytest.raises(MetricError):
        t60_from_edc(np.ones(10))


def test_mel_filterbank_shape():
    fb = mel_filterbank(23, 512, 16000, 125, 8000)
    assert fb.shape == (23, 257)
    assert np.all(fb >= 0) and np.all(fb.max(axis=1) > 0.5)


def test_fwsegsnr_limits(rng):
    x = rng.standard_normal(16000)
    assert fwsegsnr(x, x) == pytest.approx(35.0)
    assert fwsegsnr(x, 0.5 * x) == pytest.approx(35.0)  # unit-area spectra ignore scale
    raw = FwSegConfig(normalize=False)
    assert fwsegsnr(x, 0.5 * x, cfg=raw) == pytest.approx(20 * np.log10(2), abs=1e-6)
    # band magnitudes only: score falls as additive noise grows
    n = rng.standard_normal(16000)
    scores = [fwsegsnr(x, x + a * n, cfg=raw) for a in (0.1, 1.0, 3.0)]
    assert scores[0] > scores[1] > scores[2]
    with pytest.raises(MetricError):
        fwsegsnr(x, x[:-1])
    with pytest.raises(MetricError):
        fwsegsnr(np.zeros(1000), np.zeros(1000))


def test_fwsegsnr_clips_per_segment(rng):
    x = rng.standard_normal(16000)
    raw = FwSegConfig(normalize=False)
    # magnitudes only: a sign flip is distortion-free
    assert fwsegsnr(x, -x, cfg=raw) == pytest.approx(35.0)
    assert fwsegsnr(x, np.zeros_like(x), cfg=raw) == pytest.approx(0.0, abs=1e-9)
    # 10x gain gives -19 dB per band, clipped to the -10 dB floor
    assert fwsegsnr(x, 10 * x, cfg=raw) == pytest.approx(-10.0)


def test_classification_by_elr():
    g = np.array([0.9 + 0.1j, 0.1, 0.5, 0.95])
    e = np.array([15.0, -15.0, 0.0, np.inf])
    hi, lo = classify_by_elr(g, e)
    assert hi.tolist() == [0.9 + 0.1j]
    assert lo.tolist() == [0.1]
