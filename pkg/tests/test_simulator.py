import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdrdereverb.metrics import t60_from_edc
from cdrdereverb.simulator import (
    FD_TAPS,
    ImpulseResponse,
    RoomSpec,
    SimulationError,
    _image_sources,
    _render,
    circle_directions,
    delay_signal,
    eyring_t60,
    fibonacci_sphere,
    fractional_delay_filter,
    linear_array,
    make_mixture,
    reverberant_mixture,
    simulate_rir,
    simulate_rirs,
    speech_like,
    split_rir,
    synthesize_isotropic,
)


def test_fractional_delay_matches_windowed_sinc():
    frac = np.array([0.0, 0.25, 0.5, 0.9])
    half = (FD_TAPS - 1) // 2
    m = np.arange(FD_TAPS) - half
    t = m[None, :] - frac[:, None]
    ref = np.sinc(t) * 0.5 * (1 + np.cos(np.pi * t / (half + 1)))
    np.testing.assert_allclose(fractional_delay_filter(frac), ref, atol=1e-13)


def test_fractional_delay_integer_is_impulse():
    h = fractional_delay_filter(0.0)
    assert h[(FD_TAPS - 1) // 2] == 1.0
    assert np.sum(np.abs(h)) == pytest.approx(1.0)
    with pytest.raises(SimulationError):
        fractional_delay_filter(0.1, taps=80)


def test_polyphase_render_close_to_direct_sum(rng):
    delays = rng.uniform(50, 900, 40)
    amps = rng.standard_normal(40)
    out = _render(delays, amps, 1000)
    ref = np.zeros(1000)
    half = (FD_TAPS - 1) // 2
    for d, a in zip(delays, amps):
        n0 = int(math.floor(d))
        ref[n0 - half : n0 + half + 1] += a * fractional_delay_filter(d - n0)
    assert np.max(np.abs(out - ref)) < 1e-5 * np.max(np.abs(ref))


def test_room_validation():
    with pytest.raises(SimulationError):
        RoomSpec([4, 3, 2.5], 1.0, [1, 1, 1], [[2, 2, 1]])
    with pytest.raises(SimulationError):
        RoomSpec([4, 3, 2.5], 0.5, [5, 1, 1], [[2, 2, 1]])
    with pytest.raises(SimulationError):
        RoomSpec([4, 3, 2.5], 0.5, [1, 1, 1], [[2, 2, 3]])
    r = RoomSpec.with_walls([4, 3, 2.5], 0.9, 0.1, [1, 1, 1], [[2, 2, 1]])
    assert r.beta.tolist() == [0.9] * 4 + [0.1] * 2


def test_linear_array_geometry():
    m = linear_array([2.0, 1.5, 1.25], 8, 0.08)
    assert m.shape == (8, 3)
    np.testing.assert_allclose(np.diff(m[:, 0]), 0.08)
    np.testing.assert_allclose(m.mean(axis=0), [2.0, 1.5, 1.25])


def test_free_field_is_single_scaled_impulse():
    src = np.array([2.0, 1.5, 1.25])
    mic = np.array([3.0, 1.5, 1.25])
    room = RoomSpec([4, 3, 2.5], 0.0, src, mic[None, :])
    h = simulate_rir(room, highpass=False)
    r = 1.0
    assert h.onset == round(r / room.c * 16000)
    assert np.sum(h.samples) == pytest.approx(1 / (4 * np.pi * r), rel=1e-3)
    # everything sits within the interpolation filter's support
    nz = np.flatnonzero(np.abs(h.samples) > 1e-12)
    assert nz.max() - nz.min() <= FD_TAPS


def test_image_list_truncation():
    room = RoomSpec([4, 3, 2.5], 0.9, [2.5, 2.2, 1.3], [[2, 1.5, 1.25]])
    pos, gains = _image_sources(room, 60.0)
    assert np.all(gains >= 10 ** (-60 / 20) - 1e-15)
    assert gains.max() == 1.0
    # lower threshold -> fewer images
    assert _image_sources(room, 30.0)[0].shape[0] < pos.shape[0]


def test_rir_reverberation_time_near_eyring():
    room = RoomSpec([4, 3, 2.5], 0.9, [2.5, 2.2, 1.3], [[2, 1.5, 1.25]])
    h = simulate_rir(room)
    t60 = t60_from_edc(h)
    ey = eyring_t60(room)
    assert abs(t60 - ey) / ey < 0.2


def test_simulation_is_deterministic(small_rirs):
    room, rirs = small_rirs
    again = simulate_rirs(room)
    for a, b in zip(rirs, again):
        assert np.array_equal(a.samples, b.samples)


def test_split_is_exact(small_rirs):
    _, rirs = small_rirs
    e, l = split_rir(rirs[0], 0.05)
    np.testing.assert_array_equal(e.samples + l.samples, rirs[0].samples)
    k = rirs[0].onset + 800 + 1
    assert np.all(e.samples[k:] == 0) and np.all(l.samples[:k] == 0)


def test_reverberant_mixture_components_sum(small_rirs, rng):
    _, rirs = small_rirs
    clean = rng.standard_normal(4000)
    mix = reverberant_mixture(clean, rirs)
    np.testing.assert_allclose(mix.early + mix.late, mix.x)
    assert mix.x.shape == (2, 4000 + rirs[0].samples.size - 1)


def test_impulse_response_rejects_nonfinite():
    with pytest.raises(SimulationError):
        ImpulseResponse(np.array([0.0, np.nan]), 16000)


def test_direction_sets_are_unit_vectors():
    for u in (fibonacci_sphere(360), circle_directions(360)):
        np.testing.assert_allclose(np.linalg.norm(u, axis=1), 1.0)
    assert abs(fibonacci_sphere(360).mean(axis=0)).max() < 0.01


def test_isotropic_rejects_few_sources():
    with pytest.raises(SimulationError):
        synthesize_isotropic("spherical", np.zeros((2, 3)), 0.1, num_sources=8)


def test_isotropic_is_seeded():
    mics = np.array([[0, 0, 0], [0.08, 0, 0]])
    a = synthesize_isotropic("cylindrical", mics, 0.2, seed=3)
    b = synthesize_isotropic("cylindrical", mics, 0.2, seed=3)
    c = synthesize_isotropic("cylindrical", mics, 0.2, seed=4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


@settings(max_examples=30, deadline=None)
@given(delay=st.floats(40.0, 80.0))
def test_delay_signal_matches_phase_shift(delay):
    n = 4096
    f0 = 200.0
    t = np.arange(n) / 16000
    x = np.sin(2 * np.pi * f0 * t)
    y = delay_signal(x, delay, n)
    ref = np.sin(2 * np.pi * f0 * (t - delay / 16000))
    assert np.max(np.abs(y[200:-200] - ref[200:-200])) < 1e-3


def test_delay_signal_needs_filter_headroom():
    with pytest.raises(SimulationError):
        delay_signal(np.ones(100), 10.0)


@pytest.mark.parametrize("target", [-5.0, 0.0, 10.0])
def test_mixture_realizes_target_cdr(target):
    clean = np.random.default_rng(0).standard_normal(32000)
    mix = make_mixture(clean, math.radians(30), target, num_sources=64)
    ok = np.isfinite(mix.realized_cdr_db)
    np.testing.assert_allclose(mix.realized_cdr_db[ok], target, atol=1e-6)
    assert mix.tdoa == pytest.approx(0.08 * 0.5 / 343.0)


def test_mixture_infinite_targets():
    clean = np.random.default_rng(1).standard_normal(8000)
    pure = make_mixture(clean, 0.0, np.inf, num_sources=16)
    assert np.all(pure.noise == 0)
    noise = make_mixture(clean, 0.0, -np.inf, num_sources=16)
    assert np.allclose(noise.direct, 0)
    assert np.std(noise.x) > 0


def test_speech_like_properties():
    s = speech_like(5.0, seed=2)
    assert s.size == 80000
    assert np.sqrt(np.mean(s**2)) == pytest.approx(1.0)
    assert np.array_equal(s, speech_like(5.0, seed=2))
    # nonstationary: frame energies spread over more than 20 dB
    e = np.sum(s[: 80000 // 400 * 400].reshape(-1, 400) ** 2, axis=1) + 1e-12
    assert 10 * np.log10(e.max() / np.percentile(e, 10)) > 20


def test_eyring_anechoic_and_monotone():
    room = lambda b: RoomSpec([4, 3, 2.5], b, [1, 1, 1], [[2, 2, 1]])
    assert eyring_t60(room(0.0)) == 0.0
    assert eyring_t60(room(0.5)) < eyring_t60(room(0.9))
