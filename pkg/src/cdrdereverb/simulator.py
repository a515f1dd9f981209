"""Ground-truth generation: image-source room impulse responses, isotropic
noise fields, plane wave plus noise mixtures at a known CDR and reverberant
mixtures split into early and late components."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve, lfilter

from .coherence import SOUND_SPEED

FD_TAPS = 81


class SimulationError(ValueError):
    pass


@dataclass
class RoomSpec:
    """Shoebox room.

    ``beta`` holds the reflection coefficients of the six surfaces in the
    order ``(x=0, x=Lx, y=0, y=Ly, z=0 floor, z=Lz ceiling)``; a scalar is
    broadcast to all surfaces.
    """

    dims: np.ndarray
    beta: np.ndarray
    source: np.ndarray
    mics: np.ndarray
    sample_rate: int = 16000
    c: float = SOUND_SPEED

    def __post_init__(self):
        self.dims = np.asarray(self.dims, dtype=float).reshape(3)
        beta = np.asarray(self.beta, dtype=float)
        self.beta = np.broadcast_to(beta, (6,)).copy() if beta.size == 1 else beta.reshape(6)
        self.source = np.asarray(self.source, dtype=float).reshape(3)
        self.mics = np.atleast_2d(np.asarray(self.mics, dtype=float))
        if self.mics.shape[1] != 3:
            raise SimulationError("mic positions must be M x 3")
        if np.any(self.dims <= 0):
            raise SimulationError("room dimensions must be positive")
        if np.any(self.beta < 0) or np.any(self.beta >= 1):
            raise SimulationError("reflection coefficients must lie in [0, 1)")
        for name, pos in [("source", self.source[None, :]), ("microphone", self.mics)]:
            if np.any(pos <= 0) or np.any(pos >= self.dims):
                raise SimulationError(f"{name} position lies outside the room")

    @classmethod
    def with_walls(cls, dims, beta_walls, beta_floor_ceiling, source, mics, **kw) -> "RoomSpec":
        b = [beta_walls] * 4 + [beta_floor_ceiling] * 2
        return cls(dims, b, source, mics, **kw)

    @property
    def volume(self) -> float:
        return float(np.prod(self.dims))

    def surface_areas(self) -> np.ndarray:
        lx, ly, lz = self.dims
        return np.array([ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly])


@dataclass
class ImpulseResponse:
    samples: np.ndarray
    sample_rate: int
    onset: int | None = None  # index of the direct-path peak
    te: float = 0.05

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.onset is None:
            self.onset = int(np.argmax(np.abs(self.samples))) if self.samples.size else 0
        if not np.all(np.isfinite(self.samples)):
            raise SimulationError("impulse response has non-finite samples")

    @property
    def split_index(self) -> int:
        return split_index(self, self.te)

    @property
    def energy(self) -> float:
        return float(np.sum(self.samples**2))


def linear_array(center, num_mics: int = 8, spacing: float = 0.08) -> np.ndarray:
    """Uniform linear array along the x axis centred at ``center``."""
    center = np.asarray(center, dtype=float)
    offs = (np.arange(num_mics) - (num_mics - 1) / 2) * spacing
    return center + np.outer(offs, [1.0, 0.0, 0.0])


def fractional_delay_filter(frac, taps: int = FD_TAPS) -> np.ndarray:
    """Hann-windowed sinc taps delaying by ``(taps - 1)/2 + frac`` samples.

    ``frac`` may be an array; the result then has shape ``frac.shape + (taps,)``.
    """
    if taps % 2 == 0:
        raise SimulationError("fractional delay filter needs an odd tap count")
    frac = np.asarray(frac, dtype=float)[..., None]
    half = (taps - 1) // 2
    m = np.arange(taps) - half
    t = m - frac
    # sin(pi (m - f)) = -(-1)^m sin(pi f): one transcendental per delay, not per tap
    sign = np.where(m % 2, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = sign * np.sin(np.pi * frac) / (np.pi * t)
    s = np.where(t == 0, 1.0, s)
    a = np.pi / (half + 1)
    win = 0.5 * (1.0 + np.cos(a * m) * np.cos(a * frac) + np.sin(a * m) * np.sin(a * frac))
    return s * win


def _image_sources(room: RoomSpec, stop_threshold_db: float):
    """Image positions and their reflection gains (product of surface betas).

    Images whose reflection gain is more than ``stop_threshold_db`` below the
    direct path are dropped.
    """
    thr = 10.0 ** (-stop_threshold_db / 20.0)
    bmax = float(np.max(room.beta))
    if bmax <= 0:
        max_refl = 0
    else:
        max_refl = int(math.ceil(math.log(thr) / math.log(bmax)))
    # an axis offset m needs at least 2|m| - 1 reflections
    mmax = (max_refl + 1) // 2
    m = np.arange(-mmax, mmax + 1)
    logb = np.log(np.maximum(room.beta, 1e-300))
    positions = []
    gains = []
    for p in np.ndindex(2, 2, 2):
        axes_pos = []
        axes_logg = []
        axes_nrefl = []
        for a in range(3):
            pa = p[a]
            n_lo = np.abs(m - pa)  # reflections off the surface at 0
            n_hi = np.abs(m)  # reflections off the opposite surface
            axes_pos.append((1 - 2 * pa) * room.source[a] + 2 * m * room.dims[a])
            with np.errstate(invalid="ignore"):
                lg = np.where(n_lo > 0, n_lo * logb[2 * a], 0.0) + np.where(n_hi > 0, n_hi * logb[2 * a + 1], 0.0)
            axes_logg.append(lg)
            axes_nrefl.append(n_lo + n_hi)
        lg = axes_logg[0][:, None, None] + axes_logg[1][None, :, None] + axes_logg[2][None, None, :]
        keep = lg >= math.log(thr) - 1e-12
        if room.beta.min() == 0:
            # zero-beta surfaces: any reflection off them kills the image
            nr0 = [
                (np.abs(m - p[a]) * (room.beta[2 * a] == 0) + np.abs(m) * (room.beta[2 * a + 1] == 0)) > 0
                for a in range(3)
            ]
            dead = nr0[0][:, None, None] | nr0[1][None, :, None] | nr0[2][None, None, :]
            keep &= ~dead
        ix, iy, iz = np.nonzero(keep)
        positions.append(np.stack([axes_pos[0][ix], axes_pos[1][iy], axes_pos[2][iz]], axis=1))
        gains.append(np.exp(lg[ix, iy, iz]))
    return np.concatenate(positions), np.concatenate(gains)


PHASES = 512


@functools.lru_cache(maxsize=4)
def _phase_table(taps: int, phases: int) -> np.ndarray:
    return fractional_delay_filter(np.arange(phases + 1) / phases, taps)


def _render(delays: np.ndarray, amps: np.ndarray, length: int, taps: int = FD_TAPS) -> np.ndarray:
    """Sum of fractionally delayed impulses (delays in samples).

    Amplitudes are accumulated on a grid of integer delay x ``PHASES``
    fractional phases (linear interpolation between neighbouring phases, so
    the filter error is second order in 1/PHASES) and the grid is then
    filtered by the tabulated windowed-sinc bank.  ``bincount`` sums in input
    order, which keeps the result deterministic.
    """
    half = (taps - 1) // 2
    base = np.floor(delays).astype(np.int64)
    pos = (delays - base) * PHASES
    q = np.minimum(np.floor(pos).astype(np.int64), PHASES - 1)
    w = pos - q
    keep = (base >= 0) & (base < length)
    base, q, w, a = base[keep], q[keep], w[keep], amps[keep]
    rows = PHASES + 1
    grid = np.bincount(base * rows + q, weights=a * (1.0 - w), minlength=length * rows)
    grid += np.bincount(base * rows + q + 1, weights=a * w, minlength=length * rows)
    grid = grid.reshape(length, rows)
    contrib = grid @ _phase_table(taps, PHASES)  # length x taps
    out = np.zeros(length + taps)
    for k in range(taps):
        out[k : k + length] += contrib[:, k]
    return out[half : half + length]


def dc_blocker(x: np.ndarray, sample_rate: int, cutoff: float = 100.0) -> np.ndarray:
    """Second-order highpass used by the classic image-method generator.

    With positive reflection coefficients all image amplitudes add up at DC,
    so an unfiltered RIR carries a large non-physical low-frequency build-up.
    """
    w = 2 * np.pi * cutoff / sample_rate
    r1 = math.exp(-w)
    b = [1.0, -(1.0 + r1), r1]
    a = [1.0, -2.0 * r1 * math.cos(w), r1 * r1]
    return lfilter(b, a, x)


def simulate_rirs(room: RoomSpec, stop_threshold_db: float = 60.0, te: float = 0.05,
                  highpass: bool = True) -> list[ImpulseResponse]:
    """Image-method RIRs for every microphone in ``room``.

    ``highpass`` applies :func:`dc_blocker` (100 Hz) to each response.
    """
    pos, gains = _image_sources(room, stop_threshold_db)
    fs = room.sample_rate
    half = (FD_TAPS - 1) // 2
    dists = np.linalg.norm(pos[None, :, :] - room.mics[:, None, :], axis=2)
    length = int(math.ceil(dists.max() / room.c * fs)) + half + 1 + int(round(te * fs))
    out = []
    for i in range(room.mics.shape[0]):
        r = dists[i]
        delays = r / room.c * fs
        h = _render(delays, gains / (4 * np.pi * r), length)
        if highpass:
            h = dc_blocker(h, fs)
        direct = float(np.linalg.norm(room.source - room.mics[i])) / room.c * fs
        out.append(ImpulseResponse(h, fs, int(round(direct)), te))
    return out


def simulate_rir(room: RoomSpec, mic_index: int = 0, stop_threshold_db: float = 60.0, te: float = 0.05,
                 highpass: bool = True) -> ImpulseResponse:
    if not 0 <= mic_index < room.mics.shape[0]:
        raise SimulationError(f"mic_index {mic_index} out of range")
    sub = RoomSpec(room.dims, room.beta, room.source, room.mics[mic_index : mic_index + 1], room.sample_rate, room.c)
    return simulate_rirs(sub, stop_threshold_db, te, highpass)[0]


def eyring_t60(room: RoomSpec) -> float:
    """Reverberation time predicted by Eyring's formula (absorption = 1 - beta^2)."""
    areas = room.surface_areas()
    alpha = np.sum(areas * (1.0 - room.beta**2)) / areas.sum()
    if alpha >= 1.0:
        return 0.0  # anechoic
    return 24.0 * math.log(10.0) * room.volume / (room.c * -areas.sum() * math.log(1.0 - alpha))


def split_index(rir: ImpulseResponse, te: float) -> int:
    """First sample of the late part: ``te`` seconds after the direct-path peak."""
    if te < 0:
        raise SimulationError("te must be nonnegative")
    return int(rir.onset) + int(round(te * rir.sample_rate)) + 1


def split_rir(rir: ImpulseResponse, te: float | None = None) -> tuple[ImpulseResponse, ImpulseResponse]:
    """Split into early and late parts of the original length (early + late == rir)."""
    te = rir.te if te is None else te
    k = min(split_index(rir, te), rir.samples.size)
    early = np.zeros_like(rir.samples)
    late = np.zeros_like(rir.samples)
    early[:k] = rir.samples[:k]
    late[k:] = rir.samples[k:]
    return (
        ImpulseResponse(early, rir.sample_rate, rir.onset, te),
        ImpulseResponse(late, rir.sample_rate, rir.onset, te),
    )


def fibonacci_sphere(n: int) -> np.ndarray:
    """``n`` unit vectors on a spherical Fibonacci lattice."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    phi = np.pi * (1.0 + math.sqrt(5.0)) * k
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def circle_directions(n: int) -> np.ndarray:
    phi = 2 * np.pi * np.arange(n) / n
    return np.stack([np.cos(phi), np.sin(phi), np.zeros(n)], axis=1)


def synthesize_isotropic(
    field: str,
    mic_positions,
    duration: float,
    sample_rate: int = 16000,
    num_sources: int = 360,
    seed: int = 0,
    c: float = SOUND_SPEED,
) -> np.ndarray:
    """Superpose ``num_sources`` independent white-noise plane waves.

    ``field='spherical'`` spreads directions over the sphere (Fibonacci
    lattice), ``'cylindrical'`` over the horizontal circle.  Propagation delays
    are applied as exact phase shifts in the DFT domain of the (circular)
    noise realisation.  Returns ``mics x samples`` with unit total power per
    channel.
    """
    if num_sources < 16:
        raise SimulationError("at least 16 sources are needed for an isotropic field")
    if duration <= 0:
        raise SimulationError("duration must be positive")
    if field == "spherical":
        dirs = fibonacci_sphere(num_sources)
    elif field == "cylindrical":
        dirs = circle_directions(num_sources)
    else:
        raise SimulationError(f"unknown field {field!r}")
    mics = np.atleast_2d(np.asarray(mic_positions, dtype=float))
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    omega = 2 * np.pi * np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec = np.zeros((mics.shape[0], omega.size), dtype=complex)
    chunk = 16
    for s in range(0, num_sources, chunk):
        u = dirs[s : s + chunk]
        src = np.fft.rfft(rng.standard_normal((u.shape[0], n)), axis=1)
        # a wave travelling from direction u reaches mics with larger p.u first
        tau = -(mics @ u.T) / c  # mics x sources
        for m in range(mics.shape[0]):
            spec[m] += np.sum(src * np.exp(-1j * np.outer(tau[m], omega)), axis=0)
    # keep the Nyquist bin real so the rendering stays a pure delay of a real signal
    if n % 2 == 0:
        spec[:, -1] = spec[:, -1].real
    return np.fft.irfft(spec, n=n, axis=1) / math.sqrt(num_sources)


def delay_signal(x, delay: float, length: int | None = None) -> np.ndarray:
    """Delay ``x`` by ``delay`` samples (>= half the filter length) with a windowed sinc."""
    x = np.asarray(x, dtype=float)
    half = (FD_TAPS - 1) // 2
    base = int(math.floor(delay)) - half
    if base < 0:
        raise SimulationError(f"delay must be at least {half} samples")
    h = fractional_delay_filter(delay - math.floor(delay))
    y = fftconvolve(x, h)
    out = np.concatenate([np.zeros(base), y])
    length = x.size if length is None else length
    if out.size < length:
        out = np.concatenate([out, np.zeros(length - out.size)])
    return out[:length]


def third_octave_bands(sample_rate: int, f_lo: float = 100.0) -> tuple[np.ndarray, np.ndarray]:
    """Band centres and edges (n+1) of base-2 third-octave bands up to Nyquist."""
    centers = []
    k = math.ceil(3 * math.log2(f_lo / 1000.0))
    while True:
        fc = 1000.0 * 2.0 ** (k / 3)
        if fc * 2 ** (1 / 6) > sample_rate / 2:
            break
        centers.append(fc)
        k += 1
    centers = np.array(centers)
    edges = np.concatenate([centers * 2 ** (-1 / 6), [centers[-1] * 2 ** (1 / 6)]])
    edges[0] = 0.0
    edges[-1] = sample_rate / 2 + 1.0
    return centers, edges


def band_powers(x: np.ndarray, edges: np.ndarray, sample_rate: int) -> np.ndarray:
    X = np.fft.rfft(np.atleast_2d(x), axis=-1)
    f = np.fft.rfftfreq(np.atleast_2d(x).shape[-1], 1.0 / sample_rate)
    band = np.digitize(f, edges) - 1
    p = np.abs(X) ** 2
    out = np.zeros(p.shape[:-1] + (len(edges) - 1,))
    for b in range(len(edges) - 1):
        out[..., b] = p[..., band == b].sum(axis=-1)
    return out


@dataclass
class Mixture:
    x: np.ndarray  # 2 x n microphone signals
    direct: np.ndarray  # 2 x n plane-wave component
    noise: np.ndarray  # 2 x n isotropic component
    tdoa: float
    band_centers: np.ndarray
    target_cdr_db: np.ndarray
    realized_cdr_db: np.ndarray
    sample_rate: int = 16000
    meta: dict = field(default_factory=dict)


def make_mixture(
    clean,
    doa_theta: float,
    target_cdr_db,
    d: float = 0.08,
    c: float = SOUND_SPEED,
    sample_rate: int = 16000,
    seed: int = 0,
    field_type: str = "spherical",
    num_sources: int = 360,
) -> Mixture:
    """Plane-wave rendering of ``clean`` plus isotropic noise at a target CDR.

    ``target_cdr_db`` is a scalar (same target in every third-octave band) or
    one value per band of :func:`third_octave_bands`.  The noise is shaped per
    band so the whole-signal power ratio at microphone 1 matches the target.
    ``+inf`` removes the noise, ``-inf`` removes the plane wave.
    """
    clean = np.asarray(clean, dtype=float)
    if clean.size == 0:
        raise SimulationError("clean signal is empty")
    n = clean.size
    tdoa = d * math.sin(doa_theta) / c
    mics = np.array([[-d / 2, 0.0, 0.0], [d / 2, 0.0, 0.0]])
    base = (FD_TAPS - 1) / 2 + 1 + abs(tdoa) * sample_rate
    direct = np.stack(
        [
            delay_signal(clean, base - tdoa * sample_rate / 2, n),
            delay_signal(clean, base + tdoa * sample_rate / 2, n),
        ]
    )
    noise = synthesize_isotropic(field_type, mics, n / sample_rate, sample_rate, num_sources, seed, c)
    centers, edges = third_octave_bands(sample_rate)
    target = np.broadcast_to(np.asarray(target_cdr_db, dtype=float), centers.shape).copy()

    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    band = np.digitize(f, edges) - 1
    Ps = band_powers(direct[0], edges, sample_rate)[0]
    Pn = band_powers(noise[0], edges, sample_rate)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(Pn > 0, np.sqrt(Ps * 10.0 ** (-target / 10.0) / Pn), 0.0)
    s_gain = np.ones_like(target)
    # -inf: pure noise at the clean signal's band power
    pure_noise = np.isneginf(target)
    scale[pure_noise] = np.where(Pn[pure_noise] > 0, np.sqrt(Ps[pure_noise] / Pn[pure_noise]), 0.0)
    s_gain[pure_noise] = 0.0
    scale[np.isposinf(target)] = 0.0
    N = np.fft.rfft(noise, axis=1) * scale[band]
    noise = np.fft.irfft(N, n=n, axis=1)
    if np.any(s_gain != 1.0):
        D = np.fft.rfft(direct, axis=1) * s_gain[band]
        direct = np.fft.irfft(D, n=n, axis=1)

    Ps = band_powers(direct[0], edges, sample_rate)[0]
    Pn = band_powers(noise[0], edges, sample_rate)[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        realized = 10 * np.log10(Ps / Pn)
    return Mixture(direct + noise, direct, noise, tdoa, centers, target, realized, sample_rate)


@dataclass
class ReverberantMixture:
    x: np.ndarray  # mics x n
    early: np.ndarray
    late: np.ndarray
    rirs: list[ImpulseResponse]
    te: float


def reverberant_mixture(clean, rirs: list[ImpulseResponse], te: float | None = None) -> ReverberantMixture:
    """Convolve ``clean`` with each RIR and with its early and late parts.

    Outputs have length ``len(clean) + len(rir) - 1``; ``early + late == x``.
    """
    clean = np.asarray(clean, dtype=float)
    xs, es, ls = [], [], []
    L = max(r.samples.size for r in rirs)
    for r in rirs:
        t = r.te if te is None else te
        e, l = split_rir(r, t)
        pad = L - r.samples.size
        es.append(np.pad(fftconvolve(clean, e.samples), (0, pad)))
        ls.append(np.pad(fftconvolve(clean, l.samples), (0, pad)))
        xs.append(es[-1] + ls[-1])
    return ReverberantMixture(np.stack(xs), np.stack(es), np.stack(ls), list(rirs), rirs[0].te if te is None else te)


def late_tail_signals(rirs: list[ImpulseResponse], te: float, source) -> np.ndarray:
    """Source convolved with the late part of every RIR (mics x samples)."""
    source = np.asarray(source, dtype=float)
    out = [fftconvolve(source, split_rir(r, te)[1].samples)[: source.size] for r in rirs]
    return np.stack(out)


def speech_like(duration: float, sample_rate: int = 16000, seed: int = 0) -> np.ndarray:
    """Synthetic speech surrogate.

    A sequence of syllable-length segments: voiced ones are glottal pulse
    trains with a drifting pitch, passed through random formant resonators;
    unvoiced ones are highpass noise bursts; pauses separate words.  The result
    is nonstationary in time and frequency like speech, which is what the
    coherence-based estimators are sensitive to.  Normalised to unit RMS.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    t = 0
    while t < n:
        if rng.random() < 0.15:
            t += int(rng.uniform(0.1, 0.4) * sample_rate)  # pause
            continue
        seg_len = int(rng.uniform(0.08, 0.3) * sample_rate)
        seg_len = min(seg_len, n - t)
        if seg_len <= 16:
            break
        env = np.hanning(seg_len) ** 0.5
        if rng.random() < 0.75:
            f0 = rng.uniform(90, 240) * np.linspace(1.0, rng.uniform(0.8, 1.2), seg_len)
            phase = np.cumsum(f0 / sample_rate)
            pulses = np.diff(np.floor(phase), prepend=0.0)
            src = lfilter([1.0], [1.0, -0.95], pulses)  # glottal tilt
            src += 0.02 * rng.standard_normal(seg_len)
            for _ in range(3):
                fc = rng.uniform(300, 3500)
                bw = rng.uniform(60, 200)
                r = math.exp(-math.pi * bw / sample_rate)
                a = [1.0, -2 * r * math.cos(2 * math.pi * fc / sample_rate), r * r]
                src = lfilter([1.0 - r], a, src)
        else:
            src = lfilter([1.0, -0.9], [1.0], rng.standard_normal(seg_len))
        seg = src * env
        seg /= np.sqrt(np.mean(seg**2)) + 1e-12
        out[t : t + seg_len] += seg * rng.uniform(0.3, 1.0)
        t += seg_len + int(rng.uniform(0.0, 0.05) * sample_rate)
    rms = np.sqrt(np.mean(out**2))
    return out / rms if rms > 0 else out
