"""Command-line frontend.

Subcommands: ``dereverb``, ``simulate``, ``analyze-coherence``, ``sweep-bias``
and ``evaluate``.  Exit codes: 0 ok, 2 usage, 3 input format, 4 schema.
Defaults: lambda 0.68, mu 1.3, G_min 0.1, d 0.08 m, Te 50 ms, 16 kHz, seed 0.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as fio
from .coherence import (
    SOUND_SPEED,
    CoherenceModels,
    estimate_coherence,
    estimate_psd,
    mix_coherence,
    model_2d_isotropic,
    model_diffuse,
    model_plane_wave,
    pair_coherence,
    parse_pairs,
    tdoa_from_doa,
)
from .enhancement import DOA_INDEPENDENT, NOISE_MODELS, PostfilterConfig, dereverberate, preprocess
from .estimators import ESTIMATORS, NEEDS_TDOA, diffuseness, estimate_cdr
from .filterbank import ConfigurationError, FilterbankConfig, Spectrogram, analyze, synthesize
from .metrics import MetricError, classify_by_elr, diffuseness_mse, elr, fwsegsnr, t60_from_edc, true_cdr_field
from .simulator import (
    RoomSpec,
    SimulationError,
    eyring_t60,
    late_tail_signals,
    linear_array,
    make_mixture,
    reverberant_mixture,
    simulate_rirs,
    speech_like,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SCHEMA = 0, 2, 3, 4
SAMPLE_RATE = 16000


class UsageError(ValueError):
    pass


def _add_model_flags(p: argparse.ArgumentParser, estimator_default: str | None = "prop3"):
    if estimator_default is not None:
        p.add_argument("--estimator", default=estimator_default, choices=sorted(ESTIMATORS),
                       help="CDR estimator (default: %(default)s)")
    p.add_argument("--noise-model", default="diffuse", choices=NOISE_MODELS,
                   help="noise coherence model (default: %(default)s)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--doa", type=float, help="direction of arrival in degrees from broadside")
    g.add_argument("--tdoa", type=float, help="time difference of arrival in seconds")
    p.add_argument("--mic-distance", type=float, default=0.08, help="microphone spacing in m (default: %(default)s)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.68, help="PSD forgetting factor (default: %(default)s)")
    p.add_argument("--c", type=float, default=SOUND_SPEED, help="speed of sound in m/s (default: %(default)s)")


def _tdoa(args) -> float | None:
    if args.tdoa is not None:
        return args.tdoa
    if args.doa is not None:
        return tdoa_from_doa(math.radians(args.doa), args.mic_distance, args.c)
    return None


def _postfilter_config(args) -> PostfilterConfig:
    tdoa = _tdoa(args)
    if args.estimator in DOA_INDEPENDENT and tdoa is not None:
        raise UsageError(f"--estimator {args.estimator} is DOA-independent; drop --doa/--tdoa")
    if args.estimator in NEEDS_TDOA and tdoa is None:
        raise UsageError(f"--estimator {args.estimator} needs --doa or --tdoa")
    try:
        return PostfilterConfig(mu=args.mu, g_min=args.gmin, lam=args.lam, estimator=args.estimator,
                                noise_model=args.noise_model, tdoa=tdoa, mic_distance=args.mic_distance, c=args.c)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None


def _cdr_db(cdr):
    return fio.to_db(cdr)


# ---- dereverb --------------------------------------------------------------

def cmd_dereverb(args) -> int:
    cfg = _postfilter_config(args)
    data, fs, subtype = fio.read_wav(args.input, channels=2, sample_rate=SAMPLE_RATE)
    fb = FilterbankConfig(sample_rate=fs)
    res = dereverberate(data[:, 0], data[:, 1], cfg, fb)
    fio.write_wav(args.output, res.output, fs, subtype)
    if args.telemetry:
        frames, bins = res.cdr.shape
        fi, bi = np.meshgrid(np.arange(frames), np.arange(bins), indexing="ij")
        freqs = fb.freqs[bi]
        cdr_db = _cdr_db(res.cdr)
        D = diffuseness(res.cdr)
        rows = zip(fi.ravel(), bi.ravel(), freqs.ravel(), cdr_db.ravel(), D.ravel(), res.gain.ravel())
        fio.write_csv(args.telemetry, ["frame", "bin", "freq_hz", "cdr_db", "diffuseness", "gain"], rows,
                      db_columns=("cdr_db",))
    print(f"frames={res.cdr.shape[0]} bins={res.cdr.shape[1]} latency_samples={fb.delay} "
          f"latency_ms={1000.0 * fb.delay / fs:.3f} mean_gain={float(np.mean(res.gain)):.6g} "
          f"estimator={cfg.estimator}")
    return EXIT_OK


# ---- simulate --------------------------------------------------------------

def _beta_array(beta) -> np.ndarray:
    if isinstance(beta, dict):
        return np.array([beta["walls"]] * 4 + [beta["floor_ceiling"]] * 2, dtype=float)
    return np.broadcast_to(np.asarray(beta, dtype=float), (6,)).copy()


def _source_signal(sc: dict) -> np.ndarray | None:
    src = sc.get("source_signal")
    if src is None:
        return None
    fs = sc["sample_rate"]
    if src["type"] == "speech_like":
        return speech_like(src["duration"], fs, sc["seed"])
    if src["type"] == "white_noise":
        return np.random.default_rng(sc["seed"]).standard_normal(int(round(src["duration"] * fs)))
    if "path" not in src:
        raise fio.SchemaError("source_signal of type 'wav' needs 'path'", ["source_signal/path"])
    data, _, _ = fio.read_wav(src["path"], channels=1, sample_rate=fs)
    return data[:, 0]


def _room_mics(room: dict) -> np.ndarray:
    if "mics" in room and "array" in room:
        raise fio.SchemaError("room: give either 'mics' or 'array', not both", ["room/mics", "room/array"])
    if "mics" in room:
        return np.asarray(room["mics"], dtype=float)
    if "array" in room:
        a = room["array"]
        return linear_array(a["center"], a["num_mics"], a["spacing"])
    raise fio.SchemaError("room: 'mics' or 'array' is required", ["room/mics"])


def tail_coherence(rirs, te: float, duration: float, seed: int, fb: FilterbankConfig, pairs=None) -> np.ndarray:
    """Coherence of the late RIR parts excited by white noise, pair-averaged."""
    src = np.random.default_rng(seed).standard_normal(int(round(duration * fb.sample_rate)))
    return pair_coherence(late_tail_signals(rirs, te, src), pairs, fb)


def cmd_simulate(args) -> int:
    sc = fio.load_scenario(args.scenario)
    if args.seed is not None:
        sc["seed"] = args.seed
    out = Path(args.output_dir or sc["output_dir"])
    if not out.is_absolute() and args.output_dir is None:
        out = Path(os.path.normpath(Path(args.scenario).parent / out))
    out.mkdir(parents=True, exist_ok=True)
    fs = sc["sample_rate"]
    fb = FilterbankConfig(sample_rate=fs)
    name = sc["name"]
    if "mixture" in sc:
        m = sc["mixture"]
        clean = _source_signal(sc)
        if clean is None:
            raise fio.SchemaError("mixture scenarios need 'source_signal'", ["source_signal"])
        cdr = m["cdr_db"]
        try:
            mix = make_mixture(clean, math.radians(m["doa_deg"]), cdr, m["mic_distance"], sc["c"], fs, sc["seed"],
                               m["field"], m["num_sources"])
        except ValueError as exc:
            raise fio.SchemaError(f"mixture: {exc}", ["mixture"]) from None
        peak = max(np.max(np.abs(mix.x)), 1e-12)
        fio.write_wav(out / f"{name}_mix.wav", (mix.x / peak).T, fs, "FLOAT")
        fio.write_json(out / f"{name}_mix.json", {
            "sample_rate": fs, "tdoa": mix.tdoa, "doa_deg": m["doa_deg"], "mic_distance": m["mic_distance"],
            "scale": 1.0 / peak, "seed": sc["seed"],
            "band_centers_hz": mix.band_centers, "target_cdr_db": mix.target_cdr_db,
            "realized_cdr_db": mix.realized_cdr_db,
        })
        print(f"wrote {out / (name + '_mix.wav')}")
        return EXIT_OK

    room = sc["room"]
    mics = _room_mics(room)
    pair = room["mix_pair"]
    if max(pair) >= len(mics) or pair[0] == pair[1]:
        raise fio.SchemaError(f"room/mix_pair {pair} does not name two of {len(mics)} microphones", ["room/mix_pair"])
    cases = room.get("cases") or [{"name": name, "beta": room.get("beta", 0.0)}]
    clean = _source_signal(sc)
    if clean is not None:
        fio.write_wav(out / f"{name}_clean.wav", clean / max(np.max(np.abs(clean)), 1e-12), fs, "FLOAT")
        clean = clean / max(np.max(np.abs(clean)), 1e-12)
    coh_rows = []
    for case in cases:
        try:
            spec = RoomSpec(room["dims"], _beta_array(case["beta"]), room["source"], mics, fs, sc["c"])
        except SimulationError as exc:
            raise fio.SchemaError(f"room: {exc}", ["room"]) from None
        rirs = simulate_rirs(spec, room["stop_threshold_db"], sc["te"], room["highpass"])
        dists = np.linalg.norm(mics - spec.source, axis=1)
        meta = {
            "beta": spec.beta, "dims": spec.dims, "source": spec.source, "mics": mics, "c": spec.c,
            "source_distances": dists,
            "tdoa_pairs": [(dists[i + 1] - dists[i]) / spec.c for i in range(len(mics) - 1)],
            "mix_pair": pair, "mix_tdoa": (dists[pair[1]] - dists[pair[0]]) / spec.c,
            "eyring_t60": eyring_t60(spec), "stop_threshold_db": room["stop_threshold_db"],
            "highpass": room["highpass"], "seed": sc["seed"],
        }
        try:
            meta["t60"] = t60_from_edc(rirs[0])
        except MetricError:
            meta["t60"] = None
        stem = out / f"{case['name']}_rir.{room['rir_format']}"
        if clean is not None:
            sel = [rirs[pair[0]], rirs[pair[1]]]
            mix = reverberant_mixture(clean, sel, sc["te"])
            meta["elr_db"] = [elr(mix.early[i], mix.late[i], sc["te"], fb_cfg=fb).mean_db for i in range(2)]
            peak = max(np.max(np.abs(mix.x)), 1e-12)
            fio.write_wav(out / f"{case['name']}_mix.wav", (mix.x / peak).T, fs, "FLOAT")
            meta["mix_scale"] = 1.0 / peak
        fio.write_rirs(stem, rirs, meta)
        if sc.get("analysis", {}).get("tail_coherence"):
            g = tail_coherence(rirs, sc["te"], sc["analysis"]["coherence_duration"], sc["seed"], fb)
            d = float(np.linalg.norm(mics[1] - mics[0]))
            sinc = model_diffuse(d, fb.freqs, spec.c)
            j0 = model_2d_isotropic(d, fb.freqs, spec.c)
            for k, f in enumerate(fb.freqs):
                coh_rows.append((case["name"], f, g[k].real, g[k].imag, sinc[k], j0[k]))
        print(f"wrote {stem}")
    if coh_rows:
        path = out / f"{name}_coherence.csv"
        fio.write_csv(path, ["case", "freq_hz", "re", "im", "sinc", "j0"], coh_rows)
        print(f"wrote {path}")
    return EXIT_OK


# ---- analyze-coherence -----------------------------------------------------

def cmd_analyze_coherence(args) -> int:
    fb = FilterbankConfig()
    if args.rir:
        rirs = fio.read_rirs(args.input, te=args.te)
        if rirs[0].sample_rate != SAMPLE_RATE:
            raise fio.InputFormatError(f"{args.input}: expected {SAMPLE_RATE} Hz RIRs")
        try:
            pairs = parse_pairs(args.pairs, len(rirs))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        g = tail_coherence(rirs, args.te, args.duration, args.seed, fb, pairs)
    else:
        data, _, _ = fio.read_wav(args.input, sample_rate=SAMPLE_RATE)
        if data.shape[1] < 2:
            raise fio.InputFormatError(f"{args.input}: need at least two channels")
        try:
            pairs = parse_pairs(args.pairs, data.shape[1])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        g = pair_coherence(data.T, pairs, fb)
    sinc = model_diffuse(args.mic_distance, fb.freqs, args.c)
    j0 = model_2d_isotropic(args.mic_distance, fb.freqs, args.c)
    rows = [(f, g[k].real, g[k].imag, sinc[k], j0[k]) for k, f in enumerate(fb.freqs)]
    header = ["freq_hz", "re", "im", "sinc", "j0"]
    if args.out:
        fio.write_csv(args.out, header, rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows([[fio.fmt(v) for v in r] for r in rows])
    if args.classify_elr:
        if not args.rir:
            raise UsageError("--classify-elr needs RIR input (--rir)")
        clean, _, _ = fio.read_wav(args.classify_elr, channels=1, sample_rate=SAMPLE_RATE)
        i, j = pairs[0]
        mix = reverberant_mixture(clean[:, 0], [rirs[i], rirs[j]], args.te)
        X1 = analyze(mix.x[0], fb).data
        X2 = analyze(mix.x[1], fb).data
        coh = estimate_coherence(estimate_psd(X1, X2, args.lam))
        field = elr(mix.early[0], mix.late[0], args.te, args.lam, fb_cfg=fb)
        k = int(np.argmin(np.abs(fb.freqs - args.hist_freq)))
        high, low = classify_by_elr(coh.gamma[:, k], field.elr_db[:, k], field.valid[:, k] & coh.valid[:, k],
                                    args.elr_threshold)
        edges = np.linspace(-1, 1, args.hist_bins + 1)
        centers = 0.5 * (edges[1:] + edges[:-1])
        hrows = []
        for label, vals in (("high", high), ("low", low)):
            H, _, _ = np.histogram2d(vals.real, vals.imag, bins=[edges, edges])
            for a in range(args.hist_bins):
                for b in range(args.hist_bins):
                    hrows.append((label, centers[a], centers[b], int(H[a, b])))
        hist_out = args.hist_out or "coherence_histogram.csv"
        fio.write_csv(hist_out, ["class", "re", "im", "count"], hrows)
        print(f"high-ELR bins: {high.size}, low-ELR bins: {low.size} at {fb.freqs[k]:.1f} Hz -> {hist_out}",
              file=sys.stderr)
    return EXIT_OK


# ---- sweep-bias ------------------------------------------------------------

def _tdoa_policy(policy: str, f: float, d: float, c: float) -> float:
    if policy == "zero":
        return 0.0
    if policy == "fifth":
        return 1.0 / (5.0 * f)
    if policy == "endfire":
        return d / c
    raise UsageError(f"unknown tdoa policy {policy!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def cmd_sweep_bias(args) -> int:
    estimators = [e.strip() for e in args.estimators.split(",")]
    for e in estimators:
        if e not in ESTIMATORS:
            raise UsageError(f"unknown estimator {e!r}")
    freqs = _floats(args.freqs)
    policies = [p.strip() for p in args.tdoa_policy.split(",")]
    d, c = args.mic_distance, args.c
    header = ["mode", "estimator", "freq_hz", "tdoa_s", "cdr_true_db", "noise_error", "phase_error_rad", "cdr_est_db"]
    rows = []
    if args.mode == "bias":
        cdr_db = np.arange(args.cdr_min, args.cdr_max + 0.5 * args.cdr_step, args.cdr_step)
        errors = [0.0]
    else:
        cdr_db = np.array(_floats(args.cdr_db))
        errors = _floats(args.errors)
    for pol in policies:
        for f in freqs:
            dt = _tdoa_policy(pol, f, d, c)
            gs = model_plane_wave(dt, f)
            gn = model_diffuse(d, f, c)
            models = CoherenceModels(np.asarray(gs), np.asarray(gn), np.asarray(f), d, c, dt)
            for err in errors:
                true_gs, true_gn = gs, gn
                if args.mode == "noise-error":
                    true_gn = gn + err
                elif args.mode == "phase-error":
                    true_gs = gs * np.exp(1j * err)
                cdr = 10.0 ** (cdr_db / 10.0)
                gx = mix_coherence(cdr, true_gs, true_gn)
                for e in estimators:
                    est = estimate_cdr(e, gx, models)
                    est_db = fio.to_db(est)
                    for k in range(cdr_db.size):
                        rows.append((args.mode, e, f, dt, cdr_db[k],
                                     err if args.mode == "noise-error" else 0.0,
                                     err if args.mode == "phase-error" else 0.0, est_db[k]))
    fio.write_csv(args.out, header, rows, db_columns=("cdr_true_db", "cdr_est_db"))
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---- evaluate --------------------------------------------------------------

def _read_gains(path, frames: int, bins: int) -> np.ndarray:
    G = np.full((frames, bins), np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            G[int(row["frame"]), int(row["bin"])] = float(row["gain"])
    if np.isnan(G).any():
        raise fio.InputFormatError(f"{path}: telemetry does not cover {frames} x {bins} bins")
    return G


def evaluate_arrays(clean, rirs, processed, te=0.05, gains=None, tdoa=None, all_estimators=False,
                    lam=0.68, mic_distance=0.08, noise_model="diffuse", c=SOUND_SPEED) -> dict:
    """Metric report for a processed signal against the simulated reverberant input.

    With ``gains`` (frames x bins, as written by ``dereverb --telemetry``) the
    early and late components are passed through the preprocessor and the
    gains separately.  Without them the effective gain is the ratio of the
    processed spectrum to the microphone-1 spectrum, applied to the
    microphone-1 components.
    """
    fb = FilterbankConfig()
    mix = reverberant_mixture(clean, rirs[:2], te)
    n = mix.x.shape[1]
    if processed.size != n:
        raise fio.InputFormatError(f"processed signal has {processed.size} samples, expected {n}")
    X = [analyze(x, fb).data for x in mix.x]
    E = [analyze(x, fb).data for x in mix.early]
    L = [analyze(x, fb).data for x in mix.late]
    before = elr(E[0], L[0], te, lam)
    if gains is not None:
        if gains.shape != X[0].shape:
            raise fio.InputFormatError(f"gain field {gains.shape} does not match {X[0].shape}")
        Ye, Yl = preprocess(E[0], E[1]), preprocess(L[0], L[1])
        Pe, Pl = gains * Ye, gains * Yl
        ref = synthesize(Spectrogram(Ye, fb, n))
    else:
        Z = analyze(processed, fb).data
        mag = np.abs(X[0])
        floor = 1e-10 * np.mean(mag**2)
        G = np.where(mag**2 > floor, Z / np.where(mag > 0, X[0], 1.0), 0.0)
        Pe, Pl = G * E[0], G * L[0]
        ref = mix.early[0]
    after = elr(Pe, Pl, te, lam)
    tst = synthesize(Spectrogram(Pe, fb, n))
    report = {
        "elr_before_db": before.mean_db,
        "elr_after_db": after.mean_db,
        "elr_improvement_db": after.mean_db - before.mean_db,
        "fwsegsdr_db": fwsegsnr(ref, tst, fb.sample_rate),
        "te": te,
        "gain_source": "telemetry" if gains is not None else "spectral_ratio",
    }
    if all_estimators:
        tc, valid = true_cdr_field(E, L, lam)
        coh = estimate_coherence(estimate_psd(X[0], X[1], lam))
        table = {}
        for e in sorted(ESTIMATORS):
            if e in NEEDS_TDOA and tdoa is None:
                continue
            m = CoherenceModels.build(fb.freqs, mic_distance, tdoa, noise_model, c)
            est = np.where(coh.valid, estimate_cdr(e, coh.gamma, m), 0.0)
            table[e] = diffuseness_mse(tc, est, valid & coh.valid)
        report["diffuseness_mse"] = table
    return report


def cmd_evaluate(args) -> int:
    clean, fs, _ = fio.read_wav(args.clean, channels=1, sample_rate=SAMPLE_RATE)
    rirs = fio.read_rirs(args.rirs, te=args.te)
    side_path = fio.sidecar_path(args.rirs)
    side = json.loads(side_path.read_text()) if side_path.exists() else {}
    try:
        pair = parse_pairs(args.pair, len(rirs))[0] if args.pair else tuple(side.get("mix_pair", (0, 1)))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(rirs) < 2 or max(pair) >= len(rirs):
        raise fio.InputFormatError(f"{args.rirs}: RIR pair {pair} not available")
    rirs = [rirs[pair[0]], rirs[pair[1]]]
    if rirs[0].sample_rate != fs:
        raise fio.InputFormatError("RIR and clean sample rates differ")
    proc, _, _ = fio.read_wav(args.processed, channels=1, sample_rate=fs)
    tdoa = _tdoa(args)
    if tdoa is None and "source_distances" in side:
        dist = side["source_distances"]
        tdoa = (dist[pair[1]] - dist[pair[0]]) / side.get("c", args.c)
    gains = None
    if args.telemetry:
        fb = FilterbankConfig()
        n = clean.shape[0] + max(r.samples.size for r in rirs) - 1
        gains = _read_gains(args.telemetry, analyze(np.zeros(n), fb).frames, fb.bins)
    # mixtures written by simulate are peak-normalised; the sidecar records the factor
    scale = args.input_scale if args.input_scale is not None else side.get("mix_scale", 1.0)
    report = evaluate_arrays(clean[:, 0] * scale, rirs, proc[:, 0], args.te, gains, tdoa, args.all_estimators,
                             args.lam, args.mic_distance, args.noise_model, args.c)
    if args.out:
        fio.write_json(args.out, report)
    print(json.dumps(fio._finite(report), indent=2, sort_keys=True))
    return EXIT_OK


# ---- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdrdereverb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dereverb", help="dereverberate a 2-channel WAV file")
    d.add_argument("input")
    d.add_argument("output")
    _add_model_flags(d)
    d.add_argument("--mu", type=float, default=1.3, help="oversubtraction factor (default: %(default)s)")
    d.add_argument("--gmin", type=float, default=0.1, help="gain floor (default: %(default)s)")
    d.add_argument("--telemetry", help="write per-bin CDR/gain CSV here")
    d.set_defaults(func=cmd_dereverb)

    s = sub.add_parser("simulate", help="run a JSON scenario (rooms or isotropic mixtures)")
    s.add_argument("scenario")
    s.add_argument("--output-dir")
    s.add_argument("--seed", type=int, help="override the scenario seed (default seed is 0)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze-coherence", help="long-term coherence of a multichannel WAV or RIR set")
    a.add_argument("input")
    a.add_argument("--rir", action="store_true", help="input holds RIRs: analyse the late tail excited by noise")
    a.add_argument("--pairs", help="channel pairs like 0-1,1-2 (default: all neighbours)")
    a.add_argument("--te", type=float, default=0.05, help="early/late split in s (default: %(default)s)")
    a.add_argument("--duration", type=float, default=10.0, help="noise excitation length in s (default: %(default)s)")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--mic-distance", type=float, default=0.08)
    a.add_argument("--c", type=float, default=SOUND_SPEED)
    a.add_argument("--lambda", dest="lam", type=float, default=0.68)
    a.add_argument("--out", help="CSV path (default: stdout)")
    a.add_argument("--classify-elr", metavar="CLEAN_WAV",
                   help="also export coherence histograms of high/low-ELR bins for this source signal")
    a.add_argument("--elr-threshold", type=float, default=10.0, help="+-threshold in dB (default: %(default)s)")
    a.add_argument("--hist-freq", type=float, default=1000.0, help="analysis frequency in Hz (default: %(default)s)")
    a.add_argument("--hist-bins", type=int, default=50)
    a.add_argument("--hist-out")
    a.set_defaults(func=cmd_analyze_coherence)

    b = sub.add_parser("sweep-bias", help="estimator output on the ideal mixing line or with model errors")
    b.add_argument("--estimators", default=",".join(sorted(ESTIMATORS)))
    b.add_argument("--mode", choices=["bias", "noise-error", "phase-error"], default="bias")
    b.add_argument("--freqs", default="1000,3000")
    b.add_argument("--tdoa-policy", default="fifth", help="comma list of zero, fifth (1/(5f)), endfire (d/c)")
    b.add_argument("--mic-distance", type=float, default=0.08)
    b.add_argument("--c", type=float, default=SOUND_SPEED)
    b.add_argument("--cdr-min", type=float, default=-30.0)
    b.add_argument("--cdr-max", type=float, default=30.0)
    b.add_argument("--cdr-step", type=float, default=1.0)
    b.add_argument("--cdr-db", default="-10,10", help="true CDR values for the model-error modes")
    b.add_argument("--errors", default="-0.2,-0.1,-0.05,0,0.05,0.1,0.2",
                   help="noise coherence offsets or phase errors in rad")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_sweep_bias)

    e = sub.add_parser("evaluate", help="ELR, fwSegSDR and diffuseness MSE of a processed signal")
    e.add_argument("--clean", required=True)
    e.add_argument("--rirs", required=True, help="RIR file written by simulate (or any multichannel RIR WAV)")
    e.add_argument("--pair", help="RIR channel pair like 0-1 (default: sidecar mix_pair or 0-1)")
    e.add_argument("--processed", required=True)
    e.add_argument("--telemetry", help="gain CSV from dereverb --telemetry")
    e.add_argument("--te", type=float, default=0.05)
    e.add_argument("--input-scale", type=float,
                   help="level of the processed input relative to clean*rir (default: sidecar mix_scale or 1)")
    e.add_argument("--all-estimators", action="store_true")
    e.add_argument("--out")
    _add_model_flags(e, estimator_default=None)
    e.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except fio.SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.keys:
            print("offending keys: " + ", ".join(exc.keys), file=sys.stderr)
        return EXIT_SCHEMA
    except (fio.InputFormatError, MetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
