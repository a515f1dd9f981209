"""Diffuseness MSE of every estimator on simulated reverberant speech.

The reference CDR comes from the separately rendered early (first 50 ms) and
late RIR parts; averages are over seeds of the speech-like source.
"""

import argparse
import json
import math

import numpy as np

from cdrdereverb.cli import evaluate_arrays
from cdrdereverb.io import load_scenario
from cdrdereverb.simulator import RoomSpec, linear_array, reverberant_mixture, simulate_rirs, speech_like


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="scenarios/reverberant_speech.json")
    ap.add_argument("--duration", type=float, default=30.0)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--noise-model", default="diffuse", choices=["diffuse", "2d-iso"])
    args = ap.parse_args()

    sc = load_scenario(args.scenario)
    room = sc["room"]
    mics = linear_array(room["array"]["center"], room["array"]["num_mics"], room["array"]["spacing"])
    spec = RoomSpec(room["dims"], room["beta"], room["source"], mics, sc["sample_rate"], sc["c"])
    rirs = simulate_rirs(spec, room["stop_threshold_db"], sc["te"])[:2]
    dist = np.linalg.norm(mics - spec.source, axis=1)
    tdoa = (dist[1] - dist[0]) / spec.c

    tables = []
    for seed in range(args.seeds):
        clean = speech_like(args.duration, sc["sample_rate"], seed)
        mix = reverberant_mixture(clean, rirs, sc["te"])
        rep = evaluate_arrays(clean, rirs, mix.x[0], sc["te"], tdoa=tdoa, all_estimators=True,
                              noise_model=args.noise_model, c=spec.c)
        tables.append(rep["diffuseness_mse"])
        print(f"seed {seed}: " + json.dumps({k: round(v, 4) for k, v in rep["diffuseness_mse"].items()}))
    print("\nmean over seeds (std):")
    for k in sorted(tables[0], key=lambda k: np.mean([t[k] for t in tables])):
        v = np.array([t[k] for t in tables])
        print(f"  {k:11s} {v.mean():.4f} ({v.std(ddof=1) if v.size > 1 else math.nan:.4f})")


if __name__ == "__main__":
    main()
