"""File formats: WAV audio, RIR files with JSON sidecars, CSV reports and
versioned scenario documents."""

from __future__ import annotations

import copy
import csv
import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import soundfile as sf
from scipy.io import wavfile

from .simulator import ImpulseResponse

WAV_SUBTYPES = ("PCM_16", "PCM_24", "FLOAT")
CDR_DB_CAP = 100.0
SCENARIO_VERSION = 1


class InputFormatError(ValueError):
    pass


class SchemaError(ValueError):
    def __init__(self, message: str, keys: list[str] | None = None):
        super().__init__(message)
        self.keys = keys or []


def read_wav(path, channels: int | None = None, sample_rate: int | None = None):
    """Return ``(samples x channels float64, sample_rate, subtype)``."""
    try:
        info = sf.info(str(path))
        data, fs = sf.read(str(path), dtype="float64", always_2d=True)
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise InputFormatError(f"{path}: cannot read audio ({exc})") from None
    if info.format != "WAV" or info.subtype not in WAV_SUBTYPES:
        raise InputFormatError(f"{path}: expected WAV PCM_16/PCM_24/FLOAT, got {info.format}/{info.subtype}")
    if channels is not None and data.shape[1] != channels:
        raise InputFormatError(f"{path}: expected {channels} channels, got {data.shape[1]}")
    if sample_rate is not None and fs != sample_rate:
        raise InputFormatError(f"{path}: expected {sample_rate} Hz, got {fs} Hz (no resampling is done)")
    return data, fs, info.subtype


def write_wav(path, data, sample_rate: int, subtype: str = "FLOAT"):
    if subtype not in WAV_SUBTYPES:
        raise ValueError(f"unsupported subtype {subtype}")
    data = np.asarray(data, dtype=float)
    if subtype == "FLOAT":
        # libsndfile stamps float files with a PEAK chunk holding the write time,
        # which breaks byte-identical reruns; scipy writes no such chunk
        wavfile.write(str(path), sample_rate, data.astype(np.float32))
        return
    # PCM cannot represent full scale +1
    data = np.clip(data, -1.0, 1.0 - 2.0**-23)
    sf.write(str(path), data, sample_rate, subtype=subtype, format="WAV")


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_rirs(path, rirs: list[ImpulseResponse], meta: dict | None = None):
    """Write RIRs as multichannel float32 WAV (``.wav``) or raw float64 (``.f64``)
    with a JSON sidecar holding sample rate, onsets, te and ``meta``."""
    path = Path(path)
    L = max(r.samples.size for r in rirs)
    data = np.stack([np.pad(r.samples, (0, L - r.samples.size)) for r in rirs], axis=1)
    side = {
        "sample_rate": int(rirs[0].sample_rate),
        "channels": len(rirs),
        "length": int(L),
        "onsets": [int(r.onset) for r in rirs],
        "te": float(rirs[0].te),
    }
    if path.suffix == ".f64":
        data.astype("<f8").tofile(path)
        side["format"] = "float64-le-interleaved"
    else:
        write_wav(path, data, rirs[0].sample_rate, "FLOAT")
        side["format"] = "wav-float32"
    side.update(meta or {})
    write_json(sidecar_path(path), side)


def read_rirs(path, te: float | None = None) -> list[ImpulseResponse]:
    path = Path(path)
    side = {}
    sp = sidecar_path(path)
    if sp.exists():
        side = json.loads(sp.read_text())
    if path.suffix == ".f64":
        if not side:
            raise InputFormatError(f"{path}: raw RIR files need a JSON sidecar")
        data = np.fromfile(path, dtype="<f8").reshape(-1, side["channels"])
        fs = side["sample_rate"]
    else:
        data, fs, _ = read_wav(path)
    onsets = side.get("onsets", [None] * data.shape[1])
    te = side.get("te", 0.05) if te is None else te
    return [ImpulseResponse(data[:, i], fs, onsets[i], te) for i in range(data.shape[1])]


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def _finite(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(_finite(obj), indent=2, sort_keys=True, default=_json_default) + "\n")


def fmt_db(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{min(max(v, -CDR_DB_CAP), CDR_DB_CAP):.6g}"


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def write_csv(path, header: list[str], rows, db_columns=()):
    """CSV with a header row; columns named in ``db_columns`` get 6 significant digits."""
    db = set(db_columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_db(v) if h in db else fmt(v) for h, v in zip(header, row)])


def to_db(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


# ---- scenarios -------------------------------------------------------------

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}

_beta = {
    "oneOf": [
        {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        {"type": "array", "items": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}, "minItems": 6, "maxItems": 6},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["walls", "floor_ceiling"],
            "properties": {
                "walls": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "floor_ceiling": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            },
        },
    ]
}

_array = {
    "type": "object",
    "additionalProperties": False,
    "required": ["center"],
    "properties": {
        "center": _vec3,
        "num_mics": {"type": "integer", "minimum": 2, "default": 8},
        "spacing": {"type": "number", "exclusiveMinimum": 0, "default": 0.08},
    },
}

_room_case = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "beta"],
    "properties": {"name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"}, "beta": _beta},
}

_source = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["speech_like", "white_noise", "wav"]},
        "duration": {"type": "number", "exclusiveMinimum": 0, "default": 10.0},
        "path": {"type": "string"},
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "cdrdereverb scenario",
    "type": "object",
    "additionalProperties": False,
    "required": ["version"],
    "properties": {
        "version": {"const": SCENARIO_VERSION},
        "name": {"type": "string", "default": "scenario"},
        "seed": {"type": "integer", "minimum": 0, "default": 0},
        "sample_rate": {"type": "integer", "exclusiveMinimum": 0, "default": 16000},
        "c": {"type": "number", "exclusiveMinimum": 0, "default": 343.0},
        "te": {"type": "number", "minimum": 0, "default": 0.05},
        "output_dir": {"type": "string", "default": "."},
        "room": {
            "type": "object",
            "additionalProperties": False,
            "required": ["dims", "source"],
            "properties": {
                "dims": _vec3,
                "source": _vec3,
                "beta": _beta,
                "cases": {"type": "array", "items": _room_case, "minItems": 1},
                "array": _array,
                "mics": {"type": "array", "items": _vec3, "minItems": 1},
                "stop_threshold_db": {"type": "number", "exclusiveMinimum": 0, "default": 60.0},
                "highpass": {"type": "boolean", "default": True},
                "rir_format": {"enum": ["wav", "f64"], "default": "wav"},
                "mix_pair": {
                    "type": "array", "items": {"type": "integer", "minimum": 0},
                    "minItems": 2, "maxItems": 2, "default": [0, 1],
                },
            },
        },
        "mixture": {
            "type": "object",
            "additionalProperties": False,
            "required": ["cdr_db"],
            "properties": {
                "doa_deg": {"type": "number", "minimum": -90, "maximum": 90, "default": 0.0},
                "cdr_db": {
                    "oneOf": [
                        {"type": "number"},
                        {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    ]
                },
                "field": {"enum": ["spherical", "cylindrical"], "default": "spherical"},
                "num_sources": {"type": "integer", "minimum": 16, "default": 360},
                "mic_distance": {"type": "number", "exclusiveMinimum": 0, "default": 0.08},
            },
        },
        "source_signal": _source,
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tail_coherence": {"type": "boolean", "default": False},
                "coherence_duration": {"type": "number", "exclusiveMinimum": 0, "default": 10.0},
            },
        },
    },
    "allOf": [
        {"not": {"required": ["room", "mixture"]}},
        {"anyOf": [{"required": ["room"]}, {"required": ["mixture"]}]},
    ],
}

# defaults applied after validation
_DEFAULTS = {
    "name": "scenario",
    "seed": 0,
    "sample_rate": 16000,
    "c": 343.0,
    "te": 0.05,
    "output_dir": ".",
}


def _fill(section: dict, schema: dict):
    for key, sub in schema.get("properties", {}).items():
        if key not in section and "default" in sub:
            section[key] = copy.deepcopy(sub["default"])
        if isinstance(section.get(key), dict) and sub.get("type") == "object":
            _fill(section[key], sub)


def validate_scenario(doc: dict) -> dict:
    """Validate against :data:`SCENARIO_SCHEMA` and fill in documented defaults."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        keys = []
        msgs = []
        for e in errors:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            if e.validator == "additionalProperties":
                allowed = set(e.schema.get("properties", {}))
                extra = sorted(k for k in e.instance if k not in allowed)
                keys.extend(f"{where}/{k}" if where != "<root>" else k for k in extra)
                msgs.append(f"{where}: unknown key(s) {', '.join(extra)}")
            else:
                keys.append(where)
                msgs.append(f"{where}: {e.message}")
        raise SchemaError("scenario does not match the schema:\n  " + "\n  ".join(msgs), keys)
    out = copy.deepcopy(doc)
    for k, v in _DEFAULTS.items():
        out.setdefault(k, v)
    _fill(out, SCENARIO_SCHEMA)
    return out


def load_scenario(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputFormatError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: scenario must be a JSON object")
    return validate_scenario(doc)
