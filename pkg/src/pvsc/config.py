"""JSON experiment configuration.

Example::

    {
      "seed": 0,
      "session": {"gop_len": 4, "side_spectral_eff": 2.0, "equalizer": "zf"},
      "channel": {"kind": "awgn", "snr_db": 10, "csi_nmse_db": "perfect"},
      "entropy": {"eta": 0.2, "sigma_floor": 0.11},
      "rate_set": "paper_iv_a",
      "codec": {"stride": 8, "gamma": 0.5, "delta": 0.3, "preset_id": 2, "seed": 0},
      "sweep": {"snr_db": [0, 3, 6, 10], "gop": [4], "preset": [2], "nmse_db": ["perfect"]},
      "inputs": [{"seq_id": "static", "synthetic": {"motion": "static", "frames": 8}}],
      "output": {"dir": "out", "frames_csv": "frames.csv", "summary_csv": "summary.csv"}
    }

Missing sweep axes fall back to the single value in the base section.
The top-level ``seed`` (default: ``channel.seed``) keys every channel draw;
``PVSC_SEED`` in the environment replaces it.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

from .channel import ChannelConfig
from .codec import CodecConfig
from .entropy import EntropyConfig
from .pipeline import Session, SessionConfig
from .rate_control import RateSet
from .video import SyntheticSpec

TOP_KEYS = {"seed", "session", "channel", "entropy", "rate_set", "codec", "sweep", "inputs", "input", "output"}
SESSION_KEYS = {"gop_len", "side_spectral_eff", "equalizer"}
SWEEP_KEYS = {"snr_db", "gop", "preset", "nmse_db"}
OUTPUT_KEYS = {"dir", "frames_csv", "summary_csv", "capture"}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class InputSpec:
    seq_id: str
    synthetic: Optional[SyntheticSpec] = None
    raw_path: Optional[str] = None
    dims: Tuple[int, int, int] = (0, 0, 0)
    max_frames: int = 0

    @property
    def frame_shape(self) -> Tuple[int, int, int]:
        if self.synthetic is not None:
            s = self.synthetic
            return (s.height, s.width, s.channels)
        return self.dims


@dataclass(frozen=True)
class SweepPoint:
    index: int
    seq_id: str
    snr_db: float
    gop: int
    preset: int
    nmse_db: Optional[float]


@dataclass
class ExperimentConfig:
    seed: int
    session: Dict[str, Any]
    channel: ChannelConfig
    entropy: EntropyConfig
    rate_set: RateSet
    codec: CodecConfig
    sweep: Dict[str, list]
    inputs: List[InputSpec]
    out_dir: str = "out"
    frames_csv: str = "frames.csv"
    summary_csv: str = "summary.csv"
    capture: bool = False
    base_dir: str = "."

    def points(self) -> List[SweepPoint]:
        pts = []
        for inp in self.inputs:
            for gop in self.sweep["gop"]:
                for preset in self.sweep["preset"]:
                    for nmse in self.sweep["nmse_db"]:
                        for snr in self.sweep["snr_db"]:
                            pts.append(SweepPoint(len(pts), inp.seq_id, snr, gop, preset, nmse))
        return pts

    def input_for(self, seq_id: str) -> InputSpec:
        for inp in self.inputs:
            if inp.seq_id == seq_id:
                return inp
        raise KeyError(seq_id)

    def session_for(self, point: SweepPoint) -> SessionConfig:
        inp = self.input_for(point.seq_id)
        channel = replace(self.channel, snr_db=point.snr_db, csi_nmse_db=point.nmse_db, seed=self.seed)
        codec = replace(self.codec, preset_id=point.preset)
        return SessionConfig(
            gop_len=point.gop, frame_shape=inp.frame_shape, channel=channel, entropy=self.entropy,
            rate_set=self.rate_set, codec=codec,
            side_spectral_eff=float(self.session.get("side_spectral_eff", 2.0)),
            equalizer=str(self.session.get("equalizer", "zf")))


def _section(raw: dict, key: str, allowed: Optional[set] = None) -> dict:
    v = raw.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(key, "must be an object")
    if allowed is not None:
        unknown = set(v) - allowed
        if unknown:
            raise ConfigError(key, f"unknown keys {sorted(unknown)}")
    return v


def _wrap(name: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


def _snr(v):
    if isinstance(v, str) and v.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number or 'inf', got {v!r}")
    return float(v)


def _nmse(v):
    if v is None or v == "perfect":
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ValueError(f"expected a finite number or 'perfect', got {v!r}")
    return float(v)


def _int(v, lo: int):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ValueError(f"expected an integer >= {lo}, got {v!r}")
    return v


def _parse_inputs(raw: dict) -> List[InputSpec]:
    if "inputs" in raw and "input" in raw:
        raise ConfigError("inputs", "give either 'inputs' or 'input', not both")
    items = raw.get("inputs")
    if items is None:
        items = [raw["input"]] if "input" in raw else [{"synthetic": {}}]
    if not isinstance(items, list) or not items:
        raise ConfigError("inputs", "must be a nonempty list")
    out = []
    for i, item in enumerate(items):
        name = f"inputs[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(name, "must be an object")
        unknown = set(item) - {"seq_id", "synthetic", "raw"}
        if unknown:
            raise ConfigError(name, f"unknown keys {sorted(unknown)}")
        if ("synthetic" in item) == ("raw" in item):
            raise ConfigError(name, "needs exactly one of 'synthetic' or 'raw'")
        seq_id = str(item.get("seq_id", f"seq{i}"))
        if "synthetic" in item:
            spec = _wrap(f"{name}.synthetic", SyntheticSpec.from_dict, item["synthetic"])
            out.append(InputSpec(seq_id, synthetic=spec))
        else:
            r = item["raw"]
            if not isinstance(r, dict):
                raise ConfigError(f"{name}.raw", "must be an object")
            for key in ("path", "height", "width"):
                if key not in r:
                    raise ConfigError(f"{name}.raw.{key}", "is required")
            dims = tuple(_wrap(f"{name}.raw.{k}", _int, r.get(k, 1), 1) for k in ("height", "width", "channels"))
            mf = _wrap(f"{name}.raw.frames", _int, r.get("frames", 0), 0)
            out.append(InputSpec(seq_id, raw_path=str(r["path"]), dims=dims, max_frames=mf))
    ids = [inp.seq_id for inp in out]
    if len(set(ids)) != len(ids):
        raise ConfigError("inputs", "seq_id values must be unique")
    return out


def parse_config(raw: dict, base_dir: str = ".", env: Optional[dict] = None) -> ExperimentConfig:
    env = os.environ if env is None else env
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError("<root>", f"unknown keys {sorted(unknown)}")
    session = _section(raw, "session", SESSION_KEYS)
    channel = _wrap("channel", ChannelConfig.from_dict, _section(raw, "channel"))
    seed = _wrap("seed", _int, raw.get("seed", channel.seed), 0)
    if env.get("PVSC_SEED"):
        try:
            seed = _int(int(env["PVSC_SEED"]), 0)
        except ValueError as exc:
            raise ConfigError("PVSC_SEED", str(exc)) from exc

    entropy = _wrap("entropy", EntropyConfig.from_dict, _section(raw, "entropy"))
    codec = _wrap("codec", CodecConfig.from_dict, _section(raw, "codec"))
    rate_set = _wrap("rate_set", RateSet.parse, raw.get("rate_set", "paper_iv_a"))
    _wrap("rate_set", rate_set.check_fits, codec.c_y)

    sw = _section(raw, "sweep", SWEEP_KEYS)
    defaults = {
        "snr_db": [channel.snr_db], "gop": [session.get("gop_len", 4)],
        "preset": [codec.preset_id], "nmse_db": [channel.csi_nmse_db],
    }
    conv = {"snr_db": _snr, "gop": lambda v: _int(v, 1), "preset": lambda v: _int(v, 0), "nmse_db": _nmse}
    sweep = {}
    for axis in ("snr_db", "gop", "preset", "nmse_db"):
        values = sw.get(axis, defaults[axis])
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{axis}", "must be a nonempty list")
        sweep[axis] = [_wrap(f"sweep.{axis}[{i}]", conv[axis], v) for i, v in enumerate(values)]
    for i, p in enumerate(sweep["preset"]):
        _wrap(f"sweep.preset[{i}]", lambda v: replace(codec, preset_id=v), p)

    inputs = _parse_inputs(raw)
    out = _section(raw, "output", OUTPUT_KEYS)
    cfg = ExperimentConfig(
        seed=seed, session=session, channel=channel, entropy=entropy, rate_set=rate_set,
        codec=codec, sweep=sweep, inputs=inputs,
        out_dir=str(out.get("dir", "out")), frames_csv=str(out.get("frames_csv", "frames.csv")),
        summary_csv=str(out.get("summary_csv", "summary.csv")), capture=bool(out.get("capture", False)),
        base_dir=base_dir)
    # Validate each session geometry once up front.
    for inp in inputs:
        pt = SweepPoint(0, inp.seq_id, sweep["snr_db"][0], sweep["gop"][0], sweep["preset"][0], sweep["nmse_db"][0])
        _wrap(f"inputs[{inp.seq_id}]", lambda p: Session(cfg.session_for(p)), pt)
    return cfg


def load_config(path: str, env: Optional[dict] = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)), env=env)
