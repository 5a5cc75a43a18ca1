"""Cascade configuration and its ``key = value`` text format.

Top-level keys describe the base stage (stage 0); each ``[stage.N]`` section
adds a guided stage. Example::

    channels = 3
    height = 64
    width = 64
    steps = 30
    seed = 0
    mode = hiflow
    field.kind = coarse2fine
    field.blur0 = 0.05

    [stage.1]
    scale = 2
    guidance.tau = 0.6

Overrides address the same keys with dotted paths, e.g.
``stage.1.guidance.tau=1.0``. Floats are written with ``repr`` so a dump
parses back bit-exactly.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .guidance import GuidanceConfig
from .schedule import TimeSchedule, make_schedule

MODES = ("hiflow", "constant_anchor", "none")
FIELD_KINDS = ("gaussian", "anchored", "coarse2fine", "mlp")

# field parameter -> parser
_FIELD_PARAMS = {
    "kind": str,
    "mu0": float,
    "sigma0": float,
    "blur0": float,
    "scene_seed": int,
    "texture_amp": float,
    "texture_seed": int,
    "vary_with_seed": "bool",
    "target": str,
    "weights": str,
}
_GUIDANCE_PARAMS = {
    "tau": float,
    "cutoff": float,
    "order": int,
    "alpha": str,
    "beta": str,
    "g_i": "bool",
    "g_d": "bool",
    "g_a": "bool",
}


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(kind, text: str):
    if kind == "bool":
        return _parse_bool(text)
    if kind is int:
        return int(text.strip(), 0)
    if kind is float:
        return float(text.strip())
    return text.strip()


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class StageConfig:
    scale: int = 2
    seed: Optional[int] = None
    guidance: GuidanceConfig = dataclasses.field(default_factory=GuidanceConfig)
    field: dict = dataclasses.field(default_factory=dict)


@dataclass
class CascadeConfig:
    channels: int = 3
    height: int = 64
    width: int = 64
    steps: int = 30
    schedule: str = "uniform"
    shift: float = 1.0
    times: Optional[tuple] = None
    seed: int = 0
    mode: str = "hiflow"
    interpolation: str = "bicubic"
    field: dict = dataclasses.field(default_factory=lambda: {"kind": "coarse2fine"})
    stages: list = dataclasses.field(default_factory=list)

    def validate(self) -> "CascadeConfig":
        if min(self.channels, self.height, self.width) < 1:
            raise ConfigError("base dims must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.interpolation not in ("nearest", "bilinear", "bicubic"):
            raise ConfigError(f"unknown interpolation {self.interpolation!r}")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for k, st in enumerate(self.stages, start=1):
            if st.scale < 2:
                raise ConfigError(f"stage.{k}.scale must be an integer >= 2")
            kind = self.stage_field(k).get("kind")
            if kind not in FIELD_KINDS:
                raise ConfigError(f"stage.{k}: unknown field kind {kind!r}")
        if self.field.get("kind") not in FIELD_KINDS:
            raise ConfigError(f"unknown field kind {self.field.get('kind')!r}")
        try:
            self.time_schedule()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def time_schedule(self) -> TimeSchedule:
        if self.times is not None:
            return TimeSchedule(tuple(self.times))
        return make_schedule(self.steps, self.schedule, self.shift)

    def stage_dims(self, k: int) -> tuple:
        factor = 1
        for st in self.stages[:k]:
            factor *= st.scale
        return (self.channels, self.height * factor, self.width * factor)

    def stage_field(self, k: int) -> dict:
        params = dict(self.field)
        if k > 0:
            params.update(self.stages[k - 1].field)
        return params

    def stage_seed(self, k: int) -> int:
        if k > 0 and self.stages[k - 1].seed is not None:
            return self.stages[k - 1].seed
        return self.seed

    def with_seed(self, seed: int) -> "CascadeConfig":
        return dataclasses.replace(self, seed=seed, stages=[dataclasses.replace(s) for s in self.stages])


_TOP_KEYS = {
    "channels": int,
    "height": int,
    "width": int,
    "steps": int,
    "schedule": str,
    "shift": float,
    "times": "times",
    "seed": int,
    "mode": str,
    "interpolation": str,
}


def _set_key(raw: dict, key: str, value: str) -> None:
    """Apply one dotted ``key`` (e.g. ``stage.1.guidance.tau``) to the raw tables."""
    parts = key.split(".")
    if parts[0] == "stage":
        if len(parts) < 3 or not parts[1].isdigit() or int(parts[1]) < 1:
            raise ConfigError(f"unknown key {key!r}")
        stage = raw["stages"].setdefault(int(parts[1]), {"guidance": {}, "field": {}})
        rest = parts[2:]
        if rest == ["scale"]:
            stage["scale"] = _convert(int, value)
        elif rest == ["seed"]:
            stage["seed"] = _convert(int, value)
        elif len(rest) == 2 and rest[0] == "guidance" and rest[1] in _GUIDANCE_PARAMS:
            stage["guidance"][rest[1]] = _convert(_GUIDANCE_PARAMS[rest[1]], value)
        elif len(rest) == 2 and rest[0] == "field" and rest[1] in _FIELD_PARAMS:
            stage["field"][rest[1]] = _convert(_FIELD_PARAMS[rest[1]], value)
        else:
            raise ConfigError(f"unknown key {key!r}")
    elif parts[0] == "field" and len(parts) == 2 and parts[1] in _FIELD_PARAMS:
        raw["field"][parts[1]] = _convert(_FIELD_PARAMS[parts[1]], value)
    elif len(parts) == 1 and key in _TOP_KEYS:
        kind = _TOP_KEYS[key]
        if kind == "times":
            raw["top"][key] = tuple(float(v) for v in value.split(","))
        else:
            raw["top"][key] = _convert(kind, value)
    else:
        raise ConfigError(f"unknown key {key!r}")


def _empty_raw() -> dict:
    return {"top": {}, "field": {}, "stages": {}}


def _parse_into(raw: dict, text: str, source: str) -> None:
    section = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            parts = section.split(".")
            if len(parts) != 2 or parts[0] != "stage" or not parts[1].isdigit() or int(parts[1]) < 1:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            raw["stages"].setdefault(int(parts[1]), {"guidance": {}, "field": {}})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        full = f"{section}.{key}" if section else key
        try:
            _set_key(raw, full, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {full!r}: {exc}") from None


def _build(raw: dict) -> CascadeConfig:
    top = dict(raw["top"])
    if "times" in top:
        top.setdefault("schedule", "explicit")
    field_params = {"kind": "coarse2fine", **raw["field"]}
    indices = sorted(raw["stages"])
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigError(f"stage sections must be numbered 1..N consecutively, got {indices}")
    stages = []
    for k in indices:
        st = raw["stages"][k]
        try:
            guidance = GuidanceConfig(**st["guidance"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"stage.{k}: {exc}") from None
        stages.append(StageConfig(st.get("scale", 2), st.get("seed"), guidance, dict(st["field"])))
    return CascadeConfig(**top, field=field_params, stages=stages).validate()


def parse_config(text: str, overrides=(), source: str = "<config>") -> CascadeConfig:
    """Parse config text, then apply ``KEY=VALUE`` overrides in order."""
    raw = _empty_raw()
    _parse_into(raw, text, source)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, value = (s.strip() for s in item.split("=", 1))
        try:
            _set_key(raw, key, value)
        except ConfigError:
            raise
        except ValueError as exc:  # conversion failure
            raise ConfigError(f"bad value for override {key!r}: {exc}") from None
    return _build(raw)


def load_config(path, overrides=()) -> CascadeConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), overrides, str(path))


def dump_config(cfg: CascadeConfig) -> str:
    lines = []
    for key in _TOP_KEYS:
        value = getattr(cfg, key)
        if key == "times":
            if value is not None:
                lines.append("times = " + ", ".join(repr(float(t)) for t in value))
            continue
        if key == "schedule" and cfg.times is not None:
            continue
        lines.append(f"{key} = {_format(value)}")
    for k, v in cfg.field.items():
        lines.append(f"field.{k} = {_format(v)}")
    for idx, st in enumerate(cfg.stages, start=1):
        lines += ["", f"[stage.{idx}]", f"scale = {st.scale}"]
        if st.seed is not None:
            lines.append(f"seed = {st.seed}")
        for f in dataclasses.fields(GuidanceConfig):
            lines.append(f"guidance.{f.name} = {_format(getattr(st.guidance, f.name))}")
        for k, v in st.field.items():
            lines.append(f"field.{k} = {_format(v)}")
    return "\n".join(lines) + "\n"


def default_cascade_config(stages: int = 2, **field_params) -> CascadeConfig:
    """64 -> 128 -> ... ladder with noise ratios 0.6, 0.3, 0.3, cutoff 0.4, 30 steps."""
    taus = [0.6, 0.3, 0.3]
    if not 1 <= stages <= len(taus):
        raise ValueError("defaults cover 1 to 3 guided stages")
    params = {"kind": "coarse2fine", "blur0": 0.05, "scene_seed": 0, "texture_amp": 0.1, "texture_seed": 0}
    params.update(field_params)
    return CascadeConfig(
        field=params,
        stages=[StageConfig(2, None, GuidanceConfig(tau=tau)) for tau in taus[:stages]],
    ).validate()
