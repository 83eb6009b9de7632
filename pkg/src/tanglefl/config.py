"""JSON configuration files for :class:`~tanglefl.sim.SimConfig`.

A config is a JSON object. ``variant`` is required, every other field has a
default. ``"preset": "fmnist3"`` (or ``"poets2"``) starts from a shipped
preset and overlays the remaining fields, nested sections merged key by key.
Errors carry the line of the offending key where it can be located.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from importlib import resources

from . import data, energy, model, publish, walk
from .errors import ConfigError
from .sim import SimConfig

PRESETS = ("fmnist3", "poets2")

_SECTIONS = {
    "task": data.ClusterTaskConfig,
    "train": model.TrainConfig,
    "walk": walk.WalkConfig,
    "trigger": publish.TriggerConfig,
    "cost": energy.CostParams,
}
# fields whose default is None, with the type they take when set
_OPTIONAL = {"seed": int}


def _line_of(text: str | None, key: str):
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _coerce(name, value, default, text):
    def fail(kind):
        raise ConfigError(f"field '{name}' must be {kind}, got {value!r}", _line_of(text, name))

    expected = _OPTIONAL.get(name) if default is None else type(default)
    if default is None and value is None:
        return None
    if expected is bool:
        if not isinstance(value, bool):
            fail("true or false")
        return value
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            fail("an integer")
        return value
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            fail("a number")
        return float(value)
    if expected is str:
        if not isinstance(value, str):
            fail("a string")
        return value
    if expected is tuple:
        if not isinstance(value, list) or not all(
                isinstance(s, list) and all(isinstance(c, int) and not isinstance(c, bool) for c in s)
                for s in value):
            fail("a list of integer lists")
        return tuple(tuple(s) for s in value)
    return value


def _build(cls, values: dict, text, section=None):
    where = f"section '{section}'" if section else "config"
    if not isinstance(values, dict):
        raise ConfigError(f"{where} must be a JSON object", _line_of(text, section) if section else None)
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown field '{key}' in {where}", _line_of(text, key))
        f = known[key]
        if cls is SimConfig and key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, text, key)
            continue
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        kwargs[key] = _coerce(key, value, default, text)
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(f"{where}: {exc}") from None
        raise


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}', choose from {PRESETS}")
    text = resources.files("tanglefl").joinpath("presets", f"{name}.json").read_text()
    return json.loads(text)


def from_dict(values: dict, text: str | None = None) -> SimConfig:
    if not isinstance(values, dict):
        raise ConfigError("config must be a JSON object", 1)
    values = dict(values)
    if "preset" in values:
        name = values.pop("preset")
        if not isinstance(name, str):
            raise ConfigError("field 'preset' must be a string", _line_of(text, "preset"))
        try:
            base = preset_dict(name)
        except ConfigError as exc:
            raise ConfigError(str(exc), _line_of(text, "preset")) from None
        base.pop("variant", None)
        values = _merge(base, values)
    if "variant" not in values:
        raise ConfigError("missing required field 'variant'", 1 if text is not None else None)
    return _build(SimConfig, values, text)


def loads(text: str) -> SimConfig:
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    return from_dict(values, text)


def load(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return loads(text)


def load_preset(name: str, **overrides) -> SimConfig:
    """A shipped preset with optional top-level overrides (``variant``, ``seed``...)."""
    values = preset_dict(name)
    cfg = from_dict(values)
    return cfg.replace(**overrides) if overrides else cfg


def to_dict(cfg: SimConfig) -> dict:
    """Plain JSON-ready dict of the resolved config (tuples become lists)."""
    return _listify(dataclasses.asdict(cfg))


def _listify(v):
    if isinstance(v, dict):
        return {k: _listify(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_listify(x) for x in v]
    return v


def canonical_json(cfg: SimConfig) -> str:
    return json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: SimConfig) -> str:
    """Git blob hash of the canonical resolved config."""
    body = canonical_json(cfg).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()
