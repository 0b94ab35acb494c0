"""Flat key-value run configuration.

Sources, lowest to highest precedence: built-in defaults, a config file,
``DKHO_PARAM_<KEY>`` environment variables (dots become underscores, e.g.
``DKHO_PARAM_PHYSICAL_RABI``), command-line flags.

Config files are ``key = value`` lines (``#`` comments allowed), or a run
manifest JSON whose ``params`` object is read back verbatim.
"""

from __future__ import annotations

import configparser
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError

ENV_PREFIX = "DKHO_PARAM_"
REQUIRED = object()


@dataclass(frozen=True)
class Key:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str):
    t = str(text).strip().lower()
    return None if t in ("none", "off", "") else float(t)


KEYS = [
    Key("r", int, REQUIRED, "resonance numerator"),
    Key("q", int, REQUIRED, "resonance denominator (> 2)"),
    Key("eta", float, REQUIRED, "Lamb-Dicke parameter"),
    Key("kappa1", float, REQUIRED, "kick strength on |g1>"),
    Key("kappa2", float, REQUIRED, "kick strength on |g2>"),
    Key("fock_dim", int, 0, "Fock basis size; 0 picks one from alpha"),
    Key("n_kicks", int, 1000, "number of kicks"),
    Key("alpha_re", float, 0.0, "initial coherent amplitude, real part"),
    Key("alpha_im", float, 0.0, "initial coherent amplitude, imaginary part"),
    Key("convention", str, "derived", "Ramsey readout convention: derived | printed"),
    Key("singular_threshold", float, 1e-3, "minimum |det| for overlap reconstruction"),
    Key("leak_warn", float, 1e-6, "top-of-basis population that triggers a warning"),
    Key("leak_error", _optional_float, 1e-3, "top-of-basis population that aborts (none disables)"),
    Key("ic_x", float, 1.0, "classical seed centre, X"),
    Key("ic_p", float, 0.0, "classical seed centre, P"),
    Key("ic_spread", float, 1e-3, "half-width of the uniform box of classical seeds"),
    Key("n_ics", int, 16, "number of classical seeds"),
    Key("seed", int, 0, "random seed for classical seeds"),
    Key("extent", float, 2.5, "half-width of the square phase-space window"),
    Key("resolution", int, 256, "grid cells per axis"),
    Key("symmetry_resolution", int, 64, "grid cells per axis for the 6-fold symmetry score"),
    Key("stride", int, 1, "kick stride for time averages and trajectories"),
    Key("ring_radius", float, 1.5, "radius beyond which Q mass is reported"),
    Key("tolerance", float, 0.01, "relative deviation bound for the correspondence check"),
    Key("save_states", _bool, False, "write every stored state, not only the last"),
    Key("jobs", int, 0, "worker processes; 0 uses all cores"),
    Key("physical.rabi", float, REQUIRED, "Rabi frequency (rad/s)"),
    Key("physical.detuning", float, REQUIRED, "detuning (rad/s, signed)"),
    Key("physical.pulse_width", float, REQUIRED, "Gaussian pulse width sigma (s)"),
    Key("physical.mass", float, REQUIRED, "ion mass (kg)"),
    Key("physical.trap_freq", float, REQUIRED, "trap angular frequency (rad/s)"),
    Key("physical.wavenumber", float, REQUIRED, "laser wavenumber k (1/m)"),
    Key("physical.max_rabi_ratio", float, 0.1, "bound on |rabi/detuning|"),
    Key("physical.min_width_detuning", float, 10.0, "bound on pulse_width*|detuning|"),
]
SCHEMA = {k.name: k for k in KEYS}


def env_name(key: str) -> str:
    return ENV_PREFIX + key.replace(".", "_").upper()


def flag_name(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def _coerce(key: str, value: Any) -> Any:
    spec = SCHEMA.get(key)
    if spec is None:
        raise ConfigError(key, "unknown key")
    if value is None and spec.type is _optional_float:
        return None
    try:
        if spec.type is int and isinstance(value, float):
            if not value.is_integer():
                raise ValueError(f"not an integer: {value!r}")
            return int(value)
        return spec.type(value) if not isinstance(value, str) else spec.type(value.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {value!r}: {exc}") from None


def read_file(path) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON: {exc}") from None
        raw = data.get("params", data)
        return {k: _coerce(k, v) for k, v in raw.items() if v is not None or k in SCHEMA}
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    return {k: _coerce(k, v) for k, v in parser["run"].items()}


def read_env(environ=None) -> dict[str, Any]:
    environ = os.environ if environ is None else environ
    out = {}
    for key in SCHEMA:
        name = env_name(key)
        if name in environ:
            out[key] = _coerce(key, environ[name])
    return out


class Config(dict):
    """Resolved parameter set; missing required keys raise :class:`ConfigError` on access."""

    def __missing__(self, key):
        if key in SCHEMA:
            raise ConfigError(key, "required but not set")
        raise KeyError(key)

    def require(self, *keys: str) -> None:
        for key in keys:
            self[key]

    def resolved(self) -> dict[str, Any]:
        return dict(sorted(self.items()))


def resolve(file: str | None = None, flags: dict[str, Any] | None = None, environ=None) -> Config:
    values: dict[str, Any] = {k.name: k.default for k in KEYS if k.default is not REQUIRED}
    if file:
        values.update(read_file(file))
    values.update(read_env(environ))
    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = _coerce(key, value)
    return Config(values)
