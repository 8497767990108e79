"""Experiment configuration: a flat ``key = value`` text file plus flag overrides.

Grammar::

    # comment
    key = value          one assignment per line; blank lines ignored
    suites = cut, tower  comma-separated lists where a field is a list

Keys are the field names of :class:`ExperimentConfig` (dashes and underscores
are interchangeable).  Unknown keys, repeated keys, malformed lines and bad
values are reported with the line number and field name.
"""

from dataclasses import asdict, dataclass, fields
import math

from .cut_functions import from_config

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "parse_config_text", "SUITES"]

SUITES = ("cut", "measure", "tower", "ulam", "decay", "lowerbound", "decay2d")
DEFAULT_SUITES = ("cut", "measure", "tower", "ulam", "decay", "lowerbound")
KINDS = ("constant", "linear", "symmetric_power", "asymmetric_power", "custom")
DEFAULT_SEED = 20240611


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "linear"
    alpha: float = None
    alpha_prime: float = None
    c: float = 0.5
    table: str = None
    depth: int = 100000
    cells: int = 16384
    nmax: int = 5000
    samples: int = 100000
    seed: int = DEFAULT_SEED
    threads: int = 1
    output: str = "."
    suites: tuple = DEFAULT_SUITES
    root_tol: float = 1e-12

    def cut_fields(self):
        out = {"kind": self.kind}
        for key in ("alpha", "alpha_prime", "c", "table"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    def make_cut(self):
        try:
            return from_config(self.cut_fields())
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = asdict(self)
        d["suites"] = list(self.suites)
        return d

    def validate(self):
        for f in fields(self):
            check_field(f.name, getattr(self, f.name))
        if self.kind in ("symmetric_power", "asymmetric_power") and self.alpha is None:
            raise ConfigError(f"field 'alpha': required for kind {self.kind!r}")
        if self.kind == "asymmetric_power" and self.alpha_prime is None:
            raise ConfigError("field 'alpha_prime': required for kind 'asymmetric_power'")
        if self.kind == "custom" and not self.table:
            raise ConfigError("field 'table': required for kind 'custom'")
        return self


def check_field(name, value):
    """Range checks for a single field, independent of the others."""
    if value is None:
        return
    if name == "kind" and value not in KINDS:
        raise ConfigError(f"field 'kind': unknown cut kind {value!r}; expected one of {', '.join(KINDS)}")
    if name in ("alpha", "alpha_prime", "c", "root_tol", "depth", "cells", "nmax", "samples", "threads"):
        if not (value > 0 and math.isfinite(value)):
            raise ConfigError(f"field {name!r}: must be positive, got {value!r}")
    if name == "c" and not value < 1:
        raise ConfigError(f"field 'c': constant cut needs 0 < c < 1, got {value!r}")
    if name == "seed" and value < 0:
        raise ConfigError(f"field 'seed': must be nonnegative, got {value!r}")
    if name == "suites":
        bad = [x for x in value if x not in SUITES]
        if bad:
            raise ConfigError(f"field 'suites': unknown suite {bad[0]!r}; expected any of {', '.join(SUITES)}")


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(name, raw):
    kind = _TYPES[name]
    raw = raw.strip()
    if kind is float:
        return float(raw)
    if kind is int:
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind is tuple:
        return tuple(s.strip() for s in raw.split(",") if s.strip())
    if name == "kind":
        return raw.lower().replace("-", "_")
    return raw


def coerce(name, raw, where=""):
    """Convert one textual value for field ``name``; errors name the field."""
    key = name.replace("-", "_")
    if key not in _TYPES:
        raise ConfigError(f"{where}unknown field {name!r}")
    try:
        return key, _convert(key, str(raw))
    except ValueError as exc:
        raise ConfigError(f"{where}field {key!r}: {exc}") from None


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        where = f"{source}:{lineno}: "
        if "=" not in stripped:
            raise ConfigError(f"{where}expected 'key = value', got {stripped!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"{where}missing field name")
        key, value = coerce(key, raw, where)
        if key in values:
            raise ConfigError(f"{where}field {key!r} given twice")
        try:
            check_field(key, value)
        except ConfigError as exc:
            raise ConfigError(f"{where}{exc}") from None
        values[key] = value
    return values


def load_config(path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (a mapping of
    already-typed or textual values); the result is validated."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
        values.update(parse_config_text(text, source=str(path)))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if isinstance(value, str):
            key, value = coerce(key, value, "flag: ")
        key = key.replace("-", "_")
        try:
            check_field(key, value)
        except ConfigError as exc:
            raise ConfigError(f"flag --{key.replace('_', '-')}: {exc}") from None
        values[key] = value
    return ExperimentConfig(**values).validate()
