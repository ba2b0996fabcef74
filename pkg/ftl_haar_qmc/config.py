"""Experiment configuration.

Config files are flat `key = value` text with `[experiment]` sections:

    [experiment faure-rates]
    generator = faure
    b = 2
    s = 1
    m = 4..12
    alpha = [0.6, 0.75, 1.0]
    methods = [upper, lower, hilbert]
    out = rates.csv

Values are YAML scalars or flow lists; `a..b` is an inclusive integer range.
Keys a section leaves out take the values of `defaults/experiment.yaml`.
"""

import importlib.resources
import re
from dataclasses import dataclass, field, fields, replace
from itertools import product
from logging import getLogger
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import ConfigError, ValidationError
from .fractional import METHOD_ALIASES, METHODS
from .haar import Exponent, SpaceParams
from .util import check_base

logger = getLogger(__name__)

KINDS = ("convergence", "sharpness")
GENERATORS = ("vdc", "faure", "random", "matrices", "points")
CONVERGENCE_METHODS = ("upper", "lower", "hilbert", "discrepancy")
LOWER_MODES = ("exact", "analytic")

SECTION = re.compile(r"^\[\s*experiment(?:\s+(?P<name>[^\]]*?))?\s*\]$")
RANGE = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")


def load_defaults() -> Dict[str, Any]:
    return yaml.safe_load(
        importlib.resources.files("ftl_haar_qmc.defaults").joinpath("experiment.yaml").read_text()
    )


def _as_list(value) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"expected an integer, got {value!r}")
    return value


def _optional_int(value) -> Optional[int]:
    return None if value is None else _int(value)


def _float(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _bool(value) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"expected true or false, got {value!r}")
    return value


def _str(value) -> str:
    if not isinstance(value, (str, int, float)) or isinstance(value, bool):
        raise ValueError(f"expected a string, got {value!r}")
    return str(value)


def _optional_str(value) -> Optional[str]:
    return None if value is None else _str(value)


def _ints(value) -> List[int]:
    return [_int(v) for v in _as_list(value)]


def _optional_ints(value) -> Optional[List[int]]:
    return None if value is None else _ints(value)


def _floats(value) -> List[float]:
    return [_float(v) for v in _as_list(value)]


def _exponents(value) -> List[Exponent]:
    return [Exponent.parse(v) for v in _as_list(value)]


def _strs(value) -> List[str]:
    return [_str(v) for v in _as_list(value)]


def _choice(options):
    def check(value):
        value = _str(value)
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {value!r}")
        return value

    return check


KEYS = {
    "kind": _choice(KINDS),
    "generator": _choice(GENERATORS),
    "b": _int,
    "s": _int,
    "m": _ints,
    "t": _optional_int,
    "alpha": _floats,
    "p": _exponents,
    "q": _exponents,
    "methods": _strs,
    "out": _optional_str,
    "seed": _int,
    "tol": _float,
    "j_max": _optional_int,
    "replicates": _int,
    "panels": _optional_ints,
    "grading": _int,
    "workers": _int,
    "timing": _bool,
    "matrices": _optional_str,
    "points": _strs,
    "discrepancy_method": _str,
    "lower_mode": _choice(LOWER_MODES),
    "samples": _int,
}


@dataclass
class ExperimentConfig:
    """One `[experiment]` section with defaults filled in."""

    name: str = "experiment"
    kind: str = "convergence"
    generator: str = "faure"
    b: int = 2
    s: int = 1
    m: List[int] = field(default_factory=list)
    t: Optional[int] = None
    alpha: List[float] = field(default_factory=lambda: [0.75])
    p: List[Exponent] = field(default_factory=lambda: [Exponent.parse(2)])
    q: List[Exponent] = field(default_factory=lambda: [Exponent.parse(2)])
    methods: List[str] = field(default_factory=lambda: ["upper"])
    out: Optional[str] = None
    seed: int = 0
    tol: float = 1e-10
    j_max: Optional[int] = None
    replicates: int = 8
    panels: Optional[List[int]] = None
    grading: int = 16
    workers: int = 1
    timing: bool = False
    matrices: Optional[str] = None
    points: List[str] = field(default_factory=list)
    discrepancy_method: str = "warnock"
    lower_mode: str = "exact"
    samples: int = 1 << 16
    path: Optional[str] = field(default=None, repr=False)
    lineno: Optional[int] = field(default=None, repr=False)
    key_lines: Dict[str, int] = field(default_factory=dict, repr=False)

    @classmethod
    def from_values(cls, values: Dict[str, Any], name: str = "experiment", path: Optional[str] = None,
                    lineno: Optional[int] = None, key_lines: Optional[Dict[str, int]] = None) -> "ExperimentConfig":
        """Build a config from raw YAML values, filling gaps from the packaged defaults."""
        key_lines = key_lines or {}
        merged = dict(load_defaults()["experiment"])
        merged.update(values)
        kwargs = {}
        for key, raw in merged.items():
            if key not in KEYS:
                raise ConfigError(f"unknown key {key!r}", path, key_lines.get(key, lineno))
            try:
                kwargs[key] = KEYS[key](raw)
            except (ValueError, TypeError) as e:
                raise ConfigError(f"{key}: {e}", path, key_lines.get(key, lineno)) from None
        cfg = cls(name=name, path=path, lineno=lineno, key_lines=dict(key_lines), **kwargs)
        cfg.validate()
        return cfg

    def error(self, message: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, self.path, self.key_lines.get(key, self.lineno))

    def space_params(self) -> List[SpaceParams]:
        """All (alpha, p, q) combinations in config order."""
        return [SpaceParams(self.b, self.s, a, p, q) for a, p, q in product(self.alpha, self.p, self.q)]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Apply command-line flags; None means "not given"."""
        known = {f.name for f in fields(self)}
        changes = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in known or key not in KEYS:
                raise ValidationError(f"unknown override {key!r}")
            try:
                changes[key] = KEYS[key](value)
            except (ValueError, TypeError) as e:
                raise ValidationError(f"--{key.replace('_', '-')}: {e}") from None
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg

    def validate(self):
        try:
            check_base(self.b)
        except ValidationError as e:
            raise self.error(e.message, "b") from None
        if self.s < 1:
            raise self.error(f"dimension must be positive, got {self.s}", "s")
        if self.generator == "points":
            if not self.points:
                raise self.error("generator = points needs a list of point-set files", "points")
        elif not self.m:
            raise self.error("empty m-range", "m")
        if any(m < 0 for m in self.m):
            raise self.error("m must be non-negative", "m")
        if self.generator == "vdc" and self.s != 1:
            raise self.error("the van der Corput generator is one-dimensional", "s")
        if self.generator == "matrices" and not self.matrices:
            raise self.error("generator = matrices needs a matrices file", "matrices")
        if not self.alpha or not self.p or not self.q:
            raise self.error("alpha, p and q need at least one value", "alpha")
        if any(a <= 0 for a in self.alpha):
            raise self.error("alpha must be positive", "alpha")
        for key in ("replicates", "workers", "samples"):
            if getattr(self, key) < 1:
                raise self.error(f"{key} must be at least 1", key)
        if self.tol <= 0:
            raise self.error("tol must be positive", "tol")
        if self.kind == "convergence":
            self._validate_convergence()
        else:
            self._validate_sharpness()

    def _validate_convergence(self):
        if not self.methods:
            raise self.error("no methods given", "methods")
        for method in self.methods:
            if method not in CONVERGENCE_METHODS:
                raise self.error(
                    f"unknown method {method!r}, expected one of {', '.join(CONVERGENCE_METHODS)}", "methods"
                )
        for params in self.space_params():
            if "hilbert" in self.methods:
                if params.p != Exponent.parse(2) or params.q != Exponent.parse(2):
                    raise self.error("method hilbert needs p = q = 2", "methods")
                if not 0.5 < params.alpha <= 1.0:
                    raise self.error(f"method hilbert needs alpha in (1/2, 1], got {params.alpha}", "alpha")
            if {"upper", "lower"} & set(self.methods) and not params.eval_ok:
                raise self.error(
                    f"alpha = {params.alpha} must exceed 1/p = {float(params.p.inverse):g} for p = {params.p}",
                    "alpha",
                )
            if "discrepancy" in self.methods:
                method = METHOD_ALIASES.get(self.discrepancy_method, self.discrepancy_method)
                if method not in METHODS:
                    raise self.error(f"unknown discrepancy method {self.discrepancy_method!r}", "discrepancy_method")
                if params.alpha > 1.0 or float(params.p.inverse) >= params.alpha:
                    raise self.error(f"method discrepancy needs 1/p < alpha <= 1, got alpha = {params.alpha}",
                                     "alpha")

    def _validate_sharpness(self):
        if self.panels is not None and (not self.panels or any(k < 1 for k in self.panels)):
            raise self.error("panels must be a non-empty list of positive integers", "panels")
        for params in self.space_params():
            if params.p.is_infinite or not float(params.p.inverse) < params.alpha <= 1.0:
                raise self.error(
                    f"sharpness needs 1/p < alpha <= 1 and finite p, got alpha = {params.alpha}, p = {params.p}",
                    "alpha",
                )


def _parse_value(raw: str, path: str, lineno: int):
    match = RANGE.match(raw)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if hi < lo:
            raise ConfigError(f"empty range {raw.strip()}", path, lineno)
        return list(range(lo, hi + 1))
    try:
        return yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse value {raw.strip()!r}: {e.problem or e}", path, lineno) from None


def parse_config(text: str, path: str = "<config>") -> List[ExperimentConfig]:
    """Parse every `[experiment]` section of a config file, in file order."""
    sections = []
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            match = SECTION.match(stripped)
            if not match:
                raise ConfigError(f"unknown section {stripped}", path, lineno)
            current = {"name": match.group("name") or f"experiment-{len(sections) + 1}",
                       "lineno": lineno, "values": {}, "lines": {}}
            sections.append(current)
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", path, lineno)
        if current is None:
            raise ConfigError("key outside an [experiment] section", path, lineno)
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if not key:
            raise ConfigError("missing key", path, lineno)
        if key in current["values"]:
            raise ConfigError(f"duplicate key {key!r}", path, lineno)
        current["values"][key] = _parse_value(raw, path, lineno)
        current["lines"][key] = lineno
    if not sections:
        raise ConfigError("no [experiment] section", path)
    configs = [
        ExperimentConfig.from_values(sec["values"], sec["name"], path, sec["lineno"], sec["lines"])
        for sec in sections
    ]
    logger.info("read %d experiment(s) from %s", len(configs), path)
    return configs


def load_config(path) -> List[ExperimentConfig]:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", str(path)) from None
    return parse_config(text, str(path))
