"""INI-style experiment configuration.

Example::

    [coefficients]
    a1 = constant 2
    a2 = affine 1 0.5          ; a + b*x
    c2 = cosine-bump 1 0.3 1   ; base + amp*cos(k*pi*x), k defaults to 1
    ...
    d1 = 0.1
    d2 = 0.1

    [noise]
    family = single            ; zero | single | geometric
    sigma1_sq = 0.1
    sigma2_sq = 0.1

    [initial]
    U0 = constant 0.5
    V0 = constant 0.5

    [solver]
    dt = 1e-3
    T = 50

    [experiment]
    ensemble = 200
    seed = 1
    output = out.csv

Every coefficient is required; the other keys fall back to defaults.
"""

import configparser
import math
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, PreconditionError
from .model import COEFFICIENT_NAMES, CoefficientSet
from .noise import NoiseSpec
from .solver import POLICIES, SCHEMES, SolverConfig
from .spectral import build_grid

FAMILIES = {"constant": (1, 1), "affine": (2, 2), "cosine-bump": (2, 3)}
NOISE_FAMILIES = ("zero", "single", "geometric")
SECTIONS = {
    "coefficients": set(COEFFICIENT_NAMES) | {"d1", "d2"},
    "noise": {"family", "sigma1_sq", "sigma2_sq", "q", "modes"},
    "initial": {"u0", "v0"},
    "solver": {"dt", "t", "record_stride", "truncation_radius", "positivity_policy",
               "m", "scheme", "reject_tolerance"},
    "experiment": {"ensemble", "seed", "output"},
}


@dataclass(frozen=True)
class FieldDef:
    """A named family of functions of ``x`` on [0, 1]."""

    family: str
    params: tuple

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "constant":
            return np.full_like(x, p[0])
        if self.family == "affine":
            return p[0] + p[1] * x
        k = p[2] if len(p) > 2 else 1.0
        return p[0] + p[1] * np.cos(k * np.pi * x)

    def bounds(self):
        """Exact (min, max) over [0, 1]."""
        p = self.params
        if self.family == "constant":
            return p[0], p[0]
        if self.family == "affine":
            return min(p[0], p[0] + p[1]), max(p[0], p[0] + p[1])
        return p[0] - abs(p[1]), p[0] + abs(p[1])

    def to_text(self):
        return " ".join([self.family] + [repr(float(v)) for v in self.params])


@dataclass(frozen=True)
class ExperimentConfig:
    coefficients: dict
    d1: float
    d2: float
    noise_family: str = "zero"
    sigma1_sq: float = 0.0
    sigma2_sq: float = 0.0
    q: float = 0.5
    modes: int = 16
    U0: FieldDef = FieldDef("constant", (0.5,))
    V0: FieldDef = FieldDef("constant", (0.5,))
    dt: float = 1e-3
    T: float = 50.0
    record_stride: int = 100
    truncation_radius: float = math.inf
    positivity_policy: str = "clip"
    M: int = 64
    scheme: str = "heun"
    reject_tolerance: float = 1e-8
    ensemble: int = 200
    seed: int = 0
    output: str = "ensemble.csv"

    def noise_spec(self):
        if self.noise_family == "zero":
            return NoiseSpec.zero()
        if self.noise_family == "single":
            return NoiseSpec.single_mode(self.sigma1_sq, self.sigma2_sq)
        return NoiseSpec.geometric(self.sigma1_sq, self.sigma2_sq, self.q, self.modes)

    def solver_config(self):
        return SolverConfig(dt=self.dt, T=self.T, record_stride=self.record_stride,
                            truncation_radius=self.truncation_radius,
                            positivity_policy=self.positivity_policy, M=self.M,
                            spec=self.noise_spec(), scheme=self.scheme,
                            reject_tolerance=self.reject_tolerance)

    def coefficient_set(self):
        x = build_grid(self.M).points
        values = {n: self.coefficients[n].evaluate(x) for n in COEFFICIENT_NAMES}
        return CoefficientSet(M=self.M, d1=self.d1, d2=self.d2, **values)

    def initial_fields(self):
        x = build_grid(self.M).points
        return self.U0.evaluate(x), self.V0.evaluate(x)

    def with_overrides(self, **changes):
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_text(self):
        lines = ["[coefficients]"]
        lines += [f"{n} = {self.coefficients[n].to_text()}" for n in COEFFICIENT_NAMES]
        lines += [f"d1 = {self.d1!r}", f"d2 = {self.d2!r}", "", "[noise]",
                  f"family = {self.noise_family}", f"sigma1_sq = {self.sigma1_sq!r}",
                  f"sigma2_sq = {self.sigma2_sq!r}", f"q = {self.q!r}",
                  f"modes = {self.modes}", "", "[initial]",
                  f"U0 = {self.U0.to_text()}", f"V0 = {self.V0.to_text()}", "",
                  "[solver]", f"dt = {self.dt!r}", f"T = {self.T!r}",
                  f"record_stride = {self.record_stride}",
                  f"truncation_radius = {self.truncation_radius!r}",
                  f"positivity_policy = {self.positivity_policy}", f"M = {self.M}",
                  f"scheme = {self.scheme}",
                  f"reject_tolerance = {self.reject_tolerance!r}", "",
                  "[experiment]", f"ensemble = {self.ensemble}",
                  f"seed = {self.seed}", f"output = {self.output}", ""]
        return "\n".join(lines)


def _locate(text, section, key):
    """Line number of ``key`` inside ``[section]``, or of the section header."""
    current = None
    header_line = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            current = m.group(1).strip().lower()
            if current == section and header_line is None:
                header_line = i
            continue
        if current == section and key is not None:
            m = re.match(r"([^=:]+)[=:]", line)
            if m and m.group(1).strip().lower() == key:
                return i
    return header_line


def _number(raw, key, line, kind=float):
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(f"expected a number, got {raw!r}", key, line) from None
    if kind is float and math.isnan(value):
        raise ConfigError("NaN is not allowed", key, line)
    return value


def _field_def(raw, key, line):
    parts = raw.split()
    if not parts:
        raise ConfigError("empty field definition", key, line)
    family = parts[0].lower()
    if family not in FAMILIES:
        try:
            float(family)
        except ValueError:
            raise ConfigError(
                f"unknown field family {family!r}; use one of {sorted(FAMILIES)}",
                key, line) from None
        family, parts = "constant", ["constant"] + parts
    lo, hi = FAMILIES[family]
    args = parts[1:]
    if not lo <= len(args) <= hi:
        raise ConfigError(f"{family} takes {lo}..{hi} parameters, got {len(args)}", key, line)
    params = tuple(_number(a, key, line) for a in args)
    if any(math.isinf(p) for p in params):
        raise ConfigError("field parameters must be finite", key, line)
    return FieldDef(family, params)


def parse_config(text):
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                       interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line=line) from None

    for section in parser.sections():
        name = section.lower()
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]", section,
                              _locate(text, name, None))
        for key in parser[section]:
            if key not in SECTIONS[name]:
                raise ConfigError("unknown key", f"{section}.{key}",
                                  _locate(text, name, key))

    def get(section, key):
        for s in parser.sections():
            if s.lower() == section and key in parser[s]:
                return parser[s][key].strip(), _locate(text, section, key)
        return None, None

    kwargs = {}
    coefficients = {}
    for name in COEFFICIENT_NAMES:
        raw, line = get("coefficients", name)
        if raw is None:
            raise ConfigError("missing required coefficient", name,
                              _locate(text, "coefficients", None))
        fd = _field_def(raw, name, line)
        if fd.bounds()[0] <= 0:
            raise ConfigError("coefficient must be positive", name, line)
        coefficients[name] = fd
    kwargs["coefficients"] = coefficients
    for name in ("d1", "d2"):
        raw, line = get("coefficients", name)
        if raw is None:
            raise ConfigError("missing required diffusivity", name,
                              _locate(text, "coefficients", None))
        value = _number(raw, name, line)
        if not 0 < value < math.inf:
            raise ConfigError("diffusivity must be positive", name, line)
        kwargs[name] = value

    raw, line = get("noise", "family")
    if raw is not None:
        if raw.lower() not in NOISE_FAMILIES:
            raise ConfigError(f"noise family must be one of {NOISE_FAMILIES}", "family", line)
        kwargs["noise_family"] = raw.lower()
    for key in ("sigma1_sq", "sigma2_sq", "q"):
        raw, line = get("noise", key)
        if raw is not None:
            value = _number(raw, key, line)
            if key == "q" and not 0 < value < 1:
                raise ConfigError("q must lie in (0, 1)", key, line)
            if key != "q" and not 0 <= value < math.inf:
                raise ConfigError("noise intensity must be nonnegative", key, line)
            kwargs[key] = value
    raw, line = get("noise", "modes")
    if raw is not None:
        kwargs["modes"] = _number(raw, "modes", line, int)
        if kwargs["modes"] < 1:
            raise ConfigError("modes must be positive", "modes", line)

    for attr, key in (("U0", "u0"), ("V0", "v0")):
        raw, line = get("initial", key)
        if raw is not None:
            fd = _field_def(raw, attr, line)
            if fd.bounds()[0] < 0:
                raise ConfigError("initial density must be nonnegative", attr, line)
            kwargs[attr] = fd

    solver_keys = {"dt": ("dt", float), "t": ("T", float),
                   "record_stride": ("record_stride", int),
                   "truncation_radius": ("truncation_radius", float),
                   "m": ("M", int), "reject_tolerance": ("reject_tolerance", float)}
    for key, (attr, kind) in solver_keys.items():
        raw, line = get("solver", key)
        if raw is not None:
            kwargs[attr] = _number(raw, attr, line, kind)
    for key, allowed in (("positivity_policy", POLICIES), ("scheme", SCHEMES)):
        raw, line = get("solver", key)
        if raw is not None:
            if raw not in allowed:
                raise ConfigError(f"must be one of {allowed}", key, line)
            kwargs[key] = raw

    for key in ("ensemble", "seed"):
        raw, line = get("experiment", key)
        if raw is not None:
            kwargs[key] = _number(raw, key, line, int)
    raw, _ = get("experiment", "output")
    if raw is not None:
        kwargs["output"] = raw

    cfg = ExperimentConfig(**kwargs)
    validate(cfg, text)
    return cfg


def validate(cfg, text=""):
    """Cross-field checks; builds every derived object once."""
    if cfg.ensemble < 1:
        raise ConfigError("ensemble size must be >= 1", "ensemble",
                          _locate(text, "experiment", "ensemble"))
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative", "seed",
                          _locate(text, "experiment", "seed"))
    try:
        cfg.solver_config()
    except PreconditionError as exc:
        key = _guess_solver_key(str(exc))
        raise ConfigError(str(exc), key, _locate(text, "solver", key.lower())) from None
    try:
        cfg.coefficient_set()
    except PreconditionError as exc:
        raise ConfigError(str(exc)) from None
    U0, V0 = cfg.initial_fields()
    if np.any(U0 < 0) or np.any(V0 < 0):
        raise ConfigError("initial density must be nonnegative")
    return cfg


def _guess_solver_key(message):
    for key in ("record_stride", "truncation_radius", "positivity_policy", "scheme",
                "dt", "T", "M"):
        if message.startswith(key) or f" {key} " in f" {message} ":
            return key
    return "solver"


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
