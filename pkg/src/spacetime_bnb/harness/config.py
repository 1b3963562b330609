"""Experiment configuration.

Text grammar (one setting per line)::

    # comment
    key = value
    key = v1, v2, v3          # list
    tol.name = value          # entry of the tolerance table

Blank lines and text after ``#`` are ignored.  Keys are case sensitive.  The
same settings can be given as a JSON object, with ``tol`` as a nested object;
both forms load to the same :class:`ExperimentConfig`.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

from ..bnb import Scheme
from ..errors import ConstructionError

KINDS = ("solve", "converge", "quasiopt", "bnb-scan", "cfl-scan", "gram-check", "catalog")
PHI_KINDS = ("native", "zero", "identity", "neg-identity")
DEFAULT_SEED = 0


class ConfigError(ValueError):
    """Invalid configuration (unknown key, bad value, empty grid)."""


DEFAULT_TOLERANCES = {
    "order_slack": 0.1,
    "ratio_slack": 0.05,
    "duality_rel": 1e-8,
    "bound_abs": 1e-9,
    "witness_rel": 1e-6,
    "cfl_rel": 1e-9,
    "uniform_ratio": 0.5,
    "require_uniform": 0.0,
    "require_monotone": 1.0,
}

_DEFAULTS: dict[str, dict[str, Any]] = {
    "solve": dict(problems=["decay"], schemes=["theta:1"], phis=["native"], N=[16], dims=[8]),
    "converge": dict(problems=["decay", "periodic"], schemes=["theta:1", "dg:1", "dg:2"], phis=["native"],
                     N=[8, 16, 32, 64], dims=[8]),
    "quasiopt": dict(problems=["decay", "rough"], schemes=["theta:1", "dg:0", "dg:1"],
                     phis=["zero", "identity"], N=[4, 8, 16, 32], dims=[4, 8, 16], families="criterion"),
    "bnb-scan": dict(problems=[], schemes=["theta:1", "dg:0", "dg:1", "dg:2"], phis=["zero", "identity"],
                     N=[4, 8, 16, 32], dims=[4, 8, 16], families="criterion"),
    "cfl-scan": dict(problems=[], schemes=["theta:0"], phis=["zero"], N=[10], dims=[4],
                     k_lambda=[0.25, 0.5, 1.0, 1.5, 2.0, 3.0]),
    "gram-check": dict(problems=[], schemes=[], phis=[], N=[], dims=[], q_max=7),
    "catalog": dict(problems=["decay", "periodic", "antiperiodic", "rough"], schemes=[], phis=[], N=[], dims=[]),
}

_LIST_KEYS = {"problems", "schemes", "phis", "N", "dims", "thetas", "qs", "k_lambda"}
_SCALAR_KEYS = {"kind", "triple", "T", "length", "seed", "q_max", "workers", "out", "format", "label",
                "families"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    problems: tuple = ()
    schemes: tuple = ()
    phis: tuple = ()
    N: tuple = ()
    dims: tuple = ()
    k_lambda: tuple = ()
    triple: str = "spectral"
    T: float = 1.0
    length: float = 1.0
    seed: int = DEFAULT_SEED
    q_max: int = 7
    workers: int = 1
    out: str = "results"
    format: str = "csv"
    label: str = ""
    families: str = "product"
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def points(self) -> list[tuple]:
        """(problem, scheme, phi) triples of the sweep, in config order.

        With ``families = criterion`` theta schemes are only paired with Phi = 0.
        """
        pts = [(p, s, f) for p in (self.problems or ("",)) for s in self.schemes for f in self.phis]
        if self.families == "criterion":
            pts = [x for x in pts if not (x[1].startswith("theta") and x[2] not in ("zero", "native"))]
        return pts

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("problems", "schemes", "phis", "N", "dims", "k_lambda"):
            d[key] = list(d[key])
        return d

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return validate(replace(self, **kw)) if kw else self


def _parse_scalar(text: str):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        return t[1:-1]
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def parse_text(text: str) -> dict:
    """Flat key = value text to a plain dict (lists for comma separated values)."""
    out: dict[str, Any] = {}
    tol: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key.startswith("tol."):
            tol[key[4:]] = _parse_scalar(value)
            continue
        if key in _LIST_KEYS:
            items = [v for v in (x.strip() for x in value.split(",")) if v]
            out[key] = [_parse_scalar(v) for v in items]
        else:
            out[key] = _parse_scalar(value)
    if tol:
        out["tol"] = tol
    return out


def from_mapping(data: dict, kind: Optional[str] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    data = dict(data)
    kind = data.pop("kind", None) or kind
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")
    unknown = set(data) - _LIST_KEYS - _SCALAR_KEYS - {"tol"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    merged = dict(_DEFAULTS[kind])
    # theta and q lists expand into scheme descriptors
    extra = [f"theta:{t}" for t in data.pop("thetas", [])] + [f"dg:{q}" for q in data.pop("qs", [])]
    if extra and "schemes" not in data:
        data["schemes"] = extra
    elif extra:
        data["schemes"] = list(data["schemes"]) + extra
    merged.update(data)
    tol = dict(DEFAULT_TOLERANCES)
    user_tol = merged.pop("tol", {}) or {}
    if not isinstance(user_tol, dict):
        raise ConfigError("tol must be a mapping")
    for key, value in user_tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}")
        tol[key] = value
    merged["tol"] = tol
    for key in ("problems", "schemes", "phis", "N", "dims", "k_lambda"):
        if key in merged:
            v = merged[key]
            merged[key] = tuple(v if isinstance(v, (list, tuple)) else [v])
    try:
        cfg = ExperimentConfig(kind=kind, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return validate(cfg)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    try:
        schemes = tuple(str(Scheme.parse(s)) for s in cfg.schemes)
    except ConstructionError as exc:
        raise ConfigError(str(exc)) from None
    bad_phi = [p for p in cfg.phis if p not in PHI_KINDS and not str(p).startswith("scalar:")]
    if bad_phi:
        raise ConfigError(f"unknown Phi kinds: {bad_phi}")
    for key in ("N", "dims"):
        vals = getattr(cfg, key)
        if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in vals):
            raise ConfigError(f"{key} entries must be positive integers, got {list(vals)}")
    needs = {
        "solve": ("problems", "schemes", "N", "dims"),
        "converge": ("problems", "schemes", "phis", "N", "dims"),
        "quasiopt": ("problems", "schemes", "phis", "N", "dims"),
        "bnb-scan": ("schemes", "phis", "N", "dims"),
        "cfl-scan": ("schemes", "N", "dims", "k_lambda"),
        "gram-check": (),
        "catalog": ("problems",),
    }[cfg.kind]
    for key in needs:
        if not getattr(cfg, key):
            raise ConfigError(f"{cfg.kind}: parameter grid {key!r} must be nonempty")
    if cfg.triple not in ("spectral", "p1"):
        raise ConfigError(f"triple must be 'spectral' or 'p1', got {cfg.triple!r}")
    if cfg.kind == "cfl-scan" and cfg.triple != "spectral":
        raise ConfigError("cfl-scan needs a spectral triple")
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if not (isinstance(cfg.seed, int) and 0 <= cfg.seed < 2 ** 64):
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not (isinstance(cfg.q_max, int) and 0 <= cfg.q_max <= 12):
        raise ConfigError("q_max must be an integer in [0, 12]")
    if not (isinstance(cfg.workers, int) and cfg.workers >= 1):
        raise ConfigError("workers must be a positive integer")
    for name, val in (("T", cfg.T), ("length", cfg.length)):
        if not isinstance(val, (int, float)) or not val > 0:
            raise ConfigError(f"{name} must be positive")
    if any(not isinstance(v, (int, float)) or v <= 0 for v in cfg.k_lambda):
        raise ConfigError("k_lambda entries must be positive numbers")
    if cfg.families not in ("product", "criterion"):
        raise ConfigError("families must be 'product' or 'criterion'")
    for key, val in cfg.tol.items():
        if not isinstance(val, (int, float)):
            raise ConfigError(f"tolerance {key} must be numeric")
    return replace(cfg, schemes=schemes, T=float(cfg.T), length=float(cfg.length),
                   k_lambda=tuple(float(v) for v in cfg.k_lambda))


def load_config(path, kind: Optional[str] = None) -> ExperimentConfig:
    """Read a text or JSON configuration file; JSON is detected by a leading '{'."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    else:
        data = parse_text(text)
    if kind is not None and data.get("kind", kind) != kind:
        raise ConfigError(f"config is for {data.get('kind')!r}, command is {kind!r}")
    return from_mapping(data, kind)


def default_config(kind: str) -> ExperimentConfig:
    return from_mapping({}, kind)
