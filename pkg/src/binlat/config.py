"""Experiment configuration: a flat ``key = value`` INI file.

Example::

    [experiment]
    schema_version = 1
    name = table2
    n = 200, 500
    m = 1, 2, 3
    beta0 = 1, 2
    tau0 = 1
    phi = 0.8, 0.2, 0, -0.2, -0.8
    replications = 1000
    seed = 20161016
    outputs = table2

Lists are comma separated.  ``m`` lists constant trial counts, one cell
each; ``m_dist = 1:0.5, 3:0.5`` instead describes a single i.i.d.
trial-count distribution.  Unknown keys are rejected so typos surface early.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import asdict, dataclass, field, fields

SCHEMA_VERSION = 1
TABLES = ("table1", "table2", "table3", "analytic")
SECTION = "experiment"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    n: tuple = (200,)
    m: tuple = (1,)
    m_dist: tuple | None = None
    beta0: tuple = (1.0, 2.0)
    tau0: float = 1.0
    phi: tuple = (0.0,)
    replications: int = 1000
    seed: int = 20161016
    quadrature_order: int = 32
    order2d: int = 9
    mesh: float = 1e-4
    C: tuple = (1, 2, 4, 8)
    outputs: tuple = ("table2",)
    tau_init: float = 0.5
    tau_max: float = 10.0
    moments: str = "binomial"
    boundary_rule: str = "score"
    schema_version: int = SCHEMA_VERSION
    source_text: str = field(default="", compare=False, repr=False)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(not -1.0 < p < 1.0 for p in self.phi):
            raise ValueError("every phi must lie in (-1, 1)")
        if any(n < 2 for n in self.n):
            raise ValueError("every n must be >= 2")
        if any(m < 1 for m in self.m):
            raise ValueError("trial counts must be >= 1")
        bad = [t for t in self.outputs if t not in TABLES]
        if bad:
            raise ValueError(f"unknown table identifiers {bad}; choose from {TABLES}")
        if self.tau0 < 0:
            raise ValueError("tau0 must be >= 0")
        if self.moments not in ("binomial", "exact"):
            raise ValueError("moments must be 'binomial' or 'exact'")
        if self.boundary_rule not in ("score", "global"):
            raise ValueError("boundary_rule must be score or global")

    @property
    def trial_specs(self) -> list:
        """One trial specification per cell column: ints or a dict."""
        if self.m_dist is not None:
            return [dict(self.m_dist)]
        return list(self.m)

    def sha256(self) -> str:
        """Hash of the canonical settings (independent of file formatting)."""
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()

    def replace(self, **kw) -> "ExperimentConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("source_text")
        out = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        if self.m_dist is not None:
            out["m_dist"] = [[int(k), float(p)] for k, p in self.m_dist]
        return out


def _floats(s):
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s):
    return tuple(int(x) for x in s.split(",") if x.strip())


def _words(s):
    return tuple(x.strip() for x in s.split(",") if x.strip())


def _mdist(s):
    out = []
    for part in _words(s):
        k, v = part.split(":")
        out.append((int(k), float(v)))
    return tuple(out)


_PARSERS = {
    "name": str.strip, "n": _ints, "m": _ints, "m_dist": _mdist, "beta0": _floats,
    "tau0": float, "phi": _floats, "replications": int, "seed": int,
    "quadrature_order": int, "order2d": int, "mesh": float, "C": _ints,
    "outputs": _words, "tau_init": float, "tau_max": float, "moments": str.strip,
    "boundary_rule": str.strip, "schema_version": int,
}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed config: {exc}") from exc
    if SECTION not in cp:
        raise ValueError(f"config needs an [{SECTION}] section")
    items = dict(cp[SECTION])
    if "schema_version" not in items:
        raise ValueError("config must declare schema_version")
    unknown = set(items) - set(_PARSERS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kw = {k: _PARSERS[k](v) for k, v in items.items()}
    return ExperimentConfig(source_text=text, **kw)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def canonical_text(cfg: ExperimentConfig) -> str:
    lines = [f"[{SECTION}]"]
    for f in fields(cfg):
        if f.name == "source_text":
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name == "m_dist":
            v = ", ".join(f"{k}:{p!r}" for k, p in v)
        elif isinstance(v, tuple):
            v = ", ".join(repr(x) if not isinstance(x, str) else x for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
