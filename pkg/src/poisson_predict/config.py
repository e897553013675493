"""Experiment configuration (JSON) for the command line tools.

Schema (all keys optional except ``r`` and ``s``)::

    {
      "r": [1, 2, 3],                      # observation exposures
      "s": [2, 1, 4],                      # prediction exposures
      "prior": "jeffreys",                 # jeffreys | power | theorem-shrinkage | explicit
      "beta": [0.5, 0.5, 0.5],             # required for power / explicit
      "alpha": 0.5, "gamma": [...],        # explicit only
      "lambda_grid": [[0.1, 1, 5], {"logspace": {"start": 0.1, "stop": 5, "num": 3}}, ...],
      "lambda_sample": 9,                  # random subset of the product grid
      "lambda_sample_seed": 0,
      "method": {"kind": "mc", "tail_mass": 1e-10, "n_samples": 50000, "seed": 0},
      "n_tau": 16,
      "cross_check": false,
      "sigma": 3.0,                        # dominance needs diff > sigma * diff_err
      "threads": null,
      "output": {"path": null, "format": "csv"}
    }

A ``lambda_grid`` holding a single entry is applied to every coordinate.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import rng as rngmod
from .model import ExposurePair, LambdaVector, PowerPrior, ShrinkagePrior, jeffreys_prior, theorem_prior
from .risk import ExactTruncated, MonteCarloX

PRIOR_KINDS = ("jeffreys", "power", "theorem-shrinkage", "explicit")
FORMATS = ("csv", "jsonl")
THREADS_ENV = "POISSON_PREDICT_THREADS"


class ConfigError(ValueError):
    """Malformed configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"field '{field}': {message}")
        self.field = field


def _floats(value, name: str, positive: bool = True) -> list[float]:
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(name, "expected a non-empty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(name, f"not a finite number: {v!r}")
        if positive and v <= 0:
            raise ConfigError(name, f"entries must be > 0, got {v!r}")
        out.append(float(v))
    return out


def _grid_spec(spec, name: str):
    if isinstance(spec, dict):
        if set(spec) != {"logspace"} or not isinstance(spec["logspace"], dict):
            raise ConfigError(name, "expected a list of values or {'logspace': {start, stop, num}}")
        ls = spec["logspace"]
        if set(ls) != {"start", "stop", "num"}:
            raise ConfigError(name + ".logspace", "needs exactly start, stop, num")
        start, stop = _floats([ls["start"], ls["stop"]], name + ".logspace")
        num = ls["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 1:
            raise ConfigError(name + ".logspace.num", "must be a positive integer")
        return {"logspace": {"start": start, "stop": stop, "num": num}}
    return _floats(spec, name)


def _expand(spec) -> list[float]:
    if isinstance(spec, dict):
        ls = spec["logspace"]
        return [float(v) for v in np.geomspace(ls["start"], ls["stop"], ls["num"])]
    return list(spec)


@dataclass
class MethodSpec:
    kind: str = "exact"
    tail_mass: float = 1e-10
    n_samples: int = 50000
    seed: int = 0

    def build(self):
        if self.kind == "exact":
            return ExactTruncated(self.tail_mass)
        return MonteCarloX(self.n_samples, self.seed, self.tail_mass)


@dataclass
class OutputSpec:
    path: str | None = None
    format: str = "csv"


@dataclass
class ExperimentConfig:
    r: list[float]
    s: list[float]
    prior: str = "jeffreys"
    beta: list[float] | None = None
    alpha: float | None = None
    gamma: list[float] | None = None
    lambda_grid: list = field(default_factory=lambda: [[1.0]])
    lambda_sample: int | None = None
    lambda_sample_seed: int = 0
    method: MethodSpec = field(default_factory=MethodSpec)
    n_tau: int = 16
    cross_check: bool = False
    sigma: float = 3.0
    threads: int | None = None
    output: OutputSpec = field(default_factory=OutputSpec)

    # -- (de)serialization ----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "expected a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(extra[0], "unknown key")
        for key in ("r", "s"):
            if key not in data:
                raise ConfigError(key, "required")
        kw = dict(data)
        kw["method"] = _method(data.get("method", {}))
        kw["output"] = _output(data.get("output", {}))
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"<json line {exc.lineno} column {exc.colno}>", exc.msg) from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        """Check types and ranges; raises ``ConfigError`` naming the field."""
        self.r = _floats(self.r, "r")
        self.s = _floats(self.s, "s")
        d = len(self.r)
        if len(self.s) != d:
            raise ConfigError("s", f"length {len(self.s)} differs from r ({d})")
        if self.prior not in PRIOR_KINDS:
            raise ConfigError("prior", f"must be one of {', '.join(PRIOR_KINDS)}")
        if self.beta is not None:
            self.beta = _floats(self.beta, "beta")
            if len(self.beta) != d:
                raise ConfigError("beta", f"length {len(self.beta)} differs from r ({d})")
        elif self.prior in ("power", "explicit"):
            raise ConfigError("beta", f"required for prior '{self.prior}'")
        if self.prior == "explicit":
            if self.alpha is None or isinstance(self.alpha, bool) or not isinstance(self.alpha, (int, float)):
                raise ConfigError("alpha", "required number for prior 'explicit'")
            if self.gamma is None:
                raise ConfigError("gamma", "required for prior 'explicit'")
            self.gamma = _floats(self.gamma, "gamma")
            if len(self.gamma) != d:
                raise ConfigError("gamma", f"length {len(self.gamma)} differs from r ({d})")
            self.alpha = float(self.alpha)
        if not isinstance(self.lambda_grid, list) or not self.lambda_grid:
            raise ConfigError("lambda_grid", "expected a non-empty list")
        if len(self.lambda_grid) not in (1, d):
            raise ConfigError("lambda_grid", f"needs 1 or {d} coordinate specs, got {len(self.lambda_grid)}")
        self.lambda_grid = [_grid_spec(g, f"lambda_grid[{i}]") for i, g in enumerate(self.lambda_grid)]
        if self.lambda_sample is not None:
            if isinstance(self.lambda_sample, bool) or not isinstance(self.lambda_sample, int) or self.lambda_sample < 1:
                raise ConfigError("lambda_sample", "must be a positive integer or null")
        _seed(self.lambda_sample_seed, "lambda_sample_seed")
        m = self.method
        if m.kind not in ("exact", "mc"):
            raise ConfigError("method.kind", "must be 'exact' or 'mc'")
        if isinstance(m.tail_mass, bool) or not isinstance(m.tail_mass, (int, float)) or not 0 < m.tail_mass <= 1e-4:
            raise ConfigError("method.tail_mass", "must lie in (0, 1e-4]")
        if isinstance(m.n_samples, bool) or not isinstance(m.n_samples, int) or m.n_samples < 1:
            raise ConfigError("method.n_samples", "must be a positive integer")
        _seed(m.seed, "method.seed")
        if isinstance(self.n_tau, bool) or not isinstance(self.n_tau, int) or self.n_tau < 8:
            raise ConfigError("n_tau", "must be an integer >= 8")
        if not isinstance(self.cross_check, bool):
            raise ConfigError("cross_check", "must be true or false")
        if isinstance(self.sigma, bool) or not isinstance(self.sigma, (int, float)) or not self.sigma >= 0:
            raise ConfigError("sigma", "must be a number >= 0")
        if self.threads is not None and (isinstance(self.threads, bool) or not isinstance(self.threads, int) or self.threads < 1):
            raise ConfigError("threads", "must be a positive integer or null")
        if self.output.format not in FORMATS:
            raise ConfigError("output.format", f"must be one of {', '.join(FORMATS)}")
        if self.output.path is not None and not isinstance(self.output.path, str):
            raise ConfigError("output.path", "must be a string or null")

    # -- model objects --------------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.r)

    def exposures(self) -> ExposurePair:
        return ExposurePair(tuple(self.r), tuple(self.s))

    def base_beta(self) -> tuple[float, ...]:
        if self.prior == "jeffreys" or self.beta is None:
            return jeffreys_prior(self.d).beta
        return tuple(self.beta)

    def power_prior(self) -> PowerPrior:
        return PowerPrior(self.base_beta())

    def shrinkage_prior(self):
        """Challenger prior for dominance: explicit parameters or the dominating construction."""
        if self.prior == "explicit":
            return ShrinkagePrior(self.alpha, tuple(self.beta), tuple(self.gamma))
        return theorem_prior(self.exposures(), self.base_beta())

    def selected_prior(self):
        """The single prior named by ``prior`` (for predict / estimate / risk)."""
        if self.prior in ("jeffreys", "power"):
            return self.power_prior()
        return self.shrinkage_prior()

    def method_obj(self):
        return self.method.build()

    def lambda_points(self) -> list[tuple[float, ...]]:
        """Grid points in row-major grid order (a sorted random subset if sampling)."""
        specs = self.lambda_grid if len(self.lambda_grid) == self.d else self.lambda_grid * self.d
        axes = [_expand(g) for g in specs]
        points = list(itertools.product(*axes))
        if self.lambda_sample is not None and self.lambda_sample < len(points):
            u = rngmod.uniforms(self.lambda_sample_seed, len(points), 1)[:, 0]
            keep = np.sort(np.argsort(u, kind="stable")[: self.lambda_sample])
            points = [points[i] for i in keep]
        for p in points:
            LambdaVector(p)
        return points

    def n_threads(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(THREADS_ENV, f"not an integer: {env!r}") from None
            if n < 1:
                raise ConfigError(THREADS_ENV, "must be >= 1")
            return n
        return os.cpu_count() or 1

    def provenance(self) -> dict[str, Any]:
        return {
            "r": self.r,
            "s": self.s,
            "prior": self.prior,
            "beta": list(self.base_beta()),
            "method": self.method.kind,
            "tail_mass": self.method.tail_mass,
            **({"n_samples": self.method.n_samples, "seed": self.method.seed} if self.method.kind == "mc" else {}),
        }


def _seed(value, name: str) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(name, "must be an integer")
    try:
        rngmod.check_seed(value)
    except ValueError as exc:
        raise ConfigError(name, str(exc)) from None


def _method(data) -> MethodSpec:
    if not isinstance(data, dict):
        raise ConfigError("method", "expected an object")
    extra = sorted(set(data) - set(MethodSpec.__dataclass_fields__))
    if extra:
        raise ConfigError(f"method.{extra[0]}", "unknown key")
    return MethodSpec(**data)


def _output(data) -> OutputSpec:
    if not isinstance(data, dict):
        raise ConfigError("output", "expected an object")
    extra = sorted(set(data) - set(OutputSpec.__dataclass_fields__))
    if extra:
        raise ConfigError(f"output.{extra[0]}", "unknown key")
    return OutputSpec(**data)
