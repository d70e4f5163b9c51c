"""Seeded synthetic data from a fully specified hurdle model.

A :class:`SimulationDesign` fixes the sample size, the covariate
generators, the model spec, the true coefficients (keyed by parameter
name), and a mandatory seed. Generation composes the model exactly as it
is estimated: a Bernoulli hurdle crossing, a multinomial regime draw among
the spikes and the truncated-NB component, and gamma-Poisson negative
binomial variates with zeros rejected and redrawn.

Randomness comes from numpy's counter-based Philox generator with one
substream per draw stage (each covariate, the hurdle uniforms, the regime
uniforms, and each rejection round), keyed as (seed, stage id). Within a
stage, row i always occupies position i of the stream, so partitions of
the rows could be generated in parallel by advancing the counter without
replaying earlier state. Identical designs therefore reproduce
byte-identical datasets.

The emitted dataset carries a ``regime`` bookkeeping column: -1 for rows
with a zero response, the inflated value for spike-regime rows, and 0 for
truncated-NB rows. It exists for oracle tests and is not a covariate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .distributions import mixture_weights
from .estimation import layout_for
from .model_spec import (
    CategoricalMeta,
    DataError,
    Dataset,
    ModelSpec,
    SpecError,
    build_design,
    model_config_from_dict,
)

__all__ = [
    "NormalGen",
    "UniformGen",
    "CategoricalGen",
    "SimulationDesign",
    "simulate",
    "load_simulation_design",
    "REGIME_COLUMN",
]

REGIME_COLUMN = "regime"

_MASK64 = (1 << 64) - 1
_STAGE_HURDLE = 1
_STAGE_REGIME = 2
_STAGE_COVARIATE_BASE = 100
_STAGE_TNB_BASE = 10_000
_MAX_REDRAWS = 10**6


def _stage_rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, stage & _MASK64]))


@dataclass(frozen=True)
class NormalGen:
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise SpecError("normal generator needs sd > 0")

    def draw(self, rng, n):
        return rng.normal(self.mean, self.sd, size=n)

    def to_dict(self):
        return {"dist": "normal", "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class UniformGen:
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if not self.low < self.high:
            raise SpecError("uniform generator needs low < high")

    def draw(self, rng, n):
        return rng.uniform(self.low, self.high, size=n)

    def to_dict(self):
        return {"dist": "uniform", "low": self.low, "high": self.high}


@dataclass(frozen=True)
class CategoricalGen:
    levels: tuple[str, ...]
    probs: tuple[float, ...]
    reference: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(lv) for lv in self.levels))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.levels) != len(self.probs) or len(self.levels) < 2:
            raise SpecError("categorical generator needs matching levels and probs (>= 2)")
        if any(p <= 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-9:
            raise SpecError("categorical probs must be positive and sum to 1")
        if self.reference is not None and self.reference not in self.levels:
            raise SpecError(f"reference {self.reference!r} not among levels")

    def draw(self, rng, n):
        u = rng.uniform(size=n)
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, u, side="right").clip(0, len(self.levels) - 1)
        return np.asarray(self.levels, dtype=object)[idx].astype(str)

    def meta(self) -> CategoricalMeta:
        return CategoricalMeta(self.levels, self.reference or self.levels[0])

    def to_dict(self):
        out = {"dist": "categorical", "levels": list(self.levels), "probs": list(self.probs)}
        if self.reference is not None:
            out["ref"] = self.reference
        return out


def _generator_from_dict(d: dict):
    kind = d.get("dist")
    if kind == "normal":
        return NormalGen(float(d.get("mean", 0.0)), float(d.get("sd", 1.0)))
    if kind == "uniform":
        return UniformGen(float(d.get("low", 0.0)), float(d.get("high", 1.0)))
    if kind == "categorical":
        return CategoricalGen(
            tuple(d["levels"]), tuple(d["probs"]), d.get("ref")
        )
    raise SpecError(f"unknown covariate generator {kind!r}")


@dataclass
class SimulationDesign:
    """Ground truth for a synthetic dataset; the seed is mandatory."""

    n: int
    seed: int
    covariates: dict[str, object]
    spec: ModelSpec
    coefficients: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise SpecError("n must be >= 1")
        if self.seed is None:
            raise SpecError("a seed is mandatory; there is no implicit entropy")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "covariates": {k: g.to_dict() for k, g in self.covariates.items()},
            "spec": self.spec.to_config_dict(),
            "coefficients": dict(self.coefficients),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationDesign":
        return cls(
            n=int(d["n"]),
            seed=int(d["seed"]),
            covariates={k: _generator_from_dict(g) for k, g in d["covariates"].items()},
            spec=model_config_from_dict(d["spec"]),
            coefficients={k: float(v) for k, v in d.get("coefficients", {}).items()},
        )

    @classmethod
    def from_json(cls, text: str) -> "SimulationDesign":
        return cls.from_dict(json.loads(text))


def load_simulation_design(path) -> SimulationDesign:
    """Read a TOML simulation design; model sections share the config grammar."""
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"{path}: {exc}") from None
    for key in ("n", "seed", "covariates"):
        if key not in cfg:
            raise SpecError(f"simulation design must declare {key!r}")
    spec_cfg = {k: v for k, v in cfg.items() if k not in ("n", "seed", "covariates", "coefficients")}
    return SimulationDesign(
        n=int(cfg["n"]),
        seed=int(cfg["seed"]),
        covariates={k: _generator_from_dict(g) for k, g in cfg["covariates"].items()},
        spec=model_config_from_dict(spec_cfg),
        coefficients={k: float(v) for k, v in cfg.get("coefficients", {}).items()},
    )


def _coefficient_vector(design, matrices, layout):
    names = layout.names(matrices, design.spec.inflated)
    vec = np.zeros(layout.size)
    index = {name: i for i, name in enumerate(names)}
    unknown = [k for k in design.coefficients if k not in index]
    if unknown:
        raise SpecError(
            f"coefficients do not match any design column: {sorted(unknown)}; "
            f"known names: {names}"
        )
    for key, value in design.coefficients.items():
        vec[index[key]] = value
    return vec


def simulate(design: SimulationDesign) -> Dataset:
    """Generate a dataset from the design; identical input, identical bytes."""
    n, seed = design.n, design.seed
    columns = {}
    categorical = {}
    for i, (name, gen) in enumerate(design.covariates.items()):
        rng = _stage_rng(seed, _STAGE_COVARIATE_BASE + i)
        columns[name] = gen.draw(rng, n)
        if isinstance(gen, CategoricalGen):
            categorical[name] = gen.meta()
    covariate_data = Dataset(columns, categorical=categorical)

    matrices = build_design(design.spec, covariate_data, check_rank=False)
    layout = layout_for(matrices, design.spec.inflated)
    params = _coefficient_vector(design, matrices, layout)
    b0, b1, b2, gamma = layout.unpack(params)

    p_pos = expit(matrices.hurdle @ b0)
    mu = np.exp(matrices.location @ b1)
    theta = np.exp(matrices.dispersion @ b2)
    values = design.spec.inflated.values
    if values:
        weights = mixture_weights(matrices.mixing @ gamma.T)
    else:
        weights = np.ones((n, 1))

    y = np.zeros(n, dtype=np.int64)
    regime = np.full(n, -1, dtype=np.int64)
    positive = _stage_rng(seed, _STAGE_HURDLE).uniform(size=n) < p_pos
    u_regime = _stage_rng(seed, _STAGE_REGIME).uniform(size=n)
    cum = np.cumsum(weights, axis=1)
    regime_idx = (u_regime[:, None] > cum).sum(axis=1)
    for j, v in enumerate(values):
        rows = positive & (regime_idx == j)
        y[rows] = v
        regime[rows] = v
    tnb_rows = np.nonzero(positive & (regime_idx == len(values)))[0]
    regime[tnb_rows] = 0

    pending = tnb_rows
    redraws = 0
    round_no = 0
    while pending.size:
        if redraws > _MAX_REDRAWS:
            raise DataError(
                "zero-rejection sampling exceeded 10^6 redraws; "
                "the location parameter is numerically zero for some rows"
            )
        lam = _stage_rng(seed, _STAGE_TNB_BASE + 2 * round_no).gamma(
            shape=theta[pending], scale=mu[pending] / theta[pending]
        )
        draws = _stage_rng(seed, _STAGE_TNB_BASE + 2 * round_no + 1).poisson(lam)
        done = draws > 0
        y[pending[done]] = draws[done]
        pending = pending[~done]
        redraws += int(pending.size)
        round_no += 1

    out_columns = dict(columns)
    out_columns[design.spec.response] = y
    out_columns[REGIME_COLUMN] = regime
    return Dataset(out_columns, categorical=categorical, response=design.spec.response)
