"""Generative evidence world: hierarchical Gaussian sources and measurements.

A world holds three source populations. popC is the population the suspect
source is drawn from when the prosecution hypothesis H1 is true. Under the
defence hypothesis H2 the suspect source comes from popD and the trace was
left by an unknown source from popT. Source means are Normal(mu, tau^2) and
every measurement of a source adds Normal(0, sigma^2) noise.

One case consists of n_trace measurements x of the trace source and n_ref
reference measurements y of the suspect source, plus the truth label. Cases
are generated from per-case counter streams keyed by (master seed, case
index), so case i is the same no matter how many cases are generated or in
which order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import kernels
from .kernels import CASE_FIRST_NORMAL_WORD, CASE_SLOT_TRUTH, stream_key, stream_keys

__all__ = [
    "CaseBatch",
    "CaseRecord",
    "CaseStream",
    "ConfigError",
    "Hypothesis",
    "NoiseModel",
    "PopulationModel",
    "ScenarioKind",
    "ScoreKind",
    "SourceParams",
    "WorldConfig",
    "generate_case",
    "generate_cases",
    "load_world",
    "sample_measurement",
    "sample_source",
    "world_from_json_dict",
    "world_to_json_dict",
]


class ConfigError(ValueError):
    """Raised when a configuration value or document is invalid."""


class Hypothesis(str, Enum):
    H1 = "H1"
    H2 = "H2"


class ScenarioKind(str, Enum):
    """Which population the prior-relevant constraint ties together.

    TraceCrimeRelevant: the trace-donor population is the crime-relevant one,
    so popC == popT. ReferenceCrimeRelevant: the suspect would have been
    sampled from the same pool under either hypothesis, so popC == popD.
    DistinctionIrrelevant: all three populations coincide.
    """

    TraceCrimeRelevant = "TraceCrimeRelevant"
    ReferenceCrimeRelevant = "ReferenceCrimeRelevant"
    DistinctionIrrelevant = "DistinctionIrrelevant"


class ScoreKind(str, Enum):
    SignedDifference = "SignedDifference"
    AbsoluteDifference = "AbsoluteDifference"


@dataclass(frozen=True)
class PopulationModel:
    """Normal(mu, tau^2) distribution of source means; tau may be zero."""

    mu: float
    tau: float

    def validate(self, label: str = "population") -> None:
        if not math.isfinite(self.mu):
            raise ConfigError(f"{label}.mu must be finite, got {self.mu!r}")
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ConfigError(f"{label}.tau must be finite and >= 0, got {self.tau!r}")


@dataclass(frozen=True)
class SourceParams:
    """Parameters of one concrete source: its mean."""

    theta: float


@dataclass(frozen=True)
class NoiseModel:
    """Measurement noise is Normal(0, sigma^2); sigma must be positive."""

    sigma: float

    def validate(self) -> None:
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise ConfigError(f"noise.sigma must be finite and > 0, got {self.sigma!r}")


@dataclass(frozen=True)
class WorldConfig:
    pop_c: PopulationModel
    pop_d: PopulationModel
    pop_t: PopulationModel
    noise: NoiseModel
    prior_h1: float
    scenario: ScenarioKind
    score_kind: ScoreKind
    n_trace: int = 1
    n_ref: int = 1

    def validate(self) -> "WorldConfig":
        """Check every field; returns self so call sites can chain."""
        self.pop_c.validate("popC")
        self.pop_d.validate("popD")
        self.pop_t.validate("popT")
        self.noise.validate()
        if not (0.0 < self.prior_h1 < 1.0):
            raise ConfigError(
                f"prior_h1 must lie strictly inside (0, 1), got {self.prior_h1!r}")
        if not isinstance(self.scenario, ScenarioKind):
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if not isinstance(self.score_kind, ScoreKind):
            raise ConfigError(f"unknown score_kind {self.score_kind!r}")
        for name, value in (("n_trace", self.n_trace), ("n_ref", self.n_ref)):
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if self.scenario is ScenarioKind.TraceCrimeRelevant and self.pop_c != self.pop_t:
            raise ConfigError("TraceCrimeRelevant requires popC == popT")
        if self.scenario is ScenarioKind.ReferenceCrimeRelevant and self.pop_c != self.pop_d:
            raise ConfigError("ReferenceCrimeRelevant requires popC == popD")
        if self.scenario is ScenarioKind.DistinctionIrrelevant and not (
                self.pop_c == self.pop_d == self.pop_t):
            raise ConfigError("DistinctionIrrelevant requires popC == popD == popT")
        return self

    # Per-role measurement-mean variances, used all over the LR engines.
    @property
    def var_trace_mean(self) -> float:
        return self.noise.sigma**2 / self.n_trace

    @property
    def var_ref_mean(self) -> float:
        return self.noise.sigma**2 / self.n_ref


@dataclass(frozen=True)
class CaseRecord:
    """One simulated case. truth == H1 implies trace_source == r."""

    truth: Hypothesis
    r: SourceParams
    trace_source: SourceParams
    x: list[float]
    y: list[float]

    @property
    def x_mean(self) -> float:
        return float(np.mean(self.x))

    @property
    def y_mean(self) -> float:
        return float(np.mean(self.y))


@dataclass
class CaseBatch:
    """Column-oriented collection of cases sharing one WorldConfig."""

    world: WorldConfig
    truth_h1: np.ndarray      # uint8, 1 where H1 holds
    theta_r: np.ndarray       # suspect source mean
    theta_trace: np.ndarray   # actual trace source mean (== theta_r under H1)
    x: np.ndarray             # (n, n_trace)
    y: np.ndarray             # (n, n_ref)
    x_mean: np.ndarray = field(init=False)
    y_mean: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.x_mean = self.x.mean(axis=1)
        self.y_mean = self.y.mean(axis=1)

    def __len__(self) -> int:
        return int(self.truth_h1.shape[0])

    def record(self, i: int) -> CaseRecord:
        return CaseRecord(
            truth=Hypothesis.H1 if self.truth_h1[i] else Hypothesis.H2,
            r=SourceParams(float(self.theta_r[i])),
            trace_source=SourceParams(float(self.theta_trace[i])),
            x=[float(v) for v in self.x[i]],
            y=[float(v) for v in self.y[i]],
        )


class CaseStream:
    """Sequential view of one counter stream: consume uniforms and normals.

    Draw j of a stream is a pure function of (key, j). The cursor only
    provides the familiar rng.normal() call style; two streams with the same
    key always replay the same values.
    """

    def __init__(self, key: np.uint64, cursor: int = 0) -> None:
        self.key = np.uint64(key)
        self.cursor = int(cursor)

    @classmethod
    def for_case(cls, master_seed: int, index: int) -> "CaseStream":
        return cls(stream_key(master_seed, index))

    def uniform(self) -> float:
        v = kernels.active.uniforms(self.key, self.cursor, 1)[0]
        self.cursor += 1
        return float(v)

    def normal(self) -> float:
        v = kernels.active.normals(self.key, self.cursor, 1)[0]
        self.cursor += 2
        return float(v)


def sample_source(pop: PopulationModel, rng: CaseStream) -> SourceParams:
    """Draw one source mean from a population."""
    return SourceParams(pop.mu + pop.tau * rng.normal())


def sample_measurement(src: SourceParams, noise: NoiseModel, rng: CaseStream) -> float:
    """Measure a source once."""
    return src.theta + noise.sigma * rng.normal()


def generate_case(world: WorldConfig, rng: CaseStream) -> CaseRecord:
    """Generate a single case from a fresh case stream.

    The stream layout is fixed: truth uniform, suspect-source normal,
    alternative-source normal (consumed even under H1 so the layout does not
    depend on the truth draw), n_trace trace normals, n_ref reference
    normals. generate_cases produces bitwise identical values for the same
    (master seed, case index).
    """
    u = rng.uniform()
    truth = Hypothesis.H1 if u < world.prior_h1 else Hypothesis.H2
    if truth is Hypothesis.H1:
        r = sample_source(world.pop_c, rng)
        alt = sample_source(world.pop_t, rng)  # discarded, keeps layout fixed
        trace_source = r
    else:
        r = sample_source(world.pop_d, rng)
        trace_source = sample_source(world.pop_t, rng)
    x = [sample_measurement(trace_source, world.noise, rng) for _ in range(world.n_trace)]
    y = [sample_measurement(r, world.noise, rng) for _ in range(world.n_ref)]
    return CaseRecord(truth=truth, r=r, trace_source=trace_source, x=x, y=y)


def generate_cases(
    world: WorldConfig,
    master_seed: int,
    n_cases: int,
    force_truth: Hypothesis | None = None,
) -> CaseBatch:
    """Generate n_cases cases; case i only depends on (master_seed, i).

    force_truth pins every case to one hypothesis (the truth uniform is still
    consumed so records keep the same values they would have in a mixed run).
    """
    if n_cases < 1:
        raise ConfigError(f"n_cases must be >= 1, got {n_cases}")
    keys = stream_keys(master_seed, np.arange(n_cases, dtype=np.uint64))
    if force_truth is None:
        force = -1
    elif force_truth is Hypothesis.H1:
        force = 1
    elif force_truth is Hypothesis.H2:
        force = 0
    else:
        raise ConfigError(
            f"force_truth must be a Hypothesis or None, got {force_truth!r}")
    truth_h1, theta_r, theta_trace, x, y = kernels.active.case_batch(
        keys, world.n_trace, world.n_ref,
        world.pop_c.mu, world.pop_c.tau,
        world.pop_d.mu, world.pop_d.tau,
        world.pop_t.mu, world.pop_t.tau,
        world.noise.sigma, world.prior_h1, force)
    return CaseBatch(world=world, truth_h1=truth_h1, theta_r=theta_r,
                     theta_trace=theta_trace, x=x, y=y)


# ---------------------------------------------------------------------------
# JSON configuration

_POP_KEYS = {"mu", "tau"}
_NOISE_KEYS = {"sigma"}
_WORLD_KEYS = {"popC", "popD", "popT", "noise", "prior_h1", "scenario",
               "score_kind", "n_trace", "n_ref"}
_WORLD_REQUIRED = _WORLD_KEYS - {"n_trace", "n_ref"}


def _check_keys(doc: dict, allowed: set[str], required: set[str], path: str) -> None:
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {path}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"missing key(s) {sorted(missing)} in {path}")


def _pop_from_dict(doc: dict, path: str) -> PopulationModel:
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must be an object with mu and tau")
    _check_keys(doc, _POP_KEYS, _POP_KEYS, path)
    return PopulationModel(mu=float(doc["mu"]), tau=float(doc["tau"]))


def world_from_json_dict(doc: dict, path: str = "world") -> WorldConfig:
    """Build and validate a WorldConfig from a parsed JSON object."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must be a JSON object")
    _check_keys(doc, _WORLD_KEYS, _WORLD_REQUIRED, path)
    noise_doc = doc["noise"]
    if not isinstance(noise_doc, dict):
        raise ConfigError(f"{path}.noise must be an object with sigma")
    _check_keys(noise_doc, _NOISE_KEYS, _NOISE_KEYS, f"{path}.noise")
    try:
        scenario = ScenarioKind(doc["scenario"])
    except ValueError:
        raise ConfigError(
            f"{path}.scenario must be one of {[s.value for s in ScenarioKind]}, "
            f"got {doc['scenario']!r}") from None
    try:
        score_kind = ScoreKind(doc["score_kind"])
    except ValueError:
        raise ConfigError(
            f"{path}.score_kind must be one of {[s.value for s in ScoreKind]}, "
            f"got {doc['score_kind']!r}") from None
    world = WorldConfig(
        pop_c=_pop_from_dict(doc["popC"], f"{path}.popC"),
        pop_d=_pop_from_dict(doc["popD"], f"{path}.popD"),
        pop_t=_pop_from_dict(doc["popT"], f"{path}.popT"),
        noise=NoiseModel(sigma=float(noise_doc["sigma"])),
        prior_h1=float(doc["prior_h1"]),
        scenario=scenario,
        score_kind=score_kind,
        n_trace=int(doc.get("n_trace", 1)),
        n_ref=int(doc.get("n_ref", 1)),
    )
    return world.validate()


def world_to_json_dict(world: WorldConfig) -> dict:
    return {
        "popC": {"mu": world.pop_c.mu, "tau": world.pop_c.tau},
        "popD": {"mu": world.pop_d.mu, "tau": world.pop_d.tau},
        "popT": {"mu": world.pop_t.mu, "tau": world.pop_t.tau},
        "noise": {"sigma": world.noise.sigma},
        "prior_h1": world.prior_h1,
        "scenario": world.scenario.value,
        "score_kind": world.score_kind.value,
        "n_trace": world.n_trace,
        "n_ref": world.n_ref,
    }


def load_world(path: str | Path) -> WorldConfig:
    """Load a WorldConfig from a JSON file, with line-anchored parse errors."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    return world_from_json_dict(doc, path=str(path))


def with_population(world: WorldConfig, **pops: PopulationModel) -> WorldConfig:
    """Copy of world with populations replaced (pop_c=, pop_d=, pop_t=).

    The copy is validated, so a replacement that contradicts the world's
    scenario is rejected rather than silently producing impossible data.
    """
    return replace(world, **pops).validate()
