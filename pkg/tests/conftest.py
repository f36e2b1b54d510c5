import json
from importlib import resources

import pytest

from lrsim.genmodel import (
    NoiseModel,
    PopulationModel,
    ScenarioKind,
    ScoreKind,
    WorldConfig,
    world_from_json_dict,
)


def make_world(**overrides) -> WorldConfig:
    base = dict(
        pop_c=PopulationModel(0.0, 1.0),
        pop_d=PopulationModel(0.0, 1.0),
        pop_t=PopulationModel(1.0, 1.0),
        noise=NoiseModel(0.5),
        prior_h1=0.5,
        scenario=ScenarioKind.ReferenceCrimeRelevant,
        score_kind=ScoreKind.SignedDifference,
        n_trace=1,
        n_ref=1,
    )
    base.update(overrides)
    return WorldConfig(**base).validate()


def packaged_world(name: str) -> WorldConfig:
    doc = json.loads(resources.files("lrsim.data").joinpath(name).read_text())
    return world_from_json_dict(doc)


@pytest.fixture
def default_world() -> WorldConfig:
    return packaged_world("default_world.json")


@pytest.fixture
def illcond_world() -> WorldConfig:
    return packaged_world("illcond_world.json")
