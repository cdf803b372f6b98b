"""pytest conftest file with fixtures and else."""

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import pytest

from cdrcommute.config import AnalysisConfig, FilterConfig, WorldConfig
from cdrcommute.objects import CallEvent, TowerRegistry
from cdrcommute.synth import World, generate_world, simulate_calls, write_world

from .fixtures import TOWERS, TOWERS_CSV, cdr_csv

# Small enough to analyze in a few seconds, busy enough that most agents call
# inside both commute windows every day
SMALL_WORLD = {
    "seed": "11",
    "n_towers": "150",
    "region_km": "20",
    "n_agents": "40",
    "days": "7",
    "call_rate_min": "4",
    "call_rate_max": "4",
    "n_secondary": "8",
}


@dataclass
class WrittenWorld:
    """A synthetic world together with the files it was written to."""

    world: World
    directory: Path

    @property
    def towers(self) -> Path:
        return self.directory / "towers.csv"

    @property
    def calls(self) -> Path:
        return self.directory / "calls.csv"

    @property
    def gps(self) -> Path:
        return self.directory / "gps.csv"

    @property
    def truth(self) -> Path:
        return self.directory / "ground_truth.csv"


def build_world(directory: Path, **overrides: str) -> WrittenWorld:
    """Generate, simulate and write a world from :data:`SMALL_WORLD` settings."""
    cfg = WorldConfig.from_mapping({**SMALL_WORLD, **overrides})
    world = generate_world(cfg)
    calls, gps = simulate_calls(world)
    write_world(world, calls, gps, directory)
    return WrittenWorld(world, directory)


@pytest.fixture
def registry() -> TowerRegistry:
    """The three-tower registry of :mod:`tests.fixtures`."""
    return TowerRegistry(TOWERS)


@pytest.fixture
def filter_config() -> FilterConfig:
    """Default filter thresholds."""
    return FilterConfig()


@pytest.fixture
def cdr_config(tmp_path):
    """Write calls and the fixture towers to disk and point a config at them."""

    def make_config(events: Iterable[CallEvent], **changes) -> AnalysisConfig:
        towers = tmp_path / "towers.csv"
        towers.write_text(TOWERS_CSV, encoding="utf-8")
        cdr = tmp_path / "calls.csv"
        cdr.write_text(cdr_csv(list(events)), encoding="utf-8")
        cfg = AnalysisConfig(cdr=cdr, towers=towers, outdir=tmp_path / "out")
        return cfg.replace(**changes) if changes else cfg

    return make_config


@pytest.fixture(scope="session")
def small_world(tmp_path_factory) -> WrittenWorld:
    """A seeded multimodal world written to disk once per session."""
    return build_world(tmp_path_factory.mktemp("world"))


@pytest.fixture(scope="session")
def car_world(tmp_path_factory) -> WrittenWorld:
    """A seeded car-only world, GPS traces included."""
    return build_world(
        tmp_path_factory.mktemp("car_world"),
        regime="car_only",
        n_agents="20",
        days="5",
    )
