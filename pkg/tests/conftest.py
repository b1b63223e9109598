import numpy as np
import pytest

from logifpt import (DerivedParams, Direction, FptProblem, ModelParams, SimConfig,
                     derive_params, sample_fpt)

# base parameter set used throughout: large-scale harvested population
FISHERIES = dict(r=0.71, K=8.05e7, q=3.30e-6, E=104540.0, sigma=0.2, x0=100.0)


def fisheries_at(x0: float) -> DerivedParams:
    return derive_params(ModelParams(**{**FISHERIES, "x0": x0}))


@pytest.fixture(scope="session")
def fisheries_params() -> ModelParams:
    return ModelParams(**FISHERIES)


@pytest.fixture(scope="session")
def fisheries(fisheries_params) -> DerivedParams:
    return derive_params(fisheries_params)


def scenario_grid():
    """Six golden scenarios: three up, three down, spanning v*y from ~1e-3 to ~26."""
    return [
        ("up_1e4", fisheries_at(100.0), FptProblem(Direction.UP, 1e4)),
        ("up_1e5", fisheries_at(100.0), FptProblem(Direction.UP, 1e5)),
        ("up_large", fisheries_at(2.01e7), FptProblem(Direction.UP, 3.91e7)),
        ("down_deep", fisheries_at(3.91e7), FptProblem(Direction.DOWN, 2.01e7)),
        ("down_mid", fisheries_at(3.91e7), FptProblem(Direction.DOWN, 2.8e7)),
        ("down_high", fisheries_at(6.0e7), FptProblem(Direction.DOWN, 3.91e7)),
    ]


@pytest.fixture(scope="session")
def scenarios():
    return scenario_grid()


@pytest.fixture(scope="session")
def fisheries_mc_sample(fisheries):
    """The big benchmark run shared by the Monte Carlo and density criteria."""
    cfg = SimConfig(problem=FptProblem(Direction.UP, 1e4), paths=100_000,
                    dt=1e-3, horizon=60.0, seed=20240)
    return sample_fpt(fisheries, cfg)


def rel_err(a, b) -> float:
    """|a-b| / |b| with a guard for b = 0."""
    a = float(a)
    b = float(b)
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
