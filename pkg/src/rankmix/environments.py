"""Trajectory dataset builders and simulated experts.

Two generators: a synthetic 3-D environment with three concentric Gaussian
feature clouds (10 wide, 100 medium, 1000 tight) and the deterministic Fetch
robot set crossing shelf x speed x grasp x placement into 351 featurized
trajectories. Simulated experts hold a ground-truth mixture and answer
queries by sampling from its response distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .model import Dataset, MixtureParams, RankingQuery, RankingResponse, Trajectory
from .posterior import as_generator, uniform_simplex

SYNTHETIC_GROUPS = ((10, 1.0), (100, math.sqrt(0.1)), (1000, 0.1))


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian feature clouds: ``groups`` lists (count, stddev) per cloud."""

    dims: int = 3
    groups: tuple[tuple[int, float], ...] = SYNTHETIC_GROUPS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dims < 1:
            raise InvalidInputError("dims must be positive")
        for count, stddev in self.groups:
            if count < 1 or stddev <= 0:
                raise InvalidInputError("group counts and stddevs must be positive")

    @property
    def total(self) -> int:
        return sum(c for c, _ in self.groups)


def gen_synthetic_dataset(spec: SyntheticSpec = SyntheticSpec()) -> Dataset:
    """Draw the synthetic trajectory set; ids are "syn-0001", "syn-0002", ..."""
    rng = np.random.default_rng(spec.seed)
    blocks = [stddev * rng.normal(size=(count, spec.dims))
              for count, stddev in spec.groups]
    feats = np.concatenate(blocks, axis=0)
    group_of = np.repeat(np.arange(len(spec.groups)),
                         [c for c, _ in spec.groups])
    width = max(4, len(str(spec.total)))
    return Dataset([
        Trajectory(f"syn-{i + 1:0{width}d}", feats[i],
                   {"group": str(int(group_of[i]) + 1)})
        for i in range(spec.total)
    ])


@dataclass(frozen=True)
class FetchTrajectorySpec:
    """One Fetch pick-and-place behavior before featurization."""

    target_shelf: int
    y_speed: float
    y_grasp: float
    y_height: float
    y_width: float
    y_success: int

    def __post_init__(self) -> None:
        if self.target_shelf not in (1, 2, 3):
            raise InvalidInputError(f"target_shelf must be 1..3, got {self.target_shelf}")
        for name in ("y_speed", "y_grasp", "y_height", "y_width"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidInputError(f"{name} must lie in [0, 1], got {v}")
        if self.y_success not in (0, 1):
            raise InvalidInputError(f"y_success must be 0 or 1, got {self.y_success}")


def fetch_featurize(spec: FetchTrajectorySpec) -> np.ndarray:
    """The 13-dimensional Fetch feature map.

    Shelf one-hot, then each continuous measure y paired with its uncertainty
    term y(1-y), then the grasp/width compatibility 1-(y_grasp-y_width)^2,
    then the success bit.
    """
    s, g, h, w = spec.y_speed, spec.y_grasp, spec.y_height, spec.y_width
    return np.array([
        1.0 if spec.target_shelf == 1 else 0.0,
        1.0 if spec.target_shelf == 2 else 0.0,
        1.0 if spec.target_shelf == 3 else 0.0,
        s, s * (1.0 - s),
        g, g * (1.0 - g),
        h, h * (1.0 - h),
        w, w * (1.0 - w),
        1.0 - (g - w) ** 2,
        float(spec.y_success),
    ])


# 3x3 grid plus the four quarter points: the 13 in-shelf placements
FETCH_PLACEMENTS: tuple[tuple[float, float], ...] = (
    (0.0, 0.0), (0.0, 0.5), (0.0, 1.0),
    (0.5, 0.0), (0.5, 0.5), (0.5, 1.0),
    (1.0, 0.0), (1.0, 0.5), (1.0, 1.0),
    (0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75),
)

FETCH_LEVELS = (0.0, 0.5, 1.0)


def fetch_success(target_shelf: int, y_width: float) -> int:
    """Placement survives unless it lands deep in the crowded middle shelf."""
    return 0 if target_shelf == 2 and y_width > 0.5 else 1


def gen_fetch_dataset() -> Dataset:
    """All 351 = 3 shelf x 3 speed x 3 grasp x 13 placement combinations.

    Deterministic: ids and features are byte-identical across runs. Meta
    carries the generating settings for UI display.
    """
    trajectories = []
    i = 0
    for shelf in (1, 2, 3):
        for speed in FETCH_LEVELS:
            for grasp in FETCH_LEVELS:
                for height, width in FETCH_PLACEMENTS:
                    i += 1
                    spec = FetchTrajectorySpec(
                        target_shelf=shelf, y_speed=speed, y_grasp=grasp,
                        y_height=height, y_width=width,
                        y_success=fetch_success(shelf, width))
                    trajectories.append(Trajectory(
                        f"fetch-{i:03d}", fetch_featurize(spec),
                        {"shelf": str(shelf), "speed": f"{speed:g}",
                         "grasp": f"{grasp:g}", "height": f"{height:g}",
                         "width": f"{width:g}",
                         "success": str(spec.y_success),
                         "description": (
                             f"shelf {shelf}, speed {speed:g}, grasp {grasp:g}, "
                             f"place ({height:g}, {width:g}), "
                             f"{'placed' if spec.y_success else 'dropped'}")}))
    return Dataset(trajectories)


@dataclass
class SimulatedExpertPopulation:
    """Ground-truth mixture answering ranking queries stochastically."""

    true_params: MixtureParams
    seed: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._rng = np.random.default_rng(self.seed)

    def respond(self, dataset: Dataset, query: RankingQuery,
                rng: "np.random.Generator | None" = None) -> RankingResponse:
        from .model import sample_response
        gen = self._rng if rng is None else rng
        feats = dataset.features_for(query.trajectory_ids)
        order = sample_response(self.true_params, feats, gen)
        return RankingResponse([query.trajectory_ids[i] for i in order])


def sample_expert_population(n_modes: int, dimension: int,
                             rng: "int | np.random.Generator",
                             response_seed: int = 0) -> SimulatedExpertPopulation:
    """Draw ground-truth parameters from the prior: Gaussian weights, uniform
    simplex mixing (normalized exponential spacings)."""
    gen = as_generator(rng)
    weights = gen.normal(size=(n_modes, dimension))
    mixing = np.ones(1) if n_modes == 1 else uniform_simplex(gen, n_modes)
    return SimulatedExpertPopulation(MixtureParams(weights, mixing),
                                     seed=response_seed)
