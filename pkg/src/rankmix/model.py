"""Data model and ranking likelihood for mixtures of linear reward functions.

A trajectory is an opaque item with a fixed-length feature vector. A mixture
of M linear reward functions scores trajectory xi under mode m as
``w_m . phi(xi)``; a ranking query over K trajectories is answered with a full
ordering, best first, distributed per mode as a Plackett-Luce model and
marginally as the mixing-weighted average over modes.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateInputError, InvalidInputError

MAX_ENUMERATION_SIZE = 8


@dataclass(frozen=True)
class Trajectory:
    """An item that can appear in a ranking query."""

    id: str
    features: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 1:
            raise InvalidInputError(f"features must be 1-D, got shape {feats.shape}")
        if not np.isfinite(feats).all():
            raise InvalidInputError(f"non-finite features for trajectory {self.id!r}")
        object.__setattr__(self, "features", feats)


class Dataset:
    """An ordered collection of trajectories with unique ids.

    Iterates in insertion order; lookup by id or position. ``feature_matrix``
    is a read-only ``(n, d)`` view maintained for bulk math.
    """

    def __init__(self, trajectories: Sequence[Trajectory], dimension: int | None = None):
        trajectories = list(trajectories)
        if not trajectories:
            raise DegenerateInputError("dataset must contain at least one trajectory")
        dims = {t.features.shape[0] for t in trajectories}
        if len(dims) > 1:
            raise InvalidInputError(f"inconsistent feature dimensions: {sorted(dims)}")
        d = dims.pop()
        if dimension is not None and dimension != d:
            raise InvalidInputError(f"declared dimension {dimension} != feature length {d}")
        ids = [t.id for t in trajectories]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise InvalidInputError(f"duplicate trajectory ids: {dup}")
        self._trajectories = trajectories
        self._by_id = {t.id: i for i, t in enumerate(trajectories)}
        self._features = np.stack([t.features for t in trajectories])
        self._features.setflags(write=False)

    @property
    def dimension(self) -> int:
        return self._features.shape[1]

    @property
    def feature_matrix(self) -> np.ndarray:
        return self._features

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self._trajectories]

    def __len__(self) -> int:
        return len(self._trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self._trajectories)

    def __contains__(self, traj_id: str) -> bool:
        return traj_id in self._by_id

    def __getitem__(self, key: int | str) -> Trajectory:
        if isinstance(key, str):
            try:
                return self._trajectories[self._by_id[key]]
            except KeyError:
                raise KeyError(f"unknown trajectory id {key!r}") from None
        return self._trajectories[key]

    def index_of(self, traj_id: str) -> int:
        try:
            return self._by_id[traj_id]
        except KeyError:
            raise KeyError(f"unknown trajectory id {traj_id!r}") from None

    def features_for(self, traj_ids: Sequence[str]) -> np.ndarray:
        idx = [self.index_of(t) for t in traj_ids]
        return self._features[idx]

    def standardized(self) -> "Dataset":
        """Copy with per-dimension zero mean and unit variance.

        Constant dimensions are centered and left at zero variance.
        """
        mu = self._features.mean(axis=0)
        sd = self._features.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        scaled = (self._features - mu) / sd
        return Dataset([
            Trajectory(t.id, scaled[i], dict(t.meta))
            for i, t in enumerate(self._trajectories)
        ])

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "trajectories": [
                {"id": t.id, "features": [float(v) for v in t.features],
                 "meta": t.meta}
                for t in self._trajectories
            ],
        }

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, obj: dict[str, Any]) -> "Dataset":
        if not isinstance(obj, dict):
            raise InvalidInputError("dataset document must be a JSON object")
        missing = {"dimension", "trajectories"} - obj.keys()
        if missing:
            raise InvalidInputError(f"dataset document missing keys: {sorted(missing)}")
        rows = obj["trajectories"]
        if not isinstance(rows, list):
            raise InvalidInputError("'trajectories' must be a list")
        trajectories = []
        for row in rows:
            if not isinstance(row, dict) or "id" not in row or "features" not in row:
                raise InvalidInputError("each trajectory needs 'id' and 'features'")
            trajectories.append(Trajectory(
                id=str(row["id"]),
                features=np.asarray(row["features"], dtype=np.float64),
                meta=dict(row.get("meta", {})),
            ))
        return cls(trajectories, dimension=int(obj["dimension"]))

    @classmethod
    def load(cls, path: str, standardize: bool = False) -> "Dataset":
        with open(path) as fh:
            obj = json.load(fh)
        ds = cls.from_json_dict(obj)
        return ds.standardized() if standardize else ds


class MixtureParams:
    """One concrete parameter point: per-mode weights and mixing coefficients.

    ``weights`` has shape ``(M, d)``; ``mixing`` is a length-M point on the
    probability simplex (within 1e-9, then renormalized exactly).
    """

    def __init__(self, weights: np.ndarray, mixing: np.ndarray):
        weights = np.asarray(weights, dtype=np.float64)
        mixing = np.asarray(mixing, dtype=np.float64)
        if weights.ndim == 1:
            weights = weights[None, :]
        if weights.ndim != 2:
            raise InvalidInputError(f"weights must be (M, d), got shape {weights.shape}")
        if mixing.ndim != 1 or mixing.shape[0] != weights.shape[0]:
            raise InvalidInputError(
                f"mixing shape {mixing.shape} incompatible with weights {weights.shape}")
        if not np.isfinite(weights).all() or not np.isfinite(mixing).all():
            raise InvalidInputError("non-finite parameter values")
        if (mixing < 0).any() or abs(mixing.sum() - 1.0) > 1e-9:
            raise InvalidInputError("mixing must be nonnegative and sum to 1")
        self.weights = weights
        self.mixing = mixing / mixing.sum()
        self._log_mixing = _kernels.log_mixing(self.mixing)

    @property
    def n_modes(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    @property
    def log_mixing(self) -> np.ndarray:
        return self._log_mixing

    def reward(self, features: np.ndarray, mode: int | None = None) -> np.ndarray:
        """Linear rewards ``features @ w``; one mode or all (last axis M)."""
        features = np.asarray(features, dtype=np.float64)
        if mode is not None:
            return features @ self.weights[mode]
        return features @ self.weights.T

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "weights": [[float(v) for v in row] for row in self.weights],
            "mixing": [float(v) for v in self.mixing],
        }

    @classmethod
    def from_json_dict(cls, obj: dict[str, Any]) -> "MixtureParams":
        if not isinstance(obj, dict) or "weights" not in obj or "mixing" not in obj:
            raise InvalidInputError("mixture document needs 'weights' and 'mixing'")
        return cls(np.asarray(obj["weights"], dtype=np.float64),
                   np.asarray(obj["mixing"], dtype=np.float64))


@dataclass(frozen=True)
class RankingQuery:
    """A set of trajectory ids shown to the expert for full ranking."""

    trajectory_ids: tuple[str, ...]

    def __init__(self, trajectory_ids: Sequence[str]):
        ids = tuple(str(t) for t in trajectory_ids)
        if len(ids) < 2:
            raise DegenerateInputError("a query needs at least 2 trajectories")
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"query contains repeated trajectories: {ids}")
        object.__setattr__(self, "trajectory_ids", ids)

    @property
    def size(self) -> int:
        return len(self.trajectory_ids)

    def canonical_key(self) -> int:
        """Order-independent, process-independent 64-bit key for the set."""
        hashes = sorted(_kernels.stable_str_hash(t) for t in self.trajectory_ids)
        return _kernels.combine_keys(*hashes)


@dataclass(frozen=True)
class RankingResponse:
    """An expert's full ranking, best trajectory first."""

    ranking: tuple[str, ...]

    def __init__(self, ranking: Sequence[str]):
        ids = tuple(str(t) for t in ranking)
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"ranking contains repeated trajectories: {ids}")
        object.__setattr__(self, "ranking", ids)

    def matches_query(self, query: RankingQuery) -> bool:
        return set(self.ranking) == set(query.trajectory_ids) and \
            len(self.ranking) == query.size


class ObservationLog:
    """Accumulated (query, response) pairs in flattened feature form.

    Holds the stacked representation consumed by the likelihood kernels:
    ``flat_features`` is every response's feature rows in ranked order,
    ``offsets`` delimits responses.
    """

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self.pairs: list[tuple[RankingQuery, RankingResponse]] = []
        self._rows: list[np.ndarray] = []
        self._offsets = [0]

    def __len__(self) -> int:
        return len(self.pairs)

    def record(self, query: RankingQuery, response: RankingResponse) -> None:
        if not response.matches_query(query):
            raise InvalidInputError(
                f"response {response.ranking} is not a permutation of query "
                f"{query.trajectory_ids}")
        feats = self.dataset.features_for(response.ranking)
        self.pairs.append((query, response))
        self._rows.append(feats)
        self._offsets.append(self._offsets[-1] + feats.shape[0])

    @property
    def flat_features(self) -> np.ndarray:
        if not self._rows:
            return np.zeros((0, self.dataset.dimension))
        return np.concatenate(self._rows, axis=0)

    @property
    def offsets(self) -> np.ndarray:
        return np.asarray(self._offsets, dtype=np.int64)


def ranking_features(dataset: Dataset, ranking: Sequence[str]) -> np.ndarray:
    return dataset.features_for(ranking)


def log_response_likelihood(params: MixtureParams, feats: np.ndarray) -> float:
    """log Pr(ranking | params) for feature rows given best first.

    Per mode this is the Plackett-Luce sequential-choice likelihood of the
    observed order; modes are combined through the mixing coefficients. All
    arithmetic is in log space.
    """
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] != params.dimension:
        raise InvalidInputError(
            f"feature block shape {feats.shape} incompatible with dimension "
            f"{params.dimension}")
    if feats.shape[0] < 1:
        raise DegenerateInputError("ranking must contain at least one item")
    return float(_kernels.ranking_loglik(params.weights, params.log_mixing, feats))


def response_likelihood(params: MixtureParams, feats: np.ndarray) -> float:
    return math.exp(log_response_likelihood(params, feats))


def log_likelihood_per_sample(weights: np.ndarray, log_mix: np.ndarray,
                              feats: np.ndarray) -> np.ndarray:
    """Vectorized log Pr(ranking | theta_i) over stacked samples.

    ``weights``: (N, M, d); ``log_mix``: (N, M); returns (N,).
    """
    return np.asarray(_kernels.ranking_loglik_many(
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(log_mix, dtype=np.float64),
        np.ascontiguousarray(feats, dtype=np.float64)))


def sample_response(params: MixtureParams, feats: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """Draw a ranking: pick a mode by mixing weight, then a Plackett-Luce
    sequential draw under that mode. Returns index order into ``feats``."""
    feats = np.asarray(feats, dtype=np.float64)
    rewards = np.ascontiguousarray(params.reward(feats).T)  # (M, K)
    u = rng.random(feats.shape[0])
    return np.asarray(_kernels.sample_ranking(rewards, params.mixing, u))


def enumerate_response_distribution(
        params: MixtureParams, feats: np.ndarray) -> dict[tuple[int, ...], float]:
    """Exact probability of every permutation of up to 8 items."""
    feats = np.asarray(feats, dtype=np.float64)
    K = feats.shape[0]
    if K > MAX_ENUMERATION_SIZE:
        raise InvalidInputError(
            f"refusing to enumerate {K}! permutations (limit {MAX_ENUMERATION_SIZE})")
    out = {}
    for perm in itertools.permutations(range(K)):
        out[perm] = response_likelihood(params, feats[list(perm)])
    return out
