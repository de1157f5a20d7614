"""Acquisition strategies: information gain, random, and volume removal.

Information gain scores a candidate query by the Monte-Carlo loss
L(Q) = sum_i [ log sum_j Pr(x_i | Q, theta_j) - log Pr(x_i | Q, theta_i) ]
over posterior samples theta_i, with x_i drawn from theta_i's own response
distribution; minimizing L maximizes the mutual information between the
response and the parameters, estimated as log N - L/N. The combinatorial
search over K-subsets runs simulated annealing with single-item swap moves.

Every x_i draw comes from a counter-based stream keyed by (seed, query set,
sample index), so a candidate's loss is a deterministic function of the query
set within a round no matter how often or in what order the annealer visits
it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidInputError, QuerySpaceExhaustedError
from .model import Dataset, RankingQuery
from .posterior import PosteriorSamples, as_generator

DEFAULT_N_SA = 10
DEFAULT_H_SA = 30
DEFAULT_T0_SA = 10.0
DEFAULT_GAMMA_SA = 0.9


@dataclass(frozen=True)
class AnnealSchedule:
    """Simulated-annealing search settings."""

    n_chains: int = DEFAULT_N_SA
    iters: int = DEFAULT_H_SA
    start_temp: float = DEFAULT_T0_SA
    cooling: float = DEFAULT_GAMMA_SA

    def __post_init__(self) -> None:
        if self.n_chains < 1 or self.iters < 1 or self.start_temp <= 0:
            raise InvalidInputError("annealing schedule values must be positive")
        if not 0.0 < self.cooling < 1.0:
            raise InvalidInputError("cooling factor must lie in (0, 1)")

    def temperature(self, iteration: int) -> float:
        """Temperature at 1-based iteration: T0 * gamma^(iteration-1)."""
        if iteration < 1:
            raise InvalidInputError("iterations are 1-based")
        return self.start_temp * self.cooling ** (iteration - 1)


def check_identifiability(n_modes: int, query_size: int) -> bool:
    """Whether M modes are guaranteed generically identifiable at query size K.

    The sufficient condition is M <= floor((K-2)/2)!. Violations are not
    fatal; callers emit a warning and proceed.
    """
    if n_modes < 1 or query_size < 2:
        raise InvalidInputError("need n_modes >= 1 and query_size >= 2")
    return n_modes <= factorial((query_size - 2) // 2)


def warn_if_unidentifiable(n_modes: int, query_size: int) -> None:
    if not check_identifiability(n_modes, query_size):
        warnings.warn(
            f"mixture with M={n_modes} modes at query size K={query_size} is "
            f"not guaranteed identifiable (requires M <= floor((K-2)/2)!)",
            stacklevel=2)


def _sorted_sample_arrays(samples: PosteriorSamples):
    order = samples.canonical_order()
    W = np.ascontiguousarray(samples.weights[order])
    A = np.ascontiguousarray(samples.mixing[order])
    return W, np.ascontiguousarray(_kernels.log_mixing(A)), A


def _set_key(id_hashes: Sequence[int]) -> int:
    return _kernels.combine_keys(*sorted(id_hashes))


def ig_loss(dataset: Dataset, query: RankingQuery, samples: PosteriorSamples,
            seed: int) -> float:
    """Information-gain loss of one query; lower is better, always >= 0.

    Depends only on the query's item set (items are canonicalized by dataset
    position) and pairs each posterior sample with its own derived response
    draw, after putting samples in canonical order.
    """
    if samples is None or len(samples) == 0:
        raise InvalidInputError("ig_loss needs posterior samples")
    W, logA, A = _sorted_sample_arrays(samples)
    idx = sorted(dataset.index_of(t) for t in query.trajectory_ids)
    qfeats = np.ascontiguousarray(dataset.feature_matrix[idx])
    key = _set_key([_kernels.stable_str_hash(t) for t in query.trajectory_ids])
    n, k = len(samples), len(idx)
    u = _kernels.derived_uniforms(seed, key, n * k).reshape(n, k)
    return float(_kernels.ig_loss(qfeats, W, logA, A, u))


def ig_mutual_information(dataset: Dataset, query: RankingQuery,
                          samples: PosteriorSamples, seed: int) -> float:
    """Monte-Carlo mutual information log N - L/N for the sample set."""
    n = len(samples)
    return math.log(n) - ig_loss(dataset, query, samples, seed) / n


def vr_objective(dataset: Dataset, query: RankingQuery,
                 samples: PosteriorSamples, seed: int) -> float:
    """Expected posterior mass removed, sum_i (1 - Pr(x_i | Q, theta_i));
    higher is better. Draws x_i exactly as ig_loss does."""
    if samples is None or len(samples) == 0:
        raise InvalidInputError("vr_objective needs posterior samples")
    W, logA, A = _sorted_sample_arrays(samples)
    idx = sorted(dataset.index_of(t) for t in query.trajectory_ids)
    qfeats = np.ascontiguousarray(dataset.feature_matrix[idx])
    key = _set_key([_kernels.stable_str_hash(t) for t in query.trajectory_ids])
    n, k = len(samples), len(idx)
    u = _kernels.derived_uniforms(seed, key, n * k).reshape(n, k)
    return float(_kernels.vr_objective(qfeats, W, logA, A, u))


def _anneal(dataset: Dataset, query_size: int, schedule: AnnealSchedule,
            loss_of_set: Callable[[tuple[int, ...]], float],
            gen: np.random.Generator):
    """Minimize a set-function by single-swap simulated annealing.

    Returns (best index tuple, best loss, per-chain best-so-far traces).
    """
    n = len(dataset)
    traces = []
    best_idx: tuple[int, ...] | None = None
    best_loss = math.inf
    for _ in range(schedule.n_chains):
        current = np.sort(gen.choice(n, size=query_size, replace=False))
        cur_loss = loss_of_set(tuple(current))
        chain_best = cur_loss
        trace = [chain_best]
        if cur_loss < best_loss:
            best_loss, best_idx = cur_loss, tuple(current)
        in_set = np.zeros(n, dtype=bool)
        in_set[current] = True
        for it in range(1, schedule.iters + 1):
            temp = schedule.temperature(it)
            pos = int(gen.integers(query_size))
            r = int(gen.integers(n - query_size))
            # r-th trajectory outside the current set, by index order
            swap_out = int(current[pos])
            swap_in = int(np.flatnonzero(~in_set)[r])
            proposal = current.copy()
            proposal[pos] = swap_in
            proposal.sort()
            new_loss = loss_of_set(tuple(proposal))
            delta = (cur_loss - new_loss) / temp
            if delta >= 0 or gen.random() < math.exp(delta):
                in_set[swap_out] = False
                in_set[swap_in] = True
                current, cur_loss = proposal, new_loss
                if cur_loss < best_loss:
                    best_loss, best_idx = cur_loss, tuple(current)
                if cur_loss < chain_best:
                    chain_best = cur_loss
            trace.append(chain_best)
        traces.append(trace)
    return best_idx, best_loss, traces


def _select_by_annealing(dataset, samples, query_size, schedule, rng, seed,
                         kernel, sign, return_trace):
    if samples is None or len(samples) == 0:
        raise InvalidInputError("query selection needs posterior samples")
    n = len(dataset)
    if n < query_size:
        raise InvalidInputError(
            f"dataset has {n} trajectories, need at least {query_size}")
    gen = as_generator(rng)
    if seed is None:
        seed = int(gen.integers(0, 2**63 - 1))
    if n == query_size:
        idx = tuple(range(n))
        query = RankingQuery([dataset[i].id for i in idx])
        return (query, []) if return_trace else query
    if schedule is None:
        schedule = AnnealSchedule()

    W, logA, A = _sorted_sample_arrays(samples)
    F = dataset.feature_matrix
    id_hashes = [_kernels.stable_str_hash(t) for t in dataset.ids]
    n_samples = len(samples)
    cache: dict[tuple[int, ...], float] = {}

    def loss_of_set(idx: tuple[int, ...]) -> float:
        hit = cache.get(idx)
        if hit is not None:
            return hit
        qfeats = np.ascontiguousarray(F[list(idx)])
        key = _set_key([id_hashes[i] for i in idx])
        u = _kernels.derived_uniforms(seed, key, n_samples * query_size)
        u = u.reshape(n_samples, query_size)
        val = sign * float(kernel(qfeats, W, logA, A, u))
        cache[idx] = val
        return val

    best_idx, _, traces = _anneal(dataset, query_size, schedule, loss_of_set, gen)
    query = RankingQuery([dataset[i].id for i in best_idx])
    return (query, traces) if return_trace else query


def select_query_ig(dataset: Dataset, samples: PosteriorSamples,
                    query_size: int, schedule: AnnealSchedule | None = None,
                    rng: "int | np.random.Generator" = 0,
                    seed: int | None = None, return_trace: bool = False):
    """Pick the query minimizing the information-gain loss via annealing.

    ``rng`` drives the search; ``seed`` keys the per-(query, sample) response
    draws and defaults to a value derived from ``rng`` so one argument fully
    determines the outcome.
    """
    return _select_by_annealing(dataset, samples, query_size, schedule, rng,
                                seed, _kernels.ig_loss, 1.0, return_trace)


def select_query_vr(dataset: Dataset, samples: PosteriorSamples,
                    query_size: int, schedule: AnnealSchedule | None = None,
                    rng: "int | np.random.Generator" = 0,
                    seed: int | None = None, return_trace: bool = False):
    """Pick the query maximizing the volume-removal objective via annealing."""
    return _select_by_annealing(dataset, samples, query_size, schedule, rng,
                                seed, _kernels.vr_objective, -1.0, return_trace)


def select_query_random(dataset: Dataset, query_size: int,
                        used: "set[frozenset[str]] | None" = None,
                        rng: "int | np.random.Generator" = 0) -> RankingQuery:
    """Uniform K-subset, never repeating an already-issued item set.

    ``used`` holds frozensets of trajectory ids; the chosen set is added to it
    in place when provided.
    """
    n = len(dataset)
    if n < query_size:
        raise InvalidInputError(
            f"dataset has {n} trajectories, need at least {query_size}")
    total = comb(n, query_size)
    if used is None:
        used = set()
    if len(used) >= total:
        raise QuerySpaceExhaustedError(
            f"all {total} queries of size {query_size} already issued")
    gen = as_generator(rng)
    ids = dataset.ids
    for _ in range(10000):
        idx = np.sort(gen.choice(n, size=query_size, replace=False))
        chosen = frozenset(ids[i] for i in idx)
        if chosen not in used:
            used.add(chosen)
            return RankingQuery([ids[i] for i in idx])
    # nearly exhausted space: enumerate the complement and pick uniformly
    import itertools
    remaining = [c for c in itertools.combinations(range(n), query_size)
                 if frozenset(ids[i] for i in c) not in used]
    pick = remaining[int(gen.integers(len(remaining)))]
    chosen = frozenset(ids[i] for i in pick)
    used.add(chosen)
    return RankingQuery([ids[i] for i in pick])
