"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's kernel code: likelihoods
come from the direct product formula over explicit permutations, posterior
statistics from grid quadrature, and assignments from brute-force search, so
library results are checked against independently derived values.
"""

import itertools
import math

import numpy as np
import pytest

from rankmix.model import Dataset, Trajectory


def brute_force_ranking_prob(weights, mixing, feats_ranked) -> float:
    """Mixture Plackett-Luce probability via the direct product formula.

    Pure python floats; max-subtraction only to keep exponentials finite.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim == 1:
        weights = weights[None, :]
    mixing = np.atleast_1d(np.asarray(mixing, dtype=float))
    feats_ranked = np.asarray(feats_ranked, dtype=float)
    total = 0.0
    for m in range(len(mixing)):
        rewards = [float(np.dot(weights[m], row)) for row in feats_ranked]
        prob = 1.0
        for i in range(len(rewards)):
            tail = rewards[i:]
            mx = max(tail)
            prob *= math.exp(rewards[i] - mx) / sum(
                math.exp(r - mx) for r in tail)
        total += float(mixing[m]) * prob
    return total


def brute_force_distribution(weights, mixing, feats) -> dict:
    """Probability of every permutation by direct evaluation."""
    feats = np.asarray(feats, dtype=float)
    out = {}
    for perm in itertools.permutations(range(feats.shape[0])):
        out[perm] = brute_force_ranking_prob(weights, mixing, feats[list(perm)])
    return out


def brute_force_hungarian(cost) -> tuple:
    """Minimum-cost assignment by trying every permutation."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(n)):
        value = sum(cost[i, perm[i]] for i in range(n))
        if value < best:
            best, best_perm = value, perm
    return best, best_perm


def quadrature_posterior_1d(observations, grid):
    """Unnormalized 1-D posterior on a grid for M=1, K=2 observations.

    ``observations`` is a list of (winner_feature, loser_feature) scalars.
    Returns normalized probabilities over ``grid``.
    """
    logp = -0.5 * grid**2
    for fw, fl in observations:
        logp += grid * fw - np.logaddexp(grid * fw, grid * fl)
    logp -= logp.max()
    p = np.exp(logp)
    return p / p.sum()


def exact_mutual_information(response_probs) -> float:
    """I(X; J) for J uniform over rows of an (N, n_responses) probability
    table, by direct double sum."""
    table = np.asarray(response_probs, dtype=float)
    n = table.shape[0]
    marginal = table.mean(axis=0)
    total = 0.0
    for i in range(n):
        for x in range(table.shape[1]):
            if table[i, x] > 0:
                total += table[i, x] * math.log(table[i, x] / marginal[x])
    return total / n


_criterion_lines: list = []


def record_criterion(line: str) -> None:
    """Queue a one-line verdict for the end-of-run acceptance summary."""
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


def make_dataset(n, d, seed=0, prefix="t") -> Dataset:
    gen = np.random.default_rng(seed)
    return Dataset([Trajectory(f"{prefix}{i}", gen.normal(size=d))
                    for i in range(n)])


@pytest.fixture
def small_dataset() -> Dataset:
    return make_dataset(12, 2, seed=7)
