"""Bayesian posterior over mixture parameters.

The posterior is Pr(params | log) ∝ prior(params) · Π_t Pr(response_t |
params, query_t). Sampling follows the multi-chain scheme: many independent
Metropolis-Hastings chains initialized from the prior, each contributing only
its final state, which spreads samples across posterior modes far better than
one long chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .model import MixtureParams, ObservationLog

DEFAULT_N_CHAINS = 100
DEFAULT_N_ITERATIONS = 200
DEFAULT_STEP_SIZE = 0.15

RngLike = "int | np.random.Generator"


def as_generator(rng: "int | np.random.Generator") -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def uniform_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform point on the (n-1)-simplex via normalized exponential spacings."""
    g = rng.exponential(size=n)
    return g / g.sum()


@dataclass(frozen=True)
class Prior:
    """Standard-Gaussian weights, uniform-simplex mixing."""

    n_modes: int
    dimension: int

    def __post_init__(self) -> None:
        if self.n_modes < 1 or self.dimension < 1:
            raise InvalidInputError("prior needs n_modes >= 1 and dimension >= 1")

    def log_density(self, params: MixtureParams) -> float:
        """Exact log prior density, normalization constants included.

        The mixing density is the flat Dirichlet, constant (M-1)! on the
        simplex.
        """
        self._check(params)
        m, d = params.n_modes, params.dimension
        gauss = -0.5 * float((params.weights ** 2).sum()) \
            - 0.5 * m * d * math.log(2.0 * math.pi)
        return gauss + math.lgamma(m)

    def sample(self, rng: np.random.Generator,
               fixed_mixing: np.ndarray | None = None) -> MixtureParams:
        weights = rng.normal(size=(self.n_modes, self.dimension))
        if fixed_mixing is not None:
            mixing = np.asarray(fixed_mixing, dtype=np.float64)
        elif self.n_modes == 1:
            mixing = np.ones(1)
        else:
            mixing = uniform_simplex(rng, self.n_modes)
        return MixtureParams(weights, mixing)

    def _check(self, params: MixtureParams) -> None:
        if params.n_modes != self.n_modes or params.dimension != self.dimension:
            raise InvalidInputError(
                f"params ({params.n_modes} modes, dim {params.dimension}) do not "
                f"match prior ({self.n_modes} modes, dim {self.dimension})")


class PosteriorSamples:
    """A stack of N parameter samples with sampling provenance.

    ``weights`` has shape ``(N, M, d)`` and ``mixing`` shape ``(N, M)``;
    ``provenance`` records seed and sampler settings for checkpointing.
    """

    def __init__(self, weights: np.ndarray, mixing: np.ndarray,
                 provenance: dict[str, Any] | None = None):
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        mixing = np.ascontiguousarray(mixing, dtype=np.float64)
        if weights.ndim != 3 or mixing.ndim != 2 or \
                weights.shape[:2] != mixing.shape or weights.shape[0] == 0:
            raise InvalidInputError(
                f"bad sample stack shapes {weights.shape} / {mixing.shape}")
        self.weights = weights
        self.mixing = mixing
        self.provenance = dict(provenance or {})
        self._log_mixing: np.ndarray | None = None

    @classmethod
    def from_params(cls, params: Sequence[MixtureParams],
                    provenance: dict[str, Any] | None = None) -> "PosteriorSamples":
        if not params:
            raise InvalidInputError("empty sample list")
        return cls(np.stack([p.weights for p in params]),
                   np.stack([p.mixing for p in params]), provenance)

    @property
    def n_samples(self) -> int:
        return self.weights.shape[0]

    @property
    def n_modes(self) -> int:
        return self.weights.shape[1]

    @property
    def dimension(self) -> int:
        return self.weights.shape[2]

    @property
    def log_mixing(self) -> np.ndarray:
        if self._log_mixing is None:
            self._log_mixing = _kernels.log_mixing(self.mixing)
        return self._log_mixing

    def __len__(self) -> int:
        return self.n_samples

    def __getitem__(self, i: int) -> MixtureParams:
        return MixtureParams(self.weights[i], self.mixing[i])

    def __iter__(self) -> Iterator[MixtureParams]:
        return (self[i] for i in range(self.n_samples))

    def canonical_order(self) -> np.ndarray:
        """Index order independent of how the samples were produced."""
        flat = np.concatenate(
            [self.weights.reshape(self.n_samples, -1), self.mixing], axis=1)
        return np.lexsort(flat.T[::-1])

    def sorted_canonical(self) -> "PosteriorSamples":
        order = self.canonical_order()
        return PosteriorSamples(self.weights[order], self.mixing[order],
                                self.provenance)

    def to_json_list(self) -> list[dict[str, Any]]:
        return [
            {"weights": [[float(v) for v in row] for row in self.weights[i]],
             "mixing": [float(v) for v in self.mixing[i]]}
            for i in range(self.n_samples)
        ]

    def save(self, path: str) -> None:
        import json
        with open(path, "w") as fh:
            json.dump(self.to_json_list(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "PosteriorSamples":
        import json
        with open(path) as fh:
            rows = json.load(fh)
        if not isinstance(rows, list) or not rows:
            raise InvalidInputError("posterior sample file must be a nonempty list")
        return cls(
            np.asarray([r["weights"] for r in rows], dtype=np.float64),
            np.asarray([r["mixing"] for r in rows], dtype=np.float64))


def log_posterior_unnorm(prior: Prior, log: ObservationLog,
                         params: MixtureParams) -> float:
    """Log prior density plus total log likelihood of the observation log."""
    if params.dimension != log.dataset.dimension:
        raise InvalidInputError(
            f"params dimension {params.dimension} != dataset dimension "
            f"{log.dataset.dimension}")
    lp = prior.log_density(params)
    if len(log) == 0:
        return lp
    return lp + float(_kernels.dataset_loglik(
        params.weights, params.log_mixing, log.flat_features, log.offsets))


def mixing_proposal(params: MixtureParams, step: float,
                    rng: np.random.Generator) -> MixtureParams:
    """Symmetric random-walk proposal for the mixing coefficients.

    Moves in unconstrained logit space and maps back through softmax; the
    direction (1, ..., 1) is null for softmax, so the induced proposal on the
    simplex is symmetric and the usual acceptance ratio applies once the
    softmax log-Jacobian (sum of log mixing entries) is part of the target.
    """
    if params.n_modes == 1 or step == 0.0:
        return params
    z = _kernels.log_mixing(params.mixing) + step * rng.normal(size=params.n_modes)
    e = np.exp(z - z.max())
    return MixtureParams(params.weights, e / e.sum())


def log_simplex_jacobian(params: MixtureParams) -> float:
    """log det of the softmax chart used by the logit-space walk."""
    if (params.mixing == 0).any():
        return -math.inf
    return float(np.log(params.mixing).sum())


def mh_acceptance_ratio(prior: Prior, log: ObservationLog,
                        current: MixtureParams, proposed: MixtureParams) -> float:
    """Acceptance probability for a joint (weights, mixing) move."""
    cur = log_posterior_unnorm(prior, log, current) + log_simplex_jacobian(current)
    prop = log_posterior_unnorm(prior, log, proposed) + log_simplex_jacobian(proposed)
    if prop <= -1e12 or math.isnan(prop):
        return 0.0
    return min(1.0, math.exp(min(prop - cur, 0.0)))


def mh_sample(prior: Prior, log: ObservationLog,
              n_chains: int = DEFAULT_N_CHAINS,
              iters: int = DEFAULT_N_ITERATIONS,
              step: float = DEFAULT_STEP_SIZE,
              rng: "int | np.random.Generator" = 0,
              fixed_mixing: np.ndarray | None = None) -> PosteriorSamples:
    """Multi-chain Metropolis-Hastings posterior sampling.

    Runs ``n_chains`` independent chains for ``iters`` iterations each and
    keeps only final states, one sample per chain. Chains initialize from the
    prior. The weight proposal adds N(0, step^2 I) per mode; mixing moves in
    logit space unless ``fixed_mixing`` pins it. With an empty log the
    posterior equals the prior, so exact prior draws are returned directly.
    """
    if n_chains < 1 or iters < 1:
        raise InvalidInputError("need n_chains >= 1 and iters >= 1")
    if log.dataset.dimension != prior.dimension:
        raise InvalidInputError(
            f"prior dimension {prior.dimension} != dataset dimension "
            f"{log.dataset.dimension}")
    if fixed_mixing is not None:
        fixed_mixing = np.asarray(fixed_mixing, dtype=np.float64)
        if fixed_mixing.shape != (prior.n_modes,):
            raise InvalidInputError("fixed_mixing must have one entry per mode")
        MixtureParams(np.zeros((prior.n_modes, prior.dimension)), fixed_mixing)

    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = as_generator(rng)
    children = gen.spawn(n_chains)

    m, d = prior.n_modes, prior.dimension
    W = np.empty((n_chains, m, d))
    A = np.empty((n_chains, m))
    sample_mixing = fixed_mixing is None and m > 1

    if len(log) == 0:
        for c, child in enumerate(children):
            p = prior.sample(child, fixed_mixing)
            W[c], A[c] = p.weights, p.mixing
    else:
        flat = log.flat_features
        offsets = log.offsets
        for c, child in enumerate(children):
            init = prior.sample(child, fixed_mixing)
            noise_w = step * child.normal(size=(iters, m, d))
            noise_z = step * child.normal(size=(iters, m)) if sample_mixing \
                else np.zeros((iters, m))
            log_u = np.log1p(-child.random(iters))
            W[c], A[c], _ = _kernels.mh_chain(
                init.weights, init.mixing, flat, offsets,
                noise_w, noise_z, log_u, sample_mixing)

    return PosteriorSamples(W, A, provenance={
        "seed": seed, "n_chains": n_chains, "iters": iters, "step": step})


def mle_estimate(prior: Prior, log: ObservationLog,
                 samples: PosteriorSamples,
                 refine_rounds: int = 20) -> MixtureParams:
    """MAP-over-samples, refined by coordinate-wise hill climbing.

    Starts from the sample with the highest unnormalized log posterior and
    greedily tries +/- step moves on every weight coordinate (and on mixing
    logits when M > 1), halving the step each round starting from the
    sampler's step size.
    """
    if samples is None or len(samples) == 0:
        raise InvalidInputError("mle_estimate needs at least one sample")
    flat, offsets = log.flat_features, log.offsets
    has_data = len(log) > 0

    def target(w: np.ndarray, a: np.ndarray) -> float:
        val = -0.5 * float((w ** 2).sum())
        if has_data:
            val += float(_kernels.dataset_loglik(
                w, _kernels.log_mixing(a), flat, offsets))
        return val

    scores = [target(samples.weights[i], samples.mixing[i])
              for i in range(len(samples))]
    best = int(np.argmax(scores))
    w = samples.weights[best].copy()
    a = samples.mixing[best].copy()
    cur = scores[best]

    m, d = w.shape
    refine_mix = m > 1 and (a > 0).all()
    z = np.log(a) if refine_mix else None
    s = float(samples.provenance.get("step", DEFAULT_STEP_SIZE))
    for _ in range(refine_rounds):
        for i in range(m):
            for j in range(d):
                for delta in (s, -s):
                    w[i, j] += delta
                    val = target(w, a)
                    if val > cur:
                        cur = val
                        break
                    w[i, j] -= delta
        if refine_mix:
            for i in range(m):
                for delta in (s, -s):
                    z_try = z.copy()
                    z_try[i] += delta
                    e = np.exp(z_try - z_try.max())
                    a_try = e / e.sum()
                    val = target(w, a_try)
                    if val > cur:
                        cur, z, a = val, z_try, a_try
                        break
        s *= 0.5
    return MixtureParams(w, a)
