"""Metrics and statistics for comparing learned mixtures.

MSE matches estimated modes to true modes with the Hungarian algorithm
before summing squared weight distances; holdout log-likelihood scores
held-out responses under the posterior-predictive mean; AUC and the paired
t-test aggregate metric curves across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import betainc

from . import _kernels
from .errors import DegenerateInputError, InvalidInputError
from .model import Dataset, MixtureParams, ObservationLog, RankingQuery, RankingResponse
from .posterior import PosteriorSamples

CSV_HEADER = "run,step,metric,value"


@dataclass(frozen=True)
class MetricSeries:
    """One metric's values across runs (rows) and steps (columns)."""

    name: str
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InvalidInputError(
                f"metric series must be 2-D (runs x steps), got {values.shape}")
        object.__setattr__(self, "values", values)

    @property
    def n_runs(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]


def hungarian(cost: np.ndarray) -> np.ndarray:
    """Column assignment per row minimizing total cost on a square matrix."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise InvalidInputError(f"cost matrix must be square, got {cost.shape}")
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(cost.shape[0], dtype=np.int64)
    out[rows] = cols
    return out


def mse(true_params: MixtureParams, est_params: MixtureParams) -> float:
    """Sum of squared weight errors under the best mode matching.

    A unimodal estimate is compared against every true mode; an estimate with
    more modes than the truth is matched on the best true-sized subset. An
    estimate with 1 < M_est < M_true has no defined matching and is rejected.
    """
    if true_params.dimension != est_params.dimension:
        raise InvalidInputError(
            f"dimension mismatch: true {true_params.dimension}, "
            f"est {est_params.dimension}")
    mt, me = true_params.n_modes, est_params.n_modes
    tw, ew = true_params.weights, est_params.weights
    if me == 1:
        return float(((tw - ew[0]) ** 2).sum())
    if me < mt:
        raise InvalidInputError(
            f"no matching rule for 1 < est modes ({me}) < true modes ({mt})")
    cost = ((tw[:, None, :] - ew[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def holdout_loglik(dataset: Dataset, samples: PosteriorSamples,
                   eval_set: "list[tuple[RankingQuery, RankingResponse]]") -> float:
    """Mean log posterior-predictive probability of held-out responses.

    For each (query, response): log( (1/N) sum_i Pr(response | theta_i) ),
    computed as a log-sum-exp over per-sample log likelihoods.
    """
    if not eval_set:
        raise InvalidInputError("empty evaluation set")
    if samples is None or len(samples) == 0:
        raise InvalidInputError("holdout_loglik needs posterior samples")
    n = len(samples)
    total = 0.0
    for query, response in eval_set:
        feats = dataset.features_for(response.ranking)
        ll = np.asarray(_kernels.ranking_loglik_many(
            samples.weights, samples.log_mixing,
            np.ascontiguousarray(feats)))
        mx = ll.max()
        total += mx + math.log(np.exp(ll - mx).sum()) - math.log(n)
    return total / len(eval_set)


def auc(series: MetricSeries) -> np.ndarray:
    """Trapezoidal area under each run's curve, unit step spacing."""
    if series.n_steps < 2:
        raise InvalidInputError("AUC needs at least 2 steps")
    return np.trapezoid(series.values, axis=1)


def paired_t_test(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Two-sided paired t-test; returns (t, p).

    Identical inputs yield (0, 1); zero-variance nonzero differences yield an
    infinite statistic with p = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError("paired t-test needs two equal-length vectors")
    n = a.shape[0]
    if n < 2:
        raise InvalidInputError("paired t-test needs at least 2 pairs")
    diff = a - b
    if (diff == 0).all():
        return 0.0, 1.0
    sd = diff.std(ddof=1)
    mean = diff.mean()
    if sd == 0.0:
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return float(t), p


def unimodal_top_baseline(log: ObservationLog,
                          dataset: Dataset | None = None) -> MixtureParams:
    """Unit-norm weight vector summing the top-ranked item of every response."""
    if len(log) == 0:
        raise InvalidInputError("baseline needs at least one observation")
    ds = dataset if dataset is not None else log.dataset
    acc = np.zeros(ds.dimension)
    for _, response in log.pairs:
        acc += ds[response.ranking[0]].features
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        raise DegenerateInputError("top-trajectory features sum to zero")
    return MixtureParams(acc[None, :] / norm, np.ones(1))


def format_metric_value(value: float) -> str:
    """Shortest round-trip decimal form, stable across runs."""
    return repr(float(value))


def metrics_to_csv(rows: "list[tuple[int, int, str, float]]") -> str:
    """Render `run,step,metric,value` rows; header fixed."""
    lines = [CSV_HEADER]
    lines.extend(f"{run},{step},{metric},{format_metric_value(value)}"
                 for run, step, metric, value in rows)
    return "\n".join(lines) + "\n"


def write_metrics_csv(path: str, rows: "list[tuple[int, int, str, float]]") -> None:
    with open(path, "w") as fh:
        fh.write(metrics_to_csv(rows))


def read_metrics_csv(path: str) -> "list[tuple[int, int, str, float]]":
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidInputError(f"{path}: expected header {CSV_HEADER!r}")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        run, step, metric, value = line.split(",")
        out.append((int(run), int(step), metric, float(value)))
    return out


def series_from_rows(rows: "list[tuple[int, int, str, float]]",
                     metric: str) -> MetricSeries:
    """Assemble one metric's (runs x steps) matrix from CSV rows."""
    picked = [(r, s, v) for r, s, m, v in rows if m == metric]
    if not picked:
        raise InvalidInputError(f"no rows for metric {metric!r}")
    runs = sorted({r for r, _, _ in picked})
    steps = sorted({s for _, s, _ in picked})
    run_pos = {r: i for i, r in enumerate(runs)}
    step_pos = {s: i for i, s in enumerate(steps)}
    values = np.zeros((len(runs), len(steps)))
    filled = np.zeros(values.shape, dtype=bool)
    for r, s, v in picked:
        values[run_pos[r], step_pos[s]] = v
        filled[run_pos[r], step_pos[s]] = True
    if not filled.all():
        raise InvalidInputError(f"ragged series for metric {metric!r}")
    return MetricSeries(metric, values)
