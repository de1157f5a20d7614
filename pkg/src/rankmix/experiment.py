"""Simulated-expert experiment harness.

One experiment runs ``n_runs`` independent simulations: each samples a
ground-truth mixture from the prior, then alternates query selection,
simulated response, and posterior refresh for ``n_queries`` rounds, recording
weight MSE and holdout log-likelihood after every round (step 0 is the prior
before any query). All randomness derives from the experiment seed through
purpose-keyed streams, so runs are bit-reproducible and two strategies under
the same seed share their ground truths, eval sets, and step-0 state.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .acquisition import (AnnealSchedule, select_query_ig, select_query_random,
                          select_query_vr, warn_if_unidentifiable)
from .environments import SyntheticSpec, gen_fetch_dataset, gen_synthetic_dataset
from .errors import InvalidInputError
from .evaluation import (auc, holdout_loglik, metrics_to_csv, mse,
                         paired_t_test, read_metrics_csv, series_from_rows)
from .model import Dataset, ObservationLog
from .posterior import Prior, mh_sample, mle_estimate

# purpose codes for derived rng streams
_EXPERT, _EVAL, _MH, _ACQ, _RESPONSE = 1, 2, 3, 4, 5

STRATEGIES = ("ig", "random", "vr")
METRICS = ("mse", "holdout_loglik")


def derive_rng(*keys: int) -> np.random.Generator:
    """Generator keyed by an integer tuple, independent per distinct tuple."""
    return np.random.default_rng(np.random.SeedSequence(list(keys)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; JSON-loadable, unknown keys rejected."""

    name: str = "experiment"
    dataset: str = "synthetic"
    standardize: bool = False
    dataset_seed: int = 0
    m_true: int = 2
    m_model: int = 2
    k: int = 6
    n_queries: int = 15
    n_runs: int = 1
    strategy: str = "random"
    n_chains: int = 100
    mh_iters: int = 200
    mh_step: float = 0.15
    sa_chains: int = 10
    sa_iters: int = 30
    sa_start_temp: float = 10.0
    sa_cooling: float = 0.9
    n_eval_queries: int = 10
    seed: int = 0
    output: str = "results.csv"

    def __post_init__(self) -> None:
        if self.k < 2:
            raise InvalidInputError("query size k must be >= 2")
        if self.strategy not in STRATEGIES:
            raise InvalidInputError(
                f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.m_true < 1 or self.m_model < 1:
            raise InvalidInputError("mode counts must be >= 1")
        if self.n_queries < 0 or self.n_runs < 1 or self.n_eval_queries < 1:
            raise InvalidInputError("counts must be positive")

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise InvalidInputError("config must be a JSON object")
        known = {f.name: f.type for f in dataclass_fields(cls)}
        unknown = sorted(set(obj) - set(known))
        if unknown:
            raise InvalidInputError(f"unknown config keys: {unknown}")
        kwargs = {}
        for key, value in obj.items():
            expected = known[key]
            if expected == "int" and not (isinstance(value, int)
                                          and not isinstance(value, bool)):
                raise InvalidInputError(f"config key {key!r} must be an integer")
            if expected == "float":
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InvalidInputError(f"config key {key!r} must be a number")
                value = float(value)
            if expected == "bool" and not isinstance(value, bool):
                raise InvalidInputError(f"config key {key!r} must be a boolean")
            if expected == "str" and not isinstance(value, str):
                raise InvalidInputError(f"config key {key!r} must be a string")
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_json_dict(obj)

    def schedule(self) -> AnnealSchedule:
        return AnnealSchedule(self.sa_chains, self.sa_iters,
                              self.sa_start_temp, self.sa_cooling)


def load_config_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset == "synthetic":
        ds = gen_synthetic_dataset(SyntheticSpec(seed=config.dataset_seed))
    elif config.dataset == "fetch":
        ds = gen_fetch_dataset()
    else:
        ds = Dataset.load(config.dataset)
    return ds.standardized() if config.standardize else ds


def run_experiment(config: ExperimentConfig,
                   dataset: Dataset | None = None) -> "list[tuple[int, int, str, float]]":
    """Execute all runs and return metric rows (run, step, metric, value).

    Also writes the CSV to ``config.output`` and an AUC summary alongside it
    when ``config.output`` is non-empty.
    """
    from .environments import sample_expert_population

    warn_if_unidentifiable(config.m_model, config.k)
    if dataset is None:
        dataset = load_config_dataset(config)
    prior = Prior(config.m_model, dataset.dimension)
    schedule = config.schedule()
    rows: list[tuple[int, int, str, float]] = []

    for run in range(config.n_runs):
        expert = sample_expert_population(
            config.m_true, dataset.dimension,
            derive_rng(config.seed, run, 0, _EXPERT))

        eval_rng = derive_rng(config.seed, run, 0, _EVAL)
        eval_used: set[frozenset[str]] = set()
        eval_set = []
        for _ in range(config.n_eval_queries):
            q = select_query_random(dataset, config.k, eval_used, eval_rng)
            eval_set.append((q, expert.respond(dataset, q, eval_rng)))

        log = ObservationLog(dataset)
        used: set[frozenset[str]] = set()
        samples = mh_sample(prior, log, config.n_chains, config.mh_iters,
                            config.mh_step, derive_rng(config.seed, run, 0, _MH))
        rows.extend(_metric_rows(run, 0, config, dataset, prior, log, samples,
                                 expert, eval_set))

        for step in range(1, config.n_queries + 1):
            acq_rng = derive_rng(config.seed, run, step, _ACQ)
            if config.strategy == "ig":
                query = select_query_ig(dataset, samples, config.k, schedule,
                                        acq_rng)
            elif config.strategy == "vr":
                query = select_query_vr(dataset, samples, config.k, schedule,
                                        acq_rng)
            else:
                query = select_query_random(dataset, config.k, used, acq_rng)
            response = expert.respond(
                dataset, query, derive_rng(config.seed, run, step, _RESPONSE))
            log.record(query, response)
            samples = mh_sample(prior, log, config.n_chains, config.mh_iters,
                                config.mh_step,
                                derive_rng(config.seed, run, step, _MH))
            rows.extend(_metric_rows(run, step, config, dataset, prior, log,
                                     samples, expert, eval_set))

    if config.output:
        write_outputs(config, rows)
    return rows


def _metric_rows(run, step, config, dataset, prior, log, samples, expert,
                 eval_set):
    est = mle_estimate(prior, log, samples)
    try:
        mse_value = mse(expert.true_params, est)
    except InvalidInputError:
        mse_value = math.nan
    ll_value = holdout_loglik(dataset, samples, eval_set)
    return [(run, step, "mse", mse_value),
            (run, step, "holdout_loglik", ll_value)]


def summarize(rows: "list[tuple[int, int, str, float]]") -> dict:
    """Per-metric AUC list, mean, and standard error across runs."""
    out: dict = {}
    for metric in METRICS:
        try:
            series = series_from_rows(rows, metric)
        except InvalidInputError:
            continue
        if series.n_steps < 2:
            continue
        values = auc(series)
        finite = values[np.isfinite(values)]
        out[metric] = {
            "auc_per_run": [float(v) for v in values],
            "auc_mean": float(finite.mean()) if finite.size else math.nan,
            "auc_sem": (float(finite.std(ddof=1) / math.sqrt(finite.size))
                        if finite.size > 1 else math.nan),
            "final_step_mean": float(np.nanmean(series.values[:, -1])),
            "final_step_median": float(np.nanmedian(series.values[:, -1])),
        }
    return out


def summary_path(csv_path: str) -> str:
    root, ext = os.path.splitext(csv_path)
    return root + ".summary.json"


def write_outputs(config: ExperimentConfig,
                  rows: "list[tuple[int, int, str, float]]") -> None:
    out_dir = os.path.dirname(config.output)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    with open(config.output, "w") as fh:
        fh.write(metrics_to_csv(rows))
    summary = {"name": config.name, "strategy": config.strategy,
               "n_runs": config.n_runs, "seed": config.seed,
               "metrics": summarize(rows)}
    with open(summary_path(config.output), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def report(csv_paths: "list[str]") -> dict:
    """Aggregate several experiment CSVs and t-test every pair on AUC.

    Files pair runs by run index, which matches runs by shared seed when the
    experiments used the same seed.
    """
    if not csv_paths:
        raise InvalidInputError("report needs at least one CSV path")
    labels = []
    per_label: dict[str, dict] = {}
    for path in csv_paths:
        label = os.path.splitext(os.path.basename(path))[0]
        if label in per_label:
            label = path
        rows = read_metrics_csv(path)
        labels.append(label)
        per_label[label] = summarize(rows)
    result: dict = {"experiments": per_label, "comparisons": []}
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            a, b = labels[i], labels[j]
            for metric in METRICS:
                if metric not in per_label[a] or metric not in per_label[b]:
                    continue
                va = np.asarray(per_label[a][metric]["auc_per_run"])
                vb = np.asarray(per_label[b][metric]["auc_per_run"])
                if va.shape != vb.shape or va.size < 2:
                    continue
                keep = np.isfinite(va) & np.isfinite(vb)
                if keep.sum() < 2:
                    continue
                t, p = paired_t_test(va[keep], vb[keep])
                result["comparisons"].append({
                    "a": a, "b": b, "metric": metric,
                    "auc_mean_a": float(va[keep].mean()),
                    "auc_mean_b": float(vb[keep].mean()),
                    "t": t, "p": p,
                })
    return result


def format_report(result: dict) -> str:
    lines = []
    for label, metrics in result["experiments"].items():
        lines.append(f"{label}:")
        for metric, stats in metrics.items():
            lines.append(
                f"  {metric}: AUC mean {stats['auc_mean']:.4f} "
                f"(sem {stats['auc_sem']:.4f}), "
                f"final-step mean {stats['final_step_mean']:.4f}")
    for cmp in result["comparisons"]:
        lines.append(
            f"{cmp['a']} vs {cmp['b']} [{cmp['metric']}]: "
            f"AUC {cmp['auc_mean_a']:.4f} vs {cmp['auc_mean_b']:.4f}, "
            f"t = {cmp['t']:.3f}, p = {cmp['p']:.4g}")
    return "\n".join(lines)
