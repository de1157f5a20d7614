"""Active learning of multimodal reward functions from ranking queries.

Infers a mixture of linear reward functions from full-ranking responses
(a Plackett-Luce mixture), choosing each query to maximize Monte-Carlo
information gain. Ships simulated-expert experiment reproduction and an HTTP
service for live human-in-the-loop sessions.
"""

from ._kernels import BACKEND
from .acquisition import (AnnealSchedule, check_identifiability, ig_loss,
                          ig_mutual_information, select_query_ig,
                          select_query_random, select_query_vr, vr_objective,
                          warn_if_unidentifiable)
from .environments import (FetchTrajectorySpec, SimulatedExpertPopulation,
                           SyntheticSpec, fetch_featurize, fetch_success,
                           gen_fetch_dataset, gen_synthetic_dataset,
                           sample_expert_population)
from .errors import (DegenerateInputError, InvalidInputError,
                     InvalidStateError, QuerySpaceExhaustedError, RankmixError)
from .evaluation import (MetricSeries, auc, holdout_loglik, hungarian, mse,
                         paired_t_test, unimodal_top_baseline)
from .experiment import ExperimentConfig, report, run_experiment
from .model import (Dataset, MixtureParams, ObservationLog, RankingQuery,
                    RankingResponse, Trajectory,
                    enumerate_response_distribution, log_response_likelihood,
                    response_likelihood, sample_response)
from .posterior import (PosteriorSamples, Prior, log_posterior_unnorm,
                        mh_sample, mixing_proposal, mle_estimate)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule", "BACKEND", "Dataset", "DegenerateInputError",
    "ExperimentConfig", "FetchTrajectorySpec", "InvalidInputError",
    "InvalidStateError", "MetricSeries", "MixtureParams", "ObservationLog",
    "PosteriorSamples", "Prior", "QuerySpaceExhaustedError", "RankingQuery",
    "RankingResponse", "RankmixError", "SimulatedExpertPopulation",
    "SyntheticSpec", "Trajectory", "auc", "check_identifiability",
    "enumerate_response_distribution", "fetch_featurize", "fetch_success",
    "gen_fetch_dataset",
    "gen_synthetic_dataset", "holdout_loglik", "hungarian", "ig_loss",
    "ig_mutual_information", "log_posterior_unnorm", "log_response_likelihood",
    "mh_sample", "mixing_proposal", "mle_estimate", "mse", "paired_t_test",
    "report", "response_likelihood", "run_experiment",
    "sample_expert_population", "sample_response", "select_query_ig",
    "select_query_random", "select_query_vr", "unimodal_top_baseline",
    "vr_objective", "warn_if_unidentifiable",
]
