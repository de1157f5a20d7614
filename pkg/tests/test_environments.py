"""Tests for dataset generators and simulated experts."""

import json

import numpy as np
import pytest

from rankmix import (
    Dataset,
    FetchTrajectorySpec,
    InvalidInputError,
    MixtureParams,
    RankingQuery,
    SimulatedExpertPopulation,
    SyntheticSpec,
    fetch_featurize,
    fetch_success,
    gen_fetch_dataset,
    gen_synthetic_dataset,
    sample_expert_population,
)
from rankmix.environments import FETCH_LEVELS, FETCH_PLACEMENTS

from conftest import make_dataset


@pytest.fixture(scope="module")
def synthetic():
    return gen_synthetic_dataset()


@pytest.fixture(scope="module")
def fetch():
    return gen_fetch_dataset()


class TestSyntheticDataset:
    def test_counts_and_ids(self, synthetic):
        assert len(synthetic) == 1110
        assert synthetic.dimension == 3
        assert synthetic[0].id == "syn-0001"
        assert synthetic[-1].id == "syn-1110"
        assert len({t.id for t in synthetic}) == 1110

    def test_group_sizes(self, synthetic):
        groups = [t.meta["group"] for t in synthetic]
        assert groups.count("1") == 10
        assert groups.count("2") == 100
        assert groups.count("3") == 1000

    def test_group_variances(self, synthetic):
        feats = synthetic.feature_matrix
        assert abs(feats[:10].var() - 1.0) < 0.5
        assert abs(feats[10:110].var() - 0.1) < 0.05
        assert abs(feats[110:].var() - 0.01) < 0.002

    def test_deterministic(self):
        a = gen_synthetic_dataset()
        b = gen_synthetic_dataset()
        assert np.array_equal(a.feature_matrix, b.feature_matrix)
        assert [t.id for t in a] == [t.id for t in b]
        assert json.dumps(a.to_json_dict()) == json.dumps(b.to_json_dict())

    def test_seed_changes_features(self):
        a = gen_synthetic_dataset()
        b = gen_synthetic_dataset(SyntheticSpec(seed=1))
        assert not np.array_equal(a.feature_matrix, b.feature_matrix)

    def test_custom_groups(self):
        ds = gen_synthetic_dataset(SyntheticSpec(dims=2, groups=((3, 0.5),)))
        assert len(ds) == 3
        assert ds.dimension == 2

    @pytest.mark.parametrize("kwargs", [
        {"dims": 0},
        {"groups": ((0, 1.0),)},
        {"groups": ((5, 0.0),)},
        {"groups": ((5, -1.0),)},
    ])
    def test_spec_validation(self, kwargs):
        with pytest.raises(InvalidInputError):
            SyntheticSpec(**kwargs)


class TestFetchFeaturization:
    def test_known_feature_vector(self):
        spec = FetchTrajectorySpec(target_shelf=1, y_speed=0.5, y_grasp=1.0,
                                   y_height=0.75, y_width=0.25, y_success=1)
        expected = np.array([1.0, 0.0, 0.0,
                             0.5, 0.25,
                             1.0, 0.0,
                             0.75, 0.1875,
                             0.25, 0.1875,
                             0.4375,
                             1.0])
        assert np.array_equal(fetch_featurize(spec), expected)

    def test_extreme_feature_vector(self):
        spec = FetchTrajectorySpec(target_shelf=2, y_speed=0.0, y_grasp=0.0,
                                   y_height=0.0, y_width=1.0, y_success=0)
        expected = np.array([0.0, 1.0, 0.0,
                             0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                             1.0, 0.0,
                             0.0,
                             0.0])
        assert np.array_equal(fetch_featurize(spec), expected)

    def test_matched_grasp_width_compatibility(self):
        spec = FetchTrajectorySpec(target_shelf=3, y_speed=0.5, y_grasp=0.5,
                                   y_height=0.5, y_width=0.5, y_success=1)
        assert fetch_featurize(spec)[11] == 1.0

    @pytest.mark.parametrize("kwargs", [
        {"target_shelf": 0}, {"target_shelf": 4},
        {"y_speed": -0.1}, {"y_grasp": 1.5}, {"y_height": 2.0},
        {"y_width": -1.0}, {"y_success": 2},
    ])
    def test_spec_validation(self, kwargs):
        base = dict(target_shelf=1, y_speed=0.5, y_grasp=0.5, y_height=0.5,
                    y_width=0.5, y_success=1)
        base.update(kwargs)
        with pytest.raises(InvalidInputError):
            FetchTrajectorySpec(**base)

    def test_success_rule(self):
        assert fetch_success(2, 0.75) == 0
        assert fetch_success(2, 1.0) == 0
        assert fetch_success(2, 0.5) == 1
        assert fetch_success(1, 1.0) == 1
        assert fetch_success(3, 0.75) == 1


class TestFetchDataset:
    def test_size_and_ids(self, fetch):
        assert len(fetch) == 351  # 3 shelves x 3 speeds x 3 grasps x 13 places
        assert fetch.dimension == 13
        assert fetch[0].id == "fetch-001"
        assert fetch[-1].id == "fetch-351"
        assert len({t.id for t in fetch}) == 351

    def test_placement_grid(self):
        assert len(FETCH_PLACEMENTS) == 13
        assert len(set(FETCH_PLACEMENTS)) == 13
        assert FETCH_LEVELS == (0.0, 0.5, 1.0)

    def test_first_row(self, fetch):
        expected = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                             0.0, 0.0, 1.0, 1.0])
        assert np.array_equal(fetch.feature_matrix[0], expected)

    def test_uncertainty_components_bounded(self, fetch):
        u = fetch.feature_matrix[:, [4, 6, 8, 10]]
        assert u.min() >= 0.0
        assert u.max() <= 0.25

    def test_every_row_reproduces_its_spec(self, fetch):
        for traj in fetch:
            spec = FetchTrajectorySpec(
                target_shelf=int(traj.meta["shelf"]),
                y_speed=float(traj.meta["speed"]),
                y_grasp=float(traj.meta["grasp"]),
                y_height=float(traj.meta["height"]),
                y_width=float(traj.meta["width"]),
                y_success=int(traj.meta["success"]))
            assert np.array_equal(traj.features, fetch_featurize(spec))
            assert spec.y_success == fetch_success(spec.target_shelf,
                                                   spec.y_width)

    def test_success_only_fails_on_crowded_middle_shelf(self, fetch):
        for traj in fetch:
            failed = traj.meta["success"] == "0"
            crowded = traj.meta["shelf"] == "2" and float(traj.meta["width"]) > 0.5
            assert failed == crowded

    def test_deterministic_json(self, fetch):
        again = gen_fetch_dataset()
        assert json.dumps(fetch.to_json_dict()) == json.dumps(again.to_json_dict())

    def test_meta_description_present(self, fetch):
        assert all("description" in t.meta for t in fetch)


class TestShippedDatasets:
    def test_lunarlander_stub_loads(self):
        import os
        path = os.path.join(os.path.dirname(__file__), os.pardir, "data",
                            "lunarlander_stub.json")
        ds = Dataset.load(path)
        assert ds.dimension == 8
        assert len(ds) == 40
        assert ds[0].id == "lunar-001"
        assert all(t.meta["landed"] in ("0", "1") for t in ds)
        standardized = Dataset.load(path, standardize=True)
        assert np.allclose(standardized.feature_matrix.mean(axis=0), 0.0,
                           atol=1e-12)


class TestSimulatedExpert:
    def test_respond_is_permutation(self):
        ds = make_dataset(8, 2, seed=3)
        expert = sample_expert_population(2, 2, rng=5)
        q = RankingQuery([ds[i].id for i in (0, 3, 6)])
        resp = expert.respond(ds, q)
        assert sorted(resp.ranking) == sorted(q.trajectory_ids)
        assert resp.matches_query(q)

    def test_explicit_rng_reproducible(self):
        ds = make_dataset(8, 2, seed=3)
        expert = sample_expert_population(3, 2, rng=5)
        q = RankingQuery([ds[i].id for i in (1, 2, 5, 7)])
        a = expert.respond(ds, q, rng=np.random.default_rng(9))
        b = expert.respond(ds, q, rng=np.random.default_rng(9))
        assert a.ranking == b.ranking

    def test_internal_rng_advances(self):
        ds = make_dataset(10, 3, seed=1)
        expert = sample_expert_population(1, 3, rng=2, response_seed=4)
        q = RankingQuery([t.id for t in ds])
        rankings = {tuple(expert.respond(ds, q).ranking) for _ in range(12)}
        assert len(rankings) > 1

    def test_unimodal_population_mixing(self):
        expert = sample_expert_population(1, 3, rng=0)
        assert expert.true_params.n_modes == 1
        assert np.array_equal(expert.true_params.mixing, [1.0])

    def test_population_draw_reproducible(self):
        a = sample_expert_population(2, 3, rng=7)
        b = sample_expert_population(2, 3, rng=7)
        assert np.array_equal(a.true_params.weights, b.true_params.weights)
        assert np.array_equal(a.true_params.mixing, b.true_params.mixing)

    def test_mixing_marginal_is_uniform_on_simplex(self):
        gen = np.random.default_rng(42)
        draws = np.array([
            sample_expert_population(3, 2, rng=gen).true_params.mixing
            for _ in range(5000)])
        # coordinates of a uniform simplex point have mean 1/3
        assert np.allclose(draws.mean(axis=0), 1.0 / 3.0, atol=0.03)
        assert np.all(np.abs(draws.sum(axis=1) - 1.0) < 1e-9)

    def test_expert_holds_given_params(self):
        params = MixtureParams([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])
        expert = SimulatedExpertPopulation(params, seed=3)
        assert expert.true_params is params
