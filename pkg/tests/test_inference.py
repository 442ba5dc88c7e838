import math

import numpy as np
import pytest

from foodsys import _kernels
from foodsys.data import Dataset
from foodsys.errors import DomainError, SchemaError
from foodsys.inference import (
    DEFAULT_SCALES,
    NOISE_NAMES,
    PARAM_NAMES,
    SAMPLED_NAMES,
    McmcConfig,
    ModelPosterior,
    ObservationNoise,
    PosteriorChains,
    TransformSet,
    derived_draws,
    derived_posteriors,
    log_likelihood,
    log_likelihood_parts,
    log_prior,
    posterior_predictive,
    sample_posterior,
    simulate_dataset,
    summarize,
)
from foodsys.integrator import IntegratorConfig
from foodsys.model import InitialState


class TestTransforms:
    def test_round_trip(self):
        tset = TransformSet.default()
        rng = np.random.default_rng(0)
        theta = rng.standard_normal(tset.dim)
        values = tset.inverse(theta)
        again = tset.forward(values)
        assert np.allclose(again, theta, atol=1e-12)

    def test_trade_strength_logit(self):
        tset = TransformSet.default()
        idx = tset.names.index("k")
        tr = tset.transforms[idx]
        assert tr.kind == "logit"
        assert tr.inverse(0.0) == 0.5
        assert tr.forward(0.3602) == pytest.approx(math.log(0.3602 / 0.6398))

    def test_scale_overrides(self):
        tset = TransformSet.default({"h": 1e8})
        idx = tset.names.index("h")
        assert tset.transforms[idx].scale == 1e8
        with pytest.raises(DomainError):
            TransformSet.default({"unknown": 1.0})
        with pytest.raises(DomainError):
            TransformSet.default({"h": -2.0})
        with pytest.raises(DomainError):
            TransformSet.default({"k": 2.0})

    def test_vectorised_inverse_matches_scalar(self):
        tset = TransformSet.default()
        rng = np.random.default_rng(1)
        thetas = rng.standard_normal((3, 5, tset.dim))
        values = tset.inverse_matrix(thetas)
        assert values.shape == thetas.shape
        assert np.allclose(values[1, 2], tset.inverse(thetas[1, 2]), rtol=1e-15)

    def test_domain_checks(self):
        tset = TransformSet.default()
        with pytest.raises(DomainError):
            tset.transforms[0].forward(-1.0)


class TestLogPrior:
    def test_at_zero(self):
        n = 20
        assert log_prior(np.zeros(n)) == pytest.approx(-n / 2 * math.log(2 * math.pi))

    def test_unit_component_delta(self):
        base = log_prior(np.zeros(5))
        shifted = log_prior(np.array([1.0, 0, 0, 0, 0]))
        assert shifted - base == pytest.approx(-0.5)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        theta = rng.standard_normal(20)
        assert log_prior(theta) == pytest.approx(log_prior(-theta), rel=1e-14)

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            log_prior(np.array([np.inf, 0.0]))


def _exact_dataset(uk_params, uk_init, n_months=12):
    """Observations equal to the model's own observables (no noise)."""
    t_obs = np.arange(float(n_months))
    cfg = IntegratorConfig()
    status, _, M = _kernels.model_observables(
        uk_params.to_array(), uk_init.to_array(), t_obs,
        cfg.rel_tol, cfg.abs_tol, cfg.initial_step, cfg.min_step, cfg.max_steps)
    assert status == _kernels.OK
    return Dataset("2015-01", herd=M[0], new_supplies=M[6], price=M[2],
                   production=M[3], imports=M[4], exports=M[5]), M


class TestLogLikelihood:
    def test_mode_matching_closed_form(self, uk_params, uk_init):
        # With every observation equal to the model value and unit scales,
        # each point contributes -ln(Y * sqrt(2*pi)).
        data, M = _exact_dataset(uk_params, uk_init)
        noise = ObservationNoise.uniform(1.0)
        total = log_likelihood(uk_params, uk_init, noise, data)
        rows = [0, 6, 2, 3, 4, 5]  # herd, inflow, price, production, imports, exports
        expected = -sum(np.log(M[r] * np.sqrt(2 * np.pi)).sum() for r in rows)
        assert total == pytest.approx(expected, rel=1e-12)

    def test_zero_observations_error(self, uk_params, uk_init):
        empty = Dataset("2015-01", *[np.full(6, np.nan)] * 6)
        with pytest.raises(DomainError, match="no observed"):
            log_likelihood(uk_params, uk_init, ObservationNoise.uniform(1.0), empty)

    def test_widening_noise_lowers_perfect_fit(self, uk_params, uk_init):
        data, _ = _exact_dataset(uk_params, uk_init)
        tight = log_likelihood(uk_params, uk_init, ObservationNoise.uniform(1.0), data)
        wide = log_likelihood(uk_params, uk_init, ObservationNoise.uniform(2.0), data)
        assert wide < tight

    def test_parts_sum_to_total(self, uk_params, uk_init, uk_synthetic_dataset):
        noise = ObservationNoise.uniform(0.05)
        parts = log_likelihood_parts(uk_params, uk_init, noise, uk_synthetic_dataset)
        total = log_likelihood(uk_params, uk_init, noise, uk_synthetic_dataset)
        assert total == sum(parts.values())

    def test_removing_series_removes_its_contribution(self, uk_params, uk_init,
                                                      uk_synthetic_dataset):
        data = uk_synthetic_dataset
        noise = ObservationNoise.uniform(0.05)
        parts = log_likelihood_parts(uk_params, uk_init, noise, data)
        without_price = Dataset(data.anchor, data.herd, data.new_supplies,
                                np.full(data.n_months, np.nan),
                                data.production, data.imports, data.exports)
        total_without = log_likelihood(uk_params, uk_init, noise, without_price)
        total = log_likelihood(uk_params, uk_init, noise, data)
        assert total - total_without == pytest.approx(parts["price"], rel=1e-12)

    def test_supplies_target_switch(self, uk_params, uk_init):
        data, M = _exact_dataset(uk_params, uk_init)
        noise = ObservationNoise.uniform(0.1)
        ll_inflow = log_likelihood(uk_params, uk_init, noise, data,
                                   supplies_target="inflow")
        ll_state = log_likelihood(uk_params, uk_init, noise, data,
                                  supplies_target="state")
        # data equals the inflow, so the inflow target fits better
        assert ll_inflow > ll_state

    def test_fused_kernel_matches_parts(self, uk_params, uk_init,
                                        uk_synthetic_dataset):
        data = uk_synthetic_dataset
        noise = ObservationNoise.uniform(0.05)
        cfg = IntegratorConfig()
        status, _, M = _kernels.model_observables(
            uk_params.to_array(), uk_init.to_array(), data.t_obs(),
            cfg.rel_tol, cfg.abs_tol, cfg.initial_step, cfg.min_step, cfg.max_steps)
        fused = _kernels.obs_loglik(M, data.data_matrix(), noise.to_array(), False)
        parts = log_likelihood_parts(uk_params, uk_init, noise, data)
        assert fused == pytest.approx(sum(parts.values()), rel=1e-12)


class TestObservationNoise:
    def test_positive_required(self):
        with pytest.raises(DomainError):
            ObservationNoise(1.0, 1.0, 0.0, 1.0, 1.0, 1.0)

    def test_uniform(self):
        noise = ObservationNoise.uniform(0.2)
        assert np.all(noise.to_array() == 0.2)


class TestMcmcConfig:
    def test_validation(self):
        with pytest.raises(DomainError):
            McmcConfig(supplies_target="bogus")
        with pytest.raises(DomainError):
            McmcConfig(fixed_b=-1.0)

    def test_json_round_trip(self):
        cfg = McmcConfig(n_chains=2, warmup=50, draws=60, seed=3,
                         scales={"h": 1e8}, steps_per_iter=2)
        again = McmcConfig.from_dict(
            {k: v for k, v in cfg.to_dict().items()})
        assert again.n_chains == 2 and again.seed == 3
        assert again.transform_set().scales_dict()["h"] == 1e8

    def test_unknown_keys_rejected(self):
        with pytest.raises(SchemaError):
            McmcConfig.from_dict({"n_chains": 2, "chains": 4})


class TestModelPosterior:
    def make(self, data, **cfg):
        return ModelPosterior(data, McmcConfig(**cfg))

    def test_shear_round_trip(self, uk_synthetic_dataset):
        mp = self.make(uk_synthetic_dataset)
        rng = np.random.default_rng(3)
        phi = rng.standard_normal(20)
        assert np.allclose(mp.from_theta(mp.to_theta(phi)), phi, atol=1e-12)

    def test_invariant_under_coordinate_round_trip(self, uk_synthetic_dataset):
        mp = self.make(uk_synthetic_dataset)
        rng = np.random.default_rng(4)
        for _ in range(5):
            phi = 0.1 * rng.standard_normal(20)
            again = mp.from_theta(mp.to_theta(phi))
            assert mp(phi) == pytest.approx(mp(again), abs=1e-10)

    def test_matches_explicit_densities(self, uk_synthetic_dataset):
        mp = self.make(uk_synthetic_dataset)
        rng = np.random.default_rng(5)
        phi = 0.1 * rng.standard_normal(20)
        theta = mp.to_theta(phi)
        values = mp.decode(phi)
        params_dict = dict(zip(PARAM_NAMES, values[:10]))
        from foodsys.model import DimensionalParams

        params = DimensionalParams(b=mp.fixed_b, g=mp.fixed_g, **params_dict)
        init = InitialState(*values[10:14])
        noise = ObservationNoise(*values[14:20])
        expected = log_prior(theta) + log_likelihood(
            params, init, noise, uk_synthetic_dataset)
        assert mp(phi) == pytest.approx(expected, rel=1e-10)

    def test_cache_consistency(self, uk_synthetic_dataset):
        mp = self.make(uk_synthetic_dataset)
        rng = np.random.default_rng(6)
        phi = 0.1 * rng.standard_normal(20)
        mp(phi)
        noise_shift = phi.copy()
        noise_shift[14] += 0.3  # noise coordinate: reuses the cached solve
        cached = mp(noise_shift)
        fresh = self.make(uk_synthetic_dataset)(noise_shift)
        assert cached == fresh

    def test_absurd_coordinates_rejected(self, uk_synthetic_dataset):
        mp = self.make(uk_synthetic_dataset)
        phi = np.zeros(20)
        phi[3] = 800.0  # trade strength saturates the logistic at 1
        assert mp(phi) == -np.inf
        phi = np.full(20, 1e4)
        assert mp(phi) == -np.inf


@pytest.fixture(scope="module")
def mini_chains(uk_synthetic_dataset):
    cfg = McmcConfig(n_chains=2, warmup=120, draws=80, seed=21,
                     steps_per_iter=1)
    return sample_posterior(uk_synthetic_dataset, cfg)


class TestSamplePosterior:
    def test_shapes_and_names(self, mini_chains):
        assert mini_chains.natural.shape == (2, 80, 20)
        assert mini_chains.names == SAMPLED_NAMES
        assert mini_chains.log_post.shape == (2, 80)

    def test_draws_decode_to_valid_values(self, mini_chains):
        assert np.all(np.isfinite(mini_chains.natural))
        assert np.all(mini_chains.natural[:, :, :14] > 0)
        k = mini_chains.per_chain("k")
        assert np.all((k > 0) & (k < 1))

    def test_deterministic(self, uk_synthetic_dataset, mini_chains):
        cfg = McmcConfig(n_chains=2, warmup=120, draws=80, seed=21,
                         steps_per_iter=1)
        again = sample_posterior(uk_synthetic_dataset, cfg)
        assert np.array_equal(again.natural, mini_chains.natural)
        assert np.array_equal(again.log_post, mini_chains.log_post)

    def test_summary_structure(self, mini_chains):
        summ = summarize(mini_chains)
        row = summ["f"]
        assert row.hdi_low < row.mean < row.hdi_high
        assert row.ess > 0
        payload = summ.to_dict()
        assert set(payload["quantities"]) == set(SAMPLED_NAMES)


class TestDerived:
    def make_chains(self, natural_row):
        natural = np.tile(natural_row, (2, 30, 1))
        # jitter so variance is nonzero
        rng = np.random.default_rng(0)
        natural *= np.exp(0.01 * rng.standard_normal(natural.shape))
        return PosteriorChains(
            names=SAMPLED_NAMES, natural=natural,
            log_post=np.zeros((2, 30)), fixed_b=138.3, fixed_g=82.4, seed=0)

    def uk_row(self, uk_params, uk_init):
        row = np.empty(20)
        for i, name in enumerate(PARAM_NAMES):
            row[i] = getattr(uk_params, name)
        row[10:14] = uk_init.to_array()
        row[14:20] = 0.05
        return row

    def test_per_draw_identity(self, uk_params, uk_init):
        chains = self.make_chains(self.uk_row(uk_params, uk_init))
        draws = derived_draws(chains)
        assert np.allclose(draws["surplus_ratio"],
                           chains.per_chain("k") * draws["critical_ratio"],
                           rtol=1e-12)
        assert np.array_equal(draws["critical_kappa"], draws["surplus_ratio"])
        assert np.allclose(draws["surplus_minus_one"],
                           draws["surplus_ratio"] - 1.0, rtol=1e-12)

    def test_matches_dimensionless_route(self, uk_params, uk_init):
        from foodsys.model import nondimensionalise
        from foodsys.stability import critical_ratio as crit_dimensionless

        chains = self.make_chains(self.uk_row(uk_params, uk_init))
        draws = derived_draws(chains)
        c, d = 1, 7
        row = chains.natural[c, d]
        from foodsys.model import DimensionalParams

        params = DimensionalParams(b=chains.fixed_b, g=chains.fixed_g,
                                   **dict(zip(PARAM_NAMES, row[:10])))
        dp, _ = nondimensionalise(params, InitialState(*row[10:14]))
        assert draws["critical_ratio"][c, d] == pytest.approx(
            crit_dimensionless(dp), rel=1e-12)

    def test_summaries(self, uk_params, uk_init):
        chains = self.make_chains(self.uk_row(uk_params, uk_init))
        summ = derived_posteriors(chains)
        assert summ["critical_ratio"].mean == pytest.approx(1.71, abs=0.05)
        assert summ["critical_kappa"].mean == pytest.approx(0.616, abs=0.02)


class TestPredictive:
    def constant_chains(self, uk_params, uk_init, noise_value):
        row = np.empty(20)
        for i, name in enumerate(PARAM_NAMES):
            row[i] = getattr(uk_params, name)
        row[10:14] = uk_init.to_array()
        row[14:20] = noise_value
        natural = np.tile(row, (1, 10, 1))
        return PosteriorChains(names=SAMPLED_NAMES, natural=natural,
                               log_post=np.zeros((1, 10)),
                               fixed_b=uk_params.b, fixed_g=uk_params.g, seed=0)

    def test_zero_noise_reproduces_model(self, uk_params, uk_init,
                                         uk_synthetic_dataset):
        chains = self.constant_chains(uk_params, uk_init, 0.0)
        ens = posterior_predictive(chains, uk_synthetic_dataset, 5, seed=1)
        assert ens.n_skipped == 0
        for name in ("price", "production"):
            assert np.allclose(ens.draws[name], ens.model[name], rtol=1e-12)

    def test_ensemble_size_accounting(self, uk_params, uk_init,
                                      uk_synthetic_dataset):
        chains = self.constant_chains(uk_params, uk_init, 0.05)
        ens = posterior_predictive(chains, uk_synthetic_dataset, 7, seed=2)
        assert ens.n_requested == 7
        assert ens.n_kept == 7 - ens.n_skipped
        assert ens.draws["price"].shape == (ens.n_kept, 60)
        assert ens.draws["herd"].shape == (ens.n_kept, 10)

    def test_deterministic(self, uk_params, uk_init, uk_synthetic_dataset):
        chains = self.constant_chains(uk_params, uk_init, 0.05)
        a = posterior_predictive(chains, uk_synthetic_dataset, 5, seed=3)
        b = posterior_predictive(chains, uk_synthetic_dataset, 5, seed=3)
        assert np.array_equal(a.draws["price"], b.draws["price"])

    def test_bands_ordered(self, uk_params, uk_init, uk_synthetic_dataset):
        chains = self.constant_chains(uk_params, uk_init, 0.05)
        ens = posterior_predictive(chains, uk_synthetic_dataset, 50, seed=4)
        bands = ens.bands()
        for name, band in bands.items():
            assert np.all(band[0] <= band[1]) and np.all(band[1] <= band[2])

    def test_coverage_on_synthetic(self, uk_params, uk_init,
                                   uk_synthetic_dataset):
        # Pseudo-data generated at the true parameters: the central 95%
        # predictive band should cover most held-out observations.
        chains = self.constant_chains(uk_params, uk_init, 0.05)
        ens = posterior_predictive(chains, uk_synthetic_dataset, 400, seed=5)
        bands = ens.bands()
        covered = total = 0
        for name in ("price", "production", "imports", "exports"):
            idx = ens.obs_indices[name]
            observed = uk_synthetic_dataset.series(name)[idx]
            low, high = bands[name][0], bands[name][2]
            covered += int(np.sum((observed >= low) & (observed <= high)))
            total += observed.size
        assert covered / total >= 0.90


class TestSimulateDataset:
    def test_herd_survey_pattern(self, uk_params, uk_init):
        data = simulate_dataset(uk_params, uk_init,
                                ObservationNoise.uniform(0.05), seed=1)
        observed = np.flatnonzero(~np.isnan(data.herd))
        assert observed.tolist() == [5, 11, 17, 23, 29, 35, 41, 47, 53, 59]
        assert data.n_observed()["price"] == 60

    def test_deterministic(self, uk_params, uk_init):
        a = simulate_dataset(uk_params, uk_init, ObservationNoise.uniform(0.05),
                             seed=9)
        b = simulate_dataset(uk_params, uk_init, ObservationNoise.uniform(0.05),
                             seed=9)
        assert np.array_equal(a.price, b.price)

    def test_unstable_parameters_rejected(self, uk_params):
        bad_init = InitialState(1e-6, 1e-9, 1e30, 1e-9)
        with pytest.raises(DomainError, match="integration failed"):
            simulate_dataset(uk_params, bad_init, ObservationNoise.uniform(0.05))
