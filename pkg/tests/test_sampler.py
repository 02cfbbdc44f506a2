#!/usr/bin/env python3
"""Unit tests for sampler: full conditionals, Metropolis target, chains, checkpoints.

The conjugacy checks compare every Gibbs block against a brute-force log
joint density written independently with scipy.stats: for two states that
differ only in one block, the change in log joint must equal the change
in the implemented full-conditional log density.
"""
import os
import shutil
import tempfile
import unittest

import numpy as np
import scipy.stats

from stsae import checkpoint as ck
from stsae import sampler as sm
from stsae.errors import InvalidConfig, SamplerFailure
from stsae.graph import build_eigen_system, lattice_graph, load_adjacency
from stsae.model import Dataset, Hyperparameters, ModelState, derive_mu

from tests import fixtures

SLOW = os.environ.get('STSAE_SLOW') == '1'


def log_joint(state, dataset, hyper, graph):
    """Unnormalized log posterior, dense matrices throughout."""
    W = graph.adjacency_matrix().toarray()
    D = np.diag(W.sum(axis=1))
    mu = derive_mu(state, dataset)
    total = 0.0
    sd = np.sqrt(state.sigma_sq[dataset.obs_time])
    total += scipy.stats.norm.logpdf(dataset.obs_value, mu[dataset.obs_area, dataset.obs_time], sd).sum()
    total += scipy.stats.multivariate_normal.logpdf(state.beta[0], hyper.mu0, hyper.Sigma0)
    for t in range(1, dataset.T + 1):
        total += scipy.stats.multivariate_normal.logpdf(state.beta[t], state.beta[t - 1], state.Sigma_xi)
    total += scipy.stats.invwishart.logpdf(state.Sigma_xi, df=hyper.nu_xi, scale=hyper.H_xi)
    for k in range(state.eta_star.shape[0]):
        cov = state.tau_sq_eta[k] * np.linalg.inv(D - state.rho_eta[k] * W)
        total += scipy.stats.multivariate_normal.logpdf(state.eta_star[k], np.zeros(dataset.J), cov)
        total += scipy.stats.invgamma.logpdf(state.tau_sq_eta[k], hyper.a_eta[k], scale=hyper.b_eta[k])
    for t in range(1, dataset.T + 1):
        cov = state.tau_sq_omega[t - 1] * np.linalg.inv(D - state.rho_omega * W)
        total += scipy.stats.multivariate_normal.logpdf(state.u[t], state.u[t - 1], cov)
        total += scipy.stats.invgamma.logpdf(state.tau_sq_omega[t - 1], hyper.a_omega[t - 1],
                                             scale=hyper.b_omega[t - 1])
    total += scipy.stats.invgamma.logpdf(state.sigma_sq, hyper.a_sigma, scale=hyper.b_sigma).sum()
    return float(total)


def mvn_conditional_logpdf(precision, linear, value):
    cov = np.linalg.inv(precision)
    return float(scipy.stats.multivariate_normal.logpdf(value, cov @ linear, cov))


def _edge_system():
    graph = load_adjacency([('A', 'B')], {'A': 0, 'B': 1})
    return graph, build_eigen_system(graph)


def _blank_dataset(J, T, P, obs=()):
    x = np.ones((J, T, P + 1))
    areas = [o[0] for o in obs]
    times = [o[1] for o in obs]
    values = [o[2] for o in obs]
    return Dataset(x=x, xt=np.ones((J, T, min(P, 1))) if P else np.zeros((J, T, 0)),
                   obs_area=np.array(areas, dtype=np.int64), obs_time=np.array(times, dtype=np.int64),
                   obs_value=np.array(values, dtype=np.float64), svc_columns=(1,) if P else ())


def _zero_state(dataset, hyper):
    state = ModelState.initial(dataset, hyper)
    state.beta[:] = 0.0
    return state


class TestConditionalExamples(unittest.TestCase):
    def test_beta0_equal_precision_average(self):
        dataset = _blank_dataset(2, 1, 1)
        hyper = Hyperparameters.defaults(1, 1, 1, Sigma0=1.0, mu0=0.0)
        state = _zero_state(dataset, hyper)
        state.Sigma_xi = np.eye(2)
        state.beta[1] = [2.0, 2.0]
        prec, lin = sm.beta0_conditional(state, hyper)
        np.testing.assert_allclose(np.linalg.inv(prec), 0.5 * np.eye(2))
        np.testing.assert_allclose(np.linalg.solve(prec, lin), [1.0, 1.0])

    def test_beta0_hand_example(self):
        dataset = _blank_dataset(2, 1, 1)
        hyper = Hyperparameters.defaults(1, 1, 1, Sigma0=1.0, mu0=1.0)
        state = _zero_state(dataset, hyper)
        state.Sigma_xi = 0.5 * np.eye(2)
        state.beta[1] = [3.0, 3.0]
        prec, lin = sm.beta0_conditional(state, hyper)
        np.testing.assert_allclose(np.linalg.inv(prec), np.eye(2) / 3.0)
        np.testing.assert_allclose(np.linalg.solve(prec, lin), [7.0 / 3.0, 7.0 / 3.0])

    def test_eta_star_single_observation(self):
        graph, sys = _edge_system()
        r = 4.25
        dataset = _blank_dataset(2, 1, 1, obs=[(0, 0, r)])
        hyper = Hyperparameters.defaults(1, 1, 1)
        state = _zero_state(dataset, hyper)
        state.sigma_sq[:] = 1.0
        state.tau_sq_eta[:] = 1.0
        state.rho_eta[:] = 0.5
        prec, lin = sm.eta_star_conditional(0, state, dataset, sys)
        np.testing.assert_allclose(prec, [[2.0, -0.5], [-0.5, 1.0]])
        np.testing.assert_allclose(lin, [r, 0.0])

    def test_eta_star_without_data_is_car_prior(self):
        graph, sys = _edge_system()
        dataset = _blank_dataset(2, 2, 1)
        hyper = Hyperparameters.defaults(1, 1, 2)
        state = _zero_state(dataset, hyper)
        state.tau_sq_eta[:] = 2.0
        state.rho_eta[:] = 0.3
        prec, lin = sm.eta_star_conditional(0, state, dataset, sys)
        np.testing.assert_allclose(prec, np.array([[1.0, -0.3], [-0.3, 1.0]]) / 2.0)
        np.testing.assert_array_equal(lin, [0.0, 0.0])

    def test_tau_sq_eta(self):
        graph, sys = _edge_system()
        dataset = _blank_dataset(2, 1, 1)
        hyper = Hyperparameters.defaults(1, 1, 1, a_eta=2.0, b_eta=100.0)
        state = _zero_state(dataset, hyper)
        self.assertEqual(sm.tau_sq_eta_conditional(0, state, hyper, sys), (3.0, 100.0))
        state.eta_star[0] = [1.0, 1.0]
        state.rho_eta[0] = 0.5
        shape, scale = sm.tau_sq_eta_conditional(0, state, hyper, sys)
        self.assertEqual(shape, 3.0)
        self.assertAlmostEqual(scale, 100.5)

    def test_sigma_xi_scalar(self):
        dataset = _blank_dataset(1, 2, 0)
        hyper = Hyperparameters.defaults(0, 0, 2, nu_xi=3.0, H_xi=1.0)
        state = _zero_state(dataset, hyper)
        state.beta[:, 0] = [0.0, 1.0, 3.0]
        df, scale = sm.sigma_xi_conditional(state, hyper)
        self.assertEqual(df, 5.0)
        np.testing.assert_allclose(scale, [[6.0]])
        state.beta[:, 0] = 2.0
        df, scale = sm.sigma_xi_conditional(state, hyper)
        np.testing.assert_allclose(scale, hyper.H_xi)

    def test_beta_t_cases(self):
        dataset = _blank_dataset(1, 3, 0, obs=[(0, 1, 5.0)])
        hyper = Hyperparameters.defaults(0, 0, 3)
        state = _zero_state(dataset, hyper)
        state.Sigma_xi = np.eye(1)
        state.sigma_sq[:] = 1.0
        state.beta[:, 0] = [0.0, 1.0, 0.0, 3.0]
        prec, lin = sm.beta_t_conditional(2, state, dataset)
        np.testing.assert_allclose(prec, [[3.0]])
        np.testing.assert_allclose(lin / prec[0], [3.0])
        # t=1 has no data: smoothing average of beta_0 and beta_2
        state.beta[:, 0] = [2.0, 0.0, 4.0, 0.0]
        prec, lin = sm.beta_t_conditional(1, state, dataset)
        np.testing.assert_allclose(prec, [[2.0]])
        np.testing.assert_allclose(np.linalg.solve(prec, lin), [3.0])
        # t=T without data: prior propagation from beta_{T-1}
        prec, lin = sm.beta_t_conditional(3, state, dataset)
        np.testing.assert_allclose(prec, [[1.0]])
        np.testing.assert_allclose(lin, [4.0])

    def test_u_t_without_data(self):
        graph, sys = _edge_system()
        dataset = _blank_dataset(2, 3, 0)
        hyper = Hyperparameters.defaults(0, 0, 3)
        state = _zero_state(dataset, hyper)
        state.rho_omega = 0.5
        state.tau_sq_omega[:] = 1.0
        state.u[1] = [1.0, -2.0]
        state.u[3] = [3.0, 4.0]
        prec, lin = sm.u_t_conditional(2, state, dataset, sys)
        np.testing.assert_allclose(np.linalg.solve(prec, lin), [2.0, 1.0])
        state.u[2] = [0.5, 0.25]
        prec, lin = sm.u_t_conditional(3, state, dataset, sys)
        np.testing.assert_allclose(prec, [[1.0, -0.5], [-0.5, 1.0]])
        np.testing.assert_allclose(np.linalg.solve(prec, lin), [0.5, 0.25])

    def test_tau_sq_omega(self):
        graph, sys = _edge_system()
        dataset = _blank_dataset(2, 2, 0)
        hyper = Hyperparameters.defaults(0, 0, 2, a_omega=2.0, b_omega=100.0)
        state = _zero_state(dataset, hyper)
        state.rho_omega = 0.5
        self.assertEqual(sm.tau_sq_omega_conditional(1, state, hyper, sys), (3.0, 100.0))
        state.u[1] = [1.0, 1.0]
        shape, scale = sm.tau_sq_omega_conditional(1, state, hyper, sys)
        self.assertAlmostEqual(scale, 100.5)

    def test_sigma_sq(self):
        dataset = _blank_dataset(1, 2, 0, obs=[(0, 0, 1.0), (0, 0, -1.0)])
        hyper = Hyperparameters.defaults(0, 0, 2, a_sigma=2.0, b_sigma=100.0)
        state = _zero_state(dataset, hyper)
        self.assertEqual(sm.sigma_sq_conditional(1, state, dataset, hyper), (3.0, 101.0))
        self.assertEqual(sm.sigma_sq_conditional(2, state, dataset, hyper), (2.0, 100.0))


class TestConjugacyOracle(unittest.TestCase):
    """J=4, T=3, P=Q=1: each block's full conditional against the brute-force joint."""

    PAIRS = 20

    def setUp(self):
        self.rng = np.random.default_rng(42)
        self.dataset = fixtures.small_dataset(self.rng)
        self.graph = fixtures.square_graph()
        self.sys = build_eigen_system(self.graph)
        self.hyper = Hyperparameters.defaults(1, 1, 3, a_sigma=3.0, b_sigma=2.0, a_eta=3.0, b_eta=2.0,
                                              a_omega=3.0, b_omega=2.0, nu_xi=5.0, H_xi=1.0,
                                              mu0=0.5, Sigma0=4.0)

    def _check(self, block, perturb, conditional_logpdf):
        for _ in range(self.PAIRS):
            s1 = fixtures.random_state(self.rng, self.dataset, self.hyper)
            s2 = s1.copy()
            perturb(s2)
            expected = log_joint(s2, self.dataset, self.hyper, self.graph) \
                - log_joint(s1, self.dataset, self.hyper, self.graph)
            got = conditional_logpdf(s1, s2)
            self.assertLessEqual(abs(got - expected), 1e-8 * max(1.0, abs(expected)),
                                 '%s: %r vs %r' % (block, got, expected))

    def _gaussian(self, conditional, get):
        def logpdf(s1, s2):
            prec, lin = conditional(s1)
            return mvn_conditional_logpdf(prec, lin, get(s2)) - mvn_conditional_logpdf(prec, lin, get(s1))
        return logpdf

    def _invgamma(self, conditional, get):
        def logpdf(s1, s2):
            shape, scale = conditional(s1)
            return float(scipy.stats.invgamma.logpdf(get(s2), shape, scale=scale)
                         - scipy.stats.invgamma.logpdf(get(s1), shape, scale=scale))
        return logpdf

    def test_beta0(self):
        def perturb(s):
            s.beta[0] = self.rng.standard_normal(2)
        self._check('beta0', perturb, self._gaussian(lambda s: sm.beta0_conditional(s, self.hyper),
                                                     lambda s: s.beta[0]))

    def test_eta_star(self):
        def perturb(s):
            s.eta_star[0] = self.rng.standard_normal(4)
        cond = self._gaussian(lambda s: sm.eta_star_conditional(0, s, self.dataset, self.sys),
                              lambda s: s.eta_star[0])
        self._check('eta_star', perturb, cond)

    def test_tau_sq_eta(self):
        def perturb(s):
            s.tau_sq_eta[0] = self.rng.uniform(0.2, 3.0)
        cond = self._invgamma(lambda s: sm.tau_sq_eta_conditional(0, s, self.hyper, self.sys),
                              lambda s: s.tau_sq_eta[0])
        self._check('tau_sq_eta', perturb, cond)

    def test_sigma_xi(self):
        def perturb(s):
            a = self.rng.standard_normal((2, 2))
            s.Sigma_xi = a @ a.T + np.eye(2)

        def logpdf(s1, s2):
            df, scale = sm.sigma_xi_conditional(s1, self.hyper)
            return float(scipy.stats.invwishart.logpdf(s2.Sigma_xi, df=df, scale=scale)
                         - scipy.stats.invwishart.logpdf(s1.Sigma_xi, df=df, scale=scale))
        self._check('Sigma_xi', perturb, logpdf)

    def test_beta_t(self):
        for t in (1, 2, 3):
            def perturb(s, t=t):
                s.beta[t] = self.rng.standard_normal(2)
            cond = self._gaussian(lambda s, t=t: sm.beta_t_conditional(t, s, self.dataset),
                                  lambda s, t=t: s.beta[t])
            self._check('beta[%d]' % t, perturb, cond)

    def test_u_t(self):
        for t in (1, 2, 3):
            def perturb(s, t=t):
                s.u[t] = self.rng.standard_normal(4)
            cond = self._gaussian(lambda s, t=t: sm.u_t_conditional(t, s, self.dataset, self.sys),
                                  lambda s, t=t: s.u[t])
            self._check('u[%d]' % t, perturb, cond)

    def test_tau_sq_omega(self):
        for t in (1, 2, 3):
            def perturb(s, t=t):
                s.tau_sq_omega[t - 1] = self.rng.uniform(0.2, 3.0)
            cond = self._invgamma(lambda s, t=t: sm.tau_sq_omega_conditional(t, s, self.hyper, self.sys),
                                  lambda s, t=t: s.tau_sq_omega[t - 1])
            self._check('tau_sq_omega[%d]' % t, perturb, cond)

    def test_sigma_sq(self):
        for t in (1, 2, 3):
            def perturb(s, t=t):
                s.sigma_sq[t - 1] = self.rng.uniform(0.2, 3.0)
            cond = self._invgamma(lambda s, t=t: sm.sigma_sq_conditional(t, s, self.dataset, self.hyper),
                                  lambda s, t=t: s.sigma_sq[t - 1])
            self._check('sigma_sq[%d]' % t, perturb, cond)


class TestMetropolis(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(9)
        self.dataset = fixtures.small_dataset(self.rng)
        self.graph = fixtures.square_graph()
        self.sys = build_eigen_system(self.graph)
        self.hyper = fixtures.default_hyper(self.dataset)
        W = self.graph.adjacency_matrix().toarray()
        self.W = W
        self.D = np.diag(W.sum(axis=1))

    def _dense_target(self, target, rho, state):
        if target == 'omega':
            terms = [(state.u[t] - state.u[t - 1], state.tau_sq_omega[t - 1]) for t in range(1, state.u.shape[0])]
        else:
            terms = [(state.eta_star[target[1]], state.tau_sq_eta[target[1]])]
        total = 0.0
        for vec, tau_sq in terms:
            cov = tau_sq * np.linalg.inv(self.D - rho * self.W)
            total += scipy.stats.multivariate_normal.logpdf(vec, np.zeros(len(vec)), cov)
        return total + np.log(rho) + np.log(1.0 - rho)

    def test_log_ratio_matches_dense_oracle(self):
        for target in ('omega', ('eta', 0)):
            for _ in range(10):
                state = fixtures.random_state(self.rng, self.dataset, self.hyper)
                r1, r2 = (float(v) for v in self.rng.uniform(0.01, 0.99, size=2))
                got = sm.log_acceptance_ratio(target, r1, r2, state, self.sys)
                expected = self._dense_target(target, r2, state) - self._dense_target(target, r1, state)
                self.assertAlmostEqual(got, expected, delta=1e-9 * max(1.0, abs(expected)))
                prob = min(1.0, float(np.exp(got)))
                self.assertAlmostEqual(prob, min(1.0, float(np.exp(expected))), delta=1e-9)

    def test_jacobian_term_at_half(self):
        state = fixtures.random_state(self.rng, self.dataset, self.hyper)
        state.u[:] = 0.0
        rho = 0.5
        cov_terms = sum(-0.5 * (4 * np.log(tau) - np.linalg.slogdet(self.D - rho * self.W)[1])
                        for tau in state.tau_sq_omega)
        jacobian = sm.rho_log_target('omega', rho, state, self.sys) - cov_terms
        self.assertAlmostEqual(jacobian, -1.386294, places=6)

    def test_same_value_always_accepted(self):
        state = fixtures.random_state(self.rng, self.dataset, self.hyper)
        self.assertEqual(sm.log_acceptance_ratio('omega', 0.4, 0.4, state, self.sys), 0.0)

    def test_metropolis_updates_stats_and_state(self):
        state = fixtures.random_state(self.rng, self.dataset, self.hyper)
        stats = sm.MetropolisStats.create(1, sm.McmcConfig(total_iterations=2, burn_in=1))
        rng = sm.make_rng(1)
        for _ in range(50):
            rho, accepted = sm.metropolis_rho('omega', state, self.sys, rng, stats)
            self.assertTrue(0.0 < rho < 1.0)
            self.assertEqual(rho, state.rho_omega)
        self.assertEqual(stats.proposals['rho_omega'], 50)
        self.assertEqual(stats.proposals['rho_eta[0]'], 0)

    def test_adaptation_direction(self):
        stats = sm.MetropolisStats({'rho_omega': 0.5})
        for _ in range(10):
            stats.record('rho_omega', True)
        stats.adapt()
        self.assertAlmostEqual(stats.step_size['rho_omega'], 0.5 * np.exp(0.1))
        for _ in range(10):
            stats.record('rho_omega', False)
        stats.adapt()
        self.assertAlmostEqual(stats.step_size['rho_omega'], 0.5)
        back = sm.MetropolisStats.from_dict(stats.as_dict())
        self.assertEqual(back.as_dict(), stats.as_dict())


class TestChains(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='stsae_test_')
        self.rng = np.random.default_rng(21)
        self.dataset = fixtures.small_dataset(self.rng)
        self.graph = fixtures.square_graph()
        self.hyper = fixtures.default_hyper(self.dataset)

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_retained_draw_counts(self):
        config = sm.McmcConfig(total_iterations=10, burn_in=5, thin=1, seed=1)
        draws, stats = sm.run_chain(self.dataset, self.graph, self.hyper, config)
        self.assertEqual(draws.S, 5)
        self.assertEqual(draws.mu.shape, (5, 4, 3))
        self.assertEqual(draws.theta.shape, (5, 4))
        self.assertEqual(draws.traces['beta'].shape, (5, 4, 2))
        config = sm.McmcConfig(total_iterations=10, burn_in=4, thin=2, seed=1)
        draws, _ = sm.run_chain(self.dataset, self.graph, self.hyper, config)
        self.assertEqual(draws.S, config.retained)
        self.assertEqual(draws.S, 3)

    def test_config_validation(self):
        with self.assertRaises(InvalidConfig):
            sm.McmcConfig(total_iterations=10, burn_in=10)
        with self.assertRaises(InvalidConfig):
            sm.McmcConfig(total_iterations=10, burn_in=5, thin=0)
        with self.assertRaises(InvalidConfig):
            sm.McmcConfig(traces='some')
        self.assertEqual(sm.McmcConfig().retained, 2500)

    def test_same_seed_is_bit_identical(self):
        config = sm.McmcConfig(total_iterations=15, burn_in=5, seed=77)
        a, _ = sm.run_chain(self.dataset, self.graph, self.hyper, config)
        b, _ = sm.run_chain(self.dataset, self.graph, self.hyper, config)
        np.testing.assert_array_equal(a.mu, b.mu)
        np.testing.assert_array_equal(a.sigma_sq, b.sigma_sq)
        other = sm.McmcConfig(total_iterations=15, burn_in=5, seed=78)
        c, _ = sm.run_chain(self.dataset, self.graph, self.hyper, other)
        self.assertFalse(np.array_equal(a.mu, c.mu))

    def test_chains_use_distinct_streams(self):
        config = sm.McmcConfig(total_iterations=8, burn_in=4, seed=3)
        draws, stats = sm.run_chains(self.dataset, self.graph, self.hyper, config, n_chains=2)
        self.assertEqual(draws.chain_sizes, [4, 4])
        self.assertEqual(len(stats), 2)
        self.assertFalse(np.array_equal(draws.mu[:4], draws.mu[4:]))

    def test_u0_stays_zero_and_sub_model_skips_svc(self):
        sys = build_eigen_system(self.graph)
        for sub_model in (False, True):
            config = sm.McmcConfig(total_iterations=2, burn_in=1, sub_model=sub_model)
            state = ModelState.initial(self.dataset, self.hyper, sub_model=sub_model)
            stats = sm.MetropolisStats.create(state.eta_star.shape[0], config)
            rng = sm.make_rng(4)
            for i in range(25):
                sm.gibbs_sweep(state, self.dataset, sys, sys, self.hyper, config, rng, stats, iteration=i)
                self.assertTrue(np.all(state.u[0] == 0.0))
            if sub_model:
                self.assertEqual(sorted(stats.proposals), ['rho_omega'])
                self.assertEqual(state.eta_star.shape, (0, 4))
            else:
                self.assertEqual(stats.proposals['rho_eta[0]'], 25)
            np.testing.assert_allclose(state.mu, derive_mu(state, self.dataset))

    def test_failure_names_parameter_and_iteration(self):
        sys = build_eigen_system(self.graph)
        config = sm.McmcConfig(total_iterations=2, burn_in=1)
        state = ModelState.initial(self.dataset, self.hyper)
        state.Sigma_xi = -np.eye(2)
        stats = sm.MetropolisStats.create(1, config)
        with self.assertRaises(SamplerFailure) as ctx:
            sm.gibbs_sweep(state, self.dataset, sys, sys, self.hyper, config, sm.make_rng(0), stats,
                           iteration=7, chain=1)
        self.assertEqual(ctx.exception.parameter, 'beta[0]')
        self.assertEqual(ctx.exception.iteration, 7)
        self.assertEqual(ctx.exception.exit_code, 3)
        self.assertIn('iteration 7', str(ctx.exception))

    def test_resume_matches_uninterrupted_run(self):
        path = os.path.join(self.tmpdir, 'checkpoint.bin')
        first = sm.McmcConfig(total_iterations=10, burn_in=5, seed=12, checkpoint_path=path)
        sm.run_chain(self.dataset, self.graph, self.hyper, first)
        saved = ck.load_checkpoint(path)
        self.assertEqual(saved.iteration, 10)
        self.assertEqual(saved.sweeps, [6, 7, 8, 9, 10])
        full = sm.McmcConfig(total_iterations=20, burn_in=5, seed=12)
        resumed, _ = sm.run_chain(self.dataset, self.graph, self.hyper, full, resume=saved)
        contiguous, _ = sm.run_chain(self.dataset, self.graph, self.hyper, full)
        self.assertEqual(resumed.S, 15)
        np.testing.assert_array_equal(resumed.mu, contiguous.mu)
        np.testing.assert_array_equal(resumed.sigma_sq, contiguous.sigma_sq)
        np.testing.assert_array_equal(resumed.theta, contiguous.theta)
        for name in contiguous.traces:
            np.testing.assert_array_equal(resumed.traces[name], contiguous.traces[name])

    def test_resume_from_mid_run_checkpoint(self):
        path = os.path.join(self.tmpdir, 'checkpoint.bin')
        config = sm.McmcConfig(total_iterations=12, burn_in=4, thin=2, seed=5, checkpoint_path=path,
                               checkpoint_every=3)
        contiguous, _ = sm.run_chain(self.dataset, self.graph, self.hyper, config)
        first = sm.McmcConfig(total_iterations=9, burn_in=4, thin=2, seed=5, checkpoint_path=path)
        sm.run_chain(self.dataset, self.graph, self.hyper, first)
        saved = ck.load_checkpoint(path)
        self.assertEqual(saved.sweeps, [6, 8])
        resumed, _ = sm.run_chain(self.dataset, self.graph, self.hyper,
                                  sm.McmcConfig(total_iterations=12, burn_in=4, thin=2, seed=5), resume=saved)
        np.testing.assert_array_equal(resumed.mu, contiguous.mu)

    def test_resume_with_other_thinning_is_rejected(self):
        path = os.path.join(self.tmpdir, 'checkpoint.bin')
        first = sm.McmcConfig(total_iterations=10, burn_in=5, seed=12, checkpoint_path=path)
        sm.run_chain(self.dataset, self.graph, self.hyper, first)
        saved = ck.load_checkpoint(path)
        with self.assertRaises(InvalidConfig):
            sm.run_chain(self.dataset, self.graph, self.hyper,
                         sm.McmcConfig(total_iterations=20, burn_in=5, thin=2, seed=12), resume=saved)
        with self.assertRaises(InvalidConfig):
            sm.run_chain(self.dataset, self.graph, self.hyper,
                         sm.McmcConfig(total_iterations=20, burn_in=5, seed=12, traces='none'), resume=saved)

    def test_resume_past_the_end_is_rejected(self):
        path = os.path.join(self.tmpdir, 'checkpoint.bin')
        config = sm.McmcConfig(total_iterations=6, burn_in=3, seed=2, checkpoint_path=path)
        sm.run_chain(self.dataset, self.graph, self.hyper, config)
        with self.assertRaises(InvalidConfig):
            sm.run_chain(self.dataset, self.graph, self.hyper, config, resume=ck.load_checkpoint(path))


class TestPriorRecovery(unittest.TestCase):
    """No observations: variance draws follow their inverse-gamma priors."""

    def _run(self, sweeps):
        dataset = fixtures.empty_dataset()
        hyper = Hyperparameters.defaults(1, 1, 3, a_sigma=5.0, b_sigma=4.0, a_eta=5.0, b_eta=4.0,
                                         a_omega=5.0, b_omega=4.0)
        config = sm.McmcConfig(total_iterations=sweeps + 100, burn_in=100, seed=8)
        draws, _ = sm.run_chain(dataset, fixtures.square_graph(), hyper, config)
        return draws

    def test_sigma_sq_prior_mean(self):
        draws = self._run(4000)
        np.testing.assert_allclose(draws.sigma_sq.mean(axis=0), 1.0, rtol=0.05)

    @unittest.skipUnless(SLOW, 'set STSAE_SLOW=1 for long statistical checks')
    def test_all_variance_priors_recovered(self):
        draws = self._run(50000)
        np.testing.assert_allclose(draws.sigma_sq.mean(axis=0), 1.0, rtol=0.05)
        np.testing.assert_allclose(draws.traces['tau_sq_eta'].mean(axis=0), 1.0, rtol=0.05)
        np.testing.assert_allclose(draws.traces['tau_sq_omega'].mean(axis=0), 1.0, rtol=0.05)


def simulate_from_model(rng, graph, T=5, plots=5):
    """Draw a dataset from the model with known parameters; returns (dataset, truth)."""
    J = graph.num_areas
    W = graph.adjacency_matrix().toarray()
    D = np.diag(W.sum(axis=1))
    cov = rng.uniform(0.0, 2.0, size=(J, T))
    x = np.stack([np.ones((J, T)), cov], axis=2)
    beta = np.zeros((T + 1, 2))
    beta[0] = [10.0, 2.0]
    for t in range(1, T + 1):
        beta[t] = beta[t - 1] + rng.normal(0.0, 0.3, size=2)
    eta = rng.multivariate_normal(np.zeros(J), 0.5 * np.linalg.inv(D - 0.8 * W))
    u = np.zeros((T + 1, J))
    for t in range(1, T + 1):
        u[t] = u[t - 1] + rng.multivariate_normal(np.zeros(J), 0.2 * np.linalg.inv(D - 0.8 * W))
    sigma_sq = rng.uniform(0.5, 1.5, size=T)
    areas, times, values = [], [], []
    for j in range(J):
        for c in range(T):
            mu = x[j, c] @ beta[c + 1] + cov[j, c] * eta[j] + u[c + 1, j]
            for _ in range(plots):
                areas.append(j)
                times.append(c)
                values.append(mu + rng.normal(0.0, np.sqrt(sigma_sq[c])))
    dataset = Dataset(x=x, xt=cov[:, :, None].copy(), obs_area=np.array(areas), obs_time=np.array(times),
                      obs_value=np.array(values), svc_columns=(1,))
    return dataset, {'beta': beta, 'sigma_sq': sigma_sq}


@unittest.skipUnless(SLOW, 'set STSAE_SLOW=1 for long statistical checks')
class TestParameterRecovery(unittest.TestCase):
    def test_beta_coverage_and_sigma_sq(self):
        graph = lattice_graph(4, 5)
        covered = []
        sigma_err = []
        for r in range(50):
            rng = np.random.default_rng(1000 + r)
            dataset, truth = simulate_from_model(rng, graph)
            hyper = Hyperparameters.defaults(1, 1, 5, b_sigma=1.0, b_omega=1.0, b_eta=1.0, H_xi=0.5)
            config = sm.McmcConfig(total_iterations=4000, burn_in=2000, seed=r)
            draws, _ = sm.run_chains(dataset, graph, hyper, config, n_chains=3)
            beta = draws.traces['beta'][:, 1:, :]
            lo = np.quantile(beta, 0.025, axis=0)
            hi = np.quantile(beta, 0.975, axis=0)
            covered.extend(((lo <= truth['beta'][1:]) & (truth['beta'][1:] <= hi)).ravel())
            sigma_err.append(np.mean(np.abs(draws.sigma_sq.mean(axis=0) / truth['sigma_sq'] - 1.0)))
        self.assertGreaterEqual(np.mean(covered), 0.88)
        self.assertLessEqual(np.mean(sigma_err), 0.15)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
