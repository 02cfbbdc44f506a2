#!/usr/bin/env python3
"""Gibbs/Metropolis sampler for the spatio-temporal model.

One sweep updates, in order:
  beta_0; for each SVC k: eta*_k then tau_sq_eta_k; Sigma_xi;
  rho_eta_q for each q; rho_omega; then for t = 1..T:
  beta_t, u_t, tau_sq_omega_t, sigma_sq_t; finally mu is re-derived.

Every Gaussian block is drawn from MVN(V v, V) given the full-conditional
precision V^-1 and linear term v (``*_conditional`` functions return
``(precision, linear)``). Inverse-gamma blocks return ``(shape, scale)``,
Sigma_xi returns ``(df, scale)``. Spatial correlations rho use a random
walk on logit(rho) with the log(rho) + log(1 - rho) Jacobian and O(J)
spectral determinants.

Randomness: chain k draws from PCG64 seeded by SeedSequence(seed,
spawn_key=(k,)), so chains are independent and reproducible.

Proposal tuning: during burn-in the logit-scale step size is adjusted
every ADAPT_INTERVAL sweeps toward TARGET_ACCEPTANCE and frozen after.
"""
from __future__ import print_function

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats

from . import checkpoint as checkpoint_mod
from .errors import (CholeskyFailure, DataError, InvalidConfig, NonPositiveFactor,
                     ParameterDomainError, SamplerFailure, StsaeError)
from .estimators import trend_draws
from .graph import build_eigen_system, log_factor_sum, precision_matrix, precision_quad_form
from .logs import log_json
from .model import ModelState, PosteriorDraws, derive_mu

__all__ = [
    'McmcConfig', 'MetropolisStats', 'make_rng',
    'beta0_conditional', 'eta_star_conditional', 'tau_sq_eta_conditional',
    'sigma_xi_conditional', 'beta_t_conditional', 'u_t_conditional',
    'tau_sq_omega_conditional', 'sigma_sq_conditional', 'rho_log_target',
    'log_acceptance_ratio', 'update_beta0', 'update_eta_star', 'update_tau_sq_eta',
    'update_sigma_xi', 'metropolis_rho', 'update_beta_t', 'update_u_t',
    'update_tau_sq_omega', 'update_sigma_sq', 'gibbs_sweep', 'run_chain', 'run_chains',
]

DEFAULT_ITERATIONS = 7500
DEFAULT_BURN_IN = 5000
DEFAULT_THIN = 1
DEFAULT_PROPOSAL_SD = 0.5
ADAPT_INTERVAL = 100
TARGET_ACCEPTANCE = 0.43
MAX_ADAPT_STEP = 0.1
TRACE_MODES = ('params', 'all', 'none')
SEED_LIMIT = 2 ** 64


@dataclass(eq=False)
class McmcConfig:
    total_iterations: int = DEFAULT_ITERATIONS
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    proposal_sd_rho_eta: Optional[Sequence[float]] = None
    proposal_sd_rho_omega: float = DEFAULT_PROPOSAL_SD
    adapt_during_burnin: bool = True
    seed: int = 0
    sub_model: bool = False
    traces: str = 'params'
    checkpoint_every: int = 0
    checkpoint_path: Optional[str] = None

    def __post_init__(self):
        self.total_iterations = int(self.total_iterations)
        self.burn_in = int(self.burn_in)
        self.thin = int(self.thin)
        self.seed = int(self.seed)
        if self.total_iterations <= 0:
            raise InvalidConfig('iterations must be positive')
        if self.burn_in < 0 or self.burn_in >= self.total_iterations:
            raise InvalidConfig('burn_in must satisfy 0 <= burn_in < iterations (%d)'
                                % self.total_iterations)
        if self.thin <= 0:
            raise InvalidConfig('thin must be positive')
        if self.retained <= 0:
            raise InvalidConfig('no draws retained: (iterations - burn_in) / thin < 1')
        if not (0 <= self.seed < SEED_LIMIT):
            raise InvalidConfig('seed must be an unsigned 64-bit integer')
        if self.traces not in TRACE_MODES:
            raise InvalidConfig('traces must be one of %s' % ', '.join(TRACE_MODES))
        if not self.proposal_sd_rho_omega > 0:
            raise InvalidConfig('proposal_sd_rho_omega must be positive')

    @property
    def retained(self):
        return (self.total_iterations - self.burn_in) // self.thin

    def rho_eta_sd(self, Q):
        if self.proposal_sd_rho_eta is None:
            return np.full(Q, DEFAULT_PROPOSAL_SD)
        sd = np.asarray(self.proposal_sd_rho_eta, dtype=np.float64).ravel()
        if sd.size == 1:
            sd = np.full(Q, float(sd[0]))
        if sd.size != Q or np.any(sd <= 0):
            raise InvalidConfig('proposal_sd_rho_eta needs %d positive values' % Q)
        return sd

    def as_dict(self):
        out = dict(self.__dict__)
        if out['proposal_sd_rho_eta'] is not None:
            out['proposal_sd_rho_eta'] = [float(v) for v in np.ravel(out['proposal_sd_rho_eta'])]
        return out


class MetropolisStats(object):
    """Proposal/acceptance counters and logit-scale step sizes per rho."""

    def __init__(self, step_sizes):
        self.step_size = dict((k, float(v)) for k, v in step_sizes.items())
        self.proposals = dict.fromkeys(self.step_size, 0)
        self.accepts = dict.fromkeys(self.step_size, 0)
        self.batch_proposals = dict.fromkeys(self.step_size, 0)
        self.batch_accepts = dict.fromkeys(self.step_size, 0)
        self.batches = 0

    @classmethod
    def create(cls, Q, config):
        sizes = dict(('rho_eta[%d]' % q, sd) for q, sd in enumerate(config.rho_eta_sd(Q)))
        sizes['rho_omega'] = config.proposal_sd_rho_omega
        return cls(sizes)

    def record(self, name, accepted):
        self.proposals[name] += 1
        self.batch_proposals[name] += 1
        if accepted:
            self.accepts[name] += 1
            self.batch_accepts[name] += 1

    def acceptance_rate(self, name):
        if not self.proposals[name]:
            return 0.0
        return self.accepts[name] / float(self.proposals[name])

    def adapt(self):
        self.batches += 1
        delta = min(MAX_ADAPT_STEP, 1.0 / math.sqrt(self.batches))
        for name in self.step_size:
            if not self.batch_proposals[name]:
                continue
            rate = self.batch_accepts[name] / float(self.batch_proposals[name])
            if rate > TARGET_ACCEPTANCE:
                self.step_size[name] *= math.exp(delta)
            else:
                self.step_size[name] *= math.exp(-delta)
            self.batch_proposals[name] = 0
            self.batch_accepts[name] = 0

    def as_dict(self):
        return {'step_size': self.step_size, 'proposals': self.proposals,
                'accepts': self.accepts, 'batch_proposals': self.batch_proposals,
                'batch_accepts': self.batch_accepts, 'batches': self.batches}

    @classmethod
    def from_dict(cls, data):
        stats = cls(data['step_size'])
        for key in ('proposals', 'accepts', 'batch_proposals', 'batch_accepts'):
            getattr(stats, key).update((k, int(v)) for k, v in data[key].items())
        stats.batches = int(data['batches'])
        return stats

    def summary(self):
        return dict((name, {'acceptance': self.acceptance_rate(name),
                            'step_size': self.step_size[name]}) for name in sorted(self.step_size))


def make_rng(seed, stream=0):
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(seq))


# ---- linear algebra helpers ----

def _spd_inverse(mat, label):
    try:
        factor = scipy.linalg.cho_factor(mat, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise CholeskyFailure('%s is not positive definite' % label)
    return scipy.linalg.cho_solve(factor, np.eye(mat.shape[0]))


def sample_mvn_precision(precision, linear, rng, label):
    """Draw from MVN(precision^-1 linear, precision^-1)."""
    try:
        chol = scipy.linalg.cholesky(precision, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise CholeskyFailure('full-conditional precision of %s is not positive definite' % label)
    w = scipy.linalg.solve_triangular(chol, linear, lower=True)
    z = rng.standard_normal(linear.shape[0])
    return scipy.linalg.solve_triangular(chol, w + z, lower=True, trans='T')


def _draw_invgamma(shape, scale, rng):
    return float(scipy.stats.invgamma.rvs(shape, scale=scale, random_state=rng))


def _fixed_part(state, dataset, c):
    """x_jc' beta_t for every area at data column c."""
    return dataset.x[:, c, :] @ state.beta[c + 1]


def _svc_part(state, dataset, c, skip=None):
    if state.sub_model:
        return np.zeros(dataset.J)
    out = np.zeros(dataset.J)
    for q in range(state.eta_star.shape[0]):
        if q != skip:
            out += dataset.xt[:, c, q] * state.eta_star[q]
    return out


# ---- full conditionals ----

def beta0_conditional(state, hyper):
    s0_inv = hyper.sigma0_inverse()
    sxi_inv = _spd_inverse(state.Sigma_xi, 'Sigma_xi')
    precision = s0_inv + sxi_inv
    linear = s0_inv @ hyper.mu0 + sxi_inv @ state.beta[1]
    return precision, linear


def eta_star_conditional(k, state, dataset, sys):
    J, T = dataset.J, dataset.T
    xk = dataset.xt[:, :, k]
    inv_sigma = 1.0 / state.sigma_sq
    diag = np.zeros(J)
    linear = np.zeros(J)
    for c in range(T):
        n = dataset.n[:, c]
        rest = _fixed_part(state, dataset, c) + _svc_part(state, dataset, c, skip=k) + state.u[c + 1]
        diag += n * xk[:, c] ** 2 * inv_sigma[c]
        linear += xk[:, c] * (dataset.sum_y[:, c] - n * rest) * inv_sigma[c]
    precision = precision_matrix(sys, state.rho_eta[k], state.tau_sq_eta[k]).toarray()
    precision[np.diag_indices(J)] += diag
    return precision, linear


def tau_sq_eta_conditional(k, state, hyper, sys):
    quad = precision_quad_form(sys, state.rho_eta[k], 1.0, state.eta_star[k])
    return hyper.a_eta[k] + 0.5 * sys.num_areas, hyper.b_eta[k] + 0.5 * quad


def sigma_xi_conditional(state, hyper):
    diffs = state.beta[1:] - state.beta[:-1]
    return hyper.nu_xi + diffs.shape[0], hyper.H_xi + diffs.T @ diffs


def beta_t_conditional(t, state, dataset):
    T = dataset.T
    c = t - 1
    sxi_inv = _spd_inverse(state.Sigma_xi, 'Sigma_xi')
    xc = dataset.x[:, c, :]
    n = dataset.n[:, c]
    offset = _svc_part(state, dataset, c) + state.u[t]
    prior_sum = state.beta[t - 1].copy()
    weight = 1.0
    if t < T:
        prior_sum += state.beta[t + 1]
        weight = 2.0
    precision = weight * sxi_inv + (xc * n[:, None]).T @ xc / state.sigma_sq[c]
    linear = sxi_inv @ prior_sum + xc.T @ (dataset.sum_y[:, c] - n * offset) / state.sigma_sq[c]
    return precision, linear


def u_t_conditional(t, state, dataset, sys):
    T = dataset.T
    c = t - 1
    base = precision_matrix(sys, state.rho_omega, 1.0)
    weight = 1.0 / state.tau_sq_omega[c]
    prior_term = state.u[t - 1] / state.tau_sq_omega[c]
    if t < T:
        weight += 1.0 / state.tau_sq_omega[c + 1]
        prior_term = prior_term + state.u[t + 1] / state.tau_sq_omega[c + 1]
    n = dataset.n[:, c]
    offset = _fixed_part(state, dataset, c) + _svc_part(state, dataset, c)
    precision = (base * weight).toarray()
    precision[np.diag_indices(dataset.J)] += n / state.sigma_sq[c]
    linear = base @ prior_term + (dataset.sum_y[:, c] - n * offset) / state.sigma_sq[c]
    return precision, linear


def tau_sq_omega_conditional(t, state, hyper, sys):
    c = t - 1
    increment = state.u[t] - state.u[t - 1]
    quad = precision_quad_form(sys, state.rho_omega, 1.0, increment)
    return hyper.a_omega[c] + 0.5 * sys.num_areas, hyper.b_omega[c] + 0.5 * quad


def sigma_sq_conditional(t, state, dataset, hyper):
    c = t - 1
    mu_col = _fixed_part(state, dataset, c) + _svc_part(state, dataset, c) + state.u[t]
    n_t = float(dataset.n[:, c].sum())
    return hyper.a_sigma + 0.5 * n_t, hyper.b_sigma + 0.5 * dataset.residual_ss(c, mu_col)


def _rho_terms(target, state):
    if target == 'omega':
        increments = state.u[1:] - state.u[:-1]
        return [(increments[c], state.tau_sq_omega[c]) for c in range(increments.shape[0])]
    kind, q = target
    if kind != 'eta':
        raise ValueError('unknown rho target %r' % (target,))
    return [(state.eta_star[q], state.tau_sq_eta[q])]


def _rho_name(target):
    return 'rho_omega' if target == 'omega' else 'rho_eta[%d]' % target[1]


def _current_rho(target, state):
    return state.rho_omega if target == 'omega' else float(state.rho_eta[target[1]])


def rho_log_target(target, rho, state, sys):
    """Log full conditional of logit(rho) up to a constant.

    ``target`` is 'omega' or ('eta', q).
    """
    if not (0.0 < rho < 1.0):
        raise ParameterDomainError('rho must lie in (0, 1), got %r' % (rho,))
    log_det_prec = log_factor_sum(sys, rho)
    J = sys.num_areas
    value = 0.0
    for vec, tau_sq in _rho_terms(target, state):
        log_det_cov = J * math.log(tau_sq) - log_det_prec
        value += -0.5 * log_det_cov - 0.5 * precision_quad_form(sys, rho, tau_sq, vec)
    return value + math.log(rho) + math.log(1.0 - rho)


def log_acceptance_ratio(target, rho_current, rho_proposed, state, sys):
    return rho_log_target(target, rho_proposed, state, sys) - rho_log_target(target, rho_current, state, sys)


# ---- updates ----

def update_beta0(state, hyper, rng):
    precision, linear = beta0_conditional(state, hyper)
    state.beta[0] = sample_mvn_precision(precision, linear, rng, 'beta[0]')
    return state.beta[0]


def update_eta_star(k, state, dataset, sys, rng):
    precision, linear = eta_star_conditional(k, state, dataset, sys)
    state.eta_star[k] = sample_mvn_precision(precision, linear, rng, 'eta_star[%d]' % k)
    return state.eta_star[k]


def update_tau_sq_eta(k, state, hyper, sys, rng):
    shape, scale = tau_sq_eta_conditional(k, state, hyper, sys)
    state.tau_sq_eta[k] = _draw_invgamma(shape, scale, rng)
    return state.tau_sq_eta[k]


def update_sigma_xi(state, hyper, rng):
    df, scale = sigma_xi_conditional(state, hyper)
    p = scale.shape[0]
    try:
        scipy.linalg.cholesky(scale, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise CholeskyFailure('Sigma_xi posterior scale is not positive definite')
    draw = scipy.stats.invwishart.rvs(df=df, scale=scale, random_state=rng)
    state.Sigma_xi = np.asarray(draw, dtype=np.float64).reshape(p, p)
    return state.Sigma_xi


def metropolis_rho(target, state, sys, rng, stats):
    """Random-walk step on logit(rho); returns (rho, accepted)."""
    name = _rho_name(target)
    current = _current_rho(target, state)
    step = stats.step_size[name]
    g_new = scipy.special.logit(current) + step * rng.standard_normal()
    log_u = math.log(rng.uniform())
    proposed = float(scipy.special.expit(g_new))
    accepted = False
    if 0.0 < proposed < 1.0:
        try:
            with np.errstate(over='raise', invalid='raise'):
                ratio = log_acceptance_ratio(target, current, proposed, state, sys)
            accepted = math.isfinite(ratio) and log_u < ratio
        except (FloatingPointError, OverflowError, NonPositiveFactor):
            accepted = False
    stats.record(name, accepted)
    if accepted:
        if target == 'omega':
            state.rho_omega = proposed
        else:
            state.rho_eta[target[1]] = proposed
        return proposed, True
    return current, False


def update_beta_t(t, state, dataset, rng):
    precision, linear = beta_t_conditional(t, state, dataset)
    state.beta[t] = sample_mvn_precision(precision, linear, rng, 'beta[%d]' % t)
    return state.beta[t]


def update_u_t(t, state, dataset, sys, rng):
    precision, linear = u_t_conditional(t, state, dataset, sys)
    state.u[t] = sample_mvn_precision(precision, linear, rng, 'u[%d]' % t)
    return state.u[t]


def update_tau_sq_omega(t, state, hyper, sys, rng):
    shape, scale = tau_sq_omega_conditional(t, state, hyper, sys)
    state.tau_sq_omega[t - 1] = _draw_invgamma(shape, scale, rng)
    return state.tau_sq_omega[t - 1]


def update_sigma_sq(t, state, dataset, hyper, rng):
    shape, scale = sigma_sq_conditional(t, state, dataset, hyper)
    state.sigma_sq[t - 1] = _draw_invgamma(shape, scale, rng)
    return state.sigma_sq[t - 1]


def gibbs_sweep(state, dataset, sys_eta, sys_omega, hyper, config, rng, stats, iteration=0, chain=0):
    """One full sweep; mutates and returns ``state``."""
    Q = state.eta_star.shape[0]
    if not isinstance(sys_eta, (list, tuple)):
        sys_eta = [sys_eta] * Q
    label = 'beta[0]'
    try:
        update_beta0(state, hyper, rng)
        for k in range(Q):
            label = 'eta_star[%d]' % k
            update_eta_star(k, state, dataset, sys_eta[k], rng)
            label = 'tau_sq_eta[%d]' % k
            update_tau_sq_eta(k, state, hyper, sys_eta[k], rng)
        label = 'Sigma_xi'
        update_sigma_xi(state, hyper, rng)
        for q in range(Q):
            label = 'rho_eta[%d]' % q
            metropolis_rho(('eta', q), state, sys_eta[q], rng, stats)
        label = 'rho_omega'
        metropolis_rho('omega', state, sys_omega, rng, stats)
        for t in range(1, dataset.T + 1):
            label = 'beta[%d]' % t
            update_beta_t(t, state, dataset, rng)
            label = 'u[%d]' % t
            update_u_t(t, state, dataset, sys_omega, rng)
            label = 'tau_sq_omega[%d]' % t
            update_tau_sq_omega(t, state, hyper, sys_omega, rng)
            label = 'sigma_sq[%d]' % t
            update_sigma_sq(t, state, dataset, hyper, rng)
        label = 'mu'
        state.mu = derive_mu(state, dataset)
    except (StsaeError, np.linalg.LinAlgError) as e:
        if isinstance(e, SamplerFailure):
            raise
        raise SamplerFailure(e, iteration, label, chain)
    return state


def _retained_sweeps(config):
    """1-based sweep numbers kept in (burn_in, M]."""
    first = config.burn_in + config.thin
    return list(range(first, config.total_iterations + 1, config.thin))


def _trace_buffers(mode, S, state):
    if mode == 'none':
        return {}
    names = ['beta', 'Sigma_xi', 'tau_sq_eta', 'rho_eta', 'tau_sq_omega', 'rho_omega']
    if mode == 'all':
        names += ['eta_star', 'u']
    return dict((name, np.empty((S,) + np.shape(getattr(state, name)))) for name in names)


def _restore_retained(resume, keep, buffers):
    """Copy the draws a checkpoint carries into ``buffers``; returns how many were restored."""
    before = [m for m in keep if m <= resume.iteration]
    if resume.sweeps != before:
        raise InvalidConfig('checkpoint retained sweeps %s..%s (%d draws) but burn_in/thin now retain %d '
                            'draws up to iteration %d; rerun with the original burn-in and thinning'
                            % (resume.sweeps[0] if resume.sweeps else '-',
                               resume.sweeps[-1] if resume.sweeps else '-', len(resume.sweeps),
                               len(before), resume.iteration))
    if sorted(resume.retained) != sorted(buffers):
        raise InvalidConfig('checkpoint holds draws for %s, the run expects %s'
                            % (sorted(resume.retained), sorted(buffers)))
    k = len(before)
    for name, buf in buffers.items():
        if resume.retained[name].shape[1:] != buf.shape[1:]:
            raise InvalidConfig('checkpoint draws of %s are shaped %s, expected %s'
                                % (name, resume.retained[name].shape[1:], buf.shape[1:]))
        buf[:k] = resume.retained[name]
    return k


def chain_checkpoint_path(base, chain):
    if base is None:
        return None
    return base if chain == 0 else '%s.chain%d' % (base, chain)


def run_chain(dataset, graph, hyper, config, chain=0, resume=None, sys=None):
    """Run one chain; returns (PosteriorDraws, MetropolisStats).

    ``resume`` is a checkpoint_mod.Checkpoint; the chain continues from its
    iteration with its rng state and step sizes, and starts from the draws
    the checkpoint retained, so the result equals an uninterrupted run.
    """
    if sys is None:
        sys = build_eigen_system(graph)
    rng = make_rng(config.seed, chain)
    state = ModelState.initial(dataset, hyper, sub_model=config.sub_model)
    stats = MetropolisStats.create(state.eta_star.shape[0], config)
    start = 0
    if resume is not None:
        if resume.state.sub_model != bool(config.sub_model) and dataset.Q:
            raise InvalidConfig('checkpoint sub-model mode does not match the run configuration')
        state = resume.state.copy()
        rng.bit_generator.state = resume.rng_state
        stats = MetropolisStats.from_dict(resume.stats)
        start = resume.iteration
        if start >= config.total_iterations:
            raise InvalidConfig('checkpoint is at iteration %d, nothing left to run (iterations=%d)'
                                % (start, config.total_iterations))
    state.validate()
    keep = _retained_sweeps(config)
    if not keep:
        raise DataError('no retained draws: burn-in %d leaves nothing of %d iterations'
                        % (config.burn_in, config.total_iterations))
    keep_index = dict((m, s) for s, m in enumerate(keep))
    S = len(keep)
    buffers = {'mu': np.empty((S, dataset.J, dataset.T)), 'sigma_sq': np.empty((S, dataset.T))}
    traces = _trace_buffers(config.traces, S, state)
    buffers.update(traces)
    filled = _restore_retained(resume, keep, buffers) if resume is not None else 0
    ckpt_path = chain_checkpoint_path(config.checkpoint_path, chain)
    log_json(event='chain_start', chain=chain, start=start, iterations=config.total_iterations,
             burn_in=config.burn_in, thin=config.thin, retained=S, restored=filled,
             sub_model=bool(config.sub_model))
    for i in range(start, config.total_iterations):
        sweep = i + 1
        gibbs_sweep(state, dataset, sys, sys, hyper, config, rng, stats, iteration=sweep, chain=chain)
        if config.adapt_during_burnin and sweep <= config.burn_in and sweep % ADAPT_INTERVAL == 0:
            stats.adapt()
            log_json(level='DEBUG', event='adapt', chain=chain, iteration=sweep,
                     step_size=stats.step_size)
        s = keep_index.get(sweep)
        if s is not None:
            buffers['mu'][s] = state.mu
            buffers['sigma_sq'][s] = state.sigma_sq
            for name, buf in traces.items():
                buf[s] = getattr(state, name)
            filled = s + 1
        if ckpt_path and config.checkpoint_every and sweep % config.checkpoint_every == 0:
            _save(ckpt_path, state, rng, sweep, stats, keep, buffers, filled)
    if ckpt_path:
        _save(ckpt_path, state, rng, config.total_iterations, stats, keep, buffers, filled)
    mu = buffers['mu']
    theta = trend_draws(mu) if dataset.T >= 2 else None
    draws = PosteriorDraws(mu=mu, sigma_sq=buffers['sigma_sq'], theta=theta, traces=traces,
                           burn_in=config.burn_in, thin=config.thin)
    log_json(event='chain_done', chain=chain, retained=S,
             acceptance=dict((k, v['acceptance']) for k, v in stats.summary().items()))
    return draws, stats


def _save(path, state, rng, iteration, stats, keep, buffers, filled):
    checkpoint_mod.save_checkpoint(path, state, rng, iteration, stats, sweeps=keep[:filled],
                                   retained=dict((name, buf[:filled]) for name, buf in buffers.items()))


def _run_chain_job(args):
    return run_chain(*args)


def run_chains(dataset, graph, hyper, config, n_chains=1, workers=1, resume_path=None):
    """Independent chains (chain k uses rng stream k); draws concatenated in chain order.

    With ``resume_path`` chain k restarts from its own checkpoint file.
    """
    if n_chains < 1:
        raise InvalidConfig('chains must be >= 1')
    sys = build_eigen_system(graph)
    jobs = []
    for k in range(n_chains):
        resume = None
        if resume_path:
            resume = checkpoint_mod.load_checkpoint(chain_checkpoint_path(resume_path, k))
        jobs.append((dataset, graph, hyper, config, k, resume, sys))
    if workers > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_chains)) as pool:
            results = list(pool.map(_run_chain_job, jobs))
    else:
        results = [_run_chain_job(job) for job in jobs]
    draws = PosteriorDraws.concat([r[0] for r in results])
    return draws, [r[1] for r in results]
