#!/usr/bin/env python3
"""Direct estimates, posterior trends, WAIC and draw summaries.

Direct (design-based) estimate for cell (j, t) with n plots:
  mean     = sum(y) / n
  variance = sum((y - mean)^2) / (n (n - 1))
Missing reasons: NoPlots (n = 0: mean and variance missing), OnePlot
(n = 1: variance missing), AllIdentical (every y equal: variance would be
exactly 0 and is reported missing). Confidence interval: mean +/- 1.96 sd.

Trend: per draw and area, the OLS slope of mu on t = 1..T.

WAIC: pointwise over plot observations,
  lppd_i = log mean_m N(y_i | mu^m_jt, sigma_sq^m_t)
  p_i    = sample variance over m of log N(y_i | .)
  elpd   = sum(lppd_i - p_i), waic = -2 elpd
Standard errors are sqrt(N * var_i(pointwise contribution)).
"""
from __future__ import print_function

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import arviz as az
import numpy as np
import scipy.special

from .errors import DegenerateTime, DimensionMismatch, MisalignedDraws

__all__ = ['DirectEstimates', 'WaicReport', 'NO_PLOTS', 'ONE_PLOT', 'ALL_IDENTICAL',
           'direct_estimates', 'direct_intervals', 'trend_draws', 'significant_trends',
           'summarize_draws', 'model_intervals', 'pointwise_log_likelihood', 'waic',
           'compare_waic', 'split_rhat', 'effective_sample_size']

NO_PLOTS = 'NoPlots'
ONE_PLOT = 'OnePlot'
ALL_IDENTICAL = 'AllIdentical'
Z_95 = 1.959963984540054
DEFAULT_LEVEL = 0.95
LOG_2PI = math.log(2.0 * math.pi)


@dataclass(eq=False)
class DirectEstimates:
    """mean/variance are NaN where missing; missing_reason is None or a reason string."""

    mean: np.ndarray
    variance: np.ndarray
    n: np.ndarray
    missing_reason: np.ndarray

    def present(self):
        return ~np.isnan(self.mean), ~np.isnan(self.variance)


def direct_estimates(dataset):
    J, T = dataset.J, dataset.T
    mean = np.full((J, T), np.nan)
    variance = np.full((J, T), np.nan)
    reason = np.full((J, T), None, dtype=object)
    groups = dataset.grouped_values()
    for j in range(J):
        for c in range(T):
            y = groups.get((j, c))
            if y is None:
                reason[j, c] = NO_PLOTS
                continue
            n = y.size
            m = float(np.sum(y)) / n
            mean[j, c] = m
            if n == 1:
                reason[j, c] = ONE_PLOT
            elif np.all(y == y[0]):
                reason[j, c] = ALL_IDENTICAL
            else:
                dev = y - m
                variance[j, c] = float(np.sum(dev * dev)) / (n * (n - 1.0))
    return DirectEstimates(mean=mean, variance=variance, n=np.array(dataset.n), missing_reason=reason)


def direct_intervals(estimates, z=Z_95):
    half = z * np.sqrt(estimates.variance)
    return estimates.mean - half, estimates.mean + half


def trend_draws(mu_draws):
    """OLS slope of mu over t = 1..T for every draw and area: [S][J]."""
    mu_draws = np.asarray(mu_draws, dtype=np.float64)
    if mu_draws.ndim != 3:
        raise DimensionMismatch('mu draws must be [S][J][T], got shape %s' % (mu_draws.shape,))
    T = mu_draws.shape[2]
    if T < 2:
        raise DegenerateTime('trend needs at least two time points, got T=%d' % T)
    half = T // 2
    # pair t with T + 1 - t: deviations from the mean time are exact opposites
    dev = np.arange(T, 0, -1)[:half] - (T + 1) / 2.0
    ssd = float(np.sum((np.arange(1, T + 1) - (T + 1) / 2.0) ** 2))
    upper = mu_draws[:, :, ::-1][:, :, :half]
    lower = mu_draws[:, :, :half]
    return np.einsum('sjh,h->sj', upper - lower, dev) / ssd


def _tail_probs(level):
    if not (0.0 < level < 1.0):
        raise ValueError('level must lie in (0, 1), got %r' % (level,))
    alpha = (1.0 - level) / 2.0
    return alpha, 1.0 - alpha


def summarize_draws(draws, level=DEFAULT_LEVEL):
    """Mean, sd, lower, median, upper along axis 0 (linear-interpolated quantiles)."""
    draws = np.asarray(draws, dtype=np.float64)
    lo, hi = _tail_probs(level)
    q = np.quantile(draws, [lo, 0.5, hi], axis=0, method='linear')
    return {'mean': draws.mean(axis=0), 'sd': draws.std(axis=0),
            'lower': q[0], 'median': q[1], 'upper': q[2]}


def model_intervals(mu_draws, level=DEFAULT_LEVEL):
    summary = summarize_draws(mu_draws, level)
    return summary['mean'], summary['lower'], summary['upper']


def significant_trends(theta_draws, level=DEFAULT_LEVEL):
    """Per-area mean, equal-tailed interval and whether it excludes 0."""
    theta_draws = np.asarray(theta_draws, dtype=np.float64)
    if theta_draws.ndim != 2 or theta_draws.shape[0] < 2:
        raise DimensionMismatch('trend draws must be [S][J] with S >= 2')
    summary = summarize_draws(theta_draws, level)
    significant = (summary['lower'] > 0.0) | (summary['upper'] < 0.0)
    return {'mean': summary['mean'], 'lower': summary['lower'], 'upper': summary['upper'],
            'significant': significant}


@dataclass(eq=False)
class WaicReport:
    elpd_waic: float
    se_elpd_waic: float
    p_waic: float
    se_p_waic: float
    waic: float
    se_waic: float
    pointwise_elpd: np.ndarray
    pointwise_p: np.ndarray
    elpd_diff: Optional[float] = None
    se_elpd_diff: Optional[float] = None
    extra: Dict[str, object] = field(default_factory=dict)

    @property
    def n_obs(self):
        return int(self.pointwise_elpd.size)

    def as_dict(self, pointwise=False):
        out = {'elpd_waic': self.elpd_waic, 'se_elpd_waic': self.se_elpd_waic,
               'p_waic': self.p_waic, 'se_p_waic': self.se_p_waic,
               'waic': self.waic, 'se_waic': self.se_waic,
               'elpd_diff': self.elpd_diff, 'se_elpd_diff': self.se_elpd_diff,
               'n_obs': self.n_obs}
        if pointwise:
            out['pointwise_elpd'] = [float(v) for v in self.pointwise_elpd]
            out['pointwise_p'] = [float(v) for v in self.pointwise_p]
        return out

    @classmethod
    def from_dict(cls, data):
        return cls(elpd_waic=data['elpd_waic'], se_elpd_waic=data['se_elpd_waic'],
                   p_waic=data['p_waic'], se_p_waic=data['se_p_waic'],
                   waic=data['waic'], se_waic=data['se_waic'],
                   pointwise_elpd=np.asarray(data['pointwise_elpd'], dtype=np.float64),
                   pointwise_p=np.asarray(data['pointwise_p'], dtype=np.float64),
                   elpd_diff=data.get('elpd_diff'), se_elpd_diff=data.get('se_elpd_diff'))


def _se_of_sum(values):
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n < 2:
        return 0.0
    return math.sqrt(n * float(np.var(values, ddof=1)))


def pointwise_log_likelihood(dataset, mu_draws, sigma_sq_draws):
    """[S][N] log N(y_i | mu^m at the plot's cell, sigma_sq^m at its time)."""
    mu_draws = np.asarray(mu_draws, dtype=np.float64)
    sigma_sq_draws = np.asarray(sigma_sq_draws, dtype=np.float64)
    S = mu_draws.shape[0]
    if mu_draws.shape[1:] != (dataset.J, dataset.T):
        raise MisalignedDraws('mu draws shaped %s, dataset has J=%d T=%d'
                              % (mu_draws.shape, dataset.J, dataset.T))
    if sigma_sq_draws.shape != (S, dataset.T):
        raise MisalignedDraws('sigma_sq draws shaped %s, expected (%d, %d)'
                              % (sigma_sq_draws.shape, S, dataset.T))
    mu = mu_draws[:, dataset.obs_area, dataset.obs_time]
    var = sigma_sq_draws[:, dataset.obs_time]
    resid = dataset.obs_value[None, :] - mu
    return -0.5 * (LOG_2PI + np.log(var) + resid * resid / var)


def waic(dataset, mu_draws, sigma_sq_draws):
    loglik = pointwise_log_likelihood(dataset, mu_draws, sigma_sq_draws)
    S = loglik.shape[0]
    lppd = scipy.special.logsumexp(loglik, axis=0) - math.log(S)
    p = np.var(loglik, axis=0, ddof=1) if S > 1 else np.zeros(loglik.shape[1])
    elpd_i = lppd - p
    elpd = float(np.sum(elpd_i))
    return WaicReport(
        elpd_waic=elpd, se_elpd_waic=_se_of_sum(elpd_i),
        p_waic=float(np.sum(p)), se_p_waic=_se_of_sum(p),
        waic=-2.0 * elpd, se_waic=_se_of_sum(-2.0 * elpd_i),
        pointwise_elpd=elpd_i, pointwise_p=p,
    )


def compare_waic(reports):
    """Order models by elpd (best first) and fill elpd_diff relative to the best.

    ``reports`` maps model name -> WaicReport; returns a list of (name, report).
    """
    items = list(reports.items())
    sizes = set(r.n_obs for _, r in items)
    if len(sizes) != 1:
        raise MisalignedDraws('WAIC reports cover different numbers of observations: %s'
                              % sorted(sizes))
    items.sort(key=lambda kv: -kv[1].elpd_waic)
    best = items[0][1]
    for _, report in items:
        diff = report.pointwise_elpd - best.pointwise_elpd
        report.elpd_diff = float(np.sum(diff))
        report.se_elpd_diff = _se_of_sum(diff)
    return items


def _diagnostic_input(chains):
    chains = np.atleast_2d(np.asarray(chains, dtype=np.float64))
    if chains.shape[1] < 4 or not np.all(np.isfinite(chains)) or np.ptp(chains) == 0.0:
        return None
    return chains


def split_rhat(chains):
    """Rank-normalized split R-hat; chains is [C][S] (equal lengths). NaN when undefined."""
    chains = _diagnostic_input(chains)
    if chains is None:
        return float('nan')
    return float(az.rhat(chains))


def effective_sample_size(chains):
    """Bulk effective sample size over [C][S] chains. NaN when undefined."""
    chains = _diagnostic_input(chains)
    if chains is None:
        return float('nan')
    return float(az.ess(chains))
