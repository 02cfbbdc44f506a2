#!/usr/bin/env python3
"""Containers for data, priors, sampler state and posterior draws.

Model, for plot i in area j at time t = 1..T:

  y_ijt = x_jt' beta_t + xt_jt' eta_j + u_jt + eps_ijt,   eps ~ N(0, sigma_sq_t)
  beta_t = beta_{t-1} + xi_t,            xi_t ~ MVN(0, Sigma_xi), beta_0 ~ MVN(mu0, Sigma0)
  eta*_q ~ MVN(0, tau_sq_eta_q (D - rho_eta_q W)^{-1})   (eta*_q = q-th SVC across areas)
  u_t = u_{t-1} + omega_t,  omega_t ~ MVN(0, tau_sq_omega_t (D - rho_omega W)^{-1}), u_0 = 0

Array conventions (0-based):
  x[j, c, :]   covariates of area j at data column c (time t = c + 1), x[..., 0] == 1
  xt[j, c, :]  space-varying covariates (Q columns, a subset of x's)
  beta[t]      t = 0..T; eta_star[q, j]; u[t, j] with u[0] == 0
  sigma_sq[c], tau_sq_omega[c] indexed by data column

The likelihood only touches data through per-cell n, sum(y) and the
within-cell sum of squared deviations, all cached on the Dataset.
"""
from __future__ import print_function

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from .errors import CholeskyFailure, DataError, DimensionMismatch, ParameterDomainError

__all__ = ['Dataset', 'Hyperparameters', 'ModelState', 'PosteriorDraws', 'derive_mu',
           'DEFAULT_IG_SHAPE', 'DEFAULT_IG_SCALE', 'DEFAULT_NU_XI', 'DEFAULT_PRIOR_VAR']

DEFAULT_IG_SHAPE = 2.0
DEFAULT_IG_SCALE = 100.0
DEFAULT_NU_XI = 10.0
DEFAULT_PRIOR_VAR = 100.0
DEFAULT_RHO_START = 0.5


@dataclass(frozen=True, eq=False)
class Dataset:
    """Plot observations plus complete covariate arrays over all (j, t)."""

    x: np.ndarray
    xt: np.ndarray
    obs_area: np.ndarray
    obs_time: np.ndarray
    obs_value: np.ndarray
    area_ids: Tuple[str, ...] = ()
    years: Tuple[str, ...] = ()
    svc_columns: Tuple[int, ...] = ()
    n: np.ndarray = field(init=False, repr=False)
    sum_y: np.ndarray = field(init=False, repr=False)
    ybar: np.ndarray = field(init=False, repr=False)
    ss: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        xt = np.ascontiguousarray(self.xt, dtype=np.float64)
        if x.ndim != 3:
            raise DimensionMismatch('x must be [J][T][P+1], got shape %s' % (x.shape,))
        J, T, _ = x.shape
        if xt.ndim == 2 and xt.size == 0:
            xt = xt.reshape(J, T, 0)
        if xt.ndim != 3 or xt.shape[:2] != (J, T):
            raise DimensionMismatch('xt must be [%d][%d][Q], got shape %s' % (J, T, xt.shape))
        if xt.shape[2] > x.shape[2] - 1:
            raise DimensionMismatch('Q=%d exceeds P=%d' % (xt.shape[2], x.shape[2] - 1))
        if not np.all(x[:, :, 0] == 1.0):
            raise DataError('first covariate column must be the intercept (all ones)')
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xt))):
            raise DataError('covariates must be finite')
        area = np.asarray(self.obs_area, dtype=np.int64).ravel()
        time = np.asarray(self.obs_time, dtype=np.int64).ravel()
        value = np.asarray(self.obs_value, dtype=np.float64).ravel()
        if not (area.shape == time.shape == value.shape):
            raise DimensionMismatch('observation arrays differ in length')
        if area.size and (area.min() < 0 or area.max() >= J or time.min() < 0 or time.max() >= T):
            raise DimensionMismatch('observation (area, time) index out of bounds')
        if not np.all(np.isfinite(value)):
            raise DataError('observation values must be finite')
        cell = area * T + time
        n = np.bincount(cell, minlength=J * T).reshape(J, T)
        sum_y = np.bincount(cell, weights=value, minlength=J * T).reshape(J, T)
        ybar = np.divide(sum_y, n, out=np.zeros((J, T)), where=n > 0)
        dev = value - ybar.ravel()[cell]
        ss = np.bincount(cell, weights=dev * dev, minlength=J * T).reshape(J, T)
        area_ids = tuple(self.area_ids) or tuple('area%d' % j for j in range(J))
        years = tuple(self.years) or tuple(str(t + 1) for t in range(T))
        if len(area_ids) != J or len(years) != T:
            raise DimensionMismatch('identifier lists do not match J=%d, T=%d' % (J, T))
        for name, arr in (('x', x), ('xt', xt), ('obs_area', area), ('obs_time', time),
                          ('obs_value', value), ('n', n), ('sum_y', sum_y), ('ybar', ybar),
                          ('ss', ss)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, 'area_ids', area_ids)
        object.__setattr__(self, 'years', years)
        object.__setattr__(self, 'svc_columns', tuple(int(c) for c in self.svc_columns))

    @property
    def J(self):
        return self.x.shape[0]

    @property
    def T(self):
        return self.x.shape[1]

    @property
    def P(self):
        return self.x.shape[2] - 1

    @property
    def Q(self):
        return self.xt.shape[2]

    @property
    def N(self):
        return int(self.obs_value.size)

    def cell_values(self, j, c):
        mask = (self.obs_area == j) & (self.obs_time == c)
        return self.obs_value[mask]

    def grouped_values(self):
        """{(j, c): values} for non-empty cells, observation order kept."""
        order = np.argsort(self.obs_area * self.T + self.obs_time, kind='stable')
        groups = {}
        for i in order:
            groups.setdefault((int(self.obs_area[i]), int(self.obs_time[i])), []).append(self.obs_value[i])
        return {k: np.asarray(v) for k, v in groups.items()}

    def residual_ss(self, c, mu_col):
        """sum over plots at column c of (y - mu_jc)^2, from cached cell stats."""
        diff = self.ybar[:, c] - mu_col
        return float(np.sum(self.ss[:, c]) + np.sum(self.n[:, c] * diff * diff))


def _as_vector(value, length, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(length, float(arr))
    arr = arr.ravel()
    if arr.size != length:
        raise DimensionMismatch('%s: expected %d values, got %d' % (name, length, arr.size))
    return arr.copy()


def _as_matrix(value, p, name):
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return float(arr) * np.eye(p)
    if arr.ndim == 1 and arr.size == p:
        return np.diag(arr)
    if arr.shape != (p, p):
        raise DimensionMismatch('%s: expected %dx%d, got %s' % (name, p, p, arr.shape))
    return arr.copy()


@dataclass(eq=False)
class Hyperparameters:
    a_sigma: float
    b_sigma: float
    a_eta: np.ndarray
    b_eta: np.ndarray
    a_omega: np.ndarray
    b_omega: np.ndarray
    nu_xi: float
    H_xi: np.ndarray
    mu0: np.ndarray
    Sigma0: np.ndarray

    @classmethod
    def defaults(cls, P, Q, T, **overrides):
        p = P + 1
        values = {
            'a_sigma': DEFAULT_IG_SHAPE, 'b_sigma': DEFAULT_IG_SCALE,
            'a_eta': DEFAULT_IG_SHAPE, 'b_eta': DEFAULT_IG_SCALE,
            'a_omega': DEFAULT_IG_SHAPE, 'b_omega': DEFAULT_IG_SCALE,
            'nu_xi': DEFAULT_NU_XI, 'H_xi': DEFAULT_PRIOR_VAR,
            'mu0': 0.0, 'Sigma0': DEFAULT_PRIOR_VAR,
        }
        unknown = set(overrides) - set(values)
        if unknown:
            raise DataError('unknown hyperparameter(s): %s' % ', '.join(sorted(unknown)))
        values.update({k: v for k, v in overrides.items() if v is not None})
        hyper = cls(
            a_sigma=float(values['a_sigma']), b_sigma=float(values['b_sigma']),
            a_eta=_as_vector(values['a_eta'], Q, 'a_eta'),
            b_eta=_as_vector(values['b_eta'], Q, 'b_eta'),
            a_omega=_as_vector(values['a_omega'], T, 'a_omega'),
            b_omega=_as_vector(values['b_omega'], T, 'b_omega'),
            nu_xi=float(values['nu_xi']),
            H_xi=_as_matrix(values['H_xi'], p, 'H_xi'),
            mu0=_as_vector(values['mu0'], p, 'mu0'),
            Sigma0=_as_matrix(values['Sigma0'], p, 'Sigma0'),
        )
        hyper.validate(P, Q, T)
        return hyper

    def validate(self, P, Q, T):
        p = P + 1
        if self.H_xi.shape != (p, p) or self.Sigma0.shape != (p, p) or self.mu0.shape != (p,):
            raise DimensionMismatch('hyperparameters sized for P=%d' % (self.mu0.shape[0] - 1))
        if self.a_eta.shape != (Q,) or self.b_eta.shape != (Q,):
            raise DimensionMismatch('a_eta/b_eta must have Q=%d entries' % Q)
        if self.a_omega.shape != (T,) or self.b_omega.shape != (T,):
            raise DimensionMismatch('a_omega/b_omega must have T=%d entries' % T)
        scalars = [self.a_sigma, self.b_sigma] + list(self.a_eta) + list(self.b_eta) \
            + list(self.a_omega) + list(self.b_omega)
        if not all(v > 0.0 for v in scalars):
            raise ParameterDomainError('inverse-gamma shapes and scales must be positive')
        if not self.nu_xi > P:
            raise ParameterDomainError('nu_xi must exceed P=%d, got %r' % (P, self.nu_xi))
        for name in ('H_xi', 'Sigma0'):
            mat = getattr(self, name)
            if not np.allclose(mat, mat.T):
                raise CholeskyFailure('%s is not symmetric' % name)
            try:
                scipy.linalg.cholesky(mat, lower=True)
            except np.linalg.LinAlgError:
                raise CholeskyFailure('%s is not positive definite' % name)

    def sigma0_inverse(self):
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(self.Sigma0, lower=True),
                                      np.eye(self.Sigma0.shape[0]))

    def as_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}


def _ig_mean(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.where(a > 1.0, b / np.maximum(a - 1.0, 1e-300), b)


def _pooled_wls(dataset):
    """Pooled least squares of cell means on x, weighted by n (zeros if singular)."""
    p = dataset.P + 1
    xs = dataset.x.reshape(-1, p)
    n = dataset.n.ravel().astype(np.float64)
    A = (xs * n[:, None]).T @ xs
    b = xs.T @ dataset.sum_y.ravel()
    if n.sum() == 0 or np.linalg.cond(A) > 1e12:
        return np.zeros(p)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.zeros(p)


@dataclass(eq=False)
class ModelState:
    beta: np.ndarray
    eta_star: np.ndarray
    u: np.ndarray
    Sigma_xi: np.ndarray
    tau_sq_eta: np.ndarray
    rho_eta: np.ndarray
    tau_sq_omega: np.ndarray
    rho_omega: float
    sigma_sq: np.ndarray
    mu: np.ndarray

    @classmethod
    def initial(cls, dataset, hyper, sub_model=False):
        J, T, P = dataset.J, dataset.T, dataset.P
        Q = 0 if sub_model else dataset.Q
        beta = np.tile(_pooled_wls(dataset), (T + 1, 1))
        denom = hyper.nu_xi - P - 2.0
        sigma_xi = hyper.H_xi / denom if denom > 0 else hyper.H_xi.copy()
        state = cls(
            beta=beta,
            eta_star=np.zeros((Q, J)),
            u=np.zeros((T + 1, J)),
            Sigma_xi=sigma_xi,
            tau_sq_eta=_ig_mean(hyper.a_eta[:Q], hyper.b_eta[:Q]),
            rho_eta=np.full(Q, DEFAULT_RHO_START),
            tau_sq_omega=_ig_mean(hyper.a_omega, hyper.b_omega),
            rho_omega=DEFAULT_RHO_START,
            sigma_sq=np.full(T, float(_ig_mean(hyper.a_sigma, hyper.b_sigma))),
            mu=np.zeros((J, T)),
        )
        state.mu = derive_mu(state, dataset)
        return state

    @property
    def sub_model(self):
        return self.eta_star.shape[0] == 0

    def copy(self):
        return ModelState(**{k: (v.copy() if isinstance(v, np.ndarray) else v)
                             for k, v in self.__dict__.items()})

    def validate(self):
        if np.any(self.u[0] != 0.0):
            raise ParameterDomainError('u[0] must be identically zero')
        for name in ('tau_sq_eta', 'tau_sq_omega', 'sigma_sq'):
            if np.any(getattr(self, name) <= 0.0):
                raise ParameterDomainError('%s must be strictly positive' % name)
        rhos = np.append(self.rho_eta, self.rho_omega)
        if np.any(rhos <= 0.0) or np.any(rhos >= 1.0):
            raise ParameterDomainError('rho values must lie in (0, 1)')

    # flat float64 layout used by checkpoints
    FIELDS = ('beta', 'eta_star', 'u', 'Sigma_xi', 'tau_sq_eta', 'rho_eta',
              'tau_sq_omega', 'rho_omega', 'sigma_sq', 'mu')

    def shapes(self):
        return {name: list(np.shape(getattr(self, name))) for name in self.FIELDS}

    def pack(self):
        return np.concatenate([np.asarray(getattr(self, name), dtype='<f8').ravel()
                               for name in self.FIELDS])

    @classmethod
    def unpack(cls, flat, shapes):
        flat = np.asarray(flat, dtype=np.float64)
        values = {}
        offset = 0
        for name in cls.FIELDS:
            shape = tuple(shapes[name])
            size = int(np.prod(shape)) if shape else 1
            chunk = flat[offset:offset + size]
            if chunk.size != size:
                raise DimensionMismatch('packed state too short for field %s' % name)
            values[name] = float(chunk[0]) if not shape else chunk.reshape(shape).copy()
            offset += size
        if offset != flat.size:
            raise DimensionMismatch('packed state has %d trailing values' % (flat.size - offset))
        return cls(**values)


def derive_mu(state, dataset, sub_model=False):
    """mu[j, c] = x_jc' beta_{c+1} + xt_jc' eta_j + u_{c+1, j}."""
    J, T, P = dataset.J, dataset.T, dataset.P
    if state.beta.shape != (T + 1, P + 1) or state.u.shape != (T + 1, J):
        raise DimensionMismatch('state sized for beta %s / u %s, dataset is J=%d T=%d P=%d'
                                % (state.beta.shape, state.u.shape, J, T, P))
    mu = np.einsum('jcp,cp->jc', dataset.x, state.beta[1:]) + state.u[1:].T
    Q = state.eta_star.shape[0]
    if Q and not sub_model:
        if Q != dataset.Q or state.eta_star.shape[1] != J:
            raise DimensionMismatch('eta_star shape %s does not match Q=%d, J=%d'
                                    % (state.eta_star.shape, dataset.Q, J))
        mu = mu + np.einsum('jcq,qj->jc', dataset.xt, state.eta_star)
    return mu


@dataclass(eq=False)
class PosteriorDraws:
    mu: np.ndarray
    sigma_sq: np.ndarray
    theta: Optional[np.ndarray] = None
    traces: Dict[str, np.ndarray] = field(default_factory=dict)
    burn_in: int = 0
    thin: int = 1
    chain_sizes: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.mu.ndim != 3 or self.mu.shape[0] == 0:
            raise DimensionMismatch('mu draws must be [S][J][T] with S > 0')
        if not np.all(np.isfinite(self.mu)):
            raise ParameterDomainError('non-finite mu draw')
        if not self.chain_sizes:
            self.chain_sizes = [self.mu.shape[0]]

    @property
    def S(self):
        return self.mu.shape[0]

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        first = parts[0]
        theta = None
        if all(p.theta is not None for p in parts):
            theta = np.concatenate([p.theta for p in parts])
        names = set(first.traces)
        for p in parts[1:]:
            names &= set(p.traces)
        return cls(
            mu=np.concatenate([p.mu for p in parts]),
            sigma_sq=np.concatenate([p.sigma_sq for p in parts]),
            theta=theta,
            traces={k: np.concatenate([p.traces[k] for p in parts]) for k in sorted(names)},
            burn_in=first.burn_in, thin=first.thin,
            chain_sizes=[s for p in parts for s in p.chain_sizes],
        )
