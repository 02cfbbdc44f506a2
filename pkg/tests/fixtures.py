#!/usr/bin/env python3
"""Small hand-made datasets, graphs and states shared by the tests."""
import numpy as np

from stsae.graph import build_eigen_system, lattice_graph
from stsae.model import Dataset, Hyperparameters, ModelState


def small_dataset(rng, J=4, T=3, plots_per_cell=3, empty=((0, 1),)):
    """J areas on a 2x2 lattice (J=4), P=Q=1, a few plots per cell."""
    cov = rng.uniform(0.0, 2.0, size=(J, T))
    x = np.stack([np.ones((J, T)), cov], axis=2)
    xt = cov[:, :, None].copy()
    areas, times, values = [], [], []
    for j in range(J):
        for c in range(T):
            if (j, c) in empty:
                continue
            for _ in range(plots_per_cell):
                areas.append(j)
                times.append(c)
                values.append(1.0 + 2.0 * cov[j, c] + rng.standard_normal())
    return Dataset(x=x, xt=xt, obs_area=np.array(areas), obs_time=np.array(times),
                   obs_value=np.array(values), svc_columns=(1,))


def empty_dataset(J=4, T=3):
    x = np.stack([np.ones((J, T)), np.linspace(0.0, 1.0, J * T).reshape(J, T)], axis=2)
    return Dataset(x=x, xt=x[:, :, 1:].copy(), obs_area=np.zeros(0, dtype=np.int64),
                   obs_time=np.zeros(0, dtype=np.int64), obs_value=np.zeros(0), svc_columns=(1,))


def square_graph():
    return lattice_graph(2, 2)


def square_system():
    return build_eigen_system(square_graph())


def random_state(rng, dataset, hyper, sub_model=False):
    """A valid state with every block away from its starting value."""
    state = ModelState.initial(dataset, hyper, sub_model=sub_model)
    p = dataset.P + 1
    state.beta = rng.standard_normal(state.beta.shape)
    state.eta_star = rng.standard_normal(state.eta_star.shape)
    state.u = rng.standard_normal(state.u.shape)
    state.u[0] = 0.0
    a = rng.standard_normal((p, p))
    state.Sigma_xi = a @ a.T + p * np.eye(p)
    state.tau_sq_eta = rng.uniform(0.5, 2.0, size=state.tau_sq_eta.shape)
    state.rho_eta = rng.uniform(0.1, 0.9, size=state.rho_eta.shape)
    state.tau_sq_omega = rng.uniform(0.5, 2.0, size=state.tau_sq_omega.shape)
    state.rho_omega = float(rng.uniform(0.1, 0.9))
    state.sigma_sq = rng.uniform(0.5, 2.0, size=state.sigma_sq.shape)
    return state


def default_hyper(dataset):
    return Hyperparameters.defaults(dataset.P, dataset.Q, dataset.T)
