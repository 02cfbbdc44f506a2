#!/usr/bin/env python3
"""Area adjacency graph and its cached CAR spectral decomposition.

Edge-list file format:
  one edge per line, two area identifiers separated by a comma;
  lines starting with '#' and blank lines are ignored. Edges may be
  listed once or in both directions; duplicates collapse.

The CAR precision used throughout is (D - rho W) / tau^2 with W the
binary adjacency and D the diagonal degree matrix. Writing
D^{-1/2} W D^{-1/2} = P diag(lambda) P^T once per fit gives

  D - rho W = sum_j (1 - rho lambda_j) v_j v_j^T,   v_j = columns of D^{1/2} P
  log|tau^2 (D - rho W)^{-1}| = J log tau^2 - sum_j log(d_j (1 - rho lambda_j))

so determinants inside the sampler cost O(J).
"""
from __future__ import print_function

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import (DimensionMismatch, EigenFailure, IslandArea, NonPositiveFactor,
                     ParameterDomainError, ParseError, SelfLoop, UnknownArea)

__all__ = ['AdjacencyGraph', 'CarEigenSystem', 'read_edge_list', 'load_adjacency',
           'build_eigen_system', 'log_det_cov', 'precision_quad_form',
           'precision_matrix', 'lattice_graph']

EIGEN_SNAP_TOL = 1e-12


class AdjacencyGraph(object):
    """Validated undirected graph over areas 0..J-1."""

    __slots__ = ('num_areas', 'neighbors', 'degrees', '_w')

    def __init__(self, num_areas, neighbors):
        self.num_areas = int(num_areas)
        self.neighbors = tuple(tuple(sorted(set(n))) for n in neighbors)
        if len(self.neighbors) != self.num_areas:
            raise DimensionMismatch('neighbor lists: expected %d, got %d'
                                    % (self.num_areas, len(self.neighbors)))
        self.degrees = np.array([len(n) for n in self.neighbors], dtype=np.int64)
        self._w = None

    def adjacency_matrix(self):
        if self._w is None:
            rows = []
            cols = []
            for j, nbrs in enumerate(self.neighbors):
                rows.extend([j] * len(nbrs))
                cols.extend(nbrs)
            data = np.ones(len(rows), dtype=np.float64)
            self._w = scipy.sparse.csr_matrix((data, (rows, cols)),
                                              shape=(self.num_areas, self.num_areas))
        return self._w

    @property
    def num_edges(self):
        return int(self.degrees.sum()) // 2


class CarEigenSystem(object):
    """Spectral cache of a graph. Immutable after construction."""

    __slots__ = ('eigenvalues', 'basis', 'degrees', 'num_areas', 'adjacency')

    def __init__(self, eigenvalues, basis, degrees, adjacency):
        self.eigenvalues = eigenvalues
        self.basis = basis
        self.degrees = degrees
        self.num_areas = len(degrees)
        self.adjacency = adjacency
        for arr in (self.eigenvalues, self.basis, self.degrees):
            arr.setflags(write=False)

    def dense_precision(self, rho):
        """D - rho W rebuilt from the spectral basis."""
        scale = 1.0 - rho * self.eigenvalues
        return (self.basis * scale) @ self.basis.T


def read_edge_list(path):
    edges = []
    with open(path, 'r') as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            parts = [p.strip() for p in line.split(',')]
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError('%s:%d: expected "area,area", got %r' % (path, lineno, line))
            edges.append((parts[0], parts[1]))
    return edges


def load_adjacency(edge_list, area_index):
    """Build a validated AdjacencyGraph from identifier pairs.

    ``area_index`` maps identifier -> 0-based index; every indexed area
    must end up with at least one neighbor.
    """
    num_areas = len(area_index)
    neighbors = [set() for _ in range(num_areas)]
    for a, b in edge_list:
        for ident in (a, b):
            if ident not in area_index:
                raise UnknownArea('adjacency references unknown area %r' % (ident,))
        ja = area_index[a]
        jb = area_index[b]
        if ja == jb:
            raise SelfLoop('area %r is listed as its own neighbor' % (a,))
        neighbors[ja].add(jb)
        neighbors[jb].add(ja)
    names = sorted(area_index, key=area_index.get)
    islands = [names[j] for j in range(num_areas) if not neighbors[j]]
    if islands:
        raise IslandArea('area %s has no neighbors (islands: %d)' % (islands[0], len(islands)))
    return AdjacencyGraph(num_areas, neighbors)


def lattice_graph(rows, cols):
    """Rook-adjacency grid, area index = r * cols + c."""
    neighbors = []
    for r in range(rows):
        for c in range(cols):
            nbrs = []
            if r > 0:
                nbrs.append((r - 1) * cols + c)
            if r < rows - 1:
                nbrs.append((r + 1) * cols + c)
            if c > 0:
                nbrs.append(r * cols + c - 1)
            if c < cols - 1:
                nbrs.append(r * cols + c + 1)
            neighbors.append(nbrs)
    graph = AdjacencyGraph(rows * cols, neighbors)
    if (graph.degrees == 0).any():
        raise IslandArea('a 1x1 lattice has no neighbors')
    return graph


def build_eigen_system(graph):
    d = graph.degrees.astype(np.float64)
    w = graph.adjacency_matrix()
    d_inv_sqrt = scipy.sparse.diags(1.0 / np.sqrt(d))
    scaled = (d_inv_sqrt @ w @ d_inv_sqrt).toarray()
    try:
        eigenvalues, vectors = scipy.linalg.eigh(scaled)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenFailure('symmetric eigensolver failed on %d areas: %s' % (graph.num_areas, e))
    if not np.all(np.isfinite(eigenvalues)):
        raise EigenFailure('eigensolver returned non-finite eigenvalues')
    eigenvalues = np.clip(eigenvalues, -1.0, 1.0)
    # 1 is always an eigenvalue (and -1 for bipartite graphs); eigh lands a few ulps off
    eigenvalues[np.abs(eigenvalues - 1.0) <= EIGEN_SNAP_TOL] = 1.0
    eigenvalues[np.abs(eigenvalues + 1.0) <= EIGEN_SNAP_TOL] = -1.0
    basis = np.sqrt(d)[:, None] * vectors
    return CarEigenSystem(eigenvalues, basis, d, w)


def _check_rho_tau(rho, tau_sq):
    if not (0.0 <= rho < 1.0):
        raise ParameterDomainError('rho must lie in [0, 1), got %r' % (rho,))
    if not tau_sq > 0.0:
        raise ParameterDomainError('tau_sq must be positive, got %r' % (tau_sq,))


def log_factor_sum(sys, rho):
    """sum_j log(d_j (1 - rho lambda_j)) = log|D - rho W|."""
    factors = sys.degrees * (1.0 - rho * sys.eigenvalues)
    if np.any(factors <= 0.0):
        j = int(np.argmin(factors))
        raise NonPositiveFactor('d_j(1 - rho lambda_j) = %r <= 0 at j=%d for rho=%r'
                                % (float(factors[j]), j, rho))
    return float(np.sum(np.log(factors)))


def log_det_cov(sys, rho, tau_sq):
    _check_rho_tau(rho, tau_sq)
    return sys.num_areas * np.log(tau_sq) - log_factor_sum(sys, rho)


def _parts(sys_or_graph):
    if isinstance(sys_or_graph, CarEigenSystem):
        return sys_or_graph.degrees, sys_or_graph.adjacency
    return sys_or_graph.degrees.astype(np.float64), sys_or_graph.adjacency_matrix()


def precision_quad_form(sys_or_graph, rho, tau_sq, a, b=None):
    """a^T (D - rho W) b / tau^2 via the sparse adjacency."""
    d, w = _parts(sys_or_graph)
    a = np.asarray(a, dtype=np.float64)
    b = a if b is None else np.asarray(b, dtype=np.float64)
    if a.shape != d.shape or b.shape != d.shape:
        raise DimensionMismatch('quadratic form vectors must have length %d, got %s and %s'
                                % (d.shape[0], a.shape, b.shape))
    if not tau_sq > 0.0:
        raise ParameterDomainError('tau_sq must be positive, got %r' % (tau_sq,))
    return float(np.dot(d * a, b) - rho * np.dot(a, w @ b)) / tau_sq


def precision_matrix(sys_or_graph, rho, tau_sq=1.0):
    """Sparse (D - rho W) / tau^2."""
    d, w = _parts(sys_or_graph)
    return ((scipy.sparse.diags(d) - rho * w) / tau_sq).tocsr()
