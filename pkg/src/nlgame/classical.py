"""Deterministic strategies, classical values and local-polytope membership.

A classical correlation is a convex mixture of deterministic behaviours
(x = f(a), y = g(b)).  Membership is decided by a feasibility LP over the
mixture weights; when it fails, the phase-1 duals give a Farkas vector and a
second LP sharpens it into a game-shaped Bell functional.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import simplex
from .errors import TooLarge
from .model import Correlation, Game

MAX_VERTICES = 10**6
MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class DeterministicStrategy:
    """Alice answers ``f[a]`` on input a, Bob answers ``g[b]`` on input b (alphabet positions)."""

    f: tuple
    g: tuple

    def correlation_table(self, n_x: int, n_y: int) -> np.ndarray:
        n_a, n_b = len(self.f), len(self.g)
        p = np.zeros((n_a, n_b, n_x, n_y))
        for a, x in enumerate(self.f):
            for b, y in enumerate(self.g):
                p[a, b, x, y] = 1.0
        return p

    def correlation(self, n_x: int, n_y: int) -> Correlation:
        return Correlation(self.correlation_table(n_x, n_y))


def vertex_count(shape) -> int:
    n_a, n_b, n_x, n_y = shape
    return n_x**n_a * n_y**n_b


def _check_size(shape, max_vertices: int) -> None:
    count = vertex_count(shape)
    if count > max_vertices:
        raise TooLarge(f"{count} deterministic strategies exceed the cap of {max_vertices}")


def _function_tables(n_in: int, n_out: int) -> np.ndarray:
    return np.array(list(itertools.product(range(n_out), repeat=n_in)), dtype=int).reshape(-1, n_in)


def enumerate_deterministic(shape, max_vertices: int = MAX_VERTICES) -> list:
    """All (f, g) pairs for alphabet sizes (|A|, |B|, |X|, |Y|), f-major lexicographic order."""
    _check_size(shape, max_vertices)
    n_a, n_b, n_x, n_y = shape
    fs = [tuple(int(v) for v in row) for row in _function_tables(n_a, n_x)]
    gs = [tuple(int(v) for v in row) for row in _function_tables(n_b, n_y)]
    return [DeterministicStrategy(f, g) for f in fs for g in gs]


def vertex_matrix(shape, max_vertices: int = MAX_VERTICES) -> np.ndarray:
    """Rows are flattened 0/1 correlation tables of every vertex, same order as enumeration."""
    _check_size(shape, max_vertices)
    n_a, n_b, n_x, n_y = shape
    F = _function_tables(n_a, n_x)
    G = _function_tables(n_b, n_y)
    fa = np.zeros((F.shape[0], n_a, n_x))
    fa[np.arange(F.shape[0])[:, None], np.arange(n_a)[None, :], F] = 1.0
    gb = np.zeros((G.shape[0], n_b, n_y))
    gb[np.arange(G.shape[0])[:, None], np.arange(n_b)[None, :], G] = 1.0
    v = np.einsum("fax,gby->fgabxy", fa, gb)
    return v.reshape(F.shape[0] * G.shape[0], -1)


def vertex_scores(functional: np.ndarray, max_vertices: int = MAX_VERTICES) -> np.ndarray:
    """Value of a linear functional ``[a, b, x, y]`` on every vertex, in enumeration order."""
    shape = functional.shape
    _check_size(shape, max_vertices)
    n_a, n_b, n_x, n_y = shape
    F = _function_tables(n_a, n_x)
    G = _function_tables(n_b, n_y)
    # t[f, b, y] = sum_a W[a, b, f(a), y]
    t = np.zeros((F.shape[0], n_b, n_y))
    for a in range(n_a):
        t += functional[a][:, F[:, a], :].transpose(1, 0, 2)
    scores = np.zeros((F.shape[0], G.shape[0]))
    for b in range(n_b):
        scores += t[:, b, :][:, G[:, b]]
    return scores.reshape(-1)


def classical_value(game: Game, max_vertices: int = MAX_VERTICES):
    """Best deterministic score and the first maximizer in enumeration order."""
    scores = vertex_scores(game.weights(), max_vertices)
    best = int(np.argmax(scores))
    n_a, n_b, n_x, n_y = game.shape
    n_g = n_y**n_b
    fi, gi = divmod(best, n_g)
    f = tuple(int(v) for v in _function_tables(n_a, n_x)[fi])
    g = tuple(int(v) for v in _function_tables(n_b, n_y)[gi])
    return float(scores[best]), DeterministicStrategy(f, g)


def classical_value_lp(game: Game, max_vertices: int = MAX_VERTICES) -> float:
    """Maximize the expected score over mixtures of vertices with the simplex solver."""
    V = vertex_matrix(game.shape, max_vertices)
    scores = V @ game.weights().reshape(-1)
    res = simplex.maximize(scores, A_eq=np.ones((1, V.shape[0])), b_eq=[1.0])
    return float(res.objective)


@dataclass
class BellFunctional:
    """Linear functional on correlations with its value on a target and its classical maximum."""

    coefficients: np.ndarray
    value: float
    vertex_max: float

    @property
    def gap(self) -> float:
        return self.value - self.vertex_max

    def recheck(self, corr: Correlation, max_vertices: int = MAX_VERTICES) -> "BellFunctional":
        """Recompute value and vertex maximum from scratch."""
        vmax = float(vertex_scores(self.coefficients, max_vertices).max())
        return BellFunctional(self.coefficients, float(np.sum(self.coefficients * corr.p)), vmax)


@dataclass
class LocalDecomposition:
    weights: np.ndarray
    vertices: list
    residual: float  # max-entry reconstruction error
    feasible: bool = True

    def reconstruct(self, n_x: int, n_y: int) -> np.ndarray:
        out = 0.0
        for w, v in zip(self.weights, self.vertices):
            out = out + w * v.correlation_table(n_x, n_y)
        return out


@dataclass
class Infeasible:
    """Membership failed; ``functional`` separates the target from every vertex."""

    functional: BellFunctional
    farkas: BellFunctional
    residual: float  # max-entry error of the best phase-1 mixture
    phase1_objective: float
    feasible: bool = False


def local_membership(corr: Correlation, tol: float = MEMBERSHIP_TOL,
                     max_vertices: int = MAX_VERTICES):
    """Decide whether ``corr`` is a mixture of deterministic behaviours (max-entry residual <= tol)."""
    shape = corr.shape
    V = vertex_matrix(shape, max_vertices)
    n_v = V.shape[0]
    target = corr.p.reshape(-1)
    A = np.vstack([V.T, np.ones((1, n_v))])
    b = np.concatenate([target, [1.0]])
    res = simplex.solve(np.zeros(n_v), A, b, feas_tol=0.5 * tol)
    w = np.clip(res.x, 0.0, None)
    if w.sum() > 0:
        w = w / w.sum()
    residual = float(np.max(np.abs(V.T @ w - target)))
    if residual <= tol:
        keep = np.nonzero(w > 0)[0]
        verts = enumerate_deterministic(shape, max_vertices)
        return LocalDecomposition(w[keep], [verts[i] for i in keep], residual)

    farkas = _farkas_functional(res, shape, corr, max_vertices)
    sharp = separating_functional(corr, max_vertices)
    return Infeasible(sharp, farkas, residual, res.phase1_objective)


def _farkas_functional(res, shape, corr, max_vertices) -> BellFunctional:
    n_entries = int(np.prod(shape))
    beta = res.dual[:n_entries].reshape(shape)
    return BellFunctional(beta, 0.0, 0.0).recheck(corr, max_vertices)


def separating_functional(corr: Correlation, max_vertices: int = MAX_VERTICES) -> BellFunctional:
    """Most violated game-shaped functional q(a,b) H(a,b,x,y), q uniform and H in [0, 1].

    Solves max beta.p - t subject to beta.v <= t on every vertex v and
    0 <= beta <= 1/(|A||B|).
    """
    shape = corr.shape
    V = vertex_matrix(shape, max_vertices)
    n_v, n = V.shape
    cap = 1.0 / (shape[0] * shape[1])
    # variables: beta (n), t (1)
    c = np.concatenate([corr.p.reshape(-1), [-1.0]])
    A_ub = np.vstack([
        np.hstack([V, -np.ones((n_v, 1))]),
        np.hstack([np.eye(n), np.zeros((n, 1))]),
    ])
    b_ub = np.concatenate([np.zeros(n_v), np.full(n, cap)])
    res = simplex.maximize(c, A_ub=A_ub, b_ub=b_ub)
    beta = res.x[:n].reshape(shape)
    return BellFunctional(beta, 0.0, 0.0).recheck(corr, max_vertices)


def pr_box() -> Correlation:
    """Popescu-Rohrlich box: x XOR y = a AND b with uniform marginals."""
    p = np.zeros((2, 2, 2, 2))
    for a, b, x, y in itertools.product(range(2), repeat=4):
        if (x ^ y) == (a & b):
            p[a, b, x, y] = 0.5
    return Correlation(p)
