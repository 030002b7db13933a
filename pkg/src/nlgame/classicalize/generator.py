"""Random strategies that allow perfect guessing by construction.

A hidden label r (weights w_r) fixes Alice's answer x = f_r(a).  Alice holds
|r> next to a junk register D2; Bob holds a copy of |r> (register E2) next to
a register E1 that may be entangled with D2.  Bob's measurements on E1 may be
controlled by r.  Alice's side is scrambled by a random unitary and Bob's
space is embedded by a random isometry into a possibly larger space, so the
support restriction and the factorization both have real work to do.

Because Bob's copy of r survives any of his measurements, every ensemble
{rho_ab^xy}_x has orthogonal supports; the correlation is the explicit local
mixture over r returned by ``classical_model``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numerics as nx
from ..model import Correlation, Game, Strategy, random_povm


@dataclass
class GeneratedStrategy:
    strategy: Strategy
    weights: np.ndarray  # w_r
    answers: np.ndarray  # answers[r, a] = f_r(a)
    bob_povms: np.ndarray  # [r, b, y] POVMs on E1
    junk_states: np.ndarray  # [r] density operators on D2 ⊗ E1
    dims: dict
    alice_unitary: np.ndarray
    bob_isometry: np.ndarray  # (dE1 * n_r + pad) x (dE1 * n_r)

    @property
    def n_hidden(self) -> int:
        return self.weights.size

    def classical_model(self) -> Correlation:
        """p = sum_r w_r [x = f_r(a)] Tr[T_{b,r}^y psi_r^{E1}], computed without the quantum state."""
        n_a, n_b, n_x, n_y = self.strategy.shape
        d2, e1 = self.dims["d2"], self.dims["e1"]
        p = np.zeros((n_a, n_b, n_x, n_y))
        for r, w in enumerate(self.weights):
            bob = nx.partial_trace(self.junk_states[r], d2, e1, "first")
            py = np.real(np.einsum("byij,ji->by", self.bob_povms[r], bob))
            for a in range(n_a):
                p[a, :, self.answers[r, a], :] += w * py
        return Correlation(p)

    def sector_projector(self, a: int, x: int) -> np.ndarray:
        """Projector on Bob's space onto the labels r with f_r(a) = x."""
        e1 = self.dims["e1"]
        lab = np.diag((self.answers[:, a] == x).astype(float))
        j = self.bob_isometry
        return j @ np.kron(np.eye(e1), lab) @ nx.dagger(j)


def perfect_guessing_strategy(rng: np.random.Generator, shape=(2, 2, 2, 2),
                              n_hidden: int | None = None, d2: int | None = None,
                              e1: int | None = None, pad: int | None = None,
                              max_total_dim: int = 24) -> GeneratedStrategy:
    n_a, n_b, n_x, n_y = shape
    for _ in range(1000):
        nr = n_hidden if n_hidden is not None else int(rng.integers(1, 4))
        dd2 = d2 if d2 is not None else int(rng.integers(1, 3))
        de1 = e1 if e1 is not None else int(rng.integers(1, 3))
        npad = pad if pad is not None else int(rng.integers(0, 2))
        dim_d = nr * dd2
        dim_e = de1 * nr + npad
        if dim_d * dim_e <= max_total_dim:
            break
    else:
        raise ValueError(f"no dimensions fit under total dimension {max_total_dim}")

    weights = rng.dirichlet(np.ones(nr))
    answers = rng.integers(0, n_x, size=(nr, n_a))

    # Alice: projective, diagonal in the label register
    R = np.zeros((n_a, n_x, dim_d, dim_d), dtype=complex)
    for a in range(n_a):
        for x in range(n_x):
            lab = np.diag((answers[:, a] == x).astype(float))
            R[a, x] = np.kron(lab, np.eye(dd2))
    u = nx.random_unitary(dim_d, rng)
    R = np.einsum("ij,axjk,lk->axil", u, R, u.conj())

    # Bob: POVMs on E1 controlled by the copied label
    povms = np.stack([
        np.stack([random_povm(n_y, de1, rng) for _ in range(n_b)]) for _ in range(nr)
    ])
    core = de1 * nr
    S_core = np.zeros((n_b, n_y, core, core), dtype=complex)
    for r in range(nr):
        ket_r = np.zeros((nr, nr))
        ket_r[r, r] = 1.0
        for b in range(n_b):
            for y in range(n_y):
                S_core[b, y] += np.kron(povms[r, b, y], ket_r)
    j = nx.random_isometry(dim_e, core, rng)
    perp = np.eye(dim_e) - j @ nx.dagger(j)
    S = np.zeros((n_b, n_y, dim_e, dim_e), dtype=complex)
    for b in range(n_b):
        share = rng.dirichlet(np.ones(n_y))
        for y in range(n_y):
            S[b, y] = j @ S_core[b, y] @ nx.dagger(j) + share[y] * perp

    # state: sum_r w_r |r><r|_D1 ⊗ psi_r(D2, E1) ⊗ |r><r|_E2
    junk = np.stack([
        nx.random_density(dd2 * de1, rng, int(rng.integers(1, dd2 * de1 + 1))) for _ in range(nr)
    ])
    gamma = np.zeros((nr * dd2 * de1 * nr,) * 2, dtype=complex)
    for r in range(nr):
        lab = np.zeros((nr, nr))
        lab[r, r] = 1.0
        gamma += weights[r] * np.kron(lab, np.kron(junk[r], lab))
    big = np.kron(u, j)
    gamma = big @ gamma @ nx.dagger(big)
    gamma = 0.5 * (gamma + nx.dagger(gamma))

    strategy = Strategy(R, 0.5 * (S + np.conj(np.swapaxes(S, 2, 3))), gamma)
    dims = {"n_hidden": nr, "d2": dd2, "e1": de1, "pad": npad, "dim_d": dim_d, "dim_e": dim_e}
    return GeneratedStrategy(strategy, weights, answers, povms, junk, dims, u, j)


def random_game(rng: np.random.Generator, shape=(2, 2, 2, 2), complete: bool = True) -> Game:
    n_a, n_b = shape[:2]
    q = rng.dirichlet(np.ones(n_a * n_b)).reshape(n_a, n_b)
    if not complete and q.size > 1:
        q.flat[int(rng.integers(q.size))] = 0.0
        q /= q.sum()
    h = rng.random(shape)
    return Game(q, h)
