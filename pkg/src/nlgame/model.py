"""Games, correlations and quantum strategies for two-player nonlocal games.

Index conventions used everywhere in the package: Alice receives input ``a``
and answers ``x``, Bob receives ``b`` and answers ``y``.  Tables are numpy
arrays indexed ``[a, b, x, y]`` by position in the corresponding alphabet.
POVM families are stored as ``R[a, x]`` (Alice, on D) and ``S[b, y]`` (Bob,
on E); the shared state lives on D ⊗ E with D as the first tensor factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import numerics as nx
from .errors import AlphabetMismatch, InputError, InvalidStrategy, NotPSD, UnknownInput

DEFAULT_TOL = 1e-9


def _symbols(values, name: str) -> tuple:
    syms = tuple(values)
    if not syms:
        raise InputError(f"alphabet {name} is empty")
    if len(set(syms)) != len(syms):
        raise InputError(f"alphabet {name} has repeated symbols")
    return syms


@dataclass(frozen=True, eq=False)
class Game:
    """Input distribution ``q[a, b]`` and nonnegative score ``H[a, b, x, y]``."""

    q: np.ndarray
    H: np.ndarray
    alphabets: tuple = field(default=None)
    tol: float = 1e-12

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        h = np.asarray(self.H, dtype=float)
        if q.ndim != 2 or h.ndim != 4 or h.shape[:2] != q.shape:
            raise AlphabetMismatch(f"q shape {q.shape} incompatible with H shape {h.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(h))):
            raise InputError("game tables must be finite")
        if np.any(q < 0):
            raise InputError("q has negative entries")
        if abs(float(q.sum()) - 1.0) > self.tol:
            raise InputError(f"q sums to {q.sum():.15g}, not 1")
        if np.any(h < 0):
            raise InputError("H has negative entries")
        alph = self.alphabets
        if alph is None:
            alph = tuple(tuple(range(n)) for n in h.shape)
        alph = tuple(_symbols(s, n) for s, n in zip(alph, "ABXY"))
        if len(alph) != 4 or tuple(len(s) for s in alph) != h.shape:
            raise AlphabetMismatch(f"alphabet sizes {[len(s) for s in alph]} vs H shape {h.shape}")
        q.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "H", h)
        object.__setattr__(self, "alphabets", alph)

    @property
    def shape(self) -> tuple:
        return self.H.shape

    @property
    def complete_support(self) -> bool:
        return bool(np.all(self.q > 0))

    def zero_probability_pairs(self) -> list:
        a_syms, b_syms = self.alphabets[:2]
        return [(a_syms[i], b_syms[j]) for i, j in zip(*np.nonzero(self.q <= 0))]

    def weights(self) -> np.ndarray:
        """The linear functional ``q(a,b) H(a,b,x,y)`` scoring a correlation."""
        return self.q[:, :, None, None] * self.H


@dataclass(frozen=True, eq=False)
class Correlation:
    """Conditional distribution ``p[a, b, x, y] = P(x, y | a, b)``."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 4:
            raise InputError(f"correlation table must be 4-d, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise InputError("correlation has non-finite entries")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def shape(self) -> tuple:
        return self.p.shape

    def alice_marginals(self) -> np.ndarray:
        """``[a, b, x]`` table of sum_y p; no-signaling makes it b-independent."""
        return self.p.sum(axis=3)

    def bob_marginals(self) -> np.ndarray:
        """``[a, b, y]`` table of sum_x p; no-signaling makes it a-independent."""
        return self.p.sum(axis=2)

    def normalization_residual(self) -> float:
        return float(np.max(np.abs(self.p.sum(axis=(2, 3)) - 1.0)))

    def no_signaling_residual(self) -> float:
        pa = self.alice_marginals()
        pb = self.bob_marginals()
        ra = np.max(pa.max(axis=1) - pa.min(axis=1))
        rb = np.max(pb.max(axis=0) - pb.min(axis=0))
        return float(max(ra, rb))

    def negativity(self) -> float:
        return float(max(0.0, -self.p.min()))

    def is_valid(self, tol: float = DEFAULT_TOL) -> bool:
        return (self.negativity() <= tol and self.normalization_residual() <= tol
                and self.no_signaling_residual() <= tol)

    def max_deviation(self, other: "Correlation") -> float:
        if self.shape != other.shape:
            raise AlphabetMismatch(f"shapes {self.shape} and {other.shape} differ")
        return float(np.max(np.abs(self.p - other.p)))


@dataclass(frozen=True, eq=False)
class Strategy:
    """Quantum strategy: Alice POVMs ``R[a, x]`` on D, Bob POVMs ``S[b, y]`` on E, state on D ⊗ E."""

    R: np.ndarray
    S: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.R, dtype=complex)
        s = np.asarray(self.S, dtype=complex)
        g = np.asarray(self.gamma, dtype=complex)
        if r.ndim != 4 or r.shape[2] != r.shape[3]:
            raise InvalidStrategy(f"R must have shape (|A|, |X|, dD, dD), got {r.shape}")
        if s.ndim != 4 or s.shape[2] != s.shape[3]:
            raise InvalidStrategy(f"S must have shape (|B|, |Y|, dE, dE), got {s.shape}")
        n = r.shape[2] * s.shape[2]
        if g.shape != (n, n):
            raise InvalidStrategy(f"gamma must be {n}x{n}, got {g.shape}")
        for arr in (r, s, g):
            if not np.all(np.isfinite(arr)):
                raise InvalidStrategy("strategy has non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "gamma", g)

    @property
    def dim_d(self) -> int:
        return self.R.shape[2]

    @property
    def dim_e(self) -> int:
        return self.S.shape[2]

    @property
    def shape(self) -> tuple:
        """Alphabet sizes (|A|, |B|, |X|, |Y|)."""
        return (self.R.shape[0], self.S.shape[0], self.R.shape[1], self.S.shape[1])

    @cached_property
    def gamma4(self) -> np.ndarray:
        """State reshaped to ``[i, k, j, l]`` with (i, j) on D and (k, l) on E."""
        d, e = self.dim_d, self.dim_e
        return self.gamma.reshape(d, e, d, e)

    @cached_property
    def sqrt_S(self) -> np.ndarray:
        out = np.empty_like(self.S)
        for b in range(self.S.shape[0]):
            for y in range(self.S.shape[1]):
                out[b, y] = nx.psd_sqrt(self.S[b, y])
        return out

    @cached_property
    def bob_state(self) -> np.ndarray:
        """rho = Tr_D gamma."""
        return nx.partial_trace(self.gamma, self.dim_d, self.dim_e, "first")

    def validate(self, tol: float = DEFAULT_TOL) -> "Strategy":
        """Raise InvalidStrategy unless every POVM and the state are valid within ``tol``."""
        for name, fam in (("R", self.R), ("S", self.S)):
            dim = fam.shape[2]
            for i in range(fam.shape[0]):
                for o in range(fam.shape[1]):
                    _require_psd(fam[i, o], tol, f"{name}[{i}][{o}]")
                dev = float(np.max(np.abs(fam[i].sum(axis=0) - np.eye(dim))))
                if dev > tol:
                    raise InvalidStrategy(f"{name}[{i}] sums to identity only within {dev:.3e}")
        _require_psd(self.gamma, tol, "gamma")
        tr = np.trace(self.gamma)
        if abs(tr - 1.0) > tol:
            raise InvalidStrategy(f"Tr gamma = {tr.real:.12g}, expected 1")
        return self


def _require_psd(m: np.ndarray, tol: float, label: str) -> None:
    if not nx.is_hermitian(m, max(tol, nx.HERMITIAN_TOL)):
        raise InvalidStrategy(f"{label} is not Hermitian")
    lo = float(nx.hermitian_eig(m, hermitian_tol=max(tol, nx.HERMITIAN_TOL)).eigenvalues[-1])
    if lo < -tol:
        raise InvalidStrategy(f"{label} has eigenvalue {lo:.3e} < 0")


def clamp_psd(m, tol: float = nx.PSD_TOL) -> np.ndarray:
    """Hermitize and clamp eigenvalues in [-tol, 0) to zero; reject anything more negative."""
    m = nx.as_matrix(m)
    h = 0.5 * (m + nx.dagger(m))
    eig = nx.hermitian_eig(h)
    if eig.eigenvalues[-1] >= 0:
        return h
    if eig.eigenvalues[-1] < -tol:
        raise NotPSD(f"eigenvalue {eig.eigenvalues[-1]:.3e} below -{tol:.1e}")
    return nx.apply_function(eig, lambda w: np.clip(w, 0.0, None))


@dataclass(frozen=True, eq=False)
class SecondPlayerStates:
    """Bob's subnormalized states for fixed inputs (a, b).

    ``rho_xy[x, y]`` is rho_ab^xy, ``rho_x[x]`` is the pre-measurement state
    rho_a^x and ``rho`` is Tr_D gamma.
    """

    a: int
    b: int
    rho_xy: np.ndarray
    rho_x: np.ndarray
    rho: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.real(np.einsum("xyii->xy", self.rho_xy))

    def conditioned_on_bob(self) -> np.ndarray:
        """States divided by Bob's outcome probability p_b^y (zero where p_b^y vanishes)."""
        py = self.probabilities().sum(axis=0)
        out = np.zeros_like(self.rho_xy)
        for y, w in enumerate(py):
            if w > 1e-15:
                out[:, y] = self.rho_xy[:, y] / w
        return out

    def ensemble(self, y: int) -> list:
        """The states {rho_ab^xy}_x Bob must tell apart after answering y."""
        return [self.rho_xy[x, y] for x in range(self.rho_xy.shape[0])]


def expected_score(game: Game, corr: Correlation) -> float:
    if game.shape != corr.shape:
        raise AlphabetMismatch(f"game shape {game.shape} vs correlation shape {corr.shape}")
    return float(np.sum(game.weights() * corr.p))


def achieved_correlation(strategy: Strategy) -> Correlation:
    """Born rule p[a, b, x, y] = Tr[gamma (R_a^x ⊗ S_b^y)]."""
    p = np.einsum("ikjl,axji,bylk->abxy", strategy.gamma4, strategy.R, strategy.S)
    return Correlation(np.real(p))


def _check_index(i, n: int, name: str) -> int:
    if not isinstance(i, (int, np.integer)) or not 0 <= int(i) < n:
        raise UnknownInput(f"{name}={i!r} is not in range(0, {n})")
    return int(i)


def pre_measurement_states(strategy: Strategy, a: int) -> np.ndarray:
    """rho_a^x for all x as an ``[x, k, l]`` array.

    Tr_D[(sqrt(R) ⊗ I) gamma (sqrt(R) ⊗ I)] equals Tr_D[(R ⊗ I) gamma] by
    cyclicity of the partial trace over D, so no square root is needed.
    """
    a = _check_index(a, strategy.shape[0], "a")
    return np.einsum("ikjl,xji->xkl", strategy.gamma4, strategy.R[a])


def second_player_states(strategy: Strategy, a: int, b: int) -> SecondPlayerStates:
    """rho_ab^xy = Tr_D[sqrt(R_a^x ⊗ S_b^y) gamma sqrt(R_a^x ⊗ S_b^y)] for all x, y."""
    b = _check_index(b, strategy.shape[1], "b")
    rho_x = pre_measurement_states(strategy, a)
    sq = strategy.sqrt_S[b]
    rho_xy = np.einsum("ykm,xmn,ynl->xykl", sq, rho_x, sq)
    return SecondPlayerStates(int(a), b, rho_xy, rho_x, strategy.bob_state)


def chsh_game() -> Game:
    """Uniform inputs; win iff x XOR y == a AND b."""
    h = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for b in range(2):
            for x in range(2):
                for y in range(2):
                    h[a, b, x, y] = 1.0 if (x ^ y) == (a & b) else 0.0
    return Game(np.full((2, 2), 0.25), h)


def chsh_optimal_strategy() -> Strategy:
    """Maximally entangled qubits measured along the angles 0, pi/4 (Alice) and +-pi/8 (Bob)."""
    eye = np.eye(2, dtype=complex)

    def binary(theta):
        p = nx.projector(nx.ket(theta))
        return np.stack([p, eye - p])

    R = np.stack([binary(0.0), binary(math.pi / 4)])
    S = np.stack([binary(math.pi / 8), binary(-math.pi / 8)])
    phi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2.0)
    return Strategy(R, S, nx.projector(phi))


def noisy_chsh_strategy(visibility: float) -> Strategy:
    """Optimal CHSH measurements on ``v |Phi+><Phi+| + (1 - v) I/4``."""
    s = chsh_optimal_strategy()
    g = visibility * s.gamma + (1.0 - visibility) * np.eye(4) / 4.0
    return Strategy(s.R, s.S, g)


def random_povm(n_outcomes: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Full-rank POVM: random PSD matrices normalized by the inverse square root of their sum."""
    parts = np.stack([nx.random_psd(dim, rng) for _ in range(n_outcomes)])
    t = nx.psd_inv_sqrt(parts.sum(axis=0))
    out = np.einsum("ij,xjk,kl->xil", t, parts, t)
    return 0.5 * (out + np.conj(np.swapaxes(out, 1, 2)))


def random_strategy(rng: np.random.Generator, shape=(2, 2, 2, 2), dim_d: int = 2,
                    dim_e: int = 2, rank: int | None = None) -> Strategy:
    n_a, n_b, n_x, n_y = shape
    R = np.stack([random_povm(n_x, dim_d, rng) for _ in range(n_a)])
    S = np.stack([random_povm(n_y, dim_e, rng) for _ in range(n_b)])
    return Strategy(R, S, nx.random_density(dim_d * dim_e, rng, rank))


def product_strategy(R: np.ndarray, S: np.ndarray, rho_a: np.ndarray, rho_b: np.ndarray) -> Strategy:
    return Strategy(R, S, np.kron(rho_a, rho_b))
