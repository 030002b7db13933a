"""How well can Bob guess Alice's output?

Ensembles are lists of subnormalized states sigma_x; a guess succeeds with
probability sum_x Tr[M_x sigma_x] for a POVM {M_x}.  Reported guessing
probabilities are raw (not divided by the ensemble mass), so summing the
per-y optima over Bob's outputs gives the a-priori success probability for
fixed inputs (a, b).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .errors import DomainError, InputError, NoConvergence, NotPSD
from .model import Strategy, pre_measurement_states, second_player_states

PG_TOL = 1e-8
ZERO_MASS = 1e-12
ITER_TOL = 1e-10
MAX_ITER = 10_000
POLISH_GAP = 1e-9  # dual gap above which the fixed point is refined by the barrier method
BARRIER_GAP = 1e-11


@dataclass(frozen=True, eq=False)
class Ensemble:
    states: np.ndarray  # [x, i, j]

    def __post_init__(self):
        s = np.asarray(self.states, dtype=complex)
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[0] < 1:
            raise InputError(f"ensemble must have shape (n, d, d), got {s.shape}")
        object.__setattr__(self, "states", s)

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def masses(self) -> np.ndarray:
        return np.real(np.einsum("xii->x", self.states))

    @property
    def mass(self) -> float:
        return float(self.masses().sum())

    def validate(self, psd_tol: float = nx.PSD_TOL, tol: float = 1e-9) -> "Ensemble":
        for k, s in enumerate(self.states):
            if not nx.is_psd(s, psd_tol):
                raise NotPSD(f"ensemble state {k} is not PSD")
        if self.mass > 1.0 + tol:
            raise InputError(f"ensemble mass {self.mass:.12g} exceeds 1")
        return self


@dataclass
class GuessReport:
    p_guess: float
    povm: np.ndarray
    method: str  # "helstrom", "iterative" or "pgm_bound"
    iterations: int = 0
    gap_bound: float = 0.0
    mass: float = 1.0
    history: list = field(default_factory=list, repr=False)

    @property
    def conditional(self) -> float:
        """Success probability conditioned on the ensemble occurring."""
        return self.p_guess / self.mass if self.mass > 0 else 0.0


def _as_ensemble(ens) -> Ensemble:
    return ens if isinstance(ens, Ensemble) else Ensemble(np.asarray(ens))


def success_probability(povm: np.ndarray, states: np.ndarray) -> float:
    return float(np.real(np.einsum("xij,xji->", povm, states)))


def support_overlap(states) -> float:
    """max over i != j of ||P_i P_j||_2 for support projectors P_k (zero-mass states have none)."""
    projs = []
    for s in states:
        if np.real(np.trace(s)) < ZERO_MASS:
            continue
        projs.append(nx.support_projector(s))
    worst = 0.0
    for i in range(len(projs)):
        for j in range(i + 1, len(projs)):
            worst = max(worst, nx.hs_norm(projs[i] @ projs[j]))
    return worst


def perfectly_distinguishable(ens, tol: float = PG_TOL) -> bool:
    return support_overlap(_as_ensemble(ens).states) <= tol


@dataclass
class PerfectGuessingVerdict:
    allowed: bool
    witness: tuple | None  # first (a, b, y) whose ensemble is not distinguishable
    overlap: float  # overlap at the witness (or the largest overlap seen)

    def __bool__(self) -> bool:
        return self.allowed


def allows_perfect_guessing(strategy: Strategy, tol: float = PG_TOL) -> PerfectGuessingVerdict:
    n_a, n_b, _, n_y = strategy.shape
    worst = 0.0
    for a in range(n_a):
        for b in range(n_b):
            sps = second_player_states(strategy, a, b)
            for y in range(n_y):
                ov = support_overlap(sps.ensemble(y))
                if ov > tol:
                    return PerfectGuessingVerdict(False, (a, b, y), ov)
                worst = max(worst, ov)
    return PerfectGuessingVerdict(True, None, worst)


def helstrom_binary(sigma0, sigma1) -> GuessReport:
    """Optimal two-state discrimination: p = (Tr s0 + Tr s1 + ||s0 - s1||_1) / 2."""
    s0 = nx.as_matrix(sigma0)
    s1 = nx.as_matrix(sigma1)
    for k, s in enumerate((s0, s1)):
        if not nx.is_psd(s):
            raise NotPSD(f"state {k} is not PSD")
    eig = nx.hermitian_eig(0.5 * ((s0 - s1) + nx.dagger(s0 - s1)))
    pos = eig.eigenvectors[:, eig.eigenvalues > 0]
    m0 = pos @ nx.dagger(pos)
    m1 = np.eye(s0.shape[0]) - m0
    mass = float(np.real(np.trace(s0) + np.trace(s1)))
    p = 0.5 * (mass + float(np.sum(np.abs(eig.eigenvalues))))
    return GuessReport(p, np.stack([m0, m1]), "helstrom", 0, 0.0, mass)


def _complete(povm: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Give the complement of ``support`` to outcome 0 so the POVM sums to the identity."""
    out = povm.copy()
    out[0] = out[0] + (np.eye(support.shape[0]) - support)
    return out


def _inv_sqrt_and_support(m: np.ndarray, rank_tol: float) -> tuple:
    """(m^-1/2 on its support, support projector) from a single eigendecomposition."""
    eig = nx.hermitian_eig(m)
    w = eig.eigenvalues
    keep = w > rank_tol * max(float(w[0]), 0.0)
    if not keep.any():
        zero = np.zeros_like(m)
        return zero, zero
    v = eig.eigenvectors[:, keep]
    return (v / np.sqrt(w[keep])) @ nx.dagger(v), v @ nx.dagger(v)


def pretty_good_measurement(ens) -> np.ndarray:
    states = _as_ensemble(ens).states
    t, support = _inv_sqrt_and_support(states.sum(axis=0), nx.RANK_TOL)
    povm = np.einsum("ij,xjk,kl->xil", t, states, t)
    povm = 0.5 * (povm + np.conj(np.swapaxes(povm, 1, 2)))
    return _complete(povm, support)


def dual_gap(povm: np.ndarray, states: np.ndarray) -> float:
    """Upper bound on (optimum - current) from the symmetrized Lagrange operator.

    Y = sum_x M_x sigma_x (Hermitian part) shifted by r I with r the largest
    violation of Y >= sigma_x is dual feasible, and Tr Y = current value.
    """
    y = np.einsum("xij,xjk->ik", povm, states)
    y = 0.5 * (y + nx.dagger(y))
    r = 0.0
    for s in states:
        r = max(r, float(nx.hermitian_eig(s - y, hermitian_tol=1e-6).eigenvalues[0]))
    return max(r, 0.0) * states.shape[1]


def discriminate_pgm(ens) -> GuessReport:
    e = _as_ensemble(ens)
    povm = pretty_good_measurement(e)
    p = success_probability(povm, e.states)
    return GuessReport(p, povm, "pgm_bound", 0, dual_gap(povm, e.states), e.mass, [p])


def _barrier_dual(states: np.ndarray, target_gap: float = BARRIER_GAP, max_newton: int = 2000):
    """Solve min Tr Y subject to Y >= sigma_x by a log-barrier Newton method.

    At the central point for barrier weight mu, M_x = mu (Y - sigma_x)^-1 sums to
    the identity and the duality gap is exactly mu * n * d, so mu is shrunk until
    that falls below ``target_gap``.  Returns (povm, Y, newton_steps); the POVM is
    renormalized so it sums to the identity exactly, and Y is strictly feasible.
    """
    n, d, _ = states.shape
    scale = max(nx.op_norm(s) for s in states)
    if scale <= 0.0:
        return None
    y = (2.0 * scale) * np.eye(d, dtype=complex)
    mu = scale
    steps = 0
    while True:
        for _ in range(100):
            inv = _herm(np.linalg.inv(y[None] - states))
            grad = np.eye(d) - mu * inv.sum(axis=0)
            hess = mu * sum(np.kron(a, a.T) for a in inv)
            delta = _herm(np.linalg.solve(hess, -grad.reshape(-1)).reshape(d, d))
            dec2 = -float(np.real(np.vdot(grad, delta)))  # squared Newton decrement
            steps += 1
            t = 1.0 if dec2 < 0.0625 else 1.0 / (1.0 + math.sqrt(dec2))
            while t > 1e-12 and not all(_is_pd(a) for a in y[None] + t * delta - states):
                t *= 0.5
            y = y + t * delta
            if dec2 < 1e-18:
                break
        if mu * n * d < target_gap or steps >= max_newton:
            break
        mu *= 0.1
    povm = mu * _herm(np.linalg.inv(y[None] - states))
    t = nx.psd_inv_sqrt(_herm(povm.sum(axis=0)))
    return _herm(np.einsum("ij,xjk,kl->xil", t, povm, t)), y, steps


def _herm(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def _is_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


def discriminate_iterative(ens, tol: float = ITER_TOL, max_iter: int = MAX_ITER,
                           strict: bool = False) -> GuessReport:
    """Minimum-error discrimination by fixed-point iteration from the pretty-good measurement.

    Update: M_x <- G^-1 sigma_x M_x sigma_x G^-1 with G = (sum_x sigma_x M_x sigma_x)^(1/2),
    which leaves optimal measurements fixed.  Stops once an accepted step
    gains less than ``tol``.  A step that would lower the success probability
    is rejected and the iteration stops there, so the recorded history is
    nondecreasing.

    The fixed point creeps when the optimum sits on the boundary along a
    direction the states barely distinguish.  If the dual gap is still above
    POLISH_GAP, a log-barrier Newton solve of the dual problem finishes the job
    and is kept only if it improves the success probability.  ``gap_bound`` is
    an honest upper bound on the remaining distance to the optimum.
    """
    e = _as_ensemble(ens)
    if len(e) < 2:
        raise InputError("need at least two states to discriminate")
    states = e.states
    povm = pretty_good_measurement(e)
    p = success_probability(povm, states)
    history = [p]
    it = 0
    converged = False
    while it < max_iter:
        it += 1
        inner = np.einsum("xij,xjk,xkl->il", states, povm, states)
        inner = 0.5 * (inner + nx.dagger(inner))
        g_inv, support = _inv_sqrt_and_support(inner, 1e-14)
        new = np.einsum("ij,xjk,xkl,xlm,mn->xin", g_inv, states, povm, states, g_inv)
        new = 0.5 * (new + np.conj(np.swapaxes(new, 1, 2)))
        new = _complete(new, support)
        p_new = success_probability(new, states)
        if p_new < p:
            converged = True
            break
        step = p_new - p
        povm, p = new, p_new
        history.append(p)
        if step < tol:
            converged = True
            break
    gap = dual_gap(povm, states)
    if gap > POLISH_GAP:
        polished = _barrier_dual(states)
        if polished is not None:
            new, y, steps = polished
            it += steps
            p_new = success_probability(new, states)
            if p_new > p:
                povm, p = new, p_new
                history.append(p)
            gap = min(dual_gap(povm, states), max(float(np.real(np.trace(y))) - p, 0.0))
            converged = converged or gap <= POLISH_GAP
    if strict and not converged:
        raise NoConvergence(f"no convergence after {max_iter} iterations (gap {gap:.2e})")
    return GuessReport(p, povm, "iterative", it, gap, e.mass, history)


def discriminate(ens, **kw) -> GuessReport:
    e = _as_ensemble(ens)
    if len(e) == 2:
        return helstrom_binary(e.states[0], e.states[1])
    return discriminate_iterative(e, **kw)


def _combine(reports: list, dim: int, n_x: int, mass: float) -> GuessReport:
    povms = []
    for rep in reports:
        povms.append(rep.povm if rep is not None else _complete(np.zeros((n_x, dim, dim)), np.zeros((dim, dim))))
    live = [r for r in reports if r is not None]
    method = "helstrom" if live and all(r.method == "helstrom" for r in live) else "iterative"
    return GuessReport(
        p_guess=float(sum(r.p_guess for r in live)),
        povm=np.stack(povms),
        method=method,
        iterations=int(sum(r.iterations for r in live)),
        gap_bound=float(sum(r.gap_bound for r in live)),
        mass=mass,
    )


def guessing_probability(strategy: Strategy, a: int, b: int, **kw) -> GuessReport:
    """Bob answers y first, then guesses x from his post-measurement state.

    The result is sum_y of the optimal raw success for {rho_ab^xy}_x; its
    ``povm`` has shape (|Y|, |X|, dE, dE), one guessing measurement per y.
    Branches whose total mass is below ZERO_MASS contribute nothing.
    """
    sps = second_player_states(strategy, a, b)
    n_x = strategy.shape[2]
    reports = []
    for y in range(strategy.shape[3]):
        ens = Ensemble(np.stack(sps.ensemble(y)))
        reports.append(discriminate(ens, **kw) if ens.mass >= ZERO_MASS else None)
    return _combine(reports, strategy.dim_e, n_x, float(np.real(np.trace(sps.rho))))


def pre_measurement_guessing(strategy: Strategy, a: int, **kw) -> GuessReport:
    """Bob guesses x from rho_a^x before applying any of his own measurements."""
    return discriminate(Ensemble(pre_measurement_states(strategy, a)), **kw)


def min_entropy(report) -> float:
    p = report.p_guess if isinstance(report, GuessReport) else float(report)
    if not p > 0.0:
        raise DomainError(f"min-entropy needs p_guess > 0, got {p}")
    if p > 1.0 + 1e-9:
        raise DomainError(f"p_guess {p} exceeds 1")
    # roundoff can put a perfect guess a hair above 1
    return max(0.0, -math.log2(p))


def guessing_table(strategy: Strategy, **kw) -> dict:
    """Per-(a, b) post-measurement guessing plus the worst case (largest p_guess)."""
    n_a, n_b = strategy.shape[:2]
    table = {}
    for a in range(n_a):
        for b in range(n_b):
            table[(a, b)] = guessing_probability(strategy, a, b, **kw)
    worst = max(table, key=lambda k: table[k].p_guess)
    return {"per_input": table, "worst_input": worst, "worst": table[worst]}
