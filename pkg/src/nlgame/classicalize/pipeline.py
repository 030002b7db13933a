"""From a perfect-guessing strategy to a congruent one whose state commutes with Alice.

Pipeline: restrict Bob to the support of rho, read off the projective
measurements {Q_a^x} that Alice's outcomes induce on Bob's space, check they
commute with Bob's own POVMs, factor Bob's space as E1 ⊗ E2 so that Bob's
POVMs live on E1 and the Q's on E2, embed, and trace out E2.  Every step is
recorded so the chain can be replayed by ``verify_certificate``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .. import numerics as nx
from ..errors import (
    AlphabetMismatch,
    CommutationViolation,
    DecompositionFailed,
    FactorizationFailed,
    NotCommuting,
    NotCompleteSupport,
    NotPerfectGuessing,
)
from ..guessing import PG_TOL, ZERO_MASS, allows_perfect_guessing, support_overlap
from ..model import Correlation, Game, Strategy, achieved_correlation, pre_measurement_states
from .factorization import Factorization, factorize_commuting

TOL = 1e-8
CORRELATION_TOL = 1e-9


@dataclass
class CongruenceStep:
    """One link of the congruence chain.

    ``unitary_embedding``/``restrict_support``: ``isometry`` maps Bob's smaller
    space into the larger one (Alice's side is untouched).  ``direction`` is
    ``forward`` when the strategy before the step embeds into the one after it,
    ``backward`` when the strategy after the step embeds into the one before.
    ``partial_trace``: ``traced_dims`` = (kept, traced) Bob factors.
    """

    kind: str
    direction: str
    isometry: np.ndarray | None = None
    traced_dims: tuple | None = None
    correlation_drift: float = 0.0


@dataclass
class InducedProjectors:
    Q: np.ndarray  # [a, x, k, l] on the support-restricted Bob space
    residual: float  # max ||Q rho Q - rho_a^x||_2
    completed: list  # (a, x0) pairs that absorbed a deficiency projector


@dataclass
class CommutationReport:
    commutator_norm: float  # max ||[Q_a^x, S_b^y]||_2
    cross_term_norm: float  # max ||Q_a^x S_b^y Q_a^x'||_2, x != x'


@dataclass
class ClassicalizationCertificate:
    steps: list
    final_strategy: Strategy
    commutator_norm: float
    tau_check: float
    min_rho_eigenvalue: float
    projectors: InducedProjectors
    commutation: CommutationReport
    factorization: Factorization
    tolerances: dict
    seed: int
    correlation: Correlation
    extras: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple:
        return (self.factorization.dim1, self.factorization.dim2)

    @property
    def max_correlation_drift(self) -> float:
        return max((s.correlation_drift for s in self.steps), default=0.0)


def _bob_conjugate(strategy: Strategy, iso: np.ndarray) -> tuple:
    """Pull the strategy back along Bob-side isometry ``iso``: (S', gamma')."""
    S = np.einsum("ki,bykl,lj->byij", iso.conj(), strategy.S, iso)
    big = np.kron(np.eye(strategy.dim_d), iso)
    g = nx.dagger(big) @ strategy.gamma @ big
    return S, 0.5 * (g + nx.dagger(g))


def restrict_to_support(strategy: Strategy, tol: float = nx.RANK_TOL):
    """Compress Bob's space to Supp(Tr_D gamma); the result embeds back into the input."""
    w = nx.support_basis(strategy.bob_state, tol)
    if w.shape[1] == strategy.dim_e:
        w = np.eye(strategy.dim_e, dtype=complex)
        step = CongruenceStep("restrict_support", "backward", w)
        return strategy, step
    S, g = _bob_conjugate(strategy, w)
    g = g / np.real(np.trace(g))
    out = Strategy(strategy.R, 0.5 * (S + np.conj(np.swapaxes(S, 2, 3))), g)
    drift = achieved_correlation(out).max_deviation(achieved_correlation(strategy))
    return out, CongruenceStep("restrict_support", "backward", w, correlation_drift=drift)


def _lowdin(frames: list) -> list:
    """Symmetrically orthonormalize a list of column blocks, keeping the block split."""
    sizes = [f.shape[1] for f in frames]
    if sum(sizes) == 0:
        return frames
    b = np.hstack(frames)
    b = b @ nx.psd_inv_sqrt(nx.dagger(b) @ b, rank_tol=1e-12)
    out, k = [], 0
    for s in sizes:
        out.append(b[:, k:k + s])
        k += s
    return out


def induced_projectors(strategy: Strategy, tol: float = PG_TOL) -> InducedProjectors:
    """Projective measurements {Q_a^x} on Bob's space with Q_a^x rho Q_a^x = rho_a^x.

    Expects Supp rho = E (see ``restrict_to_support``).  Outcomes that never
    occur get Q = 0; any leftover subspace is added to the first outcome
    with nonzero mass.
    """
    verdict = allows_perfect_guessing(strategy, tol)
    if not verdict:
        raise NotPerfectGuessing(
            f"ensemble at (a, b, y) = {verdict.witness} overlaps by {verdict.overlap:.3e}",
            verdict.witness, verdict.overlap)
    n_a, _, n_x, _ = strategy.shape
    d = strategy.dim_e
    rho = strategy.bob_state
    Q = np.zeros((n_a, n_x, d, d), dtype=complex)
    residual = 0.0
    completed = []
    for a in range(n_a):
        states = pre_measurement_states(strategy, a)
        ov = support_overlap(states)
        if ov > tol:
            raise NotPerfectGuessing(
                f"pre-measurement states for a={a} overlap by {ov:.3e}", (a, None, None), ov)
        masses = np.real(np.einsum("xii->x", states))
        frames = [nx.support_basis(s) if m >= ZERO_MASS else np.zeros((d, 0), dtype=complex)
                  for s, m in zip(states, masses)]
        if sum(f.shape[1] for f in frames) > d:
            raise NotPerfectGuessing(f"supports for a={a} do not fit in Bob's space",
                                     (a, None, None), ov)
        frames = _lowdin(frames)
        for x, f in enumerate(frames):
            Q[a, x] = f @ nx.dagger(f)
        deficiency = np.eye(d) - Q[a].sum(axis=0)
        if nx.hs_norm(deficiency) > 1e-6:
            x0 = int(np.nonzero(masses >= ZERO_MASS)[0][0])
            Q[a, x0] += deficiency
            completed.append((a, x0))
        for x in range(n_x):
            residual = max(residual, nx.hs_norm(Q[a, x] @ rho @ Q[a, x] - states[x]))
    Q = 0.5 * (Q + np.conj(np.swapaxes(Q, 2, 3)))
    return InducedProjectors(Q, residual, completed)


def commutation_check(Q, S, tol: float = TOL) -> CommutationReport:
    """Largest commutator between Alice-induced projectors and Bob's POVM elements."""
    Q = Q.Q if isinstance(Q, InducedProjectors) else np.asarray(Q)
    S = np.asarray(S)
    comm = cross = 0.0
    n_a, n_x = Q.shape[:2]
    for a, b in itertools.product(range(n_a), range(S.shape[0])):
        for y in range(S.shape[1]):
            s = S[b, y]
            for x in range(n_x):
                comm = max(comm, nx.hs_norm(nx.commutator(Q[a, x], s)))
                for x2 in range(n_x):
                    if x2 != x:
                        cross = max(cross, nx.hs_norm(Q[a, x] @ s @ Q[a, x2]))
    return CommutationReport(comm, cross)


def _tau_check(R: np.ndarray, gamma_bar: np.ndarray, Q_bar: np.ndarray, dim_d: int,
               dim1: int, dim2: int) -> float:
    """max |Tr[(R_a^x' ⊗ I) tau_a^x] - [x = x'] Tr tau_a^x| with tau_a^x = Tr_E2[(I ⊗ Qbar_a^x) gamma_bar]."""
    n_a, n_x = Q_bar.shape[:2]
    worst = 0.0
    left = dim_d * dim1
    for a in range(n_a):
        for x in range(n_x):
            tau = nx.partial_trace(np.kron(np.eye(left), Q_bar[a, x]) @ gamma_bar, left, dim2, "second")
            mass = float(np.real(np.trace(tau)))
            for x2 in range(n_x):
                val = float(np.real(np.trace(np.kron(R[a, x2], np.eye(dim1)) @ tau)))
                worst = max(worst, abs(val - (mass if x2 == x else 0.0)))
    return worst


def alice_commutator_norm(strategy: Strategy) -> float:
    """max over (a, x) of ||[gamma, R_a^x ⊗ I]||_2."""
    eye = np.eye(strategy.dim_e)
    worst = 0.0
    for a in range(strategy.shape[0]):
        for x in range(strategy.shape[2]):
            worst = max(worst, nx.hs_norm(nx.commutator(strategy.gamma, np.kron(strategy.R[a, x], eye))))
    return worst


def classicalize(strategy: Strategy, game: Game, tol: float = TOL, tol_pg: float = PG_TOL,
                 seed: int = 42) -> ClassicalizationCertificate:
    if game.shape != strategy.shape:
        raise AlphabetMismatch(f"game shape {game.shape} vs strategy shape {strategy.shape}")
    if not game.complete_support:
        pairs = game.zero_probability_pairs()
        raise NotCompleteSupport(f"game lacks complete support; q(a,b) = 0 at {pairs}", pairs)
    verdict = allows_perfect_guessing(strategy, tol_pg)
    if not verdict:
        raise NotPerfectGuessing(
            f"strategy does not allow perfect guessing: (a, b, y) = {verdict.witness}, "
            f"overlap {verdict.overlap:.3e}", verdict.witness, verdict.overlap)
    base = achieved_correlation(strategy)
    steps = []

    restricted, step = restrict_to_support(strategy)
    steps.append(step)
    min_eig = float(nx.hermitian_eig(restricted.bob_state).eigenvalues[-1])

    proj = induced_projectors(restricted, tol_pg)
    comm = commutation_check(proj, restricted.S, tol)
    if comm.commutator_norm > tol:
        raise CommutationViolation(
            f"induced projectors fail to commute with Bob's POVMs: {comm.commutator_norm:.3e}",
            comm.commutator_norm)

    n_a, n_b, n_x, n_y = strategy.shape
    Ms = restricted.S.reshape(n_b * n_y, restricted.dim_e, restricted.dim_e)
    Ns = proj.Q.reshape(n_a * n_x, restricted.dim_e, restricted.dim_e)
    try:
        fac = factorize_commuting(Ms, Ns, tol, seed)
    except (DecompositionFailed, NotCommuting) as exc:
        raise FactorizationFailed(str(exc)) from exc
    d1, d2 = fac.dim1, fac.dim2
    S_bar = fac.M_bar.reshape(n_b, n_y, d1, d1)
    Q_bar = fac.N_bar.reshape(n_a, n_x, d2, d2)

    # embed Bob's space into E1 ⊗ E2 with Bob measuring S_bar ⊗ I
    big = np.kron(np.eye(strategy.dim_d), fac.embedding)
    gamma_bar = big @ restricted.gamma @ nx.dagger(big)
    gamma_bar = 0.5 * (gamma_bar + nx.dagger(gamma_bar))
    S_embedded = np.einsum("byij,kl->byikjl", S_bar, np.eye(d2)).reshape(n_b, n_y, d1 * d2, d1 * d2)
    embedded = Strategy(strategy.R, S_embedded, gamma_bar)
    drift = achieved_correlation(embedded).max_deviation(base)
    steps.append(CongruenceStep("unitary_embedding", "forward", fac.embedding, correlation_drift=drift))

    tau = _tau_check(strategy.R, gamma_bar, Q_bar, strategy.dim_d, d1, d2)

    left = strategy.dim_d * d1
    gamma_final = nx.partial_trace(gamma_bar, left, d2, "second")
    final = Strategy(strategy.R, S_bar, 0.5 * (gamma_final + nx.dagger(gamma_final)))
    drift = achieved_correlation(final).max_deviation(base)
    steps.append(CongruenceStep("partial_trace", "forward", traced_dims=(d1, d2), correlation_drift=drift))

    for st in steps:
        if st.correlation_drift > CORRELATION_TOL:
            raise FactorizationFailed(
                f"{st.kind} step changed the correlation by {st.correlation_drift:.3e}")

    cnorm = alice_commutator_norm(final)
    cert = ClassicalizationCertificate(
        steps=steps,
        final_strategy=final,
        commutator_norm=cnorm,
        tau_check=tau,
        min_rho_eigenvalue=min_eig,
        projectors=proj,
        commutation=comm,
        factorization=fac,
        tolerances={"tol": tol, "tol_pg": tol_pg, "correlation": CORRELATION_TOL},
        seed=seed,
        correlation=base,
    )
    if cnorm > tol:
        err = CommutationViolation(f"final state fails to commute with Alice: {cnorm:.3e}", cnorm)
        err.certificate = cert
        raise err
    return cert


@dataclass
class Verification:
    ok: bool
    commutator_norm: float
    final_state_error: float
    embedding_error: float  # max deviation of isometry conditions i^dag i = I
    support_error: float  # ||gamma - (I ⊗ W) gamma' (I ⊗ W)^dag|| for the restriction
    bob_reconstruction: float  # ||S - i^dag (S_bar ⊗ I) i|| over the chain
    correlation_drift: float


def verify_certificate(strategy: Strategy, cert: ClassicalizationCertificate,
                       tol: float | None = None) -> Verification:
    """Replay the congruence chain on ``strategy`` and recompute the final commutator."""
    tol = cert.tolerances.get("tol", TOL) if tol is None else tol
    cur_S = strategy.S
    cur_g = strategy.gamma
    dim_d = strategy.dim_d
    emb_err = sup_err = bob_err = 0.0
    for st in cert.steps:
        if st.kind in ("restrict_support", "unitary_embedding"):
            i = st.isometry
            emb_err = max(emb_err, float(np.max(np.abs(nx.dagger(i) @ i - np.eye(i.shape[1])))))
            big = np.kron(np.eye(dim_d), i)
            if st.direction == "backward":
                g = nx.dagger(big) @ cur_g @ big
                g = g / np.real(np.trace(g))
                sup_err = max(sup_err, float(np.max(np.abs(big @ g @ nx.dagger(big) - cur_g))))
                cur_S = np.einsum("ki,bykl,lj->byij", i.conj(), cur_S, i)
                cur_g = g
            else:
                lifted = cert.final_strategy.S
                d2 = i.shape[0] // lifted.shape[2]
                S_emb = np.einsum("byij,kl->byikjl", lifted, np.eye(d2)).reshape(
                    lifted.shape[0], lifted.shape[1], i.shape[0], i.shape[0])
                back = np.einsum("ki,bykl,lj->byij", i.conj(), S_emb, i)
                bob_err = max(bob_err, float(np.max(np.abs(back - cur_S))))
                cur_S = S_emb
                cur_g = big @ cur_g @ nx.dagger(big)
        elif st.kind == "partial_trace":
            kept, traced = st.traced_dims
            cur_g = nx.partial_trace(cur_g, dim_d * kept, traced, "second")
            n_b, n_y = cur_S.shape[:2]
            cur_S = cur_S.reshape(n_b, n_y, kept, traced, kept, traced)[:, :, :, 0, :, 0]
    final = Strategy(strategy.R, cur_S, cur_g)
    g_err = float(np.max(np.abs(final.gamma - cert.final_strategy.gamma)))
    cnorm = alice_commutator_norm(final)
    drift = achieved_correlation(final).max_deviation(achieved_correlation(strategy))
    ok = (cnorm <= tol and g_err <= tol and emb_err <= tol and sup_err <= tol
          and bob_err <= tol and drift <= cert.tolerances.get("correlation", CORRELATION_TOL))
    return Verification(ok, cnorm, g_err, emb_err, sup_err, bob_err, drift)


@dataclass
class ChainResult:
    """Lambda = sum over output strings xs of |xs><xs| ⊗ blocks[xs] on V_1 ⊗ ... ⊗ V_n ⊗ D ⊗ E."""

    blocks: dict  # xs (tuple, one output per Alice input) -> operator on D ⊗ E
    marginal_residual: float  # max ||sum_{xs: xs[a] = x} Tr_D blocks[xs] - rho_a^x||_2
    correlation: Correlation
    hidden_weights: dict  # xs -> Tr blocks[xs]
    bob_response: dict  # xs -> [b, y] table, Tr[(I ⊗ S_b^y) blocks[xs]] / weight

    def local_model(self, n_x: int) -> Correlation:
        """Rebuild the correlation from the hidden-variable model carried by Lambda."""
        first = next(iter(self.bob_response.values()))
        n_b, n_y = first.shape
        n_a = len(next(iter(self.blocks)))
        p = np.zeros((n_a, n_b, n_x, n_y))
        for xs, w in self.hidden_weights.items():
            if w <= 0.0:
                continue
            for a, x in enumerate(xs):
                p[a, :, x, :] += w * self.bob_response[xs]
        return Correlation(p)


def alice_nondestructive_chain(strategy: Strategy, tol: float = TOL) -> ChainResult:
    """Apply Alice's measurements one input at a time, recording each outcome.

    Each step maps T to sum_x |x><x| ⊗ (sqrt R_a^x ⊗ I) T (sqrt R_a^x ⊗ I).
    This only reproduces the separate measure-and-record states when gamma
    commutes with Alice's operators, so that is checked first.
    """
    cnorm = alice_commutator_norm(strategy)
    if cnorm > tol:
        raise NotCommuting(f"state fails to commute with Alice's operators: {cnorm:.3e}", cnorm)
    n_a, n_b, n_x, n_y = strategy.shape
    eye = np.eye(strategy.dim_e)
    roots = np.stack([[np.kron(nx.psd_sqrt(strategy.R[a, x]), eye) for x in range(n_x)]
                      for a in range(n_a)])
    blocks = {(): strategy.gamma}
    for a in range(n_a):
        nxt = {}
        for xs, t in blocks.items():
            for x in range(n_x):
                k = roots[a, x]
                nxt[xs + (x,)] = k @ t @ k
        blocks = nxt

    residual = 0.0
    for a in range(n_a):
        target = pre_measurement_states(strategy, a)
        for x in range(n_x):
            acc = sum(t for xs, t in blocks.items() if xs[a] == x)
            marg = nx.partial_trace(acc, strategy.dim_d, strategy.dim_e, "first")
            residual = max(residual, nx.hs_norm(marg - target[x]))

    weights, response = {}, {}
    p = np.zeros((n_a, n_b, n_x, n_y))
    for xs, t in blocks.items():
        bob = nx.partial_trace(t, strategy.dim_d, strategy.dim_e, "first")
        joint = np.real(np.einsum("byij,ji->by", strategy.S, bob))
        w = float(np.real(np.trace(bob)))
        weights[xs] = w
        response[xs] = joint / w if w > ZERO_MASS else np.full((n_b, n_y), 1.0 / n_y)
        for a, x in enumerate(xs):
            p[a, :, x, :] += joint
    return ChainResult(blocks, residual, Correlation(p), weights, response)
