"""Small dense complex linear algebra for Hermitian operators.

Matrices are plain ``numpy`` complex arrays.  Tensor products are always
ordered (first ⊗ second) with row-major index flattening, so for a state on
Alice ⊗ Bob the Alice index is the slow one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotHermitian, NotPSD

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
EIG_TOL = 1e-11
RANK_TOL = 1e-8
MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues in descending order; ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-d matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return float(np.max(np.abs(m - dagger(m)))) <= tol


def _check_hermitian(m: np.ndarray, tol: float) -> None:
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {m.shape}")
    dev = float(np.max(np.abs(m - dagger(m))))
    if dev > tol:
        raise NotHermitian(f"max |M - M^dagger| = {dev:.3e} exceeds {tol:.1e}")


def hermitian_eig(m, *, tol: float = EIG_TOL, max_sweeps: int = MAX_SWEEPS,
                  hermitian_tol: float = HERMITIAN_TOL) -> EigDecomposition:
    """Cyclic complex Jacobi eigendecomposition of a Hermitian matrix.

    Each rotation zeroes one off-diagonal pair (p, q) with the unitary
    ``diag(1, e^{-i phi}) @ [[c, s], [-s, c]]`` acting on coordinates p, q.
    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * ||M||_F``.
    """
    a = as_matrix(m).copy()
    _check_hermitian(a, hermitian_tol)
    n = a.shape[0]
    a = 0.5 * (a + dagger(a))
    v = np.eye(n, dtype=complex)
    scale = float(np.linalg.norm(a))
    if n == 1 or scale == 0.0:
        return _sorted(np.real(np.diag(a)).copy(), v, 0)

    # one extra sweep past the contract threshold is nearly free (quadratic convergence)
    target = min(tol, 1e-14) * scale
    sweeps = 0
    while True:
        off = a - np.diag(np.diag(a))
        off_norm = float(np.linalg.norm(off))
        if off_norm <= target:
            break
        if sweeps >= max_sweeps:
            if off_norm <= tol * scale:
                break
            raise NoConvergence(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off_norm:.3e})")
        sweeps += 1
        # skip entries that are negligible against the convergence target
        skip = 1e-3 * target / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                z = a[p, q]
                r = abs(z)
                if r <= skip:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                diff = aqq - app
                if diff >= 0.0:
                    theta = 0.5 * math.atan2(2.0 * r, diff)
                else:
                    theta = 0.5 * math.atan2(-2.0 * r, -diff)
                c = math.cos(theta)
                s = math.sin(theta)
                ph = np.conj(z) / r
                sph = s * ph
                cph = c * ph
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - sph * col_q
                a[:, q] = s * col_p + cph * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - np.conj(sph) * row_q
                a[q, :] = s * row_p + np.conj(cph) * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - sph * vq
                v[:, q] = s * vp + cph * vq
    return _sorted(np.real(np.diag(a)).copy(), v, sweeps)


def _sorted(w: np.ndarray, v: np.ndarray, sweeps: int) -> EigDecomposition:
    order = np.argsort(-w, kind="stable")
    return EigDecomposition(w[order], v[:, order], sweeps)


def _psd_eig(m, psd_tol: float) -> EigDecomposition:
    eig = hermitian_eig(m)
    lo = float(eig.eigenvalues[-1])
    if lo < -psd_tol:
        raise NotPSD(f"minimum eigenvalue {lo:.3e} below -{psd_tol:.1e}")
    w = eig.eigenvalues.copy()
    # eigenvalues at roundoff level are zeros; sqrt would inflate them to ~1e-8
    noise = 16 * w.size * np.finfo(float).eps * max(float(w[0]), 0.0)
    w[w <= noise] = 0.0
    return EigDecomposition(w, eig.eigenvectors, eig.sweeps)


def is_psd(m, tol: float = PSD_TOL) -> bool:
    m = as_matrix(m)
    if not is_hermitian(m, max(tol, HERMITIAN_TOL)):
        return False
    return float(hermitian_eig(m).eigenvalues[-1]) >= -tol


def apply_function(eig: EigDecomposition, f) -> np.ndarray:
    v = eig.eigenvectors
    return (v * f(eig.eigenvalues)) @ dagger(v)


def psd_sqrt(m, *, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root; eigenvalues in [-psd_tol, 0) are clamped to zero."""
    return apply_function(_psd_eig(m, psd_tol), np.sqrt)


def psd_inv_sqrt(m, *, rank_tol: float = RANK_TOL, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Pseudo-inverse square root, inverting only on the numerical support."""
    eig = _psd_eig(m, psd_tol)
    w = eig.eigenvalues
    cut = rank_tol * (float(w[0]) if w.size else 0.0)

    def f(x):
        out = np.zeros_like(x)
        keep = x > cut
        out[keep] = 1.0 / np.sqrt(x[keep])
        return out

    return apply_function(eig, f)


def support_basis(m, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning eigenvectors with eigenvalue > tol * lambda_max."""
    eig = hermitian_eig(m)
    w = eig.eigenvalues
    top = float(w[0])
    if top <= 0.0:
        return np.zeros((w.size, 0), dtype=complex)
    keep = w > tol * top
    return eig.eigenvectors[:, keep]


def support_projector(m, tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto the numerical support of a PSD matrix (zero matrix -> zero projector)."""
    b = support_basis(m, tol)
    return b @ dagger(b)


def _singular_values(m: np.ndarray) -> np.ndarray:
    # Hermitian dilation [[0, M], [M^dagger, 0]] has spectrum {+-sigma_k}
    n = m.shape[0]
    dil = np.zeros((2 * n, 2 * n), dtype=complex)
    dil[:n, n:] = m
    dil[n:, :n] = dagger(m)
    return hermitian_eig(dil).eigenvalues[:n]


def trace_norm(m) -> float:
    """Sum of singular values."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {m.shape}")
    if is_hermitian(m, 1e-13 * max(1.0, float(np.max(np.abs(m))))):
        return float(np.sum(np.abs(hermitian_eig(0.5 * (m + dagger(m))).eigenvalues)))
    return float(np.sum(np.clip(_singular_values(m), 0.0, None)))


def hs_norm(m) -> float:
    return float(np.sqrt(np.sum(np.abs(as_matrix(m)) ** 2)))


def op_norm(m) -> float:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {m.shape}")
    return float(max(_singular_values(m)[0], 0.0))


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m, dim_a: int, dim_b: int, side: str = "second") -> np.ndarray:
    """Trace out one factor of a matrix on (first ⊗ second).

    ``side`` names the factor that is removed: ``"first"`` returns the
    operator on the second factor and vice versa.
    """
    m = as_matrix(m)
    if m.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DimensionMismatch(
            f"matrix of shape {m.shape} does not match {dim_a}x{dim_b} bipartition")
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if side == "first":
        return np.einsum("ijik->jk", t)
    if side == "second":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"side must be 'first' or 'second', got {side!r}")


def commutator(a, b) -> np.ndarray:
    return a @ b - b @ a


def ket(theta: float) -> np.ndarray:
    """Real qubit vector cos(theta)|0> + sin(theta)|1>."""
    return np.array([math.cos(theta), math.sin(theta)], dtype=complex)


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_isometry(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Random n x k matrix with orthonormal columns."""
    return random_unitary(n, rng)[:, :k]


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + dagger(a))


def random_psd(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    k = n if rank is None else rank
    a = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return a @ dagger(a)


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    p = random_psd(n, rng, rank)
    return p / np.trace(p).real
