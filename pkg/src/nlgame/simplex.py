"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c.x  s.t.  A x = b, x >= 0``.  Problems here are tiny (a few
hundred rows at most), so a plain numpy tableau is plenty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    # for infeasible problems, the phase-1 point (best L1 fit)
    x: np.ndarray | None
    objective: float | None
    phase1_objective: float
    # y with A^T y <= c at optimality; for infeasible problems the phase-1
    # Farkas vector: A^T y <= 0 and b.y = phase1_objective > 0
    dual: np.ndarray
    iterations: int


class _Tableau:
    """Rows 0..m-1 hold [B^-1 A | B^-1 | B^-1 b]; ``cost`` holds reduced costs."""

    def __init__(self, A: np.ndarray, b: np.ndarray, tol: float):
        m, n = A.shape
        self.m, self.n = m, n
        self.tol = tol
        self.t = np.zeros((m, n + m + 1))
        self.t[:, :n] = A
        self.t[:, n:n + m] = np.eye(m)
        self.t[:, -1] = b
        self.basis = list(range(n, n + m))
        self.cost = np.zeros(n + m + 1)
        self.iterations = 0

    def set_costs(self, c_full: np.ndarray) -> None:
        cb = c_full[self.basis]
        self.cost = np.zeros(self.n + self.m + 1)
        self.cost[:-1] = c_full - cb @ self.t[:, :-1]
        self.cost[-1] = -cb @ self.t[:, -1]

    def pivot(self, row: int, col: int) -> None:
        t = self.t
        t[row] /= t[row, col]
        col_vals = t[:, col].copy()
        col_vals[row] = 0.0
        t -= np.outer(col_vals, t[row])
        self.cost -= self.cost[col] * t[row]
        self.basis[row] = col
        self.iterations += 1

    def run(self, allowed: int, max_iter: int) -> str:
        """Bland's rule over columns < ``allowed``; returns 'optimal' or 'unbounded'."""
        while True:
            if self.iterations >= max_iter:
                raise RuntimeError(f"simplex exceeded {max_iter} pivots")
            entering = -1
            for j in range(allowed):
                if self.cost[j] < -self.tol:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            col = self.t[:, entering]
            rows = np.nonzero(col > self.tol)[0]
            if rows.size == 0:
                return "unbounded"
            ratios = self.t[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + self.tol * max(1.0, abs(best))]
            # Bland: among tied rows leave the lowest-indexed basic variable
            leave = min(ties, key=lambda r: self.basis[r])
            self.pivot(int(leave), entering)

    def solution(self) -> np.ndarray:
        x = np.zeros(self.n + self.m)
        for r, j in enumerate(self.basis):
            x[j] = self.t[r, -1]
        return x


def solve(c, A, b, *, tol: float = PIVOT_TOL, feas_tol: float = FEAS_TOL,
          max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A1 = A * sign[:, None]
    b1 = b * sign

    tab = _Tableau(A1, b1, tol)
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    tab.set_costs(c1)
    tab.run(n + m, max_iter)
    phase1 = max(-tab.cost[-1], 0.0)
    # reduced cost of artificial i is 1 - y_i
    y1 = (1.0 - tab.cost[n:n + m]) * sign
    if phase1 > feas_tol * max(1.0, float(np.abs(b).sum())):
        return LPResult("infeasible", tab.solution()[:n], None, phase1, y1, tab.iterations)

    # drive remaining artificial variables out of the basis where possible
    for r in range(m):
        if tab.basis[r] >= n:
            cols = np.nonzero(np.abs(tab.t[r, :n]) > tol)[0]
            if cols.size:
                tab.pivot(r, int(cols[0]))

    c2 = np.concatenate([c, np.zeros(m)])
    tab.set_costs(c2)
    status = tab.run(n, max_iter)
    y2 = (-tab.cost[n:n + m]) * sign
    x = tab.solution()[:n]
    if status == "unbounded":
        return LPResult("unbounded", x, None, phase1, y2, tab.iterations)
    return LPResult("optimal", x, float(c @ x), phase1, y2, tab.iterations)


def maximize(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, **kw) -> LPResult:
    """max c.x over x >= 0 with ``A_ub x <= b_ub`` and ``A_eq x = b_eq``; slacks appended internally."""
    c = np.asarray(c, dtype=float)
    n = c.size
    blocks, rhs = [], []
    n_ub = 0
    if A_ub is not None:
        A_ub = np.asarray(A_ub, dtype=float)
        n_ub = A_ub.shape[0]
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float)
    if A_ub is not None:
        blocks.append(np.hstack([A_ub, np.eye(n_ub)]))
        rhs.append(np.asarray(b_ub, dtype=float))
    if A_eq is not None:
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_ub))]))
        rhs.append(np.asarray(b_eq, dtype=float))
    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    res = solve(np.concatenate([-c, np.zeros(n_ub)]), A, b, **kw)
    if res.x is not None:
        res.x = res.x[:n]
    if res.objective is not None:
        res.objective = -res.objective
    return res
