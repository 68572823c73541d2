"""Sparse assembly, direct solves, and a generalized symmetric eigensolver.

The triplet accumulation is deterministic and permutation-invariant: entries
are sorted by (row, col, value) before duplicate summation, so shuffled
triplet order produces a bit-identical compressed matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    """Raised when a factorization meets a (near-)zero pivot."""


class SolveAccuracyError(RuntimeError):
    """Raised when a direct solve fails its residual check."""


@dataclass(frozen=True)
class SparseMatrix:
    """Compressed sparse matrix built from (row, col, value) triplets."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_triplets(cls, n_rows, n_cols, rows, cols, vals) -> "SparseMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        vals = np.asarray(vals, dtype=float)
        if not (rows.shape == cols.shape == vals.shape):
            raise ValueError("triplet arrays must have identical shapes")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                          or cols.min() < 0 or cols.max() >= n_cols):
            raise ValueError("triplet index out of range")
        order = np.lexsort((vals, cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            new_group = np.empty(rows.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            starts = np.nonzero(new_group)[0]
            vals = np.add.reduceat(vals, starts)
            rows, cols = rows[starts], cols[starts]
        for a in (rows, cols, vals):
            a.setflags(write=False)
        return cls(n_rows=n_rows, n_cols=n_cols, rows=rows, cols=cols, vals=vals)

    @property
    def nnz(self) -> int:
        return self.vals.size

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.n_rows, self.n_cols)
        )

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_cols))
        np.add.at(A, (self.rows, self.cols), self.vals)
        return A

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.n_rows)
        np.add.at(out, self.rows, self.vals * x[self.cols])
        return out

    def dense_block(self, row_idx, col_idx) -> np.ndarray:
        """Dense submatrix for the given row/column index arrays."""
        return self.to_scipy()[np.ix_(np.asarray(row_idx), np.asarray(col_idx))].toarray()

    def norm_inf(self) -> float:
        out = np.zeros(self.n_rows)
        np.add.at(out, self.rows, np.abs(self.vals))
        return float(out.max()) if out.size else 0.0


@dataclass
class LinearSystem:
    """Assembled system with (optionally not yet applied) point constraints."""

    matrix: SparseMatrix
    rhs: np.ndarray
    constraints: dict = field(default_factory=dict)  # dof index -> value
    constraints_applied: bool = False


def apply_constraints(system: LinearSystem) -> LinearSystem:
    """Fold point constraints by symmetric row/column elimination.

    Constrained rows become identity rows with the prescribed value on the
    right-hand side; columns are eliminated into the rhs so the reduced
    problem is exactly the constrained problem.
    """
    A, rhs = system.matrix, np.array(system.rhs, dtype=float)
    if not system.constraints:
        return LinearSystem(A, rhs, {}, constraints_applied=True)
    n = A.n_rows
    cvals = np.zeros(n)
    is_con = np.zeros(n, dtype=bool)
    for dof, val in system.constraints.items():
        if is_con[dof]:
            raise ValueError(f"dof {dof} constrained twice")
        is_con[dof] = True
        cvals[dof] = val

    keep = ~(is_con[A.rows] | is_con[A.cols])
    col_con = is_con[A.cols] & ~is_con[A.rows]
    np.add.at(rhs, A.rows[col_con], -A.vals[col_con] * cvals[A.cols[col_con]])

    con_idx = np.nonzero(is_con)[0]
    rows = np.concatenate([A.rows[keep], con_idx])
    cols = np.concatenate([A.cols[keep], con_idx])
    vals = np.concatenate([A.vals[keep], np.ones(con_idx.size)])
    rhs[con_idx] = cvals[con_idx]
    matrix = SparseMatrix.from_triplets(A.n_rows, A.n_cols, rows, cols, vals)
    return LinearSystem(matrix, rhs, dict(system.constraints), constraints_applied=True)


def solve_direct(system: LinearSystem, pivot_rtol: float = 1e-14,
                 residual_rtol: float = 1e-10) -> np.ndarray:
    """Direct sparse-LU solve with a residual check.

    Raises SingularMatrixError when a pivot falls below pivot_rtol times the
    largest pivot: the signature of a missing pressure constraint or of an
    exactly singular (unstable) formulation.  Set pivot_rtol=0 to attempt the
    back-substitution anyway and observe the unstable solution.
    """
    A = system.matrix
    if A.n_rows != A.n_cols:
        raise ValueError("matrix must be square")
    if system.constraints and not system.constraints_applied:
        raise ValueError("apply_constraints before solving")
    b = np.asarray(system.rhs, dtype=float)
    try:
        lu = spla.splu(A.to_scipy().tocsc())
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    pivots = np.abs(lu.U.diagonal())
    scale = float(pivots.max()) if pivots.size else 0.0
    if scale == 0.0 or pivots.min() < pivot_rtol * scale:
        raise SingularMatrixError(
            f"singular matrix: min pivot {pivots.min():.3e} vs scale {scale:.3e}"
        )
    x = lu.solve(b)
    # one step of iterative refinement buys several digits on ill-conditioned
    # stabilized saddle-point systems at negligible cost; skipped when the
    # factorization is numerically singular (pivot_rtol = 0 escape hatch),
    # where the correction would only add arbitrary null-space content
    if pivots.min() >= 1e-14 * scale:
        x = x + lu.solve(b - A.matvec(x))
    denom = A.norm_inf() * np.abs(x).max() + np.abs(b).max()
    if denom > 0:
        res = np.abs(A.matvec(x) - b).max() / denom
        if res > residual_rtol:
            raise SolveAccuracyError(
                f"solve residual {res:.3e} exceeds {residual_rtol:.1e}"
            )
    return x


def dense_inverse(A) -> np.ndarray:
    """Inverse of a small dense block (per-element fine-scale block)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"singular fine block: {exc}") from exc
    resid = np.abs(A @ inv - np.eye(n)).max()
    if not np.isfinite(resid) or resid > 1e-12 * max(1.0, np.abs(A).max()):
        raise SingularMatrixError(
            f"fine block inversion residual {resid:.3e}; degenerate element"
        )
    return inv


def _jacobi_eig_sym(A, max_sweeps=100, rtol=1e-12):
    """Cyclic Jacobi diagonalization of a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    normF = np.linalg.norm(A)
    if normF == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A**2) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= rtol * normF:
            break
        thresh = off / n
        for p in range(n - 1):
            row = A[p, p + 1:]
            for q in (np.nonzero(np.abs(row) > 0.1 * thresh)[0] + p + 1):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def eig_sym_generalized(S, M):
    """Solve S q = lambda M q for symmetric S and SPD M.

    Uses the Cholesky reduction M = L L^T followed by cyclic Jacobi on
    L^-1 S L^-T.  Returns eigenvalues in ascending order and the matrix of
    M-orthonormal eigenvectors (one per column).
    """
    S = np.asarray(S, dtype=float)
    M = np.asarray(M, dtype=float)
    if S.shape != M.shape or S.shape[0] != S.shape[1]:
        raise ValueError("S and M must be square with matching shapes")
    asym = np.abs(S - S.T).max()
    if asym > 1e-10 * max(1.0, np.abs(S).max()):
        raise ValueError(f"S is not symmetric (asymmetry {asym:.3e})")
    S = 0.5 * (S + S.T)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"M is not symmetric positive definite: {exc}") from exc
    Linv_S = np.linalg.solve(L, S)
    C = np.linalg.solve(L, Linv_S.T).T  # L^-1 S L^-T
    C = 0.5 * (C + C.T)
    lam, U = _jacobi_eig_sym(C)
    order = np.argsort(lam)
    lam = lam[order]
    Q = np.linalg.solve(L.T, U[:, order])
    return lam, Q
