"""Sparse symmetric matrices and a preconditioned conjugate gradient solver.

Storage and matvec sit on scipy CSR; the CG iteration, the Jacobi and
zero-fill incomplete Cholesky preconditioners, and the SPD diagnostics are
implemented here. CG reports instead of raising on slow convergence; a
breakdown (non-SPD operator) is a distinct hard error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NotPositiveDefiniteError, SolverError, ValidationError

__all__ = ["SymmetricSparseMatrix", "SolverReport", "cg_solve", "dense_spd_check",
           "write_matrix_market", "PRECONDITIONERS"]

PRECONDITIONERS = ("none", "jacobi", "ic0")


class SymmetricSparseMatrix:
    """CSR-backed symmetric sparse matrix with structural invariants.

    The stored pattern must be structurally symmetric with sorted, duplicate
    free column indices; validate() checks this plus numerical symmetry.
    """

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr)
        if csr.shape[0] != csr.shape[1]:
            raise ValidationError(f"matrix must be square, got {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        self._m = csr

    @classmethod
    def from_coo(cls, rows, cols, data, n: int) -> "SymmetricSparseMatrix":
        m = sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()
        return cls(m)

    @property
    def n(self) -> int:
        return self._m.shape[0]

    @property
    def nnz(self) -> int:
        return self._m.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self._m @ x

    def diagonal(self) -> np.ndarray:
        return self._m.diagonal()

    def to_scipy(self) -> sp.csr_matrix:
        return self._m

    def toarray(self) -> np.ndarray:
        return self._m.toarray()

    def max_abs(self) -> float:
        return float(np.abs(self._m.data).max()) if self._m.nnz else 0.0

    def validate(self, tol: float = 1e-12) -> None:
        m = self._m
        if not m.has_sorted_indices:
            raise ValidationError("column indices are not sorted")
        d = (m - m.T).tocoo()
        scale = self.max_abs()
        if d.nnz and np.abs(d.data).max() > tol * max(scale, 1e-300):
            raise ValidationError(
                f"matrix is not symmetric: max asymmetry {np.abs(d.data).max():.3e} "
                f"(scale {scale:.3e})"
            )
        pattern = sp.csr_matrix((np.ones_like(m.data), m.indices, m.indptr), shape=m.shape)
        pt = pattern.T.tocsr()
        pt.sort_indices()
        if not (np.array_equal(pattern.indptr, pt.indptr)
                and np.array_equal(pattern.indices, pt.indices)):
            raise ValidationError("sparsity pattern is not structurally symmetric")


@dataclass
class SolverReport:
    converged: bool
    iterations: int
    relative_residual: float
    preconditioner: str
    shift: float = 0.0  # diagonal shift an ic0 factorization needed, if any


class _Jacobi:
    name = "jacobi"
    shift = 0.0

    def __init__(self, A: SymmetricSparseMatrix):
        d = A.diagonal()
        if np.any(d <= 0):
            i = int(np.argmin(d))
            raise NotPositiveDefiniteError(
                f"diagonal entry {i} is {d[i]:.3e}; operator cannot be SPD"
            )
        self._inv = 1.0 / d

    def apply(self, r: np.ndarray) -> np.ndarray:
        return self._inv * r


class _Identity:
    name = "none"
    shift = 0.0

    def __init__(self, A):
        pass

    def apply(self, r: np.ndarray) -> np.ndarray:
        return r


class _IncompleteCholesky:
    """IC(0): lower factor on the pattern of tril(A), with diagonal-shift
    retries when a pivot fails (the factorization, unlike A, need not exist)."""

    name = "ic0"

    def __init__(self, A: SymmetricSparseMatrix):
        base = sp.tril(A.to_scipy(), format="csr")
        base.sort_indices()
        diag = A.diagonal()
        if np.any(diag <= 0):
            raise NotPositiveDefiniteError("nonpositive diagonal; operator cannot be SPD")
        shift = 0.0
        for attempt in range(6):
            L = self._factor(base, diag, shift)
            if L is not None:
                self._L = L
                self._LT = L.T.tocsr()
                self.shift = shift
                return
            shift = 1e-3 if shift == 0.0 else shift * 10.0
        raise NotPositiveDefiniteError("ic0 factorization failed even with diagonal shifts")

    @staticmethod
    def _factor(base: sp.csr_matrix, diag: np.ndarray, shift: float):
        n = base.shape[0]
        indptr, indices = base.indptr, base.indices
        vals = base.data.astype(np.float64).copy()
        if shift:
            vals[indptr[1:] - 1] += shift * diag
        for i in range(n):
            s, e = indptr[i], indptr[i + 1]
            cols = indices[s:e]
            for p in range(s, e - 1):
                j = cols[p - s]
                js, je = indptr[j], indptr[j + 1]
                ci = indices[s:p]
                cj = indices[js : je - 1]
                common, ia, ja = np.intersect1d(ci, cj, assume_unique=True, return_indices=True)
                acc = float(vals[s + ia] @ vals[js + ja]) if len(common) else 0.0
                vals[p] = (vals[p] - acc) / vals[je - 1]
            head = vals[s : e - 1]
            piv = vals[e - 1] - float(head @ head)
            if piv <= 1e-14 * abs(vals[e - 1]) or piv <= 0.0:
                return None
            vals[e - 1] = np.sqrt(piv)
        return sp.csr_matrix((vals, indices.copy(), indptr.copy()), shape=base.shape)

    def apply(self, r: np.ndarray) -> np.ndarray:
        y = spla.spsolve_triangular(self._L, r, lower=True)
        return spla.spsolve_triangular(self._LT, y, lower=False)


_PRECONDITIONER_CLASSES = {"none": _Identity, "jacobi": _Jacobi, "ic0": _IncompleteCholesky}


def make_preconditioner(A: SymmetricSparseMatrix, name: str):
    try:
        cls = _PRECONDITIONER_CLASSES[name]
    except KeyError:
        raise ValidationError(
            f"unknown preconditioner {name!r}; expected one of {PRECONDITIONERS}"
        ) from None
    return cls(A)


def cg_solve(A: SymmetricSparseMatrix, b: np.ndarray, tol: float = 1e-10,
             max_iter: int | None = None, preconditioner: str = "jacobi",
             x0: np.ndarray | None = None):
    """Preconditioned CG. Returns (x, SolverReport).

    Convergence means ||b - Ax|| <= tol * ||b||. Hitting max_iter returns
    the best iterate with converged=False; a nonpositive curvature
    direction raises NotPositiveDefiniteError.
    """
    n = A.n
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise ValidationError(f"rhs has shape {b.shape}, expected ({n},)")
    if max_iter is None:
        max_iter = max(5 * n, 100)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), SolverReport(True, 0, 0.0, preconditioner)

    M = make_preconditioner(A, preconditioner)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    r = b - A.matvec(x)
    relres = float(np.linalg.norm(r)) / bnorm
    if relres <= tol:
        return x, SolverReport(True, 0, relres, preconditioner, M.shift)
    z = M.apply(r)
    p = z.copy()
    rz = float(r @ z)
    it = 0
    for it in range(1, max_iter + 1):
        Ap = A.matvec(p)
        pAp = float(p @ Ap)
        if not np.isfinite(pAp):
            raise SolverError(f"CG produced a non-finite value at iteration {it}")
        if pAp <= 0.0:
            raise NotPositiveDefiniteError(
                f"nonpositive curvature p'Ap = {pAp:.3e} at iteration {it}; "
                "operator is not positive definite"
            )
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        relres = float(np.linalg.norm(r)) / bnorm
        if relres <= tol:
            return x, SolverReport(True, it, relres, preconditioner, M.shift)
        z = M.apply(r)
        rz_new = float(r @ z)
        if rz_new <= 0.0:
            # SPD preconditioner forces r'z > 0 unless r is numerically zero
            return x, SolverReport(relres <= tol, it, relres, preconditioner, M.shift)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, SolverReport(False, it, relres, preconditioner, M.shift)


@dataclass
class SpdCheckResult:
    n: int
    symmetric: bool
    cholesky_ok: bool
    min_eigenvalue: float | None


def dense_spd_check(A: SymmetricSparseMatrix, max_n: int = 500,
                    eig_max_n: int = 200) -> SpdCheckResult:
    """Densify and verify SPD-ness; small systems only by design."""
    if A.n > max_n:
        raise ValidationError(f"dense SPD check limited to n <= {max_n}, got {A.n}")
    D = A.toarray()
    scale = max(float(np.abs(D).max()), 1e-300)
    symmetric = bool(np.abs(D - D.T).max() <= 1e-12 * scale)
    try:
        np.linalg.cholesky(D)
        chol = True
    except np.linalg.LinAlgError:
        chol = False
    mineig = float(np.linalg.eigvalsh(D).min()) if A.n <= eig_max_n else None
    return SpdCheckResult(n=A.n, symmetric=symmetric, cholesky_ok=chol, min_eigenvalue=mineig)


def write_matrix_market(prefix, A: SymmetricSparseMatrix, b: np.ndarray) -> None:
    """Write (A, b) as Matrix Market files <prefix>_A.mtx / <prefix>_b.mtx."""
    scipy.io.mmwrite(f"{prefix}_A.mtx", A.to_scipy().tocoo(), symmetry="general")
    scipy.io.mmwrite(f"{prefix}_b.mtx", np.asarray(b).reshape(-1, 1))
