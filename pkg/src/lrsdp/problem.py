"""Problem data model: sparse symmetric matrices, SDP instances, KKT residues.

Everything operates on the factor Y of X = Y Y^T; the full matrix X is never
formed by any routine in this module.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class ProblemError(ValueError):
    """Invalid problem data (bad indices, shape mismatch, duplicates)."""


class ManifoldKind(enum.Enum):
    """Structure imposed on X besides the arbitrary linear constraints.

    FREE: no extra structure. UNIT_TRACE: Tr(X) = 1, so the factor lives on
    the Frobenius sphere. UNIT_DIAGONAL: diag(X) = 1, so every row of the
    factor is a unit vector (oblique manifold).
    """

    FREE = "free"
    UNIT_TRACE = "unit-trace"
    UNIT_DIAGONAL = "unit-diagonal"


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric matrix stored as upper-triangular triplets (row <= col).

    Off-diagonal triplets represent the entry and its mirror, so
    ``<A, X> = sum_k val_k * X[r_k, c_k] * (2 if r_k != c_k else 1)``.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @staticmethod
    def from_triplets(n, triplets, accumulate=False):
        """Build from (row, col, value) tuples; indices are 0-based.

        With ``accumulate=True`` duplicate (row, col) pairs are summed
        (used by file parsers); otherwise duplicates raise ProblemError.
        """
        if n <= 0:
            raise ProblemError(f"dimension must be positive, got {n}")
        if not triplets:
            z = np.zeros(0)
            return SparseSymMatrix(n, z.astype(np.intp), z.astype(np.intp), z)
        r = np.array([t[0] for t in triplets], dtype=np.intp)
        c = np.array([t[1] for t in triplets], dtype=np.intp)
        v = np.array([t[2] for t in triplets], dtype=float)
        lo, hi = np.minimum(r, c), np.maximum(r, c)
        if lo.min() < 0 or hi.max() >= n:
            raise ProblemError("triplet index out of range")
        key = lo * n + hi
        if accumulate:
            key, inv = np.unique(key, return_inverse=True)
            v = np.bincount(inv, weights=v, minlength=key.size)
            lo, hi = key // n, key % n
        elif np.unique(key).size != key.size:
            raise ProblemError("duplicate (row, col) entry")
        else:
            order = np.argsort(key)
            lo, hi, v = lo[order], hi[order], v[order]
        return SparseSymMatrix(n, lo, hi, v)

    @staticmethod
    def identity(n):
        idx = np.arange(n, dtype=np.intp)
        return SparseSymMatrix(n, idx, idx.copy(), np.ones(n))

    @property
    def nnz(self):
        return self.rows.size

    def to_dense(self):
        A = np.zeros((self.n, self.n))
        A[self.rows, self.cols] = self.vals
        A[self.cols, self.rows] = self.vals
        return A

    def matvec(self, V):
        """A @ V for a dense n x p (or length-n) array V."""
        return self.as_csr() @ V

    def as_csr(self):
        # symmetric expansion, cached on first use
        csr = getattr(self, "_csr", None)
        if csr is None:
            off = self.rows != self.cols
            r = np.concatenate([self.rows, self.cols[off]])
            c = np.concatenate([self.cols, self.rows[off]])
            v = np.concatenate([self.vals, self.vals[off]])
            csr = sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))
            object.__setattr__(self, "_csr", csr)
        return csr


@dataclass(frozen=True)
class KktResidues:
    """Scaled primal/dual/gap residues; eta_max certifies the solution."""

    eta_p: float
    eta_d: float
    eta_g: float

    @property
    def eta_max(self):
        return max(self.eta_p, self.eta_d, self.eta_g)


class SdpProblem:
    """A linear SDP  min <C, X>  s.t.  <A_i, X> = b_i,  X in manifold, X >= 0.

    The reported objective is ``objective_sign * <C, X> + objective_offset``;
    internally the solver always minimizes <C, X>.

    Immutable after construction; all operations on it are pure.
    """

    def __init__(self, n, C, A, b, manifold, objective_sign=1.0,
                 objective_offset=0.0):
        b = np.asarray(b, dtype=float)
        if C.n != n:
            raise ProblemError("cost matrix dimension mismatch")
        if len(A) != b.size:
            raise ProblemError(f"|A| = {len(A)} but |b| = {b.size}")
        for k, Ak in enumerate(A):
            if Ak.n != n:
                raise ProblemError(f"constraint {k} dimension mismatch")
        self.n = n
        self.C = C
        self.A = tuple(A)
        self.b = b
        self.manifold = ManifoldKind(manifold)
        self.objective_sign = float(objective_sign)
        self.objective_offset = float(objective_offset)
        # flattened triplets of all A_i, for vectorized constraint application
        if A:
            self._tr = np.concatenate([Ak.rows for Ak in A])
            self._tc = np.concatenate([Ak.cols for Ak in A])
            self._tv = np.concatenate([Ak.vals for Ak in A])
            self._tm = np.concatenate(
                [np.full(Ak.nnz, k, dtype=np.intp) for k, Ak in enumerate(A)])
            self._tw = self._tv * np.where(self._tr != self._tc, 2.0, 1.0)
        else:
            e = np.zeros(0)
            self._tr = self._tc = self._tm = e.astype(np.intp)
            self._tv = self._tw = e
        self._adj = None   # lazy (m, n*n) map for the adjoint
        self._adjT = None  # its transpose, cached as csr

    @property
    def m(self):
        return len(self.A)

    def manifold_rhs(self):
        """The right-hand side d of the manifold constraints."""
        if self.manifold is ManifoldKind.FREE:
            return np.zeros(0)
        if self.manifold is ManifoldKind.UNIT_TRACE:
            return np.ones(1)
        return np.ones(self.n)

    def manifold_residual(self, Y):
        """B(Y Y^T) - d for the manifold constraints."""
        if self.manifold is ManifoldKind.FREE:
            return np.zeros(0)
        if self.manifold is ManifoldKind.UNIT_TRACE:
            return np.array([float(np.sum(Y * Y)) - 1.0])
        return np.einsum("ij,ij->i", Y, Y) - 1.0

    def _adjoint_map(self):
        if self._adj is None:
            off = self._tr != self._tc
            r = np.concatenate([self._tr, self._tc[off]])
            c = np.concatenate([self._tc, self._tr[off]])
            v = np.concatenate([self._tv, self._tv[off]])
            k = np.concatenate([self._tm, self._tm[off]])
            self._adj = sp.csr_matrix(
                (v, (k, r * self.n + c)), shape=(self.m, self.n * self.n))
        return self._adj

    def _adjoint_map_T(self):
        if self._adjT is None:
            self._adjT = self._adjoint_map().T.tocsr()
        return self._adjT

    def reported_objective(self, value):
        return self.objective_sign * value + self.objective_offset


def _check_factor(problem, Y):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != problem.n:
        raise ProblemError(
            f"factor must be {problem.n} x p, got shape {Y.shape}")
    return Y


def apply_constraints(problem, Y):
    """A(Y Y^T) as a length-m vector, without forming Y Y^T."""
    Y = _check_factor(problem, Y)
    prod = np.einsum("ij,ij->i", Y[problem._tr], Y[problem._tc])
    return np.bincount(problem._tm, weights=problem._tw * prod,
                       minlength=problem.m)


def apply_constraints_sym(problem, Y, U):
    """A(Y U^T + U Y^T) as a length-m vector (needed by Hessian products)."""
    Y = _check_factor(problem, Y)
    U = _check_factor(problem, U)
    prod = (np.einsum("ij,ij->i", Y[problem._tr], U[problem._tc])
            + np.einsum("ij,ij->i", U[problem._tr], Y[problem._tc]))
    return np.bincount(problem._tm, weights=problem._tw * prod,
                       minlength=problem.m)


def apply_adjoint_times(problem, v, V):
    """(sum_i v_i A_i) @ V for a dense n x p array V."""
    v = np.asarray(v, dtype=float)
    if v.shape != (problem.m,):
        raise ProblemError(f"multiplier length {v.shape} != m = {problem.m}")
    V = _check_factor(problem, V)
    if problem.m == 0:
        return np.zeros_like(V)
    Avec = problem._adjoint_map_T() @ v
    return Avec.reshape(problem.n, problem.n) @ V


def adjoint_dense(problem, v):
    """sum_i v_i A_i as a dense n x n matrix."""
    v = np.asarray(v, dtype=float)
    if problem.m == 0:
        return np.zeros((problem.n, problem.n))
    return (problem._adjoint_map_T() @ v).reshape(problem.n, problem.n)


def objective(problem, Y):
    """Internal (minimized) objective <C, Y Y^T>."""
    Y = _check_factor(problem, Y)
    C = problem.C
    prod = np.einsum("ij,ij->i", Y[C.rows], Y[C.cols])
    w = C.vals * np.where(C.rows != C.cols, 2.0, 1.0)
    return float(np.dot(w, prod))


def kkt_residues(problem, Y, y, z, lambda_min, lambda_max):
    """KKT residues of the tuple (X, y, z, S) with X = Y Y^T implicit.

    ``lambda_min``/``lambda_max`` are the extreme eigenvalues of the dual
    slack matrix S. The dual residue counts only the negative part of
    lambda_min, so a strictly PSD S certifies rather than blocks. The primal
    residue folds the manifold constraint violation in quadrature, and the
    gap residue includes the manifold multipliers (d^T z) in the dual value.
    """
    Y = _check_factor(problem, Y)
    ra = apply_constraints(problem, Y) - problem.b
    rb = problem.manifold_residual(Y)
    eta_p = np.sqrt(np.dot(ra, ra) + np.dot(rb, rb)) \
        / (1.0 + np.linalg.norm(problem.b))
    eta_d = max(-lambda_min, 0.0) / (1.0 + abs(lambda_max))
    pobj = objective(problem, Y)
    dobj = float(np.dot(problem.b, y) + np.dot(problem.manifold_rhs(), z))
    eta_g = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    res = KktResidues(float(eta_p), float(eta_d), float(eta_g))
    if not np.isfinite(res.eta_max):
        raise ProblemError("non-finite KKT residue")
    return res
