"""Dense matrix kernel.

Matrices are plain numpy arrays in one of two modes:

* exact rational: ``dtype=object`` holding :class:`fractions.Fraction`
  entries. All Lie-algebra work (brackets, triples, gradings) runs here so
  identities can be asserted with ``==``.
* float: ``float64`` / ``complex128``. Used by the metric geometry and the
  grid solvers.

Integer input is promoted to the exact mode by :func:`rational`.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NotSquare, NotUnipotent

__all__ = [
    "LinearSolution",
    "ad_matrix",
    "bracket",
    "det",
    "eye",
    "expm",
    "hpd_geig",
    "inv",
    "is_exact",
    "is_nilpotent",
    "logm_unipotent",
    "nullspace",
    "rank",
    "rational",
    "rref",
    "solve_linear",
    "to_float",
]


def rational(M):
    """Return an exact copy of ``M`` (object array of Fractions)."""
    arr = np.asarray(M)
    if arr.dtype == object:
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr.copy()
    if np.iscomplexobj(arr):
        raise TypeError("exact mode holds rational (real) entries only")
    if arr.dtype.kind == "f":
        # exact binary value of each float; callers normally pass integers
        return np.vectorize(lambda v: Fraction(float(v)), otypes=[object])(arr)
    return np.vectorize(lambda v: Fraction(int(v)), otypes=[object])(arr)


def is_exact(M):
    return np.asarray(M).dtype == object


def to_float(M):
    arr = np.asarray(M)
    if arr.dtype == object:
        return arr.astype(float)
    return arr


def eye(n, exact=True):
    if exact:
        out = np.empty((n, n), dtype=object)
        out[...] = Fraction(0)
        for i in range(n):
            out[i, i] = Fraction(1)
        return out
    return np.eye(n)


def zeros(shape, exact=True):
    if exact:
        out = np.empty(shape, dtype=object)
        out[...] = Fraction(0)
        return out
    return np.zeros(shape)


def _square(M):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {M.shape}")
    return M


def bracket(A, B):
    """Commutator ``[A, B] = AB - BA``."""
    return A @ B - B @ A


def ad_matrix(A):
    """Matrix of ``X -> [A, X]`` acting on row-major ``vec(X)``."""
    A = np.asarray(A)
    n = A.shape[0]
    exact = is_exact(A)
    out = zeros((n * n, n * n), exact=exact) if exact else np.zeros((n * n, n * n), dtype=A.dtype)
    for i in range(n):
        for j in range(n):
            row = i * n + j
            for k in range(n):
                # (AX)_ij = sum_k A_ik X_kj ; (XA)_ij = sum_k X_ik A_kj
                out[row, k * n + j] += A[i, k]
                out[row, i * n + k] -= A[k, j]
    return out


def det(A):
    A = _square(A)
    if not is_exact(A):
        return np.linalg.det(A)
    M = [list(row) for row in A]
    n = len(M)
    out = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if M[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            out = -out
        out *= M[c][c]
        for i in range(c + 1, n):
            f = M[i][c] / M[c][c]
            if f:
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return out


def _all_zero(M, tol=0.0):
    if is_exact(M):
        return all(v == 0 for v in M.flat)
    return bool(np.max(np.abs(M), initial=0.0) <= tol)


def is_nilpotent(M, rtol=1e-10):
    M = _square(M)
    n = M.shape[0]
    if n == 0:
        return True
    if is_exact(M):
        return _all_zero(np.linalg.matrix_power(M, n))
    scale = max(np.max(np.abs(M)), 1.0)
    P = np.linalg.matrix_power(M / scale, n)
    return bool(np.max(np.abs(P)) <= rtol)


def _is_hermitian(M, rtol=1e-12):
    scale = np.max(np.abs(M), initial=0.0)
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= rtol * max(scale, 1e-300))


def _poly_series(X, coeffs):
    # sum_j coeffs[j] X^j for nilpotent X; stops once the powers vanish
    n = X.shape[0]
    P = eye(n) if is_exact(X) else np.eye(n, dtype=X.dtype)
    out = P * coeffs[0]
    for c in coeffs[1:]:
        P = P @ X
        if _all_zero(P):
            break
        out = out + P * c
    return out


def expm(M):
    """Matrix exponential.

    Nilpotent input in exact mode gives the exact terminating polynomial.
    Hermitian float input goes through ``eigh``. Anything else in float
    mode uses scaling-and-squaring Pade (scipy).
    """
    M = _square(M)
    n = M.shape[0]
    if is_exact(M):
        if is_nilpotent(M):
            return _poly_series(M, [Fraction(1, factorial(j)) for j in range(n + 1)])
        M = to_float(M)
    if _all_zero(M):
        return np.eye(n, dtype=M.dtype if np.iscomplexobj(M) else float)
    if _is_hermitian(M):
        w, V = np.linalg.eigh(M)
        out = (V * np.exp(w)) @ V.conj().T
        return out.real if not np.iscomplexobj(M) else out
    if np.allclose(np.tril(M), 0, atol=0) or np.allclose(np.triu(M), 0, atol=0):
        # strictly triangular: the series terminates after n terms
        return _poly_series(M.astype(np.result_type(M, float)), [1.0 / factorial(j) for j in range(n + 1)])
    return scipy.linalg.expm(M)


def logm_unipotent(U):
    """Logarithm of a unipotent matrix by the terminating Mercator series."""
    U = _square(U)
    n = U.shape[0]
    exact = is_exact(U)
    X = U - eye(n, exact=exact)
    if not exact:
        X = X.astype(np.result_type(X, float))
    if not is_nilpotent(X):
        raise NotUnipotent("U - I is not nilpotent")
    if exact:
        coeffs = [Fraction(0)] + [Fraction((-1) ** (j + 1), j) for j in range(1, n + 1)]
    else:
        coeffs = [0.0] + [(-1) ** (j + 1) / j for j in range(1, n + 1)]
    return _poly_series(X, coeffs)


def hpd_geig(H1, H2):
    """Eigenvalues of ``H1^{-1} H2`` for Hermitian positive definite inputs.

    Reduced to a single Hermitian problem through the Cholesky factor of
    ``H1``; returned sorted ascending.
    """
    H1 = np.asarray(to_float(H1))
    H2 = np.asarray(to_float(H2))
    try:
        C = np.linalg.cholesky(H1)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("first argument is not positive definite") from exc
    Ci = scipy.linalg.solve_triangular(C, np.eye(C.shape[0]), lower=True)
    S = Ci @ H2 @ Ci.conj().T
    S = (S + S.conj().T) / 2
    w = np.linalg.eigvalsh(S)
    if w[0] <= 0:
        raise NotPositiveDefinite("second argument is not positive definite")
    return w


# --- exact elimination -----------------------------------------------------


def rref(A, track=False):
    """Reduced row echelon form over the rationals.

    Returns ``(R, pivots)`` or, with ``track=True``, ``(R, pivots, T)`` where
    ``T @ A == R``.
    """
    A = rational(A)
    m, n = A.shape
    R = [list(row) for row in A]
    T = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)] if track else None
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        piv = next((i for i in range(row, m) if R[i][col] != 0), None)
        if piv is None:
            continue
        if piv != row:
            R[row], R[piv] = R[piv], R[row]
            if track:
                T[row], T[piv] = T[piv], T[row]
        p = R[row][col]
        if p != 1:
            R[row] = [v / p for v in R[row]]
            if track:
                T[row] = [v / p for v in T[row]]
        for i in range(m):
            f = R[i][col]
            if i != row and f != 0:
                R[i] = [a - f * b for a, b in zip(R[i], R[row])]
                if track:
                    T[i] = [a - f * b for a, b in zip(T[i], T[row])]
        pivots.append(col)
        row += 1
    Rarr = zeros((m, n))
    for i in range(m):
        for j in range(n):
            Rarr[i, j] = R[i][j]
    if not track:
        return Rarr, pivots
    Tarr = zeros((m, m))
    for i in range(m):
        for j in range(m):
            Tarr[i, j] = T[i][j]
    return Rarr, pivots, Tarr


def rank(A, tol=None):
    if is_exact(A) or np.asarray(A).dtype.kind in "iu":
        return len(rref(A)[1])
    return int(np.linalg.matrix_rank(A, tol=tol))


def nullspace(A, rtol=1e-12):
    """Basis of ``{x : A x = 0}`` as the columns of the returned matrix.

    Exact mode gives the canonical rref basis: one vector per free column,
    with a 1 in that column and zeros in every other free column.
    """
    A = np.asarray(A)
    if A.ndim != 2:
        raise DimensionMismatch("nullspace needs a 2-d array")
    n = A.shape[1]
    if not (is_exact(A) or A.dtype.kind in "iu"):
        return scipy.linalg.null_space(A, rcond=rtol)
    R, pivots = rref(A)
    free = [j for j in range(n) if j not in pivots]
    basis = zeros((n, len(free)))
    for k, f in enumerate(free):
        basis[f, k] = Fraction(1)
        for i, p in enumerate(pivots):
            basis[p, k] = -R[i, f]
    return basis


def inv(A):
    A = _square(A)
    if is_exact(A):
        n = A.shape[0]
        R, pivots, T = rref(A, track=True)
        if len(pivots) != n:
            raise np.linalg.LinAlgError("singular matrix")
        return T
    return np.linalg.inv(A)


@dataclass(frozen=True)
class LinearSolution:
    """Solution set of ``A x = b``.

    When feasible, every solution is ``particular + nullspace @ c``. When
    infeasible, ``particular`` is None and ``witness`` is a left vector with
    ``witness @ A == 0`` and ``witness @ b == residual != 0``.
    """

    particular: object
    nullspace: object
    witness: object = None
    residual: object = None

    @property
    def feasible(self):
        return self.particular is not None

    @property
    def unique(self):
        return self.feasible and self.nullspace.shape[1] == 0


def solve_linear(A, b, rtol=1e-10):
    """Describe the full solution set of ``A x = b``."""
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise DimensionMismatch(f"A has shape {A.shape}, b has shape {b.shape}")
    m, n = A.shape
    if is_exact(A) or is_exact(b) or (A.dtype.kind in "iu" and b.dtype.kind in "iu"):
        A = rational(A)
        b = rational(b)
        R, pivots, T = rref(A, track=True)
        tb = T @ b if m else b
        N = nullspace(A) if m else eye(n)
        for i in range(len(pivots), m):
            if tb[i] != 0:
                y = T[i]
                return LinearSolution(None, N, witness=y, residual=y @ b)
        x = zeros(n)
        for i, p in enumerate(pivots):
            x[p] = tb[i]
        return LinearSolution(x, N)
    A = to_float(A)
    b = to_float(b)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    res = b - A @ x
    N = scipy.linalg.null_space(A, rcond=rtol) if m else np.eye(n)
    scale = max(np.linalg.norm(b), np.linalg.norm(A) * np.linalg.norm(x), 1e-300)
    if np.linalg.norm(res) > rtol * scale:
        # least-squares residual is orthogonal to range(A): a valid certificate
        return LinearSolution(None, N, witness=res.conj(), residual=res.conj() @ b)
    return LinearSolution(x, N)
