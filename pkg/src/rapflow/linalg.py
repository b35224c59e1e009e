"""Dense matrix kernels used by every analytic formula in the package.

All functions are pure; inputs are coerced to ``float64`` arrays and
checked for finiteness.
"""
import numpy as np
import scipy.linalg

from .errors import EigenNoConvergeError, EigenZeroViolation, SylvesterSingularError

__all__ = [
    "as_matrix",
    "as_row",
    "expm",
    "expm_batch",
    "sylvester_solve",
    "SylvesterOperator",
    "spectral_abscissa",
    "left_null_vector",
    "inf_norm",
]

SYLVESTER_RTOL = 1e-10
EIGEN_TOL = 1e-9


def as_matrix(A, name="matrix", square=False):
    """Return ``A`` as a finite 2-D float array.

    Scalars and 1-D inputs are promoted with ``np.atleast_2d``.
    """
    a = np.atleast_2d(np.asarray(A, dtype=float))
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    if square and a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def as_row(v, name="vector"):
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size < 1:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def inf_norm(A):
    """Induced infinity norm (maximum absolute row sum)."""
    A = np.atleast_2d(A)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def expm(A, t=1.0):
    """Matrix exponential ``exp(A t)``.

    Scaling and squaring with a Pade approximant (via ``scipy.linalg.expm``).

    Parameters
    ----------
    A : (n, n) array_like
    t : float, optional
        Non-negative time multiplier.
    """
    A = as_matrix(A, "A", square=True)
    t = float(t)
    if not np.isfinite(t) or t < 0:
        raise ValueError(f"t must be finite and non-negative, got {t}")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(A * t)


def expm_batch(A, ts):
    """Stack of ``exp(A t_i)`` for a 1-D array of times, shape ``(len(ts), n, n)``."""
    A = np.asarray(A, dtype=float)
    ts = np.asarray(ts, dtype=float).reshape(-1)
    if A.shape == (1, 1):
        return np.exp(A[0, 0] * ts)[:, None, None]
    return _pade13_stack(A[None, :, :] * ts[:, None, None])


_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)
_THETA13 = 5.371920351148152


def _pade13_stack(X):
    # Degree-13 Pade with per-matrix scaling and squaring, vectorised over
    # the leading axis. scipy's expm loops over stacked inputs in Python,
    # which dominates simulation cost for small blocks.
    b = _PADE13
    norms = np.abs(X).sum(axis=-2).max(axis=-1)
    s = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-300) / _THETA13))).astype(int)
    X = X / (2.0 ** s)[:, None, None]
    eye = np.eye(X.shape[-1])
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * eye)
    V = X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * eye
    R = np.linalg.solve(V - U, V + U)
    for j in range(int(s.max(initial=0))):
        sel = s > j
        R[sel] = R[sel] @ R[sel]
    return R


def _check_separation(A, B, rtol):
    # A X + X B = Q is singular iff A and -B share an eigenvalue.
    try:
        ea = np.linalg.eigvals(A)
        eb = np.linalg.eigvals(B)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergeError(str(exc)) from exc
    sep = np.min(np.abs(ea[:, None] + eb[None, :]))
    scale = max(1.0, inf_norm(A) + inf_norm(B))
    if sep <= rtol * scale:
        raise SylvesterSingularError(
            f"A and -B share an eigenvalue (separation {sep:.3e})"
        )
    return sep


class SylvesterOperator:
    """Factorised operator ``X -> A X + X B`` for repeated solves.

    The Kronecker system is assembled once in row-major vectorisation,
    ``vec(A X + X B) = (A (x) I + I (x) B^T) vec(X)``, and LU-factorised.
    """

    def __init__(self, A, B, rtol=1e-12):
        self.A = as_matrix(A, "A", square=True)
        self.B = as_matrix(B, "B", square=True)
        m, n = self.A.shape[0], self.B.shape[0]
        self.shape = (m, n)
        self.separation = _check_separation(self.A, self.B, rtol)
        K = np.kron(self.A, np.eye(n)) + np.kron(np.eye(m), self.B.T)
        self._lu = scipy.linalg.lu_factor(K, check_finite=False)

    def solve(self, Q):
        Q = np.asarray(Q, dtype=float)
        if Q.shape != self.shape:
            raise ValueError(f"Q must have shape {self.shape}, got {Q.shape}")
        x = scipy.linalg.lu_solve(self._lu, Q.reshape(-1), check_finite=False)
        return x.reshape(self.shape)

    def apply(self, X):
        return self.A @ X + X @ self.B


def sylvester_solve(A, B, Q, rtol=SYLVESTER_RTOL):
    """Solve ``A X + X B = Q`` for ``X``.

    Raises
    ------
    SylvesterSingularError
        If ``A`` and ``-B`` share an eigenvalue (within ``1e-12`` relative),
        or if the computed residual exceeds ``rtol * max(1, ||Q||)``.
    """
    A = as_matrix(A, "A", square=True)
    B = as_matrix(B, "B", square=True)
    Q = as_matrix(Q, "Q")
    if Q.shape != (A.shape[0], B.shape[0]):
        raise ValueError(
            f"Q has shape {Q.shape}, expected {(A.shape[0], B.shape[0])}"
        )
    op = SylvesterOperator(A, B)
    X = op.solve(Q)
    res = inf_norm(op.apply(X) - Q)
    if not np.isfinite(res) or res > rtol * max(1.0, inf_norm(Q)):
        raise SylvesterSingularError(f"Sylvester residual too large ({res:.3e})")
    return X


def spectral_abscissa(A):
    """Largest real part among the eigenvalues of ``A``."""
    A = as_matrix(A, "A", square=True)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergeError(str(exc)) from exc
    return float(np.max(ev.real))


def left_null_vector(M, tol=EIGEN_TOL):
    """Normalised left null vector ``v`` of ``M`` (``v M = 0``, ``v 1 = 1``).

    ``M`` must have exactly one eigenvalue within ``tol * max(1, ||M||)`` of
    zero, and a numerical null space of dimension one.

    Raises
    ------
    EigenZeroViolation
        If zero is not an eigenvalue, is repeated, or its left eigenvector
        cannot be normalised to sum one.
    """
    M = as_matrix(M, "M", square=True)
    n = M.shape[0]
    scale = max(1.0, inf_norm(M))
    try:
        ev = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenNoConvergeError(str(exc)) from exc
    near = np.sum((np.abs(ev.real) < tol * scale) & (np.abs(ev.imag) < tol * scale))
    if near != 1:
        raise EigenZeroViolation(
            f"expected a simple zero eigenvalue, found {int(near)} within tolerance"
        )
    sv = np.linalg.svd(M, compute_uv=False)
    if n > 1 and sv[-2] <= tol * scale:
        raise EigenZeroViolation("null space has dimension greater than one")

    # v [M, 1] = [0, 1] has the exact solution when the null space is simple.
    aug = np.hstack([M, np.ones((n, 1))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    v, *_ = np.linalg.lstsq(aug.T, rhs, rcond=None)
    if abs(v.sum() - 1.0) > 1e-8 or inf_norm(v[None, :] @ M) > tol * scale:
        raise EigenZeroViolation("left null vector cannot be normalised")
    return v / v.sum()
