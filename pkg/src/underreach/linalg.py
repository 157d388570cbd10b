"""Dense matrix helpers: norms, truncated Taylor operators and invertibility tests.

Every norm here is the maximum norm on vectors and the induced row-sum
norm on matrices.
"""
import logging
import math

import numpy as np

from underreach.errors import RankDeficient

logger = logging.getLogger(__name__)

TOL_RANK = 1e-10
_THETA_REL_STOP = 1e-16


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(A, name="A"):
    arr = as_matrix(A, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def inf_norm(M):
    """Maximum absolute row sum."""
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 1:
        return float(np.max(np.abs(arr))) if arr.size else 0.0
    if arr.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(arr), axis=1)))


def default_tol_eig(A):
    return 1e-9 * (1.0 + inf_norm(A))


def spectral_radius(A, *, with_flag=False):
    """Largest eigenvalue modulus of ``A``.

    If the eigensolver fails, ``inf_norm(A)`` is returned instead. That is
    an upper bound on the spectral radius and is safe wherever the radius
    feeds a monotone increasing bound. With ``with_flag=True`` the return
    value is ``(radius, is_bound)``.
    """
    A = _square(A)
    try:
        rho = float(np.max(np.abs(np.linalg.eigvals(A))))
        is_bound = False
    except np.linalg.LinAlgError:
        logger.warning("eigenvalue solver failed; using the inf-norm bound")
        rho = inf_norm(A)
        is_bound = True
    if with_flag:
        return rho, is_bound
    return rho


def pinv_full_row_rank(G, tol_rank=TOL_RANK):
    """Moore-Penrose inverse of a full-row-rank matrix via the SVD.

    Raises:
        RankDeficient: if the smallest singular value is at most
            ``tol_rank`` times the largest one.
    """
    G = as_matrix(G, "G")
    n, p = G.shape
    if p < n:
        raise RankDeficient(f"{n}x{p} matrix cannot have full row rank")
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= tol_rank * s[0]:
        raise RankDeficient(
            f"matrix is rank deficient (singular values {s[-1]:.3e} / {s[0]:.3e})")
    return (Vt.T / s) @ U.T


def pinv_inf_norm(G, tol_rank=TOL_RANK):
    """``||G^+||_inf`` for a full-row-rank ``G``."""
    return inf_norm(pinv_full_row_rank(G, tol_rank))


def theta(r, p):
    """Tail of the exponential series, ``sum_{j >= p} r**j / j!``.

    Summed directly rather than as ``e**r`` minus a partial sum, so small
    values keep full relative accuracy.
    """
    if r < 0:
        raise ValueError(f"theta needs r >= 0, got {r}")
    if p < 1 or int(p) != p:
        raise ValueError(f"theta needs a positive integer order, got {p}")
    p = int(p)
    if r == 0:
        return 0.0
    term = math.exp(p * math.log(r) - math.lgamma(p + 1))
    total = 0.0
    j = p
    while term > 0.0:
        total += term
        j += 1
        term *= r / j
        if j > r and term < _THETA_REL_STOP * total:
            break
    return total


def taylor_L(A, t, k):
    """Truncated exponential ``sum_{j<k} (tA)^j / j!`` evaluated Horner-style."""
    A = _square(A)
    if k < 1:
        raise ValueError("k must be >= 1")
    n = A.shape[0]
    eye = np.eye(n)
    tA = t * A
    P = eye.copy()
    for j in range(k - 1, 0, -1):
        P = eye + (tA / j) @ P
    return P


def taylor_T(A, t, k):
    """Integral of ``taylor_L`` over [0, t]: ``sum_{j<k} t^(j+1) A^j / (j+1)!``."""
    A = _square(A)
    if k < 1:
        raise ValueError("k must be >= 1")
    n = A.shape[0]
    eye = np.eye(n)
    tA = t * A
    P = eye.copy()
    for j in range(k - 1, 0, -1):
        P = eye + (tA / (j + 1)) @ P
    return t * P


def is_invertible(M, tol_rank=TOL_RANK):
    """Relative singular-value test: ``s_min > tol_rank * s_max``."""
    M = _square(M, "M")
    s = np.linalg.svd(M, compute_uv=False)
    return bool(s[0] > 0.0 and s[-1] > tol_rank * s[0])


def integral_invertible(A, t, tol_eig=None):
    """Whether the integral of exp(sA) over [0, t] is invertible.

    That fails exactly when ``2*pi*z*i/t`` is an eigenvalue of ``A`` for some
    nonzero integer ``z``; eigenvalues within ``tol_eig`` of such a point
    count as hits.
    """
    A = _square(A)
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if tol_eig is None:
        tol_eig = default_tol_eig(A)
    eigs = np.linalg.eigvals(A)
    step = 2.0 * math.pi / t
    z = np.round(eigs.imag / step)
    hits = (z != 0) & (np.abs(eigs - 1j * step * z) <= tol_eig)
    return not bool(np.any(hits))


def invertibility_tmax(A, tol_eig=None):
    """Horizon below which the exponential integral is always invertible.

    Returns ``2*pi / max|Im lam|`` over the nonzero purely imaginary
    eigenvalues ``lam`` of ``A``, or ``math.inf`` if there are none.
    """
    A = _square(A)
    if tol_eig is None:
        tol_eig = default_tol_eig(A)
    eigs = np.linalg.eigvals(A)
    imag_axis = (np.abs(eigs.real) <= tol_eig) & (np.abs(eigs) > tol_eig)
    if not np.any(imag_axis):
        return math.inf
    return 2.0 * math.pi / float(np.max(np.abs(eigs[imag_axis].imag)))
