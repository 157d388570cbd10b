"""Inner approximation of reachable sets of ``x' = Ax + u`` with truncated Taylor maps.

The exponential ``exp(tA)`` and its integral are only ever replaced by
their truncations ``taylor_L`` / ``taylor_T``. Each set is deflated about
its center by a coefficient that absorbs the truncation error, so every
computed zonotope is contained in the exact image.
"""
from __future__ import annotations

import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from underreach.errors import (
    BoundViolated,
    NotInInvertibilityDomain,
    RankDeficient,
    SearchCapExceeded,
)
from underreach.linalg import (
    TOL_RANK,
    as_matrix,
    default_tol_eig,
    inf_norm,
    integral_invertible,
    invertibility_tmax,
    is_invertible,
    pinv_full_row_rank,
    pinv_inf_norm,
    spectral_radius,
    taylor_L,
    taylor_T,
    theta,
)
from underreach.zonotope import Zonotope, linear_map, reduce_sum

K_CAP = 500
REDUCTION_TARGETS = ("lambda", "W")


def _is_zero_set(Z):
    return Z is None or (Z.is_point and not np.any(Z.center))


@dataclass(frozen=True)
class SystemSpec:
    """Problem instance: dynamics matrix, initial set, input set and horizon.

    ``X0`` or ``U`` may be ``None`` (or the origin point) to denote ``{0}``;
    every other set must have full-rank generators.
    """

    A: np.ndarray
    X0: Zonotope | None
    U: Zonotope | None
    T: float

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        object.__setattr__(self, "A", A)
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        n = A.shape[0]
        for name in ("X0", "U"):
            Z = getattr(self, name)
            if _is_zero_set(Z):
                object.__setattr__(self, name, None)
                continue
            if Z.dim != n:
                raise ValueError(f"{name} has dimension {Z.dim}, A has {n}")
            if not Z.is_full_dim():
                raise RankDeficient(f"{name} must be full-dimensional (rank of generators = {n})")
        if self.X0 is None and self.U is None:
            raise ValueError("X0 and U cannot both be {0}")

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class Reduction:
    target_order: float
    apply_to: str = "lambda"

    def __post_init__(self):
        if self.target_order < 1:
            raise ValueError("target_order must be >= 1")
        if self.apply_to not in REDUCTION_TARGETS:
            raise ValueError(f"apply_to must be one of {REDUCTION_TARGETS}")


@dataclass(frozen=True)
class EngineConfig:
    N: int
    eps_h: float
    eps_u: float
    k_cap: int = K_CAP
    reduction: Reduction | None = None
    tol_rank: float = TOL_RANK
    tol_eig: float | None = None
    # set by ``schedule``; enforces tau * ||A|| <= 1
    certified: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        for name in ("eps_h", "eps_u"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.k_cap < 2:
            raise ValueError("k_cap must be >= 2")

    @classmethod
    def schedule(cls, N, **kwargs):
        """Config with the first-order convergent choice of deflation targets."""
        eps_h, eps_u = eps_schedule(N)
        return cls(N=N, eps_h=eps_h, eps_u=eps_u, certified=True, **kwargs)


def eps_schedule(N):
    """``(1 - 1/N**2, 1 - 1/N)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return 1.0 - 1.0 / N**2, 1.0 - 1.0 / N


def k_min(A, t, k_cap=K_CAP):
    """Smallest k with ``theta(t rho, k) * exp(t rho) < 1``; rho is the spectral radius.

    For every k >= k_min the truncation ``taylor_L(A, t, k)`` is invertible.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    r = t * spectral_radius(A)
    scale = math.exp(r)
    for k in range(1, k_cap + 1):
        if theta(r, k) * scale < 1.0:
            return k
    raise SearchCapExceeded(f"k_min search exceeded k_cap={k_cap} (t*rho={r:.3g})", k_cap=k_cap)


@dataclass
class _SetConstants:
    pinv_norm: float
    c_norm: float
    g_norm: float

    @property
    def condition(self):
        return self.pinv_norm * self.g_norm


def _set_constants(Z, tol_rank):
    if Z.gen_count < Z.dim:
        raise RankDeficient(f"zonotope with {Z.gen_count} generators is not full-dimensional")
    return _SetConstants(pinv_inf_norm(Z.generators, tol_rank),
                         inf_norm(Z.center), inf_norm(Z.generators))


def _lambda_from(r, consts, k):
    err = math.exp(r) * theta(r, k)
    return ((1.0 - err * consts.pinv_norm * consts.c_norm)
            / (1.0 + err * consts.pinv_norm * consts.g_norm))


class Propagator:
    """Fixed ``(A, t)`` pair with cached norms, Taylor matrices and k_min.

    ``homogeneous`` and ``input_integral`` return the deflated truncated
    images together with the selected Taylor order and deflation value.
    """

    def __init__(self, A, t, *, k_cap=K_CAP, tol_rank=TOL_RANK, tol_eig=None):
        self.A = as_matrix(A, "A")
        self.t = float(t)
        if self.t < 0:
            raise ValueError("t must be >= 0")
        self.k_cap = k_cap
        self.tol_rank = tol_rank
        self.tol_eig = default_tol_eig(self.A) if tol_eig is None else tol_eig
        self.r = self.t * inf_norm(self.A)
        self.k_min = k_min(self.A, self.t, k_cap)
        self._L = {}
        self._T = {}
        self._T_ok = {}

    def L(self, k):
        if k not in self._L:
            self._L[k] = taylor_L(self.A, self.t, k)
        return self._L[k]

    def T(self, k):
        if k not in self._T:
            self._T[k] = taylor_T(self.A, self.t, k)
        return self._T[k]

    def _T_invertible(self, k):
        if k not in self._T_ok:
            self._T_ok[k] = is_invertible(self.T(k), self.tol_rank)
        return self._T_ok[k]

    def deflation(self, Z, k):
        return _lambda_from(self.r, _set_constants(Z, self.tol_rank), k)

    def _cap_error(self, what, eps, consts):
        return SearchCapExceeded(
            f"{what} search exceeded k_cap={self.k_cap} for eps={eps}; "
            f"set condition number ||G||*||G^+|| = {consts.condition:.3e} "
            "(nearly degenerate set)",
            k_cap=self.k_cap, condition_number=consts.condition)

    def kappa(self, Z, eps, consts=None):
        consts = consts or _set_constants(Z, self.tol_rank)
        for k in range(max(self.k_min, 2), self.k_cap + 1):
            lam = _lambda_from(self.r, consts, k)
            if lam > eps:
                return k, lam
        raise self._cap_error("kappa", eps, consts)

    def eta(self, Z, eps, consts=None):
        consts = consts or _set_constants(Z, self.tol_rank)
        for k in range(1, self.k_cap + 1):
            lam = _lambda_from(self.r, consts, k)
            if lam > eps and self._T_invertible(k):
                return k, lam
        raise self._cap_error("eta", eps, consts)

    def homogeneous(self, Z, eps):
        """Inner approximation of ``exp(tA) Z``; returns ``(set, kappa, lambda)``."""
        k, lam = self.kappa(Z, eps)
        return linear_map(self.L(k), Z.scale_generators(lam)), k, lam

    def input_integral(self, Z, eps):
        """Inner approximation of the set integral of ``exp(sA) Z`` over [0, t]."""
        if self.t <= 0 or not integral_invertible(self.A, self.t, self.tol_eig):
            raise NotInInvertibilityDomain(_domain_message(self.A, self.t, self.tol_eig))
        k, lam = self.eta(Z, eps)
        return linear_map(self.T(k), Z.scale_generators(lam)), k, lam


def _domain_message(A, t, tol_eig):
    tmax = invertibility_tmax(A, tol_eig)
    hint = "" if math.isinf(tmax) else f"; any step below {tmax:.6g} is safe"
    return (f"integral of exp(sA) over [0, {t:.6g}] is singular "
            f"(A has an eigenvalue 2*pi*z*i/t); increase N{hint}")


def deflation_lambda(A, t, Z, k, tol_rank=TOL_RANK):
    """Deflation coefficient for truncation order ``k``; may be negative."""
    r = t * inf_norm(A)
    return _lambda_from(r, _set_constants(Z, tol_rank), k)


def kappa(A, t, Z, eps, k_cap=K_CAP):
    return Propagator(A, t, k_cap=k_cap).kappa(Z, eps)[0]


def eta(A, t, Z, eps, k_cap=K_CAP):
    if t <= 0 or not integral_invertible(A, t):
        raise NotInInvertibilityDomain(_domain_message(as_matrix(A), t, default_tol_eig(A)))
    return Propagator(A, t, k_cap=k_cap).eta(Z, eps)[0]


def op_H(A, t, Z, eps, k_cap=K_CAP):
    return Propagator(A, t, k_cap=k_cap).homogeneous(Z, eps)[0]


def op_I(A, t, Z, eps, k_cap=K_CAP):
    return Propagator(A, t, k_cap=k_cap).input_integral(Z, eps)[0]


def alpha_max(P, P_tilde, Z, tol_rank=TOL_RANK):
    """Largest certified deflation for replacing ``P`` by ``P_tilde`` on ``Z``.

    The matrix lower bound of ``P G`` is replaced by ``1 / ||(P G)^+||``.

    Raises:
        BoundViolated: if the center error already exceeds that lower bound.
    """
    P = as_matrix(P, "P")
    P_tilde = as_matrix(P_tilde, "P_tilde")
    D = P_tilde - P
    low = 1.0 / inf_norm(pinv_full_row_rank(P @ Z.generators, tol_rank))
    dc = inf_norm(D @ Z.center)
    if dc > low:
        raise BoundViolated(f"center error {dc:.3e} exceeds lower bound {low:.3e}")
    return (low - dc) / (low + inf_norm(D @ Z.generators))


def image_under(P, P_tilde, Z, alpha=None, tol_rank=TOL_RANK):
    """``P_tilde (c + alpha G B)``, an inner approximation of ``P Z``.

    ``alpha`` defaults to ``alpha_max``; larger values are rejected.
    """
    amax = alpha_max(P, P_tilde, Z, tol_rank)
    if alpha is None:
        alpha = amax
    if alpha < 0 or alpha > amax * (1.0 + 1e-12):
        raise BoundViolated(f"alpha={alpha} outside [0, {amax}]")
    return linear_map(P_tilde, Z.scale_generators(alpha))


@dataclass
class StepDiagnostics:
    i: int
    kappa_S: int | None = None
    kappa_V: int | None = None
    eta: int | None = None
    lambdas: list = field(default_factory=list)
    wall_ms: float = 0.0

    @property
    def kappa(self):
        ks = [k for k in (self.kappa_S, self.kappa_V) if k is not None]
        return max(ks) if ks else None

    @property
    def lambda_min(self):
        return min(self.lambdas) if self.lambdas else None


class _PartialSums(Sequence):
    """``W_i = V_0 + ... + V_{i-1}`` built on access, never stored."""

    def __init__(self, V, n):
        self._V = V
        self._n = n
        centers = np.zeros((len(V), n))
        for i in range(1, len(V)):
            centers[i] = centers[i - 1] + V[i - 1].center
        self._centers = centers

    def __len__(self):
        return len(self._V)

    def gen_count(self, i):
        return sum(v.gen_count for v in self._V[:i])

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        i = range(len(self))[i]
        if i == 0:
            return Zonotope.origin(self._n)
        G = np.hstack([v.generators for v in self._V[:i]])
        return Zonotope(self._centers[i], G)


class _SumSequence(Sequence):
    def __init__(self, left, right):
        self._left = left
        self._right = right

    def __len__(self):
        return len(self._left)

    def gen_count(self, i):
        return self._left[i].gen_count + self._right.gen_count(i)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return self._left[i] + self._right[i]


@dataclass
class ReachResult:
    """Output of ``reach_under``.

    Without reduction, ``W_seq`` and ``Lambda_seq`` are lazy sequences that
    build each Minkowski sum when indexed; storing all of them explicitly
    costs O(N**2 n**2) memory.
    """

    tau: float
    N: int
    S_seq: list
    V_seq: list
    W_seq: Sequence
    Lambda_seq: Sequence
    diagnostics: list
    reduced: bool = False
    wall_s: float = 0.0

    def gen_count(self, i):
        seq = self.Lambda_seq
        if hasattr(seq, "gen_count"):
            return seq.gen_count(i)
        return seq[i].gen_count

    @property
    def lambda_values(self):
        return [lam for d in self.diagnostics for lam in d.lambdas]


def reach_under(sys, cfg):
    """Inner approximations ``Lambda_i`` of the reachable sets at ``i * T / N``.

    Raises:
        NotInInvertibilityDomain: the step ``T/N`` makes the exponential
            integral singular.
        SearchCapExceeded: a Taylor-order search failed.
    """
    start = time.perf_counter()
    A, N = sys.A, cfg.N
    n = sys.n
    tau = sys.T / N
    if cfg.certified and tau * inf_norm(A) > 1.0:
        raise ValueError(
            f"convergence schedule needs tau*||A|| <= 1, got {tau * inf_norm(A):.4g}; increase N")
    tol_eig = default_tol_eig(A) if cfg.tol_eig is None else cfg.tol_eig
    if sys.U is not None and not integral_invertible(A, tau, tol_eig):
        raise NotInInvertibilityDomain(_domain_message(A, tau, tol_eig))
    prop = Propagator(A, tau, k_cap=cfg.k_cap, tol_rank=cfg.tol_rank, tol_eig=tol_eig)
    origin = Zonotope.origin(n)

    S_seq, V_seq, diags = [], [], []
    S = sys.X0
    V = None
    for i in range(N + 1):
        t0 = time.perf_counter()
        d = StepDiagnostics(i)
        if sys.X0 is not None and i > 0:
            S, d.kappa_S, lam = prop.homogeneous(S, cfg.eps_h)
            d.lambdas.append(lam)
        if sys.U is not None:
            if i == 0:
                V, d.eta, lam = prop.input_integral(sys.U, cfg.eps_u)
            else:
                V, d.kappa_V, lam = prop.homogeneous(V, cfg.eps_h)
            d.lambdas.append(lam)
        S_seq.append(origin if S is None else S)
        V_seq.append(origin if V is None else V)
        d.wall_ms = 1e3 * (time.perf_counter() - t0)
        diags.append(d)

    red = cfg.reduction
    if red is None:
        W_seq = _PartialSums(V_seq, n)
        L_seq = _SumSequence(S_seq, W_seq)
    elif red.apply_to == "W":
        W_seq = [origin]
        for i in range(1, N + 1):
            W_seq.append(reduce_sum(W_seq[-1] + V_seq[i - 1], red.target_order))
        L_seq = [S_seq[i] + W_seq[i] for i in range(N + 1)]
    else:
        W_seq = _PartialSums(V_seq, n)
        L_seq = [reduce_sum(S_seq[i] + W_seq[i], red.target_order) for i in range(N + 1)]

    return ReachResult(tau=tau, N=N, S_seq=S_seq, V_seq=V_seq, W_seq=W_seq,
                       Lambda_seq=L_seq, diagnostics=diags, reduced=red is not None,
                       wall_s=time.perf_counter() - start)


def backward_reach_under(A, X_target, U, T, cfg):
    """Inner approximation of the set of states steerable into ``X_target`` at time ``T``.

    Composes the forward input set ``W_N`` (dynamics ``A``) with ``N``
    homogeneous steps of length ``T/N`` under ``-A`` applied to both
    ``X_target`` and ``-W_N``.
    """
    A = as_matrix(A, "A")
    N = cfg.N
    tau = T / N
    tol_eig = default_tol_eig(A) if cfg.tol_eig is None else cfg.tol_eig
    if X_target is None or not X_target.is_full_dim(cfg.tol_rank):
        raise RankDeficient("X_target must be full-dimensional")
    back = Propagator(-A, tau, k_cap=cfg.k_cap, tol_rank=cfg.tol_rank, tol_eig=tol_eig)

    def pull_back(Z):
        for _ in range(N):
            Z = back.homogeneous(Z, cfg.eps_h)[0]
        return Z

    result = pull_back(X_target)
    if not _is_zero_set(U):
        fwd = reach_under(SystemSpec(A, None, U, T), cfg)
        result = result + pull_back(-fwd.W_seq[N])
    return result
