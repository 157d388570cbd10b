"""Ground truth used by the tests and by ``converge``: accurate exponentials,
support functions of exact reachable sets, witness trajectories, and gap
estimates.

Nothing in the engine imports this module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from underreach.linalg import as_matrix, inf_norm, taylor_L, theta
from underreach.zonotope import support

EXPM_TARGET = 1e-15
QUAD_CELLS = 2048


def accurate_expm(A, t=1.0):
    """``exp(tA)`` by scaling and squaring around a truncated Taylor series.

    The scaled argument has inf-norm at most 1/4 and the series is cut where
    the remainder bound drops below 1e-15.
    """
    A = as_matrix(A, "A")
    r = abs(t) * inf_norm(A)
    s = 0 if r <= 0.25 else math.ceil(math.log2(r / 0.25))
    h = t / 2**s
    rs = abs(h) * inf_norm(A)
    k = 1
    while theta(rs, k) * math.exp(rs) > EXPM_TARGET:
        k += 1
    E = taylor_L(A, h, k)
    for _ in range(s):
        E = E @ E
    return E


def exp_integral(A, t):
    """Integral of ``exp(sA)`` over ``[0, t]`` via the augmented block exponential."""
    A = as_matrix(A, "A")
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = A
    M[:n, n:] = np.eye(n)
    return accurate_expm(M, t)[:n, n:]


@dataclass(frozen=True)
class DirectionSample:
    """Directions on the 1-norm unit sphere (the dual of the max norm)."""

    directions: np.ndarray
    seed: int

    @classmethod
    def generate(cls, n, count=200, seed=0, axes=True):
        rng = np.random.default_rng(seed)
        mags = rng.exponential(size=(count, n))
        signs = rng.choice([-1.0, 1.0], size=(count, n))
        D = signs * mags
        D /= np.sum(np.abs(D), axis=1, keepdims=True)
        if axes:
            eye = np.eye(n)
            D = np.vstack([eye, -eye, D])
        return cls(D, seed)

    def __len__(self):
        return len(self.directions)


def _herm_antideriv(x, f0, d0, f1, d1):
    x2, x3, x4 = x * x, x**3, x**4
    return (f0 * (x4 / 2 - x3 + x) + d0 * (x4 / 4 - 2 * x3 / 3 + x2 / 2)
            + f1 * (-x4 / 2 + x3) + d1 * (x4 / 4 - x3 / 3))


def _herm_eval(x, f0, d0, f1, d1):
    x2, x3 = x * x, x**3
    return (f0 * (2 * x3 - 3 * x2 + 1) + d0 * (x3 - 2 * x2 + x)
            + f1 * (-2 * x3 + 3 * x2) + d1 * (x3 - x2))


def _abs_hermite_integral(f0, df0, f1, df1, h):
    """Integral of ``|p|`` over a cell of length ``h``; ``p`` is the cubic Hermite
    interpolant. Sign changes between the endpoints are located by bisection."""
    d0, d1 = h * df0, h * df1
    whole = _herm_antideriv(1.0, f0, d0, f1, d1)
    out = np.abs(whole)
    cross = f0 * f1 < 0
    if np.any(cross):
        a0, b0, a1, b1 = f0[cross], d0[cross], f1[cross], d1[cross]
        lo = np.zeros_like(a0)
        hi = np.ones_like(a0)
        s_lo = np.sign(a0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            same = np.sign(_herm_eval(mid, a0, b0, a1, b1)) == s_lo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        root = 0.5 * (lo + hi)
        left = _herm_antideriv(root, a0, b0, a1, b1)
        out[cross] = np.abs(left) + np.abs(whole[cross] - left)
    return h * out


def _grid(breaks, cells_total):
    """Uniform Simpson grid on each sub-interval of ``breaks``.

    Returns the node times, the node index of each break, and per-cell
    half-width.
    """
    span = breaks[-1] - breaks[0]
    nodes, marks, halfw = [breaks[0]], [0], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        cells = max(2, math.ceil(cells_total * (b - a) / span))
        pts = np.linspace(a, b, 2 * cells + 1)
        nodes.extend(pts[1:])
        marks.append(len(nodes) - 1)
        halfw.extend([(b - a) / (2 * cells)] * cells)
    return np.array(nodes), marks, np.array(halfw)


def _grid_exponentials(A, nodes):
    n = A.shape[0]
    E = np.empty((len(nodes), n, n))
    E[0] = accurate_expm(A, nodes[0])
    step_cache = {}
    for j in range(1, len(nodes)):
        h = nodes[j] - nodes[j - 1]
        key = round(h, 15)
        if key not in step_cache:
            step_cache[key] = accurate_expm(A, h)
        E[j] = step_cache[key] @ E[j - 1]
    return E


def reach_support_profile(sys, times, dirs, m=QUAD_CELLS):
    """Support of the exact reachable set at each time in ``times`` (ascending).

    The input part is the integral over s of ``h_U(exp(sA)^T d)``. Its
    integrand is smooth except where some ``d^T exp(sA) g_j`` crosses zero,
    so composite Simpson is used on smooth cells and a cubic Hermite fit
    with the crossing located explicitly on the others.

    Returns an array of shape (len(times), len(dirs)).
    """
    A = sys.A
    D = np.atleast_2d(np.asarray(getattr(dirs, "directions", dirs), dtype=float))
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times[:-1], times[1:])) or times[0] < 0:
        raise ValueError("times must be non-negative and ascending")
    breaks = sorted(set([0.0] + times))
    if len(breaks) == 1:
        breaks.append(1e-300)
    nodes, marks, halfw = _grid(np.array(breaks), m)
    E = _grid_exponentials(A, nodes)
    Wd = np.einsum("ki,pij->kpj", D, E)  # Wd[k, p] = exp(s_p A)^T d_k

    cum = np.zeros((len(D), len(nodes)))
    if sys.U is not None:
        c, G = sys.U.center, sys.U.generators
        F = Wd @ G
        dF = Wd @ (A @ G)
        f = Wd @ c + 0.0
        f0, fm, f1 = F[:, 0:-1:2], F[:, 1::2], F[:, 2::2]
        h = halfw[None, :, None]
        simpson = (h / 3.0) * (np.abs(f0) + 4 * np.abs(fm) + np.abs(f1))
        kink = (f0 * fm < 0) | (fm * f1 < 0)
        if np.any(kink):
            hk = np.broadcast_to(h, F[:, 0:-1:2].shape)[kink]
            g0, gm, g1 = f0[kink], fm[kink], f1[kink]
            e0, em, e1 = dF[:, 0:-1:2][kink], dF[:, 1::2][kink], dF[:, 2::2][kink]
            simpson[kink] = (_abs_hermite_integral(g0, e0, gm, em, hk)
                             + _abs_hermite_integral(gm, em, g1, e1, hk))
        cell = simpson.sum(axis=2)
        cell += (halfw[None, :] / 3.0) * (f[:, 0:-1:2] + 4 * f[:, 1::2] + f[:, 2::2])
        cum[:, 2::2] = np.cumsum(cell, axis=1)
        # odd nodes are never break points
    out = np.empty((len(times), len(D)))
    for ti, t in enumerate(times):
        p = marks[breaks.index(t)] if t in breaks else 0
        val = cum[:, p].copy()
        if sys.X0 is not None:
            w = Wd[:, p, :]
            val += w @ sys.X0.center + np.sum(np.abs(w @ sys.X0.generators), axis=1)
        out[ti] = val
    return out


def reach_support_oracle(sys, t, d, m=QUAD_CELLS, return_slack=False):
    """Support of the exact reachable set at time ``t`` along ``d`` (or a stack).

    With ``return_slack`` also returns the change observed when the
    quadrature is run with half as many cells.
    """
    if m < 64:
        raise ValueError("m must be >= 64")
    d = np.asarray(d, dtype=float)
    single = d.ndim == 1
    val = reach_support_profile(sys, [t], np.atleast_2d(d), m)[0]
    if return_slack:
        coarse = reach_support_profile(sys, [t], np.atleast_2d(d), m // 2)[0]
        slack = np.abs(val - coarse)
        return (float(val[0]), float(slack[0])) if single else (val, slack)
    return float(val[0]) if single else val


def closed_form_membership_2d(point, tol=0.0):
    """Membership in ``{(x, y): x^2/2 <= y <= x - x^2/2 + 1, 0 <= x <= 1}``,
    the exact reachable set of the perturbed double integrator at T = 1."""
    x, y = float(point[0]), float(point[1])
    return (-tol <= x <= 1.0 + tol
            and x * x / 2.0 - tol <= y <= x - x * x / 2.0 + 1.0 + tol)


def _sample_in(Z, rng, count, extreme_prob=0.5):
    p = Z.gen_count
    xi = rng.uniform(-1.0, 1.0, size=(count, p))
    extreme = rng.random(count) < extreme_prob
    xi[extreme] = np.sign(xi[extreme])
    return Z.center + xi @ Z.generators.T


def inner_witness_points(sys, t, samples, seed=0, pieces=64):
    """Endpoints at time ``t`` of random admissible trajectories.

    Initial states are drawn from X0 and inputs are piecewise constant on
    ``pieces`` equal intervals with values in U; each piece is propagated
    exactly.
    """
    rng = np.random.default_rng(seed)
    n = sys.n
    X = np.zeros((samples, n)) if sys.X0 is None else _sample_in(sys.X0, rng, samples)
    if t == 0:
        return X
    h = t / pieces
    Eh = accurate_expm(sys.A, h)
    Ih = exp_integral(sys.A, h)
    for _ in range(pieces):
        X = X @ Eh.T
        if sys.U is not None:
            X += _sample_in(sys.U, rng, samples) @ Ih.T
    return X


def hausdorff_gap_estimate(Z, sys, t, dirs, m=QUAD_CELLS):
    """Largest support deficit of ``Z`` against the exact set at ``t``.

    For ``Z`` inside the reachable set and 1-norm normalised directions this
    is a lower bound on the Hausdorff distance in the max norm.
    """
    D = np.asarray(getattr(dirs, "directions", dirs), dtype=float)
    exact = reach_support_profile(sys, [t], D, m)[0]
    return max(0.0, float(np.max(exact - support(Z, D))))


def image_support(A, t, Z, D):
    """Support of ``exp(tA) Z`` along the rows of ``D``."""
    E = accurate_expm(A, t)
    return support(Z, np.asarray(D) @ E)


def backward_support_oracle(A, X_target, U, T, D, m=QUAD_CELLS):
    """Support of ``exp(-TA) X_target + exp(-TA)(-R_u(T))`` along the rows of ``D``."""
    from underreach.engine import SystemSpec

    A = as_matrix(A, "A")
    D = np.atleast_2d(np.asarray(D, dtype=float))
    Wd = D @ accurate_expm(-A, T)
    val = support(X_target, Wd)
    if U is not None:
        sys = SystemSpec(A, None, U, T)
        val = val + reach_support_profile(sys, [T], -Wd, m)[0]
    return val


def shooting_feasible(A, U, X_target, T, x0, pieces=128):
    """Whether some piecewise-constant input with values in U steers ``x0``
    into ``X_target`` at time ``T``; decided by an LP feasibility problem."""
    from scipy.optimize import linprog

    A = as_matrix(A, "A")
    h = T / pieces
    Eh = accurate_expm(A, h)
    Ih = exp_integral(A, h)
    # maps[l] = exp((T - (l+1) h) A) Ih
    maps = [Ih]
    for _ in range(pieces - 1):
        maps.append(Eh @ maps[-1])
    maps.reverse()
    free = accurate_expm(A, T) @ np.asarray(x0, dtype=float)
    blocks, rhs = [], X_target.center - free
    if U is not None:
        for M in maps:
            blocks.append(M @ U.generators)
            rhs = rhs - M @ U.center
    blocks.append(-X_target.generators)
    A_eq = np.hstack(blocks)
    res = linprog(np.zeros(A_eq.shape[1]), A_eq=A_eq, b_eq=rhs,
                  bounds=[(-1.0, 1.0)] * A_eq.shape[1], method="highs")
    return res.status == 0
