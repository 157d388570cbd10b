"""Zonotopes ``Z<c, G> = c + G * [-1, 1]^p`` and their exact set arithmetic."""
import itertools
import math

import numpy as np

from underreach.errors import DimensionMismatch, IndexOutOfRange, TooLarge
from underreach.linalg import TOL_RANK

VOLUME_MAX_DIM = 6
VOLUME_MAX_SUBSETS = 10**6


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class Zonotope:
    """Immutable zonotope with center ``c`` (n,) and generator matrix ``G`` (n, p).

    All-zero generator columns are dropped on construction, so ``gen_count``
    only counts generators that contribute to the set.
    """

    __slots__ = ("_center", "_generators", "_full_dim")
    # make ``ndarray @ Zonotope`` defer to ``__rmatmul__``
    __array_ufunc__ = None

    def __init__(self, center, generators=None):
        c = np.asarray(center, dtype=float).reshape(-1)
        n = c.shape[0]
        if n < 1:
            raise ValueError("zonotope dimension must be >= 1")
        if generators is None:
            G = np.zeros((n, 0))
        else:
            G = np.asarray(generators, dtype=float)
            if G.ndim == 1 and G.size == 0:
                G = np.zeros((n, 0))
            if G.ndim != 2 or G.shape[0] != n:
                raise DimensionMismatch(
                    f"generator matrix shape {G.shape} does not match center dimension {n}")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(G))):
            raise ValueError("zonotope entries must be finite")
        if G.shape[1]:
            G = G[:, np.any(G != 0.0, axis=0)]
        self._center = _frozen(c)
        self._generators = _frozen(G)
        self._full_dim = None

    @classmethod
    def point(cls, x):
        return cls(x)

    @classmethod
    def origin(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def box(cls, lower, upper):
        """Axis-aligned box ``[lower, upper]``."""
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if np.any(hi < lo):
            raise ValueError("box needs lower <= upper")
        return cls((lo + hi) / 2.0, np.diag((hi - lo) / 2.0))

    @classmethod
    def unit_box(cls, n):
        return cls(np.zeros(n), np.eye(n))

    @property
    def center(self):
        return self._center

    @property
    def generators(self):
        return self._generators

    @property
    def dim(self):
        return self._center.shape[0]

    @property
    def gen_count(self):
        return self._generators.shape[1]

    @property
    def order(self):
        return self.gen_count / self.dim

    @property
    def is_point(self):
        return self.gen_count == 0

    def is_full_dim(self, tol_rank=TOL_RANK):
        """Rank of the generator matrix equals the dimension (cached)."""
        if self._full_dim is None or self._full_dim[0] != tol_rank:
            G = self._generators
            if G.shape[1] < self.dim:
                ok = False
            else:
                s = np.linalg.svd(G, compute_uv=False)
                ok = bool(s[0] > 0.0 and s[-1] > tol_rank * s[0])
            self._full_dim = (tol_rank, ok)
        return self._full_dim[1]

    def __repr__(self):
        return f"Zonotope(dim={self.dim}, gen_count={self.gen_count})"

    def __eq__(self, other):
        if not isinstance(other, Zonotope):
            return NotImplemented
        return (np.array_equal(self._center, other._center)
                and np.array_equal(self._generators, other._generators))

    __hash__ = None

    def __add__(self, other):
        if isinstance(other, Zonotope):
            return minkowski_sum(self, other)
        d = np.asarray(other, dtype=float)
        if d.shape != self._center.shape:
            raise DimensionMismatch(f"cannot translate by shape {d.shape}")
        return Zonotope(self._center + d, self._generators)

    __radd__ = __add__

    def __neg__(self):
        return Zonotope(-self._center, -self._generators)

    def __rmatmul__(self, L):
        return linear_map(L, self)

    def scale_generators(self, alpha):
        """``Z<c, alpha * G>``: shrink or grow about the center."""
        return Zonotope(self._center, alpha * self._generators)

    def to_dict(self):
        return {"center": self._center.tolist(), "generators": self._generators.tolist()}

    @classmethod
    def from_dict(cls, data):
        center = data["center"]
        gens = data.get("generators")
        n = len(center)
        if gens is None or len(gens) == 0:
            return cls(center)
        G = np.asarray(gens, dtype=float)
        if G.ndim == 1:
            G = G.reshape(n, -1) if G.size else np.zeros((n, 0))
        return cls(center, G)


def linear_map(L, Z):
    """Image ``L Z = Z<Lc, LG>``."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[1] != Z.dim:
        raise DimensionMismatch(f"cannot map a {Z.dim}-D zonotope with a {L.shape} matrix")
    return Zonotope(L @ Z.center, L @ Z.generators)


def minkowski_sum(Z1, Z2):
    if Z1.dim != Z2.dim:
        raise DimensionMismatch(f"dimensions differ: {Z1.dim} vs {Z2.dim}")
    return Zonotope(Z1.center + Z2.center, np.hstack([Z1.generators, Z2.generators]))


def set_norm(Z):
    """``sup_{x in Z} ||x||_inf``, exact."""
    return float(np.max(np.abs(Z.center) + np.sum(np.abs(Z.generators), axis=1)))


def support(Z, d):
    """Support function ``d^T c + sum_j |d^T g_j|``.

    ``d`` may be a single direction (n,) or a stack of directions (m, n).
    """
    d = np.asarray(d, dtype=float)
    if d.shape[-1] != Z.dim:
        raise DimensionMismatch(f"direction length {d.shape[-1]} != {Z.dim}")
    val = d @ Z.center + np.sum(np.abs(d @ Z.generators), axis=-1)
    if np.ndim(val) == 0:
        return float(val)
    return val


def reduce_sum(Z, target_order):
    """Order reduction by merging generators into their sum.

    Keeps the ``floor(target_order * n) - 1`` generators of largest
    inf-norm and replaces the rest by their vector sum, which is an inner
    approximation. Ties keep the lower column index.
    """
    n = Z.dim
    keep_total = math.floor(target_order * n)
    if keep_total < 1:
        raise ValueError("target_order * n must be >= 1")
    if Z.gen_count <= target_order * n:
        return Z
    G = Z.generators
    norms = np.max(np.abs(G), axis=0)
    idx = np.argsort(-norms, kind="stable")
    kept = np.sort(idx[:keep_total - 1])
    merged = np.sort(idx[keep_total - 1:])
    Gr = np.hstack([G[:, kept], G[:, merged].sum(axis=1, keepdims=True)])
    return Zonotope(Z.center, Gr)


def volume(Z):
    """Exact volume ``2^n sum_{|S|=n} |det G_S|``.

    Raises:
        TooLarge: for n > 6 or more than 10**6 generator subsets.
    """
    n, p = Z.dim, Z.gen_count
    if n > VOLUME_MAX_DIM or math.comb(p, n) > VOLUME_MAX_SUBSETS:
        raise TooLarge(f"volume of a {n}-D zonotope with {p} generators is not supported")
    if p < n:
        return 0.0
    G = Z.generators
    total = 0.0
    combos = itertools.combinations(range(p), n)
    while True:
        chunk = np.array(list(itertools.islice(combos, 50_000)), dtype=int)
        if chunk.size == 0:
            break
        blocks = np.transpose(G[:, chunk], (1, 0, 2))
        total += float(np.sum(np.abs(np.linalg.det(blocks))))
    return 2.0**n * total


def project(Z, dims):
    """Rows ``dims`` (0-based) of the zonotope."""
    dims = list(dims)
    for i in dims:
        if not 0 <= i < Z.dim:
            raise IndexOutOfRange(f"index {i} out of range for a {Z.dim}-D zonotope")
    return Zonotope(Z.center[dims], Z.generators[dims, :])


def vertices_2d(Z):
    """Counter-clockwise polygon vertices of a 2-D zonotope, shape (k, 2)."""
    if Z.dim != 2:
        raise DimensionMismatch("vertices_2d needs a 2-D zonotope")
    G = Z.generators.copy()
    if G.shape[1] == 0:
        return Z.center.reshape(1, 2).copy()
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    G[:, flip] *= -1.0
    ang = np.arctan2(G[1], G[0])
    order = np.argsort(ang, kind="stable")
    G, ang = G[:, order], ang[order]
    # merge parallel generators so no collinear vertex is emitted
    merged = [G[:, 0].copy()]
    last = ang[0]
    for a, g in zip(ang[1:], G.T[1:]):
        if abs(a - last) <= 1e-12:
            merged[-1] += g
        else:
            merged.append(g.copy())
            last = a
    M = np.array(merged)
    start = Z.center - M.sum(axis=0)
    steps = np.vstack([2.0 * M, -2.0 * M])
    pts = start + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)[:-1]])
    return pts


def contains_point(Z, x, tol=1e-9):
    """Membership test via a small LP minimising ``||xi||_inf`` s.t. ``G xi = x - c``."""
    from scipy.optimize import linprog

    x = np.asarray(x, dtype=float)
    if x.shape != Z.center.shape:
        raise DimensionMismatch(f"point shape {x.shape} != ({Z.dim},)")
    r = x - Z.center
    p = Z.gen_count
    if p == 0:
        return bool(np.max(np.abs(r)) <= tol)
    # variables: xi (p), s
    cost = np.zeros(p + 1)
    cost[-1] = 1.0
    eye = np.eye(p)
    A_ub = np.block([[eye, -np.ones((p, 1))], [-eye, -np.ones((p, 1))]])
    b_ub = np.zeros(2 * p)
    A_eq = np.hstack([Z.generators, np.zeros((Z.dim, 1))])
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=r,
                  bounds=[(None, None)] * p + [(0, None)], method="highs")
    if res.status != 0:
        return False
    return bool(res.x[-1] <= 1.0 + tol)
