"""Geometric primitives for the randomized sphere separator.

Stereographic convention: ``project(q) = (2q, |q|^2 - 1) / (|q|^2 + 1)``,
which sends the origin to the south pole and leaves the north pole
``(0, ..., 0, 1)`` as the image of infinity.

A hyperplane section ``{x in S^d : w.x = e}`` of the unit sphere is the
common currency of this module: great circles are sections with ``e = 0``,
and under the inverse projection a section becomes the quadric
``(w_D - e)|q|^2 + 2 w'.q - (w_D + e) = 0`` in R^d, i.e. a sphere or, when
the section passes through the north pole, a hyperplane.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from . import kernels

NORTH_TOL = 1e-12
PLANE_TOL = 1e-9


class PointAtInfinityError(ValueError):
    """Raised when the north pole is mapped back to R^d."""


class CenterpointError(RuntimeError):
    """Raised when no centerpoint LP is feasible after the allowed retries."""


@dataclass(frozen=True)
class EmbeddedSphere:
    center: np.ndarray
    radius: float
    tensor_id: int

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("sphere center must be finite")
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)


@dataclass(frozen=True)
class SeparatingSphere:
    """Either a sphere (``center``, ``radius``) or a hyperplane (``normal``, ``offset``).

    For the hyperplane kind, the half-space ``normal.x > offset`` plays the
    role of the exterior.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float | None = None
    normal: np.ndarray | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.kind == "sphere":
            if not (self.radius is not None and self.radius > 0):
                raise ValueError("separating sphere needs a positive radius")
        elif self.kind == "hyperplane":
            n = np.asarray(self.normal, dtype=float)
            if abs(np.linalg.norm(n) - 1.0) > 1e-12:
                raise ValueError("hyperplane normal must have unit norm")
        else:
            raise ValueError(f"unknown separator kind {self.kind!r}")

    @classmethod
    def sphere(cls, center, radius):
        return cls("sphere", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def hyperplane(cls, normal, offset):
        n = np.asarray(normal, dtype=float)
        nrm = np.linalg.norm(n)
        return cls("hyperplane", normal=n / nrm, offset=float(offset) / nrm)

    def signed_distance(self, x):
        """Positive outside (exterior side), negative inside."""
        x = np.asarray(x, dtype=float)
        if self.kind == "sphere":
            return np.linalg.norm(x - self.center, axis=-1) - self.radius
        return x @ self.normal - self.offset

    def to_dict(self):
        if self.kind == "sphere":
            return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}
        return {"kind": "hyperplane", "normal": self.normal.tolist(), "offset": self.offset}


@dataclass(frozen=True)
class GreatCircle:
    normal: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("great-circle normal must have unit norm")
        object.__setattr__(self, "normal", n)


def stereo_project(p):
    """Map points of R^d (last axis) onto the unit sphere S^d in R^{d+1}."""
    p = np.asarray(p, dtype=float)
    sq = np.sum(p * p, axis=-1, keepdims=True)
    return np.concatenate([2.0 * p, sq - 1.0], axis=-1) / (sq + 1.0)


def stereo_unproject(s):
    s = np.asarray(s, dtype=float)
    last = s[..., -1:]
    if np.any(last >= 1.0 - NORTH_TOL):
        raise PointAtInfinityError("north pole has no preimage in R^d")
    return s[..., :-1] / (1.0 - last)


def sample_size(delta: float, d: int) -> int:
    """Random-subset size used for the centerpoint LP."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return max(64, math.ceil(20 * (d + 2) / delta))


def _hyperplanes_through(points, subsets):
    """Unit normals and offsets of the hyperplanes through each row-subset of points.

    The normal is the generalized cross product of the edge vectors, one
    cofactor determinant per coordinate. Returns ``(normals, offsets, ok)``;
    ``ok`` is False for degenerate (affinely dependent) subsets.
    """
    D = points.shape[1]
    P = points[subsets]  # (h, D, D)
    V = P[:, 1:, :] - P[:, :1, :]  # (h, D-1, D)
    if D == 2:
        normals = np.stack([-V[:, 0, 1], V[:, 0, 0]], axis=1)
    elif D == 3:
        normals = np.cross(V[:, 0], V[:, 1])
    else:
        cols = np.arange(D)
        normals = np.stack([(-1) ** j * np.linalg.det(V[:, :, cols != j]) for j in range(D)], axis=1)
    nrm = np.linalg.norm(normals, axis=1)
    scale = np.prod(np.linalg.norm(V, axis=2), axis=1)
    ok = nrm > 1e-9 * np.maximum(scale, 1e-300)
    nrm = np.where(ok, nrm, 1.0)
    normals = normals / nrm[:, None]
    return normals, np.einsum("ij,ij->i", normals, P[:, 0, :]), ok


def _subset_centerpoint(S, rng, max_hyperplanes):
    """Deepest point of the LP region cut out by light half-spaces of ``S``."""
    a, D = S.shape
    spread = np.ptp(S, axis=0).max()
    if spread < 1e-12:
        return S[0].copy(), True
    # points spanning a lower-dimensional flat: solve inside the flat
    mu = S.mean(axis=0)
    _, sv, vt = np.linalg.svd(S - mu, full_matrices=False)
    rank = int(np.count_nonzero(sv > 1e-9 * sv[0]))
    if rank < D:
        basis = vt[:rank]
        Y = (S - mu) @ basis.T
        if rank == 1:
            return mu + np.median(Y[:, 0]) * basis[0], True
        y, ok = _subset_centerpoint(Y, rng, max_hyperplanes)
        return (mu + y @ basis if ok else None), ok
    # hyperplanes through distinct points only; depth counts keep multiplicities
    U = np.unique(S, axis=0)
    u = len(U)
    if u < D:
        return S.mean(axis=0), True
    n_all = math.comb(u, D)
    if n_all <= max_hyperplanes:
        subsets = np.array(list(itertools.combinations(range(u), D)), dtype=np.intp)
    else:
        subsets = rng.integers(u, size=(max_hyperplanes, D))
        srt = np.sort(subsets, axis=1)
        subsets = subsets[np.all(srt[:, 1:] != srt[:, :-1], axis=1)]
    normals, offsets, ok = _hyperplanes_through(U, subsets)
    normals, offsets = normals[ok], offsets[ok]
    if len(normals) == 0:
        return S.mean(axis=0), True
    n_pos, n_neg = kernels.halfspace_counts(S, normals, offsets, 1e-12)
    need = a / (D + 1)
    # c must stay out of every open half-space holding fewer than a/(D+1) points
    rows = []
    rhs = []
    light_pos = n_pos < need
    light_neg = n_neg < need
    if light_pos.any():
        rows.append(normals[light_pos])
        rhs.append(offsets[light_pos])
    if light_neg.any():
        rows.append(-normals[light_neg])
        rhs.append(-offsets[light_neg])
    if not rows:
        return S.mean(axis=0), True
    G = np.concatenate(rows)
    h = np.concatenate(rhs)
    # drop repeated constraints (up to rounding)
    _, keep = np.unique(np.round(np.column_stack([G, h]), 9), axis=0, return_index=True)
    keep.sort()
    G, h = G[keep], h[keep]
    # maximize margin t:  g.x + t <= h
    A_ub = np.concatenate([G, np.ones((len(G), 1))], axis=1)
    c = np.zeros(D + 1)
    c[-1] = -1.0
    bounds = [(-1.0, 1.0)] * D + [(None, 2.0)]
    res = linprog(c, A_ub=A_ub, b_ub=h, bounds=bounds, method="highs")
    if res.status != 0 or res.x[-1] < -1e-9:
        return None, False
    return res.x[:D], True


def centerpoint(points, delta: float, rng, *, size: int | None = None,
                max_attempts: int = 16, max_hyperplanes: int = 6000):
    """Approximate centerpoint of ``points`` (rows, in R^D) from a random subset.

    A subset of ``size`` points (default :func:`sample_size`) is drawn and an
    exact centerpoint of the subset is found by linear programming over the
    half-spaces bounded by hyperplanes through D subset points. When the
    number of such hyperplanes exceeds ``max_hyperplanes`` a random sample of
    them is used instead of all of them.
    """
    P = np.asarray(points, dtype=float)
    m, D = P.shape
    if m < D + 1:
        raise ValueError(f"need at least {D + 1} points in R^{D}, got {m}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    a = size if size is not None else sample_size(delta, D - 1)
    for _ in range(max_attempts):
        S = P if m <= a else P[rng.choice(m, size=a, replace=False)]
        c, ok = _subset_centerpoint(S, rng, max_hyperplanes)
        if ok:
            return c
    raise CenterpointError(f"centerpoint LP infeasible after {max_attempts} attempts")


def rotation_to_pole(c):
    """Orthogonal ``R`` with ``R @ c = (0, ..., 0, |c|)`` (a Householder reflection)."""
    c = np.asarray(c, dtype=float)
    D = c.shape[0]
    nrm = np.linalg.norm(c)
    eye = np.eye(D)
    if nrm == 0.0:
        return eye
    v = c / nrm
    v[-1] -= 1.0
    vv = v @ v
    if vv < 1e-30:
        return eye
    return eye - 2.0 * np.outer(v, v) / vv


def dilation_factor(c) -> float:
    nc = float(np.linalg.norm(c))
    return math.sqrt((1.0 - nc) / (1.0 + nc))


def dilate(alpha: float, s):
    """Conformal dilatation of S^d: project(alpha * unproject(s)); the north pole is fixed."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    s = np.asarray(s, dtype=float)
    if alpha == 1.0:
        return s.copy()
    single = s.ndim == 1
    S = np.atleast_2d(s)
    out = S.copy()
    north = S[:, -1] >= 1.0 - NORTH_TOL
    if np.any(~north):
        out[~north] = stereo_project(alpha * stereo_unproject(S[~north]))
    return out[0] if single else out


def sample_great_circle(rng, dim: int) -> GreatCircle:
    """Uniform random great circle of S^{dim-1} (``dim`` is the ambient dimension)."""
    v = rng.standard_normal(dim)
    while np.linalg.norm(v) < 1e-12:
        v = rng.standard_normal(dim)
    return GreatCircle(v / np.linalg.norm(v))


def _section_to_quadric(w, e):
    """Section {w.x = e} of S^d  ->  quadric  A|q|^2 + 2 b.q - C = 0 in R^d."""
    return w[-1] - e, w[:-1].copy(), w[-1] + e


def _quadric_to_section(A, b, C):
    w = np.concatenate([b, [(A + C) / 2.0]])
    return w, (C - A) / 2.0


def circle_to_sphere(C: GreatCircle, R, alpha: float) -> SeparatingSphere:
    """Image of the great circle under ``unproject o R^T o D_alpha^{-1}``."""
    w = np.asarray(C.normal, dtype=float)
    A, b, Cq = _section_to_quadric(w, 0.0)
    # D_{1/alpha}: q -> q / alpha, so the quadric in the new variable picks up alpha
    A, b = A * alpha * alpha, b * alpha
    w, e = _quadric_to_section(A, b, Cq)
    # x -> R^T x maps {w.x = e} to {(R^T w).y = e}
    w = np.asarray(R).T @ w
    scale = math.hypot(np.linalg.norm(w), e)
    w, e = w / scale, e / scale
    A, b, Cq = _section_to_quadric(w, e)
    nb = np.linalg.norm(b)
    if abs(A) <= PLANE_TOL * max(1.0, nb):
        # section through the north pole: 2 b.q = C
        return SeparatingSphere.hyperplane(b, Cq / 2.0)
    center = -b / A
    r2 = nb * nb / (A * A) + Cq / A
    if r2 <= 0:
        raise ValueError("degenerate section does not meet the sphere")
    return SeparatingSphere.sphere(center, math.sqrt(r2))


def great_circle_points(C: GreatCircle, count: int, rng):
    """``count`` points on the great circle (for pointwise consistency checks)."""
    n = C.normal
    D = n.shape[0]
    basis = np.linalg.svd(n[None, :])[2][1:]  # orthonormal complement, (D-1, D)
    g = rng.standard_normal((count, D - 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g @ basis
