"""Pure numpy implementations of the hot kernels.

These mirror :mod:`spheresep._ckernels` exactly (same signatures, same
results) and are used whenever the compiled extension is unavailable.
"""

import numpy as np

# labels shared with the compiled kernels
BOUNDARY = 0
EXTERIOR = 1
INTERIOR = 2

_CHUNK = 1 << 20


def halfspace_counts(points, normals, offsets, tol):
    """Count points strictly above / strictly below each hyperplane.

    Returns ``(n_pos, n_neg)`` where ``n_pos[h] = #{p : normals[h].p - offsets[h] > tol}``.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    h = normals.shape[0]
    n_pos = np.empty(h, dtype=np.int64)
    n_neg = np.empty(h, dtype=np.int64)
    step = max(1, _CHUNK // max(1, points.shape[0]))
    for lo in range(0, h, step):
        hi = min(h, lo + step)
        s = normals[lo:hi] @ points.T - offsets[lo:hi, None]
        n_pos[lo:hi] = np.count_nonzero(s > tol, axis=1)
        n_neg[lo:hi] = np.count_nonzero(s < -tol, axis=1)
    return n_pos, n_neg


def classify_spheres(centers, radii, is_plane, vec, scalar, tol):
    """Label each sphere against a separator.

    For a sphere separator ``vec`` is its center and ``scalar`` its radius;
    for a hyperplane ``vec`` is the unit normal and ``scalar`` the offset
    (positive side is exterior).
    """
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    vec = np.asarray(vec, dtype=np.float64)
    labels = np.zeros(centers.shape[0], dtype=np.int8)
    if is_plane:
        s = centers @ vec - scalar
        labels[s - radii > tol] = EXTERIOR
        labels[s + radii < -tol] = INTERIOR
    else:
        dist = np.sqrt(((centers - vec) ** 2).sum(axis=1))
        labels[dist - radii - scalar > tol] = EXTERIOR
        labels[scalar - dist - radii > tol] = INTERIOR
    return labels


def coverage_counts(queries, centers, radii, tol):
    """Number of closed balls containing each query point."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    q = queries.shape[0]
    out = np.empty(q, dtype=np.int64)
    step = max(1, _CHUNK // max(1, centers.shape[0]))
    r2 = (radii + tol) ** 2
    for lo in range(0, q, step):
        hi = min(q, lo + step)
        d2 = ((queries[lo:hi, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        out[lo:hi] = np.count_nonzero(d2 <= r2[None, :], axis=1)
    return out
