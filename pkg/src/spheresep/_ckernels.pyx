# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BOUNDARY = 0
EXTERIOR = 1
INTERIOR = 2


def halfspace_counts(points, normals, offsets, double tol):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] N = np.ascontiguousarray(normals, dtype=np.float64)
    cdef const double[::1] B = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef Py_ssize_t h = N.shape[0], m = P.shape[0], D = P.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, b, n0, n1, n2
    cdef long long cp, cn
    pos = np.empty(h, dtype=np.int64)
    neg = np.empty(h, dtype=np.int64)
    cdef long long[::1] po = pos
    cdef long long[::1] ne = neg
    with nogil:
        for i in range(h):
            cp = 0
            cn = 0
            b = B[i]
            if D == 3:
                n0 = N[i, 0]
                n1 = N[i, 1]
                n2 = N[i, 2]
                for j in range(m):
                    s = n0 * P[j, 0] + n1 * P[j, 1] + n2 * P[j, 2] - b
                    cp += s > tol
                    cn += s < -tol
            else:
                for j in range(m):
                    s = -b
                    for k in range(D):
                        s = s + N[i, k] * P[j, k]
                    cp += s > tol
                    cn += s < -tol
            po[i] = cp
            ne[i] = cn
    return pos, neg


def classify_spheres(centers, radii, bint is_plane, vec, double scalar, double tol):
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(radii, dtype=np.float64)
    cdef const double[::1] V = np.ascontiguousarray(vec, dtype=np.float64)
    cdef Py_ssize_t n = C.shape[0], d = C.shape[1]
    cdef Py_ssize_t i, k
    cdef double s, t
    labels = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] L = labels
    with nogil:
        for i in range(n):
            if is_plane:
                s = -scalar
                for k in range(d):
                    s = s + C[i, k] * V[k]
                if s - R[i] > tol:
                    L[i] = 1
                elif s + R[i] < -tol:
                    L[i] = 2
            else:
                s = 0.0
                for k in range(d):
                    t = C[i, k] - V[k]
                    s = s + t * t
                s = sqrt(s)
                if s - R[i] - scalar > tol:
                    L[i] = 1
                elif scalar - s - R[i] > tol:
                    L[i] = 2
    return labels


def coverage_counts(queries, centers, radii, double tol):
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t q = Q.shape[0], n = C.shape[0], d = C.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s, t, rr
    cdef long long c
    out = np.empty(q, dtype=np.int64)
    cdef long long[::1] O = out
    with nogil:
        for i in range(q):
            c = 0
            for j in range(n):
                rr = R[j] + tol
                s = 0.0
                for k in range(d):
                    t = Q[i, k] - C[j, k]
                    s = s + t * t
                    if s > rr * rr:
                        break
                if s <= rr * rr:
                    c += 1
            O[i] = c
    return out
