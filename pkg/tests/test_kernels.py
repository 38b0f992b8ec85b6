import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spheresep import _pykernels, kernels

ck = pytest.importorskip("spheresep._ckernels")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")
    assert (kernels.BOUNDARY, kernels.EXTERIOR, kernels.INTERIOR) == (0, 1, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.integers(1, 40), st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_halfspace_counts_backends_agree(m, h, D, seed):
    rng = np.random.default_rng(seed)
    pts = rng.integers(-3, 4, (m, D)).astype(float)  # lattice points hit the tie band often
    nrm = rng.integers(-2, 3, (h, D)).astype(float)
    off = rng.integers(-2, 3, h).astype(float)
    a = _pykernels.halfspace_counts(pts, nrm, off, 1e-12)
    b = ck.halfspace_counts(pts, nrm, off, 1e-12)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert np.all(a[0] + a[1] <= m)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 80), st.integers(1, 4), st.booleans(), st.integers(0, 2**32 - 1))
def test_classify_backends_agree(n, d, plane, seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-5, 5, (n, d))
    radii = rng.uniform(0.1, 2, n)
    vec = rng.standard_normal(d)
    if plane:
        vec /= np.linalg.norm(vec)
    a = _pykernels.classify_spheres(centers, radii, plane, vec, 1.5, 1e-12)
    b = ck.classify_spheres(centers, radii, plane, vec, 1.5, 1e-12)
    assert np.array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(1, 50), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_coverage_backends_agree(q, n, d, seed):
    rng = np.random.default_rng(seed)
    Q = rng.uniform(0, 4, (q, d))
    C = rng.uniform(0, 4, (n, d))
    R = rng.uniform(0.2, 1.5, n)
    assert np.array_equal(_pykernels.coverage_counts(Q, C, R, 1e-9), ck.coverage_counts(Q, C, R, 1e-9))


def test_halfspace_counts_by_hand():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 1.0]])
    pos, neg = kernels.halfspace_counts(pts, np.array([[1.0, 0.0]]), np.array([1.0]), 1e-12)
    assert (pos[0], neg[0]) == (2, 1)  # the point on x = 1 is on neither side


def test_classify_tangent_is_boundary():
    lab = kernels.classify_spheres(np.array([[3.0, 0.0]]), np.array([1.0]), False,
                                   np.zeros(2), 2.0, 1e-12)
    assert lab[0] == kernels.BOUNDARY
