import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stxfem.errors import DegenerateGeometry
from stxfem.geom4d import (
    REFERENCE_PENTATOPE,
    Pentatope,
    Prism4,
    SpaceTimeNormal,
    Tet4,
    barycentric_pentatope,
    contains,
    cross4,
    pentatope_measure,
    space_time_normal,
    tet4_measure,
)
from stxfem.verify import random_simplices

E = np.eye(4)
# zero or magnitudes in [1e-3, 10]; subnormal products are not meaningful here
finite = st.one_of(st.just(0.0), st.floats(1e-3, 10), st.floats(-10, -1e-3))
vec4 = arrays(np.float64, 4, elements=finite)


def gram_measure(vertices):
    """Independent oracle: sqrt(det(G^T G)) / k! for the edge matrix G."""
    v = np.asarray(vertices, dtype=float)
    G = (v[1:] - v[0]).T
    k = G.shape[1]
    return math.sqrt(abs(np.linalg.det(G.T @ G))) / math.factorial(k)


# ---------------------------------------------------------------- cross4

def test_cross4_basis_gives_unit_e4():
    z = cross4(E[0], E[1], E[2])
    assert np.allclose(np.abs(z), E[3], atol=0)


def test_cross4_dependent_is_zero():
    u, w = np.array([1.0, 2, 3, 4]), np.array([0.5, -1, 2, 0])
    assert np.all(cross4(u, u, w) == 0)


def test_cross4_shear_invariance():
    assert np.allclose(cross4(E[0] + E[1], E[1], E[2]), cross4(E[0], E[1], E[2]), atol=0)


@settings(max_examples=200, deadline=None)
@given(vec4, vec4, vec4)
def test_cross4_orthogonal(u, v, w):
    z = cross4(u, v, w)
    scale = max(np.linalg.norm(u) * np.linalg.norm(v) * np.linalg.norm(w), 1e-300)
    for a in (u, v, w):
        assert abs(z @ a) <= 1e-12 * scale * max(np.linalg.norm(a), 1.0)


@settings(max_examples=200, deadline=None)
@given(vec4, vec4, vec4, vec4, finite, finite)
def test_cross4_multilinear_and_antisymmetric(u, v, w, x, a, b):
    z = cross4(u, v, w)
    scale = (1 + abs(a) + abs(b)) * (1 + np.linalg.norm(u) + np.linalg.norm(x)) * (1 + np.linalg.norm(v)) * (1 + np.linalg.norm(w))
    assert np.abs(cross4(a * u + b * x, v, w) - a * z - b * cross4(x, v, w)).max() <= 1e-12 * scale
    tol = 1e-12 * scale
    assert np.abs(cross4(v, u, w) + z).max() <= tol
    assert np.abs(cross4(u, w, v) + z).max() <= tol
    assert np.abs(cross4(w, v, u) + z).max() <= tol


def test_cross4_matches_cofactor_determinant():
    rng = np.random.default_rng(3)
    u, v, w = rng.normal(size=(3, 4))
    # z_i = det[u; v; w; e_i] is the cofactor form of the generalised product
    ref = np.array([np.linalg.det(np.vstack([u, v, w, E[i]])) for i in range(4)])
    z = cross4(u, v, w)
    assert np.allclose(np.abs(z), np.abs(ref), rtol=1e-12, atol=1e-14)
    assert np.allclose(z, ref, rtol=1e-12) or np.allclose(z, -ref, rtol=1e-12)


# ---------------------------------------------------------------- measures

def test_reference_pentatope_measure():
    assert REFERENCE_PENTATOPE.measure == pytest.approx(1 / 24, rel=1e-15)


def test_scaled_pentatope_measure():
    assert REFERENCE_PENTATOPE.map(2 * np.eye(4)).measure == pytest.approx(16 / 24, rel=1e-15)


def test_degenerate_pentatope():
    v = REFERENCE_PENTATOPE.vertices.copy()
    v[4] = v[3]
    p = Pentatope(v)
    assert p.measure == 0.0
    assert p.degenerate


def test_pentatope_measure_invariances():
    rng = np.random.default_rng(7)
    for p in random_simplices(rng, 50, 4):
        m = pentatope_measure(p)
        perm = rng.permutation(5)
        assert pentatope_measure(p[perm]) == pytest.approx(m, rel=1e-12)
        assert pentatope_measure(p + rng.normal(size=4)) == pytest.approx(m, rel=1e-12)
        A = rng.normal(size=(4, 4))
        assert pentatope_measure(p @ A.T) == pytest.approx(abs(np.linalg.det(A)) * m, rel=1e-11)
        assert m == pytest.approx(gram_measure(p), rel=1e-11)


def test_tet4_measures():
    assert tet4_measure(Tet4(np.vstack([np.zeros(4), E[:3]]))) == pytest.approx(1 / 6, rel=1e-15)
    slanted = np.array([[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1.0]])
    assert tet4_measure(Tet4(slanted)) == pytest.approx(math.sqrt(2) / 6, rel=1e-15)
    assert tet4_measure(Tet4(slanted)) == pytest.approx(gram_measure(slanted), rel=1e-15)
    flat = slanted.copy()
    flat[3] = flat[1] + flat[2]
    assert tet4_measure(Tet4(flat)) == 0.0


def test_tet4_measure_gram_oracle_random():
    rng = np.random.default_rng(11)
    for _ in range(200):
        t = rng.normal(size=(4, 4))
        # QR gives a numerically stable evaluation of sqrt(det(G^T G))
        r = np.linalg.qr((t[1:] - t[0]).T)[1]
        assert tet4_measure(t) == pytest.approx(abs(np.prod(np.diag(r))) / 6, rel=1e-12)


def test_prism_measure():
    tet = np.vstack([np.zeros(3), np.eye(3)])
    q = Prism4.from_tet(tet, 0.25, 1.0)
    assert q.measure == pytest.approx(0.75 / 6, rel=1e-15)
    assert len(q.vertices) == 8


# ---------------------------------------------------------------- normals

def test_stationary_patch_normal():
    patch = np.array([[0.3, 0, 0, 0], [0.3, 1, 0, 0], [0.3, 0, 1, 0], [0.3, 0, 0, 1.0]])
    n = space_time_normal(Tet4(patch), E[0])
    assert np.allclose(n.n, E[0], atol=1e-15)
    assert n.nu == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("s", [0.0, 0.25, 1.0, -3.0])
def test_moving_plane_nu(s):
    patch = np.array([[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1 + s, 0, 0, 1.0]])
    n = space_time_normal(Tet4(patch), np.array([1.0, 0, 0, -s]))
    assert n.nu == pytest.approx((1 + s * s) ** -0.5, abs=1e-14)
    assert n.n[0] > 0
    assert np.linalg.norm(n.n) == pytest.approx(1.0, abs=1e-15)


def test_time_slice_patch_has_zero_nu():
    patch = np.vstack([np.zeros(4), E[:3]])
    n = space_time_normal(patch, E[3])
    assert np.allclose(n.n, E[3])
    assert n.nu == 0.0


def test_normal_orientation_follows_reference():
    patch = np.array([[0.3, 0, 0, 0], [0.3, 1, 0, 0], [0.3, 0, 1, 0], [0.3, 0, 0, 1.0]])
    assert space_time_normal(patch, -E[0]).n[0] == pytest.approx(-1.0)


def test_hyperplane_normal_random():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = rng.normal(size=4)
        basis = np.linalg.svd(m[None])[2][1:]  # orthonormal complement of m
        pts = rng.normal(size=(4, 3)) @ basis + 0.7 * m
        n = space_time_normal(pts, m)
        assert np.allclose(n.n, m / np.linalg.norm(m), atol=1e-12)


def test_degenerate_patch_raises():
    patch = np.zeros((4, 4))
    with pytest.raises(DegenerateGeometry):
        space_time_normal(patch, E[0])


def test_space_time_normal_requires_unit_vector():
    with pytest.raises(ValueError):
        SpaceTimeNormal(np.array([1.0, 1.0, 0, 0]))


# ---------------------------------------------------------------- barycentric

def test_barycentric_vertex_and_centroid():
    p = REFERENCE_PENTATOPE
    assert np.allclose(barycentric_pentatope(p, p.vertices[2]), [0, 0, 1, 0, 0], atol=1e-15)
    assert np.allclose(barycentric_pentatope(p, p.vertices.mean(0)), np.full(5, 0.2), atol=1e-15)


def test_barycentric_round_trip_random():
    rng = np.random.default_rng(9)
    for p in random_simplices(rng, 100, 4):
        x = rng.dirichlet(np.ones(5)) @ p
        lam = barycentric_pentatope(p, x)
        assert lam.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.abs(lam @ p - x).max() < 1e-12 * (1 + np.abs(p).max())
        assert contains(p, x)


def test_contains_outside():
    p = REFERENCE_PENTATOPE
    assert not contains(p, np.array([0.5, 0.5, 0.5, 0.5]))
    assert contains(p, np.array([0.2, 0.2, 0.2, 0.2]))


def test_barycentric_degenerate_raises():
    v = REFERENCE_PENTATOPE.vertices.copy()
    v[1] = v[0]
    with pytest.raises(DegenerateGeometry):
        barycentric_pentatope(v, np.zeros(4))


def test_non_finite_vertices_rejected():
    v = REFERENCE_PENTATOPE.vertices.copy()
    v[0, 0] = np.nan
    with pytest.raises(ValueError):
        Pentatope(v)
