import numpy as np
import pytest

from stxfem.errors import UnsupportedSubdivision
from stxfem.geom4d import Prism4, tet3_volumes
from stxfem.interface import (
    CUT,
    PURE1,
    PURE2,
    LevelSet,
    SubdivisionParams,
    build_slab_geometries,
    build_slab_geometry,
    refine_tets,
    spacetime_phase_volume,
    spatial_cut,
    subdivide_prism,
)

UNIT_TET = np.vstack([np.zeros(3), np.eye(3)])
UNIT_PRISM = Prism4.from_tet(UNIT_TET, 0.0, 1.0)


def plane(c, s=0.0):
    """x1 = c + s t"""
    return LevelSet(
        lambda x, t: x[..., 0] - c - s * t,
        grad=lambda x, t: np.broadcast_to([1.0, 0, 0, -s], x.shape[:-1] + (4,)),
    )


def cube_prisms(n, t0=0.0, t1=1.0):
    from stxfem.solver import BoxMesh

    mesh = BoxMesh(n)
    return [Prism4.from_tet(e, t0, t1) for e in mesh.element_coords]


# ---------------------------------------------------------------- subdivision

def test_subdivision_counts_and_volumes():
    subs = subdivide_prism(UNIT_PRISM, SubdivisionParams(2, 3))
    assert len(subs) == 24
    assert sum(q.measure for q in subs) == pytest.approx(1 / 6, rel=1e-14)
    assert np.allclose([q.measure for q in subs], 1 / 6 / 24, rtol=1e-13)


@pytest.mark.parametrize("m_s", [1, 2, 4, 8])
def test_red_refinement_volumes(m_s):
    kids = refine_tets(UNIT_TET[None], m_s)[0]
    assert len(kids) == m_s**3
    assert np.allclose(tet3_volumes(kids), 1 / 6 / m_s**3, rtol=1e-12)


def test_red_refinement_covers_parent():
    kids = refine_tets(UNIT_TET[None], 2)[0]
    rng = np.random.default_rng(0)
    x = rng.dirichlet(np.ones(4), 2000) @ UNIT_TET
    hits = np.zeros(len(x), int)
    for k in kids:
        lam = np.linalg.solve(np.vstack([k.T, np.ones(4)]), np.vstack([x.T, np.ones(len(x))])).T
        hits += (lam >= -1e-12).all(axis=1)
    assert np.all(hits >= 1)
    assert np.mean(hits == 1) > 0.99


@pytest.mark.parametrize("m_s, m_t", [(3, 1), (0, 1), (1, 0), (1, 1.5), (16, 1)])
def test_unsupported_subdivision(m_s, m_t):
    with pytest.raises(UnsupportedSubdivision):
        SubdivisionParams(m_s, m_t)


# ---------------------------------------------------------------- classification

def test_far_interface_gives_pure_element():
    g = build_slab_geometry(UNIT_PRISM, plane(-5.0))
    assert g.classification == "PureOmega2"
    assert g.kappa == (0.0, 1.0)
    assert g.interface_tets == []
    g = build_slab_geometry(UNIT_PRISM, plane(5.0))
    assert g.classification == "PureOmega1"
    assert g.kappa == (1.0, 0.0)


def test_stationary_plane_cut():
    q = Prism4.from_tet(2 * UNIT_TET, 0.0, 1.0)
    g = build_slab_geometry(q, plane(1.0))
    assert g.classification == "Cut"
    assert g.bottom_classification == "Cut"
    assert sum(g.kappa) == pytest.approx(1.0, abs=1e-14)
    # phase 2 (x1 >= 1) is the corner tetrahedron at 1/8 of the volume
    assert g.kappa[1] == pytest.approx(1 / 8, rel=1e-13)
    for tet, n in g.interface_tets:
        assert np.allclose(tet.vertices[:, 0], 1.0, atol=1e-14)
        assert np.allclose(n.n, [1, 0, 0, 0], atol=1e-14)
        assert n.nu == pytest.approx(1.0, abs=1e-14)
    area = sum(t.measure for t, _ in g.interface_tets)
    # slice x1 = 1 of the doubled tet is a right triangle with legs 1, times unit time
    assert area == pytest.approx(0.5, rel=1e-13)


def test_moving_plane_nu_and_phase_volume():
    # x1 = 0.75 + 0.25 t over [0, 2]^3 x [0, 1]
    prisms = cube_prisms(2)
    phi = plane(0.75, 0.25)
    v1, v2 = spacetime_phase_volume(prisms, phi)
    # |{x1 < 0.75 + 0.25 t}| = 4 * int_0^1 (0.75 + 0.25 t) dt = 3.5
    assert v1 == pytest.approx(3.5, rel=1e-12)
    assert v1 + v2 == pytest.approx(8.0, rel=1e-13)
    base = np.array([q.base for q in prisms])
    g = build_slab_geometries(base, prisms[0].extrusion, phi, SubdivisionParams())
    big = g.iface_measure > 1e-12
    assert np.allclose(g.nu[big], 1 / np.sqrt(1 + 0.25**2), atol=1e-13)
    assert 1 / np.sqrt(1 + 0.25**2) == pytest.approx(0.9701425, abs=1e-7)
    assert np.allclose(g.normal[big], np.array([1, 0, 0, -0.25]) / np.sqrt(1.0625), atol=1e-13)
    # the interface measure is the area of the slanted hyperplane patch
    assert g.iface_measure.sum() == pytest.approx(4 * np.sqrt(1.0625), rel=1e-12)


def test_moving_plane_phase_volume_half_domain():
    prisms = cube_prisms(2)
    v1, v2 = spacetime_phase_volume(prisms, plane(0.5, 1.0))
    assert v1 == pytest.approx(4.0, rel=1e-12)
    assert v2 == pytest.approx(4.0, rel=1e-12)


def test_kappa_rows_sum_to_one():
    rng = np.random.default_rng(1)
    prisms = cube_prisms(2)
    base = np.array([q.base for q in prisms])
    c = rng.normal(size=3)
    phi = LevelSet(lambda x, t: np.linalg.norm(x - 1 - 0.1 * c, axis=-1) - 0.6 - 0.2 * t)
    g = build_slab_geometries(base, prisms[0].extrusion, phi, SubdivisionParams(2, 2))
    assert np.allclose(g.kappa.sum(axis=1), 1.0, atol=1e-13)
    assert np.any(g.status == CUT)
    assert set(np.unique(g.status)) <= {PURE1, PURE2, CUT}


def test_normals_point_from_phase1_to_phase2():
    prisms = cube_prisms(2)
    base = np.array([q.base for q in prisms])
    phi = LevelSet(lambda x, t: np.linalg.norm(x - 1.0, axis=-1) - 0.7 + 0.1 * t)
    g = build_slab_geometries(base, prisms[0].extrusion, phi, SubdivisionParams(2, 1))
    centroid = g.iface.mean(axis=1)
    step = 1e-3 * g.normal
    big = g.iface_measure > 1e-10
    assert np.all(phi.at(centroid + step)[big] > phi.at(centroid - step)[big])


def test_sphere_volume_converges():
    R = 0.6
    phi = LevelSet(lambda x, t: np.linalg.norm(x - 1.0, axis=-1) - R)
    errs = []
    for m in (1, 2, 4):
        v1, _ = spacetime_phase_volume(cube_prisms(2), phi, SubdivisionParams(m, 1))
        errs.append(abs(v1 - 4 / 3 * np.pi * R**3))
    assert errs[0] > errs[1] > errs[2]
    assert np.log2(errs[1] / errs[2]) > 1.5


def test_determinism():
    prisms = cube_prisms(2)
    base = np.array([q.base for q in prisms])
    phi = LevelSet(lambda x, t: np.linalg.norm(x - 1.0, axis=-1) - 0.7 + 0.1 * t)
    a = build_slab_geometries(base, prisms[0].extrusion, phi, SubdivisionParams(2, 2))
    b = build_slab_geometries(base, prisms[0].extrusion, phi, SubdivisionParams(2, 2))
    assert np.array_equal(a.pieces, b.pieces)
    assert np.array_equal(a.iface, b.iface)
    assert np.array_equal(a.normal, b.normal)


def test_lipschitz_screening_matches_full_sampling():
    prisms = cube_prisms(2)
    base = np.array([q.base for q in prisms])
    f = lambda x, t: np.linalg.norm(x - 1.0, axis=-1) - 0.7 + 0.1 * t  # noqa: E731
    params = SubdivisionParams(4, 2)
    a = build_slab_geometries(base, prisms[0].extrusion, LevelSet(f), params)
    b = build_slab_geometries(base, prisms[0].extrusion, LevelSet(f, lipschitz=1.1), params)
    assert np.array_equal(a.status, b.status)
    assert np.allclose(a.phase_volume, b.phase_volume, rtol=0, atol=1e-15)


def test_spatial_cut_volumes():
    tets = np.array([e[:, :3] for e in (q.base for q in cube_prisms(2))])
    phi = plane(0.75)
    cut = spatial_cut(tets, 0.0, phi, m_s=2)
    vol = tet3_volumes(cut.pieces)
    v1 = vol[cut.piece_phase == 0].sum()
    assert v1 == pytest.approx(0.75 * 4, rel=1e-12)
    assert vol.sum() == pytest.approx(8.0, rel=1e-12)
    assert np.allclose(cut.iface[..., 0], 0.75, atol=1e-14)
    assert set(np.unique(cut.piece_elem)) == set(range(len(tets)))


def test_empty_domain_has_zero_volume():
    assert spacetime_phase_volume([], plane(0.5)) == (0.0, 0.0)
