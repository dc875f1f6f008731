"""Invariant suites behind ``stxfem verify``.

Each suite returns a list of :class:`Check` records. The suites are quick
(seconds) and deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decompose import cut_pentatopes, cut_tetrahedra, decompose_hypertriangle, decompose_prism, prism_pentatopes
from .fem import (
    EnrichedBasis,
    ProblemCoefficients,
    VolumeRules,
    element_diffusion_uncut,
    element_form_a,
    element_form_b_c,
    element_form_N,
    TIME_DERIV,
    TetData,
    _kron,
)
from .geom4d import (
    REFERENCE_PENTATOPE,
    Hypertriangle,
    Prism4,
    barycentric_pentatope,
    cross4,
    pentatope_measures,
    tet3_volumes,
    tet4_measures,
)
from .interface import LevelSet, SubdivisionParams, build_slab_geometry, spatial_cut
from .quadrature import pentatope_rule_p1, rule_exactness_error, shipped_rules

SUITES = ("geom", "decompose", "quadrature", "fem")


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def random_simplices(rng, n, dim, min_quality=1e-2):
    """``n`` random simplices (n, dim+1, dim) with Gaussian vertices, redrawn
    until ``volume / (max edge) ** dim`` exceeds ``min_quality`` times that of
    the unit corner simplex."""
    from math import factorial

    from .geom4d import max_edge_length

    ref_q = 1.0 / factorial(dim) / 2 ** (dim / 2)
    out = np.empty((0, dim + 1, dim))
    while len(out) < n:
        v = rng.normal(size=(n, dim + 1, dim))
        vol = np.abs(np.linalg.det(v[:, 1:] - v[:, :1])) / factorial(dim)
        ok = vol / max_edge_length(v) ** dim > min_quality * ref_q
        out = np.concatenate([out, v[ok]])
    return out[:n]


def random_prisms(rng, n, min_quality=1e-2):
    """``n`` random prisms as (base (n, 4, 4), extrusion (n, 4)), Gaussian in
    every coordinate and redrawn until ``volume / (max edge) ** 4`` exceeds
    ``min_quality`` times that of the unit tetrahedron extruded by one in time."""
    ref_q = (1 / 6) / 4.0
    base = np.empty((0, 4, 4))
    ext = np.empty((0, 4))
    while len(base) < n:
        b = rng.normal(size=(n, 4, 4))
        e = rng.normal(size=(n, 4))
        edges = np.concatenate([b[:, 1:] - b[:, :1], e[:, None]], axis=1)
        vol = np.abs(np.linalg.det(edges)) / 6
        lengths = np.concatenate([np.linalg.norm(b[:, :, None] - b[:, None], axis=-1).reshape(n, -1),
                                  np.linalg.norm(e, axis=1)[:, None]], axis=1)
        ok = vol / lengths.max(axis=1) ** 4 > min_quality * ref_q
        base = np.concatenate([base, b[ok]])
        ext = np.concatenate([ext, e[ok]])
    return base[:n], ext[:n]


def random_affine_maps(rng, n, max_cond=1e2):
    """``n`` random affine maps (A (n, 4, 4), b (n, 4)) with Gaussian entries,
    redrawn until the 2-norm condition number of ``A`` is at most ``max_cond``."""
    A = np.empty((0, 4, 4))
    while len(A) < n:
        a = rng.normal(size=(n, 4, 4))
        A = np.concatenate([A, a[np.linalg.cond(a) <= max_cond]])
    return A[:n], rng.normal(size=(n, 4))


def suite_geom(seed=0):
    rng = np.random.default_rng(seed)
    u, v, w = rng.normal(size=(3, 1000, 4))
    z = cross4(u, v, w)
    scale = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1) * np.linalg.norm(w, axis=1)
    ortho = max(np.abs(np.einsum("nd,nd->n", z, a) / (scale * np.linalg.norm(a, axis=1))).max() for a in (u, v, w))
    anti = np.abs(cross4(v, u, w) + z).max() / scale.max()
    a, b = rng.normal(size=2)
    u2 = rng.normal(size=(1000, 4))
    lin = np.abs(cross4(a * u + b * u2, v, w) - a * z - b * cross4(u2, v, w)).max() / scale.max()

    ref = abs(REFERENCE_PENTATOPE.measure - 1 / 24) * 24
    t = rng.normal(size=(200, 4, 4))
    e = t[:, 1:] - t[:, :1]
    # sqrt(det(E E^T)) evaluated stably as |det R| of E^T = Q R
    gram = np.abs(np.prod(np.diagonal(np.linalg.qr(np.transpose(e, (0, 2, 1)))[1], axis1=1, axis2=2), axis=1)) / 6
    tet = np.abs(tet4_measures(t) / gram - 1).max()

    p = random_simplices(rng, 50, 4)
    lam = rng.dirichlet(np.ones(5), size=50)
    x = np.einsum("ni,nid->nd", lam, p)
    bary = max(np.abs(barycentric_pentatope(p[i], x[i]) - lam[i]).max() for i in range(50))

    # moving plane x1 = 1 + s t: nu = (1 + s^2)^(-1/2)
    s = 0.25
    patch = np.array([[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 0], [1 + s, 0, 0, 1]], float)
    zz = cross4(*(patch[1:] - patch[0]))
    nu = np.linalg.norm(zz[:3]) / np.linalg.norm(zz)
    return [
        Check("cross4 orthogonality", ortho, 1e-12),
        Check("cross4 antisymmetry", anti, 1e-12),
        Check("cross4 linearity", lin, 1e-12),
        Check("reference pentatope measure 1/24", ref, 1e-14),
        Check("tet4 measure vs Gram determinant", tet, 1e-12),
        Check("barycentric round trip", bary, 1e-10),
        Check("moving-plane nu", abs(nu - (1 + s * s) ** -0.5), 1e-14),
    ]


def suite_decompose(seed=0):
    rng = np.random.default_rng(seed)
    ref = Prism4.from_tet(np.vstack([np.zeros(3), np.eye(3)]), 0.0, 1.0)
    pm = [p.measure for p in decompose_prism(ref)]
    ref_prism = max(abs(m - 1 / 24) for m in pm) * 24

    hm = [p.measure for p in decompose_hypertriangle(Hypertriangle.reference())]
    hyper = abs(sum(hm) - 0.25) * 4

    base, ext = random_prisms(rng, 1000)
    verts = np.concatenate([base, base + ext[:, None]], axis=1)
    pents = prism_pentatopes(verts)
    edge = np.concatenate([base[:, 1:] - base[:, :1], ext[:, None]], axis=1)
    pvol = np.abs(np.linalg.det(edge)) / 6
    prism_sum = np.abs(pentatope_measures(pents).sum(1) / pvol - 1).max()

    p = random_simplices(rng, 1000, 4)
    f = rng.normal(size=(1000, 5))
    b = cut_pentatopes(p, f)
    tot = np.zeros(1000)
    np.add.at(tot, b.plus_owner, pentatope_measures(b.plus))
    np.add.at(tot, b.minus_owner, pentatope_measures(b.minus))
    cut4 = np.abs(tot / pentatope_measures(p) - 1).max()

    t = random_simplices(rng, 1000, 3)
    g = rng.normal(size=(1000, 4))
    b3 = cut_tetrahedra(t, g)
    tot3 = np.zeros(1000)
    np.add.at(tot3, b3.plus_owner, tet3_volumes(b3.plus))
    np.add.at(tot3, b3.minus_owner, tet3_volumes(b3.minus))
    cut3 = np.abs(tot3 / tet3_volumes(t) - 1).max()

    case1 = cut_pentatopes(REFERENCE_PENTATOPE.vertices[None], np.array([[-1, 1, 1, 1, 1.0]]))
    case2 = cut_pentatopes(REFERENCE_PENTATOPE.vertices[None], np.array([[-1, -1, 1, 1, 1.0]]))
    counts = float(
        (len(case1.plus), len(case1.minus), len(case1.interface)) != (1, 4, 1)
        or (len(case2.plus), len(case2.minus), len(case2.interface)) != (4, 6, 3)
    )
    return [
        Check("reference prism: 4 pentatopes of 1/24", ref_prism, 1e-14),
        Check("reference hypertriangle measure 1/4", hyper, 1e-14),
        Check("random prism partition", prism_sum, 1e-12),
        Check("random pentatope cut conservation", cut4, 1e-12),
        Check("random tetrahedron cut conservation", cut3, 1e-12),
        Check("cut case piece counts", counts, 0.0),
    ]


def suite_quadrature(seed=0):
    checks = []
    for label, rule in shipped_rules().items():
        checks.append(Check(f"{label} exact to degree {rule.exactness_degree}", rule_exactness_error(rule), 1e-12))
        checks.append(Check(f"{label} positive weights", float(rule.weights.min() <= 0), 0.0))
    p1 = pentatope_rule_p1()
    checks.append(Check("p1 reproduces 1/24", abs(p1.weights.sum() - 1 / 24), 1e-16))
    return checks


def suite_fem(seed=0):
    rng = np.random.default_rng(seed)
    tet = np.vstack([np.zeros(3), np.eye(3)]) + 0.1 * rng.normal(size=(4, 3))
    t0, t1 = 0.0, 0.5
    q = Prism4.from_tet(tet, t0, t1)
    # plane x1 = c + 0.3 t cutting the element, identical phase coefficients
    c = tet[:, 0].mean()
    phi = LevelSet(lambda x, t: x[..., 0] - c - 0.3 * t)
    geom = build_slab_geometry(q, phi)
    coeffs = ProblemCoefficients((1.3, 1.3), (0.7, 0.7), velocity=lambda x, t: np.broadcast_to([0.2, -0.1, 0.3], x.shape))
    basis = EnrichedBasis.from_level_set(tet, t0, t1, phi, enriched=np.zeros((4, 2), bool))
    far = LevelSet(lambda x, t: x[..., 0] - 10.0)
    gpure = build_slab_geometry(q, far)
    bpure = EnrichedBasis.from_level_set(tet, t0, t1, far, enriched=np.zeros((4, 2), bool))
    A_uncut = element_form_a(gpure, bpure, coeffs)[:8, :8]
    A_cut = element_form_a(geom, basis, coeffs)[:8, :8]
    transparency = np.abs(A_cut - A_uncut).max() / np.abs(A_uncut).max()
    A_path = element_form_a(gpure, bpure, coeffs, force_cut_path=True)[:8, :8]
    two_path = np.abs(A_path - A_uncut).max() / np.abs(A_uncut).max()

    coeffs2 = ProblemCoefficients((1.0, 2.0), (1.5, 1.0))
    full = EnrichedBasis.from_level_set(tet, t0, t1, phi)
    N = element_form_N(geom, full, coeffs2)
    sym = np.abs(N - N.T).max() / np.abs(N).max()

    # enriched functions vanish at their own vertex and time level
    zero = 0.0
    for k, tk in enumerate((t0, t1)):
        for m in (0, 1):
            vals = full.values(tet, np.full(4, tk), np.full(4, m))  # (4, 16)
            for i in range(4):
                if full.H[i, k] == m:
                    zero = max(zero, abs(vals[i, 8 + 2 * i + k]))

    # Galerkin identity: b applied to coefficients equals c for u_prev = u_h
    cut = spatial_cut(tet[None], t0, phi)
    coeffs3 = ProblemCoefficients((1.0, 2.0), (2.0, 1.0))
    coef = rng.normal(size=16) * full.mask
    vals0 = full.values(tet, np.full(4, t0), np.zeros(4))
    vals1 = full.values(tet, np.full(4, t0), np.ones(4))
    nodal = np.stack([vals0 @ coef, vals1 @ coef])[None]
    B, C = element_form_b_c(cut, full, coeffs3, nodal)
    galerkin = np.abs(B @ coef - C).max() / np.abs(C).max()

    K = TetData(tet[None])
    ref = element_diffusion_uncut(tet, coeffs2, 0, t1 - t0)
    tensor = (t1 - t0) * 1.5 * _kron(K.stiffness(), np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]]))[0]
    diff = np.abs(ref - tensor).max() / np.abs(ref).max()
    return [
        Check("tensor shortcut vs pentatope path", two_path, 1e-12),
        Check("decomposition transparency", transparency, 1e-12),
        Check("Nitsche block symmetry", sym, 1e-13),
        Check("enrichment vanishes at own vertex", zero, 0.0),
        Check("Galerkin identity b/c", galerkin, 1e-12),
        Check("uncut diffusion block", diff, 1e-14),
        Check("time derivative matrix rows sum to zero", float(np.abs(TIME_DERIV.sum(axis=1)).max()), 0.0),
    ]


def run_suite(name, seed=0):
    funcs = {"geom": suite_geom, "decompose": suite_decompose, "quadrature": suite_quadrature, "fem": suite_fem}
    if name not in funcs:
        raise KeyError(name)
    return funcs[name](seed)
