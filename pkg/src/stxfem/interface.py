"""Piecewise planar space-time interface and phase decomposition of prisms.

A prism ``T x [t0, t1]`` is subdivided regularly (red refinement of ``T``,
uniform slicing of the time interval), every sub-prism is split into four
pentatopes, the level set is sampled at their vertices and each pentatope is
cut by the zero set of the resulting affine interpolant.

Phase 1 is ``phi < 0``, phase 2 is ``phi >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decompose import PRISM_PENTATOPES, cut_pentatopes, cut_tetrahedra, red_refine
from .errors import UnsupportedSubdivision
from .geom4d import (
    Pentatope,
    Prism4,
    SpaceTimeNormal,
    Tet4,
    max_edge_length,
    pentatope_measures,
    space_time_normals,
    tet4_measures,
)

PURE1, PURE2, CUT = 0, 1, 2
CLASS_NAMES = {PURE1: "PureOmega1", PURE2: "PureOmega2", CUT: "Cut"}


class LevelSet:
    """Level-set callback ``phi(x, t)`` with ``x`` of shape (..., 3).

    Parameters
    ----------
    func : callable
        Vectorised evaluator ``func(x, t) -> array``.
    grad : callable, optional
        Space-time gradient ``grad(x, t) -> (..., 4)``. Central differences
        are used when omitted.
    lipschitz : float, optional
        Bound on ``|grad phi|`` (space-time). When given, prisms whose corner
        values all exceed ``lipschitz * diameter`` in magnitude are classified
        without sampling their subdivision.
    scale : float
        Length scale of the domain, sets the finite-difference step.
    """

    def __init__(self, func, grad=None, lipschitz=None, scale=1.0):
        self.func = func
        self._grad = grad
        self.lipschitz = lipschitz
        self.scale = scale

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.asarray(self.func(x, t), dtype=float)

    def at(self, points):
        """Evaluate at space-time points (..., 4)."""
        points = np.asarray(points, dtype=float)
        return self(points[..., :3], points[..., 3])

    def gradient(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        if self._grad is not None:
            return np.asarray(self._grad(x, t), dtype=float)
        step = 1e-6 * self.scale
        out = np.empty(x.shape[:-1] + (4,))
        for d in range(3):
            e = np.zeros(3)
            e[d] = step
            out[..., d] = (self(x + e, t) - self(x - e, t)) / (2 * step)
        out[..., 3] = (self(x, t + step) - self(x, t - step)) / (2 * step)
        return out


@dataclass(frozen=True)
class SubdivisionParams:
    m_s: int = 1
    m_t: int = 1

    def __post_init__(self):
        if self.m_s not in (1, 2, 4, 8):
            raise UnsupportedSubdivision(f"m_s must be one of 1, 2, 4, 8, got {self.m_s}")
        if int(self.m_t) != self.m_t or self.m_t < 1:
            raise UnsupportedSubdivision(f"m_t must be a positive integer, got {self.m_t}")

    @property
    def levels(self) -> int:
        return int(np.log2(self.m_s))


def refine_tets(tets, m_s):
    """Apply ``log2(m_s)`` levels of red refinement; returns (N, m_s**3, 4, D)."""
    tets = np.asarray(tets, dtype=float)
    n = tets.shape[0]
    out = tets
    for _ in range(SubdivisionParams(m_s).levels):
        out = red_refine(out)
    return out.reshape(n, m_s**3, 4, tets.shape[-1])


def subprism_vertices(base, extrusion, params: SubdivisionParams):
    """Vertices (N, m_s**3 * m_t, 8, 4) of the sub-prisms of prisms ``base`` (N, 4, 4)
    extruded by ``extrusion`` (N, 4) or (4,)."""
    base = np.asarray(base, dtype=float)
    n = base.shape[0]
    ext = np.broadcast_to(np.asarray(extrusion, dtype=float), (n, 4))
    sub = refine_tets(base, params.m_s)  # (n, S, 4, 4)
    frac = np.arange(params.m_t + 1) / params.m_t
    levels = sub[:, :, None] + frac[None, None, :, None, None] * ext[:, None, None, None, :]
    # levels: (n, S, m_t+1, 4, 4)
    verts = np.concatenate([levels[:, :, :-1], levels[:, :, 1:]], axis=3)
    return verts.reshape(n, -1, 8, 4)


def subdivide_prism(q: Prism4, params: SubdivisionParams):
    verts = subprism_vertices(q.base[None], q.extrusion, params)[0]
    return [Prism4(v[:4], q.extrusion / params.m_t) for v in verts]


@dataclass
class SlabGeometries:
    """Batched phase decomposition of ``N`` prisms.

    Attributes
    ----------
    status : (N,) int
        ``PURE1``, ``PURE2`` or ``CUT``.
    volume : (N,) float
        Prism measures.
    phase_volume : (N, 2) float
        Measures of the two phase parts (pure prisms: full volume in one slot).
    pieces, piece_phase, piece_elem
        Phase pentatopes of the cut prisms, phase index 0 or 1 and owning prism.
    iface, iface_elem, normal, nu, iface_measure
        Interface tetrahedra of the cut prisms with unit normals pointing from
        phase 1 into phase 2.
    """

    status: np.ndarray
    volume: np.ndarray
    phase_volume: np.ndarray
    pieces: np.ndarray
    piece_phase: np.ndarray
    piece_elem: np.ndarray
    iface: np.ndarray
    iface_elem: np.ndarray
    normal: np.ndarray
    nu: np.ndarray
    iface_measure: np.ndarray

    @property
    def kappa(self):
        return self.phase_volume / self.volume[:, None]

    @property
    def cut_elements(self):
        return np.nonzero(self.status == CUT)[0]


def _candidates(phi: LevelSet, corner_vals, corners):
    mixed = (corner_vals < 0).any(axis=1) & (corner_vals >= 0).any(axis=1)
    if phi.lipschitz is None:
        return np.ones(len(corner_vals), dtype=bool)
    margin = phi.lipschitz * max_edge_length(corners)
    return mixed | (np.abs(corner_vals).min(axis=1) <= margin)


def build_slab_geometries(base, extrusion, phi: LevelSet, params: SubdivisionParams, chunk=4000):
    """Phase decomposition of many prisms at once.

    ``base`` holds the bottom tetrahedra (N, 4, 4) in space-time coordinates,
    ``extrusion`` the common (4,) or per-prism (N, 4) offset.
    """
    base = np.asarray(base, dtype=float)
    n = base.shape[0]
    ext = np.broadcast_to(np.asarray(extrusion, dtype=float), (n, 4))
    corners = np.concatenate([base, base + ext[:, None, :]], axis=1)
    corner_vals = phi.at(corners)
    volume = pentatope_measures(corners[:, PRISM_PENTATOPES]).sum(axis=1)
    status = np.where(corner_vals[:, 0] < 0, PURE1, PURE2)
    need = (params.m_s > 1 or params.m_t > 1)
    cand = _candidates(phi, corner_vals, corners) if need else (
        (corner_vals < 0).any(axis=1) & (corner_vals >= 0).any(axis=1)
    )
    cand_idx = np.nonzero(cand)[0]

    parts = {k: [] for k in ("pieces", "pphase", "pelem", "iface", "ielem", "grad")}
    for start in range(0, len(cand_idx), chunk):
        idx = cand_idx[start : start + chunk]
        sub = subprism_vertices(base[idx], ext[idx], params)  # (c, S, 8, 4)
        vals = phi.at(sub)
        neg = (vals < 0).reshape(len(idx), -1)
        is_cut = neg.any(axis=1) & ~neg.all(axis=1)
        status[idx] = np.where(is_cut, CUT, np.where(neg[:, 0], PURE1, PURE2))
        keep = np.nonzero(is_cut)[0]
        if len(keep) == 0:
            continue
        pents = sub[keep][:, :, PRISM_PENTATOPES].reshape(-1, 5, 4)
        pvals = vals[keep][:, :, PRISM_PENTATOPES].reshape(-1, 5)
        per_elem = sub.shape[1] * 4
        elem_of_pent = np.repeat(idx[keep], per_elem)
        batch = cut_pentatopes(pents, pvals)
        parts["pieces"] += [batch.plus, batch.minus]
        parts["pphase"] += [np.zeros(len(batch.plus), dtype=int), np.ones(len(batch.minus), dtype=int)]
        parts["pelem"] += [elem_of_pent[batch.plus_owner], elem_of_pent[batch.minus_owner]]
        parts["iface"].append(batch.interface)
        parts["ielem"].append(elem_of_pent[batch.interface_owner])
        owner = pents[batch.interface_owner]
        edges = owner[:, 1:] - owner[:, :1]
        dvals = pvals[batch.interface_owner][:, 1:] - pvals[batch.interface_owner][:, :1]
        parts["grad"].append(np.linalg.solve(edges, dvals[..., None])[..., 0])

    def cat(key, shape, dtype=float):
        return np.concatenate(parts[key]) if parts[key] else np.zeros(shape, dtype=dtype)

    pieces = cat("pieces", (0, 5, 4))
    piece_phase = cat("pphase", (0,), int)
    piece_elem = cat("pelem", (0,), int)
    iface = cat("iface", (0, 4, 4))
    iface_elem = cat("ielem", (0,), int)
    grads = cat("grad", (0, 4))
    normal, nu, _ = space_time_normals(iface, grads)
    iface_measure = tet4_measures(iface)

    phase_volume = np.zeros((n, 2))
    pure = status != CUT
    phase_volume[pure, status[pure]] = volume[pure]
    if len(pieces):
        np.add.at(phase_volume, (piece_elem, piece_phase), pentatope_measures(pieces))
    return SlabGeometries(
        status, volume, phase_volume, pieces, piece_phase, piece_elem,
        iface, iface_elem, normal, nu, iface_measure,
    )


@dataclass
class SlabGeometry:
    """Phase decomposition of a single prism."""

    classification: str
    phase_pentatopes: tuple
    interface_tets: list
    kappa: tuple
    prism_measure: float
    bottom_classification: str = "PureOmega1"
    batch: SlabGeometries = None


def build_slab_geometry(q: Prism4, phi: LevelSet, params: SubdivisionParams = SubdivisionParams()):
    g = build_slab_geometries(q.base[None], q.extrusion, phi, params)
    status = int(g.status[0])
    if status == CUT:
        phases = tuple([Pentatope(p) for p in g.pieces[g.piece_phase == m]] for m in (0, 1))
    else:
        phases = ([], [])
    iface = [
        (Tet4(t), SpaceTimeNormal(n))
        for t, n, size in zip(g.iface, g.normal, g.iface_measure)
        if size > 0
    ]
    kappa = tuple(float(k) for k in g.kappa[0])
    bottom = q.base[:, :3]
    bvals = phi(refine_tets(bottom[None], params.m_s)[0], q.base[0, 3])
    bneg = bvals < 0
    if bneg.any() and not bneg.all():
        bstatus = CUT
    else:
        bstatus = PURE1 if bneg.all() else PURE2
    return SlabGeometry(
        CLASS_NAMES[status], phases, iface, kappa, float(g.volume[0]), CLASS_NAMES[bstatus], g
    )


def spacetime_phase_volume(domain, phi: LevelSet, params: SubdivisionParams = SubdivisionParams()):
    """Space-time measures of the two phases over a list of prisms."""
    if len(domain) == 0:
        return 0.0, 0.0
    base = np.array([q.base for q in domain])
    ext = np.array([q.extrusion for q in domain])
    g = build_slab_geometries(base, ext, phi, params)
    total = g.phase_volume.sum(axis=0)
    return float(total[0]), float(total[1])


@dataclass
class SpatialCut:
    """Phase decomposition of spatial tetrahedra at a fixed time.

    Every element contributes at least one piece; pure elements contribute
    themselves.
    """

    pieces: np.ndarray
    piece_phase: np.ndarray
    piece_elem: np.ndarray
    iface: np.ndarray
    iface_elem: np.ndarray


def spatial_cut(tets, t, phi: LevelSet, m_s=1):
    """Cut spatial tetrahedra (N, 4, 3) by the interpolated zero level of ``phi(., t)``.

    The tetrahedra are red-refined ``log2(m_s)`` times first, which matches
    the bottom and top faces of :func:`build_slab_geometries`.
    """
    tets = np.asarray(tets, dtype=float)
    n = len(tets)
    sub = refine_tets(tets, m_s)  # (n, S, 4, 3)
    vals = phi(sub, np.full(sub.shape[:-1], float(t)))
    neg = (vals < 0).reshape(n, -1)
    is_cut = neg.any(axis=1) & ~neg.all(axis=1)
    pure = np.nonzero(~is_cut)[0]
    cut = np.nonzero(is_cut)[0]
    S = sub.shape[1]
    batch = cut_tetrahedra(sub[cut].reshape(-1, 4, 3), vals[cut].reshape(-1, 4))
    elem_of = np.repeat(cut, S)
    pieces = np.concatenate([tets[pure], batch.plus, batch.minus])
    phase = np.concatenate(
        [np.where(neg[pure, 0], 0, 1), np.zeros(len(batch.plus), dtype=int), np.ones(len(batch.minus), dtype=int)]
    )
    elem = np.concatenate([pure, elem_of[batch.plus_owner], elem_of[batch.minus_owner]])
    return SpatialCut(pieces, phase, elem, batch.interface, elem_of[batch.interface_owner])
