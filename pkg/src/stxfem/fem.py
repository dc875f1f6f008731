"""Space-time XFEM basis and element contributions of the slab forms.

Local dof ordering on a prism element ``T x [t0, t1]``: standard functions
``q_{i,k} = lambda_i(x) psi_k(t)`` sit at index ``2*i + k`` (vertex ``i`` in
0..3, time level ``k`` in 0..1), their enriched copies at ``8 + 2*i + k``.
Inside phase ``m`` (0 or 1) the enriched copy equals
``q_{i,k} * (m - H[i, k])`` where ``H[i, k]`` is 1 when the vertex lies in
phase 2 at time level ``k``. All per-phase quantities are therefore
assembled as 8x8 blocks and expanded with these piecewise constant factors.

The forms, for test function ``v`` and trial ``u``::

    a(u, v) = sum_m int_{Q_m} beta_m (du/dt + w . grad u) v + alpha_m beta_m grad u . grad v
    b(u, v) = sum_m int_{Omega_m(t0)} beta_m u_+ v_+
    N(u, v) = int nu {alpha grad u . n}[beta v] + int nu {alpha grad v . n}[beta u]
              + lambda / h_T int nu [beta u][beta v]

with ``n`` pointing from phase 1 into phase 2, ``[v] = v_2 - v_1`` and
``{v} = kappa_1 v_1 + kappa_2 v_2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import MissingInterface
from .geom4d import max_edge_length, tet3_volumes
from .interface import CUT, LevelSet, SlabGeometries, SpatialCut
from .quadrature import (
    QuadRule,
    gauss_legendre_1d,
    map_simplex_rule,
    pentatope_rule_duffy,
    tet_rule,
)

TIME_MASS = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
# int psi_k psi_l' dt, test k (row), trial l (column)
TIME_DERIV = np.array([[-0.5, 0.5], [-0.5, 0.5]])


@dataclass
class ProblemCoefficients:
    alpha: tuple = (1.0, 1.0)
    beta: tuple = (1.0, 1.0)
    lambda_nitsche: Optional[float] = None
    velocity: Optional[Callable] = None
    source: Optional[Callable] = None
    beta_ratio_bound: float = 1e6

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        self.beta = tuple(float(b) for b in self.beta)
        if min(self.alpha) <= 0 or min(self.beta) <= 0:
            raise ValueError("alpha and beta must be positive")
        if max(self.beta) / min(self.beta) > self.beta_ratio_bound:
            raise ValueError("beta ratio exceeds the configured bound")
        if self.lambda_nitsche is None:
            self.lambda_nitsche = 20.0 * max(self.alpha)
        if self.lambda_nitsche < 0:
            raise ValueError("lambda must be non-negative")

    def w(self, x, t):
        x = np.asarray(x, dtype=float)
        if self.velocity is None:
            return np.zeros(x.shape)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return np.asarray(self.velocity(x, t), dtype=float)

    def f(self, x, t, phase):
        x = np.asarray(x, dtype=float)
        if self.source is None:
            return np.zeros(x.shape[:-1])
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        phase = np.broadcast_to(np.asarray(phase), x.shape[:-1])
        return np.asarray(self.source(x, t, phase), dtype=float)


# ----------------------------------------------------------------------------
# spatial P1 data


@dataclass
class TetData:
    """Barycentric maps of spatial tetrahedra (E, 4, 3)."""

    tets: np.ndarray
    inv: np.ndarray = field(init=False)
    grads: np.ndarray = field(init=False)
    volume: np.ndarray = field(init=False)
    diameter: np.ndarray = field(init=False)

    def __post_init__(self):
        self.tets = np.asarray(self.tets, dtype=float)
        edges = self.tets[:, 1:] - self.tets[:, :1]
        self.inv = np.linalg.inv(edges)
        g = np.transpose(self.inv, (0, 2, 1))
        self.grads = np.concatenate([-g.sum(axis=1, keepdims=True), g], axis=1)
        self.volume = tet3_volumes(self.tets)
        self.diameter = max_edge_length(self.tets)

    def lam(self, x, elem):
        """Barycentric coordinates of points ``x`` (P, nq, 3) in elements ``elem`` (P,)."""
        tail = np.einsum("pqd,pdj->pqj", x - self.tets[elem, None, 0], self.inv[elem])
        return np.concatenate([1.0 - tail.sum(-1, keepdims=True), tail], axis=-1)

    def stiffness(self):
        return self.volume[:, None, None] * np.einsum("eid,ejd->eij", self.grads, self.grads)

    def mass(self):
        return self.volume[:, None, None] * (np.ones((4, 4)) + np.eye(4)) / 20.0


def _psi(t, t0, dt):
    tau = (np.asarray(t) - t0) / dt
    return np.stack([1.0 - tau, tau], axis=-1)


def _q(lam, psi):
    """Tensor values (..., 8) from barycentric (..., 4) and time (..., 2) factors."""
    return (lam[..., :, None] * psi[..., None, :]).reshape(lam.shape[:-1] + (8,))


def shift_factors(H, phase):
    """Enrichment factors (..., 16) for phase index ``phase`` (...) and vertex
    Heaviside values ``H`` (..., 4, 2)."""
    H = np.asarray(H, dtype=float).reshape(np.shape(H)[:-2] + (8,))
    enr = np.asarray(phase, dtype=float)[..., None] - H
    return np.concatenate([np.ones_like(enr), enr], axis=-1)


def expand_phase_blocks(blocks8, H):
    """Expand per-phase 8x8 blocks (E, 2, 8, 8) to 16x16 element blocks."""
    out = 0.0
    for m in (0, 1):
        s = shift_factors(H, np.full(len(H), m))
        tiled = np.tile(blocks8[:, m], (1, 2, 2))
        out = out + s[:, :, None] * s[:, None, :] * tiled
    return out


def expand_phase_vectors(vec8, H):
    out = 0.0
    for m in (0, 1):
        s = shift_factors(H, np.full(len(H), m))
        out = out + s * np.tile(vec8[:, m], (1, 2))
    return out


# ----------------------------------------------------------------------------
# integral-case taxonomy


@dataclass(frozen=True)
class IntegralCase:
    dim: str
    codim: int
    cut: str

    def __str__(self):
        return f"({self.dim},{self.codim},{self.cut})"


def classify_integral(status, form, bottom_status=None):
    """Integral case of form ``a``, ``f``, ``b``, ``c`` or ``N`` on an element.

    ``status`` is the prism classification (``interface.CUT`` or a pure code,
    or a :class:`~stxfem.interface.SlabGeometry`). ``bottom_status`` refers to
    the spatial bottom face and defaults to the prism status.
    """
    if hasattr(status, "classification"):
        bottom_status = getattr(status, "bottom_classification", None) if bottom_status is None else bottom_status
        status = CUT if status.classification == "Cut" else 0
        if isinstance(bottom_status, str):
            bottom_status = CUT if bottom_status == "Cut" else 0
    cut = status == CUT
    if form in ("a", "f"):
        return IntegralCase("d+1", 0, "c" if cut else "n")
    if form in ("b", "c"):
        bcut = cut if bottom_status is None else bottom_status == CUT
        return IntegralCase("d", 0, "c" if bcut else "n")
    if form == "N":
        if not cut:
            raise MissingInterface("interface integrals only arise on cut elements")
        return IntegralCase("d", 1, "c")
    raise ValueError(f"unknown form {form!r}")


# ----------------------------------------------------------------------------
# volume terms


@dataclass
class VolumeRules:
    """Quadrature choices for the volume terms."""

    cut: QuadRule = field(default_factory=lambda: pentatope_rule_duffy(3))
    spatial: QuadRule = field(default_factory=lambda: tet_rule(2))
    temporal: QuadRule = field(default_factory=lambda: gauss_legendre_1d(2))
    load_spatial: QuadRule = field(default_factory=lambda: tet_rule(5))
    load_temporal: QuadRule = field(default_factory=lambda: gauss_legendre_1d(2))


def uncut_blocks(td: TetData, elems, phase, t0, t1, coeffs: ProblemCoefficients, rules: VolumeRules):
    """Standard 8x8 blocks of ``a`` and load vectors (8,) on pure prisms via the
    tensor-product shortcut."""
    dt = t1 - t0
    alpha = np.asarray(coeffs.alpha)[phase]
    beta = np.asarray(coeffs.beta)[phase]
    K = td.stiffness()[elems]
    M = td.mass()[elems]
    A = dt * (alpha * beta)[:, None, None] * _kron(K, TIME_MASS) + beta[:, None, None] * _kron(M, TIME_DERIV)

    tets = td.tets[elems]
    if coeffs.velocity is not None:
        X, W = map_simplex_rule(tets, rules.spatial, td.volume[elems])
        tau = rules.temporal.nodes[:, 0]
        om = rules.temporal.weights * dt
        lam = rules.spatial.barycentric  # (nq, 4)
        for tb, wb in zip(tau, om):
            t = t0 + tb * dt
            psi = np.array([1.0 - tb, tb])
            wv = coeffs.w(X, t)  # (E, nq, 3)
            conv = np.einsum("eqd,ejd->eqj", wv, td.grads[elems])  # w . grad lambda_j
            blk = np.einsum("eq,qi,eqj->eij", W, lam, conv)
            A += wb * beta[:, None, None] * _kron(blk, np.outer(psi, psi))

    F = np.zeros((len(elems), 8))
    if coeffs.source is not None:
        X, W = map_simplex_rule(tets, rules.load_spatial, td.volume[elems])
        lam = rules.load_spatial.barycentric
        for tb, wb in zip(rules.load_temporal.nodes[:, 0], rules.load_temporal.weights * dt):
            t = t0 + tb * dt
            fv = coeffs.f(X, np.full(X.shape[:-1], t), phase[:, None])
            vec = np.einsum("eq,eq,qi->ei", W, fv, lam)
            F += wb * beta[:, None] * _kron_vec(vec, np.array([1.0 - tb, tb]))
    return A, F


def _kron(A, B):
    """Batched Kronecker product (E, 4, 4) x (2, 2) -> (E, 8, 8)."""
    E = A.shape[0]
    return np.einsum("eij,kl->eikjl", A, B).reshape(E, 8, 8)


def _kron_vec(a, b):
    return np.einsum("ei,k->eik", a, b).reshape(a.shape[0], 8)


def cut_blocks(td: TetData, geom: SlabGeometries, t0, t1, coeffs: ProblemCoefficients, rules: VolumeRules, chunk=20000):
    """Per (element, phase) 8x8 blocks of ``a``, load vectors and basis mass
    diagonals on the cut prisms, integrating piece by piece.

    Returns dictionaries keyed by element index arrays: ``(elems, A8, F8, mass8)``
    with ``A8`` of shape (C, 2, 8, 8).
    """
    dt = t1 - t0
    elems = geom.cut_elements
    local = np.full(len(geom.status), -1)
    local[elems] = np.arange(len(elems))
    A8 = np.zeros((len(elems), 2, 8, 8))
    F8 = np.zeros((len(elems), 2, 8))
    mass8 = np.zeros((len(elems), 2, 8))
    alpha = np.asarray(coeffs.alpha)
    beta = np.asarray(coeffs.beta)
    for start in range(0, len(geom.pieces), chunk):
        sl = slice(start, start + chunk)
        pieces = geom.pieces[sl]
        pe = geom.piece_elem[sl]
        pm = geom.piece_phase[sl]
        X, W = map_simplex_rule(pieces, rules.cut)
        lam = td.lam(X[..., :3], pe)
        psi = _psi(X[..., 3], t0, dt)
        q = _q(lam, psi)
        dpsi = np.array([-1.0, 1.0]) / dt
        qt = _q(lam, np.broadcast_to(dpsi, psi.shape))
        gl = td.grads[pe]  # (P, 4, 3)
        Wb = W * beta[pm][:, None]
        # grad q_{i,k} = grad lambda_i psi_k
        gg = np.einsum("pid,pjd->pij", gl, gl)
        pp = np.einsum("pq,pqk,pql->pkl", Wb * alpha[pm][:, None], psi, psi)
        blk = np.einsum("pij,pkl->pikjl", gg, pp).reshape(-1, 8, 8)
        trial = qt
        if coeffs.velocity is not None:
            wv = coeffs.w(X[..., :3], X[..., 3])
            conv = np.einsum("pqd,pjd->pqj", wv, gl)  # (P, nq, 4)
            trial = trial + _q(conv, psi)
        blk += np.einsum("pq,pqI,pqJ->pIJ", Wb, q, trial)
        key = local[pe] * 2 + pm
        np.add.at(A8.reshape(-1, 8, 8), key, blk)
        np.add.at(mass8.reshape(-1, 8), key, np.einsum("pq,pqI->pI", W, q * q))
        if coeffs.source is not None:
            fv = coeffs.f(X[..., :3], X[..., 3], np.broadcast_to(pm[:, None], X.shape[:-1]))
            np.add.at(F8.reshape(-1, 8), key, np.einsum("pq,pq,pqI->pI", Wb, fv, q))
    return elems, A8, F8, mass8


def volume_blocks(td: TetData, geom: SlabGeometries, t0, t1, coeffs, rules: VolumeRules = None):
    """Per (element, phase) 8x8 blocks for all elements of a slab.

    Returns ``A8`` (E, 2, 8, 8), ``F8`` (E, 2, 8) and ``mass8`` (E, 2, 8), the
    latter holding ``int_{Q_m} q_I^2`` for pruning of enriched functions.
    """
    rules = rules or VolumeRules()
    E = len(geom.status)
    A8 = np.zeros((E, 2, 8, 8))
    F8 = np.zeros((E, 2, 8))
    mass8 = np.zeros((E, 2, 8))
    pure = np.nonzero(geom.status != CUT)[0]
    if len(pure):
        phase = geom.status[pure]
        A, F = uncut_blocks(td, pure, phase, t0, t1, coeffs, rules)
        A8[pure, phase] = A
        F8[pure, phase] = F
        dt = t1 - t0
        mdiag = np.einsum("eii->ei", td.mass()[pure])
        mass8[pure, phase] = dt * _kron_vec(mdiag, np.diag(TIME_MASS))
    elems, Ac, Fc, Mc = cut_blocks(td, geom, t0, t1, coeffs, rules)
    A8[elems] = Ac
    F8[elems] = Fc
    mass8[elems] = Mc
    return A8, F8, mass8


# ----------------------------------------------------------------------------
# interface terms


def interface_blocks(td: TetData, geom: SlabGeometries, H, t0, t1, coeffs: ProblemCoefficients, rule: QuadRule = None):
    """Nitsche blocks (K, 16, 16) per interface patch together with the owning
    element index of each patch."""
    rule = rule or tet_rule(2)
    dt = t1 - t0
    K = len(geom.iface)
    if K == 0:
        return np.zeros((0, 16, 16)), np.zeros(0, dtype=int)
    e = geom.iface_elem
    X, W = map_simplex_rule(geom.iface, rule, geom.iface_measure)
    lam = td.lam(X[..., :3], e)
    psi = _psi(X[..., 3], t0, dt)
    q = _q(lam, psi)
    nx = geom.normal[:, :3]
    dn = np.einsum("pid,pd->pi", td.grads[e], nx)  # grad lambda_i . n_x
    qn = _q(np.broadcast_to(dn[:, None, :], lam.shape), psi)
    kappa = geom.kappa[e]
    alpha = np.asarray(coeffs.alpha)
    beta = np.asarray(coeffs.beta)
    s0 = shift_factors(H[e], np.zeros(K))[:, None, :]
    s1 = shift_factors(H[e], np.ones(K))[:, None, :]
    q16 = np.concatenate([q, q], axis=-1)
    qn16 = np.concatenate([qn, qn], axis=-1)
    avg = qn16 * (kappa[:, 0, None, None] * alpha[0] * s0 + kappa[:, 1, None, None] * alpha[1] * s1)
    jump = q16 * (beta[1] * s1 - beta[0] * s0)
    pen = coeffs.lambda_nitsche / td.diameter[e]
    N = np.einsum("pq,pqI,pqJ->pIJ", W, jump, avg)
    N = N + np.transpose(N, (0, 2, 1))
    N += np.einsum("pq,pqI,pqJ->pIJ", W * (pen * geom.nu)[:, None], jump, jump)
    return N, e


# ----------------------------------------------------------------------------
# bottom (DG in time) terms


def bottom_blocks(td: TetData, cut: SpatialCut, coeffs: ProblemCoefficients, u_prev=None, t0=0.0, rule: QuadRule = None):
    """Per (element, phase) blocks of ``b`` restricted to level-0 functions and
    the vectors of ``c``.

    ``u_prev`` is either ``None`` (zero), a callable ``u(x, t, phase)`` or an
    array (E, 2, 4) of per-element, per-phase nodal values of the previous
    slab's trace from below.
    """
    rule = rule or tet_rule(2)
    E = len(td.tets)
    B8 = np.zeros((E, 2, 8, 8))
    C8 = np.zeros((E, 2, 8))
    beta = np.asarray(coeffs.beta)
    X, W = map_simplex_rule(cut.pieces, rule, tet3_volumes(cut.pieces))
    e, m = cut.piece_elem, cut.piece_phase
    lam = td.lam(X, e)
    Wb = W * beta[m][:, None]
    blk4 = np.einsum("pq,pqi,pqj->pij", Wb, lam, lam)
    key = e * 2 + m
    sub = np.zeros((E * 2, 4, 4))
    np.add.at(sub, key, blk4)
    B8.reshape(-1, 8, 8)[:, 0::2, 0::2] = sub
    if u_prev is not None:
        if callable(u_prev):
            uv = u_prev(X, np.full(X.shape[:-1], t0), np.broadcast_to(m[:, None], X.shape[:-1]))
        else:
            uv = np.einsum("pqi,pi->pq", lam, np.asarray(u_prev)[e, m])
        vec = np.einsum("pq,pq,pqi->pi", Wb, uv, lam)
        csub = np.zeros((E * 2, 4))
        np.add.at(csub, key, vec)
        C8.reshape(-1, 8)[:, 0::2] = csub
    return B8, C8


# ----------------------------------------------------------------------------
# single-element interface


class LocalBasis:
    """The eight functions ``q_{i,k}`` on one prism ``T x [t0, t1]``."""

    def __init__(self, tet, t0, t1):
        self.td = TetData(np.asarray(tet, dtype=float)[None])
        self.t0, self.t1 = float(t0), float(t1)

    @property
    def dt(self):
        return self.t1 - self.t0

    def _lam(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(1, -1, 3)
        return self.td.lam(flat, np.zeros(1, dtype=int))[0].reshape(x.shape[:-1] + (4,))

    def values(self, x, t):
        return _q(self._lam(x), _psi(t, self.t0, self.dt))

    def gradients(self, x, t):
        """Space-time gradients (..., 8, 4)."""
        lam = self._lam(x)
        psi = _psi(t, self.t0, self.dt)
        g = self.td.grads[0]
        spatial = (g[:, None, :] * psi[..., None, :, None]).reshape(psi.shape[:-1] + (8, 3))
        dpsi = np.broadcast_to(np.array([-1.0, 1.0]) / self.dt, psi.shape)
        temporal = _q(lam, dpsi)
        return np.concatenate([spatial, temporal[..., None]], axis=-1)


class EnrichedBasis:
    """Standard basis plus Heaviside-shifted copies.

    Parameters
    ----------
    H : (4, 2) array
        1 where vertex ``i`` lies in phase 2 at time level ``k``.
    enriched : (4, 2) bool array
        Which copies are active; inactive ones evaluate to zero.
    """

    def __init__(self, tet, t0, t1, H, enriched=None):
        self.local = LocalBasis(tet, t0, t1)
        self.H = np.asarray(H, dtype=float).reshape(4, 2)
        self.enriched = np.ones((4, 2), bool) if enriched is None else np.asarray(enriched, bool)

    @classmethod
    def from_level_set(cls, tet, t0, t1, phi: LevelSet, enriched=None):
        tet = np.asarray(tet, dtype=float)
        vals = np.stack([phi(tet, np.full(4, t0)), phi(tet, np.full(4, t1))], axis=1)
        return cls(tet, t0, t1, (vals >= 0).astype(float), enriched)

    @property
    def mask(self):
        return np.concatenate([np.ones(8, bool), self.enriched.reshape(8)])

    def values(self, x, t, phase):
        q = self.local.values(x, t)
        s = shift_factors(np.broadcast_to(self.H, q.shape[:-1] + (4, 2)), phase)
        return np.concatenate([q, q], axis=-1) * s * self.mask

    def gradients(self, x, t, phase):
        g = self.local.gradients(x, t)
        s = shift_factors(np.broadcast_to(self.H, g.shape[:-2] + (4, 2)), phase)
        return np.concatenate([g, g], axis=-2) * (s * self.mask)[..., None]


def _single_geometry(geom):
    """Accept either a batched geometry with one prism or a per-prism object."""
    if isinstance(geom, SlabGeometries):
        return geom
    return geom.batch


def element_diffusion_uncut(tet, coeffs: ProblemCoefficients, phase, dt):
    td = TetData(np.asarray(tet, dtype=float)[None])
    ab = coeffs.alpha[phase] * coeffs.beta[phase]
    return dt * ab * _kron(td.stiffness(), TIME_MASS)[0]


def element_form_a(geom, basis: EnrichedBasis, coeffs: ProblemCoefficients, rules: VolumeRules = None, force_cut_path=False):
    """16x16 block of ``a`` on one prism (rows: test, columns: trial)."""
    g = _single_geometry(geom)
    rules = rules or VolumeRules()
    td = basis.local.td
    if force_cut_path and g.status[0] != CUT:
        g = _as_cut(g, basis)
    A8, _, _ = volume_blocks(td, g, basis.local.t0, basis.local.t1, coeffs, rules)
    A = expand_phase_blocks(A8, basis.H[None])[0]
    return A * np.outer(basis.mask, basis.mask)


def element_load(geom, basis: EnrichedBasis, coeffs: ProblemCoefficients, rules: VolumeRules = None):
    g = _single_geometry(geom)
    _, F8, _ = volume_blocks(basis.local.td, g, basis.local.t0, basis.local.t1, coeffs, rules)
    return expand_phase_vectors(F8, basis.H[None])[0] * basis.mask


def _as_cut(g: SlabGeometries, basis: EnrichedBasis):
    """Re-express a pure prism as a 'cut' prism made of its four pentatopes."""
    from .decompose import PRISM_PENTATOPES

    tet = basis.local.td.tets[0]
    t0, t1 = basis.local.t0, basis.local.t1
    verts = np.vstack([np.hstack([tet, np.full((4, 1), t0)]), np.hstack([tet, np.full((4, 1), t1)])])
    pieces = verts[PRISM_PENTATOPES]
    phase = int(g.status[0])
    return SlabGeometries(
        np.array([CUT]), g.volume, g.phase_volume, pieces, np.full(4, phase), np.zeros(4, dtype=int),
        np.zeros((0, 4, 4)), np.zeros(0, dtype=int), np.zeros((0, 4)), np.zeros(0), np.zeros(0),
    )


def element_form_b_c(cut: SpatialCut, basis: EnrichedBasis, coeffs: ProblemCoefficients, u_prev=None):
    """``b`` block (16x16) and ``c`` vector (16,) of one element at its bottom face."""
    B8, C8 = bottom_blocks(basis.local.td, cut, coeffs, u_prev, basis.local.t0)
    B = expand_phase_blocks(B8, basis.H[None])[0] * np.outer(basis.mask, basis.mask)
    C = expand_phase_vectors(C8, basis.H[None])[0] * basis.mask
    return B, C


def element_form_N(geom, basis: EnrichedBasis, coeffs: ProblemCoefficients, rule: QuadRule = None):
    g = _single_geometry(geom)
    if g.status[0] != CUT or len(g.iface) == 0:
        raise MissingInterface("element is not cut by the interface")
    N, _ = interface_blocks(basis.local.td, g, basis.H[None], basis.local.t0, basis.local.t1, coeffs, rule)
    return N.sum(axis=0) * np.outer(basis.mask, basis.mask)
