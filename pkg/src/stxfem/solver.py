"""Time-slab assembly and solution on structured tetrahedral box meshes."""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import gmres

from .errors import NoConvergence, SingularDiagonal, SingularSystem
from .fem import (
    ProblemCoefficients,
    TetData,
    VolumeRules,
    bottom_blocks,
    expand_phase_blocks,
    expand_phase_vectors,
    interface_blocks,
    shift_factors,
    volume_blocks,
    _psi,
    _q,
)
from .decompose import PRISM_PENTATOPES
from .interface import CUT, LevelSet, SlabGeometries, SubdivisionParams, build_slab_geometries, spatial_cut
from .quadrature import QuadRule, map_simplex_rule, pentatope_rule_p3, tet_rule
from .geom4d import tet3_volumes

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# mesh


class BoxMesh:
    """Kuhn tetrahedralisation of a box split into ``n_s`` cubes per direction.

    Parameters
    ----------
    n_s : int
        Number of cubes along each axis of the whole box.
    extent : float or 3-tuple
        Box side lengths; the box is ``[0, extent]``.
    periodic : bool or 3-tuple of bool
        Periodic directions; vertices on opposite faces share one dof vertex.
    """

    def __init__(self, n_s, extent=2.0, periodic=False):
        self.n_s = int(n_s)
        if self.n_s < 1:
            raise ValueError("n_s must be positive")
        self.extent = np.broadcast_to(np.asarray(extent, dtype=float), (3,)).copy()
        self.periodic = tuple(np.broadcast_to(np.asarray(periodic, dtype=bool), (3,)).tolist())
        n = self.n_s
        idx = np.arange(n + 1)
        grid = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), -1).reshape(-1, 3)
        self.coords = grid * (self.extent / n)
        self._grid = grid

        def vid(ijk):
            return (ijk[..., 0] * (n + 1) + ijk[..., 1]) * (n + 1) + ijk[..., 2]

        cubes = np.stack(np.meshgrid(*[np.arange(n)] * 3, indexing="ij"), -1).reshape(-1, 3)
        tets = []
        for perm in itertools.permutations(range(3)):
            corner = cubes.copy()
            verts = [vid(corner)]
            for d in perm:
                corner = corner.copy()
                corner[:, d] += 1
                verts.append(vid(corner))
            tets.append(np.stack(verts, axis=1))
        self.tets = np.concatenate(tets)

        # periodic identification
        red = grid.copy()
        for d in range(3):
            if self.periodic[d]:
                red[:, d] = red[:, d] % n
        dims = [n if self.periodic[d] else n + 1 for d in range(3)]
        key = (red[:, 0] * dims[1] + red[:, 1]) * dims[2] + red[:, 2]
        _, self.vertex_dof = np.unique(key, return_inverse=True)
        self.n_dof_vertices = int(self.vertex_dof.max()) + 1
        on_bdry = np.zeros(len(grid), bool)
        for d in range(3):
            if not self.periodic[d]:
                on_bdry |= (grid[:, d] == 0) | (grid[:, d] == n)
        self.boundary_vertices = np.nonzero(on_bdry)[0]

    @property
    def h(self):
        return float(self.extent.max() / self.n_s)

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def element_coords(self):
        return self.coords[self.tets]

    def periodic_partner_involution(self):
        """Map each grid vertex to its mirror across every periodic direction."""
        n = self.n_s
        g = self._grid.copy()
        for d in range(3):
            if self.periodic[d]:
                g[:, d] = np.where(g[:, d] == 0, n, np.where(g[:, d] == n, 0, g[:, d]))
        return (g[:, 0] * (n + 1) + g[:, 1]) * (n + 1) + g[:, 2]


# ----------------------------------------------------------------------------
# dofs


@dataclass
class SlabDofMap:
    """Standard dofs ``2 * v + k`` for dof vertex ``v`` and level ``k``,
    followed by the enriched dofs of the slab."""

    n_dof_vertices: int
    enriched: np.ndarray  # (n_enr, 2) rows (dof vertex, level)
    enriched_index: np.ndarray  # (n_dof_vertices, 2) -> index or -1

    @property
    def n_standard(self):
        return 2 * self.n_dof_vertices

    @property
    def n_total(self):
        return self.n_standard + len(self.enriched)

    def element_dofs(self, elem_vertices):
        """(E, 16) global dof indices, -1 for inactive enriched dofs."""
        v = elem_vertices
        std = (2 * v[:, :, None] + np.arange(2)).reshape(len(v), 8)
        enr = self.enriched_index[v].reshape(len(v), 8)
        enr = np.where(enr >= 0, enr + self.n_standard, -1)
        return np.concatenate([std, enr], axis=1)


def enrichment_candidates(status, elem_vertices, n_dof_vertices):
    """Boolean (n_dof_vertices, 2): vertices of cut elements, both levels."""
    flag = np.zeros(n_dof_vertices, bool)
    flag[np.unique(elem_vertices[status == CUT])] = True
    return np.repeat(flag[:, None], 2, axis=1)


def build_dof_map(status, elem_vertices, n_dof_vertices, support=None, tol=1e-12):
    """Dof map with enrichment on cut-element vertices, pruned where the
    enriched function vanishes on every quadrature node.

    ``support`` is an optional (n_dof_vertices, 2) array of
    ``int q_enr^2``; entries ``<= tol * max`` are pruned.
    """
    cand = enrichment_candidates(status, elem_vertices, n_dof_vertices)
    if support is not None:
        scale = support.max() if support.size and support.max() > 0 else 1.0
        cand &= support > tol * scale
    pairs = np.argwhere(cand)
    index = np.full((n_dof_vertices, 2), -1)
    index[pairs[:, 0], pairs[:, 1]] = np.arange(len(pairs))
    return SlabDofMap(n_dof_vertices, pairs, index)


# ----------------------------------------------------------------------------
# systems


@dataclass
class SlabSystem:
    """Linear system of one slab after Dirichlet elimination.

    ``matrix`` and ``rhs`` act on the free dofs ``free``; ``fixed`` dofs take
    ``fixed_values``. ``scaling`` is the inverse absolute diagonal used as a
    Jacobi row scaling.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    scaling: np.ndarray = None
    free: np.ndarray = None
    fixed: np.ndarray = None
    fixed_values: np.ndarray = None
    n_total: int = None
    dofmap: SlabDofMap = None
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        self.rhs = np.asarray(self.rhs, dtype=float)
        n = self.matrix.shape[0]
        if self.free is None:
            self.free = np.arange(n)
            self.fixed = np.zeros(0, dtype=int)
            self.fixed_values = np.zeros(0)
            self.n_total = n
        if self.scaling is None:
            diag = np.abs(self.matrix.diagonal())
            if np.any(diag < 1e-300):
                raise SingularDiagonal(f"{int(np.sum(diag < 1e-300))} vanishing diagonal entries")
            self.scaling = 1.0 / diag


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    history: list


def solve_slab(system: SlabSystem, rtol=1e-10, restart=200, maxiter=10000, return_info=False):
    """Jacobi-scaled restarted GMRES; returns the full coefficient vector."""
    A = sp.diags(system.scaling) @ system.matrix
    b = system.scaling * system.rhs
    history = []

    def cb(res):
        history.append(float(res))

    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        x = np.zeros_like(b)
    else:
        cycles = max(1, math.ceil(maxiter / restart))
        x, info = gmres(A, b, rtol=rtol, atol=0.0, restart=restart, maxiter=cycles, callback=cb, callback_type="pr_norm")
        res = np.linalg.norm(b - A @ x) / bnorm
        if info != 0 and res > rtol * 10:
            raise NoConvergence(f"GMRES stopped with relative residual {res:.3e}", history)
    full = np.zeros(system.n_total)
    full[system.free] = x
    full[system.fixed] = system.fixed_values
    if return_info:
        res = float(np.linalg.norm(b - A @ x) / bnorm) if bnorm else 0.0
        return full, SolveInfo(max(len(history), 1), res, history)
    return full


def _scatter(dofs, blocks, rows, cols, vals):
    ok = dofs >= 0
    r = np.broadcast_to(dofs[:, :, None], blocks.shape)
    c = np.broadcast_to(dofs[:, None, :], blocks.shape)
    m = ok[:, :, None] & ok[:, None, :] & (blocks != 0)
    rows.append(r[m])
    cols.append(c[m])
    vals.append(blocks[m])


@dataclass
class SlabState:
    """Geometry and local data of an assembled slab, kept for post-processing."""

    t0: float
    t1: float
    geom: SlabGeometries
    H: np.ndarray
    dofmap: SlabDofMap
    elem_dofs: np.ndarray


def assemble_slab(mesh: BoxMesh, phi: LevelSet, params: SubdivisionParams, coeffs: ProblemCoefficients,
                  u_prev, t0, t1, dirichlet=None, rules: VolumeRules = None, interface_rule: QuadRule = None,
                  tetdata: TetData = None):
    """Assemble ``a + b + N`` and ``f + c`` on the slab ``[t0, t1]``.

    Parameters
    ----------
    u_prev : callable, array or None
        Initial data ``u(x, t, phase)`` or per-element, per-phase nodal
        values (E, 2, 4) of the previous slab at ``t0``.
    dirichlet : callable, optional
        ``g(x, t, phase)`` prescribing the standard dofs of boundary vertices.
    """
    td = tetdata or TetData(mesh.element_coords)
    E = len(mesh.tets)
    dt = t1 - t0
    base = np.concatenate([td.tets, np.full((E, 4, 1), t0)], axis=-1)
    geom = build_slab_geometries(base, np.array([0.0, 0.0, 0.0, dt]), phi, params)
    H = np.stack(
        [phi(td.tets, np.full((E, 4), t0)) >= 0, phi(td.tets, np.full((E, 4), t1)) >= 0], axis=-1
    ).astype(float)

    A8, F8, mass8 = volume_blocks(td, geom, t0, t1, coeffs, rules)
    bcut = spatial_cut(td.tets, t0, phi, params.m_s)
    B8, C8 = bottom_blocks(td, bcut, coeffs, u_prev, t0)
    A16 = expand_phase_blocks(A8 + B8, H)
    F16 = expand_phase_vectors(F8 + C8, H)

    # support of enriched functions: sum_m (m - H)^2 int_{Q_m} q^2
    support_local = sum((m - H.reshape(E, 8)) ** 2 * mass8[:, m] for m in (0, 1))
    vdof = mesh.vertex_dof[mesh.tets]
    support = np.zeros((mesh.n_dof_vertices, 2))
    np.add.at(support, vdof, support_local.reshape(E, 4, 2))
    dofmap = build_dof_map(geom.status, vdof, mesh.n_dof_vertices, support)
    dofs = dofmap.element_dofs(vdof)

    rows, cols, vals = [], [], []
    has_enr = (dofs[:, 8:] >= 0).any(axis=1)
    plain = ~has_enr
    _scatter(dofs[plain, :8], A16[plain, :8, :8], rows, cols, vals)
    _scatter(dofs[has_enr], A16[has_enr], rows, cols, vals)
    N, ne = interface_blocks(td, geom, H, t0, t1, coeffs, interface_rule)
    if len(N):
        _scatter(dofs[ne], N, rows, cols, vals)
    n = dofmap.n_total
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()
    rhs = np.zeros(n)
    ok = dofs >= 0
    np.add.at(rhs, dofs[ok], F16[ok])

    fixed = np.zeros(0, dtype=int)
    fixed_values = np.zeros(0)
    if dirichlet is not None and len(mesh.boundary_vertices):
        bv = mesh.boundary_vertices
        x = mesh.coords[bv]
        vals_k = []
        for tk in (t0, t1):
            tt = np.full(len(bv), tk)
            ph = (phi(x, tt) >= 0).astype(int)
            vals_k.append(dirichlet(x, tt, ph))
        bd = mesh.vertex_dof[bv]
        fixed = np.concatenate([2 * bd, 2 * bd + 1])
        fixed_values = np.concatenate(vals_k)
        fixed, first = np.unique(fixed, return_index=True)
        fixed_values = fixed_values[first]
    free = np.setdiff1d(np.arange(n), fixed)
    if len(fixed):
        rhs_free = rhs[free] - A[free][:, fixed] @ fixed_values
        A = A[free][:, free]
    else:
        rhs_free = rhs
    diag = np.abs(A.diagonal())
    if np.any(diag < 1e-300):
        raise SingularDiagonal(f"{int(np.sum(diag < 1e-300))} vanishing diagonal entries")
    state = SlabState(t0, t1, geom, H, dofmap, dofs)
    return SlabSystem(A, rhs_free, 1.0 / diag, free, fixed, fixed_values, n, dofmap, {"state": state, "tetdata": td})


# ----------------------------------------------------------------------------
# post-processing


def element_coefficients(state: SlabState, U):
    """Local coefficient vectors (E, 16) of a slab solution."""
    c = np.where(state.elem_dofs >= 0, U[np.maximum(state.elem_dofs, 0)], 0.0)
    return c


def top_trace(state: SlabState, U):
    """Per-element, per-phase nodal values (E, 2, 4) of the solution at ``t1``."""
    c = element_coefficients(state, U)
    std = c[:, 0:8].reshape(-1, 4, 2)[:, :, 1]
    enr = c[:, 8:16].reshape(-1, 4, 2)[:, :, 1]
    Htop = state.H[:, :, 1]
    return np.stack([std + (m - Htop) * enr for m in (0, 1)], axis=1)


def l2_error_at(td: TetData, nodal, t, phi: LevelSet, exact=None, m_s=1, rule: QuadRule = None):
    """``||u_h - u||_{L2(Omega)}`` at time ``t`` for nodal traces (E, 2, 4).

    With ``exact=None`` the norm of ``u_h`` itself is returned.
    """
    rule = rule or tet_rule(5)
    cut = spatial_cut(td.tets, t, phi, m_s)
    X, W = map_simplex_rule(cut.pieces, rule, tet3_volumes(cut.pieces))
    lam = td.lam(X, cut.piece_elem)
    uh = np.einsum("pqi,pi->pq", lam, nodal[cut.piece_elem, cut.piece_phase])
    if exact is not None:
        uh = uh - exact(X, np.full(X.shape[:-1], t), np.broadcast_to(cut.piece_phase[:, None], X.shape[:-1]))
    return float(np.sqrt(np.sum(W * uh**2)))


def interface_jump_sq(td: TetData, state: SlabState, U, coeffs: ProblemCoefficients, rule: QuadRule = None):
    """``int nu [beta u_h]^2`` over the slab's interface patches."""
    geom = state.geom
    if len(geom.iface) == 0:
        return 0.0
    rule = rule or tet_rule(5)
    e = geom.iface_elem
    X, W = map_simplex_rule(geom.iface, rule, geom.iface_measure)
    q = _q(td.lam(X[..., :3], e), _psi(X[..., 3], state.t0, state.t1 - state.t0))
    q16 = np.concatenate([q, q], axis=-1)
    c = element_coefficients(state, U)[e]
    K = len(e)
    u = [np.einsum("pqI,pI->pq", q16 * shift_factors(state.H[e], np.full(K, m))[:, None, :], c) for m in (0, 1)]
    jump = coeffs.beta[1] * u[1] - coeffs.beta[0] * u[0]
    return float(np.sum(W * geom.nu[:, None] * jump**2))


def spacetime_error_sq(td: TetData, state: SlabState, U, exact, rule: QuadRule = None):
    """``||u_h - u||^2_{L2(Q)}`` on the slab, integrated on pentatopes."""
    rule = rule or pentatope_rule_p3()
    geom = state.geom
    t0, t1 = state.t0, state.t1
    pure = np.nonzero(geom.status != CUT)[0]
    E = len(pure)
    base = np.concatenate([td.tets[pure], np.full((E, 4, 1), t0)], axis=-1)
    top = base.copy()
    top[..., 3] = t1
    pents = np.concatenate([base, top], axis=1)[:, PRISM_PENTATOPES].reshape(-1, 5, 4)
    pieces = np.concatenate([pents, geom.pieces])
    elem = np.concatenate([np.repeat(pure, 4), geom.piece_elem])
    phase = np.concatenate([np.repeat(geom.status[pure], 4), geom.piece_phase])
    X, W = map_simplex_rule(pieces, rule)
    q = _q(td.lam(X[..., :3], elem), _psi(X[..., 3], t0, t1 - t0))
    s = shift_factors(state.H[elem], phase)
    c = element_coefficients(state, U)[elem]
    uh = np.einsum("pqI,pI->pq", np.concatenate([q, q], axis=-1), s * c)
    ue = exact(X[..., :3], X[..., 3], np.broadcast_to(phase[:, None], X.shape[:-1]))
    return float(np.sum(W * (uh - ue) ** 2))


# ----------------------------------------------------------------------------
# manufactured coefficients


def solve_interface_coefficients(case, alpha, beta, size):
    """Coefficients ``(a, b)`` of the phase-1 profile matching the interface
    conditions.

    ``case="plane"``: ``U_1 = a y + b y^3``, ``U_2 = sin(pi y)`` at
    ``y = size / 2``. ``case="sphere"``: ``U_1 = a + b y^2``,
    ``U_2 = cos(pi y)`` at ``y = size`` (radius); the flux condition uses the
    radial derivative.
    """
    a1, a2 = alpha
    b1, b2 = beta
    if case == "plane":
        y = size / 2
        M = np.array([[b1 * y, b1 * y**3], [a1, 3 * a1 * y**2]])
        rhs = np.array([b2 * np.sin(np.pi * y), a2 * np.pi * np.cos(np.pi * y)])
    elif case == "sphere":
        y = size
        M = np.array([[b1, b1 * y**2], [0.0, 2 * a1 * y]])
        rhs = np.array([b2 * np.cos(np.pi * y), -a2 * np.pi * np.sin(np.pi * y)])
    else:
        raise ValueError(f"unknown case {case!r}")
    if abs(np.linalg.det(M)) < 1e-14 * np.abs(M).max() ** 2:
        raise SingularSystem("interface-coefficient system is singular")
    a, b = np.linalg.solve(M, rhs)
    return float(a), float(b)


# ----------------------------------------------------------------------------
# driver


@dataclass
class ConvergenceReport:
    case: str
    rows: list = field(default_factory=list)

    COLUMNS = ("n_s", "n_t", "m_s", "m_t", "h", "dt", "l2_error", "jump_error",
               "iterations", "max_iterations", "n_dofs", "wall_time")

    def errors(self, key="l2_error"):
        return np.array([r[key] for r in self.rows])

    def orders(self, key="l2_error", by="auto"):
        """Observed orders between successive rows.

        The refinement ratio is that of ``h/m_s`` or ``dt/m_t``, whichever
        changes more (``by`` may force ``"h"`` or ``"dt"``).
        """
        out = []
        for r0, r1 in zip(self.rows, self.rows[1:]):
            rh = (r0["h"] / r0["m_s"]) / (r1["h"] / r1["m_s"])
            rt = (r0["dt"] / r0["m_t"]) / (r1["dt"] / r1["m_t"])
            ratio = {"h": rh, "dt": rt}.get(by, max(rh, rt))
            out.append(math.log(r0[key] / r1[key]) / math.log(ratio) if ratio > 1 else float("nan"))
        return out

    def fit_error_model(self, key="l2_error"):
        """Least-squares ``C1 dt^3 + C2 (dt/m_t)^2 + C3 h^2``; None with < 3 rows."""
        if len(self.rows) < 3:
            return None
        M = np.array([[r["dt"] ** 3, (r["dt"] / r["m_t"]) ** 2, r["h"] ** 2] for r in self.rows])
        coef, *_ = np.linalg.lstsq(M, self.errors(key), rcond=None)
        return dict(zip(("C1", "C2", "C3"), coef.tolist()))

    def to_csv(self, stream):
        import csv

        w = csv.writer(stream)
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.COLUMNS])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def run_single(case, n_s, n_t, params: SubdivisionParams = SubdivisionParams(), lambda_nitsche=None,
               rules: VolumeRules = None, rtol=1e-10, spacetime_rules=(), keep_trace=False):
    """Solve ``case`` on one resolution and return a result row.

    ``spacetime_rules`` adds the list ``spacetime_errors`` of space-time L2
    errors, one per pentatope rule. ``keep_trace`` stores the final nodal
    trace (E, 2, 4) and the mesh data under ``trace`` and ``tetdata``.
    """
    start = time.perf_counter()
    mesh = BoxMesh(n_s, case.extent, case.periodic)
    coeffs = ProblemCoefficients(case.alpha, case.beta, lambda_nitsche, case.velocity, case.source)
    td = TetData(mesh.element_coords)
    dt = case.T / n_t
    u_prev = case.exact
    iters = []
    jump_sq = 0.0
    st = {id(r): 0.0 for r in spacetime_rules}
    dirichlet = None if all(mesh.periodic) else case.exact
    ndofs = 0
    for s in range(n_t):
        t0, t1 = s * dt, (s + 1) * dt
        system = assemble_slab(mesh, case.level_set, params, coeffs, u_prev, t0, t1, dirichlet, rules, tetdata=td)
        U, info = solve_slab(system, rtol=rtol, return_info=True)
        state = system.context["state"]
        iters.append(info.iterations)
        ndofs = max(ndofs, system.n_total)
        jump_sq += interface_jump_sq(td, state, U, coeffs)
        for r in spacetime_rules:
            st[id(r)] += spacetime_error_sq(td, state, U, case.exact, r)
        u_prev = top_trace(state, U)
        log.info("slab %d/%d: %d dofs, %d iterations", s + 1, n_t, system.n_total, info.iterations)
    err = l2_error_at(td, u_prev, case.T, case.level_set, case.exact, params.m_s)
    row = {
        "n_s": n_s, "n_t": n_t, "m_s": params.m_s, "m_t": params.m_t,
        "h": mesh.h, "dt": dt, "l2_error": err, "jump_error": math.sqrt(jump_sq),
        "iterations": int(sum(iters)), "max_iterations": int(max(iters)), "n_dofs": ndofs,
        "wall_time": time.perf_counter() - start,
    }
    if spacetime_rules:
        row["spacetime_errors"] = [math.sqrt(st[id(r)]) for r in spacetime_rules]
    if keep_trace:
        row["trace"] = u_prev
        row["tetdata"] = td
    return row


def temporal_self_convergence(case, n_s, n_ts, params: SubdivisionParams = SubdivisionParams(),
                              lambda_nitsche=None, **kw):
    """Differences ``||u_h^(n_t) - u_h^(2 n_t)||`` at ``T`` on one fixed mesh.

    The spatial error is common to all runs and cancels, which exposes the
    time-discretisation error. Returns ``(n_ts, diffs, orders)`` where
    ``diffs[i]`` compares ``n_ts[i]`` with ``n_ts[i + 1]``.
    """
    from .testcases import get_case

    if isinstance(case, str):
        case = get_case(case)
    rows = [run_single(case, n_s, nt, params, lambda_nitsche, keep_trace=True, **kw) for nt in n_ts]
    td = rows[0]["tetdata"]
    diffs = [
        l2_error_at(td, r0["trace"] - r1["trace"], case.T, case.level_set, None, params.m_s)
        for r0, r1 in zip(rows, rows[1:])
    ]
    orders = [
        math.log(d0 / d1) / math.log(n1 / n0)
        for d0, d1, n0, n1 in zip(diffs, diffs[1:], n_ts, n_ts[1:])
    ]
    return list(n_ts), diffs, orders


def run_testcase(case, resolutions, subdivision=SubdivisionParams(), lambda_nitsche=None, **kw) -> ConvergenceReport:
    """Run ``case`` (name or ManufacturedCase) on a list of ``(n_s, n_t)``.

    ``subdivision`` may be a single :class:`SubdivisionParams` or one per
    resolution.
    """
    from .testcases import get_case

    if isinstance(case, str):
        case = get_case(case)
    if isinstance(subdivision, SubdivisionParams):
        subdivision = [subdivision] * len(resolutions)
    report = ConvergenceReport(case.name)
    for (n_s, n_t), params in zip(resolutions, subdivision):
        report.rows.append(run_single(case, n_s, n_t, params, lambda_nitsche, **kw))
    return report
