"""Simplicial decompositions of 4-prisms, hypertriangles and cut simplices.

All templates are index tables into small vertex lists so that the same rule
applies to a single simplex and to a whole batch (leading axis) at once.

Sign convention for cuts: a vertex is *plus* iff its level-set value is
strictly negative (phase 1); zero counts as *minus* (phase 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry
from .geom4d import Hypertriangle, Pentatope, Prism4, Tet4

# prism vertices: bottom 0..3, top 4..7
PRISM_PENTATOPES = np.array(
    [
        [0, 1, 2, 3, 7],
        [0, 1, 2, 6, 7],
        [0, 1, 5, 6, 7],
        [0, 4, 5, 6, 7],
    ]
)

# 3-prism vertices: bottom 0..2, top 3..5
PRISM3_TETS = np.array([[0, 1, 2, 5], [0, 1, 4, 5], [0, 3, 4, 5]])

# Hypertriangle grid index (i, j) -> 3*i + j. With u^i = (i, 1), v^i = (i, 2),
# w^i = (i, 3), each pentatope is the diagonal triangle {u1, v2, w3} plus the
# two missing vertices of one of K_u, K_v, K_w, K_1, K_2, K_3.
HYPERTRIANGLE_PENTATOPES = np.array(
    [
        [0, 3, 6, 4, 8],  # D_u
        [0, 1, 4, 7, 8],  # D_v
        [0, 4, 2, 5, 8],  # D_w
        [0, 1, 4, 2, 8],  # D_1
        [0, 3, 4, 5, 8],  # D_2
        [0, 6, 4, 7, 8],  # D_3
    ]
)
HYPERTRIANGLE_LABELS = ("u", "v", "w", "1", "2", "3")

# Bey's red refinement: corners 0..3, edge midpoints 4..9 for edges
# (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
RED_EDGES = np.array([[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]])
RED_CHILDREN = np.array(
    [
        [0, 4, 5, 6],
        [4, 1, 7, 8],
        [5, 7, 2, 9],
        [6, 8, 9, 3],
        [4, 5, 6, 8],
        [4, 5, 7, 8],
        [5, 6, 8, 9],
        [5, 7, 8, 9],
    ]
)


@dataclass
class CutResult:
    plus_pentatopes: list = field(default_factory=list)
    minus_pentatopes: list = field(default_factory=list)
    interface_tets: list = field(default_factory=list)


@dataclass
class CutResult3D:
    plus_tets: list = field(default_factory=list)
    minus_tets: list = field(default_factory=list)
    interface_tris: list = field(default_factory=list)


@dataclass
class CutBatch:
    """Pieces of a batch of cut simplices.

    ``*_owner`` arrays give the index of the input simplex each piece came from.
    """

    plus: np.ndarray
    plus_owner: np.ndarray
    minus: np.ndarray
    minus_owner: np.ndarray
    interface: np.ndarray
    interface_owner: np.ndarray


def prism_vertices(base, extrusion):
    """(…, 8, D) vertex array from bottom vertices (…, 4, D) and an offset."""
    base = np.asarray(base, dtype=float)
    return np.concatenate([base, base + np.asarray(extrusion, dtype=float)[..., None, :]], axis=-2)


def prism_pentatopes(vertices):
    """Split prisms given as (…, 8, 4) vertex arrays into (…, 4, 5, 4) pentatopes."""
    return np.asarray(vertices)[..., PRISM_PENTATOPES, :]


def decompose_prism(q: Prism4):
    if q.degenerate:
        raise DegenerateGeometry("degenerate 4-prism")
    return [Pentatope(v) for v in prism_pentatopes(q.vertices)]


def decompose_hypertriangle(h: Hypertriangle):
    pents = [Pentatope(v) for v in h.vertices.reshape(9, 4)[HYPERTRIANGLE_PENTATOPES]]
    if all(p.degenerate for p in pents):
        raise DegenerateGeometry("degenerate hypertriangle")
    return pents


def red_refine(tets):
    """Red refinement of tetrahedra (N, 4, D) -> (8N, 4, D)."""
    tets = np.asarray(tets, dtype=float)
    mids = 0.5 * (tets[:, RED_EDGES[:, 0]] + tets[:, RED_EDGES[:, 1]])
    allv = np.concatenate([tets, mids], axis=1)
    return allv[:, RED_CHILDREN].reshape(-1, 4, tets.shape[-1])


def _edge_cuts(xa, fa, xb, fb):
    """Zero of the linear interpolant on segments [xa, xb]; broadcasting."""
    theta = fa / (fa - fb)
    return xa + theta[..., None] * (xb - xa)


def _empty(k, dim):
    return np.zeros((0, k, dim)), np.zeros(0, dtype=int)


def cut_pentatopes(vertices, values) -> CutBatch:
    """Cut pentatopes (N, 5, 4) by the zero level of the affine interpolant of
    ``values`` (N, 5)."""
    V = np.asarray(vertices, dtype=float)
    F = np.asarray(values, dtype=float)
    plus = F < 0
    mask = (plus * (1 << np.arange(5))).sum(axis=1)

    out = {"plus": [], "minus": [], "iface": []}

    def emit(kind, arr, owners):
        out[kind].append((arr.reshape(-1, arr.shape[-2], 4), np.repeat(owners, arr.shape[1])))

    for m in np.unique(mask):
        sel = np.nonzero(mask == m)[0]
        Vs, Fs = V[sel], F[sel]
        plus_ids = [i for i in range(5) if (m >> i) & 1]
        minus_ids = [i for i in range(5) if not (m >> i) & 1]
        n_plus = len(plus_ids)
        if n_plus in (0, 5):
            emit("plus" if n_plus == 5 else "minus", Vs[:, None], sel)
            continue
        if n_plus in (1, 4):
            iso, rest = (plus_ids[0], minus_ids) if n_plus == 1 else (minus_ids[0], plus_ids)
            iso_side, rest_side = ("plus", "minus") if n_plus == 1 else ("minus", "plus")
            B = _edge_cuts(Vs[:, rest], Fs[:, rest], Vs[:, [iso]], Fs[:, [iso]])
            iso_piece = np.concatenate([B, Vs[:, [iso]]], axis=1)
            prism = np.concatenate([Vs[:, rest], B], axis=1)
            emit(iso_side, iso_piece[:, None], sel)
            emit(rest_side, prism[:, PRISM_PENTATOPES], sel)
            emit("iface", B[:, None], sel)
        else:
            pair, triple = (plus_ids, minus_ids) if n_plus == 2 else (minus_ids, plus_ids)
            pair_side, triple_side = ("plus", "minus") if n_plus == 2 else ("minus", "plus")
            X = Vs[:, triple]
            FX = Fs[:, triple]
            C = _edge_cuts(X, FX, Vs[:, [pair[0]]], Fs[:, [pair[0]]])
            D = _edge_cuts(X, FX, Vs[:, [pair[1]]], Fs[:, [pair[1]]])
            grid = np.stack([X, C, D], axis=2).reshape(len(sel), 9, 4)
            prism = np.concatenate([C, Vs[:, [pair[0]]], D, Vs[:, [pair[1]]]], axis=1)
            emit(triple_side, grid[:, HYPERTRIANGLE_PENTATOPES], sel)
            emit(pair_side, prism[:, PRISM_PENTATOPES], sel)
            emit("iface", np.concatenate([C, D], axis=1)[:, PRISM3_TETS], sel)

    def gather(kind, k):
        if not out[kind]:
            return _empty(k, 4)
        arrs, owners = zip(*out[kind])
        return np.concatenate(arrs), np.concatenate(owners)

    p, po = gather("plus", 5)
    mi, mo = gather("minus", 5)
    it, io = gather("iface", 4)
    return CutBatch(p, po, mi, mo, it, io)


def cut_pentatope(p, vertex_values) -> CutResult:
    """Split a pentatope along the zero set of the affine interpolant of the
    five vertex values.

    One isolated sign gives a pentatope plus a 4-prism (4 pentatopes) and one
    interface tetrahedron; a 2/3 split gives a 4-prism (4 pentatopes) and a
    hypertriangle (6 pentatopes) with three interface tetrahedra.
    """
    verts = p.vertices if isinstance(p, Pentatope) else np.asarray(p, dtype=float)
    batch = cut_pentatopes(verts[None], np.asarray(vertex_values, dtype=float)[None])
    return CutResult(
        [Pentatope(v) for v in batch.plus],
        [Pentatope(v) for v in batch.minus],
        [Tet4(v) for v in batch.interface],
    )


def cut_tetrahedra(vertices, values) -> CutBatch:
    """Three-dimensional analogue of :func:`cut_pentatopes`.

    Tetrahedra (N, 4, 3); interface pieces are triangles (K, 3, 3).
    """
    V = np.asarray(vertices, dtype=float)
    F = np.asarray(values, dtype=float)
    dim = V.shape[-1]
    plus = F < 0
    mask = (plus * (1 << np.arange(4))).sum(axis=1)
    out = {"plus": [], "minus": [], "iface": []}

    def emit(kind, arr, owners):
        per = arr.shape[1]
        out[kind].append((arr.reshape(-1, arr.shape[-2], dim), np.repeat(owners, per)))

    for m in np.unique(mask):
        sel = np.nonzero(mask == m)[0]
        Vs, Fs = V[sel], F[sel]
        plus_ids = [i for i in range(4) if (m >> i) & 1]
        minus_ids = [i for i in range(4) if not (m >> i) & 1]
        n_plus = len(plus_ids)
        if n_plus in (0, 4):
            emit("plus" if n_plus == 4 else "minus", Vs[:, None], sel)
            continue
        if n_plus in (1, 3):
            iso, rest = (plus_ids[0], minus_ids) if n_plus == 1 else (minus_ids[0], plus_ids)
            iso_side, rest_side = ("plus", "minus") if n_plus == 1 else ("minus", "plus")
            B = _edge_cuts(Vs[:, rest], Fs[:, rest], Vs[:, [iso]], Fs[:, [iso]])
            emit(iso_side, np.concatenate([B, Vs[:, [iso]]], axis=1)[:, None], sel)
            emit(rest_side, np.concatenate([Vs[:, rest], B], axis=1)[:, PRISM3_TETS], sel)
            emit("iface", B[:, None], sel)
        else:
            a1, a2 = plus_ids
            b1, b2 = minus_ids

            def cut(i, j):
                return _edge_cuts(Vs[:, i], Fs[:, i], Vs[:, j], Fs[:, j])

            p11, p12, p21, p22 = cut(a1, b1), cut(a1, b2), cut(a2, b1), cut(a2, b2)
            side_a = np.stack([Vs[:, a1], p11, p12, Vs[:, a2], p21, p22], axis=1)
            side_b = np.stack([Vs[:, b1], p11, p21, Vs[:, b2], p12, p22], axis=1)
            emit("plus", side_a[:, PRISM3_TETS], sel)
            emit("minus", side_b[:, PRISM3_TETS], sel)
            # quad p11-p12-p22-p21 split along the diagonal through p11
            tris = np.stack([np.stack([p11, p12, p22], axis=1), np.stack([p11, p22, p21], axis=1)], axis=1)
            emit("iface", tris, sel)

    def gather(kind, k):
        if not out[kind]:
            return _empty(k, dim)
        arrs, owners = zip(*out[kind])
        return np.concatenate(arrs), np.concatenate(owners)

    p, po = gather("plus", 4)
    mi, mo = gather("minus", 4)
    it, io = gather("iface", 3)
    return CutBatch(p, po, mi, mo, it, io)


def cut_tetrahedron3(t, vertex_values) -> CutResult3D:
    verts = np.asarray(t, dtype=float)
    batch = cut_tetrahedra(verts[None], np.asarray(vertex_values, dtype=float)[None])
    return CutResult3D(list(batch.plus), list(batch.minus), list(batch.interface))


def write_simplex_dump(stream, groups):
    """Write simplices one per line: ``tag x,y,z,t x,y,z,t ...``.

    ``groups`` maps a tag to an array (N, k, D) or a list of simplex objects.
    """
    for tag, simplices in groups.items():
        for s in simplices:
            verts = getattr(s, "vertices", s)
            coords = " ".join(",".join(f"{c:.17g}" for c in v) for v in np.asarray(verts))
            stream.write(f"{tag} {coords}\n")


def read_simplex_dump(stream):
    groups = {}
    for line in stream:
        parts = line.split()
        if not parts:
            continue
        verts = [[float(c) for c in p.split(",")] for p in parts[1:]]
        groups.setdefault(parts[0], []).append(verts)
    return {k: np.array(v) for k, v in groups.items()}
