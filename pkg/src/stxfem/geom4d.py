"""Four-dimensional geometric primitives.

Points are plain numpy arrays of length 4, the last coordinate being time.
The simplex classes below are thin frozen wrappers around vertex arrays; all
heavy lifting is done by the vectorised helpers (``cross4``,
``pentatope_measures``, ...) which accept arbitrary leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry

DEGENERACY_RTOL = 1e-14


def _as_vertices(vertices, count, dim=4):
    arr = np.array(vertices, dtype=float)
    if arr.shape != (count, dim):
        raise ValueError(f"expected vertex array of shape {(count, dim)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vertex coordinates must be finite")
    arr.setflags(write=False)
    return arr


def max_edge_length(vertices):
    """Largest pairwise distance between the vertices along the second-to-last axis."""
    v = np.asarray(vertices, dtype=float)
    diff = v[..., :, None, :] - v[..., None, :, :]
    return np.sqrt((diff**2).sum(-1)).max(axis=(-1, -2))


@dataclass(frozen=True)
class Pentatope:
    """4-simplex given by five vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_vertices(self.vertices, 5))

    @property
    def edge_matrix(self):
        return (self.vertices[1:] - self.vertices[0]).T

    @property
    def degenerate(self) -> bool:
        det = np.linalg.det(self.edge_matrix)
        return abs(det) < DEGENERACY_RTOL * max_edge_length(self.vertices) ** 4

    @property
    def measure(self) -> float:
        return pentatope_measure(self)

    def map(self, matrix, offset=0.0) -> "Pentatope":
        return Pentatope(self.vertices @ np.asarray(matrix, dtype=float).T + offset)


@dataclass(frozen=True)
class Prism4:
    """Tetrahedron ``base`` extruded along ``extrusion``."""

    base: np.ndarray
    extrusion: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", _as_vertices(self.base, 4))
        ext = np.array(self.extrusion, dtype=float).reshape(4)
        ext.setflags(write=False)
        object.__setattr__(self, "extrusion", ext)

    @classmethod
    def from_tet(cls, tet, t0, t1) -> "Prism4":
        """Space-time prism ``tet x [t0, t1]`` for a spatial tetrahedron (4x3 array)."""
        tet = np.asarray(tet, dtype=float)
        base = np.hstack([tet, np.full((4, 1), float(t0))])
        return cls(base, [0.0, 0.0, 0.0, float(t1) - float(t0)])

    @property
    def top(self):
        return self.base + self.extrusion

    @property
    def vertices(self):
        """Bottom vertices followed by top vertices, shape (8, 4)."""
        return np.vstack([self.base, self.top])

    @property
    def measure(self) -> float:
        return abs(np.linalg.det(np.vstack([self.base[1:] - self.base[0], self.extrusion]).T)) / 6.0

    @property
    def degenerate(self) -> bool:
        scale = max(max_edge_length(self.base), np.linalg.norm(self.extrusion))
        return self.measure * 6.0 < DEGENERACY_RTOL * scale**4


@dataclass(frozen=True)
class Hypertriangle:
    """Convex hull of a 3x3 grid of points ``vertices[i, j]``.

    The bilinear-in-barycentric map from the reference hypertriangle
    (product of two reference triangles) reproduces ``vertices[i, j]`` at
    the reference node ``(chi_i, chi_j)``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        arr = _as_vertices(np.asarray(self.vertices, dtype=float).reshape(9, 4), 9)
        object.__setattr__(self, "vertices", arr.reshape(3, 3, 4))

    @staticmethod
    def reference() -> "Hypertriangle":
        chi = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        grid = np.array([[np.concatenate([chi[i], chi[j]]) for j in range(3)] for i in range(3)])
        return Hypertriangle(grid)

    def map(self, xhat):
        """Bilinear-in-barycentric map of reference points ``xhat`` (..., 4)."""
        xhat = np.asarray(xhat, dtype=float)
        rho1 = np.stack([1 - xhat[..., 0] - xhat[..., 1], xhat[..., 0], xhat[..., 1]], -1)
        rho2 = np.stack([1 - xhat[..., 2] - xhat[..., 3], xhat[..., 2], xhat[..., 3]], -1)
        return np.einsum("...i,...j,ijd->...d", rho1, rho2, self.vertices)


@dataclass(frozen=True)
class Tet4:
    """Tetrahedron embedded in R^4 (an interface patch)."""

    vertices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _as_vertices(self.vertices, 4))

    @property
    def measure(self) -> float:
        return tet4_measure(self)

    @property
    def centroid(self):
        return self.vertices.mean(axis=0)


@dataclass(frozen=True)
class SpaceTimeNormal:
    """Unit space-time normal ``n`` and the weight ``nu = |(n1, n2, n3)|``."""

    n: np.ndarray
    nu: float = field(init=False)

    def __post_init__(self):
        n = np.array(self.n, dtype=float).reshape(4)
        norm = np.linalg.norm(n)
        if not np.isclose(norm, 1.0, rtol=0, atol=1e-12):
            raise ValueError(f"normal must have unit length, got |n| = {norm}")
        n.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "nu", float(np.linalg.norm(n[:3])))

    @property
    def spatial_direction(self):
        """Unit spatial normal ``n_x / nu`` (undefined for nu == 0)."""
        if self.nu == 0.0:
            raise DegenerateGeometry("time-slice patch has no spatial normal")
        return self.n[:3] / self.nu


def cross4(u, v, w):
    """Generalised cross product of three vectors in R^4.

    The result is orthogonal to all three arguments, vanishes iff they are
    linearly dependent, and changes sign under any transposition of the
    arguments. Leading batch axes broadcast.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    u1, u2, u3, u4 = (u[..., i] for i in range(4))
    v1, v2, v3, v4 = (v[..., i] for i in range(4))
    w1, w2, w3, w4 = (w[..., i] for i in range(4))
    a12 = u1 * v2 - u2 * v1
    a13 = u1 * v3 - u3 * v1
    a14 = u1 * v4 - u4 * v1
    a23 = u2 * v3 - u3 * v2
    a24 = u2 * v4 - u4 * v2
    a34 = u3 * v4 - u4 * v3
    z1 = w2 * a34 - w3 * a24 + w4 * a23
    z2 = -w1 * a34 + w3 * a14 - w4 * a13
    z3 = w1 * a24 - w2 * a14 + w4 * a12
    z4 = -w1 * a23 + w2 * a13 - w3 * a12
    return np.stack([z1, z2, z3, z4], axis=-1)


def _pentatope_array(p):
    return p.vertices if isinstance(p, Pentatope) else np.asarray(p, dtype=float)


def pentatope_measures(vertices):
    """Unsigned 4-volumes of pentatopes given as an array (..., 5, 4)."""
    v = np.asarray(vertices, dtype=float)
    edges = v[..., 1:, :] - v[..., :1, :]
    return np.abs(np.linalg.det(edges)) / 24.0


def pentatope_measure(p) -> float:
    return float(pentatope_measures(_pentatope_array(p)))


def tet4_measures(vertices):
    """3-volumes of tetrahedra embedded in R^4, array (..., 4, 4)."""
    v = np.asarray(vertices, dtype=float)
    z = cross4(v[..., 1, :] - v[..., 0, :], v[..., 2, :] - v[..., 0, :], v[..., 3, :] - v[..., 0, :])
    return np.linalg.norm(z, axis=-1) / 6.0


def tet4_measure(t) -> float:
    v = t.vertices if isinstance(t, Tet4) else t
    return float(tet4_measures(v))


def tet3_volumes(vertices):
    """Volumes of spatial tetrahedra, array (..., 4, 3)."""
    v = np.asarray(vertices, dtype=float)
    return np.abs(np.linalg.det(v[..., 1:, :] - v[..., :1, :])) / 6.0


def space_time_normals(vertices, orientation_ref):
    """Batched unit normals of Tet4 patches (..., 4, 4).

    Returns ``(n, nu, raw_norm)``; ``n`` is flipped so that
    ``n . orientation_ref >= 0``. Degenerate patches get ``n = 0``.
    """
    v = np.asarray(vertices, dtype=float)
    z = cross4(v[..., 1, :] - v[..., 0, :], v[..., 2, :] - v[..., 0, :], v[..., 3, :] - v[..., 0, :])
    norm = np.linalg.norm(z, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    n = z / safe[..., None]
    flip = np.einsum("...i,...i->...", n, np.asarray(orientation_ref, dtype=float)) < 0
    n = np.where(flip[..., None], -n, n)
    n = np.where((norm > 0)[..., None], n, 0.0)
    nu = np.linalg.norm(n[..., :3], axis=-1)
    return n, nu, norm


def space_time_normal(t, orientation_ref) -> SpaceTimeNormal:
    """Unit normal of an interface patch oriented along ``orientation_ref``."""
    v = t.vertices if isinstance(t, Tet4) else np.asarray(t, dtype=float)
    n, _, norm = space_time_normals(v, orientation_ref)
    scale = max_edge_length(v)
    if norm < DEGENERACY_RTOL * scale**3 or norm == 0.0:
        raise DegenerateGeometry("interface patch is degenerate")
    return SpaceTimeNormal(n)


def barycentric_pentatope(p, x):
    """Barycentric coordinates of ``x`` (..., 4) with respect to pentatope ``p``."""
    v = _pentatope_array(p)
    pent = p if isinstance(p, Pentatope) else Pentatope(v)
    if pent.degenerate:
        raise DegenerateGeometry("barycentric coordinates of a degenerate pentatope")
    x = np.asarray(x, dtype=float)
    rhs = (x - v[0]).reshape(-1, 4).T
    tail = np.linalg.solve(pent.edge_matrix, rhs).T
    lam = np.concatenate([1.0 - tail.sum(axis=1, keepdims=True), tail], axis=1)
    return lam.reshape(x.shape[:-1] + (5,))


def contains(p, x, slack=1e-12) -> bool:
    lam = barycentric_pentatope(p, x)
    return bool(np.all(lam >= -slack) and np.all(lam <= 1 + slack))


REFERENCE_PENTATOPE = Pentatope(np.vstack([np.zeros(4), np.eye(4)]))
