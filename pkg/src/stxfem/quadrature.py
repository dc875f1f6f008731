"""Quadrature on reference simplices, prisms and intervals.

Reference domains
-----------------
interval    [0, 1]
triangle    conv{0, e1, e2}
tet         conv{0, e1, e2, e3}
pentatope   conv{0, e1, e2, e3, e4}
prism       tet x [0, 1]

Nodes are stored in reference coordinates; for simplices the barycentric
coordinates are ``(1 - sum(x), x_1, ..., x_d)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainMismatch, InvalidParameter, UnsupportedDegree
from .geom4d import Pentatope, Prism4, Tet4, pentatope_measures, tet4_measures

REFERENCE_MEASURE = {
    "interval": 1.0,
    "triangle": 1.0 / 2.0,
    "tet": 1.0 / 6.0,
    "pentatope": 1.0 / 24.0,
    "prism": 1.0 / 6.0,
}

SIMPLEX_DIM = {"interval": 1, "triangle": 2, "tet": 3, "pentatope": 4}

# Five-point pentatope rule coefficients (barycentric: P3_BETA at one vertex,
# P3_ALPHA at the other four).
P3_ALPHA = 0.118350341907227374
P3_BETA = 0.526598632371090503


@dataclass(frozen=True)
class QuadRule:
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    reference_domain: str
    weight_function: str = "1"  # "1" or "(1-t)^3" (interval only)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        weights = np.array(self.weights, dtype=float)
        if nodes.shape[0] != weights.shape[0]:
            raise ValueError("node and weight counts differ")
        if self.reference_domain not in REFERENCE_MEASURE:
            raise ValueError(f"unknown reference domain {self.reference_domain!r}")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    @property
    def barycentric(self):
        """Barycentric node coordinates (simplex domains only)."""
        if self.reference_domain not in SIMPLEX_DIM:
            raise DomainMismatch(f"{self.reference_domain} rule has no barycentric form")
        return np.hstack([1.0 - self.nodes.sum(axis=1, keepdims=True), self.nodes])

    def apply(self, f) -> float:
        """Integrate ``f`` over the reference domain; ``f`` maps (n, dim) -> (n,)."""
        return float(np.dot(self.weights, f(self.nodes)))


def _from_barycentric(bary, weights, degree, domain):
    bary = np.asarray(bary, dtype=float)
    return QuadRule(bary[:, 1:], weights, degree, domain)


def _orbit(pattern):
    """All distinct permutations of a barycentric pattern."""
    return sorted(set(itertools.permutations(pattern)))


def _symmetric(orbits, domain, degree):
    bary, weights = [], []
    for pattern, w in orbits:
        pts = _orbit(pattern)
        bary.extend(pts)
        weights.extend([w] * len(pts))
    return _from_barycentric(bary, weights, degree, domain)


# --- one-dimensional rules -------------------------------------------------

def _jacobi_recurrence(n, a, b):
    """Monic recurrence coefficients for weight (1-x)^a (1+x)^b on [-1, 1]."""
    k = np.arange(n, dtype=float)
    s = 2 * k + a + b
    alpha = np.empty(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha[:] = (b * b - a * a) / (s * (s + 2))
    alpha[0] = (b - a) / (a + b + 2)
    beta = np.zeros(n)
    kk = k[1:]
    ss = s[1:]
    beta[1:] = 4 * kk * (kk + a) * (kk + b) * (kk + a + b) / (ss**2 * (ss + 1) * (ss - 1))
    mu0 = 2.0 ** (a + b + 1) * math.gamma(a + 1) * math.gamma(b + 1) / math.gamma(a + b + 2)
    return alpha, beta, mu0


def _monic_eval(x, alpha, beta):
    """Value and derivative of the degree-n monic orthogonal polynomial."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    dp_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    for j in range(len(alpha)):
        p_next = (x - alpha[j]) * p - beta[j] * p_prev
        dp_next = p + (x - alpha[j]) * dp - beta[j] * dp_prev
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next
    return p, dp


def _golub_welsch(n, a, b):
    alpha, beta, mu0 = _jacobi_recurrence(n, a, b)
    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    x, vec = np.linalg.eigh(jac)
    w = mu0 * vec[0, :] ** 2
    p, dp = _monic_eval(x, alpha, beta)
    x = x - p / dp
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi_1d(n: int) -> QuadRule:
    """Gauss rule on [0, 1] for the weight (1 - t)^3.

    The returned weights already contain the weight function, so
    ``sum(w * g(t))`` approximates ``int_0^1 (1-t)^3 g(t) dt``.
    """
    if n < 1:
        raise InvalidParameter("Gauss-Jacobi rule needs at least one node")
    x, w = _golub_welsch(n, 3.0, 0.0)
    return QuadRule((1.0 + x) / 2.0, w / 16.0, 2 * n - 1, "interval", "(1-t)^3")


@lru_cache(maxsize=None)
def gauss_legendre_1d(n: int) -> QuadRule:
    if n < 1 or n > 20:
        raise InvalidParameter("Gauss-Legendre rules are provided for 1 <= n <= 20")
    x, w = _golub_welsch(n, 0.0, 0.0)
    return QuadRule((1.0 + x) / 2.0, w / 2.0, 2 * n - 1, "interval")


# --- triangle and tetrahedron tables ---------------------------------------

_SQ15 = math.sqrt(15.0)
_SQ5 = math.sqrt(5.0)


@lru_cache(maxsize=None)
def triangle_rule(q: int) -> QuadRule:
    if q == 1:
        return _symmetric([((1 / 3, 1 / 3, 1 / 3), 0.5)], "triangle", 1)
    if q == 2:
        return _symmetric([((2 / 3, 1 / 6, 1 / 6), 1 / 6)], "triangle", 2)
    if q == 3:
        return _symmetric(
            [((0.659027622374092, 0.231933368553031, 0.109039009072877), 1 / 12)], "triangle", 3
        )
    if q == 5:
        a1 = (6.0 - _SQ15) / 21.0
        a2 = (6.0 + _SQ15) / 21.0
        return _symmetric(
            [
                ((1 / 3, 1 / 3, 1 / 3), 9.0 / 80.0),
                ((a1, a1, 1 - 2 * a1), (155.0 - _SQ15) / 2400.0),
                ((a2, a2, 1 - 2 * a2), (155.0 + _SQ15) / 2400.0),
            ],
            "triangle",
            5,
        )
    raise UnsupportedDegree(f"no triangle rule of degree {q}; shipped: 1, 2, 3, 5")


@lru_cache(maxsize=None)
def tet_rule(q: int) -> QuadRule:
    if q == 1:
        return _symmetric([((0.25, 0.25, 0.25, 0.25), 1 / 6)], "tet", 1)
    if q == 2:
        a = (5.0 - _SQ5) / 20.0
        return _symmetric([((a, a, a, 1 - 3 * a), 1 / 24)], "tet", 2)
    if q == 3:
        # two vertex-type orbits, all weights positive
        a1 = 0.1
        a2 = 0.32764850886063627629
        return _symmetric(
            [
                ((a1, a1, a1, 1 - 3 * a1), 0.016369233213599006407),
                ((a2, a2, a2, 1 - 3 * a2), 0.025297433453067660259),
            ],
            "tet",
            3,
        )
    if q == 5:
        a1 = 0.0927352503108912
        a2 = 0.3108859192633006
        a3 = 0.0455037041256496
        return _symmetric(
            [
                ((a1, a1, a1, 1 - 3 * a1), 0.01224884051939366),
                ((a2, a2, a2, 1 - 3 * a2), 0.01878132095300264),
                ((a3, a3, 0.5 - a3, 0.5 - a3), 0.007091003462846911),
            ],
            "tet",
            5,
        )
    raise UnsupportedDegree(f"no tetrahedron rule of degree {q}; shipped: 1, 2, 3, 5")


# --- pentatope rules --------------------------------------------------------

def pentatope_rule_p1() -> QuadRule:
    """Vertex rule, exact for affine functions."""
    return _from_barycentric(np.eye(5), np.full(5, 1.0 / 120.0), 1, "pentatope")


def pentatope_rule_p3() -> QuadRule:
    """Five-point symmetric rule with O(h^3) accuracy.

    It integrates quadratics exactly (cubics are not), hence
    ``exactness_degree == 2``.
    """
    bary = np.full((5, 5), P3_ALPHA)
    np.fill_diagonal(bary, P3_BETA)
    return _from_barycentric(bary, np.full(5, 1.0 / 120.0), 2, "pentatope")


@lru_cache(maxsize=None)
def pentatope_rule_duffy(q: int) -> QuadRule:
    """Collapsed tensor rule: tetrahedron rule of degree q times Gauss-Jacobi in t.

    A node ``(y~, t)`` of the tensor product maps to ``((1 - t) y~, t)``;
    the ``(1 - t)^3`` Jacobian is carried by the Gauss-Jacobi weights.
    """
    if q < 1:
        raise InvalidParameter("degree must be positive")
    tet = tet_rule(q)
    jac = gauss_jacobi_1d(math.ceil((q + 1) / 2))
    t = jac.nodes[:, 0]
    nodes = np.concatenate(
        [(1.0 - t[:, None, None]) * tet.nodes[None, :, :], np.broadcast_to(t[:, None, None], (len(t), len(tet), 1))],
        axis=2,
    ).reshape(-1, 4)
    weights = (jac.weights[:, None] * tet.weights[None, :]).reshape(-1)
    return QuadRule(nodes, weights, q, "pentatope")


def prism_tensor_rule(spatial_q: int, temporal_n: int) -> QuadRule:
    """Product of ``tet_rule(spatial_q)`` with ``gauss_legendre_1d(temporal_n)``."""
    tet = tet_rule(spatial_q)
    gl = gauss_legendre_1d(temporal_n)
    nodes = np.array([np.append(x, s) for x in tet.nodes for s in gl.nodes[:, 0]])
    weights = np.outer(tet.weights, gl.weights).reshape(-1)
    return QuadRule(nodes, weights, min(spatial_q, 2 * temporal_n - 1), "prism")


# --- mapping and integration ----------------------------------------------

def map_simplex_rule(vertices, rule: QuadRule, measures=None):
    """Physical points and weights of ``rule`` on a batch of simplices.

    vertices : array (N, k+1, D)
    measures : optional precomputed simplex measures (N,)

    Returns points (N, nq, D) and weights (N, nq).
    """
    vertices = np.asarray(vertices, dtype=float)
    pts = np.einsum("qi,nid->nqd", rule.barycentric, vertices)
    if measures is None:
        k = vertices.shape[-2] - 1
        if k == 4:
            measures = pentatope_measures(vertices)
        elif k == 3 and vertices.shape[-1] == 4:
            measures = tet4_measures(vertices)
        else:
            edges = vertices[:, 1:, :] - vertices[:, :1, :]
            gram = np.einsum("nid,njd->nij", edges, edges)
            measures = np.sqrt(np.abs(np.linalg.det(gram))) / math.factorial(k)
    scale = np.asarray(measures) / REFERENCE_MEASURE[rule.reference_domain]
    return pts, scale[:, None] * rule.weights[None, :]


def map_prism_rule(prism: Prism4, rule: QuadRule):
    bary = np.hstack([1.0 - rule.nodes[:, :3].sum(axis=1, keepdims=True), rule.nodes[:, :3]])
    pts = bary @ prism.base + rule.nodes[:, 3:4] * prism.extrusion[None, :]
    return pts, rule.weights * (prism.measure / REFERENCE_MEASURE["prism"])


def integrate(region, rule: QuadRule, f) -> float:
    """Integrate ``f`` (points (M, 4) -> values (M,)) over a region.

    ``region`` is a Prism4, a sequence of Pentatope or Tet4, or a vertex
    array of shape (N, 5, 4) / (N, 4, 4). Tetrahedra are integrated with
    their embedded 3-measure.
    """
    if isinstance(region, Prism4):
        if rule.reference_domain != "prism":
            raise DomainMismatch("prism regions need a prism rule")
        pts, w = map_prism_rule(region, rule)
        return float(np.dot(w, f(pts)))

    if isinstance(region, (list, tuple)):
        if len(region) == 0:
            return 0.0
        if all(isinstance(r, Pentatope) for r in region):
            verts = np.array([r.vertices for r in region])
        elif all(isinstance(r, Tet4) for r in region):
            verts = np.array([r.vertices for r in region])
        else:
            raise DomainMismatch("mixed or unsupported region list")
    else:
        verts = np.asarray(region, dtype=float)
        if verts.ndim == 2:
            verts = verts[None]
    if verts.shape[0] == 0:
        return 0.0
    kind = {5: "pentatope", 4: "tet"}.get(verts.shape[1])
    if kind != rule.reference_domain:
        raise DomainMismatch(f"{rule.reference_domain} rule applied to {kind} region")
    pts, w = map_simplex_rule(verts, rule)
    vals = f(pts.reshape(-1, pts.shape[-1])).reshape(w.shape)
    return float(np.sum(w * vals))


def simplex_monomial_integral(exponents) -> float:
    """Exact integral of prod x_i^a_i over the unit simplex of dimension len(a)."""
    exponents = [int(a) for a in exponents]
    d = len(exponents)
    return math.prod(math.factorial(a) for a in exponents) / math.factorial(sum(exponents) + d)


def monomial_integral(rule: QuadRule, exponents) -> float:
    """Exact integral of ``prod x_i^a_i`` (times the rule's weight function)
    over the rule's reference domain."""
    a = [int(e) for e in exponents]
    dom = rule.reference_domain
    if dom == "interval":
        if rule.weight_function == "(1-t)^3":
            return math.factorial(a[0]) * 6 / math.factorial(a[0] + 4)
        return 1.0 / (a[0] + 1)
    if dom == "prism":
        return simplex_monomial_integral(a[:3]) / (a[3] + 1)
    return simplex_monomial_integral(a)


def rule_exactness_error(rule: QuadRule, degree=None) -> float:
    """Largest relative error over all monomials of total degree <= ``degree``."""
    degree = rule.exactness_degree if degree is None else degree
    dim = rule.nodes.shape[1]
    worst = 0.0
    for exps in itertools.product(range(degree + 1), repeat=dim):
        if sum(exps) > degree:
            continue
        exact = monomial_integral(rule, exps)
        approx = float(np.dot(rule.weights, np.prod(rule.nodes ** np.array(exps), axis=1)))
        worst = max(worst, abs(approx - exact) / abs(exact))
    return worst


def shipped_rules():
    """All rules provided by the module, keyed by a short label."""
    rules = {"pentatope-p1": pentatope_rule_p1(), "pentatope-p3": pentatope_rule_p3()}
    for q in (1, 2, 3, 5):
        rules[f"tet-{q}"] = tet_rule(q)
        rules[f"triangle-{q}"] = triangle_rule(q)
    for q in (1, 2, 3, 5):
        rules[f"pentatope-duffy-{q}"] = pentatope_rule_duffy(q)
    for n in (1, 2, 3, 5, 10, 20):
        rules[f"gauss-legendre-{n}"] = gauss_legendre_1d(n)
    for n in (1, 2, 3, 5, 10):
        rules[f"gauss-jacobi-{n}"] = gauss_jacobi_1d(n)
    return rules
