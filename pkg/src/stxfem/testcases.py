"""Manufactured two-phase problems with moving interfaces.

Moving plane: phase 1 is the band ``|x1 - q(x2, x3) - r(t)| <= D/2`` in the
periodic box [0, 2]^3 and ``u = sin(k pi t) U_m(y)`` with
``y = x1 - q - r``, ``U_1 = a y + b y^3``, ``U_2 = sin(pi y)``.

Moving sphere: phase 1 is the ball of radius ``R`` around
``p(t) = p0 + r(t) e1`` and ``u = sin(k pi t) U_m(rho)`` with
``U_1 = a + b rho^2``, ``U_2 = cos(pi rho)``, Dirichlet data on the box.

In both cases ``w = (r'(t), 0, 0)`` and the convective terms cancel against
the time derivative of the moving argument, so the sources reduce to
``f = k pi cos(k pi t) U - alpha sin(k pi t) Delta U``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .interface import LevelSet
from .solver import solve_interface_coefficients


@dataclass
class ManufacturedCase:
    name: str
    level_set: LevelSet
    velocity: Callable
    exact: Callable  # exact(x, t, phase)
    source: Callable  # source(x, t, phase)
    alpha: tuple
    beta: tuple
    T: float
    periodic: bool
    coefficients: dict = field(default_factory=dict)
    extent: float = 2.0
    gradient: Callable = None  # gradient(x, t, phase) -> (..., 3)

    def phase(self, x, t):
        return (self.level_set(x, t) >= 0).astype(int)

    def u(self, x, t):
        """Exact solution with the phase taken from the level-set sign."""
        return self.exact(x, t, self.phase(x, t))

    def interface_points(self, n, t, rng):
        """Random points on the exact interface at time ``t``."""
        raise NotImplementedError


def _select(phase, u1, u2):
    return np.where(np.asarray(phase) == 0, u1, u2)


class _MovingPlane(ManufacturedCase):
    def interface_points(self, n, t, rng):
        x23 = rng.uniform(0, self.extent, size=(n, 2))
        side = rng.choice([-1.0, 1.0], size=n)
        d = self.coefficients["D"]
        qv = self.coefficients["q"](x23[:, 0], x23[:, 1])
        x1 = qv + self.coefficients["r"](t) + side * d / 2
        return np.column_stack([x1, x23]), np.full(n, t)


class _MovingSphere(ManufacturedCase):
    def interface_points(self, n, t, rng):
        d = rng.normal(size=(n, 3))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        c = self.coefficients["center"](np.full(n, t))
        return c + self.coefficients["R"] * d, np.full(n, t)


def case_moving_plane(planar=True, k=1.0, alpha=(1.0, 2.0), beta=(1.5, 1.0), D=2.0 / 3.0, T=1.0):
    """Quasi one-dimensional band problem; ``planar`` selects the linearly
    moving flat band, otherwise the curved, oscillating band."""
    a, b = solve_interface_coefficients("plane", alpha, beta, D)

    if planar:
        def q(x2, x3):
            return np.ones_like(x2)

        def q_grad(x2, x3):
            return np.zeros_like(x2), np.zeros_like(x2)

        def q_lap(x2, x3):
            return np.zeros_like(x2)

        def r(t):
            return 0.25 * np.asarray(t, dtype=float)

        def dr(t):
            return np.full(np.shape(t), 0.25)
    else:
        def q(x2, x3):
            return 7 / 8 + 0.25 * x2**2 * (2 - x2) ** 2

        def q_grad(x2, x3):
            return x2 * (2 - x2) * (1 - x2), np.zeros_like(x2)

        def q_lap(x2, x3):
            return 3 * x2**2 - 6 * x2 + 2

        def r(t):
            return np.sin(2 * np.pi * np.asarray(t, dtype=float)) / (4 * np.pi)

        def dr(t):
            return 0.5 * np.cos(2 * np.pi * np.asarray(t, dtype=float))

    def y_of(x, t):
        return x[..., 0] - q(x[..., 1], x[..., 2]) - r(t)

    def U(y, phase):
        return _select(phase, a * y + b * y**3, np.sin(np.pi * y))

    def dU(y, phase):
        return _select(phase, a + 3 * b * y**2, np.pi * np.cos(np.pi * y))

    def d2U(y, phase):
        return _select(phase, 6 * b * y, -np.pi**2 * np.sin(np.pi * y))

    def phi(x, t):
        return np.abs(y_of(x, t)) - D / 2

    def phi_grad(x, t):
        y = y_of(x, t)
        g2, g3 = q_grad(x[..., 1], x[..., 2])
        s = np.sign(y)
        return np.stack([s, -s * g2, -s * g3, -s * dr(t)], axis=-1)

    def velocity(x, t):
        z = np.zeros(np.shape(t))
        return np.stack([dr(t) + z, z, z], axis=-1)

    def exact(x, t, phase):
        return np.sin(k * np.pi * t) * U(y_of(x, t), phase)

    def gradient(x, t, phase):
        y = y_of(x, t)
        g2, g3 = q_grad(x[..., 1], x[..., 2])
        c = np.sin(k * np.pi * t) * dU(y, phase)
        return np.stack([c, -c * g2, -c * g3], axis=-1)

    def source(x, t, phase):
        y = y_of(x, t)
        g2, g3 = q_grad(x[..., 1], x[..., 2])
        al = np.where(np.asarray(phase) == 0, alpha[0], alpha[1])
        lap = d2U(y, phase) * (1 + g2**2 + g3**2) - dU(y, phase) * q_lap(x[..., 1], x[..., 2])
        return k * np.pi * np.cos(k * np.pi * t) * U(y, phase) - al * np.sin(k * np.pi * t) * lap

    ls = LevelSet(phi, phi_grad, lipschitz=1.3, scale=2.0)
    return _MovingPlane(
        "moving_plane_planar" if planar else "moving_plane_curved",
        ls, velocity, exact, source, tuple(alpha), tuple(beta), T, True,
        {"a": a, "b": b, "k": k, "D": D, "q": q, "r": r, "U": U, "dU": dU},
        gradient=gradient,
    )


def case_moving_sphere(k=1.0, alpha=(10.0, 20.0), beta=(2.0, 1.0), R=1.0 / 3.0, p0=(0.5, 1.0, 1.0), T=0.5):
    a, b = solve_interface_coefficients("sphere", alpha, beta, R)
    p0 = np.asarray(p0, dtype=float)

    def r(t):
        return np.sin(2 * np.pi * np.asarray(t, dtype=float)) / (4 * np.pi)

    def dr(t):
        return 0.5 * np.cos(2 * np.pi * np.asarray(t, dtype=float))

    def center(t):
        t = np.asarray(t, dtype=float)
        c = np.broadcast_to(p0, t.shape + (3,)).copy()
        c[..., 0] += r(t)
        return c

    def rho_of(x, t):
        return np.linalg.norm(x - center(t), axis=-1)

    def U(y, phase):
        return _select(phase, a + b * y**2, np.cos(np.pi * y))

    def dU(y, phase):
        return _select(phase, 2 * b * y, -np.pi * np.sin(np.pi * y))

    def lapU(y, phase):
        safe = np.where(y > 1e-12, y, 1.0)
        u2 = np.where(y > 1e-12, -np.pi**2 * np.cos(np.pi * y) - 2 * np.pi * np.sin(np.pi * y) / safe, -3 * np.pi**2)
        return _select(phase, 6 * b, u2)

    def phi(x, t):
        return rho_of(x, t) - R

    def phi_grad(x, t):
        d = x - center(t)
        rho = np.linalg.norm(d, axis=-1)
        n = d / np.where(rho > 0, rho, 1.0)[..., None]
        return np.concatenate([n, (-n[..., 0] * dr(t))[..., None]], axis=-1)

    def velocity(x, t):
        z = np.zeros(np.shape(t))
        return np.stack([dr(t) + z, z, z], axis=-1)

    def exact(x, t, phase):
        return np.sin(k * np.pi * t) * U(rho_of(x, t), phase)

    def gradient(x, t, phase):
        d = x - center(t)
        rho = np.linalg.norm(d, axis=-1)
        c = np.sin(k * np.pi * t) * dU(rho, phase) / np.where(rho > 0, rho, 1.0)
        return c[..., None] * d

    def source(x, t, phase):
        rho = rho_of(x, t)
        al = np.where(np.asarray(phase) == 0, alpha[0], alpha[1])
        return k * np.pi * np.cos(k * np.pi * t) * U(rho, phase) - al * np.sin(k * np.pi * t) * lapU(rho, phase)

    ls = LevelSet(phi, phi_grad, lipschitz=1.2, scale=2.0)
    return _MovingSphere(
        "moving_sphere", ls, velocity, exact, source, tuple(alpha), tuple(beta), T, False,
        {"a": a, "b": b, "k": k, "R": R, "p0": p0, "r": r, "center": center, "U": U},
        gradient=gradient,
    )


CASES = {
    "moving_plane_planar": lambda **kw: case_moving_plane(True, **kw),
    "moving_plane_curved": lambda **kw: case_moving_plane(False, **kw),
    "moving_sphere": case_moving_sphere,
}


def get_case(name, **kw) -> ManufacturedCase:
    try:
        return CASES[name](**kw)
    except KeyError:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None


def pde_residual(case: ManufacturedCase, x, t, phase, step=1e-5):
    """``du/dt + w . grad u - alpha Lap u - f`` by central differences."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    u = lambda xx, tt: case.exact(xx, tt, phase)  # noqa: E731
    dudt = (u(x, t + step) - u(x, t - step)) / (2 * step)
    grad = np.empty(x.shape)
    lap = np.zeros(x.shape[:-1])
    u0 = u(x, t)
    for d in range(3):
        e = np.zeros(3)
        e[d] = step
        up, um = u(x + e, t), u(x - e, t)
        grad[..., d] = (up - um) / (2 * step)
        lap += (up - 2 * u0 + um) / step**2
    al = np.where(np.asarray(phase) == 0, case.alpha[0], case.alpha[1])
    w = case.velocity(x, t)
    return dudt + (w * grad).sum(-1) - al * lap - case.source(x, t, phase)


def interface_residuals(case: ManufacturedCase, n=100, t=None, seed=0):
    """Residuals of the Henry and flux conditions at random interface points.

    Returns ``(henry, flux)`` arrays; the normal is the level-set gradient and
    both phase extensions are evaluated at the same point.
    """
    rng = np.random.default_rng(seed)
    t = case.T / 2 if t is None else t
    x, tt = case.interface_points(n, t, rng)
    b1, b2 = case.beta
    a1, a2 = case.alpha
    henry = b2 * case.exact(x, tt, 1) - b1 * case.exact(x, tt, 0)
    g = case.level_set.gradient(x, tt)[:, :3]
    nrm = g / np.linalg.norm(g, axis=1, keepdims=True)

    def dn(phase):
        return (case.gradient(x, tt, phase) * nrm).sum(-1)

    flux = a2 * dn(1) - a1 * dn(0)
    return henry, flux
