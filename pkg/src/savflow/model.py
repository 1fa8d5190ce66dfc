"""Nonlinear potential, auxiliary-variable bookkeeping, and energies.

The gradient flow dissipates E(phi) = integral(eps2/2 |grad phi|^2 + F(phi)).
The stabilized split moves (lam/2) phi^2 into the linear part, leaving
g(phi) = F(phi) - (lam/2) phi^2, and introduces the scalar

    r(t) = sqrt(E1(phi)),    E1(phi) = integral(g(phi)) + c0,

which the scheme evolves alongside phi.  E1 must stay positive; see
``e1`` for the failure mode.  The relaxation function V(xi) multiplying
the nonlinear term satisfies V(1) = 1 and V'(1) = -1 so that xi*V(xi)
approximates 1 to second order in (xi - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import EnergyShiftTooSmall
from .spectral import Field, h1_seminorm, inner, l2_norm


@dataclass(frozen=True)
class Potential:
    """Pointwise potential F with analytic derivative and a smoothness tag."""

    name: str
    f: callable
    fprime: callable
    smoothness: str = "Cinf"


def _check_derivative(f, fprime, points, tol=1e-6, h=1e-5):
    for x in points:
        cd = (f(x + h) - f(x - h)) / (2.0 * h)
        if abs(cd - fprime(x)) > tol:
            raise ValueError(
                f"fprime is not the derivative of f at x={x:g}: "
                f"central difference {cd:.8g} vs analytic {fprime(x):.8g}"
            )


def make_potential(name, f, fprime, smoothness="Cinf") -> Potential:
    """Validate the derivative pair by central differences and wrap it."""
    _check_derivative(f, fprime, np.linspace(-2.0, 2.0, 9))
    return Potential(name=name, f=f, fprime=fprime, smoothness=smoothness)


def double_well() -> Potential:
    """F(phi) = (phi^2 - 1)^2 / 4, F'(phi) = phi^3 - phi."""
    return Potential(
        name="double-well",
        f=lambda x: 0.25 * (x**2 - 1.0) ** 2,
        fprime=lambda x: x**3 - x,
    )


# V(xi) registry: name -> (V, V').  Every kind except "one" satisfies
# V(1) = 1 and V'(1) = -1.  "one" (V identically 1) is the relaxation
# the first-order starting step uses and is exempt from the derivative
# condition by construction.
_V_KINDS = {
    "linear": (lambda xi: 2.0 - xi, lambda xi: -1.0),
    "exponential": (lambda xi: math.exp(1.0 - xi), lambda xi: -math.exp(1.0 - xi)),
    "sine": (lambda xi: 1.0 + math.sin(1.0 - xi), lambda xi: -math.cos(1.0 - xi)),
    "one": (lambda xi: 1.0, lambda xi: 0.0),
}


def v_of_xi(kind: str, xi: float) -> float:
    try:
        return _V_KINDS[kind][0](xi)
    except KeyError:
        raise ValueError(f"unknown V kind {kind!r}; known: {sorted(_V_KINDS)}") from None


def v_prime_of_xi(kind: str, xi: float) -> float:
    try:
        return _V_KINDS[kind][1](xi)
    except KeyError:
        raise ValueError(f"unknown V kind {kind!r}; known: {sorted(_V_KINDS)}") from None


def v_kinds() -> tuple:
    return tuple(sorted(_V_KINDS))


FLOWS = ("L2", "Hminus1")


@dataclass(frozen=True)
class SchemeParams:
    """Model and scheme constants.

    eps2 : interface parameter eps^2 (> 0)
    lam : stabilization constant lambda (>= 0)
    c0 : additive shift in E1 (admissibility is checked at run time)
    sigma : stencil parameter in [1/2, 1]; 1 is classical BDF2
    v_kind : relaxation function selector (see ``v_kinds``)
    flow : "L2" (phi_t = -mu) or "Hminus1" (phi_t = Laplacian(mu))
    potential : pointwise potential, double-well by default
    """

    eps2: float
    lam: float
    c0: float
    sigma: float
    v_kind: str = "linear"
    flow: str = "L2"
    potential: Potential = dc_field(default_factory=double_well)

    def __post_init__(self):
        if not self.eps2 > 0:
            raise ValueError(f"eps2 must be positive, got {self.eps2}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if not 0.5 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [1/2, 1], got {self.sigma}")
        if self.flow not in FLOWS:
            raise ValueError(f"flow must be one of {FLOWS}, got {self.flow!r}")
        if self.v_kind not in _V_KINDS:
            raise ValueError(
                f"unknown V kind {self.v_kind!r}; known: {sorted(_V_KINDS)}"
            )
        if self.v_kind != "one":
            v1 = v_of_xi(self.v_kind, 1.0)
            if abs(v1 - 1.0) > 1e-12:
                raise ValueError(f"V(1) = {v1!r} != 1 for kind {self.v_kind!r}")
            h = 1e-6
            cd = (v_of_xi(self.v_kind, 1.0 + h) - v_of_xi(self.v_kind, 1.0 - h)) / (2 * h)
            if abs(cd + 1.0) > 1e-6:
                raise ValueError(
                    f"V'(1) = {cd:.8g} != -1 (central difference) for kind {self.v_kind!r}"
                )


def g_value(phi: Field, p: SchemeParams) -> Field:
    """g(phi) = F(phi) - (lam/2) phi^2, pointwise."""
    return Field(phi.grid, p.potential.f(phi.data) - 0.5 * p.lam * phi.data**2)


def g_prime(phi: Field, p: SchemeParams) -> Field:
    """g'(phi) = F'(phi) - lam*phi, pointwise."""
    return Field(phi.grid, p.potential.fprime(phi.data) - p.lam * phi.data)


def quad_g(phi: Field, p: SchemeParams) -> float:
    """Quadrature of g(phi) over the domain."""
    return phi.grid.cell_area * float(np.sum(g_value(phi, p).data))


def e1(phi: Field, p: SchemeParams, where: str = "") -> float:
    """E1(phi) = integral(g(phi)) + c0.

    Raises EnergyShiftTooSmall when the result is not positive; the
    error carries the shift that would have made E1 = 1.
    """
    q = quad_g(phi, p)
    value = q + p.c0
    if value <= 0.0:
        raise EnergyShiftTooSmall(value, q, p.c0, where=where)
    return value


def energy(phi: Field, p: SchemeParams) -> float:
    """Free energy E(phi) = eps2/2 |grad phi|^2 + integral(F(phi))."""
    bulk = phi.grid.cell_area * float(np.sum(p.potential.f(phi.data)))
    return 0.5 * p.eps2 * h1_seminorm(phi) ** 2 + bulk


def modified_energy(phi: Field, r: float, p: SchemeParams) -> float:
    """E_Mod = eps2/2 |grad phi|^2 + lam/2 |phi|^2 + r^2.

    At r = sqrt(E1(phi)) this equals E(phi) + c0 exactly.
    """
    return (
        0.5 * p.eps2 * h1_seminorm(phi) ** 2
        + 0.5 * p.lam * l2_norm(phi) ** 2
        + r * r
    )


def inner_gprime(gps: Field, v: Field) -> float:
    """Convenience: quadrature inner product (g'(phi*), v)."""
    return inner(gps, v)
