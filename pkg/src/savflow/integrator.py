"""Time-stepping kernels for the variable-step IMEX BDF2 scheme.

The flow is phi_t = G_H mu with mu = -eps2*Laplacian(phi) + F'(phi),
where G_H = -I selects the L2 flow and G_H = Laplacian the H^-1 flow.
After the stabilized auxiliary-variable split (see ``model``), one step
of size dt_{n+1} with ratio gamma = dt_{n+1}/dt_n solves

    F2 phi = G_H [ (-eps2*Lap + lam) phi^{n+sigma}
                   + (r^{n+1}/sqrt(E1^n)) V(xi^{n+1}) g'(phi*) ],

    (r^{n+1} - r^n)/dt = ( V(xi^{n+1}) / (2 sqrt(E1^n)) )
                         * ( g'(phi*), (phi^{n+1} - phi^n)/dt ),

with xi^{n+1} = r^{n+1}/sqrt(E1^n), phi^{n+sigma} = sigma*phi^{n+1} +
(1-sigma)*phi^n, the extrapolant phi* = phi^n + sigma*gamma*(phi^n -
phi^{n-1}), and F2 the sigma-weighted two-step stencil (``bdf2_coeffs``).

Because the nonlinear term enters through the scalar pair (r, xi) only,
the field solve splits into two constant-coefficient problems

    (alpha - sigma*G_H(-eps2*Lap + lam)) phi_1 = h(phi^n, phi^{n-1}),
    (alpha - sigma*G_H(-eps2*Lap + lam)) phi_2 = G_H g'(phi*),

with alpha = (1 + 2*sigma*gamma)/(dt*(1 + gamma)), after which
phi^{n+1} = phi_1 + xi*V(xi)*phi_2 and xi solves the scalar equation
W(xi) = 0 handled by ``newton_xi``.  The two solves are independent.

Stability is governed by the kernel G(s, z) (``g_stability``): the
discrete energy E_H (``discrete_energy_H``) is non-increasing whenever
all step ratios stay at or below the positive root gamma** of
G(z, z) = 0 (``gamma_star_star``), for any step sizes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import (
    NewtonSingularError,
    SingularScalarDenominator,
    StepRatioError,
    StepRatioWarning,
)
from .model import (
    SchemeParams,
    e1,
    energy,
    g_prime,
    modified_energy,
    v_of_xi,
    v_prime_of_xi,
)
from .spectral import (
    Field,
    apply_laplacian,
    dealias,
    hminus1_norm,
    inner,
    l2_norm,
    mean,
    solve_symbol,
)


# ---------------------------------------------------------------------------
# Stencil and stability algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bdf2Coeffs:
    """Stencil weights (1/time units): F2 phi = a_np1*phi^{n+1} + a_n*phi^n + a_nm1*phi^{n-1}."""

    a_np1: float
    a_n: float
    a_nm1: float


def _validate_stencil_args(gamma, sigma, dt):
    if not gamma > 0:
        raise ValueError(f"step ratio must be positive, got {gamma}")
    if not dt > 0:
        raise ValueError(f"step size must be positive, got {dt}")
    if not 0.5 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")


def bdf2_coeffs(gamma: float, sigma: float, dt_np1: float) -> Bdf2Coeffs:
    """Variable-step second-order stencil weights.

    a_np1 = (1 + 2*sigma*gamma) / ((1 + gamma) * dt)
    a_n   = -(1 + (2*sigma - 1)*gamma) / dt
    a_nm1 = (2*sigma - 1) * gamma^2 / ((1 + gamma) * dt)

    At sigma = 1, gamma = 1 this is the classical (1.5, -2, 0.5)/dt;
    at sigma = 1/2 it degenerates to the backward difference
    (phi^{n+1} - phi^n)/dt for every gamma.
    """
    _validate_stencil_args(gamma, sigma, dt_np1)
    two_sigma_m1 = 2.0 * sigma - 1.0
    a_np1 = (1.0 + 2.0 * sigma * gamma) / ((1.0 + gamma) * dt_np1)
    a_n = -(1.0 + two_sigma_m1 * gamma) / dt_np1
    a_nm1 = two_sigma_m1 * gamma**2 / ((1.0 + gamma) * dt_np1)
    return Bdf2Coeffs(a_np1, a_n, a_nm1)


def g_stability(s: float, z: float, sigma: float) -> float:
    """Stability kernel G(s, z).

    G(s, z) = (2 + 4*sigma*s - (2*sigma - 1)*s^{3/2}) / (1 + s)
              - (2*sigma - 1) * z^{3/2} / (1 + z)

    G(0, 0) = 2 for every sigma; G is non-increasing in z.
    """
    if s < 0 or z < 0:
        raise ValueError(f"G(s, z) needs s, z >= 0, got ({s}, {z})")
    if not 0.5 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
    two_sigma_m1 = 2.0 * sigma - 1.0
    return (2.0 + 4.0 * sigma * s - two_sigma_m1 * s**1.5) / (1.0 + s) - (
        two_sigma_m1 * z**1.5 / (1.0 + z)
    )


@lru_cache(maxsize=None)
def gamma_star_star(sigma: float) -> float:
    """Largest admissible step ratio: the positive root of G(z, z) = 0.

    Monotone decreasing in sigma; approximately 4.8645 at sigma = 1.
    At sigma = 1/2 the kernel G(z, z) = 2 has no root and every ratio is
    admissible: the function returns ``math.inf`` as the documented
    unbounded sentinel.
    """
    if not 0.5 <= sigma <= 1.0:
        raise ValueError(f"sigma must lie in [1/2, 1], got {sigma}")
    if sigma == 0.5:
        return math.inf

    def f(z):
        return g_stability(z, z, sigma)

    lo, hi = 0.0, 2.0
    while f(hi) > 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 2**60:  # pragma: no cover - unreachable for sigma > 1/2
            raise RuntimeError("failed to bracket the stability root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def history_weight(gamma: float, sigma: float) -> float:
    """Weight (2*sigma - 1) * gamma^{3/2} / (2*(1 + gamma)) of the energy history term."""
    if not gamma > 0:
        raise ValueError(f"step ratio must be positive, got {gamma}")
    return (2.0 * sigma - 1.0) * gamma**1.5 / (2.0 * (1.0 + gamma))


# ---------------------------------------------------------------------------
# State and per-step diagnostics
# ---------------------------------------------------------------------------

@dataclass
class StepState:
    """The integrator window after step ``step_index``.

    phi_nm1 is None only at step_index = 0; dt_n is the size of the last
    step taken (0.0 before any step).  e1_n caches E1(phi_n) > 0.
    """

    phi_n: Field
    phi_nm1: Optional[Field]
    r_n: float
    dt_n: float
    t_n: float
    step_index: int
    e1_n: float


@dataclass
class StepRecord:
    """Scalar diagnostics of one completed step.

    ``history_term`` holds |phi^{n+1} - phi^n|_star^2 / dt_{n+1} (star =
    L2 norm for the L2 flow, inverse-gradient norm for the H^-1 flow) so
    the discrete energy can be re-weighted once the *next* step ratio is
    known; ``discrete_energy_H`` as emitted by a step uses a provisional
    next-ratio of 1 and is finalized by the run driver.
    """

    step: int
    t_np1: float
    dt_np1: float
    gamma_np1: float
    xi: float
    r: float
    energy: float
    modified_energy: float
    discrete_energy_H: float
    newton_residual: float
    mass: float
    h2_seminorm: float
    history_term: float


def initial_state(phi0: Field, p: SchemeParams) -> StepState:
    """Wrap initial data: r^0 = sqrt(E1(phi^0))."""
    e10 = e1(phi0, p, where="t = 0")
    return StepState(
        phi_n=phi0, phi_nm1=None, r_n=math.sqrt(e10),
        dt_n=0.0, t_n=0.0, step_index=0, e1_n=e10,
    )


# ---------------------------------------------------------------------------
# Flow plumbing
# ---------------------------------------------------------------------------

def apply_gh(f: Field, flow: str) -> Field:
    """Apply G_H: -I for the L2 flow, the Laplacian for the H^-1 flow."""
    if flow == "L2":
        return Field(f.grid, -f.data)
    return apply_laplacian(f)


def _solve_flow_operator(alpha: float, sigma: float, p: SchemeParams, rhs: Field) -> Field:
    """Solve (alpha - sigma*G_H(-eps2*Lap + lam)) u = rhs.

    The operator reduces to a positive symbol in either flow:
    L2:  alpha + sigma*lam + sigma*eps2*|k|^2
    H^-1: alpha + sigma*lam*|k|^2 + sigma*eps2*|k|^4
    """
    if p.flow == "L2":
        return solve_symbol(alpha + sigma * p.lam, sigma * p.eps2, 0.0, rhs)
    return solve_symbol(alpha, sigma * p.lam, sigma * p.eps2, rhs)


def _gprime_star(phi_star: Field, p: SchemeParams) -> Field:
    gps = g_prime(phi_star, p)
    if phi_star.grid.dealias:
        gps = dealias(gps)
    return gps


def _star_sq(increment: Field, flow: str) -> float:
    """Squared star-norm of a solution increment (L2 or inverse-gradient)."""
    if flow == "L2":
        return l2_norm(increment) ** 2
    return hminus1_norm(increment) ** 2


# ---------------------------------------------------------------------------
# Scheme pieces
# ---------------------------------------------------------------------------

def extrapolate(phi_n: Field, phi_nm1: Field, sigma: float, gamma: float) -> Field:
    """phi* = phi^n + sigma*gamma*(phi^n - phi^{n-1})."""
    from .spectral import _require_same_grid

    _require_same_grid(phi_n, phi_nm1)
    sg = sigma * gamma
    return Field(phi_n.grid, (1.0 + sg) * phi_n.data - sg * phi_nm1.data)


def vbdf2_rhs(phi_n: Field, phi_nm1: Field, gamma: float, sigma: float,
              dt: float, p: SchemeParams) -> Field:
    """History right-hand side h(phi^n, phi^{n-1}) of the split solve.

    h = (1/dt) [ (1 + (2*sigma - 1)*gamma) phi^n
                 - ((2*sigma - 1)*gamma^2/(1 + gamma)) phi^{n-1} ]
        + (1 - sigma) * G_H(-eps2*Lap + lam) phi^n

    i.e. minus the known stencil terms plus the explicit (1 - sigma)
    share of the implicit operator; the last term vanishes at sigma = 1.
    """
    c = bdf2_coeffs(gamma, sigma, dt)
    data = -c.a_n * phi_n.data - c.a_nm1 * phi_nm1.data
    if sigma < 1.0:
        w = Field(phi_n.grid, -p.eps2 * apply_laplacian(phi_n).data + p.lam * phi_n.data)
        data = data + (1.0 - sigma) * apply_gh(w, p.flow).data
    return Field(phi_n.grid, data)


def solve_phi1_phi2(h: Field, gprime_star: Field, gamma: float, sigma: float,
                    dt: float, p: SchemeParams):
    """The two independent constant-coefficient solves of one step."""
    _validate_stencil_args(gamma, sigma, dt)
    alpha = (1.0 + 2.0 * sigma * gamma) / (dt * (1.0 + gamma))
    phi1 = _solve_flow_operator(alpha, sigma, p, h)
    phi2 = _solve_flow_operator(alpha, sigma, p, apply_gh(gprime_star, p.flow))
    return phi1, phi2


def newton_xi(phi1: Field, phi2: Field, phi_n: Field, gprime_star: Field,
              r_n: float, e1_n: float, p: SchemeParams, iters: int = 1):
    """Newton iterations from xi = 1 on the scalar closure W(xi) = 0.

    Substituting phi^{n+1} = phi_1 + xi*V(xi)*phi_2 and r^{n+1} =
    xi*sqrt(E1^n) into the r-update gives, with A = (g'(phi*), phi_2)
    and B = (g'(phi*), phi_1 - phi^n),

        W(xi)  = xi*sqrt(E1^n) - r^n
                 - (V(xi) / (2*sqrt(E1^n))) * (xi*V(xi)*A + B),
        W'(xi) = sqrt(E1^n)
                 - (V'(xi)*(xi*V(xi)*A + B) + V(xi)*(V(xi) + xi*V'(xi))*A)
                   / (2*sqrt(E1^n)),

    so W'(1) = sqrt(E1^n) + (g'(phi*), phi_1 + phi_2 - phi^n) / (2*sqrt(E1^n)).
    Returns the final xi and |W(xi)|.
    """
    if not e1_n > 0:
        raise ValueError(f"e1_n must be positive, got {e1_n}")
    if iters < 1:
        raise ValueError(f"need at least one Newton iteration, got {iters}")
    s = math.sqrt(e1_n)
    a = inner(gprime_star, phi2)
    b = inner(gprime_star, Field(phi1.grid, phi1.data - phi_n.data))
    kind = p.v_kind

    def w_val(xi):
        v = v_of_xi(kind, xi)
        return xi * s - r_n - v / (2.0 * s) * (xi * v * a + b)

    def w_prime(xi):
        v = v_of_xi(kind, xi)
        vp = v_prime_of_xi(kind, xi)
        return s - (vp * (xi * v * a + b) + v * (v + xi * vp) * a) / (2.0 * s)

    xi = 1.0
    for _ in range(iters):
        d = w_prime(xi)
        if abs(d) < 1e-14 * s:
            raise NewtonSingularError(
                f"|W'({xi:.6g})| = {abs(d):.3e} below 1e-14*sqrt(E1^n) = {1e-14 * s:.3e}"
            )
        xi -= w_val(xi) / d
    return xi, abs(w_val(xi))


# ---------------------------------------------------------------------------
# Whole steps
# ---------------------------------------------------------------------------

def _record_for(phi_new: Field, phi_old: Field, step: int, t_new: float,
                dt: float, gamma: float, xi: float, r_new: float,
                res: float, p: SchemeParams) -> StepRecord:
    inc = Field(phi_new.grid, phi_new.data - phi_old.data)
    hist = _star_sq(inc, p.flow) / dt
    e_mod = modified_energy(phi_new, r_new, p)
    return StepRecord(
        step=step,
        t_np1=t_new,
        dt_np1=dt,
        gamma_np1=gamma,
        xi=xi,
        r=r_new,
        energy=energy(phi_new, p),
        modified_energy=e_mod,
        discrete_energy_H=history_weight(1.0, p.sigma) * hist + e_mod,
        newton_residual=res,
        mass=mean(phi_new),
        h2_seminorm=l2_norm(apply_laplacian(phi_new)),
        history_term=hist,
    )


def first_order_step(state: StepState, dt: float, p: SchemeParams):
    """One step of the first-order starting scheme (V identically 1).

    Solves (phi^{n+1} - phi^n)/dt = G_H [(-eps2*Lap + lam) phi^{n+1}
    + (r^{n+1}/sqrt(E1^n)) g'(phi^n)] via the split phi^{n+1} = phi_1 +
    (r^{n+1}/sqrt(E1^n)) phi_2 with

        (1/dt - G_H(-eps2*Lap + lam)) phi_1 = phi^n / dt,
        (1/dt - G_H(-eps2*Lap + lam)) phi_2 = G_H g'(phi^n),

    after which the r-update is *linear* in r^{n+1}:

        r^{n+1} = (r^n + B/(2*sqrt(E1^n))) / (1 - A/(2*E1^n)),

    A = (g'(phi^n), phi_2), B = (g'(phi^n), phi_1 - phi^n).  Since phi_2
    is the negative-definite image of g', A <= 0 and the denominator is
    at least 1; a near-zero denominator is reported, never clamped.
    The first-order modified energy is non-increasing for any dt.
    """
    if not dt > 0:
        raise ValueError(f"step size must be positive, got {dt}")
    if not state.e1_n > 0:
        raise ValueError(f"state.e1_n must be positive, got {state.e1_n}")
    phi_n = state.phi_n
    s = math.sqrt(state.e1_n)
    gps = _gprime_star(phi_n, p)
    # sigma = 1 specializes the split operator to (1/dt - G_H(-eps2*Lap + lam)).
    phi1 = _solve_flow_operator(1.0 / dt, 1.0, p, Field(phi_n.grid, phi_n.data / dt))
    phi2 = _solve_flow_operator(1.0 / dt, 1.0, p, apply_gh(gps, p.flow))
    a = inner(gps, phi2)
    b = inner(gps, Field(phi1.grid, phi1.data - phi_n.data))
    denom = 1.0 - a / (2.0 * state.e1_n)
    if abs(denom) < 1e-12:
        raise SingularScalarDenominator(
            f"first-order scalar update denominator {denom:.3e} at t = {state.t_n:.6g}"
        )
    r_new = (state.r_n + b / (2.0 * s)) / denom
    xi = r_new / s
    phi_new = Field(phi_n.grid, phi1.data + xi * phi2.data)
    # Residual of the (linear) scalar update, by substitution.
    res = abs(r_new - state.r_n - inner(gps, Field(phi_n.grid, phi_new.data - phi_n.data)) / (2.0 * s))
    e1_new = e1(phi_new, p, where=f"step {state.step_index + 1}, t = {state.t_n + dt:.6g}")
    t_new = state.t_n + dt
    record = _record_for(phi_new, phi_n, state.step_index + 1, t_new, dt,
                         1.0, xi, r_new, res, p)
    new_state = StepState(
        phi_n=phi_new, phi_nm1=phi_n, r_n=r_new, dt_n=dt, t_n=t_new,
        step_index=state.step_index + 1, e1_n=e1_new,
    )
    return new_state, record


def vbdf2_step(state: StepState, dt_np1: float, p: SchemeParams,
               iters: int = 1, ratio_policy: str = "warn"):
    """One variable-step BDF2 step; requires a history level (step_index >= 1).

    Ratios above gamma**(sigma) are reported through ``ratio_policy``:
    "warn" (default) issues a StepRatioWarning and continues, "error"
    raises StepRatioError.
    """
    if state.step_index < 1 or state.phi_nm1 is None:
        raise ValueError("vbdf2_step needs one completed step; take first_order_step first")
    if not dt_np1 > 0:
        raise ValueError(f"step size must be positive, got {dt_np1}")
    gamma = dt_np1 / state.dt_n
    cap = gamma_star_star(p.sigma)
    if gamma > cap:
        msg = (f"step ratio {gamma:.4f} exceeds gamma**({p.sigma:g}) = {cap:.4f} "
               f"at step {state.step_index + 1}")
        if ratio_policy == "error":
            raise StepRatioError(msg)
        warnings.warn(msg, StepRatioWarning, stacklevel=2)

    phi_star = extrapolate(state.phi_n, state.phi_nm1, p.sigma, gamma)
    gps = _gprime_star(phi_star, p)
    h = vbdf2_rhs(state.phi_n, state.phi_nm1, gamma, p.sigma, dt_np1, p)
    phi1, phi2 = solve_phi1_phi2(h, gps, gamma, p.sigma, dt_np1, p)
    xi, res = newton_xi(phi1, phi2, state.phi_n, gps, state.r_n, state.e1_n, p, iters)
    vv = xi * v_of_xi(p.v_kind, xi)
    phi_new = Field(phi1.grid, phi1.data + vv * phi2.data)
    r_new = xi * math.sqrt(state.e1_n)
    e1_new = e1(phi_new, p, where=f"step {state.step_index + 1}, t = {state.t_n + dt_np1:.6g}")
    t_new = state.t_n + dt_np1
    record = _record_for(phi_new, state.phi_n, state.step_index + 1, t_new,
                         dt_np1, gamma, xi, r_new, res, p)
    new_state = StepState(
        phi_n=phi_new, phi_nm1=state.phi_n, r_n=r_new, dt_n=dt_np1, t_n=t_new,
        step_index=state.step_index + 1, e1_n=e1_new,
    )
    return new_state, record


def discrete_energy_H(state_after: StepState, gamma_next: float, p: SchemeParams) -> float:
    """E_H after a step, weighted by the *upcoming* step ratio.

    E_H = history_weight(gamma_next, sigma) * |phi^n - phi^{n-1}|_star^2 / dt_n
          + E_Mod(phi^n, r^n)

    with star = L2 norm (L2 flow) or inverse-gradient norm (H^-1 flow).
    The driver uses gamma_next = 1 for the final step of a run; before
    any step the discrete energy is just E_Mod.
    """
    if state_after.step_index < 1 or state_after.phi_nm1 is None:
        raise ValueError("discrete_energy_H needs a completed step")
    inc = Field(state_after.phi_n.grid,
                state_after.phi_n.data - state_after.phi_nm1.data)
    hist = _star_sq(inc, p.flow) / state_after.dt_n
    return history_weight(gamma_next, p.sigma) * hist + modified_energy(
        state_after.phi_n, state_after.r_n, p
    )


def step_residual(state_before: StepState, state_after: StepState, xi: float,
                  p: SchemeParams) -> dict:
    """Back-substitution residuals of a completed VBDF2 step (diagnostic).

    Reconstructs mu^{n+sigma} (the step itself never forms it) and
    returns relative residuals of the field equation and the scalar
    update: {"field": ..., "scalar": ...}.
    """
    dt = state_after.dt_n
    gamma = dt / state_before.dt_n
    sigma = p.sigma
    c = bdf2_coeffs(gamma, sigma, dt)
    phi_new, phi_n, phi_nm1 = state_after.phi_n, state_before.phi_n, state_before.phi_nm1
    f2 = Field(phi_new.grid,
               c.a_np1 * phi_new.data + c.a_n * phi_n.data + c.a_nm1 * phi_nm1.data)
    phi_sig = Field(phi_new.grid, sigma * phi_new.data + (1.0 - sigma) * phi_n.data)
    phi_star = extrapolate(phi_n, phi_nm1, sigma, gamma)
    gps = _gprime_star(phi_star, p)
    coef = xi * v_of_xi(p.v_kind, xi)  # = (r^{n+1}/sqrt(E1^n)) V(xi)
    mu = Field(phi_new.grid,
               -p.eps2 * apply_laplacian(phi_sig).data + p.lam * phi_sig.data
               + coef * gps.data)
    res_field = Field(phi_new.grid, f2.data - apply_gh(mu, p.flow).data)
    field_rel = l2_norm(res_field) / max(l2_norm(f2), 1e-300)
    s = math.sqrt(state_before.e1_n)
    inc = Field(phi_new.grid, phi_new.data - phi_n.data)
    scalar = abs(
        state_after.r_n - state_before.r_n
        - v_of_xi(p.v_kind, xi) / (2.0 * s) * inner(gps, inc)
    ) / max(abs(state_before.r_n), 1.0)
    return {"field": field_rel, "scalar": scalar}
