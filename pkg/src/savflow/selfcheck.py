"""Fast built-in invariant battery behind ``savflow selfcheck``.

Each check raises AssertionError with a short diagnostic on failure.
The battery runs on small grids in a few seconds; the full test suite is
the authoritative gate, this is the field diagnostic.
"""

from __future__ import annotations

import math

import numpy as np

from . import stepping
from .harness import RunConfig, run_simulation
from .integrator import (
    bdf2_coeffs,
    g_stability,
    gamma_star_star,
    history_weight,
    step_residual,
)
from .spectral import (
    Field,
    apply_laplacian,
    forward,
    inner,
    inverse,
    inverse_laplacian,
    l2_norm,
    linf_norm,
    make_grid,
    solve_symbol,
)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def check_fft_round_trip():
    rng = np.random.default_rng(11)
    for n in (8, 16, 32):
        g = make_grid(n, n, 2 * math.pi, 2 * math.pi)
        f = Field(g, rng.standard_normal(g.shape))
        back = inverse(forward(f))
        err = linf_norm(Field(g, back.data - f.data)) / linf_norm(f)
        assert err <= 1e-12, f"round-trip error {err:.3e} on {n}x{n}"


def check_parseval():
    rng = np.random.default_rng(12)
    g = make_grid(32, 32, 2 * math.pi, 2 * math.pi)
    f = Field(g, rng.standard_normal(g.shape))
    nodal = l2_norm(f) ** 2
    from .spectral import _spectral_sq_sum

    spectral = _spectral_sq_sum(g, np.abs(forward(f).coef) ** 2)
    assert _rel(spectral, nodal) <= 1e-10, f"Parseval mismatch {spectral} vs {nodal}"


def check_laplacian_inverse():
    rng = np.random.default_rng(13)
    g = make_grid(32, 32, 2 * math.pi, 2 * math.pi)
    f = Field(g, rng.standard_normal(g.shape))
    back = inverse_laplacian(apply_laplacian(f))
    target = f.data - f.data.mean()
    err = np.max(np.abs(back.data - target))
    assert err <= 1e-11, f"inverse(apply) deviates by {err:.3e}"


def check_solve_symbol():
    rng = np.random.default_rng(14)
    g = make_grid(32, 32, 2 * math.pi, 2 * math.pi)
    rhs = Field(g, rng.standard_normal(g.shape))
    u = solve_symbol(10.0, 1.0, 0.01, rhs)
    lap = apply_laplacian(u)
    lap2 = apply_laplacian(lap)
    res = Field(g, 10.0 * u.data - lap.data + 0.01 * lap2.data - rhs.data)
    rel = l2_norm(res) / l2_norm(rhs)
    assert rel <= 1e-10, f"solve residual {rel:.3e}"


def check_bdf2_consistency():
    rng = np.random.default_rng(15)
    for _ in range(50):
        gamma = rng.uniform(0.1, 5.0)
        sigma = rng.uniform(0.5, 1.0)
        dt = 10.0 ** rng.uniform(-4, 0)
        c = bdf2_coeffs(gamma, sigma, dt)
        assert abs(c.a_np1 + c.a_n + c.a_nm1) <= 1e-12 / dt, "constants not annihilated"
        t_np1 = 1.0
        t_n = t_np1 - dt
        t_nm1 = t_n - dt / gamma
        slope = c.a_np1 * t_np1 + c.a_n * t_n + c.a_nm1 * t_nm1
        assert abs(slope - 1.0) <= 1e-9, f"slope {slope} != 1"


def check_stability_threshold():
    z = gamma_star_star(1.0)
    assert abs(z - 4.8645) <= 5e-4, f"gamma**(1) = {z}"
    res = abs(1.0 + 2.0 * z - z**1.5)
    assert res <= 1e-8, f"algebraic residual {res:.3e}"
    for s in (0.5, 0.75, 1.0):
        assert abs(g_stability(0.0, 0.0, s) - 2.0) <= 1e-15
    assert abs(g_stability(4.0, 4.0, 1.0) - 0.4) <= 1e-12


def check_scalar_inequality():
    rng = np.random.default_rng(16)
    for sigma in (0.5, 0.75, 1.0):
        cap = min(gamma_star_star(sigma), 10.0)
        for _ in range(700):
            phi = rng.standard_normal(3) * 10.0 ** rng.uniform(-2, 2)
            dt = 10.0 ** rng.uniform(-4, 0)
            g1 = rng.uniform(1e-2, cap)
            g2 = rng.uniform(1e-2, cap)
            c = bdf2_coeffs(g1, sigma, dt)
            d_new, d_old = phi[2] - phi[1], phi[1] - phi[0]
            lhs = d_new * (c.a_np1 * phi[2] + c.a_n * phi[1] + c.a_nm1 * phi[0])
            rhs = (history_weight(g2, sigma) * d_new**2 / dt
                   - history_weight(g1, sigma) * d_old**2 / (dt / g1)
                   + g_stability(g1, g2, sigma) * d_new**2 / (2.0 * dt))
            slack = 1e-12 * max(1.0, abs(lhs), abs(rhs))
            assert lhs >= rhs - slack, (
                f"inequality violated by {rhs - lhs:.3e} at sigma={sigma}, "
                f"gammas=({g1:.3f},{g2:.3f})"
            )


def _tiny_cfg(flow, sched, seed=3):
    return RunConfig(flow=flow, eps2=0.01, lam=1.0, c0=50.0, sigma=1.0,
                     nx=16, ny=16, initial_kind="random", seed=seed,
                     schedule=sched, newton_iters=6)


def check_first_order_energy_law():
    from .integrator import first_order_step, initial_state
    from .harness import initial_field

    for flow in ("L2", "Hminus1"):
        cfg = _tiny_cfg(flow, stepping.uniform_schedule(0.15, 150))
        p = cfg.params()
        state = initial_state(initial_field(cfg), p)
        from .model import modified_energy

        prev = modified_energy(state.phi_n, state.r_n, p)
        for _ in range(150):
            state, rec = first_order_step(state, 1e-3, p)
            assert rec.modified_energy <= prev + 1e-10 * abs(prev), (
                f"first-order energy rose at step {state.step_index} ({flow})"
            )
            prev = rec.modified_energy


def check_vbdf2_dissipation():
    rng = np.random.default_rng(17)
    dts = 1e-3 * rng.uniform(0.5, 1.0, 80)
    cfg = _tiny_cfg("L2", stepping.explicit_schedule(dts))
    result = run_simulation(cfg)
    prev = result.initial.modified_energy
    for rec in result.records:
        assert rec.discrete_energy_H <= prev + 1e-10 * abs(prev), (
            f"discrete energy rose at step {rec.step}"
        )
        prev = rec.discrete_energy_H


def check_split_residual():
    from .integrator import first_order_step, initial_state, vbdf2_step
    from .harness import initial_field

    cfg = _tiny_cfg("Hminus1", stepping.uniform_schedule(0.05, 50))
    p = cfg.params()
    state = initial_state(initial_field(cfg), p)
    state, _ = first_order_step(state, 1e-3, p)
    for _ in range(40):
        before = state
        state, rec = vbdf2_step(state, 1e-3, p, iters=6)
        res = step_residual(before, state, rec.xi, p)
        assert res["field"] <= 1e-9, f"field residual {res['field']:.3e}"
        assert res["scalar"] <= 1e-9, f"scalar residual {res['scalar']:.3e}"


def check_mass_conservation():
    cfg = _tiny_cfg("Hminus1", stepping.uniform_schedule(0.1, 100))
    result = run_simulation(cfg)
    drift = max(abs(r.mass - result.initial.mass) for r in result.records)
    assert drift <= 1e-12, f"mass drift {drift:.3e}"


CHECKS = [
    ("fft-round-trip", check_fft_round_trip),
    ("parseval", check_parseval),
    ("laplacian-inverse", check_laplacian_inverse),
    ("solve-symbol-residual", check_solve_symbol),
    ("bdf2-consistency", check_bdf2_consistency),
    ("stability-threshold", check_stability_threshold),
    ("scalar-inequality", check_scalar_inequality),
    ("first-order-energy-law", check_first_order_energy_law),
    ("vbdf2-dissipation", check_vbdf2_dissipation),
    ("split-residual", check_split_residual),
    ("mass-conservation", check_mass_conservation),
]


def run_selfcheck():
    """Run every check; returns a list of (name, ok, detail)."""
    results = []
    for name, fn in CHECKS:
        try:
            fn()
            results.append((name, True, ""))
        except AssertionError as exc:
            results.append((name, False, str(exc)))
    return results
