"""Experiment drivers: simulation loop, reference runs, convergence and
coarsening studies.

All randomness flows through ``numpy.random.SeedSequence`` children of
the configured seed: stream 0 draws the initial field, stream 1 the mesh
perturbation (with the resolution appended when a study regenerates the
mesh per N), so refining N never replays another resolution's draws and
identical configs give bitwise-identical runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Optional

import numpy as np

from . import stepping
from .errors import ConfigError, NonFiniteFieldError
from .integrator import (
    StepRecord,
    StepState,
    first_order_step,
    history_weight,
    initial_state,
    vbdf2_step,
)
from .model import SchemeParams, energy, modified_energy
from .spectral import Field, l2_norm, linf_norm, make_grid, mean
from .stepping import Schedule, adaptive_next_dt, cap_first_step, energy_rate_estimate

INITIAL_KINDS = ("sin-product", "two-mode", "random", "file")


@dataclass
class RunConfig:
    """Everything one simulation needs.

    ``schedule`` is a ``stepping.Schedule``; for the "perturbed" kind the
    dt sequence may be left unmaterialized (dts=None), in which case the
    run derives it from the config seed.  ``first_step_cap`` (if set)
    rewrites the leading step into a geometric ramp so that dt_1 <= cap.
    """

    flow: str = "L2"
    eps2: float = 0.01
    lam: float = 1.0
    c0: float = 50.0
    sigma: float = 1.0
    v_kind: str = "linear"
    nx: int = 32
    ny: int = 32
    lx: float = 2.0 * math.pi
    ly: float = 2.0 * math.pi
    dealias: bool = False
    initial_kind: str = "random"
    initial_lo: float = -0.05
    initial_hi: float = 0.05
    initial_path: Optional[str] = None
    schedule: Schedule = dc_field(default_factory=lambda: stepping.uniform_schedule(1.0, 100))
    T: Optional[float] = None
    newton_iters: int = 4
    seed: int = 0
    record_every: int = 1
    snapshot_times: tuple = ()
    ratio_policy: str = "warn"
    first_step_cap: Optional[float] = None
    dt_ref: float = 1e-4

    def __post_init__(self):
        if self.T is None:
            self.T = self.schedule.T
        if self.initial_kind not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {self.initial_kind!r}; known: {INITIAL_KINDS}")
        if self.initial_kind == "file" and not self.initial_path:
            raise ConfigError("initial kind 'file' requires a path")
        if self.ratio_policy not in ("warn", "error"):
            raise ConfigError(f"ratio_policy must be 'warn' or 'error', got {self.ratio_policy!r}")
        if self.newton_iters < 1:
            raise ConfigError(f"newton_iters must be >= 1, got {self.newton_iters}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be >= 1, got {self.record_every}")
        if not self.T > 0:
            raise ConfigError(f"horizon must be positive, got {self.T}")
        for s in self.snapshot_times:
            if not 0.0 <= s <= self.T * (1.0 + 1e-12):
                raise ConfigError(f"snapshot time {s} outside [0, T = {self.T}]")

    def params(self) -> SchemeParams:
        return SchemeParams(eps2=self.eps2, lam=self.lam, c0=self.c0,
                            sigma=self.sigma, v_kind=self.v_kind, flow=self.flow)

    def grid(self):
        return make_grid(self.nx, self.ny, self.lx, self.ly, dealias=self.dealias)


@dataclass
class Snapshot:
    requested_t: float
    actual_t: float
    step: int
    field: Field


@dataclass
class InitialDiagnostics:
    energy: float
    modified_energy: float
    r0: float
    e1_0: float
    mass: float


@dataclass
class RunResult:
    config: RunConfig
    final_state: StepState
    records: list
    snapshots: list
    initial: InitialDiagnostics
    max_gamma: float

    @property
    def step_count(self) -> int:
        return len(self.records)


def initial_field(cfg: RunConfig) -> Field:
    grid = cfg.grid()
    X, Y = grid.nodes()
    if cfg.initial_kind == "sin-product":
        data = np.sin(X) * np.sin(Y)
    elif cfg.initial_kind == "two-mode":
        data = 0.1 * (np.sin(3 * X) * np.sin(2 * Y) + np.sin(5 * X) * np.sin(5 * Y))
    elif cfg.initial_kind == "random":
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
        data = rng.uniform(cfg.initial_lo, cfg.initial_hi, grid.shape)
    else:  # file
        from .output import read_snapshot

        snap_field, _meta = read_snapshot(cfg.initial_path)
        g = snap_field.grid
        if (g.nx, g.ny, g.lx, g.ly) != (grid.nx, grid.ny, grid.lx, grid.ly):
            raise ConfigError(
                f"initial file grid ({g.nx},{g.ny},{g.lx:.6g},{g.ly:.6g}) does not match "
                f"configured grid ({grid.nx},{grid.ny},{grid.lx:.6g},{grid.ly:.6g})"
            )
        data = snap_field.data
    return Field(grid, data)


def _materialized_dts(cfg: RunConfig) -> np.ndarray:
    sched = cfg.schedule
    if sched.kind == "adaptive":
        raise ValueError("adaptive schedules are generated during the run")
    if sched.dts is not None:
        dts = np.asarray(sched.dts, dtype=float)
    elif sched.kind == "perturbed":
        seed = int(np.random.SeedSequence([cfg.seed, 1]).generate_state(1)[0])
        dts = stepping.perturbed_schedule(sched.T, sched.N, sched.amplitude, seed).dts
    else:
        raise ValueError(f"schedule kind {sched.kind!r} has no dt sequence")
    if cfg.first_step_cap is not None:
        dts = cap_first_step(dts, cfg.first_step_cap)
    return dts


def _finalize_discrete_energy(records, sigma):
    """Re-weight each record's E_H with the realized next-step ratio.

    Steps emit E_H with a provisional next-ratio of 1; the actual ratio
    gamma_{n+2} = dt_{n+2}/dt_{n+1} becomes known one step later, and the
    final step keeps ratio 1 by convention.
    """
    for i in range(len(records) - 1):
        gamma_next = records[i + 1].dt_np1 / records[i].dt_np1
        records[i].discrete_energy_H = (
            history_weight(gamma_next, sigma) * records[i].history_term
            + records[i].modified_energy
        )


def run_simulation(cfg: RunConfig) -> RunResult:
    """Run one simulation: first-order start, then VBDF2 steps to T.

    Snapshots are captured at the last step time not after each
    requested time.  Records are kept for every step; output cadence is
    applied at write time only.
    """
    p = cfg.params()
    phi0 = initial_field(cfg)
    if not np.all(np.isfinite(phi0.data)):
        raise NonFiniteFieldError(0, 0.0)
    state = initial_state(phi0, p)
    init = InitialDiagnostics(
        energy=energy(phi0, p),
        modified_energy=modified_energy(phi0, state.r_n, p),
        r0=state.r_n,
        e1_0=state.e1_n,
        mass=mean(phi0),
    )

    snap_times = sorted(cfg.snapshot_times)
    snap_ptr = 0
    snapshots = []
    records = []

    def capture_passed(state_after):
        # state_after.phi_nm1 is the solution at the previous step time.
        nonlocal snap_ptr
        while (snap_ptr < len(snap_times)
               and state_after.t_n > snap_times[snap_ptr] + 1e-12 * max(1.0, snap_times[snap_ptr])):
            prev_t = state_after.t_n - state_after.dt_n
            snapshots.append(Snapshot(snap_times[snap_ptr], prev_t,
                                      state_after.step_index - 1,
                                      state_after.phi_nm1))
            snap_ptr += 1

    def advance(dt):
        nonlocal state
        if state.step_index == 0:
            state, rec = first_order_step(state, dt, p)
        else:
            state, rec = vbdf2_step(state, dt, p, iters=cfg.newton_iters,
                                    ratio_policy=cfg.ratio_policy)
        if not np.all(np.isfinite(state.phi_n.data)):
            raise NonFiniteFieldError(state.step_index, state.t_n)
        records.append(rec)
        capture_passed(state)

    sched = cfg.schedule
    if sched.kind == "adaptive":
        prev_E = init.modified_energy if sched.energy_source == "modified" else init.energy
        dt = min(sched.dt_init, cfg.T)
        # The controller sees the *intensive* rate (energy per unit area),
        # so a gamma_adp calibration carries across domain sizes.
        area = phi0.grid.area
        while cfg.T - state.t_n > 1e-12 * cfg.T:
            advance(dt)
            rec = records[-1]
            E_n = rec.modified_energy if sched.energy_source == "modified" else rec.energy
            rate = energy_rate_estimate(E_n, prev_E, rec.dt_np1) / area
            prev_E = E_n
            dt = adaptive_next_dt(rec.dt_np1, rate, sched.dt_min, sched.dt_max,
                                  sched.gamma_adp, sched.ratio_cap)
            dt = min(dt, cfg.T - state.t_n)
            if dt <= 0:
                break
    else:
        for dt in _materialized_dts(cfg):
            advance(dt)

    # Flush snapshot requests at or beyond the final time.
    while snap_ptr < len(snap_times):
        snapshots.append(Snapshot(snap_times[snap_ptr], state.t_n,
                                  state.step_index, state.phi_n))
        snap_ptr += 1

    _finalize_discrete_energy(records, p.sigma)
    max_gamma = max((r.gamma_np1 for r in records), default=1.0)
    return RunResult(config=cfg, final_state=state, records=records,
                     snapshots=snapshots, initial=init, max_gamma=max_gamma)


def reference_solution(cfg: RunConfig, dt_ref: float) -> Field:
    """phi(T) from a uniform run at dt_ref (last step shortened if needed)."""
    if not dt_ref > 0:
        raise ValueError(f"dt_ref must be positive, got {dt_ref}")
    n_whole = int(math.floor(cfg.T / dt_ref + 1e-9))
    remainder = cfg.T - n_whole * dt_ref
    if remainder > 1e-9 * cfg.T:
        sched = stepping.explicit_schedule(np.append(np.full(n_whole, dt_ref), remainder))
    else:
        sched = stepping.uniform_schedule(cfg.T, n_whole)
    ref_cfg = replace(cfg, schedule=sched, snapshot_times=())
    return run_simulation(ref_cfg).final_state.phi_n


@dataclass
class ConvergenceRow:
    N: int
    tau: float
    max_gamma: float
    error_linf: float
    error_l2: float
    order: float
    xi_err: float


@dataclass
class ConvergenceStudy:
    mesh_kind: str
    rows: list
    order_linf: float
    order_l2: float
    xi_order: float


def _lsq_slope(x, y):
    """Least-squares slope of log(y) against log(x)."""
    lx, ly = np.log(np.asarray(x)), np.log(np.asarray(y))
    return float(np.polyfit(lx, ly, 1)[0])


def convergence_study(cfg: RunConfig, Ns, mesh_kind: str, seed: int,
                      phi_ref: Optional[Field] = None) -> ConvergenceStudy:
    """Error at T versus the reference for a ladder of resolutions.

    Each N gets its own mesh (perturbed meshes are regenerated with a
    per-N derived seed) with the leading step capped at tau^(4/3).
    Errors are measured against ``phi_ref`` (computed at cfg.dt_ref when
    not supplied); row orders compare consecutive rows, the study-level
    orders are least-squares slopes, and xi_order is the slope of the
    final-step |xi - 1|.
    """
    if list(Ns) != sorted(Ns):
        raise ValueError("Ns must be increasing")
    if mesh_kind not in ("uniform", "perturbed"):
        raise ValueError(f"mesh_kind must be 'uniform' or 'perturbed', got {mesh_kind!r}")
    if phi_ref is None:
        phi_ref = reference_solution(
            replace(cfg, first_step_cap=cfg.dt_ref ** (4.0 / 3.0)), cfg.dt_ref
        )
    rows = []
    for N in Ns:
        tau = cfg.T / N
        if mesh_kind == "uniform":
            sched = stepping.uniform_schedule(cfg.T, N)
        else:
            mesh_seed = int(np.random.SeedSequence([seed, 1, N]).generate_state(1)[0])
            sched = stepping.perturbed_schedule(cfg.T, N, 0.4, mesh_seed)
        run_cfg = replace(cfg, schedule=sched, first_step_cap=tau ** (4.0 / 3.0),
                          snapshot_times=())
        result = run_simulation(run_cfg)
        diff = Field(phi_ref.grid, result.final_state.phi_n.data - phi_ref.data)
        rows.append(ConvergenceRow(
            N=N, tau=tau, max_gamma=result.max_gamma,
            error_linf=linf_norm(diff), error_l2=l2_norm(diff),
            order=math.nan, xi_err=abs(result.records[-1].xi - 1.0),
        ))
    for prev, cur in zip(rows, rows[1:]):
        cur.order = math.log(prev.error_linf / cur.error_linf) / math.log(prev.tau / cur.tau)
    taus = [r.tau for r in rows]
    return ConvergenceStudy(
        mesh_kind=mesh_kind,
        rows=rows,
        order_linf=_lsq_slope(taus, [r.error_linf for r in rows]),
        order_l2=_lsq_slope(taus, [r.error_l2 for r in rows]),
        xi_order=_lsq_slope(taus, [max(r.xi_err, 1e-300) for r in rows]),
    )


COARSEN_VARIANTS = ("fixed-large", "adaptive", "fixed-small")


@dataclass
class CoarseningReport:
    runs: dict
    step_counts: dict
    checkpoints: tuple
    checkpoint_energy: dict
    max_energy_deviation: Optional[float]


def _interp_energy(result: RunResult, t: float) -> float:
    ts = np.array([result.records[0].t_np1 - result.records[0].dt_np1]
                  + [r.t_np1 for r in result.records])
    Es = np.array([result.initial.energy] + [r.energy for r in result.records])
    return float(np.interp(t, ts, Es))


def coarsening_experiment(cfg: RunConfig, variants=COARSEN_VARIANTS,
                          dt_large: float = 1e-2, dt_small: float = 1e-4,
                          checkpoints=(1.0, 2.0, 5.0)) -> CoarseningReport:
    """Run the coarsening comparison from one shared initial field.

    Variants: "fixed-large" (uniform dt_large), "adaptive" (controller
    parameters from cfg.schedule when it is adaptive, else the defaults
    dt_min = 1e-4, dt_max = 1e-2, gamma_adp = 1000), "fixed-small"
    (uniform dt_small).  All variants share cfg.seed, hence the initial
    data.  Checkpoint energies are linearly interpolated in time; the
    deviation entry compares adaptive against fixed-small when both ran.
    """
    if cfg.flow != "Hminus1":
        raise ConfigError("coarsening experiment expects the Hminus1 flow")
    for v in variants:
        if v not in COARSEN_VARIANTS:
            raise ConfigError(f"unknown variant {v!r}; known: {COARSEN_VARIANTS}")
    checkpoints = tuple(c for c in checkpoints if c <= cfg.T * (1 + 1e-12))

    def variant_cfg(v):
        if v == "fixed-large":
            sched = stepping.uniform_schedule(cfg.T, int(round(cfg.T / dt_large)))
        elif v == "fixed-small":
            sched = stepping.uniform_schedule(cfg.T, int(round(cfg.T / dt_small)))
        else:
            if cfg.schedule.kind == "adaptive":
                sched = cfg.schedule
            else:
                sched = stepping.adaptive_schedule(cfg.T, 1e-4, 1e-2, 1000.0)
        return replace(cfg, schedule=sched)

    runs = {v: run_simulation(variant_cfg(v)) for v in variants}
    step_counts = {v: runs[v].step_count for v in variants}
    checkpoint_energy = {
        v: [_interp_energy(runs[v], c) for c in checkpoints] for v in variants
    }
    deviation = None
    if "adaptive" in runs and "fixed-small" in runs and checkpoints:
        deviation = max(
            abs(ea - ef) / abs(ef)
            for ea, ef in zip(checkpoint_energy["adaptive"], checkpoint_energy["fixed-small"])
        )
    return CoarseningReport(runs=runs, step_counts=step_counts,
                            checkpoints=checkpoints,
                            checkpoint_energy=checkpoint_energy,
                            max_energy_deviation=deviation)
