"""Run driver, reference solutions, convergence and coarsening studies."""

import math
from dataclasses import replace

import numpy as np
import pytest

from savflow import (
    ConfigError,
    EnergyShiftTooSmall,
    Field,
    RunConfig,
    adaptive_schedule,
    coarsening_experiment,
    convergence_study,
    explicit_schedule,
    initial_field,
    perturbed_schedule,
    reference_solution,
    run_simulation,
    uniform_schedule,
)
from savflow.harness import _lsq_slope


class TestRunConfig:
    def test_horizon_defaults_from_schedule(self, tiny_cfg):
        cfg = tiny_cfg(schedule=uniform_schedule(0.25, 10))
        assert cfg.T == 0.25

    def test_unknown_initial_kind(self, tiny_cfg):
        with pytest.raises(ConfigError, match="initial kind"):
            tiny_cfg(initial_kind="blob")

    def test_file_kind_needs_path(self, tiny_cfg):
        with pytest.raises(ConfigError, match="requires a path"):
            tiny_cfg(initial_kind="file")

    def test_snapshot_times_bounded(self, tiny_cfg):
        with pytest.raises(ConfigError, match="snapshot time"):
            tiny_cfg(snapshot_times=(99.0,))

    def test_ratio_policy_checked(self, tiny_cfg):
        with pytest.raises(ConfigError, match="ratio_policy"):
            tiny_cfg(ratio_policy="ignore")


class TestInitialField:
    def test_sin_product_values(self, tiny_cfg):
        cfg = tiny_cfg(initial_kind="sin-product")
        f = initial_field(cfg)
        X, Y = f.grid.nodes()
        assert np.allclose(f.data, np.sin(X) * np.sin(Y), atol=1e-15)

    def test_random_bounded_and_seeded(self, tiny_cfg):
        cfg = tiny_cfg(initial_kind="random", seed=21)
        a = initial_field(cfg)
        b = initial_field(cfg)
        c = initial_field(tiny_cfg(initial_kind="random", seed=22))
        assert np.all((a.data >= -0.05) & (a.data <= 0.05))
        assert np.array_equal(a.data, b.data)
        assert not np.array_equal(a.data, c.data)

    def test_two_mode_mean_zero(self, tiny_cfg):
        f = initial_field(tiny_cfg(initial_kind="two-mode"))
        assert abs(np.mean(f.data)) <= 1e-15

    def test_file_round_trip(self, tiny_cfg, tmp_path):
        from savflow import write_snapshot

        cfg = tiny_cfg(initial_kind="random", seed=5)
        f = initial_field(cfg)
        path = tmp_path / "init.f64"
        write_snapshot(path, f, 0.0, 0)
        cfg2 = tiny_cfg(initial_kind="file", initial_path=str(path))
        assert np.array_equal(initial_field(cfg2).data, f.data)

    def test_file_grid_mismatch(self, tiny_cfg, tmp_path):
        from savflow import make_grid, write_snapshot

        g = make_grid(8, 8, 2 * math.pi, 2 * math.pi)
        write_snapshot(tmp_path / "s.f64", Field(g, np.zeros(g.shape)), 0.0, 0)
        cfg = tiny_cfg(initial_kind="file", initial_path=str(tmp_path / "s.f64"))
        with pytest.raises(ConfigError, match="does not match"):
            initial_field(cfg)


class TestRunSimulation:
    def test_deterministic(self, tiny_cfg):
        cfg = tiny_cfg()
        a = run_simulation(cfg)
        b = run_simulation(cfg)
        assert np.array_equal(a.final_state.phi_n.data, b.final_state.phi_n.data)
        assert [r.xi for r in a.records] == [r.xi for r in b.records]

    def test_reaches_horizon(self, tiny_cfg):
        res = run_simulation(tiny_cfg())
        assert res.final_state.t_n == pytest.approx(0.05, rel=1e-12)
        assert res.step_count == 50

    def test_snapshot_at_last_step_not_after(self, tiny_cfg):
        # steps at k*0.001: requested 0.0105 -> captured at 0.010 (step 10)
        cfg = tiny_cfg(schedule=uniform_schedule(0.05, 50),
                       snapshot_times=(0.0105, 0.05))
        res = run_simulation(cfg)
        assert len(res.snapshots) == 2
        assert res.snapshots[0].step == 10
        assert res.snapshots[0].actual_t == pytest.approx(0.010, rel=1e-9)
        assert res.snapshots[1].step == 50
        assert res.snapshots[1].actual_t == pytest.approx(0.05, rel=1e-12)

    def test_snapshot_at_time_zero(self, tiny_cfg):
        cfg = tiny_cfg(snapshot_times=(0.0,))
        res = run_simulation(cfg)
        assert res.snapshots[0].step == 0
        assert res.snapshots[0].actual_t == 0.0
        f0 = initial_field(cfg)
        assert np.array_equal(res.snapshots[0].field.data, f0.data)

    def test_exact_step_time_is_captured_not_skipped(self, tiny_cfg):
        cfg = tiny_cfg(snapshot_times=(0.02,))
        res = run_simulation(cfg)
        assert res.snapshots[0].step == 20

    def test_records_finalized_against_recompute(self, tiny_cfg):
        """Driver-finalized E_H must equal a from-scratch recompute with
        the realized next ratios."""
        from savflow import history_weight

        dts = np.array([1e-3, 1e-3, 1.5e-3, 1e-3, 2e-3, 1e-3])
        cfg = tiny_cfg(schedule=explicit_schedule(dts))
        res = run_simulation(cfg)
        recs = res.records
        for i, r in enumerate(recs):
            gamma_next = recs[i + 1].dt_np1 / r.dt_np1 if i + 1 < len(recs) else 1.0
            expected = history_weight(gamma_next, 1.0) * r.history_term + r.modified_energy
            assert r.discrete_energy_H == pytest.approx(expected, rel=1e-13)

    def test_energy_shift_abort(self, tiny_cfg):
        """An inadmissible shift aborts the run with a usable suggestion;
        nothing is silently re-shifted."""
        cfg = tiny_cfg(c0=0.0, lam=4.0, initial_kind="sin-product")
        with pytest.raises(EnergyShiftTooSmall, match="increase the shift") as exc:
            run_simulation(cfg)
        assert exc.value.suggested_c0 > 0.0

    def test_thin_shift_degrades_xi_instead_of_aborting(self, tiny_cfg):
        """With c0 = 0 the run survives: xi*V(xi) <= 1 self-limits the
        nonlinear force as E1 -> 0, so the scheme parks above the
        admissibility boundary with visibly bad consistency.  The failure
        signature of a too-small shift is xi far from 1, not an abort."""
        cfg = tiny_cfg(c0=0.0, schedule=uniform_schedule(2.0, 200), seed=2)
        res = run_simulation(cfg)
        assert res.final_state.e1_n > 0.0
        assert abs(res.records[-1].xi - 1.0) > 0.1

    def test_adaptive_run_bounds_and_horizon(self, tiny_cfg):
        cfg = tiny_cfg(schedule=adaptive_schedule(0.5, 1e-3, 1e-2, 1000.0))
        res = run_simulation(cfg)
        assert res.final_state.t_n == pytest.approx(0.5, rel=1e-9)
        dts = [r.dt_np1 for r in res.records]
        # interior steps respect the bounds; the last one may be clipped to T
        assert all(1e-3 - 1e-15 <= dt <= 1e-2 + 1e-15 for dt in dts[:-1])
        assert res.max_gamma <= 4.8645 + 1e-12

    def test_nonuniform_mesh_from_config_seed(self, tiny_cfg):
        sched = perturbed_schedule(0.05, 50, 0.4, seed=0)
        cfg = tiny_cfg(schedule=replace(sched, dts=None))
        a = run_simulation(cfg)
        b = run_simulation(cfg)
        assert np.array_equal(a.final_state.phi_n.data, b.final_state.phi_n.data)
        assert a.max_gamma > 1.0  # genuinely nonuniform


class TestReference:
    def test_remainder_step(self, tiny_cfg):
        cfg = tiny_cfg(schedule=uniform_schedule(0.05, 50))
        ref = reference_solution(cfg, dt_ref=0.0015)  # 0.05/0.0015 not integral
        assert ref.data.shape == (16, 16)

    def test_richardson_halving(self, tiny_cfg):
        """Halving tau must cut the error by about 2^2 against a much
        finer reference."""
        from savflow import linf_norm

        cfg = tiny_cfg(flow="L2", initial_kind="sin-product",
                       schedule=uniform_schedule(0.1, 10), newton_iters=6)
        ref = reference_solution(cfg, dt_ref=1e-4)
        errs = []
        for N in (10, 20):
            res = run_simulation(replace(cfg, schedule=uniform_schedule(0.1, N)))
            diff = Field(ref.grid, res.final_state.phi_n.data - ref.data)
            errs.append(linf_norm(diff))
        ratio = errs[0] / errs[1]
        assert 3.0 <= ratio <= 5.0

    def test_dt_ref_validated(self, tiny_cfg):
        with pytest.raises(ValueError, match="dt_ref"):
            reference_solution(tiny_cfg(), dt_ref=0.0)


class TestConvergenceStudy:
    def test_requires_increasing_ns(self, tiny_cfg):
        with pytest.raises(ValueError, match="increasing"):
            convergence_study(tiny_cfg(), [40, 20], "uniform", seed=0)

    def test_mesh_kind_checked(self, tiny_cfg):
        with pytest.raises(ValueError, match="mesh_kind"):
            convergence_study(tiny_cfg(), [10, 20], "chebyshev", seed=0)

    def test_micro_study_second_order(self, tiny_cfg):
        cfg = tiny_cfg(flow="L2", initial_kind="sin-product",
                       schedule=uniform_schedule(0.1, 10), dt_ref=2e-4,
                       newton_iters=6)
        study = convergence_study(cfg, [10, 20, 40], "uniform", seed=0)
        assert 1.7 <= study.order_linf <= 2.6
        assert math.isnan(study.rows[0].order)
        assert study.rows[1].order == pytest.approx(
            math.log(study.rows[0].error_linf / study.rows[1].error_linf) / math.log(2),
            rel=1e-12)

    def test_lsq_slope(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        assert _lsq_slope(x, x**2) == pytest.approx(2.0, abs=1e-12)


class TestCoarsening:
    def test_requires_hminus1(self, tiny_cfg):
        with pytest.raises(ConfigError, match="Hminus1"):
            coarsening_experiment(tiny_cfg(flow="L2"))

    def test_unknown_variant(self, tiny_cfg):
        with pytest.raises(ConfigError, match="variant"):
            coarsening_experiment(tiny_cfg(), variants=("warp",))

    def test_micro_comparison(self, tiny_cfg):
        cfg = tiny_cfg(schedule=adaptive_schedule(0.3, 1e-3, 1e-2, 1000.0),
                       T=0.3)
        report = coarsening_experiment(cfg, dt_large=1e-2, dt_small=1e-3,
                                       checkpoints=(0.1, 0.3))
        assert set(report.runs) == {"fixed-large", "adaptive", "fixed-small"}
        assert report.step_counts["fixed-large"] == 30
        assert report.step_counts["fixed-small"] == 300
        assert report.max_energy_deviation is not None
        assert report.max_energy_deviation < 0.05
        # all three variants share the same initial field
        e0 = {v: r.initial.energy for v, r in report.runs.items()}
        assert len(set(e0.values())) == 1

    def test_checkpoints_beyond_horizon_dropped(self, tiny_cfg):
        cfg = tiny_cfg(schedule=adaptive_schedule(0.2, 1e-3, 1e-2, 1000.0))
        report = coarsening_experiment(cfg, dt_large=1e-2, dt_small=1e-3,
                                       checkpoints=(0.1, 5.0))
        assert report.checkpoints == (0.1,)
