"""Driver orchestration: phases, methods, gating, CFL handling, outputs."""

import math

import numpy as np
import pytest

from curveflow.driver import Phase, RunPlan, StepState, run
from curveflow.errors import CflViolationError
from curveflow.geometry import ShapeSpec
from curveflow.grid import GridSpec
from curveflow.levelset import ReinitControls
from curveflow.oracles import CircleSolution, circle_R
from curveflow.velocity import PhysicalParams

from helpers import field_from_function


def small_circle_plan(duration=4.0, method=3, v0=0.016, D=0.01, **kw):
    return RunPlan(
        phases=[Phase(duration=duration)],
        dt=0.02,
        output_interval=1.0,
        method=method,
        params=PhysicalParams(v0=v0, D=D, **kw),
        reinit=ReinitControls(epsilon_reinit=5.0),
    )


class TestValidation:
    def test_plan_rejects_bad_method(self):
        with pytest.raises(ValueError, match="method"):
            small_circle_plan(method=4)

    def test_plan_rejects_empty_phases(self):
        with pytest.raises(ValueError, match="phase"):
            RunPlan(
                phases=[], dt=0.01, output_interval=1.0, method=3,
                params=PhysicalParams(v0=0.016),
            )

    def test_plan_rejects_oversized_output_interval(self):
        with pytest.raises(ValueError, match="output_interval"):
            RunPlan(
                phases=[Phase(duration=1.0)], dt=0.01, output_interval=2.0,
                method=3, params=PhysicalParams(v0=0.016),
            )

    def test_phase_validation(self):
        with pytest.raises(ValueError):
            Phase(duration=-1.0)
        with pytest.raises(ValueError):
            Phase(duration=1.0, velocity_sign=2)


class TestPoreInfill:
    def test_short_pore_run_tracks_analytic_radius(self):
        R0 = 0.7
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        res = run(
            small_circle_plan(duration=4.0),
            ShapeSpec.circle(R0, tissue_inside=False),
            grid,
        )
        sol = CircleSolution(R0=R0, v0=0.016)
        for t, sample in res.snapshots:
            r_mean = np.hypot(*sample.vertices.T).mean()
            assert r_mean == pytest.approx(circle_R(t, sol), rel=0.01)
        for rec in res.diagnostics:
            assert rec.N_ratio == pytest.approx(1.0, abs=0.02)

    def test_radial_symmetry_preserved(self):
        R0 = 0.7
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        res = run(
            small_circle_plan(duration=4.0),
            ShapeSpec.circle(R0, tissue_inside=False),
            grid,
        )
        for t, sample in res.snapshots:
            radii = np.hypot(*sample.vertices.T)
            assert radii.std() < 0.5 * grid.spacing

    def test_infill_speed_non_decreasing(self):
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        res = run(
            small_circle_plan(duration=4.0),
            ShapeSpec.circle(0.7, tissue_inside=False),
            grid,
        )
        vmax = [rec.V_max for rec in res.diagnostics]
        assert all(b >= a - 1e-12 for a, b in zip(vmax, vmax[1:]))

    def test_outward_growth_decelerates(self):
        grid = GridSpec.centered(2, extent=2.4, spacing=0.02)
        res = run(
            small_circle_plan(duration=4.0),
            ShapeSpec.circle(0.5, tissue_inside=True),
            grid,
        )
        vmax = [rec.V_max for rec in res.diagnostics]
        assert all(b <= a + 1e-12 for a, b in zip(vmax, vmax[1:]))

    def test_run_to_closure_reports_closed(self):
        grid = GridSpec.centered(2, extent=1.0, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=12.0)],
            dt=0.02,
            output_interval=0.5,
            method=3,
            params=PhysicalParams(v0=0.016, D=0.01),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        res = run(plan, ShapeSpec.circle(0.3, tissue_inside=False), grid)
        # closure at R0/(2 v0) = 9.4 days < 12
        assert res.status == "closed"
        assert res.diagnostics[-1].N_ratio == 0.0
        assert res.diagnostics[-1].interface_measure == 0.0


class TestMethods:
    def test_plane_translation_identical_across_methods(self):
        grid = GridSpec.centered(2, extent=2.0, spacing=0.05)
        phi0 = field_from_function(grid, lambda x, y: x + 0 * y)
        finals = []
        for method in (1, 2, 3):
            plan = RunPlan(
                phases=[Phase(duration=2.0)],
                dt=0.05,
                output_interval=1.0,
                method=method,
                params=PhysicalParams(v0=0.1, D=0.0),
                reinit=ReinitControls(epsilon_reinit=5.0),
            )
            res = run(plan, None, grid, initial_phi=phi0)
            t, sample = res.snapshots[-1]
            finals.append(np.sort(sample.vertices[:, 0]))
            # plane moved by v0 t exactly
            np.testing.assert_allclose(sample.vertices[:, 0], 0.1 * t, atol=1e-9)
        np.testing.assert_allclose(finals[0], finals[1], atol=1e-12)
        np.testing.assert_allclose(finals[0], finals[2], atol=1e-12)

    def test_balanced_proliferation_equals_no_depletion(self):
        grid = GridSpec.centered(3, extent=1.4, spacing=0.05)
        shapes = ShapeSpec.sphere(0.3)
        outs = []
        for P, A in ((0.0, 0.0), (0.1, 0.1)):
            plan = RunPlan(
                phases=[Phase(duration=0.5)],
                dt=0.025,
                output_interval=0.25,
                method=3,
                params=PhysicalParams(v0=0.016, D=1e-4, A=A, P=P),
                reinit=ReinitControls(epsilon_reinit=300.0),
            )
            res = run(plan, shapes, grid)
            outs.append(res.snapshots[-1][1].vertices)
        np.testing.assert_array_equal(outs[0], outs[1])


class TestGate:
    def test_convex_blob_is_frozen(self):
        # a disc of tissue is convex everywhere: H(kappa)=0, nothing moves
        grid = GridSpec.centered(2, extent=1.6, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=2.0, heaviside_gate=True)],
            dt=0.02,
            output_interval=0.5,
            method=3,
            params=PhysicalParams(v0=0.016, D=1e-4),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        res = run(plan, ShapeSpec.circle(0.5, tissue_inside=True), grid)
        r0 = np.hypot(*res.snapshots[0][1].vertices.T).mean()
        for t, sample in res.snapshots:
            radii = np.hypot(*sample.vertices.T)
            assert np.abs(radii - r0).max() < 0.1 * grid.spacing

    def test_gated_pore_still_infills(self):
        # a circular pore is concave from the tissue side: gate stays open
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=3.0, heaviside_gate=True)],
            dt=0.02,
            output_interval=1.0,
            method=3,
            params=PhysicalParams(v0=0.016, D=1e-4),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        res = run(plan, ShapeSpec.circle(0.7, tissue_inside=False), grid)
        sol = CircleSolution(R0=0.7, v0=0.016)
        t, sample = res.snapshots[-1]
        assert np.hypot(*sample.vertices.T).mean() == pytest.approx(
            circle_R(t, sol), rel=0.01
        )


class TestPhases:
    def test_sign_reversal_negates_velocity_field(self):
        grid = GridSpec.centered(2, extent=2.4, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=2.0), Phase(duration=2.0, velocity_sign=-1)],
            dt=0.02,
            output_interval=1.0,
            method=3,
            params=PhysicalParams(v0=0.016, D=0.01),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        states: list[StepState] = []
        res = run(
            plan, ShapeSpec.circle(0.5, tissue_inside=True), grid,
            observer=states.append,
        )
        r = {round(t, 6): np.hypot(*s.vertices.T).mean() for t, s in res.snapshots}
        assert r[2.0] > r[0.0]  # grew
        assert r[4.0] < r[2.0]  # then resorbed
        # N stays positive through the reversal
        assert all(rec.N_ratio > 0.9 for rec in res.diagnostics)


class TestCfl:
    def test_auto_halving_recovers(self):
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=0.5)],
            dt=0.5,  # CFL = 0.016*0.5/0.02 = 0.4 < 0.45 at t=0... force higher v0
            output_interval=0.25,
            method=3,
            params=PhysicalParams(v0=0.03, D=0.0),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        # v0 dt / h = 0.03*0.5/0.02 = 0.75 > 0.45 -> one halving suffices
        res = run(plan, ShapeSpec.circle(0.7, tissue_inside=False), grid)
        assert res.summary["dt_halvings"] == 1
        assert res.summary["dt_final"] == pytest.approx(0.25)
        assert res.status == "completed"

    def test_too_fast_raises_after_four_halvings(self):
        grid = GridSpec.centered(2, extent=2.2, spacing=0.02)
        plan = RunPlan(
            phases=[Phase(duration=0.5)],
            dt=0.5,  # CFL = 25: needs 6 halvings, only 4 allowed
            output_interval=0.25,
            method=3,
            params=PhysicalParams(v0=1.0, D=0.0),
            reinit=ReinitControls(epsilon_reinit=5.0),
        )
        with pytest.raises(CflViolationError):
            run(plan, ShapeSpec.circle(0.7, tissue_inside=False), grid)


class TestOutputs:
    def test_run_directory_contents_and_determinism(self, tmp_path):
        grid = GridSpec.centered(2, extent=2.2, spacing=0.04)
        shape = ShapeSpec.circle(0.7, tissue_inside=False)
        paths = []
        for tag in ("a", "b"):
            d = tmp_path / tag
            run(small_circle_plan(duration=1.0), shape, grid, run_dir=d,
                dump_fields=True)
            paths.append(d)
        for name in ("interfaces.csv", "diagnostics.csv", "summary.txt"):
            assert (paths[0] / name).exists()
        assert (paths[0] / "phi_000000.txt").exists()
        assert (paths[0] / "V_000001.txt").exists()
        for name in ("interfaces.csv", "diagnostics.csv"):
            assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()

    def test_observer_sees_every_output(self):
        grid = GridSpec.centered(2, extent=2.2, spacing=0.04)
        seen = []
        run(
            small_circle_plan(duration=1.0),
            ShapeSpec.circle(0.7, tissue_inside=False),
            grid,
            observer=lambda s: seen.append(s.t),
        )
        assert seen == pytest.approx([0.0, 1.0])
