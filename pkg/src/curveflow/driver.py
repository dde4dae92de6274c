"""Time-stepping driver: joint evolution of phi and V.

Per step (operator splitting):

* level-set update  phi -> phi - dt V |grad phi| (forward Euler, Godunov),
  optionally gated by the curvature Heaviside H(kappa < 0) so tissue only
  forms on concave substrate;
* re-initialisation of phi (Methods 2 and 3);
* velocity update   V -> ADI(D lap V) + dt alpha with alpha frozen at
  time n;
* orthogonal extrapolation of V off the interface (Method 3, every
  ``extrap_every``-th step).

Method 1 skips both re-initialisations, Method 2 only re-initialises phi.
A run is an ordered list of phases; each phase carries a duration, a
velocity sign (tissue deposition vs resorption: the V field is negated at
a sign flip), and its Heaviside-gate flag.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

import numpy as np

from curveflow.errors import CflViolationError, NumericalBlowupError
from curveflow.geometry import (
    DiagnosticsRecord,
    InterfaceSample,
    ShapeSpec,
    append_diagnostics_csv,
    append_interface_csv,
    build_sdf,
    cell_number,
    extract_interface,
)
from curveflow.grid import GridSpec, ScalarField, has_sign_change, write_snapshot
from curveflow.levelset import ReinitControls, advance_phi, reinitialize
from curveflow.stencils import averaged_normal, curvature, weno5_pairs
from curveflow.velocity import (
    PhysicalParams,
    adi_step,
    assemble_alpha,
    extend_initial_velocity,
    extrapolate_orthogonal,
)

MAX_DT_HALVINGS = 4


@dataclass(frozen=True)
class Phase:
    duration: float
    velocity_sign: int = 1
    heaviside_gate: bool = False

    def __post_init__(self):
        if self.duration <= 0.0:
            raise ValueError("phase duration must be positive")
        if self.velocity_sign not in (-1, 1):
            raise ValueError("velocity_sign must be +1 or -1")


@dataclass
class RunPlan:
    phases: list[Phase]
    dt: float
    output_interval: float
    method: int
    params: PhysicalParams
    reinit: ReinitControls = dc_field(default_factory=ReinitControls)
    reinit_every: int = 1
    extrap_every: int = 10
    extrap_iters: int = 10
    cfl_max: float = 0.45
    boundary_rule: str = "linear"
    init_tol: float = 2e-3
    init_max_iters: int = 20000
    # Step-1 re-initialisation cap (beta = 20 dx band); scenes whose skeleton
    # creases cross the wide band never meet the criterion and plateau early
    init_reinit_max_iters: int = 2000
    # |V| ceiling in units of |v0|, applied to the initial extension and to
    # every step: the anticipation field genuinely diverges at skeleton
    # creases of closing regions (colliding fronts), far from the contour
    v_cap_factor: float = 100.0
    # Opt-in far-field guards for multi-body scenes at low diffusivity
    # (Method 3): tighter |V| ceiling outside the 10 dx band and a frozen
    # advance beyond ``far_freeze_beta`` dx.  At deep skeleton creases the
    # clamped curvature oscillates signs node-wise, so -kappa V^2 compounds
    # at rate V^2/dx wherever D (pi/dx)^2 damping cannot hold it, and the
    # runaway would advect deep contours into phantom sign changes.
    # Method 3's far field is undefined by construction (V is re-extended
    # from interface values in a 5 dx band), and the per-step
    # re-initialisation re-derives the signed distance ahead of the
    # interface as it approaches formerly frozen nodes.  Smooth single-body
    # scenes must leave this off: the guards measurably perturb late-time
    # accuracy there while the global cap alone is sufficient.
    far_guards: bool = False
    far_cap_factor: float = 5.0
    far_freeze_beta: float = 12.0
    use_clamped_div_n: bool = True

    def __post_init__(self):
        if self.method not in (1, 2, 3):
            raise ValueError(f"method must be 1, 2 or 3, got {self.method}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not self.phases:
            raise ValueError("at least one phase is required")
        if self.output_interval <= 0.0 or self.output_interval > min(
            p.duration for p in self.phases
        ) + 1e-12:
            raise ValueError("output_interval must be positive and fit in every phase")


@dataclass
class StepState:
    """Snapshot handed to an observer callback at every output time."""

    t: float
    step: int
    phi: ScalarField
    V: ScalarField
    sample: InterfaceSample
    kappa_clamped: np.ndarray
    phase_index: int


@dataclass
class RunResult:
    snapshots: list[tuple[float, InterfaceSample]]
    diagnostics: list[DiagnosticsRecord]
    status: str  # "completed" | "closed"
    summary: dict


def _heaviside_gate(kappa_clamped: np.ndarray) -> np.ndarray:
    """1 where the substrate is concave (kappa < 0), 0 on flat/convex."""
    return (kappa_clamped < 0.0).astype(np.float64)


def _edge_clearance(sample: InterfaceSample, grid: GridSpec) -> float:
    if sample.is_empty:
        return float("inf")
    clearance = float("inf")
    for a in range(grid.dim):
        lo = grid.origin[a]
        hi = grid.origin[a] + grid.extent[a]
        clearance = min(
            clearance,
            float((sample.vertices[:, a] - lo).min()),
            float((hi - sample.vertices[:, a]).min()),
        )
    return clearance


def run(
    plan: RunPlan,
    shape: ShapeSpec | None,
    grid: GridSpec,
    run_dir: str | Path | None = None,
    dump_fields: bool = False,
    field_format: str = "txt",
    observer: Callable[[StepState], None] | None = None,
    initial_phi: ScalarField | None = None,
) -> RunResult:
    """Execute a full simulation; returns snapshots and diagnostics, and
    writes the CSV streams plus a plain-text summary when ``run_dir`` is
    given.

    ``initial_phi`` bypasses shape construction (the field must already be
    a signed distance function).  The run halts early with status "closed"
    when the interface vanishes (total infill or resorption); a CFL
    violation halves dt up to four times before giving up.
    """
    t_wall = time.perf_counter()
    rule = plan.boundary_rule
    h = grid.spacing

    out_dir = None
    if run_dir is not None:
        out_dir = Path(run_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

    init_controls = ReinitControls(
        epsilon_reinit=plan.reinit.epsilon_reinit,
        beta=20.0,
        dtau=plan.reinit.dtau,
        max_iters=plan.init_reinit_max_iters,
    )

    # Step 1: signed distance for phi, uniform interface speed extended off S(0)
    if initial_phi is not None:
        phi = initial_phi
    else:
        phi = build_sdf(shape, grid, boundary_rule=rule, reinit_mask=False)
    res0 = reinitialize(phi, init_controls, boundary_rule=rule)
    phi = res0.field
    pairs_phi = res0.pairs
    if not res0.converged:
        warn0 = f"Step-1 reinit hit max_iters (residual {res0.residual:.3g})"
    else:
        warn0 = None

    sign0 = plan.phases[0].velocity_sign
    v0_eff = plan.params.v0 * sign0
    ext = extend_initial_velocity(
        phi,
        v0=v0_eff,
        method=plan.method,
        params=plan.params,
        dt=plan.dt,
        tol=plan.init_tol,
        max_iters=plan.init_max_iters,
        cap_factor=plan.v_cap_factor,
        boundary_rule=rule,
    )
    V = ext.field
    if not ext.converged:
        msg = (
            f"velocity extension unconverged after {ext.iterations} sweeps "
            f"(residual {ext.residual:.3g})"
        )
        warn0 = msg if warn0 is None else warn0 + "; " + msg

    sample0 = extract_interface(phi, V)
    S0 = sample0.measure()
    v0_mag = abs(plan.params.v0)

    snapshots: list[tuple[float, InterfaceSample]] = []
    diagnostics: list[DiagnosticsRecord] = []
    warnings: list[str] = [] if warn0 is None else [warn0]
    status = "completed"
    dt = plan.dt
    halvings = 0
    t = 0.0
    step = 0
    out_index = 0
    n_prev = None
    min_clearance = float("inf")

    def emit(sample: InterfaceSample, phase_sign: int, kappa_cl: np.ndarray, phase_i: int):
        nonlocal out_index, min_clearance
        # normalise by the current phase's signed nominal speed so the count
        # of active cells stays positive through resorption phases
        sgn = phase_sign * (1.0 if plan.params.v0 >= 0 else -1.0)
        n_ratio = sgn * cell_number(sample, v0_mag, S0) if S0 > 0 else 0.0
        band = np.abs(phi.interior) < 5.0 * h
        v_eff_band = V.interior[band] if band.any() else V.interior
        cfl = float(np.max(np.abs(v_eff_band))) * dt / h
        rec = DiagnosticsRecord(
            t=t,
            N_ratio=n_ratio,
            interface_measure=sample.measure(),
            V_min=float(sample.v_interp.min()) if not sample.is_empty else 0.0,
            V_max=float(sample.v_interp.max()) if not sample.is_empty else 0.0,
            cfl=cfl,
            n_components=sample.n_components,
        )
        snapshots.append((t, sample))
        diagnostics.append(rec)
        clearance = _edge_clearance(sample, grid)
        min_clearance = min(min_clearance, clearance)
        if out_dir is not None:
            append_interface_csv(out_dir / "interfaces.csv", t, sample, grid.dim)
            append_diagnostics_csv(out_dir / "diagnostics.csv", rec)
            if dump_fields:
                write_snapshot(phi, out_dir, "phi", out_index, fmt=field_format)
                write_snapshot(V, out_dir, "V", out_index, fmt=field_format)
        if observer is not None:
            kap = kappa_cl if kappa_cl is not None else curvature(phi).clamped
            observer(
                StepState(
                    t=t, step=step, phi=phi, V=V, sample=sample,
                    kappa_clamped=kap, phase_index=phase_i,
                )
            )
        out_index += 1

    emit(sample0, sign0, None, 0)
    next_output = plan.output_interval

    v_cap = plan.v_cap_factor * v0_mag

    prev_sign = sign0
    for phase_i, phase in enumerate(plan.phases):
        if phase.velocity_sign != prev_sign:
            V = V.with_interior(-V.interior, rule=rule)
            prev_sign = phase.velocity_sign
        t_phase_end = t + phase.duration

        while t < t_phase_end - 1e-12:
            dt_step = min(dt, t_phase_end - t)
            kap = curvature(phi)
            n = averaged_normal(phi, pairs=pairs_phi, prev=n_prev)
            n_prev = n
            gate = _heaviside_gate(kap.clamped) if phase.heaviside_gate else None
            if plan.method == 3 and plan.far_guards:
                near = (
                    np.abs(phi.interior) <= plan.far_freeze_beta * h
                ).astype(np.float64)
                gate = near if gate is None else gate * near

            try:
                phi_half = advance_phi(
                    phi, V.interior, dt_step, gate=gate, cfl_max=plan.cfl_max,
                    pairs=pairs_phi, boundary_rule=rule,
                )
            except CflViolationError:
                if halvings >= MAX_DT_HALVINGS:
                    raise
                halvings += 1
                dt = dt / 2.0
                warnings.append(f"dt halved to {dt:g} at t={t:g} (CFL)")
                continue

            if not has_sign_change(phi_half.interior):
                t += dt_step
                diagnostics.append(
                    DiagnosticsRecord(
                        t=t, N_ratio=0.0, interface_measure=0.0,
                        V_min=0.0, V_max=0.0, cfl=0.0, n_components=0,
                    )
                )
                snapshots.append((t, extract_interface(phi_half, V)))
                if out_dir is not None:
                    append_interface_csv(
                        out_dir / "interfaces.csv", t, snapshots[-1][1], grid.dim
                    )
                    append_diagnostics_csv(out_dir / "diagnostics.csv", diagnostics[-1])
                status = "closed"
                break

            if plan.method in (2, 3) and step % plan.reinit_every == 0:
                res = reinitialize(phi_half, plan.reinit, boundary_rule=rule)
                phi_new = res.field
                pairs_new = res.pairs
                if not res.converged:
                    warnings.append(
                        f"reinit hit max_iters at t={t:g} (residual {res.residual:.3g})"
                    )
            else:
                phi_new = phi_half
                pairs_new = None

            alpha = assemble_alpha(
                V, n, kap, plan.params, use_clamped_div_n=plan.use_clamped_div_n
            )
            V_new = adi_step(V, alpha, plan.params.D, dt_step, boundary_rule=rule)

            if plan.method == 3 and (step + 1) % plan.extrap_every == 0:
                if pairs_new is None:
                    pairs_new = weno5_pairs(phi_new)
                n_new = averaged_normal(phi_new, pairs=pairs_new, prev=n_prev)
                V_new = extrapolate_orthogonal(
                    V_new, phi_new, n_new, iters=plan.extrap_iters,
                    boundary_rule=rule,
                )

            if float(np.abs(V_new.interior).max()) > v_cap:
                V_new = V_new.with_interior(
                    np.clip(V_new.interior, -v_cap, v_cap), rule=rule
                )
            if plan.method == 3 and plan.far_guards:
                    far_cap = plan.far_cap_factor * v0_mag
                    vi = V_new.interior
                    far = np.abs(phi_new.interior) > 10.0 * h
                    if far.any() and float(np.abs(vi[far]).max()) > far_cap:
                        vi = vi.copy()
                        vi[far] = np.clip(vi[far], -far_cap, far_cap)
                        V_new = V_new.with_interior(vi, rule=rule)

            if not np.isfinite(phi_new.interior).all() or not np.isfinite(
                V_new.interior
            ).all():
                raise NumericalBlowupError(f"non-finite field values at t={t:g}")

            phi = phi_new
            pairs_phi = pairs_new
            V = V_new
            t += dt_step
            step += 1

            if t >= next_output - 1e-9:
                sample = extract_interface(phi, V)
                if sample.is_empty:
                    diagnostics.append(
                        DiagnosticsRecord(
                            t=t, N_ratio=0.0, interface_measure=0.0,
                            V_min=0.0, V_max=0.0, cfl=0.0, n_components=0,
                        )
                    )
                    snapshots.append((t, sample))
                    if out_dir is not None:
                        append_interface_csv(out_dir / "interfaces.csv", t, sample, grid.dim)
                        append_diagnostics_csv(out_dir / "diagnostics.csv", diagnostics[-1])
                    status = "closed"
                    break
                emit(sample, phase.velocity_sign, kap.clamped, phase_i)
                next_output += plan.output_interval
        if status == "closed":
            break

    if min_clearance < 5.0 * h:
        warnings.append(
            f"interface came within {min_clearance:.4g} mm of the domain edge"
        )

    expected = float(np.exp(-plan.params.depletion * t))
    drift = max(
        (abs(rec.N_ratio - np.exp(-plan.params.depletion * rec.t)) for rec in diagnostics),
        default=0.0,
    )
    summary = {
        "final_time_days": t,
        "status": status,
        "steps": step,
        "dt_final": dt,
        "dt_halvings": halvings,
        "S0_mm": S0,
        "n_ratio_final": diagnostics[-1].N_ratio if diagnostics else 0.0,
        "n_ratio_expected_final": expected,
        "n_ratio_max_drift": drift,
        "min_edge_clearance_mm": min_clearance,
        "wall_clock_s": time.perf_counter() - t_wall,
        "warnings": warnings,
    }
    if out_dir is not None:
        import json

        (out_dir / "summary.txt").write_text(json.dumps(summary, indent=2) + "\n")
    return RunResult(
        snapshots=snapshots, diagnostics=diagnostics, status=status, summary=summary
    )
