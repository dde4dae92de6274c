"""Flat key = value run configuration with section headers.

Sections are cosmetic (keys live in one namespace, order-independent);
unknown keys and malformed values are rejected with their line number.
The fully resolved configuration (defaults included) is echoed into the
run directory for provenance.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from pathlib import Path

from curveflow.driver import Phase, RunPlan
from curveflow.errors import ConfigurationError
from curveflow.geometry import ShapeSpec
from curveflow.grid import GridSpec
from curveflow.levelset import ReinitControls
from curveflow.velocity import PhysicalParams
from curveflow import masks

_REQUIRED = ("dim", "extent", "spacing", "kind", "v0", "method", "dt", "t_end",
             "output_interval")

_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}

# key -> (type tag, default); None default means required or conditional
_SCHEMA: dict[str, tuple[str, object]] = {
    "dim": ("int", None),
    "extent": ("floats", None),
    "spacing": ("float", None),
    "kind": ("str", None),
    "radius": ("float", 0.0),
    "sides": ("int", 0),
    "side": ("float", 0.0),
    "perimeter": ("float", 0.0),
    "rotation_deg": ("float", 0.0),
    "centers": ("points", ()),
    "radii": ("floats_list", ()),
    "image": ("str", ""),
    "pixel_size": ("float", 0.0),
    "threshold": ("float", 0.5),
    "tissue_inside": ("bool", True),
    "v0": ("float", None),
    "D": ("float", 0.0),
    "A": ("float", 0.0),
    "P": ("float", 0.0),
    "k": ("float", 1.0),
    "method": ("int", None),
    "dt": ("float", None),
    "t_end": ("float", None),
    "output_interval": ("float", None),
    "phases": ("phases", ()),
    "heaviside_gate": ("bool", False),
    "epsilon_reinit": ("float", 5.0),
    "beta": ("float", 5.0),
    "reinit_max_iters": ("int", 200),
    "reinit_every": ("int", 1),
    "extrap_every": ("int", 10),
    "extrap_iters": ("int", 10),
    "cfl_max": ("float", 0.45),
    "boundary_rule": ("str", "linear"),
    "init_tol": ("float", 2e-3),
    "init_max_iters": ("int", 20000),
    "init_reinit_max_iters": ("int", 2000),
    "v_cap_factor": ("float", 100.0),
    "far_guards": ("bool", False),
    "far_cap_factor": ("float", 5.0),
    "use_clamped_div_n": ("bool", True),
    "out_dir": ("str", ""),
    "dump_fields": ("bool", False),
    "field_format": ("str", "txt"),
}


@dataclass
class SimConfig:
    grid: GridSpec
    shape: ShapeSpec
    plan: RunPlan
    out_dir: str
    dump_fields: bool
    field_format: str
    resolved: dict
    warnings: list[str] = dc_field(default_factory=list)


def _parse_value(key: str, raw: str, lineno: int):
    tag = _SCHEMA[key][0]
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "bool":
            return _BOOL[raw.strip().lower()]
        if tag == "str":
            return raw.strip()
        if tag == "floats":
            parts = [float(p) for p in raw.replace(",", " ").split()]
            return tuple(parts)
        if tag == "floats_list":
            return tuple(float(p) for p in raw.replace(",", " ").split())
        if tag == "points":
            pts = []
            for chunk in raw.split(";"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                coords = [float(p) for p in chunk.replace(",", " ").split()]
                pts.append(tuple(coords))
            return tuple(pts)
        if tag == "phases":
            phases = []
            for chunk in raw.split(";"):
                chunk = chunk.strip()
                if not chunk:
                    continue
                bits = chunk.split(":")
                dur = float(bits[0])
                sign = int(bits[1]) if len(bits) > 1 else 1
                gate = _BOOL[bits[2].strip().lower()] if len(bits) > 2 else False
                phases.append((dur, sign, gate))
            return tuple(phases)
    except (ValueError, KeyError) as exc:
        raise ConfigurationError(
            f"line {lineno}: cannot parse {key} = {raw!r} ({exc})"
        ) from exc
    raise ConfigurationError(f"line {lineno}: unhandled key type for {key}")


def _build_shape(vals: dict) -> ShapeSpec:
    kind = vals["kind"]
    inside = vals["tissue_inside"]
    if kind == "circle":
        return ShapeSpec.circle(vals["radius"], tissue_inside=inside)
    if kind == "sphere":
        return ShapeSpec.sphere(vals["radius"], tissue_inside=inside)
    if kind == "regular_polygon":
        return ShapeSpec.regular_polygon(
            sides=vals["sides"], side=vals["side"], perimeter=vals["perimeter"],
            rotation_deg=vals["rotation_deg"], tissue_inside=inside,
        )
    if kind == "multi_circle":
        return ShapeSpec.multi_circle(
            centers=list(vals["centers"]), radii=list(vals["radii"]),
            tissue_inside=inside,
        )
    if kind == "image_mask":
        return ShapeSpec.image_mask(
            vals["image"], pixel_size=vals["pixel_size"],
            threshold=vals["threshold"], tissue_inside=inside,
        )
    raise ConfigurationError(f"unknown shape kind {kind!r}")


def resolve_builtin_mask(image: str, target_dir: str | Path) -> str:
    """``builtin:<name>`` mask references materialise next to the run."""
    if not image.startswith("builtin:"):
        return image
    name = image.split(":", 1)[1]
    path = Path(target_dir) / f"mask_{name}.txt"
    masks.write_mask(name, path)
    return str(path)


def parse_config(text: str, base_dir: str | Path = ".") -> SimConfig:
    """Parse and fully validate a configuration document."""
    values: dict = {}
    lines_of: dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(
                f"line {lineno}: duplicate key {key!r} (first at line {lines_of[key]})"
            )
        values[key] = _parse_value(key, raw.strip(), lineno)
        lines_of[key] = lineno

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigurationError(
            "missing required keys: " + ", ".join(sorted(missing))
        )
    resolved = {k: (values[k] if k in values else default) for k, (_, default) in _SCHEMA.items()}

    extent = resolved["extent"]
    if len(extent) == 1:
        extent = extent * resolved["dim"]
    if len(extent) != resolved["dim"]:
        raise ConfigurationError(
            f"line {lines_of['extent']}: extent needs 1 or {resolved['dim']} entries"
        )
    grid = GridSpec.centered(resolved["dim"], extent=extent, spacing=resolved["spacing"])

    if resolved["kind"] == "image_mask":
        if not resolved["image"] or resolved["pixel_size"] <= 0:
            raise ConfigurationError("image_mask needs image and pixel_size keys")
        if not resolved["image"].startswith("builtin:"):
            img = Path(resolved["image"])
            if not img.is_absolute():
                resolved["image"] = str(Path(base_dir) / img)

    params = PhysicalParams(
        v0=resolved["v0"], D=resolved["D"], A=resolved["A"], P=resolved["P"],
        k=resolved["k"],
    )
    reinit = ReinitControls(
        epsilon_reinit=resolved["epsilon_reinit"], beta=resolved["beta"],
        max_iters=resolved["reinit_max_iters"],
    )
    if resolved["phases"]:
        phases = [
            Phase(duration=d, velocity_sign=s, heaviside_gate=g)
            for d, s, g in resolved["phases"]
        ]
    else:
        phases = [
            Phase(
                duration=resolved["t_end"],
                velocity_sign=1,
                heaviside_gate=resolved["heaviside_gate"],
            )
        ]
    plan = RunPlan(
        phases=phases,
        dt=resolved["dt"],
        output_interval=resolved["output_interval"],
        method=resolved["method"],
        params=params,
        reinit=reinit,
        reinit_every=resolved["reinit_every"],
        extrap_every=resolved["extrap_every"],
        extrap_iters=resolved["extrap_iters"],
        cfl_max=resolved["cfl_max"],
        boundary_rule=resolved["boundary_rule"],
        init_tol=resolved["init_tol"],
        init_max_iters=resolved["init_max_iters"],
        init_reinit_max_iters=resolved["init_reinit_max_iters"],
        v_cap_factor=resolved["v_cap_factor"],
        far_guards=resolved["far_guards"],
        far_cap_factor=resolved["far_cap_factor"],
        use_clamped_div_n=resolved["use_clamped_div_n"],
    )

    warnings = []
    dt_cfl = resolved["cfl_max"] * resolved["spacing"] / abs(resolved["v0"])
    if resolved["dt"] > dt_cfl:
        warnings.append(
            f"dt = {resolved['dt']:g} violates the CFL bound against v0; "
            f"suggested dt <= {dt_cfl:.4g} (the run will halve dt automatically)"
        )

    # shape construction is deferred for builtin masks; validate the rest now
    shape = None
    if not str(resolved["image"]).startswith("builtin:"):
        shape = _build_shape(resolved)

    cfg = SimConfig(
        grid=grid,
        shape=shape,
        plan=plan,
        out_dir=resolved["out_dir"],
        dump_fields=resolved["dump_fields"],
        field_format=resolved["field_format"],
        resolved=resolved,
        warnings=warnings,
    )
    return cfg


def materialise_shape(cfg: SimConfig, run_dir: str | Path) -> ShapeSpec:
    """Finish shape construction, writing builtin masks next to the run."""
    if cfg.shape is not None:
        return cfg.shape
    vals = dict(cfg.resolved)
    vals["image"] = resolve_builtin_mask(vals["image"], run_dir)
    cfg.shape = _build_shape(vals)
    return cfg.shape


def echo_config(cfg: SimConfig, path: str | Path) -> None:
    lines = ["# resolved configuration"]
    for key in _SCHEMA:
        val = cfg.resolved[key]
        if isinstance(val, bool):
            val = "true" if val else "false"
        elif isinstance(val, tuple):
            if key == "centers":
                val = "; ".join(", ".join(f"{c:g}" for c in p) for p in val)
            elif key == "phases":
                val = "; ".join(
                    f"{d:g}:{s:+d}:{'true' if g else 'false'}" for d, s, g in val
                )
            else:
                val = ", ".join(f"{v:g}" for v in val)
        lines.append(f"{key} = {val}")
    Path(path).write_text("\n".join(lines) + "\n")
