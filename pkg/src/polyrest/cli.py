"""Command-line front end: parse networks, run solves, emit JSON/CSV."""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass

import click
import numpy as np

from . import __version__, linprog, oracle, restriction, seqopt
from .errors import (
    Divergence,
    Infeasible,
    InfeasibleCenter,
    InvalidInitialPoint,
    NonConvergence,
    ParseError,
)
from .network import BusMatrices, build_bus_matrices, parse_network
from .powerflow import (
    FixedPointConfig,
    OperatingPoint,
    SplitLoadVector,
    VoltageProfile,
    fixed_point_solve_stats,
    pf_residual,
    slack_injection,
)

EXIT_PARSE = 1
EXIT_NON_CONVERGENCE = 2
EXIT_DIVERGENCE = 3
EXIT_INVALID_CENTER = 4
EXIT_LP_INFEASIBLE = 5


@dataclass
class RunManifest:
    command: str
    inputs: dict
    config: dict
    version: str
    duration_s: float

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "version": self.version,
            "duration_s": round(self.duration_s, 6),
        }


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_network(path: str) -> BusMatrices:
    try:
        with open(path) as fh:
            topology = parse_network(fh.read())
        return build_bus_matrices(topology)
    except OSError as exc:
        _fail(EXIT_PARSE, f"cannot read network file: {exc}")
    except ParseError as exc:
        _fail(EXIT_PARSE, f"network file: {exc}")


def _read_loads(path: str, n: int) -> SplitLoadVector:
    try:
        with open(path) as fh:
            doc = json.load(fh)
        if set(doc) != {"pc", "qc", "pg", "qg"}:
            raise ValueError("loads file must have exactly pc, qc, pg, qg")
        s = SplitLoadVector(
            pc=np.asarray(doc["pc"], dtype=float),
            qc=np.asarray(doc["qc"], dtype=float),
            pg=np.asarray(doc["pg"], dtype=float),
            qg=np.asarray(doc["qg"], dtype=float),
        )
        if s.n != n:
            raise ValueError(f"loads have {s.n} buses, network has {n}")
        return s
    except OSError as exc:
        _fail(EXIT_PARSE, f"cannot read loads file: {exc}")
    except (ValueError, json.JSONDecodeError, TypeError) as exc:
        _fail(EXIT_PARSE, f"loads file: {exc}")


def _read_bounds(path: str | None, n: int) -> linprog.BoxBounds:
    # Defaults match the bundled feeder experiments: active consumption
    # and generation in [0, 35], reactive pinned to zero.
    limits = {"pc": (0.0, 35.0), "qc": (0.0, 0.0),
              "pg": (0.0, 35.0), "qg": (0.0, 0.0)}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
            extra = set(doc) - set(limits)
            if extra:
                raise ValueError(f"unknown bound keys: {sorted(extra)}")
            for key, pair in doc.items():
                lo, hi = float(pair[0]), float(pair[1])
                limits[key] = (lo, hi)
        except OSError as exc:
            _fail(EXIT_PARSE, f"cannot read bounds file: {exc}")
        except (ValueError, TypeError, IndexError, json.JSONDecodeError) as exc:
            _fail(EXIT_PARSE, f"bounds file: {exc}")
    return linprog.BoxBounds.from_limits(n, **limits)


def _emit(doc: dict, out: str | None):
    text = json.dumps(doc, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        click.echo(text)


def _emit_csv(text: str, manifest: RunManifest, out: str | None):
    header = "".join(
        f"# {line}\n"
        for line in json.dumps(manifest.to_dict()).splitlines()
    )
    body = header + text
    if out:
        with open(out, "w") as fh:
            fh.write(body)
    else:
        click.echo(body, nl=False)


def _delta_option(default=0.1, name="--delta"):
    def _check(ctx, param, value):
        if not 0.0 < value < 1.0:
            raise click.BadParameter("must lie strictly between 0 and 1")
        return value

    return click.option(name, type=float, default=default, show_default=True,
                        callback=_check, help="Voltage stability margin.")


@click.group()
@click.version_option(version=__version__)
def main():
    """Polyhedral restrictions of power-flow feasibility regions."""


@main.command("pf")
@click.argument("net_file", type=click.Path())
@click.argument("loads_file", type=click.Path())
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--max-iter", type=int, default=1000, show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="Write JSON here instead of stdout.")
def cmd_pf(net_file, loads_file, tol, max_iter, out):
    """Solve the fixed-point power flow for a loads file."""
    started = time.monotonic()
    matrices = _read_network(net_file)
    load = _read_loads(loads_file, matrices.n)
    cfg = FixedPointConfig(tol=tol, max_iter=max_iter)
    try:
        profile, iterations = fixed_point_solve_stats(matrices, load, cfg=cfg)
    except NonConvergence as exc:
        _fail(EXIT_NON_CONVERGENCE, str(exc))
    except Divergence as exc:
        _fail(EXIT_DIVERGENCE, str(exc))
    s0 = slack_injection(matrices, profile)
    manifest = RunManifest(
        command="pf",
        inputs={"network": net_file, "loads": loads_file},
        config={"tol": tol, "max_iter": max_iter},
        version=__version__,
        duration_s=time.monotonic() - started,
    )
    _emit(
        {
            "voltages": [{"re": z.real, "im": z.imag} for z in profile.v],
            "v_sq": [float(abs(z)) ** 2 for z in profile.v],
            "slack_power": {"re": s0.real, "im": s0.imag},
            "residual": pf_residual(matrices, profile, load),
            "iterations": iterations,
            "manifest": manifest.to_dict(),
        },
        out,
    )


@main.command("restrict")
@click.argument("net_file", type=click.Path())
@click.option("--center", "center_file", type=click.Path(), default=None,
              help="Loads file for the center point (default: zero load).")
@_delta_option()
@click.option("--out", type=click.Path(), default=None)
def cmd_restrict(net_file, center_file, delta, out):
    """Emit the polyhedral restriction around an operating point."""
    started = time.monotonic()
    matrices = _read_network(net_file)
    try:
        if center_file is None:
            p = restriction.build_restriction_nominal(matrices, matrices.v0, delta)
        else:
            load = _read_loads(center_file, matrices.n)
            try:
                profile = fixed_point_solve_stats(matrices, load)[0]
            except (NonConvergence, Divergence) as exc:
                raise InfeasibleCenter(f"center power flow failed: {exc}")
            p = restriction.build_restriction(
                matrices, OperatingPoint(v_hat=profile, s_hat=load), delta
            )
    except InfeasibleCenter as exc:
        _fail(EXIT_INVALID_CENTER, str(exc))
    manifest = RunManifest(
        command="restrict",
        inputs={"network": net_file, "center": center_file},
        config={"delta": delta},
        version=__version__,
        duration_s=time.monotonic() - started,
    )
    doc = json.loads(restriction.to_json(p))
    doc["manifest"] = manifest.to_dict()
    _emit(doc, out)


@main.command("seqopt")
@click.argument("net_file", type=click.Path())
@click.option("--objective", type=click.Choice(["max-load", "min-load"]),
              default="max-load", show_default=True)
@_delta_option(name="--delta0")
@click.option("--eps", type=float, default=0.01, show_default=True,
              help="Relative convergence threshold on the objective.")
@click.option("--max-iter", type=int, default=100, show_default=True)
@click.option("--bounds", "bounds_file", type=click.Path(), default=None,
              help="JSON with pc/qc/pg/qg [lo, hi] pairs.")
@click.option("--out", type=click.Path(), default=None)
def cmd_seqopt(net_file, objective, delta0, eps, max_iter, bounds_file, out):
    """Run the sequential restricted optimization from zero load."""
    started = time.monotonic()
    matrices = _read_network(net_file)
    n = matrices.n
    bounds = _read_bounds(bounds_file, n)
    direction = "maximize" if objective == "max-load" else "minimize"
    obj = linprog.LinearObjective.active_load(n, direction)
    cfg = seqopt.SeqOptConfig(delta0=delta0, epsilon=eps, max_iterations=max_iter)
    try:
        trace = seqopt.run(
            matrices,
            SplitLoadVector.zeros(n),
            VoltageProfile.flat(n, matrices.v0),
            obj,
            bounds,
            cfg,
        )
    except InvalidInitialPoint as exc:
        _fail(EXIT_INVALID_CENTER, str(exc))
    except NonConvergence as exc:
        _fail(EXIT_NON_CONVERGENCE, str(exc))
    except Divergence as exc:
        _fail(EXIT_DIVERGENCE, str(exc))

    click.echo(f"{'iter':>4}  {'delta':>10}  {'objective':>14}", err=True)
    for k, it in enumerate(trace.iterates):
        click.echo(f"{k:>4}  {it.delta:>10.6f}  {it.objective:>14.8f}", err=True)
    click.echo(f"termination: {trace.termination.value}", err=True)

    if (
        trace.termination is seqopt.Termination.LP_INFEASIBLE
        and len(trace.iterates) == 1
    ):
        _fail(EXIT_LP_INFEASIBLE, "restriction is empty at the initial point")

    manifest = RunManifest(
        command="seqopt",
        inputs={"network": net_file, "bounds": bounds_file},
        config={
            "objective": objective,
            "delta0": delta0,
            "eps": eps,
            "max_iter": max_iter,
        },
        version=__version__,
        duration_s=time.monotonic() - started,
    )
    doc = json.loads(trace.to_json())
    doc["manifest"] = manifest.to_dict()
    _emit(doc, out)


def _parse_slice(text: str) -> list[str]:
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not 1 <= len(parts) <= 2:
        raise click.BadParameter("slice must name one or two coordinates")
    for part in parts:
        if part[0] not in "pq" or not part[1:].isdigit() or int(part[1:]) < 1:
            raise click.BadParameter(f"bad coordinate {part!r}; use e.g. p1, q2")
    return parts


@main.command("region")
@click.argument("net_file", type=click.Path())
@click.option("--slice", "slice_spec", default="p1,q1", show_default=True,
              help="One or two net-load coordinates, e.g. p1,p2.")
@_delta_option()
@click.option("--grid", type=int, default=201, show_default=True,
              help="Grid resolution per axis.")
@click.option("--range", "range_spec", type=(float, float), default=(-5.0, 5.0),
              show_default=True, help="Sweep interval for every axis.")
@click.option("--power-factor", type=float, default=None,
              help="Drive q from swept p coordinates at this power factor.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Reserved for sampling reproducibility (grid is exact).")
@click.option("--out", type=click.Path(), default=None,
              help="CSV destination for the region sample.")
@click.option("--polygon-out", type=click.Path(), default=None,
              help="Also write the restriction's slice polygon CSV here.")
def cmd_region(net_file, slice_spec, delta, grid, range_spec, power_factor,
               seed, out, polygon_out):
    """Sample the true feasibility region over a 1-D or 2-D slice."""
    started = time.monotonic()
    matrices = _read_network(net_file)
    names = _parse_slice(slice_spec)
    axes = []
    for name in names:
        node = int(name[1:])
        if node > matrices.n:
            _fail(EXIT_PARSE, f"coordinate {name} exceeds the {matrices.n} load buses")
        axes.append(
            oracle.AxisSpec(kind=name[0], node=node, lo=range_spec[0],
                            hi=range_spec[1], resolution=grid)
        )
    sample = oracle.sample_region(
        matrices, delta, axes, power_factor=power_factor
    )
    manifest = RunManifest(
        command="region",
        inputs={"network": net_file},
        config={
            "slice": slice_spec,
            "delta": delta,
            "grid": grid,
            "range": list(range_spec),
            "power_factor": power_factor,
            "seed": seed,
        },
        version=__version__,
        duration_s=time.monotonic() - started,
    )
    _emit_csv(oracle.region_to_csv(sample), manifest, out)

    if polygon_out is not None:
        if len(axes) != 2:
            _fail(EXIT_PARSE, "polygon output needs a 2-D slice")
        p = restriction.build_restriction_nominal(matrices, matrices.v0, delta)
        polys = oracle.restriction_slice_polygons(p, (axes[0], axes[1]))
        lines = ["polygon," + axes[0].label + "," + axes[1].label + "\n"]
        for k, poly in enumerate(polys):
            for vx, vy in poly:
                lines.append(f"{k},{vx:.10g},{vy:.10g}\n")
        _emit_csv("".join(lines), manifest, polygon_out)


@main.group("oracle")
def cmd_oracle():
    """Ground-truth reference computations."""


@cmd_oracle.command("two-node")
@click.option("--r", type=float, required=True)
@click.option("--x", type=float, required=True)
@click.option("--p1", type=float, required=True)
@click.option("--q1", type=float, required=True)
@click.option("--v0", type=float, default=1.0, show_default=True)
@click.option("--delta", type=float, default=None,
              help="Also report the squared-current box for this margin.")
@click.option("--out", type=click.Path(), default=None)
def cmd_oracle_two_node(r, x, p1, q1, v0, delta, out):
    """Closed-form solutions for a single line with one injection."""
    started = time.monotonic()
    case = oracle.TwoNodeCase(r=r, x=x, p1=p1, q1=q1, v0_mag=v0)
    solutions = [
        {"ell": s.ell, "v1_sq": s.v1_sq, "p0": s.p0, "q0": s.q0}
        for s in case.solutions()
    ]
    doc = {"solutions": solutions}
    if delta is not None:
        lo, hi = case.current_box(delta)
        doc["current_box"] = {"lo": lo, "hi": hi, "delta": delta}
    doc["manifest"] = RunManifest(
        command="oracle two-node",
        inputs={},
        config={"r": r, "x": x, "p1": p1, "q1": q1, "v0": v0, "delta": delta},
        version=__version__,
        duration_s=time.monotonic() - started,
    ).to_dict()
    _emit(doc, out)


@cmd_oracle.command("optimum")
@click.argument("net_file", type=click.Path())
@click.option("--objective", type=click.Choice(["max-load", "min-load"]),
              default="max-load", show_default=True)
@_delta_option()
@click.option("--grid", type=int, default=201, show_default=True)
@click.option("--bounds", "bounds_file", type=click.Path(), default=None)
@click.option("--out", type=click.Path(), default=None)
def cmd_oracle_optimum(net_file, objective, delta, grid, bounds_file, out):
    """Brute-force grid search for the best feasible load."""
    started = time.monotonic()
    matrices = _read_network(net_file)
    bounds = _read_bounds(bounds_file, matrices.n)
    direction = "maximize" if objective == "max-load" else "minimize"
    obj = linprog.LinearObjective.active_load(matrices.n, direction)
    result = oracle.brute_force_optimum(matrices, obj, bounds, delta, grid)
    doc = {
        "value": result.value,
        "resolution": result.resolution,
        "point": {
            "pc": result.point.pc.tolist(),
            "qc": result.point.qc.tolist(),
            "pg": result.point.pg.tolist(),
            "qg": result.point.qg.tolist(),
        },
        "manifest": RunManifest(
            command="oracle optimum",
            inputs={"network": net_file, "bounds": bounds_file},
            config={"objective": objective, "delta": delta, "grid": grid},
            version=__version__,
            duration_s=time.monotonic() - started,
        ).to_dict(),
    }
    _emit(doc, out)


if __name__ == "__main__":
    main()
