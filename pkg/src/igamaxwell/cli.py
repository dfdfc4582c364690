"""Command-line interface for the benchmark scenarios.

Subcommands: spectrum (solve one scenario and compare against the
closed-form oracle), infsup (inf-sup constant sweep over refinements
and coupling parameters), sweep (refinement sweep with convergence-order
estimation), export-matrices (MatrixMarket dump of the assembled
operators).  All validation failures exit with a nonzero status.
"""

from __future__ import annotations

import pathlib

import click
import numpy as np
import scipy.io
import scipy.sparse as sp

from .bench import (
    ScenarioError,
    assemble_problem,
    estimate_order,
    frequency_ghz,
    infsup_sweep,
    load_scenario,
    oracle_spectrum,
    refine_scenario,
    run_scenario,
    write_sweep_csv,
)


def _load(path):
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from exc


def _parse_int_list(text, what):
    try:
        values = [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise click.ClickException(f"{what} must be a comma-separated integer list") from exc
    if not values:
        raise click.ClickException(f"{what} must not be empty")
    return values


@click.group()
def main():
    """Isogeometric Maxwell cavity eigenvalue benchmarks."""


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--output", type=click.Path(dir_okay=False), default=None,
              help="Write the spectrum comparison as CSV.")
@click.option("--frequency-scale", type=float, default=None,
              help="Geometry unit in metres; also report frequencies in GHz.")
def spectrum(scenario, output, frequency_scale):
    """Solve one scenario and compare its spectrum against the oracle."""
    sc = _load(scenario)
    try:
        result = run_scenario(sc, output=output)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from exc
    comparison = result["comparison"]
    click.echo(f"scenario      {sc.name}")
    click.echo(f"dofs          {result['n_dofs']} (+{result['n_constraints']} constraints)")
    click.echo(f"solver        {result['method']}")
    click.echo(f"kernel modes  {result['n_kernel']}")
    click.echo("  computed        oracle          rel_err")
    for c, o, e in comparison.matched:
        line = f"  {c:<15.8g} {o:<15.8g} {e:.3e}"
        if frequency_scale is not None:
            line += f"  {frequency_ghz([c], frequency_scale)[0]:.6g} GHz"
        click.echo(line)
    for v in comparison.spurious:
        click.echo(f"  {v:<15.8g} (spurious)")
    for v in comparison.missed:
        click.echo(f"  {'-':<15} {v:<15.8g} (missed)")
    if output:
        click.echo(f"wrote {output}")


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--sweep", "sweep_values", required=True,
              help="Comma-separated multiplier degrees (mortar) or mode counts (ssc).")
@click.option("--levels", default="0,1,2", show_default=True,
              help="Comma-separated dyadic refinement levels.")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def infsup(scenario, sweep_values, levels, output):
    """Numerical inf-sup constants over refinements and coupling parameters."""
    sc = _load(scenario)
    values = _parse_int_list(sweep_values, "--sweep")
    level_list = _parse_int_list(levels, "--levels")
    try:
        rows = infsup_sweep(sc, level_list, values)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from exc
    label = "q" if sc.coupling == "mortar" else "nmodes"
    click.echo("level " + " ".join(f"{label}={p:<3d} beta" for p in values))
    for level, cells in rows:
        click.echo(
            f"{level:<5d} "
            + " ".join(f"{ndof:>7d} {beta:.4e}" for _, ndof, beta in cells)
        )
    if output:
        write_sweep_csv(output, rows, label)
        click.echo(f"wrote {output}")


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--levels", default="0,1,2", show_default=True,
              help="Comma-separated dyadic refinement levels.")
@click.option("--mode-index", default=10, show_default=True,
              help="1-based index (counting multiplicity) of the tracked eigenvalue.")
@click.option("--output", type=click.Path(dir_okay=False), default=None)
def sweep(scenario, levels, mode_index, output):
    """Refinement sweep: tracked-eigenvalue errors and convergence order."""
    sc = _load(scenario)
    level_list = _parse_int_list(levels, "--levels")
    if mode_index < 1:
        raise click.ClickException("--mode-index must be at least 1")
    oracle = oracle_spectrum(sc.geometry, mode_index, radius=sc.radius, length=sc.length)
    target = oracle[mode_index - 1]
    errors, hs, ndofs = [], [], []
    for level in level_list:
        try:
            result = run_scenario(refine_scenario(sc, level))
        except ScenarioError as exc:
            raise click.ClickException(str(exc)) from exc
        physical = result["physical"]
        if len(physical) < mode_index:
            raise click.ClickException(
                f"level {level} returned only {len(physical)} physical eigenvalues; "
                "raise n_modes in the scenario"
            )
        err = abs(physical[mode_index - 1] - target) / target
        errors.append(max(err, np.finfo(float).tiny))
        hs.append(0.5 ** level)
        ndofs.append(result["n_dofs"])
    click.echo("level h        ndof     rel_err")
    for level, h, n, e in zip(level_list, hs, ndofs, errors):
        click.echo(f"{level:<5d} {h:<8.4g} {n:<8d} {e:.6e}")
    if len(errors) >= 2:
        order = estimate_order(errors, hs)
        click.echo(f"estimated order {order:.3f}")
    if output:
        import csv as _csv

        with open(output, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["level", "h", "ndof", "rel_err"])
            for level, h, n, e in zip(level_list, hs, ndofs, errors):
                writer.writerow([level, f"{h:.12e}", n, f"{e:.12e}"])
        click.echo(f"wrote {output}")


@main.command("export-matrices")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--outdir", type=click.Path(file_okay=False), default=".",
              show_default=True)
def export_matrices(scenario, outdir):
    """Write the assembled operators as MatrixMarket files."""
    sc = _load(scenario)
    try:
        problem = assemble_problem(sc)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from exc
    out = pathlib.Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(out / "stiffness.mtx", sp.coo_matrix(problem.A))
    scipy.io.mmwrite(out / "mass.mtx", sp.coo_matrix(problem.M))
    written = ["stiffness.mtx", "mass.mtx"]
    if problem.B is not None:
        scipy.io.mmwrite(out / "constraint.mtx", sp.coo_matrix(problem.B))
        written.append("constraint.mtx")
    click.echo(f"wrote {', '.join(written)} to {out}")


if __name__ == "__main__":
    main()
