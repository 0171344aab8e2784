"""Command line interface: analyze, dist, simulate, validate.

Each command reads one scenario file, writes delimited output under the
output directory, and the report-producing commands (dist, validate) also
render a matplotlib figure next to the CSV.  Exit codes: 0 success or
all-pass, 1 usage/parse problems, 2 infeasible load, 3 numeric failure,
4 validation report failures.
"""

import csv
import math
import sys
from functools import partial
from pathlib import Path

import click
import numpy as np

from .analysis import TaggedView, aoi_lst, mean_metrics
from .errors import (
    ConvergenceError,
    InversionError,
    ScenarioError,
    SimulationError,
    StabilityError,
    TransformDomainError,
    ValidationFailure,
)
from .figures import save_distribution_figure, save_validation_figure
from .inversion import invert_cdf, invert_pdf
from .scenario import Scenario, parse_scenario
from .simulator import SimConfig, SimulationResult, simulate


def _fmt(value) -> str:
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [cell if isinstance(cell, str) else _fmt(cell) for cell in row]
            )


def _scenario_options(fn):
    fn = click.option("--tolerance", type=float, default=None, help="Relative validation tolerance.")(fn)
    fn = click.option("--reps", type=int, default=None, help="Simulation replications.")(fn)
    fn = click.option("--horizon", type=float, default=None, help="Simulation horizon.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Base seed for all streams.")(fn)
    fn = click.option("--out", type=str, default=None, help="Output directory.")(fn)
    fn = click.argument("scenario_file", type=click.Path())(fn)
    return fn


def _load(scenario_file, out, seed, horizon, reps, tolerance) -> Scenario:
    scn = parse_scenario(scenario_file)
    return scn.with_overrides(out=out, seed=seed, horizon=horizon, reps=reps, tolerance=tolerance)


def _tagged_views(scn: Scenario) -> dict[int, TaggedView]:
    return {k: TaggedView.from_model(scn.model, k) for k in scn.tagged}


def _class_grid(scn: Scenario, mean_aoi: float) -> np.ndarray:
    if scn.x_values is not None:
        return scn.x_values
    return np.linspace(0.0, scn.x_span * mean_aoi, scn.x_points)


@click.group()
def cli():
    """Age-of-information analysis for multi-source FCFS M/GI/1 systems."""


@cli.command()
@_scenario_options
def analyze(scenario_file, out, seed, horizon, reps, tolerance):
    """Closed-form per-class metrics (CSV + table)."""
    scn = _load(scenario_file, out, seed, horizon, reps, tolerance)
    views = _tagged_views(scn)
    rows = []
    for k, view in views.items():
        m = mean_metrics(view)
        rows.append(
            (str(k), view.arrival_rate, view.load, m.gamma,
             m.mean_wait, m.mean_delay, m.mean_peak_aoi, m.mean_aoi)
        )
    out_dir = Path(scn.output_dir)
    _write_csv(
        out_dir / "analyze.csv",
        ["class", "lambda", "rho", "gamma", "mean_wait", "mean_delay", "mean_peak_aoi", "mean_aoi"],
        rows,
    )
    click.echo(f"scenario {scn.name}: total load {scn.model.total_load:.6g}")
    header = f"{'class':>5} {'name':<12} {'lambda':>10} {'rho':>10} {'gamma':>12} {'E[W]':>12} {'E[D]':>12} {'E[peak]':>12} {'E[age]':>12}"
    click.echo(header)
    for row in rows:
        k = int(row[0])
        click.echo(
            f"{k:>5} {scn.class_names[k]:<12} "
            + " ".join(f"{float(v):>10.6g}" if i < 2 else f"{float(v):>12.8g}" for i, v in enumerate(row[1:]))
        )
    click.echo(f"wrote {out_dir / 'analyze.csv'}")


@cli.command()
@_scenario_options
def dist(scenario_file, out, seed, horizon, reps, tolerance):
    """Inverted age CDF and density per tagged class (CSV + figure)."""
    scn = _load(scenario_file, out, seed, horizon, reps, tolerance)
    views = _tagged_views(scn)
    rows, curves = [], []
    for k, view in views.items():
        m = mean_metrics(view)
        grid = _class_grid(scn, m.mean_aoi)
        transform = partial(aoi_lst, view)
        cdf = invert_cdf(transform, grid)
        pdf = np.zeros_like(grid)
        positive = grid > 0
        pdf[positive] = invert_pdf(transform, grid[positive])
        rows.extend((str(k), x, c, p) for x, c, p in zip(grid, cdf, pdf))
        curves.append((scn.class_names[k], grid, cdf, pdf))
    out_dir = Path(scn.output_dir)
    _write_csv(out_dir / "dist.csv", ["class", "x", "cdf", "pdf"], rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_distribution_figure(out_dir / "dist.png", curves, f"age distribution: {scn.name}")
    click.echo(f"wrote {out_dir / 'dist.csv'} and {out_dir / 'dist.png'}")


def _sim_config(scn: Scenario, cdf_grids=None) -> SimConfig:
    return SimConfig(
        horizon=scn.horizon,
        replications=scn.replications,
        warmup_fraction=scn.warmup_fraction,
        base_seed=scn.base_seed,
        cdf_grids=cdf_grids,
    )


def _simulate_rows(result: SimulationResult) -> list[tuple]:
    rows = []
    for k, stats in enumerate(result.classes):
        for metric in ("time_avg_aoi", "mean_delay", "mean_peak_aoi", "mean_gap", "delivery_rate"):
            est = getattr(stats, metric)
            rows.append((str(k), metric, est.value, est.ci_halfwidth, result.base_seed))
    rows.append(("all", "busy_fraction", result.busy_fraction.value,
                 result.busy_fraction.ci_halfwidth, result.base_seed))
    return rows


@cli.command(name="simulate")
@_scenario_options
def simulate_cmd(scenario_file, out, seed, horizon, reps, tolerance):
    """Simulated per-class metrics with confidence intervals (CSV)."""
    scn = _load(scenario_file, out, seed, horizon, reps, tolerance)
    result = simulate(scn.model, _sim_config(scn))
    out_dir = Path(scn.output_dir)
    _write_csv(
        out_dir / "simulate.csv",
        ["class", "metric", "estimate", "ci_halfwidth", "seed"],
        _simulate_rows(result),
    )
    for k, stats in enumerate(result.classes):
        click.echo(
            f"class {k}: age {stats.time_avg_aoi.value:.6g} "
            f"(+/- {stats.time_avg_aoi.ci_halfwidth:.2g}), "
            f"peak {stats.mean_peak_aoi.value:.6g}, delay {stats.mean_delay.value:.6g}"
        )
    click.echo(f"wrote {out_dir / 'simulate.csv'}")


def _threshold(tolerance: float, analytic: float, halfwidth: float) -> float:
    ci_term = 0.0 if math.isnan(halfwidth) else 3.0 * halfwidth
    return max(tolerance * abs(analytic), ci_term)


@cli.command()
@_scenario_options
def validate_cmd(scenario_file, out, seed, horizon, reps, tolerance):
    """Analytic vs simulated comparison with PASS/FAIL verdicts."""
    scn = _load(scenario_file, out, seed, horizon, reps, tolerance)
    views = _tagged_views(scn)
    analytics = {k: mean_metrics(view) for k, view in views.items()}
    grids = [
        _class_grid(scn, analytics[k].mean_aoi) if k in views else None
        for k in range(scn.model.num_classes)
    ]
    result = simulate(scn.model, _sim_config(scn, cdf_grids=grids))

    rows, curves, failures = [], [], 0
    click.echo(f"validation report: {scn.name} (tolerance {scn.tolerance:g})")
    header = f"{'class':>5} {'metric':<15} {'analytic':>14} {'simulated':>14} {'ci_halfwidth':>13} {'gap':>11} {'status':>7}"
    click.echo(header)

    def record(cls_label, metric, analytic, simulated, halfwidth, threshold):
        nonlocal failures
        gap = abs(simulated - analytic)
        status = "PASS" if gap <= threshold else "FAIL"
        if status == "FAIL":
            failures += 1
        rows.append((cls_label, metric, analytic, simulated, halfwidth, gap, threshold, status))
        hw_text = "-" if math.isnan(halfwidth) else f"{halfwidth:>13.3g}"
        click.echo(
            f"{cls_label:>5} {metric:<15} {analytic:>14.8g} {simulated:>14.8g} "
            f"{hw_text:>13} {gap:>11.3g} {status:>7}"
        )

    for k, view in views.items():
        m = analytics[k]
        stats = result.classes[k]
        pairs = [
            ("mean_aoi", m.mean_aoi, stats.time_avg_aoi),
            ("mean_peak_aoi", m.mean_peak_aoi, stats.mean_peak_aoi),
            ("mean_delay", m.mean_delay, stats.mean_delay),
            ("mean_gap", 1.0 / view.arrival_rate, stats.mean_gap),
            ("delivery_rate", view.arrival_rate, stats.delivery_rate),
        ]
        for metric, analytic_value, est in pairs:
            record(str(k), metric, analytic_value, est.value, est.ci_halfwidth,
                   _threshold(scn.tolerance, analytic_value, est.ci_halfwidth))
        grid = grids[k]
        analytic_cdf = invert_cdf(partial(aoi_lst, view), grid)
        empirical_cdf = result.cdf_values[k]
        sup_gap = float(np.max(np.abs(analytic_cdf - empirical_cdf)))
        record(str(k), "cdf_sup_gap", 0.0, sup_gap, float("nan"), scn.tolerance)
        curves.append((scn.class_names[k], grid, analytic_cdf, empirical_cdf))

    record("all", "busy_fraction", scn.model.total_load, result.busy_fraction.value,
           result.busy_fraction.ci_halfwidth,
           _threshold(scn.tolerance, scn.model.total_load, result.busy_fraction.ci_halfwidth))

    out_dir = Path(scn.output_dir)
    _write_csv(
        out_dir / "validate.csv",
        ["class", "metric", "analytic", "simulated", "ci_halfwidth", "abs_gap", "threshold", "status"],
        rows,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_validation_figure(out_dir / "validate.png", curves, f"analytic vs simulated age CDF: {scn.name}")
    total = len(rows)
    click.echo(f"wrote {out_dir / 'validate.csv'} and {out_dir / 'validate.png'}")
    if failures:
        click.echo(f"RESULT: FAIL ({failures} of {total} checks failed)")
        raise ValidationFailure(f"{failures} of {total} checks failed")
    click.echo(f"RESULT: PASS ({total} checks)")


# click identifiers cannot collide with the module-level simulate import.
cli.add_command(simulate_cmd, name="simulate")
cli.add_command(validate_cmd, name="validate")
for _name in ("simulate-cmd", "validate-cmd"):
    if _name in cli.commands:
        del cli.commands[_name]


def main(argv=None) -> None:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except StabilityError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (ConvergenceError, InversionError, SimulationError, TransformDomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except ValidationFailure as exc:
        click.echo(f"validation failed: {exc}", err=True)
        sys.exit(4)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)
