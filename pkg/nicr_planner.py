"""
NICR Planner command line
Sample size planning and Monte Carlo verification for non-inferiority trials
with competing risks
"""

import functools
import json
import logging
import sys
from typing import Optional

import click
import numpy as np

from src.analysis.finegray import Decision, WeightMode, fit, noninferiority_decision
from src.core.design import Method, analytic_power, sample_size, table2_rows
from src.core.power import Hypothesis, PowerSimulator, table1_grid
from src.core.simgen import generate_dataset, summarize_dataset
from src.utils.datasets import read_dataset, write_dataset
from src.utils.exceptions import ConvergenceError, FileAccessError, PlannerError
from src.utils.reports import plot_power_svg, table2_frame, write_power_csv
from src.utils.run_config import RunConfig, validate


MODE_CHOICE = click.Choice([m.value for m in Method])
HYPOTHESIS_CHOICE = click.Choice([h.value for h in Hypothesis])


def handles_errors(command):
    """Translate planner errors into a message and the matching exit code"""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PlannerError as e:
            click.echo(f"❌ {e}", err=True)
            sys.exit(e.exit_code)
    return wrapper


def load_config(path: Optional[str], **overrides) -> RunConfig:
    config = RunConfig.from_file(path) if path else RunConfig()
    return config.with_overrides(**overrides)


def write_json(doc, path: str):
    try:
        with open(path, 'w') as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise FileAccessError(f"cannot write {path}: {e.strerror or e}")


def _per_group(counts) -> str:
    if counts[0] == counts[1]:
        return f"{counts[0]} per group"
    return f"{counts[0]} / {counts[1]} per group"


@click.group()
@click.option('--verbose', '-v', is_flag=True, help="Log progress and diagnostics to stderr.")
def cli(verbose: bool):
    """🧠 NICR Planner: non-inferiority trials with competing risks."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format='%(asctime)s - %(levelname)s - %(message)s',
    )


@cli.command('size')
@click.option('--config', 'config_path', type=click.Path(), help="JSON run configuration.")
@click.option('--mode', type=MODE_CHOICE, help="sdh (default) or single-event comparator.")
@click.option('--out', type=click.Path(), help="Also write the result as JSON.")
@handles_errors
def cmd_size(config_path, mode, out):
    """Required events and sample size."""
    config = validate(load_config(config_path, mode=mode))
    params = config.design_params()
    result = sample_size(params, config.method)
    events = result.events

    click.echo(f"Method:       {result.method.value}")
    click.echo(f"Events:       {events.events_per_group[0]} + {events.events_per_group[1]} "
               f"(fractional {events.events_fractional:.2f})")
    click.echo(f"Incidence w:  {result.w:.4f} (group 0 {result.w_by_group[0]:.4f}, "
               f"group 1 {result.w_by_group[1]:.4f})")
    click.echo(f"Sample size:  {result.n_per_group[0]} + {result.n_per_group[1]}")
    click.echo(f"Power at N:   {analytic_power(params, result.n_total, result.method):.4f}")
    click.echo(f"{result.n_total} total ({_per_group(result.n_per_group)}), {events.events_total} events")

    if out:
        write_json({'config': config.resolved().to_dict(), 'result': result.to_dict()}, out)


@cli.command('reproduce-table2')
@click.option('--out', type=click.Path(), help="Write the CSV here instead of stdout.")
@handles_errors
def cmd_reproduce_table2(out):
    """Recompute the six-row prostate-cancer planning table."""
    frame = table2_frame(table2_rows())
    if out:
        try:
            frame.to_csv(out, index=False, lineterminator='\n')
        except OSError as e:
            raise FileAccessError(f"cannot write {out}: {e.strerror or e}")
        click.echo(f"✅ Table written to {out}")
    else:
        click.echo(frame.to_csv(index=False, lineterminator='\n'), nl=False)


@cli.command('simulate')
@click.option('--config', 'config_path', type=click.Path(), help="JSON run configuration.")
@click.option('--out', type=click.Path(), required=True, help="Dataset CSV to write.")
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), help="Override the configured seed.")
@click.option('--n0', type=click.IntRange(1), help="Control group size.")
@click.option('--n1', type=click.IntRange(1), help="Experimental group size.")
@click.option('--hypothesis', type=HYPOTHESIS_CHOICE, help="Generate under alt (delta1) or null (delta0).")
@click.option('--tf', type=float, help="Follow-up period.")
@click.option('--r', 'r_accrual', type=float, help="Accrual period.")
@click.option('--oracle', is_flag=True, help="Include the censor_time column.")
@handles_errors
def cmd_simulate(config_path, out, seed, n0, n1, hypothesis, tf, r_accrual, oracle):
    """Generate one competing-risks trial dataset."""
    config = load_config(config_path, seed=seed, n0=n0, n1=n1, hypothesis=hypothesis,
                         tf=tf, r=r_accrual).resolved()
    validate(config)
    scenario = config.gen_scenario()
    click.echo(f"Seed: {scenario.seed}")

    data = generate_dataset(scenario)
    write_dataset(data, out, include_oracle=oracle)

    summary = summarize_dataset(data)
    for label, mix in [(f"group {x}", m) for x, m in summary.by_group.items()] + [("pooled", summary.pooled)]:
        click.echo(f"{label:<8} frac_event1={mix.frac_event1:.4f} frac_event2={mix.frac_event2:.4f} "
                   f"frac_censored={mix.frac_censored:.4f}")
    click.echo(f"✅ {len(data)} subjects written to {out}")


@cli.command('fit')
@click.argument('dataset', type=click.Path())
@click.option('--delta0', type=float, required=True, help="Non-inferiority margin for the SDH ratio.")
@click.option('--alpha', type=float, default=0.05, show_default=True, help="Two-sided level of the interval.")
@click.option('--oracle', is_flag=True, help="Weight with the recorded censor_time instead of Kaplan-Meier.")
@click.option('--out', type=click.Path(), help="Also write the fit as JSON.")
@handles_errors
def cmd_fit(dataset, delta0, alpha, oracle, out):
    """Fine-Gray fit of a dataset and the non-inferiority verdict."""
    mode = WeightMode.ORACLE if oracle else WeightMode.IPCW_KM
    data = read_dataset(dataset, require_oracle=oracle)
    result = fit(data, mode, alpha)

    if result.converged:
        verdict = noninferiority_decision(result, delta0)
        click.echo(f"b_hat:      {result.b_hat:.6f} (se {result.se:.6f})")
        click.echo(f"SDH ratio:  {result.sdh_ratio:.4f}")
        click.echo(f"{100 * (1 - alpha):g}% CI:    {result.ci[0]:.4f} - {result.ci[1]:.4f}")
    else:
        verdict = Decision.NOT_SHOWN
        click.echo(f"b_hat:      {result.b_hat:.6f} (not converged after {result.iterations} iterations)")
    click.echo(f"Verdict:    {verdict.value} (margin {delta0:g}, mode {mode.value})")

    if out:
        write_json({**result.to_dict(), 'delta0': delta0, 'verdict': verdict.value}, out)
    if not result.converged:
        raise ConvergenceError("the Fine-Gray fit did not converge")


@cli.command('power')
@click.option('--config', 'config_path', type=click.Path(), help="JSON run configuration (single scenario).")
@click.option('--grid', type=click.Choice(['table1']), help="Run the 120-scenario simulation grid instead.")
@click.option('--tf', type=float, help="Follow-up period (grid default 1).")
@click.option('--r', 'r_accrual', type=float, help="Accrual period (grid default 0.5).")
@click.option('--reps', type=click.IntRange(1), help="Replications per scenario.")
@click.option('--seed', type=click.IntRange(0, 2 ** 64 - 1), help="Base seed.")
@click.option('--hypothesis', type=HYPOTHESIS_CHOICE, help="alt (power) or null (type I error).")
@click.option('--jobs', type=int, default=1, show_default=True, help="Parallel workers (-1: all cores).")
@click.option('--out', type=click.Path(), required=True, help="Power CSV to write.")
@click.option('--plot', 'plot_path', type=click.Path(), help="Optional SVG scatter of power vs censoring.")
@click.option('--progress', is_flag=True, help="Show a progress bar.")
@handles_errors
def cmd_power(config_path, grid, tf, r_accrual, reps, seed, hypothesis, jobs, out, plot_path, progress):
    """Empirical power or type I error of the sample size formula."""
    if grid:
        base = load_config(config_path, seed=seed, replications=reps, hypothesis=hypothesis).resolved()
        scenarios = table1_grid(tf if tf is not None else 1.0,
                                r_accrual if r_accrual is not None else 0.5,
                                hypothesis=base.hypothesis_value,
                                replications=base.replications)
    else:
        if not config_path:
            raise click.UsageError("either --config or --grid is required")
        base = load_config(config_path, seed=seed, replications=reps, hypothesis=hypothesis,
                           tf=tf, r=r_accrual).resolved()
        validate(base)
        scenarios = [base.power_scenario()]

    click.echo(f"Seed: {base.seed}")
    results = PowerSimulator(parallelism=jobs, progress=progress).run_grid(scenarios, seed=base.seed)
    write_power_csv(results, out)
    if plot_path:
        plot_power_svg(results, plot_path)

    rates = np.array([r.rejection_rate for r in results])
    click.echo(f"✅ {len(results)} scenario(s): rejection rate {rates.min():.4f} - {rates.max():.4f} "
               f"(target {results[0].scenario.target_rate:g}), written to {out}")


if __name__ == '__main__':
    cli()
