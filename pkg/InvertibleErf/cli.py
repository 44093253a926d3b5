"""
Command-line interface for InvertibleErf.

Usage:
    invertible-erf eval erf improved 0 1 4      # approximation vs reference
    invertible-erf eval phi clamped --grid 0:8 --grid-count 9
    invertible-erf invert erf 0.5 0.999         # closed-form inverse
    invertible-erf certify --format csv         # certify every bound of the table
    invertible-erf table --format json          # the built-in table of approximations
    invertible-erf bench 1000000                # ns per evaluation

Exit status: 0 success, 1 failed bound or per-row domain error, 2 usage error.
"""

import logging
import math
import sys
import time

import click
import numpy as np
import pandas as pd
from scipy import special

from .approx_core import TABLE_ITEMS, ApproxFunction, clamped, erf_approx, phi_approx, winitzki_erf
from .error_analysis import certify
from .exceptions import DomainError, InvertibleErfError
from .inverse import (
    erf_approx_inv,
    erfc_approx_inv,
    phi_approx_inv,
    q_approx_inv,
    winitzki_erf_inv,
    winitzki_erfc_inv,
)
from .reference_oracle import ReferenceOracle
from .report_base import OutputFormat, TableReport

__all__ = [
    "cli",
    "cmd_eval",
    "cmd_invert",
    "cmd_certify",
    "cmd_table",
    "cmd_bench",
]

logger = logging.getLogger(__name__)

FUNCTIONS = ('erf', 'erfc', 'phi', 'q')
VARIANTS = ('improved', 'winitzki', 'clamped', 'oracle')
MIN_BENCH_SIZE = 10_000

_INVERSES = {
    ('erf', 'improved'): erf_approx_inv,
    ('erfc', 'improved'): erfc_approx_inv,
    ('phi', 'improved'): phi_approx_inv,
    ('q', 'improved'): q_approx_inv,
    ('erf', 'winitzki'): winitzki_erf_inv,
    ('erfc', 'winitzki'): winitzki_erfc_inv,
}


def cmd_eval(function, variant, xs, oracle=None):
    """
    Evaluate one approximation next to the reference.

    :param function: 'erf', 'erfc', 'phi' or 'q'.
    :param variant: 'improved', 'winitzki', 'clamped' or 'oracle'.
    :param xs: Sequence of finite abscissae.
    :return: TableReport with columns x, value, oracle, abs_err, rel_err.
    """
    oracle = oracle or ReferenceOracle()
    xs = np.asarray(list(xs), dtype=float)
    if not np.all(np.isfinite(xs)):
        raise DomainError("x values must be finite")

    ref = np.asarray(oracle.evaluate(function, xs), dtype=float)
    if variant == 'oracle':
        values = ref.copy()
    else:
        values = np.asarray(ApproxFunction.from_names(function, variant)(xs), dtype=float)

    abs_err = np.abs(values - ref)
    with np.errstate(divide='ignore', invalid='ignore'):
        rel_err = np.where(ref != 0, abs_err / np.abs(ref), np.nan)
    frame = pd.DataFrame({'x': xs, 'value': values, 'oracle': ref, 'abs_err': abs_err, 'rel_err': rel_err})
    return TableReport(frame, f"{function}/{variant}")


def cmd_invert(function, ys, variant='improved', polish=False):
    """
    Invert an approximation value by value; out-of-range values become error rows.

    :return: TableReport with columns y, x, residual, error.
    """
    key = (function, variant)
    if key not in _INVERSES:
        raise DomainError(f"No inverse for {function}/{variant}")
    inverse = _INVERSES[key]

    records = []
    for y in ys:
        try:
            result = inverse(y, polish=polish)
            records.append((y, result.x, result.residual, ''))
        except InvertibleErfError as exc:
            records.append((y, math.nan, math.nan, str(exc)))
    return TableReport.from_records(records, ['y', 'x', 'residual', 'error'], f"{function} inverse")


def cmd_certify(grid_count=1_000_000, grid=(0.0, 8.0), workers=1):
    """
    Run the full certification; see error_analysis.certify.

    :return: CertificationReport.
    """
    return certify(grid_count=grid_count, grid=grid, workers=workers)


def cmd_table():
    """
    The table of explicitly invertible approximations with coefficients, bounds and crossover constants.
    """
    rows = []
    for item in TABLE_ITEMS:
        rows.append({
            'item': item.item,
            'function': item.target.value,
            'formula': item.formula,
            'n1': item.coeffs.n1,
            'n2': item.coeffs.n2,
            'd0': item.coeffs.d0,
            'd1': item.coeffs.d1,
            'd2': item.coeffs.d2,
            'abs_bound': item.abs_bound,
            'rel_bound': item.rel_bound,
            'rel_claim': item.rel_claim,
            'crossover': item.crossover,
            'saturation': item.saturation,
        })
    return TableReport(pd.DataFrame(rows), 'approximations')


def _bench_one(func, inputs, batch, repeat):
    best = math.inf
    sink = 0.0
    for _ in range(repeat):
        sink = 0.0
        start = time.perf_counter_ns()
        for offset in range(0, inputs.size, batch):
            sink += float(np.sum(func(inputs[offset:offset + batch])))
        best = min(best, time.perf_counter_ns() - start)
    return best, sink


def cmd_bench(n, batch=10_000, seed=0, repeat=3, oracle=None):
    """
    Time every evaluator on a deterministic input sequence.

    Each evaluator runs over n inputs in batches; the best of repeat runs is
    reported as ns per evaluation. The summed outputs are kept as a sink.

    :param n: Number of evaluations, at least 10^4.
    :param batch: Inputs per vectorized call.
    :param seed: Seed of the input sequence.
    :return: TableReport with columns function, ns_per_eval, evals_per_sec, sink.
    """
    if n < MIN_BENCH_SIZE:
        raise DomainError(f"bench needs n >= {MIN_BENCH_SIZE}, got {n}")
    if batch < 1:
        raise DomainError(f"batch must be positive, got {batch}")
    oracle = oracle or ReferenceOracle()
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, 6.0, int(n))
    ys = rng.uniform(0.0, 0.999999, int(n))

    candidates = [
        ('erf improved', erf_approx, xs),
        ('erf winitzki', winitzki_erf, xs),
        ('erf clamped', lambda v: clamped('erf', v), xs),
        ('phi improved', phi_approx, xs),
        ('erf inverse', lambda v: erf_approx_inv(v).x, ys),
        ('erf oracle', oracle.erf, xs),
        ('erf scipy.special', special.erf, xs),
        ('erf math (scalar loop)', lambda v: [math.erf(t) for t in v.tolist()], xs),
    ]

    rows = []
    for name, func, inputs in candidates:
        elapsed, sink = _bench_one(func, inputs, int(batch), repeat)
        per_eval = elapsed / inputs.size
        rows.append({
            'function': name,
            'ns_per_eval': per_eval,
            'evals_per_sec': 1e9 / per_eval if per_eval > 0 else math.nan,
            'sink': sink,
        })
        logger.info("bench %s: %.1f ns/eval", name, per_eval)
    return TableReport(pd.DataFrame(rows), 'bench')


def _parse_grid(ctx, param, value):
    if value is None:
        return None
    try:
        lo, hi = (float(part) for part in value.split(':'))
    except ValueError:
        raise click.BadParameter("expected lo:hi, e.g. 0:8")
    if not lo < hi:
        raise click.BadParameter("lo must be smaller than hi")
    return lo, hi


def _emit(report, output_format, output):
    if output:
        report.export(output, output_format)
    else:
        click.echo(report.render(output_format), nl=False)


format_option = click.option('--format', 'output_format', type=click.Choice([f.value for f in OutputFormat]),
                             default=OutputFormat.HUMAN.value, show_default=True, help="Output format.")
output_option = click.option('--output', '-o', type=click.Path(dir_okay=False, writable=True),
                             default=None, help="Write the report to a file instead of stdout.")


@click.group()
@click.option('--verbose', '-v', is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Explicitly invertible 4-decimal approximations of erf, erfc, Phi and Q."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s %(message)s', force=True)


@cli.command('eval', context_settings={'ignore_unknown_options': True})
@click.argument('function', type=click.Choice(FUNCTIONS))
@click.argument('variant', type=click.Choice(VARIANTS))
@click.argument('xs', nargs=-1, type=float)
@click.option('--grid', callback=_parse_grid, default=None, help="Evaluate on a range lo:hi instead.")
@click.option('--grid-count', type=click.IntRange(min=2), default=11, show_default=True)
@format_option
@output_option
def eval_command(function, variant, xs, grid, grid_count, output_format, output):
    """Evaluate FUNCTION with VARIANT at the given x values."""
    values = list(xs)
    if grid is not None:
        values.extend(np.linspace(grid[0], grid[1], grid_count).tolist())
    if not values:
        raise click.UsageError("give x values or --grid lo:hi")
    try:
        report = cmd_eval(function, variant, values)
    except DomainError as exc:
        raise click.UsageError(str(exc))
    _emit(report, output_format, output)


@cli.command('invert', context_settings={'ignore_unknown_options': True})
@click.argument('function', type=click.Choice(FUNCTIONS))
@click.argument('ys', nargs=-1, required=True, type=float)
@click.option('--variant', type=click.Choice(['improved', 'winitzki']), default='improved', show_default=True)
@click.option('--polish', is_flag=True, help="Apply one Newton correction to each inverse.")
@format_option
@output_option
def invert_command(function, ys, variant, polish, output_format, output):
    """Invert FUNCTION at the given values."""
    try:
        report = cmd_invert(function, ys, variant, polish)
    except DomainError as exc:
        raise click.UsageError(str(exc))
    _emit(report, output_format, output)
    if report.has_errors:
        sys.exit(1)


@cli.command('certify')
@click.option('--grid-count', type=click.IntRange(min=2), default=1_000_000, show_default=True)
@click.option('--grid', callback=_parse_grid, default='0:8', show_default=True)
@click.option('--workers', type=click.IntRange(min=1), default=1, show_default=True)
@format_option
@output_option
def certify_command(grid_count, grid, workers, output_format, output):
    """Certify every bound, crossover and threshold of the table."""
    report = cmd_certify(grid_count, grid, workers)
    _emit(report, output_format, output)
    if OutputFormat(output_format) is OutputFormat.HUMAN and not output:
        click.echo(report.scans_table().render(output_format), nl=False)
    if not report.passed:
        click.echo(f"FAILED: {', '.join(report.failing())}", err=True)
        sys.exit(1)


@cli.command('table')
@format_option
@output_option
def table_command(output_format, output):
    """Print the built-in table of approximations."""
    _emit(cmd_table(), output_format, output)


@cli.command('bench')
@click.argument('n', type=int)
@click.option('--batch', type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True, help="Seed of the input sequence.")
@click.option('--repeat', type=click.IntRange(min=1), default=3, show_default=True)
@format_option
@output_option
def bench_command(n, batch, seed, repeat, output_format, output):
    """Time N evaluations of every evaluator."""
    try:
        report = cmd_bench(n, batch, seed, repeat)
    except DomainError as exc:
        raise click.UsageError(str(exc))
    _emit(report, output_format, output)


if __name__ == '__main__':
    cli()
