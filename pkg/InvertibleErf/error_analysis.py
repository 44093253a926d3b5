import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import optimize, special

from .approx_core import (
    ERF_COEFFS,
    SMALL_X_REL_LIMIT,
    TABLE_ITEMS,
    WINITZKI_ABS_BOUND,
    WINITZKI_REL_BOUND,
    ERFC_REL_THRESHOLD_B,
    Q_REL_THRESHOLD_B,
    ApproxFunction,
    Target,
    erf_approx,
    erfc_approx,
    exponent,
)
from .exceptions import BracketingError, DomainError
from .reference_oracle import ReferenceOracle
from .report_base import ReportBase, TableReport

logger = logging.getLogger(__name__)

# Relative error is not formed where the reference is this small.
REL_REFERENCE_FLOOR = 1e-300
# Below this |x| the erf relative error is checked through its analytic limit instead.
ERF_REL_X_FLOOR = 1e-6

# Subdomains where the improved erf error comes closest to its bound.
ZOOM_WINDOWS = ((0.2, 0.3), (0.75, 0.85), (1.35, 1.45), (2.1, 2.2))
ZOOM_SLACK = 0.05
# Local maxima under this fraction of max_abs are rounding noise in a certification scan.
PEAK_NOISE_FRACTION = 1e-3

CROSSOVER_TOLERANCE = 5e-3
IMPROVEMENT_RATIO = 5.0
TAIL_EXPONENT_BOUND = -12.0
TAIL_ERROR_BOUND = 1e-5
ORACLE_AGREEMENT = 1e-13
ERF_AT_4 = 0.99999998458


class Spacing(str, Enum):
    UNIFORM = 'uniform'
    LOG = 'log'


@dataclass(frozen=True)
class GridSpec:
    """
    Scan domain: count points from start to end, uniform or logarithmic.
    """
    start: float
    end: float
    count: int
    spacing: Spacing = Spacing.UNIFORM

    def __post_init__(self):
        try:
            object.__setattr__(self, 'spacing', Spacing(self.spacing))
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        if not (math.isfinite(self.start) and math.isfinite(self.end)) or not self.start < self.end:
            raise DomainError(f"Grid requires finite start < end, got [{self.start}, {self.end}]")
        if int(self.count) != self.count or self.count < 2:
            raise DomainError(f"Grid requires at least 2 points, got {self.count}")
        if self.spacing is Spacing.LOG and self.start <= 0:
            raise DomainError("Logarithmic spacing requires start > 0")

    def points(self):
        if self.spacing is Spacing.LOG:
            return np.geomspace(self.start, self.end, int(self.count))
        return np.linspace(self.start, self.end, int(self.count))

    def refined(self):
        """
        Grid with doubled density that keeps every original point.
        """
        return GridSpec(self.start, self.end, 2 * int(self.count) - 1, self.spacing)

    def as_dict(self):
        return {'start': self.start, 'end': self.end, 'count': int(self.count), 'spacing': self.spacing.value}


@dataclass(frozen=True)
class ErrorReport(ReportBase):
    """
    Maxima of the absolute and relative error of one approximation over a grid.
    """
    label: str
    max_abs: float
    argmax_abs: float
    max_rel: float
    argmax_rel: float
    points: int
    grid: GridSpec
    local_maxima: Tuple[Tuple[float, float], ...] = field(default_factory=tuple)

    def to_frame(self):
        row = {
            'function': self.label,
            'max_abs': self.max_abs,
            'argmax_abs': self.argmax_abs,
            'max_rel': self.max_rel,
            'argmax_rel': self.argmax_rel,
            'points': self.points,
            'start': self.grid.start,
            'end': self.grid.end,
            'spacing': self.grid.spacing.value,
            'local_maxima': len(self.local_maxima),
        }
        return pd.DataFrame([row])

    def to_json_obj(self):
        return {
            'function': self.label,
            'max_abs': self.max_abs,
            'argmax_abs': self.argmax_abs,
            'max_rel': self.max_rel,
            'argmax_rel': self.argmax_rel,
            'points': self.points,
            'grid': self.grid.as_dict(),
            'local_maxima': [[x, err] for x, err in self.local_maxima],
        }

    def maxima_in(self, window, slack=0.0):
        lo, hi = window
        return [(x, err) for x, err in self.local_maxima if lo - slack <= x <= hi + slack]


def _reference_tail(oracle, target, x):
    """
    Distance of the reference function from its saturation value as x -> +infinity.
    """
    if target in (Target.ERF, Target.ERFC):
        return np.asarray(oracle.erfc(x))
    return np.asarray(oracle.q(x))


def relative_error(approx, x, oracle=None):
    """
    |approx(x) / reference(x) - 1|; NaN where the reference is below REL_REFERENCE_FLOOR.

    :param approx: ApproxFunction instance.
    :param x: Scalar or array of abscissae.
    :param oracle: ReferenceOracle (default configuration when None).
    """
    oracle = oracle or ReferenceOracle()
    arr = np.asarray(x, dtype=float)
    ref = np.asarray(oracle.evaluate(approx.target, arr))
    values = np.asarray(approx(arr))
    with np.errstate(divide='ignore', invalid='ignore'):
        rel = np.where(np.abs(ref) >= REL_REFERENCE_FLOOR, np.abs(values - ref) / np.abs(ref), np.nan)
    return rel


def scan(approx, grid, oracle=None, workers=1, peak_fraction=0.0):
    """
    Evaluate absolute and relative error against the reference at every grid point.

    The grid may be split across worker threads; per-point errors are concatenated
    in grid order before any reduction, so the report is identical to a sequential scan.

    :param approx: ApproxFunction instance.
    :param grid: GridSpec.
    :param oracle: ReferenceOracle (default configuration when None).
    :param workers: Number of threads the grid is partitioned across.
    :param peak_fraction: Record only local maxima at or above peak_fraction * max_abs; 0 keeps
        every interior local maximum.
    :return: ErrorReport.
    """
    oracle = oracle or ReferenceOracle()
    xs = grid.points()
    rel_floor = ERF_REL_X_FLOOR if approx.target is Target.ERF else 0.0

    def errors(chunk):
        ref = np.asarray(oracle.evaluate(approx.target, chunk))
        values = np.asarray(approx(chunk))
        abs_err = np.abs(values - ref)
        usable = (np.abs(ref) >= REL_REFERENCE_FLOOR) & (np.abs(chunk) >= rel_floor)
        with np.errstate(divide='ignore', invalid='ignore'):
            rel_err = np.where(usable, abs_err / np.abs(ref), np.nan)
        return abs_err, rel_err

    workers = max(1, int(workers))
    if workers == 1:
        abs_err, rel_err = errors(xs)
    else:
        chunks = np.array_split(xs, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(errors, chunks))
        abs_err = np.concatenate([p[0] for p in parts])
        rel_err = np.concatenate([p[1] for p in parts])

    i_abs = int(np.argmax(abs_err))
    if np.all(np.isnan(rel_err)):
        max_rel, argmax_rel = math.nan, math.nan
    else:
        i_rel = int(np.nanargmax(rel_err))
        max_rel, argmax_rel = float(rel_err[i_rel]), float(xs[i_rel])

    max_abs = float(abs_err[i_abs])
    inner = abs_err[1:-1]
    peaks = (inner > abs_err[:-2]) & (inner > abs_err[2:]) & (inner >= peak_fraction * max_abs)
    idx = np.nonzero(peaks)[0] + 1
    local_maxima = tuple((float(xs[i]), float(abs_err[i])) for i in idx)

    report = ErrorReport(
        label=approx.name,
        max_abs=max_abs,
        argmax_abs=float(xs[i_abs]),
        max_rel=max_rel,
        argmax_rel=argmax_rel,
        points=int(xs.size),
        grid=grid,
        local_maxima=local_maxima,
    )
    logger.info("scan %s on [%g, %g] x %d: max_abs=%.6g at %.6g, max_rel=%.6g",
                approx.name, grid.start, grid.end, xs.size, report.max_abs, report.argmax_abs, report.max_rel)
    return report


def _bisect(func, lo, hi, xtol, what):
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0 and f_hi == 0 or np.sign(f_lo) == np.sign(f_hi):
        raise BracketingError(f"No sign change of the {what} on [{lo}, {hi}] (values {f_lo:.3g}, {f_hi:.3g})")
    return float(optimize.bisect(func, lo, hi, xtol=xtol, maxiter=500))


def find_crossover(approx, saturation, bracket, oracle=None, xtol=1e-10):
    """
    Abscissa where the constant saturation value starts having less absolute error than approx.

    Solves |approx(x) - ref(x)| = |saturation - ref(x)| by bisection. When saturation
    is the limit of the target function, both sides are evaluated as distances to the
    saturation value, which stay representable after approx and ref have rounded to it.

    :param approx: ApproxFunction instance.
    :param saturation: Constant compared against (1 for erf and Phi, 0 for erfc and Q).
    :param bracket: (lo, hi) with a sign change of the error difference.
    :return: Crossover abscissa.
    """
    oracle = oracle or ReferenceOracle()
    lo, hi = bracket

    if saturation == approx.saturation:
        def difference(x):
            ref_tail = float(_reference_tail(oracle, approx.target, x))
            return abs(float(approx.tail(x)) - ref_tail) - ref_tail
    else:
        def difference(x):
            ref = float(oracle.evaluate(approx.target, x))
            return abs(float(approx(x)) - ref) - abs(saturation - ref)

    root = _bisect(difference, lo, hi, xtol, f"error difference of {approx.name} against {saturation}")
    logger.info("crossover of %s against %g at x = %.10f", approx.name, saturation, root)
    return root


def find_rel_threshold(approx, threshold, bracket, oracle=None, count=200_001, xtol=1e-12):
    """
    Largest b such that the relative error stays within threshold on [0, b].

    The relative error is sampled on a dense grid of [0, bracket[1]]; the first
    grid point above threshold is refined by bisection. Points with |x| below
    ERF_REL_X_FLOOR are skipped for erf, whose reference vanishes at 0.

    :param approx: ApproxFunction instance.
    :param threshold: Relative error cap.
    :param bracket: (lo, hi); the error must be within threshold on [0, lo].
    :return: b, or None when the error never exceeds threshold on [0, hi].
    """
    oracle = oracle or ReferenceOracle()
    lo, hi = bracket
    xs = np.linspace(0.0, hi, int(count))
    rel = relative_error(approx, xs, oracle)
    if approx.target is Target.ERF:
        rel = np.where(np.abs(xs) < ERF_REL_X_FLOOR, np.nan, rel)

    exceeded = rel > threshold
    if np.any(exceeded & (xs <= lo)):
        raise BracketingError(f"Relative error of {approx.name} already exceeds {threshold} on [0, {lo}]")

    above = np.nonzero(exceeded)[0]
    if above.size == 0:
        logger.info("relative error of %s stays within %g on [0, %g]", approx.name, threshold, hi)
        return None

    first = int(above[0])
    if not np.all(exceeded[first:] | np.isnan(rel[first:])):
        logger.warning("relative error of %s falls back under %g after x = %g", approx.name, threshold, xs[first])

    def excess(x):
        return float(relative_error(approx, x, oracle)) - threshold

    b = _bisect(excess, float(xs[first - 1]), float(xs[first]), xtol, f"relative error of {approx.name}")
    logger.info("relative error of %s reaches %g at b = %.10f", approx.name, threshold, b)
    return b


@dataclass(frozen=True)
class TailCertificate(ReportBase):
    """
    Outcome of the x > 4 tail checks on erf_approx.
    """
    passed: bool
    x_lo: float
    x_hi: float
    points: int
    max_exponent: float
    min_tail: float
    max_tail: float
    max_abs_error: float

    @property
    def exponent_margin(self):
        return TAIL_EXPONENT_BOUND - self.max_exponent

    @property
    def tail_margin(self):
        return math.exp(-12.0) - self.max_tail

    @property
    def error_margin(self):
        return TAIL_ERROR_BOUND - self.max_abs_error

    def to_frame(self):
        return pd.DataFrame([{
            'passed': self.passed,
            'x_lo': self.x_lo,
            'x_hi': self.x_hi,
            'points': self.points,
            'max_exponent': self.max_exponent,
            'exponent_margin': self.exponent_margin,
            'max_tail': self.max_tail,
            'tail_margin': self.tail_margin,
            'max_abs_error': self.max_abs_error,
            'error_margin': self.error_margin,
        }])


def tail_certificate(x_lo, x_hi, n, oracle=None):
    """
    Check E(x) < -12, 0 < 1 - erf_approx(x) < e^-12 and |erf_approx - erf| < 1e-5 on [x_lo, x_hi].

    :param x_lo: Lower end, at least 4.
    :param x_hi: Upper end.
    :param n: Number of sampled points.
    :return: TailCertificate carrying pass/fail and the worst values.
    """
    if x_lo < 4:
        raise DomainError(f"The tail certificate starts at x >= 4, got {x_lo}")
    if not x_hi > x_lo or n < 1:
        raise DomainError(f"Need x_hi > x_lo and n >= 1, got [{x_lo}, {x_hi}] x {n}")
    oracle = oracle or ReferenceOracle()
    xs = np.linspace(x_lo, x_hi, int(n))
    exps = np.asarray(exponent(ERF_COEFFS, xs))
    tails = np.asarray(erfc_approx(xs))
    errors = np.abs(tails - np.asarray(oracle.erfc(xs)))

    passed = bool(np.all(exps < TAIL_EXPONENT_BOUND)
                  and np.all(tails > 0)
                  and np.all(tails < math.exp(-12.0))
                  and np.all(errors < TAIL_ERROR_BOUND))
    certificate = TailCertificate(
        passed=passed,
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        points=int(xs.size),
        max_exponent=float(exps.max()),
        min_tail=float(tails.min()),
        max_tail=float(tails.max()),
        max_abs_error=float(errors.max()),
    )
    logger.info("tail certificate on [%g, %g]: %s", x_lo, x_hi, 'pass' if passed else 'FAIL')
    return certificate


def proof_chain_certificate(x_lo=4.0, x_hi=40.0, n=1000, oracle=None):
    """
    Numeric spot checks of the hand inequalities used for x > 4.

    :return: dict of check name -> bool.
    """
    oracle = oracle or ReferenceOracle()
    xs = np.linspace(x_lo, x_hi, int(n))
    x2, x4 = xs ** 2, xs ** 4
    lower = (-1.27 * x2 - 0.148 * x4) / (1 + 0.15 * x2 + 0.00052 * x4)
    erf4 = float(oracle.erf(4.0))
    return {
        'quartic_above_3': bool(np.all(x4 / 9.0 - 0.53 * x2 - 12.0 > 3.0)),
        'rounded_coefficients': bool(np.all(1.27 * x2 + 0.148 * x4 > 12.0 * (1 + 0.15 * x2 + 0.00052 * x4))),
        'exponent_below_rounded': bool(np.all(np.asarray(exponent(ERF_COEFFS, xs)) < lower)),
        'rounded_below_minus_12': bool(np.all(lower < -12.0)),
        'erf4_digits': abs(erf4 - ERF_AT_4) < 5e-12,
        'erf_tail_below_1e-7': bool(np.all(np.asarray(oracle.erfc(xs)) < 1e-7)),
        'bound_sum': 1e-7 + math.exp(-12.0) < TAIL_ERROR_BOUND,
    }


def oracle_self_check(lo=1.5, hi=2.5, n=100, oracle=None):
    """
    Largest disagreement between the series and the continued fraction on [lo, hi].
    """
    oracle = oracle or ReferenceOracle()
    xs = np.linspace(lo, hi, int(n))
    series = np.asarray(oracle.erf_series(xs))
    fraction = 1.0 - np.asarray(oracle.erfc_continued_fraction(xs))
    return float(np.max(np.abs(series - fraction)))


def platform_agreement(grid, oracle=None):
    """
    Largest difference between the reference and scipy.special erf / erfc over a grid.

    :return: dict with 'erf' and 'erfc' maxima.
    """
    oracle = oracle or ReferenceOracle()
    xs = grid.points()
    return {
        'erf': float(np.max(np.abs(np.asarray(oracle.erf(xs)) - special.erf(xs)))),
        'erfc': float(np.max(np.abs(np.asarray(oracle.erfc(xs)) - special.erfc(xs)))),
    }


@dataclass(frozen=True)
class Claim:
    """
    One certified statement: observed value against a bound.
    """
    name: str
    source: str
    bound: float
    observed: float
    passed: bool
    detail: str = ''
    required: bool = True

    def as_row(self):
        return {
            'claim': self.name,
            'source': self.source,
            'bound': self.bound,
            'observed': self.observed,
            'passed': self.passed,
            'required': self.required,
            'detail': self.detail,
        }


def _below(name, source, observed, bound, detail=''):
    return Claim(name, source, bound, observed, bool(observed < bound), detail)


def _above(name, source, observed, bound, detail=''):
    return Claim(name, source, bound, observed, bool(observed is not None and observed > bound), detail)


class CertificationReport(ReportBase):
    def __init__(self, claims, scans, tail, proof):
        """
        Every certified claim plus the scans and certificates behind them.

        :param claims: list of Claim.
        :param scans: dict of scan name -> ErrorReport.
        :param tail: TailCertificate.
        :param proof: dict returned by proof_chain_certificate.
        """
        self.claims = list(claims)
        self.scans = dict(scans)
        self.tail = tail
        self.proof = dict(proof)

    @property
    def passed(self):
        return all(c.passed for c in self.claims if c.required)

    def failing(self):
        return [c.name for c in self.claims if c.required and not c.passed]

    def to_frame(self):
        return pd.DataFrame([c.as_row() for c in self.claims])

    def to_json_obj(self):
        return {
            'passed': self.passed,
            'claims': [c.as_row() for c in self.claims],
            'scans': {name: report.to_json_obj() for name, report in self.scans.items()},
            'tail': self.tail.to_json_obj()[0],
            'proof_chain': self.proof,
        }

    def scans_table(self):
        return TableReport(pd.concat([r.to_frame() for r in self.scans.values()], ignore_index=True), 'scans')


def certify(grid_count=1_000_000, grid=(0.0, 8.0), workers=1, oracle=None):
    """
    Run every scan, crossover, threshold and tail check behind the table of approximations.

    :param grid_count: Points of the dense scan grid.
    :param grid: (start, end) of the scan grid.
    :param workers: Threads per scan.
    :return: CertificationReport.
    """
    oracle = oracle or ReferenceOracle()
    spec = GridSpec(grid[0], grid[1], grid_count)
    items = {item.item: item for item in TABLE_ITEMS}
    dense = max(1001, min(int(grid_count) // 5, 200_001))

    erf = ApproxFunction('erf')
    erfc = ApproxFunction('erfc')
    phi = ApproxFunction('phi')
    q = ApproxFunction('q')
    winitzki = ApproxFunction('erf', 'winitzki')

    scans = {f.name: scan(f, spec, oracle, workers, PEAK_NOISE_FRACTION) for f in (erf, erfc, phi, q, winitzki)}
    s_erf, s_erfc, s_phi, s_q, s_win = (scans[f.name] for f in (erf, erfc, phi, q, winitzki))

    claims = [
        _below('erf abs error', 'item A', s_erf.max_abs, items['A'].abs_bound,
               f"argmax {s_erf.argmax_abs:.6f}"),
        _below('erf rel error', 'item A', s_erf.max_rel, items['A'].rel_bound,
               f"argmax {s_erf.argmax_rel:.6g}, x >= {ERF_REL_X_FLOOR:g}"),
    ]

    small = 1e-4
    small_rel = float(erf_approx(small) / oracle.erf(small) - 1.0)
    claims.append(Claim('erf rel error limit x->0', 'item A', items['A'].rel_bound, small_rel,
                        bool(abs(small_rel - SMALL_X_REL_LIMIT) <= 1e-6 and small_rel < items['A'].rel_bound),
                        f"analytic limit {SMALL_X_REL_LIMIT:.6e}"))

    for label, approx, item, bracket in (('erf', erf, 'A', (3.0, 5.0)), ('erfc', erfc, 'B', (3.0, 5.0)),
                                         ('phi', phi, 'C', (5.0, 7.0)), ('q', q, 'D', (5.0, 7.0))):
        target = items[item].crossover
        x_star = find_crossover(approx, items[item].saturation, bracket, oracle)
        claims.append(Claim(f"{label} saturation crossover", f"item {item} saturation", target, x_star,
                            abs(x_star - target) <= CROSSOVER_TOLERANCE, f"tolerance {CROSSOVER_TOLERANCE:g}"))

    claims.append(_below('erfc abs error', 'item B', s_erfc.max_abs, items['B'].abs_bound))
    b_erfc = find_rel_threshold(erfc, items['B'].rel_bound, (1.5, 3.0), oracle, count=dense)
    claims.append(_above('erfc 1% rel threshold', 'item B saturation', b_erfc, ERFC_REL_THRESHOLD_B,
                         items['B'].rel_claim))

    claims.append(_below('phi abs error', 'item C', s_phi.max_abs, items['C'].abs_bound))
    claims.append(_below('phi rel error', 'item C', s_phi.max_rel, items['C'].rel_bound))
    claims.append(_below('q abs error', 'item D', s_q.max_abs, items['D'].abs_bound))
    b_q = find_rel_threshold(q, items['D'].rel_bound, (2.5, 4.0), oracle, count=dense)
    claims.append(_above('q 1% rel threshold', 'item D saturation', b_q, Q_REL_THRESHOLD_B,
                         items['D'].rel_claim))

    claims.append(_below('winitzki abs error', 'baseline', s_win.max_abs, WINITZKI_ABS_BOUND))
    claims.append(_below('winitzki rel error', 'baseline', s_win.max_rel, WINITZKI_REL_BOUND))
    ratio = s_win.max_abs / s_erf.max_abs
    claims.append(_above('improvement over winitzki', 'baseline', ratio, IMPROVEMENT_RATIO,
                         'max_abs(winitzki) / max_abs(improved)'))

    tail = tail_certificate(4.0001, 40.0, 1000, oracle)
    claims.append(Claim('tail x > 4', 'tail bound', math.exp(-12.0), tail.max_tail, tail.passed,
                        f"max E {tail.max_exponent:.6g}, max |err| {tail.max_abs_error:.3g}"))

    proof = proof_chain_certificate(oracle=oracle)
    failed_steps = [k for k, ok in proof.items() if not ok]
    claims.append(Claim('proof inequality chain', 'tail bound', 0.0, float(len(failed_steps)),
                        not failed_steps, ', '.join(failed_steps) or 'all steps hold'))

    in_windows = [bool(s_erf.maxima_in(w, ZOOM_SLACK)) for w in ZOOM_WINDOWS]
    argmax_in_window = any(w[0] - ZOOM_SLACK <= s_erf.argmax_abs <= w[1] + ZOOM_SLACK for w in ZOOM_WINDOWS)
    peaks = ', '.join(f"{x:.4f}:{e:.3e}" for x, e in s_erf.local_maxima)
    claims.append(Claim('erf error peaks in zoom windows', 'item A', float(len(ZOOM_WINDOWS)),
                        float(sum(in_windows)), all(in_windows) and argmax_in_window, peaks))

    disagreement = oracle_self_check(oracle=oracle)
    claims.append(_below('oracle series vs continued fraction', 'reference', disagreement, ORACLE_AGREEMENT,
                         'on [1.5, 2.5]'))
    erf4 = float(oracle.erf(4.0))
    claims.append(Claim('oracle erf(4)', 'tail bound', ERF_AT_4, erf4, abs(erf4 - ERF_AT_4) < 5e-12,
                        '11 printed digits'))

    platform = platform_agreement(GridSpec(0.0, 8.0, 10_001), oracle)
    claims.append(Claim('oracle vs scipy.special', 'platform', ORACLE_AGREEMENT, max(platform.values()),
                        max(platform.values()) < ORACLE_AGREEMENT, 'informational', required=False))

    report = CertificationReport(claims, scans, tail, proof)
    if report.passed:
        logger.info("certification passed: %d claims", len(claims))
    else:
        logger.warning("certification failed: %s", ', '.join(report.failing()))
    return report
