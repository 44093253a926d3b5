import logging
import math
from dataclasses import dataclass

import numpy as np

from .approx_core import Target, _as_finite, _unwrap
from .exceptions import DomainError, OracleError

logger = logging.getLogger(__name__)

TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
SQRT_PI = math.sqrt(math.pi)
SQRT_2 = math.sqrt(2.0)


@dataclass(frozen=True)
class OracleConfig:
    """
    Truncation settings for the reference evaluation.

    :param abs_tol: Series terms below abs_tol times the running sum, and continued
        fraction updates closer to 1 than max(abs_tol, machine epsilon), stop the loop.
    :param max_terms: Iteration cap for both algorithms; exceeding it raises OracleError.
    :param switch_point: |x| at which the Maclaurin series hands over to the continued fraction.
    """
    abs_tol: float = 1e-16
    max_terms: int = 500
    switch_point: float = 2.0

    def __post_init__(self):
        if not (self.abs_tol > 0):
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 50:
            raise DomainError(f"max_terms must be at least 50, got {self.max_terms}")
        if not (1.0 <= self.switch_point <= 4.0):
            raise DomainError(f"switch_point must lie in [1, 4], got {self.switch_point}")


DEFAULT_CONFIG = OracleConfig()


class ReferenceOracle:
    def __init__(self, config=None):
        """
        High-precision erf, erfc, Phi and Q built from two independent algorithms.

        :param config: OracleConfig (defaults to DEFAULT_CONFIG).
        """
        self.config = config if config is not None else DEFAULT_CONFIG

    def erf_series(self, x):
        """
        Maclaurin series of erf with Neumaier-compensated summation.

        erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))

        :param x: Finite scalar or array.
        """
        arr = _as_finite(x)
        x2 = arr * arr
        power = arr.copy()
        total = np.zeros_like(arr)
        compensation = np.zeros_like(arr)
        # each element stops on its own so results do not depend on the batch
        active = np.ones(arr.shape, dtype=bool)

        for n in range(self.config.max_terms):
            term = np.where(active, power / (2 * n + 1), 0.0)
            summed = total + term
            compensation += np.where(np.abs(total) >= np.abs(term),
                                     (total - summed) + term,
                                     (term - summed) + total)
            total = summed
            active &= ~(np.abs(term) <= self.config.abs_tol * np.abs(total + compensation))
            if not np.any(active):
                logger.debug("erf series converged after %d terms", n + 1)
                break
            power = -power * x2 / (n + 1)
        else:
            raise OracleError(f"erf series did not converge within {self.config.max_terms} terms")

        return _unwrap(TWO_OVER_SQRT_PI * (total + compensation), x)

    def erfc_continued_fraction(self, x):
        """
        erfc for x > 0 from the continued fraction evaluated with the modified Lentz method.

        erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))

        :param x: Positive finite scalar or array.
        """
        arr = _as_finite(x)
        if np.any(arr <= 0):
            raise DomainError("The continued fraction is only used for x > 0")

        tiny = 1e-300
        tol = max(self.config.abs_tol, np.finfo(float).eps)
        f = arr.copy()
        c = f.copy()
        d = np.zeros_like(arr)
        active = np.ones(arr.shape, dtype=bool)

        for k in range(1, self.config.max_terms + 1):
            a = 0.5 * k
            d = arr + a * d
            d = np.where(d == 0, tiny, d)
            d = 1.0 / d
            c = arr + a / c
            c = np.where(c == 0, tiny, c)
            delta = c * d
            f = np.where(active, f * delta, f)
            active &= ~(np.abs(delta - 1.0) <= tol)
            if not np.any(active):
                logger.debug("erfc continued fraction converged after %d terms", k)
                break
        else:
            raise OracleError(f"erfc continued fraction did not converge within {self.config.max_terms} terms")

        with np.errstate(over='ignore', under='ignore'):
            values = np.exp(-arr * arr) / (SQRT_PI * f)
        return _unwrap(values, x)

    def _split(self, x):
        arr = _as_finite(x)
        ax = np.abs(arr)
        inner = ax <= self.config.switch_point
        return arr, ax, inner

    def _series_on(self, arr, mask):
        out = np.zeros_like(arr)
        if np.any(mask):
            out[mask] = self.erf_series(arr[mask])
        return out

    def _fraction_on(self, ax, mask):
        out = np.zeros_like(ax)
        if np.any(mask):
            out[mask] = self.erfc_continued_fraction(ax[mask])
        return out

    def erf(self, x):
        """
        Reference erf: series for |x| <= switch_point, 1 - erfc otherwise, odd in x.
        """
        arr, ax, inner = self._split(x)
        arr1 = np.atleast_1d(arr)
        ax1, inner1 = np.atleast_1d(ax), np.atleast_1d(inner)
        series = self._series_on(arr1, inner1)
        tail = self._fraction_on(ax1, ~inner1)
        values = np.where(inner1, series, np.copysign(1.0 - tail, arr1))
        return _unwrap(values.reshape(arr.shape), x)

    def erfc(self, x):
        """
        Reference erfc; the continued fraction is used directly for x > switch_point.
        """
        arr, ax, inner = self._split(x)
        arr1 = np.atleast_1d(arr)
        ax1, inner1 = np.atleast_1d(ax), np.atleast_1d(inner)
        series = self._series_on(arr1, inner1)
        tail = self._fraction_on(ax1, ~inner1)
        values = np.where(inner1, 1.0 - series, np.where(arr1 > 0, tail, 2.0 - tail))
        return _unwrap(values.reshape(arr.shape), x)

    def phi(self, x):
        """
        Reference normal CDF: Phi(x) = erfc(-x / sqrt(2)) / 2.
        """
        arr = _as_finite(x)
        return _unwrap(0.5 * np.asarray(self.erfc(-arr / SQRT_2)), x)

    def q(self, x):
        """
        Reference Gaussian tail: Q(x) = erfc(x / sqrt(2)) / 2, kept in complement form.
        """
        arr = _as_finite(x)
        return _unwrap(0.5 * np.asarray(self.erfc(arr / SQRT_2)), x)

    def evaluate(self, target, x):
        """
        Dispatch on a target name ('erf', 'erfc', 'phi', 'q').
        """
        return getattr(self, Target(target).value)(x)


def _oracle(cfg):
    return ReferenceOracle(cfg) if cfg is not None else _DEFAULT_ORACLE


_DEFAULT_ORACLE = ReferenceOracle()


def erf_ref(x, cfg=None):
    return _oracle(cfg).erf(x)


def erfc_ref(x, cfg=None):
    return _oracle(cfg).erfc(x)


def phi_ref(x, cfg=None):
    return _oracle(cfg).phi(x)


def q_ref(x, cfg=None):
    return _oracle(cfg).q(x)
