import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import DomainError

logger = logging.getLogger(__name__)

# Above this u = x^2 the x^4 products may overflow; the functions saturate instead.
OVERFLOW_U = 1e150

# Abscissae beyond which the constant saturation value has less absolute error.
ERF_CROSSOVER = 4.125
PHI_CROSSOVER = 5.834


def _as_finite(x, name='x'):
    """
    Convert the argument to a float array and reject NaN and infinities.

    :param x: Scalar or array-like argument.
    :param name: Argument name used in the error message.
    :return: numpy float64 array.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"'{name}' must be finite, got {x!r}")
    return arr


def _unwrap(values, like):
    """
    Return a Python float when the original argument was a scalar.
    """
    if np.ndim(like) == 0:
        return float(values)
    return values


@dataclass(frozen=True)
class RationalExponentCoeffs:
    """
    Coefficients of the exponent E(x) = (n1*x^2 + n2*x^4) / (d0 + d1*x^2 + d2*x^4).
    """
    n1: float
    n2: float
    d0: float
    d1: float
    d2: float

    def __post_init__(self):
        values = (self.n1, self.n2, self.d0, self.d1, self.d2)
        if not all(math.isfinite(v) for v in values):
            raise DomainError(f"Coefficients must be finite: {values}")
        if self.d0 <= 0:
            raise DomainError(f"d0 must be positive, got {self.d0}")
        if self.d1 < 0 or self.d2 < 0:
            # d0 > 0, so only a nonnegative real root can make the denominator vanish
            roots = np.roots([self.d2, self.d1, self.d0])
            real = roots[np.isreal(roots)].real
            if np.any(real >= 0):
                raise DomainError("Denominator d0 + d1*u + d2*u^2 vanishes for some u >= 0")

    def numerator(self, u):
        return u * (self.n1 + self.n2 * u)

    def denominator(self, u):
        return self.d0 + u * (self.d1 + self.d2 * u)

    def limit(self):
        """
        Value of E as x -> infinity.
        """
        if self.d2 > 0:
            return self.n2 / self.d2
        if self.n2 != 0:
            return math.copysign(math.inf, self.n2)
        if self.d1 > 0:
            return self.n1 / self.d1
        return math.copysign(math.inf, self.n1)

    def derivative_u(self, u):
        """
        dE/du evaluated at u = x^2.
        """
        cross = self.n2 * self.d1 - self.n1 * self.d2
        top = self.n1 * self.d0 + u * (2.0 * self.n2 * self.d0 + cross * u)
        den = self.denominator(u)
        return top / (den * den)


# Improved erf exponent, table items A and B.
ERF_COEFFS = RationalExponentCoeffs(n1=-1.2735457, n2=-0.1487936, d0=1.0, d1=0.1480931, d2=0.0005160)
# Table items C and D; the erf set evaluated at x / sqrt(2), scaled by 2.
PHI_COEFFS = RationalExponentCoeffs(n1=-1.2735457, n2=-0.0743968, d0=2.0, d1=0.1480931, d2=0.0002580)
# -x^2 (4/pi + a x^2) / (1 + a x^2) with a = 0.147
WINITZKI_A = 0.147
WINITZKI_COEFFS = RationalExponentCoeffs(n1=-4.0 / math.pi, n2=-WINITZKI_A, d0=1.0, d1=WINITZKI_A, d2=0.0)


class Target(str, Enum):
    ERF = 'erf'
    ERFC = 'erfc'
    PHI = 'phi'
    Q = 'q'


class Variant(str, Enum):
    IMPROVED = 'improved'
    WINITZKI = 'winitzki'
    CLAMPED = 'clamped'


def exponent(coeffs, x):
    """
    Evaluate the rational exponent E(x) with Horner's scheme in u = x^2.

    :param coeffs: RationalExponentCoeffs instance.
    :param x: Finite scalar or array.
    :return: E(x), even in x; the limit value of E where x^2 exceeds OVERFLOW_U.
    """
    arr = _as_finite(x)
    u = arr * arr
    big = u > OVERFLOW_U
    safe_u = np.where(big, 0.0, u)
    values = coeffs.numerator(safe_u) / coeffs.denominator(safe_u)
    if np.any(big):
        values = np.where(big, coeffs.limit(), values)
    return _unwrap(values, x)


def _eta_and_tail(coeffs, ax):
    """
    Return sqrt(1 - e^E) and its complement 1 - sqrt(1 - e^E) for nonnegative ax.

    The complement is formed as e^E / (1 + sqrt(1 - e^E)) so it keeps full
    relative precision after the first value has rounded to 1.
    """
    u = ax * ax
    big = u > OVERFLOW_U
    safe_u = np.where(big, 0.0, u)
    e = coeffs.numerator(safe_u) / coeffs.denominator(safe_u)
    eta = np.sqrt(-np.expm1(e))
    tail = np.exp(e) / (1.0 + eta)
    if np.any(big):
        eta = np.where(big, 1.0, eta)
        tail = np.where(big, 0.0, tail)
    return eta, tail


def _odd(coeffs, x):
    arr = _as_finite(x)
    eta, _ = _eta_and_tail(coeffs, np.abs(arr))
    return _unwrap(np.copysign(eta, arr), x)


def _complement(coeffs, x):
    arr = _as_finite(x)
    eta, tail = _eta_and_tail(coeffs, np.abs(arr))
    return _unwrap(np.where(arr >= 0, tail, 1.0 + eta), x)


def erf_approx(x):
    """
    Improved approximation of erf: sqrt(1 - exp(E(x))), extended to x < 0 by odd symmetry.
    """
    return _odd(ERF_COEFFS, x)


def erfc_approx(x):
    """
    Approximation of erfc = 1 - erf_approx(x), evaluated without cancellation for x >= 0.
    """
    return _complement(ERF_COEFFS, x)


def phi_approx(x):
    """
    Approximation of the normal CDF: 1/2 + 1/2 sqrt(1 - exp(E_phi(x))); Phi(-x) = 1 - Phi(x).
    """
    arr = _as_finite(x)
    eta, tail = _eta_and_tail(PHI_COEFFS, np.abs(arr))
    values = np.where(arr >= 0, 0.5 + 0.5 * eta, 0.5 * tail)
    return _unwrap(values, x)


def q_approx(x):
    """
    Approximation of the Gaussian tail Q(x) = 1 - phi_approx(x).
    """
    arr = _as_finite(x)
    eta, tail = _eta_and_tail(PHI_COEFFS, np.abs(arr))
    values = np.where(arr >= 0, 0.5 * tail, 0.5 + 0.5 * eta)
    return _unwrap(values, x)


def winitzki_erf(x):
    """
    Winitzki's approximation of erf, odd extension for x < 0.
    """
    return _odd(WINITZKI_COEFFS, x)


def winitzki_erfc(x):
    return _complement(WINITZKI_COEFFS, x)


_IMPROVED = {
    Target.ERF: erf_approx,
    Target.ERFC: erfc_approx,
    Target.PHI: phi_approx,
    Target.Q: q_approx,
}

_WINITZKI = {
    Target.ERF: winitzki_erf,
    Target.ERFC: winitzki_erfc,
}

# (crossover, value at +x, value at -x)
_SATURATION = {
    Target.ERF: (ERF_CROSSOVER, 1.0, -1.0),
    Target.ERFC: (ERF_CROSSOVER, 0.0, 2.0),
    Target.PHI: (PHI_CROSSOVER, 1.0, 0.0),
    Target.Q: (PHI_CROSSOVER, 0.0, 1.0),
}


def clamped(target, x):
    """
    Improved approximation below the crossover abscissa, saturation value at or above it.

    The switch is applied on |x|, so for negative x the value of the reflected
    saturation is used (-1 for erf, 2 for erfc, 0 for Phi, 1 for Q).

    :param target: Target or its name.
    :param x: Finite scalar or array.
    """
    target = Target(target)
    arr = _as_finite(x)
    crossover, upper, lower = _SATURATION[target]
    values = np.asarray(_IMPROVED[target](arr), dtype=float)
    values = np.where(arr >= crossover, upper, values)
    values = np.where(arr <= -crossover, lower, values)
    return _unwrap(values, x)


@dataclass(frozen=True)
class ApproxFunction:
    """
    Selects one approximation: a target function and a formula variant.
    """
    target: Target
    variant: Variant = Variant.IMPROVED

    def __post_init__(self):
        try:
            object.__setattr__(self, 'target', Target(self.target))
            object.__setattr__(self, 'variant', Variant(self.variant))
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        if self.variant is Variant.WINITZKI and self.target not in _WINITZKI:
            raise DomainError(f"Winitzki variant is only defined for erf and erfc, not '{self.target.value}'")

    @classmethod
    def from_names(cls, target, variant='improved'):
        return cls(target, variant)

    @property
    def name(self):
        return f"{self.target.value}/{self.variant.value}"

    @property
    def saturation(self):
        """
        Limit of the target function as x -> +infinity.
        """
        return _SATURATION[self.target][1]

    def __call__(self, x):
        if self.variant is Variant.IMPROVED:
            return _IMPROVED[self.target](x)
        if self.variant is Variant.WINITZKI:
            return _WINITZKI[self.target](x)
        return clamped(self.target, x)

    def tail(self, x):
        """
        Distance |saturation - f(x)| for x >= 0, computed without cancellation.
        """
        if self.variant is Variant.CLAMPED:
            return np.abs(self.saturation - np.asarray(self(x)))
        if self.target in (Target.ERF, Target.ERFC):
            coeffs = WINITZKI_COEFFS if self.variant is Variant.WINITZKI else ERF_COEFFS
            return _complement(coeffs, x)
        return q_approx(x)


@dataclass(frozen=True)
class TableItem:
    """
    One row of the table of explicitly invertible approximations.
    """
    item: str
    target: Target
    formula: str
    coeffs: RationalExponentCoeffs
    abs_bound: float
    rel_bound: float
    rel_claim: str
    crossover: float
    saturation: float


TABLE_ITEMS = (
    TableItem('A', Target.ERF, 'sqrt(1-exp(E(x)))', ERF_COEFFS,
              2.27e-5, 1.21e-4, '1.21e-4 for all x>=0', ERF_CROSSOVER, 1.0),
    TableItem('B', Target.ERFC, '1-sqrt(1-exp(E(x)))', ERF_COEFFS,
              2.27e-5, 0.01, '1% on [0,b], b>2.1588', ERF_CROSSOVER, 0.0),
    TableItem('C', Target.PHI, '1/2+1/2*sqrt(1-exp(E(x)))', PHI_COEFFS,
              1.14e-5, 1.78e-5, '1.78e-5 for all x>=0', PHI_CROSSOVER, 1.0),
    TableItem('D', Target.Q, '1/2-1/2*sqrt(1-exp(E(x)))', PHI_COEFFS,
              1.14e-5, 0.01, '1% on [0,b], b>3.053', PHI_CROSSOVER, 0.0),
)

# Relative-error validity thresholds of items B and D.
ERFC_REL_THRESHOLD_B = 2.1588
Q_REL_THRESHOLD_B = 3.053

# Error bounds of Winitzki's approximation.
WINITZKI_ABS_BOUND = 1.25e-4
WINITZKI_REL_BOUND = 1.28e-4

# Leading-order ratio erf_approx(x) / erf(x) as x -> 0.
SMALL_X_REL_LIMIT = math.sqrt(-ERF_COEFFS.n1 * math.pi / 4.0) - 1.0
