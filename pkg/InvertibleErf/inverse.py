import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from .approx_core import (
    ERF_COEFFS,
    PHI_COEFFS,
    WINITZKI_COEFFS,
    _as_finite,
    _unwrap,
    erf_approx,
    erfc_approx,
    phi_approx,
    q_approx,
    winitzki_erf,
    winitzki_erfc,
)
from .exceptions import DomainError, InversionError

logger = logging.getLogger(__name__)

Real = Union[float, np.ndarray]


@dataclass(frozen=True)
class InverseResult:
    """
    Abscissa returned by an inversion and the residual |forward(x) - y| it achieves.
    """
    x: Real
    residual: Real


def invert_exponent(coeffs, L):
    """
    Solve E(x) = L for u = x^2.

    E(x) = L is the quadratic (n2 - L*d2) u^2 + (n1 - L*d1) u - L*d0 = 0. Both
    roots are formed without cancellation (q = -(b + sign(b) sqrt(disc)) / 2,
    roots q/a and c/q) and the nonnegative one, continuous with u(0) = 0, is
    returned.

    :param coeffs: RationalExponentCoeffs instance.
    :param L: Target exponent value(s), L <= 0.
    :return: u >= 0 (float or array, matching L).
    """
    arr = _as_finite(L, 'L')
    if np.any(arr > 0):
        raise DomainError(f"Exponent value must be <= 0, got {L!r}")

    a = coeffs.n2 - arr * coeffs.d2
    b = coeffs.n1 - arr * coeffs.d1
    c = -arr * coeffs.d0
    disc = b * b - 4.0 * a * c
    if np.any(disc < 0):
        raise InversionError(f"Negative discriminant for L = {L!r}")

    q = -0.5 * (b + np.where(b >= 0, 1.0, -1.0) * np.sqrt(disc))
    with np.errstate(divide='ignore', invalid='ignore'):
        root_a = np.where(a != 0, q / np.where(a != 0, a, 1.0), np.nan)
        root_c = np.where(q != 0, c / np.where(q != 0, q, 1.0), np.nan)
        linear = np.where(b != 0, -c / np.where(b != 0, b, 1.0), np.nan)

    ok_a = np.isfinite(root_a) & (root_a >= 0)
    ok_c = np.isfinite(root_c) & (root_c >= 0)
    quadratic = a != 0
    admissible = np.where(quadratic, ok_a.astype(int) + ok_c.astype(int), np.isfinite(linear) & (linear >= 0))
    if np.any(admissible != 1):
        raise InversionError(f"Expected exactly one nonnegative root for L = {L!r}")

    u = np.where(quadratic, np.where(ok_a, root_a, root_c), linear)
    return _unwrap(np.maximum(u, 0.0), L)


def _log_one_minus_square(z):
    """
    ln(1 - z^2) for 0 <= z < 1, using (1 - z)(1 + z) near saturation.
    """
    zz = z * z
    near = np.minimum(z, 1.0)
    with np.errstate(divide='ignore'):
        return np.where(zz < 0.5, np.log1p(-zz), np.log((1.0 - near) * (1.0 + near)))


def _log_from_tail(t):
    """
    ln(1 - (1 - t)^2) = ln(t (2 - t)) for 0 < t <= 1 without forming 1 - t for small t.
    """
    z = 1.0 - t
    zz = z * z
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(zz < 0.5, np.log1p(-zz), np.log(t * (2.0 - t)))


def _eta_prime(coeffs, ax):
    """
    Derivative of sqrt(1 - e^E(x)) for x >= 0.
    """
    u = ax * ax
    e = coeffs.numerator(u) / coeffs.denominator(u)
    eta = np.sqrt(-np.expm1(e))
    with np.errstate(divide='ignore', invalid='ignore'):
        return -np.exp(e) * (2.0 * ax * coeffs.derivative_u(u)) / (2.0 * eta)


def _polish(forward, slope, x, target):
    """
    One Newton correction, kept only where it does not increase the residual.
    """
    before = np.abs(forward(x) - target)
    d = slope(x)
    usable = np.isfinite(d) & (d != 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        candidate = np.where(usable, x - (forward(x) - target) / np.where(usable, d, 1.0), x)
    after = np.abs(forward(candidate) - target)
    return np.where(after <= before, candidate, x)


def _check_open(arr, lo, hi, name, value):
    if np.any((arr <= lo) | (arr >= hi)):
        raise DomainError(f"'{name}' must lie in the open interval ({lo}, {hi}), got {value!r}")


def _check_reachable(coeffs, L, value):
    """
    E(x) stays above its limit n2/d2, so tails at or below exp(n2/d2) / 2 have no preimage.
    """
    if np.any(L <= coeffs.limit()):
        raise DomainError(f"Value {value!r} is below the range of the approximation")


def _erf_inverse(coeffs, forward, y, polish):
    arr = _as_finite(y, 'y')
    _check_open(arr, -1.0, 1.0, 'y', y)
    ay = np.abs(arr)
    x = np.sqrt(invert_exponent(coeffs, _log_one_minus_square(ay)))
    if polish:
        x = _polish(lambda v: forward(v), lambda v: _eta_prime(coeffs, v), x, ay)
    x = np.copysign(x, arr)
    residual = np.abs(forward(x) - arr)
    return InverseResult(_unwrap(x, y), _unwrap(residual, y))


def _erfc_inverse(coeffs, forward, t, polish):
    arr = _as_finite(t, 'y')
    _check_open(arr, 0.0, 2.0, 'y', t)
    upper = arr > 1.0
    # x >= 0 for t <= 1 (tail branch), x < 0 for t > 1 where erf(-x) = t - 1
    L = np.where(upper,
                 _log_one_minus_square(np.clip(arr - 1.0, 0.0, None)),
                 _log_from_tail(np.clip(arr, np.finfo(float).tiny, 1.0)))
    _check_reachable(coeffs, L, t)
    x = np.sqrt(invert_exponent(coeffs, L))
    x = np.where(upper, -x, x)
    if polish:
        x = _polish(forward, lambda v: -_eta_prime(coeffs, np.abs(v)), x, arr)
    residual = np.abs(forward(x) - arr)
    return InverseResult(_unwrap(x, t), _unwrap(residual, t))


def _phi_inverse(p, forward, lower_tail, polish):
    arr = _as_finite(p, 'p')
    _check_open(arr, 0.0, 1.0, 'p', p)
    # s is the smaller of p and 1 - p; both are exact in the half where they are taken
    s = np.minimum(arr, 1.0 - arr)
    z = 1.0 - 2.0 * s
    zz = z * z
    with np.errstate(divide='ignore'):
        L = np.where(zz < 0.5, np.log1p(-zz), np.log(4.0 * s * (1.0 - s)))
    _check_reachable(PHI_COEFFS, L, p)
    x = np.sqrt(invert_exponent(PHI_COEFFS, L))
    negative = arr < 0.5 if lower_tail else arr > 0.5
    x = np.where(negative, -x, x)
    if polish:
        sign = 1.0 if lower_tail else -1.0
        x = _polish(forward, lambda v: sign * 0.5 * _eta_prime(PHI_COEFFS, np.abs(v)), x, arr)
    residual = np.abs(forward(x) - arr)
    return InverseResult(_unwrap(x, p), _unwrap(residual, p))


def erf_approx_inv(y, polish=False):
    """
    Invert erf_approx: x with erf_approx(x) = y, odd in y.

    :param y: Value(s) in (-1, 1).
    :param polish: Apply one Newton correction on top of the closed form.
    :return: InverseResult.
    """
    return _erf_inverse(ERF_COEFFS, erf_approx, y, polish)


def erfc_approx_inv(y, polish=False):
    """
    Invert erfc_approx: equal to erf_approx_inv(1 - y), computed from the tail directly.

    :param y: Value(s) in (0, 2).
    """
    return _erfc_inverse(ERF_COEFFS, erfc_approx, y, polish)


def phi_approx_inv(p, polish=False):
    """
    Invert phi_approx; p < 1/2 maps to -phi_approx_inv(1 - p).

    :param p: Probability in (0, 1).
    """
    return _phi_inverse(p, phi_approx, True, polish)


def q_approx_inv(p, polish=False):
    """
    Invert q_approx: equal to phi_approx_inv(1 - p).
    """
    return _phi_inverse(p, q_approx, False, polish)


def winitzki_erf_inv(y, polish=False):
    """
    Invert Winitzki's erf approximation through the same quadratic (here with d2 = 0).
    """
    return _erf_inverse(WINITZKI_COEFFS, winitzki_erf, y, polish)


def winitzki_erfc_inv(y, polish=False):
    return _erfc_inverse(WINITZKI_COEFFS, winitzki_erfc, y, polish)
