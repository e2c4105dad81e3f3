"""Log-gamma, digamma and trigamma for positive arguments.

Everything downstream (densities, divergences, losses, gradients) reduces to
these three functions, so they are implemented here once as scalar kernels
and compiled through the active backend (see ``_backend``).

Algorithms:

* ``log_gamma`` -- Lanczos approximation (g = 7, 9 coefficients), with one
  recurrence step ``lgamma(x) = lgamma(x+1) - log(x)`` below 0.5 to keep the
  series in its accurate range.
* ``digamma`` / ``trigamma`` -- upward recurrence to shift the argument above
  16, then the de Moivre asymptotic series with Bernoulli-number
  coefficients.  The ``1/x`` (resp. ``1/x^2``) head term is applied last so
  the only large-magnitude rounding is the unavoidable final one.

Accuracy is a few ulp across ``[1e-3, 1e6]``; in absolute terms that is
below 1e-12 wherever the result magnitude allows it (one ulp of a float64
exceeds 1e-12 once the value passes ~4e3, so a tighter absolute bound is not
representable).
"""

import math

import numpy as np

from ._backend import vectorize_f64
from .errors import DomainError

_HALF_LOG_2PI = 0.9189385332046727417803297

# Lanczos coefficients, g = 7.
_L0 = 0.99999999999980993
_L1 = 676.5203681218851
_L2 = -1259.1392167224028
_L3 = 771.32342877765313
_L4 = -176.61502916214059
_L5 = 12.507343278686905
_L6 = -0.13857109526572012
_L7 = 9.9843695780195716e-6
_L8 = 1.5056327351493116e-7


def _log_gamma_raw(x):
    shift = 0.0
    if x < 0.5:
        shift = -math.log(x)
        x = x + 1.0
    z = x - 1.0
    s = _L0
    s += _L1 / (z + 1.0)
    s += _L2 / (z + 2.0)
    s += _L3 / (z + 3.0)
    s += _L4 / (z + 4.0)
    s += _L5 / (z + 5.0)
    s += _L6 / (z + 6.0)
    s += _L7 / (z + 7.0)
    s += _L8 / (z + 8.0)
    base = z + 7.5
    return shift + _HALF_LOG_2PI + (z + 0.5) * math.log(base) - base + math.log(s)


def _digamma_raw(x):
    head = 0.0
    acc = 0.0
    if x < 16.0:
        head = 1.0 / x
        y = x + 1.0
        while y < 16.0:
            acc += 1.0 / y
            y += 1.0
        x = y
    r = 1.0 / x
    r2 = r * r
    tail = r2 * (
        1.0 / 12.0
        - r2
        * (
            1.0 / 120.0
            - r2
            * (
                1.0 / 252.0
                - r2
                * (
                    1.0 / 240.0
                    - r2
                    * (1.0 / 132.0 - r2 * (691.0 / 32760.0 - r2 * (1.0 / 12.0)))
                )
            )
        )
    )
    val = math.log(x) - 0.5 * r - tail
    return (val - acc) - head


def _trigamma_raw(x):
    head = 0.0
    acc = 0.0
    if x < 16.0:
        head = 1.0 / (x * x)
        y = x + 1.0
        while y < 16.0:
            acc += 1.0 / (y * y)
            y += 1.0
        x = y
    r = 1.0 / x
    r2 = r * r
    tail = r * r2 * (
        1.0 / 6.0
        - r2
        * (
            1.0 / 30.0
            - r2
            * (
                1.0 / 42.0
                - r2
                * (
                    1.0 / 30.0
                    - r2
                    * (5.0 / 66.0 - r2 * (691.0 / 2730.0 - r2 * (7.0 / 6.0)))
                )
            )
        )
    )
    val = r + 0.5 * r2 + tail
    return (val + acc) + head


_log_gamma_u = vectorize_f64(_log_gamma_raw)
_digamma_u = vectorize_f64(_digamma_raw)
_trigamma_u = vectorize_f64(_trigamma_raw)


def _check_positive(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(arr > 0.0):
        raise DomainError(f"{name} requires strictly positive argument")
    return arr


def log_gamma(x):
    """ln Gamma(x) for x > 0; scalar in, scalar out."""
    arr = _check_positive(x, "log_gamma")
    out = _log_gamma_u(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def digamma(x):
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    arr = _check_positive(x, "digamma")
    out = _digamma_u(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def trigamma(x):
    """psi'(x), the second derivative of ln Gamma, for x > 0."""
    arr = _check_positive(x, "trigamma")
    out = _trigamma_u(arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out
