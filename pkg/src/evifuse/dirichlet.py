"""Dirichlet distributions in standard and exponential-family form.

The natural parameter is ``theta = alpha - 1`` with sufficient statistic
``log(mu)``; the log-normalizer is

    F(theta) = sum_k lgamma(theta_k + 1) - lgamma(sum_k (theta_k + 1)),

so ``F(alpha - 1) = sum_k lgamma(alpha_k) - lgamma(S)`` with strength
``S = sum_k alpha_k``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .special import digamma, log_gamma

SIMPLEX_TOL = 1e-12


def _as_vector(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Concentration vector over k >= 2 classes, all entries positive."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.alpha, "alpha")
        if arr.size < 2:
            raise ValueError("Dirichlet order must be at least 2")
        if not np.all(arr > 0.0):
            raise DomainError("alpha entries must be strictly positive")
        object.__setattr__(self, "alpha", arr)

    @property
    def k(self) -> int:
        return self.alpha.size

    @property
    def strength(self) -> float:
        return float(self.alpha.sum())

    def __eq__(self, other):
        return isinstance(other, DirichletParams) and np.array_equal(
            self.alpha, other.alpha
        )


@dataclass(frozen=True, eq=False)
class NaturalParams:
    """Natural parameter theta = alpha - 1; every entry must exceed -1."""

    theta: np.ndarray

    def __post_init__(self):
        arr = _as_vector(self.theta, "theta")
        if not np.all(arr > -1.0):
            raise DomainError("theta entries must be greater than -1")
        object.__setattr__(self, "theta", arr)

    def __eq__(self, other):
        return isinstance(other, NaturalParams) and np.array_equal(
            self.theta, other.theta
        )


def to_natural(d: DirichletParams) -> NaturalParams:
    return NaturalParams(d.alpha - 1.0)


def from_natural(n: NaturalParams) -> DirichletParams:
    return DirichletParams(n.theta + 1.0)


def _theta_array(theta) -> np.ndarray:
    if isinstance(theta, NaturalParams):
        return theta.theta
    arr = _as_vector(theta, "theta")
    if not np.all(arr > -1.0):
        raise DomainError("theta entries must be greater than -1")
    return arr


def log_normalizer(theta) -> float:
    """F(theta); accepts NaturalParams or a raw vector with theta_k > -1."""
    arr = _theta_array(theta)
    a = arr + 1.0
    return float(np.sum(log_gamma(a)) - log_gamma(float(a.sum())))


def log_normalizer_rows(theta_rows: np.ndarray) -> np.ndarray:
    """Row-wise F over an (n, k) matrix of natural parameters."""
    a = np.asarray(theta_rows, dtype=np.float64) + 1.0
    if np.any(a <= 0.0):
        raise DomainError("theta entries must be greater than -1")
    return log_gamma(a).sum(axis=1) - log_gamma(a.sum(axis=1))


def log_pdf(d: DirichletParams, mu) -> float:
    """Log density at an interior simplex point."""
    m = _as_vector(mu, "mu")
    if m.size != d.k:
        raise ValueError("mu length must match Dirichlet order")
    if not np.all((m > 0.0) & (m < 1.0)):
        raise DomainError("mu must lie strictly inside the simplex")
    if abs(m.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError("mu components must sum to 1 within 1e-12")
    norm = log_gamma(d.strength) - np.sum(log_gamma(d.alpha))
    return float(norm + np.dot(d.alpha - 1.0, np.log(m)))


def expected_log_mu(d: DirichletParams) -> np.ndarray:
    """E[log mu_i] = psi(alpha_i) - psi(S)."""
    return digamma(d.alpha) - digamma(d.strength)


def sample(d: DirichletParams, rng_seed, n: int) -> np.ndarray:
    """n i.i.d. draws via normalized independent gamma variates.

    ``rng_seed`` may be an integer seed or a ``numpy.random.Generator``;
    a fixed seed reproduces the draws bit for bit.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    g = rng.standard_gamma(d.alpha, size=(n, d.k))
    return g / g.sum(axis=1, keepdims=True)
