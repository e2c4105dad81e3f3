"""Closed-form Holder divergence between Dirichlets, a KL baseline, and
Monte-Carlo oracles implementing the integral definitions.

For conjugate exponents ``a`` (``alpha_h``) and ``b`` (``beta_h``) with
``1/a + 1/b = 1`` and power ``gamma``, the directed divergence between
members of the same exponential family with log-normalizer F is

    D(p:q) = F(gamma*theta_p)/a + F(gamma*theta_q)/b
             - F((gamma/a)*theta_p + (gamma/b)*theta_q),

and the symmetric form is the mean of the two directed values, which
expands to the four-term closed form

    S(p,q) = (F(g*tp) + F(g*tq) - F(g/a*tp + g/b*tq) - F(g/b*tp + g/a*tq)) / 2.
"""

from dataclasses import dataclass, field

import numpy as np

from ._backend import USING_NUMBA, njit
from .dirichlet import DirichletParams, log_normalizer, sample
from .errors import DomainError
from .special import digamma, log_gamma

MIN_ORACLE_SAMPLES = 10_000


@dataclass(frozen=True)
class HolderConfig:
    """Holder exponent alpha_h > 1 and power gamma > 0.

    The conjugate exponent beta_h = alpha_h / (alpha_h - 1) is always
    derived, never supplied.
    """

    alpha_h: float
    gamma: float
    beta_h: float = field(init=False)

    def __post_init__(self):
        if not self.alpha_h > 1.0:
            raise ValueError("alpha_h must be greater than 1")
        if not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "beta_h", self.alpha_h / (self.alpha_h - 1.0))


def _checked_log_normalizer(theta: np.ndarray, label: str) -> float:
    if np.any(theta <= -1.0):
        raise DomainError(
            f"holder divergence argument {label} left the valid region "
            f"(a component of the natural parameter is <= -1)"
        )
    return log_normalizer(theta)


def phd_closed(cfg: HolderConfig, p: DirichletParams, q: DirichletParams) -> float:
    """Directed closed-form Holder divergence D(p:q)."""
    if p.k != q.k:
        raise ValueError("p and q must have the same order")
    a, b, g = cfg.alpha_h, cfg.beta_h, cfg.gamma
    tp = p.alpha - 1.0
    tq = q.alpha - 1.0
    f_p = _checked_log_normalizer(g * tp, "gamma*theta_p")
    f_q = _checked_log_normalizer(g * tq, "gamma*theta_q")
    f_mix = _checked_log_normalizer(
        (g / a) * tp + (g / b) * tq, "(gamma/alpha)*theta_p + (gamma/beta)*theta_q"
    )
    return f_p / a + f_q / b - f_mix


def phd_closed_grad_p(
    cfg: HolderConfig, p: DirichletParams, q: DirichletParams
) -> np.ndarray:
    """Gradient of phd_closed with respect to p's concentration vector."""
    a, b, g = cfg.alpha_h, cfg.beta_h, cfg.gamma
    tp = p.alpha - 1.0
    tq = q.alpha - 1.0
    mix = (g / a) * tp + (g / b) * tq
    if np.any(g * tp <= -1.0) or np.any(mix <= -1.0):
        raise DomainError("holder divergence gradient outside the valid region")
    return (g / a) * (_grad_log_normalizer(g * tp) - _grad_log_normalizer(mix))


def _grad_log_normalizer(theta: np.ndarray) -> np.ndarray:
    a = theta + 1.0
    return digamma(a) - digamma(float(a.sum()))


def phd_symmetric(cfg: HolderConfig, p: DirichletParams, q: DirichletParams) -> float:
    """Symmetric Holder divergence: mean of the two directed closed forms."""
    return 0.5 * (phd_closed(cfg, p, q) + phd_closed(cfg, q, p))


def kl_dirichlet(p: DirichletParams, q: DirichletParams) -> float:
    """KL(p || q) between Dirichlets, in closed form."""
    if p.k != q.k:
        raise ValueError("p and q must have the same order")
    sp = p.strength
    val = (
        log_gamma(sp)
        - np.sum(log_gamma(p.alpha))
        - log_gamma(q.strength)
        + np.sum(log_gamma(q.alpha))
    )
    val += np.dot(p.alpha - q.alpha, digamma(p.alpha) - digamma(sp))
    return float(val)


def _mc_moments_loop(sa, sb, sc):
    # Shifted first and second moments of the three integrand streams,
    # fused into one pass (compiled when the numba backend is active).
    n = sa.shape[0]
    ma = np.max(sa)
    mb = np.max(sb)
    mc = np.max(sc)
    s1 = np.zeros(3)
    s2 = np.zeros((3, 3))
    for i in range(n):
        ra = np.exp(sa[i] - ma)
        rb = np.exp(sb[i] - mb)
        rc = np.exp(sc[i] - mc)
        s1[0] += ra
        s1[1] += rb
        s1[2] += rc
        s2[0, 0] += ra * ra
        s2[0, 1] += ra * rb
        s2[0, 2] += ra * rc
        s2[1, 1] += rb * rb
        s2[1, 2] += rb * rc
        s2[2, 2] += rc * rc
    mean = s1 / n
    cov = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            upper = s2[i, j] if j >= i else s2[j, i]
            cov[i, j] = (upper - n * mean[i] * mean[j]) / (n - 1)
    return mean, cov


def _mc_moments_numpy(sa, sb, sc):
    r = np.exp(
        np.stack([sa - np.max(sa), sb - np.max(sb), sc - np.max(sc)])
    )
    return r.mean(axis=1), np.cov(r)


if USING_NUMBA:
    _mc_moments = njit(_mc_moments_loop)
else:
    _mc_moments = _mc_moments_numpy


def _log_density_terms(d: DirichletParams, log_mu: np.ndarray) -> np.ndarray:
    norm = log_gamma(d.strength) - np.sum(log_gamma(d.alpha))
    return log_mu @ (d.alpha - 1.0) + norm


def phd_mc_oracle(
    cfg: HolderConfig,
    p: DirichletParams,
    q: DirichletParams,
    n_samples: int,
    rng_seed,
) -> tuple[float, float]:
    """Monte-Carlo estimate of the integral-definition Holder divergence.

    Averages the three integrands over uniform-simplex draws (the simplex
    volume factors cancel in the ratio because 1/a + 1/b = 1) and returns
    the estimate with its delta-method standard error.  Restricted to
    concentrations >= 1 so the integrands stay bounded near the boundary.
    """
    if p.k != q.k:
        raise ValueError("p and q must have the same order")
    if np.any(p.alpha < 1.0) or np.any(q.alpha < 1.0):
        raise DomainError("oracle requires every concentration >= 1")
    if n_samples < MIN_ORACLE_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_ORACLE_SAMPLES}")
    a, b, g = cfg.alpha_h, cfg.beta_h, cfg.gamma
    rng = (
        rng_seed
        if isinstance(rng_seed, np.random.Generator)
        else np.random.default_rng(rng_seed)
    )
    e = rng.standard_exponential((n_samples, p.k))
    mu = e / e.sum(axis=1, keepdims=True)
    log_mu = np.log(np.maximum(mu, 1e-300))
    logp = _log_density_terms(p, log_mu)
    logq = _log_density_terms(q, log_mu)

    sa = (g / a) * logp + (g / b) * logq
    sb = g * logp
    sc = g * logq
    mean, cov = _mc_moments(sa, sb, sc)

    est = (
        -(np.max(sa) + np.log(mean[0]))
        + (np.max(sb) + np.log(mean[1])) / a
        + (np.max(sc) + np.log(mean[2])) / b
    )
    coeff = np.array([-1.0, 1.0 / a, 1.0 / b]) / mean
    var = coeff @ cov @ coeff / n_samples
    return float(est), float(np.sqrt(max(var, 0.0)))


def kl_mc_oracle(
    p: DirichletParams, q: DirichletParams, n_samples: int, rng_seed
) -> tuple[float, float]:
    """Monte-Carlo estimate of KL(p || q) from draws of p."""
    if n_samples < MIN_ORACLE_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_ORACLE_SAMPLES}")
    mu = sample(p, rng_seed, n_samples)
    log_mu = np.log(np.maximum(mu, 1e-300))
    w = _log_density_terms(p, log_mu) - _log_density_terms(q, log_mu)
    est = float(np.mean(w))
    se = float(np.std(w, ddof=1) / np.sqrt(n_samples))
    return est, se
