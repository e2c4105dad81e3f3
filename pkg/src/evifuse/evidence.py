"""Subjective-logic opinions, the reduced Dempster-Shafer combination rule,
binary-frame basic probability assignments, and a full power-set Dempster
oracle used to validate the reduced rule.

An opinion over k classes is a belief vector ``b`` plus an uncertainty mass
``u`` with ``sum(b) + u = 1``.  The reduced combination for two opinions is

    b_k = (b1_k*b2_k + b1_k*u2 + b2_k*u1) / (1 - C),   u = u1*u2 / (1 - C),

with conflict ``C = sum_{i != j} b1_i * b2_j``, which is exactly Dempster's
rule restricted to singleton focal sets plus the whole frame.
"""

from dataclasses import dataclass

import numpy as np

from .dirichlet import DirichletParams
from .errors import DomainError, TotalConflictError

MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Opinion:
    """Per-class beliefs plus one shared uncertainty mass."""

    beliefs: np.ndarray
    uncertainty: float

    def __post_init__(self):
        b = np.asarray(self.beliefs, dtype=np.float64)
        if b.ndim != 1:
            raise ValueError("beliefs must be one-dimensional")
        u = float(self.uncertainty)
        if np.any(b < 0.0) or u < 0.0:
            raise ValueError("opinion masses must be non-negative")
        if abs(b.sum() + u - 1.0) > MASS_TOL:
            raise ValueError("opinion masses must sum to 1 within 1e-12")
        object.__setattr__(self, "beliefs", b)
        object.__setattr__(self, "uncertainty", u)

    @property
    def k(self) -> int:
        return self.beliefs.size

    def __eq__(self, other):
        return (
            isinstance(other, Opinion)
            and np.array_equal(self.beliefs, other.beliefs)
            and self.uncertainty == other.uncertainty
        )


@dataclass(frozen=True)
class BPA:
    """Mass assignment over the binary frame: true, false, or undecided."""

    m_true: float
    m_false: float
    m_uncertain: float

    def __post_init__(self):
        masses = (self.m_true, self.m_false, self.m_uncertain)
        if any(m < 0.0 for m in masses):
            raise ValueError("BPA masses must be non-negative")
        if abs(sum(masses) - 1.0) > MASS_TOL:
            raise ValueError("BPA masses must sum to 1 within 1e-12")


def vacuous(k: int) -> Opinion:
    """The neutral opinion: zero belief, full uncertainty."""
    return Opinion(np.zeros(k), 1.0)


def evidence_to_dirichlet(e) -> DirichletParams:
    """alpha = evidence + 1 (uniform prior carries one pseudo-count)."""
    arr = np.asarray(e, dtype=np.float64)
    if np.any(arr < 0.0):
        raise DomainError("evidence must be non-negative")
    return DirichletParams(arr + 1.0)


def dirichlet_to_opinion(d: DirichletParams) -> Opinion:
    """b_k = (alpha_k - 1)/S, u = k/S; requires non-negative evidence."""
    if np.any(d.alpha < 1.0):
        raise DomainError("opinion mapping requires every alpha_k >= 1")
    s = d.strength
    return Opinion((d.alpha - 1.0) / s, d.k / s)


def opinion_to_dirichlet(op: Opinion) -> DirichletParams:
    """Inverse mapping: S = k/u, alpha_k = b_k * S + 1."""
    if op.uncertainty <= 0.0:
        raise DomainError("opinion with zero uncertainty has no finite strength")
    s = op.k / op.uncertainty
    return DirichletParams(op.beliefs * s + 1.0)


def conflict(m1: Opinion, m2: Opinion) -> float:
    """C = sum over mismatched class pairs of b1_i * b2_j."""
    if m1.k != m2.k:
        raise ValueError("opinions must have the same number of classes")
    total = (1.0 - m1.uncertainty) * (1.0 - m2.uncertainty)
    return float(total - np.dot(m1.beliefs, m2.beliefs))


def ds_combine_reduced(m1: Opinion, m2: Opinion) -> Opinion:
    """Reduced Dempster combination of two opinions."""
    c = conflict(m1, m2)
    if c >= 1.0 - MASS_TOL:
        raise TotalConflictError(f"total conflict between opinions (C={c!r})")
    t = 1.0 - c
    b = (m1.beliefs * m2.beliefs + (m1.beliefs * m2.uncertainty + m2.beliefs * m1.uncertainty)) / t
    u = m1.uncertainty * m2.uncertainty / t
    return Opinion(b, u)


def ds_combine_multi(opinions) -> Opinion:
    """Left fold of the reduced rule over one or more opinions."""
    ops = list(opinions)
    if not ops:
        raise ValueError("at least one opinion is required")
    acc = ops[0]
    for op in ops[1:]:
        acc = ds_combine_reduced(acc, op)
    return acc


def ds_bpa(belief: float, sensor_value: float) -> BPA:
    """Binary-frame assignment from a scalar belief and a sensor reading."""
    if not (0.0 <= belief <= 1.0) or not (0.0 <= sensor_value <= 1.0):
        raise DomainError("belief and sensor_value must lie in [0, 1]")
    return BPA(belief * sensor_value, belief * (1.0 - sensor_value), 1.0 - belief)


def ds_combine_bpa(b1: BPA, b2: BPA) -> BPA:
    """Dempster's rule on the binary frame."""
    kappa = b1.m_true * b2.m_false + b1.m_false * b2.m_true
    if kappa >= 1.0 - MASS_TOL:
        raise TotalConflictError(f"total conflict between BPAs (kappa={kappa!r})")
    t = 1.0 - kappa
    m_true = (b1.m_true * b2.m_true + b1.m_true * b2.m_uncertain + b2.m_true * b1.m_uncertain) / t
    m_false = (b1.m_false * b2.m_false + b1.m_false * b2.m_uncertain + b2.m_false * b1.m_uncertain) / t
    m_unc = b1.m_uncertain * b2.m_uncertain / t
    return BPA(m_true, m_false, m_unc)


# --- full power-set Dempster oracle ---------------------------------------
#
# Mass assignments are dicts mapping a focal set, encoded as a bitmask over
# frame elements, to its mass.  The combination enumerates all intersections
# explicitly, so it is an independent check of the closed-form reduced rule.

MAX_ORACLE_FRAME = 10


def opinion_to_masses(op: Opinion) -> dict[int, float]:
    frame = (1 << op.k) - 1
    masses = {1 << i: float(op.beliefs[i]) for i in range(op.k)}
    masses[frame] = op.uncertainty
    return masses


def masses_to_opinion(masses: dict[int, float], k: int) -> Opinion:
    frame = (1 << k) - 1
    b = np.zeros(k)
    for focal, m in masses.items():
        if focal == frame:
            continue
        b[focal.bit_length() - 1] = m
    return Opinion(b, masses.get(frame, 0.0))


def bpa_to_masses(bpa: BPA) -> dict[int, float]:
    return {0b01: bpa.m_true, 0b10: bpa.m_false, 0b11: bpa.m_uncertain}


def masses_to_bpa(masses: dict[int, float]) -> BPA:
    return BPA(masses.get(0b01, 0.0), masses.get(0b10, 0.0), masses.get(0b11, 0.0))


def _validate_masses(masses: dict[int, float], frame: int):
    for focal in masses:
        if focal == 0 or focal & ~frame:
            raise ValueError("focal set outside the frame")
        if focal != frame and focal & (focal - 1):
            raise ValueError("oracle accepts singleton focal sets plus the frame only")


def _combine_masses(m1: dict[int, float], m2: dict[int, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    kappa = 0.0
    for f1, v1 in m1.items():
        for f2, v2 in m2.items():
            inter = f1 & f2
            prod = v1 * v2
            if inter == 0:
                kappa += prod
            else:
                out[inter] = out.get(inter, 0.0) + prod
    if kappa >= 1.0 - MASS_TOL:
        raise TotalConflictError(f"total conflict in oracle combination (kappa={kappa!r})")
    t = 1.0 - kappa
    return {focal: v / t for focal, v in out.items()}


def ds_full_dempster_oracle(masses, k: int | None = None) -> dict[int, float]:
    """Exact Dempster combination by enumerating focal-set intersections."""
    seq = list(masses)
    if not seq:
        raise ValueError("at least one mass assignment is required")
    if k is None:
        frame = 0
        for m in seq:
            for focal in m:
                frame |= focal
    else:
        frame = (1 << k) - 1
    if frame.bit_length() > MAX_ORACLE_FRAME:
        raise ValueError(f"oracle frame limited to {MAX_ORACLE_FRAME} elements")
    for m in seq:
        _validate_masses(m, frame)
    acc = dict(seq[0])
    for m in seq[1:]:
        acc = _combine_masses(acc, m)
    return acc
