"""Curvature-dependent sensitivity and privacy scale calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .geometry import Manifold


def h_max(s: float, kappa: float) -> float:
    """``s sqrt(k) cot(s sqrt(k))`` for ``k > 0`` and 1 otherwise.

    Lies in (0, 1] and decreases in ``s`` on the positively curved branch.
    """
    if kappa <= 0:
        return 1.0
    a = s * math.sqrt(kappa)
    if a >= math.pi:
        raise DomainError(f"s * sqrt(kappa) = {a:.6g} must stay below pi")
    if a == 0:
        return 1.0
    return a / math.tan(a)


def h_min(s: float, kappa: float) -> float:
    """``s sqrt|k| coth(s sqrt|k|)`` for ``k < 0`` and 1 otherwise."""
    if kappa >= 0:
        return 1.0
    a = s * math.sqrt(-kappa)
    if a == 0:
        return 1.0
    return a / math.tanh(a)


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    r: float
    n: int
    kappa_max: float
    kappa_min: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not self.r >= 0:
            raise DomainError("ball radius must be nonnegative")
        if self.n < 1:
            raise DomainError("sample size must be positive")
        if self.kappa_max > 0 and not self.r < 0.25 * math.pi / math.sqrt(self.kappa_max):
            raise DomainError(
                f"radius {self.r:.6g} violates r < (pi/4) kappa_max^-1/2 = "
                f"{0.25 * math.pi / math.sqrt(self.kappa_max):.6g}"
            )

    @classmethod
    def for_manifold(cls, manifold: Manifold, epsilon: float, r: float, n: int) -> "PrivacyParams":
        desc = manifold.descriptor
        if not r < desc.max_ball_radius():
            raise DomainError(f"radius {r:.6g} violates the ball bound {desc.max_ball_radius():.6g}")
        return cls(epsilon=epsilon, r=r, n=n, kappa_max=desc.kappa_max, kappa_min=desc.kappa_min)


def sensitivity(p: PrivacyParams) -> float:
    """Gradient sensitivity ``2r (2 - h_max(2r, kappa_max)) / n``."""
    return 2 * p.r * (2 - h_max(2 * p.r, p.kappa_max)) / p.n


def scale_sigma(p: PrivacyParams) -> float:
    return 2 * sensitivity(p) / p.epsilon


def laplace_sensitivity(p: PrivacyParams) -> float:
    """Mean sensitivity used by the manifold Laplace mechanism.

    ``2r (2 - h) / (n h)`` with ``h = h_max(2r, kappa_max)``; reduces to
    ``2r / n`` on non-positively curved spaces.
    """
    h = h_max(2 * p.r, p.kappa_max)
    return 2 * p.r * (2 - h) / (p.n * h)


def laplace_scale_sigma(p: PrivacyParams) -> float:
    return 2 * laplace_sensitivity(p) / p.epsilon


def euclidean_sensitivity(r_ambient: float, n: int) -> float:
    """Sensitivity of a mean of ``n`` points in a Euclidean ball of radius ``r_ambient``."""
    return 2 * r_ambient / n
