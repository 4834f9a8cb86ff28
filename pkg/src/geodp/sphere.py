"""The d-sphere of constant curvature kappa embedded in R^(d+1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import MEMBERSHIP_TOL, Manifold, ManifoldDescriptor

_SERIES_CUTOFF = 1e-6
_ANTIPODE_TOL = 1e-10


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def _angle_parts(x, y, kappa):
    """Return (cos, sin, angle) of the central angle between x and y.

    The angle comes from ``arctan2`` of the two components, which keeps full
    relative precision near 0 and pi; it is the clamped ``arccos`` of the
    normalized dot product.
    """
    c = np.clip(kappa * _dot(x, y), -1.0, 1.0)
    perp = y - (kappa * _dot(x, y))[..., None] * x
    s = math.sqrt(kappa) * np.linalg.norm(perp, axis=-1)
    return c, s, np.arctan2(s, c)


@dataclass(frozen=True)
class Sphere(Manifold):
    """Sphere of radius ``kappa ** -0.5`` with the induced metric."""

    dim: int = 2
    kappa: float = 1.0

    name = "sphere"
    point_ndim = 1

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("sphere dimension must be positive")
        if not self.kappa > 0:
            raise DomainError("sphere curvature must be positive")

    @property
    def radius(self) -> float:
        return 1.0 / math.sqrt(self.kappa)

    @property
    def descriptor(self):
        return ManifoldDescriptor(
            dimension=self.dim,
            ambient_dimension=self.dim + 1,
            kappa_max=self.kappa,
            kappa_min=self.kappa,
            injectivity_radius=math.pi * self.radius,
        )

    def north_pole(self):
        p = np.zeros(self.dim + 1)
        p[-1] = self.radius
        return p

    def belongs(self, x, atol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        return np.abs(np.linalg.norm(x, axis=-1) - self.radius) <= atol

    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        return np.abs(_dot(np.asarray(x), np.asarray(v))) <= atol

    def normalize(self, x):
        x = np.asarray(x, dtype=float)
        return x * (self.radius / np.linalg.norm(x, axis=-1, keepdims=True))

    def inner(self, x, u, v):
        return _dot(np.asarray(u, dtype=float), np.asarray(v, dtype=float))

    def norm(self, x, v):
        return np.linalg.norm(np.asarray(v, dtype=float), axis=-1)

    def proj(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        return w - (self.kappa * _dot(w, x))[..., None] * x

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1)
        a = math.sqrt(self.kappa) * nv
        small = nv < 1e-14
        safe = np.where(small, 1.0, nv)
        coef = np.where(small, 0.0, self.radius * np.sin(a) / safe)
        out = np.cos(a)[..., None] * x + coef[..., None] * v
        return np.where(small[..., None], x, out)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c, s, a = _angle_parts(x, y, self.kappa)
        if np.any(math.pi - a < _ANTIPODE_TOL):
            worst = float(np.max(a)) * self.radius
            raise DomainError(
                f"log map undefined at the cut locus: distance {worst:.17g} "
                f"reaches {math.pi * self.radius:.17g}"
            )
        safe = np.where(s > 0, s, 1.0)
        coef = np.where(a < _SERIES_CUTOFF, 1.0 + a * a / 6.0, a / safe)
        return coef[..., None] * (y - c[..., None] * x)

    def dist(self, x, y):
        _, _, a = _angle_parts(np.asarray(x, dtype=float), np.asarray(y, dtype=float), self.kappa)
        return self.radius * a

    def random_ambient(self, rng, size=()):
        size = (size,) if np.isscalar(size) else tuple(size)
        return rng.standard_normal(size + (self.dim + 1,))


def polar_to_point(theta, phi):
    """Unit vector with polar angle ``theta`` from the north pole of S^2."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def sample_ball_uniform_polar(r, count, rng):
    """Sample ``count`` points on S^2 around the north pole.

    The polar angle is uniform on ``[0, r]`` and the azimuth uniform on
    ``[0, 2 pi)``.  This is not area-uniform: mass concentrates near the pole.
    """
    if not 0 <= r <= math.pi / 4:
        raise DomainError(f"polar sampler radius {r!r} outside [0, pi/4]")
    theta = rng.uniform(0.0, r, size=count)
    phi = rng.uniform(0.0, 2 * math.pi, size=count)
    return polar_to_point(theta, phi)


def ambient_radius(r, kappa=1.0):
    """Chordal radius in R^(d+1) of a geodesic ball of radius ``r`` about any point."""
    R = 1.0 / math.sqrt(kappa)
    return 2 * R * math.sin(r / (2 * R))
