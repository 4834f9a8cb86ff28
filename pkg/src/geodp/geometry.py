"""Manifold contract shared by the concrete geometries.

Concrete manifolds work on plain numpy arrays with arbitrary leading batch
axes, so solvers and samplers can run many independent problems at once.
:class:`Point` and :class:`Tangent` wrap single arrays with a manifold tag
for the checked, user-facing API (:func:`exp_map`, :func:`log_map`, ...).
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError

MEMBERSHIP_TOL = 1e-12
BALL_TOL = 1e-9


@dataclass(frozen=True)
class ManifoldDescriptor:
    dimension: int
    ambient_dimension: int
    kappa_max: float
    kappa_min: float
    injectivity_radius: float

    def __post_init__(self):
        if self.dimension < 1 or self.ambient_dimension < 1:
            raise DomainError("dimensions must be positive")
        if self.kappa_min > self.kappa_max:
            raise DomainError("kappa_min must not exceed kappa_max")
        if not self.injectivity_radius > 0:
            raise DomainError("injectivity radius must be positive")

    def max_ball_radius(self) -> float:
        """Supremum of radii allowed for data balls.

        Radii must stay strictly below
        ``0.5 * min(inj, (pi / 2) / sqrt(kappa_max))``; the curvature term is
        infinite when ``kappa_max <= 0``.
        """
        curv = math.inf
        if self.kappa_max > 0:
            curv = 0.5 * math.pi / math.sqrt(self.kappa_max)
        return 0.5 * min(self.injectivity_radius, curv)


class Manifold(abc.ABC):
    """Array-level geometry on a Riemannian manifold.

    ``point_ndim`` is the number of trailing axes of one point; everything
    before those is treated as batch axes and broadcast.
    """

    name: str
    point_ndim: int = 1

    @property
    @abc.abstractmethod
    def descriptor(self) -> ManifoldDescriptor: ...

    @abc.abstractmethod
    def exp(self, x, v): ...

    @abc.abstractmethod
    def log(self, x, y): ...

    @abc.abstractmethod
    def dist(self, x, y): ...

    @abc.abstractmethod
    def inner(self, x, u, v): ...

    @abc.abstractmethod
    def proj(self, x, w): ...

    @abc.abstractmethod
    def belongs(self, x, atol=MEMBERSHIP_TOL): ...

    @abc.abstractmethod
    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL): ...

    @abc.abstractmethod
    def random_ambient(self, rng, size=()):
        """Standard Gaussian draw in the ambient representation."""

    def normalize(self, x):
        """Pull coordinates carrying rounding drift back onto the manifold."""
        return x

    def norm(self, x, v):
        return np.sqrt(np.maximum(self.inner(x, v, v), 0.0))

    def mean_log_norm(self, x, data):
        """``||(1/n) sum_i log(x, data_i)||_x`` with samples on the axis before the point axes."""
        logs = self.log(self.expand(x), data)
        return self.norm(x, np.mean(logs, axis=self.sample_axis()))

    def expand(self, x):
        """Insert a sample axis in front of the point axes of ``x``."""
        return np.expand_dims(x, axis=-(self.point_ndim + 1))

    def sample_axis(self):
        return -(self.point_ndim + 1)

    def point_shape(self, x):
        return np.shape(x)[np.ndim(x) - self.point_ndim:]

    def batch_shape(self, x):
        return np.shape(x)[: np.ndim(x) - self.point_ndim]


@dataclass(frozen=True, eq=False)
class Point:
    manifold: Manifold
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords)
        if np.ndim(coords) != self.manifold.point_ndim:
            raise ContractError("Point holds a single point; use arrays for batches")
        if not bool(self.manifold.belongs(coords)):
            raise DomainError(f"coordinates do not lie on {self.manifold.name}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True, eq=False)
class Tangent:
    base: Point
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector)
        m = self.base.manifold
        if np.shape(vec) != np.shape(self.base.coords):
            raise ContractError("tangent vector shape does not match its base point")
        if not bool(m.is_tangent(self.base.coords, vec)):
            raise DomainError(f"vector is not tangent to {m.name} at its base point")
        object.__setattr__(self, "vector", vec)

    @property
    def norm(self) -> float:
        return float(self.base.manifold.norm(self.base.coords, self.vector))


def _same_point(p: Point, q: Point) -> bool:
    return p is q or (p.manifold == q.manifold and np.array_equal(p.coords, q.coords))


def _check_same_manifold(*points: Point):
    m = points[0].manifold
    for q in points[1:]:
        if q.manifold != m:
            raise ContractError(f"operands live on {m.name} and {q.manifold.name}")
    return m


def _check_base(p: Point, *vs: Tangent):
    for v in vs:
        if not _same_point(v.base, p):
            raise ContractError("tangent vector is anchored at a different base point")


def exp_map(p: Point, v: Tangent) -> Point:
    _check_base(p, v)
    return Point(p.manifold, p.manifold.exp(p.coords, v.vector))


def log_map(p: Point, q: Point) -> Tangent:
    m = _check_same_manifold(p, q)
    return Tangent(p, m.log(p.coords, q.coords))


def distance(p: Point, q: Point) -> float:
    m = _check_same_manifold(p, q)
    return float(m.dist(p.coords, q.coords))


def inner(p: Point, u: Tangent, v: Tangent) -> float:
    _check_base(p, u, v)
    return float(p.manifold.inner(p.coords, u.vector, v.vector))


def norm_at(p: Point, v: Tangent) -> float:
    return math.sqrt(max(inner(p, v, v), 0.0))


def project_tangent(p: Point, w) -> Tangent:
    return Tangent(p, p.manifold.proj(p.coords, np.asarray(w)))


@dataclass(frozen=True, eq=False)
class GeodesicBall:
    center: Point
    radius: float
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError("ball radius must be positive")
        if self.check:
            bound = self.center.manifold.descriptor.max_ball_radius()
            if not self.radius < bound:
                raise DomainError(
                    f"ball radius {self.radius:.6g} violates the curvature/injectivity "
                    f"bound {bound:.6g} on {self.center.manifold.name}"
                )

    @property
    def manifold(self) -> Manifold:
        return self.center.manifold

    def contains(self, x, tol=BALL_TOL):
        """Vectorized membership test for coordinate arrays."""
        return self.manifold.dist(self.center.coords, x) <= self.radius + tol


def random_in_ball(manifold: Manifold, center, radius, rng, size=()):
    """Draw points at geodesic distance below ``radius`` from ``center``.

    Directions are isotropic in the tangent space at ``center`` and the
    radial coordinate follows ``radius * U**(1/d)``.  The result is not the
    Riemannian-uniform law on the ball; it is meant for property tests.
    """
    size = (size,) if np.isscalar(size) else tuple(size)
    center = np.asarray(center)
    base = np.broadcast_to(center, size + np.shape(center))
    w = manifold.proj(base, manifold.random_ambient(rng, size))
    nrm = manifold.norm(base, w)
    d = manifold.descriptor.dimension
    t = radius * rng.random(size) ** (1.0 / d)
    scale = (t / nrm).reshape(size + (1,) * manifold.point_ndim)
    return manifold.exp(base, w * scale)
