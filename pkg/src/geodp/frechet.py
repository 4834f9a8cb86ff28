"""Fréchet mean estimation by Riemannian gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, DomainError
from .geometry import BALL_TOL, GeodesicBall, Manifold, Point, Tangent


@dataclass(frozen=True, eq=False)
class Dataset:
    """Points on one manifold together with the ball assumed to contain them.

    ``points`` is stored as a stacked coordinate array of shape
    ``(n, *point_shape)``.
    """

    points: np.ndarray
    ball: GeodesicBall

    def __post_init__(self):
        pts = self.points
        m = self.ball.manifold
        if isinstance(pts, (list, tuple)) and pts and isinstance(pts[0], Point):
            for p in pts:
                if p.manifold != m:
                    raise ContractError(f"dataset mixes {p.manifold.name} and {m.name} points")
            pts = np.stack([p.coords for p in pts])
        pts = np.asarray(pts)
        if pts.ndim != m.point_ndim + 1 or len(pts) == 0:
            raise DomainError("dataset needs a nonempty stack of points")
        if not np.all(m.belongs(pts)):
            raise DomainError(f"dataset contains points off {m.name}")
        d = m.dist(self.ball.center.coords, pts)
        if np.any(d > self.ball.radius + BALL_TOL):
            raise DomainError(
                f"point at distance {float(d.max()):.6g} lies outside the ball of radius {self.ball.radius:.6g}"
            )
        object.__setattr__(self, "points", pts)

    @property
    def manifold(self) -> Manifold:
        return self.ball.manifold

    @property
    def n(self) -> int:
        return len(self.points)

    def replace_last(self, point) -> "Dataset":
        """Adjacent dataset differing in the final record."""
        coords = point.coords if isinstance(point, Point) else np.asarray(point)
        pts = self.points.copy()
        pts[-1] = coords
        return Dataset(pts, self.ball)


@dataclass(frozen=True)
class SolverConfig:
    step: float = 0.5
    grad_tol: float = 1e-5
    max_iter: int = 500

    def __post_init__(self):
        if not 0 < self.step <= 1:
            raise ConfigError("step must lie in (0, 1]")
        if not self.grad_tol > 0:
            raise ConfigError("grad_tol must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")


@dataclass(frozen=True)
class FrechetResult:
    mean: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    grad_norm: np.ndarray


# Array-level routines.  ``x`` has shape (*batch, *point) and ``data`` has
# shape (*batch, n, *point).


def variance_array(manifold: Manifold, x, data):
    d = manifold.dist(manifold.expand(x), data)
    return 0.5 * np.mean(d**2, axis=-1)


def neg_gradient_array(manifold: Manifold, x, data):
    """Tangent-space sample mean ``(1/n) sum_i log(x, x_i)``; equals ``-grad F``."""
    logs = manifold.log(manifold.expand(x), data)
    return np.mean(logs, axis=manifold.sample_axis())


def frechet_mean_array(manifold: Manifold, data, cfg: SolverConfig | None = None, x0=None) -> FrechetResult:
    """Batched gradient descent ``x <- exp(x, step * neg_gradient(x))``.

    Each problem in the batch stops updating as soon as its own gradient
    norm drops below ``grad_tol``, so a problem's result does not depend on
    what else shares its batch.
    """
    cfg = cfg or SolverConfig()
    data = np.asarray(data)
    ax = data.ndim - manifold.point_ndim - 1
    x = np.take(data, 0, axis=ax).copy() if x0 is None else np.array(x0, copy=True)
    batch = x.shape[: x.ndim - manifold.point_ndim]
    active = np.ones(batch, dtype=bool)
    iters = np.zeros(batch, dtype=int)
    gnorm = np.zeros(batch)
    pt_axes = (1,) * manifold.point_ndim
    for it in range(cfg.max_iter + 1):
        g = neg_gradient_array(manifold, x, data)
        gn = manifold.norm(x, g)
        gnorm = np.where(active, gn, gnorm)
        active = active & (gn >= cfg.grad_tol)
        if not np.any(active) or it == cfg.max_iter:
            break
        stepped = manifold.exp(x, cfg.step * g)
        x = np.where(active.reshape(batch + pt_axes), stepped, x)
        iters = iters + active
    return FrechetResult(mean=x, converged=~active, iterations=iters, grad_norm=gnorm)


# Point-level API.


def variance(x: Point, D: Dataset) -> float:
    if x.manifold != D.manifold:
        raise ContractError("query point and dataset live on different manifolds")
    return float(variance_array(D.manifold, x.coords, D.points))


def neg_gradient(x: Point, D: Dataset) -> Tangent:
    if x.manifold != D.manifold:
        raise ContractError("query point and dataset live on different manifolds")
    return Tangent(x, neg_gradient_array(D.manifold, x.coords, D.points))


@dataclass(frozen=True)
class MeanEstimate:
    point: Point
    converged: bool
    iterations: int
    grad_norm: float


def frechet_mean(D: Dataset, cfg: SolverConfig | None = None) -> MeanEstimate:
    """Fréchet mean of ``D`` started from its first point.

    Non-convergence within ``max_iter`` is reported through ``converged``
    rather than raised.
    """
    res = frechet_mean_array(D.manifold, D.points, cfg)
    m = D.manifold
    return MeanEstimate(
        point=Point(m, m.normalize(res.mean)),
        converged=bool(res.converged),
        iterations=int(res.iterations),
        grad_norm=float(res.grad_norm),
    )

