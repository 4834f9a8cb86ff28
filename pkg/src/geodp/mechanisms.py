"""Privacy mechanisms for releasing Fréchet means.

The K-norm gradient (KNG) and manifold Laplace mechanisms sample, by
Metropolis chains, from densities restricted to the data ball.  The
Euclidean baselines add noise in the ambient space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DomainError
from .frechet import Dataset, SolverConfig, frechet_mean
from .geometry import GeodesicBall, Manifold, Point
from .kendall import align, as_complex
from .mcmc import (
    ChainConfig,
    Kernel,
    KNGTarget,
    LaplaceTarget,
    MHResult,
    default_chain_config,
    default_kernel,
    sample_mh,
)
from .privacy import PrivacyParams, laplace_scale_sigma, scale_sigma


@dataclass
class MechanismResult:
    point: Point
    mechanism: str
    sigma: float
    acceptance_rate: float | None = None
    proposals: int | None = None
    warnings: list = field(default_factory=list)


def kng_neg_log_density(x: Point, D: Dataset, sigma: float) -> float:
    """Unnormalized KNG energy ``||(1/n) sum log(x, x_i)||_x / sigma``.

    Returns ``inf`` outside the dataset's ball.
    """
    if x.manifold != D.manifold:
        raise ContractError("query point and dataset live on different manifolds")
    m = D.manifold
    if not bool(m.dist(D.ball.center.coords, x.coords) <= D.ball.radius):
        return math.inf
    return float(m.mean_log_norm(x.coords, D.points)) / sigma


def laplace_neg_log_density(x: Point, eta: Point, sigma: float, ball: GeodesicBall | None = None) -> float:
    if x.manifold != eta.manifold:
        raise ContractError("points live on different manifolds")
    m = x.manifold
    if ball is not None and not bool(m.dist(ball.center.coords, x.coords) <= ball.radius):
        return math.inf
    return float(m.dist(x.coords, eta.coords)) / sigma


def _wrap(m: Manifold, res: MHResult, mechanism: str, sigma: float) -> MechanismResult:
    return MechanismResult(
        point=Point(m, m.normalize(res.samples[0])),
        mechanism=mechanism,
        sigma=sigma,
        acceptance_rate=float(res.acceptance_rate[0]),
        proposals=res.proposals,
        warnings=list(res.warnings),
    )


def sample_kng(
    D: Dataset,
    p: PrivacyParams,
    cfg: ChainConfig | None = None,
    rng: np.random.Generator | None = None,
    kernel: Kernel | None = None,
    start: Point | None = None,
) -> MechanismResult:
    """Draw one private mean from the KNG density restricted to ``D.ball``.

    The chain starts at the non-private Fréchet mean unless ``start`` is
    given.
    """
    m = D.manifold
    cfg = cfg or default_chain_config(m)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    sigma = scale_sigma(p)
    x0 = start if start is not None else frechet_mean(D, SolverConfig()).point
    target = KNGTarget(m, sigma, D.ball.center.coords, D.ball.radius, data=D.points)
    res = sample_mh(target, x0.coords, kernel or default_kernel(m), cfg, count=1, rng=rng, sigma=sigma)
    return _wrap(m, res, "kng", sigma)


def sample_manifold_laplace(
    eta: Point,
    ball: GeodesicBall,
    p: PrivacyParams,
    cfg: ChainConfig | None = None,
    rng: np.random.Generator | None = None,
    kernel: Kernel | None = None,
) -> MechanismResult:
    """Draw from ``exp(-rho(x, eta) / sigma)`` on ``ball`` with the Laplace calibration."""
    m = eta.manifold
    if ball.manifold != m:
        raise ContractError("ball and center live on different manifolds")
    cfg = cfg or default_chain_config(m)
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    sigma = laplace_scale_sigma(p)
    target = LaplaceTarget(m, sigma, ball.center.coords, ball.radius, eta=eta.coords)
    res = sample_mh(target, eta.coords, kernel or default_kernel(m), cfg, count=1, rng=rng, sigma=sigma)
    return _wrap(m, res, "laplace", sigma)


def sample_euclidean_laplace(center, sigma, d, rng):
    """K-norm (l2) Laplace draw ``center + R sigma V`` in R^d.

    ``V`` is uniform on the unit sphere (normalized Gaussian) and
    ``R ~ Gamma(d, 1)``.  Leading axes of ``center`` are treated as a batch.
    """
    center = np.asarray(center, dtype=float)
    if center.shape[-1] != d:
        raise DomainError(f"center has dimension {center.shape[-1]}, expected {d}")
    if d < 1:
        raise DomainError("dimension must be positive")
    batch = center.shape[:-1]
    v = rng.standard_normal(batch + (d,))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    radial = rng.gamma(d, 1.0, size=batch)
    return center + (radial * np.asarray(sigma, dtype=float))[..., None] * v


def project_to_sphere(y):
    y = np.asarray(y, dtype=float)
    nrm = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(nrm <= 1e-12):
        raise DomainError("cannot project a (near-)zero vector onto the sphere")
    return y / nrm


def pointwise_laplace_scales(shapes, mean, epsilon, aligned=True):
    """Per-landmark Laplace scales ``4 r k / (n eps)`` for real and imaginary parts.

    ``r`` is the largest absolute deviation of the coordinate from the mean
    landmark over the (optionally rotation-aligned) shapes.
    """
    shapes = as_complex(shapes)
    mean = as_complex(mean)
    if shapes.ndim != 2 or len(shapes) == 0:
        raise DomainError("point-wise Laplace needs a nonempty stack of shapes")
    n, k = shapes.shape
    if aligned:
        shapes, _ = align(mean, shapes)
    dev = shapes - mean
    dx = np.max(np.abs(dev.real), axis=0)
    dy = np.max(np.abs(dev.imag), axis=0)
    c = 4 * k / (n * epsilon)
    return c * dx, c * dy


def shape_pointwise_laplace(shapes, mean, epsilon, rng, aligned=True):
    """Sanitize each mean landmark coordinate with scalar Laplace noise.

    The budget is split evenly over the ``2k`` coordinates, ``epsilon / 2k``
    each.  With ``aligned=False`` the deviations are taken against the raw
    preshapes, without removing rotation first.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    mean = as_complex(mean)
    sx, sy = pointwise_laplace_scales(shapes, mean, epsilon, aligned=aligned)
    k = mean.shape[-1]
    nx = rng.laplace(0.0, 1.0, size=k) * sx
    ny = rng.laplace(0.0, 1.0, size=k) * sy
    return mean + nx + 1j * ny


def smooth_landmarks(config, bandwidth, closed=True):
    """First-order local linear regression of landmark coordinates.

    Landmark ``j`` sits at parameter ``j / k``; each output landmark is the
    intercept of a Gaussian-kernel weighted linear fit around it, applied to
    real and imaginary parts.  For closed curves parameter offsets wrap
    around the unit circle.
    """
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    z = as_complex(config)
    k = z.shape[-1]
    if k < 5:
        raise DomainError("smoothing needs at least 5 landmarks")
    t = np.arange(k) / k
    delta = t[None, :] - t[:, None]
    if closed:
        delta = (delta + 0.5) % 1.0 - 0.5
    w = np.exp(-0.5 * (delta / bandwidth) ** 2)
    s0 = w.sum(axis=1)
    s1 = (w * delta).sum(axis=1)
    s2 = (w * delta**2).sum(axis=1)
    # Intercept of the weighted fit y ~ a + b * delta around each landmark.
    denom = s0 * s2 - s1**2
    lw = w * (s2[:, None] - s1[:, None] * delta)
    degenerate = ~(denom > 1e-12 * s0 * s2)
    weights = np.where(degenerate[:, None], np.eye(k), lw / np.where(degenerate, 1.0, denom)[:, None])
    return z @ weights.T
