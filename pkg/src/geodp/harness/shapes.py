"""Synthetic landmark corpora and the private mean-shape pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DomainError
from ..frechet import SolverConfig, frechet_mean_array
from ..geometry import BALL_TOL
from ..kendall import KendallShapeSpace, align, as_complex, shape_distance, to_preshape
from ..mechanisms import shape_pointwise_laplace, smooth_landmarks
from ..mcmc import ChainConfig, KendallKernel, KNGTarget, default_chain_config, sample_mh
from ..privacy import PrivacyParams, scale_sigma

TEMPLATES = ("ellipse", "blob")


def template_curve(template: str, k: int) -> np.ndarray:
    """``k`` equally spaced landmarks on a closed template curve."""
    t = 2 * math.pi * np.arange(k) / k
    if template == "ellipse":
        return 2.0 * np.cos(t) + 1j * np.sin(t)
    if template == "blob":
        rad = 1.0 + 0.25 * np.cos(3 * t) + 0.1 * np.sin(5 * t)
        return rad * np.exp(1j * t)
    raise ConfigError(f"unknown template {template!r}; choose from {TEMPLATES}")


def gen_synthetic_corpus(template="ellipse", k=32, count=50, noise=0.05, seed=0, pose=True):
    """Noisy copies of a template curve, one per row.

    Each copy gets independent Gaussian noise of standard deviation
    ``noise`` on every landmark coordinate.  With ``pose`` the copies are
    also rotated, scaled and translated at random, which changes nothing
    about their shapes but does matter to methods that ignore rotation.
    """
    if k < 8:
        raise ConfigError("synthetic corpora need k >= 8 landmarks")
    if count < 1:
        raise ConfigError("count must be positive")
    if noise < 0:
        raise ConfigError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    base = template_curve(template, k)
    eps = rng.standard_normal((count, k)) + 1j * rng.standard_normal((count, k))
    shapes = base + noise * eps
    if pose:
        angle = rng.uniform(0.0, 2 * math.pi, size=count)
        scale = rng.uniform(0.5, 2.0, size=count)
        shift = rng.standard_normal(count) + 1j * rng.standard_normal(count)
        shapes = (scale * np.exp(1j * angle))[:, None] * shapes + shift[:, None]
    return shapes


@dataclass(frozen=True)
class ShapeOptions:
    seed: int = 0
    chain: ChainConfig | None = None
    solver: SolverConfig = field(default_factory=lambda: SolverConfig(grad_tol=1e-8))
    smooth_bandwidth: float | None = None


@dataclass
class ShapeOutputs:
    mean: np.ndarray
    kng: np.ndarray
    pointwise_aligned: np.ndarray
    pointwise_unaligned: np.ndarray
    radius: float
    sigma: float
    acceptance_rate: float
    # r = max_i rho(mean, x_i) depends on the data, so the release is not
    # covered by a formal privacy guarantee.
    radius_data_dependent: bool = True
    warnings: list = field(default_factory=list)

    def outputs(self):
        return {
            "kng": self.kng,
            "pointwise_aligned": self.pointwise_aligned,
            "pointwise_unaligned": self.pointwise_unaligned,
        }


def _streams(seed):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def run_shape_pipeline(shapes, epsilon, options: ShapeOptions | None = None) -> ShapeOutputs:
    """Release the mean shape of ``shapes`` three ways.

    (i) KNG on shape space with ``kappa_max = 4`` and the radius set to the
    largest distance from the mean; (ii) point-wise Laplace on aligned
    preshapes; (iii) point-wise Laplace on unaligned preshapes.  When a
    bandwidth is given every output is smoothed afterwards.
    """
    opts = options or ShapeOptions()
    z = as_complex(shapes)
    if z.ndim != 2 or len(z) < 2:
        raise DomainError("the shape pipeline needs at least two configurations")
    if not epsilon > 0:
        raise ConfigError("epsilon must be positive")
    k = z.shape[-1]
    space = KendallShapeSpace(k)
    pre = to_preshape(z)

    fm = frechet_mean_array(space, pre, opts.solver)
    mean = to_preshape(fm.mean)
    warnings = [] if bool(fm.converged) else ["Fréchet mean did not converge"]
    r = float(np.max(space.dist(mean, pre)))
    params = PrivacyParams(epsilon=epsilon, r=r, n=len(pre), kappa_max=4.0, kappa_min=1.0)
    sigma = scale_sigma(params)

    g_kng, g_al, g_un = _streams(opts.seed)
    cfg = opts.chain or default_chain_config(space, opts.seed)
    # Pad the support by the membership tolerance: with (near-)identical shapes
    # r is at rounding level and the mean itself could fall outside.
    target = KNGTarget(space, sigma, mean, r + BALL_TOL, data=pre)
    res = sample_mh(target, mean, KendallKernel(space), cfg, count=1, rng=g_kng, sigma=sigma)
    kng = to_preshape(res.samples[0])
    warnings += res.warnings

    aligned = shape_pointwise_laplace(pre, mean, epsilon, g_al, aligned=True)
    unaligned = shape_pointwise_laplace(pre, mean, epsilon, g_un, aligned=False)

    if opts.smooth_bandwidth is not None:
        kng = to_preshape(smooth_landmarks(kng, opts.smooth_bandwidth))
        aligned = smooth_landmarks(aligned, opts.smooth_bandwidth)
        unaligned = smooth_landmarks(unaligned, opts.smooth_bandwidth)

    return ShapeOutputs(
        mean=mean,
        kng=kng,
        pointwise_aligned=aligned,
        pointwise_unaligned=unaligned,
        radius=r,
        sigma=sigma,
        acceptance_rate=float(res.acceptance_rate[0]),
        warnings=warnings,
    )


def output_distances(out: ShapeOutputs) -> dict:
    """Shape distance from each released configuration to the mean shape."""
    return {name: float(shape_distance(out.mean, to_preshape(c))) for name, c in out.outputs().items()}


def aligned_to_mean(out: ShapeOutputs) -> dict:
    """Outputs as preshapes rotated onto the mean, for plotting or export."""
    return {name: align(out.mean, to_preshape(c))[0] for name, c in out.outputs().items()}
