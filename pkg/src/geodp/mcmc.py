"""Metropolis sampling on manifolds.

Chains are batched: ``start`` carries a leading chain axis and every chain
owns its generator.  Randomness is drawn per chain in fixed-size chunks, so
a chain's trajectory depends only on its own generator and the chain
configuration, never on which other chains share the batch.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import Manifold
from .kendall import KendallShapeSpace, make_horizontal
from .spd import SPD, _sqrt_pair, expm, sym, unvech
from .sphere import Sphere

CHUNK_STEPS = 1024


@dataclass(frozen=True)
class ChainConfig:
    burn_in: int = 20_000
    thin: int = 600
    step: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ConfigError("burn_in must be nonnegative")
        if self.thin < 1:
            raise ConfigError("thin must be positive")
        if not 0 < self.step <= 1:
            raise ConfigError("step scale must lie in (0, 1]")


def default_chain_config(manifold: Manifold, seed: int = 0) -> ChainConfig:
    if isinstance(manifold, Sphere):
        return ChainConfig(burn_in=20_000, thin=600, step=0.5, seed=seed)
    if isinstance(manifold, SPD):
        return ChainConfig(burn_in=5_000, thin=5_000, step=1.0, seed=seed)
    if isinstance(manifold, KendallShapeSpace):
        return ChainConfig(burn_in=7_500, thin=500, step=1.0, seed=seed)
    return ChainConfig(seed=seed)


# Proposal kernels.  ``draw`` produces the raw randomness for ``steps``
# proposals of one chain; ``propose`` maps raw draws for a batch of chains
# to proposed points.


class Kernel(abc.ABC):
    manifold: Manifold

    @abc.abstractmethod
    def draw(self, rng, steps): ...

    @abc.abstractmethod
    def propose(self, x, raw, sigma, step): ...


def _per_chain(sigma, ndim):
    sigma = np.asarray(sigma, dtype=float)
    return sigma.reshape(sigma.shape + (1,) * ndim)


@dataclass(frozen=True)
class SphereKernel(Kernel):
    """Gaussian direction rescaled to length sigma, projected onto T_x, then exp."""

    manifold: Sphere

    def draw(self, rng, steps):
        return rng.standard_normal((steps, self.manifold.dim + 1))

    def propose(self, x, raw, sigma, step):
        g = raw / np.linalg.norm(raw, axis=-1, keepdims=True) * _per_chain(sigma, 1)
        w = self.manifold.proj(x, g)
        return self.manifold.exp(x, step * w)


@dataclass(frozen=True)
class SPDKernel(Kernel):
    """``exp(x, step * sigma * unvech(u))`` with u uniform on [-1/2, 1/2]^(k(k+1)/2)."""

    manifold: SPD

    def draw(self, rng, steps):
        d = self.manifold.k * (self.manifold.k + 1) // 2
        return rng.uniform(-0.5, 0.5, size=(steps, d))

    def propose(self, x, raw, sigma, step):
        v = unvech(raw) * _per_chain(sigma, 2)
        return self.manifold.exp(x, step * v)


@dataclass(frozen=True)
class SPDIsotropicKernel(Kernel):
    """Geodesic random walk with a metric-isotropic Gaussian step.

    ``x' = x^(1/2) expm(step * sigma * u) x^(1/2)`` where ``u`` is a standard
    Gaussian in Sym_k under the Frobenius norm.  By the isometry invariance
    of the affine-invariant metric this kernel is exactly symmetric with
    respect to the Riemannian volume, unlike :class:`SPDKernel`; it is
    offered for auditing the default kernel.
    """

    manifold: SPD

    def draw(self, rng, steps):
        k = self.manifold.k
        return rng.standard_normal((steps, k * (k + 1) // 2))

    def propose(self, x, raw, sigma, step):
        k = self.manifold.k
        rows, cols = np.triu_indices(k)
        weight = np.where(rows == cols, 1.0, math.sqrt(0.5))
        u = unvech(raw * weight) * _per_chain(sigma, 2)
        s, _ = _sqrt_pair(np.asarray(x, dtype=float))
        return sym(s @ expm(step * u) @ s)


@dataclass(frozen=True)
class KendallKernel(Kernel):
    """Uniform(0,1) complex entries, centered and made horizontal at x.

    The horizontal direction is scaled by ``step * sigma`` before the
    exponential map.
    """

    manifold: KendallShapeSpace

    def draw(self, rng, steps):
        return rng.random((steps, 2, self.manifold.k))

    def propose(self, x, raw, sigma, step):
        v = raw[..., 0, :] + 1j * raw[..., 1, :]
        w = make_horizontal(x, v)
        return self.manifold.exp(x, step * _per_chain(sigma, 1) * w)


@dataclass(frozen=True)
class UniformCapKernel(Kernel):
    """Independence proposals, area-uniform on a spherical cap of S^2.

    Proposals ignore the current state and have constant density on the
    cap, so the plain target ratio is the exact Metropolis-Hastings ratio.
    """

    manifold: Sphere
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if self.manifold.dim != 2 or self.manifold.kappa != 1.0:
            raise ConfigError("uniform cap proposals are implemented for the unit 2-sphere only")

    def draw(self, rng, steps):
        return rng.random((steps, 2))

    def propose(self, x, raw, sigma, step):
        cos_t = 1.0 - raw[..., 0] * (1.0 - math.cos(self.radius))
        sin_t = np.sqrt(np.maximum(1.0 - cos_t**2, 0.0))
        phi = 2 * math.pi * raw[..., 1]
        local = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1)
        return local @ _frame(self.center).T


def _frame(center):
    """Rotation matrix taking the north pole to ``center``."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    helper = np.array([1.0, 0.0, 0.0]) if abs(c[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - (helper @ c) * c
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    return np.stack([e1, e2, c], axis=1)


def default_kernel(manifold: Manifold) -> Kernel:
    if isinstance(manifold, Sphere):
        return SphereKernel(manifold)
    if isinstance(manifold, SPD):
        return SPDKernel(manifold)
    if isinstance(manifold, KendallShapeSpace):
        return KendallKernel(manifold)
    raise ConfigError(f"no proposal kernel for {manifold.name}")


# Targets: callables returning the negative log density (up to a constant)
# for a batch of chain states, ``inf`` outside the support ball.


def _select(arr, mask, shared_ndim):
    arr = np.asarray(arr)
    return arr if arr.ndim == shared_ndim else arr[mask]


@dataclass(frozen=True, eq=False)
class _BallTarget:
    manifold: Manifold
    sigma: np.ndarray | float
    center: np.ndarray
    radius: np.ndarray | float

    def __call__(self, x):
        m = self.manifold
        batch = m.batch_shape(x)
        inside = m.dist(self.center, x) <= self.radius
        out = np.full(batch, np.inf)
        if np.any(inside):
            sig = np.broadcast_to(np.asarray(self.sigma, dtype=float), batch)[inside]
            with np.errstate(divide="ignore", invalid="ignore"):
                out[inside] = self._energy(x[inside], inside) / sig
        return out


@dataclass(frozen=True, eq=False)
class KNGTarget(_BallTarget):
    """``||(1/n) sum_i log(x, x_i)||_x / sigma`` restricted to the ball."""

    data: np.ndarray = field(default=None)

    def _energy(self, x, mask):
        m = self.manifold
        data = _select(self.data, mask, m.point_ndim + 1)
        return m.mean_log_norm(x, data)


@dataclass(frozen=True, eq=False)
class LaplaceTarget(_BallTarget):
    """``rho(x, eta) / sigma`` restricted to the ball."""

    eta: np.ndarray = field(default=None)

    def _energy(self, x, mask):
        m = self.manifold
        eta = _select(self.eta, mask, m.point_ndim)
        return m.dist(x, eta)


@dataclass
class MHResult:
    samples: np.ndarray
    acceptance_rate: np.ndarray
    proposals: int
    stalled: np.ndarray
    warnings: list = field(default_factory=list)


def _as_rngs(rng, batch):
    if isinstance(rng, np.random.Generator):
        if batch != 1:
            raise ConfigError("pass one generator per chain for batched sampling")
        return [rng]
    rngs = list(rng)
    if len(rngs) != batch:
        raise ConfigError(f"got {len(rngs)} generators for {batch} chains")
    return rngs


def sample_mh(target, start, kernel: Kernel, cfg: ChainConfig, count=1, rng=None, sigma=1.0) -> MHResult:
    """Run one Metropolis chain per row of ``start``.

    A proposal ``x'`` from state ``x`` is accepted with probability
    ``min(1, exp(target(x) - target(x')))``; the kernels are treated as
    symmetric.  After ``burn_in`` steps, the state is emitted once every
    ``thin`` steps until ``count`` samples are collected.  Chains whose
    ``sigma`` is zero are frozen at their start.
    """
    m = kernel.manifold
    start = np.asarray(start)
    single = start.ndim == m.point_ndim
    x = start[None] if single else start.copy()
    B = x.shape[0]
    if rng is None:
        rng = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(B)]
    rngs = _as_rngs(rng, B)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (B,)).copy()
    frozen = sig <= 0
    if np.any(np.isnan(sig)) or np.any(sig < 0):
        raise ConfigError("sigma must be nonnegative")

    energy = target(x)
    if np.any(np.isinf(energy) & ~frozen):
        raise ConfigError("chain start lies outside the support ball")

    total = cfg.burn_in + count * cfg.thin
    samples = np.empty((B, count) + x.shape[1:], dtype=x.dtype)
    accepted = np.zeros(B, dtype=np.int64)
    run = np.zeros(B, dtype=np.int64)
    longest = np.zeros(B, dtype=np.int64)
    emitted = 0
    pt_axes = (1,) * m.point_ndim
    done = 0
    while done < total:
        steps = min(CHUNK_STEPS, total - done)
        raws = []
        logu = []
        for g in rngs:
            raws.append(kernel.draw(g, steps))
            logu.append(np.log(g.random(steps)))
        raw = np.stack(raws, axis=1)
        logu = np.stack(logu, axis=1)
        for s in range(steps):
            prop = kernel.propose(x, raw[s], sig, cfg.step)
            e_prop = target(prop)
            with np.errstate(invalid="ignore"):
                accept = (logu[s] < energy - e_prop) & ~frozen
            x = np.where(accept.reshape((B,) + pt_axes), prop, x)
            energy = np.where(accept, e_prop, energy)
            accepted += accept
            run = np.where(accept, 0, run + 1)
            longest = np.maximum(longest, run)
            done_now = done + s + 1
            if done_now > cfg.burn_in and (done_now - cfg.burn_in) % cfg.thin == 0:
                samples[:, emitted] = x
                emitted += 1
        done += steps

    stalled = (longest >= 10 * cfg.thin) & ~frozen
    warnings = []
    if np.any(stalled):
        warnings.append(
            f"{int(stalled.sum())} chain(s) had no acceptances over a window of {10 * cfg.thin} proposals"
        )
    res = MHResult(
        samples=samples[0] if single else samples,
        acceptance_rate=accepted / total,
        proposals=total,
        stalled=stalled,
        warnings=warnings,
    )
    return res
