"""Symmetric positive-definite matrices with the affine-invariant metric.

All matrix functions go through the symmetric eigendecomposition, which
keeps results exactly symmetric after the final symmetrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConditioningError, ConfigError, DomainError
from .geometry import MEMBERSHIP_TOL, Manifold, ManifoldDescriptor

MIN_EIGENVALUE = 1e-14


def sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def _eigh(m):
    w, u = np.linalg.eigh(sym(m))
    return w, u


def _recompose(w, u):
    return sym((u * w[..., None, :]) @ np.swapaxes(u, -1, -2))


def funm(m, f):
    """Apply scalar ``f`` to the eigenvalues of symmetric ``m``."""
    w, u = _eigh(m)
    return _recompose(f(w), u)


def expm(m):
    return funm(m, np.exp)


def logm(m):
    w, u = _eigh(m)
    if np.any(w <= 0):
        raise ConditioningError("matrix logarithm of a non-positive-definite matrix")
    return _recompose(np.log(w), u)


def _sqrt_pair(p):
    """Return ``p ** 0.5`` and ``p ** -0.5`` from one eigendecomposition."""
    w, u = _eigh(p)
    lo = float(np.min(w)) if w.size else 1.0
    if lo < MIN_EIGENVALUE:
        raise ConditioningError(f"SPD base point has eigenvalue {lo:.3g} below {MIN_EIGENVALUE:g}")
    r = np.sqrt(w)
    return _recompose(r, u), _recompose(1.0 / r, u)


def _inv(p):
    w, u = _eigh(p)
    lo = float(np.min(w)) if w.size else 1.0
    if lo < MIN_EIGENVALUE:
        raise ConditioningError(f"SPD base point has eigenvalue {lo:.3g} below {MIN_EIGENVALUE:g}")
    return _recompose(1.0 / w, u)


@dataclass(frozen=True)
class SPD(Manifold):
    """The manifold P(k) of k x k SPD matrices.

    Sectional curvature lies in ``[-1/2, 0]`` under ``Tr(p^-1 u p^-1 v)``;
    the lower bound is only used by gradient-sandwich checks.
    """

    k: int = 2

    name = "spd"
    point_ndim = 2

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("matrix size must be positive")

    @property
    def descriptor(self):
        d = self.k * (self.k + 1) // 2
        return ManifoldDescriptor(
            dimension=d,
            ambient_dimension=d,
            kappa_max=0.0,
            kappa_min=-0.5 if self.k > 1 else 0.0,
            injectivity_radius=math.inf,
        )

    def belongs(self, x, atol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=float)
        symmetric = np.max(np.abs(x - np.swapaxes(x, -1, -2)), axis=(-2, -1)) <= atol
        return symmetric & (np.linalg.eigvalsh(sym(x))[..., 0] > 0)

    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        v = np.asarray(v, dtype=float)
        return np.max(np.abs(v - np.swapaxes(v, -1, -2)), axis=(-2, -1)) <= atol

    def normalize(self, x):
        return sym(np.asarray(x, dtype=float))

    def inner(self, x, u, v):
        pinv = _inv(np.asarray(x, dtype=float))
        a = pinv @ np.asarray(u, dtype=float)
        b = pinv @ np.asarray(v, dtype=float)
        return np.einsum("...ij,...ji->...", a, b)

    def proj(self, x, w):
        # The antisymmetric part is orthogonal to Sym_k under the metric at any p.
        return sym(np.asarray(w, dtype=float))

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        s, si = _sqrt_pair(x)
        return sym(s @ expm(si @ np.asarray(v, dtype=float) @ si) @ s)

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        s, si = _sqrt_pair(x)
        return sym(s @ logm(si @ np.asarray(y, dtype=float) @ si) @ s)

    def mean_log_norm(self, x, data):
        # In whitened coordinates the metric at x is Frobenius, which skips
        # the outer sandwich and the inverse needed by ``inner``.
        _, si = _sqrt_pair(np.asarray(x, dtype=float))
        si = self.expand(si)
        logs = logm(si @ np.asarray(data, dtype=float) @ si)
        mean = np.mean(logs, axis=self.sample_axis())
        return np.sqrt(np.sum(mean**2, axis=(-2, -1)))

    def dist(self, x, y):
        x = np.asarray(x, dtype=float)
        _, si = _sqrt_pair(x)
        w = np.linalg.eigvalsh(sym(si @ np.asarray(y, dtype=float) @ si))
        if np.any(w <= 0):
            raise ConditioningError("distance to a non-positive-definite matrix")
        return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))

    def random_ambient(self, rng, size=()):
        size = (size,) if np.isscalar(size) else tuple(size)
        return rng.standard_normal(size + (self.k, self.k))

    def identity(self):
        return np.eye(self.k)


def _vech_index(k):
    # Lower triangle, column by column: (0,0), (1,0), ..., (k-1,0), (1,1), ...
    cols, rows = np.triu_indices(k)
    return rows, cols


def vech(m):
    """Half-vectorize symmetric ``m`` (lower triangle stacked by column)."""
    m = np.asarray(m)
    k = m.shape[-1]
    if m.shape[-2] != k:
        raise DomainError("vech expects square matrices")
    rows, cols = _vech_index(k)
    return m[..., rows, cols]


def unvech(vec):
    """Inverse of :func:`vech`."""
    vec = np.asarray(vec)
    length = vec.shape[-1]
    k = int(round((math.sqrt(8 * length + 1) - 1) / 2))
    if k * (k + 1) // 2 != length or length == 0:
        raise DomainError(f"length {length} is not a triangular number k(k+1)/2")
    rows, cols = _vech_index(k)
    out = np.zeros(vec.shape[:-1] + (k, k), dtype=vec.dtype)
    out[..., rows, cols] = vec
    out[..., cols, rows] = vec
    return out


def ambient_radius(r):
    """Euclidean radius in Sym_k of the geodesic ball B_r(I): ``e^r - 1``."""
    return math.expm1(r)


def sample_wishart(scale, df, rng, size=()):
    """Wishart draws via the Bartlett decomposition.

    ``W = L A A^T L^T`` with ``L = chol(scale)``, ``A`` lower triangular,
    ``A_ii^2 ~ chi2(df - i)`` and standard normal entries below the diagonal.
    """
    size = (size,) if np.isscalar(size) else tuple(size)
    scale = np.asarray(scale, dtype=float)
    k = scale.shape[-1]
    if df <= k - 1:
        raise ConfigError(f"Wishart degrees of freedom {df} must exceed k - 1 = {k - 1}")
    chol = np.linalg.cholesky(scale)
    a = np.zeros(size + (k, k))
    dofs = df - np.arange(k)
    a[..., np.arange(k), np.arange(k)] = np.sqrt(rng.chisquare(dofs, size=size + (k,)))
    lower = np.tril_indices(k, -1)
    a[..., lower[0], lower[1]] = rng.standard_normal(size + (len(lower[0]),))
    la = chol @ a
    return sym(la @ np.swapaxes(la, -1, -2))


_PROBE_DRAWS = 10_000
_MIN_ACCEPTANCE = 1e-4


def sample_wishart_ball(r, count, rng, k=2, batch=512):
    """Rejection-sample Wishart(I/k, k) draws within distance ``r`` of I.

    Draws are generated in fixed-size batches so the output depends only on
    the generator state, ``r``, ``count`` and ``batch``.
    """
    if not r > 0:
        raise DomainError("ball radius must be positive")
    manifold = SPD(k)
    scale = np.eye(k) / k
    eye = np.eye(k)
    kept = []
    n_kept = 0
    drawn = 0
    accepted = 0
    while n_kept < count:
        draws = sample_wishart(scale, k, rng, size=batch)
        ok = manifold.dist(eye, draws) <= r
        drawn += batch
        accepted += int(ok.sum())
        if drawn >= _PROBE_DRAWS and accepted / drawn < _MIN_ACCEPTANCE:
            raise ConfigError(
                f"Wishart acceptance {accepted}/{drawn} below {_MIN_ACCEPTANCE:g}; ball radius {r} too small"
            )
        good = draws[ok]
        kept.append(good)
        n_kept += len(good)
    return np.concatenate(kept)[:count]
