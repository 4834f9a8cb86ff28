"""Kendall's shape space of k labelled planar landmarks.

Landmarks are complex numbers.  A preshape is a centered, unit-norm complex
k-vector; two preshapes have the same shape when they differ by a global
phase.  Tangent vectors at a preshape ``x`` are horizontal: centered and
Hermitian-orthogonal to ``x`` (which removes both the normal direction of
the preshape sphere and the rotation orbit direction ``i x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, DomainError
from .geometry import MEMBERSHIP_TOL, Manifold, ManifoldDescriptor

_SERIES_CUTOFF = 1e-6
_ORTHOGONAL_TOL = 1e-12


def herm(a, b):
    """Hermitian product ``sum_j a_j conj(b_j)`` over the last axis."""
    return np.sum(a * np.conj(b), axis=-1)


def _cnorm(a):
    return np.sqrt(np.sum(a.real**2 + a.imag**2, axis=-1))


def as_complex(config):
    """Accept complex (..., k) or real (..., k, 2) landmark arrays."""
    config = np.asarray(config)
    if np.iscomplexobj(config):
        return config.astype(complex)
    if config.ndim >= 2 and config.shape[-1] == 2:
        return config[..., 0] + 1j * config[..., 1]
    raise DomainError("landmarks must be complex (..., k) or real (..., k, 2)")


def as_real(config):
    config = np.asarray(config, dtype=complex)
    return np.stack([config.real, config.imag], axis=-1)


def to_preshape(config):
    """Remove translation and scale from a landmark configuration."""
    z = as_complex(config)
    if z.shape[-1] < 3:
        raise DomainError("shapes need at least 3 landmarks")
    z = z - z.mean(axis=-1, keepdims=True)
    size = _cnorm(z)
    if np.any(size <= 1e-12):
        raise DomainError("degenerate configuration: all landmarks coincide")
    return z / size[..., None]


def _phase(c):
    mag = np.abs(c)
    return np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 1.0 + 0j), mag


def align(p, q):
    """Rotate ``q`` so that ``herm(p, q)`` becomes real and nonnegative.

    Returns the rotated preshape and the angle in ``[0, 2 pi)`` that was
    applied (``q -> exp(i angle) q``).
    """
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    c = herm(p, q)
    if np.any(np.abs(c) <= _ORTHOGONAL_TOL):
        raise AlignmentError("shapes are at maximal distance pi/2; rotation is undefined")
    rot, _ = _phase(c)
    angle = np.mod(np.angle(rot), 2 * math.pi)
    return rot[..., None] * q, angle


def make_horizontal(x, w):
    """Project an ambient complex vector onto the horizontal space at ``x``."""
    x = np.asarray(x, dtype=complex)
    w = np.asarray(w, dtype=complex)
    wc = w - w.mean(axis=-1, keepdims=True)
    return wc - herm(wc, x)[..., None] * x


@dataclass(frozen=True)
class KendallShapeSpace(Manifold):
    """Shape space of ``k`` planar landmarks (complex projective space CP^(k-2)).

    Holomorphic sectional curvature is 4 and sectional curvatures lie in
    ``[1, 4]``; the injectivity radius is pi/2.
    """

    k: int

    name = "kendall"
    point_ndim = 1

    def __post_init__(self):
        if self.k < 3:
            raise DomainError("shape space needs at least 3 landmarks")

    @property
    def descriptor(self):
        return ManifoldDescriptor(
            dimension=2 * self.k - 4,
            ambient_dimension=2 * self.k,
            kappa_max=4.0,
            kappa_min=1.0,
            injectivity_radius=math.pi / 2,
        )

    def belongs(self, x, atol=MEMBERSHIP_TOL):
        x = np.asarray(x, dtype=complex)
        return (np.abs(x.mean(axis=-1)) <= atol) & (np.abs(_cnorm(x) - 1.0) <= atol)

    def is_tangent(self, x, v, atol=MEMBERSHIP_TOL):
        v = np.asarray(v, dtype=complex)
        return (np.abs(v.sum(axis=-1)) <= atol) & (np.abs(herm(np.asarray(x), v)) <= atol)

    def normalize(self, x):
        return to_preshape(x)

    def inner(self, x, u, v):
        return np.real(herm(np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)))

    def norm(self, x, v):
        return _cnorm(np.asarray(v, dtype=complex))

    def proj(self, x, w):
        return make_horizontal(x, w)

    def exp(self, x, v):
        x = np.asarray(x, dtype=complex)
        v = np.asarray(v, dtype=complex)
        s = _cnorm(v)
        small = s < 1e-14
        coef = np.where(small, 0.0, np.sin(s) / np.where(small, 1.0, s))
        out = np.cos(s)[..., None] * x + coef[..., None] * v
        return np.where(small[..., None], x, out)

    def _aligned_parts(self, x, y):
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        rot, mag = _phase(herm(x, y))
        w = rot[..., None] * y - mag[..., None] * x
        s = _cnorm(w)
        return w, s, np.arctan2(s, mag), mag

    def log(self, x, y):
        w, s, theta, mag = self._aligned_parts(x, y)
        if np.any(mag <= _ORTHOGONAL_TOL):
            raise DomainError(
                f"log map undefined: shape distance {float(np.max(theta)):.17g} reaches pi/2"
            )
        coef = np.where(theta < _SERIES_CUTOFF, 1.0 + theta**2 / 6.0, theta / np.where(s > 0, s, 1.0))
        return coef[..., None] * w

    def dist(self, x, y):
        return self._aligned_parts(x, y)[2]

    def random_ambient(self, rng, size=()):
        size = (size,) if np.isscalar(size) else tuple(size)
        return rng.standard_normal(size + (self.k,)) + 1j * rng.standard_normal(size + (self.k,))


def shape_distance(x, y):
    """Geodesic shape distance ``arccos |<x, y>|`` between preshapes."""
    x = np.asarray(x, dtype=complex)
    return KendallShapeSpace(x.shape[-1]).dist(x, y)
