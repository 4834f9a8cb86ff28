"""Replicated utility benchmarks for private Fréchet means.

Each replicate draws a dataset in a fixed ball, computes its Fréchet mean
and sanitizes the mean with every requested mechanism.  Replicates are
processed in blocks, vectorized across the block; all randomness for a
replicate comes from generators keyed on ``(seed, n, replicate, stream)``,
so neither the block size nor the number of worker processes can change
any output value.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, GeodpError
from ..frechet import SolverConfig, frechet_mean_array
from ..geometry import Manifold, Point
from ..kendall import KendallShapeSpace, align
from ..mechanisms import project_to_sphere, sample_euclidean_laplace
from ..mcmc import ChainConfig, KNGTarget, LaplaceTarget, default_kernel, sample_mh
from ..privacy import PrivacyParams, euclidean_sensitivity, laplace_scale_sigma, scale_sigma
from .. import sphere as _sphere
from .. import spd as _spd
from .io import fmt

log = logging.getLogger(__name__)

MECHANISMS = {
    "sphere": ("kng", "laplace", "euclidean", "projected"),
    "spd": ("kng", "laplace", "euclidean"),
}
DEFAULT_RADIUS = {"sphere": math.pi / 8, "spd": 1.5}
DEFAULT_SIZES = {"sphere": (25, 50, 100, 200, 400), "spd": (50, 100, 225)}
DEFAULT_REPLICATES = {"sphere": 2000, "spd": 200}

# Chains start at the non-private mean.  These settings were checked
# against much longer burn-in (see the benchmark tests).
BENCH_CHAIN = {
    "sphere": ChainConfig(burn_in=500, thin=1, step=1.0),
    "spd": ChainConfig(burn_in=5000, thin=1, step=1.0),
}

# Stream indices for the per-replicate generators.  The two Euclidean
# variants share a stream: the projected release is the normalized
# ambient draw.
STREAM = {"data": 0, "kng": 1, "laplace": 2, "euclidean": 3, "projected": 3}

BLOCK_SIZE = 250


@dataclass(frozen=True)
class BenchmarkConfig:
    manifold: str = "sphere"
    sizes: tuple = (25, 50, 100, 200, 400)
    replicates: int = 2000
    epsilon: float = 1.0
    radius: float | None = None
    mechanisms: tuple = ()
    seed: int = 0
    chain: ChainConfig | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1
    record_time: bool = False

    def __post_init__(self):
        if self.manifold not in MECHANISMS:
            raise ConfigError(f"unknown benchmark manifold {self.manifold!r}")
        if not self.sizes:
            raise ConfigError("at least one sample size is required")
        if any(int(n) < 1 for n in self.sizes):
            raise ConfigError("sample sizes must be positive")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.radius is not None and not self.radius > 0:
            raise ConfigError("radius must be positive")
        if self.manifold == "sphere" and not self.ball_radius < math.pi / 4:
            raise ConfigError("sphere benchmark radius must stay below pi/4")
        unknown = set(self.mechanisms) - set(MECHANISMS[self.manifold])
        if unknown:
            raise ConfigError(f"mechanisms {sorted(unknown)} are not available on {self.manifold}")

    @property
    def ball_radius(self) -> float:
        return DEFAULT_RADIUS[self.manifold] if self.radius is None else self.radius

    @property
    def mechanism_list(self) -> tuple:
        return tuple(self.mechanisms) or MECHANISMS[self.manifold]

    @property
    def chain_config(self) -> ChainConfig:
        return self.chain or BENCH_CHAIN[self.manifold]


@dataclass(frozen=True)
class ResultRow:
    manifold: str
    mechanism: str
    n: int
    replicate: int
    utility_euclidean: float
    utility_intrinsic: float
    seed: int
    wall_ms: float = 0.0
    error: str = ""

    def as_fields(self):
        return [
            self.manifold,
            self.mechanism,
            self.n,
            self.replicate,
            fmt(self.utility_euclidean),
            fmt(self.utility_intrinsic),
            self.seed,
            fmt(self.wall_ms),
            self.error,
        ]


def replicate_rng(seed, n, rep, stream) -> np.random.Generator:
    """Independent generator for one (n, replicate, stream) cell of a run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, rep, stream)))


def _utility_array(m: Manifold, a, b):
    if isinstance(m, _sphere.Sphere):
        return np.linalg.norm(a - b, axis=-1)
    if isinstance(m, _spd.SPD):
        return np.linalg.norm(_spd.vech(a) - _spd.vech(b), axis=-1)
    if isinstance(m, KendallShapeSpace):
        bb, _ = align(a, b)
        d = a - bb
        return np.sqrt(np.sum(d.real**2 + d.imag**2, axis=-1))
    raise ConfigError(f"no utility distance for {m.name}")


def utility_distance(mean: Point, sanitized: Point) -> float:
    """Ambient Euclidean distance used to report utility.

    Sphere: norm of the coordinate difference.  SPD: distance between
    half-vectorizations.  Shapes: complex norm after rotating ``sanitized``
    onto ``mean``.
    """
    if mean.manifold != sanitized.manifold:
        raise ConfigError("utility distance needs points on one manifold")
    return float(_utility_array(mean.manifold, mean.coords, sanitized.coords))


def _setup(name, r):
    if name == "sphere":
        m = _sphere.Sphere()
        return m, m.north_pole(), _sphere.ambient_radius(r)
    m = _spd.SPD(2)
    return m, m.identity(), _spd.ambient_radius(r)


def _draw_data(name, r, n, rng):
    if name == "sphere":
        return _sphere.sample_ball_uniform_polar(r, n, rng)
    return _spd.sample_wishart_ball(r, n, rng, k=2)


def _ambient(name, x):
    return x if name == "sphere" else _spd.vech(x)


class _Block:
    """One block of replicates for a single sample size."""

    def __init__(self, cfg: BenchmarkConfig, n: int, reps):
        self.cfg = cfg
        self.n = n
        self.name = cfg.manifold
        self.r = cfg.ball_radius
        self.m, self.center, self.r_ambient = _setup(self.name, self.r)
        self.params = PrivacyParams.for_manifold(self.m, cfg.epsilon, self.r, n)
        self.rows = []
        self.reps = []
        data = []
        for rep in reps:
            try:
                data.append(_draw_data(self.name, self.r, n, replicate_rng(cfg.seed, n, rep, STREAM["data"])))
                self.reps.append(rep)
            except GeodpError as exc:
                self._fail(rep, cfg.mechanism_list, f"data:{type(exc).__name__}")
        self.data = np.stack(data) if data else None

    def _fail(self, rep, mechanisms, tag):
        for mech in mechanisms:
            self.rows.append(ResultRow(self.name, mech, self.n, rep, math.nan, math.nan, self.cfg.seed, 0.0, tag))

    def _emit(self, mech, reps, eu, intrinsic, elapsed, errors=None):
        per = 1000 * elapsed / max(len(reps), 1) if self.cfg.record_time else 0.0
        for i, rep in enumerate(reps):
            tag = errors[i] if errors is not None else ""
            self.rows.append(
                ResultRow(self.name, mech, self.n, rep, float(eu[i]), float(intrinsic[i]), self.cfg.seed, per, tag)
            )

    def run(self):
        if self.data is None:
            return self.rows
        cfg = self.cfg
        res = frechet_mean_array(self.m, self.data, cfg.solver)
        self.mean = self.m.normalize(res.mean)
        self.mean_errors = ["" if c else "mean:not-converged" for c in np.atleast_1d(res.converged)]
        draws = {}
        for mech in cfg.mechanism_list:
            t0 = time.perf_counter()
            try:
                eu, intrinsic = self._mechanism(mech, np.arange(len(self.reps)), draws)
            except GeodpError:
                # Retry one replicate at a time so a single failure does not
                # take the whole block down.  Results are batch-independent.
                eu = np.full(len(self.reps), math.nan)
                intrinsic = np.full(len(self.reps), math.nan)
                errs = list(self.mean_errors)
                for i in range(len(self.reps)):
                    try:
                        e1, i1 = self._mechanism(mech, np.array([i]), {})
                        eu[i], intrinsic[i] = e1[0], i1[0]
                    except GeodpError as exc:
                        errs[i] = f"{mech}:{type(exc).__name__}"
                self._emit(mech, self.reps, eu, intrinsic, time.perf_counter() - t0, errs)
                continue
            self._emit(mech, self.reps, eu, intrinsic, time.perf_counter() - t0, self.mean_errors)
        return self.rows

    def _rngs(self, idx, stream):
        return [replicate_rng(self.cfg.seed, self.n, self.reps[i], stream) for i in idx]

    def _mechanism(self, mech, idx, draws):
        m, mean = self.m, self.mean[idx]
        if mech in ("kng", "laplace"):
            if mech == "kng":
                sigma = scale_sigma(self.params)
                target = KNGTarget(m, sigma, self.center, self.r, data=self.data[idx])
            else:
                sigma = laplace_scale_sigma(self.params)
                target = LaplaceTarget(m, sigma, self.center, self.r, eta=mean)
            out = sample_mh(
                target, mean, default_kernel(m), self.cfg.chain_config,
                count=1, rng=self._rngs(idx, STREAM[mech]), sigma=sigma,
            )
            x = m.normalize(out.samples[:, 0])
            return _utility_array(m, mean, x), m.dist(mean, x)

        key = tuple(idx)
        if key not in draws:
            c = _ambient(self.name, mean)
            sigma = 2 * euclidean_sensitivity(self.r_ambient, self.n) / self.cfg.epsilon
            gens = self._rngs(idx, STREAM["euclidean"])
            draws[key] = np.stack(
                [sample_euclidean_laplace(c[j], sigma, c.shape[-1], g) for j, g in enumerate(gens)]
            )
        y = draws[key]
        if mech == "projected":
            x = project_to_sphere(y)
            return _utility_array(m, mean, x), m.dist(mean, x)
        c = _ambient(self.name, mean)
        eu = np.linalg.norm(y - c, axis=-1)
        if self.name == "sphere":
            return eu, np.full(len(idx), math.nan)
        mats = _spd.unvech(y)
        intrinsic = np.full(len(idx), math.nan)
        ok = np.linalg.eigvalsh(mats)[:, 0] > _spd.MIN_EIGENVALUE
        if np.any(ok):
            intrinsic[ok] = m.dist(mean[ok], mats[ok])
        return eu, intrinsic


def _run_block(args):
    cfg, n, reps = args
    return _Block(cfg, n, reps).run()


def run_benchmark(cfg: BenchmarkConfig) -> list:
    """Run all (n, replicate, mechanism) cells; rows come back in that order."""
    jobs = []
    for n in cfg.sizes:
        for start in range(0, cfg.replicates, BLOCK_SIZE):
            jobs.append((cfg, int(n), range(start, min(start + BLOCK_SIZE, cfg.replicates))))
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_block, jobs))
    else:
        chunks = []
        for job in jobs:
            log.info("%s n=%d replicates %d-%d", cfg.manifold, job[1], job[2].start, job[2].stop - 1)
            chunks.append(_run_block(job))
    order = {m: i for i, m in enumerate(cfg.mechanism_list)}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.n, r.replicate, order[r.mechanism]))
    return rows


def with_overrides(cfg: BenchmarkConfig, **kw) -> BenchmarkConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
