import math

import numpy as np
import pytest
from hypothesis import settings

from geodp.kendall import KendallShapeSpace, to_preshape
from geodp.spd import SPD
from geodp.sphere import Sphere

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sphere_point(rng, dim=2, kappa=1.0):
    x = rng.standard_normal(dim + 1)
    return x / np.linalg.norm(x) / math.sqrt(kappa)


def random_spd(rng, k=2, spread=1.0):
    a = rng.standard_normal((k, k)) * spread
    w, u = np.linalg.eigh(a + a.T)
    return (u * np.exp(0.5 * w)) @ u.T


def random_preshape(rng, k=6):
    return to_preshape(rng.standard_normal(k) + 1j * rng.standard_normal(k))


MANIFOLDS = {
    "sphere": Sphere(),
    "spd": SPD(2),
    "kendall": KendallShapeSpace(6),
}


# Acceptance outcomes, printed as one line per criterion after the run.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
