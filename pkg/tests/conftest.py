import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIG2 = (1.0, 2.0, 15.0)
FIG1 = (3.0, 15.0, 3.0)
ISO = (4.0, 4.0, 4.0)
GENERIC = (2.0, 3.0, 4.0)


def random_spd(rng, lo=0.5, hi=20.0):
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return q @ np.diag(rng.uniform(lo, hi, 3)) @ q.T


def random_unit(rng, n=None):
    shape = (3,) if n is None else (n, 3)
    x = rng.normal(size=shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.RESULTS, key=lambda k: (k.startswith("S"), int(k.split()[1]) if k.startswith("criterion") else 0, k)):
        terminalreporter.write_line(mod.RESULTS[key])
