import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from rotpeh import HarvesterConfig, build_sections  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def config():
    return HarvesterConfig()


@pytest.fixture(scope="session")
def sections(config):
    return build_sections(config)


def cantilever_config(L=0.1, b=20e-3, h=0.3e-3, Y=193e9, rho=7930.0):
    """A device that degenerates to one uniform clamped-free beam.

    The auxiliary beam is shrunk to a negligible stub, the tip masses are
    removed, the patch is made ultra-thin and compliant, and the slot rails
    take the full width, so every main section has the same stiffness and
    linear density.
    """
    return HarvesterConfig(L1=L / 3, L2=L / 3, L3=L / 3, L4=1e-6, pzt_length=L / 3, b1=b, b2=b * 0.6,
                           be=b * 0.6, rail_width=b, hs=h, he=1e-9, Yp=1e-3, rho_e=1e-9, Ys=Y,
                           rho_s=rho, M1=0.0, M2=0.0, mass_length=1e-9, g=0.0)


VERDICTS = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion and print it."""
    def record(number, ok, detail):
        line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        VERDICTS[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[number])
