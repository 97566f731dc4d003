from __future__ import annotations

import functools

import numpy as np
import pytest

from spinorsurf import catalog as cat
from spinorsurf import elliptic as ell

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def context(tau: complex, omega1: complex = 1.0) -> ell.EllipticContext:
    return ell.make_context(ell.Lattice.from_tau(tau, omega1))


@functools.lru_cache(maxsize=None)
def catalog_spec(name: str) -> cat.SurfaceSpec:
    return cat.CATALOG[name].builder()


@functools.lru_cache(maxsize=None)
def catalog_report(name: str):
    from spinorsurf.mesh import verify

    return verify(catalog_spec(name))


@pytest.fixture(scope="session")
def square_ctx() -> ell.EllipticContext:
    lat, _ = ell.square_lattice_normalized()
    return ell.make_context(lat)


@pytest.fixture(scope="session")
def generic_ctx() -> ell.EllipticContext:
    return context(complex(0.23, 1.17), complex(0.9, 0.15))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
