import cmath
import math

import numpy as np
import pytest

from spinorsurf import elliptic as ell
from spinorsurf.spin import integrate_curve

from conftest import context

TAUS = [1j, complex(0.5, math.sqrt(3) / 2), complex(0.23, 1.17), complex(-0.4, 0.8), complex(3.7, 0.45)]


def sample_u(ctx, rng, n=200):
    x, y = rng.uniform(-0.5, 0.5, (2, n))
    return 2 * x * ctx.omega1 + 2 * y * ctx.omega3


@pytest.mark.parametrize("tau", TAUS)
def test_invariants(tau):
    ctx = context(tau, complex(0.7, -0.2))
    e1, e2, e3 = ctx.e1, ctx.e2, ctx.e3
    # g2 vanishes on the hexagonal lattice, so scale by |e|
    s = max(abs(e1), abs(e2), abs(e3))
    assert abs(e1 + e2 + e3) <= 1e-12 * s
    assert abs(ctx.g2 + 4 * (e1 * e2 + e1 * e3 + e2 * e3)) <= 1e-12 * s ** 2
    assert abs(ctx.g3 - 4 * e1 * e2 * e3) <= 1e-12 * s ** 3
    legendre = ctx.eta1 * ctx.omega3 - ctx.eta3 * ctx.omega1
    assert abs(legendre - 1j * math.pi / 2) <= 1e-12


@pytest.mark.parametrize("tau", TAUS)
def test_wp_at_half_periods(tau):
    ctx = context(tau)
    for i in (1, 2, 3):
        assert abs(ell.wp(ctx, ctx.half_period(i)) - ctx.e(i)) <= 1e-11 * max(1, abs(ctx.e(i)))
        assert abs(ell.wp_prime(ctx, ctx.half_period(i))) <= 1e-9 * max(1, abs(ctx.g2) ** 0.75)


def test_square_lattice_normalisation():
    lat, lam = ell.square_lattice_normalized()
    ctx = ell.make_context(lat)
    assert abs(ctx.e1 - 1) < 1e-13 and abs(ctx.e2) < 1e-13 and abs(ctx.e3 + 1) < 1e-13
    unit = ell.make_context(ell.Lattice(1.0, 1j, "square"))
    assert abs(lam ** 2 - unit.e1) < 1e-13
    u = 0.31 + 0.17j
    assert abs(ell.wp(ctx, lam * u) - ell.wp(unit, u) / lam ** 2) < 1e-12


def test_rectangular_invariants_real():
    ctx = context(1.7j, 0.8)
    assert abs(ctx.g2.imag) < 1e-12 * abs(ctx.g2) and abs(ctx.g3.imag) < 1e-12 * abs(ctx.g3)


def test_parity(generic_ctx, rng):
    u = sample_u(generic_ctx, rng)
    assert np.allclose(ell.wp(generic_ctx, -u), ell.wp(generic_ctx, u), rtol=1e-12, atol=0)
    assert np.allclose(ell.wp_prime(generic_ctx, -u), -ell.wp_prime(generic_ctx, u), rtol=1e-12, atol=0)
    assert np.allclose(ell.zeta(generic_ctx, -u), -ell.zeta(generic_ctx, u), rtol=1e-12, atol=0)


def test_laurent_expansion_at_zero(generic_ctx):
    ctx = generic_ctx
    prev = None
    for h in (1e-1, 5e-2, 2.5e-2):
        u = h * cmath.exp(0.7j)
        rem = ell.wp(ctx, u) - u ** -2 - ctx.g2 / 20 * u ** 2
        ratio = abs(rem) / h ** 4
        # next coefficient is g3 / 28
        assert abs(ratio - abs(ctx.g3) / 28) <= 0.2 * abs(ctx.g3) / 28 + 0.05 * abs(ctx.g2) ** 2
        prev = ratio
    assert prev is not None


def test_ode_residual(rng):
    for tau in TAUS:
        ctx = context(tau)
        u = sample_u(ctx, rng, 1000)
        assert np.max(ell.ode_residual(ctx, u)) <= 1e-10


def test_zeta_derivative_is_minus_wp(generic_ctx, rng):
    ctx = generic_ctx
    u = sample_u(ctx, rng, 50)
    u = u[np.abs(u) > 0.2]
    h = 1e-5
    d = (ell.zeta(ctx, u + h) - ell.zeta(ctx, u - h)) / (2 * h)
    assert np.max(np.abs(d + ell.wp(ctx, u)) / np.abs(ell.wp(ctx, u))) <= 1e-6


def test_quasi_periodicity(generic_ctx, rng):
    ctx = generic_ctx
    u = sample_u(ctx, rng, 50)
    for i in (1, 2, 3):
        w = ctx.half_period(i)
        diff = ell.zeta(ctx, u + 2 * w) - ell.zeta(ctx, u) - 2 * ctx.eta(i)
        assert np.max(np.abs(diff)) <= 1e-11 * max(1, abs(ctx.eta(i)))


def test_eta_is_minus_half_wp_period(generic_ctx):
    ctx = generic_ctx
    for k in (1, 3):
        w = ctx.half_period(k)
        other = ctx.omega3 if k == 1 else ctx.omega1
        start = -w + 0.37 * other
        total, _ = integrate_curve(lambda z: ell.wp(ctx, z), lambda t: start + 2 * w * t,
                                   lambda t: np.full(np.shape(t), 2 * w), tol=1e-12)
        assert abs(total + 2 * ctx.eta(k)) <= 1e-8 * max(1, abs(ctx.eta(k)))


def test_quasi_addition(generic_ctx, rng):
    ctx = generic_ctx
    u, v = sample_u(ctx, rng, 100), sample_u(ctx, rng, 100)
    lhs = ell.zeta(ctx, u - v) - ell.zeta(ctx, u) + ell.zeta(ctx, v)
    rhs = ell.quasi_addition(ctx, u, v)
    assert np.max(np.abs(lhs - rhs) / (1 + np.abs(rhs))) <= 1e-10


def test_half_period_shift(generic_ctx, rng):
    ctx = generic_ctx
    u = sample_u(ctx, rng, 100)
    for i in (1, 2, 3):
        direct = ell.wp(ctx, u + ctx.half_period(i))
        shifted = ell.half_period_shift(ctx, u, i)
        assert np.max(np.abs(direct - shifted) / (1 + np.abs(direct))) <= 1e-10
        for j in (1, 2, 3):
            if j != i:
                k = 6 - i - j
                val = ell.half_period_shift(ctx, ctx.half_period(j), i)
                assert abs(val - ctx.e(k)) <= 1e-10 * max(1, abs(ctx.e(k)))
        with pytest.raises(ell.PoleError):
            ell.half_period_shift(ctx, ctx.half_period(i), i)


def test_half_period_shift_square(square_ctx):
    u = 0.3 + 0.11j
    assert abs(ell.half_period_shift(square_ctx, u, 2) + 1 / ell.wp(square_ctx, u)) < 1e-12


def test_principal_part_sum(generic_ctx):
    ctx = generic_ctx
    f = ell.principal_part_sum(ctx, [(1, 0)], 0)
    u = 0.31 + 0.2j
    assert f(u) == ell.wp(ctx, u)
    g = ell.principal_part_sum(ctx, [(2 - 1j, 0.3 + 0.1j), (0.5j, -0.2 + 0.4j)], 1.5)
    for k in (1, 3):
        w = ctx.half_period(k)
        other = ctx.omega3 if k == 1 else ctx.omega1
        start = -w + 0.8 * other
        total, _ = integrate_curve(g, lambda t: start + 2 * w * t, lambda t: np.full(np.shape(t), 2 * w), tol=1e-12)
        assert abs(total - g.period(k)) <= 1e-9 * abs(total)
    with pytest.raises(ValueError):
        ell.principal_part_sum(ctx, [(1, 0.1), (1, 0.1 + 2 * ctx.omega1)], 0)


def test_g2_against_lattice_sum():
    ctx = context(complex(0.1, 1.3))
    w1, w3 = ctx.omega1, ctx.omega3
    N = 300
    m, n = np.meshgrid(np.arange(-N, N + 1), np.arange(-N, N + 1))
    w = 2 * m * w1 + 2 * n * w3
    w = w[(m != 0) | (n != 0)]
    g2 = 60 * np.sum(w ** -4.0)
    assert abs(g2 - ctx.g2) <= 1e-4 * abs(ctx.g2)


def test_reduction_invariance():
    # the same lattice through two different bases
    a = ell.make_context(ell.Lattice(1.0, complex(0.3, 1.1)))
    b = ell.make_context(ell.Lattice(1.0, complex(2.3, 1.1)))
    u = 0.27 + 0.41j
    assert abs(ell.wp(a, u) - ell.wp(b, u)) <= 1e-12 * abs(ell.wp(a, u))
    assert abs(a.g2 - b.g2) <= 1e-12 * abs(a.g2)


def test_pole_and_degenerate_errors(generic_ctx):
    with pytest.raises(ell.PoleError):
        ell.wp(generic_ctx, 2 * generic_ctx.omega1)
    with pytest.raises(ell.DegenerateLatticeError):
        ell.Lattice(1.0, -1j)
    with pytest.raises(ell.DegenerateLatticeError):
        ell.make_context(ell.Lattice(1.0, 0.001j))
    with pytest.raises(ValueError):
        ell.Lattice(1.0, 1.2j, "square")


def test_lattice_helpers(generic_ctx):
    lat = generic_ctx.lattice
    u = 0.4 * lat.omega1 - 1.3 * lat.omega3
    x, y = ell.lattice_coords(lat, u)
    assert abs(x - 0.2) < 1e-14 and abs(y + 0.65) < 1e-14
    assert ell.is_lattice_point(lat, 2 * lat.omega1 - 4 * lat.omega3)
    assert ell.torus_distance(lat, u, u + 2 * lat.omega3) < 1e-14
