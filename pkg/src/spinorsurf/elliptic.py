"""Weierstrass elliptic functions on a lattice with half-periods omega1, omega3.

Everything is evaluated through theta-function q-series on an internally
reduced basis (tau moved into the standard fundamental region), so the
series converge fast for any non-degenerate lattice. Values of the lattice
functions (wp, wp', zeta) do not depend on the basis; quasi-periods and
half-period values are mapped back to the caller's generators.

The middle half-period is always ``omega2 = omega1 + omega3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

POLE_GUARD = 1e-12
MAX_NOME = 0.99


class PoleError(ValueError):
    pass


class DegenerateLatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    omega1: complex
    omega3: complex
    kind: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "omega1", complex(self.omega1))
        object.__setattr__(self, "omega3", complex(self.omega3))
        if self.omega1 == 0 or (self.omega3 / self.omega1).imag <= 0:
            raise DegenerateLatticeError("need Im(omega3/omega1) > 0")
        if self.kind in ("rectangular", "square"):
            if abs(self.omega1.imag) > 1e-14 * abs(self.omega1) or abs(self.omega3.real) > 1e-14 * abs(self.omega3):
                raise ValueError("rectangular lattice needs omega1 real and omega3 imaginary")
            if self.kind == "square" and abs(abs(self.omega3) - abs(self.omega1)) > 1e-14 * abs(self.omega1):
                raise ValueError("square lattice needs |omega3| = |omega1|")

    @property
    def omega2(self) -> complex:
        return self.omega1 + self.omega3

    @property
    def tau(self) -> complex:
        return self.omega3 / self.omega1

    def half_period(self, i: int) -> complex:
        return {1: self.omega1, 2: self.omega2, 3: self.omega3}[i]

    @classmethod
    def from_tau(cls, tau: complex, omega1: complex = 1.0) -> "Lattice":
        tau = complex(tau)
        kind = "generic"
        if abs(tau.real) < 1e-15 and abs(complex(omega1).imag) < 1e-15:
            kind = "square" if abs(tau.imag - 1) < 1e-15 else "rectangular"
        return cls(omega1, tau * omega1, kind)


def _reduce_tau(tau: complex):
    """Move tau into the standard fundamental region.

    Returns the reduced tau and the integer matrix M with
    (w1', w3') = M (w1, w3), where w1', w3' are the new half-periods.
    """
    M = np.eye(2, dtype=np.int64)
    for _ in range(200):
        n = round(tau.real)
        if n:
            tau -= n
            # w3' = w3 - n w1
            M = np.array([[1, 0], [-n, 1]], dtype=np.int64) @ M
        if abs(tau) < 1 - 1e-14:
            tau = -1 / tau
            # w1' = w3, w3' = -w1
            M = np.array([[0, 1], [-1, 0]], dtype=np.int64) @ M
        else:
            break
    return tau, M


def _theta_terms(q: complex) -> int:
    aq = abs(q)
    if aq == 0:
        return 2
    # q^(n^2 - n) bounds the worst term at |Im v| <= pi Im(tau)/2
    n = 2
    while aq ** (n * n - n) > 1e-18:
        n += 1
    return n + 1


def _divisor_sum(n: int, power: int, odd_only: bool = False) -> int:
    total = 0
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            for dd in {d, n // d}:
                if not odd_only or dd % 2:
                    total += dd ** power
    return total


def _q_series(Q: complex, coeff) -> complex:
    """1 + sum_n coeff(n) Q^n, truncated once terms fall below 1e-17 relative."""
    total = 1.0 + 0j
    n = 1
    Qn = Q
    while True:
        term = coeff(n) * Qn
        total += term
        if abs(Qn) * max(1.0, abs(coeff(n))) < 1e-17 * abs(total) and n > 2:
            break
        n += 1
        Qn *= Q
        if n > 10_000:
            break
    return total


def eisenstein_g2(omega1: complex, Q: complex) -> complex:
    """g2 = pi^4 / (12 omega1^4) (1 + 240 sum sigma_3(n) Q^n), Q = exp(2 pi i tau)."""
    return math.pi**4 / (12 * omega1**4) * _q_series(Q, lambda n: 240 * _divisor_sum(n, 3))


def eisenstein_g3(omega1: complex, Q: complex) -> complex:
    return math.pi**6 / (216 * omega1**6) * _q_series(Q, lambda n: -504 * _divisor_sum(n, 5))


def eisenstein_eta1(omega1: complex, Q: complex) -> complex:
    """eta1 = pi^2 / (12 omega1) (1 - 24 sum sigma_1(n) Q^n)."""
    return math.pi**2 / (12 * omega1) * _q_series(Q, lambda n: -24 * _divisor_sum(n, 1))


def series_e1(omega1: complex, Q: complex) -> complex:
    """e1 = pi^2 / (6 omega1^2) (1 + 24 sum d_odd(n) Q^n), d_odd = sum of odd divisors."""
    return math.pi**2 / (6 * omega1**2) * _q_series(Q, lambda n: 24 * _divisor_sum(n, 1, odd_only=True))


@dataclass(frozen=True)
class EllipticContext:
    lattice: Lattice
    g2: complex
    g3: complex
    e1: complex
    e2: complex
    e3: complex
    eta1: complex
    eta3: complex
    q: complex  # exp(i pi tau) of the caller's basis
    # reduced basis used for evaluation
    _w1: complex = field(repr=False, default=0j)
    _w3: complex = field(repr=False, default=0j)
    _eta1r: complex = field(repr=False, default=0j)
    _eta3r: complex = field(repr=False, default=0j)
    _qr: complex = field(repr=False, default=0j)
    _taur: complex = field(repr=False, default=0j)
    _nterms: int = field(repr=False, default=8)
    _theta1p0: complex = field(repr=False, default=0j)

    @property
    def omega1(self) -> complex:
        return self.lattice.omega1

    @property
    def omega2(self) -> complex:
        return self.lattice.omega2

    @property
    def omega3(self) -> complex:
        return self.lattice.omega3

    @property
    def eta2(self) -> complex:
        return self.eta1 + self.eta3

    def half_period(self, i: int) -> complex:
        return self.lattice.half_period(i)

    def eta(self, i: int) -> complex:
        return {1: self.eta1, 2: self.eta2, 3: self.eta3}[i]

    def e(self, i: int) -> complex:
        return {1: self.e1, 2: self.e2, 3: self.e3}[i]

    # -- theta machinery on the reduced basis --------------------------------

    def _theta1_derivs(self, v):
        """theta1 and its first three v-derivatives."""
        n = np.arange(self._nterms)
        k = 2 * n + 1
        c = 2 * (-1.0) ** n * np.exp(1j * np.pi * self._taur * (n + 0.5) ** 2)
        kv = np.multiply.outer(v, k)
        s, co = np.sin(kv), np.cos(kv)
        t0 = np.sum(c * s, axis=-1)
        t1 = np.sum(c * k * co, axis=-1)
        t2 = -np.sum(c * k**2 * s, axis=-1)
        t3 = -np.sum(c * k**3 * co, axis=-1)
        return t0, t1, t2, t3

    def _reduce(self, u):
        """Split u = u0 + 2 m w1 + 2 n w3 with u0 in the central cell."""
        u = np.asarray(u, dtype=complex)
        w1, w3 = self._w1, self._w3
        det = (np.conj(w1) * w3).imag
        # u = 2 x w1 + 2 y w3 with real x, y
        x = (np.conj(u) * w3).imag / (2 * det)
        y = (np.conj(w1) * u).imag / (2 * det)
        m, n = np.round(x), np.round(y)
        u0 = u - 2 * m * w1 - 2 * n * w3
        if np.any(np.hypot(x - m, y - n) < POLE_GUARD):
            raise PoleError("evaluation point is a lattice point")
        return u0, m, n

    def _log_derivs(self, u0):
        v = np.pi * u0 / (2 * self._w1)
        t0, t1, t2, t3 = self._theta1_derivs(v)
        return t1 / t0, t2 / t0, t3 / t0


def _finish(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def make_context(lattice: Lattice) -> EllipticContext:
    q_user = np.exp(1j * np.pi * lattice.tau)
    if abs(q_user) >= MAX_NOME:
        raise DegenerateLatticeError(f"|q| = {abs(q_user):.4f} >= {MAX_NOME}")
    taur, M = _reduce_tau(lattice.tau)
    w1r = M[0, 0] * lattice.omega1 + M[0, 1] * lattice.omega3
    w3r = M[1, 0] * lattice.omega1 + M[1, 1] * lattice.omega3
    qr = np.exp(1j * np.pi * (w3r / w1r))
    Q = qr * qr

    g2 = eisenstein_g2(w1r, Q)
    g3 = eisenstein_g3(w1r, Q)
    eta1r = eisenstein_eta1(w1r, Q)

    kk = (np.pi / (2 * w1r)) ** 2
    th2, th3, th4 = theta_constants(w3r / w1r)
    er = {
        (1, 0): series_e1(w1r, Q),
        (1, 1): kk / 3 * (th2**4 - th4**4),
        (0, 1): -kk / 3 * (th2**4 + th3**4),
    }

    ctx = EllipticContext(
        lattice, complex(g2), complex(g3), 0j, 0j, 0j, 0j, 0j, complex(q_user),
        _w1=complex(w1r), _w3=complex(w3r), _eta1r=complex(eta1r), _eta3r=0j,
        _qr=complex(qr), _taur=complex(w3r / w1r), _nterms=_theta_terms(qr),
    )
    # eta3 on the reduced basis comes from zeta(w3) directly, not from Legendre
    L1, _, _ = ctx._log_derivs(np.asarray(w3r))
    eta3r = eta1r / w1r * w3r + np.pi / (2 * w1r) * L1
    object.__setattr__(ctx, "_eta3r", complex(eta3r))

    Minv = np.round(np.linalg.inv(M)).astype(np.int64)
    vals = {}
    for name, (a, b) in (("1", Minv[0]), ("3", Minv[1])):
        # omega_i = a w1' + b w3'
        vals["eta" + name] = a * eta1r + b * eta3r
        vals["e" + name] = er[(int(a) % 2, int(b) % 2)]
    a, b = Minv[0] + Minv[1]
    vals["e2"] = er[(int(a) % 2, int(b) % 2)]
    for key, val in vals.items():
        object.__setattr__(ctx, key, complex(val))
    return ctx


def theta_constants(tau: complex) -> tuple[complex, complex, complex]:
    """theta2(0), theta3(0), theta4(0) for nome exp(i pi tau)."""
    n = np.arange(1, 40)
    terms = np.exp(1j * np.pi * tau * n.astype(float) ** 2)
    th3 = 1 + 2 * np.sum(terms)
    th4 = 1 + 2 * np.sum((-1.0) ** n * terms)
    m = np.arange(0, 40)
    th2 = 2 * np.sum(np.exp(1j * np.pi * tau * (m + 0.5) ** 2))
    return complex(th2), complex(th3), complex(th4)


def wp(ctx: EllipticContext, u):
    u0, _, _ = ctx._reduce(u)
    L1, L2, _ = ctx._log_derivs(u0)
    k = np.pi / (2 * ctx._w1)
    return _finish(-ctx._eta1r / ctx._w1 + k * k * (L1 * L1 - L2))


def wp_prime(ctx: EllipticContext, u):
    u0, _, _ = ctx._reduce(u)
    L1, L2, L3 = ctx._log_derivs(u0)
    k = np.pi / (2 * ctx._w1)
    return _finish(k**3 * (3 * L1 * L2 - 2 * L1**3 - L3))


def wp_and_prime(ctx: EllipticContext, u):
    u0, _, _ = ctx._reduce(u)
    L1, L2, L3 = ctx._log_derivs(u0)
    k = np.pi / (2 * ctx._w1)
    p = -ctx._eta1r / ctx._w1 + k * k * (L1 * L1 - L2)
    dp = k**3 * (3 * L1 * L2 - 2 * L1**3 - L3)
    return _finish(p), _finish(dp)


def zeta(ctx: EllipticContext, u):
    u0, m, n = ctx._reduce(u)
    L1, _, _ = ctx._log_derivs(u0)
    k = np.pi / (2 * ctx._w1)
    z0 = ctx._eta1r / ctx._w1 * u0 + k * L1
    return _finish(z0 + 2 * m * ctx._eta1r + 2 * n * ctx._eta3r)


def sigma(ctx: EllipticContext, u):
    """Weierstrass sigma, evaluated without reduction (entire; keep u moderate)."""
    u = np.asarray(u, dtype=complex)
    v = np.pi * u / (2 * ctx._w1)
    t0, _, _, _ = ctx._theta1_derivs(v)
    _, t1_0, _, _ = ctx._theta1_derivs(np.asarray(0j))
    val = 2 * ctx._w1 / np.pi * np.exp(ctx._eta1r * u * u / (2 * ctx._w1)) * t0 / t1_0
    return _finish(val)


def sqrt_wp_minus_e(ctx: EllipticContext, u, r: int):
    """Single-valued lift of sqrt(wp(u) - e_r) on the plane: sigma_r(u) / sigma(u)."""
    w = ctx.half_period(r)
    u = np.asarray(u, dtype=complex)
    val = np.exp(-ctx.eta(r) * u) * sigma(ctx, u + w) / (sigma(ctx, w) * sigma(ctx, u))
    return _finish(val)


def half_period_shift(ctx: EllipticContext, u, i: int):
    """wp(u + omega_i) from wp(u) via the addition formula for half-periods."""
    j, k = [x for x in (1, 2, 3) if x != i]
    ei, ej, ek = ctx.e(i), ctx.e(j), ctx.e(k)
    p = np.asarray(wp(ctx, u))
    scale = max(1.0, abs(ei))
    if np.any(np.abs(p - ei) <= 1e-12 * scale):
        raise PoleError(f"wp(u) = e_{i}: u is congruent to omega_{i}")
    return _finish(ei + (ei - ej) * (ei - ek) / (p - ei))


def quasi_addition(ctx: EllipticContext, u, v):
    """Right-hand side 1/2 (wp'(u) + wp'(v)) / (wp(u) - wp(v))."""
    pu, dpu = wp_and_prime(ctx, u)
    pv, dpv = wp_and_prime(ctx, v)
    return _finish(0.5 * (np.asarray(dpu) + dpv) / (np.asarray(pu) - pv))


def ode_residual(ctx: EllipticContext, u):
    """Relative residual of wp'^2 = 4 wp^3 - g2 wp - g3."""
    p, dp = wp_and_prime(ctx, u)
    p, dp = np.asarray(p), np.asarray(dp)
    lhs = dp * dp
    rhs = 4 * p**3 - ctx.g2 * p - ctx.g3
    scale = np.abs(lhs) + 4 * np.abs(p) ** 3 + abs(ctx.g2) * np.abs(p) + abs(ctx.g3)
    return _finish(np.abs(lhs - rhs) / scale)


@dataclass(frozen=True)
class EllipticFunction:
    """f(u) = b + sum a_i wp(u - alpha_i)."""

    ctx: EllipticContext
    terms: tuple[tuple[complex, complex], ...]
    b: complex

    def __call__(self, u):
        u = np.asarray(u, dtype=complex)
        out = np.full(u.shape, self.b, dtype=complex)
        for a, alpha in self.terms:
            out = out + a * np.asarray(wp(self.ctx, u - alpha))
        return _finish(out)

    def period(self, k: int) -> complex:
        """Integral over a cycle u -> u + 2 omega_k avoiding the poles."""
        total_a = sum(a for a, _ in self.terms)
        return complex(-2 * total_a * self.ctx.eta(k) + 2 * self.b * self.ctx.half_period(k))


def principal_part_sum(ctx: EllipticContext, coefficients, b: complex) -> EllipticFunction:
    terms = tuple((complex(a), complex(alpha)) for a, alpha in coefficients)
    lat = ctx.lattice
    for i, (_, x) in enumerate(terms):
        for _, y in terms[i + 1:]:
            if is_lattice_point(lat, x - y):
                raise ValueError("coincident poles modulo the lattice")
    return EllipticFunction(ctx, terms, complex(b))


def lattice_coords(lat: Lattice, u):
    """Real coordinates (x, y) with u = 2 x omega1 + 2 y omega3."""
    u = np.asarray(u, dtype=complex)
    w1, w3 = lat.omega1, lat.omega3
    det = (np.conj(w1) * w3).imag
    x = (np.conj(u) * w3).imag / (2 * det)
    y = (np.conj(w1) * u).imag / (2 * det)
    return x, y


def is_lattice_point(lat: Lattice, u, tol: float = 1e-9) -> bool:
    x, y = lattice_coords(lat, u)
    return bool(abs(x - round(float(x))) < tol and abs(y - round(float(y))) < tol)


def torus_distance(lat: Lattice, u, v) -> float:
    """Distance between u and v modulo the lattice."""
    d = complex(u) - complex(v)
    x, y = lattice_coords(lat, d)
    d = d - 2 * round(float(x)) * lat.omega1 - 2 * round(float(y)) * lat.omega3
    best = abs(d)
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            best = min(best, abs(d + 2 * a * lat.omega1 + 2 * b * lat.omega3))
    return best


def square_lattice_normalized() -> tuple[Lattice, float]:
    """Square lattice scaled so that wp(omega1) = 1, wp(omega2) = 0, wp(omega3) = -1.

    Returns the lattice and the scale factor lambda applied to the unit
    lattice (omega1 = 1), using wp(lambda u; lambda L) = lambda^-2 wp(u; L).
    """
    unit = make_context(Lattice(1.0, 1j, "square"))
    lam = math.sqrt(unit.e1.real)
    return Lattice(lam, 1j * lam, "square"), lam
