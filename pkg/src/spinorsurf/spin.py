"""Spinor sections, Laurent data at ends, periods and the immersion X = Re int(omega).

A section is stored as ``s = f * phi`` where ``phi`` is a reference spinor
with ``phi**2 = rho(u) du``.  Three reference frames are supported:

* ``sphere``     phi^2 = dz on the Riemann sphere (the point at infinity uses
                 the chart w = 1/z, in which s = i f(1/w) / w * sqrt(dw));
* ``twisted``    phi0^2 = du on a torus;
* ``untwisted``  phi_r^2 = du / (wp(u) - e_r) on a torus.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import elliptic as ell

INF = complex(math.inf, 0.0)


def is_inf(p) -> bool:
    return isinstance(p, complex) and (math.isinf(p.real) or math.isinf(p.imag))


class LaurentError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# the null quadric and the group action


def sigma(z1, z2):
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    return np.stack([z1 * z1 - z2 * z2, 1j * (z1 * z1 + z2 * z2), 2 * z1 * z2])


def quadric_form(x, y=None):
    """Complex bilinear <x, y> = sum x_i y_i."""
    x = np.asarray(x)
    y = x if y is None else np.asarray(y)
    return np.sum(x * y, axis=0)


def _to_matrix(x):
    x1, x2, x3 = x
    return np.array([[x3, -x1 + 1j * x2], [-x1 - 1j * x2, -x3]], dtype=complex)


def _from_matrix(X):
    return np.array([-(X[0, 1] + X[1, 0]) / 2, (X[0, 1] - X[1, 0]) / 2j, X[0, 0]], dtype=complex)


def group_action_T(A) -> np.ndarray:
    """3x3 matrix of X -> A X adj(A) on C^3 (with x identified to a traceless 2x2)."""
    A = np.asarray(A, dtype=complex)
    if A.shape != (2, 2):
        raise ValueError("A must be 2x2")
    if abs(np.linalg.det(A)) < 1e-14 * max(1.0, np.max(np.abs(A)) ** 2):
        raise ValueError("A is singular")
    adj = np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]])
    T = np.empty((3, 3), dtype=complex)
    for k in range(3):
        e = np.zeros(3, dtype=complex)
        e[k] = 1
        T[:, k] = _from_matrix(A @ _to_matrix(e) @ adj)
    return T


# ---------------------------------------------------------------------------
# reference frames


@dataclass(frozen=True)
class Frame:
    kind: str  # "sphere" | "twisted" | "untwisted"
    ctx: ell.EllipticContext | None = None
    r: int = 0

    def __post_init__(self):
        if self.kind not in ("sphere", "twisted", "untwisted"):
            raise ValueError(f"unknown frame {self.kind!r}")
        if self.kind != "sphere" and self.ctx is None:
            raise ValueError("torus frames need an elliptic context")
        if self.kind == "untwisted" and self.r not in (1, 2, 3):
            raise ValueError("untwisted frame needs r in {1, 2, 3}")

    @property
    def is_torus(self) -> bool:
        return self.kind != "sphere"

    @property
    def scale(self) -> float:
        if self.kind == "sphere":
            return 1.0
        return float(min(abs(self.ctx.omega1), abs(self.ctx.omega3)))

    def rho(self, u):
        u = np.asarray(u, dtype=complex)
        if self.kind != "untwisted":
            return np.ones_like(u)
        return 1.0 / (np.asarray(ell.wp(self.ctx, u)) - self.ctx.e(self.r))

    def sqrt_rho(self, u):
        """Single-valued lift of sqrt(rho) on the plane."""
        u = np.asarray(u, dtype=complex)
        if self.kind != "untwisted":
            return np.ones_like(u)
        return 1.0 / np.asarray(ell.sqrt_wp_minus_e(self.ctx, u, self.r))

    def singular_points(self) -> list[complex]:
        """Zeros and poles of rho inside the central cell (excluded from extraction disks)."""
        if self.kind != "untwisted":
            return []
        return [0j, self.ctx.half_period(self.r)]

    def distance(self, p, q) -> float:
        if self.kind == "sphere":
            if is_inf(p) or is_inf(q):
                return 0.0 if (is_inf(p) and is_inf(q)) else math.inf
            return abs(complex(p) - complex(q))
        return ell.torus_distance(self.ctx.lattice, p, q)

    def to_json(self) -> dict:
        return {"kind": self.kind, "r": self.r}


@dataclass(frozen=True)
class SpinorSection:
    frame: Frame
    f: Callable
    poles: tuple = ()  # ((location, order), ...)
    name: str = ""

    def __call__(self, u):
        return self.f(np.asarray(u, dtype=complex))

    def scaled(self, c: complex) -> "SpinorSection":
        f = self.f
        return SpinorSection(self.frame, lambda u: c * f(u), self.poles, self.name)


def combine(frame: Frame, coeffs, sections: Sequence[SpinorSection], name: str = "") -> SpinorSection:
    coeffs = [complex(c) for c in coeffs]
    fs = [s.f for s in sections]
    poles = {}
    for c, s in zip(coeffs, sections):
        if abs(c) > 0:
            for p, k in s.poles:
                poles[_pole_key(p)] = (p, max(k, poles.get(_pole_key(p), (p, 0))[1]))

    def f(u):
        u = np.asarray(u, dtype=complex)
        out = np.zeros(u.shape, dtype=complex)
        for c, g in zip(coeffs, fs):
            if c != 0:
                out = out + c * g(u)
        return out

    return SpinorSection(frame, f, tuple(poles.values()), name)


def _pole_key(p):
    return "inf" if is_inf(p) else (round(complex(p).real, 12), round(complex(p).imag, 12))


@dataclass(frozen=True)
class SpinorPair:
    s1: SpinorSection
    s2: SpinorSection
    cycles: tuple = ()

    def __post_init__(self):
        if self.s1.frame != self.s2.frame:
            raise ValueError("sections must share a reference frame")

    @property
    def frame(self) -> Frame:
        return self.s1.frame

    @property
    def poles(self) -> list:
        seen, out = set(), []
        for p, _ in self.s1.poles + self.s2.poles:
            if _pole_key(p) not in seen:
                seen.add(_pole_key(p))
                out.append(p)
        return out

    def omega(self, u):
        """omega / du: (f1^2 - f2^2, i (f1^2 + f2^2), 2 f1 f2) * rho."""
        u = np.asarray(u, dtype=complex)
        f1, f2 = self.s1(u), self.s2(u)
        return sigma(f1, f2) * self.frame.rho(u)

    def weierstrass_data(self, u):
        """(eta, g) with eta = s1^2 (relative to du) and g = s2 / s1."""
        u = np.asarray(u, dtype=complex)
        f1, f2 = self.s1(u), self.s2(u)
        return f1 * f1 * self.frame.rho(u), f2 / f1


# ---------------------------------------------------------------------------
# Laurent data


@dataclass(frozen=True)
class LaurentData:
    point: complex
    a_minus1: complex
    a_0: complex
    a_1: complex
    coeffs: dict = field(repr=False, default_factory=dict)
    radius: float = 0.0
    n_points: int = 0

    def order(self, tol: float = 1e-9) -> int:
        """Lowest index with a non-negligible coefficient."""
        scale = max(abs(c) for c in self.coeffs.values())
        if scale == 0:
            return max(self.coeffs) + 1
        for k in sorted(self.coeffs):
            if abs(self.coeffs[k]) > tol * scale:
                return k
        return max(self.coeffs) + 1


def contour_coefficients(g: Callable, radius: float, kmin: int = -3, kmax: int = 3,
                         tol: float = 1e-10, n0: int = 32, nmax: int = 2**14):
    """Laurent coefficients c_k (kmin <= k <= kmax) of g(x) about x = 0.

    Trapezoid rule on |x| = radius; N doubles until successive estimates agree.
    """
    ks = np.arange(kmin, kmax + 1)
    prev = None
    n = n0
    while n <= nmax:
        theta = 2 * np.pi * np.arange(n) / n
        x = radius * np.exp(1j * theta)
        vals = np.asarray(g(x), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise LaurentError("non-finite values on the extraction circle")
        c = np.array([np.mean(vals * np.exp(-1j * k * theta)) / radius**k for k in ks])
        if prev is not None:
            scale = max(np.max(np.abs(c * radius ** ks.astype(float))), 1e-300)
            # coefficients that vanish exactly only ever agree to rounding of the samples
            floor = 64 * np.finfo(float).eps * np.max(np.abs(vals))
            if np.max(np.abs((c - prev) * radius ** ks.astype(float))) <= tol * scale + floor:
                return dict(zip(ks.tolist(), c.tolist())), n
        prev = c
        n *= 2
    raise LaurentError("Laurent extraction did not converge by N = 2^14")


def local_function(section: SpinorSection, p) -> Callable:
    """The section in a local coordinate x at p, relative to a frame sqrt(dx)."""
    fr = section.frame
    if fr.kind == "sphere" and is_inf(p):
        return lambda w: 1j * section(1.0 / w) / w
    p = complex(p)
    if fr.kind != "untwisted":
        return lambda x: section(p + x)
    return lambda x: section(p + x) * fr.sqrt_rho(p + x)


def extraction_radius(frame: Frame, p, others: Sequence, fraction: float = 0.4) -> float:
    """Radius of the extraction disk: a fraction of the distance to the nearest other singular point."""
    if frame.kind == "sphere":
        if is_inf(p):
            finite = [abs(complex(q)) for q in others if not is_inf(q)]
            nonzero = [1.0 / d for d in finite if d > 0]
            return fraction * min(nonzero) if nonzero else 1.0
        dists = [abs(complex(q) - complex(p)) for q in others if not is_inf(q) and abs(complex(q) - complex(p)) > 0]
        return min(fraction * min(dists), 1.0) if dists else 1.0
    lat = frame.ctx.lattice
    cands = list(others) + frame.singular_points()
    dists = [frame.distance(p, q) for q in cands]
    dists = [d for d in dists if d > 1e-12]
    # the lattice translates of p itself
    dists.append(2 * min(abs(lat.omega1), abs(lat.omega3), abs(lat.omega1 + lat.omega3), abs(lat.omega1 - lat.omega3)))
    if any(frame.distance(p, q) <= 1e-12 for q in frame.singular_points()):
        raise LaurentError("point coincides with a zero or pole of the reference differential")
    return fraction * min(dists)


def _other_poles(sections: Sequence[SpinorSection], p) -> list:
    key = _pole_key(p)
    out = []
    for s in sections:
        for q, _ in s.poles:
            if _pole_key(q) != key:
                out.append(q)
    return out


def laurent_extract(section: SpinorSection, p, radius: float | None = None,
                    kmin: int = -3, kmax: int = 3) -> LaurentData:
    if radius is None:
        radius = extraction_radius(section.frame, p, _other_poles([section], p))
    else:
        for q in _other_poles([section], p):
            if section.frame.distance(p, q) <= radius:
                raise LaurentError("another pole lies inside the extraction circle")
    coeffs, n = contour_coefficients(local_function(section, p), radius, kmin, kmax)
    return LaurentData(p, coeffs[-1], coeffs[0], coeffs[1], coeffs, radius, n)


# ---------------------------------------------------------------------------
# end conditions


@dataclass(frozen=True)
class EndReport:
    point: complex
    embedded_planar: bool
    ord: int
    residue_vector: np.ndarray


def end_check(pair: SpinorPair, p, radius: float | None = None, tol: float = 1e-9) -> EndReport:
    frame = pair.frame
    if radius is None:
        radius = extraction_radius(frame, p, _other_poles([pair.s1, pair.s2], p))
    g1 = local_function(pair.s1, p)
    g2 = local_function(pair.s2, p)

    def comps(x):
        return sigma(g1(x), g2(x))

    data = [contour_coefficients(lambda x, k=k: comps(x)[k], radius, -4, 2)[0] for k in range(3)]
    scale = max(abs(c) for d in data for c in d.values())
    if scale == 0:
        return EndReport(p, False, 3, np.zeros(3, dtype=complex))
    order = min(
        min((k for k in sorted(d) if abs(d[k]) > tol * scale), default=3) for d in data
    )
    res = np.array([d[-1] for d in data])
    lead = max(abs(d[-2]) for d in data)
    planar = order == -2 and np.max(np.abs(res)) <= tol * max(lead, 1e-300)
    return EndReport(p, bool(planar), int(order), res)


@dataclass(frozen=True)
class ResidueIdentity:
    ord1: int
    ord2: int
    lhs: complex
    rhs: complex
    ok: bool


def residue_cross_identity(s1: SpinorSection, s2: SpinorSection, p, tol: float = 1e-9) -> ResidueIdentity:
    """2 res s1 s2 = [s2/s1] res s1^2 + [s1/s2] res s2^2 (equal orders), else res s1 s2 = 0."""
    radius = extraction_radius(s1.frame, p, _other_poles([s1, s2], p))
    L1 = laurent_extract(s1, p, radius)
    L2 = laurent_extract(s2, p, radius)
    o1, o2 = L1.order(), L2.order()
    if min(o1, o2) < -1:
        raise ValueError("residue identity needs ord_p >= -1 for both sections")
    g1, g2 = local_function(s1, p), local_function(s2, p)
    res12 = contour_coefficients(lambda x: g1(x) * g2(x), radius, -2, 0)[0][-1]
    res11 = contour_coefficients(lambda x: g1(x) ** 2, radius, -2, 0)[0][-1]
    res22 = contour_coefficients(lambda x: g2(x) ** 2, radius, -2, 0)[0][-1]
    scale = max(abs(L1.coeffs[o1]) if o1 in L1.coeffs else 1.0, 1e-300) * max(
        abs(L2.coeffs[o2]) if o2 in L2.coeffs else 1.0, 1e-300)
    if o1 == o2 and o1 in L1.coeffs:
        r21 = L2.coeffs[o1] / L1.coeffs[o1]
        lhs = 2 * res12
        rhs = r21 * res11 + res22 / r21
    elif abs(o1 - o2) >= 2:
        lhs, rhs = res12, 0j
    else:
        # orders differ by one: fall back to the coefficient formula
        lhs = res12
        rhs = L1.a_minus1 * L2.a_0 + L1.a_0 * L2.a_minus1
    return ResidueIdentity(o1, o2, complex(lhs), complex(rhs), abs(lhs - rhs) <= tol * max(scale, abs(lhs), abs(rhs)))


# ---------------------------------------------------------------------------
# curves, quadrature, periods


@dataclass(frozen=True)
class Cycle:
    """A closed curve: a straight segment c -> c + displacement (torus) or a circle."""

    kind: str  # "segment" | "circle"
    start: complex
    extent: complex  # displacement for segments, radius for circles
    label: str = ""

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "segment":
            return self.start + t * self.extent
        return self.start + self.extent * np.exp(2j * np.pi * t)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "segment":
            return np.full(t.shape, self.extent, dtype=complex)
        return 2j * np.pi * self.extent * np.exp(2j * np.pi * t)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def integrate_curve(fn: Callable, point: Callable, velocity: Callable, tol: float = 1e-10,
                    order: int = 16, panels0: int = 4, max_panels: int = 4096):
    """Composite Gauss-Legendre of fn(z) dz along t in [0, 1], panels doubled to convergence.

    fn may return an array with a leading component axis.
    """
    x, w = _gauss_legendre(order)
    prev = None
    panels = panels0
    while panels <= max_panels:
        edges = np.linspace(0.0, 1.0, panels + 1)
        t = (edges[:-1, None] + (x[None, :] + 1) / 2 * (edges[1:] - edges[:-1])[:, None]).ravel()
        ww = np.tile(w / 2, panels) / panels
        vals = np.asarray(fn(point(t))) * velocity(t)
        total = np.sum(vals * ww, axis=-1)
        mass = np.sum(np.abs(vals) * ww, axis=-1)
        if prev is not None and np.all(np.abs(total - prev) <= tol * np.maximum(mass, 1e-300)):
            return total, mass
        prev = total
        panels *= 2
    raise RuntimeError("quadrature did not converge")


@dataclass(frozen=True)
class PeriodResult:
    s1s1: complex
    s2s2: complex
    s1s2: complex
    conj_residual: float
    real_residual: float
    scale: float
    ok: bool


def periods(pair: SpinorPair, cycle: Cycle, tol: float = 1e-8) -> PeriodResult:
    frame = pair.frame

    def integrand(z):
        f1, f2 = pair.s1(z), pair.s2(z)
        rho = frame.rho(z)
        return np.stack([f1 * f1 * rho, f2 * f2 * rho, f1 * f2 * rho])

    total, mass = integrate_curve(integrand, cycle.point, cycle.velocity)
    scale = float(max(np.max(mass), 1e-300))
    conj_res = abs(total[0] - np.conj(total[1])) / scale
    real_res = abs(total[2].real) / scale
    ok = conj_res <= tol and real_res <= tol
    return PeriodResult(complex(total[0]), complex(total[1]), complex(total[2]),
                        float(conj_res), float(real_res), scale, bool(ok))


def _largest_gap_midpoint(coords: Sequence[float]) -> float:
    c = sorted({round(float(x) % 1.0, 12) % 1.0 for x in coords})
    if not c:
        return 0.25
    if len(c) == 1:
        return (c[0] + 0.5) % 1.0
    gaps = [((c[(i + 1) % len(c)] - c[i]) % 1.0, c[i]) for i in range(len(c))]
    width, start = max(gaps)
    return (start + width / 2) % 1.0


def torus_cycles(frame: Frame, avoid: Sequence) -> tuple[Cycle, Cycle]:
    """Closed curves parallel to 2 omega1 and 2 omega3, offset to stay as far as possible from ``avoid``.

    Along a curve parallel to 2 omega1 only the omega3-coordinate of a point
    matters, so the offset is the midpoint of the widest gap in those
    coordinates (and symmetrically for the other curve).
    """
    if not frame.is_torus:
        raise ValueError("torus cycles need a torus frame")
    lat = frame.ctx.lattice
    pts = [complex(p) for p in list(avoid) + frame.singular_points()]
    xs, ys = ell.lattice_coords(lat, np.array(pts, dtype=complex)) if pts else ([], [])
    y0 = _largest_gap_midpoint(ys)
    x0 = _largest_gap_midpoint(xs)
    # translate to the centred representative so curves run through the central cell
    y0 = y0 - 1.0 if y0 > 0.5 else y0
    x0 = x0 - 1.0 if x0 > 0.5 else x0
    g1 = Cycle("segment", complex(2 * y0 * lat.omega3 - lat.omega1), complex(2 * lat.omega1), "gamma1")
    g3 = Cycle("segment", complex(2 * x0 * lat.omega1 - lat.omega3), complex(2 * lat.omega3), "gamma3")
    return g1, g3


def integrate_X(pair: SpinorPair, base, target, path: Sequence | None = None) -> np.ndarray:
    """X(target) - X(base) = Re int omega along a polyline through the given waypoints."""
    pts = [complex(base)] + [complex(p) for p in (path or [])] + [complex(target)]
    X = np.zeros(3)
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue
        seg = Cycle("segment", a, b - a)
        for p in pair.poles:
            if not is_inf(p) and _segment_distance(a, b, complex(p)) < 1e-9:
                raise ValueError("integration path passes through a pole")
        total, _ = integrate_curve(pair.omega, seg.point, seg.velocity)
        X += total.real
    return X


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    d = b - a
    t = 0.0 if d == 0 else max(0.0, min(1.0, ((p - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(a + t * d - p)


def segment_integrals(pair: SpinorPair, starts: np.ndarray, ends: np.ndarray, order: int = 24) -> np.ndarray:
    """Re int omega over many short segments at once, fixed Gauss-Legendre order."""
    x, w = _gauss_legendre(order)
    starts = np.asarray(starts, dtype=complex)
    d = np.asarray(ends, dtype=complex) - starts
    z = starts[:, None] + (x[None, :] + 1) / 2 * d[:, None]
    vals = pair.omega(z)  # (3, m, order)
    return (np.sum(vals * (w / 2)[None, None, :], axis=-1) * d[None, :]).real.T


# ---------------------------------------------------------------------------
# anticonformal involutions


@dataclass(frozen=True)
class Involution:
    """I(u) = J(conj(u)) with J holomorphic; ``sqrt_jac`` is a lift of sqrt(J')."""

    map: Callable
    sqrt_jac: Callable
    name: str = ""


def _antipode(z):
    with np.errstate(divide="ignore", invalid="ignore"):
        return -1.0 / np.conj(z)


def _antipode_jac(v):
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / np.asarray(v)


def antipodal() -> Involution:
    return Involution(_antipode, _antipode_jac, "z -> -1/conj(z)")


def torus_glide(ctx: ell.EllipticContext) -> Involution:
    w1 = ctx.omega1
    return Involution(lambda u: np.conj(u) + w1, lambda v: np.ones_like(np.asarray(v, dtype=complex)),
                      "u -> conj(u) + omega1")


def frame_factor(frame: Frame, inv: Involution, u):
    """F with conj(I^* phi) = F phi."""
    u = np.asarray(u, dtype=complex)
    Iu = inv.map(u)
    return np.conj(frame.sqrt_rho(Iu)) * np.conj(inv.sqrt_jac(np.conj(u))) / frame.sqrt_rho(u)


def conj_pullback(section: SpinorSection, inv: Involution, name: str = "") -> SpinorSection:
    """The section conj(I^* s), expressed against the same frame."""
    frame = section.frame

    def f(u):
        return np.conj(section(inv.map(u))) * frame_factor(frame, inv, u)

    poles = []
    for p, k in section.poles:
        if is_inf(p):
            poles.append((0j, k))
        elif frame.kind == "sphere" and complex(p) == 0:
            poles.append((INF, k))
        else:
            poles.append((complex(inv.map(np.asarray(complex(p)))), k))
    return SpinorSection(frame, f, tuple(poles), name)


@dataclass(frozen=True)
class CompatibilityResult:
    ok: bool
    sign: int
    residual: float
    consistent_sign: bool

    def __bool__(self):
        return self.ok


def sample_points(frame: Frame, n: int, avoid: Sequence, rng: np.random.Generator, margin: float = 0.05):
    out = []
    sc = frame.scale
    while len(out) < n:
        if frame.kind == "sphere":
            z = complex(rng.normal(), rng.normal())
        else:
            a, b = rng.uniform(-0.5, 0.5, 2)
            z = 2 * a * frame.ctx.omega1 + 2 * b * frame.ctx.omega3
        if all(is_inf(p) or frame.distance(z, p) > margin * sc for p in list(avoid) + frame.singular_points()):
            if frame.kind == "sphere" and abs(z) < margin:
                continue
            out.append(z)
    return np.array(out)


def nonorientable_compatibility(pair: SpinorPair, inv: Involution, lift_sign: int | None = None,
                                n_samples: int = 100, tol: float = 1e-9, seed: int = 7) -> CompatibilityResult:
    """Test (s1, s2) = sign (i conj(I^* s2), -i conj(I^* s1)) at sample points."""
    frame = pair.frame
    rng = np.random.default_rng(seed)
    avoid = pair.poles
    avoid = avoid + [complex(inv.map(np.asarray(complex(p)))) for p in avoid if not is_inf(p)]
    if frame.kind == "sphere":
        avoid = avoid + [0j]
    u = sample_points(frame, n_samples, avoid, rng)
    f1, f2 = pair.s1(u), pair.s2(u)
    F = frame_factor(frame, inv, u)
    c2 = 1j * np.conj(pair.s2(inv.map(u))) * F
    c1 = -1j * np.conj(pair.s1(inv.map(u))) * F
    scale = np.abs(f1) + np.abs(f2) + np.abs(c1) + np.abs(c2)
    res = {}
    for s in (1, -1):
        res[s] = (np.abs(f1 - s * c2) + np.abs(f2 - s * c1)) / scale
    signs = (1, -1) if lift_sign is None else (lift_sign,)
    best = min(signs, key=lambda s: np.max(res[s]))
    worst = float(np.max(res[best]))
    pointwise = np.minimum(res[1], res[-1])
    consistent = worst <= tol or not np.all(pointwise <= tol)
    return CompatibilityResult(worst <= tol, best, worst, bool(consistent))
