"""Explicit families of minimal surfaces with embedded planar ends.

Each builder returns a :class:`SurfaceSpec`: the end divisor and the skew
system on it, the coefficients of the spinor pair in that system's basis,
the solved moduli, and the closed curves and involution the verifier needs.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

from . import elliptic as ell
from .linalg import fourth_quadrant_root
from .omega import OmegaSystem, build_system, omega_sphere, omega_twisted_torus, omega_untwisted_torus
from .spin import (
    INF,
    Cycle,
    Frame,
    Involution,
    SpinorPair,
    SpinorSection,
    antipodal,
    combine,
    conj_pullback,
    contour_coefficients,
    extraction_radius,
    integrate_curve,
    is_inf,
    sample_points,
    torus_cycles,
    torus_glide,
)

SQRT3 = math.sqrt(3.0)


class CatalogError(ValueError):
    pass


class BranchConditionError(CatalogError):
    """The solved surface would be branched."""


@dataclass
class SurfaceSpec:
    name: str
    family: str
    system: OmegaSystem
    coeffs1: np.ndarray
    coeffs2: np.ndarray
    params: dict = field(default_factory=dict)
    symmetry: str | None = None
    involution: str | None = None  # "antipodal" | "glide"
    cycles: tuple = ()
    notes: dict = field(default_factory=dict)

    @property
    def frame(self) -> Frame:
        return self.system.frame

    @property
    def domain(self) -> str:
        return self.system.meta["domain"]

    @property
    def ends(self) -> tuple:
        return self.system.ends.points

    @property
    def pair(self) -> SpinorPair:
        s1 = self.system.section(self.coeffs1, "s1")
        s2 = self.system.section(self.coeffs2, "s2")
        return SpinorPair(s1, s2, self.cycles)

    def involution_map(self) -> Involution | None:
        if self.involution is None:
            return None
        if self.involution == "antipodal":
            return antipodal()
        if self.involution == "glide":
            return torus_glide(self.frame.ctx)
        raise CatalogError(f"unknown involution {self.involution!r}")

    # -- serialisation ---------------------------------------------------

    def to_json(self) -> dict:
        lat = self.frame.ctx.lattice if self.frame.is_torus else None
        return {
            "name": self.name,
            "family": self.family,
            "domain": self.domain,
            "paired": bool(self.system.meta.get("paired", False)),
            "lattice": None if lat is None else {
                "omega1": _cjson(lat.omega1), "omega3": _cjson(lat.omega3), "kind": lat.kind},
            "ends": [None if is_inf(p) else _cjson(p) for p in self.ends],
            "basis": list(self.system.labels),
            "coefficients": {"s1": [_cjson(c) for c in self.coeffs1],
                             "s2": [_cjson(c) for c in self.coeffs2]},
            "params": {k: _pjson(v) for k, v in self.params.items()},
            "symmetry": self.symmetry,
            "involution": self.involution,
            "cycles": [{"kind": c.kind, "start": _cjson(c.start), "extent": _cjson(c.extent), "label": c.label}
                       for c in self.cycles],
            "notes": {k: _pjson(v) for k, v in self.notes.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "SurfaceSpec":
        try:
            domain = data["domain"]
            ends = [INF if e is None else _cparse(e) for e in data["ends"]]
            ctx = None
            if data.get("lattice"):
                lat = data["lattice"]
                ctx = ell.make_context(ell.Lattice(_cparse(lat["omega1"]), _cparse(lat["omega3"]),
                                                   lat.get("kind", "generic")))
            system = build_system(domain, ends, ctx, bool(data.get("paired", False)))
            c1 = np.array([_cparse(c) for c in data["coefficients"]["s1"]])
            c2 = np.array([_cparse(c) for c in data["coefficients"]["s2"]])
            cycles = tuple(Cycle(c["kind"], _cparse(c["start"]), _cparse(c["extent"]), c.get("label", ""))
                           for c in data.get("cycles", []))
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"malformed surface spec: {exc}") from exc
        if len(c1) != len(system.basis) or len(c2) != len(system.basis):
            raise CatalogError("coefficient vectors do not match the basis size")
        params = {k: _pparse(v) for k, v in data.get("params", {}).items()}
        notes = {k: _pparse(v) for k, v in data.get("notes", {}).items()}
        return cls(data["name"], data.get("family", ""), system, c1, c2, params,
                   data.get("symmetry"), data.get("involution"), cycles, notes)


def _cjson(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _cparse(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _pjson(v):
    if isinstance(v, (complex, np.complexfloating)):
        return {"complex": _cjson(v)}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_pjson(x) for x in v]
    return v


def _pparse(v):
    if isinstance(v, dict) and set(v) == {"complex"}:
        return _cparse(v["complex"])
    if isinstance(v, list):
        return [_pparse(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# helpers on the sphere


def _sphere_coefficients(num: Polynomial, den: Polynomial, system: OmegaSystem) -> np.ndarray:
    """Coordinates of the rational section (num/den) phi in the basis of ``omega_sphere``.

    The basis is 1/(z - a) at each finite end followed by 1 when infinity is
    an end; residues come from num(a) / den'(a).
    """
    dden = den.deriv()
    out = []
    for p in system.ends.points:
        if is_inf(p):
            continue
        out.append(complex(num(p) / dden(p)))
    excess = num.degree() - den.degree()
    if excess > 0:
        raise CatalogError("section has a pole of order > 1 at infinity")
    const = complex(num.coef[-1] / den.coef[-1]) if excess == 0 else 0j
    if any(is_inf(p) for p in system.ends.points):
        out.append(const)
    elif abs(const) > 0:
        raise CatalogError("section does not vanish at infinity but infinity is not an end")
    return np.array(out, dtype=complex)


def _elementary(vals: Sequence[complex]) -> tuple[complex, complex, complex]:
    a = list(vals)
    e1 = sum(a)
    e2 = sum(a[i] * a[j] for i, j in itertools.combinations(range(4), 2))
    e3 = sum(a[i] * a[j] * a[k] for i, j, k in itertools.combinations(range(4), 3))
    return e1, e2, e3


def sigmas_from_ends(ends4: Sequence[complex]) -> tuple[complex, complex, complex]:
    """(s1, s2, s3) with prod (z - a_i) = z^4 - s1 z^3 - s2 z^2 - s3 z + 1."""
    e1, e2, e3 = _elementary(ends4)
    return e1, -e2, e3


def sphere6_pfaffian_poly(s1: complex, s2: complex, s3: complex) -> complex:
    t1 = s1 * s1 + 3 * s2
    t3 = s3 * s3 + 3 * s2
    return t1 * t3 + s1 * s3 - 20


def sphere6_kernel_tables(s1, s2, s3) -> tuple[list, list]:
    """Numerator coefficients (b0..b3), (c0..c3) of the two kernel sections."""
    t1 = s1 * s1 + 3 * s2
    t3 = s3 * s3 + 3 * s2
    b = [s2, -s2 * s3, s2 * t3 - 2 * s1 * s3 - 10, s1 * t3 + 5 * s3]
    c = [s3 * t1 + 5 * s1, s2 * t1 - 2 * s1 * s3 - 10, -s1 * s2, s2]
    return b, c


def solve_sigma3(s1: complex, s2: complex, seed: complex | None = None) -> complex:
    """The root in s3 of the six-end pfaffian polynomial (quadratic in s3) nearest ``seed``."""
    t1 = s1 * s1 + 3 * s2
    if t1 == 0 and s1 == 0:
        raise CatalogError("pfaffian polynomial is constant in s3 here")
    roots = np.roots([t1, s1, 3 * s2 * t1 - 20]) if t1 != 0 else np.array([20 / s1])
    seed = 0j if seed is None else complex(seed)
    z = complex(roots[np.argmin(np.abs(roots - seed))])
    # one Newton polish against the polynomial itself
    d = 2 * t1 * z + s1
    if d != 0:
        z -= sphere6_pfaffian_poly(s1, s2, z) / d
    return z


# ---------------------------------------------------------------------------
# sphere families


def sphere_4_ends() -> SurfaceSpec:
    a = complex(SQRT3, 1.0) / 2
    ends = [a, 1 / a, 0j, INF]
    system = omega_sphere(ends)
    den = Polynomial([1.0, -SQRT3, 1.0])
    c1 = _sphere_coefficients(Polynomial([-1.0, SQRT3]), den * Polynomial([0, 1]), system)
    c2 = _sphere_coefficients(Polynomial([0, 1]) * Polynomial([-SQRT3, 1.0]), den, system)
    return SurfaceSpec("sphere-4", "four-ended sphere", system, c1, c2, {"a": a},
                       cycles=_sphere_cycles(system))


def sphere_6_ends(s1: complex, s2: complex, s3: complex | None = None, tol: float = 1e-10) -> SurfaceSpec:
    s1, s2 = complex(s1), complex(s2)
    s3 = solve_sigma3(s1, s2) if s3 is None else complex(s3)
    scale = 1 + abs(s1 * s1 + 3 * s2) * abs(s3 * s3 + 3 * s2) + abs(s1 * s3)
    if abs(sphere6_pfaffian_poly(s1, s2, s3)) > tol * scale:
        raise CatalogError("(s1, s2, s3) is off the variety where the pfaffian vanishes")
    if abs(s2) <= 1e-12:
        raise CatalogError("s2 = 0: the tabulated kernel sections are dependent")
    quartic = Polynomial([1.0, -s3, -s2, -s1, 1.0])
    roots = quartic.roots()
    _check_distinct(list(roots) + [0j])
    ends = [complex(r) for r in roots] + [0j, INF]
    system = omega_sphere(ends)
    b, c = sphere6_kernel_tables(s1, s2, s3)
    z = Polynomial([0, 1])
    c1 = _sphere_coefficients(Polynomial(b), z * quartic, system)
    c2 = _sphere_coefficients(z * Polynomial(c), quartic, system)
    return SurfaceSpec("sphere-6", "six-ended sphere", system, c1, c2,
                       {"sigma1": s1, "sigma2": s2, "sigma3": s3}, cycles=_sphere_cycles(system))


def _check_distinct(pts: Sequence[complex], tol: float = 1e-8):
    for p, q in itertools.combinations(pts, 2):
        if abs(p - q) <= tol * max(1.0, abs(p), abs(q)):
            raise CatalogError(f"repeated ends {p} and {q}")


def _sphere_cycles(system: OmegaSystem) -> tuple:
    """Small circles around each finite end; on the sphere every cycle is a sum of these."""
    pts = system.ends.points
    out = []
    for p in pts:
        if is_inf(p):
            continue
        rad = extraction_radius(system.frame, p, [q for q in pts if q is not p])
        out.append(Cycle("circle", complex(p), rad, f"around {p:.6g}"))
    return tuple(out)


# ---------------------------------------------------------------------------
# projective planes


def gamma_poly(c1: float, c2: float, c3: float) -> float:
    return (c1 * c1 + 3) * (c2 * c2 + 3) * (c3 * c3 + 3) - 32 * (c1 * c2 * c3 + 1)


def cube_rotations() -> list[tuple[tuple[int, int, int], tuple[int, int, int]]]:
    """The 24 maps c -> (s_k c_perm(k)): permutations times sign patterns with an even number of flips."""
    signs = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    return [(p, s) for p in itertools.permutations(range(3)) for s in signs]


def stabilizer(c: Sequence[float], tol: float = 1e-9) -> list:
    c = np.asarray(c, dtype=float)
    out = []
    for perm, sgn in cube_rotations():
        image = np.array([sgn[k] * c[perm[k]] for k in range(3)])
        if np.max(np.abs(image - c)) <= tol:
            out.append((perm, sgn))
    return out


def symmetry_name(order: int) -> str:
    names = {1: "trivial", 2: "Z2", 3: "Z3", 4: "Z2xZ2", 6: "D3", 8: "D4", 24: "S4"}
    return names.get(order, f"order {order}")


def in_fundamental_tetrahedron(c: Sequence[float], tol: float = 1e-12) -> bool:
    c1, c2, c3 = c
    return c1 >= c2 - tol and c2 >= abs(c3) - tol and abs(c3) >= 0 and max(abs(c1), abs(c2), abs(c3)) < 1


def d3_point() -> float:
    """c in (0, 1) with (c, c, -c) on the variety."""
    return brentq(lambda t: gamma_poly(t, t, -t), 0.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)


def solve_c3(c1: float, c2: float) -> float:
    """The c3 with (c1, c2, c3) on the variety and |c3| <= c2 (quadratic in c3)."""
    alpha = (c1 * c1 + 3) * (c2 * c2 + 3)
    roots = np.roots([alpha, -32 * c1 * c2, 3 * alpha - 32])
    real = [float(r.real) for r in roots if abs(r.imag) < 1e-12 and abs(r.real) <= c2 + 1e-12]
    if not real:
        raise CatalogError(f"no c3 with |c3| <= c2 puts ({c1}, {c2}, .) on the variety")
    return max(real)


def projective_plane_ends(c1: float, c2: float, c3: float) -> list:
    """Ends {a1, I(a1), a2, I(a2), 0, inf} on the double cover, from the three direction cosines.

    |a1|, |a2| and Re(a1 conj(a2)) are fixed by the cosines; the product
    normalisation a1 I(a1) a2 I(a2) = 1 forces arg a1 = -arg a2, so
    a1 = gamma r1, a2 = conj(gamma) r2 with gamma^2 read off from a1 conj(a2).
    """
    x2 = 1 - c1 * c1 - c2 * c2 - c3 * c3 + 2 * c1 * c2 * c3
    if x2 < -1e-12:
        raise CatalogError(f"x^2 = {x2:.3e} < 0: cosines are not realised by three points")
    r1 = math.sqrt((1 - c1) / (1 + c1))
    r2 = math.sqrt((1 - c2) / (1 + c2))
    re = (c3 - c1 * c2) / ((1 + c1) * (1 + c2))
    im = math.sqrt(max(r1 * r1 * r2 * r2 - re * re, 0.0))
    gamma = cmath.sqrt(complex(re, im) / (r1 * r2))
    a1, a2 = gamma * r1, gamma.conjugate() * r2
    inv = lambda z: -1 / z.conjugate()
    pts = [a1, inv(a1), a2, inv(a2)]
    _check_distinct(pts + [0j])
    return pts + [0j, INF]


def projective_plane_3_ends(c1: float, c2: float, c3: float, tol: float = 1e-10) -> SurfaceSpec:
    c = (float(c1), float(c2), float(c3))
    if abs(gamma_poly(*c)) > tol * 64:
        raise CatalogError(f"{c} is off the variety (residual {gamma_poly(*c):.3e})")
    if not in_fundamental_tetrahedron(c):
        raise CatalogError(f"{c} is outside c1 >= c2 >= |c3| >= 0")
    ends = projective_plane_ends(*c)
    system = omega_sphere(ends)
    s1, s2, s3 = sigmas_from_ends(ends[:4])
    root_i = cmath.sqrt(1j)
    if abs(s2) > 1e-9:
        b, cc = sphere6_kernel_tables(s1, s2, s3)
        z = Polynomial([0, 1])
        quartic = Polynomial([1.0, -s3, -s2, -s1, 1.0])
        k1 = root_i * _sphere_coefficients(Polynomial(b), z * quartic, system)
        k2 = root_i * _sphere_coefficients(z * Polynomial(cc), quartic, system)
        how = "tabulated kernel sections"
    else:
        k1, k2 = _compatible_from_kernel(system, antipodal())
        how = "kernel section and its reflection"
    order = len(stabilizer(c))
    return SurfaceSpec("projective-plane-3", "three-ended projective plane", system, k1, k2,
                       {"c1": c[0], "c2": c[1], "c3": c[2], "sigma1": s1, "sigma2": s2, "sigma3": s3,
                        "stabilizer_order": order},
                       symmetry=symmetry_name(order), involution="antipodal", cycles=_sphere_cycles(system),
                       notes={"pair": how})


def _compatible_from_kernel(system: OmegaSystem, inv: Involution) -> tuple[np.ndarray, np.ndarray]:
    """A pair (s, -i conj(I^* s)) with s in K; used where the tabulated sections degenerate."""
    from .omega import extract_K

    K = extract_K(system)
    if K.dim < 2:
        raise CatalogError("kernel too small for a compatible pair")
    for k in range(K.dim):
        v = K.vectors[:, k]
        s = system.section(v)
        image = conj_pullback(s, inv).scaled(-1j)
        w = fit_coefficients(system, image)
        M = np.stack([v, w], axis=1)
        if np.linalg.matrix_rank(M, tol=1e-8 * np.linalg.norm(M)) == 2:
            return v, w
    raise CatalogError("every kernel section is fixed by the reflection")


def fit_coefficients(system: OmegaSystem, section: SpinorSection, n: int = 96, seed: int = 3) -> np.ndarray:
    """Coordinates of ``section`` in the system basis by least squares at sample points."""
    rng = np.random.default_rng(seed)
    u = sample_points(system.frame, n, list(system.ends.points), rng, margin=0.1)
    B = np.array([b(u) for b in system.basis]).T
    coef, *_ = np.linalg.lstsq(B, section(u), rcond=None)
    return coef


# ---------------------------------------------------------------------------
# the limiting Moebius strip


@dataclass(frozen=True)
class MoebiusDatum:
    pair: SpinorPair
    involution: Involution


def moebius_strip_datum() -> MoebiusDatum:
    frame = Frame("sphere")
    ri = cmath.sqrt(1j)
    s1 = SpinorSection(frame, lambda w: ri * (-(w + 1) / w ** 2), ((0j, 2),), "s1")
    s2 = SpinorSection(frame, lambda w: ri * (w - 1), ((INF, 2),), "s2")
    return MoebiusDatum(SpinorPair(s1, s2), antipodal())


def total_curvature_sphere(pair: SpinorPair, n_radial: int = 400, n_angular: int = 256) -> float:
    """Integral of the Gauss curvature form -4|g'|^2/(1+|g|^2)^2 dx dy over the whole plane.

    The plane is compactified by z = tan(psi/2) e^{i theta}; Gauss-Legendre in
    psi and the trapezoid rule in theta.
    """
    def g(z):
        return pair.s2(z) / pair.s1(z)

    x, w = np.polynomial.legendre.leggauss(n_radial)
    psi = (x + 1) * np.pi / 2
    wpsi = w * np.pi / 2
    theta = np.arange(n_angular) * 2 * np.pi / n_angular
    R = np.tan(psi / 2)
    # dx dy = R dR dtheta, dR = sec^2(psi/2)/2 dpsi
    jac = R / (2 * np.cos(psi / 2) ** 2)
    Z = R[:, None] * np.exp(1j * theta[None, :])
    h = 1e-4 * np.maximum(np.abs(Z), 1e-2)
    with np.errstate(all="ignore"):
        dg = sum((1j ** -k) * g(Z + h * 1j ** k) for k in range(4)) / (4 * h)
        gz = g(Z)
        dens = 4 * np.abs(dg) ** 2 / (1 + np.abs(gz) ** 2) ** 2
        # |g| huge: rewrite with 1/g to keep the density finite
        big = ~np.isfinite(dens) | (np.abs(gz) > 1e8)
        if np.any(big):
            ginv = lambda z: pair.s1(z) / pair.s2(z)
            dgi = sum((1j ** -k) * ginv(Z + h * 1j ** k) for k in range(4)) / (4 * h)
            dens_inv = 4 * np.abs(dgi) ** 2 / (1 + np.abs(ginv(Z)) ** 2) ** 2
            dens = np.where(big, dens_inv, dens)
    dens = np.nan_to_num(dens)
    return float(-np.sum(dens * (jac * wpsi)[:, None]) * (2 * np.pi / n_angular))


# ---------------------------------------------------------------------------
# four-ended tori


HAT_MATRIX = np.array([[1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)


def torus_ends(ctx: ell.EllipticContext) -> list:
    return [0j, complex(ctx.omega1), complex(ctx.omega2), complex(ctx.omega3)]


def torus_hat_sections(system: OmegaSystem) -> list[np.ndarray]:
    """Coordinates of the diagonalising combinations t_i - t_j - t_k in the basis (phi0, t1, t2, t3)."""
    out = []
    for row in HAT_MATRIX:
        out.append(np.concatenate([[0.0], row]).astype(complex))
    return out


def torus_period_closed_form(ctx: ell.EllipticContext, i: int, k: int) -> complex:
    """Integral of the square of the i-th diagonal section over the curve parallel to 2 omega_k."""
    return -8 * (ctx.eta(k) + ctx.half_period(k) * ctx.e(i))


def torus_B_matrix(ctx: ell.EllipticContext) -> np.ndarray:
    A = np.array([[ctx.eta1, ctx.omega1], [ctx.eta3, ctx.omega3]], dtype=complex)
    return np.linalg.solve(A, np.conj(A))


def torus_x_squares(ctx: ell.EllipticContext, choice: tuple[int, int, int]) -> tuple[complex, complex]:
    i, j, k = choice
    B = torus_B_matrix(ctx)
    rhs = B @ np.array([1.0, np.conj(ctx.e(k))])
    M = np.array([[1.0, 1.0], [ctx.e(i), ctx.e(j)]], dtype=complex)
    xi2, xj2 = np.linalg.solve(M, rhs)
    return complex(xi2), complex(xj2)


def torus_branch_value(ctx: ell.EllipticContext, k: int) -> complex:
    """(g2/2 - 3 e_k^2, -3 e_k) B (1, conj e_k); zero is necessary for a branch point."""
    B = torus_B_matrix(ctx)
    ek = ctx.e(k)
    return complex(np.array([ctx.g2 / 2 - 3 * ek * ek, -3 * ek]) @ B @ np.array([1.0, np.conj(ek)]))


def torus_4_ends(ctx: ell.EllipticContext, choice: tuple[int, int, int] = (1, 2, 3),
                 branch_tol: float = 1e-8) -> SurfaceSpec:
    i, j, k = choice
    if sorted(choice) != [1, 2, 3]:
        raise CatalogError(f"{choice} is not a permutation of (1, 2, 3)")
    system = omega_twisted_torus(ctx, torus_ends(ctx))
    hats = torus_hat_sections(system)
    xi2, xj2 = torus_x_squares(ctx, choice)
    # either square root works: a sign flip of x_i or x_j is absorbed by the group action
    xi, xj = cmath.sqrt(xi2), cmath.sqrt(xj2)
    c1 = xi * hats[i - 1] + xj * hats[j - 1]
    c2 = hats[k - 1].copy()
    bv = torus_branch_value(ctx, k)
    bscale = abs(ctx.g2) + abs(ctx.e(k)) ** 2 + 1e-300
    if abs(bv) <= branch_tol * bscale:
        raise BranchConditionError(f"branch condition vanishes ({abs(bv):.3e}); the surface would branch")
    cycles = torus_cycles(system.frame, system.ends.points)
    return SurfaceSpec("torus-4", "four-ended twisted torus", system, c1, c2,
                       {"tau": ctx.lattice.tau, "choice": list(choice), "x_i": xi, "x_j": xj,
                        "branch_value": bv, "branch_value_normalised": abs(bv) / bscale},
                       cycles=cycles)


def fundamental_region_taus(n: int, seed: int = 11, im_max: float = 2.5) -> list[complex]:
    """Points of |tau| >= 1, |Re tau| <= 1/2, Im tau <= im_max (rejection sampling)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        t = complex(rng.uniform(-0.5, 0.5), rng.uniform(math.sqrt(3) / 2, im_max))
        if abs(t) >= 1:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# the Klein bottle


@dataclass(frozen=True)
class KleinData:
    ctx: ell.EllipticContext
    r: complex
    a: complex
    reps: tuple
    W: np.ndarray
    c1: np.ndarray
    c2: np.ndarray


KLEIN_M = -2 * (1 - 4 * math.sqrt(2) * 1j) / 3


def klein_closed_forms(r: complex) -> dict:
    r2 = r * r
    return {"A": -32 * r2 * (r2 * r2 + 4 * r2 + 1) / 3, "B": 4 * r * (r2 + 1) ** 3,
            "C": -2 * (r2 * r2 - 1) ** 2, "D": 0j}


def klein_W_display(r: complex) -> np.ndarray:
    r2 = r * r
    return np.array([
        [(r2 + 1) / (r * (r2 - 1)), 4 * r / (r2 + 1), 2 / r, 4 * r / (r2 - 1)],
        [-4 * r / (r2 + 1), r * (r2 + 1) / (r2 - 1), 4 * r / (r2 - 1), -2 * r],
        [-2 / r, -4 * r / (r2 - 1), -(r2 + 1) / (r * (r2 - 1)), -4 * r / (r2 + 1)],
        [-4 * r / (r2 - 1), 2 * r, 4 * r / (r2 + 1), -r * (r2 + 1) / (r2 - 1)],
    ])


def klein_kernel_vectors(r: complex) -> tuple[np.ndarray, np.ndarray]:
    r2 = r * r
    c1 = np.array([2 * (r2 - 1) ** 2, (r2 + 1) * (r2 - 3), (r2 + 1) * (3 * r2 - 1), -2 * (r2 - 1) ** 2])
    c2 = np.array([(r2 + 1) * (3 * r2 - 1), -2 * (r2 - 1) ** 2, 2 * (r2 - 1) ** 2, (r2 + 1) * (r2 - 3)])
    return c1, c2


def klein_end(ctx: ell.EllipticContext, r: complex) -> complex:
    """The end a with wp(a) = r on the line Re a = omega1 / 2 (so that I(a) = -a)."""
    w1, w3 = ctx.omega1, ctx.omega3
    ys = np.linspace(-1.0, 1.0, 4001)[1:-1] * abs(w3)
    vals = np.abs(np.asarray(ell.wp(ctx, w1 / 2 + 1j * ys)) - r)
    a = complex(w1 / 2 + 1j * ys[int(np.argmin(vals))])
    for _ in range(50):
        p, dp = ell.wp_and_prime(ctx, a)
        step = complex((p - r) / dp)
        a -= step
        if abs(step) < 1e-15 * abs(w1):
            break
    return a


def klein_data() -> KleinData:
    lat, _ = ell.square_lattice_normalized()
    ctx = ell.make_context(lat)
    r = fourth_quadrant_root(KLEIN_M)
    a = klein_end(ctx, r)
    # omega1 + omega3 and -omega1 - omega3 agree modulo the lattice
    w2 = complex(-ctx.omega1 - ctx.omega3)
    reps = (a, a + w2, -1j * a, -1j * a + w2)
    system = omega_untwisted_torus(ctx, 2, list(reps) + [-p for p in reps], paired=True)
    c1, c2 = klein_kernel_vectors(r)
    return KleinData(ctx, r, a, reps, system.meta["W"], c1, c2)


def klein_period_matrix(system: OmegaSystem, cs: Sequence[np.ndarray], k: int, offset: complex = 0j,
                        tol: float = 1e-12) -> np.ndarray:
    """Integrals of s_a s_b over t -> offset + t * 2 omega_k, t in [-1/2, 1/2]."""
    frame = system.frame
    ctx = frame.ctx
    w = 2 * ctx.half_period(k)
    secs = [system.section(c) for c in cs]

    def fn(z):
        vals = [s(z) for s in secs]
        rho = frame.rho(z)
        return np.stack([vals[a] * vals[b] * rho for a in range(len(secs)) for b in range(len(secs))])

    tot, _ = integrate_curve(fn, lambda t: offset - w / 2 + t * w, lambda t: np.full(np.shape(t), w, dtype=complex),
                             tol=tol)
    n = len(secs)
    return np.asarray(tot).reshape(n, n)


def klein_bottle_4_ends(root_index: int | None = None) -> SurfaceSpec:
    kd = klein_data()
    ctx, r = kd.ctx, kd.r
    system = omega_untwisted_torus(ctx, 2, list(kd.reps) + [-p for p in kd.reps], paired=True)
    z4 = np.zeros(4)
    e1 = np.concatenate([kd.c1, z4]).astype(complex)
    e2 = np.concatenate([kd.c2, z4]).astype(complex)
    P1 = klein_period_matrix(system, [e1, e2], 1)
    P3 = klein_period_matrix(system, [e1, e2], 3)
    A_mat = np.array([[ctx.eta1, ctx.omega1], [ctx.eta3, ctx.omega3]], dtype=complex)
    # each even section squared has double poles at both a and -a, which doubles the
    # coefficient sums relative to a four-term decomposition
    A_q, B_q = np.linalg.solve(A_mat, np.array([P1[0, 0], P3[0, 0]]) / 2)
    C_q, D_q = np.linalg.solve(A_mat, np.array([P1[0, 1], P3[0, 1]]) / 2)
    roots = np.roots([P1[0, 0], 2 * P1[0, 1], P1[1, 1]])
    inv = torus_glide(ctx)
    order = range(len(roots)) if root_index is None else [root_index]
    last_err = None
    for idx in order:
        ratio = complex(roots[idx])
        c1 = ratio * e1 + e2
        s1 = system.section(c1)
        s2 = conj_pullback(s1, inv).scaled(-1j)
        c2 = fit_coefficients(system, s2)
        spec = SurfaceSpec(
            "klein-bottle-4", "four-ended Klein bottle", system, c1, c2,
            {"r": r, "m": KLEIN_M, "a": kd.a, "x1_over_x2": ratio, "root_index": idx,
             "A_quadrature": complex(A_q), "B_quadrature": complex(B_q),
             "C_quadrature": complex(C_q), "D_quadrature": complex(D_q),
             "det_W": complex(np.linalg.det(kd.W))},
            involution="glide", cycles=torus_cycles(system.frame, system.ends.points))
        if root_index is not None:
            return spec
        scan = unbranched_scan(spec.pair)
        if not scan.candidates:
            return spec
        last_err = f"root {idx}: {len(scan.candidates)} common zeros"
    raise BranchConditionError(f"no unbranched root of the period quadratic ({last_err})")


# ---------------------------------------------------------------------------
# branch points


@dataclass(frozen=True)
class Chart:
    name: str
    g1: Callable
    g2: Callable
    box: tuple[complex, complex]  # corner, opposite corner as a + b i
    special: tuple = ()  # points where the chart value is singular; handled by winding numbers
    to_domain: Callable = lambda x: x


@dataclass(frozen=True)
class BranchScan:
    zeros: tuple  # zeros of s1 (domain coordinates) with multiplicity
    candidates: tuple  # zeros of s1 where s2 also vanishes
    unresolved: tuple
    expected_zero_count: int | None
    found_zero_count: int

    @property
    def complete(self) -> bool:
        return self.expected_zero_count is None or self.expected_zero_count == self.found_zero_count

    @property
    def unbranched(self) -> bool:
        return not self.candidates and not self.unresolved


def _charts(pair: SpinorPair) -> list[Chart]:
    fr = pair.frame
    s1, s2 = pair.s1, pair.s2
    if fr.kind == "sphere":
        inner = Chart("z", s1, s2, (-1.0 - 1.0j, 1.0 + 1.0j), (), lambda x: x)
        outer = Chart("w", lambda w: 1j * s1(1 / w) / w, lambda w: 1j * s2(1 / w) / w,
                      (-1.0 - 1.0j, 1.0 + 1.0j), (0j,), lambda w: INF if w == 0 else 1 / w)
        return [inner, outer]
    w1, w3 = fr.ctx.omega1, fr.ctx.omega3
    lo = complex(-w1 - w3)
    hi = complex(w1 + w3)
    if fr.kind == "twisted":
        return [Chart("u", s1, s2, (lo, hi))]
    g1 = lambda u: s1(u) * fr.sqrt_rho(u)
    g2 = lambda u: s2(u) * fr.sqrt_rho(u)
    return [Chart("u", g1, g2, (lo, hi), tuple(fr.singular_points()))]


def _safe(g: Callable, z):
    with np.errstate(all="ignore"):
        try:
            return np.asarray(g(z), dtype=complex)
        except (ell.PoleError, ZeroDivisionError, FloatingPointError):
            z = np.asarray(z, dtype=complex)
            out = np.empty(z.shape, dtype=complex)
            flat = z.ravel()
            for n, x in enumerate(flat):
                try:
                    out.flat[n] = complex(g(np.asarray(x)))
                except (ell.PoleError, ZeroDivisionError, FloatingPointError):
                    out.flat[n] = complex(np.nan, np.nan)
            return out


def _winding(g: Callable, center: complex, radius: float, n: int = 256) -> int:
    z = center + radius * np.exp(2j * np.pi * np.arange(n) / n)
    v = _safe(g, z)
    ang = np.unwrap(np.angle(np.concatenate([v, v[:1]])))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def _pole_orders(pair: SpinorPair, which: int) -> int:
    """Sum of actual pole orders of s1 (or s2) over its declared poles, from contour data."""
    from .spin import laurent_extract

    s = pair.s1 if which == 1 else pair.s2
    total = 0
    for p, _ in s.poles:
        L = laurent_extract(s, p, kmin=-4, kmax=2)
        total += max(0, -L.order())
    return total


def unbranched_scan(pair: SpinorPair, grid: int = 48, rel_tol: float = 1e-6) -> BranchScan:
    """Zeros of s1 by Newton from grid minima of |s1|, then a test of |s2| at each."""
    fr = pair.frame
    found: list[tuple[complex, int]] = []
    candidates, unresolved = [], []
    for chart in _charts(pair):
        (lo, hi) = chart.box
        # offset the grid so no node lands on a lattice point or half period
        xs = np.linspace(0, 1, grid) + 0.5 / (grid * math.pi)
        ys = np.linspace(0, 1, grid) + 0.5 / (grid * math.e)
        if fr.is_torus:
            w1, w3 = fr.ctx.omega1, fr.ctx.omega3
            Z = -w1 - w3 + 2 * xs[None, :] * w1 + 2 * ys[:, None] * w3
            span = float(min(abs(w1), abs(w3)))
        else:
            Z = lo.real + (hi.real - lo.real) * xs[None, :] + 1j * (lo.imag + (hi.imag - lo.imag) * ys[:, None])
            span = 1.0
        V1 = np.abs(_safe(chart.g1, Z))
        V2 = np.abs(_safe(chart.g2, Z))
        finite = np.isfinite(V1)
        med1 = float(np.median(V1[finite])) if np.any(finite) else 1.0
        med2 = float(np.median(V2[np.isfinite(V2)])) if np.any(np.isfinite(V2)) else 1.0
        h = 1e-6 * span
        starts = []
        for a in range(1, grid - 1):
            for b in range(1, grid - 1):
                v = V1[a, b]
                if not np.isfinite(v):
                    continue
                nb = V1[a - 1:a + 2, b - 1:b + 2]
                if v <= np.nanmin(nb) and v < 0.5 * med1:
                    starts.append(complex(Z[a, b]))
        guard = 1e-3 * span
        for z in starts:
            ok = False
            for _ in range(60):
                if any(abs(z - s) < guard for s in chart.special):
                    break
                g = complex(_safe(chart.g1, np.array([z]))[0])
                d = complex((_safe(chart.g1, np.array([z + h]))[0] - _safe(chart.g1, np.array([z - h]))[0]) / (2 * h))
                if not (np.isfinite(g) and np.isfinite(d)) or d == 0:
                    break
                step = g / d
                z -= step
                if abs(step) < 1e-13 * span:
                    ok = True
                    break
            if any(abs(z - s) < guard for s in chart.special):
                continue
            if not ok:
                gz = complex(_safe(chart.g1, np.array([z]))[0])
                if np.isfinite(gz) and abs(gz) < 1e-6 * med1:
                    ok = True  # a multiple zero: Newton converges slowly
                else:
                    if abs(_safe(chart.g1, np.array([z]))[0]) < 1e-3 * med1:
                        unresolved.append(chart.to_domain(z))
                    continue
            if not _in_chart(fr, chart, z):
                continue
            dom = chart.to_domain(z)
            if any(_same_point(fr, dom, q) for q, _ in found):
                continue
            mult = max(1, _winding(chart.g1, z, 1e-4 * span))
            found.append((dom, mult))
            g2 = abs(complex(_safe(chart.g2, np.array([z]))[0]))
            if g2 <= rel_tol * med2:
                candidates.append(dom)
        for s in chart.special:
            m1 = _winding(chart.g1, s, guard)
            if m1 > 0:
                dom = chart.to_domain(s)
                if any(_same_point(fr, dom, q) for q, _ in found):
                    continue
                found.append((dom, m1))
                if _winding(chart.g2, s, guard) > 0:
                    candidates.append(dom)
    try:
        poles = _pole_orders(pair, 1)
        # a section of degree -1 on the sphere, degree 0 on a torus
        expected = poles - 1 if fr.kind == "sphere" else poles
    except Exception:  # noqa: BLE001 - completeness is advisory
        expected = None
    count = sum(m for _, m in found)
    return BranchScan(tuple(found), tuple(candidates), tuple(unresolved), expected, count)


def _in_chart(fr: Frame, chart: Chart, z: complex) -> bool:
    if fr.kind == "sphere":
        return abs(z) <= 1.0 if chart.name == "z" else abs(z) < 1.0
    return True


def _same_point(fr: Frame, p, q, tol: float = 1e-7) -> bool:
    if is_inf(p) or is_inf(q):
        return is_inf(p) and is_inf(q)
    if fr.kind == "sphere":
        return abs(p - q) <= tol * max(1.0, abs(p))
    return fr.distance(p, q) <= tol * fr.scale


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    builder: Callable


def _default_projective() -> SurfaceSpec:
    c = 0.7
    return projective_plane_3_ends(c, c, solve_c3(c, c))


def _default_torus() -> SurfaceSpec:
    return torus_4_ends(ell.make_context(ell.Lattice.from_tau(complex(0.2, 1.1))))


CATALOG = {
    "sphere-4": CatalogEntry("sphere-4", "sphere, 4 ends at a, 1/a, 0, inf with a = (sqrt3 + i)/2", sphere_4_ends),
    "sphere-6": CatalogEntry("sphere-6", "sphere, 6 ends on the pfaffian variety (default sigma = 1, 1)",
                             lambda: sphere_6_ends(1.0, 1.0)),
    "projective-plane-3": CatalogEntry("projective-plane-3",
                                       "projective plane, 3 ends; boundary point c1 = c2 = 0.7",
                                       _default_projective),
    "torus-4": CatalogEntry("torus-4", "twisted torus, 4 ends at the half periods (default tau = 0.2 + 1.1i)",
                            _default_torus),
    "klein-bottle-4": CatalogEntry("klein-bottle-4", "Klein bottle, 4 ends, square lattice", klein_bottle_4_ends),
}
