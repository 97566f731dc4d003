"""The skew form Omega on sections with simple poles at the ends, and its kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import elliptic as ell
from .linalg import check_skew, pfaffian, rank_kernel
from .spin import (
    INF,
    Frame,
    SpinorSection,
    combine,
    is_inf,
    laurent_extract,
    extraction_radius,
)


class KernelConsistencyError(RuntimeError):
    """The matrix kernel contains a section whose constant terms do not vanish."""


@dataclass(frozen=True)
class EndDivisor:
    frame: Frame
    points: tuple

    def __post_init__(self):
        pts = tuple(INF if is_inf(complex(p)) else complex(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.frame.kind != "sphere" and any(is_inf(p) for p in pts):
            raise ValueError("infinity is not a point of the torus")
        for i, p in enumerate(pts):
            for q in pts[i + 1:]:
                if self.frame.distance(p, q) < 1e-10:
                    raise ValueError(f"coincident ends {p} and {q}")
        if self.frame.kind == "untwisted":
            for p in pts:
                for s in self.frame.singular_points():
                    if self.frame.distance(p, s) < 1e-10:
                        raise ValueError(f"end {p} sits on a zero or pole of the reference differential")

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class OmegaSystem:
    ends: EndDivisor
    basis: tuple  # SpinorSection, a basis of sections with at most simple poles at the ends
    matrix: np.ndarray
    H_dim: int
    labels: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def frame(self) -> Frame:
        return self.ends.frame

    def pfaffian(self) -> complex:
        return pfaffian(self.matrix, atol=self.meta.get("scale", 0.0) * 1e-12)

    def section(self, coeffs, name: str = "") -> SpinorSection:
        return combine(self.frame, coeffs, self.basis, name)


# ---------------------------------------------------------------------------
# sphere


def omega_sphere(points: Sequence) -> OmegaSystem:
    """Omega on the sphere.

    With infinity among the ends the basis is phi/(z - a_i) for the finite
    ends followed by phi. Without it, phi/(z - a_i) for every end already
    spans the space (each is regular at infinity), so no Moebius move is
    needed.
    """
    frame = Frame("sphere")
    pts = [INF if is_inf(complex(p)) else complex(p) for p in points]
    if sum(is_inf(p) for p in pts) > 1:
        raise ValueError("coincident ends at infinity")
    has_inf = any(is_inf(p) for p in pts)
    finite = [p for p in pts if not is_inf(p)]
    ordered = finite + ([INF] if has_inf else [])
    ends = EndDivisor(frame, tuple(ordered))
    n = len(ordered)
    if n < 1:
        raise ValueError("need at least one end")

    basis = [_pole_section(frame, a) for a in finite]
    labels = [f"phi/(z-{_fmt(a)})" for a in finite]
    if has_inf:
        basis.append(SpinorSection(frame, lambda z: np.ones_like(np.asarray(z, dtype=complex)), ((INF, 1),), "phi"))
        labels.append("phi")

    M = np.zeros((n, n), dtype=complex)
    m = len(finite)
    for i in range(m):
        for j in range(m):
            if i != j:
                M[i, j] = 1.0 / (finite[j] - finite[i])
    if has_inf:
        M[:m, m] = -1.0
        M[m, :m] = 1.0
    check_skew(M)
    return OmegaSystem(ends, tuple(basis), M, 0, tuple(labels),
                       {"domain": "sphere", "scale": _entry_scale(M, 0.0)})


def _pole_section(frame: Frame, a: complex) -> SpinorSection:
    return SpinorSection(frame, lambda z: 1.0 / (np.asarray(z, dtype=complex) - a), ((a, 1),), f"phi/(z-{_fmt(a)})")


def _fmt(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}i"


# ---------------------------------------------------------------------------
# twisted torus, phi0^2 = du


def omega_twisted_torus(ctx: ell.EllipticContext, points: Sequence) -> OmegaSystem:
    """Basis phi0 and (zeta(u - a_i) - zeta(u - a_0) + zeta(a_i - a_0)) phi0.

    The first end plays the role of the origin; when it is not 0 the basis is
    the translate of the origin-centred one (du is translation invariant).
    """
    frame = Frame("twisted", ctx)
    ends = EndDivisor(frame, tuple(points))
    a0 = ends.points[0]
    shift = a0
    rest = [p for p in ends.points[1:]]
    basis = [SpinorSection(frame, lambda u: np.ones_like(np.asarray(u, dtype=complex)), (), "phi0")]
    labels = ["phi0"]
    for a in rest:
        basis.append(_twisted_section(ctx, frame, a, a0))
        labels.append(f"t[{_fmt(a)}]")
    n = ends.n
    M = np.zeros((n, n), dtype=complex)
    mag = 0.0
    for i, ai in enumerate(rest, start=1):
        for j, aj in enumerate(rest, start=1):
            if i != j:
                terms = (ell.zeta(ctx, aj - ai), -ell.zeta(ctx, aj - a0), ell.zeta(ctx, ai - a0))
                mag = max(mag, *(abs(t) for t in terms))
                M[i, j] = complex(sum(terms))
    scale = _entry_scale(M, mag)
    check_skew(M, atol=scale * 1e-12)
    return OmegaSystem(ends, tuple(basis), M, 1, tuple(labels),
                       {"domain": "torus-twisted", "shift": shift, "scale": scale})


def _entry_scale(M: np.ndarray, term_magnitude: float) -> float:
    """Size of the terms that feed the entries; cancellation below it is rounding."""
    return float(max(np.max(np.abs(M)) if M.size else 0.0, term_magnitude, 1e-300))


def _twisted_section(ctx, frame, a, a0) -> SpinorSection:
    c = complex(ell.zeta(ctx, a - a0))

    def f(u):
        u = np.asarray(u, dtype=complex)
        return np.asarray(ell.zeta(ctx, u - a)) - np.asarray(ell.zeta(ctx, u - a0)) + c

    return SpinorSection(frame, f, ((a, 1), (a0, 1)), f"t[{_fmt(a)}]")


# ---------------------------------------------------------------------------
# untwisted torus, phi_r^2 = du / (wp(u) - e_r)


def omega_untwisted_torus(ctx: ell.EllipticContext, r: int, points: Sequence, paired: bool = False) -> OmegaSystem:
    frame = Frame("untwisted", ctx, r)
    ends = EndDivisor(frame, tuple(points))
    if paired:
        return _untwisted_paired(ctx, frame, ends)
    wr = ctx.half_period(r)
    er = ctx.e(r)
    zr = complex(ell.zeta(ctx, wr))
    basis, labels = [], []
    for a in ends.points:
        basis.append(_untwisted_section(ctx, frame, a, wr, zr))
        labels.append(f"t[{_fmt(a)}]")
    n = ends.n
    pr = [complex(ell.wp(ctx, a)) - er for a in ends.points]
    M = np.zeros((n, n), dtype=complex)
    mag = 0.0
    for i, ai in enumerate(ends.points):
        for j, aj in enumerate(ends.points):
            if i != j:
                terms = (ell.zeta(ctx, aj - ai), -ell.zeta(ctx, aj), -ell.zeta(ctx, wr - ai), zr)
                mag = max(mag, max(abs(t) for t in terms) / abs(pr[j]))
                # the frame contributes rho(a_j) = 1 / wp_r(a_j) to the pairing
                M[i, j] = complex(sum(terms)) / pr[j]
    scale = _entry_scale(M, mag)
    check_skew(M, atol=scale * 1e-12)
    return OmegaSystem(ends, tuple(basis), M, 0, tuple(labels),
                       {"domain": f"torus-untwisted:{r}", "scale": scale})


def _untwisted_section(ctx, frame, a, wr, zr) -> SpinorSection:
    c = complex(-ell.zeta(ctx, wr - a) + zr)

    def f(u):
        u = np.asarray(u, dtype=complex)
        return np.asarray(ell.zeta(ctx, u - a)) - np.asarray(ell.zeta(ctx, u)) + c

    return SpinorSection(frame, f, ((a, 1),), f"t[{_fmt(a)}]")


def pair_representatives(frame: Frame, points: Sequence) -> list[complex]:
    """Split an end set closed under u -> -u into representatives a_i of the pairs {a_i, -a_i}."""
    pts = list(points)
    reps, used = [], [False] * len(pts)
    for i, p in enumerate(pts):
        if used[i]:
            continue
        partner = [j for j in range(len(pts)) if not used[j] and j != i and frame.distance(pts[j], -p) < 1e-9]
        if not partner:
            raise ValueError(f"end {p} has no partner -{p}: end set is not symmetric under u -> -u")
        used[i] = used[partner[0]] = True
        reps.append(p)
    return reps


def paired_W(ctx: ell.EllipticContext, r: int, reps: Sequence[complex]) -> np.ndarray:
    """W_ij = 4/(P_i - P_j) off the diagonal and (P^2 - c_p c_q)/(P (P - c_p)(P - c_q)) on it.

    P_i = wp(a_i) - e_r and c_p, c_q = e_p - e_r, e_q - e_r for the other two indices.
    """
    er = ctx.e(r)
    p_, q_ = [k for k in (1, 2, 3) if k != r]
    cp, cq = ctx.e(p_) - er, ctx.e(q_) - er
    P = np.array([complex(ell.wp(ctx, a)) - er for a in reps])
    m = len(P)
    W = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                W[i, i] = (P[i] ** 2 - cp * cq) / (P[i] * (P[i] - cp) * (P[i] - cq))
            else:
                W[i, j] = 4.0 / (P[i] - P[j])
    return W


def _untwisted_paired(ctx, frame: Frame, ends: EndDivisor) -> OmegaSystem:
    """Even sections wp_r/(wp_r - wp_r(a_i)) phi_r and odd ones -2 wp_r'/(wp_r - wp_r(a_i)) phi_r.

    The factor -2 on the odd block makes the matrix exactly [[0, W], [-W^t, 0]].
    """
    r = frame.r
    er = ctx.e(r)
    reps = pair_representatives(frame, ends.points)
    m = len(reps)
    P = [complex(ell.wp(ctx, a)) - er for a in reps]
    basis, labels = [], []
    for a, Pa in zip(reps, P):
        basis.append(_paired_even(ctx, frame, a, Pa))
        labels.append(f"even[{_fmt(a)}]")
    for a, Pa in zip(reps, P):
        basis.append(_paired_odd(ctx, frame, a, Pa))
        labels.append(f"odd[{_fmt(a)}]")
    W = paired_W(ctx, r, reps)
    M = np.zeros((2 * m, 2 * m), dtype=complex)
    M[:m, m:] = W
    M[m:, :m] = -W.T
    check_skew(M)
    ordered = EndDivisor(frame, tuple(reps) + tuple(-a for a in reps))
    return OmegaSystem(ordered, tuple(basis), M, 0, tuple(labels),
                       {"domain": f"torus-untwisted:{r}", "paired": True, "reps": tuple(reps), "W": W,
                        "scale": _entry_scale(M, 0.0)})


def _paired_even(ctx, frame, a, Pa) -> SpinorSection:
    er = ctx.e(frame.r)

    def f(u):
        p = np.asarray(ell.wp(ctx, np.asarray(u, dtype=complex))) - er
        return p / (p - Pa)

    return SpinorSection(frame, f, ((a, 1), (-a, 1)), f"even[{_fmt(a)}]")


def _paired_odd(ctx, frame, a, Pa) -> SpinorSection:
    er = ctx.e(frame.r)

    def f(u):
        p, dp = ell.wp_and_prime(ctx, np.asarray(u, dtype=complex))
        return -2.0 * np.asarray(dp) / (np.asarray(p) - er - Pa)

    return SpinorSection(frame, f, ((a, 1), (-a, 1)), f"odd[{_fmt(a)}]")


def build_system(domain: str, points: Sequence, ctx: ell.EllipticContext | None = None,
                 paired: bool = False) -> OmegaSystem:
    """Dispatch on a domain tag: sphere, torus-twisted, torus-untwisted:r."""
    if domain == "sphere":
        return omega_sphere(points)
    if ctx is None:
        raise ValueError("torus domains need a lattice")
    if domain == "torus-twisted":
        return omega_twisted_torus(ctx, points)
    if domain.startswith("torus-untwisted:"):
        r = int(domain.split(":")[1])
        return omega_untwisted_torus(ctx, r, points, paired)
    raise ValueError(f"unknown domain {domain!r}")


# ---------------------------------------------------------------------------
# Laurent-level cross-checks


def xi_matrix(system: OmegaSystem) -> np.ndarray:
    """Omega recomputed end by end as sum_p b_{-1}(s_j) a_0(s_i) from contour-extracted coefficients."""
    frame = system.frame
    pts = system.ends.points
    N = len(system.basis)
    am1 = np.zeros((len(pts), N), dtype=complex)
    a0 = np.zeros((len(pts), N), dtype=complex)
    for e, p in enumerate(pts):
        rad = extraction_radius(frame, p, [q for q in pts if q is not p])
        for b, s in enumerate(system.basis):
            L = laurent_extract(s, p, rad)
            am1[e, b], a0[e, b] = L.a_minus1, L.a_0
    return a0.T @ am1


def constant_terms(system: OmegaSystem, coeffs: np.ndarray) -> np.ndarray:
    """Normalised constant terms a_0 of the sections sum_b coeffs[b, k] basis[b] at every end.

    Returns an array (n_ends, k) of |a_0| divided by the largest Laurent
    coefficient magnitude of that section at that end.
    """
    frame = system.frame
    pts = system.ends.points
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex).T).T
    out = np.zeros((len(pts), coeffs.shape[1]))
    for k in range(coeffs.shape[1]):
        s = system.section(coeffs[:, k])
        for e, p in enumerate(pts):
            rad = extraction_radius(frame, p, [q for q in pts if q is not p])
            L = laurent_extract(s, p, rad, kmin=-2, kmax=2)
            scale = max(abs(L.a_minus1), abs(L.a_0), abs(L.a_1), 1e-300)
            out[e, k] = abs(L.a_0) / scale
    return out


def a0_functionals(system: OmegaSystem) -> np.ndarray:
    """Matrix A with A[e, b] = a_0 of basis section b at end e (frame-normalised)."""
    frame = system.frame
    pts = system.ends.points
    A = np.zeros((len(pts), len(system.basis)), dtype=complex)
    for e, p in enumerate(pts):
        rad = extraction_radius(frame, p, [q for q in pts if q is not p])
        for b, s in enumerate(system.basis):
            A[e, b] = laurent_extract(s, p, rad, kmin=-2, kmax=2).a_0
    return A


@dataclass(frozen=True)
class KBasis:
    vectors: np.ndarray  # (len(basis), dim K)
    kernel_dim: int
    a0_residual: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def extract_K(system: OmegaSystem, threshold_scale: float = 1e-8, tol: float = 1e-9) -> KBasis:
    """Kernel of Omega with the holomorphic part split off, checked section by section."""
    atol = threshold_scale * system.meta.get("scale", 0.0)
    rank, ker = rank_kernel(system.matrix, threshold_scale, atol)
    V = ker.vectors
    if V.shape[1] == 0:
        return KBasis(V, 0, 0.0)
    if system.H_dim:
        A = a0_functionals(system) @ V
        _, sub = rank_kernel(A, threshold_scale)
        V = V @ sub.vectors
        if V.shape[1] != ker.dim - system.H_dim:
            raise KernelConsistencyError(
                f"kernel dim {ker.dim} does not split as dim K + {system.H_dim}")
        V, _ = np.linalg.qr(V)
    if V.shape[1] == 0:
        return KBasis(V, ker.dim, 0.0)
    res = float(np.max(constant_terms(system, V)))
    if res > tol:
        raise KernelConsistencyError(f"a0 test failed on a kernel section (residual {res:.2e})")
    return KBasis(V, ker.dim, res)


def solve_end_for_pfaffian(points: Sequence, index: int, seed: complex | None = None,
                           tol: float = 1e-13, max_iter: int = 60) -> list:
    """Move one finite sphere end (damped Newton) until the pfaffian vanishes."""
    pts = [INF if is_inf(complex(p)) else complex(p) for p in points]
    if is_inf(pts[index]):
        raise ValueError("the moving end must be finite")
    if seed is not None:
        pts[index] = complex(seed)

    def pf_at(z):
        q = list(pts)
        q[index] = z
        return omega_sphere(q).pfaffian()

    z = pts[index]
    f = pf_at(z)
    converged = False
    for _ in range(max_iter):
        h = 1e-7 * max(1.0, abs(z))
        df = (pf_at(z + h) - pf_at(z - h)) / (2 * h)
        if df == 0:
            break
        step = f / df
        lam = 1.0
        while lam > 1e-4:
            zn = z - lam * step
            fn = pf_at(zn)
            if abs(fn) < abs(f):
                break
            lam /= 2
        z, f = zn, fn
        if abs(lam * step) <= tol * max(1.0, abs(z)):
            converged = True
            break
    if not converged or not math.isfinite(abs(z)):
        raise RuntimeError(f"Newton from seed {pts[index]} did not converge (|pf| = {abs(f):.3e})")
    pts[index] = z
    return pts
