"""Dense complex linear algebra: Pfaffians, numerical rank/kernel, biquadratic roots."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

EPS_SKEW = 1e-10
MAX_PFAFFIAN_DIM = 16


class SkewnessError(ValueError):
    pass


class AmbiguousRankError(ValueError):
    """Raised when the singular values show no clear gap at the threshold."""

    def __init__(self, candidates: tuple[int, int], values: np.ndarray):
        self.candidates = candidates
        self.values = values
        super().__init__(f"ambiguous rank: candidates {candidates[0]} and {candidates[1]}")


@dataclass(frozen=True)
class KernelBasis:
    dim: int
    vectors: np.ndarray  # shape (n, dim), orthonormal columns
    rank_threshold: float


def as_complex_matrix(entries, skew: bool = False) -> np.ndarray:
    A = np.array(entries, dtype=complex)
    if A.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    if skew:
        check_skew(A)
    return A


def skew_defect(A: np.ndarray) -> float:
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(A + A.T)) / scale)


def check_skew(A: np.ndarray, eps: float = EPS_SKEW, atol: float = 0.0) -> None:
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix is not square: {A.shape}")
    if A.size and np.max(np.abs(A + A.T)) <= atol:
        return
    d = skew_defect(A)
    if d > eps:
        raise SkewnessError(f"skewness violation {d:.3e} exceeds {eps:.1e}")


def pfaffian(A, atol: float = 0.0) -> complex:
    """Pfaffian by expansion along the first row.

    Sub-Pfaffians are memoised on the set of remaining indices, so the
    expansion visits each even subset once instead of all (n-1)!! terms.
    """
    A = as_complex_matrix(A)
    check_skew(A, atol=atol)
    n = A.shape[0]
    if n % 2:
        return 0j
    if n > MAX_PFAFFIAN_DIM:
        raise ValueError(f"dimension {n} exceeds {MAX_PFAFFIAN_DIM}")
    entries = A.tolist()

    @lru_cache(maxsize=None)
    def pf(idx: tuple[int, ...]) -> complex:
        if not idx:
            return 1.0 + 0j
        first, rest = idx[0], idx[1:]
        row = entries[first]
        total = 0j
        for k, j in enumerate(rest):
            a = row[j]
            if a == 0:
                continue
            sign = -1.0 if k % 2 else 1.0
            total += sign * a * pf(rest[:k] + rest[k + 1:])
        return total

    return complex(pf(tuple(range(n))))


def det_elimination(A) -> complex:
    """Determinant by Gaussian elimination with partial pivoting."""
    M = np.array(A, dtype=complex)
    n = M.shape[0]
    det = 1.0 + 0j
    for k in range(n):
        p = k + int(np.argmax(np.abs(M[k:, k])))
        if M[p, k] == 0:
            return 0j
        if p != k:
            M[[k, p]] = M[[p, k]]
            det = -det
        det *= M[k, k]
        M[k + 1:, k:] -= np.outer(M[k + 1:, k] / M[k, k], M[k, k:])
    return det


def rank_kernel(A, threshold_scale: float = 1e-8, atol: float = 0.0) -> tuple[int, KernelBasis]:
    """Numerical rank and an orthonormal basis of the right null space.

    Singular values are the decision values: those above
    ``max(threshold_scale * max|A|, atol)`` count toward the rank.
    """
    if threshold_scale <= 0:
        raise ValueError("threshold_scale must be positive")
    A = as_complex_matrix(A)
    m, n = A.shape
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    if scale <= atol:
        return 0, KernelBasis(n, np.eye(n, dtype=complex), max(atol, 0.0))
    _, s, vh = np.linalg.svd(A)
    thresh = max(threshold_scale * scale, atol)
    r = int(np.sum(s > thresh))
    if 0 < r < len(s) and s[r - 1] < 10.0 * s[r]:
        raise AmbiguousRankError((r - 1, r), s)
    if m == n and r % 2 and np.max(np.abs(A + A.T)) <= EPS_SKEW * scale:
        raise AmbiguousRankError((r - 1, r + 1), s)
    null = vh[r:].conj().T
    return r, KernelBasis(n - r, null, thresh)


def subspace_angle(U: np.ndarray, V: np.ndarray) -> float:
    """Largest principal angle between the column spans of U and V."""
    qu, _ = np.linalg.qr(np.asarray(U, dtype=complex))
    qv, _ = np.linalg.qr(np.asarray(V, dtype=complex))
    if qu.shape[1] != qv.shape[1]:
        return np.pi / 2
    # sine form: arccos of cosines loses half the digits near zero
    resid = qv - qu @ (qu.conj().T @ qv)
    s = np.linalg.svd(resid, compute_uv=False)
    return float(np.arcsin(np.clip(np.max(s), 0.0, 1.0)))


@dataclass(frozen=True)
class BiquadraticRoots:
    roots: tuple[complex, complex, complex, complex]
    degenerate: bool


def quartic_biquadratic_roots(m: complex) -> BiquadraticRoots:
    """Roots of r^4 + m r^2 + 1 through the quadratic in r^2."""
    m = complex(m)
    if not np.isfinite(m):
        raise ValueError("m must be finite")
    disc = np.sqrt(m * m - 4)
    # pick the larger root first and use the product w1 w2 = 1 for the other
    w1 = (-m - disc) / 2 if abs(-m - disc) >= abs(-m + disc) else (-m + disc) / 2
    w2 = 1 / w1
    r1, r2 = np.sqrt(w1), np.sqrt(w2)
    roots = (complex(r1), complex(-r1), complex(r2), complex(-r2))
    degenerate = abs(disc) <= 1e-12 * (1 + abs(m))
    return BiquadraticRoots(roots, degenerate)


def fourth_quadrant_root(m: complex) -> complex:
    cands = [r for r in quartic_biquadratic_roots(m).roots if r.real > 0 and r.imag < 0]
    if len(cands) != 1:
        raise ValueError(f"expected one fourth-quadrant root, found {len(cands)}")
    return cands[0]
