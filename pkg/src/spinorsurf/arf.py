"""Spin structures on hyperelliptic curves as subsets of branch values.

A curve of genus g branched over 2g + 1 finite values (plus infinity) carries
2^(2g) spin structures, one for each subset B of the branch values with
#B <= g (B and its complement give the same structure).  A Z/2 homology
class is modelled by the even subset C of branch values enclosed by a
representing Jordan curve.  Sums of classes are symmetric differences and
the intersection pairing is #(C1 & C2) mod 2.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class HyperellipticCurve:
    genus: int
    branch_values: tuple

    def __post_init__(self):
        if self.genus < 1:
            raise ValueError("genus must be at least 1")
        if len(self.branch_values) != 2 * self.genus + 1:
            raise ValueError(f"genus {self.genus} needs {2 * self.genus + 1} branch values")
        if len(set(self.branch_values)) != len(self.branch_values):
            raise ValueError("branch values must be distinct")

    @classmethod
    def standard(cls, genus: int) -> "HyperellipticCurve":
        """Branch values labelled 1..2g+1; only their identities matter here."""
        return cls(genus, tuple(range(1, 2 * genus + 2)))

    def complement(self, subset: Iterable) -> frozenset:
        return frozenset(self.branch_values) - frozenset(subset)


@dataclass(frozen=True)
class SpinStructureB:
    curve: HyperellipticCurve
    B: frozenset

    def __post_init__(self):
        B = frozenset(self.B)
        if not B <= frozenset(self.curve.branch_values):
            raise ValueError(f"{sorted(B)} is not a subset of the branch values")
        # canonical representative: the smaller of B and its complement
        if len(B) > self.curve.genus:
            B = self.curve.complement(B)
        object.__setattr__(self, "B", B)

    @property
    def b(self) -> int:
        return len(self.B)


@dataclass(frozen=True)
class HomologyClass:
    C: frozenset

    def __post_init__(self):
        C = frozenset(self.C)
        if len(C) % 2:
            raise ValueError(f"a homology class needs an even subset, got {sorted(C)}")
        object.__setattr__(self, "C", C)

    def __add__(self, other: "HomologyClass") -> "HomologyClass":
        return HomologyClass(self.C ^ other.C)

    def dot(self, other: "HomologyClass") -> int:
        return len(self.C & other.C) % 2


def all_classes(curve: HyperellipticCurve) -> list[HomologyClass]:
    """All 2^(2g) classes; C and its complement in A u {inf} coincide, so even subsets of A suffice."""
    vals = curve.branch_values
    out = []
    for k in range(0, len(vals) + 1, 2):
        out.extend(HomologyClass(frozenset(c)) for c in itertools.combinations(vals, k))
    return out


def all_spin_structures(curve: HyperellipticCurve) -> list[SpinStructureB]:
    vals = curve.branch_values
    return [SpinStructureB(curve, frozenset(c)) for k in range(curve.genus + 1)
            for c in itertools.combinations(vals, k)]


def q_value(spin: SpinStructureB, cls: HomologyClass) -> int:
    return (len(spin.B & cls.C) + len(cls.C) // 2) % 2


def quadratic_refinement_check(spin: SpinStructureB, cls1: HomologyClass, cls2: HomologyClass) -> bool:
    return q_value(spin, cls1 + cls2) == (q_value(spin, cls1) + q_value(spin, cls2) + cls1.dot(cls2)) % 2


def arf_brute_force(spin: SpinStructureB) -> int:
    classes = all_classes(spin.curve)
    total = sum(1 - 2 * q_value(spin, c) for c in classes)
    # sqrt(#H) = 2^g
    value, rem = divmod(total, 2 ** spin.curve.genus)
    if rem or value not in (1, -1):
        raise ArithmeticError(f"sum of signs {total} is not +-2^g")
    return value


def arf_closed_form(spin: SpinStructureB) -> int:
    k = (2 * spin.curve.genus - 2 * spin.b + 1) % 8
    return 1 if k in (1, 7) else -1


class ArfDisagreement(ArithmeticError):
    pass


def arf(spin: SpinStructureB, brute_force_max_genus: int = 10) -> int:
    """The Arf invariant; both routes must agree whenever brute force is affordable."""
    closed = arf_closed_form(spin)
    if spin.curve.genus <= brute_force_max_genus:
        brute = arf_brute_force(spin)
        if brute != closed:
            raise ArfDisagreement(f"brute force {brute} != closed form {closed} for B = {sorted(spin.B)}")
    return closed


def q_vector(spin: SpinStructureB, classes: Sequence[HomologyClass] | None = None) -> tuple[int, ...]:
    classes = all_classes(spin.curve) if classes is None else classes
    return tuple(q_value(spin, c) for c in classes)


@dataclass(frozen=True)
class HomotopyClassification:
    same_immersion_class: bool
    same_surface_class: bool


def regular_homotopy_classify(spin1: SpinStructureB, spin2: SpinStructureB) -> HomotopyClassification:
    if spin1.curve != spin2.curve:
        raise ValueError("spin structures live on different curves")
    return HomotopyClassification(q_vector(spin1) == q_vector(spin2), arf(spin1) == arf(spin2))


@dataclass(frozen=True)
class SpinDivisor:
    """Divisor of the differential f_B(z) dz / w as multiplicities at P_inf and the P_a."""

    at_infinity: int
    at_branch: dict

    @property
    def degree(self) -> int:
        return self.at_infinity + sum(self.at_branch.values())

    def is_even(self) -> bool:
        return self.at_infinity % 2 == 0 and all(v % 2 == 0 for v in self.at_branch.values())


def spin_structure_divisor(spin: SpinStructureB) -> SpinDivisor:
    g = spin.curve.genus
    return SpinDivisor(2 * (g - spin.b - 1), {a: 2 for a in sorted(spin.B)})


# Genus one: the torus C / {2w1, 2w3} maps to w^2 = 4(z - e1)(z - e2)(z - e3)
# through u -> (wp(u), wp'(u)).  A curve parallel to 2w_i projects to a loop
# winding once around the two branch values other than e_i.  The tests
# re-derive this from winding numbers of wp along shifted alpha_i curves.
TORUS_ALPHA_CLASSES = {1: frozenset({2, 3}), 2: frozenset({1, 3}), 3: frozenset({1, 2})}
TORUS_STRUCTURES = {"du": frozenset(), "(wp-e1)du": frozenset({1}),
                    "(wp-e2)du": frozenset({2}), "(wp-e3)du": frozenset({3})}


def torus_table() -> list[tuple[str, tuple[int, int, int, int], int]]:
    """Rows (structure, (q(0), q(alpha1), q(alpha2), q(alpha3)), Arf)."""
    curve = HyperellipticCurve(1, (1, 2, 3))
    rows = []
    for name, B in TORUS_STRUCTURES.items():
        spin = SpinStructureB(curve, B)
        qs = [q_value(spin, HomologyClass(frozenset()))]
        qs += [q_value(spin, HomologyClass(TORUS_ALPHA_CLASSES[i])) for i in (1, 2, 3)]
        rows.append((name, tuple(qs), arf(spin)))
    return rows


def count_by_arf(genus: int) -> dict[int, int]:
    curve = HyperellipticCurve.standard(genus)
    counts = {1: 0, -1: 0}
    for spin in all_spin_structures(curve):
        counts[arf(spin)] += 1
    return counts


def parse_B(text: str, curve: HyperellipticCurve) -> SpinStructureB:
    """'' or '1,3' (1-based indices into the branch values)."""
    text = text.strip()
    idx = [int(t) for t in text.split(",") if t.strip()] if text else []
    for i in idx:
        if not 1 <= i <= len(curve.branch_values):
            raise ValueError(f"branch index {i} out of range 1..{len(curve.branch_values)}")
    return SpinStructureB(curve, frozenset(curve.branch_values[i - 1] for i in idx))
