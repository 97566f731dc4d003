import json
import math

import numpy as np
import pytest

from spinorsurf import catalog as cat
from spinorsurf import elliptic as ell
from spinorsurf.linalg import subspace_angle
from spinorsurf.mesh import verify
from spinorsurf.omega import extract_K, omega_sphere, omega_twisted_torus
from spinorsurf.spin import (
    INF,
    SpinorPair,
    end_check,
    integrate_curve,
    is_inf,
    laurent_extract,
    nonorientable_compatibility,
    periods,
    quadric_form,
    torus_cycles,
)

from conftest import catalog_report, catalog_spec, context

SQRT3 = math.sqrt(3)


def rand_c(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


@pytest.mark.parametrize("name", list(cat.CATALOG))
def test_catalog_surface_verifies(name):
    rep = catalog_report(name)
    assert rep.passed, rep.to_tsv()
    names = {r.name.split("[")[0] for r in rep.residuals}
    assert {"skewness", "pfaffian", "end", "branch_points", "null_quadric"} <= names


@pytest.mark.parametrize("name", list(cat.CATALOG))
def test_json_round_trip(name):
    spec = catalog_spec(name)
    data = spec.to_json()
    text = json.dumps(data)
    back = cat.SurfaceSpec.from_json(json.loads(text))
    assert json.dumps(back.to_json()) == text
    assert np.array_equal(back.system.matrix, spec.system.matrix)


def test_from_json_rejects_malformed():
    data = catalog_spec("sphere-4").to_json()
    del data["ends"]
    with pytest.raises(cat.CatalogError):
        cat.SurfaceSpec.from_json(data)
    data = catalog_spec("sphere-4").to_json()
    data["coefficients"]["s1"] = data["coefficients"]["s1"][:2]
    with pytest.raises(cat.CatalogError):
        cat.SurfaceSpec.from_json(data)


# -- spheres -----------------------------------------------------------------


def test_sphere_4_basis_sections():
    spec = catalog_spec("sphere-4")
    a = spec.params["a"]
    assert abs(a - complex(SQRT3, 1) / 2) < 1e-16
    z = np.array([0.3 + 0.7j, -1.2 + 0.1j, 2.0 - 0.5j])
    den = z * z - SQRT3 * z + 1
    assert np.allclose(spec.pair.s1(z), (SQRT3 * z - 1) / (z * den), rtol=1e-13, atol=0)
    assert np.allclose(spec.pair.s2(z), z * (z - SQRT3) / den, rtol=1e-13, atol=0)
    assert abs(spec.system.pfaffian()) <= 1e-12


def test_sphere_6_tables(rng):
    for _ in range(10):
        s1, s2 = rand_c(rng, 2)
        s3 = cat.solve_sigma3(s1, s2)
        t1, t3 = s1 * s1 + 3 * s2, s3 * s3 + 3 * s2
        b, c = cat.sphere6_kernel_tables(s1, s2, s3)
        assert b[3] == s1 * t3 + 5 * s3 and c[0] == s3 * t1 + 5 * s1
        spec = cat.sphere_6_ends(s1, s2, s3)
        M = spec.system.matrix
        for coeffs in (spec.coeffs1, spec.coeffs2):
            assert np.linalg.norm(M @ coeffs) <= 1e-8 * np.linalg.norm(M) * np.linalg.norm(coeffs)
        K = extract_K(spec.system)
        assert K.dim == 2
        assert subspace_angle(K.vectors, np.column_stack([spec.coeffs1, spec.coeffs2])) <= 1e-8


def test_sphere_6_symmetric_solve():
    for s in (0.5, 1.0, 2.5, -1.5):
        s3 = cat.solve_sigma3(0.0, s)
        assert abs(cat.sphere6_pfaffian_poly(0.0, s, s3)) <= 1e-10
        # tau1 tau3 = 20 with sigma1 = 0: s3^2 = 20/(3s) - 3s
        assert abs(s3 * s3 - (20 / (3 * s) - 3 * s)) <= 1e-10 * (1 + abs(s3) ** 2)


def test_sphere_6_ends_are_quartic_roots():
    spec = catalog_spec("sphere-6")
    s1, s2, s3 = (spec.params[k] for k in ("sigma1", "sigma2", "sigma3"))
    finite = [p for p in spec.ends if not is_inf(p) and abs(p) > 0]
    for z in finite:
        assert abs(z ** 4 - s1 * z ** 3 - s2 * z ** 2 - s3 * z + 1) <= 1e-12
    assert sum(1 for p in spec.ends if is_inf(p)) == 1 and any(p == 0 for p in spec.ends)


def test_sphere_6_errors():
    with pytest.raises(cat.CatalogError):
        cat.sphere_6_ends(1.0, 1.0, 0.3)
    with pytest.raises(cat.CatalogError):
        cat.sphere_6_ends(2.0, 0.0, 5.0)


# -- projective planes -------------------------------------------------------


def test_gamma_special_points():
    assert abs(cat.gamma_poly(math.sqrt(5) / 3, 0, 0)) <= 4 * np.finfo(float).eps * 96
    assert cat.gamma_poly(1, 1, 1) == 0


def test_stabilizers():
    assert len(cat.cube_rotations()) == 24
    assert len(cat.stabilizer((math.sqrt(5) / 3, 0, 0))) == 4
    c = cat.d3_point()
    assert 0 < c < 1 and abs(cat.gamma_poly(c, c, -c)) <= 1e-12
    assert len(cat.stabilizer((c, c, -c))) == 6
    assert len(cat.stabilizer((0.7, 0.7, cat.solve_c3(0.7, 0.7)))) == 2
    assert len(cat.stabilizer((0.6, 0.4, 0.1))) == 1
    assert len(cat.stabilizer((1, 1, 1))) == 6
    assert len(cat.stabilizer((0, 0, 0))) == 24


def test_d3_point_root_of_cubic_form():
    c = cat.d3_point()
    assert abs((c * c + 3) ** 3 - 32 * (1 - c ** 3)) <= 1e-12


@pytest.mark.parametrize("point", ["z2z2", "d3", "generic"])
def test_projective_plane_points(point):
    if point == "z2z2":
        c = (math.sqrt(5) / 3, 0.0, 0.0)
        expected = "Z2xZ2"
    elif point == "d3":
        d = cat.d3_point()
        c = (d, d, -d)
        expected = "D3"
    else:
        c = (0.75, 0.5, cat.solve_c3(0.75, 0.5))
        expected = "trivial"
    spec = cat.projective_plane_3_ends(*c)
    assert spec.symmetry == expected
    ends = spec.ends
    inv = spec.involution_map()
    # the end set is closed under z -> -1/conj(z)
    finite = [p for p in ends if not is_inf(p) and p != 0]
    for p in finite:
        q = complex(inv.map(np.asarray(p)))
        assert min(abs(q - r) for r in finite) <= 1e-12
    res = nonorientable_compatibility(spec.pair, inv)
    assert res.ok
    rep = verify(spec)
    assert rep.passed, rep.to_tsv()
    assert max(r.value for r in rep.residuals if r.name.startswith(("end", "period", "compat"))) <= 1e-7


def test_projective_plane_errors():
    with pytest.raises(cat.CatalogError):
        cat.projective_plane_3_ends(0.7, 0.7, 0.1)
    d = cat.d3_point()
    with pytest.raises(cat.CatalogError):
        cat.projective_plane_3_ends(d, -d, d)  # on the variety, outside c1 >= c2 >= |c3|
    with pytest.raises(cat.CatalogError):
        cat.projective_plane_ends(0.9, 0.9, -0.9)
    with pytest.raises(cat.CatalogError):
        cat.solve_c3(0.99, 0.01)


# -- the Moebius strip datum ----------------------------------------------------


def test_moebius_datum():
    md = cat.moebius_strip_datum()
    L = laurent_extract(md.pair.s1, 0j, radius=0.5, kmin=-4, kmax=2)
    assert L.order() == -2
    rep = end_check(md.pair, 0j, radius=0.5)
    assert rep.ord == -4  # omega carries s1^2
    assert nonorientable_compatibility(md.pair, md.involution).ok
    w = np.array([0.3 + 0.2j, -1.5 + 0.7j, 2.2 - 1.1j])
    om = md.pair.omega(w)
    assert np.max(np.abs(quadric_form(om))) <= 1e-12 * np.max(np.abs(om)) ** 2


def test_moebius_total_curvature():
    K = cat.total_curvature_sphere(cat.moebius_strip_datum().pair)
    # the double cover carries -12 pi; the strip itself -6 pi
    assert abs(K / 2 + 6 * math.pi) <= 0.01 * 6 * math.pi


# -- tori ------------------------------------------------------------------------


def _hat_periods(ctx):
    system = omega_twisted_torus(ctx, cat.torus_ends(ctx))
    hats = cat.torus_hat_sections(system)
    g1, g3 = torus_cycles(system.frame, system.ends.points)
    out = {}
    for k, cyc in ((1, g1), (3, g3)):
        for i in range(3):
            for j in range(i, 3):
                pair = SpinorPair(system.section(hats[i]), system.section(hats[j]))
                out[(k, i + 1, j + 1)] = periods(pair, cyc).s1s2
    return out


@pytest.mark.parametrize("tau", [1j, complex(0.2, 1.1), complex(-0.45, 0.95)])
def test_torus_periods_closed_form(tau):
    ctx = context(tau)
    P = _hat_periods(ctx)
    for (k, i, j), v in P.items():
        if i == j:
            ref = cat.torus_period_closed_form(ctx, i, k)
            assert abs(v - ref) <= 1e-8 * abs(ref)
        else:
            assert abs(v) <= 1e-9 * max(abs(P[(k, 1, 1)]), 1)


def test_torus_hat_sections_closed_forms(generic_ctx):
    # the zeta combinations with omega2 read as -omega1 - omega3
    ctx = generic_ctx
    system = omega_twisted_torus(ctx, cat.torus_ends(ctx))
    hats = [system.section(h) for h in cat.torus_hat_sections(system)]
    z = lambda x: ell.zeta(ctx, x)
    w1, w3 = ctx.omega1, ctx.omega3
    w2 = -w1 - w3
    u = np.array([0.123 + 0.31j, -0.4 + 0.2j])
    closed = [
        z(u) + z(u - w1) - z(u - w2) - z(u - w3) + 2 * z(w1),
        z(u) - z(u - w1) + z(u - w2) - z(u - w3) + 2 * z(w2),
        z(u) - z(u - w1) - z(u - w2) + z(u - w3) + 2 * z(w3),
    ]
    for h, c in zip(hats, closed):
        assert np.max(np.abs(h(u) - c)) <= 1e-12 * np.max(np.abs(c))


def test_torus_hat_values_at_quarter_periods(generic_ctx):
    ctx = generic_ctx
    system = omega_twisted_torus(ctx, cat.torus_ends(ctx))
    hats = [system.section(h) for h in cat.torus_hat_sections(system)]
    for k in (1, 2, 3):
        for m in (1, 2, 3):
            for shift in (0, ctx.omega1, ctx.omega2, ctx.omega3):
                v = complex(hats[m - 1](np.asarray(ctx.half_period(k) / 2 + shift))) ** 2
                ref = 4 * (ctx.e(k) - ctx.e(m))
                assert abs(v - ref) <= 1e-10 * max(1, abs(ctx.e(k)))


def test_torus_x_squares_solve_periods(generic_ctx):
    ctx = generic_ctx
    for choice in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        i, j, k = choice
        xi2, xj2 = cat.torus_x_squares(ctx, choice)
        for kk in (1, 3):
            lhs = xi2 * cat.torus_period_closed_form(ctx, i, kk) + xj2 * cat.torus_period_closed_form(ctx, j, kk)
            rhs = np.conj(cat.torus_period_closed_form(ctx, k, kk))
            assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_torus_fundamental_region_sample():
    taus = cat.fundamental_region_taus(20)
    assert len(taus) == 20
    for t in taus:
        assert abs(t) >= 1 and abs(t.real) <= 0.5
        spec = cat.torus_4_ends(context(t))
        assert spec.params["branch_value_normalised"] > 1e-3
        for cyc in spec.cycles:
            assert periods(spec.pair, cyc).ok


def test_torus_choice_validation(generic_ctx):
    with pytest.raises(cat.CatalogError):
        cat.torus_4_ends(generic_ctx, (1, 1, 2))


# -- the Klein bottle ----------------------------------------------------------


def test_klein_table_three():
    kd = cat.klein_data()
    ctx, r, a = kd.ctx, kd.r, kd.a
    assert abs(ctx.e1 - 1) < 1e-13 and abs(ctx.e2) < 1e-13 and abs(ctx.e3 + 1) < 1e-13
    assert r.real > 0 and r.imag < 0
    assert abs(r ** 4 + cat.KLEIN_M * r ** 2 + 1) < 1e-13
    p, rp = ell.wp_and_prime(ctx, a)
    assert abs(p - r) < 1e-12
    vals = {a: (r, rp), a + kd.reps[1] - a: (-1 / r, rp / r ** 2), -1j * a: (-r, -1j * rp),
            kd.reps[3]: (1 / r, -1j * rp / r ** 2)}
    for u, (pv, dv) in vals.items():
        got_p, got_d = ell.wp_and_prime(ctx, u)
        assert abs(got_p - pv) <= 1e-11 * abs(pv)
        assert abs(got_d - dv) <= 1e-10 * abs(dv)
    # the glide sends a to -a
    assert ell.torus_distance(ctx.lattice, np.conj(a) + ctx.omega1, -a) < 1e-12


def test_klein_closed_forms_match_quadrature():
    spec = catalog_spec("klein-bottle-4")
    r = spec.params["r"]
    closed = cat.klein_closed_forms(r)
    for key in ("A", "B", "C"):
        q = spec.params[f"{key}_quadrature"]
        assert abs(q - closed[key]) <= 1e-6 * abs(closed[key])
    scale = max(abs(closed["A"]), abs(closed["C"]))
    assert abs(spec.params["D_quadrature"]) <= 1e-6 * scale


def test_klein_mixed_period_symmetry():
    kd = cat.klein_data()
    spec = catalog_spec("klein-bottle-4")
    z4 = np.zeros(4)
    e1 = np.concatenate([kd.c1, z4]).astype(complex)
    e2 = np.concatenate([kd.c2, z4]).astype(complex)
    P1 = cat.klein_period_matrix(spec.system, [e1, e2], 1)
    P3 = cat.klein_period_matrix(spec.system, [e1, e2], 3)
    assert abs(P1[0, 1] - 1j * P3[0, 1]) <= 1e-9 * abs(P1[0, 1])


def test_klein_kernel_vectors():
    kd = cat.klein_data()
    for c in (kd.c1, kd.c2):
        assert np.linalg.norm(kd.W.T @ c) <= 1e-10 * np.linalg.norm(kd.W) * np.linalg.norm(c) or \
            np.linalg.norm(kd.W @ c) <= 1e-10 * np.linalg.norm(kd.W) * np.linalg.norm(c)


def test_klein_pair_is_unbranched_and_compatible():
    spec = catalog_spec("klein-bottle-4")
    scan = cat.unbranched_scan(spec.pair)
    assert scan.unbranched and scan.complete
    assert nonorientable_compatibility(spec.pair, spec.involution_map()).ok


# -- branch scan -----------------------------------------------------------------


def test_scan_sphere_4():
    scan = cat.unbranched_scan(catalog_spec("sphere-4").pair)
    assert scan.unbranched and scan.complete
    assert scan.found_zero_count == scan.expected_zero_count


def test_scan_flags_degenerate_pair():
    spec = catalog_spec("sphere-4")
    s1 = spec.pair.s1
    from spinorsurf.spin import SpinorSection

    zs1 = SpinorSection(s1.frame, lambda z: z * s1(z), s1.poles + ((INF, 1),), "z s1")
    scan = cat.unbranched_scan(SpinorPair(s1, zs1))
    finite = [z for z, _ in scan.zeros if not is_inf(z) and abs(z) > 1e-9]
    assert finite and not scan.unbranched
    for z in finite:
        assert any(abs(z - c) < 1e-6 for c in scan.candidates if not is_inf(c))
