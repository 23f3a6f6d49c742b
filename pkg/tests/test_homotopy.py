import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvebound import geom3
from curvebound.classify import (
    classify_curve,
    component_count,
    lifted_sign,
    plane_rotation_number,
)
from curvebound.convexity import fibonacci_sphere
from curvebound.curve import (
    CurveSamples,
    check_membership,
    integrate_frames,
    space,
    total_curvature,
)
from curvebound.errors import (
    InvalidFamilyError,
    InvalidInputError,
    NotAntipodalError,
    NotInHullError,
    ObstructionError,
)
from curvebound.homotopy import (
    HomotopyPath,
    add_loops_Fn,
    bend_k_equator,
    bending_arcs,
    bending_bound,
    bending_family,
    caustic_point,
    circle_homotopy,
    exotic_sphere_family,
    find_antipodal_caustic_pair,
    graft_antipodal,
    graft_quadruple,
    insert_loops_at,
    make_circle,
    make_perturbed_circle,
    menger_curvature,
    solve_quadruple,
    validate_homotopy,
    whitney_graustein_normalize,
)

FULL = space(-np.inf, np.inf)


def relative_end(c):
    """Relative end frame and relative lifted end frame of a curve."""
    fc = integrate_frames(c)
    rel_q = geom3.qmul(geom3.qconj(fc.lifts[0]), fc.lifts[-1])
    return c.q0.T @ fc.frames[-1], rel_q


def assert_same_ends(a, b, tol=1e-8):
    Fa, qa = relative_end(a)
    Fb, qb = relative_end(b)
    assert np.linalg.norm(Fa - Fb) < tol
    assert np.linalg.norm(qa - qb) < tol
    assert np.allclose(a.q0, b.q0, atol=tol)


def ellipse(a, b, M=1000):
    t = 2 * np.pi * np.arange(M) / M
    return np.column_stack([a * np.cos(t), b * np.sin(t)])


# ---------------------------------------------------------------------------
# circles


def test_great_circle_closes_exactly():
    c = make_circle(np.pi / 2, 1)
    assert check_membership(c, FULL).closure_defect < 1e-13
    assert np.all(c.kappa == 0.0)


@pytest.mark.parametrize("rho", [0.3, 1.0, 2.2])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_circle_lies_on_its_circle(rho, k):
    c = make_circle(rho, k)
    P = integrate_frames(c).positions
    # initial frame I: the centre is cos(rho) e1 + sin(rho) e3
    center = np.array([np.cos(rho), 0.0, np.sin(rho)])
    assert np.allclose(P @ center, np.cos(rho), atol=1e-12)
    assert c.length() == pytest.approx(2 * np.pi * k * np.sin(rho), rel=1e-12)


def test_circle_twice_has_positive_sign():
    assert lifted_sign(integrate_frames(make_circle(0.7, 2))) == 1


def test_circle_phase_moves_start_along_circle():
    a, b = make_circle(0.8, 1), make_circle(0.8, 1, phase=0.25)
    Pa = integrate_frames(a).positions
    Pb = integrate_frames(b).positions
    center = np.array([np.cos(0.8), 0.0, np.sin(0.8)])
    assert np.allclose(Pb @ center, np.cos(0.8), atol=1e-12)
    assert np.allclose(Pb[0], Pa[len(Pa) // 4], atol=1e-9)


def test_circle_rejects_bad_radius():
    with pytest.raises(InvalidInputError):
        make_circle(0.0)
    with pytest.raises(InvalidInputError):
        make_circle(1.0, k=0)


def test_circle_homotopy_validates():
    s = space(-0.5, 2.0)
    path = circle_homotopy(0.6, 1.8, k=2, steps=16, space=s)
    report = validate_homotopy(path, s)
    assert report.passed, report.failures
    radii = [float(np.arctan2(1.0, c.kappa[0])) for c in path.curves]
    assert np.allclose(radii, np.linspace(0.6, 1.8, 17), atol=1e-12)


@given(st.floats(0.2, 2.9), st.integers(2, 4), st.integers(0, 2**31))
@settings(max_examples=20)
def test_perturbed_circle_closes(rho, k, seed):
    c = make_perturbed_circle(rho, k, k + 2, 0.3, n=240, rng=seed)
    assert check_membership(c, FULL).closure_defect < 1e-9


# ---------------------------------------------------------------------------
# bending


def test_bending_endpoints_are_equators():
    for s, k_out in ((0.0, 1), (1.0, 3)):
        c = bend_k_equator(1, s, n=240)
        P = integrate_frames(c).positions
        assert np.abs(P[:, 2]).max() < 1e-12
        assert np.abs(c.kappa).max() < 1e-12
        assert c.length() == pytest.approx(2 * np.pi * k_out, rel=1e-12)


def test_bending_midpoint_radius():
    for length, kappa in bending_arcs(1, 0.5):
        assert abs(kappa) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_bending_max_curvature(k):
    kmax = max(abs(kap) for s in np.linspace(0, 1, 65) for _, kap in bending_arcs(k, s))
    assert kmax == pytest.approx(bending_bound(k), abs=1e-3)
    assert kmax <= bending_bound(k) + 1e-12


@pytest.mark.parametrize("k", [1, 2])
@pytest.mark.parametrize("s", [0.0, 0.3, 0.5, 0.9, 1.0])
def test_bending_closes(k, s):
    c = bend_k_equator(k, s, n=300)
    assert check_membership(c, FULL).closure_defect < 1e-10


def test_bending_obstruction():
    with pytest.raises(ObstructionError):
        bend_k_equator(1, 0.5, kappa1=0.95)
    bend_k_equator(1, 0.5, kappa1=1.05)


@pytest.mark.parametrize("kappa1", [0.9, 1.1])
def test_bending_endpoints_classify_like_circles(kappa1):
    s = space(-kappa1, kappa1)
    for bend_s, k in ((0.0, 1), (1.0, 3)):
        bent = classify_curve(bend_k_equator(1, bend_s, n=256), s)
        circle = classify_curve(make_circle(np.pi / 2, k, n=256), s)
        assert bent.component_index == circle.component_index


@pytest.mark.parametrize(
    "k, kappa1",
    [(1, 0.9), (1, 0.99), (1, 1.01), (1, 1.3), (2, 0.55), (2, 0.6), (3, 0.4), (3, 0.42)],
)
def test_bending_validates_iff_few_components(k, kappa1):
    s = space(-kappa1, kappa1)
    report = validate_homotopy(bending_family(k, n=128 * (k + 1), steps=32), s)
    assert report.passed == (component_count(s) <= k + 1)


# ---------------------------------------------------------------------------
# loops


def test_insert_zero_loops_is_identity():
    c = make_circle(1.0, 1, n=128)
    assert insert_loops_at(c, 0.5, 0, 0.1, 0.4) is c


@pytest.mark.parametrize("loops", [1, 2, 3])
def test_insert_loops(loops):
    c = make_perturbed_circle(1.0, 1, 3, 0.2, n=240, rng=1)
    out = insert_loops_at(c, 0.4, loops, 0.05, 0.3)
    assert total_curvature(out) - total_curvature(c) == pytest.approx(2 * np.pi * loops, abs=1e-9)
    Fa, _ = relative_end(c)
    Fb, _ = relative_end(out)
    assert np.linalg.norm(Fa - Fb) < 1e-8
    assert lifted_sign(integrate_frames(out)) == lifted_sign(integrate_frames(c)) * (-1) ** loops
    allowed = np.concatenate([c.kappa, [1 / np.tan(0.3)]])
    assert np.all(np.min(np.abs(out.kappa[:, None] - allowed[None, :]), axis=1) < 1e-12)


def test_insert_loops_window_overflow():
    c = make_circle(1.0, 1, n=128)
    with pytest.raises(InvalidInputError):
        insert_loops_at(c, 0.05, 1, 0.1, 0.4)


def test_fn_zero_loops_is_identity():
    c = make_circle(1.0, 1, n=128)
    assert add_loops_Fn(c, 0, 0.4) is c


def test_fn_curvature_tends_to_circle():
    c = make_perturbed_circle(1.0, 1, 3, 0.3, n=192, rng=2)
    devs = [add_loops_Fn(c, L, 0.3, return_report=True)[1].kappa_sup_deviation for L in (8, 16, 32)]
    assert devs[0] > devs[1] > devs[2]


@pytest.mark.parametrize("loops", [1, 2, 5])
def test_fn_keeps_ends_and_flips_sign(loops):
    c = make_circle(0.9, 1, n=128)
    out = add_loops_Fn(c, loops, 0.4)
    Fa, _ = relative_end(c)
    Fb, _ = relative_end(out)
    assert np.linalg.norm(Fa - Fb) < 1e-8
    assert np.allclose(out.q0, c.q0)
    assert lifted_sign(integrate_frames(out)) == (-1) ** (1 + loops)


# ---------------------------------------------------------------------------
# grafts


def antipodal_fixture():
    # caustic rays of a circle of radius pi/8 at t and t + 1/2 meet at
    # antipodal points when the angle is 5 pi / 8
    return make_circle(np.pi / 8, 1, n=256), (0.1, 0.6, 5 * np.pi / 8, 5 * np.pi / 8)


def test_antipodal_fixture_is_antipodal():
    c, (t1, t2, ra, rb) = antipodal_fixture()
    fc = integrate_frames(c)
    assert np.linalg.norm(caustic_point(fc, t1, ra) + caustic_point(fc, t2, rb)) < 1e-12


def test_graft_antipodal_zero():
    c, pair = antipodal_fixture()
    assert graft_antipodal(c, *pair, 0.0) is c


@pytest.mark.parametrize("s", [0.5, 2.0, 4 * np.pi])
def test_graft_antipodal(s):
    c, pair = antipodal_fixture()
    out = graft_antipodal(c, *pair, s)
    assert_same_ends(c, out)
    assert total_curvature(out) - total_curvature(c) == pytest.approx(2 * s, abs=1e-8)
    # the new arcs have curvature cot(5 pi / 8) > -0.5
    assert check_membership(out, space(-0.5, np.inf)).member


def test_graft_antipodal_rejects_non_antipodal():
    c, (t1, t2, ra, rb) = antipodal_fixture()
    with pytest.raises(NotAntipodalError):
        graft_antipodal(c, t1, t2 + 0.01, ra, rb, 1.0)


def test_find_antipodal_pair():
    c = make_perturbed_circle(0.5, 1, 3, 0.2, n=240, rng=5)
    pair, defect = find_antipodal_caustic_pair(c, 2.5)
    t1, t2, ra, rb = pair
    assert defect < 1e-10 and max(ra, rb) < 2.5
    fc = integrate_frames(c)
    assert np.linalg.norm(caustic_point(fc, t1, ra) + caustic_point(fc, t2, rb)) < 1e-10
    out = graft_antipodal(c, *pair, np.pi)
    assert_same_ends(c, out)


QUAD_TS = [0.1, 0.43, 0.76, 0.9]
QUAD_RHOS = [0.05, 0.05, 0.05, np.pi / 2]


def test_graft_quadruple_generic():
    c = make_circle(0.6 * np.pi, 1, n=256)
    out, sol = graft_quadruple(c, QUAD_TS, QUAD_RHOS, 0.1, return_solution=True)
    assert sol.residual < 1e-10
    assert sol.sigma.sum() == pytest.approx(0.1, abs=1e-14)
    assert np.all(sol.sigma >= 0)
    assert total_curvature(out) - total_curvature(c) == pytest.approx(0.1, abs=1e-8)
    assert_same_ends(c, out)
    # independent check of the constraint by rotation matrices
    fc = integrate_frames(c)
    chis = [caustic_point(fc, t, r) for t, r in zip(QUAD_TS, QUAD_RHOS)]
    R = np.eye(3)
    for sig, chi in zip(sol.sigma, chis):
        R = R @ geom3.axis_rotation(chi, sig)
    assert np.linalg.norm(R - np.eye(3)) < 1e-9


def test_graft_quadruple_zero():
    c = make_circle(0.6 * np.pi, 1, n=256)
    out, sol = graft_quadruple(c, QUAD_TS, QUAD_RHOS, 0.0, return_solution=True)
    assert out is c and np.all(sol.sigma == 0)


def test_graft_quadruple_needs_interior_origin():
    c = make_circle(0.3, 1, n=256)
    with pytest.raises(NotInHullError):
        graft_quadruple(c, QUAD_TS, [0.1, 0.1, 0.1, 0.1], 0.1)


def test_quadruple_tetrahedral_symmetry():
    chis = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / np.sqrt(3)
    rel = []
    for s in (0.1, 0.01, 0.001):
        sol = solve_quadruple(chis, s, np.full(4, 0.25))
        assert sol.residual < 1e-10
        rel.append(np.abs(sol.sigma - s / 4).max() / s)
    assert rel[0] > rel[1] > rel[2]
    assert rel[2] < 1e-3


# ---------------------------------------------------------------------------
# Whitney-Graustein normalisation


def test_wg_circle_stays_circle():
    (path,) = whitney_graustein_normalize([ellipse(1.0, 1.0)], M=256, steps=8)
    for c in path.curves:
        k = menger_curvature(c)
        assert np.ptp(k) < 1e-6 * k.mean()


def test_wg_ellipse():
    paths = whitney_graustein_normalize([ellipse(2.0, 1.0), ellipse(1.0, 1.0)], kappa0=0.2, M=384, steps=8)
    for path in paths:
        assert path.rotation_number == 1
        assert np.all(path.min_curvature > 0.2)
        last = path.curves[-1]
        r = np.linalg.norm(last - last.mean(axis=0), axis=1)
        assert np.ptp(r) < 1e-3 * r.mean()
        assert np.linalg.norm(last.mean(axis=0)) < 1e-3
        assert r.mean() == pytest.approx(path.final_radius, rel=1e-3)


def test_wg_keeps_half_curvature():
    # min curvature of this ellipse is 1.2 / 1.5^2 > 0.5
    (path,) = whitney_graustein_normalize([ellipse(1.5, 1.2)], kappa0=0.5, M=384, steps=8)
    assert path.min_curvature.min() > 0.5
    for c in path.curves:
        assert plane_rotation_number(c) == 1


def test_wg_rotation_two():
    t = 2 * np.pi * np.arange(800) / 800
    z = np.exp(2j * t) + 0.3 * np.exp(1j * t)
    (path,) = whitney_graustein_normalize([np.column_stack([z.real, z.imag])], M=384, steps=8)
    assert path.rotation_number == 2
    assert np.all(path.min_curvature > 0)


def test_wg_mixed_rotation_numbers():
    t = 2 * np.pi * np.arange(800) / 800
    z = np.exp(2j * t) + 0.3 * np.exp(1j * t)
    with pytest.raises(InvalidFamilyError):
        whitney_graustein_normalize([ellipse(1.0, 1.0), np.column_stack([z.real, z.imag])])


# ---------------------------------------------------------------------------
# exotic family


def test_exotic_poles():
    north = exotic_sphere_family(1.2, [0, 0, 1])
    south = exotic_sphere_family(1.2, [0, 0, -1])
    assert np.abs(north.kappa).max() < 1e-15 and north.length() == pytest.approx(2 * np.pi)
    assert np.abs(south.kappa).max() < 1e-15 and south.length() == pytest.approx(6 * np.pi)
    assert lifted_sign(integrate_frames(north)) == lifted_sign(integrate_frames(south)) == -1


@pytest.mark.parametrize("part", ["g", "gbar", "f"])
def test_exotic_membership_sweep(part):
    s = space(-1.2, 1.2)
    for p in fibonacci_sphere(100):
        rep = check_membership(exotic_sphere_family(1.2, p, part=part), s)
        assert rep.member and rep.curvature_margin > 0


def test_exotic_f_continuous_across_collar():
    # neighbouring points across x = +-0.1 give nearby curves
    s = space(-1.2, 1.2)
    for x in (0.1, -0.1):
        a = exotic_sphere_family(1.2, [x + 1e-6, np.sqrt(1 - x * x), 0.0], part="f")
        b = exotic_sphere_family(1.2, [x - 1e-6, np.sqrt(1 - x * x), 0.0], part="f")
        path = HomotopyPath(s, [0.0, 1.0], [a, b])
        assert validate_homotopy(path, s, threshold=1e-3).passed


def test_exotic_rejects_bounds():
    for kappa1 in (1.0, 1.8):
        with pytest.raises(ObstructionError):
            exotic_sphere_family(kappa1, [0, 0, 1])
    with pytest.raises(InvalidInputError):
        exotic_sphere_family(1.2, [0, 0, 1], n=100)


# ---------------------------------------------------------------------------
# validation


@pytest.mark.parametrize("kappa1, passes", [(1.1, True), (0.9, False)])
def test_validate_bending(kappa1, passes):
    report = validate_homotopy(bending_family(1, n=512, steps=64), space(-kappa1, kappa1))
    assert report.passed == passes
    if not passes:
        assert {f["reason"] for f in report.failures} == {"curvature-margin"}
    assert report.max_abs_kappa == pytest.approx(1.0, abs=1e-3)


def test_validate_constant_path():
    c = make_circle(1.0, 2, n=128)
    s = space(0.0, np.inf)
    report = validate_homotopy(HomotopyPath(s, [0.0, 0.5, 1.0], [c, c, c]), s)
    assert report.passed and report.step_frame == [0.0, 0.0]


def test_validate_reports_jumps_and_sign_changes():
    s = space(-np.inf, np.inf)
    path = HomotopyPath(s, [0.0, 1.0], [make_circle(np.pi / 2, 1), make_circle(0.3, 2)])
    reasons = {f["reason"] for f in validate_homotopy(path, s).failures}
    assert reasons == {"step", "lifted-sign"}


def test_validate_reports_open_curves():
    c = make_circle(1.0, 1, n=128)
    bad = CurveSamples(c.v * 0.9, c.kappa)
    path = HomotopyPath(FULL, [0.0, 1.0], [c, bad])
    reasons = {f["reason"] for f in validate_homotopy(path, FULL).failures}
    assert "closure" in reasons


def test_path_grid_checks():
    c = make_circle(1.0)
    with pytest.raises(InvalidInputError):
        HomotopyPath(FULL, [0.0, 0.0], [c, c])
    with pytest.raises(InvalidInputError):
        HomotopyPath(FULL, [0.0], [c, c])
