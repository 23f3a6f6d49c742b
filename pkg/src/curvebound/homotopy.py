"""Explicit curves, homotopies and grafts, plus a homotopy-path validator.

Every constructor returns CurveSamples built from exact circle arcs, so
closure defects are rounding-level unless noted otherwise.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, least_squares
from scipy.spatial import cKDTree

from . import geom3
from .classify import lifted_sign, plane_rotation_number
from .convexity import locate_origin
from .curve import (
    DEFAULT_N,
    CurveSamples,
    check_membership,
    close_up,
    from_pieces,
    integrate_frames,
    reparametrize,
    subdivide_pieces,
)
from .errors import (
    InvalidFamilyError,
    InvalidInputError,
    NotAntipodalError,
    NotInHullError,
    ObstructionError,
    SolveFailureError,
)

DEFAULT_THRESHOLD = 0.5
ANTIPODAL_TOL = 1e-6


@dataclass(eq=False)
class HomotopyPath:
    space: object
    s_grid: np.ndarray
    curves: list
    step_metric: list = field(default=None)

    def __post_init__(self):
        self.s_grid = np.asarray(self.s_grid, dtype=float)
        if len(self.s_grid) != len(self.curves):
            raise InvalidInputError("s_grid and curves differ in length")
        if np.any(np.diff(self.s_grid) <= 0):
            raise InvalidInputError("s_grid must be increasing")


# ---------------------------------------------------------------------------
# circles


def _cot(rho):
    # exact zero for great circles so they are not members of L_0
    return 0.0 if rho == np.pi / 2 else 1.0 / np.tan(rho)


def _check_rho(rho):
    if not 0 < rho < np.pi:
        raise InvalidInputError("radius of curvature must lie in (0, pi)", rho=rho)


def make_circle(rho, k=1, phase=0.0, n=DEFAULT_N):
    """Circle of radius of curvature rho traversed k times.

    ``phase`` (a fraction of one turn) moves the starting point; the initial
    frame is then the frame of the unshifted circle at that point.
    """
    _check_rho(rho)
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer", k=k)
    v = 2 * np.pi * k * np.sin(rho)
    kappa = _cot(rho)
    q0 = np.eye(3)
    if phase:
        q0, _ = geom3.frame_step(2 * np.pi * np.sin(rho), 2 * np.pi * np.cos(rho), phase)
    return CurveSamples(np.full(n, v), np.full(n, kappa), q0)


def circle_homotopy(rho_a, rho_b, k=1, steps=16, n=DEFAULT_N, space=None):
    """Circles whose radius moves linearly from rho_a to rho_b."""
    s_grid = np.linspace(0.0, 1.0, steps + 1)
    curves = [make_circle((1 - s) * rho_a + s * rho_b, k, n=n) for s in s_grid]
    return HomotopyPath(space, s_grid, curves)


def make_perturbed_circle(rho, k, m, eps, n=512, rng=None, harmonics=3):
    """A closed curve near the circle of radius rho traversed k times.

    The curvature is cot(rho) + eps * f(t) with f of period 1/m, and the
    constant speed is chosen so that one period rotates the frame by
    2 pi k / m; m periods then close the curve exactly.  ``n`` is rounded to
    a multiple of m.
    """
    _check_rho(rho)
    if not m > k >= 1:
        raise InvalidInputError("need m > k >= 1", m=m, k=k)
    rng = np.random.default_rng(rng)
    per = max(1, int(round(n / m)))
    n = per * m
    u = (np.arange(per) + 0.5) / per
    f = np.zeros(per)
    for j in range(1, harmonics + 1):
        f += rng.normal() / j * np.cos(2 * np.pi * j * u + rng.uniform(0, 2 * np.pi))
    f /= max(np.abs(f).max(), 1e-12)
    kappa_period = 1.0 / np.tan(rho) + eps * f
    target = 2 * np.pi * k / m

    def period_angle(speed):
        _, q = geom3.frame_steps(np.full(per, speed), speed * kappa_period, 1.0 / n)
        total = np.array([1.0, 0.0, 0.0, 0.0])
        for step in q:
            total = geom3.qmul(total, step)
        return 2 * np.arctan2(np.linalg.norm(total[1:]), total[0]) - target

    base = 2 * np.pi * k * np.sin(rho)
    speed = brentq(period_angle, 0.5 * base, 1.5 * base, xtol=1e-15)
    return CurveSamples(np.full(n, speed), np.tile(kappa_period, m))


# ---------------------------------------------------------------------------
# bending of the k-equator


def bending_bound(k):
    return float(np.tan(np.pi / (2 * k + 2)))


def _equator(angle):
    return np.array([np.cos(angle), np.sin(angle), 0.0])


def bending_arcs(k, s):
    """(length, curvature) of the 2k+2 arcs of the bent k-equator at s."""
    step = k * np.pi / (k + 1)
    c = np.cos(step / 2)
    out = []
    for i in range(2 * k + 2):
        P, Pn = _equator(i * step), _equator((i + 1) * step)
        Q = _equator((i + 0.5) * step)
        alpha = (-1) ** i * s * np.pi
        r = -c * np.cos(alpha) + np.sqrt(c * c * np.cos(alpha) ** 2 + 1 - c * c)
        Qa = c * Q + r * (np.cos(alpha) * Q + np.sin(alpha) * geom3.E3)
        m, rho_left = geom3.left_center(P, Qa, Pn)
        turn = geom3.swept_angle(m, P, Pn)
        out.append((turn * np.sin(rho_left), 1.0 / np.tan(rho_left)))
    return out


def bend_k_equator(k, s, n=DEFAULT_N, kappa1=None):
    """The bent k-equator at parameter s in [0, 1], starting with frame I.

    s = 0 is the equator traversed k times and s = 1 the equator traversed
    k + 2 times.  Each arc gets an equal share of the n intervals.
    """
    if int(k) != k or k < 1:
        raise InvalidInputError("k must be a positive integer", k=k)
    if not 0 <= s <= 1:
        raise InvalidInputError("s must lie in [0, 1]", s=s)
    bound = bending_bound(k)
    if kappa1 is not None and kappa1 <= bound:
        raise ObstructionError(
            f"bending the {k}-equator needs kappa1 > tan(pi/(2k+2)) = {bound:.12g}",
            kappa1=kappa1,
            bound=bound,
        )
    arcs = bending_arcs(k, s)
    count = 2 * k + 2
    shares = np.full(count, n // count)
    shares[: n % count] += 1
    lengths, kappas = [], []
    for (ell, kap), parts in zip(arcs, shares):
        lengths.extend([ell / parts] * parts)
        kappas.extend([kap] * parts)
    return from_pieces(lengths, kappas)


def bending_family(k, s_grid=None, n=DEFAULT_N, steps=64, space=None):
    s_grid = np.linspace(0.0, 1.0, steps + 1) if s_grid is None else np.asarray(s_grid)
    return HomotopyPath(space, s_grid, [bend_k_equator(k, s, n) for s in s_grid])


# ---------------------------------------------------------------------------
# arc insertion


def _insert_arcs(c, inserts):
    """Insert arcs (t, lengths, kappas) into c at the given parameters."""
    n = c.n
    inserts = sorted(inserts, key=lambda item: item[0])
    lengths, kappas = [], []
    j = 0
    for i in range(n):
        a, b = i / n, (i + 1) / n
        start = a
        while j < len(inserts) and (inserts[j][0] < b or (i == n - 1 and inserts[j][0] <= b)):
            t, ell, kap = inserts[j]
            if t > start + 1e-15:
                lengths.append(c.lengths[i] * (t - start) * n)
                kappas.append(c.kappa[i])
                start = t
            lengths.extend(ell)
            kappas.extend(kap)
            j += 1
        if b > start + 1e-15:
            lengths.append(c.lengths[i] * (b - start) * n)
            kappas.append(c.kappa[i])
    return from_pieces(np.array(lengths), np.array(kappas), c.q0)


def _arc_pieces(length, kappa, reference):
    parts = max(4, int(np.ceil(length / reference)))
    return subdivide_pieces([length], [kappa], parts)


def insert_loops_at(c, t0, loops, eps, rho1):
    """Insert ``loops`` full turns of the circle of radius rho1 at t0.

    The turns are spliced into the window of half-width eps about t0; only
    the number of inserted intervals depends on eps.  End frames are kept and
    the lifted end frame changes by (-1)^loops.
    """
    _check_rho(rho1)
    if not (eps > 0 and 2 * eps < t0 < 1 - 2 * eps):
        raise InvalidInputError("insertion window leaves [0, 1]", t0=t0, eps=eps)
    if int(loops) != loops or loops < 0:
        raise InvalidInputError("loops must be a non-negative integer", loops=loops)
    if loops == 0:
        return c
    length = 2 * np.pi * loops * np.sin(rho1)
    parts = max(8 * loops, int(np.ceil(2 * eps * c.n)))
    ell, kap = subdivide_pieces([length], [_cot(rho1)], parts)
    return _insert_arcs(c, [(t0, ell, kap)])


@dataclass(frozen=True)
class FnReport:
    kappa_sup_deviation: float
    closure_correction: float
    n_intervals: int


def add_loops_Fn(c, loops, rho1, n_out=None, return_report=False):
    """Frame-times-circle curve: gamma is replaced by Phi_gamma(t) sigma(t).

    sigma is the circle of radius rho1 with initial frame I traversed
    ``loops`` times.  Curvature is evaluated exactly at interval midpoints;
    the piecewise-constant result is then closed by a small correction whose
    size is reported.
    """
    _check_rho(rho1)
    if loops == 0:
        return (c, FnReport(0.0, 0.0, c.n)) if return_report else c
    base = reparametrize(c, "curvature")
    fc = integrate_frames(base)
    N = max(2 * base.n, 128 * loops) if n_out is None else int(n_out)
    t = (np.arange(N) + 0.5) / N
    circ = geom3.logarithmic_derivative(
        2 * np.pi * loops * np.sin(rho1), 2 * np.pi * loops * np.cos(rho1)
    )
    idx = np.minimum((t * base.n).astype(int), base.n - 1)
    dts = t - idx / base.n
    steps, _ = geom3.frame_steps(base.v[idx], base.w[idx], dts)
    Phi = fc.frames[idx] @ steps
    E, _ = geom3.frame_steps(
        np.full(N, 2 * np.pi * loops * np.sin(rho1)),
        np.full(N, 2 * np.pi * loops * np.cos(rho1)),
        t,
    )
    e1 = geom3.E1
    sig = E @ e1
    dsig = E @ (circ @ e1)
    ddsig = E @ (circ @ circ @ e1)
    Lam = np.array([geom3.logarithmic_derivative(v, w) for v, w in zip(base.v[idx], base.w[idx])])
    F = np.einsum("nij,nj->ni", Phi, sig)
    d1 = np.einsum("nij,nj->ni", Phi, np.einsum("nij,nj->ni", Lam, sig) + dsig)
    inner = (
        np.einsum("nij,nj->ni", Lam @ Lam, sig)
        + 2 * np.einsum("nij,nj->ni", Lam, dsig)
        + ddsig
    )
    d2 = np.einsum("nij,nj->ni", Phi, inner)
    speed = np.linalg.norm(d1, axis=1)
    T = d1 / speed[:, None]
    normal = np.cross(F, T)
    kappa = np.sum(d2 * normal, axis=1) / speed**2
    raw = CurveSamples(speed, kappa, c.q0)
    target = c.q0.T @ integrate_frames(c).frames[-1]
    closed, correction = close_up(raw, target)
    report = FnReport(
        float(np.abs(kappa - 1.0 / np.tan(rho1)).max()), correction, N
    )
    return (closed, report) if return_report else closed


def caustic_point(fc, t, theta):
    F = fc.frame_at(t % 1.0)
    return np.cos(theta) * F[:, 0] + np.sin(theta) * F[:, 2]


def find_antipodal_caustic_pair(c, rho0, nt=128, ntheta=32):
    """Parameters (t1, t2, rho_a, rho_b) with C(t1, rho_a) = -C(t2, rho_b).

    Coarse nearest-pair search on a grid over (t, theta) in [0,1) x (0, rho0),
    then least-squares refinement.  Returns the parameters, in the argument
    order of graft_antipodal, and the defect.
    """
    fc = integrate_frames(c)
    ts = np.arange(nt) / nt
    thetas = rho0 * (np.arange(ntheta) + 0.5) / ntheta
    frames = np.array([fc.frame_at(t) for t in ts])
    pts = (
        np.cos(thetas)[None, :, None] * frames[:, None, :, 0]
        + np.sin(thetas)[None, :, None] * frames[:, None, :, 2]
    ).reshape(-1, 3)
    dist, idx = cKDTree(pts).query(-pts)
    i = int(np.argmin(dist))
    j = int(idx[i])
    x0 = np.array([ts[i // ntheta], thetas[i % ntheta], ts[j // ntheta], thetas[j % ntheta]])
    margin = 1e-6 * rho0

    def resid(x):
        return caustic_point(fc, x[0], x[1]) + caustic_point(fc, x[2], x[3])

    lo = [-np.inf, margin, -np.inf, margin]
    hi = [np.inf, rho0 - margin, np.inf, rho0 - margin]
    sol = least_squares(resid, x0, bounds=(lo, hi), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    t1, ra, t2, rb = sol.x
    return (t1 % 1.0, t2 % 1.0, ra, rb), float(np.linalg.norm(resid(sol.x)))


def graft_antipodal(c, t1, t2, rho_a, rho_b, s, tol=ANTIPODAL_TOL):
    """Insert arcs of turning angle s about two antipodal caustic points.

    The rotations about chi and -chi cancel, so end frames and the lifted end
    frame are unchanged while total curvature grows by 2 s.
    """
    if s < 0:
        raise InvalidInputError("s must be non-negative", s=s)
    fc = integrate_frames(c)
    chi1 = caustic_point(fc, t1, rho_a)
    chi2 = caustic_point(fc, t2, rho_b)
    defect = float(np.linalg.norm(chi1 + chi2))
    if defect > tol:
        raise NotAntipodalError("caustic points are not antipodal", defect=defect, tol=tol)
    if s == 0:
        return c
    ref = float(c.lengths.mean())
    inserts = []
    for t, rho in ((t1, rho_a), (t2, rho_b)):
        ell, kap = _arc_pieces(s * np.sin(rho), _cot(rho), ref)
        inserts.append((t, ell, kap))
    return _insert_arcs(c, inserts)


# ---------------------------------------------------------------------------
# quadruple graft


@dataclass(frozen=True)
class QuadrupleSolution:
    sigma: np.ndarray
    residual: float
    iterations: int
    weights: np.ndarray


def _quat_of(sig, chi):
    return np.concatenate([[np.cos(sig / 2)], np.sin(sig / 2) * chi])


def _product(sigmas, chis):
    out = np.array([1.0, 0.0, 0.0, 0.0])
    for sig, chi in zip(sigmas, chis):
        out = geom3.qmul(out, _quat_of(sig, chi))
    return out


def solve_quadruple(chis, s, weights, max_iter=50, tol=1e-10):
    """Angles sigma_i >= 0 with sum s and prod exp(sigma_i chi_i / 2) = 1.

    Newton's method on the vector part with sigma_4 = s - sigma_1 - sigma_2 -
    sigma_3, exact Jacobian, halving the step while the residual grows.
    """
    chis = np.asarray(chis, dtype=float)
    x = s * np.asarray(weights, dtype=float)[:3]

    def full(x3):
        return np.concatenate([x3, [s - x3.sum()]])

    def residual(x3):
        return _product(full(x3), chis)[1:]

    def jacobian(x3):
        sig = full(x3)
        qs = [_quat_of(a, chi) for a, chi in zip(sig, chis)]
        derivs = []
        for j in range(4):
            out = np.array([1.0, 0.0, 0.0, 0.0])
            for i, q in enumerate(qs):
                factor = geom3.qmul(q, np.concatenate([[0.0], chis[i] / 2])) if i == j else q
                out = geom3.qmul(out, factor)
            derivs.append(out[1:])
        return np.column_stack([derivs[j] - derivs[3] for j in range(3)])

    r = residual(x)
    it = 0
    while np.linalg.norm(r) >= tol and it < max_iter:
        step = np.linalg.solve(jacobian(x), -r)
        lam = 1.0
        while True:
            trial = x + lam * step
            r_trial = residual(trial)
            if np.linalg.norm(r_trial) < np.linalg.norm(r) or lam < 1e-6:
                break
            lam *= 0.5
        x, r = trial, r_trial
        it += 1
    res = float(np.linalg.norm(r))
    sigma = full(x)
    if res >= tol or np.any(sigma < -1e-12):
        raise SolveFailureError(
            "quadruple graft equations did not converge", residual=res, iterations=it
        )
    return QuadrupleSolution(sigma, res, it, np.asarray(weights, dtype=float))


def graft_quadruple(c, ts, rhos, s, return_solution=False, **newton):
    """Insert four arcs about caustic points whose hull contains 0 in its interior.

    Total curvature grows by exactly s while end frames and the lifted end
    frame are unchanged.
    """
    ts = np.asarray(ts, dtype=float)
    rhos = np.asarray(rhos, dtype=float)
    if ts.shape != (4,) or rhos.shape != (4,):
        raise InvalidInputError("need four parameters and four radii")
    if s < 0:
        raise InvalidInputError("s must be non-negative", s=s)
    order = np.argsort(ts)
    ts, rhos = ts[order], rhos[order]
    fc = integrate_frames(c)
    chis = np.array([caustic_point(fc, t, r) for t, r in zip(ts, rhos)])
    loc = locate_origin(chis)
    if loc.tag != "interior" or len(loc.witness.indices) != 4:
        raise NotInHullError("0 is not interior to the hull of the four caustic points")
    weights = np.empty(4)
    weights[loc.witness.indices] = loc.witness.weights
    if s == 0:
        sol = QuadrupleSolution(np.zeros(4), 0.0, 0, weights)
        return (c, sol) if return_solution else c
    sol = solve_quadruple(chis, s, weights, **newton)
    ref = float(c.lengths.mean())
    inserts = []
    for t, rho, sig in zip(ts, rhos, sol.sigma):
        if sig > 0:
            ell, kap = _arc_pieces(sig * np.sin(rho), _cot(rho), ref)
            inserts.append((t, ell, kap))
    out = _insert_arcs(c, inserts)
    return (out, sol) if return_solution else out


# ---------------------------------------------------------------------------
# plane normalisation


@dataclass(eq=False)
class PlanePath:
    s_grid: np.ndarray
    curves: list  # (M, 2) arrays
    min_curvature: np.ndarray
    rotation_number: int
    final_radius: float


def resample_closed(points, M, oversample=16):
    """M points equally spaced in arc length along a closed curve.

    The samples are joined by a periodic cubic spline in chord length; a
    piecewise-linear resampling would put corners into the curvature.
    """
    P = np.asarray(points, dtype=float)
    Q = np.vstack([P, P[:1]])
    chord = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(Q, axis=0), axis=1))])
    spline = CubicSpline(chord, Q, bc_type="periodic")
    fine_u = np.linspace(0.0, chord[-1], oversample * max(M, len(P)) + 1)
    fine = spline(fine_u)
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(fine, axis=0), axis=1))])
    targets = np.arange(M) * arc[-1] / M
    return spline(np.interp(targets, arc, fine_u))


def menger_curvature(points):
    """Signed curvature of the circle through each point and its neighbours."""
    P = np.asarray(points, dtype=float)
    a, b = np.roll(P, 1, axis=0), np.roll(P, -1, axis=0)
    u, v = P - a, b - P
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    denom = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1) * np.linalg.norm(b - a, axis=1)
    return 2 * cross / denom


def _length(P):
    return float(np.sum(np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)))


def whitney_graustein_normalize(curves, kappa0=0.0, M=512, steps=16):
    """Deform closed plane curves of positive curvature to one circle.

    Three stages share a common s grid: a translation moving the start to
    -i R1 z (z the initial unit tangent), a scaling about the start to
    length 2 pi N R1, and interpolation of tangent angles towards 2 pi N t
    with the mean removed so curves stay closed.  The last stage is scaled by
    lambda(s) so curvature stays above a common level exceeding kappa0.
    """
    if kappa0 < 0:
        raise InvalidInputError("kappa0 must be non-negative", kappa0=kappa0)
    pts = [resample_closed(c, M) for c in curves]
    rot = [plane_rotation_number(p) for p in pts]
    if len(set(rot)) != 1 or rot[0] <= 0:
        raise InvalidFamilyError("curves need a common positive rotation number", rotation_numbers=rot)
    N = rot[0]
    for p in pts:
        if menger_curvature(p).min() <= kappa0:
            raise InvalidFamilyError("curvature must exceed kappa0", kappa0=kappa0)
    lengths = [_length(p) for p in pts]
    L0 = min(lengths)
    R1 = L0 / (2 * np.pi * N)
    if kappa0 > 0:
        R1 = min(R1, 0.9 / kappa0)
    L = 2 * np.pi * N * R1
    sub = np.linspace(0.0, 1.0, steps + 1)

    stage12 = []
    tangents = []
    for p in pts:
        z = (p[1] - p[-1]) / np.linalg.norm(p[1] - p[-1])
        zc = complex(z[0], z[1])
        tangents.append(zc)
        target = -1j * R1 * zc
        shift = np.array([target.real, target.imag]) - p[0]
        stage1 = [p + s * shift for s in sub]
        start = stage1[-1]
        factor = L / _length(start)
        stage2 = [start[0] + ((1 - s) + s * factor) * (start - start[0]) for s in sub[1:]]
        stage12.append(stage1 + stage2)

    # tangent angles relative to z, unwrapped, with theta(0) = 0
    t_mid = (np.arange(M) + 0.5) / M
    angle_data = []
    for family, zc in zip(stage12, tangents):
        P = family[-1]
        e = np.roll(P, -1, axis=0) - P
        ang = np.unwrap(np.angle((e[:, 0] + 1j * e[:, 1]) / zc))
        angle_data.append(ang - ang[0])

    def stage3_curve(theta_a, zc, s):
        theta = (1 - s) * theta_a + s * 2 * np.pi * N * t_mid
        tau = L * zc * np.exp(1j * theta)
        tau = tau - tau.mean()
        start = -1j * R1 * zc
        pos = start + np.concatenate([[0.0], np.cumsum(tau[:-1]) / M])
        return np.column_stack([pos.real, pos.imag])

    raw3 = [[stage3_curve(a, zc, s) for s in sub[1:]] for a, zc in zip(angle_data, tangents)]
    kmin3 = np.array([[menger_curvature(c).min() for c in fam] for fam in raw3]).min(axis=0)
    first = min(menger_curvature(fam[-1]).min() for fam in stage12)
    target_k = 0.5 * (kappa0 + first)
    lam = np.minimum(1.0, kmin3 / target_k) if target_k > 0 else np.ones_like(kmin3)

    s_grid = np.concatenate([sub / 3, 1 / 3 + sub[1:] / 3, 2 / 3 + sub[1:] / 3])
    out = []
    for fam, fam3 in zip(stage12, raw3):
        scaled = [lam_s * c for lam_s, c in zip(lam, fam3)]
        path = fam + scaled
        kmin = np.array([menger_curvature(c).min() for c in path])
        out.append(PlanePath(s_grid, path, kmin, N, float(R1 * lam[-1])))
    return out


# ---------------------------------------------------------------------------
# exotic family


EXOTIC_COLLAR = 0.1


def _g_curve(alpha, theta, n):
    if alpha <= 0:
        return bend_k_equator(1, 0.0, n)
    if alpha >= np.pi:
        return bend_k_equator(1, 1.0, n)
    c = bend_k_equator(1, alpha / np.pi, n)
    shift = int(round((theta % (2 * np.pi)) / (4 * np.pi) * n)) % n
    if shift == 0:
        return c
    # restarting the closed curve at t = shift / n with frame I
    return CurveSamples(np.roll(c.v, -shift), np.roll(c.kappa, -shift))


def _gbar_curve(alpha, theta, n):
    # r reflects across the yz-plane: azimuth theta -> pi - theta
    head = CurveSamples(np.full(2 * n // 3, 4 * np.pi), np.zeros(2 * n // 3))
    tail = _g_curve(alpha, np.pi - theta, n // 3)
    lengths = np.concatenate([head.lengths, tail.lengths])
    kappas = np.concatenate([head.kappa, tail.kappa])
    return from_pieces(lengths, kappas)


def _polar(p):
    p = geom3.normalize(p)
    alpha = float(np.arccos(np.clip(p[2], -1.0, 1.0)))
    theta = float(np.arctan2(p[1], p[0]))
    return alpha, theta


def exotic_sphere_family(kappa1, p, part="g", n=384):
    """The sphere of curves in the symmetric space of bound kappa1.

    ``part='g'`` is the bending family indexed by the sphere (circle once at
    the north pole, three times at the south pole), ``'gbar'`` the equator
    twice followed by g composed with the reflection, and ``'f'`` their sum,
    pinched along x = 0 with a collar of half-width 0.1 joining the two.
    """
    if not 1 < kappa1 <= np.sqrt(3):
        raise ObstructionError("exotic family needs 1 < kappa1 <= sqrt(3)", kappa1=kappa1)
    if n % 12:
        raise InvalidInputError("n must be divisible by 12", n=n)
    p = geom3.normalize(p)
    if part == "g":
        return _g_curve(*_polar(p), n)
    if part == "gbar":
        return _gbar_curve(*_polar(p), n)
    if part != "f":
        raise InvalidInputError("part must be 'g', 'gbar' or 'f'", part=part)
    x = p[0]
    delta = EXOTIC_COLLAR
    cap = np.arccos(delta)
    azimuth = float(np.arctan2(p[2], p[1]))
    if x >= delta:
        d = geom3.sphere_distance(p, geom3.E1)
        return _g_curve(np.pi * (1 - d / cap), azimuth, n)
    if x <= -delta:
        d = geom3.sphere_distance(p, -geom3.E1)
        return _gbar_curve(np.pi * (1 - d / cap), azimuth, n)
    return _g_curve(np.pi * (delta - x) / (2 * delta), 0.0, n)


# ---------------------------------------------------------------------------
# validation


@dataclass
class HomotopyReport:
    passed: bool
    memberships: list
    step_position: list
    step_frame: list
    lifted_signs: list
    max_abs_kappa: float
    failures: list

    def to_json(self):
        return {
            "passed": self.passed,
            "memberships": [m.to_json() for m in self.memberships],
            "step_position": self.step_position,
            "step_frame": self.step_frame,
            "lifted_signs": self.lifted_signs,
            "max_abs_kappa": self.max_abs_kappa,
            "failures": self.failures,
        }


def _frames_on(fc, T):
    if T == fc.n:
        return fc.frames
    return np.array([fc.frame_at(t) for t in np.linspace(0.0, 1.0, T + 1)])


def validate_homotopy(path, s, threshold=DEFAULT_THRESHOLD, tol=None):
    """Check membership of every curve and continuity between neighbours."""
    tol = {} if tol is None else {"tol": tol}
    fcs = [integrate_frames(c) for c in path.curves]
    memberships = [check_membership(c, s, fc=fc, **tol) for c, fc in zip(path.curves, fcs)]
    failures = []
    for i, rep in enumerate(memberships):
        if rep.curvature_margin <= 0:
            failures.append({"reason": "curvature-margin", "index": i, "margin": rep.curvature_margin})
        if not rep.member and rep.curvature_margin > 0:
            failures.append({"reason": "closure", "index": i, "defect": rep.closure_defect})
    signs = []
    for fc in fcs:
        try:
            signs.append(lifted_sign(fc, s.boundary_frame))
        except Exception:  # noqa: BLE001 - an unresolved sign is a failure, not a crash
            signs.append(0)
    if len(set(signs)) != 1 or 0 in signs:
        failures.append({"reason": "lifted-sign", "signs": signs})
    pos_steps, frame_steps = [], []
    for i in range(len(fcs) - 1):
        T = max(fcs[i].n, fcs[i + 1].n)
        Fa, Fb = _frames_on(fcs[i], T), _frames_on(fcs[i + 1], T)
        pa, pb = Fa[:, :, 0], Fb[:, :, 0]
        cosang = np.clip(np.sum(pa * pb, axis=1), -1.0, 1.0)
        pos_steps.append(float(np.arccos(cosang).max()))
        frame_steps.append(float(np.linalg.norm(Fa - Fb, axis=(1, 2)).max()))
        if frame_steps[-1] >= threshold:
            failures.append({"reason": "step", "index": i, "frame_distance": frame_steps[-1]})
    path.step_metric = frame_steps
    max_kappa = float(max(np.abs(c.kappa).max() for c in path.curves))
    return HomotopyReport(
        not failures, memberships, pos_steps, frame_steps, signs, max_kappa, failures
    )
