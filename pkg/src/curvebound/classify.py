"""Condensed and diffuse tests, rotation numbers, lifted sign and components."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import geom3
from .bands import DEFAULT_M, caustic_band_and_caustic
from .convexity import fibonacci_sphere, hemisphere_set_barycenter, locate_origin
from .curve import (
    CurvatureBound,
    SpaceSpec,
    check_membership,
    integrate_frames,
    total_curvature,
    translate_curve,
)
from .errors import (
    AnomalyError,
    InvalidSpaceError,
    MembershipError,
    NoHemisphereError,
    NotApplicableError,
    ResolutionError,
    UnclassifiableError,
)

INTEGER_SNAP = 1e-12
BOUNDARY_CONDENSED_MARGIN = 1e-6
SHEET_SCAN_STEPS = 256
DIFFUSE_SEARCH_RADIUS = 0.25
FAST_SEPARATION = 1e-3


def component_count(s):
    """floor(pi / width) + 1, taking the integer when the ratio is one."""
    ratio = np.pi / s.width
    nearest = np.round(ratio)
    base = nearest if abs(ratio - nearest) <= INTEGER_SNAP else np.floor(ratio)
    return int(base) + 1


def _require_member(c, s, fc=None):
    report = check_membership(c, s, fc=fc)
    if not report.member:
        raise MembershipError("curve is not a member of the space", **report.to_json())
    return report


def reduce_space(c, s):
    """Translate by rho2 into a space whose upper bound is +inf.

    Returns the translated curve and the reduced space; its lower bound is
    cot(rho1 - rho2), or -inf when the width is pi.
    """
    _require_member(c, s)
    return _reduce(c, s)


def _reduce(c, s):
    if not s.kappa2.finite and s.kappa2.value > 0:
        return c, s
    theta = s.rho2
    R = geom3.rotation_about_second_axis(theta)
    kappa0 = -np.inf if s.width >= np.pi else 1.0 / np.tan(s.width)
    reduced = SpaceSpec(kappa0, np.inf, R.T @ s.boundary_frame @ R)
    return translate_curve(c, theta), reduced


def _finite_rho0(kappa0):
    bound = CurvatureBound.parse(kappa0)
    rho0 = bound.rho()
    if not 0 < rho0 < np.pi:
        raise InvalidSpaceError(
            "condensed and diffuse are defined for a finite lower bound", kappa0=bound.to_json()
        )
    return bound, rho0


def caustic_cloud(c, kappa0, m=DEFAULT_M, fc=None):
    """Caustic band samples and caustic points, deduplicated, with the band."""
    fc = integrate_frames(c) if fc is None else fc
    band, chi = caustic_band_and_caustic(fc, kappa0, m)
    cloud = np.vstack([band.points[:-1].reshape(-1, 3), chi])
    # repeated points (caustic rows of circles) degrade the spatial trees
    return np.unique(np.round(cloud, 12), axis=0), band


# ---------------------------------------------------------------------------
# condensed / diffuse


@dataclass(frozen=True, eq=False)
class CondensedReport:
    condensed: bool
    boundary_condensed: bool
    witness: np.ndarray  # separating direction, None when not condensed
    margin: float

    def __bool__(self):
        return self.condensed


def is_condensed(c, kappa0, m=DEFAULT_M, fc=None, cloud=None):
    """Whether the caustic band lies in a closed hemisphere.

    ``margin`` is the signed distance from 0 to the hull of the band samples
    (positive inside).  When the mean direction of the samples already
    separates them by at least 1e-3 that separation is reported instead; it
    is a lower bound for the distance.  Condensed curves whose hull passes
    within 1e-6 of the origin are flagged ``boundary_condensed``.
    """
    _finite_rho0(kappa0)
    if cloud is None:
        cloud, _ = caustic_cloud(c, kappa0, m, fc)
    # cheap certificate first: the normalised mean already separates most clouds
    h = geom3.normalize(cloud.mean(axis=0)) if np.linalg.norm(cloud.mean(axis=0)) > 1e-9 else None
    if h is not None:
        gap = float(np.min(cloud @ h))
        if gap >= FAST_SEPARATION:
            return CondensedReport(True, False, h, -gap)
    loc = locate_origin(cloud)
    if loc.tag == "interior":
        return CondensedReport(False, False, None, loc.margin)
    boundary = abs(loc.margin) < BOUNDARY_CONDENSED_MARGIN
    return CondensedReport(True, boundary, loc.witness, loc.margin)


@dataclass(frozen=True, eq=False)
class DiffuseReport:
    diffuse: bool
    distance: object  # min |x + y| over band samples, None when far
    pair: tuple
    tol: float

    def __bool__(self):
        return self.diffuse


def grid_spacing(band):
    pts = band.points
    dt = np.linalg.norm(np.diff(pts, axis=0), axis=2).max()
    dth = np.linalg.norm(np.diff(pts, axis=1), axis=2).max()
    return float(max(dt, dth))


def is_diffuse(c, kappa0, m=DEFAULT_M, tol=None, fc=None, cloud=None):
    """Whether the caustic band contains an antipodal pair (to within tol).

    The default tolerance is half the largest grid spacing.
    """
    _finite_rho0(kappa0)
    if cloud is None:
        cloud, band = caustic_cloud(c, kappa0, m, fc)
    else:
        cloud, band = cloud
    if tol is None:
        tol = 0.5 * grid_spacing(band)
    # far queries are slow and irrelevant; distances beyond the bound read as None
    bound = max(4.0 * tol, DIFFUSE_SEARCH_RADIUS)
    dist, idx = cKDTree(cloud).query(-cloud, distance_upper_bound=bound)
    i = int(np.argmin(dist))
    if not np.isfinite(dist[i]):
        return DiffuseReport(False, None, None, float(tol))
    d = float(dist[i])
    return DiffuseReport(d <= tol, d, (cloud[i], -cloud[idx[i]]), float(tol))


# ---------------------------------------------------------------------------
# rotation numbers


def plane_rotation_number(points, return_defect=False):
    """Tangent winding of a closed polygon (last point joins the first)."""
    P = np.asarray(points, dtype=float)
    edges = np.roll(P, -1, axis=0) - P
    lens = np.linalg.norm(edges, axis=1)
    if np.any(lens <= 1e-15):
        raise ResolutionError("repeated consecutive points")
    e_next = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * e_next[:, 1] - edges[:, 1] * e_next[:, 0]
    dot = np.sum(edges * e_next, axis=1)
    turns = np.arctan2(cross, dot)
    if np.any(np.abs(turns) >= np.pi / 2):
        raise ResolutionError(
            "tangent turns by pi/2 or more in one step", max_turn=float(np.abs(turns).max())
        )
    total = turns.sum() / (2 * np.pi)
    nu = int(np.round(total))
    if return_defect:
        return nu, float(abs(total - nu))
    return nu


def condensed_rotation_number(c, kappa0=None, fc=None, condensed=None):
    """Minus the winding of the stereographic image from the antipode of h."""
    fc = integrate_frames(c) if fc is None else fc
    pts = fc.positions[:-1]
    try:
        h = hemisphere_set_barycenter(pts, closed=True)
    except NoHemisphereError:
        # equatorial curves: no lattice direction is accepted; use a witness
        if condensed is None and kappa0 is not None:
            condensed = is_condensed(c, kappa0, fc=fc)
        if condensed is not None and condensed.condensed:
            h = condensed.witness
        else:
            loc = locate_origin(pts)
            if loc.tag == "interior":
                raise
            h = loc.witness
    eta = geom3.stereographic(pts, h)
    return -plane_rotation_number(eta), h


class _ColumnMembership:
    """Exact test of x = B(t, theta) for some t and theta in [lo, hi].

    Column t is the half great circle orthogonal to t(t); within an interval
    <x, t> = A cos(phi) + B sin(phi) with phi the rotation angle, so its zeros
    are found in closed form.  Per-interval data is computed once.
    """

    def __init__(self, fc, lo, hi):
        base = fc.base
        self.fc, self.lo, self.hi = fc, lo, hi
        self.frames = fc.frames[:-1]
        self.tangents = fc.tangents[:-1]
        self.speed = np.hypot(base.v, base.w)
        self.Bvec = (
            -base.v[:, None] * self.frames[:, :, 0] + base.w[:, None] * self.frames[:, :, 2]
        ) / self.speed[:, None]
        self.phi_end = self.speed / fc.n

    def __call__(self, X):
        """Membership of each row of X (or of a single point)."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        T = self.tangents @ X.T  # (n, k)
        Bc = self.Bvec @ X.T
        phi0 = np.arctan2(-T, Bc)  # zero of A cos + B sin, modulo pi
        out = np.zeros(len(X), dtype=bool)
        for shift in (0.0, np.pi, -np.pi, 2 * np.pi):
            phi = phi0 + shift
            i, j = np.nonzero((phi >= -1e-15) & (phi <= self.phi_end[:, None] + 1e-15))
            if len(i) == 0:
                continue
            base = self.fc.base
            R, _ = geom3.frame_steps(base.v[i], base.w[i], phi[i, j] / self.speed[i])
            F = self.frames[i] @ R
            x = X[j]
            theta = np.arctan2(np.einsum("kd,kd->k", F[:, :, 2], x), np.einsum("kd,kd->k", F[:, :, 0], x))
            ok = (theta >= self.lo - 1e-12) & (theta <= self.hi + 1e-12)
            out[j[ok]] = True
        return bool(out[0]) if single else out


def _scan_point(fc, theta):
    g, nn = fc.positions[0], fc.normals[0]
    return np.cos(theta) * g + np.sin(theta) * nn


def annulus_point(fc, rho0, steps=SHEET_SCAN_STEPS):
    """A point of the sphere outside both the caustic band C and its antipode D.

    Scans the great circle through gamma(0) orthogonal to t(0) from inside D
    towards gamma(0) in C, takes the gap between the last point of D and the
    first point of C, and bisects both ends before taking the midpoint.
    """
    band = _ColumnMembership(fc, 0.0, rho0)
    in_C = band
    in_D = lambda x: band(-np.asarray(x))  # noqa: E731
    thetas = np.linspace(rho0 - np.pi, 0.0, steps + 1)
    scan = np.array([_scan_point(fc, th) for th in thetas])
    hits_C = np.flatnonzero(in_C(scan))
    first_C = int(hits_C[0]) if len(hits_C) else None
    last_D = None
    if first_C:
        hits_D = np.flatnonzero(in_D(scan[:first_C]))
        last_D = int(hits_D[-1]) if len(hits_D) else None
    if last_D is not None:
        a = _bisect(fc, in_D, thetas[last_D], thetas[last_D + 1])
        b = _bisect(fc, in_C, thetas[first_C], thetas[first_C - 1])
        x = _scan_point(fc, 0.5 * (a + b))
        if not in_C(x) and not in_D(x):
            return x, {"theta_D": a, "theta_C": b, "method": "scan"}
    return _fallback_annulus_point(fc, rho0), {"method": "fallback"}


def _bisect(fc, member, inside, outside, iterations=50):
    for _ in range(iterations):
        mid = 0.5 * (inside + outside)
        if member(_scan_point(fc, mid)):
            inside = mid
        else:
            outside = mid
    return inside


def _fallback_annulus_point(fc, rho0, m=DEFAULT_M):
    band, chi = caustic_band_and_caustic(fc, CurvatureBound(1.0 / np.tan(rho0)).value, m)
    cloud = np.vstack([band.points.reshape(-1, 3), chi])
    cloud = np.vstack([cloud, -cloud])
    cand = fibonacci_sphere(4000)
    dist, _ = cKDTree(cloud).query(cand)
    best = int(np.argmax(dist))
    if dist[best] <= 0:
        raise UnclassifiableError("no point outside the band and its antipode")
    return cand[best]


def sheet_rotation_number(c, kappa0, fc=None):
    """Half the number of strict sign changes of <t(t), b> for b in the annulus."""
    _, rho0 = _finite_rho0(kappa0)
    fc = integrate_frames(c) if fc is None else fc
    b, info = annulus_point(fc, rho0)
    vals = fc.tangents[:-1] @ b
    signs = np.sign(vals[np.abs(vals) > 1e-14])
    changes = int(np.sum(signs != np.roll(signs, -1)))
    info = dict(info, b=b, sign_changes=changes)
    return changes // 2, info


def rotation_number(c, kappa0, mode="auto", fc=None, m=DEFAULT_M, return_info=False):
    """Rotation number by the hemisphere chart, by sheet counting, or both.

    In ``auto`` mode the chart value is used for condensed curves and checked
    against the sheet count whenever the curve is also non-diffuse.
    """
    fc = integrate_frames(c) if fc is None else fc
    info = {}
    if mode == "condensed":
        nu, h = condensed_rotation_number(c, kappa0, fc)
        info["h"] = h
    elif mode == "nondiffuse":
        nu, sheet = sheet_rotation_number(c, kappa0, fc)
        info["sheet"] = sheet
    elif mode == "auto":
        cloud, band = caustic_cloud(c, kappa0, m, fc)
        cond = is_condensed(c, kappa0, m, fc, cloud=cloud)
        diff = is_diffuse(c, kappa0, m, fc=fc, cloud=(cloud, band))
        info.update(condensed=cond.condensed, diffuse=diff.diffuse)
        if cond.condensed:
            nu, h = condensed_rotation_number(c, kappa0, fc, cond)
            info["h"] = h
            if not diff.diffuse:
                nu_sheet, sheet = sheet_rotation_number(c, kappa0, fc)
                info["sheet"] = sheet
                if nu_sheet != nu:
                    raise AnomalyError(
                        "rotation numbers disagree", condensed=nu, nondiffuse=nu_sheet
                    )
        elif not diff.diffuse:
            nu, sheet = sheet_rotation_number(c, kappa0, fc)
            info["sheet"] = sheet
        else:
            raise UnclassifiableError("curve is neither condensed nor non-diffuse")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return (nu, info) if return_info else nu


# ---------------------------------------------------------------------------
# lifted sign and classification


def lifted_sign(fc, Q=None):
    """+1 when the lifted frame returns to its start (relative to the lift of Q)."""
    Q = np.eye(3) if Q is None else np.asarray(Q, dtype=float)
    rel = geom3.qmul(geom3.qconj(fc.lifts[0]), fc.lifts[-1])
    zq = geom3.quaternion_lifts(Q)[0]
    d_plus = np.linalg.norm(rel - zq)
    d_minus = np.linalg.norm(rel + zq)
    if d_plus > 0.5 and d_minus > 0.5:
        raise ResolutionError("lifted end frame is not near either lift", d_plus=d_plus, d_minus=d_minus)
    return 1 if d_plus < d_minus else -1


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    space: SpaceSpec
    condensed: object  # bool, or None when undefined for the space
    diffuse: object
    rotation_number: object
    lifted_sign: int
    component_index: int
    n: int
    diagnostics: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "space": self.space.to_json(),
            "condensed": self.condensed,
            "diffuse": self.diffuse,
            "rotation_number": self.rotation_number,
            "lifted_sign": self.lifted_sign,
            "component_index": self.component_index,
            "n": self.n,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def classify_curve(c, s, m=DEFAULT_M):
    fc = integrate_frames(c)
    _require_member(c, s, fc)
    n = component_count(s)
    sign = lifted_sign(fc, s.boundary_frame)
    reduced, rs = _reduce(c, s)
    kappa0 = rs.kappa1
    diag = {"kappa0": kappa0.to_json()}
    if not kappa0.finite:
        index = 1 if sign == -1 else 2
        return ClassificationResult(s, None, None, None, sign, index, n, diag)
    rfc = integrate_frames(reduced)
    cloud, band = caustic_cloud(reduced, kappa0.value, m, rfc)
    cond = is_condensed(reduced, kappa0.value, m, rfc, cloud=cloud)
    diff = is_diffuse(reduced, kappa0.value, m, fc=rfc, cloud=(cloud, band))
    diag.update(
        condensed_margin=cond.margin,
        boundary_condensed=cond.boundary_condensed,
        diffuse_distance=diff.distance,
    )
    nu = None
    if cond.condensed:
        nu, h = condensed_rotation_number(reduced, kappa0.value, rfc, cond)
        diag["h"] = h
        if not diff.diffuse:
            nu_sheet, sheet = sheet_rotation_number(reduced, kappa0.value, rfc)
            diag["sheet_rotation_number"] = nu_sheet
            if nu_sheet != nu and not cond.boundary_condensed:
                raise AnomalyError(
                    "rotation numbers disagree",
                    condensed=nu,
                    nondiffuse=nu_sheet,
                    diagnostics=_jsonable(diag),
                )
    if cond.condensed and not cond.boundary_condensed and nu is not None and nu <= n - 2:
        index = nu
    else:
        index = n - 1 if sign == (-1) ** (n - 1) else n
    if index < 1 or (index <= n - 2 and sign != (-1) ** index):
        raise AnomalyError(
            "component index inconsistent with the lifted sign",
            index=index,
            lifted_sign=sign,
            diagnostics=_jsonable(diag),
        )
    return ClassificationResult(s, cond.condensed, diff.diffuse, nu, sign, index, n, diag)


def same_component(c1, c2, s, m=DEFAULT_M):
    return classify_curve(c1, s, m).component_index == classify_curve(c2, s, m).component_index


@dataclass(frozen=True)
class TotalCurvatureReport:
    total_curvature: float
    rotation_number: int
    bound: float
    slack: float
    satisfied: bool

    def to_json(self):
        return dict(self.__dict__)


def total_curvature_bound_check(c, kappa0, m=DEFAULT_M):
    """Compare tot(c) with 4 pi nu / cos^2(rho0 / 2) for a non-diffuse curve."""
    _, rho0 = _finite_rho0(kappa0)
    fc = integrate_frames(c)
    if is_diffuse(c, kappa0, m, fc=fc).diffuse:
        raise NotApplicableError("the bound applies to non-diffuse curves")
    nu, _ = sheet_rotation_number(c, kappa0, fc)
    tot = total_curvature(c)
    bound = 4 * np.pi * nu / np.cos(rho0 / 2) ** 2
    return TotalCurvatureReport(tot, nu, float(bound), float(bound - tot), bool(tot <= bound))
