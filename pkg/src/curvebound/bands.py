"""Regular and caustic bands of a framed curve and diagnostics on them.

A band is the map (t, theta) -> cos(theta) gamma(t) + sin(theta) n(t) sampled
on the curve's t grid and a theta grid that always contains theta = 0.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import geom3
from .curve import CurvatureBound, CurveSamples, check_membership, space
from .errors import (
    InvalidPathError,
    InvalidSpaceError,
    MembershipError,
    ResolutionError,
)

DEFAULT_M = 64


@dataclass(frozen=True, eq=False)
class BandGrid:
    kind: str
    t_grid: np.ndarray
    theta_grid: np.ndarray
    points: np.ndarray  # (n+1, m+1, 3)
    zero_index: int
    fc: object  # the FramedCurve the band was built from

    @property
    def n(self):
        return len(self.t_grid) - 1

    @property
    def m(self):
        return len(self.theta_grid) - 1

    @property
    def lo(self):
        return float(self.theta_grid[0])

    @property
    def hi(self):
        return float(self.theta_grid[-1])

    def row(self, j):
        return self.points[:, j]

    def evaluate(self, t, theta):
        """Exact band point at an arbitrary parameter pair."""
        F = self.fc.frame_at(t % 1.0)
        return np.cos(theta) * F[:, 0] + np.sin(theta) * F[:, 2]


@dataclass(frozen=True)
class CrossingInterval:
    tau1: float
    tau2: float
    degenerate: bool


def theta_grid(lo, hi, m):
    """m intervals spanning [lo, hi], uniform on each side of 0, with 0 a node."""
    if m < 2:
        raise ValueError("m must be at least 2")
    if lo < 0 < hi:
        m_lo = int(round(m * (-lo) / (hi - lo)))
        m_lo = min(max(m_lo, 1), m - 1)
        grid = np.concatenate([np.linspace(lo, 0.0, m_lo + 1), np.linspace(0.0, hi, m - m_lo + 1)[1:]])
        return grid, m_lo
    grid = np.linspace(lo, hi, m + 1)
    if hi <= 0:
        grid[-1] = 0.0
        return grid, m
    grid[0] = 0.0
    return grid, 0


def _band_points(fc, thetas):
    gam = fc.positions[:, None, :]
    nor = fc.normals[:, None, :]
    c = np.cos(thetas)[None, :, None]
    s = np.sin(thetas)[None, :, None]
    return c * gam + s * nor


def extended_band(fc, lo, hi, m=DEFAULT_M, kind="extended"):
    """Band over an arbitrary theta range containing 0."""
    if not lo <= 0 <= hi:
        raise InvalidSpaceError("theta range must contain 0", lo=lo, hi=hi)
    thetas, zero = theta_grid(lo, hi, m)
    pts = _band_points(fc, thetas)
    return BandGrid(kind, fc.t_grid, thetas, pts, zero, fc)


def regular_band(fc, s, m=DEFAULT_M):
    report = check_membership(fc.base, s, fc=fc)
    if not report.member:
        raise MembershipError("curve is not a member of the space", **report.to_json())
    return extended_band(fc, s.rho1 - np.pi, s.rho2, m, kind="regular")


def caustic_points(fc):
    """Centers of the osculating circles, one per interval (constant on arcs)."""
    rho = fc.base.rho
    gam = fc.positions[:-1]
    nor = fc.normals[:-1]
    return np.cos(rho)[:, None] * gam + np.sin(rho)[:, None] * nor


def _rho0(kappa0):
    bound = CurvatureBound.parse(kappa0)
    rho0 = bound.rho()
    if not 0 < rho0 < np.pi:
        raise InvalidSpaceError("caustic band needs a finite lower bound", kappa0=bound.to_json())
    return bound, rho0


def caustic_band_and_caustic(fc, kappa0, m=DEFAULT_M):
    bound, rho0 = _rho0(kappa0)
    report = check_membership(fc.base, space(bound.value, np.inf), fc=fc)
    if not report.member:
        raise MembershipError("curve is not a member of the space", **report.to_json())
    thetas = np.linspace(0.0, rho0, m + 1)
    band = BandGrid("caustic", fc.t_grid, thetas, _band_points(fc, thetas), 0, fc)
    return band, caustic_points(fc)


def check_curve(fc, kappa0):
    """The curve C(t, rho0) traversed with the tangent that makes its curvature positive.

    Its radius of curvature is rho0 - rho, so it exists only when every
    rho < rho0.
    """
    _, rho0 = _rho0(kappa0)
    c = fc.base
    rho = c.rho
    if np.any(rho >= rho0):
        raise MembershipError("curvature not strictly above the bound", rho_max=float(rho.max()))
    v = c.v * np.sin(rho0 - rho) / np.sin(rho)
    kappa = 1.0 / np.tan(rho0 - rho)
    flip = np.diag([1.0, -1.0, -1.0])
    return CurveSamples(v, kappa, c.q0 @ geom3.rotation_about_second_axis(rho0) @ flip)


# ---------------------------------------------------------------------------
# self intersections


@dataclass(frozen=True)
class BandContact:
    t1: float
    theta1: float
    t2: float
    theta2: float
    interior: bool


@dataclass(frozen=True)
class SelfIntersectionReport:
    classification: str
    contacts: list

    def to_json(self):
        return {
            "classification": self.classification,
            "contacts": [c.__dict__ for c in self.contacts],
        }


def _column_hit(fc, x, k, span):
    """Parameter near column k where the column's great circle passes through x.

    Columns are the half great circles orthogonal to the tangent, so x lies on
    column t exactly when <x, t(t)> = 0.  Returns (t, theta) or None.
    """
    n = fc.n
    idx = np.arange(k - span, k + span + 1)
    tang = fc.tangents[idx % n]
    vals = tang @ x
    sign_change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
    best = None
    for j in sign_change:
        a, b = vals[j], vals[j + 1]
        frac = 0.5 if a == b else a / (a - b)
        t = ((idx[j] + frac) / n) % 1.0
        F = fc.frame_at(t)
        theta = float(np.arctan2(np.dot(x, F[:, 2]), np.dot(x, F[:, 0])))
        if best is None or abs(theta) < abs(best[1]):
            best = (t, theta)
    return best


def band_self_intersections(b, tol=None):
    """Classify a regular or extended band as simple, quasi_simple or neither.

    Candidate pairs come from a nearest-pair scan of the grid points; each is
    then checked exactly against the other column.  An overlap of two points
    that are both inside the band by a margin of two theta steps makes the
    band ``neither``; contacts involving a boundary row only make it
    ``quasi_simple``.
    """
    if b.kind == "caustic":
        raise InvalidSpaceError("self-intersection test applies to regular bands")
    fc = b.fc
    n, m = b.n, b.m
    v = fc.base.v
    if tol is None:
        tol = 3.0 * float(v.max()) / n
    pts = b.points[:-1]
    dt_step = np.linalg.norm(pts[1:] - pts[:-1], axis=2).max() if n > 1 else 0.0
    dth_step = np.linalg.norm(pts[:, 1:] - pts[:, :-1], axis=2).max() if m > 0 else 0.0
    if np.hypot(dt_step, dth_step) > 3.0 * tol:
        raise ResolutionError("band grid too coarse for the tolerance", tol=tol)

    rho = fc.base.rho
    row_speed = np.abs(np.sin(rho[:, None] - b.theta_grid[None, :])) / np.sin(rho)[:, None]
    min_speed = max(float((v[:, None] * row_speed).min()), 1e-12)
    window = int(np.ceil(2.0 * tol / (min_speed / n)))
    window = min(window, n // 4)

    flat = pts.reshape(-1, 3)
    pairs = cKDTree(flat).query_pairs(r=tol, output_type="ndarray")
    ti, ji = pairs[:, 0] // (m + 1), pairs[:, 0] % (m + 1)
    tk, jk = pairs[:, 1] // (m + 1), pairs[:, 1] % (m + 1)
    gap = np.abs(ti - tk)
    gap = np.minimum(gap, n - gap)
    keep = gap > window
    ti, ji, tk, jk = ti[keep], ji[keep], tk[keep], jk[keep]

    dtheta = np.diff(b.theta_grid).max() if m > 0 else 0.0
    margin = 2.0 * dtheta
    slack = 0.25 * dtheta + 1e-12
    lo, hi = b.lo, b.hi
    contacts = []
    candidates = np.concatenate(
        [np.column_stack([ti, ji, tk]), np.column_stack([tk, jk, ti])]
    )
    seen = set()
    for src_t, src_j, col in np.unique(candidates, axis=0):
        x = pts[src_t, src_j]
        hit = _column_hit(fc, x, int(col), 2)
        if hit is None:
            continue
        t2, theta2 = hit
        if not lo - slack <= theta2 <= hi + slack:
            continue
        t1 = src_t / n
        d = abs(t1 - t2)
        if min(d, 1 - d) * n <= window:
            continue
        theta1 = float(b.theta_grid[src_j])
        interior = (lo + margin < theta1 < hi - margin) and (lo + margin < theta2 < hi - margin)
        key = (src_t, src_j, round(t2 * n, 3))
        if key in seen:
            continue
        seen.add(key)
        contacts.append(BandContact(float(t1), theta1, float(t2), theta2, bool(interior)))
    if any(c.interior for c in contacts):
        label = "neither"
    elif contacts:
        label = "quasi_simple"
    else:
        label = "simple"
    return SelfIntersectionReport(label, contacts)


# ---------------------------------------------------------------------------
# crossings


def _column_states(vals, tol):
    lo, hi = vals.min(axis=-1), vals.max(axis=-1)
    state = np.zeros(len(vals), dtype=int)  # 0: neither
    state[lo >= -tol] = 1
    state[hi <= tol] = -1
    state[(lo >= -tol) & (hi <= tol)] = 2  # column lies in the circle
    return state


def crossing_intervals(b, great_circle_normal, tol=None):
    """Minimal parameter intervals over which the band passes between the two
    closed disks bounded by the great circle with the given normal."""
    if b.n < 64:
        raise ResolutionError("crossing intervals need at least 64 columns", n=b.n)
    nrm = geom3.normalize(great_circle_normal)
    pts = b.points[:-1]
    n = b.n
    if tol is None:
        step = np.linalg.norm(pts[:, 1:] - pts[:, :-1], axis=2).max() if b.m else 0.0
        tol = 0.5 * step**2 + 1e-9
    vals = pts @ nrm
    state = _column_states(vals, tol)
    out = []
    for i in np.flatnonzero(state == 2):
        out.append(CrossingInterval(i / n, i / n, True))
    signed = np.flatnonzero((state == 1) | (state == -1))
    if len(signed) == 0:
        return sorted(out, key=lambda c: c.tau1)
    for a, c in zip(signed, np.roll(signed, -1)):
        if state[a] == state[c] and len(signed) > 1:
            continue
        if len(signed) == 1:
            break
        between = (np.arange(a + 1, a + 1 + (c - a - 1) % n)) % n
        if np.any(state[between] == 2):
            continue
        width = ((c - a) % n) / n
        if width == 1 / n:
            out.append(_refine_adjacent(b, a, nrm, tol))
        else:
            out.append(CrossingInterval(a / n, a / n + width, False))
    return sorted(out, key=lambda c: c.tau1)


def _refine_adjacent(b, a, nrm, tol):
    """Sign switch between neighbouring columns: locate the column in between."""
    n = b.n
    va = b.points[a, :, :] @ nrm
    vb = b.points[(a + 1) % n, :, :] @ nrm
    fa, fb = va.mean(), vb.mean()
    frac = 0.5 if fa == fb else fa / (fa - fb)
    t = (a + frac) / n
    column = np.array([b.evaluate(t, th) for th in b.theta_grid])
    if np.abs(column @ nrm).max() <= tol:
        return CrossingInterval(t % 1.0, t % 1.0, True)
    return CrossingInterval(a / n, (a + 1) / n, False)


# ---------------------------------------------------------------------------
# crossing length


def _distance_to_polyline(x, row):
    a, c = row[:-1], row[1:]
    d = c - a
    dd = np.sum(d * d, axis=1)
    t = np.clip(np.sum((x - a) * d, axis=1) / np.where(dd > 0, dd, 1.0), 0.0, 1.0)
    q = a + t[:, None] * d
    return float(np.min(np.linalg.norm(q - x, axis=1)))


def path_length(path):
    """Length of the geodesic polygon through the path's points."""
    P = np.asarray(path, dtype=float)
    cross = np.linalg.norm(np.cross(P[:-1], P[1:]), axis=1)
    dots = np.sum(P[:-1] * P[1:], axis=1)
    return float(np.sum(np.arctan2(cross, dots)))


def min_crossing_length(b, path, tol=None):
    """Polygonal length of a path joining the two boundary curves of the band."""
    P = np.asarray(path, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) < 2:
        raise InvalidPathError("path must be an (k, 3) array with k >= 2")
    lower, upper = b.points[:, 0], b.points[:, -1]
    if tol is None:
        # chord sagitta of the boundary polylines: step^2 * (space curvature) / 8
        rho = b.fc.base.rho
        sagitta = 0.0
        for row, theta in ((lower, b.lo), (upper, b.hi)):
            step = np.linalg.norm(np.diff(row, axis=0), axis=1).max()
            k_space = np.sqrt(1.0 + 1.0 / np.tan(rho - theta) ** 2).max()
            sagitta = max(sagitta, step**2 * k_space / 8)
        tol = 1e-6 + 1.5 * sagitta
    d_start = (_distance_to_polyline(P[0], lower), _distance_to_polyline(P[0], upper))
    d_end = (_distance_to_polyline(P[-1], lower), _distance_to_polyline(P[-1], upper))
    ok = (d_start[0] <= tol and d_end[1] <= tol) or (d_start[1] <= tol and d_end[0] <= tol)
    if not ok:
        raise InvalidPathError(
            "path endpoints must lie on opposite boundary curves",
            start=list(d_start),
            end=list(d_end),
            tol=tol,
        )
    return path_length(P)
