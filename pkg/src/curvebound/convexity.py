"""Convexity toolkit on R^3 and S^2.

Hulls, origin location with certificates, simplices of cloud points
containing a given point, geodesic convexification, and barycenters of the
set of hemispheres that contain a cloud.
"""

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull

from . import geom3
from .errors import InvalidInputError, NoHemisphereError, NotInHullError

BOUNDARY_TOL = 1e-8
LP_VERTEX_CAP = 512
DEFAULT_GRID_DIRS = 20000
GRID_ENV = "CURVEBOUND_GRID_DIRS"


def default_grid_dirs():
    """Hemisphere lattice size; the environment variable overrides the default."""
    raw = os.environ.get(GRID_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_GRID_DIRS
    try:
        value = int(raw)
    except ValueError as exc:
        raise InvalidInputError(f"{GRID_ENV} must be an integer", value=raw) from exc
    if value < 100:
        raise InvalidInputError(f"{GRID_ENV} must be at least 100", value=value)
    return value


def _as_cloud(cloud):
    pts = np.asarray(cloud, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise InvalidInputError("a cloud is an (m, 3) array")
    if len(pts) == 0:
        raise InvalidInputError("empty cloud")
    return pts


# ---------------------------------------------------------------------------
# hulls


@dataclass(frozen=True, eq=False)
class Hull:
    """Convex hull of a cloud together with its affine dimension.

    For ``dim == 3`` the facets are Qhull's triangles with outward
    ``equations`` (normal, offset), normal . x + offset <= 0 inside.  Lower
    dimensions keep the affine frame (``origin``, ``basis``) and the vertex
    indices in order around the hull.
    """

    dim: int
    points: np.ndarray
    vertices: np.ndarray
    simplices: np.ndarray = field(default=None)
    equations: np.ndarray = field(default=None)
    origin: np.ndarray = field(default=None)
    basis: np.ndarray = field(default=None)

    @property
    def n_facets(self):
        """Number of distinct facet planes (coplanar triangles merged)."""
        if self.dim < 3:
            return 0
        return len(np.unique(np.round(self.equations, 9), axis=0))


def affine_rank(pts, tol=1e-10):
    centered = pts - pts.mean(axis=0)
    if len(pts) == 1:
        return 0, pts[0], np.zeros((0, 3))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(pts).max()))
    rank = int(np.sum(s > tol * scale * np.sqrt(len(pts))))
    return rank, pts.mean(axis=0), vt[:rank]


def convex_hull3(cloud):
    pts = _as_cloud(cloud)
    rank, origin, basis = affine_rank(pts)
    if rank == 3:
        hull = ConvexHull(pts)
        return Hull(3, pts, hull.vertices, hull.simplices, hull.equations)
    if rank == 0:
        return Hull(0, pts, np.array([0]), origin=pts[0], basis=basis)
    coords = (pts - origin) @ basis.T
    if rank == 1:
        order = np.argsort(coords[:, 0])
        return Hull(1, pts, np.array([order[0], order[-1]]), origin=origin, basis=basis)
    hull2 = ConvexHull(coords)
    return Hull(2, pts, hull2.vertices, origin=origin, basis=basis)


# ---------------------------------------------------------------------------
# closest points


def closest_points_on_triangles(A, B, C):
    """Closest point to the origin on each triangle (rows of A, B, C)."""
    ab, ac = B - A, C - A
    ap, bp, cp = -A, -B, -C
    dot = lambda x, y: np.sum(x * y, axis=-1)  # noqa: E731
    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)
        inside = A + ab * (vb * denom)[:, None] + ac * (vc * denom)[:, None]
    conds = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
    ]
    choices = [
        A,
        B,
        A + ab * np.nan_to_num(t_ab)[:, None],
        C,
        A + ac * np.nan_to_num(t_ac)[:, None],
        B + (C - B) * np.nan_to_num(t_bc)[:, None],
    ]
    out = inside
    for cond, choice in reversed(list(zip(conds, choices))):
        out = np.where(cond[:, None], choice, out)
    return out


def _closest_on_segment(a, b):
    d = b - a
    dd = np.dot(d, d)
    t = 0.0 if dd == 0 else float(np.clip(-np.dot(a, d) / dd, 0.0, 1.0))
    return a + t * d


def closest_point_to_origin(hull):
    """Point of the hull nearest to the origin."""
    pts = hull.points
    if hull.dim == 0:
        return pts[0].copy()
    if hull.dim == 1:
        a, b = pts[hull.vertices[0]], pts[hull.vertices[1]]
        return _closest_on_segment(a, b)
    if hull.dim == 2:
        normal = np.cross(hull.basis[0], hull.basis[1])
        foot = -np.dot(hull.origin, normal) * normal  # projection of 0 on the plane
        poly = pts[hull.vertices]
        if _in_polygon(hull, foot):
            return foot
        best = None
        for a, b in zip(poly, np.roll(poly, -1, axis=0)):
            q = _closest_on_segment(a, b)
            if best is None or np.dot(q, q) < np.dot(best, best):
                best = q
        return best
    tri = pts[hull.simplices]
    q = closest_points_on_triangles(tri[:, 0], tri[:, 1], tri[:, 2])
    return q[np.argmin(np.sum(q * q, axis=1))]


def _in_polygon(hull, x, tol=1e-12):
    """Whether x (in the hull's plane) lies in the planar hull (boundary included)."""
    poly = (hull.points[hull.vertices] - hull.origin) @ hull.basis.T
    p = (x - hull.origin) @ hull.basis.T
    nxt = np.roll(poly, -1, axis=0)
    cross = (nxt[:, 0] - poly[:, 0]) * (p[1] - poly[:, 1]) - (nxt[:, 1] - poly[:, 1]) * (
        p[0] - poly[:, 0]
    )
    return bool(np.all(cross >= -tol))


# ---------------------------------------------------------------------------
# simplices


@dataclass(frozen=True, eq=False)
class Simplex:
    indices: np.ndarray
    vertices: np.ndarray
    weights: np.ndarray

    @property
    def dim(self):
        return len(self.indices) - 1

    def reconstruct(self):
        return self.weights @ self.vertices


def _barycentric(vertices, p):
    M = np.vstack([vertices.T, np.ones(len(vertices))])
    rhs = np.concatenate([p, [1.0]])
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return lam


def _affinely_independent(vertices, tol=1e-10):
    M = np.vstack([vertices.T, np.ones(len(vertices))])
    return np.linalg.matrix_rank(M, tol=tol) == len(vertices)


def caratheodory_reduce(points, weights, tol=1e-13):
    """Drop points from a convex combination until they are affinely independent."""
    idx = np.flatnonzero(weights > tol)
    lam = weights[idx].astype(float)
    while len(idx) > 1 and not _affinely_independent(points[idx]):
        M = np.vstack([points[idx].T, np.ones(len(idx))])
        _, _, vt = np.linalg.svd(M)
        mu = vt[-1]
        if not np.any(mu > tol):
            mu = -mu
        pos = mu > tol
        ratios = np.full(len(mu), np.inf)
        ratios[pos] = lam[pos] / mu[pos]
        k = int(np.argmin(ratios))
        lam = lam - ratios[k] * mu
        lam[k] = 0.0
        keep = lam > tol
        idx, lam = idx[keep], lam[keep]
    return idx, lam / lam.sum()


def _lp_combination(pts, p, cost):
    m = len(pts)
    A_eq = np.vstack([pts.T, np.ones(m)])
    b_eq = np.concatenate([p, [1.0]])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    return res.x if res.status == 0 else None


def steinitz_simplex(cloud, p, tol=1e-9):
    """At most four affinely independent cloud points whose simplex contains p."""
    pts = _as_cloud(cloud)
    p = np.asarray(p, dtype=float)
    hit = np.flatnonzero(np.linalg.norm(pts - p, axis=1) <= 1e-12)
    if len(hit):
        i = hit[:1]
        return Simplex(i, pts[i], np.array([1.0]))
    lam = _lp_combination(pts, p, np.zeros(len(pts)))
    if lam is None:
        raise NotInHullError("point is not in the convex hull of the cloud")
    idx, _ = caratheodory_reduce(pts, np.clip(lam, 0, None))
    weights = _barycentric(pts[idx], p)
    if np.any(weights < -tol) or np.linalg.norm(weights @ pts[idx] - p) > tol:
        raise NotInHullError("point is not in the convex hull of the cloud")
    return Simplex(idx, pts[idx], weights)


def interior_simplex(cloud, p=None, attempts=12):
    """A tetrahedron of cloud points containing p (default 0), weights maximised.

    Several deterministic linear objectives pick different vertex solutions;
    the one whose smallest barycentric weight is largest is returned.
    """
    pts = _as_cloud(cloud)
    p = np.zeros(3) if p is None else np.asarray(p, dtype=float)
    fib = fibonacci_sphere(attempts)
    best = None
    for j in range(attempts):
        cost = pts @ fib[j]
        lam = _lp_combination(pts, p, cost)
        if lam is None:
            continue
        idx, _ = caratheodory_reduce(pts, np.clip(lam, 0, None))
        if len(idx) != 4:
            continue
        weights = _barycentric(pts[idx], p)
        if best is None or weights.min() > best.weights.min():
            best = Simplex(idx, pts[idx], weights)
    if best is None:
        return steinitz_simplex(pts, p)
    return best


# ---------------------------------------------------------------------------
# origin location


@dataclass(frozen=True, eq=False)
class OriginLocation:
    """Where 0 sits relative to the hull of a cloud, with a certificate.

    ``witness`` is a Simplex for ``interior`` and a unit direction h with
    <p, h> >= -tol for every cloud point otherwise.  ``margin`` is the
    distance from 0 to the hull boundary, signed positive inside.
    """

    tag: str
    witness: object
    margin: float


def locate_origin(cloud, tol=BOUNDARY_TOL):
    pts = _as_cloud(cloud)
    hull = convex_hull3(pts)
    if hull.dim == 3:
        offsets = -hull.equations[:, 3]
        margin = float(offsets.min())
        if margin > tol:
            simplex = _interior_simplex_from(pts, hull.vertices, tol)
            return OriginLocation("interior", simplex, margin)
        if abs(margin) <= tol:
            f = int(np.argmin(offsets))
            return OriginLocation("boundary", -hull.equations[f, :3], margin)
        q = closest_point_to_origin(hull)
        dist = float(np.linalg.norm(q))
        return OriginLocation("exterior", q / dist, -dist)
    q = closest_point_to_origin(hull)
    dist = float(np.linalg.norm(q))
    if dist > tol:
        return OriginLocation("exterior", q / dist, -dist)
    # 0 lies in a degenerate hull: any direction orthogonal to its span works.
    if hull.dim == 2:
        h = np.cross(hull.basis[0], hull.basis[1])
    elif hull.dim == 1:
        h = _orthogonal(hull.basis[0])
    else:
        h = geom3.E3.copy()
    return OriginLocation("boundary", geom3.normalize(h), -dist)


def _interior_simplex_from(pts, vertices, tol, cap=LP_VERTEX_CAP):
    """interior_simplex restricted to hull vertices, thinned when there are many.

    Points on a sphere are all hull vertices, and the LP cost grows with their
    number; an evenly thinned subset is used whenever its own hull still
    contains 0 strictly.
    """
    idx = vertices
    if len(idx) > cap:
        thin = idx[np.linspace(0, len(idx) - 1, cap).astype(int)]
        sub = convex_hull3(pts[thin])
        if sub.dim == 3 and (-sub.equations[:, 3]).min() > tol:
            idx = thin
    simplex = interior_simplex(pts[idx])
    return Simplex(idx[simplex.indices], simplex.vertices, simplex.weights)


def _orthogonal(u):
    helper = geom3.E1 if abs(u[0]) < 0.9 else geom3.E2
    return np.cross(u, helper)


# ---------------------------------------------------------------------------
# convexification


@dataclass(frozen=True, eq=False)
class Convexification:
    """Geodesic convexification: whole sphere, or the projection of a hull."""

    whole_sphere: bool
    hull: Hull = None
    direction: np.ndarray = None

    def contains(self, x, tol=1e-9):
        """Whether the unit vector x lies in the convexification."""
        if self.whole_sphere:
            return True
        pts = self.hull.points
        x = np.asarray(x, dtype=float)
        if np.dot(x, self.direction) <= 0:
            return False
        # x is in the projected hull iff it is a non-negative combination of the cloud
        res = linprog(
            np.zeros(len(pts)),
            A_eq=pts.T,
            b_eq=x,
            bounds=[(0, None)] * len(pts),
            method="highs",
        )
        return res.status == 0

    def project(self, points):
        return np.asarray(points) / np.linalg.norm(points, axis=-1, keepdims=True)


def geodesic_convexification(cloud, tol=BOUNDARY_TOL):
    pts = _as_cloud(cloud)
    loc = locate_origin(pts, tol)
    if loc.tag != "exterior":
        return Convexification(True)
    return Convexification(False, convex_hull3(pts), loc.witness)


# ---------------------------------------------------------------------------
# hemisphere barycenters


@lru_cache(maxsize=8)
def _fibonacci(n):
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * np.arange(n)
    out = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    out.setflags(write=False)
    return out


def fibonacci_sphere(n):
    """Deterministic, nearly uniform lattice of n unit vectors."""
    return _fibonacci(int(n))


def accepted_directions(cloud, closed=True, n_dirs=None, chunk=4096):
    """Lattice directions h with <p, h> >= 0 (closed) or > 0 (open) for all p."""
    pts = _as_cloud(cloud)
    dirs = fibonacci_sphere(default_grid_dirs() if n_dirs is None else n_dirs)
    mins = np.empty(len(dirs))
    for start in range(0, len(dirs), chunk):
        mins[start:start + chunk] = np.min(dirs[start:start + chunk] @ pts.T, axis=1)
    mask = mins >= 0 if closed else mins > 0
    return dirs[mask]


def hemisphere_set_barycenter(cloud, closed=True, n_dirs=None):
    """Normalised mean of the lattice directions whose hemisphere contains the cloud."""
    acc = accepted_directions(cloud, closed, n_dirs)
    if len(acc) == 0:
        raise NoHemisphereError("no lattice hemisphere contains the cloud")
    mean = acc.mean(axis=0)
    if np.linalg.norm(mean) <= 1e-12:
        raise NoHemisphereError("accepted directions average to zero")
    return geom3.normalize(mean)
