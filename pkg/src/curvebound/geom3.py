"""Primitive geometry of the sphere, SO(3) and the unit quaternions.

Quaternions are numpy arrays ``(a, b, c, d)`` standing for a + bi + cj + dk.
Rotations are 3x3 arrays acting on column vectors.  Imaginary quaternions are
identified with R^3 through (b, c, d).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCircleError,
    InvalidInputError,
    SingularProjectionError,
)

UNIT_TOL = 1e-12
PRODUCT_TOL = 1e-10

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SphericalCircle:
    """Circle on S^2 given by its center and spherical radius.

    ``orientation`` is +1 when the center lies to the left of the traversal
    and -1 otherwise; the signed geodesic curvature is
    ``orientation * cot(spherical_radius)``.
    """

    center: np.ndarray
    spherical_radius: float
    orientation: int

    @property
    def signed_curvature(self):
        return self.orientation / np.tan(self.spherical_radius)

    def contains(self, p, tol=1e-9):
        return abs(sphere_distance(self.center, p) - self.spherical_radius) <= tol


# ---------------------------------------------------------------------------
# quaternion algebra


def qmul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ]
    )


def qmul_batch(p, q):
    """Row-wise product of two (m, 4) arrays."""
    a1, b1, c1, d1 = p.T
    a2, b2, c2, d2 = q.T
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def qconj(q):
    q = np.asarray(q, dtype=float)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qexp(vec):
    """exp of the imaginary quaternion with vector part ``vec``."""
    vec = np.asarray(vec, dtype=float)
    angle = np.linalg.norm(vec)
    if angle == 0.0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    return np.concatenate([[np.cos(angle)], np.sin(angle) * vec / angle])


def imag(vec):
    """Imaginary quaternion with vector part ``vec``."""
    return np.concatenate([[0.0], np.asarray(vec, dtype=float)])


def qrotate(z, x):
    """z x z^-1 for a unit quaternion z and a vector x."""
    return qmul(qmul(z, imag(x)), qconj(z))[1:]


def canonical_sign(z, eps=UNIT_TOL):
    """Return +1 or -1 so that ``sign * z`` is the preferred lift.

    The preferred lift has non-negative real part; ties are broken by the
    first non-zero imaginary coefficient being positive.
    """
    for coeff in z:
        if abs(coeff) > eps:
            return 1.0 if coeff > 0 else -1.0
    return 1.0


def _check_unit_quaternion(z):
    z = np.asarray(z, dtype=float)
    if z.shape != (4,):
        raise InvalidInputError("quaternion must have four coefficients", shape=z.shape)
    norm = np.linalg.norm(z)
    if abs(norm - 1.0) > 1e-9:
        raise InvalidInputError("quaternion is not a unit quaternion", norm=norm)
    return z / norm


def rotation_from_quaternion(z):
    """The covering map S^3 -> SO(3), x -> z x z^-1 on imaginary quaternions."""
    a, b, c, d = _check_unit_quaternion(z)
    return np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a - b * b + c * c - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a - b * b - c * c + d * d],
        ]
    )


def rotations_from_quaternions(zs):
    """Vectorised covering map for an (m, 4) array of unit quaternions."""
    a, b, c, d = np.asarray(zs, dtype=float).T
    out = np.empty((len(a), 3, 3))
    out[:, 0, 0] = a * a + b * b - c * c - d * d
    out[:, 0, 1] = 2 * (b * c - a * d)
    out[:, 0, 2] = 2 * (b * d + a * c)
    out[:, 1, 0] = 2 * (b * c + a * d)
    out[:, 1, 1] = a * a - b * b + c * c - d * d
    out[:, 1, 2] = 2 * (c * d - a * b)
    out[:, 2, 0] = 2 * (b * d - a * c)
    out[:, 2, 1] = 2 * (c * d + a * b)
    out[:, 2, 2] = a * a - b * b - c * c + d * d
    return out


def is_rotation(R, tol=PRODUCT_TOL):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return (
        np.linalg.norm(R.T @ R - np.eye(3)) <= tol and abs(np.linalg.det(R) - 1.0) <= tol
    )


def quaternion_lifts(R, tol=1e-9):
    """Both preimages (z, -z) of R under the covering map, preferred lift first."""
    R = np.asarray(R, dtype=float)
    if not is_rotation(R, tol):
        raise InvalidInputError("matrix is not in SO(3)")
    # Shepperd's method: pick the largest of the four squared coefficients.
    tr = np.trace(R)
    diag = np.array([tr, R[0, 0], R[1, 1], R[2, 2]])
    k = int(np.argmax(diag))
    if k == 0:
        a = 0.5 * np.sqrt(max(1.0 + tr, 0.0))
        z = np.array([a, (R[2, 1] - R[1, 2]) / (4 * a), (R[0, 2] - R[2, 0]) / (4 * a),
                      (R[1, 0] - R[0, 1]) / (4 * a)])
    elif k == 1:
        b = 0.5 * np.sqrt(max(1.0 + 2 * R[0, 0] - tr, 0.0))
        z = np.array([(R[2, 1] - R[1, 2]) / (4 * b), b, (R[0, 1] + R[1, 0]) / (4 * b),
                      (R[0, 2] + R[2, 0]) / (4 * b)])
    elif k == 2:
        c = 0.5 * np.sqrt(max(1.0 + 2 * R[1, 1] - tr, 0.0))
        z = np.array([(R[0, 2] - R[2, 0]) / (4 * c), (R[0, 1] + R[1, 0]) / (4 * c), c,
                      (R[1, 2] + R[2, 1]) / (4 * c)])
    else:
        d = 0.5 * np.sqrt(max(1.0 + 2 * R[2, 2] - tr, 0.0))
        z = np.array([(R[1, 0] - R[0, 1]) / (4 * d), (R[0, 2] + R[2, 0]) / (4 * d),
                      (R[1, 2] + R[2, 1]) / (4 * d), d])
    z = z / np.linalg.norm(z)
    z = canonical_sign(z) * z
    return z, -z


# ---------------------------------------------------------------------------
# exact stepping


def skew(omega):
    x, y, z = omega
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def logarithmic_derivative(v, w):
    """The so(3) element with entries (2,1)=v, (1,2)=-v, (3,2)=w, (2,3)=-w."""
    return np.array([[0.0, -v, 0.0], [v, 0.0, -w], [0.0, w, 0.0]])


def axis_rotation(axis, angle):
    """Rodrigues formula for a rotation about a unit axis."""
    K = skew(axis)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def frame_step(v, w, dt):
    """Exact exponentials of a constant logarithmic derivative over ``dt``.

    Returns ``(exp(dt * Lambda), exp(dt * (w i + v k) / 2))``.  The rotation
    axis in body coordinates is (w, 0, v).
    """
    speed = np.hypot(v, w)
    angle = dt * speed
    if speed == 0.0:
        return np.eye(3), np.array([1.0, 0.0, 0.0, 0.0])
    axis = np.array([w, 0.0, v]) / speed
    R = axis_rotation(axis, angle)
    q = np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])
    return R, q


def frame_steps(v, w, dt):
    """Vectorised ``frame_step`` over arrays ``v``, ``w`` (and ``dt``)."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    dt = np.broadcast_to(np.asarray(dt, dtype=float), v.shape)
    speed = np.hypot(v, w)
    angle = dt * speed
    safe = np.where(speed > 0, speed, 1.0)
    ax = np.where(speed > 0, w / safe, 0.0)
    az = np.where(speed > 0, v / safe, 0.0)
    s, c = np.sin(angle), np.cos(angle)
    C = 1.0 - c
    m = len(v)
    R = np.empty((m, 3, 3))
    # Rodrigues with axis (ax, 0, az)
    R[:, 0, 0] = 1.0 - C * az * az
    R[:, 0, 1] = -s * az
    R[:, 0, 2] = C * ax * az
    R[:, 1, 0] = s * az
    R[:, 1, 1] = 1.0 - C * (ax * ax + az * az)
    R[:, 1, 2] = -s * ax
    R[:, 2, 0] = C * ax * az
    R[:, 2, 1] = s * ax
    R[:, 2, 2] = 1.0 - C * ax * ax
    half = angle / 2
    q = np.stack([np.cos(half), np.sin(half) * ax, np.zeros(m), np.sin(half) * az], axis=-1)
    return R, q


def rotation_about_second_axis(theta):
    """R_theta: first column cos(theta) e1 + sin(theta) e3, middle column e2."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


# ---------------------------------------------------------------------------
# projections and circles


def normalize(x):
    x = np.asarray(x, dtype=float)
    return x / np.linalg.norm(x)


def gnomic_project(x):
    """Radial projection R^3 minus the origin -> S^2."""
    x = np.asarray(x, dtype=float)
    norm = np.linalg.norm(x)
    if norm <= 1e-12:
        raise InvalidInputError("cannot project a vector of norm <= 1e-12", norm=norm)
    return x / norm


def sphere_distance(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.arctan2(np.linalg.norm(np.cross(p, q)), np.dot(p, q)))


def chart_basis(pole):
    """Orthonormal (u1, u2) spanning pole-perp with u1 x u2 = -pole.

    The reversed orientation is deliberate: the chart is the view of the
    sphere from the projection point, so a circle turning counterclockwise
    about its center when seen from outside has rotation number -1 in it.
    """
    pole = normalize(pole)
    helper = E2 if abs(pole[1]) < 0.9 else E3
    u1 = normalize(helper - np.dot(helper, pole) * pole)
    u2 = np.cross(u1, pole)
    return u1, u2


def stereographic(p, pole, tol=1e-9):
    """Project ``p`` (or an (m, 3) array) from ``-pole``; ``pole`` maps to 0."""
    p = np.asarray(p, dtype=float)
    pole = normalize(pole)
    u1, u2 = chart_basis(pole)
    denom = 1.0 + p @ pole
    if np.any(denom <= tol):
        raise SingularProjectionError("point too close to the projection point")
    return np.stack([p @ u1, p @ u2], axis=-1) / denom[..., None]


def stereographic_inverse(xy, pole):
    xy = np.asarray(xy, dtype=float)
    pole = normalize(pole)
    u1, u2 = chart_basis(pole)
    r2 = np.sum(xy * xy, axis=-1)
    X, Y = xy[..., 0], xy[..., 1]
    out = (
        2 * X[..., None] * u1 + 2 * Y[..., None] * u2 + (1 - r2)[..., None] * pole
    ) / (1 + r2)[..., None]
    return out


def left_center(p1, p2, p3, tol=1e-12):
    """Center to the left of the traversal p1 -> p2 -> p3 and its radius in (0, pi)."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    m = np.cross(p2 - p1, p3 - p1)
    norm = np.linalg.norm(m)
    if norm <= tol:
        raise DegenerateCircleError("points are repeated or collinear in R^3")
    m = m / norm
    radius = float(np.arccos(np.clip(np.dot(m, p1), -1.0, 1.0)))
    return m, radius


def circle_through(p1, p2, p3, tol=1e-12):
    """The circle through three points, oriented by the order p1 -> p2 -> p3."""
    m, radius = left_center(p1, p2, p3, tol)
    if radius <= np.pi / 2:
        return SphericalCircle(m, radius, 1)
    return SphericalCircle(-m, np.pi - radius, -1)


def swept_angle(center, start, end):
    """Counterclockwise angle about ``center`` from ``start`` to ``end``, in (0, 2pi]."""
    center = normalize(center)
    a = start - np.dot(start, center) * center
    b = end - np.dot(end, center) * center
    ang = np.arctan2(np.dot(np.cross(a, b), center), np.dot(a, b))
    ang = ang % (2 * np.pi)
    return ang if ang > 0 else 2 * np.pi
