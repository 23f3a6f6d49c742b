"""Admissible curves as piecewise-constant speed/curvature data.

A curve is stored as ``n`` intervals of parameter width ``1/n``.  On
interval ``i`` the speed ``v[i]`` and geodesic curvature ``kappa[i]`` are
constant, so the curve is an arc of a circle there and its frame advances by
an exact rotation.  Operations that cut or insert arcs (grafts, loops) do so
by splitting intervals exactly; the result is the same geometric curve with a
different, still uniform, parameter grid.
"""

from dataclasses import dataclass, field

import numpy as np

from . import geom3
from .errors import DegenerateTranslationError, InvalidInputError, InvalidSpaceError

MIN_SAMPLES = 8
DEFAULT_N = 256
CLOSURE_TOL = 1e-6


# ---------------------------------------------------------------------------
# spaces


def arccot(x):
    """arccot with values in [0, pi]; arccot(+inf) = 0, arccot(-inf) = pi."""
    x = np.asarray(x, dtype=float)
    out = np.pi / 2 - np.arctan(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CurvatureBound:
    value: float

    @classmethod
    def parse(cls, x):
        if isinstance(x, CurvatureBound):
            return x
        if isinstance(x, str):
            text = x.strip().lower()
            if text in ("+inf", "inf", "+infinity", "infinity"):
                return cls(np.inf)
            if text in ("-inf", "-infinity"):
                return cls(-np.inf)
            return cls(float(text))
        return cls(float(x))

    def rho(self):
        return arccot(self.value)

    @property
    def finite(self):
        return bool(np.isfinite(self.value))

    def to_json(self):
        if self.value == np.inf:
            return "+inf"
        if self.value == -np.inf:
            return "-inf"
        return float(self.value)


@dataclass(frozen=True)
class SpaceSpec:
    """Curves with curvature strictly between two bounds and final frame Q."""

    kappa1: CurvatureBound
    kappa2: CurvatureBound
    boundary_frame: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "kappa1", CurvatureBound.parse(self.kappa1))
        object.__setattr__(self, "kappa2", CurvatureBound.parse(self.kappa2))
        Q = np.asarray(self.boundary_frame, dtype=float)
        if not geom3.is_rotation(Q, 1e-9):
            raise InvalidSpaceError("boundary frame is not a rotation")
        object.__setattr__(self, "boundary_frame", Q)
        if not self.kappa1.value < self.kappa2.value:
            raise InvalidSpaceError(
                "need kappa1 < kappa2", kappa1=self.kappa1.value, kappa2=self.kappa2.value
            )

    @property
    def rho1(self):
        return self.kappa1.rho()

    @property
    def rho2(self):
        return self.kappa2.rho()

    @property
    def width(self):
        return self.rho1 - self.rho2

    def to_json(self):
        return {
            "kappa1": self.kappa1.to_json(),
            "kappa2": self.kappa2.to_json(),
            "boundary_frame": self.boundary_frame.reshape(-1).tolist(),
        }


def space(kappa1, kappa2, boundary_frame=None):
    """Shorthand constructor accepting numbers or '+inf'/'-inf'."""
    if boundary_frame is None:
        return SpaceSpec(kappa1, kappa2)
    return SpaceSpec(kappa1, kappa2, boundary_frame)


# ---------------------------------------------------------------------------
# curve data


@dataclass(frozen=True, eq=False)
class CurveSamples:
    v: np.ndarray
    kappa: np.ndarray
    q0: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        kappa = np.array(self.kappa, dtype=float).reshape(-1)
        q0 = np.array(self.q0, dtype=float).reshape(3, 3)
        if v.shape != kappa.shape:
            raise InvalidInputError("v and kappa must have equal length")
        if len(v) < MIN_SAMPLES:
            raise InvalidInputError(f"need at least {MIN_SAMPLES} samples", n=len(v))
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(kappa))):
            raise InvalidInputError("samples must be finite")
        if np.any(v <= 0):
            raise InvalidInputError("speeds must be positive", index=int(np.argmin(v)))
        if not geom3.is_rotation(q0, 1e-9):
            raise InvalidInputError("q0 is not a rotation")
        v.setflags(write=False)
        kappa.setflags(write=False)
        q0.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "q0", q0)

    @property
    def n(self):
        return len(self.v)

    @property
    def w(self):
        return self.v * self.kappa

    @property
    def lengths(self):
        """Arc length of each interval."""
        return self.v / self.n

    @property
    def rho(self):
        return arccot(self.kappa)

    def length(self):
        return float(np.sum(self.lengths))

    def with_q0(self, q0):
        return CurveSamples(self.v, self.kappa, q0)

    def allclose(self, other, atol=1e-9):
        return (
            self.n == other.n
            and np.allclose(self.v, other.v, rtol=0, atol=atol)
            and np.allclose(self.kappa, other.kappa, rtol=0, atol=atol)
            and np.allclose(self.q0, other.q0, rtol=0, atol=atol)
        )


def from_pieces(lengths, kappas, q0=None, min_n=MIN_SAMPLES):
    """Curve whose interval i is an arc of length ``lengths[i]``.

    Pieces are subdivided evenly when there are fewer than ``min_n`` of them.
    """
    lengths = np.asarray(lengths, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    if len(lengths) < min_n:
        reps = -(-min_n // len(lengths))
        lengths = np.repeat(lengths / reps, reps)
        kappas = np.repeat(kappas, reps)
    n = len(lengths)
    return CurveSamples(lengths * n, kappas, np.eye(3) if q0 is None else q0)


def concatenate(*curves):
    """Join curves end to end; frames must match at the junctions (unchecked).

    The result starts with the frame of the first curve.
    """
    lengths = np.concatenate([c.lengths for c in curves])
    kappas = np.concatenate([c.kappa for c in curves])
    return from_pieces(lengths, kappas, curves[0].q0)


def split_at(c, t):
    """Pieces of ``c`` with a break inserted at parameter ``t``.

    Returns ``(lengths, kappas, index)`` where the pieces before ``index``
    cover [0, t].  No piece is created when ``t`` is on the grid.
    """
    lengths = c.lengths.copy()
    kappas = c.kappa.copy()
    pos = t * c.n
    i = int(np.floor(pos))
    frac = pos - i
    if i >= c.n:
        return lengths, kappas, c.n
    if frac <= 1e-12:
        return lengths, kappas, i
    if frac >= 1 - 1e-12:
        return lengths, kappas, i + 1
    a, b = lengths[i] * frac, lengths[i] * (1 - frac)
    lengths = np.concatenate([lengths[:i], [a, b], lengths[i + 1:]])
    kappas = np.concatenate([kappas[:i], [kappas[i], kappas[i]], kappas[i + 1:]])
    return lengths, kappas, i + 1


def subdivide_pieces(lengths, kappas, parts):
    lengths = np.repeat(np.asarray(lengths, dtype=float) / parts, parts)
    return lengths, np.repeat(np.asarray(kappas, dtype=float), parts)


# ---------------------------------------------------------------------------
# frames


@dataclass(frozen=True, eq=False)
class FramedCurve:
    base: CurveSamples
    frames: np.ndarray  # (n+1, 3, 3)
    lifts: np.ndarray  # (n+1, 4)

    @property
    def n(self):
        return self.base.n

    @property
    def t_grid(self):
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def positions(self):
        return self.frames[:, :, 0]

    @property
    def tangents(self):
        return self.frames[:, :, 1]

    @property
    def normals(self):
        return self.frames[:, :, 2]

    def frame_at(self, t):
        """Exact frame at parameter ``t`` in [0, 1]."""
        i, dt = self._locate(t)
        R, _ = geom3.frame_step(self.base.v[i], self.base.w[i], dt)
        return self.frames[i] @ R

    def lift_at(self, t):
        i, dt = self._locate(t)
        _, q = geom3.frame_step(self.base.v[i], self.base.w[i], dt)
        return geom3.qmul(self.lifts[i], q)

    def _locate(self, t):
        pos = float(t) * self.n
        i = min(max(int(np.floor(pos)), 0), self.n - 1)
        return i, (pos - i) / self.n


def _prefix_products(mats, mul):
    """Inclusive scan P_i = M_0 M_1 ... M_i (order preserving)."""
    out = mats.copy()
    shift = 1
    while shift < len(out):
        new = out.copy()
        new[shift:] = mul(out[:-shift], out[shift:])
        out = new
        shift *= 2
    return out


def preferred_lift(R):
    return geom3.quaternion_lifts(R)[0]


def integrate_frames(c):
    """Frames and lifted frames at the grid nodes, by exact per-interval steps."""
    steps_R, steps_q = geom3.frame_steps(c.v, c.w, 1.0 / c.n)
    P = _prefix_products(steps_R, np.matmul)
    Pq = _prefix_products(steps_q, geom3.qmul_batch)
    frames = np.empty((c.n + 1, 3, 3))
    frames[0] = c.q0
    frames[1:] = c.q0 @ P
    z0 = preferred_lift(c.q0)
    lifts = np.empty((c.n + 1, 4))
    lifts[0] = z0
    lifts[1:] = geom3.qmul_batch(np.broadcast_to(z0, Pq.shape), Pq)
    return FramedCurve(c, frames, lifts)


def end_frame(c):
    """Relative end frame q0^T Phi(1)."""
    fc = integrate_frames(c)
    return c.q0.T @ fc.frames[-1]


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class MembershipReport:
    closure_defect: float
    curvature_margin: float
    member: bool
    initial_frame_defect: float

    def to_json(self):
        return {
            "closure_defect": self.closure_defect,
            "curvature_margin": self.curvature_margin,
            "member": self.member,
            "initial_frame_defect": self.initial_frame_defect,
        }


def curvature_margin(kappa, s):
    kappa = np.asarray(kappa, dtype=float)
    lo = kappa - s.kappa1.value if s.kappa1.finite else np.full_like(kappa, np.inf)
    hi = s.kappa2.value - kappa if s.kappa2.finite else np.full_like(kappa, np.inf)
    return float(np.min(np.minimum(lo, hi)))


def check_membership(c, s, tol=CLOSURE_TOL, fc=None):
    """Closure defect ||q0^T Phi(1) - Q||_F and the strict curvature margin.

    The closure defect is measured relative to the initial frame so that a
    rigidly rotated curve has the same report; ``initial_frame_defect`` records
    ||q0 - I||_F separately.
    """
    fc = integrate_frames(c) if fc is None else fc
    closure = float(np.linalg.norm(c.q0.T @ fc.frames[-1] - s.boundary_frame))
    margin = curvature_margin(c.kappa, s)
    return MembershipReport(
        closure_defect=closure,
        curvature_margin=margin,
        member=bool(closure <= tol and margin > 0),
        initial_frame_defect=float(np.linalg.norm(c.q0 - np.eye(3))),
    )


# ---------------------------------------------------------------------------
# ingestion


def curvature_from_points(points):
    """Estimate (v, kappa, q0) from a closed sequence of points on S^2.

    Uses three-point osculating circles: the curvature at a node is that of
    the circle through it and its two neighbours, the interval value is the
    mean of its end nodes, and tangents are those of the same circles.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 3 or len(P) < 16:
        raise InvalidInputError("need at least 16 points in R^3")
    P = P / np.linalg.norm(P, axis=1, keepdims=True)
    N = len(P)
    nxt = np.roll(P, -1, axis=0)
    prv = np.roll(P, 1, axis=0)
    gaps = np.arctan2(np.linalg.norm(np.cross(P, nxt), axis=1), np.sum(P * nxt, axis=1))
    if np.any(gaps <= 1e-6) or np.any(gaps >= 0.5):
        raise InvalidInputError(
            "consecutive gaps must lie in (1e-6, 0.5)", min_gap=gaps.min(), max_gap=gaps.max()
        )
    m = np.cross(P - prv, nxt - prv)
    m_norm = np.linalg.norm(m, axis=1)
    if np.any(m_norm <= 1e-15):
        raise InvalidInputError("three consecutive points are collinear in R^3")
    m = m / m_norm[:, None]
    node_rho = np.arccos(np.clip(np.sum(m * P, axis=1), -1.0, 1.0))
    node_kappa = 1.0 / np.tan(node_rho)
    kappa = 0.5 * (node_kappa + np.roll(node_kappa, -1))
    v = gaps * N
    t0 = geom3.normalize(np.cross(m[0], P[0]))
    q0 = np.column_stack([P[0], t0, np.cross(P[0], t0)])
    return CurveSamples(v, kappa, q0)


# ---------------------------------------------------------------------------
# transformations and invariants


def translate_curve(c, theta):
    """The translation cos(theta) gamma + sin(theta) n; radii shift by -theta."""
    rho = c.rho
    new_rho = rho - theta
    if np.any(np.sin(new_rho) <= 0):
        raise DegenerateTranslationError(
            "translation outside the admissible range",
            theta=theta,
            rho_min=float(rho.min()),
            rho_max=float(rho.max()),
        )
    v = c.v * np.sin(new_rho) / np.sin(rho)
    kappa = 1.0 / np.tan(new_rho)
    return CurveSamples(v, kappa, c.q0 @ geom3.rotation_about_second_axis(theta))


def total_curvature(c):
    return float(np.sum(np.sqrt(1.0 + c.kappa**2) * c.v) / c.n)


def _resample(u_break, values, n_out):
    """Integrals of piecewise-linear cumulative ``values`` over n_out equal cells."""
    grid = np.linspace(0.0, u_break[-1], n_out + 1)
    return [np.diff(np.interp(grid, u_break, val)) for val in values]


def reparametrize(c, mode="arclength", n=None):
    """Constant-speed ('arclength') or constant |Lambda| ('curvature') version.

    Cells that fall inside one original interval are reproduced exactly.  A
    cell that straddles a curvature jump is replaced by a single arc: in
    arclength mode it keeps the cell's length and turning, in curvature mode
    it keeps the cell's total curvature and turning, so ``total_curvature``
    is exactly invariant in curvature mode.
    """
    n_out = c.n if n is None else int(n)
    ell = c.lengths
    turn = ell * c.kappa
    tot = ell * np.sqrt(1.0 + c.kappa**2)
    zero = np.zeros(1)
    cum_ell = np.concatenate([zero, np.cumsum(ell)])
    cum_turn = np.concatenate([zero, np.cumsum(turn)])
    cum_tot = np.concatenate([zero, np.cumsum(tot)])
    if mode == "arclength":
        (new_turn,) = _resample(cum_ell, [cum_turn], n_out)
        new_ell = np.full(n_out, cum_ell[-1] / n_out)
        kappa = new_turn / new_ell
    elif mode == "curvature":
        (new_turn,) = _resample(cum_tot, [cum_turn], n_out)
        new_tot = np.full(n_out, cum_tot[-1] / n_out)
        new_ell = np.sqrt(np.maximum(new_tot**2 - new_turn**2, 0.0))
        kappa = new_turn / new_ell
    else:
        raise InvalidInputError("mode must be 'arclength' or 'curvature'", mode=mode)
    return CurveSamples(new_ell * n_out, kappa, c.q0)


def close_up(c, target=None, iterations=20, tol=1e-13):
    """Minimal correction of speeds and curvatures that closes the curve.

    Six smooth bump perturbations (speed and turning rate in three windows)
    are solved for by Gauss-Newton so that q0^T Phi(1) equals ``target``.
    Returns ``(curve, correction_size)``; intended for curves whose defect is
    already a discretisation-level quantity.
    """
    target = np.eye(3) if target is None else np.asarray(target, dtype=float)
    n = c.n
    t = (np.arange(n) + 0.5) / n
    bumps = []
    for centre in (1 / 6, 1 / 2, 5 / 6):
        d = np.abs((t - centre + 0.5) % 1.0 - 0.5)
        bumps.append(np.where(d < 1 / 6, np.cos(3 * np.pi * d) ** 2, 0.0))
    bumps = np.array(bumps)

    def build(x):
        dv = x[:3] @ bumps
        dw = x[3:] @ bumps
        v = c.v * (1.0 + dv)
        w = c.w + dw * c.v
        return CurveSamples(v, w / v, c.q0)

    def residual(x):
        R = target.T @ end_frame(build(x))
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2

    x = np.zeros(6)
    r = residual(x)
    for _ in range(iterations):
        if np.linalg.norm(r) < tol:
            break
        J = np.empty((3, 6))
        h = 1e-7
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            J[:, j] = (residual(x + e) - residual(x - e)) / (2 * h)
        x = x - np.linalg.pinv(J) @ r
        r = residual(x)
    return build(x), float(np.linalg.norm(x))
