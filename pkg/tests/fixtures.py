"""Curves assembled from plane circle arcs and lifted to the sphere.

Inverse stereographic projection maps circles to circles, so a tangent-
continuous chain of plane arcs becomes an exact piecewise-constant curvature
curve on the sphere.
"""

import numpy as np

from curvebound import geom3
from curvebound.curve import from_pieces

POLE = np.array([0.0, 0.0, 1.0])


def _lift(xy):
    # the chart reverses orientation, mirror so plane ccw stays ccw on the sphere
    xy = np.asarray(xy, dtype=float) * np.array([1.0, -1.0])
    return geom3.stereographic_inverse(xy, POLE)


def arc_points(center, radius, start, sweep):
    angles = start + sweep * np.array([0.0, 0.5, 1.0])
    return np.asarray(center)[None, :] + radius * np.column_stack([np.cos(angles), np.sin(angles)])


def segment_points(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.array([a, (a + b) / 2, b])


def arc_chain(triples, scale=1.0, pieces_per_arc=16):
    """Curve through plane point triples (start, middle, end) of successive arcs."""
    lengths, kappas = [], []
    q0 = None
    for pts in triples:
        p1, p2, p3 = _lift(scale * np.asarray(pts))
        m, rho_left = geom3.left_center(p1, p2, p3)
        turn = geom3.swept_angle(m, p1, p3)
        ell = turn * np.sin(rho_left)
        lengths.extend([ell / pieces_per_arc] * pieces_per_arc)
        kappas.extend([1.0 / np.tan(rho_left)] * pieces_per_arc)
        if q0 is None:
            t = geom3.normalize(np.cross(m, p1))
            q0 = np.column_stack([p1, t, np.cross(p1, t)])
    return from_pieces(lengths, kappas, q0)


def dumbbell(scale=0.3, pieces_per_arc=32):
    """Two round lobes joined by a waist whose strands touch tangentially.

    Traversed counterclockwise, so the strands at the waist have each other
    on their left and touch with opposite tangents.
    """
    r3 = np.sqrt(3.0)
    d = np.pi / 3
    arcs = [
        arc_points((0.0, 1.0), 1.0, -np.pi / 2, -d),  # upper waist, left half
        arc_points((-r3, 0.0), 1.0, np.pi / 6, 5 * d),  # left lobe
        arc_points((0.0, -1.0), 1.0, 5 * np.pi / 6, -d),  # lower waist, left half
        arc_points((0.0, -1.0), 1.0, np.pi / 2, -d),  # lower waist, right half
        arc_points((r3, 0.0), 1.0, 7 * np.pi / 6, 5 * d),  # right lobe
        arc_points((0.0, 1.0), 1.0, -np.pi / 6, -d),  # upper waist, right half
    ]
    return arc_chain(arcs, scale, pieces_per_arc)


def figure_eight(scale=0.3, pieces_per_arc=32):
    """Two teardrop lobes crossing transversally at the origin."""
    s = np.sqrt(0.5)
    r2 = np.sqrt(2.0)
    arcs = [
        segment_points((0, 0), (s, s)),
        arc_points((r2, 0.0), 1.0, 3 * np.pi / 4, -1.5 * np.pi),  # right lobe, clockwise
        segment_points((s, -s), (0, 0)),
        segment_points((0, 0), (-s, s)),
        arc_points((-r2, 0.0), 1.0, np.pi / 4, 1.5 * np.pi),  # left lobe, counterclockwise
        segment_points((-s, -s), (0, 0)),
    ]
    return arc_chain(arcs, scale, pieces_per_arc)
