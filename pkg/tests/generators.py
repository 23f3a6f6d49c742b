"""Random curve generators for property and acceptance tests."""

import numpy as np

from curvebound import homotopy
from curvebound.curve import CurveSamples


def random_curve(rng, n=512, kappa_range=(-2.0, 2.0), smooth=True):
    """Open curve with random positive speeds and curvatures inside a range."""
    lo, hi = kappa_range
    if smooth:
        t = (np.arange(n) + 0.5) / n
        kappa = np.zeros(n)
        for j in range(1, 5):
            kappa += rng.normal() / j * np.cos(2 * np.pi * j * t + rng.uniform(0, 2 * np.pi))
        kappa = (kappa - kappa.min()) / max(np.ptp(kappa), 1e-12)
    else:
        kappa = rng.uniform(size=n)
    kappa = lo + (hi - lo) * (0.05 + 0.9 * kappa)
    v = rng.uniform(2.0, 8.0) * (1 + 0.3 * rng.uniform(-1, 1, n))
    z = rng.normal(size=4)
    from curvebound.geom3 import rotation_from_quaternion

    q0 = rotation_from_quaternion(z / np.linalg.norm(z))
    return CurveSamples(v, kappa, q0)


def random_closed_curve(rng, rho_range=(0.5, 2.5), k_range=(1, 3), eps=0.3, n=512):
    """Perturbed circle: closed exactly, curvature cot(rho) + eps f."""
    rho = rng.uniform(*rho_range)
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    m = int(rng.integers(k + 1, k + 6))
    return homotopy.make_perturbed_circle(rho, k, m, eps, n, rng=rng)


def plane_curve(rng, N, M=2000, harmonics=3, amplitude=0.8):
    """Closed plane polygon whose tangent angle is 2 pi N t plus harmonics.

    The exact tangent winding is N; the closing correction subtracts the mean
    velocity, which changes the winding only if it rivals the speed.
    """
    t = np.arange(M) / M
    theta = 2 * np.pi * N * t
    for j in range(1, harmonics + 1):
        theta += amplitude / j * rng.normal() * np.sin(2 * np.pi * j * t + rng.uniform(0, 2 * np.pi))
    vel = np.exp(1j * theta)
    vel -= vel.mean()
    pos = np.cumsum(vel) / M
    return np.column_stack([pos.real, pos.imag])
