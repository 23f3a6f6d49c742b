"""Deforming the equator traversed k times into the equator traversed k + 2 times.

Run with ``python3 demos/bending_the_equator.py``.
"""

# %%
import numpy as np

from curvebound.curve import integrate_frames, space, total_curvature
from curvebound.homotopy import bend_k_equator, bending_bound, bending_family, validate_homotopy

# %% [markdown]
# Along the family the curvature never exceeds tan(pi / (2k + 2)) in absolute
# value, and that bound is reached at the middle of the deformation.

# %%
for k in (1, 2, 3):
    peak = max(np.abs(bend_k_equator(k, s, n=1024).kappa).max() for s in np.linspace(0, 1, 65))
    print(f"k={k}: bound {bending_bound(k):.6f}  sampled max |kappa| {peak:.6f}")

# %%
c0, c_half, c1 = (bend_k_equator(1, s, n=1024) for s in (0.0, 0.5, 1.0))
for name, c in (("start", c0), ("middle", c_half), ("end", c1)):
    P = integrate_frames(c).positions
    print(f"{name:6s} tot/2pi {total_curvature(c) / (2 * np.pi):.4f}  max |z| {np.abs(P[:, 2]).max():.4f}")

# %% [markdown]
# The validator sees the same threshold: the family is admissible when the
# curvature interval contains [-1, 1] and fails on curvature margin otherwise.

# %%
family = bending_family(1, n=1024, steps=64)
for kappa1 in (1.05, 1.0001, 0.95):
    report = validate_homotopy(family, space(-kappa1, kappa1))
    reasons = sorted({f["reason"] for f in report.failures})
    print(f"|kappa| < {kappa1}: passed {report.passed}  failures {reasons}")
