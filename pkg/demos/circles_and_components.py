"""Circles traversed several times, and which of them can be deformed into each other.

Run with ``python3 demos/circles_and_components.py``. Cells are marked with
``# %%`` so the file also opens as a notebook in editors that support it.
"""

# %%
import numpy as np

from curvebound.classify import classify_curve, component_count, same_component
from curvebound.curve import space, total_curvature
from curvebound.homotopy import make_circle

# %% [markdown]
# The number of components depends only on the width of the curvature
# interval, measured as the difference of the radii of curvature.

# %%
for k1, k2 in [(-np.inf, np.inf), (0.0, np.inf), (1 / np.sqrt(3), np.inf), (-1.0, 1.0), (2.0, 5.0)]:
    s = space(k1, k2)
    print(f"kappa in ({k1:6.3f}, {k2:6.3f})  width {s.width:.4f}  components {component_count(s)}")

# %% [markdown]
# With nonnegative curvature, a circle traversed k times lands in component
# min(k, 3) up to parity: from three turns on, adding two turns stays inside the
# same component.

# %%
s = space(0.0, np.inf)
for k in range(1, 7):
    c = make_circle(1.0, k, n=512)
    r = classify_curve(c, s)
    print(f"sigma_{k}: tot {total_curvature(c):7.3f}  nu {r.rotation_number}  "
          f"sign {r.lifted_sign:+d}  component {r.component_index}")

# %% [markdown]
# Raising the lower curvature bound shrinks the admissible circles and delays
# the point where extra turns can be absorbed.

# %%
for kappa0 in (0.0, 1 / np.sqrt(3) + 0.01, 1.01, 2.5):
    rho0 = np.arctan2(1.0, kappa0)
    s = space(kappa0, np.inf)
    circles = [make_circle(0.5 * rho0, k, n=256) for k in range(1, 9)]
    joined = [k + 1 for k in range(6) if same_component(circles[k], circles[k + 2], s)]
    print(f"kappa0 {kappa0:.3f}: sigma_k ~ sigma_(k+2) for k in {joined}  (floor(pi/rho0) = {int(np.pi // rho0)})")
