"""Caustic bands, the condensed and diffuse dichotomy, and grafting.

Run with ``python3 demos/caustics_and_rotation.py``.
"""

# %%
import numpy as np

from curvebound.classify import (
    is_condensed,
    is_diffuse,
    rotation_number,
    total_curvature_bound_check,
)
from curvebound.curve import check_membership, space, total_curvature
from curvebound.homotopy import find_antipodal_caustic_pair, graft_antipodal, make_circle, make_perturbed_circle

# %% [markdown]
# A small circle has its caustic band inside a cap, so it is condensed. A
# strongly perturbed circle with three lobes spreads its caustics over more
# than a hemisphere without producing an antipodal pair.

# %%
kappa0 = -0.66
circle = make_circle(1.0, 1, n=384)
lobes = make_perturbed_circle(0.6461054573174525, 1, 3, 1.9451371993831246, n=384, rng=491825, harmonics=2)
for name, c in (("circle", circle), ("three lobes", lobes)):
    cond = is_condensed(c, kappa0)
    diff = is_diffuse(c, kappa0)
    print(f"{name:12s} condensed {cond.condensed}  "
          f"diffuse {diff.diffuse}  nu {rotation_number(c, kappa0)}")

# %% [markdown]
# For non-diffuse curves the total curvature is bounded by the rotation number.

# %%
rng = np.random.default_rng(7)
for _ in range(5):
    c = make_perturbed_circle(rng.uniform(0.2, 1.2), int(rng.integers(1, 4)), 4, 0.3, n=256, rng=rng)
    r = total_curvature_bound_check(c, 0.0)
    print(f"tot {r.total_curvature:7.3f}  nu {r.rotation_number}  bound {r.bound:8.3f}  slack {r.slack:7.3f}")

# %% [markdown]
# A curve with antipodal caustic points can absorb any amount of extra total
# curvature: two circular arcs with opposite centers are grafted in, and both
# closure and the end frame stay as they were.

# %%
c = make_circle(0.4, 1, n=256)
s = space(-0.5, np.inf)
(t1, t2, ra, rb), defect = find_antipodal_caustic_pair(c, s.rho1)
for amount in (1.0, 4 * np.pi):
    g = graft_antipodal(c, t1, t2, ra, rb, amount)
    m = check_membership(g, s)
    print(f"graft {amount:6.3f}: tot {total_curvature(c):.3f} -> {total_curvature(g):.3f}  "
          f"member {m.member}  closure {m.closure_defect:.1e}")
