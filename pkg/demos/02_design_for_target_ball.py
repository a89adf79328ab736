"""Size a minimal action set from an accuracy requirement.

Given the observability gain of the plant and a target ball radius epsilon,
the admissible covering radius is the largest delta with gamma(delta) <= epsilon.
A minimal set of m + 2 actions is then built to have exactly that radius.
"""

import numpy as np

from nncontrol.action_sets import Variant, design_minimal_set, validate
from nncontrol.controller import check_proposition1, check_proposition2, identity_gain, largest_delta
from nncontrol.systems import get_gain

gamma = get_gain("sigma_ex")  # 4 s + s^(1/3)
eps = 1.0
delta = largest_delta(gamma, eps)
print(f"largest admissible delta for eps={eps}: {delta:.12f}")

for variant in Variant:
    U = design_minimal_set(2, delta, variant=variant)
    rep = validate(U, want_mu=True)
    print(f"\n{variant.value} design, {len(U)} actions:")
    print(np.round(U.actions, 5))
    print(f"  radius {rep.delta:.12f}, mu_min,1 ~ {rep.mu_min1:.4f}, minimal={rep.minimal}")
    print("  unity feedback:", check_proposition1(U, gamma, eps).to_dict())

# A sector map with k1/k3 too small breaks the alignment condition.
U = design_minimal_set(2, delta)
v = check_proposition2(U, identity_gain(1.0), gamma, eps)
print("\nsector k1=k3=1:", v.sector_ok, f"(k1^2/k3^2 + mu^2 = {v.sector_value:.3f})")

# Same construction around a nonzero base action, rotated.
th = np.pi / 5
R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
U = design_minimal_set(2, 0.1, rotation=R, u_star=[1.0, 0.0])
print("\nrotated design around u*=(1,0):\n", np.round(U.actions, 5))
print("radius", round(validate(U).delta, 12))
