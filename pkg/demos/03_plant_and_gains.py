"""The example plant: passivity, observability and the incremental setting."""

import math

import numpy as np

from nncontrol.systems import (
    SteadyStatePair,
    gamma_bar_ex,
    gamma_ex,
    incremental_system,
    observability_gramian,
    passivity_audit,
    sigma_ex,
)

sys, H, gain = sigma_ex()

# Lossless: <grad H, f> = 0 and g^T grad H = h everywhere.
rep = passivity_audit(sys, H, 5000)
print(f"passivity audit: drift {rep.drift_violation:.2e}, output {rep.output_violation:.2e}, "
      f"gradient {rep.gradient_error:.2e}")

# Linear part of the unforced (x1, x2) subsystem rotates; its Gramian over half a turn.
W = observability_gramian([[0.0, -1.0], [1.0, 0.0]], [[1.0, 0.0]], math.pi)
print("W_pi =\n", np.round(W, 10), "\n(pi/2 =", math.pi / 2, ")")

for s in (0.05, 0.1, 0.125, 0.2):
    print(f"gamma({s}) = {gamma_ex(s):.4f}   gamma_bar({s}; x3*=-1) = {gamma_bar_ex(s, -1.0):.4f}")

# Equilibrium x* = (0, 0, -1) is held by u* = (1, 0).
pair = SteadyStatePair.of(sys, [0.0, 0.0, -1.0], [1.0, 0.0])
inc = incremental_system(sys, pair)
print("\nsteady-state residual", pair.residual)
rep = passivity_audit(inc, inc.storage, 5000, box=2.0)
print(f"incremental audit: drift {rep.drift_violation:.2e}, output {rep.output_violation:.2e}")
