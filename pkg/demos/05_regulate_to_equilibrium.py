"""Incremental law: steer the plant to x* = (0, 0, -1) held by u* = (1, 0).

The trine is shifted so that u* is the base action and the law acts on
y - h(x*). Once the output error is small, the controller stays on u*.
The shifted storage H(x) - H(x*) - <grad H(x*), x - x*> is monitored.
"""

import numpy as np

from nncontrol.controller import check_proposition1
from nncontrol.presets import example2
from nncontrol.simulator import convergence_metrics, simulate

p = example2()
print("actions:\n", np.round(p.action_set.actions, 4))
v = check_proposition1(p.action_set, p.gain, p.epsilon)
print(f"radius {v.delta:.4f}, gamma_bar(radius) = {v.gamma_value:.4f} <= {p.epsilon}: {v.passed}")

traj = simulate(p.system, p.law, p.x0, p.config, p.storage)
rep = convergence_metrics(traj, p.epsilon, p.center, p.tail_action)
print(f"entered B_0.5(x*) at t = {rep.entry_time}; u* applied from t = {rep.settle_time}")
print(f"final state {np.round(traj.states[-1], 4)}, final action {traj.actions[-1]}")
print(f"shifted storage {traj.storage[0]:.3f} -> {traj.storage[-1]:.4f}, "
      f"max increase {rep.h_max_increase:.1e}")
