"""Closed loop with four actions: regulate the example plant into B_1(0).

The trine with alpha = 0.1 has radius 0.1 and gamma(0.1) < 1, so every
trajectory should end up in the unit ball with the zero action applied.
Writes the trajectory to ``example1.csv``.
"""

import numpy as np

from nncontrol.presets import example1
from nncontrol.simulator import batch_sweep, convergence_metrics, simulate

p = example1()
traj = simulate(p.system, p.law, p.x0, p.config, p.storage)
rep = convergence_metrics(traj, p.epsilon, p.center, p.tail_action)
print(f"x0 = {p.x0}, dt = {p.config.dt}, horizon {p.config.t_final}")
print(f"entered B_1(0) at t = {rep.entry_time}, zero action from t = {rep.settle_time}")
print(f"largest one-sample storage increase: {rep.h_max_increase:.2e}")
print(f"storage {traj.storage[0]:.3f} -> {traj.storage[-1]:.3f}")

switches = np.count_nonzero(np.any(np.diff(traj.actions, axis=0) != 0, axis=1))
print(f"action changes between recorded samples: {switches}")

with open("example1.csv", "w", newline="") as fh:
    traj.to_csv(fh)
print("trajectory written to example1.csv")

# A handful of random starts, integrated as one batch.
X0 = np.random.default_rng(1).uniform(-3, 3, size=(6, 3))
for x0, r in zip(X0, batch_sweep(p.system, p.law, X0, p.config, p.epsilon, p.center, p.tail_action)):
    print(np.round(x0, 2), "entry", r.entry_time, "tail ok", r.tail_action_constant)
