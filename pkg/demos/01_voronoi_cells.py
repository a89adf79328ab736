"""How far can the output wander before the controller leaves the base action?

The nearest-neighbour law keeps the base action while the output sits in
the base action's Voronoi cell. This script builds the cell for a few
standard action sets, enumerates its vertices and reports the covering
radius next to the closed forms.
"""

import math

import numpy as np

from nncontrol import geometry
from nncontrol.action_sets import (
    centered_regular_simplex,
    grid_set,
    lemma3_delta,
    lemma4_delta,
    planar_trine,
    regular_simplex,
    simplex_delta,
)

np.set_printoptions(precision=4, suppress=True)

# Planar trine: three directions 120 degrees apart plus the origin.
U = planar_trine(theta=0.0, alpha=0.1)
cell = geometry.voronoi_cell(U.actions, U.base_index)
print("trine actions:\n", U.actions)
print("base cell vertices:\n", cell.vertices.vertices)
print(f"covering radius {cell.delta:.6f} (alpha = 0.1)")
print(f"worst alignment mu_min,1 ~ {geometry.min_alignment(U).value:.4f}\n")

# Simplex families: exact radius against the closed forms.
print(" m   simplex   closed-form   exact     centred   closed-form")
for m in range(1, 6):
    d_s = geometry.covering_radius(regular_simplex(m))
    d_c = geometry.covering_radius(centered_regular_simplex(m))
    print(f"{m:2d}  {d_s:8.5f}  {lemma3_delta(m):8.5f}     {simplex_delta(m):8.5f}  "
          f"{d_c:8.5f}  {lemma4_delta(m):8.5f}")
print("(m = 1: the closed form keeps only the simplex-vertex side of the cell)\n")

# Grids: the base cell is a cube of side lam, so the radius is half its diagonal.
for m in (1, 2, 3):
    d = geometry.covering_radius(grid_set(m, 1, 1.0))
    print(f"grid m={m}: radius {d:.5f}, sqrt(m)/2 = {math.sqrt(m) / 2:.5f}")

# A set whose base sits on the hull boundary has an unbounded cell.
bad = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
print("\ncorner set bounded?", geometry.is_bounded(geometry.voronoi_halfspaces(bad, 0)))
