"""Low-dimensional polyhedral geometry for finite action sets.

Voronoi cells are kept in H-representation ``A x <= b`` and converted to
vertices by exhaustive basis enumeration, which is exact and cheap for the
small dimensions (m <= 8) and small point sets this package deals with.
Boundedness and hull-interior questions are answered with linear programs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .exceptions import (
    Degenerate,
    DimensionTooLarge,
    DuplicatePoints,
    EmptyPolytope,
    NumericalFailure,
    UnboundedCell,
)

TOL_GEOM = 1e-9
TOL_INTERIOR = 1e-7
MAX_DIM = 8

# Above this many candidate bases, redundant rows are pruned by LP first.
_PRUNE_COMBINATIONS = 20_000
_CHUNK = 4096
_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass(frozen=True)
class HalfspaceSystem:
    """Polyhedron ``{x : normals @ x <= offsets}``."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"{A.shape[0]} normals but {b.shape[0]} offsets")
        if A.size and np.any(np.linalg.norm(A, axis=1) == 0.0):
            raise ValueError("halfspace with zero normal")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def __len__(self):
        return self.normals.shape[0]

    def residuals(self, x):
        """Signed distances of ``x`` past each boundary (positive = violated)."""
        x = np.asarray(x, dtype=float)
        norms = np.linalg.norm(self.normals, axis=1)
        return (x @ self.normals.T - self.offsets) / norms

    def contains(self, x, tol=TOL_GEOM):
        return np.all(self.residuals(x) <= tol, axis=-1)

    def stack(self, other: "HalfspaceSystem") -> "HalfspaceSystem":
        return HalfspaceSystem(
            np.vstack([self.normals, other.normals]),
            np.concatenate([self.offsets, other.offsets]),
        )


@dataclass(frozen=True)
class PolytopeVertices:
    vertices: np.ndarray
    dim: int

    def __len__(self):
        return self.vertices.shape[0]


@dataclass(frozen=True)
class VoronoiCellReport:
    center: np.ndarray
    halfspaces: HalfspaceSystem
    bounded: bool
    vertices: PolytopeVertices | None = None
    delta: float | None = None


@dataclass(frozen=True)
class SamplingConfig:
    """Controls for :func:`min_alignment`.

    ``boundary_samples`` points are placed along every edge of each clipped
    cell; the clipping box half-width is ``far_multiplier`` times the largest
    action offset from the base.
    """

    boundary_samples: int = 64
    far_multiplier: float = 10.0


@dataclass(frozen=True)
class AlignmentEstimate:
    value: float
    cell_index: int
    location: np.ndarray = field(repr=False)
    kind: str = "vertex"

    def __float__(self):
        return self.value


def _as_points(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2:
        raise ValueError("points must be a 2-D array (count, dim)")
    if not np.all(np.isfinite(P)):
        raise ValueError("points must be finite")
    return P


def _check_distinct(P: np.ndarray, tol=TOL_GEOM):
    diff = P[:, None, :] - P[None, :, :]
    d = np.linalg.norm(diff, axis=-1)
    np.fill_diagonal(d, np.inf)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    if d[i, j] <= tol:
        raise DuplicatePoints(f"points {min(i, j)} and {max(i, j)} coincide")


def voronoi_halfspaces(points, center_index: int) -> HalfspaceSystem:
    """Bisector halfspaces of the Voronoi cell of ``points[center_index]``.

    For every other point ``v`` and centre ``c`` the row is
    ``<v - c, x> <= (|v|^2 - |c|^2) / 2``, i.e. ``x`` is at least as close to
    ``c`` as to ``v``. With ``c = 0`` this is ``v^T x <= |v|^2 / 2``.
    """
    P = _as_points(points)
    if not 0 <= center_index < len(P):
        raise IndexError(f"center_index {center_index} out of range for {len(P)} points")
    _check_distinct(P)
    c = P[center_index]
    others = np.delete(P, center_index, axis=0)
    A = others - c
    b = 0.5 * (np.sum(others**2, axis=1) - c @ c)
    return HalfspaceSystem(A, b)


def _is_feasible(h: HalfspaceSystem) -> bool:
    res = linprog(
        np.zeros(h.dim),
        A_ub=h.normals,
        b_ub=h.offsets,
        bounds=[(None, None)] * h.dim,
        method="highs",
    )
    if res.status == 2:
        return False
    if res.status in (0, 3):
        return True
    raise NumericalFailure(res.message)


def remove_redundant(h: HalfspaceSystem, tol=TOL_GEOM) -> HalfspaceSystem:
    """Drop rows that are implied by the remaining ones (one LP per row)."""
    keep = np.ones(len(h), dtype=bool)
    for i in range(len(h)):
        others = keep.copy()
        others[i] = False
        if not others.any():
            continue
        a = h.normals[i]
        # Relax row i slightly so the LP stays bounded only through the others.
        A_ub = np.vstack([h.normals[others], a])
        b_ub = np.concatenate([h.offsets[others], [h.offsets[i] + 1.0 + abs(h.offsets[i])]])
        res = linprog(-a, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * h.dim, method="highs")
        if res.status != 0:
            continue
        if -res.fun <= h.offsets[i] + tol * np.linalg.norm(a):
            keep[i] = False
    return HalfspaceSystem(h.normals[keep], h.offsets[keep])


def _dedupe(V: np.ndarray, tol=TOL_GEOM) -> np.ndarray:
    kept: list[np.ndarray] = []
    for v in V:
        if not any(np.linalg.norm(v - k) <= tol * max(1.0, np.linalg.norm(v)) for k in kept):
            kept.append(v)
    return np.array(kept) if kept else np.empty((0, V.shape[1]))


def enumerate_vertices(h: HalfspaceSystem, tol=TOL_GEOM) -> PolytopeVertices:
    """All vertices of ``h`` by solving every ``dim``-subset of its rows.

    Singular subsets are skipped and intersection points violating any row
    by more than ``tol`` (measured as distance past the boundary) are
    discarded. A polyhedron with no vertices but a nonempty interior (a
    halfplane, say) yields an empty vertex list.

    Raises
    ------
    DimensionTooLarge
        If ``h.dim > 8``.
    EmptyPolytope
        If no vertex exists and the system is infeasible.
    """
    m = h.dim
    if m > MAX_DIM:
        raise DimensionTooLarge(f"vertex enumeration limited to dim <= {MAX_DIM}, got {m}")
    if math.comb(len(h), m) > _PRUNE_COMBINATIONS:
        h = remove_redundant(h)
    A, b = h.normals, h.offsets
    found = []
    combos = itertools.combinations(range(len(h)), m)
    while True:
        chunk = np.array(list(itertools.islice(combos, _CHUNK)), dtype=int)
        if chunk.size == 0:
            break
        As = A[chunk]
        bs = b[chunk]
        s = np.linalg.svd(As, compute_uv=False)
        ok = s[:, -1] > 1e-12 * s[:, 0]
        if not ok.any():
            continue
        x = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
        feasible = h.contains(x, tol)
        found.append(x[feasible])
    V = np.vstack(found) if found else np.empty((0, m))
    V = _dedupe(V, tol)
    if len(V) == 0 and not _is_feasible(h):
        raise EmptyPolytope("halfspace system is infeasible")
    return PolytopeVertices(V, m)


def is_bounded(h: HalfspaceSystem) -> bool:
    """Recession-cone certificate: bounded iff ``{r : A r <= 0}`` is ``{0}``.

    Each coordinate is maximised and minimised over the cone intersected with
    the unit box; any nonzero optimum exhibits an unbounded direction.
    """
    m = h.dim
    for j in range(m):
        for sign in (1.0, -1.0):
            c = np.zeros(m)
            c[j] = -sign
            res = linprog(
                c,
                A_ub=h.normals,
                b_ub=np.zeros(len(h)),
                bounds=[(-1.0, 1.0)] * m,
                method="highs",
                options=_LP_OPTIONS,
            )
            if res.status != 0:
                raise NumericalFailure(res.message)
            if -res.fun > TOL_GEOM:
                return False
    return True


def _in_hull(P: np.ndarray, q: np.ndarray) -> bool:
    k = len(P)
    A_eq = np.vstack([P.T, np.ones((1, k))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(
        np.zeros(k),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(0.0, None)] * k,
        method="highs",
        options=_LP_OPTIONS,
    )
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise NumericalFailure(res.message)


def contains_in_interior(points, p, tol_interior=TOL_INTERIOR) -> bool:
    """True if ``p`` lies in the interior of ``conv(points)``.

    Probes ``p +/- tol_interior * e_j`` for every axis; all ``2m`` probes must
    be convex combinations of ``points``.
    """
    P = _as_points(points)
    p = np.asarray(p, dtype=float).reshape(-1)
    if len(P) < 2:
        raise ValueError("need at least two points")
    if p.shape[0] != P.shape[1]:
        raise ValueError("dimension mismatch between p and points")
    for j in range(P.shape[1]):
        for sign in (1.0, -1.0):
            q = p.copy()
            q[j] += sign * tol_interior
            if not _in_hull(P, q):
                return False
    return True


def _unpack_set(action_set):
    return _as_points(action_set.actions), int(action_set.base_index)


def _bounded_cell_vertices(P: np.ndarray, k: int) -> tuple[HalfspaceSystem, np.ndarray]:
    """Exact vertices of the (bounded) Voronoi cell of ``P[k]``.

    Points are added nearest-first until the partial cell is bounded; its
    circumradius ``R`` then limits the relevant neighbours to distance ``2R``.
    """
    c = P[k]
    others = np.delete(P, k, axis=0)
    order = np.argsort(np.linalg.norm(others - c, axis=1), kind="stable")
    dist = np.linalg.norm(others[order] - c, axis=1)
    m = P.shape[1]
    count = min(len(others), m + 1)
    while True:
        sub = np.vstack([c, others[order[:count]]])
        h = voronoi_halfspaces(sub, 0)
        if is_bounded(h):
            break
        if count == len(others):
            raise UnboundedCell("Voronoi cell of the base action is unbounded")
        count = min(len(others), 2 * count)
    V = enumerate_vertices(h).vertices
    R = np.max(np.linalg.norm(V - c, axis=1))
    relevant = order[dist <= 2.0 * R * (1.0 + 1e-9) + TOL_GEOM]
    h = voronoi_halfspaces(np.vstack([c, others[relevant]]), 0)
    V = enumerate_vertices(h).vertices
    return h, V


def voronoi_cell(points, center_index: int) -> VoronoiCellReport:
    """Voronoi cell of one point with its boundedness verdict and radius."""
    P = _as_points(points)
    h = voronoi_halfspaces(P, center_index)
    if not is_bounded(h):
        return VoronoiCellReport(P[center_index], h, False)
    _, V = _bounded_cell_vertices(P, center_index)
    delta = float(np.max(np.linalg.norm(V - P[center_index], axis=1)))
    return VoronoiCellReport(P[center_index], h, True, PolytopeVertices(V, P.shape[1]), delta)


def covering_radius(action_set) -> float:
    """Smallest ``delta`` with the base action's Voronoi cell inside ``B_delta(base)``.

    Raises
    ------
    UnboundedCell
        If the base cell is unbounded, i.e. the base is not interior to the
        hull of the remaining actions.
    """
    P, k = _unpack_set(action_set)
    _check_distinct(P)
    _, V = _bounded_cell_vertices(P, k)
    return float(np.max(np.linalg.norm(V - P[k], axis=1)))


def _cosines(direction: np.ndarray, W: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(W, axis=1)
    ok = norms > TOL_GEOM
    out = np.full(len(W), np.inf)
    out[ok] = (W[ok] @ direction) / (norms[ok] * np.linalg.norm(direction))
    return out


def _edge_samples(h: HalfspaceSystem, V: np.ndarray, n: int) -> np.ndarray:
    """Points along polytope edges: vertex pairs sharing ``dim - 1`` active rows."""
    m = h.dim
    if len(V) < 2 or n <= 0:
        return np.empty((0, m))
    active = np.abs(h.residuals(V)) <= 1e-7
    pairs = [
        (i, j)
        for i, j in itertools.combinations(range(len(V)), 2)
        if np.count_nonzero(active[i] & active[j]) >= m - 1
    ]
    if not pairs:
        return np.empty((0, m))
    t = np.linspace(0.0, 1.0, n + 2)[1:-1, None]
    return np.vstack([V[i] + t * (V[j] - V[i]) for i, j in pairs])


def min_alignment(action_set, sampling: SamplingConfig | None = None) -> AlignmentEstimate:
    """Sampled lower estimate of the worst alignment between an action and its cell.

    For every non-base action ``u_i`` the cosine of the angle between
    ``u_i - base`` and ``w - base`` is minimised over ``w`` in the Voronoi
    cell of ``u_i``. Candidates are the vertices of each cell clipped to a
    large box, the extreme directions of each cell's recession cone, and
    points spread along the edges of the clipped cell. The returned value is
    the smallest cosine found, together with where it was found.
    """
    sampling = sampling or SamplingConfig()
    P, k = _unpack_set(action_set)
    _check_distinct(P)
    m = P.shape[1]
    base = P[k]
    # (A1)/(A3) gate; also gives the scale of the base cell.
    _, V0 = _bounded_cell_vertices(P, k)
    delta = np.max(np.linalg.norm(V0 - base, axis=1))
    R = sampling.far_multiplier * max(np.max(np.linalg.norm(P - base, axis=1)), delta)
    eye = np.eye(m)
    box = HalfspaceSystem(np.vstack([eye, -eye]), np.concatenate([base + R, R - base]))
    unit_box = HalfspaceSystem(np.vstack([eye, -eye]), np.ones(2 * m))

    best = AlignmentEstimate(math.inf, -1, base)
    for i in range(len(P)):
        if i == k:
            continue
        u = P[i] - base
        if np.linalg.norm(u) <= TOL_GEOM:
            raise Degenerate(f"action {i} coincides with the base action")
        h = voronoi_halfspaces(P, i)
        candidates = []
        clipped = h.stack(box)
        Vc = enumerate_vertices(clipped).vertices
        candidates.append(("vertex", Vc - base))
        cone = HalfspaceSystem(h.normals, np.zeros(len(h))).stack(unit_box)
        rays = enumerate_vertices(cone).vertices
        candidates.append(("ray", rays))
        candidates.append(("boundary", _edge_samples(clipped, Vc, sampling.boundary_samples) - base))
        for kind, W in candidates:
            if len(W) == 0:
                continue
            cos = _cosines(u, W)
            j = int(np.argmin(cos))
            if cos[j] < best.value:
                loc = W[j] if kind == "ray" else W[j] + base
                best = AlignmentEstimate(float(cos[j]), i, loc, kind)
    if not math.isfinite(best.value):
        raise Degenerate("no non-base action to align with")
    return best
