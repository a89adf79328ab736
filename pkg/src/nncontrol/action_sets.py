"""Finite control-action sets: constructors, minimal-set design and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import geometry
from .exceptions import NNControlError, NotOrthogonal, TooManyActions
from .geometry import TOL_GEOM, SamplingConfig

MAX_GRID_ENTRIES = 10**6


@dataclass(frozen=True, eq=False)
class ActionSet:
    """Actions ``u_0..u_p`` in R^m with the base action stored by index.

    The base is ``0`` for regulation to the origin and ``u*`` for the
    incremental setting; it need not be the first element.
    """

    actions: np.ndarray
    base_index: int = 0

    def __post_init__(self):
        U = np.asarray(self.actions, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        if U.ndim != 2 or U.shape[1] < 1:
            raise ValueError("actions must have shape (count, m) with m >= 1")
        if not 0 <= self.base_index < len(U):
            raise IndexError(f"base_index {self.base_index} out of range")
        if len(U) > 1:
            geometry._check_distinct(U)
        U.setflags(write=False)
        object.__setattr__(self, "actions", U)
        object.__setattr__(self, "base_index", int(self.base_index))

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    @property
    def base(self) -> np.ndarray:
        return self.actions[self.base_index]

    @property
    def non_base(self) -> np.ndarray:
        return np.delete(self.actions, self.base_index, axis=0)

    def __len__(self):
        return len(self.actions)

    def translated(self, shift) -> "ActionSet":
        return ActionSet(self.actions + np.asarray(shift, dtype=float), self.base_index)

    def scaled(self, c: float) -> "ActionSet":
        return ActionSet(c * self.actions, self.base_index)

    def rotated(self, R) -> "ActionSet":
        return ActionSet(self.actions @ np.asarray(R, dtype=float).T, self.base_index)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "base_index": self.base_index,
            "actions": [[float(v) for v in row] for row in self.actions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActionSet":
        unknown = set(d) - {"dim", "base_index", "actions"}
        if unknown:
            raise ValueError(f"unknown ActionSet fields: {sorted(unknown)}")
        s = cls(np.asarray(d["actions"], dtype=float), int(d["base_index"]))
        if s.dim != int(d["dim"]):
            raise ValueError(f"dim {d['dim']} does not match action length {s.dim}")
        return s

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "ActionSet":
        return cls.from_dict(json.loads(text))


class Variant(str, Enum):
    NON_CENTERED = "noncentered"
    CENTERED = "centered"


@dataclass(frozen=True)
class ValidationReport:
    assumption_ok: bool
    delta: float | None = None
    mu_min1: float | None = None
    witness: str | None = None
    minimal: bool = False
    note: str | None = None

    def to_dict(self) -> dict:
        return {
            "assumption_ok": self.assumption_ok,
            "delta": self.delta,
            "mu_min1": self.mu_min1,
            "mu_estimated": self.mu_min1 is not None,
            "witness": self.witness,
            "minimal": self.minimal,
            "note": self.note,
        }


def _with_origin_base(vertices: np.ndarray) -> ActionSet:
    m = vertices.shape[1]
    return ActionSet(np.vstack([np.zeros((1, m)), vertices]), base_index=0)


def simplex_vertices(m: int, lam: float = 1.0) -> np.ndarray:
    """``lam * {e_1, ..., e_m, (1 - sqrt(m+1))/m * 1}`` as an ``(m+1, m)`` array."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    last = np.full((1, m), (1.0 - math.sqrt(m + 1)) / m)
    return lam * np.vstack([np.eye(m), last])


def simplex_barycenter(m: int, lam: float = 1.0) -> np.ndarray:
    return lam * (math.sqrt(m + 1) - 1.0) / (m * math.sqrt(m + 1)) * np.ones(m)


def regular_simplex(m: int, lam: float = 1.0) -> ActionSet:
    """Regular simplex vertices plus the origin as base (``m + 2`` actions)."""
    return _with_origin_base(simplex_vertices(m, lam))


def centered_regular_simplex(m: int, lam: float = 1.0) -> ActionSet:
    """Regular simplex shifted so its barycenter is the origin, plus base 0."""
    return _with_origin_base(simplex_vertices(m, lam) - simplex_barycenter(m, lam))


def grid_set(m: int, N: int, lam: float = 1.0) -> ActionSet:
    """Scaled integer grid ``lam * {-N, ..., N}^m`` with base at the origin."""
    if m < 1 or N < 1:
        raise ValueError("m and N must be positive")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    count = (2 * N + 1) ** m
    if m * count > MAX_GRID_ENTRIES:
        raise TooManyActions(f"grid with {count} actions in R^{m} exceeds the size guard")
    axis = np.arange(-N, N + 1, dtype=float)
    pts = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    base = int(np.flatnonzero(np.all(pts == 0, axis=1))[0])
    return ActionSet(lam * pts, base)


def planar_trine(theta: float = 0.0, alpha: float = 1.0) -> ActionSet:
    """Origin plus three directions at 120 degree spacing, scaled by ``alpha``."""
    angles = theta + np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
    dirs = np.column_stack([np.sin(angles), np.cos(angles)])
    return _with_origin_base(alpha * dirs)


def lemma3_delta(m: int, lam: float = 1.0) -> float:
    """Published closed form for the base-cell radius of ``S_reg u {0}``."""
    return lam / 2 * math.sqrt(m - 1 + (2 - m - math.sqrt(m + 1)) ** 2)


def lemma4_delta(m: int, lam: float = 1.0) -> float:
    """Closed-form base-cell radius of the centred simplex plus the origin."""
    return lam * m / 2 * math.sqrt(m / (m + 1))


def simplex_delta(m: int, lam: float = 1.0) -> float:
    """Exact base-cell radius of ``S_reg u {0}``.

    The cell has vertices ``(lam/2) 1`` and ``(lam/2) v_i``; the published
    formula keeps only the ``v_i`` and so undershoots for ``m = 1``.
    """
    return max(lemma3_delta(m, lam), lam / 2 * math.sqrt(m))


def grid_delta_bound(m: int, lam: float = 1.0) -> float:
    """Conservative radius ``lam * sqrt(m)`` used for grid sets.

    The exact base-cell radius of a grid is half of this.
    """
    return lam * math.sqrt(m)


def check_orthogonal(R, tol=TOL_GEOM) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise NotOrthogonal("rotation must be a square matrix")
    err = np.max(np.abs(R.T @ R - np.eye(R.shape[0])))
    if err > tol:
        raise NotOrthogonal(f"R^T R deviates from identity by {err:.3g}")
    return R


def design_minimal_set(m: int, delta: float, rotation=None, u_star=None,
                       variant: Variant | str = Variant.CENTERED) -> ActionSet:
    """Minimal ``m + 2``-element action set with base ``u_star`` and radius ``delta``.

    Builds ``(R S ∪ {0}) + u*`` where ``S`` is the regular simplex
    (``noncentered``) or its barycentred version (``centered``) and ``lam``
    is picked so the base cell radius equals ``delta`` exactly.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    variant = Variant(variant)
    R = np.eye(m) if rotation is None else check_orthogonal(rotation)
    if R.shape != (m, m):
        raise NotOrthogonal(f"rotation must be {m}x{m}")
    u_star = np.zeros(m) if u_star is None else np.asarray(u_star, dtype=float).reshape(m)
    if variant is Variant.CENTERED:
        lam = 2 * delta / m * math.sqrt((m + 1) / m)
        S = simplex_vertices(m, lam) - simplex_barycenter(m, lam)
    else:
        lam = delta / simplex_delta(m, 1.0)
        S = simplex_vertices(m, lam)
    actions = np.vstack([np.zeros((1, m)), S @ R.T]) + u_star
    return ActionSet(actions, base_index=0)


def validate(action_set: ActionSet, want_mu: bool = False,
             sampling: SamplingConfig | None = None) -> ValidationReport:
    """Check (A1)/(A3) for ``action_set`` and report its covering radius.

    Failures are reported in the returned record rather than raised.
    """
    U = action_set.actions
    m = action_set.dim
    others = action_set.non_base
    minimal = len(others) == m + 1
    if len(others) < 2:
        return ValidationReport(False, witness="base not in interior: fewer than two non-base actions")
    if not geometry.contains_in_interior(others, action_set.base):
        return ValidationReport(False, witness="base not in interior of conv(non-base actions)",
                                minimal=minimal)
    h = geometry.voronoi_halfspaces(U, action_set.base_index)
    if not geometry.is_bounded(h):
        return ValidationReport(False, witness="base Voronoi cell is unbounded", minimal=minimal)
    try:
        delta = geometry.covering_radius(action_set)
        mu = geometry.min_alignment(action_set, sampling).value if want_mu else None
    except NNControlError as exc:
        return ValidationReport(False, witness=f"{type(exc).__name__}: {exc}", minimal=minimal)
    note = "minimal cardinality: m+1 non-base actions" if minimal else None
    return ValidationReport(True, delta, mu, None, minimal, note)
