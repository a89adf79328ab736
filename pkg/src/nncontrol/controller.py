"""Nearest-neighbour feedback maps and design-condition checks.

The basic map picks the action closest to ``-y``::

    phi(y) = argmin_{v in U} |v + y|

Sector feedback applies it to ``F(y)``; the incremental laws apply it to
``F(y - y*) - u*``. Ties are broken towards the lowest action index, and an
optional hysteresis margin keeps the held action while it stays within
that distance of the optimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from . import geometry
from .action_sets import ActionSet
from .exceptions import MissingSector, MissingSetpoint, NoSolution
from .geometry import SamplingConfig
from .systems import ObservabilityGain

TIE_TOL = 1e-12


class NearestNeighborLaw:
    """Nearest-action selection with lowest-index tie-breaking and hysteresis.

    With ``hysteresis > 0`` the instance remembers the held action, so it
    must not be shared between concurrent simulations.
    """

    def __init__(self, action_set: ActionSet, tie_tol: float = TIE_TOL, hysteresis: float = 0.0):
        if tie_tol < 0 or hysteresis < 0:
            raise ValueError("tie_tol and hysteresis must be nonnegative")
        self.set = action_set
        self.tie_tol = float(tie_tol)
        self.hysteresis = float(hysteresis)
        self.held: int | None = None

    def reset(self):
        self.held = None

    def distances(self, z):
        """``|v + z|`` for every action ``v``; ``z`` may be batched ``(..., m)``."""
        z = np.asarray(z, dtype=float)
        diff = self.set.actions + z[..., None, :]
        return np.sqrt(np.einsum("...k,...k->...", diff, diff))

    def select(self, Z, held=None) -> np.ndarray:
        """Vectorised selection over a batch ``Z`` of shape ``(B, m)``.

        ``held`` is an integer array of previously held indices (``-1`` for
        none); it is only consulted when hysteresis is positive.
        """
        D = self.distances(np.atleast_2d(Z))
        dmin = D.min(axis=1, keepdims=True)
        idx = np.argmax(D <= dmin + self.tie_tol, axis=1)
        if self.hysteresis > 0 and held is not None:
            held = np.asarray(held)
            has = held >= 0
            rows = np.flatnonzero(has)
            keep = D[rows, held[rows]] <= dmin[rows, 0] + self.hysteresis
            idx[rows[keep]] = held[rows[keep]]
        return idx

    def __call__(self, y):
        """Chosen action and full tie set for one query ``y``; updates held state."""
        y = np.asarray(y, dtype=float).reshape(self.set.dim)
        d = self.distances(y)
        ties = np.flatnonzero(d <= d.min() + self.tie_tol)
        held = np.array([-1 if self.held is None else self.held])
        i = int(self.select(y[None], held)[0])
        self.held = i if self.hysteresis > 0 else None
        return self.set.actions[i].copy(), self.set.actions[ties].copy()


def phi(law: NearestNeighborLaw, y):
    """Nearest-neighbour map; returns ``(chosen, tie_set)``."""
    return law(y)


@dataclass(frozen=True)
class SectorFeedback:
    """Map ``F`` with ``k1|y|^2 <= <F(y), y> <= k2|y|^2`` and ``|F(y)| <= k3|y|``."""

    F: Callable[[np.ndarray], np.ndarray]
    k1: float
    k2: float
    k3: float
    name: str = "custom"

    def __post_init__(self):
        if not (0 < self.k1 <= self.k2 and self.k3 >= self.k1):
            raise ValueError("sector constants need 0 < k1 <= k2 and k3 >= k1")

    def sampled_violation(self, m: int, samples: int = 1000, seed: int = 0, scale: float = 10.0) -> float:
        """Largest violation of the sector inequalities on random outputs."""
        rng = np.random.default_rng(seed)
        Y = rng.normal(size=(samples, m)) * scale * rng.uniform(size=(samples, 1))
        FY = self.F(Y)
        ny2 = np.sum(Y**2, axis=1)
        ip = np.sum(FY * Y, axis=1)
        v = np.maximum.reduce([
            self.k1 * ny2 - ip,
            ip - self.k2 * ny2,
            np.linalg.norm(FY, axis=1) - self.k3 * np.sqrt(ny2),
        ])
        return float(max(0.0, v.max()))


def identity_gain(k: float) -> SectorFeedback:
    k = float(k)
    return SectorFeedback(lambda y: k * np.asarray(y, dtype=float), k, k, k, f"identity_gain:{k:g}")


def diagonal_gain(*gains: float) -> SectorFeedback:
    d = np.asarray(gains, dtype=float)
    return SectorFeedback(lambda y: np.asarray(y, dtype=float) * d, d.min(), d.max(), d.max(),
                          "diagonal_gain:" + ",".join(f"{g:g}" for g in d))


SECTORS: dict[str, Callable[..., SectorFeedback]] = {
    "identity_gain": identity_gain,
    "diagonal_gain": diagonal_gain,
}


def get_sector(key: str) -> SectorFeedback:
    """``"identity_gain:k"`` or ``"diagonal_gain:d1,d2,..."``."""
    name, _, args = key.partition(":")
    if name not in SECTORS:
        raise KeyError(f"unknown sector map {key!r}; known: {sorted(SECTORS)}")
    return SECTORS[name](*[float(a) for a in args.split(",") if a])


class LawVariant(str, Enum):
    UNITY = "unity"
    SECTOR = "sector"
    INCREMENTAL_UNITY = "incremental_unity"
    INCREMENTAL_SECTOR = "incremental_sector"

    @property
    def incremental(self):
        return self in (LawVariant.INCREMENTAL_UNITY, LawVariant.INCREMENTAL_SECTOR)

    @property
    def uses_sector(self):
        return self in (LawVariant.SECTOR, LawVariant.INCREMENTAL_SECTOR)


@dataclass
class FeedbackLaw:
    variant: LawVariant
    law: NearestNeighborLaw
    sector: SectorFeedback | None = None
    u_star: np.ndarray | None = None
    y_star: np.ndarray | None = None
    held: int | None = field(default=None, repr=False)

    def __post_init__(self):
        self.variant = LawVariant(self.variant)
        if self.variant.uses_sector and self.sector is None:
            raise MissingSector(f"{self.variant.value} law needs a sector map")
        if self.variant.incremental:
            if self.u_star is None or self.y_star is None:
                raise MissingSetpoint(f"{self.variant.value} law needs u_star and y_star")
            self.u_star = np.asarray(self.u_star, dtype=float).reshape(self.law.set.dim)
            self.y_star = np.asarray(self.y_star, dtype=float).reshape(self.law.set.dim)

    @property
    def action_set(self) -> ActionSet:
        return self.law.set

    def argument(self, Y):
        """Point fed to the nearest-neighbour map for outputs ``Y``."""
        Y = np.asarray(Y, dtype=float)
        if self.variant.incremental:
            Z = Y - self.y_star
            if self.variant.uses_sector:
                Z = self.sector.F(Z)
            return Z - self.u_star
        return self.sector.F(Y) if self.variant.uses_sector else Y

    def select(self, Y, held=None) -> np.ndarray:
        return self.law.select(np.atleast_2d(self.argument(Y)), held)

    def __call__(self, y):
        y = np.asarray(y, dtype=float).reshape(self.law.set.dim)
        held = np.array([-1 if self.held is None else self.held])
        i = int(self.select(y[None], held)[0])
        self.held = i if self.law.hysteresis > 0 else None
        return self.law.set.actions[i].copy()

    def fresh(self) -> "FeedbackLaw":
        """Copy with its own (empty) hysteresis state."""
        law = NearestNeighborLaw(self.law.set, self.law.tie_tol, self.law.hysteresis)
        return FeedbackLaw(self.variant, law, self.sector, self.u_star, self.y_star)

    def to_dict(self) -> dict:
        d = {"variant": self.variant.value, "set": self.law.set.to_dict()}
        if self.sector is not None:
            d.update(sector=self.sector.name, k1=self.sector.k1, k2=self.sector.k2, k3=self.sector.k3)
        if self.u_star is not None:
            d["u_star"] = [float(v) for v in self.u_star]
        if self.y_star is not None:
            d["y_star"] = [float(v) for v in self.y_star]
        d["hysteresis"] = self.law.hysteresis
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackLaw":
        known = {"variant", "set", "sector", "k1", "k2", "k3", "u_star", "y_star", "hysteresis", "tie_tol"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown FeedbackLaw fields: {sorted(unknown)}")
        law = NearestNeighborLaw(ActionSet.from_dict(d["set"]), d.get("tie_tol", TIE_TOL),
                                 d.get("hysteresis", 0.0))
        sector = get_sector(d["sector"]) if d.get("sector") else None
        return cls(LawVariant(d["variant"]), law, sector, d.get("u_star"), d.get("y_star"))

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "FeedbackLaw":
        return cls.from_dict(json.loads(text))


def unity_law(action_set: ActionSet, hysteresis: float = 0.0) -> FeedbackLaw:
    return FeedbackLaw(LawVariant.UNITY, NearestNeighborLaw(action_set, hysteresis=hysteresis))


def incremental_law(action_set: ActionSet, u_star, y_star, sector: SectorFeedback | None = None,
                    hysteresis: float = 0.0) -> FeedbackLaw:
    variant = LawVariant.INCREMENTAL_SECTOR if sector else LawVariant.INCREMENTAL_UNITY
    return FeedbackLaw(variant, NearestNeighborLaw(action_set, hysteresis=hysteresis), sector, u_star, y_star)


def phi_sector(flaw: FeedbackLaw, y):
    """``phi(F(y))``."""
    if flaw.sector is None:
        raise MissingSector("sector law requested without a sector map")
    if flaw.variant is not LawVariant.SECTOR:
        raise ValueError(f"expected a sector law, got {flaw.variant.value}")
    return flaw(y)


def phi_incremental(flaw: FeedbackLaw, y):
    """``phi(F(y - y*) - u*)`` with ``F`` the identity for the unity variant."""
    if flaw.u_star is None or flaw.y_star is None:
        raise MissingSetpoint("incremental law requested without u_star / y_star")
    if not flaw.variant.incremental:
        raise ValueError(f"expected an incremental law, got {flaw.variant.value}")
    return flaw(y)


# -- design checks ----------------------------------------------------------

@dataclass(frozen=True)
class DesignVerdict:
    passed: bool
    delta: float
    epsilon: float
    gamma_value: float
    mu_min1: float | None = None
    sector_value: float | None = None
    sector_ok: bool | None = None
    gain_ok: bool | None = None

    def to_dict(self) -> dict:
        d = {
            "passed": self.passed,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "gamma_value": self.gamma_value,
            "gain_ok": self.gain_ok,
        }
        if self.mu_min1 is not None:
            d.update(mu_min1=self.mu_min1, mu_estimated=True,
                     sector_value=self.sector_value, sector_ok=self.sector_ok)
        return d


def check_proposition1(action_set: ActionSet, gamma: ObservabilityGain, epsilon: float) -> DesignVerdict:
    """``gamma(delta) <= epsilon`` with ``delta`` the covering radius of the base cell."""
    delta = geometry.covering_radius(action_set)
    g = float(gamma(delta))
    ok = g <= epsilon
    return DesignVerdict(ok, delta, float(epsilon), g, gain_ok=ok)


def check_proposition2(action_set: ActionSet, sector: SectorFeedback, gamma: ObservabilityGain,
                       epsilon: float, sampling: SamplingConfig | None = None) -> DesignVerdict:
    """Sector condition ``k1^2/k3^2 + mu^2 > 1`` and gain condition ``gamma(delta/k1) <= epsilon``.

    ``mu`` is the sampled estimate from :func:`geometry.min_alignment`.
    """
    delta = geometry.covering_radius(action_set)
    mu = geometry.min_alignment(action_set, sampling).value
    sector_value = (sector.k1 / sector.k3) ** 2 + mu**2
    sector_ok = sector_value > 1.0
    g = float(gamma(delta / sector.k1))
    gain_ok = g <= epsilon
    return DesignVerdict(sector_ok and gain_ok, delta, float(epsilon), g, mu, sector_value, sector_ok, gain_ok)


# Incremental counterparts: same conditions, the set's base is u* and the gain is the incremental one.
check_proposition3 = check_proposition1
check_proposition4 = check_proposition2


def largest_delta(gamma: Callable[[float], float], epsilon: float, k1: float = 1.0,
                  rtol: float = 1e-12) -> float:
    """Largest ``delta`` with ``gamma(delta / k1) <= epsilon``.

    Exponential bracketing followed by bisection; the returned value is on
    the feasible side of the root.
    """
    if not (epsilon > 0 and k1 > 0):
        raise ValueError("epsilon and k1 must be positive")
    lo, hi = 0.0, 1.0
    if gamma(hi) <= epsilon:
        lo = hi
        while gamma(hi) <= epsilon:
            lo, hi = hi, 2.0 * hi
            if hi > 1e300:
                return math.inf
    else:
        while gamma(hi) > epsilon:
            hi *= 0.5
            if hi < 1e-300:
                raise NoSolution("gain exceeds epsilon for every probed argument")
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if gamma(mid) <= epsilon:
            lo = mid
        else:
            hi = mid
    return lo * k1
