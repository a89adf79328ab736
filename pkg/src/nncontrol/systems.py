"""Control-affine systems, storage functions and observability gains.

All evaluators are vectorised over leading axes: ``f(x)`` maps ``(..., n)``
to ``(..., n)``, ``g(x)`` to ``(..., n, m)`` and ``h(x)`` to ``(..., m)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from .exceptions import DegenerateEquilibrium, NotSteadyState

SS_TOL = 1e-9
FD_TOL = 1e-5
FD_STEP = 1e-6

Array = np.ndarray


@dataclass(frozen=True)
class StorageFunction:
    H: Callable[[Array], Array]
    gradient: Callable[[Array], Array]

    def __call__(self, x):
        return self.H(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ControlAffineSystem:
    """``xdot = f(x) + g(x) u``, ``y = h(x)`` with ``u, y`` in R^m."""

    n: int
    m: int
    f: Callable[[Array], Array]
    g: Callable[[Array], Array]
    h: Callable[[Array], Array]
    name: str = "system"
    storage: StorageFunction | None = None
    # Set when g(x) does not depend on x; lets integrators skip re-evaluating it.
    input_matrix: np.ndarray | None = None

    def rhs(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if self.input_matrix is not None:
            return self.f(x) + u @ self.input_matrix.T
        return self.f(x) + np.einsum("...ij,...j->...i", self.g(x), u)

    def output(self, x):
        return self.h(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SteadyStatePair:
    x_star: Array
    u_star: Array
    residual: float

    @classmethod
    def of(cls, sys: ControlAffineSystem, x_star, u_star) -> "SteadyStatePair":
        x_star = np.asarray(x_star, dtype=float).reshape(sys.n)
        u_star = np.asarray(u_star, dtype=float).reshape(sys.m)
        r = float(np.linalg.norm(sys.rhs(x_star, u_star)))
        return cls(x_star, u_star, r)


@dataclass(frozen=True)
class ObservabilityGain:
    """Class-K gain ``gamma`` with observation window ``tau``."""

    gamma: Callable[[float], float]
    tau: float = math.pi
    name: str = "gamma"

    def __call__(self, s):
        return self.gamma(s)

    def is_monotone(self, s_max=10.0, samples=1000) -> bool:
        s = np.linspace(0.0, s_max, samples)
        vals = np.array([self.gamma(float(v)) for v in s])
        return vals[0] == 0.0 and bool(np.all(np.diff(vals) > 0))


# -- Sigma_ex ---------------------------------------------------------------

def _sigma_ex_f(x):
    out = np.empty(np.shape(x))
    out[..., 0] = x[..., 2] ** 3 - x[..., 1]
    out[..., 1] = x[..., 0]
    out[..., 2] = -x[..., 0]
    return out


_SIGMA_EX_G = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])


def _sigma_ex_g(x):
    return np.broadcast_to(_SIGMA_EX_G, np.shape(x)[:-1] + (3, 2))


def _sigma_ex_h(x):
    return np.stack([x[..., 0], x[..., 2] ** 3], axis=-1)


def _sigma_ex_H(x):
    return 0.5 * x[..., 0] ** 2 + 0.5 * x[..., 1] ** 2 + 0.25 * x[..., 2] ** 4


def _sigma_ex_gradH(x):
    return np.stack([x[..., 0], x[..., 1], x[..., 2] ** 3], axis=-1)


def gamma_ex(s):
    """Norm-observability gain of Sigma_ex: ``4 s + s^(1/3)``."""
    return 4.0 * s + np.cbrt(s)


def sigma_ex() -> tuple[ControlAffineSystem, StorageFunction, ObservabilityGain]:
    """Three-state, two-input passive example with its storage and gain."""
    storage = StorageFunction(_sigma_ex_H, _sigma_ex_gradH)
    sys = ControlAffineSystem(3, 2, _sigma_ex_f, _sigma_ex_g, _sigma_ex_h, "sigma_ex", storage,
                              input_matrix=_SIGMA_EX_G)
    return sys, storage, ObservabilityGain(gamma_ex, math.pi, "sigma_ex")


def gamma_bar_ex(s, x3_star):
    """Incremental observability gain ``4 s + 4 s^2 / (3 x3*^2)`` of Sigma_ex."""
    if x3_star == 0:
        raise DegenerateEquilibrium("incremental gain requires x3_star != 0")
    return 4.0 * s + 4.0 / (3.0 * x3_star**2) * s**2


def gamma_bar_ex_gain(x3_star: float) -> ObservabilityGain:
    if x3_star == 0:
        raise DegenerateEquilibrium("incremental gain requires x3_star != 0")
    return ObservabilityGain(lambda s: gamma_bar_ex(s, x3_star), math.pi,
                             f"sigma_ex_incremental:{x3_star:g}")


# -- linear systems ---------------------------------------------------------

def linear_system(A, B, C, P=None, name="linear") -> ControlAffineSystem:
    """``xdot = A x + B u``, ``y = C x``; optional storage ``x^T P x / 2``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n, m = B.shape
    if A.shape != (n, n) or C.shape != (m, n):
        raise ValueError("inconsistent shapes for A, B, C (outputs must match inputs)")
    storage = None
    if P is not None:
        P = np.asarray(P, dtype=float)
        storage = StorageFunction(
            lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, P, x),
            lambda x: x @ P.T,
        )
    return ControlAffineSystem(
        n, m,
        lambda x: x @ A.T,
        lambda x: np.broadcast_to(B, np.shape(x)[:-1] + B.shape),
        lambda x: x @ C.T,
        name,
        storage,
        input_matrix=B,
    )


# -- incremental coordinates ------------------------------------------------

def bregman_storage(storage: StorageFunction, x_star) -> StorageFunction:
    """Shifted storage ``H(x) - H(x*) - <grad H(x*), x - x*>`` in the original coordinates."""
    x_star = np.asarray(x_star, dtype=float)
    H0 = float(storage.H(x_star))
    g0 = np.asarray(storage.gradient(x_star), dtype=float)
    return StorageFunction(
        lambda x: storage.H(x) - H0 - (np.asarray(x) - x_star) @ g0,
        lambda x: storage.gradient(x) - g0,
    )


def incremental_system(sys: ControlAffineSystem, pair: SteadyStatePair,
                       ss_tol=SS_TOL) -> ControlAffineSystem:
    """System in coordinates ``xbar = x - x*`` with input ``ubar = u - u*``.

    Drift is ``f(xbar + x*) - f(x*) + (g(xbar + x*) - g(x*)) u*`` and output
    ``h(xbar + x*) - h(x*)``. A base storage, if present, is carried over
    as its Bregman shift expressed in the incremental coordinates.
    """
    if pair.residual > ss_tol:
        raise NotSteadyState(f"residual {pair.residual:.3g} exceeds {ss_tol:g}")
    xs, us = pair.x_star, pair.u_star
    f_s = sys.f(xs)
    g_s = sys.g(xs)
    h_s = sys.h(xs)

    def fbar(xb):
        x = xb + xs
        return sys.f(x) - f_s + np.einsum("...ij,j->...i", sys.g(x) - g_s, us)

    storage = None
    if sys.storage is not None:
        shifted = bregman_storage(sys.storage, xs)
        storage = StorageFunction(lambda xb: shifted.H(xb + xs), lambda xb: shifted.gradient(xb + xs))
    return ControlAffineSystem(
        sys.n, sys.m, fbar,
        lambda xb: sys.g(xb + xs),
        lambda xb: sys.h(xb + xs) - h_s,
        f"{sys.name}_incremental",
        storage,
        input_matrix=sys.input_matrix,
    )


# -- Gramian ----------------------------------------------------------------

def observability_gramian(A, C, tau: float, steps: int = 2048) -> np.ndarray:
    """``W = int_0^tau exp(A^T s) C^T C exp(A s) ds`` by composite Simpson quadrature."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if not tau > 0:
        raise ValueError("tau must be positive")
    n = A.shape[0]
    if n > 32:
        raise ValueError("Gramian limited to n <= 32")
    if steps % 2:
        steps += 1
    h = tau / steps
    E = expm(A * h)
    CtC = C.T @ C
    Phi = np.eye(n)
    W = np.zeros((n, n))
    for k in range(steps + 1):
        w = 1.0 if k in (0, steps) else (4.0 if k % 2 else 2.0)
        W += w * (Phi.T @ CtC @ Phi)
        Phi = Phi @ E
    W *= h / 3.0
    return 0.5 * (W + W.T)


# -- passivity audit --------------------------------------------------------

@dataclass(frozen=True)
class PassivityReport:
    drift_violation: float
    output_violation: float
    gradient_error: float
    samples: int
    worst_state: np.ndarray = field(repr=False)

    def passed(self, tol=1e-9, fd_tol=FD_TOL) -> bool:
        return (self.drift_violation <= tol and self.output_violation <= tol
                and self.gradient_error <= fd_tol)


def _fd_gradient(H, X, step=FD_STEP):
    n = X.shape[-1]
    G = np.empty_like(X)
    scale = step * np.maximum(1.0, np.abs(X))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        hi = scale[:, i:i + 1] * e
        G[:, i] = (H(X + hi) - H(X - hi)) / (2 * scale[:, i])
    return G


def passivity_audit(sys: ControlAffineSystem, storage: StorageFunction, sample_count: int,
                    box: float = 5.0, seed: int = 0) -> PassivityReport:
    """Sample Hill-Moylan conditions on ``[-box, box]^n``.

    Reports the largest positive ``<grad H, f>``, the largest entry of
    ``g^T grad H - h`` and the worst relative mismatch between the supplied
    gradient and central finite differences.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-box, box, size=(sample_count, sys.n))
    dH = storage.gradient(X)
    drift = np.einsum("ki,ki->k", dH, sys.f(X))
    out = np.abs(np.einsum("kij,ki->kj", sys.g(X), dH) - sys.h(X)).max(axis=1)
    fd = _fd_gradient(storage.H, X)
    grad_err = np.abs(fd - dH).max(axis=1) / np.maximum(1.0, np.abs(dH).max(axis=1))
    worst = int(np.argmax(np.maximum(drift, out)))
    return PassivityReport(
        float(max(0.0, drift.max())), float(out.max()), float(grad_err.max()), sample_count, X[worst]
    )


# -- registries -------------------------------------------------------------

def _sigma_ex_system():
    return sigma_ex()[0]


SYSTEMS: dict[str, Callable[[], ControlAffineSystem]] = {"sigma_ex": _sigma_ex_system}

GAINS: dict[str, Callable[..., ObservabilityGain]] = {
    "sigma_ex": lambda: sigma_ex()[2],
    "sigma_ex_incremental": lambda x3: gamma_bar_ex_gain(float(x3)),
    "identity": lambda: ObservabilityGain(lambda s: s, 1.0, "identity"),
}


def register_system(name: str, factory: Callable[[], ControlAffineSystem]):
    if name in SYSTEMS:
        raise KeyError(f"system {name!r} already registered")
    SYSTEMS[name] = factory


def get_system(key: str) -> ControlAffineSystem:
    """Look up a system by key.

    ``"sigma_ex"`` or any registered name; ``"linear:<json>"`` where the
    JSON (inline or a file path) holds matrices ``A``, ``B``, ``C`` and
    optionally ``P``.
    """
    if key.startswith("linear:"):
        arg = key[len("linear:"):]
        text = arg if arg.lstrip().startswith("{") else open(arg).read()
        d = json.loads(text)
        return linear_system(d["A"], d["B"], d["C"], d.get("P"))
    try:
        return SYSTEMS[key]()
    except KeyError:
        raise KeyError(f"unknown system {key!r}; known: {sorted(SYSTEMS)}") from None


def get_gain(key: str) -> ObservabilityGain:
    """``"sigma_ex"``, ``"identity"`` or ``"sigma_ex_incremental:<x3*>"``."""
    name, _, arg = key.partition(":")
    if name not in GAINS:
        raise KeyError(f"unknown gain {key!r}; known: {sorted(GAINS)}")
    return GAINS[name](arg) if arg else GAINS[name]()
