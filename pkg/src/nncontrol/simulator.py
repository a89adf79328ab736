"""Sample-and-hold simulation of nearest-neighbour closed loops.

The discontinuous law is evaluated at the start of each hold window and the
resulting action is kept constant while a classic RK4 step advances
``xdot = f(x) + g(x) u``. Several initial conditions are integrated together
as one batch; each row keeps its own held action.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .controller import FeedbackLaw
from .exceptions import NonFiniteState
from .systems import ControlAffineSystem, StorageFunction


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    hold_steps: int = 1
    t_final: float = 50.0
    record_stride: int = 1
    blowup: float = 1e9

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if self.hold_steps < 1 or self.record_stride < 1:
            raise ValueError("hold_steps and record_stride must be >= 1")

    def step_sizes(self) -> np.ndarray:
        n = math.ceil(self.t_final / self.dt - 1e-9)
        h = np.full(n, self.dt)
        h[-1] = self.t_final - self.dt * (n - 1)
        return h


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray
    actions: np.ndarray
    storage: np.ndarray | None = None

    def __len__(self):
        return len(self.times)

    def to_csv(self, fh=None) -> str | None:
        """Write ``t,x1..xn,y1..ym,u1..um[,H]`` rows; returns text when ``fh`` is None."""
        n, m = self.states.shape[1], self.outputs.shape[1]
        header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(m)]
                  + [f"u{i + 1}" for i in range(m)])
        cols = [self.times[:, None], self.states, self.outputs, self.actions]
        if self.storage is not None:
            header.append("H")
            cols.append(self.storage[:, None])
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for row in np.hstack(cols):
            w.writerow([repr(float(v)) for v in row])
        return out.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, fh) -> "Trajectory":
        rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float)
        n = sum(h.startswith("x") for h in header)
        m = sum(h.startswith("y") for h in header)
        storage = data[:, -1] if header[-1] == "H" else None
        return cls(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:1 + n + m],
                   data[:, 1 + n + m:1 + n + 2 * m], storage)


@dataclass(frozen=True)
class ConvergenceReport:
    epsilon: float
    center: np.ndarray = field(repr=False)
    entry_time: float | None = None
    post_entry_sup: float | None = None
    tail_action_constant: bool | None = None
    h_max_increase: float = 0.0
    settle_time: float | None = None
    tail_after_entry: bool | None = None
    error: str | None = None
    error_time: float | None = None

    @property
    def converged(self) -> bool:
        return self.error is None and self.entry_time is not None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "center": [float(v) for v in self.center],
            "entry_time": self.entry_time,
            "post_entry_sup": self.post_entry_sup,
            "tail_action_constant": self.tail_action_constant,
            "settle_time": self.settle_time,
            "tail_after_entry": self.tail_after_entry,
            "h_max_increase": self.h_max_increase,
            "error": self.error,
            "error_time": self.error_time,
        }


def _rk4(sys: ControlAffineSystem, X, U, h):
    if sys.input_matrix is not None:
        gu = U @ sys.input_matrix.T
        f = sys.f
        k1 = f(X) + gu
        k2 = f(X + 0.5 * h * k1) + gu
        k3 = f(X + 0.5 * h * k2) + gu
        k4 = f(X + h * k3) + gu
    else:
        k1 = sys.rhs(X, U)
        k2 = sys.rhs(X + 0.5 * h * k1, U)
        k3 = sys.rhs(X + 0.5 * h * k2, U)
        k4 = sys.rhs(X + h * k3, U)
    return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def simulate_batch(sys: ControlAffineSystem, flaw: FeedbackLaw, X0, cfg: SimConfig,
                   storage: StorageFunction | None = None) -> list:
    """Integrate every row of ``X0`` under ``flaw``.

    Returns one entry per row: a :class:`Trajectory`, or the
    :class:`NonFiniteState` raised for that row. Rows that blow up are
    frozen and do not disturb the others.
    """
    X = np.array(X0, dtype=float, ndmin=2)
    if X.shape[1] != sys.n:
        raise ValueError(f"initial states must have {sys.n} coordinates")
    if flaw.action_set.dim != sys.m:
        raise ValueError("action dimension does not match system input dimension")
    if not np.all(np.isfinite(X)):
        raise ValueError("initial conditions must be finite")
    storage = storage if storage is not None else sys.storage
    B = len(X)
    actions = flaw.action_set.actions
    steps = cfg.step_sizes()
    N = len(steps)
    rec = [k for k in range(0, N, cfg.record_stride)]
    if rec[-1] != N:
        rec.append(N)
    R = len(rec)
    times = np.empty(R)
    Xs = np.empty((R, B, sys.n))
    Us = np.empty((R, B, sys.m))

    alive = np.ones(B, dtype=bool)
    blown = np.full(B, np.nan)
    held = np.full(B, -1, dtype=int)
    t = 0.0
    r = 0
    for k in range(N + 1):
        if k % cfg.hold_steps == 0 and k < N:
            idx = np.flatnonzero(alive)
            if len(idx) == B:
                held = flaw.select(sys.h(X), held)
            elif len(idx):
                held[idx] = flaw.select(sys.h(X[idx]), held[idx])
        if r < R and rec[r] == k:
            times[r] = t
            Xs[r] = X
            Us[r] = actions[held]
            r += 1
        if k == N:
            break
        h = steps[k]
        if alive.all():
            Xn = _rk4(sys, X, actions[held], h)
        else:
            Xn = X.copy()
            idx = np.flatnonzero(alive)
            if len(idx):
                Xn[idx] = _rk4(sys, X[idx], actions[held[idx]], h)
        t = (k + 1) * cfg.dt if k < N - 1 else cfg.t_final
        # NaN compares False, so one comparison covers inf, nan and the size guard.
        if not np.abs(Xn).max() <= cfg.blowup:
            with np.errstate(invalid="ignore"):
                bad = alive & ~(np.abs(Xn).max(axis=1) <= cfg.blowup)
            if bad.any():
                Xn[bad] = X[bad]
                blown[bad] = t
                alive &= ~bad
        X = Xn

    Ys = sys.h(Xs)
    Hs = storage.H(Xs) if storage is not None else None
    out = []
    for b in range(B):
        if not np.isnan(blown[b]):
            out.append(NonFiniteState(float(blown[b])))
            continue
        out.append(Trajectory(times.copy(), Xs[:, b], Ys[:, b], Us[:, b],
                              None if Hs is None else Hs[:, b]))
    return out


def simulate(sys: ControlAffineSystem, flaw: FeedbackLaw, x0, cfg: SimConfig,
             storage: StorageFunction | None = None) -> Trajectory:
    """Closed-loop trajectory from one initial state.

    Raises
    ------
    NonFiniteState
        If the state leaves the blow-up guard; ``exc.time`` is when.
    """
    (res,) = simulate_batch(sys, flaw.fresh(), np.asarray(x0, dtype=float)[None], cfg, storage)
    if isinstance(res, NonFiniteState):
        raise res
    return res


def convergence_metrics(traj: Trajectory, epsilon: float, center, tail_action,
                        tail_window: float | None = None, action_tol: float = 1e-12) -> ConvergenceReport:
    """Entry into ``B_epsilon(center)``, settling of the applied action and storage drift.

    ``entry_time`` is the first recorded time from which every later sample
    stays within ``epsilon`` of ``center``. ``settle_time`` is the first time
    from which the applied action equals ``tail_action`` through the end;
    ``tail_action_constant`` requires that final constant stretch to last at
    least ``tail_window`` (default: a tenth of the horizon).
    ``tail_after_entry`` is the stricter check that the action already equals
    ``tail_action`` at every sample after entry.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    center = np.asarray(center, dtype=float)
    tail_action = np.asarray(tail_action, dtype=float)
    t = traj.times
    dist = np.linalg.norm(traj.states - center, axis=1)
    outside = np.flatnonzero(dist > epsilon)
    entry_idx = None
    if len(outside) == 0:
        entry_idx = 0
    elif outside[-1] < len(t) - 1:
        entry_idx = outside[-1] + 1

    same = np.all(np.abs(traj.actions - tail_action) <= action_tol * max(1.0, np.abs(tail_action).max()),
                  axis=1)
    differ = np.flatnonzero(~same)
    settle_idx = None
    if len(differ) == 0:
        settle_idx = 0
    elif differ[-1] < len(t) - 1:
        settle_idx = differ[-1] + 1
    if tail_window is None:
        tail_window = 0.1 * (t[-1] - t[0])
    settle_time = None if settle_idx is None else float(t[settle_idx])
    tail_ok = bool(settle_time is not None and t[-1] - settle_time >= tail_window)

    h_inc = 0.0
    if traj.storage is not None and len(traj.storage) > 1:
        h_inc = float(max(0.0, np.max(np.diff(traj.storage))))

    if entry_idx is None:
        return ConvergenceReport(float(epsilon), center, None, None, tail_ok, h_inc, settle_time, None)
    return ConvergenceReport(
        float(epsilon), center, float(t[entry_idx]), float(dist[entry_idx:].max()), tail_ok, h_inc,
        settle_time, bool(same[entry_idx:].all()),
    )


def batch_sweep(sys: ControlAffineSystem, flaw_template: FeedbackLaw, initial_conditions, cfg: SimConfig,
                epsilon: float, center, tail_action, storage: StorageFunction | None = None,
                tail_window: float | None = None) -> list[ConvergenceReport]:
    """Convergence reports for many initial states, in input order.

    Each run has its own hysteresis state. A run that blows up yields a
    report with ``error`` set instead of aborting the sweep.
    """
    X0 = np.asarray(initial_conditions, dtype=float)
    if X0.size == 0:
        return []
    center = np.asarray(center, dtype=float)
    results = simulate_batch(sys, flaw_template.fresh(), X0.reshape(-1, sys.n), cfg, storage)
    reports = []
    for res in results:
        if isinstance(res, NonFiniteState):
            reports.append(ConvergenceReport(float(epsilon), center, error=str(res), error_time=res.time))
        else:
            reports.append(convergence_metrics(res, epsilon, center, tail_action, tail_window))
    return reports
