"""Reference configurations for the two worked examples on Sigma_ex."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action_sets import ActionSet, planar_trine
from .controller import FeedbackLaw, incremental_law, unity_law
from .simulator import SimConfig
from .systems import (
    ControlAffineSystem,
    ObservabilityGain,
    StorageFunction,
    bregman_storage,
    gamma_bar_ex_gain,
    sigma_ex,
)

EXAMPLE1_X0 = np.array([2.0, 2.0, 1.5])
EXAMPLE2_X0 = np.array([1.0, 1.0, 0.5])


@dataclass
class Preset:
    name: str
    system: ControlAffineSystem
    law: FeedbackLaw
    storage: StorageFunction
    gain: ObservabilityGain
    epsilon: float
    center: np.ndarray
    tail_action: np.ndarray
    x0: np.ndarray
    config: SimConfig

    @property
    def action_set(self) -> ActionSet:
        return self.law.action_set


def example1(dt: float = 1e-3, t_final: float = 150.0, record_stride: int = 10,
             hysteresis: float = 0.0) -> Preset:
    """Trine with ``theta = 0``, ``alpha = 0.1`` and unity feedback; ``epsilon = 1``."""
    sys, storage, gain = sigma_ex()
    U = planar_trine(0.0, 0.1)
    return Preset("reproduce-example1", sys, unity_law(U, hysteresis), storage, gain, 1.0,
                  np.zeros(3), np.zeros(2), EXAMPLE1_X0.copy(),
                  SimConfig(dt=dt, t_final=t_final, record_stride=record_stride))


def example2(dt: float = 1e-3, t_final: float = 100.0, record_stride: int = 10,
             hysteresis: float = 0.0) -> Preset:
    """Trine shifted by ``u* = (1, 0)`` regulating to ``x* = (0, 0, -1)``; ``epsilon = 0.5``."""
    sys, storage, _ = sigma_ex()
    x_star = np.array([0.0, 0.0, -1.0])
    u_star = np.array([1.0, 0.0])
    U = planar_trine(0.0, 0.1).translated(u_star)
    law = incremental_law(U, u_star, sys.h(x_star), hysteresis=hysteresis)
    return Preset("reproduce-example2", sys, law, bregman_storage(storage, x_star),
                  gamma_bar_ex_gain(x_star[2]), 0.5, x_star, u_star, EXAMPLE2_X0.copy(),
                  SimConfig(dt=dt, t_final=t_final, record_stride=record_stride))


PRESETS = {"reproduce-example1": example1, "reproduce-example2": example2}
