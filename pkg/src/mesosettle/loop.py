"""Deterministic settling of the hard-switching retiming loop.

Outside the jitter-closed region every cycle produces an update of fixed
size in a fixed direction, so lock time is a ratio, not a random
variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LoopParams", "phase_step", "steps_to_lock", "deterministic_settling_time"]


@dataclass(frozen=True)
class LoopParams:
    """Charge-pump current gain, VCDL gain, loop capacitance, clock period.

    activity is the fraction of cycles that carry a data transition and
    hence an update (1.0 for a clock-like pattern).
    """

    k_cp: float
    k_vc: float
    cap: float
    period_s: float
    activity: float = 1.0

    def __post_init__(self):
        if min(self.k_cp, self.k_vc, self.cap, self.period_s) <= 0:
            raise ValueError("gains, capacitance and period must be positive")
        if not 0 < self.activity <= 1:
            raise ValueError("activity must lie in (0, 1]")


def phase_step(params: LoopParams) -> float:
    """Per-update phase move delta_phi = K_CP K_VC / C, in radians."""
    return params.k_cp * params.k_vc / params.cap


def steps_to_lock(initial_phase_error: float, params: LoopParams) -> int:
    """Updates needed to close a phase error, taking the shorter way round.

    The loop always corrects toward the nearer lock point: errors above
    pi unwind through 2 pi.  At exactly pi either direction costs the
    same.
    """
    if not 0 <= initial_phase_error < 2 * np.pi:
        raise ValueError("initial phase error must lie in [0, 2 pi)")
    delta = phase_step(params)
    distance = min(initial_phase_error, 2 * np.pi - initial_phase_error)
    return int(np.ceil(distance / delta - 1e-12))


def deterministic_settling_time(initial_phase_error: float, params: LoopParams) -> float:
    """Settling time in seconds: updates / activity, one update per cycle."""
    m = steps_to_lock(initial_phase_error, params)
    return m * params.period_s / params.activity
