from __future__ import annotations

import numpy as np
import pytest

from mesosettle.loop import LoopParams, deterministic_settling_time, phase_step, steps_to_lock


def params(delta=np.pi / 100, period=1e-9, activity=1.0):
    return LoopParams(k_cp=1.0, k_vc=delta, cap=1.0, period_s=period, activity=activity)


def test_phase_step():
    p = LoopParams(k_cp=2e-6, k_vc=5e4, cap=10e-12, period_s=4e-9)
    assert phase_step(p) == pytest.approx(2e-6 * 5e4 / 10e-12)


def test_steps_below_pi_goes_direct():
    assert steps_to_lock(np.pi / 2, params()) == 50


def test_steps_above_pi_unwinds_through_two_pi():
    assert steps_to_lock(3 * np.pi / 2, params()) == 50


def test_steps_at_pi():
    assert steps_to_lock(np.pi, params()) == 100


def test_fractional_distance_rounds_up():
    # distance 1.35 steps must take 2 full steps
    assert steps_to_lock(1.35 * np.pi / 100, params()) == 2


def test_out_of_range_rejected():
    with pytest.raises(ValueError):
        steps_to_lock(-0.1, params())
    with pytest.raises(ValueError):
        steps_to_lock(2 * np.pi, params())


def test_settling_time_scales_with_activity():
    full = deterministic_settling_time(np.pi / 2, params(activity=1.0))
    half = deterministic_settling_time(np.pi / 2, params(activity=0.5))
    assert half == pytest.approx(2 * full)
    assert full == pytest.approx(50 * 1e-9)


def test_param_validation():
    with pytest.raises(ValueError):
        LoopParams(k_cp=0, k_vc=1, cap=1, period_s=1)
    with pytest.raises(ValueError):
        LoopParams(k_cp=1, k_vc=1, cap=1, period_s=1, activity=0)
    with pytest.raises(ValueError):
        LoopParams(k_cp=1, k_vc=1, cap=1, period_s=1, activity=1.5)
