from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from afc import records
from afc.errors import ConfigError, InputError
from afc.reward import (
    BaselineStats, RewardConfig, RunningLiftMean, estimate_baseline, global_reward, global_rewards,
    local_reward, update_running_lift_mean,
)

DATA = Path(__file__).parent / "data"
FINE = RewardConfig(alpha=0.3, beta=0.5, C_d_baseline=0.2095, C_l_baseline=0.7642)


def test_baseline_inputs_give_zero():
    assert local_reward(0.2095, 0.7642, 0.7642, FINE) == 0.0


def test_table_fixture():
    r = local_reward(0.0739, 1.3685, 1.3685, FINE)
    assert r == pytest.approx(0.1356 + 0.30215, abs=1e-12)
    assert r == pytest.approx(0.43775, abs=1e-12)


def test_pure_drag_term():
    cfg = RewardConfig(alpha=0.0, beta=0.0, C_d_baseline=1.3)
    assert local_reward(2.3, 0.4, 0.1, cfg) == pytest.approx(-1.0, abs=1e-15)


def test_lift_fluctuation_penalty_sign():
    cfg = RewardConfig(alpha=0.3, beta=0.0)
    assert local_reward(0.0, 0.5, 0.0, cfg) == pytest.approx(-0.15)
    assert local_reward(0.0, -0.5, 0.0, cfg) == pytest.approx(-0.15)


def test_global_blend_fixture():
    assert global_reward([1.0, 2.0, 3.0], 0, 0.8) == pytest.approx(1.2, abs=1e-12)


def test_global_limits():
    r = np.array([0.3, -1.0, 2.5, 0.1])
    assert np.array_equal(global_rewards(r, 1.0), r)
    assert np.allclose(global_rewards(r, 0.0), r.mean(), rtol=0, atol=1e-15)


def test_global_reward_bad_index():
    with pytest.raises(InputError):
        global_reward([1.0, 2.0], 2, 0.8)


def test_gamma_range():
    with pytest.raises(ConfigError):
        RewardConfig(gamma=1.5)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=12), st.floats(0, 1))
def test_global_rewards_preserve_mean(r, gamma):
    assert np.mean(global_rewards(r, gamma)) == pytest.approx(np.mean(r), abs=1e-9)


def test_running_mean_examples():
    s = update_running_lift_mean(RunningLiftMean(), 1.0)
    assert s.mean == 1.0
    s = RunningLiftMean()
    for x in (1.0, 2.0, 3.0):
        s = update_running_lift_mean(s, x)
    assert s.mean == 2.0 and s.count == 3


def test_running_mean_no_drift():
    s = RunningLiftMean()
    for _ in range(10**6):
        s = update_running_lift_mean(s, 0.7642)
    assert abs(s.mean - 0.7642) < 1e-12


def test_estimate_constant_record():
    t = np.linspace(0, 10, 101)
    stats = estimate_baseline(t, np.full(101, 0.5), np.full(101, 0.2), 5.0)
    assert stats.C_d_baseline == pytest.approx(0.2, abs=1e-15)
    assert stats.C_l_baseline == pytest.approx(0.5, abs=1e-15)
    assert stats.C_l_rms == pytest.approx(0.0, abs=1e-15)


def test_estimate_sinusoid():
    A, n = 0.8, 4000
    t = np.arange(n) * (10.0 / n)  # 10 whole periods, endpoint excluded
    stats = estimate_baseline(t, A * np.sin(2 * np.pi * t), np.ones(n), t[-1] - t[0])
    assert abs(stats.C_l_baseline) < 1e-12
    assert stats.C_l_rms == pytest.approx(A / np.sqrt(2), rel=1e-12)


def test_estimate_window_too_long():
    with pytest.raises(InputError):
        estimate_baseline([0.0, 1.0, 2.0], [0, 0, 0], [0, 0, 0], 5.0)


def test_stored_baseline_regression():
    rec = records.read_csv(DATA / "baseline_record.csv")
    stored = BaselineStats.load(DATA / "baseline_stats.txt")
    stats = estimate_baseline(rec["t"], rec["C_l"], rec["C_d"], stored.window)
    assert stats == stored


def test_stats_text_roundtrip(tmp_path):
    s = BaselineStats(1.3312345678901234, -1e-17, 0.2, 100.0)
    s.save(tmp_path / "b.txt")
    assert BaselineStats.load(tmp_path / "b.txt") == s
    with pytest.raises(InputError):
        BaselineStats.from_text("C_d_baseline = 1\n")
