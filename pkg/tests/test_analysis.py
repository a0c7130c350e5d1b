import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from afc import records
from afc.analysis import (
    AeroSummary, TimeSeries, aero_summary, analyze_directory, compute_psd, deltas, dominant_strouhal,
    window_stats,
)
from afc.errors import InputError

BASE = AeroSummary.from_means(0.7642, 0.2095, 0.0334)
DRL = AeroSummary.from_means(1.3685, 0.0739, 0.0205)


def const(value, n=201, t_end=10.0):
    t = np.linspace(0, t_end, n)
    return TimeSeries(t, np.full(n, value))


def test_constant_window_stats():
    mean, rms = window_stats(const(0.7642), 2.0, 8.0)
    assert mean == pytest.approx(0.7642, abs=1e-15)
    assert rms == pytest.approx(0.0, abs=1e-15)


def test_sinusoid_window_stats():
    t = np.linspace(0, 5, 20001)
    mean, rms = window_stats(TimeSeries(t, np.sin(2 * np.pi * t)), 0.0, 5.0)
    assert abs(mean) < 1e-6
    assert rms == pytest.approx(1 / np.sqrt(2), abs=1e-6)


def test_irregular_sampling_agrees():
    rng = np.random.default_rng(7)
    tu = np.linspace(0, 6, 6001)
    ti = np.sort(np.concatenate([[0.0, 6.0], rng.uniform(0, 6, 6000)]))
    ti = np.unique(ti)
    f = lambda t: 0.3 + np.sin(2 * np.pi * 0.9 * t)
    a = window_stats(TimeSeries(tu, f(tu)), 1.0, 5.0)
    b = window_stats(TimeSeries(ti, f(ti)), 1.0, 5.0)
    assert np.allclose(a, b, rtol=0, atol=1e-4)


def test_empty_window():
    with pytest.raises(InputError):
        window_stats(const(1.0), 3.0, 3.0)
    with pytest.raises(InputError):
        window_stats(const(1.0), -5.0, 3.0)


def test_efficiency_fixtures():
    assert round(aero_summary(const(0.7642), const(0.2095)).E, 3) == 3.648
    assert round(aero_summary(const(1.3685), const(0.0739)).E, 2) == 18.52
    assert aero_summary(const(0.0), const(0.2)).E == 0.0


def test_misaligned_timestamps():
    with pytest.raises(InputError):
        aero_summary(const(1.0, 101), const(1.0, 201))


def test_table_deltas():
    d = deltas(DRL, BASE)
    assert d["C_l"] == pytest.approx(79, abs=1)
    assert d["C_d"] == pytest.approx(-65, abs=1)
    assert d["C_l_rms"] == pytest.approx(-39, abs=1)
    assert d["E"] == pytest.approx(408, abs=1)


def test_deltas_identity_and_doubling():
    assert all(v == 0 for v in deltas(BASE, BASE).values())
    double = AeroSummary.from_means(2 * BASE.C_l_mean, 2 * BASE.C_d_mean, 2 * BASE.C_l_rms)
    d = deltas(double, BASE)
    assert d["C_l"] == pytest.approx(100) and d["C_d"] == pytest.approx(100)
    assert d["C_l_rms"] == pytest.approx(100) and d["E"] == pytest.approx(0, abs=1e-12)


def test_deltas_zero_baseline():
    with pytest.raises(ZeroDivisionError):
        deltas(BASE, AeroSummary.from_means(0.0, 0.2, 0.1))


def sine(freq, n_periods=40, fs=50.0, amp=1.0):
    t = np.arange(int(n_periods / freq * fs)) / fs
    return TimeSeries(t, amp * np.sin(2 * np.pi * freq * t))


def test_psd_detects_st_090():
    st_, p = compute_psd(sine(0.90))
    peak, prom = dominant_strouhal(st_, p)
    assert abs(peak - 0.90) <= st_[1] - st_[0]
    assert prom > 100


def test_psd_constant_signal():
    st_, p = compute_psd(const(0.5, 2001, 100.0))
    assert p[0] > 0
    assert np.all(p[1:] < 1e-20 * p[0])


def test_psd_parseval():
    rng = np.random.default_rng(1)
    s = TimeSeries(np.arange(8192) * 0.01, rng.standard_normal(8192) + np.sin(np.arange(8192) * 0.3))
    st_, p = compute_psd(s)
    df = st_[1] - st_[0]
    assert np.sum(p) * df == pytest.approx(np.mean(s.values**2), rel=0.01)


def test_white_noise_has_no_dominant_tone():
    for seed in range(10):
        x = np.random.default_rng(seed).standard_normal(4096)
        st_, p = compute_psd(TimeSeries(np.arange(4096) * 0.05, x))
        assert dominant_strouhal(st_, p)[1] < 10


def test_two_tones_picks_stronger():
    t = np.arange(20000) * 0.02
    x = 2.0 * np.sin(2 * np.pi * 0.4 * t) + 1.0 * np.sin(2 * np.pi * 1.1 * t)
    st_, p = compute_psd(TimeSeries(t, x))
    assert abs(dominant_strouhal(st_, p)[0] - 0.4) <= st_[1] - st_[0]


def test_psd_too_short():
    with pytest.raises(InputError):
        compute_psd(TimeSeries(np.arange(10.0), np.zeros(10)))


def test_strouhal_scaling():
    st1, _ = compute_psd(sine(0.5))
    st2, _ = compute_psd(sine(0.5), length_scale=2.0, velocity=4.0)
    assert np.allclose(st2, st1 * 0.5)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 100.0), st.floats(-50.0, 50.0))
def test_scale_and_shift_invariance(s, shift):
    lift = sine(0.7, n_periods=20).shifted(0.0)
    lift = TimeSeries(lift.t, lift.values + 0.4)
    drag = TimeSeries(lift.t, 0.2 + 0.05 * lift.values**2)
    a = aero_summary(lift, drag)
    b = aero_summary(lift.scaled(s), drag.scaled(s))
    assert b.C_l_mean == pytest.approx(s * a.C_l_mean, rel=1e-9)
    assert b.C_l_rms == pytest.approx(s * a.C_l_rms, rel=1e-9)
    assert b.E == pytest.approx(a.E, rel=1e-9)
    c = aero_summary(lift.shifted(shift), drag.shifted(shift))
    assert c.C_l_mean == pytest.approx(a.C_l_mean, rel=1e-9)
    assert c.C_l_rms == pytest.approx(a.C_l_rms, rel=1e-7)
    st_a, p_a = compute_psd(lift)
    st_b, p_b = compute_psd(lift.scaled(s))
    assert np.allclose(p_b, s**2 * p_a, rtol=1e-9, atol=1e-12 * s**2 * p_a.max())
    assert dominant_strouhal(st_a, p_a)[0] == pytest.approx(dominant_strouhal(st_b, p_b)[0], rel=1e-12)


def test_efficiency_consistency():
    for s in (BASE, DRL, AeroSummary.from_means(-0.3, 1.2, 0.1)):
        assert s.E * s.C_d_mean == pytest.approx(s.C_l_mean, rel=1e-15)


@settings(max_examples=50)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=2, max_size=50))
def test_csv_roundtrip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    s = TimeSeries(np.arange(len(values), dtype=float) * 0.1, values)
    s.save(path, "C_l")
    back = TimeSeries.load(path)
    assert back.values.tobytes() == s.values.tobytes()
    assert back.t.tobytes() == s.t.tobytes()


def test_analyze_directory(tmp_path):
    t = np.arange(0, 60, 0.01)
    cl = 1.0 + 0.1 * np.sin(2 * np.pi * 0.9 * t)
    cd = np.full(t.size, 0.1)
    records.write_csv(tmp_path / "forces.csv", records.FORCES_HEADER, zip(t, cl, cd))
    ta = np.arange(0, 60, 0.1)
    records.write_csv(tmp_path / "actions.csv", records.ACTIONS_HEADER,
                      [(x, 0, -0.11 + 0.05 * np.sin(2 * np.pi * 0.9 * x)) for x in ta])
    (tmp_path / "baseline_stats.txt").write_text(
        "C_d_baseline = 0.2\nC_l_baseline = 0.5\nC_l_rms = 0.1\nwindow = 100\n")
    out = analyze_directory(tmp_path)
    assert out["window"][0] == pytest.approx(15.0)
    assert out["summary"]["C_l_mean"] == pytest.approx(1.0, abs=1e-3)
    assert out["lift_psd_peak"]["St"] == pytest.approx(0.9, abs=0.05)
    assert out["action_psd_peaks"]["0"]["St"] == pytest.approx(0.9, abs=0.05)
    assert out["action_psd_peaks"]["0"]["mean_U_jet"] == pytest.approx(-0.11, abs=2e-3)
    assert out["deltas_percent"]["C_d"] == pytest.approx(-50, abs=1e-6)
    assert json.loads((tmp_path / "summary.json").read_text()) == out
    psd = records.read_csv(tmp_path / "psd.csv")
    assert set(psd["signal"]) == {"C_l", "U_jet"}


def test_analyze_missing_forces(tmp_path):
    with pytest.raises(InputError):
        analyze_directory(tmp_path)


def test_refined_peak_between_bins():
    t = np.arange(5000) * 0.02
    st_, p = compute_psd(TimeSeries(t, np.sin(2 * np.pi * 0.1666 * t)))
    coarse, _ = dominant_strouhal(st_, p, refine=False)
    fine, _ = dominant_strouhal(st_, p)
    df = st_[1] - st_[0]
    assert abs(coarse - 0.1666) <= df
    assert abs(fine - 0.1666) < 0.05 * df
