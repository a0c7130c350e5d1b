"""Post-processing of force, action and reward records.

Windowed statistics use the trapezoidal rule in time, so irregularly
sampled records give the same answers as uniformly sampled ones. Spectra
are Welch estimates (Hann window, one-sided density) with frequencies
expressed as Strouhal numbers.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from afc import records
from afc.errors import InputError


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if t.shape != values.shape or t.ndim != 1:
            raise InputError(f"timestamps {t.shape} and values {values.shape} must be equal-length 1D")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise InputError("timestamps must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.t.size

    def scaled(self, s):
        return TimeSeries(self.t, self.values * s)

    def shifted(self, dt):
        return TimeSeries(self.t + dt, self.values)

    def save(self, path, name="value"):
        records.write_csv(path, ("t", name), zip(self.t, self.values))

    @classmethod
    def load(cls, path, column=None):
        data = records.read_csv(path)
        if column is None:
            column = [k for k in data if k != "t"][0]
        return cls(data["t"], data[column])


def _window(series: TimeSeries, t_start, t_end):
    t, x = series.t, series.values
    if t.size < 2 or not t_end > t_start:
        raise InputError(f"empty window [{t_start}, {t_end}]")
    tol = 1e-9 * max(1.0, abs(t[-1]))
    if t_start < t[0] - tol or t_end > t[-1] + tol:
        raise InputError(f"window [{t_start}, {t_end}] outside record [{t[0]}, {t[-1]}]")
    t_start, t_end = max(t_start, t[0]), min(t_end, t[-1])
    inner = (t > t_start) & (t < t_end)
    tw = np.concatenate(([t_start], t[inner], [t_end]))
    xw = np.interp(tw, t, x)
    return tw, xw


def window_stats(series: TimeSeries, t_start, t_end):
    """Time-weighted mean and rms about the mean over ``[t_start, t_end]``."""
    tw, xw = _window(series, t_start, t_end)
    span = tw[-1] - tw[0]
    mean = np.trapezoid(xw, tw) / span
    var = np.trapezoid((xw - mean) ** 2, tw) / span
    return float(mean), float(np.sqrt(max(var, 0.0)))


@dataclass(frozen=True)
class AeroSummary:
    C_l_mean: float
    C_d_mean: float
    C_l_rms: float
    E: float

    @classmethod
    def from_means(cls, C_l_mean, C_d_mean, C_l_rms):
        E = C_l_mean / C_d_mean if C_d_mean != 0 else float("nan")
        return cls(float(C_l_mean), float(C_d_mean), float(C_l_rms), float(E))


def aero_summary(lift: TimeSeries, drag: TimeSeries, window=None) -> AeroSummary:
    """Mean lift, mean drag, lift rms and efficiency over ``window`` (default: whole record)."""
    if lift.t.shape != drag.t.shape or not np.allclose(lift.t, drag.t, rtol=0, atol=1e-12):
        raise InputError("lift and drag records have different timestamps")
    if window is None:
        window = (lift.t[0], lift.t[-1])
    cl, cl_rms = window_stats(lift, *window)
    cd, _ = window_stats(drag, *window)
    return AeroSummary.from_means(cl, cd, cl_rms)


def deltas(controlled: AeroSummary, baseline: AeroSummary):
    """Percentage change of every summary field relative to the baseline."""
    out = {}
    for key, name in (("C_l_mean", "C_l"), ("C_d_mean", "C_d"), ("C_l_rms", "C_l_rms"), ("E", "E")):
        b = getattr(baseline, key)
        if b == 0:
            raise ZeroDivisionError(f"baseline {name} is zero; percentage change undefined")
        out[name] = 100.0 * (getattr(controlled, key) - b) / b
    return out


def resample_uniform(series: TimeSeries):
    """Linear interpolation onto a uniform grid at the median sampling interval."""
    dt = np.diff(series.t)
    h = float(np.median(dt))
    if np.allclose(dt, h, rtol=1e-6, atol=0):
        return series, h
    n = int(np.floor((series.t[-1] - series.t[0]) / h)) + 1
    t = series.t[0] + h * np.arange(n)
    return TimeSeries(t, np.interp(t, series.t, series.values)), h


def compute_psd(series: TimeSeries, segment_length=None, overlap=0.5, length_scale=1.0, velocity=1.0):
    """Welch power spectral density of ``series``.

    ``segment_length`` is in samples; by default the record is split into 8
    half-overlapping segments. The segment-wise mean is removed before the
    transform and returned as a line in the zero bin, so the bins integrate
    to the signal's mean square.

    Returns ``(strouhal, power)``.
    """
    series, h = resample_uniform(series)
    n = len(series)
    if segment_length is None:
        segment_length = int(n / (1 + 7 * (1 - overlap)))
    segment_length = int(segment_length)
    if segment_length < 4 or segment_length > n:
        raise InputError(f"series of {n} samples is shorter than one segment of {segment_length}")
    noverlap = int(round(overlap * segment_length))
    freq, power = signal.welch(
        series.values, fs=1.0 / h, window="hann", nperseg=segment_length,
        noverlap=noverlap, detrend="constant", scaling="density", return_onesided=True,
    )
    df = freq[1] - freq[0]
    power = power.copy()
    power[0] += series.values.mean() ** 2 / df
    return freq * length_scale / velocity, power


def dominant_strouhal(strouhal, power, exclude_dc=True, refine=True):
    """Peak Strouhal number and its prominence (peak power over median power).

    With ``refine`` the peak is located between bins by fitting a parabola
    to the log power of the peak bin and its two neighbours, which is exact
    for the Gaussian-like main lobe of a Hann window.
    """
    strouhal = np.asarray(strouhal)
    power = np.asarray(power)
    start = 1 if exclude_dc else 0
    k = start + int(np.argmax(power[start:]))
    median = float(np.median(power[start:]))
    prominence = float(power[k] / median) if median > 0 else float("inf")
    peak = float(strouhal[k])
    if refine and start < k < len(power) - 1 and np.all(power[k - 1:k + 2] > 0):
        a, b, c = np.log(power[k - 1:k + 2])
        denom = a - 2 * b + c
        if denom < 0:
            peak += 0.5 * (a - c) / denom * (strouhal[k + 1] - strouhal[k])
    return peak, prominence


# -- command-level driver --------------------------------------------------------

def analyze_directory(directory, transient=15.0, baseline_stats=None, out_dir=None):
    """Summarise ``forces.csv`` (and ``actions.csv`` if present) in ``directory``.

    Writes ``summary.json`` and ``psd.csv`` and returns the summary dict.
    """
    directory = Path(directory)
    out_dir = Path(out_dir) if out_dir is not None else directory
    out_dir.mkdir(parents=True, exist_ok=True)
    forces_path = directory / "forces.csv"
    if not forces_path.exists():
        raise InputError(f"{forces_path} not found")
    f = records.read_csv(forces_path)
    lift, drag = TimeSeries(f["t"], f["C_l"]), TimeSeries(f["t"], f["C_d"])
    t0 = lift.t[0] + transient
    if t0 >= lift.t[-1]:
        t0 = lift.t[0]
    summary = aero_summary(lift, drag, (t0, lift.t[-1]))
    out = {"window": [float(t0), float(lift.t[-1])], "summary": asdict(summary)}

    psd_rows = []
    m = lift.t >= t0
    st, p = compute_psd(TimeSeries(lift.t[m], lift.values[m]))
    peak, prom = dominant_strouhal(st, p)
    out["lift_psd_peak"] = {"St": peak, "prominence": prom}
    psd_rows += [("C_l", -1, s, q) for s, q in zip(st, p)]

    actions_path = directory / "actions.csv"
    if actions_path.exists():
        a = records.read_csv(actions_path)
        peaks = {}
        for marl_id in np.unique(a["marl_id"]).astype(int):
            sel = (a["marl_id"] == marl_id) & (a["t"] >= t0)
            if sel.sum() < 8:
                continue
            ts = TimeSeries(a["t"][sel], a["U_jet"][sel])
            st, p = compute_psd(ts)
            pk, pr = dominant_strouhal(st, p)
            peaks[str(marl_id)] = {"St": pk, "prominence": pr, "mean_U_jet": window_stats(ts, ts.t[0], ts.t[-1])[0]}
            psd_rows += [("U_jet", marl_id, s, q) for s, q in zip(st, p)]
        out["action_psd_peaks"] = peaks

    if baseline_stats is None and (directory / "baseline_stats.txt").exists():
        from afc.reward import BaselineStats
        baseline_stats = BaselineStats.load(directory / "baseline_stats.txt")
    if baseline_stats is not None:
        base = AeroSummary.from_means(
            baseline_stats.C_l_baseline, baseline_stats.C_d_baseline, baseline_stats.C_l_rms
        )
        out["baseline"] = asdict(base)
        try:
            out["deltas_percent"] = deltas(summary, base)
        except ZeroDivisionError as exc:
            out["deltas_percent"] = None
            out["deltas_error"] = str(exc)

    records.write_csv(out_dir / "psd.csv", ("signal", "marl_id", "St", "power"), psd_rows)
    with (out_dir / "summary.json").open("w") as fh:
        json.dump(out, fh, indent=2)
    return out
