"""Local and blended rewards for drag reduction with lift enhancement."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from afc.errors import ConfigError, InputError


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.3
    beta: float = 0.5
    gamma: float = 0.8
    C_d_baseline: float = 0.0
    C_l_baseline: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma}")


def local_reward(C_d, C_l, C_l_avg, cfg: RewardConfig):
    """Drag reduction minus lift-fluctuation penalty plus lift gain, all versus baseline."""
    return (
        (cfg.C_d_baseline - C_d)
        - cfg.alpha * abs(C_l - C_l_avg)
        + cfg.beta * (C_l - cfg.C_l_baseline)
    )


def global_reward(local_rewards, i, gamma):
    """Blend pseudo-environment ``i``'s own reward with the mean over all of them."""
    r = np.asarray(local_rewards, dtype=float)
    n = r.size
    if n < 1:
        raise InputError("need at least one local reward")
    if not 0 <= i < n:
        raise InputError(f"index {i} out of range for {n} rewards")
    return gamma * r[i] + (1.0 - gamma) / n * r.sum()


def global_rewards(local_rewards, gamma):
    r = np.asarray(local_rewards, dtype=float)
    return np.array([global_reward(r, i, gamma) for i in range(r.size)])


@dataclass(frozen=True)
class RunningLiftMean:
    count: int = 0
    mean: float = 0.0


def update_running_lift_mean(state: RunningLiftMean, sample) -> RunningLiftMean:
    count = state.count + 1
    # incremental form keeps a constant stream exactly constant
    return RunningLiftMean(count, state.mean + (float(sample) - state.mean) / count)


@dataclass(frozen=True)
class BaselineStats:
    C_d_baseline: float
    C_l_baseline: float
    C_l_rms: float
    window: float

    def to_text(self):
        return "".join(
            f"{k} = {getattr(self, k)!r}\n"
            for k in ("C_d_baseline", "C_l_baseline", "C_l_rms", "window")
        )

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = float(val)
        try:
            return cls(**{k: values[k] for k in ("C_d_baseline", "C_l_baseline", "C_l_rms", "window")})
        except KeyError as exc:
            raise InputError(f"baseline stats missing key {exc}") from None

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def estimate_baseline(t, C_l, C_d, window) -> BaselineStats:
    """Mean drag, mean lift and lift rms over the last ``window`` time units of a record.

    Samples are weighted equally; callers drop the start-up transient
    beforehand.
    """
    t = np.asarray(t, dtype=float)
    C_l = np.asarray(C_l, dtype=float)
    C_d = np.asarray(C_d, dtype=float)
    if t.size == 0 or t[-1] - t[0] < window * (1 - 1e-12):
        duration = 0.0 if t.size == 0 else t[-1] - t[0]
        raise InputError(f"record spans {duration} time units, shorter than window {window}")
    mask = t >= t[-1] - window * (1 + 1e-12)
    cl = C_l[mask]
    cl_mean = cl.mean()
    return BaselineStats(
        C_d_baseline=float(C_d[mask].mean()),
        C_l_baseline=float(cl_mean),
        C_l_rms=float(np.sqrt(np.mean((cl - cl_mean) ** 2))),
        window=float(window),
    )
