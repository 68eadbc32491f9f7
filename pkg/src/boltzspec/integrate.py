"""Dormand-Prince 5(4) time stepping with dense output.

The fifth-order solution is propagated, the embedded fourth-order one only
sizes the steps.  Output at requested times comes from the pair's free
fourth-order continuous extension, so sampling never shortens a step.

A ``monitor`` callback may stop integration after any accepted step; the
form switch of the non-equilibrium solver is built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class IntegrationError(RuntimeError):
    pass


class StepUnderflow(IntegrationError):
    pass


class RhsFailure(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-13
    abs_tol: float = 1e-13
    max_step: float = math.inf
    initial_step: float | None = None
    max_steps: int = 1_000_000
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 5.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0

    def merge(self, other: "StepStats") -> "StepStats":
        return StepStats(self.accepted + other.accepted, self.rejected + other.rejected,
                         self.evaluations + other.evaluations)


@dataclass
class Solution:
    times: np.ndarray
    states: np.ndarray  # (n_times, n_state)
    t_end: float
    y_end: np.ndarray
    stats: StepStats = field(default_factory=StepStats)
    stopped: bool = False


# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# fifth minus fourth order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension
D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])


def _error_norm(err, y0, y1, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return math.sqrt(np.mean((err / scale) ** 2))


def _initial_step(rhs, t0, y0, f0, direction, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = math.sqrt(np.mean((y0 / scale) ** 2))
    d1 = math.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = math.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _dense(y0, y1, h, K, theta):
    r2 = y1 - y0
    r3 = h * K[0] - r2
    r4 = r2 - h * K[6] - r3
    r5 = h * (D @ K)
    th = theta[:, None]
    return y0 + th * (r2 + (1 - th) * (r3 + th * (r4 + (1 - th) * r5)))


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t_span: tuple[float, float],
    cfg: IntegratorConfig = IntegratorConfig(),
    sample_times=None,
    monitor: Callable[[float, np.ndarray], bool] | None = None,
) -> Solution:
    """Integrate y' = rhs(t, y) over ``t_span``.

    ``sample_times`` (inside ``t_span``) are filled from dense output.  When
    ``monitor(t, y)`` returns True after an accepted step, integration stops
    there and the solution is marked ``stopped``.
    """
    t0, t1 = map(float, t_span)
    y = np.array(y0, dtype=float)
    samples = np.array([] if sample_times is None else sample_times, dtype=float)
    out = np.empty((len(samples), y.size))
    filled = 0
    stats = StepStats()

    def f(t, yy):
        val = np.asarray(rhs(t, yy), dtype=float)
        stats.evaluations += 1
        if not np.all(np.isfinite(val)):
            raise RhsFailure(f"non-finite derivative at t={t}")
        return val

    while filled < len(samples) and samples[filled] <= t0:
        out[filled] = y
        filled += 1
    if t1 == t0:
        return Solution(samples, out, t0, y, stats)

    t = t0
    K = np.empty((7, y.size))
    K[0] = f(t, y)
    h = cfg.initial_step or _initial_step(f, t, y, K[0], 1.0, cfg)
    h = min(h, cfg.max_step, t1 - t0)
    stopped = False
    for _ in range(cfg.max_steps):
        if t >= t1:
            break
        min_step = 16 * np.spacing(max(abs(t), 1.0))
        if h < min_step:
            raise StepUnderflow(f"step size {h:.3g} underflow at t={t}")
        h = min(h, t1 - t)
        for s in range(1, 7):
            K[s] = f(t + C[s] * h, y + h * (np.asarray(A[s]) @ K[:s]))
        y_new = y + h * (B5 @ K)
        err = _error_norm(h * (E @ K), y, y_new, cfg)
        if err <= 1.0:
            t_new = t + h if t + h < t1 else t1
            while filled < len(samples) and samples[filled] <= t_new:
                stop = filled
                while stop < len(samples) and samples[stop] <= t_new:
                    stop += 1
                theta = (samples[filled:stop] - t) / h
                out[filled:stop] = _dense(y, y_new, h, K, theta)
                filled = stop
            t, y = t_new, y_new
            K[0] = K[6]
            stats.accepted += 1
            factor = cfg.max_factor if err == 0 else min(cfg.max_factor, cfg.safety * err ** (-0.2))
            h = min(h * factor, cfg.max_step)
            if monitor is not None and t < t1 and monitor(t, y):
                stopped = True
                break
        else:
            stats.rejected += 1
            h *= max(cfg.min_factor, cfg.safety * err ** (-0.2))
    else:
        raise IntegrationError(f"step budget {cfg.max_steps} exhausted at t={t}")

    return Solution(samples[:filled], out[:filled], t, y, stats, stopped)
