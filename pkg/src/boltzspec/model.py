"""The exactly solvable relaxation model used for validation.

The distribution relaxes at rate ``M`` towards a Fermi-Dirac attractor with
prescribed temperature ``T_eq(t)`` and fugacity ``upsilon_target`` while the
system dilutes with the radiation-era scale factor ``a = sqrt((t + b)/b)``:

    T_eq(t) = [1 + (1 - e^-t) / (e^{-(t - b)} + 1) * (R - 1)] / a(t).

In comoving momentum ``y = a p`` the model is a linear ODE at every ``y``,
which gives the closed-form solution used as the reference.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import quadrature
from .quadrature import CompositeRule

EXACT_TOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    ode_rel: float = 1e-13
    ode_abs: float = 1e-13
    quad_rel: float = 1e-13
    quad_abs: float = 1e-15


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "custom"
    b: float = 5.0
    R: float = 1.1
    upsilon_target: float = 1.0
    M: float = 1.0
    t_final: float = 10.0
    n_modes: int = 2
    g_p: float = 2.0
    n_samples: int = 401
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not (self.b > 0 and self.R > 0 and self.upsilon_target > 0):
            raise ValueError("b, R and upsilon_target must be positive")
        if self.M < 0 or self.t_final <= 0:
            raise ValueError("need M >= 0 and t_final > 0")
        if self.n_modes < 1 or self.n_samples < 2:
            raise ValueError("need n_modes >= 1 and n_samples >= 2")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    @property
    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.n_samples)


def reheating(R: float, **kw) -> ScenarioConfig:
    return ScenarioConfig(name=f"reheating-R{R:g}", R=R, upsilon_target=1.0, **kw)


def attractor(upsilon: float, **kw) -> ScenarioConfig:
    return ScenarioConfig(name=f"attractor-Y{upsilon:g}", R=1.0, upsilon_target=upsilon, **kw)


PRESETS: dict[str, ScenarioConfig] = {
    **{f"reheating-R{R:g}": reheating(R) for R in (1.1, 1.4, 2.0)},
    **{f"attractor-Y{u:g}": attractor(u) for u in (1.5, 0.9, 0.75, 0.5)},
}


# ---------------------------------------------------------------------------
# background
# ---------------------------------------------------------------------------


def scale_factor(t, cfg: ScenarioConfig):
    return np.sqrt((np.asarray(t, dtype=float) + cfg.b) / cfg.b)


def hubble(t, cfg: ScenarioConfig):
    return 0.5 / (np.asarray(t, dtype=float) + cfg.b)


def reheat_profile(t, cfg: ScenarioConfig):
    """a(t) T_eq(t): 1 at t = 0, tending to R."""
    t = np.asarray(t, dtype=float)
    return 1.0 + (-np.expm1(-t)) * expit(t - cfg.b) * (cfg.R - 1.0)


def background(t, cfg: ScenarioConfig):
    """(a, H, T_eq) at time(s) t."""
    a = scale_factor(t, cfg)
    return a, hubble(t, cfg), reheat_profile(t, cfg) / a


def fermi(x, upsilon: float = 1.0):
    """1 / (e^x / Y + 1), overflow-safe."""
    return expit(math.log(upsilon) - np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# collision operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelaxationCollision:
    """C[f]/E = M (f_eq(p / T_eq(t); Y_target) - f)."""

    cfg: ScenarioConfig

    def attractor(self, p, t):
        _, _, T_eq = background(t, self.cfg)
        return fermi(np.asarray(p) / T_eq, self.cfg.upsilon_target)

    def __call__(self, p, t, f_value):
        if self.cfg.M == 0.0:
            return np.zeros_like(np.asarray(f_value, dtype=float))
        return self.cfg.M * (self.attractor(p, t) - f_value)


def relaxation_collision(p, t, f_value, cfg: ScenarioConfig):
    return RelaxationCollision(cfg)(p, t, f_value)


# ---------------------------------------------------------------------------
# exact solution
# ---------------------------------------------------------------------------


def _history_integrand(y, t, cfg):
    y = np.atleast_1d(np.asarray(y, dtype=float))
    u = cfg.upsilon_target
    M = cfg.M

    def g(s):
        ratio = y[:, None] / reheat_profile(s, cfg)[None, :]
        return M * np.exp(M * (s - t))[None, :] * fermi(ratio, u)

    return g


def exact_solution_y(y, t: float, cfg: ScenarioConfig, tol: float = EXACT_TOL):
    """Exact f(y, t) in comoving momentum y = a p."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    initial = math.exp(-cfg.M * t) * fermi(y)
    if t == 0.0 or cfg.M == 0.0:
        return initial
    res = quadrature.integrate_interval(
        _history_integrand(y, t, cfg), 0.0, t, rel_tol=tol, abs_tol=1e-16, order=15
    )
    return np.asarray(res.value) + initial


def exact_solution(z, t: float, T_of_t: float, cfg: ScenarioConfig, tol: float = EXACT_TOL):
    """Exact f at z = p / T(t) for a given effective temperature T(t)."""
    a = float(scale_factor(t, cfg))
    return exact_solution_y(a * T_of_t * np.asarray(z, dtype=float), t, cfg, tol)


def fermi_moment(power: int, upsilon: float, tol: float = 1e-14) -> float:
    """int_0^inf x^power / (e^x / Y + 1) dx."""
    res = quadrature.integrate_semi_infinite(
        lambda x: x**power * fermi(x, upsilon), rel_tol=tol, abs_tol=1e-300,
        decay_rate=1.0, poly_degree=power,
    )
    return float(res.value)


def exact_moments(times, cfg: ScenarioConfig, tol: float = EXACT_TOL):
    """Exact (n, rho) at the given times.

    Integrating the closed-form solution against y^2 and y^3 swaps into a
    time integral of Fermi moments scaled by (a T_eq)^3 and (a T_eq)^4.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    F2u, F3u = fermi_moment(2, cfg.upsilon_target), fermi_moment(3, cfg.upsilon_target)
    F2, F3 = fermi_moment(2, 1.0), fermi_moment(3, 1.0)
    M = cfg.M
    pref = cfg.g_p / (2.0 * math.pi**2)
    n = np.empty_like(times)
    rho = np.empty_like(times)
    for i, t in enumerate(times):
        hist = np.zeros(2)
        if t > 0 and M > 0:
            def g(s, t=t):
                r = reheat_profile(s, cfg)
                e = M * np.exp(M * (s - t))
                return np.vstack([e * r**3 * F2u, e * r**4 * F3u])
            hist = quadrature.integrate_interval(g, 0.0, t, rel_tol=tol, abs_tol=1e-16).value
        decay = math.exp(-M * t)
        a = float(scale_factor(t, cfg))
        n[i] = pref / a**3 * (hist[0] + decay * F2)
        rho[i] = pref / a**4 * (hist[1] + decay * F3)
    return n, rho


@dataclass
class ExactGrid:
    """Exact solution sampled on a panel grid in y at the scenario's times.

    Values at the rule nodes are marched from one sample time to the next:
    f(t') = e^{-M dt} f(t) + int_t^t' M e^{M (s - t')} f_eq(y / (a T_eq)(s)) ds,
    each increment by adaptive quadrature.  Between nodes the solution is
    recovered from the per-panel Legendre interpolant, which is exact to
    rounding for functions analytic in the strip the Fermi factors allow.
    """

    cfg: ScenarioConfig
    rule: CompositeRule
    times: np.ndarray
    values: np.ndarray  # (n_times, n_nodes)

    @classmethod
    def build(cls, cfg: ScenarioConfig, y_max: float | None = None, panel_width: float = 2.0,
              order: int = 20, tol: float = EXACT_TOL) -> "ExactGrid":
        if y_max is None:
            rate = 1.0 / max(cfg.R, 1.0, 1e-12)
            y_max = quadrature.relative_tail_cutoff(rate, 14, 1e-16)
        n_panels = max(1, int(math.ceil(y_max / panel_width)))
        rule = CompositeRule.from_edges(np.linspace(0.0, n_panels * panel_width, n_panels + 1), order)
        y = rule.nodes
        times = cfg.sample_times
        values = np.empty((len(times), y.size))
        values[0] = fermi(y)
        M = cfg.M
        for i in range(1, len(times)):
            t0, t1 = times[i - 1], times[i]
            cur = math.exp(-M * (t1 - t0)) * values[i - 1]
            if M > 0:
                cur = cur + quadrature.integrate_interval(
                    _history_integrand(y, t1, cfg), t0, t1, rel_tol=tol, abs_tol=1e-17, order=10
                ).value
            values[i] = cur
        return cls(cfg=cfg, rule=rule, times=times, values=values)

    def _coefficients(self, i: int) -> np.ndarray:
        order = self.rule.order
        x, w = quadrature.gauss_legendre(order)
        V = np.polynomial.legendre.legvander(x, order - 1)
        # discrete Legendre transform on Gauss nodes
        scale = (2.0 * np.arange(order) + 1.0) / 2.0
        vals = self.values[i].reshape(-1, order)
        return (vals * w) @ V * scale

    def __call__(self, y, i: int):
        """Interpolated exact f(y, times[i]); zero beyond the grid."""
        y = np.asarray(y, dtype=float)
        edges = self.rule.edges
        coef = self._coefficients(i)
        k = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, len(edges) - 2)
        lo, hi = edges[k], edges[k + 1]
        x = (2.0 * y - lo - hi) / (hi - lo)
        c = coef[k]
        # Clenshaw recurrence for Legendre series, vectorised over points
        b1 = np.zeros_like(x)
        b2 = np.zeros_like(x)
        n = c.shape[1]
        for j in range(n - 1, 0, -1):
            alpha = (2.0 * j + 1.0) / (j + 1.0) * x
            beta = -(j + 1.0) / (j + 2.0)
            b1, b2 = c[:, j] + alpha * b1 + beta * b2, b1
        out = c[:, 0] + x * b1 - 0.5 * b2
        return np.where(y <= edges[-1], out, 0.0)
