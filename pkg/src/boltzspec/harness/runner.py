"""Scenario runs, error metrics and sweeps for both spectral methods.

All distribution errors are computed in comoving momentum y.  The relative
L1 error is invariant under the rescaling y = a T z, so the ratio equals the
one in the non-equilibrium method's native z coordinate.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_expit

from .. import quadrature
from ..basis import WeightFamily, build_basis, chem_eq_norm_diverges, eval_polys, measure_rule, partial_sum
from ..chemeq import ChemEqSolver, TrajectoryCE, reconstruct_f_ce
from ..integrate import IntegrationError, IntegratorConfig
from ..model import ExactGrid, ScenarioConfig, exact_moments, fermi, scale_factor
from ..noneq import NonEqSolver, TrajectoryNE, noneq_basis, reconstruct_f
from ..quadrature import QuadratureError

log = logging.getLogger(__name__)

L1_REL_TOL = 1e-8
L1_FLOOR = 1e-13


class Method(enum.Enum):
    CHEM_EQ = "chemeq"
    NON_EQ = "noneq"


@dataclass
class ErrorReport:
    method: Method
    n_modes: int
    scenario: str
    max_rel_n_err: float = math.nan
    max_rel_rho_err: float = math.nan
    mode_coeff_err: np.ndarray = field(default_factory=lambda: np.zeros(0))
    max_L1_err: float = math.nan
    final_L1_err: float = math.nan
    L1_err_vs_time: np.ndarray = field(default_factory=lambda: np.zeros(0))
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    failed: bool = False
    diagnostic: str = ""
    switch_time: float | None = None
    steps_accepted: int = 0
    steps_rejected: int = 0

    @property
    def run_id(self) -> str:
        return f"{self.scenario}_{self.method.value}_N{self.n_modes}"


@dataclass
class RunResult:
    report: ErrorReport
    trajectory: TrajectoryNE | TrajectoryCE | None


def l1_error(f_numeric, f_exact, upper: float | None = None, rel_tol: float = L1_REL_TOL,
             floor: float = L1_FLOOR, decay_rate: float = 0.5) -> float:
    """int |f - f^N| / int |f| over [0, upper] (or [0, inf) when upper is None)."""
    if upper is None:
        den = quadrature.integrate_semi_infinite(lambda x: np.abs(f_exact(x)), rel_tol=1e-12, abs_tol=1e-300,
                                                 decay_rate=decay_rate).value
        num = quadrature.integrate_semi_infinite(lambda x: np.abs(f_numeric(x) - f_exact(x)), rel_tol=rel_tol,
                                                 abs_tol=floor * den, decay_rate=decay_rate).value
    else:
        den = quadrature.integrate_interval(lambda x: np.abs(f_exact(x)), 0.0, upper, rel_tol=1e-12,
                                            abs_tol=1e-300, initial_panels=16).value
        num = quadrature.integrate_interval(lambda x: np.abs(f_numeric(x) - f_exact(x)), 0.0, upper,
                                            rel_tol=rel_tol, abs_tol=floor * den, initial_panels=16).value
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return float(num / den)


_EXACT_CACHE: dict[ScenarioConfig, ExactGrid] = {}


def exact_grid(cfg: ScenarioConfig) -> ExactGrid:
    # the exact solution does not depend on the label or mode count
    key = cfg.replace(n_modes=1, name="")
    grid = _EXACT_CACHE.get(key)
    if grid is None:
        grid = ExactGrid.build(cfg)
        _EXACT_CACHE[key] = grid
    return grid


def _ne_errors(traj: TrajectoryNE, grid: ExactGrid, report: ErrorReport):
    cfg = traj.cfg
    y, wy = grid.rule.nodes, grid.rule.weights
    l1 = np.empty(len(traj.times))
    mode_err = np.zeros(traj.degree + 1)
    for i in range(len(traj.times)):
        state = traj.state(i)
        basis = noneq_basis(state.upsilon, traj.degree)
        s = float(scale_factor(state.t, cfg)) * state.T  # y = s z
        exact_at = lambda x, i=i: grid(x, i)
        l1[i] = l1_error(lambda x: reconstruct_f(state, basis, x / s), exact_at, upper=grid.rule.upper)
        z = y / s
        exact_b = eval_polys(basis, z) @ (wy * grid.values[i] * z**2) / s
        numeric_b = np.concatenate([[basis.norms[0], 0.0], state.b])
        mode_err = np.maximum(mode_err, np.abs(exact_b - numeric_b))
    report.L1_err_vs_time = l1
    report.mode_coeff_err = mode_err


def _ce_errors(traj: TrajectoryCE, grid: ExactGrid, basis, report: ErrorReport):
    y, wy = grid.rule.nodes, grid.rule.weights
    vals = eval_polys(basis, y)[: traj.n_modes]
    l1 = np.empty(len(traj.times))
    mode_err = np.zeros(traj.n_modes)
    for i in range(len(traj.times)):
        state = traj.state(i)
        l1[i] = l1_error(lambda x: reconstruct_f_ce(state, basis, x), lambda x, i=i: grid(x, i),
                         upper=grid.rule.upper)
        exact_d = vals @ (wy * grid.values[i])
        mode_err = np.maximum(mode_err, np.abs(exact_d - state.d))
    report.L1_err_vs_time = l1
    report.mode_coeff_err = mode_err


def run_scenario(cfg: ScenarioConfig, method: Method | str, n_modes: int | None = None,
                 switch_threshold: float | None = 1e-8, integrator: IntegratorConfig | None = None,
                 with_errors: bool = True) -> RunResult:
    """Integrate one method and compare it with the exact solution."""
    method = Method(method)
    n_modes = cfg.n_modes if n_modes is None else n_modes
    cfg = cfg.replace(n_modes=n_modes)
    report = ErrorReport(method=method, n_modes=n_modes, scenario=cfg.name)
    try:
        if method is Method.NON_EQ:
            solver = NonEqSolver(cfg, n_modes, integrator=integrator, switch_threshold=switch_threshold)
            traj = solver.run()
            report.switch_time = traj.switch_time
        else:
            solver = ChemEqSolver(cfg, n_modes, integrator=integrator)
            traj = solver.run()
    except (IntegrationError, QuadratureError, ValueError) as exc:
        log.warning("run %s failed: %s", report.run_id, exc)
        report.failed, report.diagnostic = True, f"{type(exc).__name__}: {exc}"
        return RunResult(report, None)

    report.times = traj.times
    report.steps_accepted, report.steps_rejected = traj.stats.accepted, traj.stats.rejected
    n_ex, rho_ex = exact_moments(traj.times, cfg)
    report.max_rel_n_err = float(np.max(np.abs(traj.n / n_ex - 1.0)))
    report.max_rel_rho_err = float(np.max(np.abs(traj.rho / rho_ex - 1.0)))
    if with_errors:
        grid = exact_grid(cfg)
        if method is Method.NON_EQ:
            _ne_errors(traj, grid, report)
        else:
            _ce_errors(traj, grid, solver.basis, report)
        report.max_L1_err = float(report.L1_err_vs_time.max())
        report.final_L1_err = float(report.L1_err_vs_time[-1])
    return RunResult(report, traj)


def sweep(cfg: ScenarioConfig, method: Method | str, n_modes_list, **kw) -> list[RunResult]:
    """One run per mode count; failures are recorded, not raised."""
    return [run_scenario(cfg, method, n, **kw) for n in n_modes_list]


# ---------------------------------------------------------------------------
# basis comparison study
# ---------------------------------------------------------------------------


@dataclass
class BasisStudyRow:
    upsilon: float
    R: float
    basis: str
    n_modes: np.ndarray
    error: np.ndarray  # L1 expansion error for N = 1..n_max
    coeff_hat: np.ndarray  # normalised mode coefficients
    diverges: bool


def _expansion_coefficients(kind: str, upsilon: float, R: float, n_max: int):
    """Coefficients of f_Y(y) = 1/(e^{y/R}/Y + 1) over the basis weight."""
    weight = WeightFamily.chem_eq() if kind == "chemeq" else WeightFamily.laguerre(power=0)
    table = build_basis(weight, n_max - 1, rule=measure_rule(2 * n_max + 4))
    target = lambda y: fermi(np.asarray(y) / R, upsilon)
    decay = min(1.0, 1.0 / R)
    res = quadrature.integrate_semi_infinite(
        lambda y: eval_polys(table, y) * target(y), rel_tol=1e-12, abs_tol=1e-14,
        decay_rate=decay, poly_degree=n_max + 2,
    )
    coeffs = np.atleast_1d(res.value)
    # squared L2 norm of f_Y / w in L2(w dy): int f_Y^2 / w dy; both weights
    # decay like e^{-y}, so both norms diverge for R >= 2
    if chem_eq_norm_diverges(R):
        norm = math.inf
    else:
        rate = 2.0 / R - 1.0
        log_w = (lambda y: log_expit(-y)) if kind == "chemeq" else (lambda y: -y)
        log_f = lambda y: log_expit(math.log(upsilon) - np.asarray(y) / R)
        norm_res = quadrature.integrate_semi_infinite(
            lambda y: np.exp(2.0 * log_f(y) - log_w(y)), rel_tol=1e-12, abs_tol=1e-16,
            decay_rate=max(rate, 1e-3), poly_degree=1,
        )
        norm = math.sqrt(norm_res.value)
    return table, target, coeffs, norm


def basis_study(upsilon_list, R_list, n_max: int = 10) -> list[BasisStudyRow]:
    """Expansion errors of f_Y in the chemical equilibrium and Laguerre bases."""
    rows = []
    for upsilon in upsilon_list:
        for R in R_list:
            for kind in ("chemeq", "laguerre"):
                table, target, coeffs, norm = _expansion_coefficients(kind, upsilon, R, n_max)
                w = table.weight.w
                errors = np.empty(n_max)
                for N in range(1, n_max + 1):
                    approx = lambda y, N=N: w(y) * partial_sum(table, coeffs[:N], y)
                    errors[N - 1] = l1_error(approx, target, decay_rate=min(1.0, 1.0 / R), rel_tol=1e-10,
                                             floor=1e-15)
                coeff_hat = coeffs / norm if math.isfinite(norm) else np.full_like(coeffs, math.nan)
                rows.append(BasisStudyRow(upsilon=upsilon, R=R, basis=kind, n_modes=np.arange(1, n_max + 1),
                                          error=errors, coeff_hat=coeff_hat,
                                          diverges=chem_eq_norm_diverges(R)))
    return rows
