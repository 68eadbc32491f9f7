"""Chemical equilibrium spectral method with a fixed basis.

In comoving momentum ``y = a p`` the distribution is ``f = f_ch(y) chi`` with
``f_ch = 1/(e^y + 1)`` and ``chi = sum_i d^i q_i`` in the orthonormal family
of ``f_ch``.  The coefficients obey ``d^k' = int q_k C[f]/E dy`` and never see
the dilution, so only the collision term drives them.  ``n_modes`` counts
``d^0 .. d^{N-1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import integrate as integ
from .basis import BasisTable, WeightFamily, build_basis, eval_polys, measure_rule
from .model import RelaxationCollision, ScenarioConfig, fermi, scale_factor


@dataclass(frozen=True)
class SpectralStateCE:
    t: float
    d: np.ndarray


def chemeq_basis(n_modes: int) -> BasisTable:
    # the attractor decays like exp(-y/R) in y, hence the slow-decay rule
    return build_basis(WeightFamily.chem_eq(), n_modes - 1, rule=measure_rule(2 * n_modes + 4))


def rhs_ce(state: SpectralStateCE, model, basis: BasisTable) -> np.ndarray:
    """d^k' = int q_k C[f]/E dy with p = y / a(t)."""
    y = basis.rule.nodes
    a = float(scale_factor(state.t, model.cfg))
    n = len(state.d)
    f = basis.weight.w(y) * (state.d @ basis.node_values[:n])
    ce = model(y / a, state.t, f)
    return basis.node_values[:n] @ (basis.rule.weights * ce)


def moment_weights(basis: BasisTable, power: int) -> np.ndarray:
    """int f_ch q_i y^power dy for every basis function."""
    return basis.project(basis.rule.nodes**power)


def moments_ce(state: SpectralStateCE, basis: BasisTable, a: float, g_p: float,
               weights: tuple[np.ndarray, np.ndarray] | None = None) -> tuple[float, float]:
    """(n, rho); only d^0..d^2 enter n and only d^0..d^3 enter rho."""
    w2, w3 = weights if weights is not None else (moment_weights(basis, 2), moment_weights(basis, 3))
    d = state.d
    pref = g_p / (2.0 * math.pi**2)
    k2, k3 = min(3, len(d)), min(4, len(d))
    n = pref / a**3 * float(d[:k2] @ w2[:k2])
    rho = pref / a**4 * float(d[:k3] @ w3[:k3])
    return n, rho


def reconstruct_f_ce(state: SpectralStateCE, basis: BasisTable, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    vals = eval_polys(basis, y)[: len(state.d)]
    return fermi(y) * np.tensordot(state.d, vals, axes=1)


@dataclass
class TrajectoryCE:
    cfg: ScenarioConfig
    n_modes: int
    times: np.ndarray
    d: np.ndarray  # (n_times, n_modes)
    n: np.ndarray
    rho: np.ndarray
    stats: integ.StepStats = field(default_factory=integ.StepStats)

    def state(self, i: int) -> SpectralStateCE:
        return SpectralStateCE(t=float(self.times[i]), d=self.d[i].copy())


class ChemEqSolver:
    def __init__(self, cfg: ScenarioConfig, n_modes: int | None = None, model=None,
                 integrator: integ.IntegratorConfig | None = None):
        self.cfg = cfg
        self.n_modes = cfg.n_modes if n_modes is None else n_modes
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        self.model = RelaxationCollision(cfg) if model is None else model
        tol = cfg.tolerances
        self.integrator = integrator or integ.IntegratorConfig(rel_tol=tol.ode_rel, abs_tol=tol.ode_abs)
        self.basis = chemeq_basis(self.n_modes)
        self.weights = (moment_weights(self.basis, 2), moment_weights(self.basis, 3))

    def initial_state(self) -> SpectralStateCE:
        # f(y, 0) = f_ch(y), so chi = 1 = ||q_0|| q_0
        d = np.zeros(self.n_modes)
        d[0] = self.basis.norms[0]
        return SpectralStateCE(t=0.0, d=d)

    def run(self, sample_times=None) -> TrajectoryCE:
        cfg = self.cfg
        times = cfg.sample_times if sample_times is None else np.asarray(sample_times, dtype=float)
        s0 = self.initial_state()

        def rhs(t, d):
            return rhs_ce(SpectralStateCE(t, d), self.model, self.basis)

        sol = integ.integrate(rhs, s0.d, (s0.t, float(times[-1])), self.integrator, sample_times=times)
        n = np.empty(len(sol.times))
        rho = np.empty(len(sol.times))
        for i, (t, d) in enumerate(zip(sol.times, sol.states)):
            n[i], rho[i] = moments_ce(SpectralStateCE(t, d), self.basis, float(scale_factor(t, cfg)),
                                      cfg.g_p, self.weights)
        return TrajectoryCE(cfg=cfg, n_modes=self.n_modes, times=sol.times, d=sol.states, n=n, rho=rho,
                            stats=sol.stats)
