"""Chemical non-equilibrium spectral method.

The distribution is written as ``f(t, z) = f_Y(z) * psi(t, z)`` with
``z = p / T(t)`` and ``psi = sum_j b^j p_j`` in the orthonormal family of the
weight ``z^2 f_Y``.  The two lowest coefficients are pinned,
``b^0 = ||psi_0|| = sqrt(<1,1>)`` and ``b^1 = 0``, and the effective
temperature ``T`` and fugacity ``Y`` evolve so that the pins hold.  The
free unknowns are ``T`` (or ``eps = a T - 1``), ``Y`` and ``b^2 .. b^N``.

Matrix convention: ``A[k, i]`` is the coefficient of ``b^i`` in the
equation for ``b^k``; both ``A`` and ``B`` are lower triangular.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import integrate as integ
from .basis import BasisTable, WeightFamily, build_basis, eval_poly_derivs, eval_polys, measure_rule
from .model import RelaxationCollision, ScenarioConfig, background, fermi, scale_factor

SINGULAR_K_FACTOR = 1e-12


class SingularK(integ.RhsFailure):
    pass


class Form(enum.Enum):
    T = "T"
    EPS = "eps"


@dataclass(frozen=True)
class SpectralStateNE:
    t: float
    T: float
    upsilon: float
    b: np.ndarray  # b^2 .. b^N
    form: Form = Form.T

    def __post_init__(self):
        if not (self.T > 0 and self.upsilon > 0):
            raise ValueError(f"need T > 0 and Y > 0, got T={self.T}, Y={self.upsilon}")

    @property
    def degree(self) -> int:
        return len(self.b) + 1

    def eps(self, cfg: ScenarioConfig) -> float:
        return float(scale_factor(self.t, cfg)) * self.T - 1.0

    def to_vector(self, cfg: ScenarioConfig) -> np.ndarray:
        first = self.T if self.form is Form.T else self.eps(cfg)
        return np.concatenate([[first, self.upsilon], self.b])

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray, form: Form, cfg: ScenarioConfig) -> "SpectralStateNE":
        T = y[0] if form is Form.T else (1.0 + y[0]) / float(scale_factor(t, cfg))
        return cls(t=float(t), T=float(T), upsilon=float(y[1]), b=np.array(y[2:], dtype=float), form=form)

    @classmethod
    def kinetic_equilibrium(cls, T: float, upsilon: float, degree: int, t: float = 0.0) -> "SpectralStateNE":
        return cls(t=t, T=T, upsilon=upsilon, b=np.zeros(max(degree - 1, 0)))


@dataclass(frozen=True)
class MatrixSetNE:
    A: np.ndarray
    B: np.ndarray
    dUps_11: float


@dataclass(frozen=True)
class RatesNE:
    ups_rate: float  # dY/dt / Y
    T_rate: float  # dT/dt / T
    eps_dot: float
    b_dot: np.ndarray  # d b^k / dt, k >= 2
    K: float


def noneq_basis(upsilon: float, degree: int) -> BasisTable:
    return build_basis(WeightFamily.non_eq(upsilon), degree, rule=measure_rule(2 * degree + 4), verify=False)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def assemble_A(basis: BasisTable) -> np.ndarray:
    """A[k, i] = <kappa p_i, p_k> below the diagonal; diagonal by parts."""
    w = basis.weight
    G = basis.gram(w.kinetic_factor(basis.rule.nodes))
    A = np.tril(G, -1)
    n = basis.n_modes + 1
    diag = np.full(n, -3.0)
    for k in range(1, n):
        diag[k] -= basis.deriv_coeffs[k, k - 1] * basis.betas[k]
    A[np.arange(n), np.arange(n)] = diag
    return A


def assemble_A_direct(basis: BasisTable) -> np.ndarray:
    """Full A from its definition, without the triangular shortcut."""
    z = basis.rule.nodes
    G = basis.gram(basis.weight.kinetic_factor(z))
    dP = eval_poly_derivs(basis, z)
    # second term: <z p_i', p_k>, stored at [k, i]
    S = (basis.node_values * (basis.rule_weights * z)) @ dP.T
    return G + S


def assemble_B(basis: BasisTable) -> np.ndarray:
    """B[k, i] = <phi p_i, p_k> below the diagonal, -Y <p_k, dp_k/dY> on it."""
    w = basis.weight
    G = basis.gram(w.fugacity_factor(basis.rule.nodes))
    B = np.tril(G, -1)
    n = basis.n_modes + 1
    B[np.arange(n), np.arange(n)] = -w.upsilon * basis.upsilon_diag
    return B


def d_mass_d_upsilon(basis: BasisTable) -> float:
    """d<1,1>/dY = int z^2 / (e^{z/2} + Y e^{-z/2})^2 dz."""
    return float(basis.rule.weights @ basis.weight.dw_dupsilon(basis.rule.nodes))


def matrices(basis: BasisTable) -> MatrixSetNE:
    return MatrixSetNE(A=assemble_A(basis), B=assemble_B(basis), dUps_11=d_mass_d_upsilon(basis))


# ---------------------------------------------------------------------------
# state evaluation
# ---------------------------------------------------------------------------


def full_coefficients(state: SpectralStateNE, basis: BasisTable) -> np.ndarray:
    """(b^0, b^1, b^2, ..., b^N) with the pinned b^0 = ||psi_0||, b^1 = 0."""
    return np.concatenate([[basis.norms[0], 0.0], state.b])


def reconstruct_f(state: SpectralStateNE, basis: BasisTable, z) -> np.ndarray:
    """f = f_Y(z) (1 + sum_{i>=2} b^i p_i(z))."""
    z = np.asarray(z, dtype=float)
    base = fermi(z, state.upsilon)
    if state.b.size == 0:
        return base
    vals = eval_polys(basis, z)
    return base * (1.0 + np.tensordot(state.b, vals[2:], axes=1))


def _f_at_nodes(state, basis):
    z = basis.rule.nodes
    base = fermi(z, state.upsilon)
    if state.b.size == 0:
        return base
    return base * (1.0 + state.b @ basis.node_values[2:])


def collision_projections(state: SpectralStateNE, model, basis: BasisTable) -> np.ndarray:
    """c_k = <C[f] / (f_Y E), p_k> = int p_k z^2 C[f]/E dz, k = 0..N."""
    z = basis.rule.nodes
    ce = model(z * state.T, state.t, _f_at_nodes(state, basis))
    return basis.node_values @ (basis.rule.weights * z**2 * ce)


def determinant_K(A: np.ndarray, B: np.ndarray, b: np.ndarray, basis: BasisTable,
                  dUps_11: float | None = None) -> float:
    ups = basis.weight.upsilon
    if dUps_11 is None:
        dUps_11 = d_mass_d_upsilon(basis)
    Ab, Bb = A @ b, B @ b
    g = ups * dUps_11 / (2.0 * basis.norms[0])
    return (g + Bb[0]) * Ab[1] - Ab[0] * Bb[1]


def _solve_rates(state, mats, c, H, basis):
    b = full_coefficients(state, basis)
    Ab, Bb = mats.A @ b, mats.B @ b
    ups = basis.weight.upsilon
    g = ups * mats.dUps_11 / (2.0 * basis.norms[0])
    K = (g + Bb[0]) * Ab[1] - Ab[0] * Bb[1]
    scale = np.abs(mats.A).max() * np.abs(mats.B).max()
    if not abs(K) > SINGULAR_K_FACTOR * scale:
        raise SingularK(f"|K| = {abs(K):.3g} below threshold at t={state.t}, Y={ups}")
    ups_rate = (Ab[1] * c[0] - Ab[0] * c[1]) / K
    # X = H + T'/T
    X = (Bb[1] * ups_rate - c[1]) / Ab[1]
    b_dot = X * Ab[2:] - ups_rate * Bb[2:] + c[2:]
    return ups_rate, X, b_dot, K


def rates(state: SpectralStateNE, mats: MatrixSetNE, c: np.ndarray, H: float, basis: BasisTable) -> RatesNE:
    ups_rate, X, b_dot, K = _solve_rates(state, mats, c, H, basis)
    return RatesNE(ups_rate=ups_rate, T_rate=X - H, eps_dot=math.nan, b_dot=b_dot, K=K)


def rates_eps(state: SpectralStateNE, mats: MatrixSetNE, c: np.ndarray, H: float, basis: BasisTable,
              a: float) -> RatesNE:
    """As :func:`rates`, with d eps/dt = (1 + eps) (H + T'/T) for eps = a T - 1."""
    ups_rate, X, b_dot, K = _solve_rates(state, mats, c, H, basis)
    return RatesNE(ups_rate=ups_rate, T_rate=X - H, eps_dot=a * state.T * X, b_dot=b_dot, K=K)


def moments(state: SpectralStateNE, g_p: float, basis: BasisTable | None = None) -> tuple[float, float]:
    """(n, rho) from T and Y alone: g T^3 <1,1> / 2pi^2, g T^4 <1,z> / 2pi^2."""
    if basis is None or basis.weight.upsilon != state.upsilon:
        basis = noneq_basis(state.upsilon, 1)
    pref = g_p / (2.0 * math.pi**2)
    mass = basis.mass
    return pref * state.T**3 * mass, pref * state.T**4 * mass * basis.alphas[0]


# ---------------------------------------------------------------------------
# time integration
# ---------------------------------------------------------------------------


@dataclass
class TrajectoryNE:
    cfg: ScenarioConfig
    degree: int
    times: np.ndarray
    T: np.ndarray
    upsilon: np.ndarray
    b: np.ndarray  # (n_times, degree - 1)
    eps: np.ndarray
    K: np.ndarray
    n: np.ndarray
    rho: np.ndarray
    switch_time: float | None
    stats: integ.StepStats = field(default_factory=integ.StepStats)

    def state(self, i: int) -> SpectralStateNE:
        form = Form.EPS if self.switch_time is not None and self.times[i] >= self.switch_time else Form.T
        return SpectralStateNE(t=float(self.times[i]), T=float(self.T[i]), upsilon=float(self.upsilon[i]),
                               b=self.b[i].copy(), form=form)


class NonEqSolver:
    """Evolves (T or eps, Y, b^2..b^N) for one scenario.

    ``n_modes`` counts T and Y as the first two modes, so the basis degree is
    ``n_modes - 1``.  The basis is rebuilt at the current fugacity whenever
    it moves by more than ``refresh_tol`` (0 rebuilds on every evaluation).
    ``switch_threshold`` is relative to the largest collision projection seen
    so far; once the projections fall below it the solver continues in the
    eps form.  ``None`` or 0 disables the switch.
    """

    def __init__(self, cfg: ScenarioConfig, n_modes: int | None = None, model=None,
                 integrator: integ.IntegratorConfig | None = None, switch_threshold: float | None = 1e-8,
                 refresh_tol: float = 0.0):
        self.cfg = cfg
        self.n_modes = cfg.n_modes if n_modes is None else n_modes
        if self.n_modes < 2:
            raise ValueError("the non-equilibrium method needs at least two modes (T and Y)")
        self.degree = self.n_modes - 1
        self.model = RelaxationCollision(cfg) if model is None else model
        tol = cfg.tolerances
        self.integrator = integrator or integ.IntegratorConfig(rel_tol=tol.ode_rel, abs_tol=tol.ode_abs)
        self.switch_threshold = switch_threshold or 0.0
        self.refresh_tol = refresh_tol
        self._cached: BasisTable | None = None

    def basis(self, upsilon: float) -> BasisTable:
        cached = self._cached
        if cached is not None and abs(cached.weight.upsilon - upsilon) <= self.refresh_tol:
            return cached
        self._cached = noneq_basis(upsilon, self.degree)
        return self._cached

    def evaluate(self, state: SpectralStateNE):
        basis = self.basis(state.upsilon)
        mats = matrices(basis)
        c = collision_projections(state, self.model, basis)
        return basis, mats, c

    def derivative(self, t: float, y: np.ndarray, form: Form) -> np.ndarray:
        state = SpectralStateNE.from_vector(t, y, form, self.cfg)
        basis, mats, c = self.evaluate(state)
        a, H, _ = background(t, self.cfg)
        if form is Form.T:
            r = rates(state, mats, c, float(H), basis)
            first = state.T * r.T_rate
        else:
            r = rates_eps(state, mats, c, float(H), basis, float(a))
            first = r.eps_dot
        return np.concatenate([[first, state.upsilon * r.ups_rate], r.b_dot])

    def collision_size(self, t: float, y: np.ndarray, form: Form) -> float:
        state = SpectralStateNE.from_vector(t, y, form, self.cfg)
        basis = self.basis(state.upsilon)
        return float(np.abs(collision_projections(state, self.model, basis)).max())

    def initial_state(self) -> SpectralStateNE:
        # f(p, 0) = 1/(e^{p/T_eq(0)} + 1): kinetic and chemical equilibrium
        _, _, T_eq0 = background(0.0, self.cfg)
        return SpectralStateNE.kinetic_equilibrium(float(T_eq0), 1.0, self.degree)

    def run(self, sample_times=None, initial: SpectralStateNE | None = None) -> TrajectoryNE:
        cfg = self.cfg
        times = cfg.sample_times if sample_times is None else np.asarray(sample_times, dtype=float)
        state0 = initial or self.initial_state()
        t0, t1 = state0.t, float(times[-1])
        null_model = getattr(self.model, "cfg", None) is not None and self.model.cfg.M == 0.0
        rel = self.switch_threshold

        form = Form.T
        switch_time = None
        if rel > 0 and null_model:
            form, switch_time = Form.EPS, t0
        y0 = SpectralStateNE(t=t0, T=state0.T, upsilon=state0.upsilon, b=state0.b, form=form).to_vector(cfg)

        peak = [0.0]

        def monitor(t, y):
            size = self.collision_size(t, y, Form.T)
            peak[0] = max(peak[0], size)
            return size < rel * peak[0]

        sol = integ.integrate(lambda t, y: self.derivative(t, y, form), y0, (t0, t1), self.integrator,
                              sample_times=times, monitor=monitor if (rel > 0 and form is Form.T) else None)
        parts = [(sol.times, sol.states, form)]
        stats = sol.stats
        if sol.stopped:
            switch_time = sol.t_end
            state = SpectralStateNE.from_vector(sol.t_end, sol.y_end, Form.T, cfg)
            y_eps = SpectralStateNE(t=state.t, T=state.T, upsilon=state.upsilon, b=state.b,
                                    form=Form.EPS).to_vector(cfg)
            rest = times[times > sol.t_end]
            sol2 = integ.integrate(lambda t, y: self.derivative(t, y, Form.EPS), y_eps, (sol.t_end, t1),
                                   self.integrator, sample_times=rest)
            parts.append((sol2.times, sol2.states, Form.EPS))
            stats = stats.merge(sol2.stats)
        return self._collect(parts, switch_time, stats)

    def _collect(self, parts, switch_time, stats) -> TrajectoryNE:
        cfg = self.cfg
        rows = []
        for ts, ys, form in parts:
            for t, y in zip(ts, ys):
                rows.append(SpectralStateNE.from_vector(t, y, form, cfg))
        n_t = len(rows)
        out = dict(T=np.empty(n_t), upsilon=np.empty(n_t), eps=np.empty(n_t), K=np.empty(n_t),
                   n=np.empty(n_t), rho=np.empty(n_t))
        b = np.empty((n_t, self.degree - 1))
        for i, s in enumerate(rows):
            basis = self.basis(s.upsilon)
            mats = matrices(basis)
            out["T"][i], out["upsilon"][i] = s.T, s.upsilon
            out["eps"][i] = s.eps(cfg)
            out["K"][i] = determinant_K(mats.A, mats.B, full_coefficients(s, basis), basis, mats.dUps_11)
            out["n"][i], out["rho"][i] = moments(s, cfg.g_p, basis)
            b[i] = s.b
        times = np.array([s.t for s in rows])
        return TrajectoryNE(cfg=cfg, degree=self.degree, times=times, b=b, switch_time=switch_time,
                            stats=stats, **out)
