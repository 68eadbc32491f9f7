import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from boltzspec.chemeq import ChemEqSolver, SpectralStateCE, chemeq_basis, moments_ce, reconstruct_f_ce, rhs_ce
from boltzspec.model import RelaxationCollision, exact_moments, fermi, reheating, scale_factor

ZETA3 = float(mpmath.zeta(3))


def test_initial_state_is_fermi_dirac():
    solver = ChemEqSolver(reheating(1.1), 5)
    y = np.linspace(0, 30, 11)
    np.testing.assert_allclose(reconstruct_f_ce(solver.initial_state(), solver.basis, y), fermi(y), rtol=1e-14)


def test_initial_moments():
    solver = ChemEqSolver(reheating(1.1), 4)
    n, rho = moments_ce(solver.initial_state(), solver.basis, 1.0, 2.0)
    assert n == pytest.approx(1.5 * ZETA3 / math.pi**2, rel=1e-14)
    assert rho == pytest.approx(7 * math.pi**4 / 120 / math.pi**2, rel=1e-14)


def test_null_collisions_freeze_coefficients():
    cfg = reheating(1.4).replace(M=0.0)
    solver = ChemEqSolver(cfg, 4)
    assert np.all(rhs_ce(SpectralStateCE(3.0, np.array([0.7, 0.1, 0.0, 0.02])), solver.model, solver.basis) == 0)


@given(t=st.floats(0.0, 10.0), d=st.lists(st.floats(-0.1, 0.1), min_size=4, max_size=4))
@settings(max_examples=20, deadline=None)
def test_number_and_energy_balance(t, d):
    # d(a^3 n)/dt and d(a^4 rho)/dt equal the collision sources in y
    cfg = reheating(2.0)
    solver = ChemEqSolver(cfg, 4)
    d = np.array(d) + np.array([solver.basis.norms[0], 0, 0, 0])
    state = SpectralStateCE(t, d)
    model = RelaxationCollision(cfg)
    a = float(scale_factor(t, cfg))
    d_dot = rhs_ce(state, model, solver.basis)
    pref = cfg.g_p / (2 * math.pi**2)
    src = lambda k: quad(lambda y: y**k * model(np.array([y / a]), t,  # noqa: E731
                                               reconstruct_f_ce(state, solver.basis, np.array([y])))[0],
                         0, 100, limit=200, epsabs=1e-15)[0]
    n_dot, rho_dot = moments_ce(SpectralStateCE(t, d_dot), solver.basis, 1.0, cfg.g_p)
    assert n_dot == pytest.approx(pref * src(2), rel=1e-9, abs=1e-14)
    assert rho_dot == pytest.approx(pref * src(3), rel=1e-9, abs=1e-14)


def test_basis_degree_follows_mode_count():
    assert chemeq_basis(4).n_modes == 3


@pytest.mark.parametrize("R", [1.1, 1.4, 2.0])
def test_minimum_modes_for_moments(R):
    cfg = reheating(R)
    n_ex, rho_ex = exact_moments(cfg.sample_times, cfg)
    errs = {}
    for N in (2, 3, 4):
        traj = ChemEqSolver(cfg, N).run()
        errs[N] = (np.max(np.abs(traj.n / n_ex - 1)), np.max(np.abs(traj.rho / rho_ex - 1)))
    assert errs[2][0] > 1e-3
    assert errs[3][0] < 1e-9 < errs[3][1]
    assert errs[4][0] < 1e-9 and errs[4][1] < 1e-9


def test_rejects_empty_basis():
    with pytest.raises(ValueError):
        ChemEqSolver(reheating(1.1), 0)
