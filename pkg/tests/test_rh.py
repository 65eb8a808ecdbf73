import numpy as np
import pytest

from thirring_ist.numerics import CauchyKernel, Grid
from thirring_ist.direct import solve_jost, asymptotic_profiles
from thirring_ist.rh import (
    ConfigError, assemble_jump, nyquist_guard, solve_rh_dense,
    solve_rh_negative, solve_rh_positive, solve_scalar_delta,
)


@pytest.fixture(scope="module")
def jump512(scat512):
    return assemble_jump(scat512)


@pytest.fixture(scope="module")
def kernel512(zgrid512):
    return CauchyKernel(zgrid512)


@pytest.fixture(scope="module")
def delta512(jump512, kernel512):
    return solve_scalar_delta(jump512, kernel512)


def test_delta_identities(delta512):
    val = delta512.validate()
    assert val["unit_modulus"] < 1e-10
    assert val["multiplicative_jump"] < 1e-12
    assert val["edge_decay"] < 2e-3


def test_tau_conjugation_defect(jump512):
    assert jump512.tau_conjugation_defect(0.7) < 1e-12


def test_nyquist_guard():
    hz = np.pi / 40.0
    nyquist_guard(0.5, hz, 1.0)
    with pytest.raises(ConfigError):
        nyquist_guard(50.0, hz, 1.0)


def test_phase_is_isometry(scat512):
    jump = assemble_jump(scat512, t=0.4)
    keep = ~jump.refined
    assert np.max(np.abs(np.abs(jump.r_plus[keep]) - np.abs(scat512.r_plus[keep]))) < 1e-13
    assert np.max(np.abs(np.abs(jump.r_minus[keep]) - np.abs(scat512.r_minus[keep]))) < 1e-13
    # some origin cells must actually be averaged
    assert np.any(jump.refined)


def test_positive_solve_converges(jump512, kernel512):
    x = np.array([0.0, 1.0, 5.0])
    sol = solve_rh_positive(jump512, x, kernel512, audit=True)
    assert sol.residual < 1e-9
    assert sol.iterations < 100
    # opposite-boundary columns come back alongside the unknowns
    assert sol.audit_first.shape == sol.first.shape
    assert np.all(np.isfinite(sol.audit_first))


def test_negative_solve_converges(jump512, delta512, kernel512):
    x = np.array([-5.0, -1.0, 0.0])
    sol = solve_rh_negative(jump512, delta512, x, kernel512, audit=True)
    assert sol.residual < 1e-9
    assert sol.audit_first.shape == sol.first.shape


def test_dense_matches_iterative(jump512, kernel512):
    x = 0.9375
    sol = solve_rh_positive(jump512, np.array([x]), kernel512)
    xi, eta = solve_rh_dense(jump512, x, positive=True, kernel=kernel512)
    assert np.max(np.abs(sol.first[0] - xi)) < 1e-8
    assert np.max(np.abs(sol.second[0] - eta)) < 1e-8


def test_rh_matches_volterra(gauss512, jump512, kernel512):
    # xi- from the projection system equals e^{-i nu+ sigma3} m+ row by row
    g = gauss512.grid
    prof = asymptotic_profiles(gauss512)
    idx = [g.n // 2, g.n // 2 + 64, g.n // 2 + 192]
    x = g.nodes[idx]
    sol = solve_rh_positive(jump512, x, kernel512)
    m = solve_jost(gauss512, jump512.z, "+", "m", stride=2)
    worst = 0.0
    for row, j in enumerate(idx):
        mj = m.at_index(j)
        nu = prof.nu_plus[j]
        pred = np.vstack([np.exp(-1j * nu) * mj[0], np.exp(1j * nu) * mj[1]])
        worst = max(worst, float(np.max(np.abs(sol.first[row] - pred))))
    assert worst < 1e-5


def test_jump_product_time_invariant(scat512):
    j0 = assemble_jump(scat512, t=0.0)
    j1 = assemble_jump(scat512, t=0.8)
    assert np.max(np.abs(j0.product - j1.product)) == 0.0
