import numpy as np
import pytest

from conftest import rel_l2
from thirring_ist.numerics import Grid
from thirring_ist.fields import PotentialField
from thirring_ist.oracle import (
    MTState, conservation_residuals, dressing_coefficients,
    dressing_recurrence_defect, evolve_oracle, nu_plus_profile, slave_u, step_v,
)
from thirring_ist.recon import mt_residuals


def test_slave_u_satisfies_x_equation():
    g = Grid.spatial(20.0, 2048)
    p = PotentialField.gaussian(g, 0.3)
    u = slave_u(p.v, g)
    r1, _ = mt_residuals(p.v, u, g)
    assert r1 < 1e-6


def test_slave_u_zero():
    g = Grid.spatial(20.0, 256)
    u = slave_u(np.zeros(256, complex), g)
    assert np.max(np.abs(u)) == 0.0


def test_slave_u_decays_on_right_only(gauss512):
    # int v e^{2i nu+} != 0 for the gaussian, so no solution decays at both
    # ends; the slaved branch is anchored on the right
    g = gauss512.grid
    u = slave_u(gauss512.v, g)
    assert abs(u[-1]) < 1e-12
    assert abs(u[0]) > 0.1


def test_nu_plus_profile_convention(gauss512):
    nu = nu_plus_profile(gauss512.v, gauss512.grid)
    assert nu[-1] == pytest.approx(0.0, abs=1e-14)
    assert nu[0] == pytest.approx(-0.5 * 0.09 * np.sqrt(np.pi / 2), rel=1e-6)
    assert np.all(np.diff(nu) >= -1e-16)


def test_rk4_mass_rate_matches_flux(gauss512):
    # d/dt ||v||^2 = |u(-L)|^2 for the slaved flow; measure over one step
    g = gauss512.grid
    s0 = MTState.from_v(g, 0.0, gauss512.v)
    s1 = step_v(s0, 1e-3)
    mass = lambda s: g.h * np.sum(np.abs(s.v) ** 2)
    rate = (mass(s1) - mass(s0)) / 1e-3
    assert rate == pytest.approx(abs(s0.u[0]) ** 2, rel=0.05)


def test_step_v_fourth_order(gauss512):
    g = gauss512.grid
    s0 = MTState.from_v(g, 0.0, gauss512.v)
    coarse = step_v(s0, 2e-2)
    fine = step_v(step_v(s0, 1e-2), 1e-2)
    gap = np.max(np.abs(coarse.v - fine.v))
    finer = step_v(step_v(step_v(step_v(s0, 5e-3), 5e-3), 5e-3), 5e-3)
    gap2 = np.max(np.abs(fine.v - finer.v))
    assert np.log2(gap / gap2) > 3.5
    with pytest.raises(ValueError):
        step_v(s0, -1e-2)


def test_evolve_oracle_endpoint_spacing(gauss512):
    hist = evolve_oracle(gauss512, 0.01, 1e-3)
    assert len(hist) == 11
    assert hist[-1].t == pytest.approx(0.01)
    with pytest.raises(ValueError):
        evolve_oracle(gauss512, 0.0105, 1e-3)


def test_conservation_residuals_small_and_second_order():
    errs = []
    for n, dt in ((1024, 2e-3), (2048, 1e-3)):
        g = Grid.spatial(20.0, n)
        p = PotentialField.gaussian(g, 0.3)
        hist = evolve_oracle(p, 0.02, dt)
        errs.append(conservation_residuals(hist))
    assert errs[1]["law1_sup"] < 5e-4
    assert errs[1]["law2_sup"] < 5e-4
    order1 = np.log2(errs[0]["law1_sup"] / errs[1]["law1_sup"])
    assert order1 > 1.7


def test_constraint_residual_reported(gauss512):
    s = MTState.from_v(gauss512.grid, 0.0, gauss512.v)
    assert s.constraint_residual() < 1e-4


def test_dressing_audit(gauss512):
    s = MTState.from_v(gauss512.grid, 0.0, gauss512.v)
    coefs = dressing_coefficients(s)
    audit = coefs.audit()
    for tag in ("plus", "minus"):
        assert audit[f"det_j0_{tag}"] < 1e-12
        assert audit[f"offdiag_j1_{tag}"] < 1e-12
        assert audit[f"diag_j2_{tag}"] < 1e-12


def test_dressing_recurrence(gauss512):
    s = MTState.from_v(gauss512.grid, 0.0, gauss512.v)
    assert dressing_recurrence_defect(s) < 1e-4
