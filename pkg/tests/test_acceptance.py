"""Acceptance suite: twelve numbered criteria, one test each.

Every test prints a single "CRITERION k: PASS/FAIL ..." line before its
assertions, so a transcript of the run doubles as the acceptance report.
Criteria 8, 10 (t-equation half), and 12 probe the scattering-side time
evolution against the direct PDE integration for the default Gaussian seed;
the printed diagnostics record the measured obstruction when they fail.
"""

import dataclasses
import time

import numpy as np
import pytest

from thirring_ist.numerics import CauchyKernel, Grid
from thirring_ist.fields import PotentialField, check_admissibility
from thirring_ist.direct import scattering_coefficients, solve_jost, asymptotic_profiles
from thirring_ist.rh import assemble_jump, solve_scalar_delta
from thirring_ist.recon import reconstruct_state
from thirring_ist.oracle import evolve_oracle, conservation_residuals, nu_plus_profile
from thirring_ist.evolve import evolve_ist

L = 20.0
N = 2048


def _report(k: int, ok: bool, msg: str) -> None:
    print(f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {msg}")


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) / np.sum(np.abs(b) ** 2)))


@pytest.fixture(scope="module")
def g2048():
    return Grid.spatial(L, N)


@pytest.fixture(scope="module")
def p2048(g2048):
    return PotentialField.gaussian(g2048, 0.3)


@pytest.fixture(scope="module")
def zgrid2048():
    return Grid.spectral(L, N)


@pytest.fixture(scope="module")
def scat2048(p2048, zgrid2048):
    return scattering_coefficients(p2048, zgrid2048.nodes)


@pytest.fixture(scope="module")
def oracle_hist(p2048):
    # dt = 1e-3 RK4 with slaved u; states kept every 0.1 up to t = 1
    return evolve_oracle(p2048, 1.0, 1e-3, store_every=100)


def test_criterion_01_zero_potential():
    start = time.perf_counter()
    g = Grid.spatial(L, 256)
    p = PotentialField(g, np.zeros(256, complex), np.zeros(256, complex))
    zg = Grid.spectral(L, 256)
    scat = scattering_coefficients(p, zg.nodes)
    run = evolve_ist(p, None, [0.0])
    elapsed = time.perf_counter() - start
    worst = max(float(np.max(np.abs(scat.a - 1.0))),
                float(np.max(np.abs(scat.big_b))),
                float(np.max(np.abs(scat.r_plus))),
                float(np.max(np.abs(scat.r_minus))),
                float(np.max(np.abs(run.states[0].v))))
    ok = worst < 1e-13 and elapsed < 1.0
    _report(1, ok, f"zero potential worst defect {worst:.2e}, {elapsed:.2f}s")
    assert worst < 1e-13
    assert elapsed < 1.0


def test_criterion_02_unimodularity(p2048, zgrid2048):
    start = time.perf_counter()
    scat = scattering_coefficients(p2048, zgrid2048.nodes)
    elapsed = time.perf_counter() - start
    z = scat.z
    mod_b2 = np.abs(scat.big_b) ** 2 / (4.0 * np.abs(z))
    uni = np.abs(scat.a) ** 2 - np.sign(z) * mod_b2 - 1.0
    real_k = float(np.max(np.abs(uni[z > 0])))    # |a|^2 - |b|^2 = 1
    imag_k = float(np.max(np.abs(uni[z < 0])))    # |a|^2 + |b|^2 = 1
    ok = real_k < 1e-6 and imag_k < 1e-6 and elapsed < 30.0
    _report(2, ok, f"real-k defect {real_k:.2e}, imaginary-k defect "
                   f"{imag_k:.2e}, {elapsed:.1f}s")
    assert real_k < 1e-6
    assert imag_k < 1e-6
    assert elapsed < 30.0


def test_criterion_03_large_z_limit(p2048):
    # nu analytic for the Gaussian seed: 0.5 * |A|^2 * sqrt(pi/2)
    nu = 0.5 * 0.09 * np.sqrt(np.pi / 2.0)
    scat = scattering_coefficients(p2048, np.array([-100.0, 100.0]))
    worst = float(np.max(np.abs(scat.a - np.exp(1j * nu))))
    ok = worst <= 1e-3
    _report(3, ok, f"|a(+-100) - e^(i nu)| = {worst:.2e}")
    assert worst <= 1e-3


def test_criterion_04_reflection_relations(p2048, scat2048):
    rel = scat2048.validate()["reflection_relation"]

    # r(k) = b/a = -2k r_+(k^2) exactly as constructed, so oddness in k is
    # exact and the k -> 0 limit reduces to boundedness of r_+ near z = 0.
    # Direct evaluation at tiny k sits on the cancellation floor of the
    # Wronskian for B, so the limit is certified through that factorization.
    k = 0.3
    s = scattering_coefficients(p2048, np.array([k ** 2]))
    odd = float(np.abs(s.big_b[0] / (2.0 * k * s.a[0])
                       + s.big_b[0] / (-2.0 * k * s.a[0])))

    z_small = np.array([1e-4, 2.5e-4, 1e-3, 4e-3])
    rp = scattering_coefficients(p2048, z_small).r_plus
    bound = float(np.max(np.abs(rp)))
    spread = float(np.max(np.abs(rp - rp[0])))
    k_limit = 1e-9
    r_at_limit = 2.0 * k_limit * bound
    ok = rel <= 1e-12 and odd <= 1e-12 and spread < 1e-2 and r_at_limit < 1e-9
    _report(4, ok, f"r- + 4z r+ = {rel:.2e}, r(-k)+r(k) = {odd:.2e}, "
                   f"sup|r+| near 0 = {bound:.4f} (spread {spread:.1e}), "
                   f"|r({k_limit:g})| <= {r_at_limit:.2e}")
    assert rel <= 1e-12
    assert odd <= 1e-12
    assert spread < 1e-2
    assert r_at_limit < 1e-9


def test_criterion_05_delta_identity(scat2048, zgrid2048):
    jump = assemble_jump(scat2048, 0.0)
    delta = solve_scalar_delta(jump, CauchyKernel(zgrid2048))
    val = delta.validate()
    ok = val["unit_modulus"] <= 1e-8 and val["edge_decay"] <= 2e-3
    _report(5, ok, f"|delta+ delta-| - 1 = {val['unit_modulus']:.2e}, "
                   f"edge decay {val['edge_decay']:.2e}")
    assert val["unit_modulus"] <= 1e-8
    assert val["edge_decay"] <= 2e-3


def test_criterion_06_roundtrip():
    start = time.perf_counter()
    errs = {}
    for n in (1024, 2048):
        g = Grid.spatial(L, n)
        p = PotentialField.gaussian(g, 0.3)
        state = evolve_ist(p, None, [0.0]).states[0]
        mid = n // 2
        errs[n] = max(_rel_l2(state.v[:mid], p.v[:mid]),
                      _rel_l2(state.v[mid:], p.v[mid:]))
    elapsed = time.perf_counter() - start
    order = float(np.log2(errs[1024] / errs[2048]))
    ok = errs[2048] <= 1e-3 and order >= 1.0 and elapsed < 300.0
    _report(6, ok, f"half-line rel L2 {errs[2048]:.2e} at n=2048, "
                   f"order {order:.2f} under doubling, {elapsed:.0f}s")
    assert errs[2048] <= 1e-3
    assert order >= 1.0
    assert elapsed < 300.0


def test_criterion_07_volterra_vs_rh(p2048, g2048, scat2048, zgrid2048):
    jump = assemble_jump(scat2048, 0.0)
    kernel = CauchyKernel(zgrid2048)
    prof = asymptotic_profiles(p2048)
    rng = np.random.default_rng(7)
    idx = np.sort(rng.integers(N // 2, N, size=5))
    x = g2048.nodes[idx]
    from thirring_ist.rh import solve_rh_positive
    sol = solve_rh_positive(jump, x, kernel)
    m = solve_jost(p2048, jump.z, "+", "m", stride=1)
    worst = 0.0
    for row, j in enumerate(idx):
        mj = m.at_index(int(j))
        nu = prof.nu_plus[j]
        pred = np.vstack([np.exp(-1j * nu) * mj[0], np.exp(1j * nu) * mj[1]])
        worst = max(worst, float(np.max(np.abs(sol.first[row] - pred))))
    ok = worst <= 1e-5
    _report(7, ok, f"xi- vs e^(-i nu+ sigma3) m+ sup gap {worst:.2e} "
                   f"at x = {np.round(x, 3).tolist()}")
    assert worst <= 1e-5


def test_criterion_08_dynamics_vs_oracle(p2048, g2048, oracle_hist):
    start = time.perf_counter()
    run = evolve_ist(p2048, None, [1.0])
    ora = oracle_hist[-1]
    elapsed = time.perf_counter() - start
    assert abs(ora.t - 1.0) < 1e-9
    state = run.state_at(1.0)
    dist_v = _rel_l2(state.v, ora.v)
    dist_u = _rel_l2(state.u, ora.u)

    # obstruction diagnostics for this seed
    nu = nu_plus_profile(p2048.v, g2048)
    moment = g2048.h * np.sum(p2048.v * np.exp(2j * nu))
    drift = float(np.abs(run.initial_u[0]) ** 2)
    mass0 = g2048.h * float(np.sum(np.abs(p2048.v) ** 2))
    mass1 = g2048.h * float(np.sum(np.abs(ora.v) ** 2))
    ok = dist_v <= 1e-2 and dist_u <= 2e-2 and elapsed < 600.0
    _report(8, ok, f"t=1 rel L2: v {dist_v:.2e} (tol 1e-2), u {dist_u:.2e} "
                   f"(tol 2e-2), {elapsed:.0f}s; seed moment "
                   f"int v e^(2i nu+) = {moment:.4f} (nonzero), boundary mass "
                   f"influx |u(-L)|^2 = {drift:.3f}, oracle mass "
                   f"{mass0:.4f} -> {mass1:.4f} while the scattering flow "
                   f"conserves it")
    assert elapsed < 600.0
    assert dist_v <= 1e-2, (
        f"v distance {dist_v:.3e}: the slaved-u flow pumps mass through the "
        f"left boundary at rate {drift:.3f} for this seed (moment {moment:.4f}"
        f" != 0), while the scattering-side flow conserves it")
    assert dist_u <= 2e-2


def test_criterion_09_conservation_order():
    res = {}
    for n, dt in ((1024, 2e-3), (2048, 1e-3)):
        g = Grid.spatial(L, n)
        p = PotentialField.gaussian(g, 0.3)
        res[n] = conservation_residuals(evolve_oracle(p, 2 * dt, dt))
    sup = max(res[2048]["law1_sup"], res[2048]["law2_sup"])
    order = min(float(np.log2(res[1024][k] / res[2048][k]))
                for k in ("law1_sup", "law2_sup"))
    ok = sup <= 5e-4 and order >= 2.0
    _report(9, ok, f"residual sup {sup:.2e} at dt=1e-3 n=2048, order "
                   f"{order:.2f} under dt,h halving")
    assert sup <= 5e-4
    assert order >= 2.0


def test_criterion_10_mt_residuals(p2048):
    run = evolve_ist(p2048, None, [0.5], residual_dt=1e-3)
    state = run.state_at(0.5)
    r1 = state.residual_mt1
    r2 = state.residual_mt2
    ok = r1 <= 1e-3 and r2 <= 1e-2
    _report(10, ok, f"t=0.5 sup|i u_x + v - |v|^2 u| = {r1:.2e} (tol 1e-3), "
                    f"sup|i v_t + u - |u|^2 v| = {r2:.2e} (tol 1e-2); the "
                    f"x-equation holds by construction, the t-equation gap "
                    f"measures the flow mismatch for this seed")
    assert r1 <= 1e-3
    assert r2 <= 1e-2, (
        f"t-equation residual {r2:.3e}: the scattering-side time flow and "
        f"the slaved-u PDE flow disagree for seeds with nonzero moment "
        f"int v e^(2i nu+) dx")


def test_criterion_11_empirical_lipschitz():
    n = 512
    g = Grid.spatial(L, n)
    zg = Grid.spectral(L, n)
    p = PotentialField.gaussian(g, 0.3)
    w = np.exp(-(g.nodes / 1.5) ** 2).astype(complex)
    w /= np.sqrt(g.h * np.sum(np.abs(w) ** 2))
    base = scattering_coefficients(p, zg.nodes)
    hz = zg.h

    def scat_norm(d):
        return float(np.sqrt(hz * np.sum(np.abs(d) ** 2)))

    fwd = {}
    for eps in (1e-2, 1e-3):
        pe = PotentialField.from_samples(g, p.v + eps * w)
        se = scattering_coefficients(pe, zg.nodes)
        fwd[eps] = scat_norm(se.r_plus - base.r_plus) / eps

    kernel = CauchyKernel(zg)
    jump0 = assemble_jump(base, 0.0)
    delta0 = solve_scalar_delta(jump0, kernel)
    v_base = reconstruct_state(jump0, delta0, g, kernel).v
    inv = {}
    for eps in (1e-2, 1e-3):
        scaled = dataclasses.replace(
            base, big_b=(1.0 + eps) * base.big_b,
            r_plus=(1.0 + eps) * base.r_plus,
            r_minus=(1.0 + eps) * base.r_minus,
            big_b_int=(1.0 + eps) * base.big_b_int)
        jump = assemble_jump(scaled, 0.0)
        delta = solve_scalar_delta(jump, kernel)
        ve = reconstruct_state(jump, delta, g, kernel).v
        inv[eps] = float(np.sqrt(g.h * np.sum(np.abs(ve - v_base) ** 2))) \
            / scat_norm(eps * base.r_plus)

    q_fwd = fwd[1e-2] / fwd[1e-3]
    q_inv = inv[1e-2] / inv[1e-3]
    ok = 0.5 < q_fwd < 2.0 and 0.5 < q_inv < 2.0
    _report(11, ok, f"forward ratios {fwd[1e-3]:.3f}/{fwd[1e-2]:.3f} "
                    f"(quotient {q_fwd:.3f}), inverse ratios "
                    f"{inv[1e-3]:.3f}/{inv[1e-2]:.3f} (quotient {q_inv:.3f})")
    assert 0.5 < q_fwd < 2.0
    assert 0.5 < q_inv < 2.0


def test_criterion_12_a_time_invariance(p2048, g2048, oracle_hist):
    ora = oracle_hist[5]
    assert abs(ora.t - 0.5) < 1e-9
    z = (np.arange(-40, 40) + 0.5) * 0.25    # |z| <= 10, origin excluded
    a0 = scattering_coefficients(p2048, z).a
    pt = PotentialField.from_samples(g2048, ora.v)
    at = scattering_coefficients(pt, z).a
    gap = float(np.max(np.abs(at - a0)))
    mass = g2048.h * float(np.sum(np.abs(ora.v) ** 2))
    lam = check_admissibility(pt).lambda_plus
    ok = gap <= 1e-4
    _report(12, ok, f"sup |a(t=0.5) - a(0)| = {gap:.2e} over |z| <= 10; "
                    f"oracle mass grew to {mass:.3f} (lambda+ = {lam:.2f}), "
                    f"a is an invariant of the scattering flow but not of "
                    f"the slaved-u flow for this seed")
    assert gap <= 1e-4, (
        f"a drifted by {gap:.3e}: the PDE oracle does not preserve the "
        f"spectral data for seeds with nonzero moment int v e^(2i nu+) dx")
