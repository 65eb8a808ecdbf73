"""Riemann-Hilbert machinery on the real z line.

The factorized problem splits into scalar chains per vector component:

    positive half line:  xi-  = e1 + P-( r-  e^{izx} eta+ )
                         eta+ = e2 + P+( conj(r+) e^{-izx} xi- )

    negative half line (delta-dressed reflection coefficients, unknowns
    xi+_d and eta-_d with the projections swapped accordingly).

Time enters only through r+-(t; z) = r+-(z) exp(it/z).  The essential
singularity at z = 0 is handled by replacing nodal samples inside a small
radius with exact cell averages, so the lattice sums downstream see the
correct integrated contribution instead of an aliased sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .numerics import CauchyKernel, ConvergenceError, Grid, ProjectionKind
from .direct import ScatteringData


class ConfigError(ValueError):
    """A run configuration is inconsistent with resolution limits."""


_GAUSS_N = 16
_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(_GAUSS_N)


@dataclass
class JumpData:
    z: np.ndarray
    t: float
    r_plus: np.ndarray        # time-phased, cell-averaged near the origin
    r_minus: np.ndarray
    r_plus0: np.ndarray       # t = 0 values, used by the scalar problem
    r_minus0: np.ndarray
    radius: float
    refined: np.ndarray       # bool mask of cell-averaged nodes

    @property
    def product(self) -> np.ndarray:
        """conj(r+) r- at t = 0; time invariant and real."""
        return np.conj(self.r_plus0) * self.r_minus0

    def jump_matrix(self, x: float, j: int) -> np.ndarray:
        rp, rm = self.r_plus[j], self.r_minus[j]
        e = np.exp(1j * self.z[j] * x)
        return np.array([[np.conj(rp) * rm, np.conj(rp) / e],
                         [rm * e, 0.0]])

    def tau_conjugation_defect(self, x: float) -> float:
        """tau1^-1 R tau1 and tau2^-1 R tau2 must agree (both equal S)."""
        worst = 0.0
        for j in range(0, self.z.size, max(1, self.z.size // 64)):
            k2 = 2.0 * np.sqrt(complex(self.z[j]))
            r = self.jump_matrix(x, j)
            t1 = np.diag([1.0, k2])
            t2 = np.diag([1.0 / k2, 1.0])
            d = np.linalg.inv(t1) @ r @ t1 - np.linalg.inv(t2) @ r @ t2
            worst = max(worst, float(np.max(np.abs(d))))
        return worst


def _cell_average(spline, z0: float, z1: float, t: float) -> complex:
    """(1/(z1-z0)) int_{z0}^{z1} spline(zeta) exp(it/zeta) dzeta.

    Mild cells (under a few radians of phase swing) go to fixed Gauss;
    heavy cells substitute w = 1/zeta and use the oscillatory-weight
    quadrature.  Below z_eps = sqrt(1e-10 |t|) the integral is dropped:
    one integration by parts bounds it by 1e-10 sup|r|.
    """
    width = z1 - z0
    zm = min(abs(z0), abs(z1))
    swing = abs(t) * width / max(zm, 1e-300) ** 2 if zm > 0 else np.inf
    if swing < 3.0:
        zeta = 0.5 * (z0 + z1) + 0.5 * width * _GAUSS_X
        vals = spline(zeta) * np.exp(1j * t / zeta)
        return 0.5 * np.dot(_GAUSS_W, vals)
    sign = 1.0 if z0 > 0 else -1.0
    lo, hi = (z0, z1) if sign > 0 else (-z1, -z0)
    z_eps = np.sqrt(1e-10 * abs(t))
    lo = max(lo, z_eps)
    if lo >= hi:
        return 0.0
    # w = 1/zeta: int f(zeta) e^{it/zeta} dzeta = int f(1/w) e^{itw} w^-2 dw
    a, b = 1.0 / hi, 1.0 / lo
    teff = sign * t

    def fre(w):
        return np.real(spline(sign / w)) / w ** 2

    def fim(w):
        return np.imag(spline(sign / w)) / w ** 2

    rc = quad(fre, a, b, weight="cos", wvar=teff, limit=400)[0]
    rs = quad(fre, a, b, weight="sin", wvar=teff, limit=400)[0]
    ic = quad(fim, a, b, weight="cos", wvar=teff, limit=400)[0]
    is_ = quad(fim, a, b, weight="sin", wvar=teff, limit=400)[0]
    return ((rc - is_) + 1j * (rs + ic)) / (z1 - z0)


def _phase_with_refinement(z: np.ndarray, r: np.ndarray, t: float,
                           radius: float) -> tuple[np.ndarray, np.ndarray]:
    out = r * np.exp(1j * t / z)
    refined = np.zeros(z.size, dtype=bool)
    if t == 0.0 or radius <= 0.0:
        return out, refined
    hz = z[1] - z[0]
    pos = z > 0
    refined = np.abs(z) < radius
    for mask in (pos & refined, (~pos) & refined):
        idx = np.nonzero(mask)[0]
        if idx.size == 0:
            continue
        branch = pos if z[idx[0]] > 0 else ~pos
        spline = CubicSpline(z[branch], r[branch])
        for j in idx:
            out[j] = _cell_average(spline, z[j] - 0.5 * hz, z[j] + 0.5 * hz, t)
    return out, refined


def nyquist_guard(t: float, hz: float, radius: float) -> None:
    """Outside the refined radius the phase exp(it/z) is sampled pointwise;
    demand under half a radian of phase change per cell at |z| = radius."""
    if abs(t) * hz > 0.5 * radius ** 2:
        need = np.sqrt(abs(t) * hz / 0.5)
        raise ConfigError(
            f"time phase under-resolved: |t|*hz/radius^2 = "
            f"{abs(t) * hz / radius ** 2:.3g} > 0.5; raise the refinement "
            f"radius to at least {need:.3g} or enlarge the z lattice")


def assemble_jump(scat: ScatteringData, t: float = 0.0,
                  radius: float = 1.0) -> JumpData:
    z = scat.z
    if t != 0.0 and radius > 0.0:
        nyquist_guard(t, float(z[1] - z[0]), radius)
        rp, ref = _phase_with_refinement(z, scat.r_plus, t, radius)
        rm, _ = _phase_with_refinement(z, scat.r_minus, t, radius)
    elif t != 0.0:
        # expert escape hatch: raw pointwise phase, no origin handling
        phase = np.exp(1j * t / z)
        rp, rm = scat.r_plus * phase, scat.r_minus * phase
        ref = np.zeros(z.size, dtype=bool)
    else:
        rp, rm = scat.r_plus.copy(), scat.r_minus.copy()
        ref = np.zeros(z.size, dtype=bool)
    return JumpData(z=z, t=t, r_plus=rp, r_minus=rm,
                    r_plus0=scat.r_plus, r_minus0=scat.r_minus,
                    radius=radius, refined=ref)


@dataclass
class DeltaData:
    z: np.ndarray
    log_jump: np.ndarray      # log(1 + conj(r+) r-), real
    delta_plus: np.ndarray
    delta_minus: np.ndarray

    def validate(self) -> dict:
        prod = np.abs(self.delta_plus * self.delta_minus)
        mult = self.delta_plus / self.delta_minus - np.exp(self.log_jump)
        edge = max(abs(self.delta_plus[0] - 1.0), abs(self.delta_plus[-1] - 1.0),
                   abs(self.delta_minus[0] - 1.0), abs(self.delta_minus[-1] - 1.0))
        return {"unit_modulus": float(np.max(np.abs(prod - 1.0))),
                "multiplicative_jump": float(np.max(np.abs(mult))),
                "edge_decay": float(edge)}


def solve_scalar_delta(jump: JumpData, kernel: CauchyKernel | None = None) -> DeltaData:
    """delta_pm = exp(P_pm log(1 + conj(r+) r-)).

    The argument of the log is 1/|a|^2 > 0, so the branch is trivial, and
    the product is time invariant: the phases of r+- cancel.
    """
    if kernel is None:
        zg = Grid(start=float(jump.z[0]), h=float(jump.z[1] - jump.z[0]),
                  n=jump.z.size)
        kernel = CauchyKernel(zg)
    q = np.log(1.0 + jump.product.real).astype(complex)
    dp = np.exp(kernel.project(q, ProjectionKind.PLUS))
    dm = np.exp(kernel.project(q, ProjectionKind.MINUS))
    return DeltaData(z=jump.z, log_jump=q.real, delta_plus=dp, delta_minus=dm)


@dataclass
class RHSolution:
    x: np.ndarray
    z: np.ndarray
    half_line: str                  # "+" or "-"
    first: np.ndarray               # (nx, 2, nz): xi- on "+", xi+_d on "-"
    second: np.ndarray              # (nx, 2, nz): eta+ on "+", eta-_d on "-"
    iterations: int
    residual: float
    audit_first: np.ndarray | None = None   # opposite-boundary columns
    audit_second: np.ndarray | None = None


def _chain_solve(kernel: CauchyKernel, mp: np.ndarray, mm: np.ndarray,
                 kind_first: ProjectionKind, kind_second: ProjectionKind,
                 tol: float = 1e-10, max_iter: int = 300,
                 damping: float = 0.8) -> tuple[np.ndarray, np.ndarray, int, float]:
    """Solve xi = e1 + P_a(mm * eta), eta = e2 + P_b(mp * xi) for 2-vector
    columns on a block of x rows; mp, mm have shape (nx, nz) and already
    carry the exp(+-izx) phases.  Gauss-Seidel sweeps with damping."""
    nx, nz = mp.shape
    xi = np.zeros((nx, 2, nz), complex)
    eta = np.zeros((nx, 2, nz), complex)
    xi[:, 0, :] = 1.0
    eta[:, 1, :] = 1.0
    last = np.inf
    for it in range(1, max_iter + 1):
        xi_new = kernel.project(mm[:, None, :] * eta, kind_first, axis=-1)
        xi_new[:, 0, :] += 1.0
        xi = (1.0 - damping) * xi + damping * xi_new
        eta_new = kernel.project(mp[:, None, :] * xi, kind_second, axis=-1)
        eta_new[:, 1, :] += 1.0
        step = float(np.max(np.abs(eta_new - eta)))
        eta = (1.0 - damping) * eta + damping * eta_new
        if step <= tol:
            break
        if it > 20 and step > 10.0 * last and step > 1.0:
            raise ConvergenceError(f"RH iteration diverging (step {step:.3g})")
        last = min(last, step)
    else:
        raise ConvergenceError(
            f"RH iteration did not reach {tol:g} in {max_iter} sweeps "
            f"(last step {step:.3g})")
    # settle both unknowns on the final consistent sweep
    xi = kernel.project(mm[:, None, :] * eta, kind_first, axis=-1)
    xi[:, 0, :] += 1.0
    eta_chk = kernel.project(mp[:, None, :] * xi, kind_second, axis=-1)
    eta_chk[:, 1, :] += 1.0
    resid = float(np.max(np.abs(eta_chk - eta)))
    return xi, eta_chk, it, resid


def _solve_half_line(jump: JumpData, x: np.ndarray, rp: np.ndarray,
                     rm: np.ndarray, kind_first: ProjectionKind,
                     kind_second: ProjectionKind, kernel: CauchyKernel | None,
                     chunk: int, callback, store: bool,
                     audit: bool) -> RHSolution:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = jump.z
    if kernel is None:
        zg = Grid(start=float(z[0]), h=float(z[1] - z[0]), n=z.size)
        kernel = CauchyKernel(zg)
    first = np.zeros((x.size, 2, z.size), complex) if store else None
    second = np.zeros_like(first) if store else None
    a_first = np.zeros_like(first) if (store and audit) else None
    a_second = np.zeros_like(first) if (store and audit) else None
    other = {ProjectionKind.PLUS: ProjectionKind.MINUS,
             ProjectionKind.MINUS: ProjectionKind.PLUS}
    iters, resid = 0, 0.0
    for lo in range(0, x.size, chunk):
        hi = min(lo + chunk, x.size)
        phase = np.exp(1j * np.outer(x[lo:hi], z))
        mm = rm[None, :] * phase
        mp = np.conj(rp)[None, :] / phase
        xi, eta, it, rs = _chain_solve(kernel, mp, mm, kind_first, kind_second)
        iters = max(iters, it)
        resid = max(resid, rs)
        if store:
            first[lo:hi] = xi
            second[lo:hi] = eta
            if audit:
                af = kernel.project(mm[:, None, :] * eta, other[kind_first], axis=-1)
                af[:, 0, :] += 1.0
                asec = kernel.project(mp[:, None, :] * xi, other[kind_second], axis=-1)
                asec[:, 1, :] += 1.0
                a_first[lo:hi] = af
                a_second[lo:hi] = asec
        if callback is not None:
            callback(lo, hi, xi, eta)
    return RHSolution(x=x, z=z, half_line="+" if kind_first is ProjectionKind.MINUS else "-",
                      first=first, second=second, iterations=iters,
                      residual=resid, audit_first=a_first, audit_second=a_second)


def solve_rh_positive(jump: JumpData, x: np.ndarray,
                      kernel: CauchyKernel | None = None, chunk: int = 256,
                      callback=None, store: bool = True,
                      audit: bool = False) -> RHSolution:
    """Unknowns (xi-, eta+) for x >= 0; callback(lo, hi, xi, eta) streams
    chunks so reconstruction can contract without storing the full cube."""
    return _solve_half_line(jump, x, jump.r_plus, jump.r_minus,
                            ProjectionKind.MINUS, ProjectionKind.PLUS,
                            kernel, chunk, callback, store, audit)


def solve_rh_negative(jump: JumpData, delta: DeltaData, x: np.ndarray,
                      kernel: CauchyKernel | None = None, chunk: int = 256,
                      callback=None, store: bool = True,
                      audit: bool = False) -> RHSolution:
    """Unknowns (xi+_d, eta-_d) for x <= 0, with the delta-dressed
    coefficients r_pm,delta = conj(delta+ delta-) r_pm."""
    w = np.conj(delta.delta_plus * delta.delta_minus)
    return _solve_half_line(jump, x, w * jump.r_plus, w * jump.r_minus,
                            ProjectionKind.PLUS, ProjectionKind.MINUS,
                            kernel, chunk, callback, store, audit)


def solve_rh_dense(jump: JumpData, x: float, positive: bool = True,
                   delta: DeltaData | None = None,
                   kernel: CauchyKernel | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Direct dense solve of one x row; quadratic memory in nz, meant for
    audits on modest lattices."""
    z = jump.z
    nz = z.size
    if nz > 2048:
        raise ConfigError("dense audit limited to nz <= 2048")
    if kernel is None:
        zg = Grid(start=float(z[0]), h=float(z[1] - z[0]), n=nz)
        kernel = CauchyKernel(zg)
    rp, rm = jump.r_plus, jump.r_minus
    if not positive:
        if delta is None:
            raise ValueError("negative half line needs delta")
        w = np.conj(delta.delta_plus * delta.delta_minus)
        rp, rm = w * rp, w * rm
        ka, kb = ProjectionKind.PLUS, ProjectionKind.MINUS
    else:
        ka, kb = ProjectionKind.MINUS, ProjectionKind.PLUS
    pa = kernel.dense_matrix(ka)
    pb = kernel.dense_matrix(kb)
    phase = np.exp(1j * z * x)
    A = pa @ np.diag(rm * phase)
    B = pb @ np.diag(np.conj(rp) / phase)
    eye = np.eye(nz)
    xi = np.zeros((2, nz), complex)
    eta = np.zeros((2, nz), complex)
    for c, (e_xi, e_eta) in enumerate(((1.0, 0.0), (0.0, 1.0))):
        rhs = e_xi * np.ones(nz) + A @ (e_eta * np.ones(nz))
        xi[c] = np.linalg.solve(eye - A @ B, rhs)
        eta[c] = e_eta + B @ xi[c]
    return xi, eta
