"""Potential representation, norms, and admissibility gates.

The pipeline acts on a decaying complex potential v(x).  Two scalar checks
gate everything downstream: contraction of the Volterra operators
(lambda_plus < 1) and the crude lower bound on |a| that rules out spectral
zeros for small potentials.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .numerics import Grid, SampledFunction, quadrature, spectral_derivative


class AdmissibilityError(RuntimeError):
    """Potential violates the Volterra contraction condition."""


@dataclass
class PotentialField:
    grid: Grid
    v: np.ndarray
    dv: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        self.dv = np.asarray(self.dv, dtype=complex)
        if self.v.shape != (self.grid.n,) or self.dv.shape != (self.grid.n,):
            raise ValueError("v and dv must live on the grid")

    @classmethod
    def from_samples(cls, grid: Grid, v: np.ndarray, label: str = "",
                     derivative: str = "spectral") -> "PotentialField":
        dv = spectral_derivative(np.asarray(v, dtype=complex), grid,
                                 method="spectral" if derivative == "spectral" else "fd4")
        return cls(grid, v, dv, label)

    @classmethod
    def gaussian(cls, grid: Grid, amplitude: complex = 0.3, width: float = 1.0,
                 center: float = 0.0) -> "PotentialField":
        x = grid.nodes
        v = amplitude * np.exp(-((x - center) / width) ** 2)
        dv = v * (-2.0 * (x - center) / width ** 2)
        return cls(grid, v, dv, label=f"gaussian(a={amplitude},w={width})")

    @classmethod
    def sech(cls, grid: Grid, amplitude: complex = 0.3, width: float = 1.0,
             center: float = 0.0) -> "PotentialField":
        x = (grid.nodes - center) / width
        v = amplitude / np.cosh(x)
        dv = -v * np.tanh(x) / width
        return cls(grid, v, dv, label=f"sech(a={amplitude},w={width})")

    @classmethod
    def box(cls, grid: Grid, amplitude: complex = 0.3, width: float = 1.0,
            center: float = 0.0, edge: float | None = None) -> "PotentialField":
        # smoothed indicator: tanh edges a few cells wide keep v in H^2
        e = edge if edge is not None else 4.0 * grid.h
        x = grid.nodes - center
        lo = np.tanh((x + width) / e)
        hi = np.tanh((width - x) / e)
        v = amplitude * 0.25 * (1.0 + lo) * (1.0 + hi)
        dv = amplitude * 0.25 / e * ((1.0 - lo ** 2) * (1.0 + hi) - (1.0 + lo) * (1.0 - hi ** 2))
        return cls(grid, v, dv, label=f"box(a={amplitude},w={width})")

    @classmethod
    def from_family(cls, grid: Grid, family: str, amplitude: complex = 0.3,
                    width: float = 1.0, center: float = 0.0) -> "PotentialField":
        try:
            ctor = {"gaussian": cls.gaussian, "sech": cls.sech, "box": cls.box}[family]
        except KeyError:
            raise ValueError(f"unknown potential family {family!r}") from None
        return ctor(grid, amplitude=amplitude, width=width, center=center)

    @classmethod
    def from_csv(cls, path, grid: Grid | None = None) -> "PotentialField":
        xs, re, im = [], [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith(("#", "x")):
                    continue
                xs.append(float(row[0]))
                re.append(float(row[1]))
                im.append(float(row[2]) if len(row) > 2 else 0.0)
        xs = np.asarray(xs)
        if grid is None:
            h = xs[1] - xs[0]
            grid = Grid(start=xs[0], h=h, n=len(xs))
        v = np.interp(grid.nodes, xs, re) + 1j * np.interp(grid.nodes, xs, im)
        return cls.from_samples(grid, v, label=str(path))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re_v", "im_v"])
            for x, val in zip(self.grid.nodes, self.v):
                w.writerow([f"{x:.17e}", f"{val.real:.17e}", f"{val.imag:.17e}"])

    def derivative_defect(self) -> float:
        """Relative mismatch between dv and a fresh spectral derivative of v."""
        fresh = spectral_derivative(self.v, self.grid)
        scale = max(float(np.max(np.abs(fresh))), 1e-300)
        return float(np.max(np.abs(fresh - self.dv))) / scale


@dataclass
class NormReport:
    l2: float
    l1: float
    l21: float
    h1: float
    h2: float
    h11: float
    dv_l1: float

    def as_dict(self) -> dict:
        return dict(l2=self.l2, l1=self.l1, l21=self.l21, h1=self.h1,
                    h2=self.h2, h11=self.h11, dv_l1=self.dv_l1)


@dataclass
class Admissibility:
    lambda_plus: float
    a_lower_bound: float
    volterra_contractive: bool
    a_nonvanishing: bool
    v1_l1: float
    v2_l1: float
    neumann_bound: float

    def as_dict(self) -> dict:
        return dict(lambda_plus=self.lambda_plus, a_lower_bound=self.a_lower_bound,
                    volterra_contractive=self.volterra_contractive,
                    a_nonvanishing=self.a_nonvanishing, v1_l1=self.v1_l1,
                    v2_l1=self.v2_l1, neumann_bound=self.neumann_bound)


def _l2(grid: Grid, values: np.ndarray) -> float:
    f = SampledFunction(grid, np.abs(values) ** 2 + 0j)
    return float(np.sqrt(quadrature(f, grid.start, grid.start + grid.h * grid.n).real))


def _l1(grid: Grid, values: np.ndarray) -> float:
    f = SampledFunction(grid, np.abs(values) + 0j)
    return float(quadrature(f, grid.start, grid.start + grid.h * grid.n).real)


def norms(p: PotentialField) -> NormReport:
    x = p.grid.nodes
    weight = np.sqrt(1.0 + x ** 2)
    d2v = spectral_derivative(p.v, p.grid, order=2)
    l2 = _l2(p.grid, p.v)
    dv_l2 = _l2(p.grid, p.dv)
    d2_l2 = _l2(p.grid, d2v)
    l21 = _l2(p.grid, weight * p.v)
    dv_l21 = _l2(p.grid, weight * p.dv)
    return NormReport(
        l2=l2,
        l1=_l1(p.grid, p.v),
        l21=l21,
        h1=float(np.hypot(l2, dv_l2)),
        h2=float(np.sqrt(l2 ** 2 + dv_l2 ** 2 + d2_l2 ** 2)),
        h11=float(np.hypot(l21, dv_l21)),
        dv_l1=_l1(p.grid, p.dv),
    )


def check_admissibility(p: PotentialField) -> Admissibility:
    """Contraction constant of the Volterra operators and the small-potential
    lower bound on |a|; the entrywise-L1 norms of the transformed potentials
    V1, V2 both reduce to ||v||_2^2 + ||v||_1/2 + 2||v_x||_1."""
    r = norms(p)
    lam = 0.5 * r.l2 ** 2 + np.sqrt(r.l1 * r.dv_l1)
    v1_l1 = r.l2 ** 2 + 0.5 * r.l1 + 2.0 * r.dv_l1
    v2_l1 = v1_l1
    a_low = 1.0 - 0.5 * (r.l1 + r.l2 ** 2) * np.exp(v1_l1)
    return Admissibility(
        lambda_plus=float(lam),
        a_lower_bound=float(a_low),
        volterra_contractive=bool(lam < 1.0),
        a_nonvanishing=bool(a_low > 0.0),
        v1_l1=float(v1_l1),
        v2_l1=float(v2_l1),
        neumann_bound=float(np.exp(v2_l1)),
    )


def require_contractive(p: PotentialField) -> Admissibility:
    adm = check_admissibility(p)
    if not adm.volterra_contractive:
        raise AdmissibilityError(
            f"Volterra operators not contractive: lambda_plus = {adm.lambda_plus:.4g} >= 1"
        )
    return adm
