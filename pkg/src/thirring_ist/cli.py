"""Command-line surface: batch experiments over the pipeline with delimited
output, JSON reports, and rendered figures.

Commands: scatter, roundtrip, evolve, oracle-compare, norms.  Every command
reads one config file (key = value with sections), writes into an output
directory, and echoes a manifest so a rerun from the manifest reproduces the
outputs bit for bit.

Exit codes: 0 success, 1 config error, 2 admissibility, 3 partial failure,
4 convergence failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__
from .numerics import CauchyKernel, ConvergenceError, Grid
from .fields import AdmissibilityError, PotentialField, check_admissibility, norms
from .direct import scattering_coefficients, verify_symmetries
from .rh import ConfigError, assemble_jump, solve_rh_positive, solve_rh_dense, solve_scalar_delta
from .oracle import MTState, conservation_residuals, evolve_oracle
from .evolve import evolve_ist

SCHEMA_VERSION = 1
_PNG_META = {"Software": f"thirring-ist {__version__}"}


@dataclass
class RunConfig:
    L: float = 20.0
    n: int = 2048
    family: str = "gaussian"
    amplitude: float = 0.3
    width: float = 1.0
    potential_file: str | None = None
    times: list = dataclass_field(default_factory=list)
    oracle_dt: float = 1e-3
    tol_volterra: float = 1e-12
    tol_rh: float = 1e-10
    out_dir: str = "out"
    taper: bool = True
    dense_fallback: bool = False
    refine_origin: bool = True

    def validate(self) -> None:
        if self.L <= 0:
            raise ConfigError("grid.L must be positive")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError("grid.n must be a power of two, >= 8")
        if self.tol_volterra <= 0 or self.tol_rh <= 0:
            raise ConfigError("tolerances must be positive")
        if self.oracle_dt <= 0:
            raise ConfigError("times.oracle_dt must be positive")
        if any(t < 0 for t in self.times):
            raise ConfigError("times.values must be nonnegative")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("times.values must be strictly increasing")

    def as_dict(self) -> dict:
        return {
            "grid": {"L": self.L, "n": self.n},
            "potential": ({"file": self.potential_file} if self.potential_file
                          else {"family": self.family, "amplitude": self.amplitude,
                                "width": self.width}),
            "times": {"values": self.times, "oracle_dt": self.oracle_dt},
            "tolerances": {"volterra": self.tol_volterra, "rh": self.tol_rh},
            "outputs": {"directory": self.out_dir},
            "flags": {"taper": self.taper, "dense_fallback": self.dense_fallback,
                      "refine_origin": self.refine_origin},
        }


def _get(parser, section, key, cast, default, errors):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError:
        errors.append(f"{section}.{key}: cannot parse {raw!r}")
        return default


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not read:
        raise ConfigError(f"{path}: cannot read config file")
    errors: list[str] = []
    cfg = RunConfig()
    cfg.L = _get(parser, "grid", "L", float, cfg.L, errors)
    cfg.n = _get(parser, "grid", "n", int, cfg.n, errors)
    cfg.family = _get(parser, "potential", "family", str, cfg.family, errors)
    cfg.amplitude = _get(parser, "potential", "amplitude", float, cfg.amplitude, errors)
    cfg.width = _get(parser, "potential", "width", float, cfg.width, errors)
    cfg.potential_file = _get(parser, "potential", "file", str, None, errors)
    raw_times = _get(parser, "times", "values", str, "", errors)
    try:
        cfg.times = [float(tok) for tok in raw_times.replace(",", " ").split()]
    except ValueError:
        errors.append(f"times.values: cannot parse {raw_times!r}")
    cfg.oracle_dt = _get(parser, "times", "oracle_dt", float, cfg.oracle_dt, errors)
    cfg.tol_volterra = _get(parser, "tolerances", "volterra", float, cfg.tol_volterra, errors)
    cfg.tol_rh = _get(parser, "tolerances", "rh", float, cfg.tol_rh, errors)
    cfg.out_dir = _get(parser, "outputs", "directory", str, cfg.out_dir, errors)
    cfg.taper = _get(parser, "flags", "taper", bool, cfg.taper, errors)
    cfg.dense_fallback = _get(parser, "flags", "dense_fallback", bool, cfg.dense_fallback, errors)
    cfg.refine_origin = _get(parser, "flags", "refine_origin", bool, cfg.refine_origin, errors)
    if errors:
        raise ConfigError("; ".join(errors))
    cfg.validate()
    return cfg


def _potential(cfg: RunConfig) -> PotentialField:
    grid = Grid.spatial(cfg.L, cfg.n)
    if cfg.potential_file:
        return PotentialField.from_csv(cfg.potential_file, grid)
    if cfg.family == "zero":
        return PotentialField(grid, np.zeros(cfg.n, complex), np.zeros(cfg.n, complex),
                              label="zero")
    return PotentialField.from_family(grid, cfg.family, amplitude=cfg.amplitude,
                                      width=cfg.width)


def _json_dump(obj, path) -> None:
    payload = {"schema-version": SCHEMA_VERSION}
    payload.update(obj)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _manifest(cfg: RunConfig, command: str, out: Path, extra: dict | None = None) -> None:
    doc = {"command": command, "config": cfg.as_dict(), "version": __version__}
    if extra:
        doc.update(extra)
    _json_dump(doc, out / "manifest.json")


def _savefig(fig, path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def _write_scattering_csv(scat, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["z", "re_a", "im_a", "re_r_plus", "im_r_plus",
                    "re_r_minus", "im_r_minus"])
        for j, zv in enumerate(scat.z):
            w.writerow([f"{zv:.17e}",
                        f"{scat.a[j].real:.17e}", f"{scat.a[j].imag:.17e}",
                        f"{scat.r_plus[j].real:.17e}", f"{scat.r_plus[j].imag:.17e}",
                        f"{scat.r_minus[j].real:.17e}", f"{scat.r_minus[j].imag:.17e}"])


def _rel_l2(grid: Grid, a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.sqrt(grid.h * np.sum(np.abs(b) ** 2))), 1e-300)
    return float(np.sqrt(grid.h * np.sum(np.abs(a - b) ** 2))) / scale


def cmd_norms(cfg: RunConfig, out: Path, verbose: bool) -> int:
    p = _potential(cfg)
    rep = norms(p)
    adm = check_admissibility(p)
    p.to_csv(out / "potential.csv")
    _json_dump({"norms": rep.as_dict(), "admissibility": adm.as_dict()},
               out / "norms.json")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(p.grid.nodes, p.v.real, label="Re v")
    ax.plot(p.grid.nodes, p.v.imag, label="Im v")
    ax.plot(p.grid.nodes, np.abs(p.v), "--", label="|v|")
    ax.set_xlabel("x")
    ax.legend()
    _savefig(fig, out / "potential.png")
    _manifest(cfg, "norms", out)
    if verbose:
        print(json.dumps(rep.as_dict(), sort_keys=True))
    return 0


def cmd_scatter(cfg: RunConfig, out: Path, verbose: bool) -> int:
    p = _potential(cfg)
    adm = check_admissibility(p)
    _json_dump({"admissibility": adm.as_dict()}, out / "admissibility.json")
    if not adm.volterra_contractive:
        print(f"admissibility failure: lambda_plus = {adm.lambda_plus:.6g} >= 1",
              file=sys.stderr)
        return 2
    zgrid = Grid.spectral(cfg.L, cfg.n)
    scat = scattering_coefficients(p, zgrid.nodes)
    _write_scattering_csv(scat, out / "scattering.csv")
    sym = verify_symmetries(p, zgrid.nodes)
    _json_dump({"symmetries": {k: float(v) for k, v in sym.items()}},
               out / "symmetry-report.json")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(scat.z, np.abs(scat.a))
    axes[0].set_xlabel("z")
    axes[0].set_ylabel("|a|")
    axes[1].plot(scat.z, np.abs(scat.r_plus), label="|r+|")
    axes[1].plot(scat.z, np.abs(scat.r_minus), label="|r-|")
    axes[1].set_xlabel("z")
    axes[1].legend()
    _savefig(fig, out / "scattering.png")
    _manifest(cfg, "scatter", out)
    if verbose:
        print(json.dumps({k: float(v) for k, v in sym.items()}, sort_keys=True))
    return 0


def _dense_audit(jump, kernel, grid: Grid) -> float:
    """Spot check: iterative half-line solve against a direct dense solve at a
    few x >= 0 rows."""
    worst = 0.0
    for x in (0.0, grid.half_width / 4.0, grid.half_width / 2.0):
        sol = solve_rh_positive(jump, np.array([x]), kernel)
        xi, eta = solve_rh_dense(jump, x, positive=True, kernel=kernel)
        worst = max(worst,
                    float(np.max(np.abs(sol.first[0] - xi))),
                    float(np.max(np.abs(sol.second[0] - eta))))
    return worst


def cmd_roundtrip(cfg: RunConfig, out: Path, verbose: bool) -> int:
    p = _potential(cfg)
    try:
        run = evolve_ist(p, None, [0.0], taper=cfg.taper,
                         radius=1.0 if cfg.refine_origin else 0.0)
    except AdmissibilityError as exc:
        print(f"admissibility failure: {exc}", file=sys.stderr)
        return 2
    if run.failures:
        print(f"roundtrip failed: {run.failures}", file=sys.stderr)
        return 4 if any("converge" in m for m in run.failures.values()) else 3
    state = run.states[0]
    mid = p.grid.n // 2
    report = {
        "rel_l2_total": _rel_l2(p.grid, state.v, p.v),
        "rel_l2_negative": _rel_l2(p.grid, state.v[:mid], p.v[:mid]),
        "rel_l2_positive": _rel_l2(p.grid, state.v[mid:], p.v[mid:]),
        "seam_mismatch": state.seam_mismatch,
        "residual_mt1": state.residual_mt1,
        "phase_defect": state.diagnostics.get("phase_defect", 0.0),
    }
    if cfg.dense_fallback:
        zgrid = Grid.spectral(cfg.L, cfg.n)
        kernel = CauchyKernel(zgrid, taper=cfg.taper)
        jump = assemble_jump(run.scattering, 0.0)
        report["dense_audit"] = _dense_audit(jump, kernel, p.grid)
    state.to_csv(out / "state_t0.csv")
    _json_dump({"roundtrip": report}, out / "roundtrip-report.json")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(p.grid.nodes, np.abs(p.v), label="|v0|")
    ax.plot(p.grid.nodes, np.abs(state.v), "--", label="|v| reconstructed")
    ax.set_xlabel("x")
    ax.legend()
    _savefig(fig, out / "roundtrip.png")
    _manifest(cfg, "roundtrip", out)
    if verbose:
        print(json.dumps(report, sort_keys=True))
    return 0


def cmd_evolve(cfg: RunConfig, out: Path, verbose: bool) -> int:
    if not cfg.times:
        raise ConfigError("times.values required for evolve")
    p = _potential(cfg)
    try:
        run = evolve_ist(p, None, cfg.times, taper=cfg.taper,
                         radius=1.0 if cfg.refine_origin else 0.0)
    except AdmissibilityError as exc:
        print(f"admissibility failure: {exc}", file=sys.stderr)
        return 2
    residuals = []
    fig, ax = plt.subplots(figsize=(7, 4))
    for t, state, diag in zip(run.times, run.states, run.diagnostics):
        row = {"t": t}
        row.update({k: v for k, v in diag.items()})
        residuals.append(row)
        if state is None:
            continue
        state.to_csv(out / f"state_t{t:.6f}.csv")
        ax.plot(p.grid.nodes, np.abs(state.v), label=f"t={t:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("|v|")
    ax.legend()
    _savefig(fig, out / "evolve.png")
    _json_dump({"per_time": residuals, "failures": {str(k): v for k, v in run.failures.items()},
                "u0_mismatch": run.u0_mismatch}, out / "residual-report.json")
    _manifest(cfg, "evolve", out, {"times": run.times})
    if verbose:
        for row in residuals:
            print(json.dumps(row, sort_keys=True))
    return 3 if run.failures else 0


def cmd_oracle_compare(cfg: RunConfig, out: Path, verbose: bool) -> int:
    if not cfg.times:
        raise ConfigError("times.values required for oracle-compare")
    p = _potential(cfg)
    try:
        run = evolve_ist(p, None, cfg.times, taper=cfg.taper,
                         radius=1.0 if cfg.refine_origin else 0.0)
    except AdmissibilityError as exc:
        print(f"admissibility failure: {exc}", file=sys.stderr)
        return 2
    failed = dict(run.failures)
    rows = []
    oracle_at: dict[float, MTState] = {}
    cons = {"law1_sup": float("nan"), "law2_sup": float("nan")}
    try:
        with np.errstate(over="raise", invalid="raise"):
            t_final = cfg.times[-1]
            dt = cfg.oracle_dt
            history = evolve_oracle(p, t_final, dt) \
                if t_final > 0 else [MTState.from_v(p.grid, 0.0, p.v)]
            for t in cfg.times:
                nearest = min(history, key=lambda s: abs(s.t - t))
                if abs(nearest.t - t) <= 0.5 * dt:
                    oracle_at[t] = nearest
            if len(history) >= 3:
                cons = conservation_residuals(history[:3])
    except (FloatingPointError, OverflowError) as exc:
        failed["oracle"] = f"oracle integration diverged: {exc}"
    for t, state in zip(run.times, run.states):
        ora = oracle_at.get(t)
        row = {"t": t,
               "v_distance": _rel_l2(p.grid, state.v, ora.v)
               if state is not None and ora is not None else float("nan"),
               "u_distance": _rel_l2(p.grid, state.u, ora.u)
               if state is not None and ora is not None else float("nan"),
               "law1_sup": cons["law1_sup"], "law2_sup": cons["law2_sup"]}
        if state is None or ora is None:
            failed.setdefault(t, "missing state")
        rows.append(row)
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "v_distance", "u_distance", "law1_sup", "law2_sup"])
        for row in rows:
            w.writerow([f"{row[k]:.17e}" for k in
                        ("t", "v_distance", "u_distance", "law1_sup", "law2_sup")])
    fig, ax = plt.subplots(figsize=(7, 4))
    ts = [row["t"] for row in rows]
    ax.plot(ts, [row["v_distance"] for row in rows], "o-", label="v distance")
    ax.plot(ts, [row["u_distance"] for row in rows], "s-", label="u distance")
    ax.set_xlabel("t")
    ax.set_yscale("symlog", linthresh=1e-16)
    ax.legend()
    _savefig(fig, out / "comparison.png")
    _json_dump({"rows": rows, "failures": {str(k): v for k, v in failed.items()}},
               out / "comparison-report.json")
    _manifest(cfg, "oracle-compare", out)
    if verbose:
        for row in rows:
            print(json.dumps(row, sort_keys=True))
    return 3 if failed else 0


_COMMANDS = {
    "scatter": cmd_scatter,
    "roundtrip": cmd_roundtrip,
    "evolve": cmd_evolve,
    "oracle-compare": cmd_oracle_compare,
    "norms": cmd_norms,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="thirring-ist",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True, help="path to the run config")
    ap.add_argument("--out", default=None, help="output directory override")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out is not None else cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out, args.verbose)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except AdmissibilityError as exc:
        print(f"admissibility failure: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
