"""Command line entry point ``euler-geom`` with verbs ``solve``, ``verify`` and ``ym``.

Exit codes: 0 success, 1 failed checks, 2 solver blow-up, 3 configuration or
input error.  ``EULER_GEOM_THREADS`` caps the worker threads used by the
epsilon ladders of the singular-limit battery.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import diagnostics as dg
from .checks import SUITES, run_suite, table
from .errors import BlowUp, ConfigError, EulerGeomError
from .geometry import Family, Geometry
from .kernels import EntropyWeight, GasLaw
from .solver import PRESETS, Grid, InitialData, cell_state, run
from .youngmeasure import read_measure, reduction_check, residual_sup, support_interval

EXIT_OK, EXIT_FAIL, EXIT_BLOWUP, EXIT_CONFIG = 0, 1, 2, 3
DEFAULT_N = 1000


def schema() -> dict:
    text = resources.files("euler_geom").joinpath("schema/run_config.json").read_text()
    return json.loads(text)


@dataclass
class RunConfig:
    """A validated run: everything :func:`cmd_solve` needs, with preset defaults filled in."""

    law: GasLaw
    geometry: Geometry
    grid: Grid
    initial: InitialData | None
    n: int
    t_end: float
    cfl: float = 0.45
    snapshot_cadence: int = 10
    diagnostics: list[str] = field(default_factory=list)
    tail_energy_R: Optional[float] = None
    seed: int = 0
    output: Path = Path("out")
    preset: Optional[str] = None


def _read_table(path: Path, columns: Sequence[str]) -> tuple[np.ndarray, ...]:
    try:
        data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if data.dtype.names is None or not set(columns) <= set(data.dtype.names):
        raise ConfigError(f"table {path} must have columns {', '.join(columns)}")
    cols = tuple(np.atleast_1d(data[c]) for c in columns)
    if cols[0].size < 2 or np.any(np.diff(cols[0]) <= 0) or not all(np.all(np.isfinite(c)) for c in cols):
        raise ConfigError(f"table {path} needs at least two rows with increasing, finite x")
    return cols


def _table_data(path: Path) -> InitialData:
    x, rho, u = _read_table(path, ("x", "rho", "u"))
    if np.any(rho < 0):
        raise ConfigError("tabulated density must be non-negative")
    return InitialData(
        rho=lambda s: np.interp(s, x, rho, left=0.0, right=0.0),
        u=lambda s: np.interp(s, x, u, left=0.0, right=0.0),
        support=(float(x[0]), float(x[-1])),
        name=path.name,
    )


def load_config(path: str | Path, out: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Parse, validate against the schema and check cross-field constraints."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from exc

    base = path.parent
    law = GasLaw(float(raw["law"]["gamma"]))
    n = raw.get("n")
    init = raw["initial_data"]
    preset = init.get("preset")

    geometry = grid = t_end = data = None
    if preset == "inflow-spherical":
        if n is None:
            raise ConfigError("spherical runs need the approximation index n")
        alpha = raw.get("geometry", {}).get("alpha", 2.0)
        data, geometry, grid, t_end = PRESETS[preset](law, alpha=alpha, n=n)
    elif preset == "sod":
        data, geometry, grid, t_end = PRESETS[preset](law)
    elif preset == "rest":
        data, geometry, grid, t_end = PRESETS[preset]()
        data = None  # built exactly from cell values, see cmd_solve
    else:
        data = _table_data(base / init["table"])

    if "geometry" in raw:
        g = raw["geometry"]
        if g["family"] == "spherical":
            if n is None:
                raise ConfigError("spherical geometry needs the approximation index n")
            geometry = Geometry.spherical(float(g["alpha"]), n=n)
        elif "A0" in g:
            geometry = Geometry.constant(float(g["A0"]))
        else:
            x, A = _read_table(base / g["table"], ("x", "A"))
            if np.any(A <= 0):
                raise ConfigError("tabulated cross section must be positive")
            geometry = Geometry.nozzle_table(x, A)
    if geometry is None:
        raise ConfigError("geometry is required for tabulated initial data")
    if geometry.family is Family.SPHERICAL and n is None:
        raise ConfigError("spherical geometry needs the approximation index n")

    if "grid" in raw:
        gr = raw["grid"]
        if not gr["x_left"] < gr["x_right"]:
            raise ConfigError("grid: x_left must be below x_right")
        grid = Grid(float(gr["x_left"]), float(gr["x_right"]), int(gr["n_cells"]))
    if grid is None:
        raise ConfigError("grid is required for tabulated initial data")
    if "t_end" in raw:
        t_end = float(raw["t_end"])
    if t_end is None:
        raise ConfigError("t_end is required for tabulated initial data")

    diags = list(raw.get("diagnostics", ["mass", "energy"]))
    if "tail_energy" in diags and not geometry.is_constant:
        raise ConfigError("tail_energy needs a constant cross section")

    return RunConfig(
        law=law,
        geometry=geometry,
        grid=grid,
        initial=data,
        n=int(n if n is not None else DEFAULT_N),
        t_end=t_end,
        cfl=float(raw.get("cfl", 0.45)),
        snapshot_cadence=int(raw.get("snapshot_cadence", 10)),
        diagnostics=diags,
        tail_energy_R=raw.get("tail_energy_R"),
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        output=Path(out) if out is not None else base / raw.get("output", "out"),
        preset=preset,
    )


# --------------------------------------------------------------------------
# solve


def _series(traj, fn):
    return [(s.time, fn(s)) for s in traj]


def diagnostic_files(cfg: RunConfig, traj) -> dict[str, str]:
    """CSV text per requested diagnostic, keyed by file name."""
    T = traj[-1].time
    files = {}
    for name in cfg.diagnostics:
        if name == "mass":
            files["mass.csv"] = dg.csv_text("mass", "total mass", ["time", "value"], _series(traj, dg.mass))
        elif name == "energy":
            files["energy.csv"] = dg.csv_text("energy", "total energy", ["time", "value"], _series(traj, dg.energy))
        elif name == "entropy":
            psi = EntropyWeight.energy()
            rows = _series(traj, lambda s: dg.entropy_total(s, psi))
            files["entropy.csv"] = dg.csv_text("entropy s^2/2", "entropy total", ["time", "value"], rows)
            res = dg.entropy_residuals(traj, psi)
            files["entropy_production.csv"] = dg.csv_text(
                "entropy production s^2/2", "dissipation budget", ["time", "production", "net"],
                [(T, res.production, res.net)])
        elif name == "higher_integrability":
            hi = dg.higher_integrability(traj, T=T)
            files["higher_integrability.csv"] = dg.csv_text(
                "higher integrability", "space-time density integrability",
                ["time", "value", "pressure_weighted", "bound"], [(T, hi.functional, hi.pressure_weighted, hi.bound)])
        elif name == "hoelder":
            q = dg.hoelder_quotients(traj, seed=cfg.seed)
            files["hoelder.csv"] = dg.csv_text(
                "h-potential Hoelder quotients", "Hoelder continuity of h", ["time", "space", "time_quotient"], [(T, *q)])
        elif name == "flux_profile":
            prof = dg.flux_bound_profile(traj)
            files["flux_profile.csv"] = dg.csv_text("Q(y)", "weighted flux bound", ["y", "Q"], zip(prof.y, prof.Q))
        elif name == "energy_flux_moments":
            m = dg.energy_flux_moments(traj)
            files["energy_flux_moments.csv"] = dg.csv_text(
                "energy flux moments", "cubic velocity moments", ["time", "cubic", "pgamma_u"], [(T, *m)])
        elif name == "tail_energy":
            R = cfg.tail_energy_R or 2.0 * dg.max_initial_wave_speed(traj[0])
            te = dg.tail_energy(traj, R)
            files["tail_energy.csv"] = dg.csv_text(
                f"tail energy R={dg.shortest_repr(R)}", "propagation of the tail energy",
                ["time", "tail", "psi_total"], zip(te.times, te.tail, te.psi_total))
    return files


def _snapshot_text(sol) -> str:
    rows = zip(sol.grid.centers, sol.rho, sol.u)
    lines = ["x,rho,u"] + [",".join(dg.shortest_repr(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_solve(config: str | Path, out: Optional[str] = None, seed: Optional[int] = None) -> int:
    try:
        cfg = load_config(config, out, seed)
        start = (cell_state(1.0, 0.0, cfg.geometry, cfg.grid, cfg.law) if cfg.preset == "rest" else cfg.initial)
    except (ConfigError, EulerGeomError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        traj = run(start, cfg.geometry, cfg.n, cfg.grid, cfg.t_end, cfl=cfg.cfl, law=cfg.law,
                   snapshot_every=cfg.snapshot_cadence)
    except BlowUp as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except EulerGeomError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = cfg.output
    (out_dir / "snapshots").mkdir(parents=True, exist_ok=True)
    for k, sol in enumerate(traj):
        (out_dir / "snapshots" / f"snapshot_{k:05d}.csv").write_text(_snapshot_text(sol))
    for name, text in diagnostic_files(cfg, traj).items():
        (out_dir / name).write_text(text)
    print(f"{len(traj)} snapshots, t = {dg.shortest_repr(traj[-1].time)}, written to {out_dir}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify and ym


def cmd_verify(suite: str, seed: int = 0) -> int:
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    checks = run_suite(suite, seed=seed)
    sys.stdout.write(table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_ym(measure: str | Path, gamma: float) -> int:
    try:
        law = GasLaw(gamma)
        nu = read_measure(measure)
    except (OSError, EulerGeomError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rep = support_interval(nu, law)
    comps = " ".join(f"[{dg.shortest_repr(a)}, {dg.shortest_repr(b)}]" for a, b in rep.components) or "empty"
    print(f"support: {comps}")
    print(f"residual_sup: {dg.shortest_repr(residual_sup(nu, law))}")
    print(f"verdict: {reduction_check(nu, law).value}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not blow-ups
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="euler-geom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    s = sub.add_parser("solve", help="run the finite-volume solver from a JSON config")
    s.add_argument("--config", required=True, metavar="PATH")
    s.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    s.add_argument("--seed", type=int, help="seed for sampled diagnostics")
    v = sub.add_parser("verify", help="run an acceptance battery and print its table")
    v.add_argument("--suite", required=True, metavar="NAME", help=", ".join(SUITES))
    v.add_argument("--seed", type=int, default=0)
    y = sub.add_parser("ym", help="reduction check for a discrete Young measure")
    y.add_argument("--measure", required=True, metavar="PATH")
    y.add_argument("--gamma", required=True, type=float)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "solve":
        return cmd_solve(args.config, args.out, args.seed)
    if args.verb == "verify":
        return cmd_verify(args.suite, args.seed)
    return cmd_ym(args.measure, args.gamma)


if __name__ == "__main__":
    sys.exit(main())
