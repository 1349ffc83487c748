"""Config-driven entry point.

A run is described by one TOML file holding an optional ``[run]`` table and
exactly one command table, e.g.::

    [run]
    seed = 0

    [permeability]
    d = 2
    hole_shape = "ball"
    eta_sequence = [0.4, 0.3, 0.2]
    resolution = 64

Exit codes: 0 ok, 2 config error, 3 precondition violation,
4 solver non-convergence, 5 degraded report (skipped rows).
"""
import argparse
import math
import os
import re
import sys
import time
from pathlib import Path

import numpy as np
import tomli

from . import kernels
from .errors import ConfigError, NonConvergenceError, PerfhomError, PreconditionError
from .io import write_csv, write_field, write_json, write_mask

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NONCONVERGENCE, EXIT_DEGRADED = 0, 2, 3, 4, 5

_NUM = (int, float)
_REQ = object()

_SHAPE = {"hole_shape": (str, "ball"), "aspect": (list, None)}
_TOL = {"tol": (float, 1e-10)}
_SWEEP = {
    "d": (int, 3), "alpha": (_NUM, 1.0), "eps_sequence": (list, [0.25, 0.125]),
    "cells_per_period": (int, 8), "viscosity": (_NUM, 1.0), "forcing": (str, "rotational"),
    "forcing_amplitude": (_NUM, 1.0), "time_dependent": (bool, False), "initial": (str, "zero"),
    "horizon_seconds": (_NUM, 1.0), "n_steps": (int, 8), "radius_ratio": (_NUM, 0.25),
    "scheme": (str, None), "dump_fields": (bool, False), **_SHAPE, **_TOL,
}

SCHEMAS = {
    "run": {"seed": (int, 0), "output": (str, None), "threads": (int, None)},
    "cell": {"d": (int, _REQ), "eta": (_NUM, _REQ), "resolution": (int, 32),
             "direction": (int, 1), "c_eta": (_NUM, None), "dump_fields": (bool, False),
             **_SHAPE, **_TOL},
    "permeability": {"d": (int, _REQ), "eta_sequence": (list, _REQ),
                     "resolution": ((int, list), 64), **_SHAPE, **_TOL},
    "simulate": {"d": (int, 2), "resolution": (int, 32), "eps": (_NUM, None),
                 "alpha": (_NUM, None), "a_eps": (_NUM, None), "radius_ratio": (_NUM, 0.25),
                 "viscosity": (_NUM, 1.0), "time_scaled": (bool, False),
                 "forcing": (str, "zero"), "forcing_amplitude": (_NUM, 1.0),
                 "time_dependent": (bool, False), "initial": (str, "zero"),
                 "horizon_seconds": (_NUM, 1.0), "time_step_seconds": (_NUM, _REQ),
                 "cfl": (_NUM, 0.5), "scheme": (str, "projection"), "snapshot_every": (int, 1),
                 "dump_frames": (bool, False), **_SHAPE, "tol": (float, 1e-12)},
    "darcy": {"d": (int, 2), "resolution": (int, 32), "permeability": (list, _REQ),
              "viscosity": (_NUM, 1.0), "forcing": (str, "rotational"),
              "forcing_amplitude": (_NUM, 1.0), "time_seconds": (_NUM, 0.0),
              "dump_fields": (bool, False), "tol": (float, 1e-12)},
    "sweep-small": {**_SWEEP, "proxy": (str, None), "alpha_sequence": (list, [1.5, 2.0, 3.0, 4.0]),
                    "resolution": (int, None), "unresolved": (str, "skip")},
    "sweep-large": {**_SWEEP, "cell_resolution": (int, None),
                    "eta_sequence": (list, [0.4, 0.3, 0.2])},
    "poincare": {"d": (int, 3), "alpha": (_NUM, 1.0), "eps_sequence": (list, [0.25, 0.125, 0.0625]),
                 "cells_per_period": (int, 8), "radius_ratio": (_NUM, 0.25),
                 "unperforated_resolution": (int, None), "rtol": (_NUM, 1e-6), **_SHAPE},
}
COMMANDS = tuple(k for k in SCHEMAS if k != "run")


# -- parsing and validation ----------------------------------------------------


def _line_index(text):
    """Map (section, key) -> 1-based line number by a light scan of the TOML text."""
    out = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", s)
        if m:
            section = m.group(1).strip('"')
            out[(section, None)] = no
            continue
        m = re.match(r"^([A-Za-z0-9_\-\"]+)\s*=", s)
        if m:
            out[(section, m.group(1).strip('"'))] = no
    return out


class Diagnostics(list):
    def add(self, lines, section, key, message):
        no = lines.get((section, key)) or lines.get((section, None))
        prefix = f"line {no}: " if no else ""
        where = f"[{section}]" + (f".{key}" if key else "") if section else ""
        self.append(f"{prefix}{where} {message}".strip())


def _type_ok(value, typ):
    if typ is float or typ == _NUM:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(typ, tuple):
        return any(_type_ok(value, t) for t in typ)
    if typ is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, typ)


def parse_config(path):
    """Parse and schema-check a config file; returns (command, params, run, diagnostics, lines)."""
    diags = Diagnostics()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        diags.append(f"cannot read config: {exc}")
        return None, {}, {}, diags, {}
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        diags.append(f"config does not parse: {exc}")
        return None, {}, {}, diags, {}
    lines = _line_index(text)
    for key, value in data.items():
        if not isinstance(value, dict):
            diags.add(lines, None, None, f"top-level key {key!r} outside any section")
    sections = [k for k, v in data.items() if isinstance(v, dict)]
    unknown = [s for s in sections if s not in SCHEMAS]
    for s in unknown:
        diags.add(lines, s, None, f"unknown section (commands: {', '.join(COMMANDS)})")
    cmds = [s for s in sections if s in COMMANDS]
    if len(cmds) != 1:
        diags.append(f"config must contain exactly one command section, found {cmds or 'none'}")
        return None, {}, {}, diags, lines
    command = cmds[0]
    resolved = {}
    for section in ("run", command):
        schema = SCHEMAS[section]
        given = data.get(section, {})
        out = {}
        for key, value in given.items():
            if key not in schema:
                diags.add(lines, section, key, "unknown key")
                continue
            typ = schema[key][0]
            if not _type_ok(value, typ):
                diags.add(lines, section, key, f"has type {type(value).__name__}, expected "
                          f"{getattr(typ, '__name__', 'number')}")
                continue
            out[key] = float(value) if typ == _NUM or typ is float else value
        for key, (_, default) in schema.items():
            if key not in out:
                if default is _REQ:
                    if key not in given:
                        diags.add(lines, section, None, f"missing required key {key!r}")
                else:
                    out[key] = default
        resolved[section] = out
    return command, resolved.get(command, {}), resolved.get("run", {}), diags, lines


def _precondition_checks(command, p, diags, lines):
    """Cheap precondition checks (no solves) shared by validate and run."""
    from .geometry import PerforationSpec, Regime, classify_regime

    sec = command

    def spec_for(eps, alpha, res, a_eps=None):
        try:
            spec = PerforationSpec(d=p["d"], eps=eps, alpha=alpha, a_eps=a_eps,
                                   hole_shape=p.get("hole_shape", "ball"),
                                   radius_ratio=p.get("radius_ratio", 0.25),
                                   aspect=tuple(p["aspect"]) if p.get("aspect") else None)
        except PreconditionError as exc:
            diags.add(lines, sec, None, f"eps={eps}: {exc}")
            return None
        h = 1.0 / res
        inner = 2.0 * spec.deltas[0] * spec.hole_scale
        if len(spec.lattice()) and inner < 2.0 * h:
            diags.add(lines, sec, None,
                      f"under-resolved hole at eps={eps}, alpha={alpha}: diameter {inner:.4g} "
                      f"spans fewer than 2 cells of size {h:.4g}")
        return spec

    if "d" in p and p["d"] not in (2, 3):
        diags.add(lines, sec, "d", "dimension must be 2 or 3")
        return
    if p.get("hole_shape") not in (None, "ball", "ellipsoid", "box"):
        diags.add(lines, sec, "hole_shape", "must be ball, ellipsoid or box")
    if command in ("sweep-small", "sweep-large", "poincare"):
        eps_seq = [float(e) for e in p["eps_sequence"]]
        if any(b >= a for a, b in zip(eps_seq, eps_seq[1:])):
            diags.add(lines, sec, "eps_sequence", "must be strictly decreasing")
        alphas = [p["alpha"]]
        if command == "sweep-small" and p.get("proxy") == "alpha":
            alphas = [float(a) for a in p["alpha_sequence"]]
            eps_seq = eps_seq[:1]
        if command == "sweep-large":
            regime = classify_regime(p["d"], p["alpha"])
            if regime is Regime.CRITICAL:
                diags.add(lines, sec, "alpha", "critical regime unsupported, see classify_regime")
            elif regime is not Regime.LARGE_HOLES:
                diags.add(lines, sec, "alpha",
                          f"regime {regime.value} is not LargeHoles, see classify_regime")
        if command == "sweep-small":
            if p.get("proxy") not in (None, "alpha"):
                diags.add(lines, sec, "proxy", "proxy must be 'alpha' or absent")
            if p.get("unresolved") not in ("skip", "mask"):
                diags.add(lines, sec, "unresolved", "must be 'skip' or 'mask'")
            if p.get("proxy") is None:
                regime = classify_regime(p["d"], p["alpha"])
                if regime is Regime.CRITICAL:
                    diags.add(lines, sec, "alpha",
                              "critical regime unsupported, see classify_regime")
                elif regime is not Regime.SMALL_HOLES:
                    diags.add(lines, sec, "alpha", f"regime {regime.value} is not SmallHoles "
                              "(set proxy = \"alpha\" for the fixed-eps proxy)")
        tolerate = command == "sweep-small" and p.get("unresolved") == "mask"
        for eps in eps_seq:
            if command == "sweep-small" and p.get("resolution"):
                res = p["resolution"]
            else:
                n = p["cells_per_period"] / eps
                if abs(n - round(n)) > 1e-9:
                    diags.add(lines, sec, "cells_per_period",
                              f"cells_per_period/eps = {n:.6g} is not an integer")
                    continue
                res = int(round(n))
            for alpha in alphas:
                if alpha < 1:
                    diags.add(lines, sec, "alpha", "alpha must be >= 1")
                    continue
                before = len(diags)
                spec_for(eps, alpha, res)
                if tolerate:
                    del diags[before:]
    elif command == "simulate":
        if p.get("eps") is not None:
            if (p.get("alpha") is None) == (p.get("a_eps") is None):
                diags.add(lines, sec, None, "give exactly one of alpha or a_eps with eps")
            else:
                spec_for(p["eps"], p.get("alpha"), p["resolution"], p.get("a_eps"))
        if p["scheme"] not in ("projection", "coupled"):
            diags.add(lines, sec, "scheme", "must be projection or coupled")
        dt = p.get("time_step_seconds")
        if dt is not None and dt <= 0:
            diags.add(lines, sec, "time_step_seconds", "must be positive")
        if p["viscosity"] <= 0:
            diags.add(lines, sec, "viscosity", "must be positive")
        if dt is not None and p["horizon_seconds"] > 0:
            steps = p["horizon_seconds"] / dt
            if steps > 1e6:
                diags.add(lines, sec, "time_step_seconds",
                          f"{steps:.3g} steps requested; CFL feasibility estimate exceeded")
            if p["initial"] == "vortex" and dt > p["cfl"] / p["resolution"]:
                diags.add(lines, sec, "time_step_seconds",
                          "advective CFL estimate dt <= cfl*h/max|u0| violated "
                          "(steps will be reduced at run time)")
    elif command == "cell":
        from .geometry import build_cell_geometry

        if not 1 <= p.get("direction", 1) <= p["d"]:
            diags.add(lines, sec, "direction", f"must lie in 1..{p['d']}")
        if p.get("eta", 0) <= 0:
            diags.add(lines, sec, "eta", "eta = 0 leaves no obstacle (singular cell problem)")
        else:
            try:
                build_cell_geometry(p["d"], p["eta"], p["hole_shape"], p["resolution"],
                                    aspect=tuple(p["aspect"]) if p.get("aspect") else None)
            except PreconditionError as exc:
                diags.add(lines, sec, "eta", str(exc))
    elif command == "permeability":
        etas = [float(e) for e in p.get("eta_sequence", [])]
        if len(etas) < 3 or any(b >= a for a, b in zip(etas, etas[1:])):
            diags.add(lines, sec, "eta_sequence", "must be strictly decreasing with length >= 3")
    elif command == "darcy":
        A = np.atleast_2d(np.asarray(p["permeability"], dtype=float))
        if A.shape == (1, p["d"]):
            A = np.diag(A[0])
        if A.shape != (p["d"], p["d"]):
            diags.add(lines, sec, "permeability", f"needs {p['d']} diagonal entries or a matrix")
        elif np.linalg.eigvalsh(0.5 * (A + A.T)).min() <= 0:
            diags.add(lines, sec, "permeability", "must be positive definite")


def validate(config_file_path):
    """Full precondition check without any solves; returns a list of messages."""
    command, params, _, diags, lines = parse_config(config_file_path)
    if command is not None:
        try:
            _precondition_checks(command, params, diags, lines)
        except (KeyError, TypeError, ValueError):
            pass  # already reported as a schema problem
    return list(diags)


# -- execution -----------------------------------------------------------------


def _aspect(p):
    return tuple(p["aspect"]) if p.get("aspect") else None


def _sweep_config(p, command):
    from .homogenize import SweepConfig

    kw = dict(d=p["d"], alpha=p["alpha"], eps_sequence=tuple(p["eps_sequence"]),
              cells_per_period=p["cells_per_period"], mu=p["viscosity"], forcing=p["forcing"],
              forcing_amplitude=p["forcing_amplitude"], time_dependent=p["time_dependent"],
              initial=p["initial"], horizon=p["horizon_seconds"], n_steps=p["n_steps"],
              hole_shape=p["hole_shape"], radius_ratio=p["radius_ratio"], aspect=_aspect(p),
              scheme=p["scheme"], tol=p["tol"])
    if command == "sweep-small":
        kw.update(proxy=p["proxy"], alpha_sequence=tuple(p["alpha_sequence"]),
                  resolution=p["resolution"], unresolved=p["unresolved"])
    else:
        kw.update(cell_resolution=p["cell_resolution"], eta_sequence=tuple(p["eta_sequence"]))
    return SweepConfig(**kw)


def _run_cell(p, out, echo):
    from .cell import cell_norm_report, solve_cell
    from .geometry import build_cell_geometry

    geo = build_cell_geometry(p["d"], p["eta"], p["hole_shape"], p["resolution"], aspect=_aspect(p))
    sol = solve_cell(geo, p["c_eta"], p["direction"] - 1, tol=p["tol"])
    report = {"config": echo, "eta": geo.eta, "c_eta": sol.c_eta, "direction": p["direction"],
              "fluid_fraction": geo.fluid_fraction, "norms": sol.norms,
              "norm_report": cell_norm_report(sol), "iterations": sol.iterations,
              "relative_residual": sol.relative_residual, "divergence_max": sol.divergence_max}
    write_json(out / "report.json", report)
    if p["dump_fields"]:
        meta = {"spacing": list(geo.grid.spacing), "time": 0.0}
        write_field(out / "cell_w", sol.w, field="velocity", **meta)
        write_field(out / "cell_q", sol.q, field="pressure", **meta)
    return report, False


def _run_permeability(p, out, echo):
    from .cell import permeability_limit

    res = p["resolution"]
    perm = permeability_limit(p["hole_shape"], p["d"], p["eta_sequence"], res, tol=p["tol"],
                              aspect=_aspect(p))
    report = {"config": echo, **perm.to_dict()}
    write_json(out / "report.json", report)
    rows = []
    for t in perm.tensors:
        for i, nr in enumerate(t.norm_reports):
            rows.append([t.eta, t.c_eta, i + 1, nr["grad_ratio"], nr["w_norm"], nr["q_ratio"]])
    write_csv(out / "norm_report.csv", ["eta", "c_eta", "direction", "grad_ratio", "w_norm",
                                        "q_ratio"], rows)
    return report, False


def _run_simulate(p, out, echo):
    from .geometry import PerforationSpec, build_perforated_mask, full_box_mask
    from .homogenize import make_forcing, make_initial
    from .nse import FlowProblem, energy_residual, simulate

    d = p["d"]
    if p["eps"] is not None:
        spec = PerforationSpec(d=d, eps=p["eps"], alpha=p["alpha"], a_eps=p["a_eps"],
                               hole_shape=p["hole_shape"], radius_ratio=p["radius_ratio"],
                               aspect=_aspect(p))
        mask = build_perforated_mask(spec, p["resolution"])
        sigma = spec.scaling().sigma
    else:
        mask = full_box_mask(d, p["resolution"])
        sigma = 1.0
    problem = FlowProblem(
        mask, mu=p["viscosity"], time_scale=sigma ** 2 if p["time_scaled"] else 1.0,
        u0=make_initial(p["initial"], d),
        f=make_forcing(p["forcing"], d, p["forcing_amplitude"], p["time_dependent"]),
        T=p["horizon_seconds"], dt=p["time_step_seconds"], cfl=p["cfl"], scheme=p["scheme"],
        tol=p["tol"], snapshot_every=p["snapshot_every"])
    traj = simulate(problem)
    traj.write_ledger(out / "ledger.csv")
    _, smin = energy_residual(traj)
    report = {"config": echo, "info": traj.info, "min_slack": smin,
              "energy_scale": traj.energy_scale, "max_divergence": max(traj.divergence_max),
              "final_time": traj.times[-1], "sigma_eps": sigma, "porosity": mask.porosity,
              "hole_count": mask.hole_count}
    write_json(out / "report.json", report)
    write_mask(out / "mask", mask)
    if p["dump_frames"]:
        traj.dump_frames(out / "frames")
    return report, False


def _run_darcy(p, out, echo):
    from .darcy import DarcyProblem, solve_darcy
    from .homogenize import make_forcing

    d = p["d"]
    A = np.atleast_2d(np.asarray(p["permeability"], dtype=float))
    if A.shape == (1, d):
        A = np.diag(A[0])
    f = make_forcing(p["forcing"], d, p["forcing_amplitude"])
    problem = DarcyProblem(A=A, mu=p["viscosity"], f=f, resolution=p["resolution"], d=d,
                           tol=p["tol"])
    sol = solve_darcy(problem, p["time_seconds"])
    vol = problem.grid.cell_volume
    report = {"config": echo, "flux_residual": sol.flux_residual, "wall_flux": sol.wall_flux,
              "velocity_L2": math.sqrt(float(np.vdot(sol.u_faces, sol.u_faces)) * vol),
              "pressure_L2": math.sqrt(float(np.vdot(sol.p, sol.p)) * vol),
              "metadata": sol.metadata}
    write_json(out / "report.json", report)
    if p["dump_fields"]:
        meta = {"spacing": list(problem.grid.spacing), "time": p["time_seconds"]}
        write_field(out / "darcy_u", sol.u_faces, field="velocity", **meta)
        write_field(out / "darcy_p", sol.p, field="pressure", **meta)
    return report, False


def _run_sweep(p, out, echo, command):
    from .homogenize import run_large_holes_sweep, run_small_holes_sweep

    cfg = _sweep_config(p, command)
    runner = run_small_holes_sweep if command == "sweep-small" else run_large_holes_sweep
    rep = runner(cfg)
    report = {"config": echo, **rep.to_dict()}
    write_json(out / "report.json", report)
    header, rows = rep.csv_rows()
    write_csv(out / "report.csv", header, rows)
    return report, rep.degraded


def _run_poincare(p, out, echo):
    from .geometry import full_box_mask
    from .homogenize import poincare_constant, poincare_sweep

    rep = poincare_sweep(p["d"], p["alpha"], tuple(p["eps_sequence"]), p["cells_per_period"],
                         p["hole_shape"], p["radius_ratio"], rtol=p["rtol"])
    report = {"config": echo, **rep.to_dict()}
    if p["unperforated_resolution"]:
        n = p["unperforated_resolution"]
        cp = poincare_constant(full_box_mask(p["d"], n), rtol=p["rtol"])
        report["unperforated"] = {"resolution": n, "C_P": cp,
                                  "analytic": 1.0 / math.sqrt(p["d"] * math.pi ** 2)}
    write_json(out / "report.json", report)
    write_csv(out / "report.csv", ["eps", "sigma_eps", "C_P", "ratio"],
              [[r["eps"], r["sigma_eps"], r["C_P"], r["ratio"]] for r in rep.rows])
    return report, False


RUNNERS = {
    "cell": _run_cell, "permeability": _run_permeability, "simulate": _run_simulate,
    "darcy": _run_darcy, "poincare": _run_poincare,
    "sweep-small": lambda p, o, e: _run_sweep(p, o, e, "sweep-small"),
    "sweep-large": lambda p, o, e: _run_sweep(p, o, e, "sweep-large"),
}


class _Lock:
    def __init__(self, directory):
        self.path = Path(directory) / ".perfhom.lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(f"output directory {self.path.parent} is locked by another run "
                              f"(remove {self.path} if stale)") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass


def run(config_file_path, output=None, threads=None):
    """Execute a config; returns the exit status."""
    command, params, run_opts, diags, lines = parse_config(config_file_path)
    if command is None or diags:
        for msg in diags:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    _precondition_checks(command, params, diags, lines)
    if command in ("sweep-small", "sweep-large"):
        # sweeps skip unresolvable rows with a reason and report as degraded
        for msg in [m for m in diags if "under-resolved hole" in m]:
            print(f"warning: {msg} (row will be skipped)", file=sys.stderr)
        diags = [m for m in diags if "under-resolved hole" not in m]
    if diags:
        for msg in diags:
            print(f"precondition: {msg}", file=sys.stderr)
        return EXIT_PRECONDITION
    out = Path(output or run_opts.get("output") or f"perfhom-{command}")
    n_threads = threads or run_opts.get("threads") or kernels.threads_from_env(1)
    kernels.set_num_threads(n_threads)
    echo = {"command": command, "params": params, "run": {"seed": run_opts.get("seed", 0)}}
    try:
        with _Lock(out):
            start = time.perf_counter()
            _, degraded = RUNNERS[command](params, out, echo)
            write_json(out / "run_meta.json", {
                "command": command, "seconds": time.perf_counter() - start,
                "threads": n_threads, "backend": kernels.BACKEND,
                "config_path": str(Path(config_file_path).resolve())})
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except PerfhomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    if degraded:
        print("report degraded: some rows were skipped", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def main(argv=None):
    ap = argparse.ArgumentParser(prog="perfhom", description=__doc__.split("\n")[0])
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--validate-only", action="store_true", help="check preconditions, no compute")
    ap.add_argument("--threads", type=int, default=None,
                    help="kernel threads (default: $PERFHOM_THREADS or 1)")
    ap.add_argument("--output", default=None, help="output directory")
    args = ap.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        ap.error("--threads must be >= 1")
    if args.validate_only:
        diags = validate(args.config)
        for msg in diags:
            print(msg)
        return EXIT_CONFIG if diags else EXIT_OK
    return run(args.config, output=args.output, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
