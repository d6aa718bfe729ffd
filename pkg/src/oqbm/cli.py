"""Command-line front end: ``oqbm run | moments | phase-validate | suite``.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 suite failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from . import config, dynamics, moments, observables, output, phase_space, suite
from .dynamics import NumericalError
from .grid import SpatialGrid

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SUITE = 0, 2, 3, 4
MAX_WRITTEN_ORDER = 4
THREADS_ENV = "OQBM_THREADS"


def code_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def _apply_overrides(cfg, args):
    changes = {}
    if getattr(args, "grid_n", None) is not None:
        if cfg.grid is None:
            raise config.ConfigError("--grid-n given but the scenario has no [grid] section")
        changes["grid"] = SpatialGrid(cfg.grid.L, args.grid_n)
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if getattr(args, "nmax", None) is not None:
        changes["nmax"] = args.nmax
    return cfg.with_(**changes) if changes else cfg


def _out_dir(cfg, args):
    out = args.out or cfg.out_dir or os.path.join("runs", cfg.name)
    os.makedirs(out, exist_ok=True)
    return out


def _snapshot_diagnostics(f):
    peaks = observables.peak_census(f).count
    try:
        res = observables.gaussian_residual(f, per_lobe=peaks > 1)
    except observables.DiagnosticError:
        res = float("nan")
    return f.t, peaks, res


def run(cfg, out_dir) -> output.RunManifest:
    """Evolve a scenario and write snapshots, time series, diagnostics and manifest."""
    start = time.perf_counter()
    if cfg.grid is None:
        raise config.ConfigError(f"scenario {cfg.name!r} has no [grid] section; use 'moments'")
    tr = dynamics.evolve(cfg)
    files = [output.write_snapshot(out_dir, s) for s in tr.snapshots]
    files.append(output.write_series(out_dir, tr.series))
    files.append(output.write_diagnostics(out_dir, [_snapshot_diagnostics(s) for s in tr.snapshots]))
    return _finish(cfg, out_dir, files, start)


def moments_run(cfg, out_dir) -> output.RunManifest:
    """Evolve the truncated hierarchy; with a grid, also write PDE reference moments."""
    start = time.perf_counter()
    sys_ = moments.build_system(cfg.coefficients, cfg.nmax)
    init = moments.initial_vector(cfg.nmax, cfg.theta, cfg.phi)
    record = max(1, int(round(0.05 / cfg.dt))) if cfg.dt < 0.05 else 1
    mt = moments.evolve_moments(sys_, init, cfg.dt, cfg.t_final, record_every=record)
    top = min(cfg.nmax, MAX_WRITTEN_ORDER)
    files = [output.write_moments(out_dir, n, mt.t, mt.order(n)) for n in range(top + 1)]
    if cfg.grid is not None:
        tr = dynamics.evolve(cfg)
        for n in range(top + 1):
            t, vals = moments.moments_from_pde(tr, n)
            path = os.path.join(out_dir, f"moments_pde_n{n}.csv")
            files.append(output.write_table(path, output.MOMENT_HEADER, [t, *np.asarray(vals).T]))
    return _finish(cfg, out_dir, files, start)


def phase_validate(cfg, out_dir, gammas, n_x=96, n_p=48) -> output.RunManifest:
    start = time.perf_counter()
    if cfg.grid is None:
        raise config.ConfigError(f"scenario {cfg.name!r} has no [grid] section")
    rep = phase_space.validate_elimination(cfg, gammas, n_x=n_x, n_p=n_p)
    files = [output.write_elimination(out_dir, rep.rows)]
    return _finish(cfg, out_dir, files, start)


def _finish(cfg, out_dir, files, start):
    manifest = output.RunManifest(cfg.name, config.config_hash(cfg), code_version(),
                                  time.perf_counter() - start,
                                  [os.path.basename(f) for f in files])
    manifest.write(out_dir)
    return manifest


def _gamma_list(text):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read gamma schedule {text!r}") from None
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("gamma schedule needs positive values")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oqbm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=code_version())
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", required=True,
                       help="path to a scenario .ini file or the name of a bundled scenario")
        p.add_argument("--out", help="output directory (default runs/<name>)")
        p.add_argument("--dt", type=float, help="override the time step")
        if grid:
            p.add_argument("--grid-n", type=int, help="override the number of x nodes")

    common(sub.add_parser("run", help="integrate the position-space equations"))
    p = sub.add_parser("moments", help="integrate the truncated moment hierarchy")
    common(p)
    p.add_argument("--nmax", type=int, help="truncation order (>= 2)")
    p = sub.add_parser("phase-validate", help="compare (x, p) marginals with the reduced equations")
    common(p, grid=False)
    p.add_argument("--gamma-schedule", type=_gamma_list, default=list(phase_space.DEFAULT_GAMMAS),
                   help="comma-separated friction values (default 10,40,160)")
    p.add_argument("--grid-n", type=int, default=96, help="x nodes of the (x, p) grid")
    p.add_argument("--p-nodes", type=int, default=48, help="p nodes of the (x, p) grid")
    sub.add_parser("suite", help="run the invariant checks and print a residual table")
    sub.add_parser("list", help="list bundled scenarios")
    return ap


def _set_threads():
    n = os.environ.get(THREADS_ENV)
    if n:
        import numba
        numba.set_num_threads(int(n))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _set_threads()
    if args.command == "list":
        print("\n".join(config.bundled_names()))
        return EXIT_OK
    if args.command == "suite":
        results = suite.run_suite()
        print(suite.format_table(results))
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return EXIT_SUITE if failed else EXIT_OK
    try:
        cfg = config.resolve(args.config)
        if args.command == "phase-validate":
            if args.dt is not None:
                cfg = cfg.with_(dt=args.dt)
        else:
            cfg = _apply_overrides(cfg, args)
        out = _out_dir(cfg, args)
        if args.command == "run":
            manifest = run(cfg, out)
        elif args.command == "moments":
            manifest = moments_run(cfg, out)
        else:
            manifest = phase_validate(cfg, out, args.gamma_schedule, n_x=args.grid_n, n_p=args.p_nodes)
    except (config.ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{manifest.name}: wrote {len(manifest.files)} files to {out} "
          f"in {manifest.wall_time:.1f} s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
