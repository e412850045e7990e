"""Command-line interface: run simulations, convergence studies, and
level-set diagnostics from a config file."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import convergence_study, freespace_study, observed_orders
from .config import ConfigError, load_config
from .export import export_field, export_grid, export_vtk
from .grid import NodeClass
from .levelset import gradient_with_edges
from .solver import run_simulation

logger = logging.getLogger("pecshift")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pecshift",
        description="2D TMz Maxwell scattering around PEC objects on "
                    "point-shifted grids with BFECC time stepping")
    parser.add_argument("--output-dir", default=None,
                        help="override the config's output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap for parallel study grids")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (
            ("run", "single simulation with optional snapshots"),
            ("convergence", "grid-refinement study against a reference run"),
            ("redistance", "signed-distance diagnostics for the shape"),
            ("freespace", "plane-wave order check without a PEC")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("config", help="path to the key=value config file")
    return parser


def _output_dir(cfg, args) -> Path:
    import os
    chosen = args.output_dir or os.environ.get("PECSHIFT_OUTPUT_DIR") or cfg.output_dir
    out = Path(chosen)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(cfg, out: Path) -> int:
    snapshots = []

    def on_step(state, step):
        if cfg.snapshot_every and step % cfg.snapshot_every == 0:
            snapshots.append((state.copy(), step))

    state, setup = run_simulation(config=cfg, on_step=on_step)
    phi = setup.ls.phi if setup.ls is not None else None
    for snap, step in snapshots:
        export_field(snap, setup.grid, phi, setup.classes,
                     out / f"snapshot_{step:05d}.csv")
    export_field(state, setup.grid, phi, setup.classes, out / "final.csv")
    export_vtk(state, setup.grid, phi, out / "final.vtk")
    export_grid(setup.grid, setup.classes, out / "grid.csv")
    logger.info("final state at t=%g written to %s", state.time, out)
    return 0


def _cmd_convergence(cfg, out: Path, threads: int) -> int:
    executor = None
    if cfg.parallel_grids and threads > 1:
        executor = ProcessPoolExecutor(max_workers=threads)
    try:
        report = convergence_study(cfg, executor=executor, output_dir=out)
    finally:
        if executor is not None:
            executor.shutdown()
    print(report.to_text())
    if report.failures:
        print(f"error: {len(report.failures)} grid(s) failed", file=sys.stderr)
        return 1
    return 0


def _cmd_redistance(cfg, out: Path) -> int:
    from .solver import build_setup

    setup = build_setup(cfg, cfg.grid_size)
    if setup.ls is None:
        print("error: redistance diagnostics need a shape", file=sys.stderr)
        return 1
    grid, ls = setup.grid, setup.ls
    gx, gy = gradient_with_edges(ls.phi, grid, setup.fits)
    norm = np.hypot(gx, gy)
    band = np.abs(ls.phi) <= 5 * max(grid.dx, grid.dy)
    band &= setup.fits.valid
    dev = np.abs(norm[band] - 1.0)
    print(f"band nodes (|phi| <= 5 dx): {int(band.sum())}")
    print(f"max | ||grad phi|| - 1 | in band: {dev.max():.6f}")
    print(f"mean | ||grad phi|| - 1 | in band: {dev.mean():.6f}")
    hist, edges = np.histogram(norm[band], bins=12)
    print("||grad phi|| histogram (band):")
    for count, lo, hi in zip(hist, edges[:-1], edges[1:]):
        bar = "#" * int(round(40 * count / max(1, hist.max())))
        print(f"  [{lo:7.4f}, {hi:7.4f}) {count:7d} {bar}")
    counts = {c.name.lower(): int((setup.classes == c).sum()) for c in NodeClass}
    print(f"node classes: {counts}")
    export_grid(grid, setup.classes, out / "grid.csv")
    return 0


def _cmd_freespace(cfg, out: Path) -> int:
    import copy

    if cfg.make_shape() is not None:
        cfg = copy.copy(cfg)
        cfg.shape = "none"
    plain = freespace_study(cfg, scheme="plain")
    bfecc = freespace_study(cfg, scheme="bfecc")
    print(plain.to_text())
    print()
    print(bfecc.to_text())
    plain.to_csv(out / "freespace_plain.csv")
    bfecc.to_csv(out / "freespace_bfecc.csv")
    orders = [o for o in observed_orders(bfecc.err_ez) if o is not None]
    logger.info("BFECC Ez orders: %s", ", ".join(f"{o:.2f}" for o in orders))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    out = _output_dir(cfg, args)
    threads = args.threads if args.threads is not None else cfg.threads
    try:
        if args.command == "run":
            return _cmd_run(cfg, out)
        if args.command == "convergence":
            return _cmd_convergence(cfg, out, threads)
        if args.command == "redistance":
            return _cmd_redistance(cfg, out)
        if args.command == "freespace":
            return _cmd_freespace(cfg, out)
        print(f"error: unknown command {args.command!r}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - single-line machine-parsable exit
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
