"""Command-line front end.

Exit codes: 0 success; 1 a ``verify`` check failed; 2 configuration error
(nothing is written); 3 a cell budget ran out where a definite result was
required. Every artifact gets a ``*.provenance.json`` sidecar naming the
config hash and seed; wall-clock timings go to a separate
``*.timings.json`` so the other artifacts are byte-reproducible.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    build_cellset,
    build_family,
    build_maps,
    build_policy,
    build_tile,
    build_window,
    load_config,
    require,
)
from .connectivity import classify
from .invariants import run_suite
from .io import atomic_write, canonical_json, config_hash, membership_csv, pgm_bytes, sweep_csv
from .mandelbrot import boundary_refine, covering_upper_bound, mset_compute, sweep, tile_ifs
from .maps import as_vector
from .porosity import dimension_scan
from .sets import BudgetExceeded, attractor_approx

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

COMMANDS = ("attractor", "classify", "sweep", "tiles", "mset", "covering", "porosity", "verify")


class _Run:
    """Per-invocation state: resolved config, output directory, provenance base."""

    def __init__(self, cfg: dict, args: argparse.Namespace):
        self.cfg = cfg
        self.out = Path(args.out)
        self.seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        self.workers = args.workers if args.workers is not None else cfg.get("workers", 1)
        fp = cfg.get("fastpath", True) if args.fastpath is None else args.fastpath == "on"
        self.fastpath = fp
        resolved = dict(cfg, seed=self.seed, fastpath=fp)
        resolved.pop("workers", None)
        self.hash = config_hash(resolved)
        self.files: dict[str, bytes | str] = {}
        self.timings: dict[str, float] = {}

    def provenance(self, command: str, **extra) -> dict:
        out = {"command": command, "config_hash": self.hash, "seed": self.seed, "version": __version__,
               "workers": self.workers, "fastpath": self.fastpath}
        out.update(extra)
        return out

    def emit(self, name: str, data) -> None:
        self.files[name] = data

    def flush(self, stem: str) -> None:
        """Write all staged files; timings last, in their own sidecar."""
        for name, data in self.files.items():
            atomic_write(self.out / name, data)
        atomic_write(self.out / f"{stem}.timings.json", canonical_json(self.timings))


def _cmd_attractor(run: _Run) -> int:
    f, g = build_maps(run.cfg)
    block = require(run.cfg, "attractor")
    try:
        w = as_vector(block["w"], g.dim)
    except ValueError as exc:
        raise ConfigError(f"$.attractor.w: {exc}") from exc
    t0 = time.perf_counter()
    try:
        A = attractor_approx(f, g.translated(w), block["eps"], block.get("tol", 0.0),
                             max_cells=block.get("max_cells", 2_000_000))
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    run.timings["attractor_seconds"] = time.perf_counter() - t0
    info = {"eps": A.eps, "err": A.err, "cells": len(A.cover), "certified": A.certified, "rounds": A.rounds}
    run.emit("attractor.cells", A.cover.to_text())
    run.emit("attractor.provenance.json", canonical_json(run.provenance(
        "attractor", maps={"f": f.to_dict(), "g": g.to_dict()}, w=w, result=info)))
    run.flush("attractor")
    print(f"cells={len(A.cover)} eps={A.eps!r} err={A.err!r} certified={A.certified}")
    return EXIT_OK


def _verdict_exit(v) -> int:
    return EXIT_BUDGET if v.note == "budget" else EXIT_OK


def _cmd_classify(run: _Run) -> int:
    f, g = build_maps(run.cfg)
    block = require(run.cfg, "classify")
    try:
        w = as_vector(block["w"], g.dim)
    except ValueError as exc:
        raise ConfigError(f"$.classify.w: {exc}") from exc
    policy = build_policy(run.cfg)
    t0 = time.perf_counter()
    v = classify(f, g, w, policy)
    run.timings["classify_seconds"] = time.perf_counter() - t0
    run.emit("classify.provenance.json", canonical_json(run.provenance(
        "classify", maps={"f": f.to_dict(), "g": g.to_dict()}, w=w, policy=policy.to_dict(),
        verdict=v.to_dict())))
    run.flush("classify")
    print(v.cls.value)
    print(canonical_json(v.to_dict()), end="")
    return _verdict_exit(v)


def _emit_sweep(run: _Run, stem: str, r, command: str, **extra) -> None:
    run.emit(f"{stem}.pgm", pgm_bytes(r.gray))
    run.emit(f"{stem}.csv", sweep_csv(r))
    report = r.report.to_dict()
    run.timings.update({f"{stem}_{k}": v for k, v in report.pop("timings").items()})
    run.emit(f"{stem}.provenance.json", canonical_json(run.provenance(command, sweep=report, **extra)))


def _cmd_sweep(run: _Run) -> int:
    f, g = build_maps(run.cfg)
    block = require(run.cfg, "sweep")
    window = build_window(block["window"], "$.sweep.window")
    if window.dim != g.dim:
        raise ConfigError("$.sweep.window: window dimension differs from the maps")
    policy = build_policy(run.cfg)
    r = sweep(f, g, window, policy, fastpath=run.fastpath, workers=run.workers, seed=run.seed)
    depth = block.get("refine_depth", 0)
    if depth:
        r = boundary_refine(r, depth, workers=run.workers)
    _emit_sweep(run, "sweep", r, "sweep")
    run.flush("sweep")
    print(" ".join(f"{k}={v}" for k, v in r.counts().items()))
    return EXIT_OK


def _cmd_tiles(run: _Run) -> int:
    block = require(run.cfg, "tiles")
    spec = build_tile(block, "$.tiles")
    try:
        maps = tile_ifs(spec)
    except ValueError as exc:
        raise ConfigError(f"$.tiles.A: {exc}") from exc
    if len(maps) != 2:
        raise ConfigError("$.tiles.digits: connectedness is only decided for two digits")
    f, g = maps
    window = None
    if "window" in block:
        window = build_window(block["window"], "$.tiles.window")
        if window.dim != f.dim:
            raise ConfigError("$.tiles.window: window dimension differs from the tile")
    policy = build_policy(run.cfg)
    t0 = time.perf_counter()
    v = classify(f, g, [0.0] * f.dim, policy)
    run.timings["classify_seconds"] = time.perf_counter() - t0
    prov = run.provenance("tiles", tile=spec.to_dict(), maps={"f": f.to_dict(), "g": g.to_dict()},
                          block=f.block, policy=policy.to_dict(), verdict=v.to_dict())
    if window is not None:
        # translations of the second digit map around the tile itself
        r = sweep(f, g, window, policy, fastpath=run.fastpath, workers=run.workers, seed=run.seed)
        _emit_sweep(run, "tiles_sweep", r, "tiles")
    run.emit("tiles.provenance.json", canonical_json(prov))
    run.flush("tiles")
    print(v.cls.value)
    print(canonical_json(v.to_dict()), end="")
    return _verdict_exit(v)


def _cmd_mset(run: _Run) -> int:
    f, g = build_maps(run.cfg)
    block = require(run.cfg, "mset")
    D = build_cellset(block["D"], "$.mset.D")
    window = build_window(block["window"], "$.mset.window")
    if D.dim != g.dim or window.dim != g.dim:
        raise ConfigError("$.mset: D and window must match the map dimension")
    try:
        m = mset_compute(g, block["n"], D, window)
    except ValueError as exc:
        raise ConfigError(f"$.maps.g: {exc}") from exc
    run.emit("mset.pgm", pgm_bytes(m.gray))
    run.emit("mset.csv", membership_csv(m))
    run.emit("mset.provenance.json", canonical_json(run.provenance(
        "mset", g=g.to_dict(), n=block["n"], D=block["D"], window=window.to_dict(),
        members=int(m.member.sum()))))
    run.flush("mset")
    print(f"members={int(m.member.sum())} of {window.size}")
    return EXIT_OK


def _cmd_covering(run: _Run) -> int:
    f, g = build_maps(run.cfg)
    block = require(run.cfg, "covering")
    window = build_window(block["window"], "$.covering.window")
    try:
        m = covering_upper_bound(f, g, block["k"], block["nmax"], window, block["eps"],
                                 build_policy(run.cfg).max_cells)
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        raise ConfigError(f"$.covering: {exc}") from exc
    run.emit("covering.pgm", pgm_bytes(m.gray))
    run.emit("covering.csv", membership_csv(m))
    run.emit("covering.provenance.json", canonical_json(run.provenance(
        "covering", maps={"f": f.to_dict(), "g": g.to_dict()}, window=window.to_dict(),
        members=int(m.member.sum()), **m.extra)))
    run.flush("covering")
    print(f"marked={int(m.member.sum())} of {window.size}")
    return EXIT_OK


def _cmd_porosity(run: _Run) -> int:
    block = require(run.cfg, "porosity")
    fam = build_family(block["family"], "$.porosity.family")
    policy = build_policy(run.cfg)
    t0 = time.perf_counter()
    table = dimension_scan(fam, block["R"], block["samples"], run.seed, policy, run.workers)
    run.timings["scan_seconds"] = time.perf_counter() - t0
    run.emit("porosity.csv", table.to_csv())
    run.emit("porosity.provenance.json", canonical_json(run.provenance("porosity", scan=table.to_dict())))
    run.flush("porosity")
    print(table.to_csv(), end="")
    return EXIT_OK


def _cmd_verify(run: _Run) -> int:
    quick = run.cfg.get("verify", {}).get("quick", False)
    t0 = time.perf_counter()
    results = run_suite(run.seed, quick)
    run.timings["verify_seconds"] = time.perf_counter() - t0
    run.emit("verify.provenance.json", canonical_json(run.provenance(
        "verify", checks=[r.to_dict() for r in results])))
    run.flush("verify")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


_HANDLERS = {
    "attractor": _cmd_attractor,
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
    "tiles": _cmd_tiles,
    "mset": _cmd_mset,
    "covering": _cmd_covering,
    "porosity": _cmd_porosity,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ifsconn", description="Connectedness of two-map IFS attractors.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=name != "verify", help="JSON run configuration")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--workers", type=int, default=None, help="worker processes")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--fastpath", choices=("on", "off"), default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = load_config(args.config) if args.config else {"version": 1}
        run = _Run(cfg, args)
        return _HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
