"""Command line driver: ``cmcf run``, ``cmcf metrics`` and ``cmcf validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .flow import FlowConfig, Termination, run_flow, write_history_csv
from .io import MeshFormatError, load_mesh, save_obj
from .mesh import InvalidMeshError, validate_closed_genus_zero
from .metrics import summarize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load(path):
    try:
        return load_mesh(path)
    except FileNotFoundError:
        print(f"error: no such file: {path}", file=sys.stderr)
    except (MeshFormatError, ValueError, OSError) as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
    return None


def _write_report(report, out_dir, stem, termination=None, steps=None):
    files = {
        f"{stem}.json": None,
        f"{stem}_faces.csv": report.write_face_csv,
        f"{stem}_edges.csv": report.write_edge_csv,
        f"{stem}_histograms.csv": report.write_histogram_csv,
    }
    _dump_json(report.to_dict(termination, steps), out_dir / f"{stem}.json")
    for name, writer in files.items():
        if writer is not None:
            writer(out_dir / name)
    return [out_dir / name for name in files]


def cmd_run(args) -> int:
    timings = {}
    t0 = time.perf_counter()
    mesh = _load(args.input)
    if mesh is None:
        return EXIT_USAGE
    timings["load"] = time.perf_counter() - t0

    try:
        cfg = FlowConfig(
            mode=args.mode,
            tau=args.tau,
            mass_scheme=args.mass,
            max_steps=args.max_steps,
            stop_sphericity=args.stop_sphericity,
            normalization=args.normalize,
            snapshot_every=args.snapshot_every,
            project_sphere=args.project_sphere,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        result = run_flow(mesh, cfg, snapshot_dir=out_dir / "snapshots")
    except InvalidMeshError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    timings["flow"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    outputs = []
    save_obj(result.mesh, out_dir / "final.obj")
    outputs.append(out_dir / "final.obj")
    report = summarize(mesh, result.mesh, cfg.degeneracy_area_ratio)
    outputs += _write_report(report, out_dir, "metrics", result.termination.value, result.steps)
    if result.sphere_projection is not None:
        save_obj(result.sphere_projection, out_dir / "sphere.obj")
        outputs.append(out_dir / "sphere.obj")
        sph = summarize(mesh, result.sphere_projection, cfg.degeneracy_area_ratio)
        outputs += _write_report(sph, out_dir, "metrics_sphere", result.termination.value, result.steps)
    write_history_csv(result.history, out_dir / "history.csv")
    outputs.append(out_dir / "history.csv")
    if cfg.snapshot_every:
        outputs += sorted((out_dir / "snapshots").glob("step_*.obj"))
    timings["report"] = time.perf_counter() - t0

    manifest = {
        "input": str(args.input),
        "config": cfg.to_dict(),
        "out_dir": str(out_dir),
        "version": __version__,
        "termination": result.termination.value,
        "message": result.message,
        "steps": result.steps,
        "timings": timings,
        "outputs": [str(p) for p in outputs],
    }
    _dump_json(manifest, out_dir / "manifest.json")

    print(
        f"{result.termination.value} after {result.steps} steps: sphericity "
        f"{result.initial_sphericity:.4f} -> {result.final_sphericity:.4f}"
    )
    if result.message:
        print(result.message)
    print(
        f"angular distortion mean {report.angular_mean:.4f} std {report.angular_std:.4f}; "
        f"lcr mean {report.lcr_mean:.4f} std {report.lcr_std:.4f}; valid={report.valid}"
    )
    return EXIT_OK if result.termination is Termination.SPHERICITY_REACHED else EXIT_FAILED


def cmd_metrics(args) -> int:
    orig = _load(args.original)
    mapped = _load(args.mapped)
    if orig is None or mapped is None:
        return EXIT_USAGE
    try:
        report = summarize(orig, mapped)
    except (ValueError, InvalidMeshError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_report(report, out_dir, "metrics")
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_validate(args) -> int:
    mesh = _load(args.input)
    if mesh is None:
        return EXIT_USAGE
    report = validate_closed_genus_zero(mesh)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cmcf", description="Spherical parametrization by conformalized mean curvature flow.")
    p.add_argument("-v", "--verbose", action="store_true", help="log every flow step")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    d = FlowConfig()
    r = sub.add_parser("run", help="flow a mesh and write the result and its metrics")
    r.add_argument("--input", required=True, help="OBJ or OFF mesh")
    r.add_argument("--mode", choices=["mcf", "cmcf"], default=d.mode.value)
    r.add_argument("--tau", type=float, default=d.tau, help="time step (default %(default)s)")
    r.add_argument("--max-steps", type=int, default=d.max_steps)
    r.add_argument("--stop-sphericity", type=float, default=d.stop_sphericity)
    r.add_argument("--mass", choices=["galerkin", "lumped"], default=d.mass_scheme.value)
    r.add_argument("--normalize", choices=["area-center", "area", "none"], default=d.normalization.value)
    r.add_argument("--snapshot-every", type=int, default=d.snapshot_every, help="write snapshots/step_NNNN.obj every N steps")
    r.add_argument("--out-dir", default="cmcf_out")
    r.add_argument("--project-sphere", action="store_true", help="also write the unit-sphere projection and its metrics")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("metrics", help="compare two meshes with identical connectivity")
    m.add_argument("original")
    m.add_argument("mapped")
    m.add_argument("--out-dir", default="cmcf_metrics")
    m.set_defaults(func=cmd_metrics)

    v = sub.add_parser("validate", help="check that a mesh is a closed genus-zero manifold")
    v.add_argument("input")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
