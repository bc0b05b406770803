"""Command-line interface: synth, estimate, screen, reconstruct, serve.

Exit codes: 0 success, 1 on any pipeline error, 2 specifically when the
linear screen declares an unrecoverable breakdown.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataio
from .errors import InvalidSpecError, PsidealError, UnrecoverableBreakdownError
from .integration import heights_from_normals, relative_error_inf
from .linear import align_estimate, estimate_lights_linear
from .model import LightSet
from .nonlinear import estimate_lights_nonlinear
from .screening import METHOD_TAGS, compare_methods, screen_linear, screen_nonlinear
from .synth import generate_dataset, scenario_from_dict

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNRECOVERABLE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psideal",
        description="Photometric-stereo light estimation, dataset screening, "
        "and surface reconstruction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic dataset from a scenario file")
    p.add_argument("--scenario", required=True, help="scenario config (JSON)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("estimate", help="estimate lights, normals, and albedo")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("linear", "nonlinear"), default="linear")
    p.add_argument("--align", help="reference lights file for disambiguation")
    p.add_argument("--out", help="output directory (default: manifest directory)")

    p = sub.add_parser("screen", help="rank images by ideality and suggest removals")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=METHOD_TAGS + ("all",), default="all")
    p.add_argument("--out", help="output directory (default: manifest directory)")

    p = sub.add_parser("reconstruct", help="full pipeline: lights, normals, surface")
    p.add_argument("--manifest", required=True)
    p.add_argument("--keep", type=int, nargs="+", help="1-based image indices to use")
    p.add_argument("--format", choices=("obj", "ply"), default="obj")
    p.add_argument("--out", help="output directory (default: manifest directory)")

    p = sub.add_parser("serve", help="start the local curation service")
    p.add_argument("--manifest", required=True)
    p.add_argument("--port", type=int, default=8750)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--artifacts", help="artifact directory (default: temp)")
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path(args.manifest).parent
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    cfg = json.loads(Path(args.scenario).read_text())
    scenario = scenario_from_dict(cfg)
    ds = generate_dataset(scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = dataio.save_dataset_images(ds.data, scenario.spec, out)
    dataio.save_lights(out / "lights.txt", ds.lights)
    dataio.save_heights_csv(out / "heights.csv", ds.surface)
    manifest = dataio.DatasetManifest(
        name=str(cfg.get("name", Path(args.scenario).stem)),
        images=images,
        width=scenario.spec.width,
        lights_path=out / "lights.txt",
        ground_truth_path=out / "heights.csv",
        base_dir=out,
    )
    dataio.save_manifest(out / "manifest.json", manifest)
    print(f"wrote {len(images)} images + manifest to {out}")
    return EXIT_OK


def _reference_lights(args, manifest, kept=None) -> LightSet | None:
    if getattr(args, "align", None):
        reference = dataio.load_lights(args.align)
    else:
        reference = manifest.lights()
    if reference is not None and kept is not None:
        reference = reference.subset(kept)
    return reference


def cmd_estimate(args) -> int:
    data, manifest = load_gridded_dataset(args.manifest)
    reference = _reference_lights(args, manifest)
    if args.method == "linear":
        estimate = estimate_lights_linear(data)
        extra = [
            f"gram_min_eigenvalue: {dataio.fmt(estimate.gram.min_eigenvalue)}",
            f"constraint_residual: {dataio.fmt(estimate.gram.residual)}",
        ]
    else:
        estimate = estimate_lights_nonlinear(data)
        extra = [
            f"gn_converged: {dataio.yesno(estimate.result.converged)}",
            f"gn_iterations: {estimate.result.iterations}",
            f"jacobian_rank_gap: {dataio.fmt(estimate.result.rank_gap)}",
        ]
    aligned = align_estimate(estimate, reference)

    out = _out_dir(args)
    dataio.save_lights(out / "lights_estimate.txt", aligned.lights)
    dataio.export_normal_map(out / "normals.png", out / "albedo.png", aligned.field, data.spec)
    lines = [
        "psideal light estimate",
        f"method: {args.method}",
        f"images: {data.image_count}",
        f"aligned: {dataio.yesno(reference is not None)}",
        f"reflection: {dataio.yesno(aligned.reflection)}",
        f"flipped: {dataio.yesno(aligned.flipped)}",
        *extra,
        "lights:",
    ]
    for t, col in enumerate(aligned.lights.directions.T, start=1):
        lines.append(f"  image {t}: " + " ".join(dataio.fmt(v) for v in col))
    (out / "estimate-report.txt").write_text("\n".join(lines) + "\n")
    print(f"estimated {data.image_count} lights ({args.method}) -> {out}")
    return EXIT_OK


def cmd_screen(args) -> int:
    data, _ = load_gridded_dataset(args.manifest, need_grid=False)
    out = _out_dir(args)
    if args.method == "all":
        reports = compare_methods(data)
    elif args.method in ("algo1", "algo1-fast"):
        reports = [screen_linear(data, fast=args.method.endswith("fast"))]
    else:
        reports = [screen_nonlinear(data, fast=args.method.endswith("fast"))]
    code = EXIT_OK
    for report in reports:
        path = out / f"report-{report.method}.txt"
        path.write_text(dataio.render_report(report, data.image_count))
        if report.error is None:
            removed = " ".join(str(t) for t, _ in report.trace) or "none"
            print(f"{report.method}: removed {removed}; kept {len(report.kept)} images")
        else:
            print(f"{report.method}: failed ({report.error})")
            if "unrecoverable breakdown" in report.error:
                code = EXIT_UNRECOVERABLE
    return code


def cmd_reconstruct(args) -> int:
    data, manifest = load_gridded_dataset(args.manifest)
    kept = args.keep or list(range(1, data.image_count + 1))
    if sorted(set(kept)) != sorted(kept) or not all(
        1 <= k <= data.image_count for k in kept
    ):
        raise InvalidSpecError(
            f"--keep indices must be distinct and within 1..{data.image_count}"
        )
    subset = data.subset(kept)
    reference = _reference_lights(args, manifest, kept)
    estimate = estimate_lights_linear(subset)
    aligned = align_estimate(estimate, reference)
    surface = heights_from_normals(aligned.field, data.spec)

    out = _out_dir(args)
    dataio.export_surface(out / f"surface.{args.format}", surface, args.format)
    dataio.save_heights_csv(out / "heights.csv", surface)
    dataio.save_heightmap_png(out / "heightmap.png", surface)
    dataio.export_normal_map(out / "normals.png", out / "albedo.png", aligned.field, data.spec)
    dataio.save_lights(out / "lights_estimate.txt", aligned.lights)

    lines = [
        "psideal reconstruction report",
        f"images: {data.image_count}",
        "kept: " + " ".join(str(k) for k in kept),
        f"aligned: {dataio.yesno(reference is not None)}",
        f"gram_min_eigenvalue: {dataio.fmt(estimate.gram.min_eigenvalue)}",
    ]
    truth = manifest.ground_truth()
    if truth is not None:
        error = relative_error_inf(surface, truth)
        lines.append(f"relative_error_inf: {dataio.fmt(error)}")
        print(f"reconstructed surface; relative error {error:.6g} -> {out}")
    else:
        print(f"reconstructed surface -> {out}")
    (out / "reconstruct-report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.manifest, artifacts_dir=args.artifacts)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def load_gridded_dataset(manifest_path, need_grid: bool = True):
    data, manifest = dataio.load_dataset(manifest_path)
    if need_grid and data.spec is None:
        raise InvalidSpecError("images are too small to carry a reconstruction grid")
    return data, manifest


COMMANDS = {
    "synth": cmd_synth,
    "estimate": cmd_estimate,
    "screen": cmd_screen,
    "reconstruct": cmd_reconstruct,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UnrecoverableBreakdownError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNRECOVERABLE
    except (PsidealError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
