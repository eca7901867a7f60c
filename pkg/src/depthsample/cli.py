"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable files,
dimension mismatches, contract violations), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import edgestats, fileio, harness, mtf, planar
from .core import DataError, DepthMap, EvalMask
from .fileio import TOOL_VERSION
from .reconstruct import (BilateralParams, bilinear_baseline,
                          default_bilateral_params, first_order_baseline,
                          first_order_from_samples, voronoi_segments,
                          zero_order_pipeline)
from .sampler import SamplePattern, com_pattern, execute, grid_pattern, random_pattern
from .superpixel import SlicParams, slic_segment
from .synth import ObjectSpec, RegionSpec, SceneSpec, generate_synthetic_scene


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _load_pattern_source(path):
    """`sample` accepts an RGB image or a 16-bit label image; 16-bit
    single-channel PNGs are treated as label maps."""
    from PIL import Image
    with Image.open(path) as img:
        is_labels = img.mode in ("I", "I;16") and len(img.getbands()) == 1
    if is_labels:
        labels = fileio.load_labels_png(path)
        from .core import SegmentMap
        return None, SegmentMap(labels, int(labels.max()) + 1)
    return fileio.load_rgb_png(path), None


def _cmd_segment(args):
    image = fileio.load_rgb_png(args.input)
    params = SlicParams(target_segments=args.n, compactness=args.compactness,
                        max_iterations=args.iterations)
    segments = slic_segment(image, params, args.seed)
    fileio.save_labels_png(args.output, segments.labels)
    fileio.write_manifest(args.output, args.seed, {
        "command": "segment", "n": args.n, "compactness": args.compactness,
        "iterations": args.iterations, "num_segments": segments.num_segments,
    })
    print(f"wrote {args.output}: {segments.num_segments} segments")


def _cmd_sample(args):
    image, segments = _load_pattern_source(args.input)
    gt = fileio.load_depth_png(args.gt)
    if args.method == "com":
        if segments is None:
            params = SlicParams(target_segments=args.n,
                                compactness=args.compactness)
            segments = slic_segment(image, params, args.seed)
        pattern = com_pattern(segments)
    elif args.method == "random":
        pattern = random_pattern(gt.width, gt.height, args.n, args.seed)
    else:
        pattern = grid_pattern(gt.width, gt.height, args.n)
    samples = execute(pattern, gt, segments)
    fileio.save_samples_csv(args.output, samples)
    fileio.write_manifest(args.output, args.seed, {
        "command": "sample", "method": args.method, "n": args.n,
        "compactness": args.compactness, "actual_samples": len(samples),
        "dropped": samples.meta.get("dropped", 0),
        "relocated": samples.meta.get("relocated", 0),
    })
    print(f"wrote {args.output}: {len(samples)} samples "
          f"({samples.meta.get('dropped', 0)} dropped)")


def _bilateral_from_args(args, n, pixels):
    params = default_bilateral_params(n, pixels, args.scene)
    if args.range_sigma is not None:
        params = replace(params, range_sigma=args.range_sigma)
    if args.spatial_sigma is not None:
        params = BilateralParams(args.spatial_sigma, params.range_sigma)
    return params


def _cmd_reconstruct(args):
    loaded = fileio.load_samples_csv(args.samples)
    if isinstance(loaded, SamplePattern):
        raise DataError("reconstruct: the sample CSV has no depths; "
                        "execute the pattern against a ground truth first")
    samples = loaded
    manifest = fileio.read_manifest(args.samples).get("parameters", {})
    n = args.n or manifest.get("n") or len(samples)
    seed = args.seed if args.seed is not None else manifest.get("seed", 0)

    if args.width and args.height:
        width, height = args.width, args.height
    elif args.rgb:
        probe = fileio.load_rgb_png(args.rgb)
        width, height = probe.width, probe.height
    else:
        raise DataError("reconstruct: pass --rgb or both --width/--height "
                        "to define the output size")

    if args.method == "bilinear":
        depth = bilinear_baseline(samples, width, height)
    elif args.method == "first-order":
        if not args.rgb:
            raise DataError("reconstruct first-order: --rgb is required")
        image = fileio.load_rgb_png(args.rgb)
        depth = first_order_from_samples(image, samples, seed=seed).depth
    else:  # ours
        if args.rgb:
            image = fileio.load_rgb_png(args.rgb)
            segments = slic_segment(
                image, SlicParams(target_segments=int(n),
                                  compactness=args.compactness), seed)
        else:
            segments = voronoi_segments(
                SamplePattern(samples.x, samples.y, samples.sampler_id,
                              samples.budget), width, height)
        params = _bilateral_from_args(args, int(n), width * height)
        depth = zero_order_pipeline(segments, samples, params)

    fileio.save_depth_png(args.output, depth)
    fileio.write_manifest(args.output, seed, {
        "command": "reconstruct", "method": args.method, "n": int(n),
        "scene": args.scene, "samples": str(args.samples),
    })
    print(f"wrote {args.output}")


def _cmd_fit_model(args):
    params = planar.FitModelParams(
        inlier_tol=args.tol, min_region_px=args.min_region_px,
        delta_target=args.delta_target, max_regions=args.max_regions)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    if Path(args.input).is_dir():
        scenes, errors = harness.load_scenes(args.input)
        rows = harness.model_stats_rows(scenes, params, args.seed)
        for image_id, message in errors:
            rows.append({"image": image_id, "n_regions": None, "delta": None,
                         "epsilon": None, "error": message})
        rows.sort(key=lambda r: r["image"])
        cols = ["image", "n_regions", "delta", "epsilon"]
        (outdir / "model_stats.csv").write_text(
            fileio.rows_to_csv_text(rows, cols))
        (outdir / "n_regions_hist.csv").write_text(
            harness.histogram_csv_text([r["n_regions"] for r in rows]))
        (outdir / "epsilon_hist.csv").write_text(
            harness.histogram_csv_text([r["epsilon"] for r in rows]))
        ok = [r for r in rows if r.get("n_regions") is not None]
        summary = {
            "images": len(ok),
            "mean_n_regions": float(np.mean([r["n_regions"] for r in ok])) if ok else None,
            "mean_delta": float(np.mean([r["delta"] for r in ok])) if ok else None,
            "mean_epsilon": float(np.mean([r["epsilon"] for r in ok])) if ok else None,
            "mean_min_samples": float(np.mean([3 * r["n_regions"] for r in ok])) if ok else None,
        }
        (outdir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        gt = fileio.load_depth_png(args.input)
        model = planar.fit_model(gt, params, args.seed)
        _write_planar_model(outdir, model)
    fileio.write_manifest(outdir, args.seed, {
        "command": "fit-model", "input": str(args.input), "tol": args.tol,
        "delta_target": args.delta_target, "max_regions": args.max_regions,
        "min_region_px": args.min_region_px,
    })
    print(f"wrote {outdir}")


def _write_planar_model(outdir: Path, model: planar.PlanarModel):
    rows = []
    counts = np.bincount(model.labels[model.labels >= 0],
                         minlength=model.stats.n_regions)
    for i, (a, b, c) in enumerate(model.planes):
        rows.append({"id": i, "a": float(a), "b": float(b), "c": float(c),
                     "pixel_count": int(counts[i])})
    (outdir / "regions.csv").write_text(
        fileio.rows_to_csv_text(rows, ["id", "a", "b", "c", "pixel_count"]))
    fileio.save_labels_png(outdir / "labels.png",
                           np.maximum(model.labels, 0) + (model.labels >= 0))
    fileio.save_mask_png(outdir / "validity.png", model.validity)
    summary = {"n_regions": model.stats.n_regions,
               "delta": model.stats.delta,
               "epsilon_m": model.stats.epsilon,
               "min_samples": planar.min_samples(model)}
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _cmd_edge_stats(args):
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    if Path(args.rgb).is_dir():
        scenes, _ = harness.load_scenes(args.rgb)
        rows = harness.edge_stats_rows(scenes, args.rel_threshold, args.tol_px)
        cols = ["image", "p_rgb_given_d", "p_d_given_rgb", "error"]
        (outdir / "edge_stats.csv").write_text(fileio.rows_to_csv_text(rows, cols))
        ok = [r for r in rows if r.get("p_rgb_given_d") is not None]
        summary = {
            "images": len(ok),
            "mean_p_rgb_given_d": float(np.mean([r["p_rgb_given_d"] for r in ok])) if ok else None,
            "mean_p_d_given_rgb": float(np.mean([r["p_d_given_rgb"] for r in ok])) if ok else None,
        }
        (outdir / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
    else:
        if not args.depth:
            raise DataError("edge-stats: a depth image is required "
                            "(or pass a dataset directory)")
        image = fileio.load_rgb_png(args.rgb)
        gt = fileio.load_depth_png(args.depth)
        if (image.height, image.width) != gt.shape:
            raise DataError("edge-stats: rgb/depth dimension mismatch")
        b_d = edgestats.depth_boundaries(gt, args.rel_threshold)
        b_rgb = edgestats.rgb_edges(image)
        p_rd, p_dr = edgestats.conditional_probabilities(b_rgb, b_d, args.tol_px)
        fileio.save_rgb_png(outdir / "overlay.png", edgestats.overlay(b_rgb, b_d))
        doc = {"p_rgb_given_d": p_rd, "p_d_given_rgb": p_dr,
               "tol_px": args.tol_px, "rel_threshold": args.rel_threshold}
        (outdir / "edge_stats.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
    fileio.write_manifest(outdir, 0, {
        "command": "edge-stats", "tol_px": args.tol_px,
        "rel_threshold": args.rel_threshold,
    })
    print(f"wrote {outdir}")


def _cmd_mtf(args):
    if args.chart_out:
        chart = mtf.generate_chart(args.size, args.sectors, args.near,
                                   args.far, args.seed)
        outdir = Path(args.chart_out)
        outdir.mkdir(parents=True, exist_ok=True)
        fileio.save_rgb_png(outdir / "chart_rgb.png", chart.rgb)
        fileio.save_depth_png(outdir / "chart_depth.png", chart.depth)
        meta = {"size": args.size, "sectors": args.sectors, "near_m": args.near,
                "far_m": args.far, "center": list(chart.center),
                "radius": chart.radius}
        (outdir / "chart.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n")
        fileio.write_manifest(outdir, args.seed, {"command": "mtf-chart", **meta})
        print(f"wrote {outdir}")
        return
    if not (args.eval and args.chart and args.output):
        raise _UsageError("mtf: pass --chart-out, or --eval with --chart and -o")
    chart_dir = Path(args.chart)
    meta = json.loads((chart_dir / "chart.json").read_text())
    chart = mtf.generate_chart(meta["size"], meta["sectors"], meta["near_m"],
                               meta["far_m"], args.seed)
    recon = fileio.load_depth_png(args.eval)
    curve = mtf.compute_mtf(chart, recon)
    rows = [{"frequency_cpp": f, "mtf": m} for f, m in curve]
    Path(args.output).write_text(
        fileio.rows_to_csv_text(rows, ["frequency_cpp", "mtf"]))
    fileio.write_manifest(args.output, args.seed, {
        "command": "mtf-eval", "chart": str(chart_dir), "eval": str(args.eval),
    })
    print(f"wrote {args.output}")


def _cmd_evaluate(args):
    config = harness.load_experiment_config(args.config)
    report = harness.run_matrix(config)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.to_csv_text())
    (outdir / "aggregates.csv").write_text(report.aggregates_csv_text())
    (outdir / "report.json").write_text(report.to_json_text())
    fileio.write_manifest(outdir, config.seed, {
        "command": "evaluate", "config": str(args.config),
        "experiment": {
            "dataset": config.dataset, "budgets": list(config.budgets),
            "samplers": list(config.samplers),
            "reconstructors": list(config.reconstructors),
            "range_cap": config.range_cap, "scene_type": config.scene_type,
        },
    })
    errors = sum(1 for r in report.rows if r.get("error"))
    print(f"wrote {outdir}: {len(report.rows)} rows ({errors} errors)")


def _parse_triple(text, what, types=float):
    parts = text.replace(",", " ").split()
    if len(parts) != 3:
        raise DataError(f"{what}: expected 3 values, got {text!r}")
    return tuple(types(p) for p in parts)


def parse_scene_spec(path) -> SceneSpec:
    """Scene description file: [scene] globals plus [region.*]/[object.*]
    sections (rect = x y w h; plane = a b c; color = r g b|camouflage)."""
    cp = fileio.parse_ini(path)
    if "scene" not in cp:
        raise DataError(f"{path}: missing [scene] section")
    sec = cp["scene"]
    width, height = sec.getint("width"), sec.getint("height")
    regions, objects = [], []
    for name in cp.sections():
        if name.startswith("region."):
            r = cp[name]
            regions.append(RegionSpec(
                tuple(int(v) for v in r["rect"].split()),
                _parse_triple(r["plane"], "plane"),
                tuple(int(v) for v in r["color"].split())))
        elif name.startswith("object."):
            o = cp[name]
            color_text = o.get("color", "camouflage").strip()
            color = (None if color_text == "camouflage"
                     else tuple(int(v) for v in color_text.split()))
            objects.append(ObjectSpec(tuple(int(v) for v in o["rect"].split()),
                                      o.getfloat("depth"), color))
    return SceneSpec(width, height, tuple(regions), tuple(objects),
                     noise_sigma=sec.getfloat("noise_sigma", 0.0),
                     texture_amplitude=sec.getfloat("texture_amplitude", 0.0))


def _cmd_synth(args):
    outdir = Path(args.output)
    if args.preset:
        if args.preset != "default":
            raise DataError(f"synth: unknown preset {args.preset!r}")
        harness.write_default_dataset(outdir, args.seed)
        fileio.write_manifest(outdir, args.seed,
                              {"command": "synth", "preset": "default"})
        print(f"wrote {outdir}: bundled 5-scene set")
        return
    if not args.spec:
        raise _UsageError("synth: pass --spec or --preset default")
    spec = parse_scene_spec(args.spec)
    image, gt, mask, _ = generate_synthetic_scene(spec, args.seed)
    harness.write_scene(outdir, args.name, image, gt,
                        mask if mask.include.any() else None)
    fileio.write_manifest(outdir, args.seed, {
        "command": "synth", "spec": str(args.spec), "name": args.name,
    })
    print(f"wrote {outdir}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depthsample",
                     description="Image-guided depth sampling and reconstruction")
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="SLIC superpixel label image")
    p.add_argument("input")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--compactness", type=float, default=20.0)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("sample", help="generate and execute a sampling pattern")
    p.add_argument("input", help="RGB image, or a 16-bit label image")
    p.add_argument("--method", choices=["com", "grid", "random"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gt", required=True, help="dense ground-truth depth PNG")
    p.add_argument("--compactness", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("reconstruct", help="dense depth from a sample CSV")
    p.add_argument("--method", choices=["ours", "bilinear", "first-order"],
                   required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--rgb")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--n", type=int, help="segmentation budget "
                   "(default: the sample CSV's manifest, else sample count)")
    p.add_argument("--seed", type=int)
    p.add_argument("--scene", choices=["outdoor", "indoor"], default="outdoor")
    p.add_argument("--range-sigma", type=float, dest="range_sigma")
    p.add_argument("--spatial-sigma", type=float, dest="spatial_sigma")
    p.add_argument("--compactness", type=float, default=20.0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("fit-model", help="piece-wise planar model statistics")
    p.add_argument("input", help="depth PNG or dataset directory")
    p.add_argument("--tol", type=float, default=0.1)
    p.add_argument("--min-region-px", type=int, dest="min_region_px")
    p.add_argument("--delta-target", type=float, dest="delta_target", default=0.1)
    p.add_argument("--max-regions", type=int, dest="max_regions", default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_fit_model)

    p = sub.add_parser("edge-stats", help="RGB/depth boundary correlation")
    p.add_argument("rgb", help="RGB image, or a dataset directory")
    p.add_argument("depth", nargs="?")
    p.add_argument("--tol-px", type=int, dest="tol_px", default=2)
    p.add_argument("--rel-threshold", type=float, dest="rel_threshold",
                   default=0.05)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_edge_stats)

    p = sub.add_parser("mtf", help="star chart generation / MTF measurement")
    p.add_argument("--chart-out", dest="chart_out")
    p.add_argument("--size", type=int, default=1000)
    p.add_argument("--sectors", type=int, default=72)
    p.add_argument("--near", type=float, default=5.0)
    p.add_argument("--far", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval")
    p.add_argument("--chart")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_mtf)

    p = sub.add_parser("evaluate", help="sampler x reconstructor matrix run")
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("synth", help="synthetic scene generation")
    p.add_argument("--spec")
    p.add_argument("--preset", choices=["default"])
    p.add_argument("--name", default="scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
        return 0
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
