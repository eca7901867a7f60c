"""Experiment orchestration: sampler x reconstructor matrix runs over a
dataset (or in-memory scenes), metric reports, model/edge statistics
tables, and the samples-per-accuracy sweep.

Report rows are a pure function of (config, dataset bytes, seed): worker
threads only parallelize per-image work and results are re-sorted before
assembly, so repeated runs produce byte-identical reports.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import median

import numpy as np

from . import core, edgestats, fileio, planar
from .core import DataError, DepthMap, EvalMask, RgbImage
from .reconstruct import (bilinear_baseline, default_bilateral_params,
                          first_order_baseline, voronoi_segments,
                          zero_order_fill, zero_order_pipeline)
from .sampler import com_pattern, execute, grid_pattern, random_pattern
from .superpixel import SlicParams, slic_segment
from .synth import (SceneSpec, camouflage_scene_spec, generate_synthetic_scene,
                    indoor_scene_spec, obstacle_scene_spec, plane_grid_spec)

SAMPLERS = ("com", "random", "grid")
RECONSTRUCTORS = ("ours", "zero-order", "bilinear", "first-order")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    budgets: tuple
    samplers: tuple = ("com", "random")
    reconstructors: tuple = ("ours", "bilinear")
    range_cap: float = 100.0
    seed: int = 0
    scene_type: str = "outdoor"
    compactness: float = 20.0
    range_sigma: float = None   # overrides the scene-type default
    workers: int = 4

    def __post_init__(self):
        if not self.budgets or any(n < 1 for n in self.budgets):
            raise DataError("ExperimentConfig: budgets must be >= 1")
        for s in self.samplers:
            if s not in SAMPLERS:
                raise DataError(f"ExperimentConfig: unknown sampler {s!r}")
        for r in self.reconstructors:
            if r not in RECONSTRUCTORS:
                raise DataError(f"ExperimentConfig: unknown reconstructor {r!r}")


def load_experiment_config(path) -> ExperimentConfig:
    cp = fileio.parse_ini(path)
    if "experiment" not in cp:
        raise DataError(f"{path}: missing [experiment] section")
    sec = cp["experiment"]

    def csv_list(key, default):
        raw = sec.get(key, default)
        return tuple(v.strip() for v in raw.split(",") if v.strip())

    return ExperimentConfig(
        dataset=sec.get("dataset", ""),
        budgets=tuple(int(v) for v in csv_list("budgets", "100")),
        samplers=csv_list("samplers", "com, random"),
        reconstructors=csv_list("reconstructors", "ours, bilinear"),
        range_cap=sec.getfloat("range_cap_m", 100.0),
        seed=sec.getint("seed", 0),
        scene_type=sec.get("scene_type", "outdoor"),
        compactness=sec.getfloat("compactness", 20.0),
        range_sigma=sec.getfloat("range_sigma", fallback=None),
        workers=sec.getint("workers", 4),
    )


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary labels."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    ROW_COLUMNS = ("image", "sampler", "reconstructor", "n", "actual_samples",
                   "density", "rmse", "rel", "rmse_mask", "error")
    AGG_COLUMNS = ("sampler", "reconstructor", "n", "images", "actual_samples",
                   "density", "rmse", "rel", "rmse_mask")

    def finalize(self):
        """Sort rows and compute unweighted per-configuration means."""
        self.rows.sort(key=lambda r: (r["image"], r["sampler"],
                                      r["reconstructor"], r["n"]))
        groups = {}
        for row in self.rows:
            if row.get("error"):
                continue
            groups.setdefault((row["sampler"], row["reconstructor"], row["n"]),
                              []).append(row)
        self.aggregates = []
        for key in sorted(groups):
            rows = groups[key]

            def mean_of(col):
                vals = [r[col] for r in rows if r.get(col) is not None]
                return float(np.mean(vals)) if vals else None

            self.aggregates.append({
                "sampler": key[0], "reconstructor": key[1], "n": key[2],
                "images": len(rows),
                "actual_samples": mean_of("actual_samples"),
                "density": mean_of("density"),
                "rmse": mean_of("rmse"),
                "rel": mean_of("rel"),
                "rmse_mask": mean_of("rmse_mask"),
            })
        return self

    def to_csv_text(self) -> str:
        return fileio.rows_to_csv_text(self.rows, list(self.ROW_COLUMNS))

    def aggregates_csv_text(self) -> str:
        return fileio.rows_to_csv_text(self.aggregates, list(self.AGG_COLUMNS))

    def to_json_text(self) -> str:
        return json.dumps({"rows": self.rows, "aggregates": self.aggregates},
                          indent=2, sort_keys=True) + "\n"


def _bilateral_for(config: ExperimentConfig, n: int, pixels: int):
    params = default_bilateral_params(n, pixels, config.scene_type)
    if config.range_sigma is not None:
        params = replace(params, range_sigma=config.range_sigma)
    return params


def _sample_for(scene, sampler: str, n: int, config: ExperimentConfig, seed: int):
    """Pattern + executed samples + the segments backing them (if any)."""
    image, gt = scene["image"], scene["gt"]
    segments = None
    if sampler == "com":
        segments = slic_segment(
            image, SlicParams(target_segments=n, compactness=config.compactness),
            seed)
        pattern = com_pattern(segments)
    elif sampler == "random":
        pattern = random_pattern(gt.width, gt.height, n, seed)
    elif sampler == "grid":
        pattern = grid_pattern(gt.width, gt.height, n)
    else:
        raise DataError(f"unknown sampler {sampler!r}")
    samples = execute(pattern, gt, segments)
    return pattern, samples, segments


def _reconstruct_for(scene, recon: str, sampler: str, n: int,
                     config: ExperimentConfig, seed: int,
                     pattern, samples, segments):
    """Returns (prediction, sample count actually consumed)."""
    image, gt = scene["image"], scene["gt"]
    pixels = gt.width * gt.height
    if recon == "bilinear":
        return bilinear_baseline(samples, gt.width, gt.height), len(samples)
    if recon == "first-order":
        if sampler != "com":
            raise DataError("first-order reconstruction pairs only with "
                            "com sampling (it draws 3 samples per segment)")
        result = first_order_baseline(
            image, gt, n,
            SlicParams(target_segments=max(1, n // 3),
                       compactness=config.compactness), seed)
        return result.depth, len(result.samples)
    segs = segments if segments is not None else voronoi_segments(
        pattern, gt.width, gt.height)
    if recon == "zero-order":
        return zero_order_fill(segs, samples), len(samples)
    if recon == "ours":
        return (zero_order_pipeline(segs, samples,
                                    _bilateral_for(config, n, pixels)),
                len(samples))
    raise DataError(f"unknown reconstructor {recon!r}")


def _run_one(scene, sampler, n, config: ExperimentConfig):
    rows = []
    seed = stable_seed(config.seed, scene["id"], sampler, n)
    try:
        pattern, samples, segments = _sample_for(scene, sampler, n, config, seed)
    except Exception as exc:
        for recon in config.reconstructors:
            rows.append(_error_row(scene["id"], sampler, recon, n, str(exc)))
        return rows

    gt = scene["gt"]
    mask = scene.get("mask")
    if mask is not None and not mask.include.any():
        mask = None
    full = EvalMask.full(gt.height, gt.width)
    for recon in config.reconstructors:
        try:
            pred, used = _reconstruct_for(scene, recon, sampler, n, config,
                                          seed, pattern, samples, segments)
            row = {
                "image": scene["id"], "sampler": sampler,
                "reconstructor": recon, "n": n,
                "actual_samples": used,
                "density": used / (gt.width * gt.height),
                "rmse": core.rmse(gt, pred, full, config.range_cap),
                "error": None,
            }
            try:
                row["rel"] = core.rel(gt, pred, full, config.range_cap)
            except DataError:
                row["rel"] = None
            row["rmse_mask"] = (core.rmse(gt, pred, mask, config.range_cap)
                                if mask is not None else None)
            rows.append(row)
        except Exception as exc:
            rows.append(_error_row(scene["id"], sampler, recon, n, str(exc)))
    return rows


def _error_row(image_id, sampler, recon, n, message):
    return {"image": image_id, "sampler": sampler, "reconstructor": recon,
            "n": n, "actual_samples": None, "density": None, "rmse": None,
            "rel": None, "rmse_mask": None, "error": message}


def run_matrix_scenes(scenes: list, config: ExperimentConfig) -> EvalReport:
    """Full sampler x reconstructor x budget cross-product over in-memory
    scenes (dicts with id/image/gt and optional mask)."""
    if not scenes:
        raise DataError("run_matrix: empty dataset")
    tasks = [(scene, sampler, n)
             for scene in scenes
             for sampler in config.samplers
             for n in config.budgets]
    report = EvalReport()
    if config.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for rows in pool.map(lambda t: _run_one(t[0], t[1], t[2], config),
                                 tasks):
                report.rows.extend(rows)
    else:
        for scene, sampler, n in tasks:
            report.rows.extend(_run_one(scene, sampler, n, config))
    return report.finalize()


def load_scenes(dataset_dir) -> tuple:
    """Read a dataset directory; returns (scenes, error_records)."""
    records = fileio.discover_dataset(dataset_dir)
    scenes, errors = [], []
    for rec in records:
        if rec["depth"] is None:
            errors.append((rec["id"], "missing depth image"))
            continue
        try:
            image = fileio.load_rgb_png(rec["rgb"])
            gt = fileio.load_depth_png(rec["depth"])
            if (image.height, image.width) != gt.shape:
                raise DataError("rgb/depth dimension mismatch")
            mask = None
            if rec["mask"] is not None:
                m = fileio.load_mask_png(rec["mask"])
                if m.shape != gt.shape:
                    raise DataError("mask dimension mismatch")
                mask = EvalMask(m)
            scenes.append({"id": rec["id"], "image": image, "gt": gt,
                           "mask": mask})
        except Exception as exc:
            errors.append((rec["id"], str(exc)))
    return scenes, errors


def run_matrix(config: ExperimentConfig) -> EvalReport:
    """Dataset-directory entry point: ingest, run, report. Unreadable or
    mismatched pairs become per-image error rows; the run continues."""
    scenes, errors = load_scenes(config.dataset)
    if not scenes and not errors:
        raise DataError("run_matrix: empty dataset")
    report = EvalReport()
    for image_id, message in errors:
        for sampler in config.samplers:
            for recon in config.reconstructors:
                for n in config.budgets:
                    report.rows.append(
                        _error_row(image_id, sampler, recon, n, message))
    if scenes:
        live = run_matrix_scenes(scenes, config)
        report.rows.extend(live.rows)
    return report.finalize()


def samples_to_reach(target_rmse: float, eval_fn, n_lo: int, n_hi: int,
                     seeds=(0, 1, 2)) -> int:
    """Smallest budget whose median-over-seeds RMSE meets target_rmse.

    eval_fn(n, seed) -> rmse. Doubles from n_lo until the target is met,
    then bisects. Returns None when even n_hi misses the target.
    """

    def score(n):
        return median(eval_fn(n, s) for s in seeds)

    if score(n_hi) > target_rmse:
        return None
    lo, hi = n_lo, n_hi
    n = n_lo
    while n < n_hi:
        if score(n) <= target_rmse:
            hi = n
            break
        lo = n + 1
        n = min(n * 2, n_hi)
    while lo < hi:
        mid = (lo + hi) // 2
        if score(mid) <= target_rmse:
            hi = mid
        else:
            lo = mid + 1
    return hi


def model_stats_rows(scenes: list, params: planar.FitModelParams = None,
                     seed: int = 0) -> list:
    """Piece-wise planar statistics (N, delta, epsilon) per image."""
    rows = []
    for scene in scenes:
        model = planar.fit_model(scene["gt"], params,
                                 stable_seed(seed, scene["id"], "fit"))
        rows.append({"image": scene["id"], "n_regions": model.stats.n_regions,
                     "delta": model.stats.delta, "epsilon": model.stats.epsilon})
    return rows


def edge_stats_rows(scenes: list, rel_threshold: float = 0.05,
                    tol: int = 2) -> list:
    """Boundary conditional probabilities per image."""
    rows = []
    for scene in scenes:
        b_d = edgestats.depth_boundaries(scene["gt"], rel_threshold)
        b_rgb = edgestats.rgb_edges(scene["image"])
        try:
            p_rd, p_dr = edgestats.conditional_probabilities(b_rgb, b_d, tol)
        except DataError as exc:
            rows.append({"image": scene["id"], "p_rgb_given_d": None,
                         "p_d_given_rgb": None, "error": str(exc)})
            continue
        rows.append({"image": scene["id"], "p_rgb_given_d": p_rd,
                     "p_d_given_rgb": p_dr, "error": None})
    return rows


def histogram_csv_text(values, bins: int = 10) -> str:
    """Fixed-format histogram table (bin_lo, bin_hi, count)."""
    vals = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return "bin_lo,bin_hi,count\n"
    counts, edges = np.histogram(vals, bins=bins)
    rows = [{"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]),
             "count": int(counts[i])} for i in range(counts.size)]
    return fileio.rows_to_csv_text(rows, ["bin_lo", "bin_hi", "count"])


DEFAULT_SET = (
    ("plane3", lambda seed: plane_grid_spec(1, 3, seed=seed)),
    ("plane4", lambda seed: plane_grid_spec(2, 2, seed=seed)),
    ("indoor", lambda seed: indoor_scene_spec(seed)),
    ("obstacle", lambda seed: obstacle_scene_spec(seed)),
    ("camouflage", lambda seed: camouflage_scene_spec(seed)),
)


def default_scenes(seed: int = 0) -> list:
    """The bundled 5-scene synthetic evaluation set, in memory."""
    scenes = []
    for name, make in DEFAULT_SET:
        spec = make(stable_seed(seed, name, "spec"))
        image, gt, mask, _ = generate_synthetic_scene(
            spec, stable_seed(seed, name, "render"))
        scenes.append({"id": name, "image": image, "gt": gt, "mask": mask})
    return scenes


def write_scene(outdir, image_id: str, image: RgbImage, gt: DepthMap,
                mask: EvalMask = None):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    fileio.save_rgb_png(outdir / f"{image_id}_rgb.png", image)
    fileio.save_depth_png(outdir / f"{image_id}_depth.png", gt)
    if mask is not None and mask.include.any():
        fileio.save_mask_png(outdir / f"{image_id}_mask.png", mask.include)


def write_default_dataset(outdir, seed: int = 0):
    """Materialize the bundled synthetic set for CLI runs."""
    for scene in default_scenes(seed):
        write_scene(outdir, scene["id"], scene["image"], scene["gt"],
                    scene["mask"])
    return outdir
