"""Command-line pipeline: segment, label, featurize, resample, train, score.

Exit codes are a stable contract for scripting: 0 success, 1 usage or
configuration error, 2 data error. Every command drops a manifest next to
its outputs recording the resolved config, input checksums, tool version
and stage timings.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import classifier as clf
from . import groundtruth as gt
from . import imaging
from .config import PipelineConfig, RunManifest, StageTimer, checksum_inputs, load_config
from .evaluation import CellMatchResult, CvConfig, cell_match, one_against_all_report, run_cv
from .features import FeatureVector, extract_feature_vector, read_feature_csv, write_feature_csv
from .imaging import BinaryMask
from .resampling import LabeledDataset, SmoteParams, apply_plan, build_plan, write_plan_csv
from . import reporting

log = logging.getLogger("hemo")

# reference figure reported for the original separator model on the private
# dataset; documentation only, not asserted anywhere
REFERENCE_SEPARATOR_SENSITIVITY = 0.906


class UsageError(Exception):
    """Bad flags or configuration: exit code 1."""


class DataError(Exception):
    """Unreadable or inconsistent input data: exit code 2."""


# ---------------------------------------------------------------------------
# experiment recipes: the named strategy combinations of the study

def _recipe(task, variant=None, weights=None):
    return {"task": task, "resample_variant": variant, "weight_scheme": weights}


RECIPES: dict[str, dict] = {
    "baseline-binary": _recipe("binary"),
    "smote1-binary": _recipe("binary", "smote1"),
    "smote2-binary": _recipe("binary", "smote2"),
    "smote3-2-binary": _recipe("binary", "smote3-2"),
    "smote3-3-binary": _recipe("binary", "smote3-3"),
    "csl-1-2-binary": _recipe("binary", None, "1:2"),
    "csl-2-3-binary": _recipe("binary", None, "2:3"),
    "smote1-csl-1-2-binary": _recipe("binary", "smote1", "1:2"),
    "smote1-csl-2-3-binary": _recipe("binary", "smote1", "2:3"),
    "smote2-csl-1-2-binary": _recipe("binary", "smote2", "1:2"),
    "smote3-3-csl-1-2-binary": _recipe("binary", "smote3-3", "1:2"),
    "smote3-3-csl-2-3-binary": _recipe("binary", "smote3-3", "2:3"),
    "baseline-multiclass": _recipe("multiclass"),
    "smote1-multiclass": _recipe("multiclass", "smote1"),
    "smote2-multiclass": _recipe("multiclass", "smote2"),
    "smote3-2-multiclass": _recipe("multiclass", "smote3-2"),
    "smote3-3-multiclass": _recipe("multiclass", "smote3-3"),
    "csl-multiclass": _recipe("multiclass", None, "distribution"),
    "smote1-csl-multiclass": _recipe("multiclass", "smote1", "distribution"),
    "smote2-csl-multiclass": _recipe("multiclass", "smote2", "distribution"),
    "smote3-2-csl-multiclass": _recipe("multiclass", "smote3-2", "distribution"),
    "smote3-3-csl-multiclass": _recipe("multiclass", "smote3-3", "distribution"),
}


# ---------------------------------------------------------------------------
# helpers

def _png_stems(directory: Path, suffix: str = ".png") -> list[Path]:
    if not directory.is_dir():
        raise UsageError(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() == suffix)


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_manifest(command: str, cfg: PipelineConfig, inputs, out_dir: Path, timer: StageTimer):
    manifest = RunManifest(
        command=command,
        config=dataclasses.asdict(cfg),
        inputs=checksum_inputs(inputs),
        timings=timer.timings,
    )
    manifest.write(out_dir)


def _load_table(path) -> LabeledDataset:
    try:
        features, labels, synthetic = read_feature_csv(path)
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    if (labels < 0).any():
        raise DataError(f"{path}: table is missing labels for some rows")
    return LabeledDataset(features, labels, synthetic)


def _cv_config(cfg: PipelineConfig, task: str, variant, weights) -> CvConfig:
    return CvConfig(
        task=task,
        resample_variant=variant,
        weight_scheme=weights,
        c=cfg.c,
        gamma=cfg.gamma,
        tol=cfg.tol,
        k_folds=cfg.k_folds,
        seed=cfg.seed,
        smote_k=cfg.smote_k,
        k_far=cfg.k_far,
        small_class_threshold=cfg.small_class_threshold,
        max_passes=cfg.max_passes,
    )


def _emit_cv_outputs(report, out_dir: Path, title: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    reporting.write_cv_summary_csv(report, out_dir / "summary.csv")
    reporting.write_cv_folds_csv(report, out_dir / "folds.csv")
    reporting.write_confusion_csvs(report, out_dir)
    reporting.plot_sensitivity_precision(report, out_dir / "comparison.svg", title)
    reporting.plot_f2_bars(report, out_dir / "f2_by_class.svg", title)


# ---------------------------------------------------------------------------
# commands

def cmd_segment(cfg: PipelineConfig, args) -> int:
    images_dir = Path(args.images or cfg.images or "")
    out_dir = Path(args.out or cfg.output or "")
    if not str(images_dir) or not str(out_dir):
        raise UsageError("segment needs --images and --out")
    paths = _png_stems(images_dir)
    if not paths:
        raise DataError(f"no PNG images in {images_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()

    def process(path: Path):
        try:
            img = imaging.load_grayscale(path)
        except Exception as exc:
            log.error("skipping unreadable %s: %s", path.name, exc)
            return path, None
        img = imaging.normalize_illumination(img, cfg.background_window)
        try:
            _, mask = imaging.otsu_threshold(img, dark_foreground=cfg.polarity == "dark")
        except ValueError:
            # featureless (constant) image: no cells to find
            mask = BinaryMask(np.zeros(img.pixels.shape, dtype=bool))
        mask = imaging.morph_refine(mask, cfg.se_radius, cfg.morph_iterations)
        rmap, regions = imaging.connected_components(
            mask, cfg.connectivity, cfg.min_area, discard_border=True
        )
        return path, (mask, rmap, regions)

    with timer.time("segment"):
        results = _map_jobs(process, paths, max(1, args.jobs or cfg.jobs))

    failures = 0
    with timer.time("write"):
        for path, payload in results:
            if payload is None:
                failures += 1
                continue
            mask, rmap, regions = payload
            stem = path.stem
            imaging.write_mask_png(mask, out_dir / f"{stem}.mask.png")
            imaging.write_region_map_png(rmap, out_dir / f"{stem}.regions.png")
            with open(out_dir / f"{stem}.regions.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    ["region_id", "area", "min_x", "min_y", "max_x", "max_y",
                     "centroid_x", "centroid_y"]
                )
                for r in regions:
                    writer.writerow(
                        [r.id, r.area, *r.bbox, repr(r.centroid[0]), repr(r.centroid[1])]
                    )
            if not regions:
                log.warning("%s: no cell regions found", path.name)
    _write_manifest("segment", cfg, [images_dir], out_dir, timer)
    if failures == len(paths):
        raise DataError("every input image failed to load")
    return 0


def cmd_label(cfg: PipelineConfig, args) -> int:
    maps_dir = Path(args.region_maps)
    ann_dir = Path(args.annotations or cfg.annotations or "")
    out_dir = Path(args.out or cfg.output or "")
    if not str(ann_dir) or not str(out_dir):
        raise UsageError("label needs --annotations and --out")
    scheme = args.scheme or cfg.class_scheme
    if scheme not in gt.SCHEMES:
        raise UsageError(f"unknown mask scheme {scheme!r}; expected one of {tuple(gt.SCHEMES)}")
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    orphan_rows = []
    map_paths = [p for p in _png_stems(maps_dir) if p.name.endswith(".regions.png")]
    if not map_paths:
        raise DataError(f"no *.regions.png files in {maps_dir}")
    with timer.time("label"):
        for map_path in map_paths:
            stem = map_path.name.removesuffix(".regions.png")
            rmap = imaging.read_region_map_png(map_path)
            ann_path = ann_dir / f"{stem}.csv"
            try:
                annotations = gt.read_annotations_csv(ann_path) if ann_path.exists() else []
            except ValueError as exc:
                raise DataError(str(exc)) from exc
            overlap_flags: set[int] = set()
            if args.overlap_flags:
                flag_path = Path(args.overlap_flags) / f"{stem}.csv"
                if flag_path.exists():
                    with open(flag_path, newline="") as fh:
                        overlap_flags = {int(row["region_id"]) for row in csv.DictReader(fh)}
            labels, orphans = gt.assign_region_labels(rmap, annotations, overlap_flags)
            with open(out_dir / f"{stem}.labels.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["region_id", "label"])
                for rid in sorted(labels):
                    writer.writerow([rid, labels[rid]])
            mask = gt.build_label_mask(rmap, labels, scheme)
            gt.write_label_mask_png(mask, out_dir / f"{stem}.{scheme}.png")
            orphan_rows.extend((stem, p.x, p.y, p.class_id) for p in orphans)
    with open(out_dir / "orphans.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "x", "y", "class"])
        writer.writerows(orphan_rows)
    _write_manifest("label", cfg, [maps_dir, ann_dir], out_dir, timer)
    return 0


def _read_region_labels(path: Path) -> dict[int, int]:
    with open(path, newline="") as fh:
        return {int(row["region_id"]): int(row["label"]) for row in csv.DictReader(fh)}


def cmd_features(cfg: PipelineConfig, args) -> int:
    images_dir = Path(args.images or cfg.images or "")
    maps_dir = Path(args.region_maps)
    out_path = Path(args.out or cfg.output or "")
    if not str(images_dir) or not str(out_path):
        raise UsageError("features needs --images and --out")
    label_mode = args.label_mode
    labels_dir = Path(args.region_labels) if args.region_labels else None
    if label_mode in ("class", "overlap") and labels_dir is None:
        raise UsageError(f"label mode {label_mode!r} needs --region-labels")
    timer = StageTimer()
    map_paths = [p for p in _png_stems(maps_dir) if p.name.endswith(".regions.png")]
    if not map_paths:
        raise DataError(f"no *.regions.png files in {maps_dir}")

    def process(map_path: Path):
        stem = map_path.name.removesuffix(".regions.png")
        img_path = images_dir / f"{stem}.png"
        if not img_path.exists():
            log.error("no image for %s", map_path.name)
            return []
        img = imaging.load_grayscale(img_path)
        img = imaging.normalize_illumination(img, cfg.background_window)
        rmap = imaging.read_region_map_png(map_path)
        region_labels = {}
        if labels_dir is not None:
            labels_path = labels_dir / f"{stem}.labels.csv"
            if not labels_path.exists():
                raise DataError(f"missing region labels {labels_path}")
            region_labels = _read_region_labels(labels_path)
        rows = []
        for region in imaging.regions_from_map(rmap):
            raw = region_labels.get(region.id)
            if label_mode == "class":
                if raw is None or raw in (gt.OVERLAPPING, gt.UNKNOWN):
                    continue  # tabular datasets hold single, known cells only
                label = raw
            elif label_mode == "overlap":
                label = int(raw == gt.OVERLAPPING) if raw is not None else 0
            else:
                label = None
            rows.append(extract_feature_vector(img, region, label))
        return rows

    with timer.time("features"):
        all_rows: list[FeatureVector] = []
        for rows in _map_jobs(process, map_paths, max(1, args.jobs or cfg.jobs)):
            all_rows.extend(rows)
    if not all_rows:
        raise DataError("no cell regions to featurize")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with timer.time("write"):
        write_feature_csv(out_path, all_rows)
    _write_manifest("features", cfg, [images_dir, maps_dir], out_path.parent, timer)
    return 0


def cmd_separate(cfg: PipelineConfig, args) -> int:
    out_dir = Path(args.out or cfg.output or "")
    if not str(out_dir):
        raise UsageError("separate needs --out")
    ds = _load_table(args.features)
    if set(np.unique(ds.labels)) - {0, 1}:
        raise DataError("separator table must be labeled 0 (single) / 1 (overlapped)")
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    with timer.time("cross_validate"):
        report = run_cv(ds, _cv_config(cfg, "multiclass", None, args.weights))
    with timer.time("train_full"):
        gamma = cfg.gamma if cfg.gamma is not None else 1.0 / ds.features.shape[1]
        weights = clf.weights_from_distribution(ds.class_counts()) if args.weights else None
        model = clf.train_multiclass(
            ds.features, ds.labels, c=cfg.c, weights=weights,
            kernel=clf.KernelParams("rbf", gamma), tol=cfg.tol, max_passes=cfg.max_passes,
        )
        clf.save_model(model, out_dir / "separator.json")
    _emit_cv_outputs(report, out_dir, "overlap separator")
    log.info(
        "separator sensitivity to overlapped cells: %.3f (reference model: %.3f)",
        report.mean_metric(1, "sensitivity"), REFERENCE_SEPARATOR_SENSITIVITY,
    )
    _write_manifest("separate", cfg, [Path(args.features)], out_dir, timer)
    return 0


def cmd_resample(cfg: PipelineConfig, args) -> int:
    out_dir = Path(args.out or cfg.output or "")
    variant = args.variant or cfg.resample_variant
    if not str(out_dir) or variant is None:
        raise UsageError("resample needs --variant and --out")
    ds = _load_table(args.features)
    timer = StageTimer()
    with timer.time("resample"):
        try:
            plan = build_plan(variant, ds.class_counts(),
                              small_class_threshold=cfg.small_class_threshold)
            resampled = apply_plan(ds, plan, SmoteParams(cfg.smote_k, cfg.seed), cfg.k_far)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    write_plan_csv(plan, out_dir / "plan.csv")
    vectors = [FeatureVector(row, int(lbl)) for row, lbl in zip(resampled.features, resampled.labels)]
    write_feature_csv(out_dir / "resampled.csv", vectors, synthetic=list(resampled.synthetic))
    _write_manifest("resample", cfg, [Path(args.features)], out_dir, timer)
    return 0


def _resolve_weights(scheme: str | None, labels: np.ndarray):
    if scheme in (None, "none"):
        return None
    if scheme == "distribution":
        ids, counts = np.unique(labels, return_counts=True)
        return clf.weights_from_distribution({int(c): int(n) for c, n in zip(ids, counts)})
    return clf.designed_binary_weights(scheme)


def cmd_train(cfg: PipelineConfig, args) -> int:
    out_path = Path(args.out or cfg.output or "")
    if not str(out_path):
        raise UsageError("train needs --out")
    ds = _load_table(args.features)
    labels = np.where(ds.labels == 0, 0, 1) if args.task == "binary" else ds.labels
    timer = StageTimer()
    with timer.time("train"):
        gamma = cfg.gamma if cfg.gamma is not None else 1.0 / ds.features.shape[1]
        try:
            weights = _resolve_weights(args.weights or cfg.weight_scheme, labels)
            model = clf.train_multiclass(
                ds.features, labels, c=cfg.c, weights=weights,
                kernel=clf.KernelParams("rbf", gamma), tol=cfg.tol,
                max_passes=cfg.max_passes,
            )
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    out_path.parent.mkdir(parents=True, exist_ok=True)
    clf.save_model(model, out_path)
    manifest = RunManifest(
        command="train", config=dataclasses.asdict(cfg),
        inputs=checksum_inputs([Path(args.features)]), timings=timer.timings,
    )
    manifest.write(out_path.parent)
    return 0


def cmd_predict(cfg: PipelineConfig, args) -> int:
    out_path = Path(args.out or cfg.output or "")
    if not str(out_path):
        raise UsageError("predict needs --out")
    try:
        model = clf.load_model(args.model)
    except (OSError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    features, labels, _ = read_feature_csv(args.features)
    timer = StageTimer()
    with timer.time("predict"):
        pred = clf.predict(model, features)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        has_truth = (labels >= 0).all()
        writer.writerow(["row", "predicted"] + (["label"] if has_truth else []))
        for i, p in enumerate(pred):
            writer.writerow([i, int(p)] + ([int(labels[i])] if has_truth else []))
    manifest = RunManifest(
        command="predict", config=dataclasses.asdict(cfg),
        inputs=checksum_inputs([Path(args.features), Path(args.model)]),
        timings=timer.timings,
    )
    manifest.write(out_path.parent)
    return 0


def cmd_evaluate(cfg: PipelineConfig, args) -> int:
    out_dir = Path(args.out or cfg.output or "")
    if not str(out_dir):
        raise UsageError("evaluate needs --out")
    ds = _load_table(args.features)
    variant = args.variant or cfg.resample_variant
    weights = args.weights or cfg.weight_scheme
    timer = StageTimer()
    with timer.time("cross_validate"):
        try:
            report = run_cv(ds, _cv_config(cfg, args.task, variant, weights))
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    _emit_cv_outputs(report, out_dir, args.task)
    _write_manifest("evaluate", cfg, [Path(args.features)], out_dir, timer)
    return 0


def cmd_eval_masks(cfg: PipelineConfig, args) -> int:
    labels_dir = Path(args.labels)
    pred_dir = Path(args.predictions)
    out_dir = Path(args.out or cfg.output or "")
    if not str(out_dir):
        raise UsageError("eval-masks needs --out")
    scheme_name = args.scheme or cfg.class_scheme
    if scheme_name not in gt.SCHEMES:
        raise UsageError(f"unknown scheme {scheme_name!r}")
    scheme = gt.SCHEMES[scheme_name]
    label_paths = _png_stems(labels_dir)
    if not label_paths:
        raise DataError(f"no PNG masks in {labels_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    n_classes = scheme.n_ids
    total_cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    cell_rows = []
    skipped = 0
    matched = 0
    n_cells = 0
    with timer.time("match"):
        for label_path in label_paths:
            pred_path = pred_dir / label_path.name
            if not pred_path.exists():
                log.error("no prediction mask for %s", label_path.name)
                continue
            label_mask = gt.read_label_mask_png(label_path)
            pred_mask = gt.read_label_mask_png(pred_path)
            foreground = BinaryMask(label_mask != scheme.background)
            _, regions = imaging.connected_components(
                foreground, connectivity=8, min_area=1, discard_border=False
            )
            try:
                result = cell_match(label_mask, pred_mask, regions, n_classes,
                                    cfg.match_threshold)
            except ValueError as exc:
                log.error("%s: %s", label_path.name, exc)
                continue
            total_cm += result.confusion
            skipped += result.skipped
            for cell in result.cells:
                n_cells += 1
                matched += int(cell.matched)
                cell_rows.append(
                    [label_path.stem, cell.region_id, cell.true_class,
                     cell.predicted_class, repr(cell.agreement), int(cell.matched)]
                )
    with open(out_dir / "cells.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image", "region_id", "true_class", "predicted_class",
                         "agreement", "matched"])
        writer.writerows(cell_rows)
    aggregate = CellMatchResult(cells=[], confusion=total_cm, skipped=skipped)
    reporting.write_cell_confusion_csvs(aggregate, out_dir, scheme.id_names)
    report = one_against_all_report(total_cm)
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "name", "cells", "sensitivity", "specificity",
                         "precision", "f2"])
        for c in range(n_classes):
            m = report.per_class[c]
            writer.writerow([c, scheme.id_names.get(c, str(c)), report.frequencies[c],
                             repr(m.sensitivity), repr(m.specificity),
                             repr(m.precision), repr(m.f2)])
    log.info("matched %d / %d cells (skipped %d without interior)", matched, n_cells, skipped)
    _write_manifest("eval-masks", cfg, [labels_dir, pred_dir], out_dir, timer)
    return 0


def cmd_experiment(cfg: PipelineConfig, args) -> int:
    if args.recipe not in RECIPES:
        raise UsageError(
            f"unknown recipe {args.recipe!r}; available: {', '.join(sorted(RECIPES))}"
        )
    out_dir = Path(args.out or cfg.output or "")
    if not str(out_dir):
        raise UsageError("experiment needs --out")
    ds = _load_table(args.features)
    spec = RECIPES[args.recipe]
    timer = StageTimer()
    with timer.time("cross_validate"):
        try:
            report = run_cv(
                ds, _cv_config(cfg, spec["task"], spec["resample_variant"], spec["weight_scheme"])
            )
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    _emit_cv_outputs(report, out_dir, args.recipe)
    _write_manifest("experiment", cfg, [Path(args.features)], out_dir, timer)
    return 0


def cmd_report(cfg: PipelineConfig, args) -> int:
    out_dir = Path(args.out or cfg.output or "")
    if not str(out_dir):
        raise UsageError("report needs --out")
    points = []
    for run_dir in args.runs:
        summary = Path(run_dir) / "summary.csv"
        if not summary.exists():
            raise DataError(f"{run_dir}: no summary.csv")
        data = reporting.read_summary_csv(summary)
        macro = data["macro"]
        points.append((Path(run_dir).name, macro["sensitivity"], macro["precision"], macro["f2"]))
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = StageTimer()
    with timer.time("plot"):
        reporting.plot_runs_comparison(points, out_dir / "comparison.svg")
    _write_manifest("report", cfg, [Path(r) for r in args.runs], out_dir, timer)
    return 0


# ---------------------------------------------------------------------------
# parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hemo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"hemo {__version__}")
    parser.add_argument("--config", help="JSON config file; flags override file values")
    parser.add_argument("--seed", type=int, help="master RNG seed")
    parser.add_argument("--jobs", type=int, help="worker pool size for per-image stages")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="identify cell regions in images")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("label", help="assign expert annotations to regions; build label masks")
    p.add_argument("--region-maps", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--overlap-flags", help="directory of per-image region_id CSVs")
    p.add_argument("--scheme", choices=sorted(gt.SCHEMES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", help="extract the 124-feature table")
    p.add_argument("--images", required=True)
    p.add_argument("--region-maps", required=True)
    p.add_argument("--region-labels", help="directory of *.labels.csv from `label`")
    p.add_argument("--label-mode", choices=("class", "overlap", "none"), default="class")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("separate", help="train and score the single/overlapped separator")
    p.add_argument("--features", required=True)
    p.add_argument("--weights", choices=("distribution",), default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("resample", help="apply a resampling policy to a feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--variant", choices=("smote1", "smote2", "smote3-2", "smote3-3"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_resample)

    p = sub.add_parser("train", help="train a cost-sensitive SVM on a feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--task", choices=("binary", "multiclass"), default="multiclass")
    p.add_argument("--weights", choices=("none", "distribution", "1:2", "2:3"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify feature rows with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="stratified cross-validation report")
    p.add_argument("--features", required=True)
    p.add_argument("--task", choices=("binary", "multiclass"), default="multiclass")
    p.add_argument("--variant", choices=("smote1", "smote2", "smote3-2", "smote3-3"))
    p.add_argument("--weights", choices=("distribution", "1:2", "2:3"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("eval-masks", help="cell-based scoring of predicted label masks")
    p.add_argument("--labels", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--scheme", choices=sorted(gt.SCHEMES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_masks)

    p = sub.add_parser("experiment", help="run a named strategy recipe")
    p.add_argument("--recipe", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="comparison figure across finished runs")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)
        cfg = load_config(args.config, {"seed": args.seed, "jobs": args.jobs})
        return args.func(cfg, args)
    except UsageError as exc:
        log.error("%s", exc)
        return 1
    except DataError as exc:
        log.error("%s", exc)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
