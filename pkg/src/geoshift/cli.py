"""Command-line surface: summarize, stats, cluster, shift, evaluate.

Each subcommand writes its artifacts atomically under --output-dir and a
run.json metadata block (tool version, effective parameters, artifact list).
run.json carries the only timestamp; every data payload is byte-reproducible
for a given configuration. All randomness flows from --seed via labeled
child seeds, so adding a stage never perturbs earlier ones.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import geoshift
from geoshift import clustering, evaluate, io, kernels, shift, stats, svg
from geoshift.baseline import TrainConfig, model_to_json as baseline_model_to_json
from geoshift.errors import GeoshiftError
from geoshift.fixtures import write_sen12ms_manifest
from geoshift.util import atomic_write_text, child_seed, fmt_float

_FORMATS = {"csv", "json", "svg"}


def _parse_formats(text: str) -> set[str]:
    formats = {f.strip().lower() for f in text.split(",") if f.strip()}
    unknown = formats - _FORMATS
    if unknown:
        raise ValueError(f"unknown format(s): {sorted(unknown)}")
    return formats


def _resolve_threads(value: int | None) -> int:
    if value is None:
        env = os.environ.get("GEOSHIFT_THREADS", "").strip()
        value = int(env) if env else (os.cpu_count() or 1)
    if value < 1:
        raise ValueError(f"--threads must be >= 1, got {value}")
    return kernels.set_thread_count(value)


def _write_run_metadata(outdir: Path, command: str, params: dict, artifacts: list[str]):
    payload = {
        "tool": "geoshift",
        "version": geoshift.__version__,
        "command": command,
        "parameters": params,
        "artifacts": sorted(artifacts),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    atomic_write_text(outdir / "run.json", json.dumps(payload, indent=2) + "\n")


class _Outputs:
    """Collects artifact writes for one command."""

    def __init__(self, outdir: Path):
        self.outdir = outdir
        self.written: list[str] = []

    def write(self, name: str, text: str) -> None:
        atomic_write_text(self.outdir / name, text)
        self.written.append(name)


def _load_group_patches(manifest, group_by: str):
    """Patches grouped by region, season, or pooled under 'all'."""
    groups: dict[str, list[str]] = {}
    for e in manifest.entries:
        if group_by == "continent":
            key = e.region
        elif group_by == "season":
            key = e.season
        else:
            key = "all"
        groups.setdefault(key, []).append(e.patch_id)
    ordered = shift.order_groups(groups) if group_by != "all" else ["all"]
    return {g: groups[g] for g in ordered}


def cmd_summarize(args) -> int:
    manifest = io.load_manifest(args.manifest)
    summary = io.summarize_manifest(manifest)
    sys.stdout.write(io.summary_table(summary))
    if args.output_dir:
        out = _Outputs(Path(args.output_dir))
        out.write("summary.csv", io.summary_csv(summary))
        _write_run_metadata(
            out.outdir, "summarize",
            {"manifest": str(args.manifest)}, out.written,
        )
    return 0


def cmd_stats(args) -> int:
    formats = _parse_formats(args.format)
    manifest = io.load_manifest(args.manifest)
    if not manifest.entries:
        raise GeoshiftError("stats: manifest has no patches")
    out = _Outputs(Path(args.output_dir))
    group_patch_ids = _load_group_patches(manifest, args.group_by)

    curves_by_band: dict[str, list] = {b: [] for b in geoshift.BAND_NAMES}
    for group, patch_ids in group_patch_ids.items():
        slug = _slug(group)
        samples = {b: [] for b in geoshift.BAND_NAMES}

        def loading(ids=patch_ids, samples=samples):
            # one pass: feed the running summary and capture KDE samples
            for pid in ids:
                patch = io.load_patch(manifest.entry(pid))
                values = stats.strided_band_values(patch, args.stride)
                for i, band in enumerate(geoshift.BAND_NAMES):
                    samples[band].append(values[i])
                yield patch

        summary = stats.band_summary(loading(), sample_stride=args.stride)
        lines = ["band,count,min,max,mean,variance"]
        for band in geoshift.BAND_NAMES:
            m = summary[band]
            lines.append(
                f"{band},{m.count},{fmt_float(m.minimum)},{fmt_float(m.maximum)},"
                f"{fmt_float(m.mean)},{fmt_float(m.variance)}"
            )
        out.write(f"band_summary_{slug}.csv", "\n".join(lines) + "\n")

        for band in geoshift.BAND_NAMES:
            band_samples = np.concatenate(samples[band])
            try:
                h = stats.silverman_bandwidth(band_samples)
            except GeoshiftError as exc:
                raise GeoshiftError(f"group {group!r}, band {band!r}: {exc}") from None
            grid = stats.default_grid(band_samples, h, args.grid)
            curve = stats.kde(band_samples, h, grid, band=band)
            if "csv" in formats:
                csv_lines = ["grid,density"]
                csv_lines += [
                    f"{fmt_float(g)},{fmt_float(d)}"
                    for g, d in zip(curve.grid, curve.density)
                ]
                out.write(f"kde_{slug}_{band}.csv", "\n".join(csv_lines) + "\n")
            curves_by_band[band].append((group, curve.grid, curve.density))

    if "svg" in formats:
        for band, series in curves_by_band.items():
            if series:
                out.write(f"kde_{band}.svg", svg.line_chart(series, title=band))

    _write_run_metadata(
        out.outdir, "stats",
        {
            "manifest": str(args.manifest),
            "group_by": args.group_by,
            "stride": args.stride,
            "grid": args.grid,
            "format": sorted(formats),
        },
        out.written,
    )
    return 0


def cmd_cluster(args) -> int:
    manifest = io.load_manifest(args.manifest)
    if not manifest.entries:
        raise GeoshiftError("cluster: manifest has no patches")
    out = _Outputs(Path(args.output_dir))
    features = [
        clustering.featurize(io.load_patch(e)) for e in manifest.entries
    ]
    model, assignments = clustering.kmeans_fit_restarts(
        features,
        k=args.k,
        seed=child_seed(args.seed, "cluster"),
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        tol=args.tol,
    )
    out.write("model.json", clustering.model_to_json(model))
    out.write("assignments.csv", clustering.assignments_csv(assignments))

    reps = clustering.representatives(model, assignments, args.reps)
    distance = {a.patch_id: a.distance for a in assignments}
    lines = ["cluster,rank,patch_id,distance"]
    for c in range(model.k):
        for rank, pid in enumerate(reps[c]):
            lines.append(f"{c},{rank},{pid},{fmt_float(distance[pid])}")
    out.write("representatives.csv", "\n".join(lines) + "\n")

    sys.stdout.write(
        f"k={model.k} inertia={fmt_float(model.inertia)} "
        f"iterations={model.iterations} converged={model.converged}\n"
    )
    _write_run_metadata(
        out.outdir, "cluster",
        {
            "manifest": str(args.manifest),
            "k": args.k,
            "seed": args.seed,
            "restarts": args.restarts,
            "reps": args.reps,
            "tol": args.tol,
            "max_iterations": args.max_iterations,
        },
        out.written,
    )
    return 0


def _read_assignments(path: Path) -> list[clustering.Assignment]:
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        return [
            clustering.Assignment(
                row["patch_id"], int(row["cluster"]), float(row["distance"])
            )
            for row in reader
        ]


def cmd_shift(args) -> int:
    formats = _parse_formats(args.format)
    manifest = io.load_manifest(args.manifest)
    model = clustering.model_from_json(Path(args.model).read_text("utf-8"))
    assignments = _read_assignments(Path(args.assignments))
    out = _Outputs(Path(args.output_dir))

    grouping = {
        e.patch_id: (e.region if args.group_by == "continent" else e.season)
        for e in manifest.entries
    }
    histograms = shift.cluster_histogram(assignments, grouping, model.k)
    out.write("histograms.csv", shift.histograms_csv(histograms))
    if "svg" in formats:
        freqs = [shift.normalize_histogram(h) for h in histograms]
        out.write(
            "histograms.svg",
            svg.bar_chart([h.group for h in histograms], freqs, title="cluster mix"),
        )

    if args.pcond:
        table = shift.group_given_cluster(histograms, strict_bayes=args.strict_bayes)
        out.write("p_group_given_cluster.csv", shift.probability_csv(table))

    if args.pca:
        embedding = shift.pca_embed(histograms, n_components=2)
        out.write("embedding.csv", shift.embedding_csv(embedding))
        if "svg" in formats:
            points = [
                (g, float(c[0]), float(c[1]))
                for g, c in zip(embedding.groups, embedding.coordinates)
            ]
            out.write("embedding.svg", svg.scatter_chart(points, title="group similarity"))

    if args.coverage:
        if not args.coverage_group:
            raise GeoshiftError("--coverage requires --coverage-group")
        new_manifest = io.load_manifest(args.coverage)
        for entry in new_manifest.entries:
            report = shift.coverage_score(
                model,
                assignments,
                grouping,
                args.coverage_group,
                clustering.featurize(io.load_patch(entry)),
            )
            out.write(f"coverage/{entry.patch_id}.json", shift.coverage_json(report))

    _write_run_metadata(
        out.outdir, "shift",
        {
            "manifest": str(args.manifest),
            "assignments": str(args.assignments),
            "model": str(args.model),
            "group_by": args.group_by,
            "pca": args.pca,
            "pcond": args.pcond,
            "strict_bayes": args.strict_bayes,
            "coverage": str(args.coverage) if args.coverage else None,
            "coverage_group": args.coverage_group,
            "format": sorted(formats),
        },
        out.written,
    )
    return 0


def cmd_evaluate(args) -> int:
    manifest = io.load_manifest(args.manifest)
    out = _Outputs(Path(args.output_dir))
    config = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        early_stopping_patience=args.early_stopping_patience,
        plateau_factor=args.plateau_factor,
        plateau_patience=args.plateau_patience,
        pixel_stride=args.pixel_stride,
    )
    predictor_factory = None
    if args.labels_oracle:
        oracle = evaluate.labels_oracle_predictor()
        predictor_factory = lambda group, train_ids: oracle

    result = evaluate.cross_group_experiment(
        manifest,
        grouping=args.group_by,
        config=config,
        seed=args.seed,
        val_fraction=args.val_fraction,
        predictor_factory=predictor_factory,
    )
    out.write("accuracy_matrix.csv", evaluate.matrix_csv(result.matrix))
    out.write("accuracy_matrix.json", evaluate.matrix_json(result.matrix))
    out.write("scene_accuracies.csv", evaluate.scene_log_csv(result.scene_records))
    for group, model in result.models.items():
        out.write(f"model_{_slug(group)}.json", baseline_model_to_json(model))
    sys.stdout.write(
        f"diagonal mean={fmt_float(result.matrix.diagonal_mean())} "
        f"off-diagonal mean={fmt_float(result.matrix.off_diagonal_mean())}\n"
    )
    _write_run_metadata(
        out.outdir, "evaluate",
        {
            "manifest": str(args.manifest),
            "group_by": args.group_by,
            "seed": args.seed,
            "val_fraction": args.val_fraction,
            "labels_oracle": args.labels_oracle,
            "train_config": {
                "learning_rate": config.learning_rate,
                "batch_size": config.batch_size,
                "max_epochs": config.max_epochs,
                "early_stopping_patience": config.early_stopping_patience,
                "plateau_factor": config.plateau_factor,
                "plateau_patience": config.plateau_patience,
                "pixel_stride": config.pixel_stride,
            },
        },
        out.written,
    )
    return 0


def cmd_fixture(args) -> int:
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = write_sen12ms_manifest(outdir / "sen12ms_manifest.csv")
    sys.stdout.write(f"wrote {path}\n")
    return 0


def _slug(text: str) -> str:
    cleaned = "".join(ch if ch.isalnum() else "_" for ch in text.lower())
    while "__" in cleaned:
        cleaned = cleaned.replace("__", "_")
    return cleaned.strip("_")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geoshift",
        description="Landscape distribution-shift diagnostics and cross-group "
        "accuracy evaluation.",
    )
    parser.add_argument(
        "--threads", type=int, default=None,
        help="worker thread cap (default: GEOSHIFT_THREADS or all cores); "
        "results do not depend on this",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("summarize", help="dataset composition per region/season")
    p.add_argument("manifest")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("stats", help="per-band summaries and density curves")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--group-by", choices=["continent", "season", "all"], default="all")
    p.add_argument("--stride", type=int, default=stats.DEFAULT_STRIDE)
    p.add_argument("--grid", type=int, default=stats.DEFAULT_GRID_POINTS)
    p.add_argument("--format", default="csv", help="comma list of csv,svg")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cluster", help="fit the landscape K-Means model")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--k", type=int, default=clustering.DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--reps", type=int, default=5, help="representatives per cluster")
    p.add_argument("--tol", type=float, default=clustering.DEFAULT_TOL)
    p.add_argument("--max-iterations", type=int, default=clustering.DEFAULT_MAX_ITERATIONS)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("shift", help="cluster histograms, P(group|cluster), PCA, coverage")
    p.add_argument("--manifest", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--output-dir", required=True)
    p.add_argument("--group-by", choices=["continent", "season"], default="continent")
    p.add_argument("--pca", action="store_true")
    p.add_argument("--pcond", action="store_true")
    p.add_argument(
        "--strict-bayes", action="store_true",
        help="score clusters by P(cluster|group)*P(group) instead of the "
        "default imbalance-corrected P(cluster|group)/P(group)",
    )
    p.add_argument("--coverage", default=None, help="manifest of new patches")
    p.add_argument("--coverage-group", default=None)
    p.add_argument("--format", default="csv", help="comma list of csv,svg")
    p.set_defaults(func=cmd_shift)

    p = sub.add_parser("evaluate", help="cross-group accuracy matrix")
    p.add_argument("manifest")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--group-by", choices=["continent", "season"], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--val-fraction", type=float, default=evaluate.DEFAULT_VAL_FRACTION)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--max-epochs", type=int, default=TrainConfig.max_epochs)
    p.add_argument(
        "--early-stopping-patience", type=int, default=TrainConfig.early_stopping_patience
    )
    p.add_argument("--plateau-factor", type=float, default=TrainConfig.plateau_factor)
    p.add_argument("--plateau-patience", type=int, default=TrainConfig.plateau_patience)
    p.add_argument("--pixel-stride", type=int, default=TrainConfig.pixel_stride)
    p.add_argument(
        "--labels-oracle", action="store_true",
        help="replace trained models with a perfect label-replay predictor "
        "(plumbing check)",
    )
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fixture", help="write the packaged metadata-only manifest")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve_threads(args.threads)
        return args.func(args)
    except (GeoshiftError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
