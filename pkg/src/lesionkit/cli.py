"""Command-line pipeline driver.

Each subcommand maps onto one library operation and talks to the others
only through files, so any stage can be rerun or swapped in isolation.
Alongside every output artifact a ``<name>.prov`` sidecar records
command, seed, config digest and package version; reruns with identical
inputs produce byte-identical artifacts and sidecars.

Exit codes: 0 success, 1 operation error, 2 usage error.
"""

import functools
import shlex
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .aggregate import ensemble_mean, tta_merge
from .augment import contact_sheet, sample_transform, apply_transform, tta_variants
from .backend import infer_paths
from .categories import CATEGORY_NAMES, Category
from .config import RunConfig, config_digest, load_config
from .datamodel import align
from .exceptions import LesionKitError
from .imbalance import (
    effective_weights,
    oversample_manifest,
    prior_rescale,
    split_manifest,
)
from .io import (
    build_manifest,
    parse_ground_truth,
    parse_predictions,
    read_class_counts,
    read_manifest,
    write_class_counts,
    write_manifest,
    write_predictions,
    write_weights,
)
from .metrics import (
    auc,
    auc_above_sensitivity,
    format_report_keyvalues,
    format_report_table,
    full_report,
    render_roc_svg,
    roc_curve,
    roc_points_csv,
)
from .preprocess import preprocess_batch


def common_options(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Seed for every stochastic choice in this run.")(fn)
    fn = click.option("--config", "config_path",
                      type=click.Path(exists=True, dir_okay=False),
                      default=None, help="key = value run configuration file.")(fn)
    return fn


def handles_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (LesionKitError, OSError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load(config_path) -> RunConfig:
    return load_config(config_path) if config_path else RunConfig()


def _write_provenance(out, command: str, seed: int, config_path) -> None:
    out = Path(out)
    prov = out / "run.prov" if out.is_dir() else Path(str(out) + ".prov")
    prov.write_text(
        f"command = {command}\n"
        f"seed = {seed}\n"
        f"config = {config_digest(config_path)}\n"
        f"version = {__version__}\n",
        encoding="utf-8",
    )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="lesionkit")
def main():
    """Skin lesion pipeline: preprocessing, augmentation, class-imbalance
    tooling, prediction aggregation and challenge-style scoring."""


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--threshold", type=float, default=None,
              help="Border luminance threshold (overrides config).")
@click.option("--min-keep", type=float, default=None,
              help="Over-trim guard fraction (overrides config).")
@click.option("--target", type=int, default=None,
              help="Short-side size after trim (overrides config).")
@click.option("--bottom-crop", type=float, default=None,
              help="Fraction of rows to drop from the bottom first.")
@click.option("--bottom-crop-source", multiple=True,
              help="Restrict --bottom-crop to these source datasets.")
@common_options
@handles_errors
def preprocess(manifest_path, out_dir, threshold, min_keep, target,
               bottom_crop, bottom_crop_source, seed, config_path):
    """Trim black borders, rescale, and re-encode all manifest images."""
    cfg = _load(config_path)
    result = preprocess_batch(
        read_manifest(manifest_path),
        out_dir,
        threshold=threshold if threshold is not None else cfg.border_threshold,
        min_keep=min_keep if min_keep is not None else cfg.min_keep,
        target_short_side=target if target is not None else cfg.target_short_side,
        bottom_crop=bottom_crop if bottom_crop is not None else cfg.bottom_crop,
        bottom_crop_sources=tuple(bottom_crop_source),
    )
    out_manifest = Path(out_dir) / "manifest.csv"
    write_manifest(result.manifest, out_manifest)
    _write_provenance(out_dir, "preprocess", seed, config_path)
    click.echo(f"processed {len(result.manifest)} images into {out_dir}")
    if result.failures:
        for path, reason in result.failures:
            click.echo(f"failed: {path}: {reason}", err=True)
        sys.exit(1)


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--source", default="local", show_default=True,
              help="Source dataset name recorded per image.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def manifest(root, source, out_path, seed, config_path):
    """Build a manifest from a ROOT directory of per-category folders."""
    built = build_manifest(root, source=source)
    write_manifest(built, out_path)
    _write_provenance(out_path, "manifest", seed, config_path)
    click.echo(f"{len(built)} records -> {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--fraction", type=float, default=None,
              help="Validation fraction (overrides config).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def split(manifest_path, fraction, out_path, seed, config_path):
    """Assign a stratified train/valid split to a manifest."""
    cfg = _load(config_path)
    frac = fraction if fraction is not None else cfg.valid_fraction
    result = split_manifest(read_manifest(manifest_path), valid_fraction=frac, seed=seed)
    write_manifest(result, out_path)
    _write_provenance(out_path, "split", seed, config_path)
    n_valid = sum(1 for r in result if r.split == "valid")
    click.echo(f"train {len(result) - n_valid} / valid {n_valid} -> {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_name", default="train", show_default=True,
              help="Which split to balance.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def oversample(manifest_path, split_name, out_path, seed, config_path):
    """Duplicate minority-class records until every class matches the majority."""
    result = oversample_manifest(read_manifest(manifest_path), seed=seed, split=split_name)
    write_manifest(result, out_path)
    _write_provenance(out_path, "oversample", seed, config_path)
    click.echo(f"{len(result)} records -> {out_path}")


@main.command()
@click.option("--counts", "counts_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="category,count CSV.")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Count classes from a manifest instead.")
@click.option("--split", "split_name", default=None,
              help="With --manifest, count only this split.")
@click.option("--beta", type=float, default=None,
              help="Effective-number beta (overrides config).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def weights(counts_path, manifest_path, split_name, beta, out_path, seed, config_path):
    """Effective-number class weights from counts, normalized to sum 9."""
    if (counts_path is None) == (manifest_path is None):
        raise click.UsageError("provide exactly one of --counts or --manifest")
    cfg = _load(config_path)
    if counts_path:
        counts = read_class_counts(counts_path)
    else:
        counts = read_manifest(manifest_path).class_counts(split=split_name)
    w = effective_weights(counts, beta=beta if beta is not None else cfg.weight_beta)
    write_weights(w, out_path)
    _write_provenance(out_path, "weights", seed, config_path)
    for name, value in zip(CATEGORY_NAMES, w):
        click.echo(f"weight.{name} = {float(value)!r}")
    click.echo(f"weights -> {out_path}")


@main.command()
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--counts", "counts_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def rescale(pred_path, counts_path, out_path, seed, config_path):
    """Divide confidences by training priors and renormalize rows."""
    preds = parse_predictions(pred_path)
    counts = read_class_counts(counts_path)
    write_predictions(prior_rescale(preds, counts), out_path)
    _write_provenance(out_path, "rescale", seed, config_path)
    click.echo(f"rescaled -> {out_path}")


@main.command(name="tta-merge")
@click.option("--regular", "regular_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Predictions on untransformed images.")
@click.argument("augmented", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--beta", type=float, default=None,
              help="Weight of the regular predictions (overrides config).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def tta_merge_cmd(regular_path, augmented, beta, out_path, seed, config_path):
    """Blend regular predictions with averaged AUGMENTED prediction files."""
    cfg = _load(config_path)
    merged = tta_merge(
        parse_predictions(regular_path),
        [parse_predictions(p) for p in augmented],
        beta=beta if beta is not None else cfg.tta_beta,
    )
    write_predictions(merged, out_path)
    _write_provenance(out_path, "tta-merge", seed, config_path)
    click.echo(f"merged {len(augmented)} augmented sets -> {out_path}")


@main.command()
@click.argument("members", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--weights", "weight_spec", default=None,
              help="Comma-separated member weights (default: uniform).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def ensemble(members, weight_spec, out_path, seed, config_path):
    """Average prediction files from MEMBERS into one set."""
    member_weights = None
    if weight_spec is not None:
        try:
            member_weights = [float(p) for p in weight_spec.split(",")]
        except ValueError:
            raise click.UsageError(f"bad --weights: {weight_spec!r}") from None
    merged = ensemble_mean([parse_predictions(p) for p in members], weights=member_weights)
    write_predictions(merged, out_path)
    _write_provenance(out_path, "ensemble", seed, config_path)
    click.echo(f"ensembled {len(members)} members -> {out_path}")


@main.command()
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--counts", "counts_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Training counts recorded with the report.")
@click.option("--threshold", type=float, default=0.5, show_default=True,
              help="Binarization threshold for the per-class metrics.")
@click.option("--format", "fmt", type=click.Choice(["table", "keyvalues"]),
              default="table", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def score(pred_path, truth_path, counts_path, threshold, fmt, out_path, seed, config_path):
    """Score predictions against ground truth across all nine categories."""
    preds = parse_predictions(pred_path)
    truth = parse_ground_truth(truth_path)
    counts = read_class_counts(counts_path) if counts_path else None
    report = full_report(preds, truth, counts=counts, threshold=threshold)
    text = format_report_table(report) if fmt == "table" else format_report_keyvalues(report)
    click.echo(text, nl=False)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        _write_provenance(out_path, "score", seed, config_path)


@main.command()
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--truth", "truth_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--category", "category_name", required=True,
              type=click.Choice(list(CATEGORY_NAMES)))
@click.option("--points", "points_path", default=None, type=click.Path(dir_okay=False),
              help="Also write the curve points as CSV.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="SVG output path.")
@common_options
@handles_errors
def roc(pred_path, truth_path, category_name, points_path, out_path, seed, config_path):
    """One-vs-rest ROC curve for one category, rendered as SVG."""
    preds = parse_predictions(pred_path)
    truth = parse_ground_truth(truth_path)
    aligned_preds, aligned_truth = align(preds, truth)
    cat = Category.from_name(category_name)
    scores = np.asarray(aligned_preds.values)[:, int(cat)]
    labels = (np.asarray(aligned_truth.labels) == int(cat)).astype(np.int64)
    curve = roc_curve(scores, labels)
    Path(out_path).write_bytes(render_roc_svg(curve, label=category_name))
    if points_path:
        Path(points_path).write_text(roc_points_csv(curve), encoding="utf-8")
    _write_provenance(out_path, "roc", seed, config_path)
    click.echo(
        f"{category_name}: auc = {auc(curve):.6f}, "
        f"auc_sens80 = {auc_above_sensitivity(curve):.6f}"
    )


@main.command(name="augment-preview")
@click.option("--image", "image_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--n", "n_variants", type=int, default=8, show_default=True,
              help="Number of sampled variants (plus the TTA row).")
@click.option("--tta/--no-tta", default=False, show_default=True,
              help="Preview the 8 deterministic TTA crops instead.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def augment_preview(image_path, n_variants, tta, out_path, seed, config_path):
    """Write a contact sheet of augmented variants of one image."""
    from PIL import Image

    cfg = _load(config_path)
    with Image.open(image_path) as handle:
        img = np.asarray(handle.convert("RGB"), dtype=np.uint8)
    if tta:
        crop = cfg.tta_crop if cfg.tta_crop is not None else min(img.shape[:2])
        tiles = tta_variants(img, crop_size=crop, scale=cfg.tta_scale)
    else:
        if cfg.crop_pad_size is None:
            cfg.crop_pad_size = min(img.shape[:2])
        policy = cfg.augmentation_policy()
        stem = Path(image_path).stem
        tiles = [
            apply_transform(img, sample_transform(policy, seed, f"{stem}#{i}"))
            for i in range(n_variants)
        ]
    sheet = contact_sheet(tiles, columns=4)
    Image.fromarray(sheet).save(out_path, format="PNG")
    _write_provenance(out_path, "augment-preview", seed, config_path)
    click.echo(f"{len(tiles)} variants -> {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", "backend_spec", required=True,
              help="Backend command line (shell-quoted).")
@click.option("--split", "split_name", default=None,
              help="Restrict to one split of the manifest.")
@click.option("--timeout", type=float, default=None,
              help="Per-image answer timeout in seconds (overrides config).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def infer(manifest_path, backend_spec, split_name, timeout, out_path, seed, config_path):
    """Collect predictions for manifest images from an external backend."""
    cfg = _load(config_path)
    records = list(read_manifest(manifest_path))
    if split_name is not None:
        records = [r for r in records if r.split == split_name]
    if not records:
        raise click.ClickException("no manifest records to infer")
    preds = infer_paths(
        shlex.split(backend_spec),
        [r.path for r in records],
        timeout=timeout if timeout is not None else cfg.infer_timeout,
    )
    write_predictions(preds, out_path)
    _write_provenance(out_path, "infer", seed, config_path)
    click.echo(f"{len(records)} predictions -> {out_path}")


@main.command(name="counts")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--split", "split_name", default=None,
              help="Count only this split.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@common_options
@handles_errors
def counts_cmd(manifest_path, split_name, out_path, seed, config_path):
    """Tally manifest records per category into a counts CSV."""
    counts = read_manifest(manifest_path).class_counts(split=split_name)
    write_class_counts(counts, out_path)
    _write_provenance(out_path, "counts", seed, config_path)
    click.echo(f"counts -> {out_path}")


if __name__ == "__main__":
    main()
