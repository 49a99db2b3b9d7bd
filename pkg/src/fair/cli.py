"""``fair`` command line: train, infer, eval, analyze, ingest-visa.

Exit codes: 0 success, 2 configuration/usage, 3 data, 4 undefined metric.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, evaluation
from .config import ExperimentConfig
from .dataset import ingest_visa, train_dir
from .errors import ConfigurationError, DataError, UndefinedMetricError
from .freqfilter import FilterSpec
from .imagecore import list_images, load_image
from .pipeline import Detector, train

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_METRIC = 0, 2, 3, 4

log = logging.getLogger("fair")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(directory) -> Path:
    """List every file under ``directory`` with its SHA-256 in ``manifest.json``."""
    directory = Path(directory)
    manifest = directory / "manifest.json"
    files = sorted(p for p in directory.rglob("*") if p.is_file() and p != manifest)
    entries = [{"path": str(p.relative_to(directory)), "sha256": sha256(p)} for p in files]
    manifest.write_text(json.dumps({"files": entries}, indent=2))
    return manifest


def _require_file(path, what):
    if path is None or not Path(path).is_file():
        raise ConfigurationError(f"{what} not found: {path}", what)


def cmd_train(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    tree = cfg.to_dict()
    if args.seed is not None:
        tree["train"]["seed"] = args.seed
    if args.epochs is not None:
        tree["train"]["epochs"] = args.epochs
    cfg = ExperimentConfig.from_dict(tree)
    data = train_dir(args.data)
    out = analysis.ensure_dir(args.out)
    cfg.dump(out / "config.yaml")
    record = train(data, cfg.train_config(with_texture=True), out_dir=out, resume=args.resume)
    record.save(out / "run.json")
    analysis.save_loss_plot(out / "loss_curve.png", record.loss_curve)
    write_manifest(out)
    print(out)
    return EXIT_OK


def _scoring_from(args):
    return ExperimentConfig.load(args.config).scoring_config() if args.config else None


def cmd_infer(args) -> int:
    _require_file(args.ckpt, "checkpoint")
    det = Detector.load(args.ckpt, _scoring_from(args))
    if args.image:
        paths = [Path(args.image)]
    else:
        if not Path(args.dir).is_dir():
            raise DataError(f"image directory not found: {args.dir}")
        paths = list_images(args.dir)
    if not paths or not all(p.is_file() for p in paths):
        raise DataError("no input images")
    outputs = {}
    print("name,image_score")
    for p in paths:
        img = det.prepare(load_image(p))
        res = det.infer(img, resize_input=False)
        outputs[p.name] = (img, res)
        print(f"{p.name},{res.image_score:.10g}")
    if args.save_maps:
        out = analysis.ensure_dir(args.save_maps)
        evaluation.save_maps(out, outputs, analysis.heatmap_overlay)
        write_manifest(out)
    return EXIT_OK


def cmd_eval(args) -> int:
    for ck in args.ckpt:
        _require_file(ck, "checkpoint")
    if args.runs is not None and args.runs != len(args.ckpt):
        raise ConfigurationError(f"--runs {args.runs} but {len(args.ckpt)} checkpoints given", "runs")
    exp = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    fpr_limit = exp.tree["eval"]["fpr_limit"]
    report_path = Path(args.report)
    out = analysis.ensure_dir(report_path.parent)
    category = Path(args.data).resolve().name
    pixel = not args.no_pixel
    reports = []
    for i, ck in enumerate(args.ckpt):
        det = Detector.load(ck, exp.scoring_config())
        metrics, rows, outputs = evaluation.evaluate_category(
            det, args.data, args.gt, pixel=pixel, fpr_limit=fpr_limit,
            resize_input=exp.tree["data"]["resize"])
        suffix = f"_run{i}" if len(args.ckpt) > 1 else ""
        evaluation.write_scores_csv(out / f"{report_path.stem}{suffix}_scores.csv", rows)
        if not args.no_maps:
            evaluation.save_maps(out / f"{report_path.stem}{suffix}_maps", outputs,
                                 analysis.heatmap_overlay)
        reports.append({"image_auroc": metrics["image_auroc"], "pixel_auroc": metrics["pixel_auroc"],
                        "aupro": metrics["aupro"], "per_category": {category: metrics}})
    report = reports[0] if len(reports) == 1 else evaluation.aggregate(reports, args.aggregate)
    evaluation.write_report(report_path, report)
    write_manifest(out)
    print(json.dumps({k: report[k] for k in ("image_auroc", "pixel_auroc", "aupro")}))
    return EXIT_OK


def _filter_spec(args) -> FilterSpec:
    try:
        return FilterSpec(args.family, args.d0, args.n)
    except ValueError as exc:
        raise ConfigurationError(str(exc), "filter") from exc


def _load_analysis_image(args):
    if args.image is None:
        raise ConfigurationError("--image is required", "image")
    if not Path(args.image).is_file():
        raise DataError(f"image not found: {args.image}")
    size = args.size
    return load_image(args.image, size=(size, size) if size else None)


def cmd_analyze(args) -> int:
    out = analysis.ensure_dir(args.out)
    what = args.what
    if what == "transfer":
        spec = _filter_spec(args)
        d_max = np.hypot(args.size // 2, args.size // 2)
        d, h = analysis.transfer_curve(spec, d_max)
        analysis.write_curve_csv(out / "transfer.csv", d, h)
        analysis.plot_curves(out / "transfer.png", d, {spec.family.value: h}, "D(u,v)", "H")
    elif what == "impulse":
        spec = _filter_spec(args)
        r, h = analysis.impulse_profile(spec, args.size)
        analysis.write_curve_csv(out / "impulse.csv", r, h)
        analysis.plot_curves(out / "impulse.png", r[:64], {spec.family.value: h[:64]}, "radius", "h")
    elif what == "ringing":
        table = analysis.ringing_table(args.d0, args.n, args.size)
        with open(out / "ringing.csv", "w") as fh:
            fh.write("family,out_of_lobe_energy\n")
            for fam, v in table.items():
                fh.write(f"{fam},{v:.10g}\n")
        if args.image:
            img = _load_analysis_image(args)
            examples = analysis.ringing_examples(img, args.d0, args.n)
            analysis.plot_images(out / "ringing.png", {"input": img, **examples})
    elif what == "energy":
        img = _load_analysis_image(args)
        centers, share = analysis.energy_share(img, args.n_bins)
        analysis.write_curve_csv(out / "energy.csv", centers, share)
        analysis.plot_curves(out / "energy.png", centers, {"energy share": share}, "D(u,v)", "share")
    elif what == "freq-bias":
        if not args.ckpt:
            raise ConfigurationError("freq-bias needs --ckpt", "ckpt")
        _require_file(args.ckpt, "checkpoint")
        det = Detector.load(args.ckpt)
        normal_dir, anomalous = args.normal, args.anomalous
        if args.data:
            test = Path(args.data) / "test"
            normal_dir = normal_dir or test / "good"
            anomalous = anomalous or [p for p in sorted(test.iterdir()) if p.is_dir() and p.name != "good"]
        if not normal_dir or not anomalous:
            raise ConfigurationError("freq-bias needs --data or both --normal and --anomalous", "data")
        anomalous = [anomalous] if isinstance(anomalous, (str, Path)) else anomalous
        normal = [load_image(p) for p in list_images(normal_dir)]
        bad = [load_image(p) for d in anomalous for p in list_images(d)]
        if not normal or not bad:
            raise DataError("freq-bias needs at least one normal and one anomalous image")
        centers, n_curve, a_curve = analysis.frequency_bias(det, normal, bad, args.n_bins,
                                                            args.magnitude_only)
        analysis.write_curve_csv(out / "freq_bias_normal.csv", centers, n_curve)
        analysis.write_curve_csv(out / "freq_bias_anomalous.csv", centers, a_curve)
        analysis.plot_curves(out / "freq_bias.png", centers, {"normal": n_curve, "anomalous": a_curve},
                             "D(u,v)", "cosine similarity")
    write_manifest(out)
    return EXIT_OK


def cmd_ingest_visa(args) -> int:
    if not Path(args.src).is_dir():
        raise DataError(f"VisA root not found: {args.src}")
    cats = ingest_visa(args.src, args.out, args.test_normal_fraction, args.seed)
    for c in cats:
        print(c)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fair", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a restoration model on normal images")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True, help="category root or directory of normal images")
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("infer", help="restore and score images")
    i.add_argument("--ckpt", required=True)
    src = i.add_mutually_exclusive_group(required=True)
    src.add_argument("--image")
    src.add_argument("--dir")
    i.add_argument("--save-maps")
    i.add_argument("--config", help="experiment config supplying the scoring section")
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("eval", help="image/pixel AUROC and AUPRO on a labelled test split")
    e.add_argument("--ckpt", required=True, nargs="+", help="one checkpoint per run")
    e.add_argument("--data", required=True, help="category root (with test/)")
    e.add_argument("--gt", help="ground-truth root (default <data>/ground_truth)")
    e.add_argument("--report", required=True)
    e.add_argument("--runs", type=int)
    e.add_argument("--aggregate", choices=("mean", "median"), default="mean")
    e.add_argument("--no-pixel", action="store_true", help="image-level metrics only")
    e.add_argument("--no-maps", action="store_true", help="skip heatmap overlays")
    e.add_argument("--config")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", help="frequency diagnostics")
    a.add_argument("what", choices=("transfer", "impulse", "ringing", "energy", "freq-bias"))
    a.add_argument("--out", required=True)
    a.add_argument("--family", default="butterworth", choices=("ideal", "gaussian", "butterworth"))
    a.add_argument("--d0", type=float, default=30.0)
    a.add_argument("--n", type=int, default=2)
    a.add_argument("--size", type=int, default=256)
    a.add_argument("--image")
    a.add_argument("--n-bins", type=int, default=64)
    a.add_argument("--magnitude-only", action="store_true")
    a.add_argument("--ckpt")
    a.add_argument("--data", help="category root; normal = test/good, anomalous = other test dirs")
    a.add_argument("--normal")
    a.add_argument("--anomalous")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("ingest-visa", help="convert VisA into the MVTec layout")
    v.add_argument("--src", required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--test-normal-fraction", type=float, default=0.1)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_ingest_visa)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"fair: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"fair: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except UndefinedMetricError as exc:
        print(f"fair: metric undefined: {exc}", file=sys.stderr)
        return EXIT_METRIC


if __name__ == "__main__":
    sys.exit(main())
