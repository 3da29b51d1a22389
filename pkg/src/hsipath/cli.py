"""Command-line front end.

Subcommands: synth, rgb, extract, classify, evaluate, run, compare.
Each takes a YAML configuration file where relevant; flags override
file values. Errors print one categorized line to stderr and exit
nonzero (config=2, validation=3, format=4, io=5).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np
import yaml

from . import classify as classify_mod
from . import cube_io, pipeline, rgbrecon, synth
from .errors import FormatError, ValidationError
from .features import FeatureStack
from .metrics_stats import METRIC_NAMES, metrics

EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_FORMAT = 4
EXIT_IO = 5


class ConfigError(Exception):
    pass


def _load_yaml(path, required):
    if path is None:
        if required:
            raise ConfigError("a --config file is required")
        return {}
    if not os.path.exists(path):
        raise ConfigError("config not found: %s" % path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError("cannot parse %s: %s" % (path, exc)) from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping: %s" % path)
    return raw


def _run_config(args) -> pipeline.RunConfig:
    raw = _load_yaml(args.config, True)
    cfg = pipeline.config_from_dict(raw)
    updates = {}
    if getattr(args, "out_dir", None) is not None:
        updates["out_dir"] = args.out_dir
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    workers = getattr(args, "workers", None)
    if workers is None:
        env = os.environ.get("HSIPATH_WORKERS", "").strip()
        run_sec = raw.get("run") or {}
        if env and "workers" not in run_sec:
            try:
                workers = int(env)
            except ValueError:
                raise ConfigError("HSIPATH_WORKERS must be an integer")
    if workers is not None:
        updates["workers"] = workers
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _tool_config(args) -> pipeline.ToolConfig:
    raw = _load_yaml(args.config, False)
    cfg = pipeline.tool_config_from_dict(raw)
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "fraction", None) is not None:
        updates["fraction"] = args.fraction
    if getattr(args, "extractor", None) is not None:
        updates["extractor"] = args.extractor
    if getattr(args, "method", None) is not None:
        updates["classifier"] = args.method
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _cmd_synth(args) -> int:
    raw = _load_yaml(args.config, True)
    if raw.get("phantom") is None:
        raise ConfigError("synth needs a 'phantom' section")
    spec = pipeline._phantom_from_dict(dict(raw["phantom"]))
    cube, gt = synth.make_phantom(spec)
    out_dir = args.out_dir or (raw.get("run") or {}).get("out_dir") or "."
    os.makedirs(out_dir, exist_ok=True)
    cube_path = os.path.join(out_dir, "phantom.hsc")
    gt_path = os.path.join(out_dir, "phantom_gt.pgm")
    cube_io.save_cube(cube, cube_path)
    cube_io.save_label_map(gt, gt_path)
    print("cube: %s" % cube_path)
    print("gt: %s" % gt_path)
    return 0


def _cmd_rgb(args) -> int:
    cube = cube_io.load_cube(args.cube)
    rgb = rgbrecon.hsi_to_rgb(cube)
    cube_io.save_render(rgb, args.out)
    print("render: %s" % args.out)
    if args.projection is not None:
        proj = synth.make_rgb_projection(cube)
        cube_io.save_cube(proj, args.projection)
        print("projection: %s" % args.projection)
    return 0


def _cmd_extract(args) -> int:
    cfg = _tool_config(args)
    cube = cube_io.load_cube(args.cube)
    gt = None
    if args.gt is not None:
        gt = cube_io.load_label_map(args.gt)
    if cfg.extractor == "mpri" and gt is None:
        raise ValidationError("mpri extraction needs --gt for supervision")
    feats = pipeline.extract_features(cube, gt, cfg, cfg.master_seed)
    cube_io.save_cube(feats.to_cube(), args.out)
    print("features: %s (%d dims)" % (args.out, feats.dim))
    return 0


def _cmd_classify(args) -> int:
    cfg = _tool_config(args)
    cube = cube_io.load_cube(args.cube)
    gt = cube_io.load_label_map(args.gt)
    feats = FeatureStack.from_cube(cube)
    pred, counts = classify_mod.classify_patch(
        feats, gt, cfg.classifier, cfg.fraction, cfg.master_seed,
        ssl=cfg.ssl, svm=cfg.svm,
    )
    cube_io.save_label_map(pred, args.out)
    rep = metrics(counts)
    print("prediction: %s" % args.out)
    for name in METRIC_NAMES:
        val = getattr(rep, name)
        print("%s: %s" % (name, "n/a" if val is None else "%.6f" % val))
    return 0


def _cmd_evaluate(args) -> int:
    from .metrics_stats import confusion

    pred = cube_io.load_label_map(args.pred)
    gt = cube_io.load_label_map(args.gt)
    if (pred.rows, pred.cols) != (gt.rows, gt.cols):
        raise ValidationError("prediction and gt dims differ")
    mask = gt.labels != cube_io.UNLABELED
    mask &= pred.labels != cube_io.UNLABELED
    counts = confusion(pred, gt, mask)
    rep = metrics(counts)
    lines = ["metric,value"]
    for name in METRIC_NAMES:
        val = getattr(rep, name)
        txt = "" if val is None else "%.6f" % val
        print("%s: %s" % (name, txt if txt else "n/a"))
        lines.append("%s,%s" % (name, txt))
    if args.out is not None:
        pipeline._write_text(args.out, lines)
    return 0


def _cmd_run(args) -> int:
    cfg = _run_config(args)
    result = pipeline.run_experiment(cfg)
    micro = result["micro"]
    bacc = micro.bacc
    print("out_dir: %s" % result["out_dir"])
    print("micro_bacc: %s" % ("n/a" if bacc is None else "%.6f" % bacc))
    return 0


def _cmd_compare(args) -> int:
    results = pipeline.compare_runs(args.a, args.b, out_path=args.out)
    for name in METRIC_NAMES:
        p, reject = results[name]
        p_txt = "n/a" if p is None else "%.6e" % p
        print("%s: p=%s reject=%s" % (name, p_txt,
                                      "true" if reject else "false"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hsipath",
        description="Spectral-spatial classification pipeline for "
                    "hyperspectral cubes.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=True):
        if config:
            p.add_argument("--config", help="YAML configuration file")
        if seed:
            p.add_argument("--seed", type=int,
                           help="override the configured master seed")

    p = sub.add_parser("synth", help="generate a phantom cube and labels")
    common(p, seed=False)
    p.add_argument("--out-dir", help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("rgb", help="render a cube to sRGB")
    p.add_argument("--cube", required=True)
    p.add_argument("--out", required=True, help="PPM render path")
    p.add_argument("--projection",
                   help="also write the 3-band projection cube here")
    p.set_defaults(func=_cmd_rgb)

    p = sub.add_parser("extract", help="feature extraction on one cube")
    common(p)
    p.add_argument("--cube", required=True)
    p.add_argument("--gt", help="label map (needed for mpri)")
    p.add_argument("--extractor", choices=("none", "mpri", "tensorssa"))
    p.add_argument("--fraction", type=float)
    p.add_argument("--out", required=True, help="feature cube path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("classify", help="classify one feature cube")
    common(p)
    p.add_argument("--cube", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--method", choices=("ssl", "knn", "svm"))
    p.add_argument("--fraction", type=float)
    p.add_argument("--out", required=True, help="prediction PGM path")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="score a prediction against gt")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", help="metrics CSV path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run a full experiment")
    common(p)
    p.add_argument("--out-dir", help="override the output directory")
    p.add_argument("--workers", type=int, help="patch worker count")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="significance test of two runs")
    p.add_argument("--a", required=True, help="per_image.csv of run A")
    p.add_argument("--b", required=True, help="per_image.csv of run B")
    p.add_argument("--out", help="significance CSV path")
    p.set_defaults(func=_cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error[config]: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print("error[validation]: %s" % exc, file=sys.stderr)
        return EXIT_VALIDATION
    except FormatError as exc:
        print("error[format]: %s" % exc, file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print("error[io]: %s" % exc, file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
