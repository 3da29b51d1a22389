"""Experiment orchestration: load or synthesize data, tile into
patches, extract features, classify, aggregate, and write reports.

Outputs per run directory:
    manifest.txt        resolved configuration echo (YAML)
    per_image.csv       one row per (image, method, representation)
    micro.csv           pooled-count metrics over all patches
    macro.csv           per-metric mean / sample std / count over images
    pred_<image>.ppm    full prediction render (gray = not evaluated)
    pred_<image>_p<k>.pgm   per-patch prediction label maps

Per-patch label-sampling seeds derive from the master seed by a
64-bit mix of master_seed XOR global patch index, so adding patches
never reshuffles earlier patches' samples. Identical configurations
produce byte-identical outputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import yaml

from . import classify as classify_mod
from . import cube_io, synth
from .errors import ValidationError
from .features import FeatureStack
from .metrics_stats import (
    METRIC_NAMES,
    macro_aggregate,
    metrics,
    micro_aggregate,
    wilcoxon_ranksum,
)
from .mpri import MpriConfig, PriConfig, mpri_extract
from .tensorssa import TssaConfig, tensorssa_extract

_MASK64 = (1 << 64) - 1

# prediction render palette
_COLOR_NEG = (0.15, 0.25, 0.85)
_COLOR_POS = (0.95, 0.85, 0.10)
_COLOR_NONE = (0.50, 0.50, 0.50)


def patch_seed(master_seed: int, patch_index: int) -> int:
    """Distinct, stable per-patch seed: splitmix64(master ^ index)."""
    x = ((int(master_seed) & _MASK64) ^ (int(patch_index) & _MASK64)) & _MASK64
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RunConfig:
    out_dir: str = "out"
    master_seed: int = 0
    representation: str = "hsi"
    extractor: str = "none"
    classifier: str = "ssl"
    fraction: float = 0.01
    patch_rows: int = 230
    patch_cols: int = 258
    inputs: tuple = ()
    phantom: synth.PhantomSpec | None = None
    mpri: MpriConfig = field(default_factory=MpriConfig)
    tensorssa: TssaConfig = field(default_factory=TssaConfig)
    ssl: classify_mod.SslConfig = field(default_factory=classify_mod.SslConfig)
    svm: classify_mod.SvmConfig = field(default_factory=classify_mod.SvmConfig)
    workers: int = 1

    def __post_init__(self):
        if self.representation not in ("hsi", "rgb"):
            raise ValidationError("representation must be hsi or rgb")
        if self.extractor not in ("none", "mpri", "tensorssa"):
            raise ValidationError("extractor must be none, mpri or tensorssa")
        if self.classifier not in ("ssl", "knn", "svm"):
            raise ValidationError("classifier must be ssl, knn or svm")
        if not (0.0 < self.fraction <= 1.0):
            raise ValidationError("fraction must lie in (0, 1]")
        if self.patch_rows < 1 or self.patch_cols < 1:
            raise ValidationError("patch dims must be positive")
        if bool(self.inputs) == (self.phantom is not None):
            raise ValidationError(
                "exactly one of input paths or a phantom spec is required"
            )
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")


def _phantom_from_dict(d: dict) -> synth.PhantomSpec:
    known = {
        "rows", "cols", "bands", "class_count", "class_spectra",
        "region_seed", "noise_seed", "noise_sigma", "gain_jitter",
        "wavelengths",
    }
    unknown = set(d) - known
    if unknown:
        raise ValidationError("unknown phantom keys: %s" % sorted(unknown))
    kwargs = dict(d)
    spectra = kwargs.get("class_spectra")
    if isinstance(spectra, str):
        if spectra != "standard":
            raise ValidationError(
                "class_spectra must be 'standard' or explicit lists"
            )
        kwargs["class_spectra"] = None
    if kwargs.get("class_spectra") is not None:
        kwargs["class_spectra"] = np.asarray(kwargs["class_spectra"],
                                             dtype=np.float64)
    if kwargs.get("wavelengths") is not None:
        kwargs["wavelengths"] = np.asarray(kwargs["wavelengths"],
                                           dtype=np.float64)
    return synth.PhantomSpec(**kwargs)


def _take_section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ValidationError("config section %r must be a mapping" % name)
    return dict(sec)


def _sub_configs(raw: dict) -> dict:
    mpri_d = _take_section(raw, "mpri")
    pri_d = {
        k: mpri_d.pop(k) for k in ("sigma2", "max_iter", "tol")
        if k in mpri_d
    }
    try:
        mpri_cfg = MpriConfig(pri=PriConfig(**pri_d), **mpri_d)
        tssa_cfg = TssaConfig(**_take_section(raw, "tensorssa"))
        cls_d = _take_section(raw, "classify")
        svm_d = {k: cls_d.pop(k) for k in ("lam", "epochs") if k in cls_d}
        if "lambda" in cls_d:
            svm_d["lam"] = cls_d.pop("lambda")
        ssl_cfg = classify_mod.SslConfig(**cls_d)
        svm_cfg = classify_mod.SvmConfig(**svm_d)
    except TypeError as exc:
        raise ValidationError("bad config key: %s" % exc) from exc
    return {"mpri": mpri_cfg, "tensorssa": tssa_cfg,
            "ssl": ssl_cfg, "svm": svm_cfg}


def config_from_dict(raw: dict) -> RunConfig:
    """Build a RunConfig from a parsed (YAML) mapping."""
    if not isinstance(raw, dict):
        raise ValidationError("run configuration must be a mapping")
    run = _take_section(raw, "run")
    known_run = {
        "out_dir", "master_seed", "representation", "extractor",
        "classifier", "fraction", "patch_rows", "patch_cols", "workers",
    }
    unknown = set(run) - known_run
    if unknown:
        raise ValidationError("unknown run keys: %s" % sorted(unknown))

    inputs = []
    for entry in raw.get("inputs") or ():
        if not isinstance(entry, dict) or "cube" not in entry or "gt" not in entry:
            raise ValidationError("each input needs 'cube' and 'gt' paths")
        inputs.append((str(entry["cube"]), str(entry["gt"])))

    phantom = None
    if raw.get("phantom") is not None:
        phantom = _phantom_from_dict(_take_section(raw, "phantom"))

    try:
        return RunConfig(
            inputs=tuple(inputs), phantom=phantom, **_sub_configs(raw), **run,
        )
    except TypeError as exc:
        raise ValidationError("bad config key: %s" % exc) from exc


@dataclass(frozen=True)
class ToolConfig:
    """Sub-configs for single-cube CLI tools (no input-source fields)."""

    master_seed: int = 0
    extractor: str = "none"
    classifier: str = "ssl"
    fraction: float = 0.01
    mpri: MpriConfig = field(default_factory=MpriConfig)
    tensorssa: TssaConfig = field(default_factory=TssaConfig)
    ssl: classify_mod.SslConfig = field(default_factory=classify_mod.SslConfig)
    svm: classify_mod.SvmConfig = field(default_factory=classify_mod.SvmConfig)

    def __post_init__(self):
        if self.extractor not in ("none", "mpri", "tensorssa"):
            raise ValidationError("extractor must be none, mpri or tensorssa")
        if self.classifier not in ("ssl", "knn", "svm"):
            raise ValidationError("classifier must be ssl, knn or svm")
        if not (0.0 < self.fraction <= 1.0):
            raise ValidationError("fraction must lie in (0, 1]")


def tool_config_from_dict(raw: dict) -> ToolConfig:
    """Like config_from_dict but without requiring an input source."""
    if not isinstance(raw, dict):
        raise ValidationError("configuration must be a mapping")
    run = _take_section(raw, "run")
    kwargs = {
        k: run[k] for k in ("master_seed", "extractor", "classifier",
                            "fraction")
        if k in run
    }
    return ToolConfig(**_sub_configs(raw), **kwargs)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    return config_from_dict(raw or {})


def _resolved_dict(cfg: RunConfig) -> dict:
    phantom = None
    if cfg.phantom is not None:
        phantom = {
            "rows": cfg.phantom.rows,
            "cols": cfg.phantom.cols,
            "bands": cfg.phantom.bands,
            "class_count": cfg.phantom.class_count,
            "class_spectra": [
                [float(v) for v in row] for row in cfg.phantom.class_spectra
            ],
            "region_seed": cfg.phantom.region_seed,
            "noise_seed": cfg.phantom.noise_seed,
            "noise_sigma": float(cfg.phantom.noise_sigma),
            "gain_jitter": float(cfg.phantom.gain_jitter),
            "wavelengths": [float(v) for v in cfg.phantom.wavelengths],
        }
    return {
        "run": {
            "out_dir": cfg.out_dir,
            "master_seed": cfg.master_seed,
            "representation": cfg.representation,
            "extractor": cfg.extractor,
            "classifier": cfg.classifier,
            "fraction": cfg.fraction,
            "patch_rows": cfg.patch_rows,
            "patch_cols": cfg.patch_cols,
            "workers": cfg.workers,
        },
        "inputs": [{"cube": c, "gt": g} for c, g in cfg.inputs],
        "phantom": phantom,
        "mpri": {
            "scales": list(cfg.mpri.scales),
            "layers": cfg.mpri.layers,
            "betas": list(cfg.mpri.betas),
            "sigma2": cfg.mpri.pri.sigma2,
            "max_iter": cfg.mpri.pri.max_iter,
            "tol": cfg.mpri.pri.tol,
            "rlda_gamma": cfg.mpri.rlda_gamma,
            "rlda_dims": cfg.mpri.rlda_dims,
            "include_input": cfg.mpri.include_input,
        },
        "tensorssa": {
            "u": cfg.tensorssa.u,
            "l": cfg.tensorssa.l,
            "rtub": cfg.tensorssa.rtub,
        },
        "classify": {
            "k": cfg.ssl.k,
            "tau": cfg.ssl.tau,
            "max_rounds": cfg.ssl.max_rounds,
            "batch_cap": cfg.ssl.batch_cap,
            "lambda": cfg.svm.lam,
            "epochs": cfg.svm.epochs,
        },
    }


def _fmt(v) -> str:
    return "" if v is None else "%.6f" % v


def _load_inputs(cfg: RunConfig):
    items = []
    if cfg.phantom is not None:
        cube, gt = synth.make_phantom(cfg.phantom)
        items.append(("phantom", cube, gt))
    else:
        for cube_path, gt_path in cfg.inputs:
            name = os.path.splitext(os.path.basename(cube_path))[0]
            cube = cube_io.load_cube(cube_path)
            gt = cube_io.load_label_map(gt_path)
            if (gt.rows, gt.cols) != (cube.rows, cube.cols):
                raise ValidationError(
                    "input %s: cube and gt dims differ" % name
                )
            items.append((name, cube, gt))
    return items


def extract_features(cube, gt_patch, cfg: RunConfig, seed: int) -> FeatureStack:
    """Feature extraction for one patch per the configured extractor.

    The mpri path samples its rLDA supervision with the same seed and
    fraction the classifier will use, so extraction never sees labels
    the classifier does not.
    """
    if cfg.extractor == "none":
        return FeatureStack.from_cube(cube) if not isinstance(
            cube, FeatureStack) else cube
    if cfg.extractor == "tensorssa":
        return tensorssa_extract(cube, cfg.tensorssa)
    labeled = classify_mod.sample_labels(gt_patch, cfg.fraction, seed)
    return mpri_extract(cube, labeled, cfg.mpri)


def _crop_cube(cube, r0, c0, r1, c1):
    return cube_io.HyperCube(
        r1 - r0, c1 - c0, cube.bands, cube.wavelengths,
        np.ascontiguousarray(cube.data[r0:r1, c0:c1, :]),
    )


def _run_patch(cube, gt, bounds, cfg: RunConfig, seed: int):
    r0, c0, r1, c1 = bounds
    sub = _crop_cube(cube, r0, c0, r1, c1)
    gt_patch = cube_io.LabelMap(r1 - r0, c1 - c0,
                                gt.labels[r0:r1, c0:c1].copy())
    feats = extract_features(sub, gt_patch, cfg, seed)
    pred, counts = classify_mod.classify_patch(
        feats, gt_patch, cfg.classifier, cfg.fraction, seed,
        ssl=cfg.ssl, svm=cfg.svm,
    )
    return pred, counts


def run_experiment(cfg: RunConfig) -> dict:
    """Execute the configured experiment; returns a result summary.

    The summary maps image names to pooled per-image counts and
    reports, plus 'micro' and 'macro' entries mirroring the CSVs.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    manifest = yaml.safe_dump(_resolved_dict(cfg), sort_keys=True)
    with open(os.path.join(cfg.out_dir, "manifest.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(manifest)

    items = _load_inputs(cfg)
    if cfg.representation == "rgb":
        items = [(name, synth.make_rgb_projection(cube), gt)
                 for name, cube, gt in items]

    all_counts = []
    per_image = []
    global_index = 0
    for name, cube, gt in items:
        grid = cube_io.tile(cube.rows, cube.cols, cfg.patch_rows,
                            cfg.patch_cols)
        canvas = np.full((cube.rows, cube.cols), cube_io.UNLABELED,
                         dtype=np.uint8)
        tasks = []
        for k in range(grid.count):
            bounds = grid.bounds(k)
            seed = patch_seed(cfg.master_seed, global_index)
            tasks.append((k, bounds, seed))
            global_index += 1

        def _work(task, _cube=cube, _gt=gt, _name=name):
            k, bounds, seed = task
            try:
                return k, bounds, _run_patch(_cube, _gt, bounds, cfg, seed)
            except ValidationError as exc:
                raise ValidationError(
                    "image %s patch %d: %s" % (_name, k, exc)
                ) from exc

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(_work, tasks))
        else:
            results = [_work(t) for t in tasks]

        image_counts = []
        for k, bounds, (pred, counts) in results:
            r0, c0, r1, c1 = bounds
            canvas[r0:r1, c0:c1] = pred.labels
            cube_io.save_label_map(
                pred, os.path.join(cfg.out_dir,
                                   "pred_%s_p%03d.pgm" % (name, k)))
            image_counts.append(counts)
            all_counts.append(counts)

        pooled = micro_aggregate(image_counts)
        per_image.append((name, pooled))

        render = np.empty((cube.rows, cube.cols, 3), dtype=np.float64)
        render[:] = _COLOR_NONE
        render[canvas == 0] = _COLOR_NEG
        render[canvas == 1] = _COLOR_POS
        cube_io.save_render(render,
                            os.path.join(cfg.out_dir, "pred_%s.ppm" % name))

    micro = micro_aggregate(all_counts)
    macro = macro_aggregate([rep for _, rep in per_image])

    header = "image,method,representation," + ",".join(METRIC_NAMES)
    lines = [header]
    for name, rep in per_image:
        lines.append(",".join(
            [name, cfg.classifier, cfg.representation]
            + [_fmt(getattr(rep, m)) for m in METRIC_NAMES]
        ))
    _write_text(os.path.join(cfg.out_dir, "per_image.csv"), lines)

    lines = [
        "method,representation," + ",".join(METRIC_NAMES),
        ",".join([cfg.classifier, cfg.representation]
                 + [_fmt(getattr(micro, m)) for m in METRIC_NAMES]),
    ]
    _write_text(os.path.join(cfg.out_dir, "micro.csv"), lines)

    lines = ["metric,mean,std,count"]
    for m in METRIC_NAMES:
        mean, std, cnt = macro[m]
        lines.append("%s,%s,%s,%d" % (m, _fmt(mean), _fmt(std), cnt))
    _write_text(os.path.join(cfg.out_dir, "macro.csv"), lines)

    return {
        "per_image": per_image,
        "micro": micro,
        "macro": macro,
        "out_dir": cfg.out_dir,
    }


def _write_text(path, lines) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_per_image_csv(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        rows = [line.rstrip("\n") for line in fh if line.strip()]
    if not rows:
        raise ValidationError("empty per-image report %s" % path)
    header = rows[0].split(",")
    expected = ["image", "method", "representation"] + list(METRIC_NAMES)
    if header != expected:
        raise ValidationError("unexpected per-image header in %s" % path)
    out = {}
    for line in rows[1:]:
        parts = line.split(",")
        vals = {
            m: (float(parts[3 + i]) if parts[3 + i] != "" else None)
            for i, m in enumerate(METRIC_NAMES)
        }
        out[parts[0]] = vals
    return out


def compare_runs(report_a, report_b, out_path=None):
    """Rank-sum significance of per-image metric differences.

    Inputs are per_image.csv paths from two runs over the same image
    set. Returns {metric: (p, reject)} and optionally writes the
    significance CSV.
    """
    a = _read_per_image_csv(report_a)
    b = _read_per_image_csv(report_b)
    if set(a) != set(b):
        raise ValidationError("the two reports cover different image sets")
    results = {}
    for m in METRIC_NAMES:
        va = [a[name][m] for name in sorted(a) if a[name][m] is not None]
        vb = [b[name][m] for name in sorted(b) if b[name][m] is not None]
        if not va or not vb:
            results[m] = (None, False)
            continue
        _, p = wilcoxon_ranksum(va, vb)
        results[m] = (p, bool(p < 0.05))
    if out_path is not None:
        lines = ["metric,p_value,reject_at_0.05"]
        for m in METRIC_NAMES:
            p, reject = results[m]
            p_txt = "" if p is None else "%.6e" % p
            lines.append("%s,%s,%s" % (m, p_txt, "true" if reject else "false"))
        _write_text(out_path, lines)
    return results
