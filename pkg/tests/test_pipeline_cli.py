"""Experiment orchestration and the command-line front end."""

import os
import subprocess
import sys

import numpy as np
import pytest
import yaml

from hsipath import PhantomSpec, ValidationError, cli, load_cube, load_label_map
from hsipath.pipeline import (
    RunConfig,
    ToolConfig,
    compare_runs,
    config_from_dict,
    load_config,
    patch_seed,
    run_experiment,
    tool_config_from_dict,
)

_PHANTOM = dict(rows=20, cols=20, bands=6, class_count=2,
                region_seed=5, noise_seed=6)


def _write(path, text):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def _read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


# -------------------------------------------------------------- patch seeds


def test_patch_seed_deterministic_and_distinct():
    seeds = [patch_seed(7, i) for i in range(1000)]
    assert seeds == [patch_seed(7, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
    # a different master seed reorders the whole sequence
    other = [patch_seed(8, i) for i in range(1000)]
    assert seeds != other


# ----------------------------------------------------------- configuration


def test_config_from_dict_routes_sections():
    raw = {
        "run": {"out_dir": "x", "master_seed": 3, "classifier": "svm",
                "fraction": 0.05, "patch_rows": 10, "patch_cols": 10},
        "phantom": dict(_PHANTOM),
        "mpri": {"scales": [3], "layers": 1, "betas": [2.5],
                 "sigma2": 0.4, "max_iter": 7, "tol": 1e-3},
        "tensorssa": {"u": 2, "l": 6, "rtub": 2},
        "classify": {"k": 3, "tau": 0.8, "lambda": 0.5, "epochs": 9},
    }
    cfg = config_from_dict(raw)
    assert cfg.classifier == "svm"
    assert cfg.mpri.scales == (3,)
    assert cfg.mpri.pri.sigma2 == 0.4
    assert cfg.mpri.pri.max_iter == 7
    assert cfg.tensorssa.rtub == 2
    assert cfg.ssl.k == 3 and cfg.ssl.tau == 0.8
    assert cfg.svm.lam == 0.5 and cfg.svm.epochs == 9
    assert cfg.phantom.rows == 20


def test_config_from_dict_errors():
    base = {"run": {}, "phantom": dict(_PHANTOM)}
    with pytest.raises(ValidationError):
        config_from_dict({"run": {"bogus": 1}, "phantom": dict(_PHANTOM)})
    with pytest.raises(ValidationError):
        config_from_dict({"run": {}, "phantom": {"rows": 4, "weird": 1}})
    with pytest.raises(ValidationError):
        config_from_dict({"run": {}})  # no input source
    with pytest.raises(ValidationError):
        config_from_dict({
            "run": {}, "phantom": dict(_PHANTOM),
            "inputs": [{"cube": "a", "gt": "b"}],
        })  # both sources
    with pytest.raises(ValidationError):
        config_from_dict({"run": {}, "inputs": [{"cube": "only"}]})
    with pytest.raises(ValidationError):
        config_from_dict({**base, "mpri": {"nonsense": 1}})
    with pytest.raises(ValidationError):
        config_from_dict({**base, "run": {"fraction": 2.0}})


def test_tool_config_defaults_and_load_config(tmp_path):
    cfg = tool_config_from_dict({})
    assert isinstance(cfg, ToolConfig)
    assert cfg.extractor == "none" and cfg.classifier == "ssl"
    cfg = tool_config_from_dict(
        {"run": {"extractor": "tensorssa"}, "tensorssa": {"u": 2, "l": 5}})
    assert cfg.extractor == "tensorssa" and cfg.tensorssa.l == 5

    path = tmp_path / "run.yaml"
    _write(path, yaml.safe_dump(
        {"run": {"master_seed": 11, "patch_rows": 20, "patch_cols": 20,
                 "classifier": "knn", "fraction": 0.1},
         "phantom": dict(_PHANTOM)}))
    cfg = load_config(path)
    assert isinstance(cfg, RunConfig)
    assert cfg.master_seed == 11
    assert cfg.phantom.region_seed == 5


# ------------------------------------------------------------- experiments


def _run_cfg(tmp_path, name, **overrides):
    kwargs = dict(out_dir=str(tmp_path / name), master_seed=3,
                  classifier="knn", fraction=0.1, patch_rows=20,
                  patch_cols=20, phantom=PhantomSpec(**_PHANTOM))
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def test_run_experiment_noise_free_is_perfect(tmp_path):
    cfg = _run_cfg(tmp_path, "clean")
    result = run_experiment(cfg)
    assert result["micro"].bacc == 1.0
    assert result["macro"]["bacc"] == (1.0, 0.0, 1)
    out = result["out_dir"]
    for fname in ("manifest.txt", "per_image.csv", "micro.csv", "macro.csv",
                  "pred_phantom.ppm", "pred_phantom_p000.pgm"):
        assert os.path.exists(os.path.join(out, fname)), fname
    with open(os.path.join(out, "per_image.csv")) as fh:
        lines = fh.read().strip().split("\n")
    assert lines[0] == "image,method,representation,se,sp,bacc,f1,iou,prec"
    assert lines[1].startswith("phantom,knn,hsi,1.000000,1.000000,1.000000")


def test_run_experiment_reruns_byte_identical(tmp_path):
    cfg = _run_cfg(tmp_path, "det")
    run_experiment(cfg)
    out = cfg.out_dir
    names = sorted(os.listdir(out))
    before = {n: _read_bytes(os.path.join(out, n)) for n in names}
    run_experiment(cfg)
    assert sorted(os.listdir(out)) == names
    for n in names:
        assert _read_bytes(os.path.join(out, n)) == before[n], n


def test_run_experiment_tiles_and_margins(tmp_path):
    # 20x20 with 8x8 patches: floor grid of 4, a 4-pixel margin all around
    cfg = _run_cfg(tmp_path, "grid", patch_rows=8, patch_cols=8)
    result = run_experiment(cfg)
    out = result["out_dir"]
    for k in range(4):
        pred = load_label_map(os.path.join(out, "pred_phantom_p%03d.pgm" % k))
        assert (pred.rows, pred.cols) == (8, 8)
    assert not os.path.exists(os.path.join(out, "pred_phantom_p004.pgm"))
    from hsipath import load_render

    render = load_render(os.path.join(out, "pred_phantom.ppm"))
    assert render.shape == (20, 20, 3)
    # uncovered margin pixels keep the neutral gray
    assert np.max(np.abs(render[19, 19] - 128.0 / 255.0)) < 1e-6
    # covered pixels use the class palette, never the gray
    assert np.min(np.abs(render[0, 0, 0] - 128.0 / 255.0)) > 0.1


def test_run_experiment_workers_match_serial(tmp_path):
    a = _run_cfg(tmp_path, "serial", patch_rows=10, patch_cols=10)
    b = _run_cfg(tmp_path, "threaded", patch_rows=10, patch_cols=10, workers=3)
    run_experiment(a)
    run_experiment(b)
    for fname in ("per_image.csv", "micro.csv", "macro.csv",
                  "pred_phantom.ppm", "pred_phantom_p003.pgm"):
        assert _read_bytes(os.path.join(a.out_dir, fname)) == _read_bytes(
            os.path.join(b.out_dir, fname)), fname


def test_run_experiment_rgb_loses_to_hsi(tmp_path):
    """Nearly metameric classes stay separable in the full spectra but
    collapse in the 3-channel projection."""
    ph = PhantomSpec(rows=48, cols=48, bands=24, class_count=2,
                     region_seed=21, noise_seed=22, noise_sigma=0.03,
                     gain_jitter=0.05)
    scores = {}
    for rep in ("hsi", "rgb"):
        cfg = RunConfig(out_dir=str(tmp_path / rep), master_seed=5,
                        representation=rep, extractor="none",
                        classifier="ssl", fraction=0.02, patch_rows=24,
                        patch_cols=24, phantom=ph)
        scores[rep] = run_experiment(cfg)["micro"].bacc
    assert scores["hsi"] > scores["rgb"]


# ----------------------------------------------------------- compare_runs


_CSV_HEADER = "image,method,representation,se,sp,bacc,f1,iou,prec"


def _metric_csv(path, values):
    lines = [_CSV_HEADER]
    for i, v in enumerate(values):
        cells = ["img%d" % i, "knn", "hsi"] + ["%.6f" % v] * 6
        lines.append(",".join(cells))
    _write(path, "\n".join(lines) + "\n")


def test_compare_runs_identical_reports(tmp_path):
    a = tmp_path / "a.csv"
    _metric_csv(a, [0.5, 0.6, 0.7])
    results = compare_runs(a, a)
    for m, (p, reject) in results.items():
        assert p == 1.0 and reject is False


def test_compare_runs_disjoint_separation(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _metric_csv(a, [0.40, 0.41, 0.42, 0.43, 0.44, 0.45])
    _metric_csv(b, [0.50, 0.51, 0.52, 0.53, 0.54, 0.55])
    out = tmp_path / "sig.csv"
    results = compare_runs(a, b, out_path=out)
    for m, (p, reject) in results.items():
        assert abs(p - 2.0 / 924.0) < 1e-12
        assert reject is True
    text = out.read_text()
    lines = text.strip().split("\n")
    assert lines[0] == "metric,p_value,reject_at_0.05"
    assert lines[1] == "se,%.6e,true" % (2.0 / 924.0)


def test_compare_runs_mismatched_images(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    _metric_csv(a, [0.5, 0.6])
    _metric_csv(b, [0.5, 0.6, 0.7])
    with pytest.raises(ValidationError):
        compare_runs(a, b)


def test_compare_runs_undefined_metric_column(tmp_path):
    a = tmp_path / "a.csv"
    lines = [_CSV_HEADER, "img0,knn,hsi,,1.000000,,0.9,0.8,0.7"]
    _write(a, "\n".join(lines) + "\n")
    results = compare_runs(a, a)
    assert results["se"] == (None, False)
    assert results["sp"][0] == 1.0


# -------------------------------------------------------------------- CLI


@pytest.fixture()
def workspace(tmp_path):
    cfg = tmp_path / "phantom.yaml"
    _write(cfg, yaml.safe_dump({"phantom": dict(_PHANTOM)}))
    rc = cli.main(["synth", "--config", str(cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    return tmp_path


def test_cli_synth_writes_cube_and_labels(workspace):
    cube = load_cube(workspace / "phantom.hsc")
    gt = load_label_map(workspace / "phantom_gt.pgm")
    assert (cube.rows, cube.cols, cube.bands) == (20, 20, 6)
    assert (gt.rows, gt.cols) == (20, 20)


def test_cli_rgb_render_and_projection(workspace, capsys):
    render = workspace / "view.ppm"
    proj = workspace / "proj.hsc"
    rc = cli.main(["rgb", "--cube", str(workspace / "phantom.hsc"),
                   "--out", str(render), "--projection", str(proj)])
    assert rc == 0
    assert "view.ppm" in capsys.readouterr().out
    assert load_cube(proj).bands == 3
    from hsipath import load_render

    assert load_render(render).shape == (20, 20, 3)


def test_cli_extract_tensorssa(workspace, tmp_path, capsys):
    cfg = tmp_path / "tool.yaml"
    _write(cfg, yaml.safe_dump({"tensorssa": {"u": 2, "l": 6, "rtub": 1}}))
    out = workspace / "feats.hsc"
    rc = cli.main(["extract", "--config", str(cfg),
                   "--cube", str(workspace / "phantom.hsc"),
                   "--extractor", "tensorssa", "--out", str(out)])
    assert rc == 0
    assert "6 dims" in capsys.readouterr().out
    assert load_cube(out).bands == 6


def test_cli_extract_mpri_needs_gt(workspace, capsys):
    rc = cli.main(["extract", "--cube", str(workspace / "phantom.hsc"),
                   "--extractor", "mpri", "--out", str(workspace / "f.hsc")])
    assert rc == cli.EXIT_VALIDATION
    assert capsys.readouterr().err.startswith("error[validation]:")


def test_cli_classify_and_evaluate(workspace, capsys):
    pred = workspace / "pred.pgm"
    rc = cli.main(["classify", "--cube", str(workspace / "phantom.hsc"),
                   "--gt", str(workspace / "phantom_gt.pgm"),
                   "--method", "knn", "--fraction", "0.1", "--seed", "3",
                   "--out", str(pred)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "bacc: 1.000000" in out  # noise-free phantom
    csv = workspace / "eval.csv"
    rc = cli.main(["evaluate", "--pred", str(pred),
                   "--gt", str(workspace / "phantom_gt.pgm"),
                   "--out", str(csv)])
    assert rc == 0
    assert "bacc: 1.000000" in capsys.readouterr().out
    lines = csv.read_text().strip().split("\n")
    assert lines[0] == "metric,value"
    assert lines[3] == "bacc,1.000000"


def test_cli_run_and_seed_override(workspace, tmp_path, capsys):
    runcfg = tmp_path / "run.yaml"
    _write(runcfg, yaml.safe_dump({
        "run": {"classifier": "knn", "fraction": 0.1,
                "patch_rows": 20, "patch_cols": 20, "master_seed": 3},
        "inputs": [{"cube": str(workspace / "phantom.hsc"),
                    "gt": str(workspace / "phantom_gt.pgm")}],
    }))
    out1 = tmp_path / "out1"
    rc = cli.main(["run", "--config", str(runcfg), "--out-dir", str(out1)])
    assert rc == 0
    assert "micro_bacc: 1.000000" in capsys.readouterr().out
    out2 = tmp_path / "out2"
    rc = cli.main(["run", "--config", str(runcfg), "--out-dir", str(out2),
                   "--seed", "9"])
    assert rc == 0
    capsys.readouterr()
    manifest = (out2 / "manifest.txt").read_text()
    assert "master_seed: 9" in manifest
    # compare a run against itself: no metric can reject
    sig = tmp_path / "sig.csv"
    rc = cli.main(["compare", "--a", str(out1 / "per_image.csv"),
                   "--b", str(out1 / "per_image.csv"), "--out", str(sig)])
    assert rc == 0
    assert "reject=false" in capsys.readouterr().out
    assert sig.read_text().startswith("metric,p_value,reject_at_0.05")


def test_cli_workers_env_default(workspace, tmp_path, monkeypatch, capsys):
    runcfg = tmp_path / "run.yaml"
    _write(runcfg, yaml.safe_dump({
        "run": {"classifier": "knn", "fraction": 0.1,
                "patch_rows": 20, "patch_cols": 20},
        "inputs": [{"cube": str(workspace / "phantom.hsc"),
                    "gt": str(workspace / "phantom_gt.pgm")}],
    }))
    monkeypatch.setenv("HSIPATH_WORKERS", "2")
    out = tmp_path / "outw"
    rc = cli.main(["run", "--config", str(runcfg), "--out-dir", str(out)])
    assert rc == 0
    capsys.readouterr()
    assert "workers: 2" in (out / "manifest.txt").read_text()


def test_cli_error_categories(tmp_path, capsys):
    rc = cli.main(["run", "--config", str(tmp_path / "missing.yaml")])
    assert rc == cli.EXIT_CONFIG
    assert capsys.readouterr().err.startswith("error[config]:")

    bad = tmp_path / "bad.yaml"
    _write(bad, yaml.safe_dump({
        "run": {"fraction": 2.0}, "phantom": dict(_PHANTOM)}))
    rc = cli.main(["run", "--config", str(bad)])
    assert rc == cli.EXIT_VALIDATION
    assert capsys.readouterr().err.startswith("error[validation]:")

    notpgm = tmp_path / "not.pgm"
    _write(notpgm, "hello\n")
    rc = cli.main(["evaluate", "--pred", str(notpgm), "--gt", str(notpgm)])
    assert rc == cli.EXIT_FORMAT
    assert capsys.readouterr().err.startswith("error[format]:")

    rc = cli.main(["rgb", "--cube", str(tmp_path / "ghost.hsc"),
                   "--out", str(tmp_path / "x.ppm")])
    assert rc == cli.EXIT_IO
    assert capsys.readouterr().err.startswith("error[io]:")


def test_cli_module_entry_point(tmp_path):
    cfg = tmp_path / "p.yaml"
    _write(cfg, yaml.safe_dump({"phantom": dict(
        rows=6, cols=6, bands=3, class_count=2, region_seed=1,
        noise_seed=2)}))
    out = subprocess.run(
        [sys.executable, "-m", "hsipath.cli", "synth",
         "--config", str(cfg), "--out-dir", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "phantom.hsc").exists()
