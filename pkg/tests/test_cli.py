"""Config parsing, CSV/manifest round-trips, plotting, and the CLI entry."""

from __future__ import annotations

import json
import math
import os

import pytest

from codedhist.cli import (
    CSV_HEADER,
    _fmt,
    build_manifest,
    config_from_manifest,
    emit_csv,
    emit_plot,
    main,
    manifest_path,
    parse_config,
    read_csv_rows,
)
from codedhist.harness import ExperimentConfig, SweepResult

CONFIG_TEXT = """\
# demo sweep
protocol = baseline
n=16
k = 4  # small code keeps the test quick
N=50
f=0.5
delta=1e-3
epsilon_grid=1, 2.5 ,4
trials=12
L=2
seed=9
"""


def write_config(tmp_path, text=CONFIG_TEXT, name="sweep.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def make_result(**overrides) -> SweepResult:
    base = dict(
        protocol="proposed",
        n=64,
        k=8,
        N=1000,
        f_true=0.7,
        delta=1e-4,
        epsilon=1.0,
        sigma=6.5,
        trials=100,
        bler=0.25,
        mean_abs_err=1.0 / 3.0,
        mean_abs_err_given_correct=0.01,
        err_std_given_correct=0.0125,
    )
    base.update(overrides)
    return SweepResult(**base)


def test_parse_config_reads_all_keys(tmp_path):
    cfg = parse_config(write_config(tmp_path))
    assert cfg == ExperimentConfig(
        protocol="baseline",
        n=16,
        k=4,
        N=50,
        f_true=0.5,
        delta=1e-3,
        epsilon_grid=(1.0, 2.5, 4.0),
        trials=12,
        list_size=2,
        seed=9,
    )


def test_parse_config_applies_overrides(tmp_path):
    path = write_config(tmp_path)
    cfg = parse_config(path, {"trials": 3, "seed": None, "list_size": 7})
    assert cfg.trials == 3
    assert cfg.list_size == 7
    assert cfg.seed == 9


def test_parse_config_defaults_without_file():
    cfg = parse_config(None, {"seed": 5})
    assert cfg.protocol == "proposed"
    assert cfg.n == 64
    assert cfg.trials == 1000
    assert cfg.seed == 5


def test_parse_config_requires_seed(tmp_path):
    text = CONFIG_TEXT.replace("seed=9\n", "")
    with pytest.raises(ValueError, match="seed"):
        parse_config(write_config(tmp_path, text))


def test_parse_config_rejects_unknown_key(tmp_path):
    text = CONFIG_TEXT + "sigma=3\n"
    with pytest.raises(ValueError, match=r":12: unknown key 'sigma'"):
        parse_config(write_config(tmp_path, text))


def test_parse_config_rejects_duplicate_key(tmp_path):
    text = CONFIG_TEXT + "n=32\n"
    with pytest.raises(ValueError, match=r":12: duplicate key 'n'"):
        parse_config(write_config(tmp_path, text))


def test_parse_config_rejects_bare_line(tmp_path):
    text = CONFIG_TEXT + "just words\n"
    with pytest.raises(ValueError, match=r":12: expected key=value"):
        parse_config(write_config(tmp_path, text))


def test_fmt_rendering():
    assert _fmt(7) == "7"
    for x in (0.1, 1.0 / 3.0, 6.3714059799213425, 1e-300):
        assert float(_fmt(x)) == x
    assert _fmt(math.nan) == "nan"
    with pytest.raises(TypeError):
        _fmt(True)


def fresh_manifest(cfg, tmp_path, name="out.csv"):
    out = str(tmp_path / name)
    return build_manifest(cfg, out, "2026-01-01T00:00:00", "2026-01-01T00:01:00", 1), out


def test_emit_csv_header_sorting_and_roundtrip(tmp_path):
    cfg = ExperimentConfig(
        protocol="proposed", n=64, k=8, N=1000, f_true=0.7, delta=1e-4,
        epsilon_grid=(1.0, 2.0), trials=100, list_size=8, seed=1,
    )
    manifest, out = fresh_manifest(cfg, tmp_path)
    results = [
        make_result(epsilon=2.0),
        make_result(protocol="baseline", epsilon=1.0, sigma=math.nan,
                    mean_abs_err_given_correct=math.nan,
                    err_std_given_correct=math.nan),
        make_result(epsilon=1.0),
    ]
    emit_csv(results, manifest, out)
    with open(out) as fh:
        lines = fh.read().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4

    rows = read_csv_rows(out)
    assert [(r["protocol"], r["epsilon"]) for r in rows] == [
        ("baseline", 1.0),
        ("proposed", 1.0),
        ("proposed", 2.0),
    ]
    assert rows[1]["mean_abs_err"] == 1.0 / 3.0
    assert rows[1]["n"] == 64 and isinstance(rows[1]["n"], int)
    assert math.isnan(rows[0]["sigma"])


def test_emit_csv_empty_results_writes_header_only(tmp_path):
    cfg = parse_config(None, {"seed": 2, "trials": 1, "N": 10})
    manifest, out = fresh_manifest(cfg, tmp_path)
    emit_csv([], manifest, out)
    with open(out) as fh:
        assert fh.read() == CSV_HEADER + "\n"
    assert os.path.exists(manifest_path(out))


def test_manifest_is_strict_json_and_rebuilds_config(tmp_path):
    cfg = parse_config(None, {"seed": 3, "protocol": "baseline"})
    manifest, out = fresh_manifest(cfg, tmp_path)
    emit_csv([], manifest, out)
    with open(manifest_path(out)) as fh:
        text = fh.read()

    def no_constants(name):
        raise AssertionError(f"non-finite constant {name} in manifest")

    loaded = json.loads(text, parse_constant=no_constants)
    assert config_from_manifest(loaded) == cfg
    assert loaded["version"]
    assert loaded["workers"] == 1
    assert loaded["code"]["n"] == 64


def test_plot_writes_figure(tmp_path):
    cfg = parse_config(None, {"seed": 4, "epsilon_grid": (1.0, 2.0)})
    manifest, out = fresh_manifest(cfg, tmp_path)
    emit_csv([make_result(epsilon=1.0), make_result(epsilon=2.0)], manifest, out)
    fig = str(tmp_path / "fig.png")
    emit_plot([out], "bler", fig)
    assert os.path.getsize(fig) > 0


def test_plot_rejects_empty_and_unknown_metric(tmp_path):
    cfg = parse_config(None, {"seed": 4})
    manifest, out = fresh_manifest(cfg, tmp_path)
    emit_csv([], manifest, out)
    fig = str(tmp_path / "fig.png")
    with pytest.raises(ValueError):
        emit_plot([out], "bler", fig)
    with pytest.raises(ValueError):
        emit_plot([out], "snr", fig)
    assert not os.path.exists(fig)


def test_main_calibrate_prints_scale(capsys):
    assert main(["calibrate", "--epsilon", "1", "--delta", "1e-4",
                 "--sensitivity", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    values = dict(line.split("=", 1) for line in lines)
    assert float(values["sigma"]) == pytest.approx(6.3714059799213425, rel=1e-12)
    assert float(values["profile"]) <= 1e-4 * (1.0 + 1e-12)
    assert float(values["classical_sigma"]) > float(values["sigma"])


def test_main_weight_reports_sensitivity(capsys):
    assert main(["weight", "--n", "64", "--k", "8"]) == 0
    out = capsys.readouterr().out
    assert "max_weight=64" in out
    assert "sensitivity=2" in out


def test_main_reports_errors_on_stderr(capsys):
    rc = main(["calibrate", "--epsilon", "-1", "--delta", "1e-4",
               "--sensitivity", "2"])
    captured = capsys.readouterr()
    assert rc == 1
    assert captured.err.startswith("error:")


def test_main_sweep_and_plot_end_to_end(tmp_path, capsys):
    text = (
        "protocol=proposed\nn=16\nk=4\nN=20\nf=0.5\ndelta=1e-3\n"
        "epsilon_grid=1,2\ntrials=4\nL=2\nseed=7\nnoiseless=true\n"
    )
    cfg_path = write_config(tmp_path, text)
    out = str(tmp_path / "run.csv")
    assert main(["sweep", "--config", cfg_path, "--out", out]) == 0
    stdout = capsys.readouterr().out
    assert f"wrote {out} (2 rows)" in stdout

    rows = read_csv_rows(out)
    assert len(rows) == 2
    assert all(r["bler"] == 0.0 for r in rows)

    fig = str(tmp_path / "run.pdf")
    assert main(["plot", "--csv", out, "--metric", "mean_abs_err",
                 "--out", fig]) == 0
    assert os.path.getsize(fig) > 0


def test_main_sweep_flag_overrides(tmp_path):
    out = str(tmp_path / "tiny.csv")
    rc = main(["sweep", "--out", out, "--seed", "3", "--trials", "2",
               "--N", "10", "--f", "0.5", "--epsilon-grid", "8",
               "--n", "16", "--k", "4", "--L", "1", "--noiseless", "true"])
    assert rc == 0
    with open(manifest_path(out)) as fh:
        manifest = json.load(fh)
    cfg = config_from_manifest(manifest)
    assert cfg.trials == 2
    assert cfg.epsilon_grid == (8.0,)
    assert cfg.noiseless
