"""Command-line front end: calibrate, weight, sweep, plot.

Sweeps read a flat ``key=value`` config file, let flags override single
keys, and write a CSV next to a JSON manifest that records everything needed
to reproduce the run byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone

from .harness import ExperimentConfig, SweepResult, build_grid, run_sweep
from .polar import construct_code, max_codeword_weight
from .privacy import (
    calibrate_sigma,
    classical_sigma,
    compute_sensitivity,
    privacy_profile,
)

VERSION = "0.1.0"

CSV_HEADER = (
    "protocol,n,k,N,f_true,delta,epsilon,sigma,trials,"
    "bler,mean_abs_err,mean_abs_err_given_correct,err_std_given_correct"
)

_METRICS = (
    "bler",
    "mean_abs_err",
    "mean_abs_err_given_correct",
    "err_std_given_correct",
)

# config-file key -> (ExperimentConfig field, parser)
_CONFIG_KEYS = {
    "protocol": ("protocol", str),
    "n": ("n", int),
    "k": ("k", int),
    "N": ("N", int),
    "f": ("f_true", float),
    "delta": ("delta", float),
    "epsilon_grid": ("epsilon_grid", "grid"),
    "trials": ("trials", int),
    "L": ("list_size", int),
    "seed": ("seed", int),
    "restrict_last_bit": ("restrict_last_bit", "bool"),
    "mode": ("mode", str),
    "design_erasure_prob": ("design_erasure_prob", float),
    "noiseless": ("noiseless", "bool"),
}

_DEFAULTS = {
    "protocol": "proposed",
    "n": 64,
    "k": 8,
    "N": 1000,
    "f_true": 0.7,
    "delta": 1e-4,
    "epsilon_grid": (1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
    "trials": 1000,
    "list_size": 8,
    "restrict_last_bit": False,
    "mode": "min_sum",
    "design_erasure_prob": 0.5,
    "noiseless": False,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_grid(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if not parts:
        raise ValueError("epsilon_grid must list at least one value")
    return tuple(float(p) for p in parts)


def _parse_value(key: str, raw: str):
    field, kind = _CONFIG_KEYS[key]
    if kind == "bool":
        return field, _parse_bool(raw)
    if kind == "grid":
        return field, _parse_grid(raw)
    try:
        return field, kind(raw)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: {exc}") from None


def parse_config(path: str | None, overrides: dict | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a key=value file plus flag overrides.

    Unknown or duplicate keys are rejected; ``seed`` has no default and must
    be given explicitly in the file or as an override.
    """
    values: dict = {}
    if path is not None:
        values.update(_read_config_file(path))
    for field, value in (overrides or {}).items():
        if value is not None:
            values[field] = value
    merged = dict(_DEFAULTS)
    merged.update(values)
    if "seed" not in merged:
        raise ValueError(
            "seed must be set explicitly (config key 'seed' or flag --seed)"
        )
    return ExperimentConfig(**merged)


def _read_config_file(path: str) -> dict:
    values: dict = {}
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line.strip()!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in _CONFIG_KEYS:
                allowed = ", ".join(sorted(_CONFIG_KEYS))
                raise ValueError(f"{path}:{lineno}: unknown key {key!r} (allowed: {allowed})")
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            seen.add(key)
            field, value = _parse_value(key, raw)
            values[field] = value
    return values


def build_manifest(
    cfg: ExperimentConfig,
    csv_path: str,
    started_at: str,
    finished_at: str,
    workers: int,
) -> dict:
    """Everything needed to recreate the CSV, plus run bookkeeping."""
    params = construct_code(cfg.n, cfg.k, cfg.design_erasure_prob, cfg.restrict_last_bit)
    info_digest = hashlib.sha256(
        ",".join(str(i) for i in params.info_set).encode("ascii")
    ).hexdigest()
    grid = build_grid(cfg)

    def norm(x: float):
        # NaN marks a field the protocol does not use; JSON has no NaN.
        return None if math.isnan(x) else x

    manifest = {
        "version": VERSION,
        "config": dataclasses.asdict(cfg),
        "code": {
            "n": cfg.n,
            "k": cfg.k,
            "design_erasure_prob": cfg.design_erasure_prob,
            "restrict_last_bit": cfg.restrict_last_bit,
            "info_set_sha256": info_digest,
        },
        "sigma_per_epsilon": {repr(p.epsilon): norm(p.sigma) for p in grid},
        "rr_scale_per_epsilon": {repr(p.epsilon): norm(p.rr_scale) for p in grid},
        "sensitivity": norm(grid[0].sensitivity),
        "started_at": started_at,
        "finished_at": finished_at,
        "workers": workers,
        "csv_path": csv_path,
    }
    return manifest


def config_from_manifest(manifest: dict) -> ExperimentConfig:
    """Rebuild the exact sweep configuration recorded in a manifest."""
    raw = dict(manifest["config"])
    raw["epsilon_grid"] = tuple(raw["epsilon_grid"])
    return ExperimentConfig(**raw)


def manifest_path(csv_path: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return stem + ".manifest.json"


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("no boolean CSV fields")
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def emit_csv(results: list[SweepResult], manifest: dict, path: str) -> None:
    """Write the sweep CSV (sorted, 17 significant digits) and its manifest.

    Row order is (protocol, n, N, f_true, epsilon); NaN fields render as
    'nan'.  An empty result list still yields the header line and manifest.
    """
    rows = sorted(results, key=lambda r: (r.protocol, r.n, r.N, r.f_true, r.epsilon))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                (
                    r.protocol,
                    _fmt(r.n),
                    _fmt(r.k),
                    _fmt(r.N),
                    _fmt(r.f_true),
                    _fmt(r.delta),
                    _fmt(r.epsilon),
                    _fmt(r.sigma),
                    _fmt(r.trials),
                    _fmt(r.bler),
                    _fmt(r.mean_abs_err),
                    _fmt(r.mean_abs_err_given_correct),
                    _fmt(r.err_std_given_correct),
                )
            )
        )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(manifest_path(path), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_csv_rows(path: str) -> list[dict]:
    """Parse a sweep CSV back into typed row dicts."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ValueError(f"{path}: unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            row = {"protocol": rec["protocol"]}
            for key in ("n", "k", "N", "trials"):
                row[key] = int(rec[key])
            for key in (
                "f_true",
                "delta",
                "epsilon",
                "sigma",
                "bler",
                "mean_abs_err",
                "mean_abs_err_given_correct",
                "err_std_given_correct",
            ):
                row[key] = float(rec[key])
            rows.append(row)
    return rows


def emit_plot(csv_paths: list[str], metric: str, out_path: str) -> None:
    """Plot one metric against epsilon for every series found in the CSVs.

    Series are keyed by (protocol, n, N, f_true).  BLER uses a log y-axis
    with exact zeros left out.  An empty data set raises before any file is
    created; the output format follows the extension (vector by default).
    """
    if metric not in _METRICS:
        raise ValueError(f"metric must be one of {_METRICS}, got {metric!r}")
    rows = []
    for path in csv_paths:
        rows.extend(read_csv_rows(path))
    if not rows:
        raise ValueError("no rows to plot in the given CSV files")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[tuple, list[tuple[float, float]]] = {}
    for row in rows:
        key = (row["protocol"], row["n"], row["N"], row["f_true"])
        series.setdefault(key, []).append((row["epsilon"], row[metric]))

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for key in sorted(series):
        pts = sorted(series[key])
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if metric == "bler":
            ys = [y if y > 0.0 else math.nan for y in ys]
        protocol, n, n_clients, f_true = key
        label = f"{protocol} n={n} N={n_clients} f={f_true:g}"
        ax.plot(xs, ys, marker="o", label=label)
    if metric == "bler":
        ax.set_yscale("log")
    ax.set_xlabel("epsilon")
    ax.set_ylabel(metric)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _cmd_calibrate(args) -> int:
    if args.sensitivity is not None:
        sensitivity = args.sensitivity
    else:
        if args.n is None or args.k is None:
            raise ValueError("calibrate needs --sensitivity or both --n and --k")
        params = construct_code(
            args.n, args.k, args.design_erasure_prob, args.restrict_last_bit
        )
        sensitivity = compute_sensitivity(params, exclude_all_ones=args.exclude_all_ones)
    sigma = calibrate_sigma(args.epsilon, args.delta, sensitivity)
    print(f"sensitivity={format(sensitivity, '.17g')}")
    print(f"sigma={format(sigma, '.17g')}")
    print(f"profile={format(privacy_profile(sigma, args.epsilon, sensitivity), '.17g')}")
    print(f"classical_sigma={format(classical_sigma(args.epsilon, args.delta, sensitivity), '.17g')}")
    return 0


def _cmd_weight(args) -> int:
    params = construct_code(
        args.n, args.k, args.design_erasure_prob, args.restrict_last_bit
    )
    weight = max_codeword_weight(params, exclude_all_ones=args.exclude_all_ones)
    pairwise = compute_sensitivity(
        params, exclude_all_ones=args.exclude_all_ones, include_bottom=False
    )
    full = compute_sensitivity(params, exclude_all_ones=args.exclude_all_ones)
    print(f"n={params.n}")
    print(f"k={params.k}")
    print(f"max_weight={weight}")
    print(f"sensitivity_pairwise={format(pairwise, '.17g')}")
    print(f"sensitivity={format(full, '.17g')}")
    return 0


_SWEEP_OVERRIDE_FIELDS = (
    "protocol",
    "n",
    "k",
    "N",
    "f_true",
    "delta",
    "epsilon_grid",
    "trials",
    "list_size",
    "seed",
    "restrict_last_bit",
    "mode",
    "design_erasure_prob",
    "noiseless",
)


def _cmd_sweep(args) -> int:
    overrides = {field: getattr(args, field) for field in _SWEEP_OVERRIDE_FIELDS}
    cfg = parse_config(args.config, overrides)
    started = datetime.now(timezone.utc).isoformat()
    results = run_sweep(cfg, workers=args.workers)
    finished = datetime.now(timezone.utc).isoformat()
    manifest = build_manifest(cfg, args.out, started, finished, args.workers)
    emit_csv(results, manifest, args.out)
    print(f"wrote {args.out} ({len(results)} rows)")
    print(f"wrote {manifest_path(args.out)}")
    return 0


def _cmd_plot(args) -> int:
    emit_plot(args.csv, args.metric, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codedhist",
        description="Locally private succinct histograms over coded reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="solve for the minimal Gaussian noise scale")
    cal.add_argument("--epsilon", type=float, required=True)
    cal.add_argument("--delta", type=float, required=True)
    cal.add_argument("--sensitivity", type=float, default=None)
    cal.add_argument("--n", type=int, default=None)
    cal.add_argument("--k", type=int, default=None)
    cal.add_argument("--restrict-last-bit", type=_parse_bool, default=False)
    cal.add_argument("--exclude-all-ones", type=_parse_bool, default=False)
    cal.add_argument("--design-erasure-prob", type=float, default=0.5)
    cal.set_defaults(func=_cmd_calibrate)

    wgt = sub.add_parser("weight", help="max codeword weight and report sensitivity")
    wgt.add_argument("--n", type=int, required=True)
    wgt.add_argument("--k", type=int, required=True)
    wgt.add_argument("--restrict-last-bit", type=_parse_bool, default=False)
    wgt.add_argument("--exclude-all-ones", type=_parse_bool, default=False)
    wgt.add_argument("--design-erasure-prob", type=float, default=0.5)
    wgt.set_defaults(func=_cmd_weight)

    swp = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV + manifest")
    swp.add_argument("--config", default=None, help="key=value config file")
    swp.add_argument("--protocol", choices=("proposed", "baseline"), default=None)
    swp.add_argument("--n", type=int, default=None)
    swp.add_argument("--k", type=int, default=None)
    swp.add_argument("--N", type=int, default=None, dest="N")
    swp.add_argument("--f", type=float, default=None, dest="f_true")
    swp.add_argument("--delta", type=float, default=None)
    swp.add_argument("--epsilon-grid", type=_parse_grid, default=None, dest="epsilon_grid")
    swp.add_argument("--trials", type=int, default=None)
    swp.add_argument("--L", type=int, default=None, dest="list_size")
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--restrict-last-bit", type=_parse_bool, default=None, dest="restrict_last_bit")
    swp.add_argument("--mode", choices=("exact", "min_sum"), default=None)
    swp.add_argument("--design-erasure-prob", type=float, default=None, dest="design_erasure_prob")
    swp.add_argument("--noiseless", type=_parse_bool, default=None)
    swp.add_argument("--workers", type=int, default=1)
    swp.add_argument("--out", required=True, help="output CSV path")
    swp.set_defaults(func=_cmd_sweep)

    plo = sub.add_parser("plot", help="plot a sweep metric against epsilon")
    plo.add_argument("--csv", action="append", required=True, help="input CSV (repeatable)")
    plo.add_argument("--metric", choices=_METRICS, default="bler")
    plo.add_argument("--out", required=True, help="output figure path (.svg/.pdf)")
    plo.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
