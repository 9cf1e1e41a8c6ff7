"""Command line entry point.

Each workload subcommand loads a JSON config, validates it in full, runs the
experiment, and writes a self-contained output directory:

    result.json   deterministic report (byte-identical across reruns)
    meta.json     wall-clock and version info (not deterministic)
    *.csv         the workload's series data
    *.png         one rendered summary figure

Exit codes: 0 success, 1 runtime failure, 2 config/validation problem.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, apply_overrides, build_experiment,
                     load_config, validate_config)
from .figures import render_figure
from .util import json_ready, write_csv, write_json

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditsim",
        description="Truncated-boson lattice simulations: gauge-theory "
                    "quenches, coloring feedback loops, reservoir regression, "
                    "and gate synthesis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                       help="override a config entry by dotted path "
                            "(repeatable), e.g. --set qaoa.shots=1024")
        if with_out:
            p.add_argument("--out", help="output directory "
                                         "(overrides the config's 'out')")
            p.add_argument("--seed", type=int,
                           help="override the config's seed")

    for name, blurb in (
            ("sqed", "quench a gauge-matter chain or ladder and extract the gap"),
            ("qaoa", "alternating-operator coloring with measurement feedback"),
            ("reservoir", "driven dissipative modes as a temporal kernel"),
            ("synth", "gradient synthesis of a target unitary")):
        add_common(sub.add_parser(name, help=blurb))
    add_common(sub.add_parser("validate", help="check a config and list every "
                                               "violation"), with_out=False)
    return parser


def _load(args) -> tuple[dict, Path]:
    cfg = load_config(args.config)
    cfg = apply_overrides(cfg, args.set)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out", None):
        cfg["out"] = args.out
    return cfg, Path(args.config).resolve().parent


def _validate(cfg: dict, base_dir: Path, command: str) -> list[str]:
    violations = validate_config(cfg, base_dir)
    if command != "validate" and cfg.get("workload") in (
            "sqed", "qaoa", "reservoir", "synth") and cfg["workload"] != command:
        violations.append(
            f"config: workload is {cfg['workload']!r} but the "
            f"{command!r} subcommand was invoked")
    return violations


def _write_csvs(workload: str, result: dict, out: Path) -> list[Path]:
    paths = []
    if workload == "sqed":
        arrays = result["arrays"]
        paths.append(write_csv(
            out / "series.csv",
            ["time", "g_real", "g_imag", "survival"],
            ((f"{t:.12g}", f"{v.real:.12g}", f"{v.imag:.12g}",
              f"{abs(v) ** 2:.12g}")
             for t, v in zip(arrays["times"], arrays["g"]))))
        paths.append(write_csv(
            out / "spectrum.csv", ["frequency", "weight"],
            ((f"{f:.12g}", f"{w:.12g}")
             for f, w in zip(arrays["freqs"], arrays["spectrum"]))))
    elif workload == "qaoa":
        paths.append(write_csv(
            out / "rounds.csv",
            ["round", "incumbent_cost", "round_best", "mean_sampled"],
            ((r, b, rb, f"{m:.12g}") for r, b, rb, m in result["round_rows"])))
    elif workload == "reservoir":
        arrays = result["arrays"]
        n_feat = arrays["features"].shape[1]
        paths.append(write_csv(
            out / "features.csv",
            ["step"] + [f"f{i}" for i in range(n_feat)],
            ((i, *(f"{v:.12g}" for v in row))
             for i, row in enumerate(arrays["features"]))))
        paths.append(write_csv(
            out / "predictions.csv",
            ["test_step", "target", "prediction", "baseline"],
            ((i, f"{y:.12g}", f"{p:.12g}", f"{b:.12g}")
             for i, (y, p, b) in enumerate(zip(
                 arrays["y_test"], arrays["pred_test"],
                 arrays["baseline_test"])))))
    else:
        arrays = result["arrays"]
        paths.append(write_csv(
            out / "trace.csv", ["iteration", "objective"],
            ((i + 1, f"{v:.12g}")
             for i, v in enumerate(arrays["objective_trace"]))))
        u = np.asarray(arrays["unitary"])
        paths.append(write_csv(
            out / "unitary.csv",
            [f"re{j}" for j in range(u.shape[1])]
            + [f"im{j}" for j in range(u.shape[1])],
            ((*(f"{v:.12g}" for v in row.real), *(f"{v:.12g}" for v in row.imag))
             for row in u)))
    return paths


def _summary_line(workload: str, report: dict) -> str:
    if workload == "sqed":
        line = (f"sqed: gap_fft={report['gap_fft']:.6f} "
                f"(resolution {report['frequency_resolution']:.6f})")
        if "gap_exact" in report:
            line += f" gap_exact={report['gap_exact']:.6f}"
        return line
    if workload == "qaoa":
        line = (f"qaoa: best_cost={report['best_cost']} "
                f"in round {report['best_found_in_round']} "
                f"(uniform expectation {report['expected_cost_uniform']:.3f})")
        if "brute_force_cost" in report:
            line += f" optimum={report['brute_force_cost']}"
        return line
    if workload == "reservoir":
        return (f"reservoir: nmse_test={report['nmse_test']:.4f} "
                f"baseline={report['nmse_baseline']:.4f} "
                f"({report['n_features']} features)")
    return (f"synth: fidelity={report['fidelity']:.8f} "
            f"leakage={report['leakage']:.3e} "
            f"objective={report['objective']:.3e}")


def _run_workload(cfg: dict, base_dir: Path, command: str) -> int:
    workload, experiment = build_experiment(cfg, base_dir)
    out = Path(cfg.get("out") or f"out-{workload}")
    out.mkdir(parents=True, exist_ok=True)

    module = __import__(f"quditsim.{workload}", fromlist=["run_experiment"])
    started = time.monotonic()
    result = module.run_experiment(experiment, cfg["seed"])
    runtime = time.monotonic() - started

    write_json(out / "result.json", json_ready(result["report"]))
    write_json(out / "meta.json", {
        "finished_utc": datetime.now(timezone.utc).isoformat(),
        "runtime_seconds": round(runtime, 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "package": __version__,
        "argv": sys.argv[1:],
    })
    _write_csvs(workload, result, out)
    render_figure(workload, result, out / f"{workload}.png")

    print(_summary_line(workload, result["report"]))
    print(f"wrote {out.resolve()}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg, base_dir = _load(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        violations = _validate(cfg, base_dir, "validate")
        if violations:
            for v in violations:
                print(f"violation: {v}")
            return EXIT_CONFIG
        print(f"ok: {cfg['workload']} config is valid")
        return EXIT_OK

    violations = _validate(cfg, base_dir, args.command)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _run_workload(cfg, base_dir, args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
