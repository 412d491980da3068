"""Command-line entry point: simulate, optimize, front.

Every run writes into its own directory `<out>/<name>-<digest8>/`, where
the digest hashes the effective config (file values + CLI overrides +
defaults).  The manifest is written last, as the commit marker: a run
directory without one is incomplete.  Numeric artifacts depend only on
the effective config and seeds, never on scheduling; `--jobs` changes
wall-clock time, not bytes.

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 partial experiment failure (completed runs are kept).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import seeds
from .analysis import (
    extract_front,
    export_front,
    front_summary,
    load_population_csv,
    render_activity_plot,
    render_front_plot,
)
from .config import ENV_RUN_ROOT, ConfigError, config_digest, load_config
from .network import NetworkGenome, regenerate_for_evaluation
from .neuron import NumericalDivergenceError
from .nsga3 import evolve, write_population_csv
from .objectives import StudyEvaluator
from .simulator import export_raster, export_rate_series, mean_rates, run_simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

log = logging.getLogger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(run_dir: Path, payload: dict) -> None:
    with open(run_dir / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _package_versions() -> dict:
    from . import __version__

    return {"snnfit": __version__, "numpy": np.__version__}


# --- simulate ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    values = {
        "ge": 0.5, "gi": 1.0, "f": 1.0, "mu": 0.0,
        "seed": 42, "duration": 1000, "n_exc": 800, "n_inh": 200,
    }
    name, out_root = "simulate", args.out
    if args.config:
        try:
            cfg = load_config(args.config)
        except ConfigError as err:
            print(err, file=sys.stderr)
            return EXIT_CONFIG
        name = cfg.name
        values.update(
            seed=cfg.global_seed,
            duration=cfg.studies[0].duration,
            n_exc=cfg.studies[0].n_exc,
            n_inh=cfg.studies[0].n_inh,
        )
        out_root = out_root or cfg.resolve_out_root()
    for key in values:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag

    effective = {
        "command": "simulate",
        "name": name,
        "genome": {"g_e": values["ge"], "g_i": values["gi"], "f": values["f"], "mu": values["mu"]},
        "network": {
            "n_exc": values["n_exc"], "n_inh": values["n_inh"], "duration": values["duration"],
        },
        "seed": values["seed"],
        "noise": not args.no_noise,
        "bin": args.bin,
    }
    try:
        genome = NetworkGenome.shared_mu(
            g_e=values["ge"], g_i=values["gi"], f=values["f"], mu=values["mu"]
        )
        if values["seed"] < 0 or values["duration"] < 1:
            raise ValueError("seed must be >= 0 and duration >= 1")
    except ValueError as err:
        print(f"invalid simulate parameters: {err}", file=sys.stderr)
        return EXIT_CONFIG

    digest = config_digest(effective)
    root = Path(out_root or os.environ.get(ENV_RUN_ROOT) or "runs")
    run_dir = root / f"{name}-{digest[:8]}"
    (run_dir / "plots").mkdir(parents=True, exist_ok=True)

    instance = regenerate_for_evaluation(
        genome, values["seed"], 0, 0, n_exc=values["n_exc"], n_inh=values["n_inh"]
    )
    noise = seeds.noise_rng(values["seed"], 0, 0)
    try:
        record = run_simulation(
            instance, genome,
            duration=values["duration"], noise_seed=noise, noise_enabled=not args.no_noise,
        )
    except NumericalDivergenceError as err:
        print(f"simulation diverged: {err}", file=sys.stderr)
        return EXIT_NUMERICAL

    files = ["raster.csv", "rates.csv"]
    export_raster(record, run_dir / "raster.csv")
    export_rate_series(record, run_dir / "rates.csv", bin_ticks=args.bin)
    if not args.no_plot:
        render_activity_plot(
            record, run_dir / "plots" / "activity.svg", bin_ticks=args.bin,
            title=f"{name}: g_e={values['ge']:g} g_i={values['gi']:g} f={values['f']:g}",
        )
        files.append("plots/activity.svg")
    rates = mean_rates(record)
    _write_manifest(run_dir, {
        "schema": 1,
        "command": "simulate",
        "name": name,
        "config_digest": digest,
        "effective_config": effective,
        "created": _now(),
        "versions": _package_versions(),
        "files": files,
        "result": {
            "n_events": record.n_events,
            "r_exc": rates.r_exc, "r_inh": rates.r_inh, "r_all": rates.r_all,
        },
    })
    print(
        f"[{name}] {record.n_events} spikes in {values['duration']} ms: "
        f"r_exc={rates.r_exc:.3f} Hz r_inh={rates.r_inh:.3f} Hz r_all={rates.r_all:.3f} Hz -> {run_dir}"
    )
    return EXIT_OK


# --- optimize ---------------------------------------------------------------


def _generation_log_lines(history, objective_names) -> list[str]:
    lines = ["generation,front0_size,balanced," + ",".join(f"min_{n}" for n in objective_names)]
    error_cols = [k for k, nm in enumerate(objective_names) if nm.startswith("d_")] or None
    for gen, pop in enumerate(history):
        F = np.array([ind.objectives for ind in pop])
        front0 = sum(1 for ind in pop if ind.rank == 0)
        cols = error_cols if error_cols is not None else list(range(F.shape[1]))
        balanced = float(F[:, cols].max(axis=1).min())
        mins = ",".join(repr(float(x)) for x in F.min(axis=0))
        lines.append(f"{gen},{front0},{balanced!r},{mins}")
    return lines


def cmd_optimize(args) -> int:
    overrides = {"run.global_seed": args.seed, "run.jobs": args.jobs, "run.out": args.out}
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return EXIT_CONFIG

    run_dir = Path(cfg.resolve_out_root()) / cfg.run_dir_name
    for sub in ("populations", "fronts", "plots", "logs"):
        (run_dir / sub).mkdir(parents=True, exist_ok=True)

    handler = logging.FileHandler(run_dir / "logs" / "events.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    pkg_logger = logging.getLogger("snnfit")
    pkg_logger.addHandler(handler)
    pkg_logger.setLevel(logging.INFO)

    jobs = cfg.resolve_jobs()
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    map_fn = executor.map if executor else map

    runs, failures, summaries = [], [], []
    fronts_by_study: dict[str, list] = {}
    fronts_by_seed: dict[int, list] = {}
    try:
        for study in cfg.studies:
            for rseed in cfg.repeat_seeds:
                label = f"{study.name}-s{rseed}"
                master = seeds.run_master_seed(cfg.global_seed, study.study_index, rseed)
                started = time.time()
                try:
                    history = evolve(
                        StudyEvaluator(study, master), cfg.ga, seeds.ga_rng(master), map_fn=map_fn
                    )
                except Exception as err:  # noqa: BLE001 - keep sibling runs alive
                    log.error("run %s failed: %s", label, err)
                    failures.append({"run": label, "error": str(err)})
                    continue
                elapsed = time.time() - started

                pop_file = f"populations/{label}.csv"
                write_population_csv(
                    history, study.gene_names, study.objective_names, run_dir / pop_file
                )
                log_file = f"logs/{label}.log"
                (run_dir / log_file).write_text(
                    "\n".join(_generation_log_lines(history, study.objective_names)) + "\n"
                )
                front = extract_front(
                    history[-1],
                    experiment=study.name,
                    generation=len(history) - 1,
                    gene_names=study.gene_names,
                    objective_names=study.objective_names,
                    metadata={
                        "label": label,
                        "global_seed": cfg.global_seed,
                        "repeat_seed": rseed,
                        "master_seed": master,
                        "config_digest": cfg.digest,
                    },
                )
                export_front(front, run_dir / f"fronts/{label}.csv", "csv")
                export_front(front, run_dir / f"fronts/{label}.json", "json")
                summary = front_summary(front)
                summary["run"] = label
                summaries.append(summary)
                fronts_by_study.setdefault(study.name, []).append(front)
                fronts_by_seed.setdefault(rseed, []).append(front)
                runs.append({
                    "run": label,
                    "study": study.name,
                    "study_index": study.study_index,
                    "repeat_seed": rseed,
                    "master_seed": master,
                    "status": "completed",
                    "elapsed_seconds": round(elapsed, 3),
                    "files": {
                        "populations": pop_file,
                        "front_csv": f"fronts/{label}.csv",
                        "front_json": f"fronts/{label}.json",
                        "log": log_file,
                    },
                })
                print(
                    f"[{label}] front={len(front.members)} balanced={summary['balanced_error']:.3f} "
                    f"({elapsed:.1f}s)"
                )
    finally:
        if executor:
            executor.shutdown()
        pkg_logger.removeHandler(handler)
        handler.close()

    plot_files = []
    for study_name, fronts in fronts_by_study.items():
        out = f"plots/{study_name}.svg"
        render_front_plot(fronts, run_dir / out, title=f"{cfg.name}: {study_name}")
        plot_files.append(out)
    for rseed, fronts in fronts_by_seed.items():
        if len(fronts_by_study) > 1:
            out = f"plots/combined-s{rseed}.svg"
            render_front_plot(fronts, run_dir / out, title=f"{cfg.name}: all studies, seed {rseed}")
            plot_files.append(out)

    with open(run_dir / "summary.json", "w") as fh:
        json.dump(
            {"name": cfg.name, "config_digest": cfg.digest, "runs": summaries}, fh, indent=2
        )
        fh.write("\n")

    all_files = ["summary.json", "logs/events.log", *plot_files]
    for entry in runs:
        all_files.extend(entry["files"].values())
    _write_manifest(run_dir, {
        "schema": 1,
        "command": "optimize",
        "name": cfg.name,
        "config_digest": cfg.digest,
        "effective_config": cfg.effective,
        "created": _now(),
        "versions": _package_versions(),
        "studies": [
            {
                "name": s.name,
                "study_index": s.study_index,
                "gene_names": list(s.gene_names),
                "objective_names": list(s.objective_names),
            }
            for s in cfg.studies
        ],
        "runs": runs,
        "failures": failures,
        "files": sorted(set(all_files)),
    })
    if failures:
        print(f"{len(failures)} of {len(runs) + len(failures)} runs failed", file=sys.stderr)
        return EXIT_PARTIAL
    print(f"completed {len(runs)} runs -> {run_dir}")
    return EXIT_OK


# --- front ------------------------------------------------------------------


def cmd_front(args) -> int:
    run_dir = Path(args.run_dir)
    manifest_path = run_dir / "manifest.json"
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        print(f"no manifest.json in {run_dir}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as err:
        print(f"corrupt manifest in {run_dir}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if manifest.get("command") != "optimize" or "runs" not in manifest:
        print("manifest is not from an optimize run", file=sys.stderr)
        return EXIT_CONFIG

    by_study = {s["name"]: s for s in manifest["studies"]}
    suffix = "" if args.generation is None else f"-g{args.generation}"
    summaries, new_files = [], []
    fronts_by_study: dict[str, list] = {}
    for entry in manifest["runs"]:
        if entry.get("status") != "completed":
            continue
        study = by_study[entry["study"]]
        gene_names = tuple(study["gene_names"])
        objective_names = tuple(study["objective_names"])
        history = load_population_csv(
            run_dir / entry["files"]["populations"], gene_names, objective_names
        )
        gen = args.generation if args.generation is not None else len(history) - 1
        if not 0 <= gen < len(history):
            print(
                f"generation {gen} out of range for {entry['run']} "
                f"(0..{len(history) - 1})",
                file=sys.stderr,
            )
            return EXIT_CONFIG
        label = entry["run"]
        front = extract_front(
            history[gen],
            experiment=entry["study"],
            generation=gen,
            gene_names=gene_names,
            objective_names=objective_names,
            metadata={
                "label": label,
                "global_seed": manifest["effective_config"]["run"]["global_seed"],
                "repeat_seed": entry["repeat_seed"],
                "master_seed": entry["master_seed"],
                "config_digest": manifest["config_digest"],
            },
        )
        export_front(front, run_dir / f"fronts/{label}{suffix}.csv", "csv")
        export_front(front, run_dir / f"fronts/{label}{suffix}.json", "json")
        new_files += [f"fronts/{label}{suffix}.csv", f"fronts/{label}{suffix}.json"]
        summary = front_summary(front)
        summary["run"] = label
        summaries.append(summary)
        fronts_by_study.setdefault(entry["study"], []).append(front)

    if not summaries:
        print("manifest lists no completed runs", file=sys.stderr)
        return EXIT_CONFIG
    for study_name, fronts in fronts_by_study.items():
        out = f"plots/{study_name}{suffix}.svg"
        render_front_plot(
            fronts, run_dir / out, title=f"{manifest['name']}: {study_name}{suffix}"
        )
        new_files.append(out)
    summary_file = f"summary{suffix}.json"
    with open(run_dir / summary_file, "w") as fh:
        json.dump(
            {"name": manifest["name"], "config_digest": manifest["config_digest"], "runs": summaries},
            fh, indent=2,
        )
        fh.write("\n")
    new_files.append(summary_file)

    manifest["files"] = sorted(set(manifest["files"]) | set(new_files))
    _write_manifest(run_dir, manifest)
    print(f"regenerated {len(new_files)} files in {run_dir}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snnfit",
        description="Simulate a two-population spiking network and fit its "
        "connectivity to target firing rates with a multi-objective GA.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one simulation with explicit genome values")
    sim.add_argument("--config", help="experiment TOML supplying network defaults")
    sim.add_argument("--ge", type=float, default=None, help="excitatory weight scale (default 0.5)")
    sim.add_argument("--gi", type=float, default=None, help="inhibitory weight scale (default 1.0)")
    sim.add_argument("--f", type=float, default=None, help="connection probability (default 1.0)")
    sim.add_argument("--mu", type=float, default=None, help="thalamic mean current (default 0.0)")
    sim.add_argument("--seed", type=int, default=None, help="master seed (default 42)")
    sim.add_argument("--duration", type=int, default=None, help="ticks to simulate (default 1000)")
    sim.add_argument("--n-exc", dest="n_exc", type=int, default=None)
    sim.add_argument("--n-inh", dest="n_inh", type=int, default=None)
    sim.add_argument("--bin", type=int, default=1, help="rate-series bin width in ticks")
    sim.add_argument("--out", default=None, help="run root directory")
    sim.add_argument("--no-noise", action="store_true", help="test hook: zero thalamic noise")
    sim.add_argument("--no-plot", action="store_true", help="skip the SVG figure")
    sim.set_defaults(func=cmd_simulate)

    opt = sub.add_parser("optimize", help="run every study in an experiment file")
    opt.add_argument("--config", required=True, help="experiment TOML")
    opt.add_argument("--seed", type=int, default=None, help="override run.global_seed")
    opt.add_argument("--jobs", type=int, default=None, help="parallel evaluation workers")
    opt.add_argument("--out", default=None, help="override run root directory")
    opt.set_defaults(func=cmd_optimize)

    fr = sub.add_parser("front", help="recompute fronts/plots from a stored run")
    fr.add_argument("run_dir", help="run directory containing manifest.json")
    fr.add_argument("--generation", type=int, default=None, help="generation to extract (default: last)")
    fr.set_defaults(func=cmd_front)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())
