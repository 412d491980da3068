"""Experiment configuration: TOML schema, validation, digests.

A config file fully determines an optimisation run.  Parsing is strict:
unknown keys anywhere are errors (catching typos beats silently ignoring
them), every value is type- and range-checked with its table path in the
message, and the *effective* config - file values, CLI overrides, and all
defaults materialised - is what gets digested and echoed into the run
manifest.  The digest is the sha256 of the effective dict serialized as
canonical JSON (sorted keys, no whitespace, shortest round-trip floats).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .nsga3 import GAConfig, GeneSpec
from .objectives import (
    DIVERGENCE_SENTINEL_HZ,
    THREE_OBJECTIVE,
    TWO_OBJECTIVE,
    StudySpec,
    default_gene_specs,
    experiment_grid,
)

SCHEMA_VERSION = 1
ENV_RUN_ROOT = "SNNFIT_RUN_ROOT"

_ALLOWED = {
    "": {"schema", "name", "network", "study", "ga", "run"},
    "network": {"n_exc", "n_inh", "duration"},
    "study": {
        "mode",
        "targets",
        "f",
        "split_mu",
        "frozen_mu",
        "n_repeats",
        "divergence_sentinel",
    },
    "ga": {
        "population",
        "generations",
        "eta_c",
        "p_c",
        "eta_m",
        "p_m",
        "reevaluate_survivors",
        "bounds",
    },
    "run": {"global_seed", "repeat_seeds", "out", "jobs"},
}

_DEFAULTS = {
    "network": {"n_exc": 800, "n_inh": 200, "duration": 1000},
    "study": {
        "mode": TWO_OBJECTIVE,
        "targets": [[5.0, 2.0]],
        "f": [1.0],
        "split_mu": False,
        "frozen_mu": 0.0,
        "n_repeats": 1,
        "divergence_sentinel": DIVERGENCE_SENTINEL_HZ,
    },
    "ga": {
        "population": 25,
        "generations": 50,
        "eta_c": 30.0,
        "p_c": 1.0,
        "eta_m": 20.0,
        "p_m": None,
        "reevaluate_survivors": False,
    },
    "run": {"global_seed": 42, "repeat_seeds": [0, 1, 2], "out": None, "jobs": 0},
}


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every problem found."""

    def __init__(self, problems):
        problems = [problems] if isinstance(problems, str) else list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: study grid, GA settings, seeds, and run layout."""

    name: str
    studies: tuple[StudySpec, ...]
    ga: GAConfig
    global_seed: int
    repeat_seeds: tuple[int, ...]
    jobs: int  # 0 means one worker per available CPU
    out_root: str | None
    effective: dict

    @property
    def digest(self) -> str:
        return config_digest(self.effective)

    @property
    def run_dir_name(self) -> str:
        return f"{self.name}-{self.digest[:8]}"

    def resolve_out_root(self) -> str:
        return self.out_root or os.environ.get(ENV_RUN_ROOT) or "runs"

    def resolve_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


def config_digest(effective: dict) -> str:
    """sha256 of the canonical-JSON effective config.

    Execution-placement keys (run.out, run.jobs) are pruned first: they
    steer where and how fast a run executes, never its numeric content,
    so the same experiment keeps the same digest across machines.
    """
    pruned = json.loads(json.dumps(effective))
    if isinstance(pruned.get("run"), dict):
        pruned["run"].pop("out", None)
        pruned["run"].pop("jobs", None)
    canonical = json.dumps(pruned, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode()).hexdigest()


def _check_unknown_keys(raw: dict, problems: list[str]) -> None:
    for key in raw:
        if key not in _ALLOWED[""]:
            problems.append(f"unknown top-level key {key!r}")
    for table in ("network", "study", "ga", "run"):
        section = raw.get(table)
        if section is None:
            continue
        if not isinstance(section, dict):
            problems.append(f"[{table}] must be a table")
            continue
        for key in section:
            if key not in _ALLOWED[table]:
                problems.append(f"unknown key {table}.{key!r}")
    bounds = raw.get("ga", {}).get("bounds") if isinstance(raw.get("ga"), dict) else None
    if bounds is not None and not isinstance(bounds, dict):
        problems.append("ga.bounds must be a table of gene -> [lower, upper]")


def _merged(raw: dict, table: str) -> dict:
    out = dict(_DEFAULTS[table])
    section = raw.get(table, {})
    if isinstance(section, dict):
        for key, value in section.items():
            if key in out or key == "bounds":
                out[key] = value
    return out


def _want_number(value, path: str, problems: list[str], lo=None, hi=None) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{path} must be a number, got {value!r}")
        return None
    value = float(value)
    if lo is not None and value < lo:
        problems.append(f"{path} must be >= {lo}, got {value}")
        return None
    if hi is not None and value > hi:
        problems.append(f"{path} must be <= {hi}, got {value}")
        return None
    return value


def _want_int(value, path: str, problems: list[str], lo=None) -> int | None:
    if isinstance(value, bool) or not isinstance(value, int):
        problems.append(f"{path} must be an integer, got {value!r}")
        return None
    if lo is not None and value < lo:
        problems.append(f"{path} must be >= {lo}, got {value}")
        return None
    return value


def _want_bool(value, path: str, problems: list[str]) -> bool:
    if not isinstance(value, bool):
        problems.append(f"{path} must be true or false, got {value!r}")
        return False
    return value


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Overlay dotted-path CLI overrides ('run.jobs') onto a parsed config dict."""
    out = json.loads(json.dumps(raw))  # deep copy of plain data
    for path, value in overrides.items():
        if value is None:
            continue
        cursor = out
        parts = path.split(".")
        for part in parts[:-1]:
            cursor = cursor.setdefault(part, {})
        cursor[parts[-1]] = value
    return out


def build_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a parsed TOML dict (plus overrides) into an ExperimentConfig."""
    if overrides:
        raw = apply_overrides(raw, overrides)
    problems: list[str] = []

    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        problems.append(f"schema must be {SCHEMA_VERSION}, got {schema!r}")
    name = raw.get("name")
    if not isinstance(name, str) or not name or any(ch in name for ch in "/\\ "):
        problems.append(f"name must be a non-empty string without spaces or slashes, got {name!r}")
        name = "invalid"
    _check_unknown_keys(raw, problems)

    network = _merged(raw, "network")
    n_exc = _want_int(network["n_exc"], "network.n_exc", problems, lo=1)
    n_inh = _want_int(network["n_inh"], "network.n_inh", problems, lo=0)
    duration = _want_int(network["duration"], "network.duration", problems, lo=1)

    study = _merged(raw, "study")
    mode = study["mode"]
    if mode not in (TWO_OBJECTIVE, THREE_OBJECTIVE):
        problems.append(f"study.mode must be {TWO_OBJECTIVE!r} or {THREE_OBJECTIVE!r}, got {mode!r}")
        mode = TWO_OBJECTIVE
    targets = study["targets"]
    clean_targets: list[list[float]] = []
    if not isinstance(targets, list) or not targets:
        problems.append("study.targets must be a non-empty list of [exc_hz, inh_hz] pairs")
    else:
        for k, pair in enumerate(targets):
            if not isinstance(pair, list) or len(pair) != 2:
                problems.append(f"study.targets[{k}] must be an [exc_hz, inh_hz] pair, got {pair!r}")
                continue
            exc = _want_number(pair[0], f"study.targets[{k}][0]", problems, lo=0.0)
            inh = _want_number(pair[1], f"study.targets[{k}][1]", problems, lo=0.0)
            if exc is not None and inh is not None:
                clean_targets.append([exc, inh])
    f_values = study["f"]
    clean_f: list[float] = []
    if mode == TWO_OBJECTIVE:
        if not isinstance(f_values, list) or not f_values:
            problems.append("study.f must be a non-empty list of fractions in [0, 1]")
        else:
            for k, value in enumerate(f_values):
                out = _want_number(value, f"study.f[{k}]", problems, lo=0.0, hi=1.0)
                if out is not None:
                    clean_f.append(out)
    elif "f" in raw.get("study", {}):
        problems.append("study.f is not allowed in three_objective mode (f is optimised)")
    split_mu = _want_bool(study["split_mu"], "study.split_mu", problems)
    if split_mu and mode == TWO_OBJECTIVE:
        problems.append("study.split_mu requires three_objective mode")
        split_mu = False
    frozen_mu = _want_number(study["frozen_mu"], "study.frozen_mu", problems)
    n_repeats = _want_int(study["n_repeats"], "study.n_repeats", problems, lo=1)
    sentinel = _want_number(study["divergence_sentinel"], "study.divergence_sentinel", problems, lo=1.0)

    ga = _merged(raw, "ga")
    population = _want_int(ga["population"], "ga.population", problems, lo=2)
    generations = _want_int(ga["generations"], "ga.generations", problems, lo=0)
    eta_c = _want_number(ga["eta_c"], "ga.eta_c", problems, lo=1e-9)
    p_c = _want_number(ga["p_c"], "ga.p_c", problems, lo=0.0, hi=1.0)
    eta_m = _want_number(ga["eta_m"], "ga.eta_m", problems, lo=1e-9)
    p_m = ga["p_m"]
    if p_m is not None:
        p_m = _want_number(p_m, "ga.p_m", problems, lo=0.0, hi=1.0)
    reevaluate = _want_bool(ga["reevaluate_survivors"], "ga.reevaluate_survivors", problems)

    run = _merged(raw, "run")
    global_seed = _want_int(run["global_seed"], "run.global_seed", problems, lo=0)
    repeat_seeds = run["repeat_seeds"]
    clean_seeds: list[int] = []
    if not isinstance(repeat_seeds, list) or not repeat_seeds:
        problems.append("run.repeat_seeds must be a non-empty list of integers >= 0")
    else:
        for k, value in enumerate(repeat_seeds):
            out = _want_int(value, f"run.repeat_seeds[{k}]", problems, lo=0)
            if out is not None:
                clean_seeds.append(out)
        if len(set(clean_seeds)) != len(clean_seeds):
            problems.append("run.repeat_seeds must be distinct")
    jobs = _want_int(run["jobs"], "run.jobs", problems, lo=0)
    out_root = run["out"]
    if out_root is not None and not isinstance(out_root, str):
        problems.append(f"run.out must be a string path, got {out_root!r}")
        out_root = None

    if problems:
        raise ConfigError(problems)

    try:
        studies = tuple(
            experiment_grid(
                clean_targets,
                clean_f if mode == TWO_OBJECTIVE else None,
                mode=mode,
                split_mu=split_mu,
                frozen_mu=frozen_mu,
                n_exc=n_exc,
                n_inh=n_inh,
                duration=duration,
                n_repeats=n_repeats,
                divergence_sentinel=sentinel,
            )
            if mode == THREE_OBJECTIVE
            else experiment_grid(
                clean_targets,
                clean_f,
                mode=mode,
                frozen_mu=frozen_mu,
                n_exc=n_exc,
                n_inh=n_inh,
                duration=duration,
                n_repeats=n_repeats,
                divergence_sentinel=sentinel,
            )
        )
    except ValueError as err:
        raise ConfigError([str(err)]) from err

    gene_specs = list(default_gene_specs(studies[0]))
    bounds_raw = raw.get("ga", {}).get("bounds", {})
    bound_problems: list[str] = []
    if isinstance(bounds_raw, dict):
        names = [g.name for g in gene_specs]
        for gene_name, pair in bounds_raw.items():
            if gene_name not in names:
                bound_problems.append(
                    f"ga.bounds.{gene_name}: not a gene of this mode (genes: {', '.join(names)})"
                )
                continue
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pair)
            ):
                bound_problems.append(f"ga.bounds.{gene_name} must be [lower, upper]")
                continue
            lo, hi = float(pair[0]), float(pair[1])
            if gene_name == "f" and (lo < 0.0 or hi > 1.0):
                bound_problems.append("ga.bounds.f must stay within [0, 1]")
                continue
            try:
                gene_specs[names.index(gene_name)] = GeneSpec(gene_name, lo, hi)
            except ValueError as err:
                bound_problems.append(f"ga.bounds.{gene_name}: {err}")
    if bound_problems:
        raise ConfigError(bound_problems)

    try:
        ga_config = GAConfig(
            genes=tuple(gene_specs),
            population_size=population,
            generations=generations,
            eta_c=eta_c,
            p_c=p_c,
            eta_m=eta_m,
            p_m=p_m,
            reevaluate_survivors=reevaluate,
        )
    except ValueError as err:
        raise ConfigError([f"ga: {err}"]) from err

    effective = {
        "schema": SCHEMA_VERSION,
        "name": name,
        "network": {"n_exc": n_exc, "n_inh": n_inh, "duration": duration},
        "study": {
            "mode": mode,
            "targets": clean_targets,
            "f": clean_f if mode == TWO_OBJECTIVE else None,
            "split_mu": split_mu,
            "frozen_mu": frozen_mu,
            "n_repeats": n_repeats,
            "divergence_sentinel": sentinel,
        },
        "ga": {
            "population": population,
            "generations": generations,
            "eta_c": eta_c,
            "p_c": p_c,
            "eta_m": eta_m,
            "p_m": ga_config.resolved_p_m,
            "reevaluate_survivors": reevaluate,
            "bounds": {g.name: [g.lower, g.upper] for g in gene_specs},
        },
        "run": {
            "global_seed": global_seed,
            "repeat_seeds": clean_seeds,
            "jobs": jobs,
            "out": out_root,
        },
    }

    return ExperimentConfig(
        name=name,
        studies=studies,
        ga=ga_config,
        global_seed=global_seed,
        repeat_seeds=tuple(clean_seeds),
        jobs=jobs,
        out_root=out_root,
        effective=effective,
    )


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a TOML experiment file; overrides use dotted paths."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as err:
        raise ConfigError([f"config file not found: {path}"]) from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError([f"TOML parse error in {path}: {err}"]) from err
    return build_config(raw, overrides)
