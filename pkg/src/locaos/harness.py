"""Experiment orchestration: instance generation, LOC sampling, policy comparison.

Experiments are described by flat ``key = value`` settings (config file plus
command-line overrides). Every CSV written here starts with ``#`` comment lines
echoing the resolved settings, so any row can be reproduced from its file.
"""

from __future__ import annotations

import glob
import hashlib
import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cvrp import (
    Instance,
    generate_uniform_instance,
    instance_to_json,
    read_instance,
    write_cvrplib,
)
from .loc import (
    LocMatrix,
    kendall_similarity,
    loc_matrix,
    loc_to_csv,
    mean_loc,
    read_loc,
    sample_trap_matrix,
    traps_to_csv,
)
from .operators import parse_operator_list
from .search import (
    DEFAULT_MAX_ITE_BENCHMARK,
    DEFAULT_MAX_ITE_GENERATED,
    SearchConfig,
    run_base,
    run_loc_assisted,
)
from .stats import mean_var, wilcoxon_signed_rank


class ConfigError(ValueError):
    pass


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text in (None, "", "auto") else float(text)


def _num(text):
    v = float(text)
    return int(v) if v.is_integer() else v


def _opt_int(text):
    return None if text in (None, "", "auto") else int(text)


# key -> (type, default)
SETTINGS = {
    "instances": (str, ""),
    "gen_count": (int, 0),
    "gen_customers": (int, 100),
    "gen_capacity": (_num, 50),
    "gen_demand_lo": (int, 1),
    "gen_demand_hi": (int, 9),
    "gen_seed": (int, 0),
    "round_distances": (_bool, False),
    "ops": (str, "1-17"),
    "policies": (str, "AP,AP-LOC,PM,PM-LOC"),
    "repeats": (int, 1),
    "seed": (int, 0),
    "seeds": (str, ""),
    "max_ite": (_opt_int, None),
    "loc_file": (str, ""),
    "perturbation_strength": (int, 5),
    "alpha": (float, 0.2),
    "beta": (float, 0.2),
    "p_min": (_opt_float, None),
    "trials": (int, 10),
    "max_records": (_opt_int, None),
    "workers": (int, 1),
    "save_traces": (_bool, False),
    "out_dir": (str, "results"),
}

# settings that cannot change results; kept out of CSV headers
_NOT_ECHOED = ("workers", "out_dir")


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {no}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def resolve_settings(*layers: dict) -> dict:
    """Merge raw layers (later wins) over the defaults and coerce types."""
    merged: dict = {}
    for layer in layers:
        for key, value in (layer or {}).items():
            if value is None:
                continue
            key = key.replace("-", "_")
            if key not in SETTINGS:
                raise ConfigError(f"unknown setting {key!r}")
            merged[key] = value
    resolved = {}
    for key, (kind, default) in SETTINGS.items():
        if key in merged:
            try:
                resolved[key] = kind(merged[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {merged[key]!r} ({exc})") from None
        else:
            resolved[key] = default
    if resolved["repeats"] < 1:
        raise ConfigError("repeats must be >= 1")
    if resolved["trials"] < 1:
        raise ConfigError("trials must be >= 1")
    if resolved["perturbation_strength"] < 1:
        raise ConfigError("perturbation_strength must be >= 1")
    if resolved["max_ite"] is not None and resolved["max_ite"] < 1:
        raise ConfigError("max_ite must be >= 1")
    seeds = seed_list(resolved)
    if len(seeds) != resolved["repeats"]:
        raise ConfigError(f"{len(seeds)} seeds listed for {resolved['repeats']} repeats")
    try:
        parse_operator_list(resolved["ops"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return resolved


def seed_list(settings) -> list[int]:
    if settings["seeds"].strip():
        return [int(s) for s in settings["seeds"].replace(",", " ").split()]
    return [settings["seed"] + r for r in range(settings["repeats"])]


def settings_lines(settings: dict, command: str, extra: dict | None = None) -> list[str]:
    lines = [f"locaos {__version__} {command}"]
    for key in SETTINGS:
        if key in _NOT_ECHOED:
            continue
        value = settings[key]
        lines.append(f"{key} = {'' if value is None else value}")
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    return lines


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _csv(header, rows, comments=()) -> str:
    out = [f"# {c}" for c in comments]
    out.append(",".join(header))
    for row in rows:
        out.append(",".join(_cell(v) for v in row))
    return "\n".join(out) + "\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


# --- instances ---------------------------------------------------------------


def load_instances(settings) -> list[Instance]:
    """Instances named by ``instances`` (paths or globs) followed by generated ones."""
    out = []
    for token in settings["instances"].replace(",", " ").split():
        paths = sorted(glob.glob(token)) or [token]
        for path in paths:
            out.append(read_instance(path, round_distances=settings["round_distances"]))
    for i in range(settings["gen_count"]):
        out.append(_generated(settings, settings["gen_seed"] + i))
    if not out:
        raise ConfigError("no instances: set 'instances' or 'gen_count'")
    return out


def _generated(settings, seed) -> Instance:
    inst = generate_uniform_instance(
        settings["gen_customers"], settings["gen_capacity"],
        settings["gen_demand_lo"], settings["gen_demand_hi"], seed=seed,
    )
    if settings["round_distances"]:
        inst = replace(inst, round_distances=True)
    return inst


def default_max_ite(settings) -> int:
    if settings["max_ite"] is not None:
        return settings["max_ite"]
    return DEFAULT_MAX_ITE_BENCHMARK if settings["instances"].strip() else DEFAULT_MAX_ITE_GENERATED


def gen(settings, fmt="vrp", force=False) -> list[Path]:
    """Write ``gen_count`` seeded UniRand instances into ``out_dir``."""
    if settings["gen_count"] < 1:
        raise ConfigError("gen_count must be >= 1")
    if settings["gen_customers"] < 1:
        raise ConfigError("gen_customers must be >= 1")
    out_dir = Path(settings["out_dir"])
    comment = (f"UniRand n={settings['gen_customers']} capacity={settings['gen_capacity']:g} "
               f"demand={settings['gen_demand_lo']}-{settings['gen_demand_hi']} unit-square")
    paths = []
    for i in range(settings["gen_count"]):
        seed = settings["gen_seed"] + i
        inst = _generated(settings, seed)
        path = out_dir / f"{inst.name}.{fmt}"
        if path.exists() and not force:
            raise FileExistsError(f"{path} exists (use --force to overwrite)")
        text = instance_to_json(inst) if fmt == "json" else write_cvrplib(inst, f"{comment} seed={seed}")
        _write(path, text)
        paths.append(path)
    return paths


# --- LOC sampling ------------------------------------------------------------


def _sample_trial(job):
    instance, ops, max_ite, seed, max_records, strength = job
    traps, steps = sample_trap_matrix(instance, ops, max_ite, seed, max_records, strength)
    return traps, steps


def _pool_map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


@dataclass
class SamplingResult:
    trials: list[LocMatrix]
    mean: LocMatrix
    records: list[int]
    steps: list[int]
    similarities: list[tuple[int, int, float]]

    @property
    def similarity_mean_var(self):
        return mean_var([s for *_, s in self.similarities])


def sample_loc(settings, write=True) -> SamplingResult:
    """Independent sampling trials on the first configured instance."""
    instance = load_instances(settings)[0]
    ops = parse_operator_list(settings["ops"])
    max_ite = default_max_ite(settings)
    seeds = [settings["seed"] + t for t in range(settings["trials"])]
    jobs = [(instance, ops, max_ite, s, settings["max_records"], settings["perturbation_strength"])
            for s in seeds]
    results = _pool_map(_sample_trial, jobs, settings["workers"])
    for (traps, _), seed in zip(results, seeds):
        if len(traps) == 0:
            raise RuntimeError(f"trial with seed {seed} recorded no solutions; raise max_ite")
    mats = [loc_matrix(traps) for traps, _ in results]
    mean = mean_loc(mats)
    sims = [(a, b, kendall_similarity(mats[a], mats[b]))
            for a, b in itertools.combinations(range(len(mats)), 2)]
    res = SamplingResult(mats, mean, [len(t) for t, _ in results], [s for _, s in results], sims)

    if write:
        out = Path(settings["out_dir"])
        base = settings_lines(settings, "sample-loc", {"instance": instance.name, "max_ite_used": max_ite})
        for t, ((traps, steps), mat, seed) in enumerate(zip(results, mats, seeds)):
            info = base + [f"trial = {t}", f"trial_seed = {seed}", f"recorded = {len(traps)}", f"steps = {steps}"]
            _write(out / f"loc_trial_{t:02d}.csv", loc_to_csv(mat, info))
            _write(out / f"traps_trial_{t:02d}.csv", traps_to_csv(traps, info))
        _write(out / "loc_mean.csv", loc_to_csv(mean, base + [f"trials = {len(mats)}"]))
        m, v = res.similarity_mean_var
        _write(out / "similarity.csv", _csv(
            ["trial_a", "trial_b", "kendall_similarity"], sims,
            base + [f"similarity_mean = {m!r}", f"similarity_variance = {v!r}"]))
    return res


def loc_sim(paths) -> tuple[list[str], np.ndarray]:
    """Pairwise similarity table of LOC matrix files."""
    if len(paths) < 2:
        raise ConfigError("loc-sim needs at least two LOC files")
    mats = [read_loc(p) for p in paths]
    for p, m in zip(paths, mats):
        if m.ops != mats[0].ops:
            raise ConfigError(f"{p} covers operators {m.ops}, expected {mats[0].ops}")
    n = len(mats)
    table = np.eye(n)
    for a, b in itertools.combinations(range(n), 2):
        table[a, b] = table[b, a] = kendall_similarity(mats[a], mats[b])
    for a in range(n):
        table[a, a] = kendall_similarity(mats[a], mats[a])
    names = [Path(p).stem for p in paths]
    return names, table


def loc_sim_csv(names, table) -> str:
    rows = [[name, *row] for name, row in zip(names, table)]
    return _csv(["file", *names], rows)


# --- comparisons -------------------------------------------------------------


def split_policy(name: str) -> tuple[str, bool]:
    if name.endswith("-LOC"):
        return name[:-4], True
    return name, False


def load_loc_for(settings, ops) -> tuple[np.ndarray, str]:
    path = settings["loc_file"]
    if not path:
        raise ConfigError("LOC-assisted policies need 'loc_file'")
    loc = read_loc(path)
    missing = [o for o in ops if o not in loc.ops]
    if missing:
        raise ConfigError(f"{path} has no rows for operators {missing}")
    idx = [loc.ops.index(o) for o in ops]
    values = np.clip(loc.values[np.ix_(idx, idx)], -1.0, 1.0)
    return values, sha256_file(path)


def _run_cell(job):
    key, instance, policy, ops, cfg_kwargs, loc_values, keep_trace = job
    base, uses_loc = split_policy(policy)
    config = SearchConfig(policy=base, keep_probs=False, **cfg_kwargs)
    if uses_loc:
        trace = run_loc_assisted(instance, ops, config, loc_values)
    else:
        trace = run_base(instance, ops, config)
    return key, trace.summary(), (trace.to_csv() if keep_trace else None)


@dataclass
class ComparisonReport:
    instances: list[str]
    policies: list[str]
    cells: list[dict]
    summaries: list[dict]
    tests: list[dict]
    winloss: list[dict]


def compare(settings, write=True) -> ComparisonReport:
    instances = load_instances(settings)
    ops = parse_operator_list(settings["ops"])
    policies = [p.strip() for p in settings["policies"].split(",") if p.strip()]
    if len(policies) < 2:
        raise ConfigError("compare needs at least two policies")
    for p in policies:
        base, _ = split_policy(p)
        if base not in ("PM", "AP", "Uniform"):
            raise ConfigError(f"unknown policy {p!r}")
    loc_values, loc_sha = None, ""
    if any(split_policy(p)[1] for p in policies):
        loc_values, loc_sha = load_loc_for(settings, ops)
    seeds = seed_list(settings)
    max_ite = default_max_ite(settings)

    jobs = []
    for ii, inst in enumerate(instances):
        for pi, pol in enumerate(policies):
            for r, seed in enumerate(seeds):
                kwargs = dict(max_ite=max_ite, seed=seed, alpha=settings["alpha"], beta=settings["beta"],
                              p_min=settings["p_min"], perturbation_strength=settings["perturbation_strength"])
                jobs.append(((ii, pi, r), inst, pol, ops, kwargs, loc_values, settings["save_traces"]))
    results = sorted(_pool_map(_run_cell, jobs, settings["workers"]), key=lambda x: x[0])

    names = [inst.name for inst in instances]
    cells = []
    traces = {}
    for (ii, pi, r), summ, trace_csv in results:
        cells.append(dict(instance=names[ii], instance_index=ii, policy=policies[pi], repeat=r,
                          seed=seeds[r], **summ))
        if trace_csv is not None:
            traces[(ii, pi, r)] = trace_csv

    def values(ii, pol, metric):
        return [c[metric] for c in cells if c["instance_index"] == ii and c["policy"] == pol]

    summaries = []
    for ii, name in enumerate(names):
        for pol in policies:
            dm, dv = mean_var(values(ii, pol, "best_distance"))
            tm, tv = mean_var(values(ii, pol, "trapped_after_trapped_count"))
            summaries.append(dict(instance=name, policy=pol, runs=len(seeds), mean_distance=dm,
                                  var_distance=dv, mean_trapped_after_trapped=tm,
                                  var_trapped_after_trapped=tv))

    def mean_of(ii, pol, metric):
        return float(np.mean(values(ii, pol, metric)))

    tests = []
    winloss = []
    for pa, pb in itertools.combinations(policies, 2):
        for metric in ("best_distance", "trapped_after_trapped_count"):
            for ii, name in enumerate(names):
                w = wilcoxon_signed_rank(values(ii, pa, metric), values(ii, pb, metric))
                tests.append(dict(scope=name, policy_a=pa, policy_b=pb, metric=metric,
                                  mean_a=mean_of(ii, pa, metric), mean_b=mean_of(ii, pb, metric),
                                  n=w.n, statistic=w.statistic, p_value=w.p_value,
                                  degenerate=w.degenerate, method=w.method))
            a = [mean_of(ii, pa, metric) for ii in range(len(names))]
            b = [mean_of(ii, pb, metric) for ii in range(len(names))]
            w = wilcoxon_signed_rank(a, b)
            tests.append(dict(scope="ALL", policy_a=pa, policy_b=pb, metric=metric,
                              mean_a=float(np.mean(a)), mean_b=float(np.mean(b)),
                              n=w.n, statistic=w.statistic, p_value=w.p_value,
                              degenerate=w.degenerate, method=w.method))
            wins = sum(x < y for x, y in zip(a, b))
            losses = sum(x > y for x, y in zip(a, b))
            winloss.append(dict(policy_a=pa, policy_b=pb, metric=metric, wins=wins,
                                losses=losses, ties=len(a) - wins - losses))

    report = ComparisonReport(names, policies, cells, summaries, tests, winloss)
    if write:
        _write_report(settings, report, traces, max_ite, loc_sha, ops)
    return report


def _rows(dicts, keys):
    return [[d[k] for k in keys] for d in dicts]


def _write_report(settings, report, traces, max_ite, loc_sha, ops):
    out = Path(settings["out_dir"])
    head = settings_lines(settings, "compare", {
        "max_ite_used": max_ite, "loc_sha256": loc_sha,
        "ops_resolved": " ".join(map(str, ops)), "seeds_resolved": " ".join(map(str, seed_list(settings))),
    })
    cell_keys = ["instance", "policy", "repeat", "seed", "iterations", "initial_distance", "best_distance",
                 "trapped_after_trapped_count", "trapped_count", "perturbation_count"]
    _write(out / "cells.csv", _csv(cell_keys, _rows(report.cells, cell_keys), head))
    summ_keys = list(report.summaries[0])
    _write(out / "summary.csv", _csv(summ_keys, _rows(report.summaries, summ_keys), head))
    test_keys = list(report.tests[0]) if report.tests else []
    _write(out / "tests.csv", _csv(test_keys, _rows(report.tests, test_keys), head))
    wl_keys = ["policy_a", "policy_b", "metric", "wins", "losses", "ties"]
    _write(out / "winloss.csv", _csv(wl_keys, _rows(report.winloss, wl_keys), head))
    for (ii, pi, r), text in sorted(traces.items()):
        name = f"trace_{report.instances[ii]}_{report.policies[pi]}_r{r:02d}.csv"
        _write(out / "traces" / name, text)
    meta = dict(
        command="compare", settings=settings, max_ite_used=max_ite, loc_sha256=loc_sha,
        instances=report.instances, policies=report.policies,
        wall_time_total=sum(c["wall_time"] for c in report.cells),
        summaries=report.summaries, tests=report.tests, winloss=report.winloss,
    )
    _write(out / "report.json", json.dumps(meta, indent=1, default=str) + "\n")


def optimize(settings, policy="AP", write=True):
    """One search run on the first configured instance."""
    instance = load_instances(settings)[0]
    ops = parse_operator_list(settings["ops"])
    base, uses_loc = split_policy(policy)
    config = SearchConfig(max_ite=default_max_ite(settings), policy=base, seed=settings["seed"],
                          alpha=settings["alpha"], beta=settings["beta"], p_min=settings["p_min"],
                          perturbation_strength=settings["perturbation_strength"],
                          loc_file=settings["loc_file"] or None)
    loc_sha = ""
    if uses_loc:
        values, loc_sha = load_loc_for(settings, ops)
        trace = run_loc_assisted(instance, ops, config, values)
    else:
        trace = run_base(instance, ops, config)
    if write:
        out = Path(settings["out_dir"])
        head = settings_lines(settings, "optimize", {"policy": policy, "instance": instance.name,
                                                      "loc_sha256": loc_sha, "max_ite_used": config.max_ite})
        _write(out / "trace.csv", "".join(f"# {h}\n" for h in head) + trace.to_csv())
        summary = dict(instance=instance.name, policy=policy, settings=settings, loc_sha256=loc_sha,
                       best_routes=[list(r) for r in trace.best_plan.routes], **trace.summary())
        _write(out / "summary.json", json.dumps(summary, indent=1, default=str) + "\n")
    return trace

