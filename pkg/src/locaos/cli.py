"""Command-line entry point: ``locaos <command> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .harness import ConfigError
from .operators import catalog_rows

# CLI flag -> settings key; flags left unset do not override the config file
_SHARED_FLAGS = {
    "instances": str, "gen_count": int, "gen_customers": int, "gen_capacity": str,
    "gen_demand_lo": int, "gen_demand_hi": int, "gen_seed": int, "round_distances": str,
    "ops": str, "seed": int, "max_ite": str, "perturbation_strength": int,
    "alpha": float, "beta": float, "p_min": str, "workers": int, "out_dir": str,
}


def _add_settings(p: argparse.ArgumentParser, extra=()):
    p.add_argument("--config", help="flat 'key = value' settings file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one setting (repeatable)")
    for key in [*_SHARED_FLAGS, *extra]:
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                       type=_SHARED_FLAGS.get(key, str))


def _settings(args, keys) -> dict:
    layers = []
    if args.config:
        layers.append(harness.parse_config_text(Path(args.config).read_text()))
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    layers.append(overrides)
    layers.append({k: getattr(args, k) for k in keys if getattr(args, k, None) is not None})
    return harness.resolve_settings(*layers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locaos", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write seeded uniform random instances")
    p.add_argument("--n", dest="gen_count", type=int, default=None, help="number of instances")
    p.add_argument("--customers", dest="gen_customers", type=int, default=None)
    p.add_argument("--capacity", dest="gen_capacity", default=None)
    p.add_argument("--demand-lo", dest="gen_demand_lo", type=int, default=None)
    p.add_argument("--demand-hi", dest="gen_demand_hi", type=int, default=None)
    p.add_argument("--seed", dest="gen_seed", type=int, default=None)
    p.add_argument("--out", dest="out_dir", default=None)
    p.add_argument("--format", choices=["vrp", "json"], default="vrp")
    p.add_argument("--force", action="store_true", help="overwrite existing files")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[])

    p = sub.add_parser("sample-loc", help="sample trap matrices and LOC matrices")
    _add_settings(p, extra=("trials", "max_records"))

    p = sub.add_parser("loc-sim", help="pairwise similarity table of LOC files")
    p.add_argument("files", nargs="+")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = sub.add_parser("optimize", help="single local search run")
    _add_settings(p, extra=("loc_file",))
    p.add_argument("--policy", default="AP", help="PM, AP, Uniform, optionally with -LOC")

    p = sub.add_parser("compare", help="paired comparison of policies")
    _add_settings(p, extra=("policies", "repeats", "seeds", "loc_file", "save_traces"))

    p = sub.add_parser("operators", help="print the operator catalog as CSV")
    return parser


def _cmd_gen(args):
    keys = ["gen_count", "gen_customers", "gen_capacity", "gen_demand_lo", "gen_demand_hi",
            "gen_seed", "out_dir"]
    settings = _settings(args, keys)
    if settings["gen_count"] == 0:
        settings["gen_count"] = 1
    for path in harness.gen(settings, fmt=args.format, force=args.force):
        print(path)


def _cmd_sample_loc(args):
    settings = _settings(args, [*_SHARED_FLAGS, "trials", "max_records"])
    res = harness.sample_loc(settings)
    m, v = res.similarity_mean_var
    print(json.dumps(dict(out_dir=settings["out_dir"], trials=len(res.trials), records=res.records,
                          steps=res.steps, similarity_mean=m, similarity_variance=v)))


def _cmd_loc_sim(args):
    names, table = harness.loc_sim(args.files)
    text = harness.loc_sim_csv(names, table)
    if args.out:
        harness._write(Path(args.out), text)
    else:
        sys.stdout.write(text)


def _cmd_optimize(args):
    settings = _settings(args, [*_SHARED_FLAGS, "loc_file"])
    trace = harness.optimize(settings, policy=args.policy)
    print(json.dumps(trace.summary()))


def _cmd_compare(args):
    settings = _settings(args, [*_SHARED_FLAGS, "policies", "repeats", "seeds", "loc_file", "save_traces"])
    report = harness.compare(settings)
    for row in report.tests:
        if row["scope"] == "ALL":
            print(f"{row['policy_a']} vs {row['policy_b']} [{row['metric']}]: "
                  f"{row['mean_a']:.6g} vs {row['mean_b']:.6g}, p={row['p_value']:.4g}")


def _cmd_operators(args):
    rows = catalog_rows()
    print(",".join(rows[0]))
    for r in rows:
        print(",".join(str(v) for v in r.values()))


COMMANDS = {
    "gen": _cmd_gen,
    "sample-loc": _cmd_sample_loc,
    "loc-sim": _cmd_loc_sim,
    "optimize": _cmd_optimize,
    "compare": _cmd_compare,
    "operators": _cmd_operators,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (ConfigError, FileExistsError, FileNotFoundError, ValueError) as exc:
        parser.exit(2, f"locaos {args.command}: error: {exc}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
