"""Command-line driver: single runs, parameter sweeps and the worked examples."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from concurrent.futures import ProcessPoolExecutor

from . import golden
from .simulation import (
    ALGORITHMS, PARAM_KEYS, InvalidParams, SimParams, UnknownParam,
    csv_row, load_config, run, with_values, write_csv,
)
from .workload import BadMix


def parse_list(text: str) -> list[str]:
    """Comma-separated items; ``a:b:step`` expands to an inclusive range."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            parts = item.split(":")
            if len(parts) != 3:
                raise ValueError(f"bad range {item!r}; use start:stop:step")
            start, stop, step = (float(p) for p in parts)
            if step <= 0:
                raise ValueError(f"bad range {item!r}; step must be > 0")
            x = start
            while x <= stop + 1e-9:
                out.append(repr(int(x)) if float(x).is_integer() else repr(x))
                x += step
        else:
            out.append(item)
    if not out:
        raise ValueError("empty list")
    return out


def _one(params: SimParams) -> list[str]:
    return csv_row(params, run(params))


def sweep_params(base: SimParams, vary: str, values: list[str], seeds: list[int]) -> list[SimParams]:
    key = vary.strip().upper()
    if key not in PARAM_KEYS and key != "READPCT":
        raise UnknownParam(vary)
    if key in ("ALGORITHM", "SEED"):
        raise InvalidParams(f"{key} is set by the sweep itself")
    out = []
    for alg in ALGORITHMS:
        for value in values:
            for seed in seeds:
                p = dataclasses.replace(base, ALGORITHM=alg, SEED=seed)
                out.append(with_values(p, {key: value}).validate())
    return out


def sweep(base: SimParams, vary: str, values: list[str], seeds: list[int], jobs: int = 1) -> list[list[str]]:
    plan = sweep_params(base, vary, values, seeds)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one, plan))
    return [_one(p) for p in plan]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oocluster", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="one simulation, one CSV row")
    r.add_argument("-c", "--config", required=True)

    s = sub.add_parser("sweep", help="values x seeds x algorithms")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--vary", required=True, help="parameter name (or READPCT)")
    s.add_argument("--values", required=True, help="comma list or start:stop:step")
    s.add_argument("--seeds", default="0", help="comma list or start:stop:step")
    s.add_argument("-j", "--jobs", type=int, default=1, help="parallel runs")

    g = sub.add_parser("golden", help="replay a worked example")
    g.add_argument("name", choices=["cactis", "ck_on", "ck_off"])
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    try:
        if args.command == "golden":
            ok, report = golden.check(args.name)
            print(report, file=out)
            print(f"{args.name}: {'PASS' if ok else 'FAIL'}", file=out)
            return 0 if ok else 1
        base = load_config(args.config)
        if args.command == "run":
            write_csv([_one(base)], out)
            return 0
        seeds = [int(s) for s in parse_list(args.seeds)]
        rows = sweep(base, args.vary, parse_list(args.values), seeds, jobs=max(1, args.jobs))
        write_csv(rows, out)
        return 0
    except (InvalidParams, BadMix, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnknownParam as exc:
        print(f"error: unknown parameter {exc.args[0]!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
