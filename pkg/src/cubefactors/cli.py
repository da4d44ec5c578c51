"""Command-line front end.

Subcommands: construct, verify, analyze, rmin, experiment, export.  All
randomness flows from --seed through keyed PRF draws, so identical flags
produce byte-identical output files.  Reports written with --out carry no
timing data for the same reason; timings appear on stdout only.

Exit codes: 0 success, 1 verification or construction failure, 2 usage or
guard error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from collections import Counter
from typing import Optional, Sequence

from . import analyze as an
from .code import build_context
from .construct import (
    ConstructionParams,
    Factorisation,
    OverlapError,
    RandomTape,
    build_explicit,
    directional,
    implicit_factorisation,
    load_factorisation,
    plan_summary,
    random_greedy_factorisation,
    sample_plan,
    save_factorisation,
)
from .cube import explicit_cap, vertex_text

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DOT_MAX_D = 10

ANALYZE_OPS = (
    "components",
    "small-cubes",
    "tf",
    "code-cubes",
    "paths",
    "decomposition",
)


class UsageError(Exception):
    pass


# -- config handling ----------------------------------------------------------


def _apply_config(ns: argparse.Namespace) -> None:
    """Fill unset flags from the --config JSON file; flags win over the file."""
    path = getattr(ns, "config", None)
    if not path:
        return
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in cfg.items():
        dest = "infile" if key == "in" else key.replace("-", "_")
        if hasattr(ns, dest) and getattr(ns, dest) is None:
            setattr(ns, dest, value)


def _params_from(ns: argparse.Namespace) -> ConstructionParams:
    kwargs = {}
    for key in ("pg", "rg", "rh", "cube_dim"):
        value = getattr(ns, key, None)
        if value is not None:
            kwargs[key] = value
    try:
        return ConstructionParams(**kwargs)
    except ValueError as exc:
        raise UsageError(str(exc))


def _require_d(ns: argparse.Namespace) -> int:
    if ns.d is None:
        raise UsageError("--d is required (flag or config file)")
    return int(ns.d)


def _seed(ns: argparse.Namespace) -> int:
    return 0 if ns.seed is None else int(ns.seed)


def _fac_from_args(ns: argparse.Namespace) -> Factorisation:
    if getattr(ns, "infile", None):
        return load_factorisation(ns.infile)
    d = _require_d(ns)
    ctx = build_context(d)
    kind = getattr(ns, "kind", None) or "directional"
    if kind == "directional":
        return directional(ctx)
    if kind == "construction":
        return build_explicit(ctx, _params_from(ns), RandomTape(_seed(ns)))
    if kind == "greedy":
        return random_greedy_factorisation(ctx, RandomTape(_seed(ns)))
    raise UsageError(f"unknown kind: {kind}")


def _subset(ns: argparse.Namespace, fac: Factorisation) -> tuple[int, ...]:
    """Resolve --factors / --r to a direction subset; defaults to all of X."""
    factors = getattr(ns, "factors", None)
    r = getattr(ns, "r", None)
    if factors is not None and r is not None:
        raise UsageError("--factors and --r are mutually exclusive")
    if factors is not None:
        if isinstance(factors, str):
            try:
                values = [int(tok) for tok in factors.split(",") if tok.strip()]
            except ValueError:
                raise UsageError(f"cannot parse --factors value: {factors!r}")
        else:
            values = [int(v) for v in factors]
        try:
            return an._dirs(fac.ctx, values)
        except ValueError as exc:
            raise UsageError(str(exc))
    if r is not None:
        r = int(r)
        if not 1 <= r <= fac.d:
            raise UsageError(f"--r must be in 1..{fac.d}")
        rng = random.Random(RandomTape(_seed(ns)).derive_seed("subset"))
        return tuple(sorted(rng.sample(fac.directions, r)))
    return fac.directions


def _emit(ns: argparse.Namespace, report: dict, timings: dict[str, float]) -> None:
    """Write the timing-free report to --out, echo it with timings to stdout."""
    out = getattr(ns, "out", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(report, sort_keys=True, indent=2))
            fh.write("\n")
    shown = dict(report)
    shown["timings"] = {k: round(v, 6) for k, v in timings.items()}
    print(json.dumps(shown, sort_keys=True, indent=2))


# -- subcommands ----------------------------------------------------------------


def cmd_construct(ns: argparse.Namespace) -> int:
    d = _require_d(ns)
    seed = _seed(ns)
    mode = ns.mode or "explicit"
    ctx = build_context(d)
    params = _params_from(ns)
    t0 = time.perf_counter()
    if mode == "explicit":
        fac = build_explicit(ctx, params, RandomTape(seed))
    else:
        fac = implicit_factorisation(ctx, params, RandomTape(seed))
    elapsed = time.perf_counter() - t0
    summary: dict = {
        "operation": "construct",
        "d": d,
        "seed": seed,
        "mode": mode,
        "params": params.as_dict(d),
    }
    if fac.plan is not None:
        summary.update(plan_summary(fac.plan))
    elif d <= explicit_cap():
        summary.update(plan_summary(sample_plan(ctx, params, RandomTape(seed))))
    if ns.out:
        save_factorisation(fac, ns.out)
        summary["out"] = ns.out
    shown = dict(summary)
    shown["timings"] = {"construct": round(elapsed, 6)}
    print(json.dumps(shown, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_verify(ns: argparse.Namespace) -> int:
    if not getattr(ns, "infile", None):
        raise UsageError("--in is required")
    t0 = time.perf_counter()
    fac = load_factorisation(ns.infile)
    rep = an.validate(fac)
    elapsed = time.perf_counter() - t0
    report: dict = {"operation": "verify", "in": ns.infile, "ok": rep.ok}
    if not rep.ok:
        report["violation"] = {
            "vertex": rep.vertex,
            "vertex_text": None
            if rep.vertex is None
            else vertex_text(fac.ctx.space, rep.vertex),
            "factor": rep.factor,
            "message": rep.message,
        }
    _emit(ns, report, {"verify": elapsed})
    return EXIT_OK if rep.ok else EXIT_FAIL


def _pairs(counter: Counter) -> list[list[int]]:
    return [[int(k), int(v)] for k, v in sorted(counter.items())]


def cmd_analyze(ns: argparse.Namespace) -> int:
    fac = _fac_from_args(ns)
    dirs = _subset(ns, fac)
    op = ns.op or "components"
    ctx = fac.ctx
    t0 = time.perf_counter()
    if op == "components":
        rep = an.union_components(fac, dirs)
        results = {
            "component_count": rep.count,
            "size_histogram": _pairs(Counter(rep.sizes)),
        }
    elif op == "small-cubes":
        cubes = an.small_cube_connectivity(fac, dirs)
        results = {
            "cubes": len(cubes),
            "connected": sum(cubes.values()),
            "fraction": sum(cubes.values()) / len(cubes),
        }
    elif op == "tf":
        tfc = an.tf_context(ctx, dirs)
        sizes = an.tf_class_sizes(tfc)
        conn = an.tf_connectivity(fac, dirs)
        results = {
            "ell": tfc.dec.ell,
            "class_count": len(sizes),
            "class_size_histogram": _pairs(Counter(sizes.values())),
            "classes_in_single_component": sum(conn.values()),
            "all_classes_connected": all(conn.values()),
        }
    elif op == "code-cubes":
        inter = an.code_intersections(ctx, dirs)
        tfc = an.tf_context(ctx, dirs)
        agree = all(
            (count > 0) == (an.tf_label(tfc, cube_id).psi == 0)
            for cube_id, count in inter.items()
        )
        results = {
            "cubes": len(inter),
            "nonzero": sum(1 for v in inter.values() if v),
            "value_histogram": _pairs(Counter(inter.values())),
            "psi_agreement": agree,
        }
    elif op == "paths":
        hist = an.untouched_path_histogram(fac)
        results = {
            "disturbed_histogram": _pairs(Counter(hist)),
            "max_disturbed": max(hist),
        }
    elif op == "decomposition":
        dec = an.decomposition_of(ctx, dirs)
        results = {
            "ell": dec.ell,
            "basis": sorted(dec.subspace.spanning_input),
            "coset_label_count": 1 << dec.label_width,
        }
    else:
        raise UsageError(f"unknown analysis name: {op}")
    elapsed = time.perf_counter() - t0
    report = {
        "operation": op,
        "d": fac.d,
        "kind": fac.kind,
        "seed": fac.seed,
        "params": None if fac.params is None else fac.params.as_dict(fac.d),
        "factors": list(dirs),
        "results": results,
    }
    _emit(ns, report, {op: elapsed})
    return EXIT_OK


def cmd_rmin(ns: argparse.Namespace) -> int:
    fac = _fac_from_args(ns)
    r, per_r = an.r_scan(fac)
    report = {
        "operation": "rmin",
        "d": fac.d,
        "kind": fac.kind,
        "seed": fac.seed,
        "r": r,
    }
    _emit(ns, report, {f"r={k}": v for k, v in per_r.items()})
    return EXIT_OK


def cmd_experiment(ns: argparse.Namespace) -> int:
    d = _require_d(ns)
    seed = _seed(ns)
    kind = getattr(ns, "kind", None) or "construction"
    n_seeds = 5 if ns.seeds is None else int(ns.seeds)
    samples = 200 if ns.samples is None else int(ns.samples)
    if n_seeds < 1 or samples < 1:
        raise UsageError("--seeds and --samples must be positive")
    ctx = build_context(d)
    params = _params_from(ns)
    master = RandomTape(seed)
    t0 = time.perf_counter()
    per_seed = []
    for i in range(n_seeds):
        fac_seed = master.derive_seed(f"fac:{i}")
        if kind == "construction":
            fac = build_explicit(ctx, params, RandomTape(fac_seed))
        elif kind == "greedy":
            fac = random_greedy_factorisation(ctx, RandomTape(fac_seed))
        elif kind == "directional":
            fac = directional(ctx)
        else:
            raise UsageError(f"unknown kind: {kind}")
        rng = random.Random(master.derive_seed(f"chains:{i}"))
        profile = an.connectivity_profile(fac, samples, rng)
        fractions = [
            sum(1 for v in profile if v <= r) / samples for r in range(1, d + 1)
        ]
        per_seed.append({"index": i, "seed": fac_seed, "fractions": fractions})
    aggregate = [
        sum(entry["fractions"][j] for entry in per_seed) / n_seeds
        for j in range(d)
    ]
    elapsed = time.perf_counter() - t0
    report = {
        "operation": "experiment",
        "d": d,
        "kind": kind,
        "seed": seed,
        "seeds": n_seeds,
        "samples": samples,
        "params": params.as_dict(d) if kind == "construction" else None,
        "results": {"per_seed": per_seed, "aggregate": aggregate},
    }
    _emit(ns, report, {"experiment": elapsed})
    return EXIT_OK


def cmd_export(ns: argparse.Namespace) -> int:
    fac = _fac_from_args(ns)
    dirs = _subset(ns, fac)
    fmt = ns.format or "edge-list"
    if fac.mode != "explicit":
        fac = fac.materialize()
    if fmt == "dot" and fac.d > DOT_MAX_D:
        raise UsageError(f"dot export is guarded to d <= {DOT_MAX_D}")
    space = fac.ctx.space
    lines = []
    if fmt == "dot":
        lines.append("graph factors {")
    for x in dirs:
        pt = fac.table(x)
        for u in range(1 << fac.d):
            v = int(pt[u])
            if u < v:
                a, b = vertex_text(space, u), vertex_text(space, v)
                if fmt == "dot":
                    lines.append(f'  "{a}" -- "{b}" [label="{x}"];')
                else:
                    lines.append(f"{a} {b} {x}")
    if fmt == "dot":
        lines.append("}")
    text = "\n".join(lines) + "\n"
    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, params: bool = False) -> None:
    p.add_argument("--config", help="JSON config file; flags take precedence")
    p.add_argument("--d", type=int, help="cube dimension")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output file path")
    if params:
        p.add_argument("--pg", type=float, help="G' sampling probability")
        p.add_argument("--rg", type=int, help="G exclusion radius")
        p.add_argument("--rh", type=int, help="H exclusion radius")
        p.add_argument("--cube-dim", type=int, dest="cube_dim", help="big-swap cube dimension")


def _add_fac_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="infile", help="read factorisation from file")
    p.add_argument(
        "--kind",
        choices=("directional", "construction", "greedy"),
        help="factorisation kind when building from --d (default directional)",
    )


def _add_subset(p: argparse.ArgumentParser) -> None:
    p.add_argument("--factors", help="comma list of directions (k-bit integers)")
    p.add_argument("--r", type=int, help="random direction subset of this size")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubefactors",
        description="randomised hypercube 1-factorisations and their analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="sample and store a factorisation")
    _add_common(p, params=True)
    p.add_argument("--mode", choices=("explicit", "implicit"), help="storage mode")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="validate a stored factorisation")
    _add_common(p)
    p.add_argument("--in", dest="infile", help="factorisation file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="run an analysis over a factorisation")
    _add_common(p, params=True)
    _add_fac_source(p)
    _add_subset(p)
    p.add_argument("--op", choices=ANALYZE_OPS, help="analysis to run")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("rmin", help="minimal r with every r-factor union connected")
    _add_common(p, params=True)
    _add_fac_source(p)
    p.set_defaults(func=cmd_rmin)

    p = sub.add_parser("experiment", help="connectivity fraction sweep over r")
    _add_common(p, params=True)
    p.add_argument("--kind", choices=("construction", "greedy", "directional"))
    p.add_argument("--seeds", type=int, help="number of factorisations (default 5)")
    p.add_argument("--samples", type=int, help="subset chains per seed (default 200)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("export", help="write the union graph of chosen factors")
    _add_common(p, params=True)
    _add_fac_source(p)
    _add_subset(p)
    p.add_argument("--format", choices=("edge-list", "dot"), help="output format")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        _apply_config(ns)
        return ns.func(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
