"""Command-line driver.

    exogas run <config>                       integrate and write outputs
    exogas verify <config>                    identity/invariant table
    exogas mms <case> <levels>                manufactured-solution orders
    exogas roots <value>                      entropy roots a1, a2
    exogas sweep <config> <key> <values...>   one run per value of section.key

``<config>`` may be a path or ``default``.  Output goes to ``--out``, else
``$EXOGAS_OUT_DIR``, else ``./exogas_out``.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import ConfigError, ExogasError
from .runner import EXIT_OK, EXIT_USAGE


def _out_root(args) -> str:
    return args.out or os.environ.get("EXOGAS_OUT_DIR") or "exogas_out"


def _config(args):
    from .config import load_config

    return load_config(args.config_opt or args.config)


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text, flush=True)


def cmd_run(args) -> int:
    from .runner import format_report, run

    cfg = _config(args)
    for note in cfg.notices:
        print(f"note: {note}", file=sys.stderr)
    rep = run(cfg, _out_root(args), quiet=args.quiet, jsonl=True if args.jsonl else None)
    _say(args, format_report(rep))
    return rep.exit_code


def cmd_verify(args) -> int:
    from .runner import format_checks, verify_suite

    rows = verify_suite(_config(args))
    print(format_checks(rows))
    return EXIT_OK if all(r.passed for r in rows) else 1


def cmd_mms(args) -> int:
    from .constitutive import PhysParams
    from .output import write_table
    from .plots import plot_convergence
    from .verification import CASES, convergence_study, make_case

    if args.case not in CASES:
        print(f"unknown case {args.case!r}; choose from {CASES}", file=sys.stderr)
        return EXIT_USAGE
    p = PhysParams()
    case = make_case(args.case, p)
    out = os.path.join(_out_root(args), f"mms_{args.case}")
    os.makedirs(out, exist_ok=True)
    ok = True
    bands = {("space", "strang"): (1.8, 2.2), ("time", "strang"): (1.8, 2.2), ("time", "lie"): (0.8, 1.2)}
    for (kind, split), (lo, hi) in bands.items():
        rep = convergence_study(case, p, levels=args.levels, kind=kind, splitting=split)
        tag = f"{kind}_{split}"
        cols = ("level", "n_cells", "dx", "dt", "error_v", "error_u", "error_theta", "error_z",
                "order_v", "order_u", "order_theta", "order_z")
        rows = []
        for i, r in enumerate(rep.rows):
            orders = [rep.orders[k][i - 1] if i else float("nan") for k in ("v", "u", "theta", "z")]
            rows.append((*r, *orders))
        write_table(os.path.join(out, f"convergence_{tag}.csv"), cols, rows, {"case": args.case, "status": rep.status})
        plot_convergence(rep.rows, os.path.join(out, f"convergence_{tag}.png"), kind)
        if rep.status == "exact":
            verdict = "exact"
        else:
            verdict = "PASS" if all(lo <= o <= hi for v in rep.orders.values() for o in v) else "FAIL"
            ok = ok and verdict == "PASS"
        _say(args, f"{tag}: status={rep.status} band=[{lo}, {hi}] {verdict}")
        for k, v in rep.orders.items():
            _say(args, f"  {k}: " + " ".join(f"{o:.3f}" for o in v))
    return EXIT_OK if ok else 1


def cmd_roots(args) -> int:
    from .diagnostics import entropy_roots

    try:
        a1, a2 = entropy_roots(float(args.value))
    except (ValueError, ExogasError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"a1={a1:.17g} a2={a2:.17g}")
    return EXIT_OK


def _sweep_one(job):
    from .runner import run

    cfg, out, quiet = job
    return run(cfg, out, quiet=quiet).exit_code


def cmd_sweep(args) -> int:
    from .config import with_override

    base = _config(args)
    jobs = []
    for raw in args.values:
        cfg = with_override(base, args.param, raw)
        jobs.append((cfg, os.path.join(_out_root(args), f"{args.param}={raw}"), True))
    if args.threads and args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            codes = list(pool.map(_sweep_one, jobs))
    else:
        codes = [_sweep_one(j) for j in jobs]
    for raw, code in zip(args.values, codes):
        _say(args, f"{args.param}={raw}: exit {code}")
    return max(codes) if codes else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_opt", help="config file (overrides the positional one)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--jsonl", action="store_true", help="also write a JSONL timeseries")

    ap = argparse.ArgumentParser(prog="exogas", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common])
    p.add_argument("config", nargs="?", default="default")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("verify", parents=[common])
    p.add_argument("config", nargs="?", default="default")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("mms", parents=[common])
    p.add_argument("case")
    p.add_argument("levels", type=int)
    p.set_defaults(func=cmd_mms, config=None)
    p = sub.add_parser("roots", parents=[common])
    p.add_argument("value")
    p.set_defaults(func=cmd_roots, config=None)
    p = sub.add_parser("sweep", parents=[common])
    p.add_argument("config")
    p.add_argument("param")
    p.add_argument("values", nargs="+")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        from .runner import set_threads

        set_threads(args.threads)
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
