"""Command-line front end (``geodp`` or ``python3 -m geodp``).

Every subcommand writes JSON to stdout (or ``--out``).  Exit codes: 0 ok,
2 failed corpus assertion, 3 budget exceeded or infeasible, 4 bad input.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .errors import GeoDPError
from .workload import PrivacyParams

EXIT_OK, EXIT_ASSERT, EXIT_BUDGET, EXIT_INPUT = 0, 2, 3, 4


def _emit(obj, out):
    from .harness import dumps_bundle

    text = dumps_bundle(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _n_arg(s: str) -> float:
    return math.inf if s.lower() in ("inf", "infinity") else float(s)


def _privacy(args, pure_ok=False) -> PrivacyParams:
    delta = args.delta
    if delta is None:
        delta = 0.0 if pure_ok else 1e-6
    return PrivacyParams(args.eps, delta)


def cmd_gen(args):
    from .workload import gen_workload, save_workload

    W = gen_workload(args.kind, args.d, args.N, args.seed)
    if args.out:
        save_workload(W, args.out, args.format)
    else:
        _emit(W.to_dict(), None)


def cmd_gen_hypergraph(args):
    from .discrepancy import hypergraph_instance
    from .workload import save_workload

    W = hypergraph_instance(args.edges, args.vertices, not args.random, args.seed)
    if args.out:
        save_workload(W, args.out, args.format)
    else:
        _emit(W.to_dict(), None)


def cmd_decompose(args):
    from .decomposition import decompose_workload
    from .workload import load_workload

    dec = decompose_workload(load_workload(args.workload, args.format), eta=args.eta)
    _emit(dec.to_dict(), args.out)


def cmd_run(args):
    from .harness import make_mechanism
    from .workload import Histogram, load_histogram, load_workload

    W = load_workload(args.workload, args.format)
    h = load_histogram(args.hist)
    n = h.n if args.n is None else args.n
    if args.n is not None:
        h = Histogram(h.x, n)
    cfg = {"mech": args.mech, "eps": args.eps, "delta": _privacy(args, args.mech.startswith("knorm")).delta}
    if args.T is not None:
        cfg["T"] = args.T
    if args.L is not None:
        cfg["L"] = args.L
    mech = make_mechanism(cfg, W.A, n)
    ans = mech.run(h, args.seed)
    _emit(ans.to_dict(), args.out)


def cmd_evaluate(args):
    from .harness import evaluate_error
    from .workload import load_workload

    W = load_workload(args.workload, args.format)
    cfg = {"mech": args.mech, "eps": args.eps, "delta": _privacy(args, args.mech.startswith("knorm")).delta}
    if args.T is not None:
        cfg["T"] = args.T
    est = evaluate_error(cfg, W.A, args.n, args.trials, args.seed, args.workers, workload_id=W.label)
    _emit(est.to_dict(), args.out)


def cmd_lowerbound(args):
    from .bounds import bruteforce_bounds, dec_lowerbound, optimality_ratio
    from .decomposition import decompose_workload
    from .workload import load_workload

    W = load_workload(args.workload, args.format)
    pp = _privacy(args)
    if args.mode == "bruteforce":
        n = W.d if math.isinf(args.n) else args.n
        out = bruteforce_bounds(W.A, n, args.limit).to_dict()
    else:
        out = dec_lowerbound(decompose_workload(W.A), pp, args.n).to_dict()
    if args.ratio:
        out["ratio"] = optimality_ratio(W.A, pp, math.inf, args.mode, limit=args.limit)
    _emit(out, args.out)


def cmd_herdisc(args):
    from .discrepancy import herdisc_approx, herdisc_bruteforce
    from .workload import load_workload

    W = load_workload(args.workload, args.format)
    if args.mode == "exact":
        rep = herdisc_bruteforce(W.A)
    else:
        exact = herdisc_bruteforce(W.A).herdisc_exact if args.with_exact else None
        rep = herdisc_approx(W.A, exact=exact)
    _emit(rep.to_dict(), args.out)


def cmd_disc(args):
    from .discrepancy import disc_bruteforce
    from .workload import load_workload

    W = load_workload(args.workload, args.format)
    val, x = disc_bruteforce(W.A)
    _emit({"disc": val, "coloring": [int(v) for v in x]}, args.out)


def cmd_corpus(args):
    from .harness import run_corpus

    bundle, code = run_corpus(args.config, workers=args.workers)
    _emit(bundle, args.out)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geodp", description="Private linear query release toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, workload=True):
        if workload:
            sp.add_argument("--workload", "-w", required=True, help="workload file (CSV or JSON)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--out", "-o", default=None, help="write JSON here instead of stdout")

    def privacy(sp):
        sp.add_argument("--eps", type=float, default=1.0)
        sp.add_argument("--delta", type=float, default=None)

    sp = sub.add_parser("gen", help="generate a workload")
    sp.add_argument("--kind", required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    common(sp, workload=False)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("gen-hypergraph", help="generate a 3-uniform hypergraph incidence matrix")
    sp.add_argument("--edges", type=int, required=True)
    sp.add_argument("--vertices", type=int, required=True)
    sp.add_argument("--random", action="store_true", help="no planted 2-coloring")
    sp.add_argument("--seed", type=int, default=0)
    common(sp, workload=False)
    sp.set_defaults(func=cmd_gen_hypergraph)

    sp = sub.add_parser("decompose", help="base decomposition of a workload")
    sp.add_argument("--eta", type=float, default=0.05)
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("run", help="run a mechanism on a histogram")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--hist", required=True, help="histogram JSON {\"n\", \"x\"}")
    sp.add_argument("--n", type=float, default=None, help="size bound (defaults to the file's n)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T", type=int, default=None)
    sp.add_argument("--L", type=int, default=None)
    privacy(sp)
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("evaluate", help="Monte-Carlo worst-case error estimate")
    sp.add_argument("--mech", required=True)
    sp.add_argument("--n", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--T", type=int, default=None)
    privacy(sp)
    common(sp)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("lowerbound", help="error lower bounds")
    sp.add_argument("--mode", choices=("bruteforce", "decomposition"), default="decomposition")
    sp.add_argument("--n", type=_n_arg, default=math.inf)
    sp.add_argument("--limit", type=int, default=2_000_000)
    sp.add_argument("--ratio", action="store_true", help="also report the optimality ratio")
    privacy(sp)
    common(sp)
    sp.set_defaults(func=cmd_lowerbound)

    sp = sub.add_parser("herdisc", help="hereditary discrepancy")
    sp.add_argument("--mode", choices=("exact", "approx"), default="exact")
    sp.add_argument("--with-exact", action="store_true", help="approx mode: also brute force and report the factor")
    common(sp)
    sp.set_defaults(func=cmd_herdisc)

    sp = sub.add_parser("disc", help="discrepancy by brute force")
    common(sp)
    sp.set_defaults(func=cmd_disc)

    sp = sub.add_parser("corpus", help="run a corpus config and emit a report bundle")
    sp.add_argument("config")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--out", "-o", default=None)
    sp.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except GeoDPError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    raise SystemExit(main())
