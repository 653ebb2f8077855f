"""Command-line front end: ``gnalign align | bench | eval``.

Exit codes: 0 success, 1 input/configuration error, 2 solver invariant
violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from .evaluate import coherence, edge_correctness, generate_benchmark
from .exact_oracle import DEFAULT_LIMIT, OracleBudgetError, solve_exact
from .graph_io import (
    GraphFormatError,
    annotate,
    parse_annotation_tsv,
    parse_similarity_tsv,
    read_network,
    write_gml,
    write_similarity_tsv,
)
from .instance import Alignment, AlignmentInstance, build_instance, conserved_edges, score_alignment
from .lagrange import SolverInvariantError
from .solver import SolverParams, natalie, write_trace

__all__ = ["main", "cmd_align", "cmd_bench", "cmd_eval", "build_parser"]


class ConfigError(ValueError):
    pass


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file not found: {path}")
    return p.read_text()


def _load_networks(args):
    for path in (args.g1, args.g2):
        if not Path(path).is_file():
            raise ConfigError(f"input file not found: {path}")
    g1, g2 = read_network(args.g1), read_network(args.g2)
    if args.annotations:
        ann = parse_annotation_tsv(_read(args.annotations))
        g1, g2 = annotate(g1, ann), annotate(g2, ann)
    return g1, g2


def _instance(args, g1, g2) -> AlignmentInstance:
    if args.mode == "blended" and args.beta is None:
        raise ConfigError("--mode blended requires --beta")
    if args.beta is not None and not 0.0 <= args.beta <= 1.0:
        raise ConfigError("--beta must lie in [0, 1]")
    if args.threshold is not None and args.threshold < 0:
        raise ConfigError("--threshold must be >= 0")
    sim = parse_similarity_tsv(_read(args.sim), args.sim_kind)
    return build_instance(g1, g2, sim, filter_threshold=args.threshold,
                          score_mode="topology" if args.mode == "topology" else "blended",
                          beta=args.beta, max_candidates=args.max_candidates)


def _finite(x):
    return x if x is None or math.isfinite(x) else None


def _write_alignment(path: str, inst: AlignmentInstance, a: Alignment) -> None:
    with open(path, "w") as fh:
        for i, k in a.pairs():
            fh.write(f"{inst.g1.ids[i]}\t{inst.g2.ids[k]}\n")


def _read_alignment(text: str, g1, g2) -> Alignment:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ConfigError(f"alignment line {lineno}: expected 'id1<TAB>id2'")
        a, b = fields
        if a not in g1 or b not in g2:
            raise ConfigError(f"alignment line {lineno}: unknown node id in ({a!r}, {b!r})")
        pairs.append((g1.index(a), g2.index(b)))
    return Alignment.from_pairs(g1.n, pairs)


def cmd_align(args) -> int:
    g1, g2 = _load_networks(args)
    inst = _instance(args, g1, g2)
    params = SolverParams(K=args.K, L=args.L, M=args.M, N=args.N, phi=args.phi, tau=args.tau,
                          time_limit=args.time_limit, max_iters=args.max_iters, threads=args.threads,
                          step_target=args.step_target)
    start = time.perf_counter()
    if args.exact:
        try:
            opt, alignment = solve_exact(inst, limit=args.oracle_limit)
        except OracleBudgetError as exc:
            raise ConfigError(f"--exact: {exc}") from None
        lb = ub = opt
        termination = "exact"
        report = None
    else:
        report = natalie(inst, params)
        lb, ub, alignment, termination = report.best_lb, report.best_ub, report.best_alignment, report.termination
    wall = time.perf_counter() - start

    ec = edge_correctness(inst, alignment) if min(g1.m, g2.m) > 0 else None
    summary = {
        "best_lb": lb,
        "best_ub": _finite(ub),
        "gap": _finite(ub - lb),
        "conserved": conserved_edges(inst, alignment),
        "edge_correctness": ec,
        "mapped_nodes": len(alignment),
        "termination": termination,
        "evaluations": len(report.trace) if report else 0,
        "wall_time_s": round(wall, 6),
    }
    if args.annotations:
        summary["coherence"] = coherence(inst, alignment)

    _write_alignment(args.out_alignment, inst, alignment)
    with open(args.out_summary, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    if args.out_trace and report is not None:
        with open(args.out_trace, "w") as fh:
            write_trace(report.trace, fh)
    return 0


def cmd_bench(args) -> int:
    params = {
        "planted_clique": dict(k=args.k, host_n=args.host_n, host_p=args.host_p),
        "noisy_copy": dict(n=args.n, p=args.p, edge_flip_rate=args.flip_rate, decoys=args.decoys),
        "random_pair": dict(n1=args.n1, p1=args.p1, n2=args.n2, p2=args.p2),
    }[args.kind]
    missing = [k for k, v in params.items() if v is None and k != "decoys"]
    if missing:
        raise ConfigError(f"--kind {args.kind} needs: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    bench = generate_benchmark(args.kind, args.seed, **params)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "g1.gml").write_text(write_gml(bench.g1))
    (out / "g2.gml").write_text(write_gml(bench.g2))
    (out / "sim.tsv").write_text(write_similarity_tsv(bench.similarity))
    if bench.truth:
        (out / "truth.tsv").write_text("".join(f"{a}\t{b}\n" for a, b in bench.truth.items()))

    inst = build_instance(bench.g1, bench.g2, bench.similarity)
    answer = {"kind": args.kind, "params": params, "seed": args.seed, "optimum": None, "alignment": None}
    try:
        opt, a = solve_exact(inst, limit=args.oracle_limit)
        answer["optimum"] = opt
        answer["alignment"] = [[bench.g1.ids[i], bench.g2.ids[k]] for i, k in a.pairs()]
    except OracleBudgetError as exc:
        answer["oracle_skipped"] = str(exc)
    (out / "oracle.json").write_text(json.dumps(answer, indent=2) + "\n")
    return 0


def cmd_eval(args) -> int:
    g1, g2 = _load_networks(args)
    alignment = _read_alignment(_read(args.alignment), g1, g2)
    if args.sim:
        inst = _instance(args, g1, g2)
    else:
        # no similarity table: score topology only, with the aligned pairs as the candidates
        pairs = alignment.pairs()
        inst = AlignmentInstance(g1, g2, [i for i, _ in pairs], [k for _, k in pairs], [0.0] * len(pairs))
    report = {
        "edge_correctness": edge_correctness(inst, alignment) if min(g1.m, g2.m) > 0 else None,
        "conserved": conserved_edges(inst, alignment),
        "coherence": coherence(inst, alignment),
        "mapped_nodes": len(alignment),
        "score": score_alignment(inst, alignment),
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_inputs(p: argparse.ArgumentParser, sim_required: bool) -> None:
    p.add_argument("--g1", required=True, help="first network (.gml or .graphml)")
    p.add_argument("--g2", required=True, help="second network (.gml or .graphml)")
    p.add_argument("--sim", required=sim_required, help="similarity TSV: id1<TAB>id2<TAB>value")
    p.add_argument("--sim-kind", choices=("evalue", "bitscore"), default="evalue")
    p.add_argument("--threshold", type=float, default=None,
                   help="keep e-values <= threshold (default 100) or bitscores >= threshold (default 0)")
    p.add_argument("--max-candidates", type=int, default=None, help="cap on candidate partners per node")
    p.add_argument("--mode", choices=("topology", "blended"), default="topology")
    p.add_argument("--beta", type=float, default=None, help="topology weight in blended mode")
    p.add_argument("--annotations", help="annotation TSV: id<TAB>term (ancestor-closed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnalign", description="Global network alignment with Lagrangian bounds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align two networks")
    _add_inputs(p, sim_required=True)
    p.add_argument("-K", type=int, default=3, help="rounds of subgradient + dual descent")
    p.add_argument("-L", type=int, default=100, help="dual-descent sweeps per round")
    p.add_argument("-M", type=int, default=10, help="improving iterations before the step doubles")
    p.add_argument("-N", type=int, default=20, help="stagnant iterations before the step halves")
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--step-target", choices=("current", "best"), default="current",
                   help="lower bound used in the subgradient step length")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--max-iters", type=int, default=None, help="cap on bound evaluations")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--exact", action="store_true", help="solve by exhaustive search (small inputs only)")
    p.add_argument("--oracle-limit", type=int, default=DEFAULT_LIMIT)
    p.add_argument("--out-alignment", required=True)
    p.add_argument("--out-summary", required=True)
    p.add_argument("--out-trace")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("bench", help="write a synthetic instance and its oracle answer")
    p.add_argument("--kind", choices=("planted_clique", "noisy_copy", "random_pair"), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int)
    p.add_argument("--host-n", type=int)
    p.add_argument("--host-p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--flip-rate", type=float, default=0.0)
    p.add_argument("--decoys", type=int, default=3)
    p.add_argument("--n1", type=int)
    p.add_argument("--p1", type=float)
    p.add_argument("--n2", type=int)
    p.add_argument("--p2", type=float)
    p.add_argument("--oracle-limit", type=int, default=DEFAULT_LIMIT)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="evaluate an alignment file")
    _add_inputs(p, sim_required=False)
    p.add_argument("--alignment", required=True, help="alignment TSV: id1<TAB>id2")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverInvariantError as exc:
        print(f"gnalign: solver invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, GraphFormatError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gnalign: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
