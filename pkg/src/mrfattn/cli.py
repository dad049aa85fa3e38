"""Deterministic command-line front end over every mechanism.

Subcommands: attend, selfattend, hopfield, slots, blockslot, pcn, approx,
oracle. Matrices travel as headerless CSV (pass --header to skip one input
line); outputs use 17 significant digits so repeated runs with identical
inputs and seed are byte-identical. One master --seed drives every
stochastic substream.

Exit codes: 0 success, 1 numeric failure (divergence, non-finite energy),
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .approx import compare
from .marginal import (ValueSpec, closed_form_cross_attention,
                       closed_form_self_attention, edge_posterior)
from .mechanisms import (HopfieldConfig, SlotConfig, block_slot_run,
                         hopfield_retrieve, slot_run)
from .modelfile import (format_float, load_blockslot, load_instance, load_pcn,
                        read_matrix, read_vector, write_matrix, write_rows)
from .mrf import cross_attention_mrf, self_attention_mrf, slot_mrf
from .numerics import NumericError, ValidationError, make_rng
from .oracle import enumerate_joint
from .pcn import relax


def _identity_or(path, d, header):
    return np.eye(d) if path is None else read_matrix(path, header)


def _write_trace(path, state) -> None:
    rows = [(format_float(i), format_float(f), format_float(g))
            for i, (f, g) in enumerate(zip(state.f_trace, state.grad_trace))]
    write_rows(path, rows)


def _slot_assignments(inputs, slots, w, beta) -> np.ndarray:
    post = edge_posterior(slot_mrf(inputs, slots, w, beta))
    return np.array([int(np.argmax(row)) for row in post.rows])


def _cmd_attend(args) -> int:
    keys = read_matrix(args.keys, args.header)
    queries = read_matrix(args.queries, args.header)
    d = keys.shape[1]
    w_q = _identity_or(args.wq, d, args.header)
    w_k = _identity_or(args.wk, d, args.header)
    w_v = _identity_or(args.wv, d, args.header)
    out = closed_form_cross_attention(queries, keys, w_q, w_k, w_v, args.beta)
    write_matrix(args.out, out)
    if args.posterior:
        mrf = cross_attention_mrf(keys, queries, w_q.T @ w_k, args.beta)
        write_matrix(args.posterior, np.vstack(edge_posterior(mrf).rows))
    print(f"attend: {queries.shape[0]} queries x {keys.shape[0]} keys, "
          f"d={d}, max|out|={format_float(np.max(np.abs(out)))}")
    return 0


def _cmd_selfattend(args) -> int:
    x = read_matrix(args.input, args.header)
    d = x.shape[1]
    w_q = _identity_or(args.wq, d, args.header)
    w_k = _identity_or(args.wk, d, args.header)
    w_v = _identity_or(args.wv, d, args.header)
    out = closed_form_self_attention(x, w_q, w_k, w_v, args.beta)
    write_matrix(args.out, out)
    if args.posterior:
        mrf = self_attention_mrf(x, w_q.T @ w_k, args.beta)
        write_matrix(args.posterior, np.vstack(edge_posterior(mrf).rows))
    print(f"selfattend: {x.shape[0]} nodes, d={d}, "
          f"max|out|={format_float(np.max(np.abs(out)))}")
    return 0


def _cmd_hopfield(args) -> int:
    patterns = read_matrix(args.patterns, args.header)
    query = read_vector(args.query, args.header)
    d = patterns.shape[1]
    cfg = HopfieldConfig(patterns=patterns, query=query,
                         w_q=None if args.wq is None else read_matrix(args.wq, args.header),
                         w_k=None if args.wk is None else read_matrix(args.wk, args.header),
                         beta=args.beta)
    mu, state = hopfield_retrieve(cfg, tol=args.tol, max_iter=args.max_iter)
    write_matrix(args.out, mu[None, :])
    if args.trace:
        _write_trace(args.trace, state)
    print(f"hopfield: converged={state.converged} "
          f"iterations={state.iteration} F={format_float(state.f_trace[-1])}")
    return 0


def _cmd_slots(args) -> int:
    inputs = read_matrix(args.inputs, args.header)
    init = None if args.init is None else read_matrix(args.init, args.header)
    w = None if args.w is None else read_matrix(args.w, args.header)
    cfg = SlotConfig(inputs=inputs, num_slots=args.num_slots, w=w,
                     beta=args.beta, init=init, seed=args.seed)
    slots, state = slot_run(cfg, norm=args.norm, tol=args.tol,
                            max_iter=args.max_iter)
    write_matrix(args.out, slots)
    if args.assign:
        assign = _slot_assignments(inputs, slots, cfg.bilinear, args.beta)
        write_rows(args.assign, [(str(a),) for a in assign])
    if args.trace:
        _write_trace(args.trace, state)
    print(f"slots: converged={state.converged} iterations={state.iteration} "
          f"F={format_float(state.f_trace[-1])}")
    return 0


def _cmd_blockslot(args) -> int:
    cfg, tol, max_iter = load_blockslot(args.config, args.header)
    slots, state = block_slot_run(cfg, tol=tol, max_iter=max_iter)
    write_matrix(args.out, slots)
    if args.assign:
        assign = _slot_assignments(cfg.inputs, slots, cfg.bilinear, cfg.beta)
        write_rows(args.assign, [(str(a),) for a in assign])
    if args.trace:
        _write_trace(args.trace, state)
    print(f"blockslot: converged={state.converged} "
          f"iterations={state.iteration} F={format_float(state.f_trace[-1])}")
    return 0


def _cmd_pcn(args) -> int:
    net = load_pcn(args.config, args.header)
    obs = read_vector(args.obs, args.header)
    trace = relax(net, obs, steps=args.steps, step_size=args.step_size)
    write_rows(args.out, [tuple(format_float(v) for v in layer.values)
                          for layer in net.layers])
    if args.trace:
        write_rows(args.trace, [(format_float(i), format_float(f))
                                for i, f in enumerate(trace)])
    print(f"pcn: mode={net.mode} steps={args.steps} "
          f"F={format_float(trace[0])} -> {format_float(trace[-1])}")
    return 0


def _cmd_approx(args) -> int:
    mrf, values = load_instance(args.instance, args.header)
    methods = [m for m in args.methods.split(",") if m.strip()]
    rng = make_rng(args.seed)
    reports = compare(mrf, values, methods, rng, num_samples=args.samples)
    rows = []
    for r in reports:
        for i in range(len(r.kl_per_edge_var)):
            rows.append((r.method, str(i), format_float(r.kl_per_edge_var[i]),
                         format_float(r.entropy_p[i]),
                         format_float(r.output_error), str(r.cost_proxy)))
    write_rows(args.out, rows)
    summary = ", ".join(f"{r.method}: err={format_float(r.output_error)}"
                        for r in reports)
    print(f"approx: {summary}")
    return 0


def _cmd_oracle(args) -> int:
    mrf, _ = load_instance(args.instance, args.header)
    table = enumerate_joint(mrf)
    post = edge_posterior(mrf)
    rows = []
    max_diff = 0.0
    for i in range(mrf.n_edge_vars):
        marg = table.marginal(i, mrf.prior.edge_vars[i].n_candidates)
        max_diff = max(max_diff, float(np.max(np.abs(marg - post[i]))))
        for c in range(marg.shape[0]):
            rows.append((str(i), str(c), format_float(marg[c]),
                         format_float(post[i][c])))
    if args.out:
        write_rows(args.out, rows)
    print(f"oracle: {mrf.n_edge_vars} edge variables, "
          f"{table.log_joint.shape[0]} configs, "
          f"max|joint - factorized|={format_float(max_diff)}")
    return 0


def _add_common(sub, posterior: bool = False) -> None:
    sub.add_argument("--beta", type=float, default=1.0,
                     help="inverse temperature (default 1)")
    sub.add_argument("--header", action="store_true",
                     help="skip one header line when reading input CSVs")
    if posterior:
        sub.add_argument("--posterior", help="also write the attention matrix")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mrfattn",
        description="Attention as exact marginalization over latent edges "
                    "of a pairwise MRF.")
    p.add_argument("--version", action="version", version=__version__)
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("attend", help="cross attention from CSV matrices")
    s.add_argument("--keys", required=True)
    s.add_argument("--queries", required=True)
    s.add_argument("--wq")
    s.add_argument("--wk")
    s.add_argument("--wv")
    s.add_argument("--out", required=True)
    _add_common(s, posterior=True)
    s.set_defaults(func=_cmd_attend)

    s = subs.add_parser("selfattend", help="self attention from a CSV matrix")
    s.add_argument("--input", required=True)
    s.add_argument("--wq")
    s.add_argument("--wk")
    s.add_argument("--wv")
    s.add_argument("--out", required=True)
    _add_common(s, posterior=True)
    s.set_defaults(func=_cmd_selfattend)

    s = subs.add_parser("hopfield", help="associative retrieval to a fixed point")
    s.add_argument("--patterns", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--wq")
    s.add_argument("--wk")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--out", required=True)
    s.add_argument("--trace", help="write iteration,F,grad_norm CSV")
    _add_common(s)
    s.set_defaults(func=_cmd_hopfield)

    s = subs.add_parser("slots", help="iterative slot attention")
    s.add_argument("--inputs", required=True)
    s.add_argument("--num-slots", type=int, required=True)
    s.add_argument("--init", help="initial slots CSV (overrides --seed)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--w", help="bilinear form CSV (default identity)")
    s.add_argument("--norm", choices=("raw_sum", "weighted_mean"),
                   default="weighted_mean")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--out", required=True)
    s.add_argument("--assign", help="write argmax slot per input")
    s.add_argument("--trace", help="write iteration,F,grad_norm CSV")
    _add_common(s)
    s.set_defaults(func=_cmd_slots)

    s = subs.add_parser("blockslot", help="block-slot attention from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--assign")
    s.add_argument("--trace")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=_cmd_blockslot)

    s = subs.add_parser("pcn", help="predictive-coding relaxation")
    s.add_argument("--config", required=True)
    s.add_argument("--obs", required=True)
    s.add_argument("--steps", type=int, default=500)
    s.add_argument("--step-size", type=float, default=1e-2)
    s.add_argument("--out", required=True)
    s.add_argument("--trace")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=_cmd_pcn)

    s = subs.add_parser("approx", help="soft/hard/top-k diagnostics")
    s.add_argument("--instance", required=True,
                   help="model description file")
    s.add_argument("--methods", default="soft,hard",
                   help="comma list: soft,hard,topK (e.g. top4)")
    s.add_argument("--samples", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=_cmd_approx)

    s = subs.add_parser("oracle", help="joint enumeration vs factorized posterior")
    s.add_argument("--instance", required=True)
    s.add_argument("--out")
    s.add_argument("--header", action="store_true")
    s.set_defaults(func=_cmd_oracle)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"mrfattn: numeric failure: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, OSError, ValueError) as exc:
        print(f"mrfattn: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
