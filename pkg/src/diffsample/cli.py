"""Command line entry point: ``diffsample <command> ...``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np
import yaml

from . import harness
from .cascade import DiffusionParams, generate_cascade_set, read_cascades, write_cascades
from .graph import load_edge_list, write_edge_list
from .sampling import SAMPLERS, LocalView, SamplerConfig


def _cmd_run(args):
    cfg = harness.load_config(args.config, seed=args.seed, threads=args.threads)
    if args.timing:
        cfg.timing = True
    rows = harness.run_experiment(cfg)
    harness.write_rows(rows, args.out)
    failed = sum(1 for r in rows if r.error)
    print(f"wrote {len(rows)} rows to {args.out} ({failed} failed)")
    return 0


def _cmd_aggregate(args):
    rows = harness.read_rows(args.inp)
    summary = harness.aggregate(rows, reference=args.reference)
    harness.write_summary(summary, args.out)
    for s in summary:
        if s.kind == "difference":
            print(f"{s.network}: {s.sampler} - {args.reference} = {s.mean_bias:+.4f}")
    return 0


def _network_spec(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            return (yaml.safe_load(fh) or {})["network"]
    spec = {"generator": args.generator}
    for item in args.param or []:
        key, _, val = item.partition("=")
        spec[key.replace("-", "_")] = yaml.safe_load(val)
    return spec


def _cmd_gen_network(args):
    seed = args.seed if args.seed is not None else int(os.environ.get("DIFFSAMPLE_SEED", 0))
    g = harness.build_network(_network_spec(args), np.random.default_rng(seed))
    write_edge_list(g, args.out)
    print(f"wrote n={g.n} m={g.m} to {args.out}")
    return 0


def _cmd_gen_cascades(args):
    g = load_edge_list(args.graph, directed=not args.undirected)
    seed = args.seed if args.seed is not None else int(os.environ.get("DIFFSAMPLE_SEED", 0))
    p = DiffusionParams(alpha=args.alpha, beta=args.beta, delta_target=args.delta,
                        max_cascades=args.max_cascades)
    cs, dn = generate_cascade_set(g, p, np.random.default_rng(seed))
    write_cascades(cs, g, args.out)
    print(f"wrote {len(cs)} cascades covering {dn.m}/{g.m} arcs to {args.out}")
    return 0


def _cmd_sample(args):
    g = load_edge_list(args.graph, directed=not args.undirected)
    cs = read_cascades(args.cascades, g)
    view = LocalView.from_cascades(g, cs)
    cfg = SamplerConfig.from_rate(args.mu, g.m, alpha=args.alpha)
    seed = args.seed if args.seed is not None else int(os.environ.get("DIFFSAMPLE_SEED", 0))
    trace = SAMPLERS[args.sampler](view, cfg, np.random.default_rng(seed))
    trace.write_csv(args.out, g)
    print(f"{args.sampler}: {trace.n_draws} draws, {trace.n_teleports} teleports, "
          f"|E_s|={trace.sampled_edges.size}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="diffsample", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep described by a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true", help="fill the wallclock column")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("aggregate", help="summarise a results CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reference", default="dns")
    p.set_defaults(func=_cmd_aggregate)

    p = sub.add_parser("gen-network", help="write a synthetic network as an edge list")
    p.add_argument("--config", help="take the network section of an experiment config")
    p.add_argument("--generator", choices=["kronecker", "forest-fire"], default="kronecker")
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator parameter, e.g. iterations=10 edges=1875 initiator=random")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_network)

    p = sub.add_parser("gen-cascades", help="simulate cascades over an edge list")
    p.add_argument("--graph", required=True)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--max-cascades", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_cascades)

    p = sub.add_parser("sample", help="run one sampler and write its trace")
    p.add_argument("--graph", required=True)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--cascades", required=True)
    p.add_argument("--sampler", choices=sorted(SAMPLERS), default="dns")
    p.add_argument("--mu", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.4)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
