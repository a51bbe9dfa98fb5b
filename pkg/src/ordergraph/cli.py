"""Command-line entry point.

Every command writes its outputs and a ``manifest.json`` echoing the fully
resolved configuration into ``--out``. Options can also come from an INI
file given with ``--config``: keys under ``[DEFAULT]`` or under a section
named after the command, spelled like the long flag without dashes
(``expected_edges = 10``). Flags on the command line win over the file.

Randomness flows from ``--seed`` through one named sub-stream per command,
so each command is reproducible on its own.
"""

import argparse
import configparser
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import GenConfig, er_dag, linear_gaussian_sample, load_csv, save_csv
from .errors import LimitExceeded, OrderGraphError
from .exact import DP_LIMIT, exact_q_dp, OrderingEnumeration
from .graph import load_graph, load_graphs, save_graph, save_graphs
from .metrics import evaluate, evaluate_many
from .order_graph import ENUMERATION_LIMIT, state_bits
from .sampler import DEFAULT_THRESHOLD, compare_transition_probabilities, greedy_dag, sample_best_k
from .scoring import PARENT_SET_MODES, BICScorer
from .trainer import LayeredQModels, TrainConfig, train

log = logging.getLogger("ordergraph")

STREAMS = {"gen": 1, "train": 2, "sample": 3, "compare": 4}


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, STREAMS[name]])


def stream_seed(seed: int, name: str) -> int:
    """Integer seed for components that take a seed rather than a generator."""
    return int(np.random.SeedSequence([seed, STREAMS[name]]).generate_state(1)[0])


def write_manifest(out: Path, command: str, args: argparse.Namespace, outputs, **extra) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    config = {k: str(v) if isinstance(v, Path) else v for k, v in config.items()}
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "config_file": str(args.config) if args.config else None,
        "outputs": sorted(outputs),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        **extra,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _scorer(args) -> BICScorer:
    return BICScorer(load_csv(args.data), args.parent_sets, args.max_parents)


def _require(*paths):
    for p in paths:
        if not Path(p).is_file():
            raise FileNotFoundError(f"no such file: {p}")


def cmd_gen(args):
    cfg = GenConfig(
        d=args.d,
        expected_edges=args.expected_edges,
        n=args.n,
        weight_low=args.weight_low,
        weight_high=args.weight_high,
        noise_std=args.noise_std,
        seed=args.seed,
    )
    rng = stream(args.seed, "gen")
    truth = er_dag(cfg, rng)
    # raw units on disk; load_csv standardises and remembers the scale
    data = linear_gaussian_sample(truth, cfg.n, cfg.noise_std, rng, standardize_columns=False)
    save_graph(truth, args.out / "truth.json")
    save_csv(data, args.out / "data.csv")
    write_manifest(
        args.out, "gen", args, ["truth.json", "data.csv"],
        edge_probability=cfg.edge_probability, num_edges=truth.num_edges,
    )
    print(f"wrote {truth.num_edges}-edge truth graph and {cfg.n}x{cfg.d} data to {args.out}")


def train_config(args) -> TrainConfig:
    return TrainConfig(
        epsilon=args.epsilon,
        episodes=args.episodes,
        batch_size=args.batch_size,
        lr=args.lr,
        lr_final=None if args.lr_final <= 0 else args.lr_final,
        buffer_capacity=args.buffer_capacity,
        updates_per_episode=args.updates_per_episode,
        seed=stream_seed(args.seed, "train"),
        architecture=args.architecture,
        hidden=tuple(args.hidden),
        optimizer=args.optimizer,
        clip_norm=args.clip_norm,
    )


def cmd_train(args):
    _require(args.data)
    scorer = _scorer(args)
    cfg = train_config(args)
    t0 = time.time()
    models = train(scorer, cfg, log_path=args.out / "train_log.jsonl")
    models.save(args.out / "checkpoint.json")
    write_manifest(
        args.out, "train", args, ["checkpoint.json", "train_log.jsonl"],
        train_config=cfg.to_dict(), seconds=round(time.time() - t0, 1),
    )
    print(f"trained {cfg.episodes} episodes in {time.time() - t0:.1f}s; checkpoint in {args.out}")


def cmd_sample(args):
    _require(args.data, args.checkpoint)
    scorer = _scorer(args)
    models = LayeredQModels.load(args.checkpoint)
    best, every = sample_best_k(
        models, scorer, args.num_samples, args.k, args.threshold, stream(args.seed, "sample"), return_all=True
    )
    save_graphs(every, args.out / "samples.json")
    save_graphs(best, args.out / "best_k.json")
    write_manifest(args.out, "sample", args, ["samples.json", "best_k.json"], best_score=best[0].score)
    print(f"sampled {len(every)} DAGs; best score {best[0].score:.3f}")


def cmd_greedy(args):
    _require(args.data, args.checkpoint)
    scorer = _scorer(args)
    g = greedy_dag(LayeredQModels.load(args.checkpoint), scorer, args.threshold)
    save_graph(g, args.out / "greedy.json")
    write_manifest(args.out, "greedy", args, ["greedy.json"], score=g.score)
    print(f"greedy DAG with {g.num_edges} edges, score {g.score:.3f}")


def cmd_exact(args):
    _require(args.data)
    scorer = _scorer(args)
    d = scorer.d
    outputs = []
    if args.mode == "enum" and d > ENUMERATION_LIMIT:
        raise LimitExceeded(
            f"d={d} is above the enumeration limit {ENUMERATION_LIMIT} ({d}! orderings); "
            f"use --mode dp (exact Q-table up to d={DP_LIMIT})"
        )
    if args.mode == "dp":
        table = exact_q_dp(scorer)
        table.save(args.out / "exact_q.json")
        outputs.append("exact_q.json")
    if d <= ENUMERATION_LIMIT:
        post = OrderingEnumeration(scorer).posterior()
        rows = sorted(post.items(), key=lambda kv: -kv[1])
        (args.out / "posterior.json").write_text(
            json.dumps([{"ordering": list(L), "probability": p} for L, p in rows], indent=1) + "\n"
        )
        outputs.append("posterior.json")
    write_manifest(args.out, "exact", args, outputs)
    print(f"wrote {', '.join(outputs)} to {args.out}")


def cmd_eval(args):
    _require(args.graphs, args.truth)
    truth = load_graph(args.truth)
    graphs = load_graphs(args.graphs)
    report = evaluate(graphs[0], truth) if len(graphs) == 1 else evaluate_many(graphs, truth)
    (args.out / "metrics.json").write_text(report.to_json() + "\n")
    write_manifest(args.out, "eval", args, ["metrics.json"])
    print(f"tpr {report.tpr:.3f} fdr {report.fdr:.3f} f1 {report.f1:.3f} shd {report.shd:g}")


def cmd_compare_probs(args):
    _require(args.data, args.checkpoint)
    scorer = _scorer(args)
    table = exact_q_dp(scorer)
    models = LayeredQModels.load(args.checkpoint)
    cmp = compare_transition_probabilities(models, table, args.pairs, stream(args.seed, "compare"))
    with (args.out / "compare.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "action", "estimated", "exact"])
        for s, a, e, x in zip(cmp.states, cmp.actions, cmp.estimated, cmp.exact):
            writer.writerow([state_bits(int(s), scorer.d), int(a), repr(float(e)), repr(float(x))])
    r = cmp.pearson_r
    write_manifest(args.out, "compare-probs", args, ["compare.csv"], pearson_r=r)
    print(f"pearson r = {r:.4f} over {args.pairs} pairs")


def _add_common(p, data=True):
    p.add_argument("--config", type=Path, help="INI file with default option values")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    if data:
        p.add_argument("--data", type=Path, required=True, help="CSV with a header row")
        p.add_argument("--parent-sets", choices=PARENT_SET_MODES, default="best")
        p.add_argument("--max-parents", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordergraph", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="random ER DAG and linear Gaussian data")
    _add_common(p, data=False)
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--expected-edges", type=float, default=None, help="default 2d")
    p.add_argument("--weight-low", type=float, default=0.5)
    p.add_argument("--weight-high", type=float, default=2.0)
    p.add_argument("--noise-std", type=float, default=1.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train the per-layer Q-models")
    _add_common(p)
    dflt = TrainConfig()
    p.add_argument("--episodes", type=int, default=dflt.episodes)
    p.add_argument("--epsilon", type=float, default=dflt.epsilon)
    p.add_argument("--batch-size", type=int, default=dflt.batch_size)
    p.add_argument("--lr", type=float, default=dflt.lr)
    p.add_argument("--lr-final", type=float, default=dflt.lr_final, help="0 disables the cosine decay")
    p.add_argument("--buffer-capacity", type=int, default=dflt.buffer_capacity)
    p.add_argument("--updates-per-episode", type=int, default=dflt.updates_per_episode)
    p.add_argument("--architecture", choices=("mlp", "tabular"), default=dflt.architecture)
    p.add_argument("--hidden", type=int, nargs="+", default=list(dflt.hidden))
    p.add_argument("--optimizer", choices=("sgd", "adam"), default=dflt.optimizer)
    p.add_argument("--clip-norm", type=float, default=dflt.clip_norm)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample orderings and keep the best-k pruned DAGs")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--num-samples", type=int, default=1000)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("greedy", help="greedy-decoded pruned DAG")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("exact", help="exact Q-table and ordering posterior")
    _add_common(p)
    p.add_argument("--mode", choices=("dp", "enum"), default="dp")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("eval", help="structure metrics against a ground-truth graph")
    _add_common(p, data=False)
    p.add_argument("--graphs", type=Path, required=True, help="JSON graph or list of graphs")
    p.add_argument("--truth", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare-probs", help="learned vs exact transition probabilities")
    _add_common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--pairs", type=int, default=250)
    p.set_defaults(func=cmd_compare_probs)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv):
    """Parse ``argv`` with defaults taken from the INI file named by ``--config``."""
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices
    command = next((a for a in argv if a in subparsers), None)
    if known.config is None or command is None:
        return parser.parse_args(argv)
    if not known.config.is_file():
        raise FileNotFoundError(f"no such config file: {known.config}")
    ini = configparser.ConfigParser()
    ini.read(known.config)
    values = dict(ini.defaults())
    if ini.has_section(command):
        values.update(ini[command])
    sub = subparsers[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest == "config":
            raise ValueError(f"{known.config}: unknown option {key!r} for {command}")
        action = actions[dest]
        convert = action.type or str
        if action.nargs in ("+", "*"):
            defaults[dest] = [convert(v) for v in raw.split()]
        else:
            defaults[dest] = convert(raw)
        if action.choices is not None and defaults[dest] not in action.choices:
            raise ValueError(f"{known.config}: {key} must be one of {list(action.choices)}")
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
        args.out.mkdir(parents=True, exist_ok=True)
        args.func(args)
    except (OrderGraphError, OSError, ValueError) as exc:
        print(f"ordergraph: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
