"""Command-line entry point: ``otfsynth <command> ...``.

Exit codes: 0 success, 1 usage error, 2 bad input, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .des import StructureError
from .domains import GENERATORS, generate_instance
from .engine import UsageError, make_policy, new_exploration, run_synthesis
from .features import SchemaMismatch, build_schema, describe, frontier_features
from .neural import CheckpointError
from .oracle import ResourceCapExceeded, full_compose, monolithic_synthesis
from .rl import TrainConfig, train
from .specio import SpecError, controller_to_dict, graph_to_dict, load_spec, write_atomic

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _problem_args(sp, required=True):
    g = sp.add_argument_group("instance")
    g.add_argument("--spec", help="JSON spec file")
    g.add_argument("--domain", choices=sorted(GENERATORS))
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)


def _problem(args):
    if args.spec and args.domain:
        raise _Usage("give either --spec or --domain, not both")
    if args.spec:
        return load_spec(args.spec)
    if args.domain:
        if args.n is None or args.k is None:
            raise _Usage("--domain needs --n and --k")
        return generate_instance(args.domain, args.n, args.k)
    raise _Usage("an instance is required: --spec FILE or --domain NAME --n N --k K")


def _domain(args):
    if getattr(args, "spec_dir", None):
        return harness.Domain.from_directory(args.spec_dir)
    if not args.domain:
        raise _Usage("--domain or --spec-dir is required")
    return harness.Domain(args.domain)


def _timeout(args):
    return None if getattr(args, "no_timeout", False) else args.timeout


def _agent_policy(args, p):
    if args.policy != "agent":
        return make_policy(args.policy, args.seed)
    if not args.weights:
        raise _Usage("--policy agent needs --weights CHECKPOINT")
    agent = harness.load_agents([args.weights])[0]
    return harness._policy_for(agent, p)


def _emit(text, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# -- commands ----------------------------------------------------------------
def cmd_synth(args):
    p = _problem(args)
    policy = _agent_policy(args, p)
    r = run_synthesis(p, policy, budget=args.budget, deadline=args.timeout, rng_seed=args.seed)
    row = {
        "domain": args.domain or p.name,
        "n": args.n if args.n is not None else (p.params or ("", ""))[0],
        "k": args.k if args.k is not None else (p.params or ("", ""))[1],
        "policy": args.policy, "seed": args.seed, "verdict": r.verdict, "expanded": r.expanded,
        "time_ms": f"{r.time_ms:.3f}" if args.timeout is not None or args.timing else "",
        "solved": int(r.solved),
    }
    print(f"{p.name}: {r.verdict} after {r.expanded} expansions")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rep = harness.CSVReport(out / "results.csv")
        rep.add(row)
        rep.close()
        if r.controller is not None:
            write_atomic(out / "controller.json", json.dumps(controller_to_dict(r.controller, p), indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_oracle(args):
    p = _problem(args)
    verdict, ctrl = monolithic_synthesis(p, cap=args.cap)
    print(f"{p.name}: {verdict}")
    if args.out and ctrl is not None:
        _emit(json.dumps(controller_to_dict(ctrl, p), indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_compose(args):
    p = _problem(args)
    g = full_compose(p, cap=args.cap)
    _emit(json.dumps(graph_to_dict(g), indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_features(args):
    """Per-step dump of frontier features with block annotations (JSON lines)."""
    p = _problem(args)
    schema = build_schema(p)
    policy = _agent_policy(args, p)
    policy.reset(p)
    es = new_exploration(p)
    lines = []
    step = 0
    while not es.done and (args.budget is None or step < args.budget):
        X = frontier_features(es, schema)
        rows = []
        for t, x in zip(es.frontier, X):
            rows.append({"transition": [list(t.source), t.label.name, list(t.target)], "blocks": describe(x, schema)})
        a = policy.select(es)
        lines.append(json.dumps({"step": step, "chosen": a, "frontier": rows}, sort_keys=True))
        es.expand(a)
        step += 1
    lines.append(json.dumps({"step": step, "verdict": es.verdict, "expanded": len(es.h)}, sort_keys=True))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_train(args):
    p = _problem(args)
    over = {"seed": args.seed}
    if args.steps is not None:
        over["total_steps"] = args.steps
    if args.checkpoint_every is not None:
        over["checkpoint_every"] = args.checkpoint_every
    cfg = TrainConfig(**over)
    if not args.out:
        raise _Usage("train needs --out DIR")
    res = train(p, cfg, args.out)
    write_atomic(Path(args.out) / "config.json", json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
    print(f"trained {res.steps} steps, {len(res.episodes)} episodes, {len(res.checkpoints)} checkpoints")
    return EXIT_OK


def _checkpoint_paths(d):
    paths = sorted(Path(d).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no checkpoints in {d}")
    return paths


def cmd_select(args):
    if not args.checkpoints:
        raise _Usage("select needs --checkpoints DIR")
    dom = _domain(args)
    agents = harness.sample_checkpoints(harness.load_agents(_checkpoint_paths(args.checkpoints)), args.count)
    rep = harness.select_agent(agents, dom, args.max_n, args.max_k, args.budget, args.literal_rule)
    print(f"selected {rep.selected}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        harness.write_selection_csv(rep, out / "selection.csv")
        write_atomic(out / "selection.json", json.dumps(rep.to_dict(), indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_evaluate(args):
    dom = _domain(args)
    agent = None
    if args.policy == "agent" or args.weights:
        if not args.weights:
            raise _Usage("evaluate with an agent needs --weights CHECKPOINT")
        agent = harness.load_agents([args.weights])[0]
    baselines = [b for b in args.baselines.split(",") if b] if args.baselines else []
    if args.policy in ("random", "bfs", "lifo") and args.policy not in baselines:
        baselines.append(args.policy)
    seeds = tuple(range(args.seed, args.seed + args.random_seeds))
    out = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        out = Path(args.out) / "evaluation.csv"
    rep = harness.evaluate(
        agent, dom, timeout=_timeout(args), baselines=tuple(baselines), random_seeds=seeds,
        max_n=args.max_n, max_k=args.max_k, literal_rule=args.literal_rule, out_csv=out,
    )
    for label, s in sorted(rep.summary.items()):
        print(f"{label}: solved {s['mean']:.2f} +- {s['std']:.2f}")
    if args.out:
        write_atomic(Path(args.out) / "summary.json", json.dumps({"solved": rep.solved, "summary": rep.summary}, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_pipeline(args):
    if args.config:
        cfg = harness.config_from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    else:
        cfg = harness.PipelineConfig()
    if args.steps is not None:
        cfg.train.total_steps = args.steps
    cfg.train.seed = args.seed
    if args.no_timeout:
        cfg.evaluation.timeout = None
    elif args.timeout is not None:
        cfg.evaluation.timeout = args.timeout
    if args.budget is not None and cfg.selection is not None:
        cfg.selection.budget = args.budget
    if not args.out:
        raise _Usage("pipeline needs --out DIR")
    res = harness.pipeline(_domain(args), cfg, args.out)
    s = res["summary"]
    print(f"selected {s['selected']} (reward-selected {s['reward_selected']}); solved {s['solved']}")
    return EXIT_OK


def build_parser():
    ap = _Parser(prog="otfsynth", description="On-the-fly directed controller synthesis with learned exploration.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, policy=True):
        if policy:
            sp.add_argument("--policy", default="bfs", choices=["random", "bfs", "lifo", "agent"])
            sp.add_argument("--weights", help="checkpoint file for --policy agent")
        sp.add_argument("--budget", type=int, help="max expansions")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")

    sp = sub.add_parser("synth", help="run on-the-fly synthesis on one instance")
    _problem_args(sp)
    common(sp)
    sp.add_argument("--timeout", type=float, help="wall-clock seconds")
    sp.add_argument("--timing", action="store_true", help="record time_ms even without a timeout")
    sp.set_defaults(fn=cmd_synth)

    for name, fn, hlp in (("oracle", cmd_oracle, "monolithic reference synthesis"),
                          ("compose", cmd_compose, "full parallel composition as JSON")):
        sp = sub.add_parser(name, help=hlp)
        _problem_args(sp)
        sp.add_argument("--cap", type=int, default=1_000_000, help="max composed states")
        sp.add_argument("--out")
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("features", help="per-step frontier feature dump")
    _problem_args(sp)
    common(sp)
    sp.set_defaults(fn=cmd_features)

    sp = sub.add_parser("train", help="train a Q network on one instance")
    _problem_args(sp)
    common(sp, policy=False)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--checkpoint-every", type=int)
    sp.set_defaults(fn=cmd_train)

    def grid_args(sp, bounded):
        sp.add_argument("--domain", choices=sorted(GENERATORS))
        sp.add_argument("--spec-dir", help="directory of spec files with params {n, k}")
        sp.add_argument("--max-n", type=int, default=harness.GRID_MAX if bounded else None)
        sp.add_argument("--max-k", type=int, default=harness.GRID_MAX if bounded else None)
        sp.add_argument("--literal-rule", action="store_true", help="prune on (n-1,k) and (k-1,n)")

    sp = sub.add_parser("select", help="pick a checkpoint by generalization")
    grid_args(sp, True)
    sp.add_argument("--checkpoints", help="directory of checkpoint files")
    sp.add_argument("--count", type=int, default=harness.SAMPLED_POLICIES)
    sp.add_argument("--budget", type=int, default=harness.SELECTION_BUDGET)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_select)

    sp = sub.add_parser("evaluate", help="solve the instance grid under a per-instance timeout")
    grid_args(sp, False)
    sp.add_argument("--policy", default="agent", choices=["random", "bfs", "lifo", "agent"])
    sp.add_argument("--weights")
    sp.add_argument("--baselines", default="", help="comma list of random,bfs,lifo")
    sp.add_argument("--random-seeds", type=int, default=10)
    sp.add_argument("--timeout", type=float, default=harness.EVAL_TIMEOUT)
    sp.add_argument("--no-timeout", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_evaluate)

    sp = sub.add_parser("pipeline", help="train, select and evaluate")
    sp.add_argument("--domain", choices=sorted(GENERATORS))
    sp.add_argument("--spec-dir")
    sp.add_argument("--config", help="JSON pipeline config")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--budget", type=int, help="selection budget")
    sp.add_argument("--timeout", type=float)
    sp.add_argument("--no-timeout", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_pipeline)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error reported by the parser
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not getattr(args, "fn", None):
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except (_Usage, UsageError, harness.ConfigError) as exc:
        print(f"otfsynth: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapExceeded as exc:
        print(f"otfsynth: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (SpecError, StructureError, CheckpointError, SchemaMismatch, OSError, ValueError) as exc:
        print(f"otfsynth: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
