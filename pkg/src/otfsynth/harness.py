"""Train / select / evaluate pipeline and CSV reporting."""

from __future__ import annotations

import csv
import io
import json
import logging
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .des import ControlProblem
from .domains import MAX_PARAM, generate_instance
from .engine import BFSPolicy, LIFOPolicy, RandomPolicy, run_synthesis
from .features import FeatureSchema, SchemaMismatch, build_schema
from .neural import load_checkpoint
from .rl import AgentPolicy, TrainConfig, train

log = logging.getLogger(__name__)

RESULT_FIELDS = ["domain", "n", "k", "policy", "seed", "verdict", "expanded", "time_ms", "solved"]
SELECTION_BUDGET = 5_000
SAMPLED_POLICIES = 100
EVAL_TIMEOUT = 600.0
GRID_MAX = 15


class ConfigError(ValueError):
    pass


# -- instance sources ----------------------------------------------------------
class Domain:
    """Parametric instance source: a named generator or a directory of spec files."""

    def __init__(self, name: str, factory: Callable[[int, int], ControlProblem] | None = None):
        self.name = name
        self._factory = factory or (lambda n, k: generate_instance(name, n, k))
        self._cache: dict = {}

    def instance(self, n: int, k: int) -> ControlProblem:
        key = (n, k)
        if key not in self._cache:
            self._cache[key] = self._factory(n, k)
        return self._cache[key]

    def has(self, n: int, k: int) -> bool:
        return 1 <= n <= MAX_PARAM and 1 <= k <= MAX_PARAM

    @classmethod
    def from_directory(cls, path) -> "Domain":
        """Spec files whose ``params`` field gives ``(n, k)``."""
        from .specio import load_spec

        table = {}
        for f in sorted(Path(path).glob("*.json")):
            p = load_spec(f)
            if p.params is None:
                raise ConfigError(f"{f}: spec in a domain directory needs params {{n, k}}")
            table[p.params] = p
        if not table:
            raise ConfigError(f"{path}: no spec files")
        dom = cls(Path(path).name, lambda n, k: table[(n, k)])
        dom.has = lambda n, k: (n, k) in table
        return dom


def as_domain(domain) -> Domain:
    return domain if isinstance(domain, Domain) else Domain(domain)


# -- grid pruning --------------------------------------------------------------
def prerequisites(n: int, k: int, literal: bool = False) -> list:
    """Instances that must be solved before ``(n, k)`` is attempted."""
    if literal:
        req = [(n - 1, k), (k - 1, n)]
    else:
        req = [(n - 1, k), (n, k - 1)]
    return [(a, b) for a, b in req if a >= 1 and b >= 1]


def grid_order(max_n: int, max_k: int):
    """All (n, k) up to the bounds in nondecreasing n + k, then increasing n."""
    for d in range(2, max_n + max_k + 1):
        for n in range(1, max_n + 1):
            k = d - n
            if 1 <= k <= max_k:
                yield n, k


def sweep(run_one, max_n, max_k, literal=False, grid=None):
    """Run ``run_one(n, k) -> solved`` over the grid with neighbour pruning.

    With ``max_n``/``max_k`` of ``None`` the sweep is unbounded and stops at the
    first diagonal on which nothing is attempted.
    """
    solved = set()
    allowed_grid = None if grid is None else set(grid)
    if allowed_grid is not None:
        max_n = max(n for n, _ in allowed_grid)
        max_k = max(k for _, k in allowed_grid)
    d = 2
    bound = (max_n or 10**9) + (max_k or 10**9)
    while d <= bound:
        attempted = False
        for n in range(1, d):
            k = d - n
            if (max_n is not None and n > max_n) or (max_k is not None and k > max_k):
                continue
            if allowed_grid is not None and (n, k) not in allowed_grid:
                continue
            if any(r not in solved for r in prerequisites(n, k, literal)):
                continue
            attempted = True
            if run_one(n, k):
                solved.add((n, k))
        if not attempted and (max_n is None or max_k is None):
            break
        d += 1
    return solved


# -- checkpoint handling -----------------------------------------------------------
def sample_checkpoints(all_ckpts: list, count: int = SAMPLED_POLICIES) -> list:
    """Evenly spaced sample, first and last included."""
    if not all_ckpts:
        raise ConfigError("no checkpoints to sample")
    if count < 1:
        raise ConfigError("count must be positive")
    n = len(all_ckpts)
    if n <= count:
        return list(all_ckpts)
    if count == 1:
        return [all_ckpts[-1]]
    idx = sorted({int(round(i * (n - 1) / (count - 1))) for i in range(count)})
    return [all_ckpts[i] for i in idx]


@dataclass
class Agent:
    id: str
    network: object
    schema: FeatureSchema | None = None
    step: int = 0


def load_agents(paths) -> list:
    agents = []
    for path in paths:
        q, _, meta = load_checkpoint(path)
        schema = FeatureSchema.from_dict(meta["schema"]) if "schema" in meta else None
        agents.append(Agent(Path(path).stem, q, schema, int(meta.get("step", 0))))
    return agents


def agents_from_training(checkpoints: list, schema: FeatureSchema) -> list:
    return [Agent(f"step_{c['step']:09d}", c["network"], schema, c["step"]) for c in checkpoints]


def _policy_for(agent: Agent, p: ControlProblem) -> AgentPolicy:
    schema = build_schema(p, agent.schema.last_expanded_mode if agent.schema else "source")
    if agent.schema is not None and agent.schema.base_labels != schema.base_labels:
        raise SchemaMismatch(f"agent {agent.id} was trained on labels {agent.schema.base_labels}, {p.name} has {schema.base_labels}")
    if schema.dimension != agent.network.d_in:
        raise SchemaMismatch(f"agent {agent.id} expects {agent.network.d_in} features, {p.name} gives {schema.dimension}")
    return AgentPolicy(agent.network, schema)


# -- selection -------------------------------------------------------------------
@dataclass
class SelectionReport:
    rows: list  # {agent, step, solved, expanded}
    outcomes: dict  # agent id -> list of (n, k, solved, expanded)
    selected: str
    reward_selected: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def pick_best(rows: list) -> str:
    """Most solved, then least total expansions, then earliest."""
    best = min(range(len(rows)), key=lambda i: (-rows[i]["solved"], rows[i]["expanded"], i))
    return rows[best]["agent"]


def pick_by_reward(rows: list) -> str:
    """Highest training-instance reward; ties go to the latest agent."""
    best = min(range(len(rows)), key=lambda i: (-rows[i]["reward"], -i))
    return rows[best]["agent"]


def select_agent(
    agents: list,
    domain,
    max_n: int = GRID_MAX,
    max_k: int = GRID_MAX,
    budget: int = SELECTION_BUDGET,
    literal_rule: bool = False,
) -> SelectionReport:
    if not agents:
        raise ConfigError("no agents to select from")
    domain = as_domain(domain)
    rows, outcomes = [], {}
    for agent in agents:
        results = []

        def run_one(n, k, agent=agent, results=results):
            if not domain.has(n, k):
                return False
            p = domain.instance(n, k)
            r = run_synthesis(p, _policy_for(agent, p), budget=budget, with_controller=False)
            results.append((n, k, r.solved, r.expanded))
            return r.solved

        sweep(run_one, max_n, max_k, literal_rule)
        outcomes[agent.id] = results
        log.info("%s: solved %d of %d attempted", agent.id, sum(1 for r in results if r[2]), len(results))
        rows.append({
            "agent": agent.id,
            "step": agent.step,
            "solved": sum(1 for r in results if r[2]),
            "expanded": sum(r[3] for r in results),
        })
    return SelectionReport(rows, outcomes, pick_best(rows))


def training_rewards(agents: list, p: ControlProblem, budget: int = SELECTION_BUDGET) -> list:
    rows = []
    for agent in agents:
        r = run_synthesis(p, _policy_for(agent, p), budget=budget, with_controller=False)
        rows.append({"agent": agent.id, "reward": -r.expanded if r.solved else -(budget + 1)})
    return rows


# -- evaluation --------------------------------------------------------------------
class CSVReport:
    """Append-only CSV: header first, one flushed line per row."""

    def __init__(self, path=None, fields=RESULT_FIELDS):
        self.fields = fields
        self.rows: list = []
        self._fh = None
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(path, "w", newline="", encoding="utf-8")
            self._write(fields)

    def _write(self, values):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(values)
        self._fh.write(buf.getvalue())
        self._fh.flush()

    def add(self, row: dict):
        self.rows.append(row)
        if self._fh is not None:
            self._write([row.get(f, "") for f in self.fields])

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class EvaluationReport:
    rows: list
    solved: dict  # policy label -> solved count (random: list over seeds)
    summary: dict = field(default_factory=dict)  # policy -> {"mean", "std"}

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(
    agent: Agent | None,
    domain,
    grid=None,
    timeout: float | None = EVAL_TIMEOUT,
    baselines=(),
    random_seeds=(),
    max_n: int | None = None,
    max_k: int | None = None,
    literal_rule: bool = False,
    out_csv=None,
    policy_label: str = "agent",
) -> EvaluationReport:
    """Solve instances with a wall-clock deadline each; unsolved rows are recorded, not raised.

    ``timeout=None`` disables deadlines and leaves ``time_ms`` blank, which makes
    the output byte-reproducible.
    """
    domain = as_domain(domain)
    report = CSVReport(out_csv)
    solved: dict = {}
    runs = []
    if agent is not None:
        runs.append((policy_label, lambda p: _policy_for(agent, p), 0))
    for b in baselines:
        if b == "bfs":
            runs.append(("bfs", lambda p: BFSPolicy(), 0))
        elif b == "lifo":
            runs.append(("lifo", lambda p: LIFOPolicy(), 0))
        elif b != "random":
            raise ConfigError(f"unknown baseline {b!r}")
    if "random" in baselines:
        for s in random_seeds or (0,):
            # baseline streams are keyed by seed only, independent of the agent rows
            runs.append(("random", lambda p, s=s: RandomPolicy(s), s))
    try:
        for label, make, seed in runs:
            count = 0

            def run_one(n, k, label=label, make=make, seed=seed):
                if not domain.has(n, k):
                    return False
                p = domain.instance(n, k)
                deadline = timeout
                r = run_synthesis(p, make(p), deadline=deadline, rng_seed=seed, with_controller=False)
                row = {
                    "domain": domain.name, "n": n, "k": k, "policy": label, "seed": seed,
                    "verdict": r.verdict, "expanded": r.expanded,
                    "time_ms": "" if timeout is None else f"{r.time_ms:.3f}", "solved": int(r.solved),
                }
                report.add(row)
                return r.solved

            count = len(sweep(run_one, max_n, max_k, literal_rule, grid))
            if label == "random":
                solved.setdefault("random", []).append(count)
            else:
                solved[label] = count
    finally:
        report.close()
    summary = {}
    for label, v in solved.items():
        vals = v if isinstance(v, list) else [v]
        summary[label] = {
            "mean": float(statistics.fmean(vals)),
            "std": float(statistics.pstdev(vals)) if len(vals) > 1 else 0.0,
        }
    return EvaluationReport(report.rows, solved, summary)


# -- pipeline ------------------------------------------------------------------------
@dataclass
class SelectionConfig:
    count: int = SAMPLED_POLICIES
    max_n: int = GRID_MAX
    max_k: int = GRID_MAX
    budget: int = SELECTION_BUDGET
    literal_rule: bool = False


@dataclass
class EvaluationConfig:
    timeout: float | None = EVAL_TIMEOUT
    max_n: int | None = None
    max_k: int | None = None
    baselines: tuple = ("random", "bfs", "lifo")
    random_seeds: tuple = tuple(range(10))


@dataclass
class PipelineConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    selection: SelectionConfig | None = field(default_factory=SelectionConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    train_n: int = 2
    train_k: int = 2


def _write_json(path: Path, data) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(data, indent=1, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    tmp.replace(path)


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_selection_csv(report: SelectionReport, path) -> None:
    rep = CSVReport(path, ["agent", "step", "solved", "expanded", "selected"])
    for row in report.rows:
        rep.add({**row, "selected": int(row["agent"] == report.selected)})
    rep.close()


def pipeline(domain, cfg: PipelineConfig, out_dir) -> dict:
    """Train on ``(train_n, train_k)``, select by generalization, evaluate.

    The training-reward-selected agent is evaluated alongside as an ablation.
    """
    if cfg.selection is None:
        raise ConfigError("the selection stage is mandatory")
    domain = as_domain(domain)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", config_to_dict(cfg))
    p0 = domain.instance(cfg.train_n, cfg.train_k)
    log.info("training on %s for %d steps", p0.name, cfg.train.total_steps)
    result = train(p0, cfg.train, out / "train")
    agents = agents_from_training(result.checkpoints, result.schema)
    sampled = sample_checkpoints(agents, cfg.selection.count)
    sel = select_agent(
        sampled, domain, cfg.selection.max_n, cfg.selection.max_k, cfg.selection.budget, cfg.selection.literal_rule
    )
    rewards = training_rewards(sampled, p0, cfg.selection.budget)
    sel.reward_selected = pick_by_reward(rewards)
    write_selection_csv(sel, out / "selection.csv")
    by_id = {a.id: a for a in sampled}
    ev = cfg.evaluation
    rl = evaluate(
        by_id[sel.selected], domain, timeout=ev.timeout, baselines=ev.baselines, random_seeds=ev.random_seeds,
        max_n=ev.max_n, max_k=ev.max_k, literal_rule=cfg.selection.literal_rule,
        out_csv=out / "evaluation_rl.csv", policy_label="rl",
    )
    rlns = evaluate(
        by_id[sel.reward_selected], domain, timeout=ev.timeout, max_n=ev.max_n, max_k=ev.max_k,
        literal_rule=cfg.selection.literal_rule, out_csv=out / "evaluation_rlns.csv", policy_label="rlns",
    )
    summary = {
        "domain": domain.name,
        "train_instance": p0.name,
        "train_steps": result.steps,
        "checkpoints": len(result.checkpoints),
        "sampled": len(sampled),
        "selected": sel.selected,
        "reward_selected": sel.reward_selected,
        "solved": {**rl.solved, **rlns.solved},
        "summary": {**rl.summary, **rlns.summary},
        "training_rewards": rewards,
    }
    _write_json(out / "summary.json", summary)
    return {"selection": sel, "rl": rl, "rlns": rlns, "summary": summary, "train": result}


def config_to_dict(cfg: PipelineConfig) -> dict:
    return {
        "train": cfg.train.to_dict(),
        "selection": None if cfg.selection is None else asdict(cfg.selection),
        "evaluation": {**asdict(cfg.evaluation), "baselines": list(cfg.evaluation.baselines),
                       "random_seeds": list(cfg.evaluation.random_seeds)},
        "train_n": cfg.train_n,
        "train_k": cfg.train_k,
    }


def config_from_dict(d: dict) -> PipelineConfig:
    """Build a config from a (possibly partial) document.

    Sections omitted take defaults, except ``selection``: a document without it
    describes a pipeline with no selection stage, which :func:`pipeline` rejects.
    """
    known = {"train", "selection", "evaluation", "train_n", "train_k"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    try:
        tr = TrainConfig(**d.get("train", {}))
        sel = None if d.get("selection") is None else SelectionConfig(**d["selection"])
        ev = dict(d.get("evaluation", {}))
        for key in ("baselines", "random_seeds"):
            if key in ev:
                ev[key] = tuple(ev[key])
        return PipelineConfig(tr, sel, EvaluationConfig(**ev), int(d.get("train_n", 2)), int(d.get("train_k", 2)))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
