"""Q-learning over frontier feature vectors with replay and fixed targets.

Each expansion costs a reward of -1, so Q estimates the negative number of
expansions still needed before the initial state is classified.
"""

from __future__ import annotations

import csv
import io
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .des import ControlProblem
from .engine import ExplorationState, Policy, UsageError
from .features import FeatureSchema, build_schema, frontier_features
from .neural import (
    HIDDEN,
    LEARNING_RATE,
    MOMENTUM,
    WEIGHT_DECAY,
    DivergenceError,
    Optimizer,
    QNetwork,
    batch_update,
    forward,
    init_network,
    save_checkpoint,
)

log = logging.getLogger(__name__)

TRAIN_LOG_FIELDS = ["episode", "end_step", "expansions", "epsilon"]


@dataclass
class TrainConfig:
    total_steps: int = 500_000
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_steps: int = 250_000
    batch_size: int = 10
    buffer_size: int = 10_000
    target_reset_every: int = 10_000
    checkpoint_every: int = 5_000
    seed: int = 0
    hidden: int = HIDDEN
    learning_rate: float = LEARNING_RATE
    weight_decay: float = WEIGHT_DECAY
    momentum: float = MOMENTUM
    prefill_steps: int = 1_000
    # after total_steps, keep going while the best episode is recent
    early_stop: bool = False
    max_steps: int = 2_000_000
    episode_step_cap: int | None = None
    last_expanded_mode: str = "source"

    def __post_init__(self):
        if self.total_steps < 0 or self.batch_size < 1 or self.buffer_size < 1:
            raise ValueError("invalid training sizes")
        if self.target_reset_every < 1 or self.checkpoint_every < 1 or self.epsilon_decay_steps < 1:
            raise ValueError("schedules must be positive")
        if not 0 <= self.epsilon_end <= self.epsilon_start <= 1:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def epsilon(step: int, cfg: TrainConfig) -> float:
    if step < 0:
        raise ValueError("step must be non-negative")
    frac = min(step / cfg.epsilon_decay_steps, 1.0)
    return cfg.epsilon_start + frac * (cfg.epsilon_end - cfg.epsilon_start)


def episode_reward(es: ExplorationState) -> int:
    return -len(es.h)


@dataclass
class Experience:
    taken: np.ndarray
    next_frontier: np.ndarray
    terminal: bool

    def __post_init__(self):
        if (len(self.next_frontier) == 0) != self.terminal:
            raise ValueError("next_frontier must be empty exactly for terminal experiences")


class ReplayBuffer:
    """Fixed-capacity ring buffer; evicts the oldest experience first."""

    def __init__(self, capacity: int = 10_000):
        self.capacity = capacity
        self.items: list = []
        self._next = 0

    def __len__(self):
        return len(self.items)

    def add(self, e: Experience) -> None:
        if len(self.items) < self.capacity:
            self.items.append(e)
        else:
            self.items[self._next] = e
        self._next = (self._next + 1) % self.capacity

    def oldest(self) -> Experience:
        return self.items[self._next % len(self.items)] if len(self.items) == self.capacity else self.items[0]

    def sample(self, rng: np.random.Generator, k: int) -> list:
        """Uniform sample without replacement (with replacement only if k > size)."""
        n = len(self.items)
        if n == 0:
            raise UsageError("cannot sample from an empty buffer")
        idx = rng.choice(n, size=k, replace=k > n)
        return [self.items[i] for i in idx]


def td_target(qprime: QNetwork, e: Experience) -> float:
    if e.terminal:
        return -1.0
    return -1.0 + float(np.max(forward(qprime, e.next_frontier)))


def td_targets(qprime: QNetwork, batch: list) -> np.ndarray:
    """Vectorised :func:`td_target` over a minibatch."""
    out = np.full(len(batch), -1.0)
    live = [i for i, e in enumerate(batch) if not e.terminal]
    if live:
        mats = [batch[i].next_frontier for i in live]
        starts = np.cumsum([0] + [len(m) for m in mats[:-1]])
        vals = forward(qprime, np.concatenate(mats))
        out[live] += np.maximum.reduceat(vals, starts)
    return out


def greedy_action(q: QNetwork, es: ExplorationState, schema: FeatureSchema, X: np.ndarray | None = None) -> int:
    """Frontier index with the highest Q; ties go to the earliest-inserted transition."""
    if len(es) == 0:
        raise UsageError("empty frontier")
    if X is None:
        X = frontier_features(es, schema)
    return int(np.argmax(forward(q, X)))


class AgentPolicy(Policy):
    """Greedy (epsilon = 0) policy induced by a Q network."""

    name = "agent"

    def __init__(self, q: QNetwork, schema: FeatureSchema | None = None):
        self.q = q
        self.schema = schema

    def reset(self, p: ControlProblem) -> None:
        if self.schema is None:
            self.schema = build_schema(p)
        if self.schema.dimension != self.q.d_in:
            from .features import SchemaMismatch

            raise SchemaMismatch(f"network expects {self.q.d_in} inputs, schema has {self.schema.dimension}")

    def select(self, es):
        return greedy_action(self.q, es, self.schema)


# -- training ----------------------------------------------------------------
@dataclass
class TrainResult:
    network: QNetwork
    checkpoints: list
    episodes: list = field(default_factory=list)  # (episode, end_step, expansions, epsilon)
    steps: int = 0
    schema: FeatureSchema | None = None


class Trainer:
    def __init__(self, p: ControlProblem, cfg: TrainConfig, out_dir=None):
        self.p = p
        self.cfg = cfg
        self.schema = build_schema(p, cfg.last_expanded_mode)
        ss = np.random.SeedSequence(cfg.seed)
        s_net, s_act, s_replay, s_prefill = ss.spawn(4)
        self.q = init_network(self.schema.dimension, int(s_net.generate_state(1)[0]), cfg.hidden)
        self.q_target = self.q.copy()
        self.opt = Optimizer(cfg.learning_rate, cfg.weight_decay, cfg.momentum)
        self.act_rng = np.random.default_rng(s_act)
        self.replay_rng = np.random.default_rng(s_replay)
        self.prefill_rng = np.random.default_rng(s_prefill)
        self.buffer = ReplayBuffer(cfg.buffer_size)
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.checkpoints: list = []
        self.episodes: list = []
        self._log_fh = None

    # environment helpers
    def _reset(self):
        es = ExplorationState(self.p)
        return es, frontier_features(es, self.schema)

    def _step(self, es, X, action):
        taken = X[action].copy()
        es.expand(action)
        capped = self.cfg.episode_step_cap is not None and len(es.h) >= self.cfg.episode_step_cap
        if es.done:
            nxt = np.zeros((0, self.schema.dimension))
            return Experience(taken, nxt, True), nxt, True
        nxt = frontier_features(es, self.schema)
        return Experience(taken, nxt, False), nxt, capped

    def prefill(self) -> int:
        """Random-policy observations: at least one episode and ``prefill_steps`` steps, capped by capacity."""
        es, X = self._reset()
        steps = episodes = 0
        while len(self.buffer) < self.buffer.capacity:
            if episodes >= 1 and steps >= self.cfg.prefill_steps:
                break
            a = int(self.prefill_rng.integers(len(X)))
            exp, X, end = self._step(es, X, a)
            self.buffer.add(exp)
            steps += 1
            if end:
                episodes += 1
                es, X = self._reset()
        return steps

    def _open_log(self):
        if self.out_dir is None:
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "checkpoints").mkdir(exist_ok=True)
        self._log_fh = open(self.out_dir / "train_log.csv", "w", newline="", encoding="utf-8")
        self._log_fh.write(",".join(TRAIN_LOG_FIELDS) + "\n")
        self._log_fh.flush()

    def _log_episode(self, row):
        self.episodes.append(row)
        if self._log_fh is not None:
            buf = io.StringIO()
            csv.writer(buf, lineterminator="\n").writerow(row)
            self._log_fh.write(buf.getvalue())
            self._log_fh.flush()

    def _checkpoint(self, step):
        entry = {"step": step, "network": self.q.copy()}
        if self.out_dir is not None:
            path = self.out_dir / "checkpoints" / f"step_{step:09d}.json"
            save_checkpoint(self.q, self.opt, path, step, {"schema": self.schema.to_dict(), "problem": self.p.name})
            entry["path"] = str(path)
        self.checkpoints.append(entry)

    def _should_stop(self, step) -> bool:
        cfg = self.cfg
        if step >= cfg.max_steps:
            return True
        if step < cfg.total_steps:
            return False
        if not cfg.early_stop or not self.episodes:
            return True
        best_step = min(self.episodes, key=lambda r: (r[2], r[1]))[1]
        return best_step < step * 2 / 3

    def train(self) -> TrainResult:
        cfg = self.cfg
        self._open_log()
        try:
            self.prefill()
            self._checkpoint(0)
            es, X = self._reset()
            step = 0
            episode = 0
            while not self._should_stop(step):
                eps = epsilon(step, cfg)
                if self.act_rng.random() < eps:
                    a = int(self.act_rng.integers(len(X)))
                else:
                    a = int(np.argmax(forward(self.q, X)))
                exp, X, end = self._step(es, X, a)
                self.buffer.add(exp)
                batch = self.buffer.sample(self.replay_rng, cfg.batch_size)
                targets = td_targets(self.q_target, batch)
                batch_update(self.q, np.stack([e.taken for e in batch]), targets, self.opt)
                step += 1
                if step % cfg.target_reset_every == 0:
                    self.q_target = self.q.copy()
                if step % cfg.checkpoint_every == 0:
                    self._checkpoint(step)
                if end:
                    if not es.done:
                        log.warning("episode %d hit the step cap at %d expansions", episode, len(es.h))
                    self._log_episode((episode, step, len(es.h), round(eps, 6)))
                    episode += 1
                    es, X = self._reset()
        except DivergenceError:
            log.error("training diverged; keeping checkpoints up to step %s", self.checkpoints[-1]["step"])
            raise
        finally:
            if self._log_fh is not None:
                self._log_fh.close()
                self._log_fh = None
        return TrainResult(self.q, self.checkpoints, self.episodes, step, self.schema)


def train(p: ControlProblem, cfg: TrainConfig, out_dir=None) -> TrainResult:
    return Trainer(p, cfg, out_dir).train()


def greedy_episode(q: QNetwork, p: ControlProblem, schema: FeatureSchema | None = None, budget: int | None = None):
    """Play one greedy episode; returns the finished :class:`ExplorationState`."""
    schema = schema or build_schema(p)
    es = ExplorationState(p)
    while not es.done and (budget is None or len(es.h) < budget):
        es.expand(greedy_action(q, es, schema))
    return es


def optimal_expansions(p: ControlProblem, max_transitions: int = 12) -> int:
    """Fewest expansions to a verdict, by breadth-first search over explored sets.

    Classification depends only on the set of expanded transitions, so sets are
    deduplicated regardless of the order that produced them.
    """
    from .oracle import full_compose

    total = len(full_compose(p).edges)
    if total > max_transitions:
        raise UsageError(f"{p.name}: {total} transitions exceeds the exhaustive-search bound {max_transitions}")

    def replay(seq):
        es = ExplorationState(p)
        for key in seq:
            keys = [t.key() for t in es.frontier]
            es.expand(keys.index(key))
        return es

    start = ExplorationState(p)
    if start.done:
        return 0
    seen = {frozenset()}
    queue = deque([()])
    while queue:
        seq = queue.popleft()
        es = replay(seq)
        for t in es.frontier:
            nseq = seq + (t.key(),)
            s = frozenset(nseq)
            if s in seen:
                continue
            seen.add(s)
            child = replay(nseq)
            if child.done:
                return len(nseq)
            queue.append(nseq)
    raise AssertionError("exploration always terminates")

