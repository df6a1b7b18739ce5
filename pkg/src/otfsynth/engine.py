"""On-the-fly exploration of a composed plant.

The explored subgraph grows one frontier transition at a time. After each
expansion every discovered state is classified as winning (a director exists
even if all frontier transitions lead to losing states), losing (none exists
even if all frontier transitions lead to winning states) or neither.
"""

from __future__ import annotations

import bisect
import random
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .des import ControlProblem, EventLabel
from .kernel import LOSE, UNDECIDED, WIN
from .oracle import Controller, ExplicitGraph, extract_director, validate_nonblocking, winning_region

WINNING = "Winning"
LOSING = "Losing"
UNKNOWN = "Unknown"


class UsageError(RuntimeError):
    """An operation was called outside its precondition."""


@dataclass(frozen=True, eq=False)
class TransitionRef:
    source: tuple
    label: EventLabel
    target: tuple
    insertion_index: int
    src_id: int = field(repr=False)
    tgt_id: int = field(repr=False)
    label_id: int = field(repr=False)

    def key(self):
        return (self.source, self.label.name, self.target)


class _Column:
    """Growable 1-D numpy array."""

    def __init__(self, dtype, fill=0):
        self.data = np.full(64, fill, dtype=dtype)
        self.fill = fill
        self.n = 0

    def append(self, value):
        if self.n == len(self.data):
            grown = np.full(2 * len(self.data), self.fill, dtype=self.data.dtype)
            grown[: self.n] = self.data
            self.data = grown
        self.data[self.n] = value
        self.n += 1

    @property
    def view(self):
        return self.data[: self.n]


class ExplorationState:
    """Mutable exploration of one control problem (single owner)."""

    def __init__(self, p: ControlProblem, kernel_cls=None):
        self.problem = p
        self.kernel = (kernel_cls or _kernel.Classifier)()
        self.base_labels = p.base_labels()
        base_index = {b: i for i, b in enumerate(self.base_labels)}
        self._label_base = np.array([base_index[lab.base] for lab in p.labels], dtype=np.int64)
        self._label_ctrl = [lab.controllable for lab in p.labels]
        self.label_controllable = np.array(self._label_ctrl, dtype=np.bool_)

        self.ids: dict = {}
        self.states: list = []
        self._enabled: list = []
        self.marked = _Column(np.bool_, False)
        self.status = _Column(np.int8, UNDECIDED)
        self.discovered = _Column(np.bool_, False)
        self.out_expanded = _Column(np.int64, 0)
        self.unc_enabled = _Column(np.int64, -1)
        self.unc_expanded = _Column(np.int64, 0)
        self._incoming = np.zeros((64, max(1, len(self.base_labels))), dtype=np.bool_)

        # every transition that ever entered the frontier, by insertion index
        self.tr_src = _Column(np.int64)
        self.tr_tgt = _Column(np.int64)
        self.tr_label = _Column(np.int64)
        self.transitions: list = []

        self._front_keys: list = []
        self.h: list = []
        self.ws: set = set()
        self.ls: set = set()
        self.marked_found = False
        self.marked_cycle_closed = False
        self.last_expanded: TransitionRef | None = None
        self.allow_after_verdict = False

        self.initial_id = self._intern(p.initial)
        self._discover(self.initial_id)

    # -- bookkeeping --------------------------------------------------------
    def _intern(self, cs) -> int:
        sid = self.ids.get(cs)
        if sid is not None:
            return sid
        sid = len(self.states)
        self.ids[cs] = sid
        self.states.append(cs)
        self._enabled.append(None)
        m = self.problem.is_marked(cs)
        self.marked.append(m)
        self.status.append(UNDECIDED)
        self.discovered.append(False)
        self.out_expanded.append(0)
        self.unc_enabled.append(-1)
        self.unc_expanded.append(0)
        if sid == len(self._incoming):
            grown = np.zeros((2 * sid, self._incoming.shape[1]), dtype=np.bool_)
            grown[:sid] = self._incoming
            self._incoming = grown
        self.kernel.add_state(m)
        return sid

    def enabled_of(self, sid: int) -> list:
        en = self._enabled[sid]
        if en is None:
            en = self._enabled[sid] = self.problem.enabled(self.states[sid])
            self.unc_enabled.data[sid] = sum(1 for lid, _ in en if not self._label_ctrl[lid])
        return en

    def ensure_enabled(self, sids) -> None:
        unknown = self.unc_enabled.data[sids] < 0
        for sid in np.asarray(sids)[unknown]:
            self.enabled_of(int(sid))

    def _discover(self, sid: int) -> None:
        self.discovered.data[sid] = True
        if self.marked.data[sid]:
            self.marked_found = True
        src = self.states[sid]
        n_c = n_u = 0
        for lid, nxt in self.enabled_of(sid):
            tid = self._intern(nxt)
            idx = len(self.transitions)
            lab = self.problem.labels[lid]
            tr = TransitionRef(src, lab, nxt, idx, sid, tid, lid)
            self.transitions.append(tr)
            self.tr_src.append(sid)
            self.tr_tgt.append(tid)
            self.tr_label.append(lid)
            self._front_keys.append(idx)
            if lab.controllable:
                n_c += 1
            else:
                n_u += 1
        if self.kernel.discover(sid, n_c, n_u):
            self._set_lose([sid])

    def _set_win(self, sids):
        for s in sids:
            self.status.data[s] = WIN
            self.ws.add(s)

    def _set_lose(self, sids):
        for s in sids:
            self.status.data[s] = LOSE
            self.ls.add(s)

    # -- public view --------------------------------------------------------
    @property
    def frontier(self) -> list:
        return [self.transitions[k] for k in self._front_keys]

    @property
    def frontier_keys(self) -> list:
        return self._front_keys

    def __len__(self):
        return len(self._front_keys)

    @property
    def verdict(self) -> str:
        st = self.status.data[self.initial_id]
        if st == WIN:
            return WINNING
        if st == LOSE:
            return LOSING
        return UNKNOWN

    @property
    def done(self) -> bool:
        return self.verdict != UNKNOWN

    @property
    def phase_flags(self) -> tuple:
        return (self.marked_found, bool(self.ws), self.marked_cycle_closed)

    @property
    def incoming(self) -> np.ndarray:
        return self._incoming[: len(self.states)]

    def winning_states(self) -> set:
        return {self.states[s] for s in self.ws}

    def losing_states(self) -> set:
        return {self.states[s] for s in self.ls}

    def discovered_states(self) -> set:
        return {self.states[s] for s in np.flatnonzero(self.discovered.view)}

    def frontier_position(self, insertion_index: int) -> int:
        pos = bisect.bisect_left(self._front_keys, insertion_index)
        if pos == len(self._front_keys) or self._front_keys[pos] != insertion_index:
            raise UsageError(f"transition {insertion_index} is not in the frontier")
        return pos

    # -- expansion ---------------------------------------------------------
    def expand(self, choice: int) -> TransitionRef:
        if self.done and not self.allow_after_verdict:
            raise UsageError("exploration already has a verdict")
        if not 0 <= choice < len(self._front_keys):
            raise UsageError(f"frontier index {choice} out of range ({len(self._front_keys)})")
        key = self._front_keys.pop(choice)
        t = self.transitions[key]
        self.h.append(t)
        s, tid = t.src_id, t.tgt_id
        ctrl = t.label.controllable
        self.out_expanded.data[s] += 1
        if not ctrl:
            self.unc_expanded.data[s] += 1
        self._incoming[tid, self._label_base[t.label_id]] = True
        t_new = not self.discovered.data[tid]
        if t_new:
            self._discover(tid)
        new_w, new_l = self.kernel.add_edge(s, tid, ctrl, t_new)
        self._set_win(new_w)
        self._set_lose(new_l)
        if not t_new and not self.marked_cycle_closed:
            self.marked_cycle_closed = bool(self.kernel.closes_marked_cycle(s, tid))
        self.last_expanded = t
        return t


def new_exploration(p: ControlProblem, kernel_cls=None) -> ExplorationState:
    return ExplorationState(p, kernel_cls)


def expand(es: ExplorationState, choice: int) -> ExplorationState:
    es.expand(choice)
    return es


def explored_graph(es: ExplorationState) -> ExplicitGraph:
    """Discovered states and expanded transitions (initial state first)."""
    disc = sorted(np.flatnonzero(es.discovered.view).tolist())
    order = [es.initial_id] + [s for s in disc if s != es.initial_id]
    local = {s: i for i, s in enumerate(order)}
    edges = [(local[t.src_id], t.label.name, local[t.tgt_id], t.label.controllable) for t in es.h]
    marked = {local[s] for s in order if es.marked.data[s]}
    return ExplicitGraph([es.states[s] for s in order], edges, marked, 0)


def classify_partial(es: ExplorationState) -> tuple:
    """Reference classification by full recomputation of both fixed points.

    Returns ``(WS, LS)`` as sets of composite states.
    """
    g = explored_graph(es)
    n = len(g.states)
    local = {s: i for i, s in enumerate(g.states)}
    front = [(local[t.source], t.label.name, t.label.controllable) for t in es.frontier]
    # pessimistic: frontier leads to an unmarked deadlock
    pes = ExplicitGraph(
        g.states + ["<lose>"],
        g.edges + [(s, lab, n, c) for s, lab, c in front],
        set(g.marked),
        0,
    )
    # optimistic: frontier leads to a marked state with a controllable self-loop
    opt = ExplicitGraph(
        g.states + ["<win>"],
        g.edges + [(s, lab, n, c) for s, lab, c in front] + [(n, "<loop>", n, True)],
        set(g.marked) | {n},
        0,
    )
    wp = winning_region(pes)
    wo = winning_region(opt)
    ws = {g.states[i] for i in range(n) if i in wp}
    ls = {g.states[i] for i in range(n) if i not in wo}
    return ws, ls


def build_controller(es: ExplorationState) -> Controller:
    if es.status.data[es.initial_id] != WIN:
        raise UsageError("initial state is not winning")
    g = explored_graph(es)
    local = {s: i for i, s in enumerate(g.states)}
    W = {local[es.states[s]] for s in es.ws}
    return extract_director(g, W)


def validate_on_explored(es: ExplorationState, c: Controller) -> bool:
    return validate_nonblocking(explored_graph(es), c)


# -- exploration policies ---------------------------------------------------
class Policy:
    name = "policy"

    def reset(self, p: ControlProblem) -> None:
        pass

    def select(self, es: ExplorationState) -> int:
        raise NotImplementedError


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def select(self, es):
        return self.rng.randrange(len(es))


class BFSPolicy(Policy):
    """Oldest frontier transition first."""

    name = "bfs"

    def select(self, es):
        return 0


class LIFOPolicy(Policy):
    """Newest frontier transition first."""

    name = "lifo"

    def select(self, es):
        return len(es) - 1


@dataclass
class SynthesisResult:
    instance: str
    policy: str
    seed: int
    verdict: str
    expanded: int
    time_ms: float
    solved: bool
    controller: Controller | None = None

    def row(self) -> dict:
        return {
            "instance": self.instance,
            "policy": self.policy,
            "seed": self.seed,
            "verdict": self.verdict,
            "expanded": self.expanded,
            "time_ms": round(self.time_ms, 3),
            "solved": int(self.solved),
        }


def make_policy(name: str, seed: int = 0, weights=None, schema=None) -> Policy:
    if name == "random":
        return RandomPolicy(seed)
    if name == "bfs":
        return BFSPolicy()
    if name == "lifo":
        return LIFOPolicy()
    if name == "agent":
        from .rl import AgentPolicy

        if weights is None:
            raise UsageError("agent policy needs network weights")
        return AgentPolicy(weights, schema)
    raise UsageError(f"unknown policy {name!r}")


def run_synthesis(
    p: ControlProblem,
    policy: Policy | str = "bfs",
    budget: int | None = None,
    deadline: float | None = None,
    rng_seed: int = 0,
    kernel_cls=None,
    with_controller: bool = True,
) -> SynthesisResult:
    """Select-expand until a verdict, ``budget`` expansions, or ``deadline`` seconds."""
    if isinstance(policy, str):
        policy = make_policy(policy, rng_seed)
    t0 = time.perf_counter()
    stop_at = None if deadline is None else t0 + deadline
    es = ExplorationState(p, kernel_cls)
    policy.reset(p)
    while not es.done:
        if budget is not None and len(es.h) >= budget:
            break
        if stop_at is not None and time.perf_counter() >= stop_at:
            break
        es.expand(policy.select(es))
    elapsed = (time.perf_counter() - t0) * 1000.0
    verdict = es.verdict
    ctrl = build_controller(es) if verdict == WINNING and with_controller else None
    return SynthesisResult(p.name, policy.name, rng_seed, verdict, len(es.h), elapsed, verdict != UNKNOWN, ctrl)
