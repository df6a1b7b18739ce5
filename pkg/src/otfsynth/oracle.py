"""Monolithic ground truth: full composition, winning region, director extraction."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field

from .des import ControlProblem

DEFAULT_STATE_CAP = 1_000_000


class ResourceCapExceeded(RuntimeError):
    pass


@dataclass
class ExplicitGraph:
    """Explicit plant graph. ``edges`` holds ``(src, label_name, dst, controllable)``
    over integer state indexes; ``states[i]`` is the composite state of index ``i``."""

    states: list
    edges: list
    marked: set
    initial: int = 0
    _out: list = field(default=None, repr=False, compare=False)

    def out_edges(self) -> list:
        if self._out is None:
            out = [[] for _ in self.states]
            for e in self.edges:
                out[e[0]].append(e)
            for row in out:
                row.sort(key=lambda e: e[1])
            self._out = out
        return self._out

    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.states)}


@dataclass
class Controller:
    """Director: composite state -> chosen controllable label name (or ``None``)."""

    choice: dict

    def __getitem__(self, state):
        return self.choice.get(state)

    def __len__(self):
        return len(self.choice)


def full_compose(p: ControlProblem, cap: int = DEFAULT_STATE_CAP) -> ExplicitGraph:
    init = p.initial
    index = {init: 0}
    states = [init]
    edges = []
    queue = deque([init])
    while queue:
        cs = queue.popleft()
        src = index[cs]
        for lid, nxt in p.enabled(cs):
            dst = index.get(nxt)
            if dst is None:
                if len(states) >= cap:
                    raise ResourceCapExceeded(f"{p.name}: more than {cap} composed states")
                dst = index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            lab = p.labels[lid]
            edges.append((src, lab.name, dst, lab.controllable))
    marked = {i for i, s in enumerate(states) if p.is_marked(s)}
    return ExplicitGraph(states, edges, marked, 0)


def winning_region(g: ExplicitGraph) -> set:
    """Greatest fixed point of: uncontrollable edges stay inside, and a path of
    length >= 1 inside reaches a marked state."""
    n = len(g.states)
    preds = [[] for _ in range(n)]
    for src, _, dst, ctrl in g.edges:
        preds[dst].append((src, ctrl))
    alive = [True] * n

    def cascade(removed):
        # an uncontrollable edge into a removed state removes its source
        stack = list(removed)
        while stack:
            d = stack.pop()
            for p, ctrl in preds[d]:
                if not ctrl and alive[p]:
                    alive[p] = False
                    stack.append(p)

    while True:
        reach = [False] * n
        stack = [m for m in g.marked if 0 <= m < n and alive[m]]
        seen_target = [False] * n
        for m in stack:
            seen_target[m] = True
        while stack:
            x = stack.pop()
            for p, _ in preds[x]:
                if alive[p] and not reach[p]:
                    reach[p] = True
                    if not seen_target[p]:
                        seen_target[p] = True
                        stack.append(p)
        removed = [i for i in range(n) if alive[i] and not reach[i]]
        if not removed:
            break
        for i in removed:
            alive[i] = False
        cascade(removed)
    return {i for i in range(n) if alive[i]}


def marked_distance(g: ExplicitGraph, W: set) -> dict:
    """Shortest distance (>= 0) inside ``W`` to a marked state of ``W``."""
    preds = {}
    for src, _, dst, _ in g.edges:
        if src in W and dst in W:
            preds.setdefault(dst, []).append(src)
    dist = {m: 0 for m in g.marked if m in W}
    queue = deque(dist)
    while queue:
        x = queue.popleft()
        for p in preds.get(x, ()):
            if p not in dist:
                dist[p] = dist[x] + 1
                queue.append(p)
    return dist


def extract_director(g: ExplicitGraph, W: set) -> Controller:
    if g.initial not in W:
        raise ValueError("initial state is not winning; no director exists")
    d0 = marked_distance(g, W)
    out = g.out_edges()
    choice = {}
    for s in sorted(W):
        best = None
        for src, lab, dst, ctrl in out[s]:
            if ctrl and dst in W and dst in d0:
                key = (d0[dst], lab)
                if best is None or key < best:
                    best = key
        choice[g.states[s]] = best[1] if best else None
    return Controller(choice)


def validate_nonblocking(g: ExplicitGraph, c: Controller) -> bool:
    """Controlled graph keeps all uncontrollable edges plus chosen controllable
    ones; every reachable state needs a path of length >= 1 to a marked state."""
    for v in c.choice.values():
        if isinstance(v, (set, frozenset, list, tuple)) and len(v) > 1:
            return False
    out = g.out_edges()

    def allowed(s):
        pick = c.choice.get(g.states[s])
        if isinstance(pick, (set, frozenset, list, tuple)):
            pick = next(iter(pick), None)
        return [dst for _, lab, dst, ctrl in out[s] if not ctrl or lab == pick]

    reach = {g.initial}
    stack = [g.initial]
    succ = {}
    while stack:
        s = stack.pop()
        succ[s] = allowed(s)
        for d in succ[s]:
            if d not in reach:
                reach.add(d)
                stack.append(d)
    preds = {s: [] for s in reach}
    for s in reach:
        for d in succ[s]:
            preds[d].append(s)
    # states with a path of length >= 1 to a marked state
    good = set()
    stack = [m for m in reach if m in g.marked]
    expanded = set(stack)
    while stack:
        x = stack.pop()
        for p in preds[x]:
            if p not in good:
                good.add(p)
                if p not in expanded:
                    expanded.add(p)
                    stack.append(p)
    return good >= reach


def monolithic_synthesis(p: ControlProblem, cap: int = DEFAULT_STATE_CAP):
    """``("Winning", Controller)`` or ``("Losing", None)``."""
    g = full_compose(p, cap)
    W = winning_region(g)
    if g.initial in W:
        return "Winning", extract_director(g, W)
    return "Losing", None


def exists_director_bruteforce(g: ExplicitGraph, max_states: int = 8) -> bool:
    """Enumerate every memoryless director (one or no controllable choice per state)."""
    if len(g.states) > max_states:
        raise ResourceCapExceeded("brute-force enumeration is for tiny plants only")
    out = g.out_edges()
    options = []
    for s in range(len(g.states)):
        labs = sorted({lab for _, lab, _, ctrl in out[s] if ctrl})
        options.append([None] + labs)
    for combo in itertools.product(*options):
        c = Controller({g.states[s]: combo[s] for s in range(len(g.states))})
        if validate_nonblocking(g, c):
            return True
    return False


def classify(g: ExplicitGraph) -> dict:
    """Composite state -> ``"W"`` or ``"L"`` for every state of ``g``."""
    W = winning_region(g)
    return {s: ("W" if i in W else "L") for i, s in enumerate(g.states)}

