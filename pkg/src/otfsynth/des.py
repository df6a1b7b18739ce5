"""Modular discrete-event systems: component automata and on-the-fly composition."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

CompositeState = tuple  # tuple of per-component local state indexes

_INDEX_SUFFIX = re.compile(r"(\.\d+)+$")


class StructureError(ValueError):
    """A problem or composite state violates a structural invariant."""


def base_label(name: str) -> str:
    """Strip every trailing ``.<integer>`` segment: ``"move.2.1" -> "move"``."""
    return _INDEX_SUFFIX.sub("", name)


@dataclass(frozen=True, order=True)
class EventLabel:
    name: str
    controllable: bool = field(compare=False)

    @property
    def base(self) -> str:
        return base_label(self.name)


@dataclass
class ComponentAutomaton:
    """Deterministic automaton with states ``0..num_states-1``.

    ``transitions`` maps ``(state, label_name) -> state``. ``alphabet`` may
    contain labels that never occur in a transition; such labels are blocked
    in the composition whenever this component participates.
    """

    num_states: int
    alphabet: frozenset
    transitions: dict
    initial: int = 0
    marked: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        self.alphabet = frozenset(self.alphabet)
        self.marked = frozenset(self.marked)
        self.transitions = dict(self.transitions)
        for (src, lab), dst in self.transitions.items():
            if lab not in self.alphabet:
                raise StructureError(f"component {self.name!r}: label {lab!r} not in alphabet")
            if not (0 <= src < self.num_states and 0 <= dst < self.num_states):
                raise StructureError(f"component {self.name!r}: transition {src}-{lab}->{dst} out of range")
        if not 0 <= self.initial < self.num_states:
            raise StructureError(f"component {self.name!r}: initial state out of range")
        for m in self.marked:
            if not 0 <= m < self.num_states:
                raise StructureError(f"component {self.name!r}: marked state {m} out of range")

    def successors(self, state: int) -> dict:
        return {lab: dst for (src, lab), dst in self.transitions.items() if src == state}


class ControlProblem:
    """A named set of components over a shared, consistently partitioned alphabet."""

    def __init__(
        self,
        name: str,
        components: Sequence[ComponentAutomaton],
        controllable: Mapping[str, bool],
        params: tuple | None = None,
    ):
        if not components:
            raise StructureError("a control problem needs at least one component")
        self.name = name
        self.components = list(components)
        self.params = tuple(params) if params is not None else None
        names = set()
        for comp in self.components:
            names |= comp.alphabet
        missing = names - set(controllable)
        if missing:
            raise StructureError(f"labels without controllability: {sorted(missing)}")
        self.labels = tuple(EventLabel(n, bool(controllable[n])) for n in sorted(names))
        self._label_index = {lab.name: i for i, lab in enumerate(self.labels)}
        self._build_tables()

    # -- lookup tables used by the hot path -------------------------------
    def _build_tables(self):
        owners = [[] for _ in self.labels]
        for ci, comp in enumerate(self.components):
            for lab in comp.alphabet:
                owners[self._label_index[lab]].append(ci)
        self._owners = [tuple(o) for o in owners]
        # per component, per local state: tuple of (label_id, dst) sorted by label id
        self._local = []
        for comp in self.components:
            rows = [[] for _ in range(comp.num_states)]
            for (src, lab), dst in comp.transitions.items():
                rows[src].append((self._label_index[lab], dst))
            self._local.append([dict(sorted(r)) for r in rows])
        self._marked = [comp.marked for comp in self.components]

    @property
    def alphabet(self) -> tuple:
        return self.labels

    def label(self, name_or_id) -> EventLabel:
        if isinstance(name_or_id, int):
            return self.labels[name_or_id]
        return self.labels[self._label_index[name_or_id]]

    def label_id(self, name: str) -> int:
        return self._label_index[name]

    def base_labels(self) -> list:
        return sorted({lab.base for lab in self.labels})

    @property
    def initial(self) -> CompositeState:
        return tuple(comp.initial for comp in self.components)

    def check_state(self, cs: CompositeState) -> None:
        if len(cs) != len(self.components):
            raise StructureError(f"composite state {cs!r} has wrong arity")
        for local, comp in zip(cs, self.components):
            if not (isinstance(local, int) and 0 <= local < comp.num_states):
                raise StructureError(f"composite state {cs!r} has invalid local state {local!r}")

    def enabled(self, cs: CompositeState) -> list:
        """Enabled composite transitions as ``(label_id, successor)``, ascending by label."""
        local = self._local
        cand = set()
        for ci, s in enumerate(cs):
            cand.update(local[ci][s])
        out = []
        for lid in sorted(cand):
            nxt = list(cs)
            for ci in self._owners[lid]:
                dst = local[ci][cs[ci]].get(lid)
                if dst is None:
                    break
                nxt[ci] = dst
            else:
                out.append((lid, tuple(nxt)))
        return out

    def is_marked(self, cs: CompositeState) -> bool:
        return all(s in m for s, m in zip(cs, self._marked))

    def structurally_equal(self, other: "ControlProblem") -> bool:
        if self.name != other.name or self.params != other.params:
            return False
        if [(l.name, l.controllable) for l in self.labels] != [(l.name, l.controllable) for l in other.labels]:
            return False
        if len(self.components) != len(other.components):
            return False
        for a, b in zip(self.components, other.components):
            if (a.num_states, a.alphabet, a.transitions, a.initial, a.marked, a.name) != (
                b.num_states, b.alphabet, b.transitions, b.initial, b.marked, b.name,
            ):
                return False
        return True

    def __repr__(self):
        return f"ControlProblem({self.name!r}, components={len(self.components)}, labels={len(self.labels)})"


def enabled_transitions(cs: CompositeState, p: ControlProblem) -> list:
    """Composite transitions enabled at ``cs`` as ``(EventLabel, successor)`` pairs."""
    p.check_state(cs)
    return [(p.labels[lid], nxt) for lid, nxt in p.enabled(cs)]


def is_marked(cs: CompositeState, p: ControlProblem) -> bool:
    p.check_state(cs)
    return p.is_marked(cs)


def make_problem(
    name: str,
    components: Iterable[tuple],
    controllable: Mapping[str, bool],
    params=None,
) -> ControlProblem:
    """Shorthand: each component is ``(num_states, transitions, initial, marked[, alphabet])``
    with transitions as ``[(src, label, dst), ...]``."""
    comps = []
    for i, spec in enumerate(components):
        num, trans, init, marked = spec[:4]
        tmap = {}
        for src, lab, dst in trans:
            if (src, lab) in tmap:
                raise StructureError(f"component {i}: nondeterministic on ({src}, {lab})")
            tmap[(src, lab)] = dst
        alphabet = set(spec[4]) if len(spec) > 4 else {lab for _, lab, _ in trans}
        comps.append(ComponentAutomaton(num, frozenset(alphabet), tmap, init, frozenset(marked), name=f"C{i}"))
    return ControlProblem(name, comps, controllable, params)
