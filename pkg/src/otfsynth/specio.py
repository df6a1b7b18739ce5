"""JSON interchange format for modular control problems.

Schema::

    {
      "name": "...",
      "labels": [{"name": "start.1", "controllable": true}, ...],
      "components": [
        {"name": "M1", "states": 2, "initial": 0, "marked": [0],
         "alphabet": ["start.1", "finish.1"],          # optional
         "labels": [{"name": ..., "controllable": ...}],  # optional, must agree
         "transitions": [[0, "start.1", 1], [1, "finish.1", 0]]}
      ],
      "params": {"n": 1, "k": 1}                        # optional
    }

``states`` is either a count or a list of state names (transitions may then
refer to states by name). A component's alphabet defaults to the labels on its
transitions.
"""

from __future__ import annotations

import json
from pathlib import Path

from .des import ComponentAutomaton, ControlProblem, StructureError

FORMAT_VERSION = 1


class SpecError(ValueError):
    """Invalid problem document. ``line``/``column`` are set for syntax errors."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


def _require(obj, key, where):
    if key not in obj:
        raise SpecError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_spec(doc: str) -> ControlProblem:
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise SpecError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from None
    return problem_from_dict(data)


def problem_from_dict(data: dict) -> ControlProblem:
    if not isinstance(data, dict):
        raise SpecError("top level must be an object")
    name = str(data.get("name", "problem"))
    controllable: dict = {}

    def declare(entry, where):
        lab = _require(entry, "name", where)
        flag = bool(_require(entry, "controllable", where))
        prev = controllable.setdefault(lab, flag)
        if prev != flag:
            raise SpecError(f"{where}: label {lab!r} declared both controllable and uncontrollable")

    for entry in data.get("labels", []):
        declare(entry, "labels")

    comps_data = _require(data, "components", "document")
    if not isinstance(comps_data, list) or not comps_data:
        raise SpecError("components must be a non-empty list")
    comps = []
    for ci, cd in enumerate(comps_data):
        where = f"component {cd.get('name', ci)!r}"
        for entry in cd.get("labels", []):
            declare(entry, where)
        states = _require(cd, "states", where)
        if isinstance(states, int):
            names = None
            n = states
        else:
            names = {str(s): i for i, s in enumerate(states)}
            n = len(states)
        if n < 1:
            raise SpecError(f"{where}: needs at least one state")

        def sidx(v, names=names, n=n, where=where):
            if names is not None and isinstance(v, str):
                if v not in names:
                    raise SpecError(f"{where}: unknown state {v!r}")
                return names[v]
            if not isinstance(v, int) or not 0 <= v < n:
                raise SpecError(f"{where}: state {v!r} out of range")
            return v

        tmap = {}
        used = set()
        for tr in _require(cd, "transitions", where):
            if len(tr) != 3:
                raise SpecError(f"{where}: transition {tr!r} must be [src, label, dst]")
            src, lab, dst = sidx(tr[0]), str(tr[1]), sidx(tr[2])
            if (src, lab) in tmap and tmap[(src, lab)] != dst:
                raise SpecError(f"{where}: nondeterministic transitions on ({tr[0]!r}, {lab!r})")
            tmap[(src, lab)] = dst
            used.add(lab)
        alphabet = set(cd.get("alphabet", used))
        if not used <= alphabet:
            raise SpecError(f"{where}: transition labels {sorted(used - alphabet)} missing from alphabet")
        for lab in alphabet:
            if lab not in controllable:
                raise SpecError(f"{where}: label {lab!r} has no controllability declaration")
        try:
            comps.append(
                ComponentAutomaton(
                    n,
                    frozenset(alphabet),
                    tmap,
                    sidx(cd.get("initial", 0)),
                    frozenset(sidx(m) for m in cd.get("marked", [])),
                    name=str(cd.get("name", f"C{ci}")),
                )
            )
        except StructureError as exc:
            raise SpecError(str(exc)) from None
    params = data.get("params")
    if params is not None:
        params = (int(params["n"]), int(params["k"]))
    used_labels = set().union(*(c.alphabet for c in comps))
    return ControlProblem(name, comps, {l: controllable[l] for l in used_labels}, params)


def problem_to_dict(p: ControlProblem) -> dict:
    out = {
        "name": p.name,
        "labels": [{"name": l.name, "controllable": l.controllable} for l in p.labels],
        "components": [],
    }
    for c in p.components:
        out["components"].append(
            {
                "name": c.name,
                "states": c.num_states,
                "initial": c.initial,
                "marked": sorted(c.marked),
                "alphabet": sorted(c.alphabet),
                "transitions": [[s, l, d] for (s, l), d in sorted(c.transitions.items())],
            }
        )
    if p.params is not None:
        out["params"] = {"n": p.params[0], "k": p.params[1]}
    return out


def serialize_spec(p: ControlProblem) -> str:
    return json.dumps(problem_to_dict(p), indent=1) + "\n"


def load_spec(path) -> ControlProblem:
    return parse_spec(Path(path).read_text(encoding="utf-8"))


def save_spec(p: ControlProblem, path) -> None:
    write_atomic(path, serialize_spec(p))


def write_atomic(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def controller_to_dict(controller, problem: ControlProblem) -> dict:
    """State/choice table; states are written as lists of local indexes."""
    rows = [[list(s), c] for s, c in sorted(controller.choice.items())]
    return {"version": FORMAT_VERSION, "problem": problem.name, "choices": rows}


def graph_to_dict(g) -> dict:
    return {
        "version": FORMAT_VERSION,
        "states": [list(s) for s in g.states],
        "initial": g.initial,
        "marked": sorted(g.marked),
        "edges": [[s, l, d, bool(c)] for s, l, d, c in g.edges],
    }
