"""Parametric benchmark domains and a seeded random problem generator.

Every domain keeps one base-label vocabulary for all ``(n, k)``: instance
indexes only ever appear as ``.i`` suffixes.
"""

from __future__ import annotations

import random

from .des import ComponentAutomaton, ControlProblem

DOMAINS = ("TransferLine", "DiningPhilosophers", "CraftedGate")
MAX_PARAM = 64


def _comp(name, n_states, trans, marked, initial=0, alphabet=None):
    tmap = {(s, l): d for s, l, d in trans}
    alpha = frozenset(alphabet if alphabet is not None else {l for _, l, _ in trans})
    return ComponentAutomaton(n_states, alpha, tmap, initial, frozenset(marked), name=name)


def _check(n, k):
    if not (isinstance(n, int) and isinstance(k, int)) or not (1 <= n <= MAX_PARAM and 1 <= k <= MAX_PARAM):
        raise ValueError(f"parameters (n={n}, k={k}) outside supported range 1..{MAX_PARAM}")


def transfer_line(n: int, k: int) -> ControlProblem:
    """``n`` machines in series separated by capacity-``k`` buffers, then a test
    unit that accepts parts or sends them back to the first buffer.

    Machines: ``start.i`` (controllable) then ``finish.i`` (uncontrollable).
    A finish into a full buffer overflows it into a dead state.
    """
    _check(n, k)
    comps = []
    ctrl = {}
    for i in range(1, n + 1):
        comps.append(_comp(f"M{i}", 2, [(0, f"start.{i}", 1), (1, f"finish.{i}", 0)], [0]))
        ctrl[f"start.{i}"] = True
        ctrl[f"finish.{i}"] = False
    for i in range(1, n + 1):
        put = [f"finish.{i}"] + (["reject"] if i == 1 else [])
        take = f"start.{i + 1}" if i < n else "test"
        overflow = k + 1
        trans = []
        for c in range(k + 1):
            for lab in put:
                trans.append((c, lab, c + 1 if c < k else overflow))
            if c > 0:
                trans.append((c, take, c - 1))
        comps.append(_comp(f"B{i}", k + 2, trans, [0], alphabet=set(put) | {take}))
    comps.append(_comp("TU", 2, [(0, "test", 1), (1, "accept", 0), (1, "reject", 0)], [0]))
    ctrl.update(test=True, accept=False, reject=False)
    return ControlProblem(f"TransferLine-{n}-{k}", comps, ctrl, (n, k))


def dining_philosophers(n: int, k: int) -> ControlProblem:
    """``n`` philosophers around ``n`` forks; after eating each one performs ``k``
    etiquette steps before thinking again. Only ``hungry`` and ``eat`` are
    uncontrollable."""
    _check(n, k)
    comps = []
    ctrl = {}
    for i in range(1, n + 1):
        steps = [(6 + j, f"step.{i}", 6 + j + 1 if j + 1 < k else 0) for j in range(k)]
        trans = [
            (0, f"hungry.{i}", 1),
            (1, f"left.{i}", 2),
            (2, f"right.{i}", 3),
            (3, f"eat.{i}", 4),
            (4, f"dropl.{i}", 5),
            (5, f"dropr.{i}", 6),
        ] + steps
        comps.append(_comp(f"P{i}", 6 + k, trans, [0]))
        ctrl.update({f"hungry.{i}": False, f"eat.{i}": False})
        for lab in ("left", "right", "dropl", "dropr", "step"):
            ctrl[f"{lab}.{i}"] = True
    for j in range(1, n + 1):
        prev = (j - 2) % n + 1  # philosopher whose right fork is j
        trans = [(0, f"left.{j}", 1), (1, f"dropl.{j}", 0), (0, f"right.{prev}", 2), (2, f"dropr.{prev}", 0)]
        comps.append(_comp(f"F{j}", 3, trans, [0]))
    return ControlProblem(f"DiningPhilosophers-{n}-{k}", comps, ctrl, (n, k))


def crafted_gate(n: int, k: int) -> ControlProblem:
    """``n`` demands must all be served and acknowledged before the gate resets,
    but the gate only holds ``k`` service tokens: realizable iff ``n <= k``."""
    _check(n, k)
    comps = []
    ctrl = {"reset": False}
    for i in range(1, n + 1):
        comps.append(_comp(f"D{i}", 3, [(0, f"serve.{i}", 1), (1, f"ack.{i}", 2), (2, "reset", 0)], [0]))
        ctrl[f"serve.{i}"] = True
        ctrl[f"ack.{i}"] = False
    trans = []
    for tokens in range(1, k + 1):
        for i in range(1, n + 1):
            trans.append((tokens, f"serve.{i}", tokens - 1))
    for tokens in range(k + 1):
        trans.append((tokens, "reset", k))
    comps.append(_comp("Gate", k + 1, trans, [k], initial=k))
    return ControlProblem(f"CraftedGate-{n}-{k}", comps, ctrl, (n, k))


GENERATORS = {
    "TransferLine": transfer_line,
    "DiningPhilosophers": dining_philosophers,
    "CraftedGate": crafted_gate,
}


def generate_instance(domain: str, n: int, k: int) -> ControlProblem:
    try:
        gen = GENERATORS[domain]
    except KeyError:
        raise ValueError(f"unknown domain {domain!r}; choose from {', '.join(DOMAINS)}") from None
    return gen(n, k)


def generate_random(seed: int, max_components: int = 3, max_states: int = 4, max_labels: int = 4) -> ControlProblem:
    """Seeded random problem.

    Each component has a path through all its local states (so it is locally
    reachable) plus random extra transitions; shared labels still synchronize,
    so the product may block.
    """
    rng = random.Random(seed)
    n_labels = rng.randint(1, max_labels)
    labels = [f"e{i}" for i in range(n_labels)]
    ctrl = {l: rng.random() < 0.6 for l in labels}
    comps = []
    for ci in range(rng.randint(1, max_components)):
        n_states = rng.randint(1, max_states)
        alphabet = rng.sample(labels, rng.randint(1, n_labels))
        trans = {}
        order = [0] + rng.sample(range(1, n_states), n_states - 1)
        for a, b in zip(order, order[1:]):
            trans[(a, rng.choice(alphabet))] = b
        for s in range(n_states):
            for lab in alphabet:
                if (s, lab) not in trans and rng.random() < 0.35:
                    trans[(s, lab)] = rng.randrange(n_states)
        if not trans:
            trans[(0, rng.choice(alphabet))] = 0
        marked = {s for s in range(n_states) if rng.random() < 0.4}
        comps.append(ComponentAutomaton(n_states, frozenset(alphabet), trans, 0, frozenset(marked), name=f"R{ci}"))
    used = set().union(*(c.alphabet for c in comps))
    return ControlProblem(f"Random-{seed}", comps, {l: ctrl[l] for l in used})
