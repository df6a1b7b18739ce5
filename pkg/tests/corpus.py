"""Shared problem corpus for the oracle-equivalence checks."""

import numpy as np

from otfsynth.domains import GENERATORS, generate_instance, generate_random
from otfsynth.engine import BFSPolicy, LIFOPolicy, RandomPolicy, build_controller, new_exploration
from otfsynth.kernel import UNDECIDED
from otfsynth.oracle import full_compose

MAX_STATES = 20_000
RANDOM_PROBLEMS = 100
RANDOM_SEEDS = 10


def corpus():
    """``(problem, composed graph)`` pairs: seeded random problems plus the domain grid."""
    out = []
    for seed in range(RANDOM_PROBLEMS):
        p = generate_random(seed)
        out.append((p, full_compose(p)))
    for domain in sorted(GENERATORS):
        for n in (1, 2, 3):
            for k in (1, 2, 3):
                p = generate_instance(domain, n, k)
                g = full_compose(p, cap=MAX_STATES)
                out.append((p, g))
    return out


def policies():
    return [RandomPolicy(s) for s in range(RANDOM_SEEDS)] + [BFSPolicy(), LIFOPolicy()]


def explore_fully(p, policy, kernel_cls=None):
    """Run ``policy`` past the verdict until the frontier is empty.

    Returns ``(verdict, controller at verdict time, final state, monotone)``;
    ``monotone`` is False if any state's status ever changed once decided.
    """
    policy.reset(p)
    es = new_exploration(p, kernel_cls)
    es.allow_after_verdict = True
    verdict = es.verdict if es.done else None
    controller = build_controller(es) if verdict == "Winning" else None
    monotone = True
    prev = es.status.view.copy()
    while len(es):
        es.expand(policy.select(es))
        cur = es.status.view
        decided = prev != UNDECIDED
        if not np.array_equal(cur[: len(prev)][decided], prev[decided]):
            monotone = False
        prev = cur.copy()
        if verdict is None and es.done:
            verdict = es.verdict
            controller = build_controller(es) if verdict == "Winning" else None
    return verdict, controller, es, monotone


__all__ = ["corpus", "explore_fully", "policies"]
