import numpy as np
import pytest

from otfsynth.des import make_problem
from otfsynth.domains import generate_instance
from otfsynth.engine import UsageError, new_exploration
from otfsynth.features import SchemaMismatch, build_schema, compute_features, describe, frontier_features


def test_dimension_and_base_labels():
    p = make_problem(
        "L", [(2, [(0, "land.1", 1), (1, "land.2", 0), (0, "take.1", 0)], 0, {0})],
        {"land.1": True, "land.2": True, "take.1": False},
    )
    s = build_schema(p)
    assert s.base_labels == ("land", "take") and s.dimension == 21
    assert build_schema(make_problem("one", [(1, [(0, "x", 0)], 0, {0})], {"x": True})).dimension == 19


def test_p1_initial_vector(P1):
    es = new_exploration(P1)
    s = build_schema(P1)
    d = describe(compute_features(es, es.frontier[0], s), s)
    assert d == {
        "event": [1], "incoming": [0], "controllable": [1], "marked": [0, 1], "phases": [0, 0, 0],
        "child": [0, 0, 0], "uncontrollable": [0, 1, 0, 1], "explored": [0, 0], "last_expanded": [0, 0],
    }


def test_p1_after_one_expansion(P1):
    es = new_exploration(P1)
    s = build_schema(P1)
    es.expand(0)
    d = describe(compute_features(es, es.frontier[0], s), s)
    assert d["marked"] == [1, 1]
    assert d["explored"] == [0, 0]
    assert d["last_expanded"] == [1, 0]
    assert d["incoming"] == [1]
    assert d["phases"] == [1, 0, 0]


def test_child_bits():
    # 0 -a-> 1 (marked, loop b); 0 -u-> 2 (dead, uncontrollable)
    p = make_problem(
        "C", [(3, [(0, "a", 1), (1, "b", 1), (0, "u", 2), (2, "v", 2)], 0, {1})],
        {"a": True, "b": True, "u": False, "v": True},
    )
    s = build_schema(p)
    es = new_exploration(p)
    order = [t.key()[1] for t in es.frontier]
    es.expand(order.index("a"))
    es.expand([t.key()[1] for t in es.frontier].index("b"))  # 1 wins
    assert (1,) in es.winning_states()
    blocks = s.blocks()
    X = frontier_features(es, s)
    for t, x in zip(es.frontier, X):
        if t.target in es.winning_states():
            assert list(x[blocks["child"]]) == [1, 0, 0]
    # target discovered but undecided
    es2 = new_exploration(p)
    es2.expand([t.key()[1] for t in es2.frontier].index("a"))
    for t, x in zip(es2.frontier, frontier_features(es2, s)):
        if t.key()[1] == "b":
            assert list(x[blocks["child"]]) == [0, 0, 1]


def test_frontier_matrix_rows_match_single(P1):
    p = generate_instance("TransferLine", 2, 2)
    s = build_schema(p)
    es = new_exploration(p)
    rng = np.random.default_rng(0)
    for _ in range(15):
        X = frontier_features(es, s)
        assert X.shape == (len(es), s.dimension)
        for i, t in enumerate(es.frontier):
            assert np.array_equal(X[i], compute_features(es, t, s))
        assert set(np.unique(X)) <= {0.0, 1.0}
        es.expand(int(rng.integers(len(es))))


def test_schema_mismatch_and_stale_transition(P1, P2):
    es = new_exploration(P1)
    other = build_schema(generate_instance("CraftedGate", 1, 1))
    with pytest.raises(SchemaMismatch):
        frontier_features(es, other)
    t = es.frontier[0]
    es.expand(0)
    with pytest.raises(UsageError):
        compute_features(es, t, build_schema(P1))


def test_last_expanded_mode_target(P1):
    s = build_schema(P1, "target")
    es = new_exploration(P1)
    es.expand(0)
    d = describe(frontier_features(es, s)[0], s)
    assert d["last_expanded"] == [1, 0]
    with pytest.raises(ValueError):
        build_schema(P1, "sideways")


def test_schema_round_trip():
    s = build_schema(generate_instance("DiningPhilosophers", 2, 2))
    assert type(s).from_dict(s.to_dict()) == s
