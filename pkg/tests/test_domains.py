import pytest

from otfsynth.domains import GENERATORS, generate_instance, generate_random
from otfsynth.features import build_schema
from otfsynth.oracle import full_compose, monolithic_synthesis

# frozen: (components, composed states, composed edges, verdict)
GOLDEN = {
    ("TransferLine", 1, 1): (3, 12, 22, "Winning"),
    ("TransferLine", 2, 2): (5, 128, 336, "Winning"),
    ("DiningPhilosophers", 2, 1): (4, 34, 60, "Winning"),
    ("DiningPhilosophers", 1, 1): (2, 3, 2, "Losing"),
    ("CraftedGate", 2, 3): None,
    ("CraftedGate", 3, 2): (4, 19, 30, "Losing"),
}


@pytest.mark.parametrize("key", [k for k, v in GOLDEN.items() if v])
def test_golden_compositions(key):
    p = generate_instance(*key)
    comps, n_states, n_edges, verdict = GOLDEN[key]
    g = full_compose(p)
    assert (len(p.components), len(g.states), len(g.edges)) == (comps, n_states, n_edges)
    assert monolithic_synthesis(p)[0] == verdict


def test_crafted_gate_realizability():
    assert monolithic_synthesis(generate_instance("CraftedGate", 3, 2))[0] == "Losing"
    assert monolithic_synthesis(generate_instance("CraftedGate", 2, 3))[0] == "Winning"


@pytest.mark.parametrize("domain", sorted(GENERATORS))
def test_schema_independent_of_parameters(domain):
    assert build_schema(generate_instance(domain, 2, 1)) == build_schema(generate_instance(domain, 3, 2))
    assert build_schema(generate_instance(domain, 2, 2)) == build_schema(generate_instance(domain, 5, 5))


def test_parameter_range():
    with pytest.raises(ValueError):
        generate_instance("TransferLine", 0, 1)
    with pytest.raises(ValueError):
        generate_instance("TransferLine", 1, 65)
    with pytest.raises(ValueError):
        generate_instance("Nope", 1, 1)


def test_random_generator_determinism_and_bound():
    assert generate_random(7).structurally_equal(generate_random(7))
    for seed in range(100):
        p = generate_random(seed, max_components=2, max_states=3)
        assert len(full_compose(p).states) <= 9
