import csv

import pytest

from otfsynth import harness
from otfsynth.domains import generate_instance
from otfsynth.features import SchemaMismatch, build_schema
from otfsynth.neural import init_network
from otfsynth.rl import TrainConfig
from otfsynth.specio import save_spec


def test_sample_checkpoints():
    assert harness.sample_checkpoints(list(range(100))) == list(range(100))
    assert harness.sample_checkpoints(list(range(199))) == list(range(0, 199, 2))
    assert harness.sample_checkpoints([5, 6, 7]) == [5, 6, 7]
    s = harness.sample_checkpoints(list(range(1000)), 7)
    assert s[0] == 0 and s[-1] == 999 and len(s) == 7
    with pytest.raises(harness.ConfigError):
        harness.sample_checkpoints([])
    with pytest.raises(harness.ConfigError):
        harness.sample_checkpoints([1], 0)


def test_pick_best_rules():
    rows = [
        {"agent": "a", "solved": 3, "expanded": 10},
        {"agent": "b", "solved": 5, "expanded": 900},
        {"agent": "c", "solved": 4, "expanded": 1},
    ]
    assert harness.pick_best(rows) == "b"
    rows[2]["solved"] = 5
    assert harness.pick_best(rows) == "c"
    rows[1]["expanded"] = 1
    assert harness.pick_best(rows) == "b"  # full tie: earliest


def test_pick_by_reward_prefers_latest():
    rows = [{"agent": "a", "reward": -5}, {"agent": "b", "reward": -3}, {"agent": "c", "reward": -3}]
    assert harness.pick_by_reward(rows) == "c"


def test_prerequisites():
    assert harness.prerequisites(1, 1) == []
    assert harness.prerequisites(2, 3) == [(1, 3), (2, 2)]
    assert harness.prerequisites(2, 3, literal=True) == [(1, 3), (2, 2)]
    assert harness.prerequisites(3, 5, literal=True) == [(2, 5), (4, 3)]


def test_sweep_order_and_pruning():
    seen = []

    def run(n, k):
        seen.append((n, k))
        return n + k <= 4 and (n, k) != (1, 2)

    solved = harness.sweep(run, 4, 4)
    assert seen[0] == (1, 1)
    assert [a + b for a, b in seen] == sorted(a + b for a, b in seen)
    assert (1, 3) not in seen and (2, 2) not in seen  # (1,2) failed
    assert (2, 1) in seen and (3, 1) in seen
    assert solved == {(1, 1), (2, 1), (3, 1)}
    # unbounded sweep stops once a diagonal attempts nothing
    assert harness.sweep(lambda n, k: n + k < 5, None, None) == {(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)}


def _agent(domain="TransferLine", seed=0, name="x"):
    s = build_schema(generate_instance(domain, 1, 1))
    return harness.Agent(name, init_network(s.dimension, seed), s, 0)


def test_select_agent_report():
    agents = [_agent(seed=i, name=f"a{i}") for i in range(3)]
    rep = harness.select_agent(agents, "TransferLine", max_n=2, max_k=2, budget=300)
    assert [r["agent"] for r in rep.rows] == ["a0", "a1", "a2"]
    assert rep.selected == harness.pick_best(rep.rows)
    for a in agents:
        assert rep.outcomes[a.id][0][:2] == (1, 1)


def test_select_agent_schema_mismatch():
    with pytest.raises(SchemaMismatch):
        harness.select_agent([_agent("CraftedGate")], "TransferLine", 1, 1, 100)


def test_evaluate_trivial_and_timeout(tmp_path):
    rep = harness.evaluate(_agent(), "TransferLine", grid=[(1, 1)], timeout=60)
    assert rep.solved["agent"] == 1
    rep = harness.evaluate(_agent(), "TransferLine", max_n=2, max_k=2, timeout=0, baselines=("bfs",), out_csv=tmp_path / "e.csv")
    assert rep.solved == {"agent": 0, "bfs": 0}
    assert all(r["solved"] == 0 for r in rep.rows)
    rows = list(csv.DictReader(open(tmp_path / "e.csv")))
    assert len(rows) == 2 and list(rows[0]) == harness.RESULT_FIELDS


def test_random_baseline_statistics():
    rep = harness.evaluate(
        None, "CraftedGate", max_n=3, max_k=3, timeout=None, baselines=("random",), random_seeds=range(10)
    )
    assert len(rep.solved["random"]) == 10
    assert set(rep.summary["random"]) == {"mean", "std"}
    assert all(r["time_ms"] == "" for r in rep.rows)
    with pytest.raises(harness.ConfigError):
        harness.evaluate(None, "CraftedGate", grid=[(1, 1)], baselines=("greedy",))


def test_domain_from_directory(tmp_path):
    for n, k in [(1, 1), (1, 2), (2, 1)]:
        save_spec(generate_instance("CraftedGate", n, k), tmp_path / f"cg-{n}-{k}.json")
    dom = harness.Domain.from_directory(tmp_path)
    rep = harness.evaluate(None, dom, timeout=None, baselines=("bfs",))
    assert {(r["n"], r["k"]) for r in rep.rows} == {(1, 1), (1, 2), (2, 1)}
    with pytest.raises(harness.ConfigError):
        harness.Domain.from_directory(tmp_path / "empty")


def test_pipeline_requires_selection(tmp_path):
    cfg = harness.config_from_dict({"train": {"total_steps": 10}})
    assert cfg.selection is None
    with pytest.raises(harness.ConfigError, match="selection"):
        harness.pipeline("TransferLine", cfg, tmp_path)
    with pytest.raises(harness.ConfigError):
        harness.config_from_dict({"bogus": 1})


def test_config_round_trip():
    cfg = harness.PipelineConfig()
    assert harness.config_to_dict(harness.config_from_dict(harness.config_to_dict(cfg))) == harness.config_to_dict(cfg)


def test_small_pipeline(tmp_path):
    cfg = harness.PipelineConfig(
        TrainConfig(total_steps=600, checkpoint_every=200, prefill_steps=100),
        harness.SelectionConfig(max_n=2, max_k=2, budget=300),
        harness.EvaluationConfig(timeout=None, max_n=2, max_k=2, random_seeds=(0, 1)),
    )
    out = harness.pipeline("TransferLine", cfg, tmp_path)
    for name in ("config.json", "selection.csv", "evaluation_rl.csv", "evaluation_rlns.csv", "summary.json"):
        assert (tmp_path / name).exists()
    assert {"rl", "rlns", "bfs", "lifo", "random"} <= set(out["summary"]["solved"])
