import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import chain
from otfsynth.domains import generate_instance
from otfsynth.engine import UsageError, new_exploration
from otfsynth.features import build_schema
from otfsynth.neural import QNetwork, init_network
from otfsynth.rl import (
    Experience,
    ReplayBuffer,
    TrainConfig,
    Trainer,
    epsilon,
    episode_reward,
    greedy_action,
    optimal_expansions,
    td_target,
    td_targets,
    train,
)


def test_epsilon_schedule():
    cfg = TrainConfig()
    assert epsilon(0, cfg) == 1.0
    assert epsilon(125_000, cfg) == pytest.approx(0.505)
    assert epsilon(250_000, cfg) == pytest.approx(0.01)
    assert epsilon(10**7, cfg) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        epsilon(-1, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(epsilon_start=0.1, epsilon_end=0.5)


def test_episode_reward(P1):
    es = new_exploration(P1)
    es.expand(0)
    es.expand(0)
    assert episode_reward(es) == -2


def _line_net():
    # single hidden unit reading feature 0: Q(x) = -x0
    return QNetwork(np.array([[1.0, 0.0]]), np.zeros(1), np.array([-1.0]), 0.0)


def test_td_target():
    q = _line_net()
    assert td_target(q, Experience(np.zeros(2), np.zeros((0, 2)), True)) == -1.0
    zero = QNetwork(np.zeros((1, 2)), np.zeros(1), np.zeros(1), 0.0)
    live = Experience(np.zeros(2), np.array([[3.0, 0.0], [5.0, 1.0]]), False)
    assert td_target(zero, live) == -1.0
    assert td_target(q, live) == pytest.approx(-4.0)
    batch = [live, Experience(np.zeros(2), np.zeros((0, 2)), True), Experience(np.zeros(2), np.array([[7.0, 0.0]]), False)]
    assert np.allclose(td_targets(q, batch), [td_target(q, e) for e in batch])


def test_experience_terminal_consistency():
    with pytest.raises(ValueError):
        Experience(np.zeros(2), np.ones((1, 2)), True)
    with pytest.raises(ValueError):
        Experience(np.zeros(2), np.zeros((0, 2)), False)


def test_greedy_action():
    p = generate_instance("TransferLine", 2, 1)
    s = build_schema(p)
    es = new_exploration(p)
    for _ in range(4):
        es.expand(len(es) - 1)
    assert len(es) > 1
    flat = init_network(s.dimension, 0)
    flat.W2[:] = 0
    assert greedy_action(flat, es, s) == 0
    from otfsynth.features import frontier_features

    X = frontier_features(es, s)
    target = len(es) - 1
    # score only the columns where the last row differs from every other row
    w = np.zeros(s.dimension)
    diff = np.flatnonzero((X[target] == 1) & (X[:target] == 0).any(axis=0))
    assert len(diff)
    w[diff] = 1.0
    pick = QNetwork(w[None, :], np.zeros(1), np.ones(1), 0.0)
    values = X @ w
    assert greedy_action(pick, es, s) == int(np.argmax(values))


def test_greedy_singleton(P1):
    es = new_exploration(P1)
    q = init_network(build_schema(P1).dimension, 9)
    assert greedy_action(q, es, build_schema(P1)) == 0
    es.expand(0)
    es.expand(0)
    with pytest.raises(UsageError):
        greedy_action(q, es, build_schema(P1))


def test_replay_ring_and_sampling():
    buf = ReplayBuffer(3)
    items = [Experience(np.full(1, i), np.zeros((0, 1)), True) for i in range(5)]
    for e in items:
        buf.add(e)
    assert len(buf) == 3
    assert {int(e.taken[0]) for e in buf.items} == {2, 3, 4}
    assert int(buf.oldest().taken[0]) == 2
    rng = np.random.default_rng(0)
    picked = buf.sample(rng, 3)
    assert len({id(e) for e in picked}) == 3
    with pytest.raises(UsageError):
        ReplayBuffer(2).sample(rng, 1)


def test_replay_uniform():
    buf = ReplayBuffer(50)
    for i in range(50):
        buf.add(Experience(np.full(1, i), np.zeros((0, 1)), True))
    rng = np.random.default_rng(3)
    counts = np.zeros(50)
    for _ in range(4000):
        for e in buf.sample(rng, 10):
            counts[int(e.taken[0])] += 1
    assert chisquare(counts).pvalue > 0.001


def test_zero_steps_prefills(P1):
    t = Trainer(generate_instance("TransferLine", 1, 1), TrainConfig(total_steps=0, prefill_steps=50))
    res = t.train()
    assert [c["step"] for c in res.checkpoints] == [0]
    assert len(t.buffer) >= 50 and res.steps == 0


def test_step_cap_leaves_no_terminal():
    p = generate_instance("TransferLine", 2, 2)
    t = Trainer(p, TrainConfig(total_steps=30, prefill_steps=20, episode_step_cap=2))
    t.train()
    assert not any(e.terminal for e in t.buffer.items)
    assert all(row[2] == 2 for row in t.episodes)


def test_training_is_deterministic(tmp_path):
    p = generate_instance("TransferLine", 1, 1)
    cfg = TrainConfig(total_steps=2000, checkpoint_every=500, seed=11)
    train(p, cfg, tmp_path / "a")
    train(p, cfg, tmp_path / "b")
    fa = sorted(x.relative_to(tmp_path / "a") for x in (tmp_path / "a").rglob("*") if x.is_file())
    fb = sorted(x.relative_to(tmp_path / "b") for x in (tmp_path / "b").rglob("*") if x.is_file())
    assert fa == fb and len(fa) == 6
    for rel in fa:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_optimal_expansions(P1, P2):
    assert optimal_expansions(P1) == 2
    assert optimal_expansions(P2) == 1
    assert optimal_expansions(chain(3)) == 4
    with pytest.raises(UsageError):
        optimal_expansions(generate_instance("TransferLine", 2, 2))
