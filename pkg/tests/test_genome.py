import numpy as np
import pytest

from safe_evolver.config import EvolutionConfig, MutationWeights
from safe_evolver.core import rng as streams
from safe_evolver.core.genome import FALLBACK, MUTATIONS, applicable_mutations, mutate, random_controller
from safe_evolver.core.machines import validate_controller

SENSORS = ("lo", "ok", "hi")
ACTUATORS = ("fill", "drain", "hold")


def _valid(fsm, cfg):
    return validate_controller(fsm).ok and 1 <= fsm.n_states <= cfg.max_states


def test_random_controller_is_valid():
    rng = np.random.default_rng(0)
    for n in range(1, 9):
        fsm = random_controller(rng, SENSORS, ACTUATORS, n)
        assert validate_controller(fsm).ok
        assert fsm.states == tuple(f"s{i}" for i in range(n))
    with pytest.raises(ValueError):
        random_controller(rng, SENSORS, ACTUATORS, 0)


def test_applicable_mutations():
    cfg = EvolutionConfig(max_states=2)
    rng = np.random.default_rng(1)
    one = random_controller(rng, SENSORS, ACTUATORS, 1)
    two = random_controller(rng, SENSORS, ACTUATORS, 2)
    assert "delete_state" not in applicable_mutations(one, cfg)
    assert "add_state" in applicable_mutations(one, cfg)
    assert "add_state" not in applicable_mutations(two, cfg)
    assert "delete_state" in applicable_mutations(two, cfg)

    only_initial = cfg.model_copy(update={"mutation_weights": MutationWeights(
        add_state=0, delete_state=0, change_transition=0, change_output=0, change_initial=1)})
    assert applicable_mutations(two, only_initial) == ["change_initial"]


def test_fallback_when_nothing_applies():
    cfg = EvolutionConfig(max_states=1, mutation_weights=MutationWeights(
        add_state=1, delete_state=0, change_transition=0, change_output=0, change_initial=0))
    rng = np.random.default_rng(2)
    parent = random_controller(rng, SENSORS, ACTUATORS, 1)
    assert applicable_mutations(parent, cfg) == []
    child, tag = mutate(parent, rng, cfg)
    assert tag == FALLBACK
    assert _valid(child, cfg)


def test_add_and_delete_state():
    cfg = EvolutionConfig(max_states=8, mutation_weights=MutationWeights(
        add_state=1, delete_state=0, change_transition=0, change_output=0, change_initial=0))
    rng = np.random.default_rng(3)
    parent = random_controller(rng, SENSORS, ACTUATORS, 3)
    child, tag = mutate(parent, rng, cfg)
    assert tag == "add_state"
    assert child.n_states == 4
    assert child.states[:3] == parent.states
    # the new state is wired in from somewhere
    assert any(3 in row for row in child.next_state[:3])

    shrink = cfg.model_copy(update={"mutation_weights": MutationWeights(
        add_state=0, delete_state=1, change_transition=0, change_output=0, change_initial=0)})
    smaller, tag = mutate(child, rng, shrink)
    assert tag == "delete_state"
    assert smaller.n_states == 3
    assert _valid(smaller, cfg)


def test_mutate_is_deterministic_per_stream():
    cfg = EvolutionConfig()
    parent = random_controller(np.random.default_rng(4), SENSORS, ACTUATORS, 5)
    a = mutate(parent, streams.stream(9, 3, 1, 0, streams.MUTATION), cfg)
    b = mutate(parent, streams.stream(9, 3, 1, 0, streams.MUTATION), cfg)
    assert a[1] == b[1]
    assert a[0].structurally_equal(b[0])


def test_streams_are_keyed_not_sequential():
    first = streams.stream(1, 0, 0, 0, streams.MUTATION).random(4)
    assert np.array_equal(first, streams.stream(1, 0, 0, 0, streams.MUTATION).random(4))
    assert not np.array_equal(first, streams.stream(1, 0, 0, 0, streams.EVALUATION).random(4))
    assert not np.array_equal(first, streams.stream(1, 0, 1, 0, streams.MUTATION).random(4))
    assert not np.array_equal(first, streams.stream(2, 0, 0, 0, streams.MUTATION).random(4))


def _closure_run(draws, seed):
    cfg = EvolutionConfig(max_states=6)
    rng = np.random.default_rng(seed)
    parent = random_controller(rng, SENSORS, ACTUATORS, 3)
    seen = set()
    for _ in range(draws):
        child, tag = mutate(parent, rng, cfg)
        assert tag in MUTATIONS
        assert _valid(child, cfg)
        seen.add(tag)
        # random walk, restarting now and then so every size is visited
        parent = child if rng.random() < 0.9 else random_controller(rng, SENSORS, ACTUATORS, int(rng.integers(1, 7)))
    return seen


def test_mutation_closure():
    assert _closure_run(2_000, 10) == set(MUTATIONS)


@pytest.mark.slow
def test_mutation_closure_full():
    assert _closure_run(100_000, 11) == set(MUTATIONS)


@pytest.mark.slow
def test_random_controller_closure():
    rng = np.random.default_rng(12)
    for _ in range(100_000):
        fsm = random_controller(rng, SENSORS, ACTUATORS, int(rng.integers(1, 9)))
        assert validate_controller(fsm).ok
