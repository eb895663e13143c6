import numpy as np
import pytest
from pydantic import ValidationError

from safe_evolver.config import EvolutionConfig
from safe_evolver.core.benchmarks import builtin_controller, builtin_task, reward_of
from safe_evolver.core.errors import CompositionError, UsageError
from safe_evolver.core.fsm_format import parse_fsm
from safe_evolver.core.genome import random_controller
from safe_evolver.core.machines import step
from safe_evolver.core.product import compose
from safe_evolver.core.safety import ModelCheckingGate, check_safe
from safe_evolver.core.simulator import PlantSimulator, episode_score, evaluate, run_episode


def test_tank_task(tank):
    assert tank.plant.n_states == 10
    assert set(tank.plant.hazards) == {"overflow", "underflow"}
    assert tank.plant.hazards["overflow"] == (tank.plant.state_index["l9"],)
    assert tank.default_property.atoms <= set(tank.plant.hazards)
    assert tank.plant.inputs == ("fill", "drain", "hold")
    assert tank.plant.outputs == ("lo", "ok", "hi")
    assert tank.reference_controller.structurally_equal(builtin_controller("tank_reference"))


def test_rover_task():
    rover = builtin_task("rover")
    assert rover.plant.n_states == 16
    assert len(rover.plant.hazards["crater"]) == 2
    assert rover.default_property.atoms == {"crater"}
    assert rover.reference_controller is None
    assert sum(rover.reward) == 1.0


def test_unknown_names():
    with pytest.raises(UsageError):
        builtin_task("pendulum")
    with pytest.raises(UsageError):
        builtin_controller("tank_best")


@pytest.mark.parametrize("name", ["tank", "rover"])
def test_plants_are_input_enabled(name):
    plant = builtin_task(name).plant
    for p in range(plant.n_states):
        assert plant.emit[p] is not None
        for u in range(len(plant.inputs)):
            assert plant.successors[p][u]


def test_tank_rewards(tank):
    assert reward_of(tank, "l5") == 1.0
    assert reward_of(tank, "l0") == 0.0
    assert reward_of(tank, 4) == 1.0
    assert sum(tank.reward) == 3.0
    with pytest.raises(UsageError):
        reward_of(tank, "l10")


def test_reference_fitness_is_one(reference, tank):
    cfg = EvolutionConfig(episodes_per_evaluation=10, episode_length=50)
    assert evaluate(reference, tank.plant, cfg, np.random.default_rng(0)) == 1.0
    assert PlantSimulator(tank.plant, cfg).evaluate(reference, np.random.default_rng(1)) == 1.0


LOW_HOLDER = b"fsm low_holder\ninputs: lo ok hi\noutputs: fill drain hold\nstates: s0\ninitial: s0\n" \
    b"trans: s0 lo -> s0 / hold\ntrans: s0 ok -> s0 / drain\ntrans: s0 hi -> s0 / drain\n"


def test_fitness_outside_the_band_is_zero(tank):
    # started at l3, holding under lo only ever sinks towards l0
    low_holder = parse_fsm(LOW_HOLDER)
    plant = tank.plant.model_copy(update={"initial": (tank.plant.state_index["l3"],)})
    cfg = EvolutionConfig(episodes_per_evaluation=5, episode_length=40)
    assert evaluate(low_holder, plant, cfg, np.random.default_rng(0)) == 0.0
    for r in run_episode(low_holder, plant, 40, np.random.default_rng(1)):
        assert r.next_plant_state in ("l0", "l1", "l2", "l3")
        assert r.actuator == "hold"


def test_fitness_without_rewards_is_zero(reference, tank):
    plant = tank.plant.model_copy(update={"rewards": ()})
    cfg = EvolutionConfig(episodes_per_evaluation=3, episode_length=20)
    assert evaluate(reference, plant, cfg, np.random.default_rng(0)) == 0.0


def test_empty_episode(reference, tank):
    assert episode_score(reference, tank.plant, 0, np.random.default_rng(0)) == 0.0
    assert run_episode(reference, tank.plant, 0, np.random.default_rng(0)) == []


def test_episode_follows_the_loop(reference, tank):
    plant = tank.plant
    records = run_episode(reference, plant, 30, np.random.default_rng(3))
    assert [r.step for r in records] == list(range(30))
    assert records[0].plant_state in ("l4", "l5", "l6")
    assert records[0].controller_state == "s0"
    for r, nxt in zip(records, records[1:]):
        assert nxt.plant_state == r.next_plant_state
        assert plant.outputs[plant.emit[plant.state_index[r.plant_state]]] == r.sensor
        c_next, actuator = step(reference, r.controller_state, r.sensor)
        assert actuator == r.actuator
        assert nxt.controller_state == reference.states[c_next]
        u = plant.input_index[r.actuator]
        assert plant.state_index[r.next_plant_state] in plant.successors[plant.state_index[r.plant_state]][u]


def test_episodes_are_reproducible(reference, tank):
    a = run_episode(reference, tank.plant, 25, np.random.default_rng(9))
    b = run_episode(reference, tank.plant, 25, np.random.default_rng(9))
    assert a == b


def test_simulation_rejects_mismatched_alphabets(minimal, tank):
    with pytest.raises(CompositionError):
        run_episode(minimal, tank.plant, 5, np.random.default_rng(0))


def _safe_tank_controllers(tank, count=200):
    gate = ModelCheckingGate(tank.plant, tank.default_property)
    rng = np.random.default_rng(77)
    found = [tank.reference_controller]
    for _ in range(count):
        fsm = random_controller(rng, tank.plant.outputs, tank.plant.inputs, int(rng.integers(1, 4)))
        if gate.check(fsm).safe:
            found.append(fsm)
    return found


def _hazard_states(plant):
    return {s for members in plant.hazards.values() for s in members}


def _exhaustive_hazard_free(controller, plant, depth):
    """Every disturbance resolution up to `depth` steps avoids hazard states."""
    hazards = _hazard_states(plant)
    frontier = {(controller.initial, p) for p in plant.initial}
    for _ in range(depth):
        if any(p in hazards for _, p in frontier):
            return False
        nxt = set()
        for c, p in frontier:
            c_next, actuator = step(controller, c, plant.outputs[plant.emit[p]])
            for q in plant.successors[p][plant.input_index[actuator]]:
                nxt.add((c_next, q))
        frontier = nxt
    return not any(p in hazards for _, p in frontier)


def test_safe_controllers_never_meet_hazards_exhaustively(tank):
    for controller in _safe_tank_controllers(tank):
        assert _exhaustive_hazard_free(controller, tank.plant, 12)


def test_unsafe_controller_meets_a_hazard(always_fill, tank):
    assert not check_safe(compose(always_fill, tank.plant), tank.default_property).safe
    assert not _exhaustive_hazard_free(always_fill, tank.plant, 12)


def _random_episodes_hazard_free(controllers, plant, episodes, length):
    names = {plant.states[s] for s in _hazard_states(plant)}
    rng = np.random.default_rng(5)
    for i in range(episodes):
        for r in run_episode(controllers[i % len(controllers)], plant, length, rng):
            assert r.plant_state not in names and r.next_plant_state not in names


def test_safe_controllers_never_meet_hazards_in_random_episodes(tank):
    _random_episodes_hazard_free(_safe_tank_controllers(tank, 50), tank.plant, 500, 60)


@pytest.mark.slow
def test_safe_controllers_never_meet_hazards_in_many_episodes(tank):
    _random_episodes_hazard_free(_safe_tank_controllers(tank), tank.plant, 10_000, 100)


def test_tasks_are_frozen(tank):
    assert builtin_task("tank") is tank
    with pytest.raises(ValidationError):
        tank.name = "pond"
