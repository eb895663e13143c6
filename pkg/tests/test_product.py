from collections import deque

import numpy as np
import pytest

from safe_evolver.core.errors import CompositionError, UsageError
from safe_evolver.core.machines import Plant
from safe_evolver.core.product import StateSet, TransitionGraph, compose, controller_graph


def _loop_plant():
    return Plant(
        name="loop", inputs=("y",), outputs=("x",), states=("p0",), initial=(0,),
        emit=(0,), successors=(((0,),),),
    )


def test_single_state_loop(minimal):
    system = compose(minimal, _loop_plant())
    assert system.n_states == 1
    assert system.successors(0) == [0]
    assert list(system.initial) == [0]
    assert system.state_name(0) == "(s0,p0)"


def test_reference_tank_product(reference, tank):
    system = compose(reference, tank.plant)
    assert system.n_states == 7
    assert system.n_states <= reference.n_states * tank.plant.n_states
    assert {tank.plant.states[p] for _, p in system.pairs} == {"l4", "l5", "l6"}
    assert len(system.initial) == 3
    # hazard labels exist but hold nowhere in the reachable part
    assert set(system.valuation) == {"overflow", "underflow"}
    assert not system.valuation["overflow"].any()
    assert not system.valuation["underflow"].any()


def test_always_fill_product_reaches_overflow(always_fill, tank):
    system = compose(always_fill, tank.plant)
    assert system.n_states == 6
    overflow = [system.state_name(s) for s in np.flatnonzero(system.valuation["overflow"])]
    assert overflow == ["(s0,l9)"]


def _expected_successors(controller, plant, c, p):
    sensor = plant.outputs[plant.emit[p]]
    a = controller.inputs.index(sensor)
    c_next = controller.next_state[c][a]
    u = plant.inputs.index(controller.outputs[controller.emission[c][a]])
    return {(c_next, q) for q in plant.successors[p][u]}


def test_product_edges_match_composition_rule(random_pair):
    rng = np.random.default_rng(7)
    for _ in range(300):
        controller, plant = random_pair(rng)
        system = compose(controller, plant)

        assert system.n_states <= controller.n_states * plant.n_states
        assert {system.pairs[s] for s in system.initial} == {(controller.initial, p) for p in plant.initial}
        for s, (c, p) in enumerate(system.pairs):
            got = [system.pairs[t] for t in system.successors(s)]
            assert len(got) == len(set(got))
            assert set(got) == _expected_successors(controller, plant, c, p)
            for prop, members in plant.hazards.items():
                assert bool(system.valuation[prop][s]) == (p in members)


def test_every_product_state_is_reachable(random_pair):
    rng = np.random.default_rng(8)
    for _ in range(200):
        system = compose(*random_pair(rng))
        seen = set(system.initial)
        queue = deque(seen)
        while queue:
            for t in system.successors(queue.popleft()):
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
        assert seen == set(range(system.n_states))


def test_alphabet_mismatch_names_symbols(minimal, tank):
    with pytest.raises(CompositionError) as exc:
        compose(minimal, tank.plant)
    assert exc.value.missing == ["drain", "fill", "hold"]
    assert exc.value.extra == ["y"]


def test_sensor_mismatch(reference, tank):
    plant = tank.plant.model_copy(update={"outputs": ("lo", "ok", "high")})
    with pytest.raises(CompositionError) as exc:
        compose(reference, plant)
    assert exc.value.missing == ["high"]
    assert exc.value.extra == ["hi"]


def test_controller_graph(reference):
    graph = controller_graph(reference)
    assert graph.n_states == 3
    # every state reacts to every sensor band, so it can emit every actuator symbol
    for symbol in reference.outputs:
        assert graph.valuation[symbol].all()
    assert sorted(graph.successors(0)) == [0, 1, 2]


def test_state_sets():
    g = TransitionGraph.from_edges(4, [(0, 1), (1, 2)], initial=[0])
    a, b = StateSet.of(g, [0, 1]), StateSet.of(g, [1, 3])
    assert list(a | b) == [0, 1, 3]
    assert list(a & b) == [1]
    assert list(a - b) == [0]
    assert StateSet.of(g, [1]) <= a
    assert 3 in b and 2 not in b
    assert len(StateSet.full(g)) == 4
    assert StateSet.empty(g).is_empty()

    other = TransitionGraph.from_edges(4, [], initial=[0])
    with pytest.raises(UsageError):
        a | StateSet.of(other, [0])
    assert a != StateSet.of(other, [0, 1])


def test_graph_rejects_bad_edges():
    with pytest.raises(UsageError):
        TransitionGraph.from_edges(2, [(0, 2)], initial=[0])


def test_graph_arrays_are_read_only():
    g = TransitionGraph.from_edges(2, [(0, 1)], initial=[0], valuation={"bad": [1]})
    with pytest.raises(ValueError):
        g.succ_idx[0] = 0
    with pytest.raises(ValueError):
        g.valuation["bad"][0] = True
    assert g.predecessors(1) == [0]
