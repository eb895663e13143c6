import numpy as np
import pytest

from safe_evolver.core.benchmarks import builtin_controller, builtin_task
from safe_evolver.core.genome import random_controller
from safe_evolver.core.machines import ControllerFsm, Plant

SENSORS = ("a", "b")
ACTUATORS = ("x", "y", "z")


@pytest.fixture
def tank():
    return builtin_task("tank")


@pytest.fixture
def reference():
    return builtin_controller("tank_reference")


@pytest.fixture
def always_fill():
    return builtin_controller("tank_always_fill")


@pytest.fixture
def minimal():
    """1 state, 1 input, 1 output, self-loop."""
    return ControllerFsm(
        name="m", inputs=("x",), outputs=("y",), states=("s0",),
        initial=0, next_state=((0,),), emission=((0,),),
    )


def make_plant(rng: np.random.Generator, n_states: int, inputs=ACTUATORS, outputs=SENSORS) -> Plant:
    """Random input-enabled plant with up to two successors per (state, input)."""
    successors = tuple(
        tuple(tuple(sorted(set(rng.integers(0, n_states, size=int(rng.integers(1, 3))).tolist()))) for _ in inputs)
        for _ in range(n_states)
    )
    initial = tuple(sorted(set(rng.integers(0, n_states, size=int(rng.integers(1, 3))).tolist())))
    return Plant(
        name="random",
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        states=tuple(f"p{i}" for i in range(n_states)),
        initial=initial,
        emit=tuple(int(rng.integers(len(outputs))) for _ in range(n_states)),
        successors=successors,
        hazards={
            "bad": tuple(s for s in range(n_states) if rng.random() < 0.2),
            "hot": tuple(s for s in range(n_states) if rng.random() < 0.3),
        },
        rewards=tuple(float(rng.random() < 0.5) for _ in range(n_states)),
    )


@pytest.fixture
def random_pair():
    """Factory: (controller, plant) with matching alphabets, each at most `max_states` states."""
    def build(rng: np.random.Generator, max_states: int = 6):
        controller = random_controller(rng, SENSORS, ACTUATORS, int(rng.integers(1, max_states + 1)))
        return controller, make_plant(rng, int(rng.integers(1, max_states + 1)))
    return build
