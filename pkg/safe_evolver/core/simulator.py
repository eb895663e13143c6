from typing import Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel

from safe_evolver.config import EvolutionConfig
from safe_evolver.core.interfaces import IEvaluator
from safe_evolver.core.machines import ControllerFsm, Plant
from safe_evolver.core.product import check_alphabets


class StepRecord(BaseModel):
    step: int
    plant_state: str
    sensor: str
    controller_state: str
    actuator: str
    next_plant_state: str
    reward: float


def _walk(controller: ControllerFsm, plant: Plant, steps: int, rng: np.random.Generator) -> Iterator[Tuple[int, int, int, int, int]]:
    """
    Yields (plant state, sensor, controller state, actuator, next plant state)
    as indices. The start state is uniform over the plant's initial states
    and every disturbance is resolved uniformly.
    """
    check_alphabets(controller, plant)
    sensor_input = [controller.input_index[plant.outputs[e]] if e is not None else None for e in plant.emit]
    actuator_of = [plant.input_index[symbol] for symbol in controller.outputs]

    p = plant.initial[int(rng.integers(len(plant.initial)))]
    c = controller.initial
    draws = rng.random(steps)
    for i in range(steps):
        a = sensor_input[p]
        sensor = plant.emit[p]
        c_next, out = controller.next_state[c][a], controller.emission[c][a]
        succ = plant.successors[p][actuator_of[out]]
        p_next = succ[int(draws[i] * len(succ))]
        yield p, sensor, c, out, p_next
        c, p = c_next, p_next


def run_episode(controller: ControllerFsm, plant: Plant, steps: int, rng: np.random.Generator) -> List[StepRecord]:
    return [
        StepRecord(
            step=i,
            plant_state=plant.states[p],
            sensor=plant.outputs[sensor],
            controller_state=controller.states[c],
            actuator=controller.outputs[out],
            next_plant_state=plant.states[p_next],
            reward=plant.reward(p_next),
        )
        for i, (p, sensor, c, out, p_next) in enumerate(_walk(controller, plant, steps, rng))
    ]


def episode_score(controller: ControllerFsm, plant: Plant, steps: int, rng: np.random.Generator) -> float:
    """Mean per-step reward; 0.0 for an empty episode."""
    total = 0.0
    for _, _, _, _, p_next in _walk(controller, plant, steps, rng):
        total += plant.reward(p_next)
    return total / steps if steps else 0.0


def evaluate(controller: ControllerFsm, plant: Plant, cfg: EvolutionConfig, rng: np.random.Generator) -> float:
    """Mean episode score over cfg.episodes_per_evaluation episodes."""
    scores = [episode_score(controller, plant, cfg.episode_length, rng) for _ in range(cfg.episodes_per_evaluation)]
    return float(np.mean(scores))


class PlantSimulator(IEvaluator):
    def __init__(self, plant: Plant, cfg: EvolutionConfig):
        self.plant = plant
        self.cfg = cfg

    def evaluate(self, genome: ControllerFsm, rng: np.random.Generator) -> float:
        return evaluate(genome, self.plant, self.cfg, rng)
