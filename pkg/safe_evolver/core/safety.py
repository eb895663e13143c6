import logging
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from safe_evolver.core.ctl import SafetyProperty, evaluate
from safe_evolver.core.errors import PropertyModelMismatchError, UsageError
from safe_evolver.core.interfaces import ISafetyGate, SafetyVerdict, Verdict
from safe_evolver.core.machines import ControllerFsm, Plant
from safe_evolver.core.product import StateSet, TransitionGraph, compose, controller_graph

logger = logging.getLogger(__name__)


class Closure(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    states: StateSet
    iterations: int
    chain: List[StateSet] = Field(default_factory=list)


def bad_states(system: TransitionGraph, prop: SafetyProperty) -> StateSet:
    """Y0: every state where the body of AG fails."""
    for atom in sorted(prop.atoms):
        if atom not in system.valuation:
            raise PropertyModelMismatchError(atom, system.valuation.keys())
    holds = evaluate(prop.body, system.valuation, system.n_states)
    return StateSet(system, ~holds)


def preimage(system: TransitionGraph, y: StateSet) -> StateSet:
    """States with at least one successor in y."""
    if y.owner is not system:
        raise UsageError("state set belongs to a different system")
    bits = np.zeros(system.n_states, dtype=bool)
    bits[system.src[y.bits[system.dst]]] = True
    return StateSet(system, bits)


def backward_closure(system: TransitionGraph, y0: StateSet, record_chain: bool = False) -> Closure:
    """
    Least fixpoint of Y -> Pre(Y) | Y above y0.

    Each round only expands the states added by the previous round, so every
    reverse edge is scanned at most once. `iterations` counts the rounds that
    added states: Y_iterations is the first set equal to its successor.
    """
    ptr, idx = system.reverse_lists
    flagged = bytearray(y0.bits.tobytes())
    frontier = np.flatnonzero(y0.bits).tolist()
    chain = [StateSet(system, y0.bits.copy())] if record_chain else []
    iterations = 0

    while frontier:
        added = []
        for s in frontier:
            for k in range(ptr[s], ptr[s + 1]):
                p = idx[k]
                if not flagged[p]:
                    flagged[p] = 1
                    added.append(p)
        if not added:
            break
        iterations += 1
        frontier = added
        if record_chain:
            chain.append(StateSet(system, np.frombuffer(bytes(flagged), dtype=np.bool_).copy()))

    closure = StateSet(system, np.frombuffer(bytes(flagged), dtype=np.bool_).copy())
    return Closure(states=closure, iterations=iterations, chain=chain)


def check_safe(system: TransitionGraph, prop: SafetyProperty) -> SafetyVerdict:
    """Safe iff no initial state can reach a state violating the body."""
    y0 = bad_states(system, prop)
    initial = system.initial
    if not (y0 & initial).is_empty():
        return SafetyVerdict(value=Verdict.UNSAFE, iterations=0, states_flagged=len(y0))

    closure = backward_closure(system, y0)
    unsafe = not (closure.states & initial).is_empty()
    verdict = SafetyVerdict(
        value=Verdict.UNSAFE if unsafe else Verdict.SAFE,
        iterations=closure.iterations,
        states_flagged=len(closure.states),
    )
    logger.debug("checked %d states / %d edges: %s", system.n_states, system.n_edges, verdict)
    return verdict


def check_controller_alone(fsm: ControllerFsm, prop: SafetyProperty) -> SafetyVerdict:
    """Atoms name output symbols; a state satisfies o iff it can emit o."""
    for atom in sorted(prop.atoms):
        if atom not in fsm.outputs:
            raise PropertyModelMismatchError(atom, fsm.outputs)
    return check_safe(controller_graph(fsm), prop)


class ModelCheckingGate(ISafetyGate):
    """Closed-loop safety gate for genomes evolved against one fixed plant."""

    def __init__(self, plant: Plant, prop: SafetyProperty):
        unknown = prop.atoms - plant.hazards.keys()
        if unknown:
            raise PropertyModelMismatchError(sorted(unknown)[0], plant.hazards.keys())
        self.plant = plant
        self.prop = prop

    def check(self, genome: ControllerFsm) -> SafetyVerdict:
        return check_safe(compose(genome, self.plant), self.prop)
