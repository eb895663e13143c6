from functools import cached_property
from typing import Optional, List, Sequence, Tuple, Dict, Union

from pydantic import BaseModel, ConfigDict, model_validator

from safe_evolver.core.errors import UsageError

StateRef = Union[int, str]


class ValidationReport(BaseModel):
    violations: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.violations


class ControllerFsm(BaseModel):
    """
    Deterministic Mealy machine encoding one control strategy.

    States are dense integers 0..n-1; `states` holds their display names.
    `next_state[s][a]` and `emission[s][a]` are indices into `states` and
    `outputs`. A None entry marks a missing transition, which only
    validate_controller reports; the model itself never rejects it.
    """
    model_config = ConfigDict(frozen=True)

    name: str = "controller"
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: int
    next_state: Tuple[Tuple[Optional[int], ...], ...]
    emission: Tuple[Tuple[Optional[int], ...], ...]

    @model_validator(mode="after")
    def _check_shape(self):
        n, k = len(self.states), len(self.inputs)
        if len(self.next_state) != n or len(self.emission) != n:
            raise ValueError("transition table must have one row per state")
        for row in (*self.next_state, *self.emission):
            if len(row) != k:
                raise ValueError("transition table must have one column per input")
        return self

    @cached_property
    def input_index(self) -> Dict[str, int]:
        return _first_index(self.inputs)

    @cached_property
    def output_index(self) -> Dict[str, int]:
        return _first_index(self.outputs)

    @cached_property
    def state_index(self) -> Dict[str, int]:
        return _first_index(self.states)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def resolve_state(self, state: StateRef) -> int:
        if isinstance(state, str):
            if state not in self.state_index:
                raise UsageError(f"unknown state '{state}' in {self.name}")
            return self.state_index[state]
        if not 0 <= state < self.n_states:
            raise UsageError(f"state id {state} out of range for {self.name}")
        return state

    def structurally_equal(self, other: "ControllerFsm") -> bool:
        return self.model_dump() == other.model_dump()


class Plant(BaseModel):
    """
    Input-enabled, possibly nondeterministic environment automaton.

    Each state emits exactly one sensor symbol (`emit`), which the controller
    consumes; `successors[p][u]` is the sorted tuple of states the plant may
    move to under actuator symbol `u`.
    """
    model_config = ConfigDict(frozen=True)

    name: str = "plant"
    inputs: Tuple[str, ...]
    outputs: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: Tuple[int, ...]
    emit: Tuple[Optional[int], ...]
    successors: Tuple[Tuple[Tuple[int, ...], ...], ...]
    hazards: Dict[str, Tuple[int, ...]] = {}
    rewards: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_shape(self):
        n, k = len(self.states), len(self.inputs)
        if len(self.emit) != n or len(self.successors) != n:
            raise ValueError("plant tables must have one entry per state")
        if any(len(row) != k for row in self.successors):
            raise ValueError("plant successor table must have one column per input")
        if self.rewards and len(self.rewards) != n:
            raise ValueError("rewards must cover every plant state")
        return self

    @cached_property
    def input_index(self) -> Dict[str, int]:
        return _first_index(self.inputs)

    @cached_property
    def output_index(self) -> Dict[str, int]:
        return _first_index(self.outputs)

    @cached_property
    def state_index(self) -> Dict[str, int]:
        return _first_index(self.states)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def reward(self, state: int) -> float:
        return self.rewards[state] if self.rewards else 0.0

    def resolve_state(self, state: StateRef) -> int:
        if isinstance(state, str):
            if state not in self.state_index:
                raise UsageError(f"unknown plant state '{state}' in {self.name}")
            return self.state_index[state]
        if not 0 <= state < self.n_states:
            raise UsageError(f"plant state id {state} out of range for {self.name}")
        return state


Machine = Union[ControllerFsm, Plant]


def _first_index(symbols: Sequence[str]) -> Dict[str, int]:
    index: Dict[str, int] = {}
    for i, symbol in enumerate(symbols):
        index.setdefault(symbol, i)
    return index


def _alphabet_violations(kind: str, symbols: Sequence[str]) -> List[str]:
    if not symbols:
        return [f"empty {kind} alphabet"]
    seen, out = set(), []
    for symbol in symbols:
        if symbol in seen:
            out.append(f"duplicate symbol '{symbol}' in {kind}")
        seen.add(symbol)
    return out


def _state_violations(states: Sequence[str]) -> List[str]:
    if not states:
        return ["no states declared"]
    seen, out = set(), []
    for name in states:
        if name in seen:
            out.append(f"duplicate state '{name}'")
        seen.add(name)
    return out


def validate_controller(fsm: ControllerFsm) -> ValidationReport:
    violations = _alphabet_violations("inputs", fsm.inputs)
    violations += _alphabet_violations("outputs", fsm.outputs)
    violations += _state_violations(fsm.states)

    n, m = fsm.n_states, len(fsm.outputs)
    if not 0 <= fsm.initial < n:
        violations.append(f"initial state {fsm.initial} is not a declared state")

    for s in range(n):
        for a, symbol in enumerate(fsm.inputs):
            target, out = fsm.next_state[s][a], fsm.emission[s][a]
            where = f"({fsm.states[s]},{symbol})"
            if target is None or out is None:
                violations.append(f"incomplete at {where}")
                continue
            if not 0 <= target < n:
                violations.append(f"transition target out of range at {where}")
            if not 0 <= out < m:
                violations.append(f"emission out of range at {where}")

    return ValidationReport(violations=violations)


def validate_plant(plant: Plant) -> ValidationReport:
    violations = _alphabet_violations("inputs", plant.inputs)
    violations += _alphabet_violations("outputs", plant.outputs)
    violations += _state_violations(plant.states)

    n = plant.n_states
    if not plant.initial:
        violations.append("no initial state")
    violations += [f"initial state {s} is not a declared state" for s in plant.initial if not 0 <= s < n]

    for p in range(n):
        name = plant.states[p]
        if plant.emit[p] is None:
            violations.append(f"no emitted symbol for state {name}")
        for u, symbol in enumerate(plant.inputs):
            succ = plant.successors[p][u]
            if not succ:
                violations.append(f"not input-enabled at ({name},{symbol})")
            elif any(not 0 <= q < n for q in succ):
                violations.append(f"successor out of range at ({name},{symbol})")

    for prop, members in sorted(plant.hazards.items()):
        if any(not 0 <= s < n for s in members):
            violations.append(f"hazard '{prop}' names an undeclared state")

    if any(not 0.0 <= r <= 1.0 for r in plant.rewards):
        violations.append("rewards must lie in [0, 1]")

    return ValidationReport(violations=violations)


def step(fsm: ControllerFsm, state: StateRef, symbol: str) -> Tuple[int, str]:
    """Returns (next state id, output symbol) for one controller move."""
    s = fsm.resolve_state(state)
    if symbol not in fsm.input_index:
        raise UsageError(f"unknown input symbol '{symbol}' for {fsm.name}")
    a = fsm.input_index[symbol]
    target, out = fsm.next_state[s][a], fsm.emission[s][a]
    if target is None or out is None:
        raise UsageError(f"{fsm.name} has no transition at ({fsm.states[s]},{symbol})")
    return target, fsm.outputs[out]
