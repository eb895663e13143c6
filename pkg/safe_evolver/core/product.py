from collections import deque
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from safe_evolver.core.errors import CompositionError, UsageError
from safe_evolver.core.machines import ControllerFsm, Plant


class StateSet:
    """
    Dense bit-set over the state indices of exactly one TransitionGraph.

    Sets from different graphs never mix: every binary operation checks that
    both operands share the same owner.
    """
    __slots__ = ("owner", "bits")

    def __init__(self, owner: "TransitionGraph", bits: np.ndarray):
        if bits.shape != (owner.n_states,) or bits.dtype != np.bool_:
            raise UsageError("state set must be a boolean vector over the graph's states")
        self.owner = owner
        self.bits = bits

    @classmethod
    def empty(cls, owner: "TransitionGraph") -> "StateSet":
        return cls(owner, np.zeros(owner.n_states, dtype=bool))

    @classmethod
    def full(cls, owner: "TransitionGraph") -> "StateSet":
        return cls(owner, np.ones(owner.n_states, dtype=bool))

    @classmethod
    def of(cls, owner: "TransitionGraph", members: Iterable[int]) -> "StateSet":
        bits = np.zeros(owner.n_states, dtype=bool)
        bits[list(members)] = True
        return cls(owner, bits)

    def _same_space(self, other: "StateSet") -> None:
        if other.owner is not self.owner:
            raise UsageError("state sets belong to different systems")

    def __or__(self, other: "StateSet") -> "StateSet":
        self._same_space(other)
        return StateSet(self.owner, self.bits | other.bits)

    def __and__(self, other: "StateSet") -> "StateSet":
        self._same_space(other)
        return StateSet(self.owner, self.bits & other.bits)

    def __sub__(self, other: "StateSet") -> "StateSet":
        self._same_space(other)
        return StateSet(self.owner, self.bits & ~other.bits)

    def __le__(self, other: "StateSet") -> bool:
        self._same_space(other)
        return not np.any(self.bits & ~other.bits)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateSet):
            return NotImplemented
        return other.owner is self.owner and np.array_equal(self.bits, other.bits)

    __hash__ = None

    def __contains__(self, state: int) -> bool:
        return bool(self.bits[state])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __iter__(self):
        return iter(np.flatnonzero(self.bits).tolist())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def __repr__(self) -> str:
        return f"StateSet({sorted(self)})"


def _csr(n: int, keys: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=indptr[1:])
    return indptr, values[order]


class TransitionGraph:
    """
    Finite transition system the safety checker analyzes.

    Edges are stored twice in CSR form (forward and reverse); propositions
    are boolean vectors over the states. Instances are read-only after
    construction.
    """

    def __init__(
        self,
        n_states: int,
        src: np.ndarray,
        dst: np.ndarray,
        initial: Iterable[int],
        valuation: Optional[Mapping[str, np.ndarray]] = None,
    ):
        self.n_states = int(n_states)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        if self.src.shape != self.dst.shape:
            raise UsageError("edge source and target arrays differ in length")
        if self.src.size and not (0 <= min(self.src.min(), self.dst.min()) and max(self.src.max(), self.dst.max()) < self.n_states):
            raise UsageError("edge endpoint out of range")
        self.succ_ptr, self.succ_idx = _csr(self.n_states, self.src, self.dst)
        self.pred_ptr, self.pred_idx = _csr(self.n_states, self.dst, self.src)

        init = np.zeros(self.n_states, dtype=bool)
        init[list(initial)] = True
        self._initial = init
        self.valuation: Dict[str, np.ndarray] = {}
        for prop, bits in (valuation or {}).items():
            bits = np.asarray(bits, dtype=bool)
            if bits.shape != (self.n_states,):
                raise UsageError(f"valuation of '{prop}' does not cover every state")
            bits.setflags(write=False)
            self.valuation[prop] = bits
        for arr in (self.src, self.dst, self.succ_ptr, self.succ_idx, self.pred_ptr, self.pred_idx, self._initial):
            arr.setflags(write=False)

    @classmethod
    def from_edges(
        cls,
        n_states: int,
        edges: Iterable[Tuple[int, int]],
        initial: Iterable[int],
        valuation: Optional[Mapping[str, Iterable[int]]] = None,
    ) -> "TransitionGraph":
        pairs = np.array(sorted(set(edges)), dtype=np.int64).reshape(-1, 2)
        bits = {}
        for prop, members in (valuation or {}).items():
            mask = np.zeros(n_states, dtype=bool)
            mask[list(members)] = True
            bits[prop] = mask
        return cls(n_states, pairs[:, 0], pairs[:, 1], initial, bits)

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    @property
    def initial(self) -> StateSet:
        return StateSet(self, self._initial.copy())

    def successors(self, state: int) -> List[int]:
        return self.succ_idx[self.succ_ptr[state]:self.succ_ptr[state + 1]].tolist()

    def predecessors(self, state: int) -> List[int]:
        return self.pred_idx[self.pred_ptr[state]:self.pred_ptr[state + 1]].tolist()

    @cached_property
    def reverse_lists(self) -> Tuple[List[int], List[int]]:
        # Plain-list CSR for the scalar worklist loop.
        return self.pred_ptr.tolist(), self.pred_idx.tolist()

    def state_name(self, state: int) -> str:
        return str(state)


class ClosedLoopSystem(TransitionGraph):
    """Reachable synchronous product of a controller and a plant."""

    def __init__(
        self,
        controller: ControllerFsm,
        plant: Plant,
        pairs: Sequence[Tuple[int, int]],
        src: np.ndarray,
        dst: np.ndarray,
        initial: Iterable[int],
        valuation: Mapping[str, np.ndarray],
    ):
        super().__init__(len(pairs), src, dst, initial, valuation)
        self.controller = controller
        self.plant = plant
        self.pairs: Tuple[Tuple[int, int], ...] = tuple(pairs)

    def state_name(self, state: int) -> str:
        c, p = self.pairs[state]
        return f"({self.controller.states[c]},{self.plant.states[p]})"


def check_alphabets(controller: ControllerFsm, plant: Plant) -> None:
    """Exact symbol-set equality in both directions of the loop."""
    actuators, sensors = set(controller.outputs), set(controller.inputs)
    if actuators != set(plant.inputs):
        raise CompositionError(
            missing=set(plant.inputs) - actuators,
            extra=actuators - set(plant.inputs),
            where="controller outputs / plant inputs",
        )
    if sensors != set(plant.outputs):
        raise CompositionError(
            missing=set(plant.outputs) - sensors,
            extra=sensors - set(plant.outputs),
            where="controller inputs / plant outputs",
        )


def compose(controller: ControllerFsm, plant: Plant) -> ClosedLoopSystem:
    """
    Builds the reachable closed loop. One step: the plant in state p shows
    sensor symbol emit(p); the controller in c reads it, moves to
    next_state(c, emit(p)) and issues actuator u = emission(c, emit(p)); the
    plant moves to any successor of (p, u).
    """
    check_alphabets(controller, plant)
    sensor_to_input = [controller.input_index[symbol] for symbol in plant.outputs]
    output_to_actuator = [plant.input_index[symbol] for symbol in controller.outputs]

    index: Dict[Tuple[int, int], int] = {}
    pairs: List[Tuple[int, int]] = []
    queue: deque = deque()

    def visit(pair: Tuple[int, int]) -> int:
        if pair not in index:
            index[pair] = len(pairs)
            pairs.append(pair)
            queue.append(pair)
        return index[pair]

    initial = [visit((controller.initial, p)) for p in plant.initial]
    src: List[int] = []
    dst: List[int] = []
    while queue:
        c, p = queue.popleft()
        here = index[(c, p)]
        sensor = plant.emit[p]
        if sensor is None:
            raise UsageError(f"plant state {plant.states[p]} emits no sensor symbol")
        a = sensor_to_input[sensor]
        c_next, out = controller.next_state[c][a], controller.emission[c][a]
        if c_next is None or out is None:
            raise UsageError(f"controller {controller.name} is incomplete at ({controller.states[c]},{controller.inputs[a]})")
        for p_next in plant.successors[p][output_to_actuator[out]]:
            src.append(here)
            dst.append(visit((c_next, p_next)))

    n = len(pairs)
    plant_of = np.fromiter((p for _, p in pairs), dtype=np.int64, count=n)
    valuation = {}
    for prop, members in plant.hazards.items():
        labelled = np.zeros(plant.n_states, dtype=bool)
        labelled[list(members)] = True
        valuation[prop] = labelled[plant_of]

    return ClosedLoopSystem(
        controller, plant, pairs,
        np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
        initial, valuation,
    )


def controller_graph(fsm: ControllerFsm) -> TransitionGraph:
    """
    The controller's own transition graph, existential over inputs. Output
    symbol o holds at state s iff some transition leaving s emits o.
    """
    n = fsm.n_states
    edges = set()
    valuation = {symbol: np.zeros(n, dtype=bool) for symbol in fsm.outputs}
    for s in range(n):
        for a in range(len(fsm.inputs)):
            target, out = fsm.next_state[s][a], fsm.emission[s][a]
            if target is None or out is None:
                raise UsageError(f"controller {fsm.name} is incomplete at ({fsm.states[s]},{fsm.inputs[a]})")
            edges.add((s, target))
            valuation[fsm.outputs[out]][s] = True
    pairs = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return TransitionGraph(n, pairs[:, 0], pairs[:, 1], [fsm.initial], valuation)
