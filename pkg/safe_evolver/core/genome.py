"""Evolutionary-programming operators over ControllerFsm genomes."""
from typing import List, Sequence, Tuple

import numpy as np

from safe_evolver.config import EvolutionConfig
from safe_evolver.core.machines import ControllerFsm

MUTATIONS = ("add_state", "delete_state", "change_transition", "change_output", "change_initial")
FALLBACK = "change_transition"


def random_controller(
    rng: np.random.Generator,
    inputs: Sequence[str],
    outputs: Sequence[str],
    n_states: int,
    name: str = "candidate",
) -> ControllerFsm:
    if n_states < 1:
        raise ValueError("a controller needs at least one state")
    k = len(inputs)
    nxt = rng.integers(0, n_states, size=(n_states, k))
    out = rng.integers(0, len(outputs), size=(n_states, k))
    return ControllerFsm(
        name=name,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        states=tuple(f"s{i}" for i in range(n_states)),
        initial=int(rng.integers(n_states)),
        next_state=tuple(tuple(int(t) for t in row) for row in nxt),
        emission=tuple(tuple(int(o) for o in row) for row in out),
    )


def applicable_mutations(parent: ControllerFsm, cfg: EvolutionConfig) -> List[str]:
    weights = cfg.mutation_weights.model_dump()
    n = parent.n_states
    blocked = set()
    if n >= cfg.max_states:
        blocked.add("add_state")
    if n <= 1:
        blocked.add("delete_state")
    return [m for m in MUTATIONS if m not in blocked and weights[m] > 0]


def _fresh_name(names: Sequence[str]) -> str:
    taken, i = set(names), len(names)
    while f"s{i}" in taken:
        i += 1
    return f"s{i}"


def _draw_mutation(parent: ControllerFsm, rng: np.random.Generator, cfg: EvolutionConfig) -> str:
    modes = applicable_mutations(parent, cfg)
    if not modes:
        return FALLBACK
    weights = cfg.mutation_weights.model_dump()
    p = np.array([weights[m] for m in modes], dtype=float)
    return modes[int(rng.choice(len(modes), p=p / p.sum()))]


def mutate(parent: ControllerFsm, rng: np.random.Generator, cfg: EvolutionConfig) -> Tuple[ControllerFsm, str]:
    """Applies exactly one mutation; the child is always complete and deterministic."""
    tag = _draw_mutation(parent, rng, cfg)
    n, k, m = parent.n_states, len(parent.inputs), len(parent.outputs)
    nxt: List[List[int]] = [list(row) for row in parent.next_state]
    out: List[List[int]] = [list(row) for row in parent.emission]
    names: List[str] = list(parent.states)
    initial: int = parent.initial

    if tag == "add_state":
        names.append(_fresh_name(names))
        nxt.append([int(t) for t in rng.integers(0, n + 1, size=k)])
        out.append([int(o) for o in rng.integers(0, m, size=k)])
        s, a = int(rng.integers(n)), int(rng.integers(k))
        nxt[s][a] = n

    elif tag == "delete_state":
        victim = int(rng.integers(n))

        def remap(t: int) -> int:
            if t == victim:
                return int(rng.integers(n - 1))
            return t - 1 if t > victim else t

        del names[victim], nxt[victim], out[victim]
        nxt = [[remap(t) for t in row] for row in nxt]
        initial = remap(initial)

    elif tag == "change_transition":
        s, a = int(rng.integers(n)), int(rng.integers(k))
        nxt[s][a] = int(rng.integers(n))

    elif tag == "change_output":
        s, a = int(rng.integers(n)), int(rng.integers(k))
        out[s][a] = int(rng.integers(m))

    elif tag == "change_initial":
        initial = int(rng.integers(n))

    child = ControllerFsm(
        name=parent.name,
        inputs=parent.inputs,
        outputs=parent.outputs,
        states=tuple(names),
        initial=initial,
        next_state=tuple(map(tuple, nxt)),
        emission=tuple(map(tuple, out)),
    )
    return child, tag
