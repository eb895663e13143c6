"""
Line-oriented text format for controllers (`fsm`) and plants (`plant`).

    fsm <name>            | plant <name>
    inputs: a b c
    outputs: x y
    states: s0 s1
    initial: s0           | initial: s0 s1
    emit: s0 a            (plants only)
    hazard <prop>: s1     (plants only, repeatable)
    reward <value>: s1    (plants only, repeatable)
    trans: s0 a -> s1 / x (controllers)
    trans: s0 x -> s1     (plants, repeatable per (state, input))

`#` starts a comment. Serialization is canonical: sections in the order
above, transitions sorted by (state index, input index[, target index]).
"""
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from safe_evolver.core.errors import FsmSemanticError, FsmSyntaxError
from safe_evolver.core.machines import ControllerFsm, Machine, Plant

IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
SINGLE_DECLS = ("inputs", "outputs", "states", "initial")
PLANT_ONLY = ("emit", "hazard", "reward")


@dataclass
class _Line:
    number: int
    tokens: List[str]


@dataclass
class _Document:
    kind: str
    name: str
    last_line: int
    decls: Dict[str, _Line] = field(default_factory=dict)
    trans: List[_Line] = field(default_factory=list)
    emits: List[_Line] = field(default_factory=list)
    hazards: List[Tuple[str, _Line]] = field(default_factory=list)
    rewards: List[Tuple[float, _Line]] = field(default_factory=list)


def _significant_lines(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _read_document(text: str) -> _Document:
    doc: Optional[_Document] = None
    last = 0
    for number, line in _significant_lines(text):
        last = number
        if doc is None:
            head = line.split()
            if len(head) != 2 or head[0] not in ("fsm", "plant"):
                raise FsmSyntaxError(number, "expected header 'fsm <name>' or 'plant <name>'")
            doc = _Document(kind=head[0], name=head[1], last_line=number)
            continue

        key, sep, rest = line.partition(":")
        if not sep:
            raise FsmSyntaxError(number, "expected '<keyword>: ...'")
        key_tokens = key.split()
        entry = _Line(number, rest.split())
        keyword = key_tokens[0] if key_tokens else ""

        if keyword in PLANT_ONLY and doc.kind != "plant":
            raise FsmSemanticError(number, f"'{keyword}' is only valid in plant files")

        if keyword in SINGLE_DECLS and len(key_tokens) == 1:
            if keyword in doc.decls:
                raise FsmSemanticError(number, f"duplicate '{keyword}' declaration")
            doc.decls[keyword] = entry
        elif keyword == "trans" and len(key_tokens) == 1:
            doc.trans.append(entry)
        elif keyword == "emit" and len(key_tokens) == 1:
            doc.emits.append(entry)
        elif keyword == "hazard" and len(key_tokens) == 2:
            if not IDENT.match(key_tokens[1]):
                raise FsmSyntaxError(number, f"bad proposition name '{key_tokens[1]}'")
            doc.hazards.append((key_tokens[1], entry))
        elif keyword == "reward" and len(key_tokens) == 2:
            try:
                value = float(key_tokens[1])
            except ValueError:
                raise FsmSyntaxError(number, f"bad reward value '{key_tokens[1]}'") from None
            doc.rewards.append((value, entry))
        else:
            raise FsmSyntaxError(number, f"unknown declaration '{key.strip()}'")

    if doc is None:
        raise FsmSyntaxError(max(last, 1), "empty machine description")
    doc.last_line = last
    for keyword in SINGLE_DECLS:
        if keyword not in doc.decls:
            raise FsmSemanticError(last, f"missing '{keyword}:' declaration")
    return doc


class _Resolver:
    def __init__(self, doc: _Document):
        self.inputs = doc.decls["inputs"].tokens
        self.outputs = doc.decls["outputs"].tokens
        self.states = doc.decls["states"].tokens
        self._index = {
            "state": _index_of(self.states),
            "input": _index_of(self.inputs),
            "output": _index_of(self.outputs),
        }

    def __call__(self, kind: str, name: str, line: int) -> int:
        table = self._index[kind]
        if name not in table:
            raise FsmSemanticError(line, f"undeclared {kind} '{name}'")
        return table[name]


def _index_of(names: List[str]) -> Dict[str, int]:
    index: Dict[str, int] = {}
    for i, name in enumerate(names):
        index.setdefault(name, i)
    return index


def _build_controller(doc: _Document) -> ControllerFsm:
    res = _Resolver(doc)
    initial = doc.decls["initial"]
    if len(initial.tokens) != 1:
        raise FsmSemanticError(initial.number, "controllers take exactly one initial state")
    init = res("state", initial.tokens[0], initial.number)

    n, k = len(res.states), len(res.inputs)
    nxt: List[List[Optional[int]]] = [[None] * k for _ in range(n)]
    out: List[List[Optional[int]]] = [[None] * k for _ in range(n)]
    for entry in doc.trans:
        t = entry.tokens
        if len(t) != 6 or t[2] != "->" or t[4] != "/":
            raise FsmSyntaxError(entry.number, "expected 'trans: <state> <input> -> <state> / <output>'")
        s = res("state", t[0], entry.number)
        a = res("input", t[1], entry.number)
        if nxt[s][a] is not None:
            raise FsmSemanticError(entry.number, f"duplicate transition for ({t[0]},{t[1]})")
        nxt[s][a] = res("state", t[3], entry.number)
        out[s][a] = res("output", t[5], entry.number)

    return ControllerFsm(
        name=doc.name,
        inputs=tuple(res.inputs),
        outputs=tuple(res.outputs),
        states=tuple(res.states),
        initial=init,
        next_state=tuple(map(tuple, nxt)),
        emission=tuple(map(tuple, out)),
    )


def _build_plant(doc: _Document) -> Plant:
    res = _Resolver(doc)
    initial = doc.decls["initial"]
    init = sorted({res("state", name, initial.number) for name in initial.tokens})

    n, k = len(res.states), len(res.inputs)
    emit: List[Optional[int]] = [None] * n
    for entry in doc.emits:
        if len(entry.tokens) != 2:
            raise FsmSyntaxError(entry.number, "expected 'emit: <state> <output>'")
        s = res("state", entry.tokens[0], entry.number)
        if emit[s] is not None:
            raise FsmSemanticError(entry.number, f"state '{entry.tokens[0]}' already emits a symbol")
        emit[s] = res("output", entry.tokens[1], entry.number)

    hazards: Dict[str, Set[int]] = {}
    for prop, entry in doc.hazards:
        members = hazards.setdefault(prop, set())
        members.update(res("state", name, entry.number) for name in entry.tokens)

    rewards = [0.0] * n
    rewarded: Set[int] = set()
    for value, entry in doc.rewards:
        for name in entry.tokens:
            s = res("state", name, entry.number)
            if s in rewarded:
                raise FsmSemanticError(entry.number, f"state '{name}' has two rewards")
            rewarded.add(s)
            rewards[s] = value

    succ: List[List[Set[int]]] = [[set() for _ in range(k)] for _ in range(n)]
    for entry in doc.trans:
        t = entry.tokens
        if len(t) != 4 or t[2] != "->":
            raise FsmSyntaxError(entry.number, "expected 'trans: <state> <input> -> <state>'")
        s = res("state", t[0], entry.number)
        u = res("input", t[1], entry.number)
        succ[s][u].add(res("state", t[3], entry.number))

    return Plant(
        name=doc.name,
        inputs=tuple(res.inputs),
        outputs=tuple(res.outputs),
        states=tuple(res.states),
        initial=tuple(init),
        emit=tuple(emit),
        successors=tuple(tuple(tuple(sorted(cell)) for cell in row) for row in succ),
        hazards={prop: tuple(sorted(members)) for prop, members in hazards.items()},
        rewards=tuple(rewards),
    )


def parse_fsm(text: Union[bytes, str]) -> Machine:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise FsmSyntaxError(text[: e.start].count(b"\n") + 1, "input is not valid UTF-8") from None
    doc = _read_document(text)
    if doc.kind == "fsm":
        return _build_controller(doc)
    return _build_plant(doc)


def _decl(key: str, tokens) -> str:
    return key + ":" + "".join(" " + t for t in tokens)


def _number(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def serialize_fsm(machine: Machine) -> bytes:
    kind = "fsm" if isinstance(machine, ControllerFsm) else "plant"
    lines = [
        f"{kind} {machine.name}",
        _decl("inputs", machine.inputs),
        _decl("outputs", machine.outputs),
        _decl("states", machine.states),
    ]
    names = machine.states

    if isinstance(machine, ControllerFsm):
        lines.append(_decl("initial", [names[machine.initial]]))
        for s in range(machine.n_states):
            for a, symbol in enumerate(machine.inputs):
                target, out = machine.next_state[s][a], machine.emission[s][a]
                if target is None or out is None:
                    continue
                lines.append(f"trans: {names[s]} {symbol} -> {names[target]} / {machine.outputs[out]}")
    else:
        lines.append(_decl("initial", [names[s] for s in sorted(set(machine.initial))]))
        for s, symbol in enumerate(machine.emit):
            if symbol is not None:
                lines.append(f"emit: {names[s]} {machine.outputs[symbol]}")
        for prop in sorted(machine.hazards):
            lines.append(_decl(f"hazard {prop}", [names[s] for s in sorted(machine.hazards[prop])]))
        groups: Dict[float, List[int]] = {}
        for s, value in enumerate(machine.rewards):
            if value != 0.0:
                groups.setdefault(value, []).append(s)
        for value in sorted(groups):
            lines.append(_decl(f"reward {_number(value)}", [names[s] for s in groups[value]]))
        for s in range(machine.n_states):
            for u, symbol in enumerate(machine.inputs):
                for target in sorted(machine.successors[s][u]):
                    lines.append(f"trans: {names[s]} {symbol} -> {names[target]}")

    return ("\n".join(lines) + "\n").encode("utf-8")


def canonicalize(text: Union[bytes, str]) -> bytes:
    return serialize_fsm(parse_fsm(text))
