"""
Safety fragment of CTL: a single top-level AG over a boolean body.

    property := "AG" expr
    expr     := term { "|" term }
    term     := factor { "&" factor }
    factor   := "!" factor | "(" expr ")" | "true" | "false" | IDENT
"""
import re
from dataclasses import dataclass
from typing import FrozenSet, List, Mapping, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from safe_evolver.core.errors import PropertyModelMismatchError, PropertySyntaxError

TEMPORAL = frozenset({"AG", "AF", "AX", "AU", "EG", "EF", "EX", "EU"})
_TOKEN = re.compile(r"(?P<ws>\s+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[!&|()])")


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Atom, Not, And, Or]


class SafetyProperty(BaseModel):
    """AG body: `body` must hold in every reachable state."""
    model_config = ConfigDict(frozen=True)

    source_text: str
    body: Expr

    @property
    def atoms(self) -> FrozenSet[str]:
        return atoms_of(self.body)

    def __str__(self) -> str:
        return format_property(self)


def _tokenize(text: str) -> List[Tuple[str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PropertySyntaxError(pos, f"unexpected character {text[pos]!r}")
        if not m.group("ws"):
            tokens.append((m.group(), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Tuple[str, int]:
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return "", len(self.text)

    def take(self) -> Tuple[str, int]:
        tok = self.peek()
        self.i += 1
        return tok

    def property(self) -> Expr:
        tok, pos = self.peek()
        if tok != "AG":
            if tok in TEMPORAL:
                raise PropertySyntaxError(pos, f"property must be AG-rooted safety, found '{tok}'")
            raise PropertySyntaxError(pos, "missing AG: safety properties have the form 'AG <expr>'")
        self.take()
        body = self.expr()
        tok, pos = self.peek()
        if tok:
            raise PropertySyntaxError(pos, f"unexpected '{tok}'")
        return body

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "|":
            self.take()
            node = Or(node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[0] == "&":
            self.take()
            node = And(node, self.factor())
        return node

    def factor(self) -> Expr:
        tok, pos = self.take()
        if tok == "!":
            return Not(self.factor())
        if tok == "(":
            node = self.expr()
            close, where = self.take()
            if close != ")":
                raise PropertySyntaxError(where, "expected ')'")
            return node
        if tok in ("true", "false"):
            return Const(tok == "true")
        if tok in TEMPORAL:
            raise PropertySyntaxError(pos, f"temporal operator outside AG: '{tok}'")
        if tok and (tok[0].isalpha() or tok[0] == "_"):
            return Atom(tok)
        if not tok:
            raise PropertySyntaxError(pos, "unexpected end of property")
        raise PropertySyntaxError(pos, f"unexpected '{tok}'")


def parse_property(text: Union[bytes, str]) -> SafetyProperty:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise PropertySyntaxError(e.start, "input is not valid UTF-8") from None
    text = text.strip()
    return SafetyProperty(source_text=text, body=_Parser(text).property())


_PRECEDENCE = {Or: 1, And: 2}


def _format(node: Expr) -> str:
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Atom):
        return node.name
    if isinstance(node, Not):
        inner = _format(node.operand)
        return "!" + (f"({inner})" if type(node.operand) in _PRECEDENCE else inner)

    level = _PRECEDENCE[type(node)]
    symbol = " | " if isinstance(node, Or) else " & "
    left, right = _format(node.left), _format(node.right)
    if _PRECEDENCE.get(type(node.left), 3) < level:
        left = f"({left})"
    # binary operators associate to the left
    if _PRECEDENCE.get(type(node.right), 3) <= level:
        right = f"({right})"
    return left + symbol + right


def format_property(prop: SafetyProperty) -> str:
    return "AG " + _format(prop.body)


def atoms_of(node: Expr) -> FrozenSet[str]:
    if isinstance(node, Atom):
        return frozenset({node.name})
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, Not):
        return atoms_of(node.operand)
    return atoms_of(node.left) | atoms_of(node.right)


def evaluate(node: Expr, valuation: Mapping[str, np.ndarray], n_states: int) -> np.ndarray:
    """Truth vector of `node` over all states."""
    if isinstance(node, Const):
        return np.full(n_states, node.value, dtype=bool)
    if isinstance(node, Atom):
        if node.name not in valuation:
            raise PropertyModelMismatchError(node.name, valuation.keys())
        return valuation[node.name]
    if isinstance(node, Not):
        return ~evaluate(node.operand, valuation, n_states)
    left = evaluate(node.left, valuation, n_states)
    right = evaluate(node.right, valuation, n_states)
    return left & right if isinstance(node, And) else left | right
