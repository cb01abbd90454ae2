"""Boolean algebra over layers and the expression mini-language.

Operators: AND (edge intersection), OR (union), NOT (complement over
all vertex pairs), plus NAND, NOR and XOR which expand structurally:

    a NAND b  ->  NOT (a AND b)
    a NOR b   ->  NOT (a OR b)
    a XOR b   ->  (a AND NOT b) OR (NOT a AND b)

Expression grammar (case-insensitive keywords, ``(`` ``)`` grouping):

    or_expr   := and_expr (("OR" | "NOR" | "XOR") and_expr)*
    and_expr  := not_expr (("AND" | "NAND") not_expr)*
    not_expr  := "NOT" not_expr | "(" or_expr ")" | identifier

Binary operators associate left.  Evaluated names are fully
parenthesized, so a composed layer's label spells out exactly how it
was produced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .ingest import ConfigError, DataError
from .layers import Layer, n_pairs


@dataclass(frozen=True)
class LayerRef:
    name: str


@dataclass(frozen=True)
class And:
    left: "LayerExpr"
    right: "LayerExpr"


@dataclass(frozen=True)
class Or:
    left: "LayerExpr"
    right: "LayerExpr"


@dataclass(frozen=True)
class Not:
    child: "LayerExpr"


LayerExpr = LayerRef | And | Or | Not


def nand_expr(left: LayerExpr, right: LayerExpr) -> LayerExpr:
    return Not(And(left, right))


def nor_expr(left: LayerExpr, right: LayerExpr) -> LayerExpr:
    return Not(Or(left, right))


def xor_expr(left: LayerExpr, right: LayerExpr) -> LayerExpr:
    return Or(And(left, Not(right)), And(Not(left), right))


def expr_to_str(expr: LayerExpr) -> str:
    if isinstance(expr, LayerRef):
        return expr.name
    if isinstance(expr, And):
        return f"({expr_to_str(expr.left)} AND {expr_to_str(expr.right)})"
    if isinstance(expr, Or):
        return f"({expr_to_str(expr.left)} OR {expr_to_str(expr.right)})"
    if isinstance(expr, Not):
        return f"(NOT {expr_to_str(expr.child)})"
    raise TypeError(expr)


def expr_refs(expr: LayerExpr) -> set[str]:
    if isinstance(expr, LayerRef):
        return {expr.name}
    if isinstance(expr, Not):
        return expr_refs(expr.child)
    return expr_refs(expr.left) | expr_refs(expr.right)


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(?P<lparen>\()|(?P<rparen>\))|(?P<word>[\w.\-]+))")
_KEYWORDS = {"AND", "OR", "NOT", "NAND", "NOR", "XOR"}


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None or match.end() == pos:
            tail = text[pos:].strip()
            if not tail:
                break
            raise ConfigError(f"bad character in expression at {tail[:10]!r}")
        pos = match.end()
        if match.group("lparen"):
            tokens.append("(")
        elif match.group("rparen"):
            tokens.append(")")
        else:
            word = match.group("word")
            tokens.append(word.upper() if word.upper() in _KEYWORDS else word)
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise ConfigError("unexpected end of expression")
        self.pos += 1
        return token

    def or_expr(self) -> LayerExpr:
        node = self.and_expr()
        while self.peek() in ("OR", "NOR", "XOR"):
            op = self.take()
            right = self.and_expr()
            if op == "OR":
                node = Or(node, right)
            elif op == "NOR":
                node = nor_expr(node, right)
            else:
                node = xor_expr(node, right)
        return node

    def and_expr(self) -> LayerExpr:
        node = self.not_expr()
        while self.peek() in ("AND", "NAND"):
            op = self.take()
            right = self.not_expr()
            node = And(node, right) if op == "AND" else nand_expr(node, right)
        return node

    def not_expr(self) -> LayerExpr:
        token = self.peek()
        if token == "NOT":
            self.take()
            return Not(self.not_expr())
        if token == "(":
            self.take()
            node = self.or_expr()
            if self.peek() != ")":
                raise ConfigError("missing closing parenthesis")
            self.take()
            return node
        token = self.take()
        if token in _KEYWORDS or token == ")":
            raise ConfigError(f"expected a layer name, got {token!r}")
        return LayerRef(token)


def parse_expr(text: str) -> LayerExpr:
    """Parse expression text into a LayerExpr (derived ops expanded)."""
    tokens = _tokenize(text)
    if not tokens:
        raise ConfigError("empty expression")
    parser = _Parser(tokens)
    node = parser.or_expr()
    if parser.peek() is not None:
        raise ConfigError(f"trailing input after expression: {parser.peek()!r}")
    return node


# -- evaluation ---------------------------------------------------------------

def _check_same_vertices(a: Layer, b: Layer) -> None:
    if a.n_vertices != b.n_vertices:
        raise DataError(
            f"layers {a.name!r} and {b.name!r} have different vertex counts "
            f"({a.n_vertices} vs {b.n_vertices})"
        )


def and_compose(a: Layer, b: Layer) -> Layer:
    _check_same_vertices(a, b)
    return Layer(f"({a.name} AND {b.name})", a.n_vertices, a.bits & b.bits)


def or_compose(a: Layer, b: Layer) -> Layer:
    _check_same_vertices(a, b)
    return Layer(f"({a.name} OR {b.name})", a.n_vertices, a.bits | b.bits)


def not_compose(a: Layer) -> Layer:
    bits = ~a.bits
    spare = 8 * bits.size - n_pairs(a.n_vertices)
    if spare:
        bits[-1] &= np.uint8(0xFF >> spare)  # keep padding bits zero
    return Layer(f"(NOT {a.name})", a.n_vertices, bits)


def eval_expr(expr: LayerExpr, store: dict[str, Layer]) -> Layer:
    """Evaluate bottom-up against a name -> Layer store."""
    if isinstance(expr, LayerRef):
        layer = store.get(expr.name)
        if layer is None:
            raise ConfigError(f"unknown layer {expr.name!r}")
        return layer
    if isinstance(expr, And):
        return and_compose(eval_expr(expr.left, store), eval_expr(expr.right, store))
    if isinstance(expr, Or):
        return or_compose(eval_expr(expr.left, store), eval_expr(expr.right, store))
    if isinstance(expr, Not):
        return not_compose(eval_expr(expr.child, store))
    raise TypeError(expr)


def evaluate(text: str, store: dict[str, Layer]) -> Layer:
    return eval_expr(parse_expr(text), store)


# -- edge-count bounds ---------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Edge-count bound check for one composition step."""

    op: str
    n_vertices: int
    result_edges: int
    operand_edges: tuple[int, ...]
    lower: int
    upper: int
    passed: bool

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        operands = ", ".join(str(e) for e in self.operand_edges)
        return (
            f"{self.op}: |E| = {self.result_edges} with operands [{operands}] "
            f"requires {self.lower} <= |E| <= {self.upper}: {verdict}"
        )


def check_bounds(result: Layer, op: str, operands: list[Layer]) -> BoundReport:
    """Verify the edge-count bounds of one AND/OR/NOT application.

    AND: result is at most the smallest operand.  OR: at least the
    largest operand, at most all vertex pairs.  NOT: exactly the pair
    total minus the operand.  The pair total is over vertices.
    """
    if not operands:
        raise ValueError("check_bounds needs at least one operand")
    counts = tuple(layer.edge_count for layer in operands)
    total = n_pairs(result.n_vertices)
    got = result.edge_count
    if op == "AND":
        lower, upper = 0, min(counts)
    elif op == "OR":
        lower, upper = max(counts), total
    elif op == "NOT":
        if len(operands) != 1:
            raise ValueError("NOT takes exactly one operand")
        expected = total - counts[0]
        lower = upper = expected
    else:
        raise ValueError(f"unknown operator {op!r}")
    return BoundReport(
        op=op,
        n_vertices=result.n_vertices,
        result_edges=got,
        operand_edges=counts,
        lower=lower,
        upper=upper,
        passed=lower <= got <= upper,
    )
