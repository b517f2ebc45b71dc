"""Abstract syntax of the leak language.

Every node records the 1-based ``line`` and ``col`` where it starts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, compare=False, kw_only=True)
    col: int = field(default=0, compare=False, kw_only=True)


# -- types ----------------------------------------------------------------


@dataclass(frozen=True)
class EnumType(Node):
    """``{A, B, C}`` (symbolic) or ``{2, 3, 5}`` (integers)."""

    values: tuple


@dataclass(frozen=True)
class RangeType(Node):
    lo: int
    hi: int


@dataclass(frozen=True)
class BoolType(Node):
    pass


TypeExpr = Union[EnumType, RangeType, BoolType]


# -- expressions ----------------------------------------------------------


@dataclass(frozen=True)
class IntLit(Node):
    value: int


@dataclass(frozen=True)
class BoolLit(Node):
    value: bool


@dataclass(frozen=True)
class Name(Node):
    """A variable or an enum literal; the checker decides which."""

    ident: str


@dataclass(frozen=True)
class Unary(Node):
    op: str  # "-" or "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call(Node):
    """``succ(e)``, ``pred(e)`` or an application of a declared map."""

    func: str
    arg: "Expr"


Expr = Union[IntLit, BoolLit, Name, Unary, Binary, Call]


# -- distributions --------------------------------------------------------


@dataclass(frozen=True)
class Uniform(Node):
    items: tuple  # of Expr


@dataclass(frozen=True)
class Choose(Node):
    items: tuple  # of (Expr, Fraction)


@dataclass(frozen=True)
class Point(Node):
    expr: Expr


DistExpr = Union[Uniform, Choose, Point]


# -- declarations and statements ------------------------------------------


@dataclass(frozen=True)
class VarDecl(Node):
    name: str
    type: TypeExpr


@dataclass(frozen=True)
class MapDecl(Node):
    name: str
    domain: TypeExpr
    codomain: TypeExpr
    pairs: tuple  # of (Expr, Expr) literal pairs


@dataclass(frozen=True)
class Assign(Node):
    var: str
    dist: DistExpr


@dataclass(frozen=True)
class Leak(Node):
    dist: DistExpr


@dataclass(frozen=True)
class If(Node):
    cond: Expr
    then: tuple
    orelse: tuple


@dataclass(frozen=True)
class While(Node):
    cond: Expr
    body: tuple
    unroll: int


@dataclass(frozen=True)
class Skip(Node):
    pass


Stmt = Union[Assign, Leak, If, While, Skip]


@dataclass(frozen=True)
class Program(Node):
    vars: tuple = ()
    maps: tuple = ()
    body: tuple = ()


def to_jsonable(node):
    """Plain JSON view of an AST, tagging each node with its class name."""
    if isinstance(node, Node):
        out = {"node": type(node).__name__, "line": node.line, "col": node.col}
        for f in dataclasses.fields(node):
            if f.name in ("line", "col"):
                continue
            out[f.name] = to_jsonable(getattr(node, f.name))
        return out
    if isinstance(node, (tuple, list)):
        return [to_jsonable(v) for v in node]
    if isinstance(node, Fraction):
        return f"{node.numerator}/{node.denominator}"
    return node


def contains_leak(stmts) -> bool:
    for s in stmts:
        if isinstance(s, Leak):
            return True
        if isinstance(s, If) and (contains_leak(s.then) or contains_leak(s.orelse)):
            return True
        if isinstance(s, While) and contains_leak(s.body):
            return True
    return False
