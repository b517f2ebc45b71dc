"""Static checks: name resolution, typing, totality of maps, literal ranges."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import QifTypeError
from . import syntax as ast

INT, BOOL, ENUM = "int", "bool", "enum"


@dataclass(frozen=True)
class Type:
    """``kind`` is int, bool or enum; ``values`` is the finite domain when known."""

    kind: str
    values: tuple | None = None

    def describe(self) -> str:
        if self.kind == ENUM:
            return "{" + ", ".join(map(str, self.values)) + "}"
        if self.kind == INT and self.values is not None:
            return "int{" + ", ".join(map(str, self.values)) + "}"
        return self.kind


BOOL_T = Type(BOOL, (False, True))
INT_T = Type(INT)


def type_of_decl(t) -> Type:
    if isinstance(t, ast.BoolType):
        return BOOL_T
    if isinstance(t, ast.RangeType):
        return Type(INT, tuple(range(t.lo, t.hi + 1)))
    if all(isinstance(v, int) for v in t.values):
        return Type(INT, tuple(t.values))
    return Type(ENUM, tuple(t.values))


def compatible(a: Type, b: Type) -> bool:
    if a.kind != b.kind:
        return False
    return a.kind != ENUM or a.values == b.values


@dataclass
class MapInfo:
    name: str
    domain: Type
    codomain: Type
    table: dict


@dataclass
class Checked:
    """A type-checked program with its resolved environment."""

    program: ast.Program
    var_names: tuple
    var_types: dict
    maps: dict
    enum_literals: dict
    types: dict = field(default_factory=dict)  # id(expr) -> Type

    def type_of(self, expr) -> Type:
        return self.types[id(expr)]


def _err(node, message: str):
    raise QifTypeError(message, node.line or None, node.col or None)


class Checker:
    def __init__(self, program: ast.Program):
        self.program = program
        self.var_types: dict = {}
        self.var_names: list = []
        self.maps: dict = {}
        self.enum_literals: dict = {}
        self.types: dict = {}

    def run(self) -> Checked:
        for decl in self.program.vars:
            if decl.name in self.var_types:
                _err(decl, f"variable {decl.name!r} declared twice")
            t = type_of_decl(decl.type)
            self.var_types[decl.name] = t
            self.var_names.append(decl.name)
            self._register_enum(decl.type, t)
        for decl in self.program.maps:
            self._register_enum(decl.domain, type_of_decl(decl.domain))
            self._register_enum(decl.codomain, type_of_decl(decl.codomain))
        for decl in self.program.maps:
            self._check_map(decl)
        for name in self.var_types:
            if name in self.enum_literals:
                decl = next(d for d in self.program.vars if d.name == name)
                _err(decl, f"{name!r} is both a variable and an enum value")
        self._block(self.program.body)
        return Checked(self.program, tuple(self.var_names), self.var_types, self.maps, self.enum_literals, self.types)

    def _register_enum(self, node, t: Type):
        if t.kind != ENUM:
            return
        for v in t.values:
            known = self.enum_literals.get(v)
            if known is not None and known != t:
                _err(node, f"enum value {v!r} belongs to two different enumerations")
            self.enum_literals[v] = t

    def _literal(self, lit, expected: Type, node) -> object:
        if isinstance(lit, ast.IntLit):
            value, kind = lit.value, INT
        elif isinstance(lit, ast.BoolLit):
            value, kind = lit.value, BOOL
        else:
            value, kind = lit.ident, ENUM
        if kind != expected.kind or value not in expected.values:
            _err(lit, f"{value!r} is not a value of {expected.describe()}")
        return value

    def _check_map(self, decl: ast.MapDecl):
        if decl.name in self.maps or decl.name in self.var_types:
            _err(decl, f"name {decl.name!r} declared twice")
        dom, cod = type_of_decl(decl.domain), type_of_decl(decl.codomain)
        table = {}
        for key, val in decl.pairs:
            k = self._literal(key, dom, decl)
            if k in table:
                _err(key, f"map {decl.name!r} defines {k!r} twice")
            table[k] = self._literal(val, cod, decl)
        missing = [v for v in dom.values if v not in table]
        if missing:
            _err(decl, f"map {decl.name!r} is not total: no entry for {', '.join(map(repr, missing))}")
        self.maps[decl.name] = MapInfo(decl.name, dom, cod, table)

    # -- statements

    def _block(self, stmts):
        for s in stmts:
            self._stmt(s)

    def _stmt(self, s):
        if isinstance(s, ast.Skip):
            return
        if isinstance(s, ast.Assign):
            if s.var not in self.var_types:
                _err(s, f"assignment to undeclared variable {s.var!r}")
            target = self.var_types[s.var]
            for expr in self._dist(s.dist):
                t = self.types[id(expr)]
                if not compatible(t, target):
                    _err(expr, f"cannot assign {t.describe()} to {s.var!r} of type {target.describe()}")
                if isinstance(expr, ast.IntLit) and expr.value not in target.values:
                    _err(expr, f"value {expr.value} is out of range for {s.var!r}")
            return
        if isinstance(s, ast.Leak):
            exprs = self._dist(s.dist)
            first = self.types[id(exprs[0])]
            for expr in exprs[1:]:
                if not compatible(self.types[id(expr)], first):
                    _err(expr, "leaked alternatives have different types")
            return
        if isinstance(s, ast.If):
            self._bool(s.cond)
            self._block(s.then)
            self._block(s.orelse)
            return
        if isinstance(s, ast.While):
            self._bool(s.cond)
            if s.unroll < 0:
                _err(s, "unroll bound must be nonnegative")
            self._block(s.body)
            return
        raise TypeError(f"unknown statement {s!r}")

    def _dist(self, d) -> list:
        if isinstance(d, ast.Point):
            exprs = [d.expr]
        elif isinstance(d, ast.Uniform):
            exprs = list(d.items)
        else:
            exprs = [e for e, _ in d.items]
            weights = [w for _, w in d.items]
            if any(w <= 0 for w in weights):
                _err(d, "choice weights must be positive")
            if sum(weights) != 1:
                _err(d, f"choice weights sum to {sum(weights, Fraction(0))}, not 1")
        for e in exprs:
            self._expr(e)
        return exprs

    def _bool(self, e):
        if self._expr(e).kind != BOOL:
            _err(e, "condition must be boolean")

    # -- expressions

    def _expr(self, e) -> Type:
        t = self._infer(e)
        self.types[id(e)] = t
        return t

    def _infer(self, e) -> Type:
        if isinstance(e, ast.IntLit):
            return INT_T
        if isinstance(e, ast.BoolLit):
            return BOOL_T
        if isinstance(e, ast.Name):
            if e.ident in self.var_types:
                return self.var_types[e.ident]
            if e.ident in self.enum_literals:
                return self.enum_literals[e.ident]
            _err(e, f"unknown name {e.ident!r}")
        if isinstance(e, ast.Unary):
            t = self._expr(e.operand)
            if e.op == "not":
                if t.kind != BOOL:
                    _err(e, "'not' needs a boolean")
                return BOOL_T
            if t.kind != INT:
                _err(e, "unary '-' needs an integer")
            return INT_T
        if isinstance(e, ast.Binary):
            lt, rt = self._expr(e.left), self._expr(e.right)
            if e.op in ("and", "or"):
                if lt.kind != BOOL or rt.kind != BOOL:
                    _err(e, f"{e.op!r} needs booleans")
                return BOOL_T
            if e.op in ("==", "!="):
                if not compatible(lt, rt):
                    _err(e, f"cannot compare {lt.describe()} with {rt.describe()}")
                return BOOL_T
            if e.op in ("<", "<=", ">", ">="):
                if not compatible(lt, rt) or lt.kind == BOOL:
                    _err(e, f"cannot order {lt.describe()} against {rt.describe()}")
                return BOOL_T
            if lt.kind != INT or rt.kind != INT:
                _err(e, f"{e.op!r} needs integers")
            return INT_T
        if isinstance(e, ast.Call):
            t = self._expr(e.arg)
            if e.func in ("succ", "pred"):
                if t.kind == ENUM:
                    return t
                if t.kind == INT:
                    return INT_T
                _err(e, f"{e.func} needs an integer or an enum")
            info = self.maps.get(e.func)
            if info is None:
                _err(e, f"unknown function {e.func!r}")
            if t.kind != info.domain.kind or (t.kind == ENUM and t != info.domain):
                _err(e, f"{e.func} expects {info.domain.describe()}, got {t.describe()}")
            return info.codomain
        raise TypeError(f"unknown expression {e!r}")


def check(program: ast.Program) -> Checked:
    """Resolve names and types; raises :class:`QifTypeError` on the first problem."""
    return Checker(program).run()
