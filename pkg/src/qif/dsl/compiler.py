"""Compile checked programs to HMM step lists over the enumerated state space.

Assignments become markovs and leaks become channels.  A straight-line run
of them is fused into steps ``<C, M>``: consecutive markovs multiply,
consecutive channels combine in parallel, and a channel after a markov starts
a new step.  A loop body is compiled to its own steps, which are repeated
``unroll`` times; afterwards every reachable state must falsify the guard.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from ..errors import CapExceeded, CompileError
from ..hmm import HmmSteps, Step
from ..prob import ONE, StochMatrix, cascade, parallel
from . import syntax as ast
from .checker import BOOL, ENUM, INT, Checked, check
from .parser import parse

DEFAULT_MAX_STATES = 10**5


def _cerr(node, message: str):
    raise CompileError(message, node.line or None, node.col or None)


@dataclass(frozen=True)
class StateSpace:
    names: tuple
    tuples: tuple  # every state as a tuple of variable values
    labels: tuple  # public labels: bare values for one variable, tuples otherwise

    @property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.tuples)}

    def __len__(self):
        return len(self.tuples)


def state_space(checked: Checked | ast.Program, *, max_states: int = DEFAULT_MAX_STATES) -> StateSpace:
    """All assignments of values to the declared variables, lexicographically ordered."""
    if isinstance(checked, ast.Program):
        checked = check(checked)
    names = checked.var_names
    domains = [checked.var_types[n].values for n in names]
    size = 1
    for d in domains:
        size *= len(d)
    if size > max_states:
        raise CapExceeded("states", max_states, size)
    tuples = tuple(itertools.product(*domains))
    labels = tuple(t[0] for t in tuples) if len(names) == 1 else tuples
    return StateSpace(tuple(names), tuples, labels)


class _Compiler:
    def __init__(self, checked: Checked, space: StateSpace, unroll_override: int | None):
        self.c = checked
        self.space = space
        self.n = len(space)
        self.index = space.index
        self.pos = {name: i for i, name in enumerate(space.names)}
        self.unroll_override = unroll_override
        self._row_cache: dict = {}

    # -- expressions as closures over a state tuple

    def expr(self, e) -> Callable:
        if isinstance(e, (ast.IntLit, ast.BoolLit)):
            v = e.value
            return lambda s: v
        if isinstance(e, ast.Name):
            if e.ident in self.pos:
                i = self.pos[e.ident]
                return lambda s: s[i]
            v = e.ident
            return lambda s: v
        if isinstance(e, ast.Unary):
            f = self.expr(e.operand)
            if e.op == "not":
                return lambda s: not f(s)
            return lambda s: -f(s)
        if isinstance(e, ast.Binary):
            return self._binary(e)
        if isinstance(e, ast.Call):
            f = self.expr(e.arg)
            t = self.c.type_of(e.arg)
            if e.func in ("succ", "pred"):
                step = 1 if e.func == "succ" else -1
                if t.kind == ENUM:
                    vals = t.values
                    where = {v: i for i, v in enumerate(vals)}
                    return lambda s: vals[(where[f(s)] + step) % len(vals)]
                return lambda s: f(s) + step
            table = self.c.maps[e.func].table
            name = e.func

            def call(s):
                v = f(s)
                try:
                    return table[v]
                except KeyError:
                    _cerr(e, f"{name}({v!r}) is undefined")

            return call
        raise TypeError(f"unknown expression {e!r}")

    def _binary(self, e) -> Callable:
        f, g = self.expr(e.left), self.expr(e.right)
        op = e.op
        if op == "and":
            return lambda s: f(s) and g(s)
        if op == "or":
            return lambda s: f(s) or g(s)
        if op == "==":
            return lambda s: f(s) == g(s)
        if op == "!=":
            return lambda s: f(s) != g(s)
        if op in ("<", "<=", ">", ">="):
            t = self.c.type_of(e.left)
            if t.kind == ENUM:
                where = {v: i for i, v in enumerate(t.values)}
                f0, g0 = f, g
                f, g = (lambda s: where[f0(s)]), (lambda s: where[g0(s)])
            return {
                "<": lambda s: f(s) < g(s),
                "<=": lambda s: f(s) <= g(s),
                ">": lambda s: f(s) > g(s),
                ">=": lambda s: f(s) >= g(s),
            }[op]
        if op == "+":
            return lambda s: f(s) + g(s)
        if op == "-":
            return lambda s: f(s) - g(s)
        if op == "*":
            return lambda s: f(s) * g(s)

        def divide(s):
            a, b = f(s), g(s)
            if b == 0:
                _cerr(e, f"{op} by zero")
            return a % b if op == "mod" else a // b

        return divide

    def weighted(self, d) -> list:
        """The distribution expression as (closure, weight) pairs."""
        if isinstance(d, ast.Point):
            return [(self.expr(d.expr), ONE)]
        if isinstance(d, ast.Uniform):
            w = Fraction(1, len(d.items))
            return [(self.expr(e), w) for e in d.items]
        return [(self.expr(e), w) for e, w in d.items]

    # -- primitive matrices

    def _share(self, row: dict) -> dict:
        key = tuple(sorted(row.items()))
        return self._row_cache.setdefault(key, row)

    def assign_markov(self, s: ast.Assign) -> StochMatrix:
        target = self.c.var_types[s.var]
        allowed = set(target.values)
        i = self.pos[s.var]
        parts = self.weighted(s.dist)
        data = []
        for st in self.space.tuples:
            row: dict = {}
            for f, w in parts:
                v = f(st)
                if v not in allowed:
                    _cerr(s, f"value {v!r} is out of range for {s.var!r}")
                k = self.index[st[:i] + (v,) + st[i + 1:]]
                row[k] = row.get(k, 0) + w
            data.append(self._share(row))
        labels = self.space.labels
        return StochMatrix._raw(labels, labels, tuple(data))

    def leak_channel(self, s: ast.Leak) -> StochMatrix:
        parts = self.weighted(s.dist)
        exprs = [s.dist.expr] if isinstance(s.dist, ast.Point) else [
            (e if isinstance(s.dist, ast.Uniform) else e[0]) for e in s.dist.items
        ]
        rows = []
        produced = set()
        for st in self.space.tuples:
            row: dict = {}
            for f, w in parts:
                v = f(st)
                produced.add(v)
                row[v] = row.get(v, 0) + w
            rows.append(row)
        alphabet = self._alphabet(exprs, produced)
        where = {v: j for j, v in enumerate(alphabet)}
        data = tuple(self._share({where[v]: w for v, w in row.items()}) for row in rows)
        return StochMatrix._raw(self.space.labels, alphabet, data)

    def _alphabet(self, exprs, produced) -> tuple:
        domains = {self.c.type_of(e).values for e in exprs}
        if len(domains) == 1:
            (static,) = domains
            if static is not None and produced <= set(static):
                return tuple(static)
        return tuple(sorted(produced))

    # -- leak-free runs (used for conditionals)

    def run(self, stmts, st: tuple) -> dict:
        """Final-state distribution of a leak-free block started in ``st``."""
        dist = {st: ONE}
        for s in stmts:
            dist = self._run_stmt(s, dist)
        return dist

    def _run_stmt(self, s, dist: dict) -> dict:
        if isinstance(s, ast.Skip):
            return dist
        out: dict = {}
        if isinstance(s, ast.Assign):
            i = self.pos[s.var]
            allowed = set(self.c.var_types[s.var].values)
            parts = self.weighted(s.dist)
            for st, p in dist.items():
                for f, w in parts:
                    v = f(st)
                    if v not in allowed:
                        _cerr(s, f"value {v!r} is out of range for {s.var!r}")
                    nxt = st[:i] + (v,) + st[i + 1:]
                    out[nxt] = out.get(nxt, 0) + p * w
            return out
        if isinstance(s, ast.If):
            guard = self.expr(s.cond)
            for st, p in dist.items():
                for nxt, q in self.run(s.then if guard(st) else s.orelse, st).items():
                    out[nxt] = out.get(nxt, 0) + p * q
            return out
        if isinstance(s, ast.While):
            guard = self.expr(s.cond)
            for _ in range(self.unroll(s)):
                dist = self._run_block(s.body, dist)
            stuck = [st for st in dist if guard(st)]
            if stuck:
                _cerr(s, f"unroll bound {self.unroll(s)} is too small: the guard can still hold")
            return dist
        _cerr(s, "leak inside a conditional is not supported")

    def _run_block(self, stmts, dist: dict) -> dict:
        for s in stmts:
            dist = self._run_stmt(s, dist)
        return dist

    def if_markov(self, s: ast.If) -> StochMatrix:
        if ast.contains_leak(s.then) or ast.contains_leak(s.orelse):
            _cerr(s, "leak inside a conditional is not supported")
        data = []
        for st in self.space.tuples:
            row = {self.index[k]: v for k, v in self.run((s,), st).items() if v}
            data.append(self._share(row))
        labels = self.space.labels
        return StochMatrix._raw(labels, labels, tuple(data))

    def unroll(self, s: ast.While) -> int:
        return s.unroll if self.unroll_override is None else self.unroll_override

    # -- blocks

    def block(self, stmts, reach: frozenset, check_loops: bool) -> tuple[list, frozenset]:
        """Items (``("M", m)``, ``("C", c)`` or ``("S", steps)``) and the exit reachable set."""
        items = []
        for s in stmts:
            if isinstance(s, ast.Skip):
                continue
            if isinstance(s, ast.Assign):
                m = self.assign_markov(s)
                items.append(("M", m))
                reach = _post(m, reach)
            elif isinstance(s, ast.Leak):
                items.append(("C", self.leak_channel(s)))
            elif isinstance(s, ast.If):
                m = self.if_markov(s)
                items.append(("M", m))
                reach = _post(m, reach)
            elif isinstance(s, ast.While):
                steps, reach = self.loop(s, reach, check_loops)
                items.append(("S", steps))
            else:
                raise TypeError(f"unknown statement {s!r}")
        return items, reach

    def loop(self, s: ast.While, reach: frozenset, check_loops: bool):
        body_items, _ = self.block(s.body, reach, False)
        body = fuse(body_items, self.space.labels, allow_empty=True)
        entries = []
        for _ in range(self.unroll(s)):
            entries.append(reach)
            for st in body:
                reach = _post(st.markov, reach)
        if check_loops:
            if _has_loop(s.body) and entries:
                # nested loops are checked from every state the body can start in
                self.block(s.body, frozenset().union(*entries), True)
            guard = self.expr(s.cond)
            tuples = self.space.tuples
            if any(guard(tuples[i]) for i in reach):
                _cerr(s, f"unroll bound {self.unroll(s)} is too small: the guard can still hold")
        return list(body) * self.unroll(s), reach


def _has_loop(stmts) -> bool:
    return any(isinstance(s, ast.While) or (isinstance(s, ast.If) and (_has_loop(s.then) or _has_loop(s.orelse))) for s in stmts)


def _post(m: StochMatrix, reach: frozenset) -> frozenset:
    out = set()
    seen = set()
    for i in reach:
        row = m.data[i]
        if id(row) in seen:
            continue
        seen.add(id(row))
        out.update(row)
    return frozenset(out)


def fuse(items, labels: tuple, *, allow_empty: bool = False) -> list:
    """Turn a run of markovs, channels and finished steps into HMM-steps."""
    steps = []
    chan = markov = None

    def flush():
        nonlocal chan, markov
        if chan is None and markov is None:
            return
        steps.append(Step(
            chan if chan is not None else StochMatrix.null(labels),
            markov if markov is not None else StochMatrix.identity(labels),
        ))
        chan = markov = None

    for kind, value in items:
        if kind == "M":
            markov = value if markov is None else cascade(markov, value)
        elif kind == "C":
            if markov is not None:
                flush()
            chan = value if chan is None else parallel(chan, value)
        else:
            flush()
            steps.extend(value)
    flush()
    if not steps and not allow_empty:
        steps.append(Step(StochMatrix.null(labels), StochMatrix.identity(labels)))
    return steps


def compile_program(
    program: ast.Program | Checked,
    *,
    max_states: int = DEFAULT_MAX_STATES,
    unroll_override: int | None = None,
) -> HmmSteps:
    """Compile to a step list; raises :class:`CompileError` on unsupported or unsafe code."""
    checked = program if isinstance(program, Checked) else check(program)
    space = state_space(checked, max_states=max_states)
    comp = _Compiler(checked, space, unroll_override)
    items, _ = comp.block(checked.program.body, frozenset(range(len(space))), True)
    return HmmSteps(fuse(items, space.labels))


def compile_source(text: str, **kwargs) -> HmmSteps:
    return compile_program(parse(text), **kwargs)


__all__ = [
    "DEFAULT_MAX_STATES",
    "StateSpace",
    "compile_program",
    "compile_source",
    "fuse",
    "state_space",
]
