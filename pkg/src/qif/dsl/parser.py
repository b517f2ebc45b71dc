"""Lexer and recursive-descent parser for ``.qif`` programs.

Grammar (``;`` between statements is optional)::

    program  := (decl | stmt)*
    decl     := 'var' IDENT ':' type
              | 'map' IDENT ':' type '->' type '{' [lit '->' lit (',' lit '->' lit)*] '}'
    type     := '{' lit (',' lit)* '}' | 'int' '[' int '..' int ']' | 'bool'
    stmt     := IDENT '<-' dist | IDENT ':=' expr | 'leak' (dist | expr) | 'skip'
              | 'if' expr 'then' stmt* ['else' stmt*] 'fi'
              | 'while' expr 'do' stmt* 'od' 'unroll' INT
    dist     := 'uniform' '{' expr (',' expr)* '}'
              | 'choose' '{' expr '@' prob (',' expr '@' prob)* '}'
    prob     := INT ['/' INT]

Expressions, loosest first: ``or``; ``and``; ``not``; comparisons
(``== != < <= > >=``, non-associative); ``+ -``; ``* mod div``; unary ``-``;
atoms (literals, names, ``succ(e)``, ``pred(e)``, ``f(e)``, parentheses).
Comments run from ``//`` or ``#`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from ..errors import QifSyntaxError
from . import syntax as ast

KEYWORDS = {
    "var", "map", "int", "bool", "uniform", "choose", "leak", "if", "then", "else", "fi",
    "while", "do", "od", "unroll", "skip", "true", "false", "and", "or", "not", "mod", "div",
    "succ", "pred",
}

SYMBOLS = ["<-", ":=", "->", "..", "==", "!=", "<=", ">=", "<", ">", "+", "-", "*", "/", "@",
           "{", "}", "(", ")", "[", "]", ",", ";", ":"]

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\f]+)|(?P<nl>\n)|(?P<comment>(//|\#)[^\n]*)"
    r"|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in SYMBOLS) + ")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "sym", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise QifSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "int":
            tokens.append(Token("int", value, line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if value in KEYWORDS else "ident", value, line, col))
        elif kind == "sym":
            tokens.append(Token("sym", value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


_COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
_STMT_END = ("fi", "else", "od")


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("kw", "sym") and tok.text == text

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise QifSyntaxError(f"{message}, found {found}", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.peek().kind != "ident":
            self.error("expected a name")
        return self.advance()

    def expect_int(self) -> int:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        if self.peek().kind != "int":
            self.error("expected an integer")
        value = int(self.advance().text)
        return -value if neg else value

    @staticmethod
    def _pos(tok: Token) -> dict:
        return {"line": tok.line, "col": tok.col}

    # -- program

    def parse_program(self) -> ast.Program:
        vars_, maps, body = [], [], []
        while self.peek().kind != "eof":
            if self.at("var"):
                vars_.append(self.parse_var())
            elif self.at("map"):
                maps.append(self.parse_map())
            elif self.at(";"):
                self.advance()
            else:
                if any(self.at(k) for k in _STMT_END):
                    self.error("unexpected block terminator")
                body.append(self.parse_stmt())
        return ast.Program(tuple(vars_), tuple(maps), tuple(body), line=1, col=1)

    def parse_var(self) -> ast.VarDecl:
        tok = self.expect("var")
        name = self.expect_ident().text
        self.expect(":")
        return ast.VarDecl(name, self.parse_type(), **self._pos(tok))

    def parse_map(self) -> ast.MapDecl:
        tok = self.expect("map")
        name = self.expect_ident().text
        self.expect(":")
        dom = self.parse_type()
        self.expect("->")
        cod = self.parse_type()
        self.expect("{")
        pairs = []
        if not self.at("}"):
            while True:
                key = self.parse_literal()
                self.expect("->")
                pairs.append((key, self.parse_literal()))
                if not self.at(","):
                    break
                self.advance()
        self.expect("}")
        return ast.MapDecl(name, dom, cod, tuple(pairs), **self._pos(tok))

    def parse_type(self):
        tok = self.peek()
        if self.at("bool"):
            self.advance()
            return ast.BoolType(**self._pos(tok))
        if self.at("int"):
            self.advance()
            self.expect("[")
            lo = self.expect_int()
            self.expect("..")
            hi = self.expect_int()
            self.expect("]")
            if lo > hi:
                raise QifSyntaxError(f"empty integer range {lo}..{hi}", tok.line, tok.col)
            return ast.RangeType(lo, hi, **self._pos(tok))
        if self.at("{"):
            self.advance()
            values = []
            while True:
                lit = self.parse_literal()
                if isinstance(lit, ast.BoolLit):
                    self.error("booleans are not allowed in an enumerated type", self.tokens[self.pos - 1])
                values.append(lit.ident if isinstance(lit, ast.Name) else lit.value)
                if not self.at(","):
                    break
                self.advance()
            self.expect("}")
            kinds = {type(v) for v in values}
            if len(kinds) > 1:
                raise QifSyntaxError("enumerated type mixes names and integers", tok.line, tok.col)
            if len(set(values)) != len(values):
                raise QifSyntaxError("enumerated type repeats a value", tok.line, tok.col)
            return ast.EnumType(tuple(values), **self._pos(tok))
        self.error("expected a type")

    def parse_literal(self):
        tok = self.peek()
        if tok.kind == "int" or self.at("-"):
            return ast.IntLit(self.expect_int(), **self._pos(tok))
        if self.at("true") or self.at("false"):
            self.advance()
            return ast.BoolLit(tok.text == "true", **self._pos(tok))
        if tok.kind == "ident":
            self.advance()
            return ast.Name(tok.text, **self._pos(tok))
        self.error("expected a literal")

    # -- statements

    def parse_block(self, *terminators: str) -> tuple:
        stmts = []
        while not any(self.at(t) for t in terminators):
            if self.peek().kind == "eof":
                self.error(f"expected {' or '.join(map(repr, terminators))}")
            if self.at(";"):
                self.advance()
                continue
            if self.at("var") or self.at("map"):
                self.error("declarations are only allowed at top level")
            stmts.append(self.parse_stmt())
        return tuple(stmts)

    def parse_stmt(self):
        tok = self.peek()
        pos = self._pos(tok)
        if self.at("skip"):
            self.advance()
            return ast.Skip(**pos)
        if self.at("leak"):
            self.advance()
            if self.at("uniform") or self.at("choose"):
                return ast.Leak(self.parse_dist(), **pos)
            expr = self.parse_expr()
            return ast.Leak(ast.Point(expr, line=expr.line, col=expr.col), **pos)
        if self.at("if"):
            self.advance()
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_block("else", "fi")
            orelse = ()
            if self.at("else"):
                self.advance()
                orelse = self.parse_block("fi")
            self.expect("fi")
            return ast.If(cond, then, orelse, **pos)
        if self.at("while"):
            self.advance()
            cond = self.parse_expr()
            self.expect("do")
            body = self.parse_block("od")
            self.expect("od")
            self.expect("unroll")
            if self.peek().kind != "int":
                self.error("expected an unroll bound")
            return ast.While(cond, body, int(self.advance().text), **pos)
        if tok.kind == "ident":
            self.advance()
            if self.at("<-"):
                self.advance()
                return ast.Assign(tok.text, self.parse_dist(), **pos)
            if self.at(":="):
                self.advance()
                expr = self.parse_expr()
                return ast.Assign(tok.text, ast.Point(expr, line=expr.line, col=expr.col), **pos)
            self.error("expected '<-' or ':='")
        self.error("expected a statement")

    def parse_dist(self):
        tok = self.peek()
        pos = self._pos(tok)
        if self.at("uniform"):
            self.advance()
            self.expect("{")
            items = [self.parse_expr()]
            while self.at(","):
                self.advance()
                items.append(self.parse_expr())
            self.expect("}")
            return ast.Uniform(tuple(items), **pos)
        if self.at("choose"):
            self.advance()
            self.expect("{")
            items = [self.parse_weighted()]
            while self.at(","):
                self.advance()
                items.append(self.parse_weighted())
            self.expect("}")
            return ast.Choose(tuple(items), **pos)
        self.error("expected 'uniform' or 'choose'")

    def parse_weighted(self):
        expr = self.parse_expr()
        self.expect("@")
        tok = self.peek()
        if tok.kind != "int":
            self.error("expected a probability")
        num = int(self.advance().text)
        den = 1
        if self.at("/"):
            self.advance()
            if self.peek().kind != "int":
                self.error("expected a denominator")
            den_tok = self.advance()
            den = int(den_tok.text)
            if den == 0:
                raise QifSyntaxError("zero denominator", den_tok.line, den_tok.col)
        return expr, Fraction(num, den)

    # -- expressions

    def parse_expr(self):
        left = self.parse_and()
        while self.at("or"):
            tok = self.advance()
            left = ast.Binary("or", left, self.parse_and(), **self._pos(tok))
        return left

    def parse_and(self):
        left = self.parse_not()
        while self.at("and"):
            tok = self.advance()
            left = ast.Binary("and", left, self.parse_not(), **self._pos(tok))
        return left

    def parse_not(self):
        if self.at("not"):
            tok = self.advance()
            return ast.Unary("not", self.parse_not(), **self._pos(tok))
        return self.parse_comparison()

    def parse_comparison(self):
        left = self.parse_additive()
        if any(self.at(op) for op in _COMPARISONS):
            tok = self.advance()
            left = ast.Binary(tok.text, left, self.parse_additive(), **self._pos(tok))
            if any(self.at(op) for op in _COMPARISONS):
                self.error("comparisons do not chain")
        return left

    def parse_additive(self):
        left = self.parse_multiplicative()
        while self.at("+") or self.at("-"):
            tok = self.advance()
            left = ast.Binary(tok.text, left, self.parse_multiplicative(), **self._pos(tok))
        return left

    def parse_multiplicative(self):
        left = self.parse_unary()
        while self.at("*") or self.at("mod") or self.at("div"):
            tok = self.advance()
            left = ast.Binary(tok.text, left, self.parse_unary(), **self._pos(tok))
        return left

    def parse_unary(self):
        if self.at("-"):
            tok = self.advance()
            operand = self.parse_unary()
            if isinstance(operand, ast.IntLit):
                return ast.IntLit(-operand.value, **self._pos(tok))
            return ast.Unary("-", operand, **self._pos(tok))
        return self.parse_atom()

    def parse_atom(self):
        tok = self.peek()
        pos = self._pos(tok)
        if tok.kind == "int":
            self.advance()
            return ast.IntLit(int(tok.text), **pos)
        if self.at("true") or self.at("false"):
            self.advance()
            return ast.BoolLit(tok.text == "true", **pos)
        if self.at("("):
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if self.at("succ") or self.at("pred") or (tok.kind == "ident" and self.at("(", 1)):
            self.advance()
            self.expect("(")
            arg = self.parse_expr()
            self.expect(")")
            return ast.Call(tok.text, arg, **pos)
        if tok.kind == "ident":
            self.advance()
            return ast.Name(tok.text, **pos)
        self.error("expected an expression")


def parse(text: str) -> ast.Program:
    """Parse program text into an AST; raises :class:`QifSyntaxError` on bad input."""
    return Parser(text).parse_program()
