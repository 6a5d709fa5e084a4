"""Parser for the `.cov` surface language.

Layout of a file: an optional `(* covcheck: window=N *)` pragma, zero or
more `let` definitions, then a single `check <expr> : <rtype>` target.
Comments are OCaml-style `(* ... *)` and nest.  The qualifier value
variable is written `v` and is reserved.

Grammar notes beyond the sketch this follows:
  * `fun (x : t) -> e` lambda expressions (needed to round-trip printed
    core terms and to pass functions as arguments);
  * `<=>` in qualifiers (if-and-only-if);
  * `{b | phi} -> t` is accepted without a binder name (a fresh unused
    name is invented);
  * operator sections `(+) (-) (==) (<=) (&&)` name the builtin operators;
  * a definition may give parameters and a result ascription together:
    `let f (x : {int | true}) : [int | v = x] = x`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import qualifiers as Q
from .qualifiers import BOOL, INT, UNIT, BaseType, BoolV, IntV, Prod, Qualifier, UnitV
from .terms import (
    Def,
    Pattern,
    PPair,
    PUnit,
    PVar,
    SApp,
    SAssert,
    SAssume,
    SBind,
    SConst,
    SExpr,
    SIf,
    SLambda,
    SLet,
    SPair,
    SurfaceProgram,
    SVar,
)
from .types import CoverBase, OverBase, HoArrow, OverArrow, RType, UnderArrow, is_arrow

KEYWORDS = {
    "let", "in", "if", "then", "else", "assume", "assert", "check", "fun",
    "true", "false", "int", "bool", "unit", "v",
}

_OPS = ["==>", "<=>", "==", "<=", "&&", "||", "->", "<", "+", "-", "*", "!",
        "(", ")", "[", "]", "{", "}", "|", ":", ",", "="]

_PRAGMA = re.compile(r"\(\*\s*covcheck:\s*window\s*=\s*(\d+)\s*\*\)")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: set[str] | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.expected = sorted(expected) if expected else []
        loc = f"{line}:{col}"
        extra = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"parse error at {loc}: {message}{extra}")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", a keyword, or an operator literal
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if source.startswith("(*", i):
            depth, start_line, start_col = 1, line, col
            advance(2)
            while depth > 0:
                if i >= n:
                    raise ParseError("unterminated comment", start_line, start_col)
                if source.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif source.startswith("*)", i):
                    depth -= 1
                    advance(2)
                else:
                    advance(1)
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("number", source[i:j], line, col))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            start_line, start_col = line, col
            advance(j - i)
            # `let*` is a single token
            if word == "let" and i < n and source[i] == "*":
                advance(1)
                tokens.append(Token("let*", "let*", start_line, start_col))
                continue
            kind = word if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, start_line, start_col))
            continue
        for op in _OPS:
            if source.startswith(op, i):
                tokens.append(Token(op, op, line, col))
                advance(len(op))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


OPERATOR_NAMES = {"+", "-", "==", "<=", "&&"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self._fresh = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self, off: int = 0) -> Token:
        return self.tokens[min(self.pos + off, len(self.tokens) - 1)]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.peek().kind in kinds

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"unexpected {t.kind or 'end of input'} {t.text!r}", t.line, t.col, {kind})
        return self.next()

    def fail(self, message: str, expected: set[str] | None = None) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.col, expected)

    def fresh_param(self) -> str:
        self._fresh += 1
        return f"_p{self._fresh}"

    # -- programs ----------------------------------------------------------

    def program(self, window: int | None) -> SurfaceProgram:
        if self.at("eof"):
            raise self.fail("empty program")
        defs: list[Def] = []
        seen: set[str] = set()
        while self.at("let"):
            d = self.definition()
            if d.name in seen:
                t = self.peek()
                raise ParseError(f"duplicate top-level name: {d.name}", t.line, t.col)
            seen.add(d.name)
            defs.append(d)
        self.expect("check")
        main = self.expr()
        self.expect(":")
        goal = self.rtype()
        self.expect("eof")
        return SurfaceProgram(tuple(defs), main, goal, window)

    def definition(self) -> Def:
        start = self.expect("let")
        name = self.expect("ident").text
        params: list[tuple[str, RType]] = []
        while self.at("("):
            # distinguish `(x : t)` parameter from nothing else; defs only
            # allow annotated parameters
            self.expect("(")
            pname = self.expect("ident").text
            self.expect(":")
            annot = self.rtype_or_base_shorthand()
            self.expect(")")
            params.append((pname, annot))
        result: RType | None = None
        if self.at(":"):
            self.next()
            result = self.rtype()
        self.expect("=")
        body = self.expr()
        return Def(name, tuple(params), result, body, span=(start.line, start.col))

    def rtype_or_base_shorthand(self) -> RType:
        if self.at("int", "bool", "unit"):
            b = self.base_type()
            return OverBase(b, Q.TRUE)
        return self.rtype()

    # -- expressions ---------------------------------------------------------

    def expr(self) -> SExpr:
        t = self.peek()
        if self.at("let"):
            self.next()
            pat = self.pattern()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return SLet(pat, bound, body, span=(t.line, t.col))
        if self.at("let*"):
            self.next()
            pat = self.pattern()
            self.expect("=")
            bound = self.expr()
            self.expect("in")
            body = self.expr()
            return SBind(pat, bound, body, span=(t.line, t.col))
        if self.at("if"):
            self.next()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            els = self.expr()
            return SIf(cond, then, els, span=(t.line, t.col))
        if self.at("fun"):
            self.next()
            self.expect("(")
            pname = self.expect("ident").text
            self.expect(":")
            annot = self.rtype_or_base_shorthand()
            self.expect(")")
            self.expect("->")
            body = self.expr()
            return SLambda(pname, annot, body, span=(t.line, t.col))
        if self.at("assume"):
            self.next()
            ct = self.rtype()
            if not isinstance(ct, CoverBase):
                raise ParseError("assume takes a coverage base type [b | phi]", t.line, t.col)
            return SAssume(ct, span=(t.line, t.col))
        if self.at("assert"):
            self.next()
            ot = self.rtype()
            if not isinstance(ot, OverBase):
                raise ParseError("assert takes an over base type {b | phi}", t.line, t.col)
            arg = self.app_expr()
            return SAssert(ot, arg, span=(t.line, t.col))
        return self.infix_expr()

    def infix_expr(self) -> SExpr:
        return self.and_expr()

    def _binop(self, op: str, lhs: SExpr, rhs: SExpr, span) -> SExpr:
        return SApp(SApp(SVar(op, span=span), lhs, span=span), rhs, span=span)

    def and_expr(self) -> SExpr:
        e = self.cmp_expr()
        while self.at("&&"):
            t = self.next()
            rhs = self.cmp_expr()
            e = self._binop("&&", e, rhs, (t.line, t.col))
        return e

    def cmp_expr(self) -> SExpr:
        e = self.add_expr()
        if self.at("==", "<="):
            t = self.next()
            rhs = self.add_expr()
            e = self._binop(t.kind, e, rhs, (t.line, t.col))
        return e

    def add_expr(self) -> SExpr:
        e = self.app_expr()
        while self.at("+", "-"):
            t = self.next()
            rhs = self.app_expr()
            e = self._binop(t.kind, e, rhs, (t.line, t.col))
        return e

    def app_expr(self) -> SExpr:
        e = self.atom_expr()
        while self._starts_atom():
            t = self.peek()
            arg = self.atom_expr()
            e = SApp(e, arg, span=(t.line, t.col))
        return e

    def _starts_atom(self) -> bool:
        return self.at("number", "ident", "true", "false", "(")

    def atom_expr(self) -> SExpr:
        t = self.peek()
        if self.at("number"):
            self.next()
            return SConst(IntV(int(t.text)), span=(t.line, t.col))
        if self.at("-") and self.peek(1).kind == "number":
            self.next()
            lit = self.next()
            return SConst(IntV(-int(lit.text)), span=(t.line, t.col))
        if self.at("true"):
            self.next()
            return SConst(BoolV(True), span=(t.line, t.col))
        if self.at("false"):
            self.next()
            return SConst(BoolV(False), span=(t.line, t.col))
        if self.at("ident"):
            self.next()
            return SVar(t.text, span=(t.line, t.col))
        if self.at("("):
            self.next()
            if self.at(")"):
                self.next()
                return SConst(UnitV(), span=(t.line, t.col))
            if self.peek().kind in OPERATOR_NAMES and self.peek(1).kind == ")":
                op = self.next()
                self.next()
                return SVar(op.kind, span=(t.line, t.col))
            e = self.expr()
            if self.at(","):
                self.next()
                snd = self.expr()
                self.expect(")")
                return SPair(e, snd, span=(t.line, t.col))
            self.expect(")")
            return e
        raise self.fail("expected an expression", {"number", "ident", "true", "false", "("})

    def pattern(self) -> Pattern:
        t = self.peek()
        if self.at("ident"):
            self.next()
            return PVar(t.text)
        if self.at("("):
            self.next()
            if self.at(")"):
                self.next()
                return PUnit()
            a = self.expect("ident").text
            self.expect(",")
            b = self.expect("ident").text
            self.expect(")")
            return PPair(a, b)
        raise self.fail("expected a pattern", {"ident", "("})

    # -- refinement types ----------------------------------------------------

    def rtype(self) -> RType:
        t = self.peek()
        if self.at("{"):
            dom = self.base_refinement(over=True)
            if self.at("->"):
                self.next()
                cod = self.rtype()
                return OverArrow(self.fresh_param(), dom, cod)
            return dom
        if self.at("["):
            dom = self.base_refinement(over=False)
            if self.at("->"):
                self.next()
                cod = self.rtype()
                return UnderArrow(dom, cod)
            return dom
        if self.at("ident") and self.peek(1).kind == ":":
            name = self.next().text
            self.next()
            if not self.at("{"):
                raise self.fail("named arrow parameters take an over base type { ... }", {"{"})
            dom = self.base_refinement(over=True)
            self.expect("->")
            cod = self.rtype()
            return OverArrow(name, dom, cod)
        if self.at("("):
            self.next()
            if self.at("ident") and self.peek(1).kind == ":":
                name = self.next().text
                self.next()
                inner = self.rtype()
                self.expect(")")
                self.expect("->")
                cod = self.rtype()
                if is_arrow(inner):
                    return HoArrow(name, inner, cod)
                if isinstance(inner, OverBase):
                    return OverArrow(name, inner, cod)
                raise ParseError(
                    "parenthesized arrow parameter must be an arrow or over base type", t.line, t.col
                )
            inner = self.rtype()
            self.expect(")")
            if self.at("->"):
                self.next()
                cod = self.rtype()
                if is_arrow(inner):
                    return HoArrow(self.fresh_param(), inner, cod)
                if isinstance(inner, OverBase):
                    return OverArrow(self.fresh_param(), inner, cod)
                return UnderArrow(inner, cod)
            return inner
        raise self.fail("expected a refinement type", {"{", "[", "(", "ident"})

    def base_refinement(self, over: bool) -> OverBase | CoverBase:
        open_tok, close_tok = ("{", "}") if over else ("[", "]")
        self.expect(open_tok)
        b = self.base_type()
        self.expect("|")
        phi = self.qualifier()
        self.expect(close_tok)
        return OverBase(b, phi) if over else CoverBase(b, phi)

    def base_type(self) -> BaseType:
        b = self.base_atom()
        while self.at("*"):
            self.next()
            r = self.base_atom()
            b = Prod(b, r)
        return b

    def base_atom(self) -> BaseType:
        t = self.peek()
        if self.at("int"):
            self.next()
            return INT
        if self.at("bool"):
            self.next()
            return BOOL
        if self.at("unit"):
            self.next()
            return UNIT
        if self.at("("):
            self.next()
            b = self.base_type()
            self.expect(")")
            return b
        raise self.fail("expected a base type", {"int", "bool", "unit", "("})

    # -- qualifiers ----------------------------------------------------------

    def qualifier(self) -> Qualifier:
        return self.iff_qual()

    def iff_qual(self) -> Qualifier:
        q = self.implies_qual()
        while self.at("<=>"):
            self.next()
            r = self.implies_qual()
            q = Q.Iff(q, r)
        return q

    def implies_qual(self) -> Qualifier:
        q = self.or_qual()
        if self.at("==>"):
            self.next()
            r = self.implies_qual()  # right-associative
            return Q.Implies(q, r)
        return q

    def or_qual(self) -> Qualifier:
        q = self.and_qual()
        while self.at("||"):
            self.next()
            r = self.and_qual()
            q = Q.Or(q, r)
        return q

    def and_qual(self) -> Qualifier:
        q = self.cmp_qual()
        while self.at("&&"):
            self.next()
            r = self.cmp_qual()
            q = Q.And(q, r)
        return q

    def cmp_qual(self) -> Qualifier:
        # equality may be written `=` or `==` inside qualifiers
        q = self.add_qual()
        if self.at("==", "=", "<=", "<"):
            op = self.next().kind
            r = self.add_qual()
            if op in ("==", "="):
                return Q.Eq(q, r)
            if op == "<=":
                return Q.Le(q, r)
            return Q.Lt(q, r)
        return q

    def add_qual(self) -> Qualifier:
        q = self.unary_qual()
        while self.at("+", "-"):
            op = self.next().kind
            r = self.unary_qual()
            q = Q.Add(q, r) if op == "+" else Q.Sub(q, r)
        return q

    def unary_qual(self) -> Qualifier:
        if self.at("!"):
            self.next()
            return Q.Not(self.unary_qual())
        return self.atom_qual()

    _PROJECTIONS = {"even": Q.Even, "odd": Q.Odd, "fst": Q.Fst, "snd": Q.Snd}

    def atom_qual(self) -> Qualifier:
        t = self.peek()
        if self.at("true"):
            self.next()
            return Q.TRUE
        if self.at("false"):
            self.next()
            return Q.FALSE
        if self.at("v"):
            self.next()
            return Q.Nu()
        if self.at("number"):
            self.next()
            return Q.IntLit(int(t.text))
        if self.at("-") and self.peek(1).kind == "number":
            self.next()
            lit = self.next()
            return Q.IntLit(-int(lit.text))
        if self.at("ident"):
            name = self.next().text
            ctor = self._PROJECTIONS.get(name)
            if ctor is not None and self.at("("):
                self.next()
                arg = self.qualifier()
                self.expect(")")
                return ctor(arg)
            return Q.VarRef(name)
        if self.at("("):
            self.next()
            q = self.qualifier()
            self.expect(")")
            return q
        raise self.fail(
            "expected a qualifier", {"true", "false", "v", "ident", "(", "!", "number"}
        )


def extract_pragma(source: str) -> int | None:
    m = _PRAGMA.search(source)
    return int(m.group(1)) if m else None


def parse(source: str) -> SurfaceProgram:
    """Parse a full `.cov` program (definitions plus one check target)."""
    window = extract_pragma(source)
    p = _Parser(tokenize(source))
    return p.program(window)


def parse_expression(source: str) -> SExpr:
    p = _Parser(tokenize(source))
    e = p.expr()
    p.expect("eof")
    return e


def parse_rtype(source: str) -> RType:
    p = _Parser(tokenize(source))
    t = p.rtype()
    p.expect("eof")
    return t


def parse_qualifier(source: str) -> Qualifier:
    p = _Parser(tokenize(source))
    q = p.qualifier()
    p.expect("eof")
    return q
