"""Printers for qualifiers, types, values, and core terms.

Output re-parses: `elaborate(parse_expression(pretty_term(t)))` is
alpha-equivalent to `t` for any well-scoped ANF term.
"""
from __future__ import annotations

from . import qualifiers as Q
from .parser import OPERATOR_NAMES
from .qualifiers import BoolV, IntV, PairV, Qualifier, SemanticValue, UnitV
from .terms import (
    Assert,
    Const,
    CoreTerm,
    If,
    Lambda,
    LetApp,
    LetAssume,
    LetPair,
    LetTerm,
    Val,
    Value,
    Var,
    VPair,
)
from .types import CoverBase, HoArrow, OverArrow, OverBase, RType, UnderArrow

# Precedence levels for qualifier printing (higher binds tighter).
_IFF, _IMP, _OR, _AND, _CMP, _ADD, _NOT, _ATOM = range(8)


def pretty_qualifier(q: Qualifier) -> str:
    return _qual(q, 0)


def _qual(q: Qualifier, level: int) -> str:
    def wrap(s: str, mine: int) -> str:
        return f"({s})" if mine < level else s

    match q:
        case Q.QTrue():
            return "true"
        case Q.QFalse():
            return "false"
        case Q.Nu():
            return "v"
        case Q.VarRef(name):
            return name
        case Q.IntLit(n):
            return str(n) if n >= 0 else f"(-{-n})" if level > _ADD else f"-{-n}"
        case Q.ValueLit(v):
            return pretty_semantic_value(v)
        case Q.Iff(l, r):
            return wrap(f"{_qual(l, _IFF)} <=> {_qual(r, _IFF + 1)}", _IFF)
        case Q.Implies(l, r):
            return wrap(f"{_qual(l, _IMP + 1)} ==> {_qual(r, _IMP)}", _IMP)
        case Q.Or(l, r):
            return wrap(f"{_qual(l, _OR)} || {_qual(r, _OR + 1)}", _OR)
        case Q.And(l, r):
            return wrap(f"{_qual(l, _AND)} && {_qual(r, _AND + 1)}", _AND)
        case Q.Eq(l, r):
            return wrap(f"{_qual(l, _ADD)} = {_qual(r, _ADD)}", _CMP)
        case Q.Le(l, r):
            return wrap(f"{_qual(l, _ADD)} <= {_qual(r, _ADD)}", _CMP)
        case Q.Lt(l, r):
            return wrap(f"{_qual(l, _ADD)} < {_qual(r, _ADD)}", _CMP)
        case Q.Add(l, r):
            return wrap(f"{_qual(l, _ADD)} + {_qual(r, _ADD + 1)}", _ADD)
        case Q.Sub(l, r):
            return wrap(f"{_qual(l, _ADD)} - {_qual(r, _ADD + 1)}", _ADD)
        case Q.Not(a):
            return wrap(f"!{_qual(a, _NOT)}", _NOT)
        case Q.Even(a):
            return f"even({_qual(a, 0)})"
        case Q.Odd(a):
            return f"odd({_qual(a, 0)})"
        case Q.Fst(a):
            return f"fst({_qual(a, 0)})"
        case Q.Snd(a):
            return f"snd({_qual(a, 0)})"
    raise TypeError(f"not a qualifier: {q!r}")


def pretty_rtype(t: RType) -> str:
    match t:
        case OverBase(b, q):
            return f"{{{b} | {pretty_qualifier(q)}}}"
        case CoverBase(b, q):
            return f"[{b} | {pretty_qualifier(q)}]"
        case OverArrow(x, d, c):
            return f"{x}:{pretty_rtype(d)} -> {pretty_rtype(c)}"
        case UnderArrow(d, c):
            return f"{pretty_rtype(d)} -> {pretty_rtype(c)}"
        case HoArrow(x, d, c):
            return f"({x}: {pretty_rtype(d)}) -> {pretty_rtype(c)}"
    raise TypeError(f"not a refinement type: {t!r}")


def pretty_semantic_value(v: SemanticValue) -> str:
    match v:
        case UnitV():
            return "()"
        case BoolV(b):
            return "true" if b else "false"
        case IntV(n):
            return str(n)
        case PairV(a, b):
            return f"({pretty_semantic_value(a)}, {pretty_semantic_value(b)})"
    raise TypeError(f"not a semantic value: {v!r}")


def pretty_value(v: Value) -> str:
    match v:
        case Const(sv):
            s = pretty_semantic_value(sv)
            return f"({s})" if isinstance(sv, IntV) and sv.n < 0 else s
        case Var(name):
            return f"({name})" if name in OPERATOR_NAMES else name
        case Lambda(param, annot, body):
            return f"fun ({param} : {pretty_rtype(annot)}) -> {pretty_term(body)}"
        case VPair(a, b):
            return f"({pretty_value(a)}, {pretty_value(b)})"
    raise TypeError(f"not a value: {v!r}")


def _value_atom(v: Value) -> str:
    s = pretty_value(v)
    return f"({s})" if isinstance(v, Lambda) else s


def pretty_term(t: CoreTerm) -> str:
    match t:
        case Val(v):
            return pretty_value(v)
        case LetApp(x, fn, arg, body):
            return f"let {x} = {_value_atom(fn)} {_value_atom(arg)} in\n{pretty_term(body)}"
        case LetTerm(x, bound, body):
            return f"let {x} = {pretty_term(bound)} in\n{pretty_term(body)}"
        case LetPair(a, b, scrut, body):
            return f"let ({a}, {b}) = {_value_atom(scrut)} in\n{pretty_term(body)}"
        case If(c, th, el):
            return f"if {_value_atom(c)} then {pretty_term(th)} else {pretty_term(el)}"
        case LetAssume(x, ct, body):
            return f"let {x} = assume {pretty_rtype(ct)} in\n{pretty_term(body)}"
        case Assert(ot, v):
            return f"assert {pretty_rtype(ot)} {_value_atom(v)}"
    raise TypeError(f"not a core term: {t!r}")
