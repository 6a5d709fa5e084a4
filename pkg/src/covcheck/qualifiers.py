"""First-order qualifiers over the distinguished value variable and program variables.

A qualifier is a quantifier-free formula built from integer arithmetic,
comparisons, boolean connectives, parity predicates, and pair projections.
Formulas are just bool-sorted terms, so one datatype covers both.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping

# Internal name of the distinguished value variable.  The surface syntax
# writes it as `v`, which the parser reserves, so no program variable can
# collide with it.
NU = "ν"


class SortError(Exception):
    """Ill-sorted qualifier (unbound name or operator/sort mismatch)."""


# ---------------------------------------------------------------------------
# Base types and semantic values


@dataclass(frozen=True)
class BaseType:
    pass


@dataclass(frozen=True)
class Unit(BaseType):
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class Bool(BaseType):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class Int(BaseType):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class Prod(BaseType):
    left: BaseType
    right: BaseType

    def __str__(self) -> str:
        def atom(b: BaseType) -> str:
            return f"({b})" if isinstance(b, Prod) else str(b)

        return f"{atom(self.left)} * {atom(self.right)}"


UNIT = Unit()
BOOL = Bool()
INT = Int()


@dataclass(frozen=True)
class SemanticValue:
    pass


@dataclass(frozen=True)
class UnitV(SemanticValue):
    pass


@dataclass(frozen=True)
class BoolV(SemanticValue):
    b: bool


@dataclass(frozen=True)
class IntV(SemanticValue):
    n: int


@dataclass(frozen=True)
class PairV(SemanticValue):
    fst: SemanticValue
    snd: SemanticValue


def type_of_value(v: SemanticValue) -> BaseType:
    match v:
        case UnitV():
            return UNIT
        case BoolV():
            return BOOL
        case IntV():
            return INT
        case PairV(a, b):
            return Prod(type_of_value(a), type_of_value(b))
    raise TypeError(f"not a semantic value: {v!r}")


def values_of(b: BaseType, window: int) -> Iterator[SemanticValue]:
    """Enumerate the windowed carrier of `b` in a fixed deterministic order.

    Integers range over [-window, window] ascending; booleans over
    false, true; products left-major.
    """
    match b:
        case Unit():
            yield UnitV()
        case Bool():
            yield BoolV(False)
            yield BoolV(True)
        case Int():
            for n in range(-window, window + 1):
                yield IntV(n)
        case Prod(l, r):
            for a, c in product(list(values_of(l, window)), list(values_of(r, window))):
                yield PairV(a, c)
        case _:
            raise TypeError(f"not a base type: {b!r}")


# ---------------------------------------------------------------------------
# Qualifier syntax


@dataclass(frozen=True)
class Qualifier:
    pass


@dataclass(frozen=True)
class QTrue(Qualifier):
    pass


@dataclass(frozen=True)
class QFalse(Qualifier):
    pass


@dataclass(frozen=True)
class Nu(Qualifier):
    pass


@dataclass(frozen=True)
class VarRef(Qualifier):
    name: str


@dataclass(frozen=True)
class IntLit(Qualifier):
    n: int


@dataclass(frozen=True)
class ValueLit(Qualifier):
    """Internal literal for substituting arbitrary semantic values (no surface form)."""

    value: SemanticValue


@dataclass(frozen=True)
class Eq(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Le(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Lt(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Add(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Sub(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Not(Qualifier):
    arg: Qualifier


@dataclass(frozen=True)
class And(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Or(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Implies(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Iff(Qualifier):
    left: Qualifier
    right: Qualifier


@dataclass(frozen=True)
class Even(Qualifier):
    arg: Qualifier


@dataclass(frozen=True)
class Odd(Qualifier):
    arg: Qualifier


@dataclass(frozen=True)
class Fst(Qualifier):
    arg: Qualifier


@dataclass(frozen=True)
class Snd(Qualifier):
    arg: Qualifier


TRUE = QTrue()
FALSE = QFalse()


def conj(*qs: Qualifier) -> Qualifier:
    parts = [q for q in qs if q != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for q in parts[1:]:
        out = And(out, q)
    return out


def disj(*qs: Qualifier) -> Qualifier:
    parts = [q for q in qs if q != FALSE]
    if not parts:
        return FALSE
    out = parts[0]
    for q in parts[1:]:
        out = Or(out, q)
    return out


def free_names(q: Qualifier) -> frozenset[str]:
    """Program variables occurring in `q` (the value variable excluded)."""
    match q:
        case VarRef(name):
            return frozenset({name})
        case QTrue() | QFalse() | Nu() | IntLit() | ValueLit():
            return frozenset()
        case Not(a) | Even(a) | Odd(a) | Fst(a) | Snd(a):
            return free_names(a)
        case Eq(l, r) | Le(l, r) | Lt(l, r) | Add(l, r) | Sub(l, r) | And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r):
            return free_names(l) | free_names(r)
    raise TypeError(f"not a qualifier: {q!r}")


def mentions_nu(q: Qualifier) -> bool:
    match q:
        case Nu():
            return True
        case QTrue() | QFalse() | VarRef() | IntLit() | ValueLit():
            return False
        case Not(a) | Even(a) | Odd(a) | Fst(a) | Snd(a):
            return mentions_nu(a)
        case Eq(l, r) | Le(l, r) | Lt(l, r) | Add(l, r) | Sub(l, r) | And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r):
            return mentions_nu(l) or mentions_nu(r)
    raise TypeError(f"not a qualifier: {q!r}")


def int_literals(q: Qualifier) -> frozenset[int]:
    match q:
        case IntLit(n):
            return frozenset({n})
        case ValueLit(v):
            return _value_int_literals(v)
        case QTrue() | QFalse() | Nu() | VarRef():
            return frozenset()
        case Not(a) | Even(a) | Odd(a) | Fst(a) | Snd(a):
            return int_literals(a)
        case Eq(l, r) | Le(l, r) | Lt(l, r) | Add(l, r) | Sub(l, r) | And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r):
            return int_literals(l) | int_literals(r)
    raise TypeError(f"not a qualifier: {q!r}")


def _value_int_literals(v: SemanticValue) -> frozenset[int]:
    match v:
        case IntV(n):
            return frozenset({n})
        case PairV(a, b):
            return _value_int_literals(a) | _value_int_literals(b)
        case _:
            return frozenset()


# ---------------------------------------------------------------------------
# Sorting

SortEnv = Mapping[str, BaseType]


def sort_of(q: Qualifier, env: SortEnv, nu: BaseType | None) -> BaseType:
    """Infer the sort of a qualifier term, raising SortError when ill-sorted.

    Formulas are exactly the bool-sorted terms.  `nu` is the sort of the
    value variable, or None when it must not occur.
    """
    match q:
        case QTrue() | QFalse():
            return BOOL
        case Nu():
            if nu is None:
                raise SortError("value variable not in scope here")
            return nu
        case VarRef(name):
            if name not in env:
                raise SortError(f"unbound name in qualifier: {name}")
            return env[name]
        case IntLit():
            return INT
        case ValueLit(v):
            return type_of_value(v)
        case Eq(l, r):
            sl, sr = sort_of(l, env, nu), sort_of(r, env, nu)
            if sl != sr:
                raise SortError(f"== applied to different sorts: {sl} vs {sr}")
            return BOOL
        case Le(l, r) | Lt(l, r):
            _expect(l, INT, env, nu)
            _expect(r, INT, env, nu)
            return BOOL
        case Add(l, r) | Sub(l, r):
            _expect(l, INT, env, nu)
            _expect(r, INT, env, nu)
            return INT
        case Not(a):
            _expect(a, BOOL, env, nu)
            return BOOL
        case And(l, r) | Or(l, r) | Implies(l, r) | Iff(l, r):
            _expect(l, BOOL, env, nu)
            _expect(r, BOOL, env, nu)
            return BOOL
        case Even(a) | Odd(a):
            _expect(a, INT, env, nu)
            return BOOL
        case Fst(a):
            s = sort_of(a, env, nu)
            if not isinstance(s, Prod):
                raise SortError(f"fst applied to non-pair sort {s}")
            return s.left
        case Snd(a):
            s = sort_of(a, env, nu)
            if not isinstance(s, Prod):
                raise SortError(f"snd applied to non-pair sort {s}")
            return s.right
    raise TypeError(f"not a qualifier: {q!r}")


def _expect(q: Qualifier, want: BaseType, env: SortEnv, nu: BaseType | None) -> None:
    got = sort_of(q, env, nu)
    if got != want:
        raise SortError(f"expected sort {want}, got {got}")


def well_sorted_formula(q: Qualifier, env: SortEnv, nu: BaseType | None) -> None:
    if sort_of(q, env, nu) != BOOL:
        raise SortError("qualifier is not bool-sorted")


# ---------------------------------------------------------------------------
# Evaluation


class EvalError(Exception):
    pass


Valuation = Mapping[str, SemanticValue]


def eval_term(q: Qualifier, valuation: Valuation, nu: SemanticValue | None) -> SemanticValue:
    match q:
        case QTrue():
            return BoolV(True)
        case QFalse():
            return BoolV(False)
        case Nu():
            if nu is None:
                raise EvalError("value variable has no value here")
            return nu
        case VarRef(name):
            if name not in valuation:
                raise EvalError(f"unbound name in qualifier: {name}")
            return valuation[name]
        case IntLit(n):
            return IntV(n)
        case ValueLit(v):
            return v
        case Eq(l, r):
            return BoolV(eval_term(l, valuation, nu) == eval_term(r, valuation, nu))
        case Le(l, r):
            return BoolV(_int(eval_term(l, valuation, nu)) <= _int(eval_term(r, valuation, nu)))
        case Lt(l, r):
            return BoolV(_int(eval_term(l, valuation, nu)) < _int(eval_term(r, valuation, nu)))
        case Add(l, r):
            return IntV(_int(eval_term(l, valuation, nu)) + _int(eval_term(r, valuation, nu)))
        case Sub(l, r):
            return IntV(_int(eval_term(l, valuation, nu)) - _int(eval_term(r, valuation, nu)))
        case Not(a):
            return BoolV(not _bool(eval_term(a, valuation, nu)))
        case And(l, r):
            return BoolV(_bool(eval_term(l, valuation, nu)) and _bool(eval_term(r, valuation, nu)))
        case Or(l, r):
            return BoolV(_bool(eval_term(l, valuation, nu)) or _bool(eval_term(r, valuation, nu)))
        case Implies(l, r):
            return BoolV((not _bool(eval_term(l, valuation, nu))) or _bool(eval_term(r, valuation, nu)))
        case Iff(l, r):
            return BoolV(_bool(eval_term(l, valuation, nu)) == _bool(eval_term(r, valuation, nu)))
        case Even(a):
            return BoolV(_int(eval_term(a, valuation, nu)) % 2 == 0)
        case Odd(a):
            return BoolV(_int(eval_term(a, valuation, nu)) % 2 != 0)
        case Fst(a):
            return _pair(eval_term(a, valuation, nu)).fst
        case Snd(a):
            return _pair(eval_term(a, valuation, nu)).snd
    raise TypeError(f"not a qualifier: {q!r}")


def evaluate(q: Qualifier, valuation: Valuation, nu: SemanticValue | None = None) -> bool:
    """Truth value of a bool-sorted qualifier under a valuation."""
    return _bool(eval_term(q, valuation, nu))


def _int(v: SemanticValue) -> int:
    if not isinstance(v, IntV):
        raise EvalError(f"expected int value, got {v!r}")
    return v.n


def _bool(v: SemanticValue) -> bool:
    if not isinstance(v, BoolV):
        raise EvalError(f"expected bool value, got {v!r}")
    return v.b


def _pair(v: SemanticValue) -> PairV:
    if not isinstance(v, PairV):
        raise EvalError(f"expected pair value, got {v!r}")
    return v


# ---------------------------------------------------------------------------
# Substitution


def subst(q: Qualifier, name: str, replacement: Qualifier) -> Qualifier:
    """Capture-free substitution of a term for `name` (use NU for the value variable).

    Substitution is textual: qualifiers bind nothing, so renaming never
    arises.  The replacement must be a term of the substituted name's sort;
    sort checks are the caller's concern.
    """
    def go(t: Qualifier) -> Qualifier:
        match t:
            case Nu():
                return replacement if name == NU else t
            case VarRef(n):
                return replacement if n == name else t
            case QTrue() | QFalse() | IntLit() | ValueLit():
                return t
            case Not(a):
                return Not(go(a))
            case Even(a):
                return Even(go(a))
            case Odd(a):
                return Odd(go(a))
            case Fst(a):
                return Fst(go(a))
            case Snd(a):
                return Snd(go(a))
            case Eq(l, r):
                return Eq(go(l), go(r))
            case Le(l, r):
                return Le(go(l), go(r))
            case Lt(l, r):
                return Lt(go(l), go(r))
            case Add(l, r):
                return Add(go(l), go(r))
            case Sub(l, r):
                return Sub(go(l), go(r))
            case And(l, r):
                return And(go(l), go(r))
            case Or(l, r):
                return Or(go(l), go(r))
            case Implies(l, r):
                return Implies(go(l), go(r))
            case Iff(l, r):
                return Iff(go(l), go(r))
        raise TypeError(f"not a qualifier: {t!r}")

    return go(q)


def subst_nu(q: Qualifier, replacement: Qualifier) -> Qualifier:
    return subst(q, NU, replacement)


def value_to_term(v: SemanticValue) -> Qualifier:
    """Embed a semantic value as a qualifier term."""
    match v:
        case IntV(n):
            return IntLit(n)
        case BoolV(b):
            return TRUE if b else FALSE
        case UnitV() | PairV():
            return ValueLit(v)
    raise TypeError(f"not a semantic value: {v!r}")
