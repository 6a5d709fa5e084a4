"""Refinement types: over-approximate and coverage base types, plus arrows.

An over base `{v:b | phi}` bounds what a program may reduce to; a coverage
base `[v:b | phi]` states what it must be able to reduce to.  Arrows come in
three shapes: named over-parameter arrows, nameless coverage-parameter
arrows (their codomain cannot depend on the argument), and higher-order
arrows whose domain is itself an arrow.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .qualifiers import (
    BaseType,
    Qualifier,
    free_names,
    subst,
)


@dataclass(frozen=True)
class RType:
    pass


@dataclass(frozen=True)
class OverBase(RType):
    base: BaseType
    qual: Qualifier


@dataclass(frozen=True)
class CoverBase(RType):
    base: BaseType
    qual: Qualifier


@dataclass(frozen=True)
class OverArrow(RType):
    param: str
    dom: OverBase
    cod: RType


@dataclass(frozen=True)
class UnderArrow(RType):
    dom: CoverBase
    cod: RType


@dataclass(frozen=True)
class HoArrow(RType):
    param: str
    dom: RType  # an arrow shape, checked by well-formedness
    cod: RType


def is_base(t: RType) -> bool:
    return isinstance(t, (OverBase, CoverBase))


def is_arrow(t: RType) -> bool:
    return isinstance(t, (OverArrow, UnderArrow, HoArrow))


def erase(t: RType) -> BaseType | tuple:
    """Erase refinements; arrows erase to ('->', dom, cod) tuples."""
    match t:
        case OverBase(b, _) | CoverBase(b, _):
            return b
        case OverArrow(_, d, c) | UnderArrow(d, c) | HoArrow(_, d, c):
            return ("->", erase(d), erase(c))
    raise TypeError(f"not a refinement type: {t!r}")


def type_free_names(t: RType) -> frozenset[str]:
    match t:
        case OverBase(_, q) | CoverBase(_, q):
            return free_names(q)
        case OverArrow(x, d, c):
            return type_free_names(d) | (type_free_names(c) - {x})
        case UnderArrow(d, c):
            return type_free_names(d) | type_free_names(c)
        case HoArrow(x, d, c):
            return type_free_names(d) | (type_free_names(c) - {x})
    raise TypeError(f"not a refinement type: {t!r}")


def type_subst(t: RType, name: str, replacement: Qualifier) -> RType:
    """Capture-avoiding substitution of a qualifier term for a program variable."""
    avoid = free_names(replacement)

    def freshen(x: str, cod: RType) -> tuple[str, RType]:
        if x not in avoid:
            return x, cod
        from .qualifiers import VarRef

        x2 = x
        while x2 in avoid or x2 == name:
            x2 += "'"
        return x2, type_subst(cod, x, VarRef(x2))

    match t:
        case OverBase(b, q):
            return OverBase(b, subst(q, name, replacement))
        case CoverBase(b, q):
            return CoverBase(b, subst(q, name, replacement))
        case OverArrow(x, d, c):
            d2 = type_subst(d, name, replacement)
            if x == name:
                return OverArrow(x, d2, c)
            x, c = freshen(x, c)
            return OverArrow(x, d2, type_subst(c, name, replacement))
        case UnderArrow(d, c):
            return UnderArrow(type_subst(d, name, replacement), type_subst(c, name, replacement))
        case HoArrow(x, d, c):
            d2 = type_subst(d, name, replacement)
            if x == name:
                return HoArrow(x, d2, c)
            x, c = freshen(x, c)
            return HoArrow(x, d2, type_subst(c, name, replacement))
    raise TypeError(f"not a refinement type: {t!r}")


# ---------------------------------------------------------------------------
# Typing contexts


class Kind(enum.Enum):
    OVER = "over"
    COVER = "cover"
    FUN = "fun"


class Linearity(enum.Enum):
    MANY = "many"
    AT_MOST_ONCE = "at-most-once"


def kind_of(t: RType) -> Kind:
    match t:
        case OverBase():
            return Kind.OVER
        case CoverBase():
            return Kind.COVER
        case OverArrow() | UnderArrow() | HoArrow():
            return Kind.FUN
    raise TypeError(f"not a refinement type: {t!r}")


@dataclass(frozen=True)
class Binding:
    name: str
    rtype: RType
    linearity: Linearity = Linearity.MANY
    consumed: bool = field(default=False)

    @property
    def kind(self) -> Kind:
        return kind_of(self.rtype)


@dataclass(frozen=True)
class TypingContext:
    """Ordered telescope of bindings; names are unique, qualifiers may only
    reference earlier names.  Persistent: extension returns a new context."""

    bindings: tuple[Binding, ...] = ()

    def extend(self, name: str, rtype: RType, linearity: Linearity = Linearity.MANY) -> "TypingContext":
        if self.lookup(name) is not None:
            raise ValueError(f"duplicate context name: {name}")
        return TypingContext(self.bindings + (Binding(name, rtype, linearity),))

    def lookup(self, name: str) -> Binding | None:
        for b in self.bindings:
            if b.name == name:
                return b
        return None

    def refine(self, name: str, rtype: RType) -> "TypingContext":
        """Replace the named binding's type in place (used by branch refinement)."""
        out = tuple(replace(b, rtype=rtype) if b.name == name else b for b in self.bindings)
        return TypingContext(out)

    def consume(self, name: str) -> "TypingContext":
        out = tuple(
            replace(b, linearity=Linearity.AT_MOST_ONCE, consumed=True) if b.name == name else b
            for b in self.bindings
        )
        return TypingContext(out)

    def consumed_names(self) -> frozenset[str]:
        return frozenset(b.name for b in self.bindings if b.consumed)

    def names(self) -> list[str]:
        return [b.name for b in self.bindings]

    def sort_env(self) -> dict[str, BaseType]:
        """Base sorts of the base-kinded bindings (functions carry no sort)."""
        env: dict[str, BaseType] = {}
        for b in self.bindings:
            t = b.rtype
            if isinstance(t, (OverBase, CoverBase)):
                env[b.name] = t.base
        return env

    def __iter__(self):
        return iter(self.bindings)

    def __len__(self) -> int:
        return len(self.bindings)


EMPTY_CONTEXT = TypingContext()
