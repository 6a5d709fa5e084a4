"""Verification conditions: quantifier prefixes over windowed domains.

A VC is a prenex formula.  Each prefix entry carries a bounding qualifier
in which the entry's own variable appears as the value variable; an entry
only ranges over windowed values satisfying its bound.  The matrix is a
quantifier-free qualifier over the prefix names.

`decide_bounded` enumerates the prefix exhaustively over a window.  It
answers WindowInsufficient exactly when the matrix mentions an integer
literal outside the window, since no windowed assignment can observe such
a constant; bounds re-literals do not trigger it (empty bounded domains
make foralls vacuous and existentials fail, which is the conservative
reading).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .qualifiers import (
    NU,
    BaseType,
    Qualifier,
    SemanticValue,
    evaluate,
    free_names,
    int_literals,
    values_of,
)

FORALL = "forall"
EXISTS = "exists"


@dataclass(frozen=True)
class PrefixEntry:
    quant: str  # FORALL or EXISTS
    name: str
    base: BaseType
    bound: Qualifier  # the entry's own variable occurs as the value variable


@dataclass(frozen=True)
class VC:
    prefix: tuple[PrefixEntry, ...]
    matrix: Qualifier

    def validate(self) -> None:
        seen: set[str] = set()
        for e in self.prefix:
            bad = free_names(e.bound) - seen
            if bad:
                raise ValueError(f"bound of {e.name} references later names: {sorted(bad)}")
            seen.add(e.name)
        bad = free_names(self.matrix) - seen
        if bad:
            raise ValueError(f"matrix references unbound names: {sorted(bad)}")


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class Invalid:
    witness: dict[str, SemanticValue] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class WindowInsufficient:
    reason: str = field(default="", compare=False)


@dataclass(frozen=True)
class SolverUnknown:
    reason: str = field(default="", compare=False)


Verdict = Valid | Invalid | WindowInsufficient | SolverUnknown


def decide_bounded(vc: VC, window: int) -> Verdict:
    """Exhaustively decide a VC over the window, honoring prefix bounds.

    Invalid verdicts carry a counter-assignment for the universally
    quantified variables along the failing branch.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    too_big = sorted(n for n in int_literals(vc.matrix) if abs(n) > window)
    if too_big:
        return WindowInsufficient(f"matrix literal(s) outside window {window}: {too_big}")

    prefix = vc.prefix
    matrix = vc.matrix

    def go(i: int, valuation: dict[str, SemanticValue]):
        if i == len(prefix):
            return (True, None) if evaluate(matrix, valuation, None) else (False, dict(valuation))
        entry = prefix[i]
        candidates = [
            v for v in values_of(entry.base, window) if evaluate(entry.bound, valuation, v)
        ]
        if entry.quant == FORALL:
            for v in candidates:
                valuation[entry.name] = v
                ok, witness = go(i + 1, valuation)
                if not ok:
                    return False, witness
            valuation.pop(entry.name, None)
            return True, None
        # exists: some candidate must work
        for v in candidates:
            valuation[entry.name] = v
            ok, _ = go(i + 1, valuation)
            if ok:
                return True, None
        valuation.pop(entry.name, None)
        return False, dict(valuation)

    ok, witness = go(0, {})
    if ok:
        return Valid()
    if witness is not None:
        witness = {k: v for k, v in witness.items()}
    return Invalid(witness)


def satisfiable(
    q: Qualifier,
    sort_env: Mapping[str, BaseType],
    nu_sort: BaseType | None,
    window: int,
) -> bool:
    """True iff some windowed valuation (plus value-variable choice) satisfies q."""
    names = sorted(free_names(q))
    for n in names:
        if n not in sort_env:
            raise KeyError(f"no sort for free name {n}")

    def go(i: int, valuation: dict[str, SemanticValue]) -> bool:
        if i == len(names):
            if nu_sort is None:
                return evaluate(q, valuation, None)
            return any(evaluate(q, valuation, v) for v in values_of(nu_sort, window))
        for v in values_of(sort_env[names[i]], window):
            valuation[names[i]] = v
            if go(i + 1, valuation):
                return True
        valuation.pop(names[i], None)
        return False

    return go(0, {})


def display_witness(witness: Mapping[str, SemanticValue] | None) -> dict[str, str] | None:
    """Human/JSON form of a counter-assignment; the value variable prints as `v`."""
    from .pretty import pretty_semantic_value

    if witness is None:
        return None
    out: dict[str, str] = {}
    for name, v in witness.items():
        out["v" if name == NU else name] = pretty_semantic_value(v)
    return out
