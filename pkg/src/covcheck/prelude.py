"""Built-in operations: names, arities, and refinement types.

Generators get coverage codomains over the full window; deterministic
builtins get exact coverage codomains (their may- and must-sets coincide),
so one qualifier serves both checking directions.
"""
from __future__ import annotations

from . import qualifiers as Q
from .qualifiers import BOOL, INT, UNIT
from .types import CoverBase, OverArrow, OverBase, RType

_A = Q.VarRef("_a")
_B = Q.VarRef("_b")
_NU = Q.Nu()


def _over(base, qual=Q.TRUE) -> OverBase:
    return OverBase(base, qual)


def _arrow1(dom_base, cod: CoverBase) -> RType:
    return OverArrow("_a", _over(dom_base), cod)


def _arrow2(dom1, dom2_qual, cod: CoverBase) -> RType:
    return OverArrow("_a", _over(dom1), OverArrow("_b", OverBase(dom1, dom2_qual), cod))


BUILTIN_TYPES: dict[str, RType] = {
    "int_gen": _arrow1(UNIT, CoverBase(INT, Q.TRUE)),
    "bool_gen": _arrow1(UNIT, CoverBase(BOOL, Q.TRUE)),
    # second argument must not be below the first; the codomain covers the
    # whole closed interval
    "int_range": OverArrow(
        "_a",
        _over(INT),
        OverArrow(
            "_b",
            OverBase(INT, Q.Le(_A, _NU)),
            CoverBase(INT, Q.And(Q.Le(_A, _NU), Q.Le(_NU, _B))),
        ),
    ),
    "is_even": _arrow1(INT, CoverBase(BOOL, Q.Iff(_NU, Q.Even(_A)))),
    "is_odd": _arrow1(INT, CoverBase(BOOL, Q.Iff(_NU, Q.Odd(_A)))),
    "+": _arrow2(INT, Q.TRUE, CoverBase(INT, Q.Eq(_NU, Q.Add(_A, _B)))),
    "-": _arrow2(INT, Q.TRUE, CoverBase(INT, Q.Eq(_NU, Q.Sub(_A, _B)))),
    "==": _arrow2(INT, Q.TRUE, CoverBase(BOOL, Q.Iff(_NU, Q.Eq(_A, _B)))),
    "<=": _arrow2(INT, Q.TRUE, CoverBase(BOOL, Q.Iff(_NU, Q.Le(_A, _B)))),
    "&&": OverArrow(
        "_a",
        _over(BOOL),
        OverArrow("_b", _over(BOOL), CoverBase(BOOL, Q.Iff(_NU, Q.And(_A, _B)))),
    ),
    "not": OverArrow("_a", _over(BOOL), CoverBase(BOOL, Q.Iff(_NU, Q.Not(_A)))),
}

# fst/snd work at every pair type, which the monomorphic surface cannot
# express; applications of them are elaborated to pair destructuring and
# the interpreter keeps them as primitives.
BUILTIN_ARITIES: dict[str, int] = {
    "int_gen": 1,
    "bool_gen": 1,
    "int_range": 2,
    "is_even": 1,
    "is_odd": 1,
    "+": 2,
    "-": 2,
    "==": 2,
    "<=": 2,
    "&&": 2,
    "not": 1,
    "fst": 1,
    "snd": 1,
}

BUILTIN_NAMES = frozenset(BUILTIN_ARITIES)
