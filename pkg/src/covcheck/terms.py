"""Surface and core term syntax.

Core terms are in A-normal form: application takes a value function and a
value argument, conditions and pair scrutinees are values, and every binder
is unique after elaboration.  The surface tree is what the parser emits;
elaboration lowers it (see elaborate.py).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .qualifiers import SemanticValue
from .types import CoverBase, OverBase, RType

Span = tuple[int, int]  # (line, column), 1-based


# ---------------------------------------------------------------------------
# Core values and terms


@dataclass(frozen=True)
class Value:
    pass


@dataclass(frozen=True)
class Const(Value):
    value: SemanticValue


@dataclass(frozen=True)
class Var(Value):
    name: str


@dataclass(frozen=True)
class Lambda(Value):
    param: str
    annot: RType
    body: "CoreTerm"


@dataclass(frozen=True)
class VPair(Value):
    fst: Value
    snd: Value


@dataclass(frozen=True)
class CoreTerm:
    pass


@dataclass(frozen=True)
class Val(CoreTerm):
    value: Value
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LetApp(CoreTerm):
    name: str
    fn: Value
    arg: Value
    body: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LetTerm(CoreTerm):
    name: str
    bound: CoreTerm
    body: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LetPair(CoreTerm):
    fst_name: str
    snd_name: str
    scrutinee: Value
    body: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class If(CoreTerm):
    cond: Value
    then: CoreTerm
    els: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class LetAssume(CoreTerm):
    name: str
    ctype: CoverBase
    body: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Assert(CoreTerm):
    otype: OverBase
    value: Value
    span: Span | None = field(default=None, compare=False)


def value_free_vars(v: Value) -> frozenset[str]:
    match v:
        case Const():
            return frozenset()
        case Var(name):
            return frozenset({name})
        case Lambda(param, _, body):
            return term_free_vars(body) - {param}
        case VPair(a, b):
            return value_free_vars(a) | value_free_vars(b)
    raise TypeError(f"not a value: {v!r}")


def term_free_vars(t: CoreTerm) -> frozenset[str]:
    match t:
        case Val(v):
            return value_free_vars(v)
        case LetApp(x, fn, arg, body):
            return value_free_vars(fn) | value_free_vars(arg) | (term_free_vars(body) - {x})
        case LetTerm(x, bound, body):
            return term_free_vars(bound) | (term_free_vars(body) - {x})
        case LetPair(a, b, scrut, body):
            return value_free_vars(scrut) | (term_free_vars(body) - {a, b})
        case If(c, th, el):
            return value_free_vars(c) | term_free_vars(th) | term_free_vars(el)
        case LetAssume(x, _, body):
            return term_free_vars(body) - {x}
        case Assert(_, v):
            return value_free_vars(v)
    raise TypeError(f"not a core term: {t!r}")


def binders(t: CoreTerm) -> list[str]:
    """Every binder in order of appearance (duplicates included)."""
    out: list[str] = []

    def value(v: Value) -> None:
        match v:
            case Lambda(param, _, body):
                out.append(param)
                term(body)
            case VPair(a, b):
                value(a)
                value(b)
            case _:
                pass

    def term(t: CoreTerm) -> None:
        match t:
            case Val(v):
                value(v)
            case LetApp(x, fn, arg, body):
                value(fn)
                value(arg)
                out.append(x)
                term(body)
            case LetTerm(x, bound, body):
                term(bound)
                out.append(x)
                term(body)
            case LetPair(a, b, scrut, body):
                value(scrut)
                out.extend([a, b])
                term(body)
            case If(c, th, el):
                value(c)
                term(th)
                term(el)
            case LetAssume(x, _, body):
                out.append(x)
                term(body)
            case Assert(_, v):
                value(v)

    term(t)
    return out


def validate_anf(t: CoreTerm) -> list[str]:
    """Structural A-normal-form violations (empty list when well-formed)."""
    problems: list[str] = []

    def check_pair_component(v: Value) -> None:
        if not isinstance(v, (Const, Var)):
            problems.append(f"pair component is not a constant or variable: {type(v).__name__}")

    def value(v: Value) -> None:
        match v:
            case VPair(a, b):
                check_pair_component(a)
                check_pair_component(b)
                value(a)
                value(b)
            case Lambda(_, _, body):
                term(body)
            case _:
                pass

    def term(t: CoreTerm) -> None:
        match t:
            case Val(v):
                value(v)
            case LetApp(_, fn, arg, body):
                value(fn)
                value(arg)
                term(body)
            case LetTerm(_, bound, body):
                term(bound)
                term(body)
            case LetPair(_, _, scrut, body):
                value(scrut)
                term(body)
            case If(c, th, el):
                value(c)
                term(th)
                term(el)
            case LetAssume(_, _, body):
                term(body)
            case Assert(_, v):
                value(v)

    term(t)
    names = binders(t)
    dups = sorted({n for n in names if names.count(n) > 1})
    for n in dups:
        problems.append(f"binder bound more than once: {n}")
    return problems


def alpha_equal(t1: CoreTerm, t2: CoreTerm) -> bool:
    """Structural equality modulo renaming of bound variables.

    Type annotations are compared up to the same renaming of their free
    program variables; spans are ignored.
    """
    from .qualifiers import Qualifier, VarRef  # local to avoid import cycles in tooling

    def rename_qual(q: Qualifier, env: dict[str, str]) -> Qualifier:
        from .qualifiers import subst

        out = q
        for a, b in env.items():
            out = subst(out, a, VarRef(b))
        return out

    def rtype_eq(a: RType, b: RType, env: dict[str, str]) -> bool:
        from .types import HoArrow, OverArrow, UnderArrow

        match (a, b):
            case (OverBase(b1, q1), OverBase(b2, q2)) | (CoverBase(b1, q1), CoverBase(b2, q2)):
                return b1 == b2 and rename_qual(q1, env) == q2
            case (OverArrow(x1, d1, c1), OverArrow(x2, d2, c2)):
                if not rtype_eq(d1, d2, env):
                    return False
                return rtype_eq(c1, c2, {**env, x1: x2})
            case (UnderArrow(d1, c1), UnderArrow(d2, c2)):
                return rtype_eq(d1, d2, env) and rtype_eq(c1, c2, env)
            case (HoArrow(x1, d1, c1), HoArrow(x2, d2, c2)):
                if not rtype_eq(d1, d2, env):
                    return False
                return rtype_eq(c1, c2, {**env, x1: x2})
            case _:
                return False

    def veq(v1: Value, v2: Value, env: dict[str, str]) -> bool:
        match (v1, v2):
            case (Const(a), Const(b)):
                return a == b
            case (Var(a), Var(b)):
                return env.get(a, a) == b
            case (Lambda(p1, a1, b1), Lambda(p2, a2, b2)):
                if not rtype_eq(a1, a2, env):
                    return False
                return teq(b1, b2, {**env, p1: p2})
            case (VPair(a1, b1), VPair(a2, b2)):
                return veq(a1, a2, env) and veq(b1, b2, env)
            case _:
                return False

    def teq(t1: CoreTerm, t2: CoreTerm, env: dict[str, str]) -> bool:
        match (t1, t2):
            case (Val(v1), Val(v2)):
                return veq(v1, v2, env)
            case (LetApp(x1, f1, a1, b1), LetApp(x2, f2, a2, b2)):
                return (
                    veq(f1, f2, env)
                    and veq(a1, a2, env)
                    and teq(b1, b2, {**env, x1: x2})
                )
            case (LetTerm(x1, e1, b1), LetTerm(x2, e2, b2)):
                return teq(e1, e2, env) and teq(b1, b2, {**env, x1: x2})
            case (LetPair(p1, q1, s1, b1), LetPair(p2, q2, s2, b2)):
                return veq(s1, s2, env) and teq(b1, b2, {**env, p1: p2, q1: q2})
            case (If(c1, th1, el1), If(c2, th2, el2)):
                return veq(c1, c2, env) and teq(th1, th2, env) and teq(el1, el2, env)
            case (LetAssume(x1, ct1, b1), LetAssume(x2, ct2, b2)):
                return rtype_eq(ct1, ct2, env) and teq(b1, b2, {**env, x1: x2})
            case (Assert(ot1, v1), Assert(ot2, v2)):
                return rtype_eq(ot1, ot2, env) and veq(v1, v2, env)
            case _:
                return False

    return teq(t1, t2, {})


# ---------------------------------------------------------------------------
# Surface syntax


@dataclass(frozen=True)
class Pattern:
    pass


@dataclass(frozen=True)
class PVar(Pattern):
    name: str


@dataclass(frozen=True)
class PPair(Pattern):
    fst: str
    snd: str


@dataclass(frozen=True)
class PUnit(Pattern):
    pass


@dataclass(frozen=True)
class SExpr:
    pass


@dataclass(frozen=True)
class SConst(SExpr):
    value: SemanticValue
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SVar(SExpr):
    name: str
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SLambda(SExpr):
    param: str
    annot: RType
    body: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SPair(SExpr):
    fst: SExpr
    snd: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SApp(SExpr):
    fn: SExpr
    arg: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SLet(SExpr):
    pat: Pattern
    bound: SExpr
    body: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SBind(SExpr):
    """Monadic bind `let* pat = e1 in e2`; removed by desugaring."""

    pat: Pattern
    bound: SExpr
    body: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SIf(SExpr):
    cond: SExpr
    then: SExpr
    els: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SAssume(SExpr):
    ctype: CoverBase
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class SAssert(SExpr):
    otype: OverBase
    arg: SExpr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Def:
    name: str
    params: tuple[tuple[str, RType], ...]
    result: RType | None
    body: SExpr
    span: Span | None = field(default=None, compare=False)

    def ascription(self) -> RType | None:
        """Full arrow type when a result ascription is present."""
        from .types import HoArrow, OverArrow, UnderArrow, is_arrow

        if self.result is None:
            return None
        t: RType = self.result
        for pname, annot in reversed(self.params):
            if isinstance(annot, OverBase):
                t = OverArrow(pname, annot, t)
            elif isinstance(annot, CoverBase):
                t = UnderArrow(annot, t)
            elif is_arrow(annot):
                t = HoArrow(pname, annot, t)
            else:
                raise TypeError(f"bad parameter annotation: {annot!r}")
        return t


@dataclass(frozen=True)
class SurfaceProgram:
    defs: tuple[Def, ...]
    main: SExpr
    goal: RType
    window: int | None = None  # header pragma override, if any


def surface_has_bind(e: SExpr) -> bool:
    match e:
        case SBind():
            return True
        case SConst() | SVar() | SAssume():
            return False
        case SLambda(_, _, body):
            return surface_has_bind(body)
        case SPair(a, b):
            return surface_has_bind(a) or surface_has_bind(b)
        case SApp(f, a):
            return surface_has_bind(f) or surface_has_bind(a)
        case SLet(_, bound, body):
            return surface_has_bind(bound) or surface_has_bind(body)
        case SIf(c, t, e2):
            return surface_has_bind(c) or surface_has_bind(t) or surface_has_bind(e2)
        case SAssert(_, a):
            return surface_has_bind(a)
    raise TypeError(f"not a surface expression: {e!r}")


def program_has_bind(p: SurfaceProgram) -> bool:
    return any(surface_has_bind(d.body) for d in p.defs) or surface_has_bind(p.main)
