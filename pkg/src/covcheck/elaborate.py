"""Lowering from the surface tree to A-normal-form core terms.

Two passes.  `desugar` rewrites every monadic bind `let* x = e1 in e2`
into the pair-destructure-and-branch form

    let p = e1 in
    let (ok, r) = p in
    if ok then (let x = r in e2) else (false, r)

so that later passes never see a bind node.  `anf_normalize` then lifts
applications into `let`-bound positions, destructures `fst`/`snd`
applications into pair bindings, and renames binders so every bound name
in the output is unique.  Fresh names come from a single counter, so the
output is stable across runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import qualifiers as Q
from .prelude import BUILTIN_ARITIES, BUILTIN_NAMES
from .qualifiers import BoolV, Qualifier
from .terms import (
    Assert,
    Const,
    CoreTerm,
    Def,
    If,
    Lambda,
    LetApp,
    LetAssume,
    LetPair,
    LetTerm,
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
    Span,
    SurfaceProgram,
    SVar,
    Val,
    Value,
    Var,
    VPair,
)
from .types import CoverBase, HoArrow, OverArrow, OverBase, RType, UnderArrow


class ElaborationError(Exception):
    def __init__(self, message: str, span: Span | None = None):
        self.span = span
        where = f" at {span[0]}:{span[1]}" if span else ""
        super().__init__(f"{message}{where}")


# ---------------------------------------------------------------------------
# Desugaring


class _Names:
    """Fresh-name supply that never collides with names already in use."""

    def __init__(self, taken: set[str]):
        self.taken = set(taken)
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        while True:
            name = f"{prefix}{self.counter}"
            self.counter += 1
            if name not in self.taken:
                self.taken.add(name)
                return name

    def bind(self, name: str) -> str:
        """A stable unique variant of `name` for binder renaming."""
        if name not in self.taken:
            self.taken.add(name)
            return name
        i = 1
        while f"{name}_{i}" in self.taken:
            i += 1
        out = f"{name}_{i}"
        self.taken.add(out)
        return out


def _all_names(e: SExpr, acc: set[str]) -> None:
    match e:
        case SConst() | SAssume():
            pass
        case SVar(name):
            acc.add(name)
        case SLambda(param, _, body):
            acc.add(param)
            _all_names(body, acc)
        case SPair(a, b):
            _all_names(a, acc)
            _all_names(b, acc)
        case SApp(f, a):
            _all_names(f, acc)
            _all_names(a, acc)
        case SLet(pat, bound, body) | SBind(pat, bound, body):
            _pattern_names(pat, acc)
            _all_names(bound, acc)
            _all_names(body, acc)
        case SIf(c, t, e2):
            _all_names(c, acc)
            _all_names(t, acc)
            _all_names(e2, acc)
        case SAssert(_, a):
            _all_names(a, acc)


def _pattern_names(pat: Pattern, acc: set[str]) -> None:
    match pat:
        case PVar(n):
            acc.add(n)
        case PPair(a, b):
            acc.add(a)
            acc.add(b)
        case PUnit():
            pass


def desugar(program: SurfaceProgram) -> SurfaceProgram:
    """Remove every monadic bind; total on parser output."""
    taken: set[str] = set(BUILTIN_NAMES)
    for d in program.defs:
        taken.add(d.name)
        for pname, _ in d.params:
            taken.add(pname)
        _all_names(d.body, taken)
    _all_names(program.main, taken)
    names = _Names(taken)

    def expand(pat: Pattern, bound: SExpr, body: SExpr, span) -> SExpr:
        p = names.fresh("_m")
        ok = names.fresh("_ok")
        r = names.fresh("_r")
        on_ok = SLet(pat, SVar(r, span=span), body, span=span)
        on_err = SPair(SConst(BoolV(False), span=span), SVar(r, span=span), span=span)
        return SLet(
            PVar(p),
            bound,
            SLet(
                PPair(ok, r),
                SVar(p, span=span),
                SIf(SVar(ok, span=span), on_ok, on_err, span=span),
                span=span,
            ),
            span=span,
        )

    def go(e: SExpr) -> SExpr:
        match e:
            case SConst() | SVar() | SAssume():
                return e
            case SLambda(param, annot, body, span):
                return SLambda(param, annot, go(body), span=span)
            case SPair(a, b, span):
                return SPair(go(a), go(b), span=span)
            case SApp(f, a, span):
                return SApp(go(f), go(a), span=span)
            case SLet(pat, bound, body, span):
                return SLet(pat, go(bound), go(body), span=span)
            case SBind(pat, bound, body, span):
                return expand(pat, go(bound), go(body), span)
            case SIf(c, t, e2, span):
                return SIf(go(c), go(t), go(e2), span=span)
            case SAssert(ot, a, span):
                return SAssert(ot, go(a), span=span)
        raise TypeError(f"not a surface expression: {e!r}")

    defs = tuple(
        Def(d.name, d.params, d.result, go(d.body), span=d.span) for d in program.defs
    )
    return SurfaceProgram(defs, go(program.main), program.goal, program.window)


# ---------------------------------------------------------------------------
# A-normal form


@dataclass(frozen=True)
class CoreDef:
    name: str
    ascription: RType | None
    body: CoreTerm
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CoreProgram:
    defs: tuple[CoreDef, ...]
    main: CoreTerm
    goal: RType
    window: int | None = None

    def as_term(self) -> CoreTerm:
        """The whole program as one closed term: definitions become lets."""
        t = self.main
        for d in reversed(self.defs):
            t = LetTerm(d.name, d.body, t, span=d.span)
        return t


def _rename_qualifier(q: Qualifier, env: dict[str, str]) -> Qualifier:
    match q:
        case Q.VarRef(name):
            return Q.VarRef(env.get(name, name))
        case Q.QTrue() | Q.QFalse() | Q.Nu() | Q.IntLit() | Q.ValueLit():
            return q
        case Q.Not(a):
            return Q.Not(_rename_qualifier(a, env))
        case Q.Even(a):
            return Q.Even(_rename_qualifier(a, env))
        case Q.Odd(a):
            return Q.Odd(_rename_qualifier(a, env))
        case Q.Fst(a):
            return Q.Fst(_rename_qualifier(a, env))
        case Q.Snd(a):
            return Q.Snd(_rename_qualifier(a, env))
        case Q.Eq(l, r):
            return Q.Eq(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Le(l, r):
            return Q.Le(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Lt(l, r):
            return Q.Lt(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Add(l, r):
            return Q.Add(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Sub(l, r):
            return Q.Sub(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.And(l, r):
            return Q.And(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Or(l, r):
            return Q.Or(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Implies(l, r):
            return Q.Implies(_rename_qualifier(l, env), _rename_qualifier(r, env))
        case Q.Iff(l, r):
            return Q.Iff(_rename_qualifier(l, env), _rename_qualifier(r, env))
    raise TypeError(f"not a qualifier: {q!r}")


def _rename_rtype(t: RType, env: dict[str, str]) -> RType:
    match t:
        case OverBase(b, q):
            return OverBase(b, _rename_qualifier(q, env))
        case CoverBase(b, q):
            return CoverBase(b, _rename_qualifier(q, env))
        case OverArrow(x, d, c):
            inner = {k: v for k, v in env.items() if k != x}
            return OverArrow(x, _rename_rtype(d, env), _rename_rtype(c, inner))
        case UnderArrow(d, c):
            return UnderArrow(_rename_rtype(d, env), _rename_rtype(c, env))
        case HoArrow(x, d, c):
            inner = {k: v for k, v in env.items() if k != x}
            return HoArrow(x, _rename_rtype(d, env), _rename_rtype(c, inner))
    raise TypeError(f"not a refinement type: {t!r}")


class _Normalizer:
    def __init__(self, names: _Names):
        self.names = names

    # A "binding" is a function from the rest of the term to the wrapped term.
    Bindings = list

    def spine(self, e: SExpr) -> tuple[SExpr, list[SExpr]]:
        args: list[SExpr] = []
        while isinstance(e, SApp):
            args.append(e.arg)
            e = e.fn
        return e, list(reversed(args))

    def check_arity(self, head: SExpr, nargs: int) -> None:
        if isinstance(head, SVar) and head.name in BUILTIN_ARITIES:
            arity = BUILTIN_ARITIES[head.name]
            if nargs > arity:
                raise ElaborationError(
                    f"builtin {head.name} takes {arity} argument(s), got {nargs}", head.span
                )

    def to_value(self, e: SExpr, binds: Bindings, env: dict[str, str]) -> Value:
        match e:
            case SConst(v):
                return Const(v)
            case SVar(name, span):
                if name not in env:
                    raise ElaborationError(f"unbound identifier: {name}", span)
                return Var(env[name])
            case SLambda(param, annot, body, _):
                annot2 = _rename_rtype(annot, env)
                p2 = self.names.bind(param)
                body2 = self.term(body, {**env, param: p2})
                return Lambda(p2, annot2, body2)
            case SPair(a, b, span):
                va = self.to_value(a, binds, env)
                va = self.atomize(va, binds, span)
                vb = self.to_value(b, binds, env)
                vb = self.atomize(vb, binds, span)
                return VPair(va, vb)
            case SApp(_, _, span):
                head, args = self.spine(e)
                self.check_arity(head, len(args))
                if isinstance(head, SVar) and head.name in ("fst", "snd") and len(args) == 1:
                    return self.project(head.name, args[0], binds, env, span)
                fn = self.to_value(head, binds, env)
                for arg in args:
                    va = self.to_value(arg, binds, env)
                    t = self.names.fresh("_t")
                    binds.append(lambda body, t=t, fn=fn, va=va, span=span: LetApp(t, fn, va, body, span=span))
                    fn = Var(t)
                return fn
            case SLet(pat, bound, body, span):
                self.bind_pattern(pat, bound, binds, env, span)
                # pattern variables extended env in bind_pattern via env mutation copy
                return self.to_value(body, binds, self._let_env)
            case SIf() | SAssume() | SAssert():
                t = self.names.fresh("_t")
                term = self.term(e, env)
                binds.append(lambda body, t=t, term=term: _attach(t, term, body))
                return Var(t)
            case SBind():
                raise ElaborationError("internal: bind survived desugaring")
        raise TypeError(f"not a surface expression: {e!r}")

    def atomize(self, v: Value, binds: Bindings, span) -> Value:
        """Pair components must be constants or variables."""
        if isinstance(v, (Const, Var)):
            return v
        t = self.names.fresh("_t")
        binds.append(lambda body, t=t, v=v, span=span: LetTerm(t, Val(v, span=span), body, span=span))
        return Var(t)

    def project(self, which: str, arg: SExpr, binds: Bindings, env: dict[str, str], span) -> Value:
        vp = self.to_value(arg, binds, env)
        vp = self.atomize(vp, binds, span)
        a = self.names.fresh("_t")
        b = self.names.fresh("_t")
        binds.append(lambda body, a=a, b=b, vp=vp, span=span: LetPair(a, b, vp, body, span=span))
        return Var(a if which == "fst" else b)

    def bind_pattern(self, pat: Pattern, bound: SExpr, binds: Bindings, env: dict[str, str], span) -> None:
        """Append bindings for `let pat = bound`, stashing the extended env."""
        match pat:
            case PVar(name):
                new = self.names.bind(name)
                term = self.named_bound(new, bound, env, span)
                binds.append(term)
                self._let_env = {**env, name: new}
            case PUnit():
                new = self.names.fresh("_u")
                term = self.named_bound(new, bound, env, span)
                binds.append(term)
                self._let_env = dict(env)
            case PPair(a, b):
                vp = self.to_value(bound, binds, env)
                vp = self.atomize(vp, binds, span)
                a2 = self.names.bind(a)
                b2 = self.names.bind(b)
                binds.append(lambda body, a2=a2, b2=b2, vp=vp, span=span: LetPair(a2, b2, vp, body, span=span))
                self._let_env = {**env, a: a2, b: b2}

    def named_bound(self, name: str, bound: SExpr, env: dict[str, str], span):
        """A binding thunk for `let name = bound in …` with bound normalized."""
        match bound:
            case SApp():
                head, args = self.spine(bound)
                self.check_arity(head, len(args))
                inner: list = []
                if isinstance(head, SVar) and head.name in ("fst", "snd") and len(args) == 1:
                    v = self.project(head.name, args[0], inner, env, span)
                    return lambda body: _wrap(inner, LetTerm(name, Val(v, span=span), body, span=span))
                fn = self.to_value(head, inner, env)
                for arg in args[:-1]:
                    va = self.to_value(arg, inner, env)
                    t = self.names.fresh("_t")
                    inner.append(lambda b, t=t, fn=fn, va=va: LetApp(t, fn, va, b, span=span))
                    fn = Var(t)
                last = self.to_value(args[-1], inner, env)
                return lambda body, fn=fn, last=last: _wrap(
                    inner, LetApp(name, fn, last, body, span=span)
                )
            case SAssume(ct, _):
                ct2 = _rename_rtype(ct, env)
                return lambda body: LetAssume(name, ct2, body, span=span)
            case _:
                term = self.term(bound, env)
                return lambda body: _attach(name, term, body)

    def term(self, e: SExpr, env: dict[str, str]) -> CoreTerm:
        match e:
            case SLet(pat, bound, body, span):
                binds: list = []
                self.bind_pattern(pat, bound, binds, env, span)
                body_env = self._let_env
                return _wrap(binds, self.term(body, body_env))
            case SIf(c, t, e2, span):
                binds: list = []
                vc = self.to_value(c, binds, env)
                return _wrap(binds, If(vc, self.term(t, env), self.term(e2, env), span=span))
            case SAssume(ct, span):
                x = self.names.fresh("_t")
                return LetAssume(x, _rename_rtype(ct, env), Val(Var(x), span=span), span=span)
            case SAssert(ot, arg, span):
                binds: list = []
                v = self.to_value(arg, binds, env)
                v = self.atomize(v, binds, span)
                return _wrap(binds, Assert(_rename_rtype(ot, env), v, span=span))
            case SBind():
                raise ElaborationError("internal: bind survived desugaring")
            case _:
                binds: list = []
                v = self.to_value(e, binds, env)
                span = getattr(e, "span", None)
                return _wrap(binds, Val(v, span=span))


def _wrap(binds: list, body: CoreTerm) -> CoreTerm:
    for b in reversed(binds):
        body = b(body)
    return body


def _attach(name: str, bound: CoreTerm, body: CoreTerm) -> CoreTerm:
    """`let name = bound in body`, collapsing a trivially-bound value."""
    return LetTerm(name, bound, body, span=getattr(bound, "span", None))


def anf_normalize(program: SurfaceProgram) -> CoreProgram:
    """Elaborate a desugared program into core form.

    Precondition: no bind nodes remain (run `desugar` first).
    Binders keep their source names on first occurrence; rebinding the same
    name and generated temporaries use a shared counter.
    """
    taken: set[str] = set(BUILTIN_NAMES)
    for d in program.defs:
        taken.add(d.name)
    names = _Names(taken)
    norm = _Normalizer(names)

    env = {b: b for b in BUILTIN_NAMES}
    env.pop("fst", None)
    env.pop("snd", None)
    core_defs: list[CoreDef] = []
    for d in program.defs:
        body_env = dict(env)
        lam_params: list[tuple[str, RType]] = []
        for pname, annot in d.params:
            annot2 = _rename_rtype(annot, body_env)
            p2 = names.bind(pname)
            body_env[pname] = p2
            lam_params.append((p2, annot2))
        body = norm.term(d.body, body_env)
        for p2, annot2 in reversed(lam_params):
            body = Val(Lambda(p2, annot2, body), span=d.span)
        core_defs.append(CoreDef(d.name, d.ascription(), body, span=d.span))
        env[d.name] = d.name
    main = norm.term(program.main, env)
    return CoreProgram(tuple(core_defs), main, program.goal, program.window)


def elaborate(program: SurfaceProgram) -> CoreProgram:
    return anf_normalize(desugar(program))


def elaborate_expression(e: SExpr, extra_names: frozenset[str] = frozenset()) -> CoreTerm:
    """Lower a bare expression (used by tests and the round-trip property)."""
    prog = SurfaceProgram((), e, CoverBase(Q.INT, Q.TRUE))
    prog = desugar(prog)
    taken: set[str] = set(BUILTIN_NAMES) | set(extra_names)
    names = _Names(taken)
    norm = _Normalizer(names)
    env = {b: b for b in BUILTIN_NAMES if b not in ("fst", "snd")}
    env.update({n: n for n in extra_names})
    return norm.term(prog.main, env)
