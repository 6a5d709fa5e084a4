"""Well-formedness, subtyping, and bidirectional checking for coverage types.

The algorithm threads an ordered context down the binding structure of an
ANF term, synthesizing an exact qualifier for every binding (builtin
codomains are exact, values synthesize singleton qualifiers), and applies
subsumption once per leaf: the synthesized qualifier is compared against
the goal by a quantified VC over the whole telescope.

Coverage-versus-coverage inclusion quantifies over-bound names
universally, the value variable universally, and cover-bound names
existentially (a per-target-value choice of generator output); when the
right-hand qualifier itself mentions cover-bound names the matrix switches
to the witness-framed form

    (E. phi2)  ==>  (E. phi2 /\\ phi1)

with a renamed existential block.  Over-versus-over inclusion is the
standard implication under universally bounded bindings.

Coverage-parameter application consumes its argument variable: the
binding is marked and every later reference, including occurrences in
later qualifiers and the goal, is a linearity violation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import qualifiers as Q
from .prelude import BUILTIN_TYPES
from .qualifiers import (
    BOOL,
    NU,
    BaseType,
    BoolV,
    Prod,
    Qualifier,
    SortError,
    free_names,
    sort_of,
    subst_nu,
    type_of_value,
    value_to_term,
)
from .smt import decide_smt
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
    Span,
    Val,
    Value,
    Var,
    VPair,
)
from .types import (
    Binding,
    CoverBase,
    HoArrow,
    Kind,
    OverArrow,
    OverBase,
    RType,
    TypingContext,
    UnderArrow,
    is_arrow,
    kind_of,
)
from .vc import EXISTS, FORALL, VC, Invalid, PrefixEntry, Valid, Verdict, decide_bounded

from .elaborate import CoreProgram


class CheckError(Exception):
    """A definite checking failure (rejection) or a malformed program (error)."""

    def __init__(self, code: str, message: str, span: Span | None = None, *, reject: bool):
        self.code = code
        self.message = message
        self.span = span
        self.reject = reject
        where = f" at {span[0]}:{span[1]}" if span else ""
        super().__init__(f"{code}: {message}{where}")


def _err(code: str, message: str, span=None) -> CheckError:
    return CheckError(code, message, span, reject=False)


def _reject(code: str, message: str, span=None) -> CheckError:
    return CheckError(code, message, span, reject=True)


# ---------------------------------------------------------------------------
# Backends


class BoundedBackend:
    name = "bounded"

    def __init__(self, window: int):
        self.window = window

    def decide(self, vc: VC) -> Verdict:
        return decide_bounded(vc, self.window)


class SmtBackend:
    name = "smt"

    def __init__(self, solver_cmd: str, timeout_ms: int = 10_000):
        self.solver_cmd = solver_cmd
        self.timeout_ms = timeout_ms

    def decide(self, vc: VC) -> Verdict:
        return decide_smt(vc, self.solver_cmd, self.timeout_ms)


@dataclass
class Options:
    window: int = 8
    backend: object | None = None  # defaults to BoundedBackend(window)
    strict_overapp: bool = False
    assert_unit_payload: bool = False

    def resolved_backend(self):
        return self.backend if self.backend is not None else BoundedBackend(self.window)


@dataclass
class VcRecord:
    id: str
    rule: str
    vc: VC
    verdict: Verdict
    method: str
    note: str = ""
    span: Span | None = None


@dataclass
class _State:
    options: Options
    backend: object
    goal_free: frozenset[str]
    vcs: list[VcRecord] = field(default_factory=list)
    _counter: itertools.count = field(default_factory=lambda: itertools.count(1))

    def discharge(self, rule: str, vc: VC, note: str = "", span=None) -> Verdict:
        verdict = self.backend.decide(vc)
        rec = VcRecord(f"vc-{next(self._counter):04d}", rule, vc, verdict, self.backend.name, note, span)
        self.vcs.append(rec)
        return verdict


# ---------------------------------------------------------------------------
# Context prefixes


def _base_bindings(ctx: TypingContext) -> list[Binding]:
    return [b for b in ctx if b.kind in (Kind.OVER, Kind.COVER) and not b.consumed]


def _base_of(b: Binding) -> BaseType:
    t = b.rtype
    assert isinstance(t, (OverBase, CoverBase))
    return t.base


def _qual_of(b: Binding) -> Qualifier:
    t = b.rtype
    assert isinstance(t, (OverBase, CoverBase))
    return t.qual


def cover_prefix(ctx: TypingContext, nu_base: BaseType) -> tuple[list[PrefixEntry], list[str]]:
    """Prefix for coverage inclusion: forall overs, forall value, exists covers."""
    overs: list[PrefixEntry] = []
    covers: list[PrefixEntry] = []
    cover_names: list[str] = []
    seen_covers: set[str] = set()
    for b in _base_bindings(ctx):
        if b.kind is Kind.OVER:
            clash = free_names(_qual_of(b)) & seen_covers
            if clash:
                raise _err(
                    "E_UNSUPPORTED",
                    f"over binding {b.name} constrains cover-bound {sorted(clash)}; "
                    "this quantifier interleaving is not supported",
                )
            overs.append(PrefixEntry(FORALL, b.name, _base_of(b), _qual_of(b)))
        else:
            covers.append(PrefixEntry(EXISTS, b.name, _base_of(b), _qual_of(b)))
            cover_names.append(b.name)
            seen_covers.add(b.name)
    prefix = overs + [PrefixEntry(FORALL, NU, nu_base, Q.TRUE)] + covers
    return prefix, cover_names


def over_prefix(ctx: TypingContext, nu_base: BaseType) -> list[PrefixEntry]:
    """Prefix for over inclusion: every base binding universally bounded."""
    entries = [
        PrefixEntry(FORALL, b.name, _base_of(b), _qual_of(b)) for b in _base_bindings(ctx)
    ]
    entries.append(PrefixEntry(FORALL, NU, nu_base, Q.TRUE))
    return entries


def exists_prefix(ctx: TypingContext) -> list[PrefixEntry]:
    """Every base binding existentially bounded (satisfiability worlds)."""
    return [PrefixEntry(EXISTS, b.name, _base_of(b), _qual_of(b)) for b in _base_bindings(ctx)]


def _close_nu(q: Qualifier) -> Qualifier:
    """Replace the value variable by its VC prefix name."""
    return subst_nu(q, Q.VarRef(NU))


def _rename_names(q: Qualifier, mapping: dict[str, str]) -> Qualifier:
    out = q
    for old, new in mapping.items():
        out = Q.subst(out, old, Q.VarRef(new))
    return out


def satisfiability_vc(ctx: TypingContext, base: BaseType, qual: Qualifier) -> VC:
    """Valid iff some context world gives the qualifier a witness value."""
    prefix = exists_prefix(ctx) + [PrefixEntry(EXISTS, NU, base, Q.TRUE)]
    return VC(tuple(prefix), _close_nu(qual))


def sub_base(ctx: TypingContext, t1: RType, t2: RType) -> VC:
    """The inclusion VC for two base types of the same kind."""
    if isinstance(t1, CoverBase) and isinstance(t2, CoverBase):
        if t1.base != t2.base:
            raise _reject("E_SHAPE", f"base type mismatch: {t1.base} vs {t2.base}")
        prefix, cover_names = cover_prefix(ctx, t1.base)
        phi1 = _close_nu(t1.qual)
        phi2 = _close_nu(t2.qual)
        framed = free_names(t2.qual) & set(cover_names)
        if not framed:
            return VC(tuple(prefix), Q.Implies(phi2, phi1))
        # witness-framed matrix: the right-hand qualifier constrains cover
        # names, so the same existential block appears renamed on the right
        renaming = {n: n + "′" for n in cover_names}
        renamed_block = []
        for e in prefix:
            if e.quant == EXISTS and e.name in renaming:
                renamed_block.append(
                    PrefixEntry(EXISTS, renaming[e.name], e.base, _rename_names(e.bound, renaming))
                )
        outer = [
            e if e.quant == FORALL else PrefixEntry(FORALL, e.name, e.base, e.bound)
            for e in prefix
        ]
        matrix = Q.Implies(
            phi2,
            Q.And(_rename_names(phi2, renaming), _rename_names(phi1, renaming)),
        )
        return VC(tuple(outer + renamed_block), matrix)
    if isinstance(t1, OverBase) and isinstance(t2, OverBase):
        if t1.base != t2.base:
            raise _reject("E_SHAPE", f"base type mismatch: {t1.base} vs {t2.base}")
        prefix = over_prefix(ctx, t1.base)
        return VC(tuple(prefix), Q.Implies(_close_nu(t1.qual), _close_nu(t2.qual)))
    raise _reject(
        "E_KIND",
        "over and coverage base types are never comparable "
        f"({type(t1).__name__} vs {type(t2).__name__})",
    )


# ---------------------------------------------------------------------------
# Well-formedness


def wf_type(ctx: TypingContext, t: RType) -> None:
    """Sorting and telescoped scoping of a refinement type."""
    env = ctx.sort_env()

    def go(ctx: TypingContext, t: RType) -> None:
        match t:
            case OverBase(b, q) | CoverBase(b, q):
                try:
                    if sort_of(q, ctx.sort_env(), b) != BOOL:
                        raise _err("E_SORT", "qualifier is not bool-sorted")
                except SortError as e:
                    raise _err("E_SORT", str(e)) from None
            case OverArrow(x, d, c):
                go(ctx, d)
                go(ctx.extend(x, d), c)
            case UnderArrow(d, c):
                go(ctx, d)
                go(ctx, c)  # codomain may not depend on the argument
            case HoArrow(x, d, c):
                if not is_arrow(d):
                    raise _err("E_SHAPE", "higher-order parameter must be an arrow type")
                go(ctx, d)
                go(ctx, c)
            case _:
                raise TypeError(f"not a refinement type: {t!r}")

    del env
    go(ctx, t)


def wf_ctx(ctx: TypingContext, window: int, backend=None) -> None:
    """Every cover binding must be inhabited under the preceding context."""
    if backend is None:
        backend = BoundedBackend(window)
    seen = TypingContext()
    for b in ctx:
        wf_type(seen, b.rtype)
        if b.kind is Kind.COVER and not b.consumed:
            t = b.rtype
            assert isinstance(t, CoverBase)
            verdict = backend.decide(satisfiability_vc(seen, t.base, t.qual))
            if isinstance(verdict, Invalid):
                raise _reject(
                    "E_EMPTY_COVERAGE",
                    f"coverage binding {b.name} has an empty value set in window",
                )
        seen = TypingContext(seen.bindings + (b,))


# ---------------------------------------------------------------------------
# Subtyping


def sub_type(ctx: TypingContext, t1: RType, t2: RType, state: _State, span=None) -> None:
    """Structural subtyping; base inclusions are discharged through the backend."""
    match (t1, t2):
        case (CoverBase(), CoverBase()) | (OverBase(), OverBase()):
            vc = sub_base(ctx, t1, t2)
            verdict = state.discharge("SubBase", vc, span=span)
            _require_valid(verdict, "SubBase", span)
        case (OverArrow(x1, d1, c1), OverArrow(x2, d2, c2)):
            sub_type(ctx, d2, d1, state, span)
            c1r = c1 if x1 == x2 else _rename_cod(c1, x1, x2)
            sub_type(ctx.extend(x2, d2), c1r, c2, state, span)
        case (UnderArrow(d1, c1), UnderArrow(d2, c2)):
            sub_type(ctx, d2, d1, state, span)
            sub_type(ctx, c1, c2, state, span)
        case (HoArrow(x1, d1, c1), HoArrow(x2, d2, c2)):
            sub_type(ctx, d2, d1, state, span)
            c1r = c1 if x1 == x2 else _rename_cod(c1, x1, x2)
            sub_type(ctx.extend(x2, d2), c1r, c2, state, span)
        case _:
            raise _reject(
                "E_SHAPE",
                f"type shapes do not match: {type(t1).__name__} vs {type(t2).__name__}",
                span,
            )


def _rename_cod(cod: RType, old: str, new: str) -> RType:
    from .types import type_subst

    return type_subst(cod, old, Q.VarRef(new))


def _require_valid(verdict: Verdict, rule: str, span=None) -> None:
    if isinstance(verdict, Valid):
        return
    if isinstance(verdict, Invalid):
        from .vc import display_witness

        witness = display_witness(verdict.witness)
        extra = f" (counterexample: {witness})" if witness else ""
        raise _reject("E_VC_INVALID", f"{rule} obligation fails{extra}", span)
    raise _Inconclusive(rule)


class _Inconclusive(Exception):
    """Raised when a VC could not be decided; surfaces as exit code 3."""

    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(f"undecided obligation under rule {rule}")


# ---------------------------------------------------------------------------
# Synthesis


def _check_consumed(ctx: TypingContext, names: frozenset[str], span=None) -> None:
    used = names & ctx.consumed_names()
    if used:
        raise _reject(
            "E_LINEAR",
            f"argument to under-parameter reused: {', '.join(sorted(used))}",
            span,
        )


def synth_value(ctx: TypingContext, v: Value, state: _State | None = None, span=None) -> RType:
    """Type synthesis for values: constants and variables get exact coverage."""
    match v:
        case Const(sv):
            b = type_of_value(sv)
            return CoverBase(b, Q.Eq(Q.Nu(), value_to_term(sv)))
        case Var(name):
            binding = ctx.lookup(name)
            if binding is None:
                raise _err("E_UNBOUND", f"unbound variable: {name}", span)
            if binding.consumed:
                raise _reject("E_LINEAR", f"argument to under-parameter reused: {name}", span)
            if binding.kind is Kind.FUN:
                return binding.rtype
            return CoverBase(_base_of(binding), Q.Eq(Q.Nu(), Q.VarRef(name)))
        case VPair(a, b):
            ta = synth_value(ctx, a, state, span)
            tb = synth_value(ctx, b, state, span)
            if not isinstance(ta, CoverBase) or not isinstance(tb, CoverBase):
                raise _err("E_SHAPE", "pair components must be base-typed", span)
            qual = Q.And(subst_nu(ta.qual, Q.Fst(Q.Nu())), subst_nu(tb.qual, Q.Snd(Q.Nu())))
            return CoverBase(Prod(ta.base, tb.base), qual)
        case Lambda(param, annot, body):
            if state is None:
                raise _err("E_UNSUPPORTED", "cannot synthesize a lambda type here", span)
            wf_type(ctx, annot)
            _check_consumed(ctx, _annot_free(annot), span)
            match annot:
                case OverBase():
                    inner = ctx.extend(param, annot)
                    _, tbody = synth_term(inner, body, state)
                    return OverArrow(param, annot, tbody)
                case CoverBase():
                    inner = ctx.extend(param, annot)
                    _, tbody = synth_term(inner, body, state)
                    from .types import type_free_names

                    if param in type_free_names(tbody):
                        raise _err(
                            "E_UNSUPPORTED",
                            "cannot synthesize a coverage-parameter arrow whose result "
                            "depends on the parameter; ascribe the function type",
                            span,
                        )
                    return UnderArrow(annot, tbody)
                case _:
                    inner = ctx.extend(param, annot)
                    _, tbody = synth_term(inner, body, state)
                    return HoArrow(param, annot, tbody)
    raise TypeError(f"not a value: {v!r}")


def _annot_free(t: RType) -> frozenset[str]:
    from .types import type_free_names

    return type_free_names(t)


def _value_as_term(v: Value) -> Qualifier:
    match v:
        case Const(sv):
            return value_to_term(sv)
        case Var(name):
            return Q.VarRef(name)
    raise _err("E_UNSUPPORTED", f"cannot express {type(v).__name__} inside a qualifier")


def _bind(ctx: TypingContext, name: str, t: RType) -> TypingContext:
    return ctx.extend(name, t)


def _branch_reachable(ctx: TypingContext, cond: str, want: bool, state: _State) -> bool:
    """Can the condition variable take the wanted truth value in some world?"""
    binding = ctx.lookup(cond)
    assert binding is not None and isinstance(binding.rtype, (OverBase, CoverBase))
    before = TypingContext(tuple(itertools.takewhile(lambda b: b.name != cond, ctx.bindings)))
    lit = Q.Nu() if want else Q.Not(Q.Nu())
    vc = satisfiability_vc(before, BOOL, Q.And(_qual_of(binding), lit))
    verdict = state.discharge("BranchReachability", vc, note=f"{cond}={str(want).lower()}")
    # only a definite Invalid prunes the branch; inconclusive keeps it live,
    # which is sound because the guard is conjoined into the branch qualifier
    return not isinstance(verdict, Invalid)


def _refine_cond(ctx: TypingContext, cond: str, want: bool) -> TypingContext:
    binding = ctx.lookup(cond)
    assert binding is not None
    t = binding.rtype
    assert isinstance(t, (OverBase, CoverBase))
    lit = Q.Nu() if want else Q.Not(Q.Nu())
    refined = type(t)(t.base, Q.And(t.qual, lit))
    return ctx.refine(cond, refined)


def _merge_after_if(
    base_ctx: TypingContext, branch_ctxs: list[TypingContext]
) -> TypingContext:
    """Shared prefix with consumption flags joined, then each branch's new tail."""
    n = len(base_ctx.bindings)
    merged: list[Binding] = []
    for i, b in enumerate(base_ctx.bindings):
        consumed = b.consumed or any(c.bindings[i].consumed for c in branch_ctxs)
        merged.append(Binding(b.name, b.rtype, b.linearity, consumed))
    for c in branch_ctxs:
        merged.extend(c.bindings[n:])
    return TypingContext(tuple(merged))


def synth_term(ctx: TypingContext, t: CoreTerm, state: _State) -> tuple[TypingContext, RType]:
    """Synthesize a type for `t`, returning the extended telescope it lives in."""
    match t:
        case Val(v, span):
            return ctx, synth_value(ctx, v, state, span)

        case LetApp(x, fn, arg, body, span):
            ctx2 = _apply(ctx, x, fn, arg, state, span)
            return synth_term(ctx2, body, state)

        case LetTerm(x, bound, body, span):
            ctx1, tb = synth_term(ctx, bound, state)
            return synth_term(_bind(ctx1, x, tb), body, state)

        case LetPair(a, b, scrut, body, span):
            ctx2 = _destructure(ctx, a, b, scrut, state, span)
            return synth_term(ctx2, body, state)

        case If(c, th, el, span):
            return _synth_if(ctx, c, th, el, state, span)

        case LetAssume(x, ct, body, span):
            _introduce_assume(ctx, x, ct, state, span)
            return synth_term(_bind(ctx, x, ct), body, state)

        case Assert(ot, v, span):
            return ctx, _assert_type(ctx, ot, v, state, span)

    raise TypeError(f"not a core term: {t!r}")


def _introduce_assume(ctx: TypingContext, x: str, ct: CoverBase, state: _State, span) -> None:
    wf_type(ctx, ct)
    _check_consumed(ctx, free_names(ct.qual), span)
    verdict = state.discharge(
        "WfUBaseCtx", satisfiability_vc(ctx, ct.base, ct.qual), note=x, span=span
    )
    if isinstance(verdict, Invalid):
        raise _reject(
            "E_EMPTY_COVERAGE", f"coverage binding {x} has an empty value set in window", span
        )
    if not isinstance(verdict, Valid):
        raise _Inconclusive("WfUBaseCtx")


def _destructure(
    ctx: TypingContext, a: str, b: str, scrut: Value, state: _State, span
) -> TypingContext:
    ts = synth_value(ctx, scrut, state, span)
    if not (isinstance(ts, CoverBase) and isinstance(ts.base, Prod)):
        raise _err("E_SHAPE", "destructuring a non-pair value", span)
    p = _value_as_term(scrut)
    ctx2 = _bind(ctx, a, CoverBase(ts.base.left, Q.Eq(Q.Nu(), Q.Fst(p))))
    return _bind(ctx2, b, CoverBase(ts.base.right, Q.Eq(Q.Nu(), Q.Snd(p))))


def _apply(
    ctx: TypingContext, x: str, fn: Value, arg: Value, state: _State, span
) -> TypingContext:
    tf = synth_value(ctx, fn, state, span)
    targ = synth_value(ctx, arg, state, span)
    match tf:
        case OverArrow(p, dom, cod):
            if not isinstance(targ, CoverBase):
                raise _err("E_SHAPE", "argument of a first-order function must be base-typed", span)
            if targ.base != dom.base:
                raise _reject("E_SHAPE", f"argument base {targ.base} does not match {dom.base}", span)
            if state.options.strict_overapp:
                vc = sub_base(ctx, targ, CoverBase(dom.base, dom.qual))
                verdict = state.discharge("OverAppCoverage", vc, span=span)
                _require_valid(verdict, "OverAppCoverage", span)
            else:
                vc = sub_base(ctx, OverBase(targ.base, targ.qual), dom)
                verdict = state.discharge("OverAppSafety", vc, span=span)
                _require_valid(verdict, "OverAppSafety", span)
            from .types import type_subst

            cod2 = type_subst(cod, p, _value_as_term(arg))
            return _bind(ctx, x, cod2)
        case UnderArrow(dom, cod):
            if not isinstance(targ, CoverBase):
                raise _err("E_SHAPE", "argument of a first-order function must be base-typed", span)
            if targ.base != dom.base:
                raise _reject("E_SHAPE", f"argument base {targ.base} does not match {dom.base}", span)
            vc = sub_base(ctx, targ, dom)
            verdict = state.discharge("UnderAppCoverage", vc, span=span)
            _require_valid(verdict, "UnderAppCoverage", span)
            ctx2 = ctx
            if isinstance(arg, Var):
                binding = ctx.lookup(arg.name)
                if binding is not None and binding.kind in (Kind.OVER, Kind.COVER):
                    if arg.name in state.goal_free:
                        raise _reject(
                            "E_LINEAR",
                            f"argument to under-parameter reused: {arg.name} occurs in the goal type",
                            span,
                        )
                    # removing the binding must not leave dangling references
                    # in the rest of the telescope
                    for other in ctx:
                        if other.name != arg.name and not other.consumed:
                            if arg.name in _annot_free(other.rtype):
                                raise _reject(
                                    "E_LINEAR",
                                    f"argument to under-parameter reused: {arg.name} "
                                    f"occurs in the type of {other.name}",
                                    span,
                                )
                    ctx2 = ctx.consume(arg.name)
            return _bind(ctx2, x, cod)
        case HoArrow(p, dom, cod):
            if isinstance(arg, Lambda):
                check_value(ctx, arg, dom, state, span)
            else:
                if not is_arrow(targ):
                    raise _reject("E_SHAPE", "higher-order argument must be a function", span)
                sub_type(ctx, targ, dom, state, span)
            return _bind(ctx, x, cod)
        case _:
            raise _reject("E_SHAPE", "applying a non-function value", span)


def _assert_type(ctx: TypingContext, ot: OverBase, v: Value, state: _State, span) -> CoverBase:
    wf_type(ctx, ot)
    _check_consumed(ctx, free_names(ot.qual), span)
    tv = synth_value(ctx, v, state, span)
    if not isinstance(tv, CoverBase):
        raise _err("E_SHAPE", "assert applies to a base-typed value", span)
    if tv.base != ot.base:
        raise _reject("E_SHAPE", f"asserted value has base {tv.base}, annotation says {ot.base}", span)
    phi_prime, phi = tv.qual, ot.qual
    if state.options.assert_unit_payload:
        from .qualifiers import UNIT

        ground = subst_nu(phi, _value_as_term(v))
        qual = Q.Or(
            Q.And(Q.Fst(Q.Nu()), ground),
            Q.And(Q.Not(Q.Fst(Q.Nu())), Q.Not(ground)),
        )
        return CoverBase(Prod(BOOL, UNIT), qual)
    ok = Q.And(Q.Fst(Q.Nu()), subst_nu(Q.And(phi_prime, phi), Q.Snd(Q.Nu())))
    err = Q.And(Q.Not(Q.Fst(Q.Nu())), subst_nu(Q.And(phi_prime, Q.Not(phi)), Q.Snd(Q.Nu())))
    return CoverBase(Prod(BOOL, ot.base), Q.Or(ok, err))


def _synth_if(
    ctx: TypingContext, c: Value, th: CoreTerm, el: CoreTerm, state: _State, span
) -> tuple[TypingContext, RType]:
    match c:
        case Const(BoolV(b)):
            return synth_term(ctx, th if b else el, state)
        case Var(name):
            binding = ctx.lookup(name)
            if binding is None:
                raise _err("E_UNBOUND", f"unbound variable: {name}", span)
            if binding.consumed:
                raise _reject("E_LINEAR", f"argument to under-parameter reused: {name}", span)
            if binding.kind is Kind.FUN or _base_of(binding) != BOOL:
                raise _err("E_SORT", "condition must be a boolean variable", span)
        case _:
            raise _err("E_SHAPE", "condition must be a boolean variable or constant", span)

    name = c.name  # type: ignore[union-attr]
    arms: list[tuple[Qualifier, CoreTerm, bool]] = [
        (Q.VarRef(name), th, True),
        (Q.Not(Q.VarRef(name)), el, False),
    ]
    results: list[tuple[Qualifier, TypingContext, CoverBase]] = []
    for guard, branch, want in arms:
        if not _branch_reachable(ctx, name, want, state):
            continue
        rctx = _refine_cond(ctx, name, want)
        bctx, tb = synth_term(rctx, branch, state)
        if not isinstance(tb, CoverBase):
            raise _err(
                "E_UNSUPPORTED",
                "conditional branches must synthesize base types; "
                "function-typed conditionals need an ascription",
                span,
            )
        results.append((guard, bctx, tb))
    if not results:
        raise _reject("E_EMPTY_COVERAGE", "both conditional branches are unreachable", span)
    bases = {tb.base for _, _, tb in results}
    if len(bases) > 1:
        raise _reject("E_SHAPE", f"branch base types differ: {sorted(map(str, bases))}", span)
    merged_ctx = _merge_after_if(ctx, [bc for _, bc, _ in results])
    qual = Q.disj(*[Q.And(guard, tb.qual) for guard, _, tb in results])
    return merged_ctx, CoverBase(bases.pop(), qual)


# ---------------------------------------------------------------------------
# Checking


def check_value(ctx: TypingContext, v: Value, goal: RType, state: _State, span=None) -> None:
    """Check a value against a goal (the lambda rule lives here)."""
    if isinstance(v, Lambda) and is_arrow(goal):
        wf_type(ctx, v.annot)
        _check_consumed(ctx, _annot_free(v.annot), span)
        match goal:
            case OverArrow(x, dom, cod):
                if not isinstance(v.annot, OverBase):
                    raise _reject("E_SHAPE", "annotation does not match over-parameter goal", span)
                if v.annot != dom:
                    sub_type(ctx, dom, v.annot, state, span)
                inner_cod = _rename_cod(cod, x, v.param) if x != v.param else cod
                check_term(ctx.extend(v.param, dom), v.body, inner_cod, state)
                return
            case UnderArrow(dom, cod):
                if not isinstance(v.annot, CoverBase):
                    raise _reject("E_SHAPE", "annotation does not match coverage-parameter goal", span)
                if v.annot != dom:
                    sub_type(ctx, dom, v.annot, state, span)
                check_term(ctx.extend(v.param, dom), v.body, cod, state)
                return
            case HoArrow(x, dom, cod):
                if not is_arrow(v.annot):
                    raise _reject("E_SHAPE", "annotation does not match higher-order goal", span)
                if v.annot != dom:
                    sub_type(ctx, dom, v.annot, state, span)
                check_term(ctx.extend(v.param, dom), v.body, cod, state)
                return
    tv = synth_value(ctx, v, state, span)
    _leaf_subsume(ctx, tv, goal, state, span)


def _leaf_subsume(ctx: TypingContext, tv: RType, goal: RType, state: _State, span) -> None:
    if is_arrow(goal) or is_arrow(tv):
        sub_type(ctx, tv, goal, state, span)
        return
    assert isinstance(tv, CoverBase)
    if isinstance(goal, CoverBase):
        sub_type(ctx, tv, goal, state, span)
    elif isinstance(goal, OverBase):
        # the synthesized qualifier is exact, so it serves as an over bound
        sub_type(ctx, OverBase(tv.base, tv.qual), goal, state, span)
    else:
        raise TypeError(f"not a refinement type: {goal!r}")


def check_term(ctx: TypingContext, t: CoreTerm, goal: RType, state: _State) -> None:
    """Bidirectional checking: traverse bindings, subsume at the leaves."""
    match t:
        case Val(v, span):
            check_value(ctx, v, goal, state, span)
            return
        case LetApp(x, fn, arg, body, span):
            ctx2 = _apply(ctx, x, fn, arg, state, span)
            check_term(ctx2, body, goal, state)
            return
        case LetTerm(x, bound, body, span):
            if isinstance(bound, Val):
                tb = synth_value(ctx, bound.value, state, span)
                check_term(_bind(ctx, x, tb), body, goal, state)
                return
            ctx1, tb = synth_term(ctx, bound, state)
            check_term(_bind(ctx1, x, tb), body, goal, state)
            return
        case LetPair(a, b, scrut, body, span):
            ctx2 = _destructure(ctx, a, b, scrut, state, span)
            check_term(ctx2, body, goal, state)
            return
        case If(c, th, el, span):
            if is_arrow(goal):
                _check_if_arrow(ctx, c, th, el, goal, state, span)
                return
            ctx2, tb = _synth_if(ctx, c, th, el, state, span)
            _leaf_subsume(ctx2, tb, goal, state, span)
            return
        case LetAssume(x, ct, body, span):
            _introduce_assume(ctx, x, ct, state, span)
            check_term(_bind(ctx, x, ct), body, goal, state)
            return
        case Assert(ot, v, span):
            tb = _assert_type(ctx, ot, v, state, span)
            _leaf_subsume(ctx, tb, goal, state, span)
            return
    raise TypeError(f"not a core term: {t!r}")


def _check_if_arrow(ctx, c, th, el, goal, state, span) -> None:
    if not isinstance(c, (Var, Const)):
        raise _err("E_SHAPE", "condition must be a boolean variable or constant", span)
    if isinstance(c, Const):
        assert isinstance(c.value, BoolV)
        check_term(ctx, th if c.value.b else el, goal, state)
        return
    binding = ctx.lookup(c.name)
    if binding is None:
        raise _err("E_UNBOUND", f"unbound variable: {c.name}", span)
    live = 0
    for want, branch in ((True, th), (False, el)):
        if _branch_reachable(ctx, c.name, want, state):
            check_term(_refine_cond(ctx, c.name, want), branch, goal, state)
            live += 1
    if live == 0:
        raise _reject("E_EMPTY_COVERAGE", "both conditional branches are unreachable", span)


# ---------------------------------------------------------------------------
# Whole programs


@dataclass
class CheckReport:
    result: str  # accepted | rejected | inconclusive | error
    goal: RType
    vcs: list[VcRecord]
    errors: list[dict]
    window: int

    @property
    def accepted(self) -> bool:
        return self.result == "accepted"


def builtin_context() -> TypingContext:
    ctx = TypingContext()
    for name, t in sorted(BUILTIN_TYPES.items()):
        ctx = ctx.extend(name, t)
    return ctx


def check_program(program: CoreProgram, options: Options | None = None) -> CheckReport:
    """Check every definition against its ascription, then the main term."""
    options = options or Options()
    backend = options.resolved_backend()
    state = _State(options=options, backend=backend, goal_free=frozenset())
    errors: list[dict] = []
    result = "accepted"
    try:
        ctx = builtin_context()
        for d in program.defs:
            if d.ascription is not None:
                wf_type(ctx, d.ascription)
                inner = _State(
                    options=options,
                    backend=backend,
                    goal_free=_annot_free(d.ascription),
                    vcs=state.vcs,
                    _counter=state._counter,
                )
                check_term(ctx, d.body, d.ascription, inner)
                ctx = ctx.extend(d.name, d.ascription)
            else:
                _, td = synth_term(ctx, d.body, state)
                loose = _annot_free(td) - set(ctx.names())
                if loose:
                    raise _err(
                        "E_UNSUPPORTED",
                        f"definition {d.name} needs a result ascription: its synthesized "
                        f"type mentions local bindings {sorted(loose)}",
                        d.span,
                    )
                ctx = ctx.extend(d.name, td)
        wf_type(ctx, program.goal)
        main_state = _State(
            options=options,
            backend=backend,
            goal_free=_annot_free(program.goal),
            vcs=state.vcs,
            _counter=state._counter,
        )
        check_term(ctx, program.main, program.goal, main_state)
    except CheckError as e:
        errors.append(
            {"code": e.code, "message": e.message, "span": list(e.span) if e.span else None}
        )
        result = "rejected" if e.reject else "error"
    except _Inconclusive as e:
        errors.append({"code": "E_INCONCLUSIVE", "message": str(e), "span": None})
        result = "inconclusive"
    if result == "accepted" and any(
        isinstance(r.verdict, Invalid) and r.rule != "BranchReachability" for r in state.vcs
    ):
        result = "rejected"
    return CheckReport(result, program.goal, state.vcs, errors, options.window)
