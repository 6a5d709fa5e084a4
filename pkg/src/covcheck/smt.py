"""SMT-LIB2 emission and the external-solver subprocess client.

The script asserts the negation of the VC, so `unsat` means the VC is
valid.  Pairs become a parametric datatype; parity goes through `mod 2`
(SMT-LIB `mod` is Euclidean, matching mathematical parity on negatives).
Prefix variables are mangled to `x0, x1, ...` in prefix order with the
original names recorded in comments, so output is byte-stable.
"""
from __future__ import annotations

import shlex
import subprocess

from . import qualifiers as Q
from .qualifiers import NU, BaseType, Bool, Int, PairV, Prod, Qualifier, SemanticValue, Unit, BoolV, IntV, UnitV
from .vc import EXISTS, FORALL, VC, Invalid, SolverUnknown, Valid, Verdict

_PRELUDE = [
    "(set-logic ALL)",
    "(declare-datatypes ((Unit 0)) (((mk-unit))))",
    "(declare-datatypes ((Pair 2)) ((par (X Y) ((mk-pair (pfst X) (psnd Y))))))",
]


def _sort(b: BaseType) -> str:
    match b:
        case Int():
            return "Int"
        case Bool():
            return "Bool"
        case Unit():
            return "Unit"
        case Prod(l, r):
            return f"(Pair {_sort(l)} {_sort(r)})"
    raise TypeError(f"not a base type: {b!r}")


def _value(v: SemanticValue) -> str:
    match v:
        case IntV(n):
            return str(n) if n >= 0 else f"(- {-n})"
        case BoolV(b):
            return "true" if b else "false"
        case UnitV():
            return "mk-unit"
        case PairV(a, b):
            return f"(mk-pair {_value(a)} {_value(b)})"
    raise TypeError(f"not a semantic value: {v!r}")


def _term(q: Qualifier, names: dict[str, str], nu: str | None) -> str:
    def go(q: Qualifier) -> str:
        match q:
            case Q.QTrue():
                return "true"
            case Q.QFalse():
                return "false"
            case Q.Nu():
                if nu is None:
                    raise ValueError("value variable not in scope in this position")
                return nu
            case Q.VarRef(name):
                if name not in names:
                    raise ValueError(f"unbound name in VC: {name}")
                return names[name]
            case Q.IntLit(n):
                return str(n) if n >= 0 else f"(- {-n})"
            case Q.ValueLit(v):
                return _value(v)
            case Q.Eq(l, r):
                return f"(= {go(l)} {go(r)})"
            case Q.Le(l, r):
                return f"(<= {go(l)} {go(r)})"
            case Q.Lt(l, r):
                return f"(< {go(l)} {go(r)})"
            case Q.Add(l, r):
                return f"(+ {go(l)} {go(r)})"
            case Q.Sub(l, r):
                return f"(- {go(l)} {go(r)})"
            case Q.Not(a):
                return f"(not {go(a)})"
            case Q.And(l, r):
                return f"(and {go(l)} {go(r)})"
            case Q.Or(l, r):
                return f"(or {go(l)} {go(r)})"
            case Q.Implies(l, r):
                return f"(=> {go(l)} {go(r)})"
            case Q.Iff(l, r):
                return f"(= {go(l)} {go(r)})"
            case Q.Even(a):
                return f"(= (mod {go(a)} 2) 0)"
            case Q.Odd(a):
                return f"(not (= (mod {go(a)} 2) 0))"
            case Q.Fst(a):
                return f"(pfst {go(a)})"
            case Q.Snd(a):
                return f"(psnd {go(a)})"
        raise TypeError(f"not a qualifier: {q!r}")

    return go(q)


def emit_smt2(vc: VC) -> str:
    """Render a VC as a complete SMT-LIB2 script (negated; unsat means valid)."""
    names: dict[str, str] = {}
    lines = list(_PRELUDE)
    for i, entry in enumerate(vc.prefix):
        mangled = f"x{i}"
        names[entry.name] = mangled
        display = "v" if entry.name == NU else entry.name
        lines.append(f"; {mangled} := {entry.quant} {display} : {_sort(entry.base)}")
    body = _term(vc.matrix, names, None)
    for i in range(len(vc.prefix) - 1, -1, -1):
        entry = vc.prefix[i]
        mangled = f"x{i}"
        bound_names = {k: v for k, v in names.items() if k != entry.name}
        bound = _term(entry.bound, bound_names, nu=mangled)
        decl = f"(({mangled} {_sort(entry.base)}))"
        if entry.quant == FORALL:
            inner = body if bound == "true" else f"(=> {bound} {body})"
            body = f"(forall {decl} {inner})"
        elif entry.quant == EXISTS:
            inner = body if bound == "true" else f"(and {bound} {body})"
            body = f"(exists {decl} {inner})"
        else:
            raise ValueError(f"bad quantifier: {entry.quant}")
    lines.append(f"(assert (not {body}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def run_solver(solver_cmd: str, script: str, timeout_ms: int = 10_000) -> str:
    """Run a solver command on an SMT-LIB2 script; returns sat/unsat/unknown."""
    argv = shlex.split(solver_cmd)
    try:
        proc = subprocess.run(
            argv,
            input=script,
            capture_output=True,
            text=True,
            timeout=timeout_ms / 1000.0,
        )
    except (subprocess.TimeoutExpired, OSError):
        return "unknown"
    for line in proc.stdout.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            return word
    return "unknown"


def decide_smt(vc: VC, solver_cmd: str, timeout_ms: int = 10_000) -> Verdict:
    answer = run_solver(solver_cmd, emit_smt2(vc), timeout_ms)
    if answer == "unsat":
        return Valid()
    if answer == "sat":
        return Invalid(None)
    return SolverUnknown("solver answered unknown or timed out")
