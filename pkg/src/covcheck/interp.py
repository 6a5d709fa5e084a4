"""Exhaustive operational semantics for core terms.

Evaluation is set-valued: generator builtins and `assume` fork one branch
per in-window value, and `outcomes` returns every value reachable along
any branch.  The machine is a small-step CEK loop over explicit
configurations, so exploration order is a parameter (stack or queue); the
outcome set never depends on it.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .qualifiers import (
    BaseType,
    BoolV,
    IntV,
    PairV,
    Qualifier,
    SemanticValue,
    UnitV,
    evaluate,
    free_names,
    values_of,
)
from .types import CoverBase
from .prelude import BUILTIN_ARITIES
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

INT64_MAX = 2**63 - 1


class EvalError(Exception):
    pass


@dataclass(frozen=True)
class Closure:
    param: str
    body: CoreTerm
    env: "Env"


@dataclass(frozen=True)
class Builtin:
    name: str
    args: tuple["RuntimeValue", ...] = ()


RuntimeValue = SemanticValue | Closure | Builtin
Env = Mapping[str, RuntimeValue]


@dataclass(frozen=True)
class OutcomeSet:
    values: frozenset[SemanticValue]
    diverged_or_stuck: bool = False  # reserved; always False in this fragment

    def __contains__(self, v: SemanticValue) -> bool:
        return v in self.values

    def sorted_values(self) -> list[SemanticValue]:
        return sorted(self.values, key=_value_key)


def _value_key(v: SemanticValue):
    match v:
        case UnitV():
            return (0,)
        case BoolV(b):
            return (1, b)
        case IntV(n):
            return (2, n)
        case PairV(a, b):
            return (3, _value_key(a), _value_key(b))
    raise TypeError(f"not a semantic value: {v!r}")


def builtin_env() -> dict[str, RuntimeValue]:
    """Initial environment holding every builtin operation."""
    return {name: Builtin(name) for name in BUILTIN_ARITIES}


def _check_int(v: RuntimeValue, who: str) -> int:
    if not isinstance(v, IntV):
        raise EvalError(f"{who}: expected an integer, got {v!r}")
    return v.n


def _check_bool(v: RuntimeValue, who: str) -> bool:
    if not isinstance(v, BoolV):
        raise EvalError(f"{who}: expected a boolean, got {v!r}")
    return v.b


def _checked_arith(n: int) -> IntV:
    if abs(n) > INT64_MAX:
        raise EvalError("integer overflow (64-bit signed)")
    return IntV(n)


def _builtin_results(name: str, args: tuple[RuntimeValue, ...], window: int) -> list[SemanticValue]:
    match name:
        case "int_gen":
            if not isinstance(args[0], UnitV):
                raise EvalError("int_gen: expected ()")
            return [IntV(n) for n in range(-window, window + 1)]
        case "bool_gen":
            if not isinstance(args[0], UnitV):
                raise EvalError("bool_gen: expected ()")
            return [BoolV(False), BoolV(True)]
        case "int_range":
            lo = _check_int(args[0], "int_range")
            hi = _check_int(args[1], "int_range")
            if lo > hi:
                raise EvalError(f"int_range: empty range [{lo}, {hi}]")
            return [IntV(n) for n in range(lo, hi + 1)]
        case "is_even":
            return [BoolV(_check_int(args[0], "is_even") % 2 == 0)]
        case "is_odd":
            return [BoolV(_check_int(args[0], "is_odd") % 2 != 0)]
        case "+":
            return [_checked_arith(_check_int(args[0], "+") + _check_int(args[1], "+"))]
        case "-":
            return [_checked_arith(_check_int(args[0], "-") - _check_int(args[1], "-"))]
        case "==":
            return [BoolV(_check_int(args[0], "==") == _check_int(args[1], "=="))]
        case "<=":
            return [BoolV(_check_int(args[0], "<=") <= _check_int(args[1], "<="))]
        case "&&":
            return [BoolV(_check_bool(args[0], "&&") and _check_bool(args[1], "&&"))]
        case "not":
            return [BoolV(not _check_bool(args[0], "not"))]
        case "fst":
            if not isinstance(args[0], PairV):
                raise EvalError("fst: expected a pair")
            return [args[0].fst]
        case "snd":
            if not isinstance(args[0], PairV):
                raise EvalError("snd: expected a pair")
            return [args[0].snd]
    raise EvalError(f"unknown builtin: {name}")


def _eval_value(v: Value, env: Env) -> RuntimeValue:
    match v:
        case Const(sv):
            return sv
        case Var(name):
            if name not in env:
                raise EvalError(f"unbound name: {name}")
            return env[name]
        case Lambda(param, _, body):
            return Closure(param, body, env)
        case VPair(f, s):
            a = _eval_value(f, env)
            b = _eval_value(s, env)
            if not isinstance(a, SemanticValue) or not isinstance(b, SemanticValue):
                raise EvalError("pair components must be first-order values")
            return PairV(a, b)
    raise TypeError(f"not a value: {v!r}")


def _semantic_valuation(env: Env) -> dict[str, SemanticValue]:
    return {k: v for k, v in env.items() if isinstance(v, SemanticValue)}


# One machine configuration: a control (term to run or value to return),
# its environment, and a stack of pending let-bindings.
_Frame = tuple[str, CoreTerm, Env]
_Config = tuple


def _step(config: _Config, window: int, unit_payload: bool) -> Iterable[_Config] | SemanticValue:
    mode, payload, env, kont = config
    if mode == "ret":
        if not kont:
            if not isinstance(payload, SemanticValue):
                raise EvalError("program result is a function value; outcomes are defined at base type")
            return payload
        (x, body, kenv), rest = kont[-1], kont[:-1]
        return [("term", body, {**kenv, x: payload}, rest)]

    t: CoreTerm = payload
    match t:
        case Val(v):
            return [("ret", _eval_value(v, env), env, kont)]
        case LetApp(x, fn, arg, body):
            fv = _eval_value(fn, env)
            av = _eval_value(arg, env)
            if isinstance(fv, Closure):
                frame = (x, body, env)
                return [("term", fv.body, {**fv.env, fv.param: av}, kont + (frame,))]
            if isinstance(fv, Builtin):
                args = fv.args + (av,)
                if len(args) < BUILTIN_ARITIES[fv.name]:
                    return [("term", body, {**env, x: Builtin(fv.name, args)}, kont)]
                results = _builtin_results(fv.name, args, window)
                return [("term", body, {**env, x: r}, kont) for r in results]
            raise EvalError(f"applying a non-function value: {fv!r}")
        case LetTerm(x, bound, body):
            frame = (x, body, env)
            return [("term", bound, env, kont + (frame,))]
        case LetPair(a, b, scrut, body):
            sv = _eval_value(scrut, env)
            if not isinstance(sv, PairV):
                raise EvalError("destructuring a non-pair value")
            return [("term", body, {**env, a: sv.fst, b: sv.snd}, kont)]
        case If(c, th, el):
            cv = _eval_value(c, env)
            if not isinstance(cv, BoolV):
                raise EvalError("condition is not a boolean")
            return [("term", th if cv.b else el, env, kont)]
        case LetAssume(x, ctype, body):
            valuation = _semantic_valuation(env)
            picks = [
                v
                for v in values_of(ctype.base, window)
                if evaluate(ctype.qual, valuation, v)
            ]
            return [("term", body, {**env, x: v}, kont) for v in picks]
        case Assert(otype, v):
            sv = _eval_value(v, env)
            if not isinstance(sv, SemanticValue):
                raise EvalError("assert applied to a function value")
            flag = evaluate(otype.qual, _semantic_valuation(env), sv)
            result = PairV(BoolV(flag), UnitV() if unit_payload else sv)
            return [("ret", result, env, kont)]
    raise TypeError(f"not a core term: {t!r}")


def outcomes(
    t: CoreTerm,
    env: Env | None = None,
    window: int = 8,
    order: str = "dfs",
    unit_payload: bool = False,
) -> OutcomeSet:
    """The exact set of values `t` can reach under the windowed semantics.

    `order` selects depth-first ("dfs") or breadth-first ("bfs")
    exploration; the result is a set, so both agree.
    """
    if env is None:
        env = builtin_env()
    start: _Config = ("term", t, dict(env), ())
    results: set[SemanticValue] = set()
    if order == "dfs":
        stack: list[_Config] = [start]
        while stack:
            out = _step(stack.pop(), window, unit_payload)
            if isinstance(out, SemanticValue):
                results.add(out)
            else:
                stack.extend(out)
    elif order == "bfs":
        queue: deque[_Config] = deque([start])
        while queue:
            out = _step(queue.popleft(), window, unit_payload)
            if isinstance(out, SemanticValue):
                results.add(out)
            else:
                queue.extend(out)
    else:
        raise ValueError(f"unknown exploration order: {order}")
    return OutcomeSet(frozenset(results))


def canonical_generator(q: Qualifier, b: BaseType, window: int) -> CoreTerm:
    """A closed term whose outcome set is exactly the windowed value set of q."""
    if free_names(q):
        raise ValueError(f"qualifier is not closed: free {sorted(free_names(q))}")
    if not any(evaluate(q, {}, v) for v in values_of(b, window)):
        raise ValueError("unsatisfiable qualifier has no generator")
    return LetAssume("_g", CoverBase(b, q), Val(Var("_g")))
