"""Symbolic values, path conditions and a bounded-domain enumeration solver."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Optional, Union

from .errors import DomainError, UnboundVariable
from .lang.ast import BinOp, BoolLit, IntLit, SymVar, UnOp, Var

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class Concrete:
    value: Union[int, bool]


@dataclass(frozen=True)
class Symbolic:
    expr: object

    def __post_init__(self):
        if isinstance(self.expr, (IntLit, BoolLit)):
            raise ValueError("literal expressions must be wrapped as Concrete")


SymValue = Union[Concrete, Symbolic]


def symbolic(expr) -> SymValue:
    """Wrap an expression, collapsing literals to Concrete."""
    if isinstance(expr, (IntLit, BoolLit)):
        return Concrete(expr.value)
    return Symbolic(expr)


def as_expr(v: SymValue):
    if isinstance(v, Symbolic):
        return v.expr
    if isinstance(v.value, bool):
        return BoolLit(v.value)
    return IntLit(v.value)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _fold_binop(op: str, left: SymValue, right: SymValue) -> SymValue:
    lc = isinstance(left, Concrete)
    rc = isinstance(right, Concrete)
    if op == "&&":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, Concrete):
                return b if a.value else Concrete(False)
    elif op == "||":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, Concrete):
                return Concrete(True) if a.value else b
    elif lc and rc:
        return Concrete(_ARITH[op](left.value, right.value))
    elif op == "*":
        for a, b in ((left, right), (right, left)):
            if isinstance(a, Concrete) and a.value == 0:
                return Concrete(0)
            if isinstance(a, Concrete) and a.value == 1:
                return b
    elif op == "+":
        if lc and left.value == 0:
            return right
        if rc and right.value == 0:
            return left
    elif op == "-" and rc and right.value == 0:
        return left
    return Symbolic(BinOp(op, as_expr(left), as_expr(right)))


def eval_expr(expr, env: Mapping[str, SymValue], inputs: Optional[Mapping[str, int]] = None) -> SymValue:
    """Evaluate `expr` under `env`; symbolic inputs found in `inputs` are concretised."""
    if isinstance(expr, IntLit):
        return Concrete(expr.value)
    if isinstance(expr, BoolLit):
        return Concrete(expr.value)
    if isinstance(expr, SymVar):
        if inputs is not None and expr.name in inputs:
            return Concrete(inputs[expr.name])
        return Symbolic(expr)
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise UnboundVariable(f"unbound variable {expr.name!r}") from None
    if isinstance(expr, UnOp):
        v = eval_expr(expr.operand, env, inputs)
        if isinstance(v, Concrete):
            return Concrete(not v.value) if expr.op == "!" else Concrete(-v.value)
        return Symbolic(UnOp(expr.op, v.expr))
    if isinstance(expr, BinOp):
        return _fold_binop(expr.op, eval_expr(expr.left, env, inputs), eval_expr(expr.right, env, inputs))
    raise TypeError(f"not an expression: {expr!r}")


def negate(expr):
    if isinstance(expr, BoolLit):
        return BoolLit(not expr.value)
    if isinstance(expr, UnOp) and expr.op == "!":
        return expr.operand
    return UnOp("!", expr)


def free_symbols(expr) -> set:
    if isinstance(expr, SymVar):
        return {expr.name}
    if isinstance(expr, BinOp):
        return free_symbols(expr.left) | free_symbols(expr.right)
    if isinstance(expr, UnOp):
        return free_symbols(expr.operand)
    return set()


@dataclass(frozen=True)
class PathCondition:
    conjuncts: tuple = ()

    def add(self, expr) -> "PathCondition":
        if isinstance(expr, BoolLit) and expr.value:
            return self
        return PathCondition(self.conjuncts + (expr,))

    def __and__(self, other: "PathCondition") -> "PathCondition":
        return PathCondition(self.conjuncts + tuple(c for c in other.conjuncts if c not in self.conjuncts))

    def __iter__(self):
        return iter(self.conjuncts)

    def __len__(self):
        return len(self.conjuncts)

    def symbols(self) -> set:
        out = set()
        for c in self.conjuncts:
            out |= free_symbols(c)
        return out


# -- compilation to Python predicates -----------------------------------------

_PY_OPS = {"&&": "and", "||": "or"}


def _py(expr) -> str:
    if isinstance(expr, IntLit):
        return repr(expr.value)
    if isinstance(expr, BoolLit):
        return "True" if expr.value else "False"
    if isinstance(expr, SymVar):
        return f"v_{expr.name}"
    if isinstance(expr, UnOp):
        return f"(not {_py(expr.operand)})" if expr.op == "!" else f"(-{_py(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({_py(expr.left)} {_PY_OPS.get(expr.op, expr.op)} {_py(expr.right)})"
    if isinstance(expr, Var):
        raise UnboundVariable(f"program variable {expr.name!r} inside a path condition")
    raise TypeError(f"not an expression: {expr!r}")


@lru_cache(maxsize=4096)
def _compile(conjuncts: frozenset, negated: frozenset, names: tuple):
    parts = [_py(c) for c in sorted(conjuncts, key=repr)]
    if negated:
        parts.append("not (" + " and ".join(_py(c) for c in sorted(negated, key=repr)) + ")")
    body = " and ".join(parts) if parts else "True"
    args = ", ".join(f"v_{n}" for n in names)
    return eval(f"lambda {args}: {body}", {})  # noqa: S307 - source is generated from our own AST


def _ranges(names, domains, cap):
    total = 1
    ranges = []
    for n in names:
        if n not in domains:
            raise DomainError(f"no domain for symbolic variable {n!r}")
        lo, hi = domains[n]
        ranges.append(range(lo, hi + 1))
        total *= hi - lo + 1
    if total > cap:
        raise DomainError(f"enumeration of {total} assignments exceeds cap {cap}")
    return ranges


@lru_cache(maxsize=16384)
def _search(conjuncts: frozenset, negated: frozenset, domain_items: tuple, cap: int):
    domains = dict(domain_items)
    names = tuple(sorted(set().union(*(free_symbols(c) for c in conjuncts | negated)) if conjuncts | negated else ()))
    if any(isinstance(c, BoolLit) and not c.value for c in conjuncts):
        return None
    pred = _compile(conjuncts, negated, names)
    for values in itertools.product(*_ranges(names, domains, cap)):
        if pred(*values):
            return dict(zip(names, values))
    return None


def _domain_key(domains: Mapping, names) -> tuple:
    return tuple(sorted((n, tuple(domains[n])) for n in names if n in domains))


def _check_domains(names, domains):
    for n in names:
        if n not in domains:
            raise DomainError(f"no domain for symbolic variable {n!r}")


def solve(pc, domains: Mapping, cap: int = DEFAULT_CAP) -> Optional[dict]:
    """Return the lexicographically first satisfying assignment of `pc`'s symbols, or None."""
    conj = frozenset(pc)
    names = set().union(*(free_symbols(c) for c in conj)) if conj else set()
    _check_domains(names, domains)
    return _search(conj, frozenset(), _domain_key(domains, names), cap)


def is_sat(pc, domains: Mapping, cap: int = DEFAULT_CAP) -> bool:
    return solve(pc, domains, cap) is not None


def implies(pc_a, pc_b, domains: Mapping, cap: int = DEFAULT_CAP) -> bool:
    """True iff every assignment satisfying `pc_a` also satisfies `pc_b`."""
    a, b = frozenset(pc_a), frozenset(pc_b)
    if b <= a:
        return True
    b = b - a
    names = set().union(*(free_symbols(c) for c in a | b))
    _check_domains(names, domains)
    return _search(a, b, _domain_key(domains, names), cap) is None
