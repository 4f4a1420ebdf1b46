"""AST for the core message-passing language.

Blocks are plain tuples of statements, so every node is hashable and
process continuations can be stored inside immutable states.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

# -- expressions -------------------------------------------------------------

ARITH_OPS = ("+", "-", "*")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("&&", "||")


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class SymVar:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str  # "!" or "-"
    operand: "Expr"


Expr = Union[IntLit, BoolLit, SymVar, Var, BinOp, UnOp]


class _AnySource:
    """The wildcard source `*`."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "ANY"

    def __reduce__(self):
        return (_AnySource, ())


ANY = _AnySource()

# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str = "int"


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple


@dataclass(frozen=True)
class Ssend:
    dst: Expr
    label: Optional[str] = None


@dataclass(frozen=True)
class Send:
    dst: Expr
    label: Optional[str] = None


@dataclass(frozen=True)
class Recv:
    src: Union[Expr, _AnySource]
    label: Optional[str] = None


@dataclass(frozen=True)
class Barrier:
    label: Optional[str] = None


@dataclass(frozen=True)
class ISend:
    dst: Expr
    req: str
    label: Optional[str] = None


@dataclass(frozen=True)
class IRecv:
    src: Union[Expr, _AnySource]
    req: str
    label: Optional[str] = None


@dataclass(frozen=True)
class Wait:
    req: str
    label: Optional[str] = None


COMM_TYPES = (Ssend, Send, Recv, Barrier, ISend, IRecv, Wait)
Stmt = Union[VarDecl, Assign, If, While, Ssend, Send, Recv, Barrier, ISend, IRecv, Wait]


def is_comm(stmt) -> bool:
    return isinstance(stmt, COMM_TYPES)


@dataclass(frozen=True)
class SymInput:
    name: str
    low: int
    high: int


@dataclass(frozen=True)
class Program:
    processes: tuple  # tuple of blocks; rank = position
    sym_inputs: tuple = ()  # tuple of SymInput

    @property
    def nprocs(self) -> int:
        return len(self.processes)

    def domains(self) -> dict:
        return {s.name: (s.low, s.high) for s in self.sym_inputs}

    def labels(self) -> dict:
        """Map each event label to the rank of the process carrying it."""
        found = {}
        for rank, body in enumerate(self.processes):
            for stmt in walk(body):
                label = getattr(stmt, "label", None)
                if label is not None:
                    found[label] = rank
        return found


def walk(block):
    """Yield every statement in a block, depth first, in textual order."""
    for stmt in block:
        yield stmt
        if isinstance(stmt, If):
            yield from walk(stmt.then)
            yield from walk(stmt.orelse)
        elif isinstance(stmt, While):
            yield from walk(stmt.body)


# -- properties --------------------------------------------------------------


@dataclass(frozen=True)
class DeadlockFree:
    pass


@dataclass(frozen=True)
class Before:
    """`first` must not complete before `second` (the pattern !a U b)."""

    first: str
    second: str


PropertySpec = Union[DeadlockFree, Before]
