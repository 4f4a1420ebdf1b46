"""Core message-passing language: AST, parser, printer, properties."""
from .ast import (
    ANY, Assign, Barrier, Before, BinOp, BoolLit, DeadlockFree, If, IntLit, IRecv, ISend,
    Program, Recv, Send, Ssend, SymInput, SymVar, UnOp, Var, VarDecl, Wait, While, is_comm, walk,
)
from .parser import (
    count_comm, format_expr, format_program, format_property, parse_program, parse_property,
)

__all__ = [
    "ANY", "Assign", "Barrier", "Before", "BinOp", "BoolLit", "DeadlockFree", "If", "IntLit",
    "IRecv", "ISend", "Program", "Recv", "Send", "Ssend", "SymInput", "SymVar", "UnOp", "Var",
    "VarDecl", "Wait", "While", "count_comm", "format_expr", "format_program", "format_property",
    "is_comm", "parse_program", "parse_property", "walk",
]
