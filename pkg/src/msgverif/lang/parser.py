"""Recursive-descent parser and pretty-printer for `.mpl` programs and `.prop` properties.

The grammar is documented in docs/grammar.md.
"""
from __future__ import annotations

import re
from typing import Optional

from ..errors import ParseError
from .ast import (
    ANY, CMP_OPS, Assign, Barrier, Before, BinOp, BoolLit, DeadlockFree,
    If, IntLit, IRecv, ISend, Program, Recv, Send, Ssend, SymInput, SymVar, UnOp, Var, VarDecl,
    Wait, While, is_comm, walk,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(//|\#)[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||[-+*<>!(){}\[\];:,@*])
    """,
    re.VERBOSE,
)

DEFAULT_DOMAIN = (0, 255)

KEYWORDS = {
    "proc", "sym", "int", "in", "var", "if", "else", "while", "true", "false",
    "send", "ssend", "recv", "barrier", "isend", "irecv", "wait",
}


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
        elif kind in ("int", "op"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.syms: dict[str, SymInput] = {}
        # per-process scope
        self.vars: set[str] = set()
        self.reqs: set[str] = set()
        self.labels: dict[str, Token] = {}
        self.peer_literals: list[tuple[int, Token]] = []

    # -- token helpers -------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok: Optional[Token] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        tok = self.tok
        self.i += 1
        return tok

    def expect_int(self) -> int:
        neg = self.accept("-")
        if self.tok.kind != "int":
            raise self.error("expected integer literal")
        value = int(self.tok.text)
        self.i += 1
        return -value if neg else value

    # -- program -------------------------------------------------------------
    def program(self) -> Program:
        procs = []
        while self.tok.kind != "eof":
            if self.accept("sym"):
                self.sym_decl()
            elif self.at("proc"):
                procs.append(self.proc(len(procs)))
            else:
                raise self.error(f"expected 'proc' or 'sym', found {self.tok.text!r}")
        if not procs:
            raise self.error("program declares no processes")
        n = len(procs)
        for value, tok in self.peer_literals:
            if not 0 <= value < n:
                raise self.error(f"rank {value} out of range [0, {n - 1}]", tok)
        return Program(tuple(procs), tuple(self.syms.values()))

    def sym_decl(self):
        name_tok = self.expect_ident()
        if name_tok.text in self.syms:
            raise self.error(f"duplicate symbolic input {name_tok.text!r}", name_tok)
        self.expect(":")
        self.expect("int")
        lo, hi = DEFAULT_DOMAIN
        if self.accept("in"):
            self.expect("[")
            lo = self.expect_int()
            self.expect(",")
            hi = self.expect_int()
            self.expect("]")
        self.expect(";")
        if lo > hi:
            raise self.error(f"empty domain [{lo}, {hi}]", name_tok)
        self.syms[name_tok.text] = SymInput(name_tok.text, lo, hi)

    def proc(self, expected_rank: int):
        self.expect("proc")
        rank_tok = self.tok
        rank = self.expect_int()
        if rank != expected_rank:
            raise self.error(f"process ranks must be declared in order; expected {expected_rank}, got {rank}", rank_tok)
        self.vars = set()
        self.reqs = set()
        return self.block()

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    # -- statements ----------------------------------------------------------
    def stmt(self):
        tok = self.tok
        if self.accept("var"):
            name = self.expect_ident().text
            if name in self.syms:
                raise self.error(f"{name!r} shadows a symbolic input", tok)
            self.expect(":")
            self.expect("int")
            self.expect(";")
            self.vars.add(name)
            return VarDecl(name)
        if self.accept("if"):
            return self.if_rest()
        if self.accept("while"):
            self.expect("(")
            cond = self.cond_expr()
            self.expect(")")
            return While(cond, self.block())
        if tok.kind == "ident":
            self.i += 1
            if tok.text in self.syms:
                raise self.error(f"cannot assign to symbolic input {tok.text!r}", tok)
            if tok.text not in self.vars:
                raise self.error(f"undeclared variable {tok.text!r}", tok)
            self.expect(":=")
            expr = self.int_expr()
            self.expect(";")
            return Assign(tok.text, expr)
        return self.comm()

    def if_rest(self):
        self.expect("(")
        cond = self.cond_expr()
        self.expect(")")
        then = self.block()
        orelse: tuple = ()
        if self.accept("else"):
            if self.accept("if"):
                orelse = (self.if_rest(),)
            else:
                orelse = self.block()
        return If(cond, then, orelse)

    def comm(self):
        tok = self.tok
        word = tok.text if tok.kind == "kw" else None
        if word in ("send", "ssend"):
            self.i += 1
            self.expect("(")
            dst = self.peer(allow_any=False)
            self.expect(")")
            label = self.label()
            return (Send if word == "send" else Ssend)(dst, label)
        if word == "recv":
            self.i += 1
            self.expect("(")
            src = self.peer(allow_any=True)
            self.expect(")")
            return Recv(src, self.label())
        if word == "barrier":
            self.i += 1
            if self.accept("("):
                self.expect(")")
            return Barrier(self.label())
        if word in ("isend", "irecv"):
            self.i += 1
            self.expect("(")
            peer = self.peer(allow_any=(word == "irecv"))
            self.expect(",")
            req = self.expect_ident().text
            self.expect(")")
            self.reqs.add(req)
            label = self.label()
            return ISend(peer, req, label) if word == "isend" else IRecv(peer, req, label)
        if word == "wait":
            self.i += 1
            self.expect("(")
            req_tok = self.expect_ident()
            self.expect(")")
            if req_tok.text not in self.reqs:
                raise self.error(f"undeclared request handle {req_tok.text!r}", req_tok)
            return Wait(req_tok.text, self.label())
        raise self.error(f"expected a statement, found {tok.text or 'end of input'!r}")

    def peer(self, allow_any: bool):
        if self.at("*"):
            if not allow_any:
                raise self.error("wildcard '*' is only allowed as a receive source")
            self.i += 1
            return ANY
        tok = self.tok
        expr = self.int_expr()
        if isinstance(expr, IntLit):
            self.peer_literals.append((expr.value, tok))
        return expr

    def label(self) -> Optional[str]:
        if self.accept("@"):
            tok = self.expect_ident()
            if tok.text in self.labels:
                raise self.error(f"duplicate label {tok.text!r}", tok)
            self.labels[tok.text] = tok
            self.expect(";")
            return tok.text
        self.expect(";")
        return None

    # -- expressions ---------------------------------------------------------
    def int_expr(self):
        tok = self.tok
        e, ty = self.expr()
        if ty != "int":
            raise self.error("expected an integer expression", tok)
        return e

    def cond_expr(self):
        tok = self.tok
        e, ty = self.expr()
        if ty != "bool":
            raise self.error("expected a boolean condition", tok)
        return e

    def expr(self):
        return self.or_expr()

    def _bool_chain(self, sub, op):
        tok = self.tok
        left, lty = sub()
        while self.at(op):
            self.i += 1
            right, rty = sub()
            if lty != "bool" or rty != "bool":
                raise self.error(f"operands of {op!r} must be boolean", tok)
            left, lty = BinOp(op, left, right), "bool"
        return left, lty

    def or_expr(self):
        return self._bool_chain(self.and_expr, "||")

    def and_expr(self):
        return self._bool_chain(self.cmp_expr, "&&")

    def cmp_expr(self):
        tok = self.tok
        left, lty = self.add_expr()
        for op in CMP_OPS:
            if self.at(op):
                self.i += 1
                right, rty = self.add_expr()
                if op in ("==", "!="):
                    if lty != rty:
                        raise self.error(f"operands of {op!r} have different types", tok)
                elif lty != "int" or rty != "int":
                    raise self.error(f"operands of {op!r} must be integers", tok)
                return BinOp(op, left, right), "bool"
        return left, lty

    def add_expr(self):
        tok = self.tok
        left, lty = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            right, rty = self.mul_expr()
            if lty != "int" or rty != "int":
                raise self.error(f"operands of {op!r} must be integers", tok)
            left, lty = BinOp(op, left, right), "int"
        return left, lty

    def mul_expr(self):
        tok = self.tok
        left, lty = self.unary()
        while self.at("*"):
            self.i += 1
            right, rty = self.unary()
            if lty != "int" or rty != "int":
                raise self.error("operands of '*' must be integers", tok)
            left, lty = BinOp("*", left, right), "int"
        return left, lty

    def unary(self):
        tok = self.tok
        if self.accept("!"):
            e, ty = self.unary()
            if ty != "bool":
                raise self.error("operand of '!' must be boolean", tok)
            return UnOp("!", e), "bool"
        if self.accept("-"):
            if self.tok.kind == "int":
                value = int(self.tok.text)
                self.i += 1
                return IntLit(-value), "int"
            e, ty = self.unary()
            if ty != "int":
                raise self.error("operand of unary '-' must be an integer", tok)
            return UnOp("-", e), "int"
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return IntLit(int(tok.text)), "int"
        if self.accept("true"):
            return BoolLit(True), "bool"
        if self.accept("false"):
            return BoolLit(False), "bool"
        if tok.kind == "ident":
            self.i += 1
            if tok.text in self.syms:
                return SymVar(tok.text), "int"
            if tok.text not in self.vars:
                raise self.error(f"undeclared variable {tok.text!r}", tok)
            return Var(tok.text), "int"
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_property(text: str, program: Optional[Program] = None):
    """Parse `deadlock_free` or `before <a> <b>`; labels are checked against `program` if given."""
    words = [w for w in re.split(r"\s+", _strip_comments(text)) if w]
    if not words:
        raise ParseError("empty property")
    head = words[0]
    if head == "deadlock_free" and len(words) == 1:
        return DeadlockFree()
    if head == "before" and len(words) == 3:
        first, second = words[1], words[2]
        if program is not None:
            known = program.labels()
            for lab in (first, second):
                if lab not in known:
                    raise ParseError(f"unknown label {lab!r}")
        return Before(first, second)
    if head in ("deadlock_free", "before"):
        raise ParseError(f"wrong number of arguments for {head!r}")
    raise ParseError(f"unknown property keyword {head!r}")


def _strip_comments(text: str) -> str:
    return "\n".join(re.split(r"//|#", line, maxsplit=1)[0] for line in text.splitlines())


# -- printing ----------------------------------------------------------------


def format_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, (SymVar, Var)):
        return e.name
    if isinstance(e, UnOp):
        return f"{e.op}({format_expr(e.operand)})"
    if isinstance(e, BinOp):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def _top(e) -> str:
    text = format_expr(e)
    return text[1:-1] if isinstance(e, BinOp) else text


def _peer(p) -> str:
    return "*" if p is ANY else format_expr(p)


def _label(s) -> str:
    return f" @{s.label}" if s.label else ""


def _format_block(block, indent: int, out: list):
    pad = "  " * indent
    for s in block:
        if isinstance(s, VarDecl):
            out.append(f"{pad}var {s.name} : int;")
        elif isinstance(s, Assign):
            out.append(f"{pad}{s.name} := {_top(s.expr)};")
        elif isinstance(s, If):
            out.append(f"{pad}if ({_top(s.cond)}) {{")
            _format_block(s.then, indent + 1, out)
            if s.orelse:
                out.append(f"{pad}}} else {{")
                _format_block(s.orelse, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, While):
            out.append(f"{pad}while ({_top(s.cond)}) {{")
            _format_block(s.body, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(s, Send):
            out.append(f"{pad}send({format_expr(s.dst)}){_label(s)};")
        elif isinstance(s, Ssend):
            out.append(f"{pad}ssend({format_expr(s.dst)}){_label(s)};")
        elif isinstance(s, Recv):
            out.append(f"{pad}recv({_peer(s.src)}){_label(s)};")
        elif isinstance(s, Barrier):
            out.append(f"{pad}barrier{_label(s)};")
        elif isinstance(s, ISend):
            out.append(f"{pad}isend({format_expr(s.dst)}, {s.req}){_label(s)};")
        elif isinstance(s, IRecv):
            out.append(f"{pad}irecv({_peer(s.src)}, {s.req}){_label(s)};")
        elif isinstance(s, Wait):
            out.append(f"{pad}wait({s.req}){_label(s)};")
        else:
            raise TypeError(f"not a statement: {s!r}")


def format_program(prog: Program) -> str:
    out = []
    for s in prog.sym_inputs:
        out.append(f"sym {s.name} : int in [{s.low}, {s.high}];")
    for rank, body in enumerate(prog.processes):
        out.append(f"proc {rank} {{")
        _format_block(body, 1, out)
        out.append("}")
    return "\n".join(out) + "\n"


def format_property(prop) -> str:
    if isinstance(prop, DeadlockFree):
        return "deadlock_free"
    return f"before {prop.first} {prop.second}"


def count_comm(prog: Program) -> int:
    return sum(1 for body in prog.processes for s in walk(body) if is_comm(s))
