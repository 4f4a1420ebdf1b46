"""Textual forms of models: a readable CSP-style rendering and a round-trippable dump."""
from __future__ import annotations

import re

from ..errors import ParseError
from .terms import (
    SKIP, ChanRead, ChanWrite, Channel, CspModel, Event, EventInfo, ExtChoice, Parallel,
    SeqComp, Skip, par,
)

DUMP_HEADER = "# msgverif-csp 1"


def pretty(t) -> str:
    """Conventional CSP notation."""
    if isinstance(t, Skip):
        return "SKIP"
    if isinstance(t, Event):
        return t.name
    if isinstance(t, SeqComp):
        return f"{_wrap(t.first)} ; {pretty(t.second)}"
    if isinstance(t, ExtChoice):
        if not t.options:
            return "STOP"
        return "(" + " [] ".join(pretty(o) for o in t.options) + ")"
    if isinstance(t, Parallel):
        op = "|||>" if t.detached else "[|{" + ",".join(sorted(t.sync)) + "}|]"
        return f"({pretty(t.left)} {op} {pretty(t.right)})"
    if isinstance(t, ChanRead):
        guard = ""
        if t.guard_empty or t.guard_full:
            parts = [f"empty({c})" for c in sorted(t.guard_empty)] + [f"full({c})" for c in sorted(t.guard_full)]
            guard = "[" + " & ".join(parts) + "] "
        return f"{guard}{t.chan}?{t.var}{_marks(t)} -> {_wrap(t.cont)}"
    if isinstance(t, ChanWrite):
        return f"{t.chan}!{t.var}{_marks(t)} -> {_wrap(t.cont)}"
    raise TypeError(f"not a term: {t!r}")


def _marks(t) -> str:
    return "{+" + ",".join(sorted(t.marks)) + "}" if t.marks else ""


def _wrap(t) -> str:
    s = pretty(t)
    return f"({s})" if isinstance(t, SeqComp) else s


def pretty_model(model: CspModel) -> str:
    lines = [f"P{r} = {pretty(p)}" for r, p in enumerate(model.processes)]
    sync = ",".join(sorted(model.barrier_events))
    names = " ".join(f"P{r}" for r in range(len(model.processes)))
    lines.append(f"SYSTEM = [|{{{sync}}}|] {names}")
    return "\n".join(lines)


# -- dump ------------------------------------------------------------------------


def dump_term(t) -> str:
    if isinstance(t, Skip):
        return "SKIP"
    if isinstance(t, Event):
        return f"ev({t.name})"
    if isinstance(t, SeqComp):
        return f"seq({dump_term(t.first)}, {dump_term(t.second)})"
    if isinstance(t, ExtChoice):
        return "choice(" + ", ".join(dump_term(o) for o in t.options) + ")"
    if isinstance(t, Parallel):
        kw = "dpar" if t.detached else "par"
        return f"{kw}{_set(t.sync)}({dump_term(t.left)}, {dump_term(t.right)})"
    if isinstance(t, ChanRead):
        return (f"read({t.chan}, {t.var}, {_set(t.guard_empty)}, {_set(t.guard_full)}, "
                f"{_set(t.marks)}, {dump_term(t.cont)})")
    if isinstance(t, ChanWrite):
        return f"write({t.chan}, {t.var}, {_set(t.marks)}, {dump_term(t.cont)})"
    raise TypeError(f"not a term: {t!r}")


def _set(names) -> str:
    return "{" + ",".join(sorted(names)) + "}"


def _ref(r) -> str:
    return f"{r[0]}:{r[1]}"


def dump_model(model: CspModel) -> str:
    out = [DUMP_HEADER]
    for c in sorted(model.channels.values(), key=lambda c: c.id):
        origin = _ref(c.origin) if c.origin is not None else "-"
        out.append(f"channel {c.id} {c.capacity} {origin}")
    for label in sorted(model.event_meta):
        info = model.event_meta[label]
        line = f"event {label} completes"
        for r in info.completes:
            line += f" {_ref(r)}"
        if info.pair is not None:
            line += f" pair {_ref(info.pair[0])}>{_ref(info.pair[1])}"
        out.append(line)
    for name in sorted(model.op_labels):
        out.append(f"label {name} " + " ".join(_ref(r) for r in model.op_labels[name]))
    out.append(f"sync {_set(model.barrier_events)}")
    for r, p in enumerate(model.processes):
        out.append(f"process {r} := {dump_term(p)}")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([(){},]))")


class _TermParser:
    def __init__(self, text: str, line: int):
        self.toks = []
        self.line = line
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ParseError(f"bad character {text[pos]!r} in term", line, pos + 1)
            self.toks.append(m.group(1) or m.group(2))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        tok = self.peek()
        if tok is None or (want is not None and tok != want):
            raise ParseError(f"expected {want or 'token'}, found {tok!r}", self.line)
        self.i += 1
        return tok

    def names(self):
        self.take("{")
        out = []
        while self.peek() != "}":
            out.append(self.take())
            if self.peek() == ",":
                self.take(",")
        self.take("}")
        return frozenset(out)

    def term(self):
        kw = self.take()
        if kw == "SKIP":
            return SKIP
        if kw == "ev":
            self.take("(")
            name = self.take()
            self.take(")")
            return Event(name)
        if kw == "seq":
            self.take("(")
            a = self.term()
            self.take(",")
            b = self.term()
            self.take(")")
            return SeqComp(a, b)
        if kw == "choice":
            self.take("(")
            opts = []
            while self.peek() != ")":
                opts.append(self.term())
                if self.peek() == ",":
                    self.take(",")
            self.take(")")
            return ExtChoice(tuple(opts))
        if kw in ("par", "dpar"):
            sync = self.names()
            self.take("(")
            a = self.term()
            self.take(",")
            b = self.term()
            self.take(")")
            return Parallel(a, b, sync, kw == "dpar")
        if kw == "read":
            self.take("(")
            chan = self.take()
            self.take(",")
            var = self.take()
            self.take(",")
            ge = self.names()
            self.take(",")
            gf = self.names()
            self.take(",")
            mk = self.names()
            self.take(",")
            cont = self.term()
            self.take(")")
            return ChanRead(chan, var, cont, ge, gf, mk)
        if kw == "write":
            self.take("(")
            chan = self.take()
            self.take(",")
            var = self.take()
            self.take(",")
            mk = self.names()
            self.take(",")
            cont = self.term()
            self.take(")")
            return ChanWrite(chan, var, cont, mk)
        raise ParseError(f"unknown term constructor {kw!r}", self.line)


def parse_term(text: str, line: int = 1):
    p = _TermParser(text, line)
    t = p.term()
    if p.peek() is not None:
        raise ParseError(f"trailing input {p.peek()!r}", line)
    return t


def _parse_ref(s: str, line: int) -> tuple:
    try:
        a, b = s.split(":")
        return (int(a), int(b))
    except ValueError:
        raise ParseError(f"bad op reference {s!r}", line) from None


def parse_dump(text: str) -> CspModel:
    lines = text.splitlines()
    if not lines or lines[0].strip() != DUMP_HEADER:
        raise ParseError("missing model dump header", 1)
    channels, meta, labels, procs = {}, {}, {}, {}
    sync = frozenset()
    for n, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "channel":
            cid, cap, origin = rest.split()
            channels[cid] = Channel(cid, int(cap), None if origin == "-" else _parse_ref(origin, n))
        elif head == "event":
            parts = rest.split()
            label, parts = parts[0], parts[1:]
            if not parts or parts[0] != "completes":
                raise ParseError("event line needs 'completes'", n)
            parts = parts[1:]
            pair = None
            if "pair" in parts:
                k = parts.index("pair")
                s, r = parts[k + 1].split(">")
                pair = (_parse_ref(s, n), _parse_ref(r, n))
                parts = parts[:k]
            meta[label] = EventInfo(tuple(_parse_ref(p, n) for p in parts), pair)
        elif head == "label":
            parts = rest.split()
            labels[parts[0]] = tuple(_parse_ref(p, n) for p in parts[1:])
        elif head == "sync":
            sync = _TermParser(rest, n).names()
        elif head == "process":
            rank, _, term = rest.partition(":=")
            procs[int(rank)] = parse_term(term, n)
        else:
            raise ParseError(f"unknown dump line {head!r}", n)
    processes = tuple(procs[r] for r in sorted(procs))
    if not processes:
        raise ParseError("model dump has no processes", len(lines))
    root = processes[0]
    for p in processes[1:]:
        root = par(root, p, sync)
    return CspModel(root, channels, meta, processes, sync, labels)
