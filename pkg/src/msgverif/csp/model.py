"""Path-to-model generation: SMO, refinement guards and the reverse scan over each seq."""
from __future__ import annotations

import math
from typing import Callable, Optional

from ..lang.ast import ANY, Barrier, IntLit, IRecv, ISend, Program, Recv, Send, Ssend, Wait
from ..semantics import (
    INFINITE, SR, SRStar, Context, GlobalState, Op, apply_action, enabled, initial_state,
)
from .terms import (
    SKIP, ChanRead, ChanWrite, Channel, CspModel, Event, EventInfo, ExtChoice, par, seq,
)


class _PathInfo:
    """Per-op facts derived from the seq logs of a terminated state."""

    def __init__(self, s: GlobalState, buffer: str):
        self.buffer = buffer
        self.seqs = [p.seq for p in s.procs]
        self.epoch = {}
        self.first_wait = {}  # (rank, target index) -> wait op
        for r, sq in enumerate(self.seqs):
            k = 0
            for op in sq:
                self.epoch[op.ref] = k
                if op.kind == "barrier":
                    k += 1
                elif op.kind == "wait":
                    self.first_wait.setdefault((r, op.target), op)
        self.sends = sorted((op for sq in self.seqs for op in sq if op.is_send), key=lambda o: o.ref)

    def kind_of(self, ref) -> str:
        return self.seqs[ref[0]][ref[1]].kind

    def capacity(self, op: Op) -> int:
        if op.kind == "ssend":
            return 0
        return 1 if self.buffer == INFINITE else 0

    def wait_of(self, op: Op) -> Optional[Op]:
        return self.first_wait.get(op.ref)

    def recv_bound(self, q: Op) -> float:
        """Barrier count by which receive `q` has certainly completed."""
        if q.kind == "recv":
            return self.epoch[q.ref]
        w = self.wait_of(q)
        return math.inf if w is None else self.epoch[w.ref]

    def send_bound(self, p: Op) -> float:
        if self.capacity(p) == 1:
            return math.inf
        if p.kind == "isend":
            w = self.wait_of(p)
            return math.inf if w is None else self.epoch[w.ref]
        return self.epoch[p.ref]

    def candidates(self, q: Op) -> list:
        return [p for p in self.sends if p.peer == q.rank and (q.wildcard or p.rank == q.peer)]


def smo(q: Op, s: GlobalState, buffer: str = INFINITE, optimize: bool = True, info=None) -> list:
    """Sends that may match receive `q`, pruned by barrier ordering when `optimize`."""
    info = info or _PathInfo(s, buffer)
    out = []
    for p in info.candidates(q):
        if optimize:
            if info.epoch[p.ref] > info.recv_bound(q):
                continue  # issued only after q has completed
            if info.send_bound(p) < info.epoch[q.ref]:
                continue  # completed before q was issued
        out.append(p)
    return out


def chan_name(op: Op) -> str:
    return f"c{op.rank}_{op.index}"


def _done_name(op: Op) -> str:
    return f"d{op.rank}_{op.index}"


def generate_csp(s: GlobalState, ctx: Context, smo_fn: Optional[Callable] = None,
                 optimize: bool = True) -> CspModel:
    """Build the CSP model of the path that ended in the terminated state `s`."""
    info = _PathInfo(s, ctx.buffer)
    if smo_fn is None:
        def smo_fn(q):
            return smo(q, s, ctx.buffer, optimize, info)

    channels, meta, op_labels = {}, {}, {}
    for p in info.sends:
        channels[chan_name(p)] = Channel(chan_name(p), info.capacity(p), p.ref)
        if info.capacity(p) == 1:
            meta[f"{chan_name(p)}!"] = EventInfo((p.ref,))
    for sq in info.seqs:
        for op in sq:
            if op.label is not None:
                op_labels.setdefault(op.label, []).append(op.ref)

    def guards(p: Op, q: Op):
        empty, full = set(), set()
        for p2 in info.sends:
            if p2.rank == p.rank and p2.peer == p.peer and p2.index < p.index:
                if info.capacity(p2) == 1:
                    empty.add(chan_name(p2))
                elif p2.kind == "isend":
                    full.add(_done_name(p2))
        for q2 in info.seqs[q.rank][:q.index]:
            if q2.kind == "irecv" and (q2.wildcard or q2.peer == p.rank):
                full.add(_done_name(q2))
        return frozenset(empty), frozenset(full)

    choices = {}
    needs_marker = set()
    for sq in info.seqs:
        for q in sq:
            if q.is_recv:
                opts = []
                for p in smo_fn(q):
                    ge, gf = guards(p, q)
                    needs_marker.update(gf)
                    opts.append((p, ge, gf))
                choices[q.ref] = opts

    def marks(op: Op) -> frozenset:
        # Completion flag for ops that later reads depend on; set atomically by the op's action.
        d = _done_name(op)
        if d not in needs_marker:
            return frozenset()
        channels.setdefault(d, Channel(d, 1))
        return frozenset({d})

    def choice(q: Op, mk=frozenset()):
        reads = []
        for p, ge, gf in choices[q.ref]:
            var = f"x{q.rank}_{q.index}"
            rd = ChanRead(chan_name(p), var, SKIP, ge, gf, mk)
            completes = (q.ref,) if info.capacity(p) == 1 else (p.ref, q.ref)
            meta[rd.label] = EventInfo(completes, (p.ref, q.ref))
            reads.append(rd)
        return reads[0] if len(reads) == 1 else ExtChoice(tuple(reads))

    barrier_events = set()
    procs = []
    for r, sq in enumerate(info.seqs):
        P = SKIP
        for op in reversed(sq):
            if op.kind in ("ssend", "send") or (op.kind == "isend" and info.capacity(op) == 1):
                P = ChanWrite(chan_name(op), f"m{op.rank}_{op.index}", P)
            elif op.kind == "isend":
                thread = ChanWrite(chan_name(op), f"m{op.rank}_{op.index}", SKIP, marks(op))
                P = _thread(thread, P, info.wait_of(op))
            elif op.kind == "barrier":
                e = f"B_{info.epoch[op.ref]}"
                barrier_events.add(e)
                meta.setdefault(e, EventInfo(()))
                meta[e] = EventInfo(meta[e].completes + (op.ref,))
                P = seq(Event(e), P)
            elif op.kind == "recv":
                P = seq(choice(op), P)
            elif op.kind == "irecv":
                P = _thread(choice(op, marks(op)), P, info.wait_of(op))
            elif op.kind == "wait":
                target = sq[op.target]
                synced = (info.wait_of(target) == op
                          and (target.kind == "irecv" or info.capacity(target) == 0))
                if synced:
                    e = f"w_{r}_{op.target}"
                    meta[e] = EventInfo((op.ref,))
                    P = seq(Event(e), P)
                elif op.label is not None:
                    e = f"e_{r}_{op.index}"
                    meta[e] = EventInfo((op.ref,))
                    P = seq(Event(e), P)
        procs.append(P)

    sync = frozenset(barrier_events)
    root = procs[0]
    for P in procs[1:]:
        root = par(root, P, sync)
    return CspModel(root, channels, meta, tuple(procs), sync,
                    {k: tuple(v) for k, v in op_labels.items()})


def _thread(body, rest, wait: Optional[Op]):
    if wait is None:
        return par(body, rest, detached=True)
    e = f"w_{wait.rank}_{wait.target}"
    return par(seq(body, Event(e)), rest, {e})


# -- ideal oracle -------------------------------------------------------------------


def path_program(s: GlobalState) -> Program:
    """Straight-line program that re-issues exactly the ops of each seq."""
    procs = []
    for p in s.procs:
        body = []
        for op in p.seq:
            peer = op.peer if op.peer is ANY or op.peer is None else IntLit(op.peer)
            if op.kind == "ssend":
                body.append(Ssend(peer))
            elif op.kind == "send":
                body.append(Send(peer))
            elif op.kind == "recv":
                body.append(Recv(peer))
            elif op.kind == "barrier":
                body.append(Barrier())
            elif op.kind == "isend":
                body.append(ISend(peer, f"r{op.index}"))
            elif op.kind == "irecv":
                body.append(IRecv(peer, f"r{op.index}"))
            else:
                body.append(Wait(f"r{op.target}"))
        procs.append(tuple(body))
    return Program(tuple(procs))


def ideal_smo(s: GlobalState, ctx: Context, limit: int = 200_000) -> dict:
    """Exact recv ref -> set of send refs over every interleaving and matching of the path."""
    prog = path_program(s)
    pctx = Context(prog.nprocs, {}, ctx.buffer)
    start = initial_state(prog, pctx)
    seen, stack, pairs = {start}, [start], {}
    while stack:
        t = stack.pop()
        for a in enabled(t, pctx):
            if isinstance(a, (SR, SRStar)):
                pairs.setdefault(a.recv.ref, set()).add(a.send.ref)
            u = apply_action(t, a, pctx, check=False)
            if u not in seen:
                if len(seen) >= limit:
                    raise RuntimeError(f"ideal exploration exceeds {limit} states")
                seen.add(u)
                stack.append(u)
    return pairs


def ideal_model(s: GlobalState, ctx: Context, limit: int = 200_000) -> CspModel:
    exact = ideal_smo(s, ctx, limit)
    ops = {op.ref: op for p in s.procs for op in p.seq}

    def smo_fn(q):
        return [ops[r] for r in sorted(exact.get(q.ref, ()))]

    return generate_csp(s, ctx, smo_fn=smo_fn)
