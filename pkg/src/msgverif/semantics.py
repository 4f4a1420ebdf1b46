"""Communicating-state-machine semantics of the core language.

A global state is a tuple of immutable process states.  Communication
operations are recorded as `Op` values identified by (rank, issue index);
actions move them from the unmatched buffer to the matched buffer.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .constraint import Concrete, PathCondition, as_expr, eval_expr, is_sat, negate
from .errors import LocalNondeterminism, NotEnabled, SymbolicTarget, UnboundVariable
from .lang.ast import (
    ANY, Assign, Barrier, If, IRecv, ISend, Program, Recv, Send, Ssend, VarDecl, Wait, While,
    is_comm,
)

ACTIVE, BLOCKED, TERMINATED = "active", "blocked", "terminated"
INFINITE, ZERO = "infinite", "zero"

KIND_OF = {
    Ssend: "ssend", Send: "send", Recv: "recv", Barrier: "barrier",
    ISend: "isend", IRecv: "irecv", Wait: "wait",
}
SEND_KINDS = frozenset({"send", "ssend", "isend"})
RECV_KINDS = frozenset({"recv", "irecv"})


@dataclass(frozen=True)
class Op:
    rank: int
    index: int
    kind: str
    peer: object = None  # destination of a send, source (int or ANY) of a receive
    req: Optional[str] = None
    label: Optional[str] = None
    target: Optional[int] = None  # issue index of the request a Wait completes

    @property
    def ref(self) -> tuple:
        return (self.rank, self.index)

    @property
    def is_send(self) -> bool:
        return self.kind in SEND_KINDS

    @property
    def is_recv(self) -> bool:
        return self.kind in RECV_KINDS

    @property
    def wildcard(self) -> bool:
        return self.peer is ANY

    def __str__(self):
        name = {"ssend": "Ssend", "send": "Send", "recv": "Recv", "barrier": "Barrier",
                "isend": "ISend", "irecv": "IRecv", "wait": "Wait"}[self.kind]
        args = []
        if self.kind != "barrier" and self.kind != "wait":
            args.append("*" if self.peer is ANY else str(self.peer))
        if self.req is not None:
            args.append(self.req)
        return f"P{self.rank}.{name}({','.join(args)})#{self.index}"


# -- actions -------------------------------------------------------------------


@dataclass(frozen=True)
class Issue:
    rank: int
    op: Op

    def __str__(self):
        return f"issue {self.op}"


@dataclass(frozen=True)
class B:
    ops: tuple  # the Barrier op of every process, by rank

    def __str__(self):
        return "B"


@dataclass(frozen=True)
class W:
    rank: int
    op: Op

    def __str__(self):
        return f"W {self.op}"


@dataclass(frozen=True)
class SR:
    send: Op
    recv: Op

    def __str__(self):
        return f"SR {self.send} -> {self.recv}"


@dataclass(frozen=True)
class SRStar:
    send: Op
    recv: Op

    def __str__(self):
        return f"SR* {self.send} -> {self.recv}"


def action_key(a) -> tuple:
    """Deterministic ordering: issues, barrier, waits, deterministic pairs, wildcard pairs."""
    if isinstance(a, Issue):
        return (0, a.rank)
    if isinstance(a, B):
        return (1,)
    if isinstance(a, W):
        return (2, a.rank, a.op.index)
    tag = 3 if isinstance(a, SR) else 4
    return (tag, a.send.rank, a.send.index, a.recv.rank, a.recv.index)


# -- states ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProcState:
    rank: int
    cont: tuple
    env: tuple = ()  # sorted (name, SymValue) pairs
    reqs: tuple = ()  # sorted (request name, issue index) pairs
    pc: tuple = ()  # path-condition conjuncts added by this process
    flag: str = ACTIVE
    unmatched: tuple = ()
    matched: tuple = ()  # kept sorted by issue index
    seq: tuple = ()
    received: tuple = ()  # sorted (recv index, send ref) pairs

    def lookup(self, name: str):
        for k, v in self.env:
            if k == name:
                return v
        raise UnboundVariable(f"unbound variable {name!r} in process {self.rank}")

    def env_dict(self) -> dict:
        return dict(self.env)

    def bind(self, name: str, value) -> "ProcState":
        env = dict(self.env)
        env[name] = value
        return replace(self, env=tuple(sorted(env.items())))

    def in_unmatched(self, index: int) -> bool:
        return any(o.index == index for o in self.unmatched)

    def in_matched(self, index: int) -> bool:
        return any(o.index == index for o in self.matched)


@dataclass(frozen=True)
class GlobalState:
    procs: tuple

    @property
    def pc(self) -> PathCondition:
        out = []
        for p in self.procs:
            out.extend(p.pc)
        return PathCondition(tuple(out))

    def flags(self) -> tuple:
        return tuple(p.flag for p in self.procs)

    def all_terminated(self) -> bool:
        return all(p.flag == TERMINATED for p in self.procs)

    def any_blocked(self) -> bool:
        return any(p.flag == BLOCKED for p in self.procs)

    def global_blocking(self) -> bool:
        return self.any_blocked() and all(p.flag != ACTIVE for p in self.procs)

    def matched_pairs(self) -> frozenset:
        """(send ref, recv ref) for every completed message."""
        return frozenset((snd, (p.rank, ri)) for p in self.procs for ri, snd in p.received)

    def with_proc(self, proc: ProcState) -> "GlobalState":
        procs = list(self.procs)
        procs[proc.rank] = proc
        return GlobalState(tuple(procs))


@dataclass
class Context:
    nprocs: int
    domains: Mapping = field(default_factory=dict)
    buffer: str = INFINITE
    inputs: Optional[Mapping] = None

    @classmethod
    def for_program(cls, prog: Program, buffer: str = INFINITE, inputs=None) -> "Context":
        if buffer not in (INFINITE, ZERO):
            raise ValueError(f"unknown buffer mode {buffer!r}")
        return cls(prog.nprocs, prog.domains(), buffer, inputs)


def _finish(p: ProcState) -> ProcState:
    if p.flag == ACTIVE and not p.cont:
        return replace(p, flag=TERMINATED)
    return p


def initial_state(prog: Program, ctx: Context, settle: bool = True) -> GlobalState:
    procs = tuple(_finish(ProcState(rank=r, cont=tuple(body))) for r, body in enumerate(prog.processes))
    s = GlobalState(procs)
    return settle_all(s, ctx) if settle else s


# -- local statements ----------------------------------------------------------------


def _branch(s: GlobalState, p: ProcState, cond, taken: tuple, other: tuple, rest: tuple, ctx) -> list:
    v = eval_expr(cond, p.env_dict(), ctx.inputs)
    if isinstance(v, Concrete):
        return [s.with_proc(replace(p, cont=(taken if v.value else other) + rest))]
    expr = as_expr(v)
    gpc = s.pc
    out = []
    for c, block in ((expr, taken), (negate(expr), other)):
        if is_sat(gpc.add(c), ctx.domains):
            out.append(s.with_proc(replace(p, cont=block + rest, pc=p.pc + (c,))))
    return out


def step_local(s: GlobalState, rank: int, ctx: Context) -> list:
    """Execute one local statement of `rank`; returns one state, or two on a symbolic fork."""
    p = s.procs[rank]
    stmt, rest = p.cont[0], p.cont[1:]
    if isinstance(stmt, VarDecl):
        init = Concrete(False) if stmt.type == "bool" else Concrete(0)
        out = [s.with_proc(replace(p.bind(stmt.name, init), cont=rest))]
    elif isinstance(stmt, Assign):
        v = eval_expr(stmt.expr, p.env_dict(), ctx.inputs)
        out = [s.with_proc(replace(p.bind(stmt.name, v), cont=rest))]
    elif isinstance(stmt, If):
        out = _branch(s, p, stmt.cond, stmt.then, stmt.orelse, rest, ctx)
    elif isinstance(stmt, While):
        out = _branch(s, p, stmt.cond, stmt.body + (stmt,), (), rest, ctx)
    else:
        raise TypeError(f"not a local statement: {stmt!r}")
    return [GlobalState(tuple(_finish(q) if q.rank == rank else q for q in t.procs)) for t in out]


def settle_rank(s: GlobalState, rank: int, ctx: Context) -> GlobalState:
    """Run `rank`'s local statements until it reaches a communication or ends."""
    while True:
        p = s.procs[rank]
        if p.flag != ACTIVE or not p.cont or is_comm(p.cont[0]):
            return s
        nxt = step_local(s, rank, ctx)
        if len(nxt) != 1:
            raise LocalNondeterminism(f"process {rank} branches on a symbolic condition")
        s = nxt[0]


def settle_all(s: GlobalState, ctx: Context) -> GlobalState:
    for r in range(len(s.procs)):
        s = settle_rank(s, r, ctx)
    return s


def settle_fork(s: GlobalState, ctx: Context) -> list:
    """Settle every process, forking on symbolic branches; returns all satisfiable outcomes."""
    todo, done = [s], []
    while todo:
        t = todo.pop()
        r = next((p.rank for p in t.procs
                  if p.flag == ACTIVE and p.cont and not is_comm(p.cont[0])), None)
        if r is None:
            done.append(t)
        else:
            todo.extend(reversed(step_local(t, r, ctx)))
    return done


# -- issuing ---------------------------------------------------------------------------


def _rank_value(expr, p: ProcState, ctx: Context) -> int:
    v = eval_expr(expr, p.env_dict(), ctx.inputs)
    if not isinstance(v, Concrete) or isinstance(v.value, bool):
        raise SymbolicTarget(f"process {p.rank}: peer expression is not a concrete rank")
    if not 0 <= v.value < ctx.nprocs:
        raise SymbolicTarget(f"process {p.rank}: peer rank {v.value} out of range")
    return v.value


def next_op(p: ProcState, ctx: Context) -> Op:
    stmt = p.cont[0]
    kind = KIND_OF[type(stmt)]
    idx = len(p.seq)
    if kind in SEND_KINDS:
        return Op(p.rank, idx, kind, _rank_value(stmt.dst, p, ctx), getattr(stmt, "req", None), stmt.label)
    if kind in RECV_KINDS:
        src = ANY if stmt.src is ANY else _rank_value(stmt.src, p, ctx)
        return Op(p.rank, idx, kind, src, getattr(stmt, "req", None), stmt.label)
    if kind == "wait":
        target = dict(p.reqs).get(stmt.req)
        if target is None:
            raise UnboundVariable(f"process {p.rank}: request {stmt.req!r} was never started")
        return Op(p.rank, idx, kind, None, stmt.req, stmt.label, target)
    return Op(p.rank, idx, kind, label=stmt.label)


def is_blocking(op: Op, p: ProcState, buffer: str) -> bool:
    if op.kind in ("ssend", "recv", "barrier"):
        return True
    if op.kind == "send":
        return buffer == ZERO
    if op.kind == "wait":
        return not (buffer == INFINITE and p.seq[op.target].kind == "isend")
    return False


def completes_at_issue(op: Op, p: ProcState, buffer: str) -> bool:
    """Buffered sends (and waits on them) need no partner to complete."""
    if buffer != INFINITE:
        return False
    if op.kind in ("send", "isend"):
        return True
    return op.kind == "wait" and p.seq[op.target].kind == "isend"


def _update_flag(flag: str, blocking: bool) -> str:
    if not blocking:
        return flag
    if flag == BLOCKED:
        return ACTIVE
    if flag == ACTIVE:
        return BLOCKED
    return flag


def _issue(p: ProcState, op: Op, ctx: Context) -> ProcState:
    seq = p.seq + (op,)
    p = replace(p, seq=seq, cont=p.cont[1:])
    if op.kind in ("isend", "irecv"):
        reqs = dict(p.reqs)
        reqs[op.req] = op.index
        p = replace(p, reqs=tuple(sorted(reqs.items())))
    if op.kind == "wait" and not is_blocking(op, p, ctx.buffer):
        # Wait on a buffered ISend: nothing to wait for.
        p = replace(p, matched=p.matched + (op,))
    else:
        p = replace(p, unmatched=p.unmatched + (op,), flag=_update_flag(p.flag, is_blocking(op, p, ctx.buffer)))
    return _finish(p)


def _pull(p: ProcState, op: Op, ctx: Context) -> ProcState:
    unmatched = tuple(o for o in p.unmatched if o.index != op.index)
    matched = tuple(sorted(p.matched + (op,), key=lambda o: o.index))
    flag = _update_flag(p.flag, is_blocking(op, p, ctx.buffer))
    return _finish(replace(p, unmatched=unmatched, matched=matched, flag=flag))


# -- readiness and matching ------------------------------------------------------


def ready(op: Op, p: ProcState) -> bool:
    if not p.in_unmatched(op.index):
        raise NotEnabled(f"{op} is not in the unmatched buffer")
    if op.kind == "wait":
        return p.in_matched(op.target)
    earlier = [o for o in p.unmatched if o.index < op.index]
    if op.is_send:
        return not any(o.is_send and o.peer == op.peer for o in earlier)
    if op.is_recv:
        if op.wildcard:
            return not any(o.is_recv and o.wildcard for o in earlier)
        return not any(o.is_recv and (o.wildcard or o.peer == op.peer) for o in earlier)
    return True


def match_static(send: Op, recv: Op) -> bool:
    return send.is_send and recv.is_recv and recv.rank == send.peer and (recv.wildcard or recv.peer == send.rank)


def _c1(alpha: Op, beta: Op, s_j: ProcState) -> bool:
    # Generalised from IRecv(*) to every wildcard receive; see the decisions ledger.
    if not (beta.is_recv and beta.wildcard and alpha.is_send):
        return True
    for b2 in s_j.unmatched:
        if (b2.kind == "irecv" and not b2.wildcard and b2.peer == alpha.rank
                and ready(b2, s_j) and match_static(alpha, b2)):
            return False
    return True


def cond_cb(send: Op, s_send: ProcState, recv: Op, s_recv: ProcState) -> bool:
    return _c1(send, recv, s_recv) and _c1(recv, send, s_send)


def _barrier_op(p: ProcState) -> Optional[Op]:
    return next((o for o in p.unmatched if o.kind == "barrier"), None)


def enabled(s: GlobalState, ctx: Context) -> list:
    out = []
    for p in s.procs:
        if p.flag == ACTIVE and p.cont and is_comm(p.cont[0]):
            out.append(Issue(p.rank, next_op(p, ctx)))
    if all(p.flag == BLOCKED and _barrier_op(p) is not None for p in s.procs):
        out.append(B(tuple(_barrier_op(p) for p in s.procs)))
    for p in s.procs:
        if p.flag == BLOCKED:
            for o in p.unmatched:
                if o.kind == "wait" and ready(o, p):
                    out.append(W(p.rank, o))
    for pi in s.procs:
        for a in pi.unmatched:
            if not a.is_send or not ready(a, pi):
                continue
            pj = s.procs[a.peer]
            for b in pj.unmatched:
                if match_static(a, b) and ready(b, pj) and cond_cb(a, pi, b, pj):
                    out.append(SRStar(a, b) if b.wildcard else SR(a, b))
    out.sort(key=action_key)
    return out


def por_subset(s: GlobalState, ctx: Context, en: Optional[list] = None) -> list:
    """The reduced set E(S): lowest-rank issue, else B, else lowest-rank W/SR, else everything."""
    en = enabled(s, ctx) if en is None else en
    issues = [a for a in en if isinstance(a, Issue)]
    if issues:
        return [min(issues, key=lambda a: a.rank)]
    bs = [a for a in en if isinstance(a, B)]
    if bs:
        return bs
    det = [a for a in en if isinstance(a, (W, SR))]
    if det:
        def rank_a(a):
            return (a.rank, 0) if isinstance(a, W) else (a.send.rank, 1)
        best = min(rank_a(a) for a in det)
        return [next(a for a in det if rank_a(a) == best)]
    return en


def apply_action(s: GlobalState, a, ctx: Context, settle: bool = True, check: bool = True) -> GlobalState:
    """Fire `a` and return the successor; the input state is untouched."""
    if check and a not in enabled(s, ctx):
        raise NotEnabled(f"action {a} is not enabled")
    procs = list(s.procs)
    if isinstance(a, Issue):
        procs[a.rank] = _issue(procs[a.rank], a.op, ctx)
        touched = (a.rank,)
    elif isinstance(a, B):
        for op in a.ops:
            procs[op.rank] = _pull(procs[op.rank], op, ctx)
        touched = tuple(range(len(procs)))
    elif isinstance(a, W):
        procs[a.rank] = _pull(procs[a.rank], a.op, ctx)
        touched = (a.rank,)
    elif isinstance(a, (SR, SRStar)):
        snd, rcv = a.send, a.recv
        procs[snd.rank] = _pull(procs[snd.rank], snd, ctx)
        pr = _pull(procs[rcv.rank], rcv, ctx)
        procs[rcv.rank] = replace(pr, received=tuple(sorted(pr.received + ((rcv.index, snd.ref),))))
        touched = (snd.rank, rcv.rank)
    else:
        raise TypeError(f"not an action: {a!r}")
    out = GlobalState(tuple(procs))
    if settle:
        for r in sorted(set(touched)):
            out = settle_rank(out, r, ctx)
    return out


def is_deadlock(s: GlobalState, ctx: Context, en: Optional[list] = None) -> bool:
    en = enabled(s, ctx) if en is None else en
    return not en and s.any_blocked()


def completed_refs(a, s: GlobalState, ctx: Context) -> tuple:
    """Operation refs that complete when `a` fires in `s`."""
    if isinstance(a, Issue):
        return (a.op.ref,) if completes_at_issue(a.op, s.procs[a.rank], ctx.buffer) else ()
    if isinstance(a, B):
        return tuple(o.ref for o in a.ops)
    if isinstance(a, W):
        return (a.op.ref,)
    snd, rcv = a.send, a.recv
    if completes_at_issue(snd, s.procs[snd.rank], ctx.buffer):
        return (rcv.ref,)
    return (snd.ref, rcv.ref)


def explore(s: GlobalState, ctx: Context, selector=None, limit: int = 200_000) -> set:
    """All terminal states reachable from `s` when firing the actions chosen by `selector`."""
    selector = selector or enabled
    seen, terminals, stack = {s}, set(), [s]
    while stack:
        t = stack.pop()
        acts = selector(t, ctx)
        if not acts:
            terminals.add(t)
            continue
        for a in acts:
            u = apply_action(t, a, ctx, check=False)
            if u not in seen:
                if len(seen) >= limit:
                    raise RuntimeError(f"state space exceeds {limit} states")
                seen.add(u)
                stack.append(u)
    return terminals


def refs_of_label(s: GlobalState, label: str) -> list:
    return [o.ref for p in s.procs for o in p.seq if o.label == label]


def iter_ops(s: GlobalState) -> Iterable[Op]:
    for p in s.procs:
        yield from p.seq
