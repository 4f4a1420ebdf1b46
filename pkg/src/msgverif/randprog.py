"""Seedable random program generator for the property suites."""
from __future__ import annotations

import os
import random
from typing import Iterator, Optional

from .lang.ast import (
    ANY, Barrier, BinOp, If, IntLit, IRecv, ISend, Program, Recv, Send, Ssend, SymInput, SymVar,
    Wait, is_comm, walk,
)

SEED_ENV = "MSGVERIF_SEED"


def seed_from_env(default: int = 0) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def _place(rng, body: list, stmt, after: int = -1) -> int:
    pos = rng.randint(after + 1, len(body))
    body.insert(pos, stmt)
    return pos


def random_program(rng: random.Random, max_procs: int = 3, max_ops: int = 4,
                   nonblocking: bool = True, barriers: bool = True, wildcards: bool = True,
                   symbolic: bool = False, unmatched: float = 0.15) -> Program:
    """A random program with at most `max_procs` processes and `max_ops` comm ops each.

    Messages are generated as sender/receiver pairs so most programs have
    terminating runs; with probability `unmatched` a receive is dropped or
    duplicated to provoke deadlocks.
    """
    for _ in range(1000):
        n = rng.randint(2, max_procs)
        bodies = [[] for _ in range(n)]
        reqs = [0] * n

        def fresh(r):
            reqs[r] += 1
            return f"r{reqs[r]}"

        for _m in range(rng.randint(1, n * max_ops // 2)):
            src, dst = rng.sample(range(n), 2)
            skind = rng.choice(["send", "ssend", "isend"] if nonblocking else ["send", "ssend"])
            if skind == "isend":
                req = fresh(src)
                pos = _place(rng, bodies[src], ISend(IntLit(dst), req))
                if rng.random() < 0.8:
                    _place(rng, bodies[src], Wait(req), pos)
            else:
                _place(rng, bodies[src], (Send if skind == "send" else Ssend)(IntLit(dst)))
            copies = 1
            if rng.random() < unmatched:
                copies = rng.choice([0, 2])
            for _c in range(copies):
                source = ANY if wildcards and rng.random() < 0.4 else IntLit(src)
                if nonblocking and rng.random() < 0.4:
                    req = fresh(dst)
                    pos = _place(rng, bodies[dst], IRecv(source, req))
                    if rng.random() < 0.85:
                        _place(rng, bodies[dst], Wait(req), pos)
                else:
                    _place(rng, bodies[dst], Recv(source))
        if barriers and rng.random() < 0.35:
            for b in bodies:
                if rng.random() < 0.95:
                    _place(rng, b, Barrier())
        if any(len(b) > max_ops for b in bodies) or not any(bodies):
            continue
        sym = ()
        if symbolic and rng.random() < 0.7:
            sym = (SymInput("x", 0, 3),)
            r = rng.randrange(n)
            body = bodies[r]
            if body:
                k = rng.randint(0, len(body) - 1)
                cond = BinOp(rng.choice([">", "==", "!="]), SymVar("x"), IntLit(rng.randint(0, 3)))
                then = tuple(body[k:k + 1])
                # Keep request handles in scope: only wrap statements that are not waits or starts.
                if not isinstance(body[k], (ISend, IRecv, Wait)):
                    orelse = tuple(body[k:k + 1]) if rng.random() < 0.5 else ()
                    body[k:k + 1] = [If(cond, then, orelse)]
        return Program(tuple(tuple(b) for b in bodies), sym)
    raise RuntimeError("could not generate a program within the size limits")


def random_programs(count: int, seed: Optional[int] = None, **kw) -> Iterator[Program]:
    rng = random.Random(seed_from_env() if seed is None else seed)
    for _ in range(count):
        yield random_program(rng, **kw)


def comm_count(prog: Program) -> list:
    return [sum(1 for s in walk(body) if is_comm(s)) for body in prog.processes]
