import random

import pytest

from msgverif.errors import LocalNondeterminism, NotEnabled
from msgverif.lang import ANY, parse_program
from msgverif.semantics import (
    ACTIVE, BLOCKED, TERMINATED, B, Context, GlobalState, Issue, Op, ProcState, SR, SRStar,
    W, apply_action, cond_cb, enabled, initial_state, is_deadlock, match_static, por_subset,
    ready,
)

from conftest import random_walk, run
from oracles import (
    independence_failures, input_free_programs, por_failures, reachable_sample,
)


def op(rank, index, kind, peer=None, req=None, target=None):
    return Op(rank, index, kind, peer, req, None, target)


def proc(rank, *unmatched, matched=()):
    return ProcState(rank, (), unmatched=tuple(unmatched), matched=tuple(matched),
                     seq=tuple(sorted(unmatched + tuple(matched), key=lambda o: o.index)),
                     flag=BLOCKED)


FIG5_ISSUES = ["issue P0.ISend(1,req1)#0", "issue P0.Barrier()#1",
               "issue P1.IRecv(*,req2)#0", "issue P1.Barrier()#1", "issue P2.Barrier()#0"]


def fig5_first_block(load):
    return run(load("fig5"), FIG5_ISSUES)


def fig5_second_block(load):
    s, ctx = fig5_first_block(load)
    s = apply_action(s, next(a for a in enabled(s, ctx) if isinstance(a, B)), ctx)
    for want in ("issue P0.Wait(req1)#2", "issue P1.Wait(req2)#2",
                 "issue P2.ISend(1,req3)#1", "issue P2.Wait(req3)#2"):
        s = apply_action(s, next(a for a in enabled(s, ctx) if str(a) == want), ctx)
    return s, ctx


# -- ready ------------------------------------------------------------------------


def test_wait_not_ready_before_irecv_matched(load):
    s, _ = fig5_second_block(load)
    p1 = s.procs[1]
    assert [o.kind for o in p1.unmatched] == ["irecv", "wait"]
    assert not ready(p1.unmatched[1], p1)


def test_ready_rules():
    snd = op(0, 0, "send", 1)
    assert ready(snd, proc(0, snd))
    star, det = op(1, 0, "recv", ANY), op(1, 1, "recv", 2)
    assert not ready(det, proc(1, star, det))
    assert ready(star, proc(1, star, det))
    # A later wildcard waits for an earlier wildcard only.
    d0, w1 = op(1, 0, "irecv", 0, "a"), op(1, 1, "recv", ANY)
    assert ready(w1, proc(1, d0, w1))
    s1, s2 = op(0, 0, "isend", 1, "a"), op(0, 1, "send", 1)
    assert not ready(s2, proc(0, s1, s2))
    assert ready(op(0, 1, "send", 2), proc(0, s1, op(0, 1, "send", 2)))
    with pytest.raises(NotEnabled):
        ready(snd, proc(0))


# -- matchStatic / condCB ----------------------------------------------------------


def test_match_static():
    assert match_static(op(0, 0, "send", 1), op(1, 0, "recv", 0))
    assert match_static(op(3, 0, "send", 1), op(1, 0, "irecv", ANY, "r"))
    assert not match_static(op(0, 0, "send", 2), op(1, 0, "recv", 0))
    assert not match_static(op(0, 0, "send", 1), op(1, 0, "recv", 2))


def test_cond_cb():
    det, star = op(1, 0, "irecv", 0, "rp"), op(1, 1, "irecv", ANY, "r")
    p1 = proc(1, det, star)
    s0, s2 = op(0, 0, "send", 1), op(2, 0, "send", 1)
    assert not cond_cb(s0, proc(0, s0), star, p1)
    assert cond_cb(s2, proc(2, s2), star, p1)
    assert cond_cb(s0, proc(0, s0), op(1, 0, "recv", ANY), proc(1, op(1, 0, "recv", ANY)))


# -- enabled -------------------------------------------------------------------------


def test_fig5_first_block(load):
    s, ctx = fig5_first_block(load)
    en = enabled(s, ctx)
    assert s.flags() == (BLOCKED, BLOCKED, BLOCKED)
    assert any(isinstance(a, B) for a in en)
    # The wildcard pair is also enabled here; the reduced set is the barrier alone.
    assert [type(a) for a in por_subset(s, ctx)] == [B]
    assert {type(a) for a in en} == {B, SRStar}


def test_fig5_second_block(load):
    s, ctx = fig5_second_block(load)
    en = enabled(s, ctx)
    assert [str(a) for a in en] == [
        "SR* P0.ISend(1,req1)#0 -> P1.IRecv(*,req2)#0",
        "SR* P2.ISend(1,req3)#1 -> P1.IRecv(*,req2)#0",
    ]
    assert por_subset(s, ctx) == en


def test_all_terminated_enables_nothing(load):
    prog = load("pair")
    ctx = Context.for_program(prog)
    s = initial_state(prog, ctx)
    while enabled(s, ctx):
        s = apply_action(s, enabled(s, ctx)[0], ctx)
    assert s.all_terminated() and enabled(s, ctx) == []
    assert not is_deadlock(s, ctx)


# -- applyAction ----------------------------------------------------------------------


def test_barrier_releases_everyone(load):
    s, ctx = fig5_first_block(load)
    b = next(a for a in enabled(s, ctx) if isinstance(a, B))
    t = apply_action(s, b, ctx, settle=False)
    assert t.flags() == (ACTIVE, ACTIVE, ACTIVE)
    assert all(any(o.kind == "barrier" for o in p.matched) for p in t.procs)
    assert s.flags() == (BLOCKED, BLOCKED, BLOCKED)  # input untouched


def test_buffered_send_does_not_block(load):
    prog = load("fig2")
    ctx = Context.for_program(prog, inputs={"x": 0})
    s = initial_state(prog, ctx)
    a = enabled(s, ctx)[0]
    assert str(a) == "issue P0.Send(1)#0"
    t = apply_action(s, a, ctx)
    assert t.procs[0].flag == TERMINATED


def test_zero_buffer_send_blocks(load):
    prog = load("pair")
    ctx = Context.for_program(prog, "zero")
    s = initial_state(prog, ctx)
    t = apply_action(s, enabled(s, ctx)[0], ctx)
    assert t.procs[0].flag == BLOCKED


def test_wait_on_isend_in_modes():
    prog = parse_program("proc 0 { isend(1, r); wait(r); } proc 1 { recv(0); }")
    s, _ = run(prog, ["issue P0.ISend(1,r)#0", "issue P0.Wait(r)#1"])
    assert s.procs[0].flag == TERMINATED
    s, ctx = run(prog, ["issue P0.ISend(1,r)#0", "issue P0.Wait(r)#1"], "zero")
    assert s.procs[0].flag == BLOCKED
    s, _ = run(prog, ["issue P0.ISend(1,r)#0", "issue P0.Wait(r)#1", "issue P1.Recv(0)#0",
                      "SR P0.ISend(1,r)#0 -> P1.Recv(0)#0", "W P0.Wait(r)#1"], "zero")
    assert s.all_terminated()


def test_not_enabled_raises(load):
    prog = load("pair")
    ctx = Context.for_program(prog)
    s = initial_state(prog, ctx)
    with pytest.raises(NotEnabled):
        apply_action(s, W(1, op(1, 0, "wait", target=0)), ctx)


def test_sr_commutes_with_independent_action():
    prog = parse_program("proc 0 { send(1); } proc 1 { recv(0); } proc 2 { barrier; }")
    s, ctx = run(prog, ["issue P0.Send(1)#0", "issue P1.Recv(0)#0"])
    sr = next(a for a in enabled(s, ctx) if isinstance(a, SR))
    iss = next(a for a in enabled(s, ctx) if isinstance(a, Issue))
    ab = apply_action(apply_action(s, sr, ctx), iss, ctx)
    ba = apply_action(apply_action(s, iss, ctx), sr, ctx)
    assert ab == ba


def test_symbolic_branch_needs_fork(load):
    prog = load("fig2")
    ctx = Context.for_program(prog)
    with pytest.raises(LocalNondeterminism):
        initial_state(prog, ctx)


# -- porSubset ------------------------------------------------------------------------


def test_por_lowest_issue():
    prog = parse_program("proc 0 { send(1); } proc 1 { recv(*); recv(*); } proc 2 { send(1); }")
    ctx = Context.for_program(prog)
    s = initial_state(prog, ctx)
    assert [a.rank for a in enabled(s, ctx) if isinstance(a, Issue)] == [0, 1, 2]
    assert por_subset(s, ctx) == [enabled(s, ctx)[0]]


def test_por_only_barrier(load):
    prog = parse_program("proc 0 { barrier; } proc 1 { barrier; }")
    s, ctx = run(prog, ["issue P0.Barrier()#0", "issue P1.Barrier()#0"])
    assert [type(a) for a in por_subset(s, ctx)] == [B]


def test_por_keeps_all_wildcard_pairs():
    prog = parse_program(
        "proc 0 { recv(*); recv(*); recv(*); } proc 1 { send(0); } proc 2 { send(0); } proc 3 { send(0); }")
    s, ctx = run(prog, ["issue P0.Recv(*)#0", "issue P1.Send(0)#0", "issue P2.Send(0)#0",
                        "issue P3.Send(0)#0"])
    red = por_subset(s, ctx)
    assert len(red) == 3 and all(isinstance(a, SRStar) for a in red)


def test_por_prefers_wait_on_rank_tie():
    prog = parse_program("proc 0 { irecv(1, r); send(1); wait(r); } proc 1 { recv(0); send(0); }")
    s, ctx = run(prog, ["issue P0.IRecv(1,r)#0", "issue P0.Send(1)#1", "issue P0.Wait(r)#2",
                        "issue P1.Recv(0)#0", "SR P0.Send(1)#1 -> P1.Recv(0)#0",
                        "issue P1.Send(0)#1", "SR P1.Send(0)#1 -> P0.IRecv(1,r)#0"])
    assert [str(a) for a in por_subset(s, ctx)] == ["W P0.Wait(r)#2"]


# -- properties ------------------------------------------------------------------------


def test_independence_sample():
    bad = []
    for s, ctx in reachable_sample(150, seed=11):
        bad += independence_failures(s, ctx)
    assert bad == []


def test_por_sample():
    bad = []
    for prog in input_free_programs(40, seed=5):
        for buf in ("infinite", "zero"):
            bad += por_failures(prog, buf)
    assert bad == []


def test_runs_are_acyclic_and_respect_non_overtaking():
    rng = random.Random(3)
    for prog in input_free_programs(60, seed=9):
        states, ctx = random_walk(prog, rng)
        assert len(set(states)) == len(states)
        for s in states:
            for a in enabled(s, ctx):
                if isinstance(a, (SR, SRStar)):
                    sender = s.procs[a.send.rank]
                    assert not any(o.is_send and o.peer == a.send.peer and o.index < a.send.index
                                   for o in sender.unmatched)
                if isinstance(a, SR):
                    recv = s.procs[a.recv.rank]
                    assert not any(o.is_recv and o.index < a.recv.index
                                   and (o.wildcard or o.peer == a.recv.peer)
                                   for o in recv.unmatched)


def test_states_are_values():
    s1 = GlobalState((ProcState(0, ()),))
    s2 = GlobalState((ProcState(0, ()),))
    assert s1 == s2 and hash(s1) == hash(s2)
