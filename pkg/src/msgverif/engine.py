"""Verification loop: blocking-driven symbolic execution with model-checking-driven pruning."""
from __future__ import annotations

import json
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .constraint import PathCondition, implies, solve
from .csp import check_before, check_deadlock, generate_csp
from .errors import BudgetExceeded, MsgVerifError
from .lang.ast import ANY, Before, DeadlockFree, Program, is_comm
from .lang.parser import format_property, parse_program, parse_property
from .semantics import (
    ACTIVE, INFINITE, SR, B, Context, GlobalState, Issue, Op, SRStar, W, apply_action,
    completed_refs, enabled, initial_state, is_deadlock, next_op, step_local,
)

PROPERTY_HOLDS = "propertyHolds"
VIOLATION_FOUND = "violationFound"
EXHAUSTED = "exhausted"
BUDGET_EXCEEDED = "budgetExceeded"


@dataclass
class EngineOptions:
    por: bool = True
    prune: bool = True
    buffer: str = INFINITE
    max_paths: int = 10_000
    timeout: float = 60.0
    checker_budget: int = 10**6
    keep_models: bool = False
    record_paths: bool = False


@dataclass
class Stats:
    paths_explored: int = 0
    states_pruned: int = 0
    model_checker_calls: int = 0
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class PathRecord:
    number: int
    pc: PathCondition
    trace: tuple
    outcome: str  # terminated | deadlock
    state: Optional[GlobalState] = None
    monitor_ok: Optional[bool] = None
    model_ok: Optional[bool] = None


# -- actions as JSON ---------------------------------------------------------------


def op_to_json(op: Op) -> dict:
    peer = "*" if op.peer is ANY else op.peer
    return {"rank": op.rank, "index": op.index, "kind": op.kind, "peer": peer,
            "req": op.req, "label": op.label, "target": op.target}


def op_from_json(d: dict) -> Op:
    peer = ANY if d["peer"] == "*" else d["peer"]
    return Op(d["rank"], d["index"], d["kind"], peer, d["req"], d["label"], d["target"])


def action_to_json(a) -> dict:
    if isinstance(a, Issue):
        return {"type": "issue", "rank": a.rank, "op": op_to_json(a.op)}
    if isinstance(a, B):
        return {"type": "B", "ops": [op_to_json(o) for o in a.ops]}
    if isinstance(a, W):
        return {"type": "W", "rank": a.rank, "op": op_to_json(a.op)}
    kind = "SR" if isinstance(a, SR) else "SR*"
    return {"type": kind, "send": op_to_json(a.send), "recv": op_to_json(a.recv)}


def action_from_json(d: dict):
    t = d["type"]
    if t == "issue":
        return Issue(d["rank"], op_from_json(d["op"]))
    if t == "B":
        return B(tuple(op_from_json(o) for o in d["ops"]))
    if t == "W":
        return W(d["rank"], op_from_json(d["op"]))
    cls = SR if t == "SR" else SRStar
    return cls(op_from_json(d["send"]), op_from_json(d["recv"]))


@dataclass
class ReplayCase:
    inputs: dict
    interleaving: list
    wildcard_matchings: list  # (recv ref, send ref)
    violation: str = "deadlock"  # deadlock | before
    prop: str = "deadlock_free"
    buffer: str = INFINITE
    program_text: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps({
            "inputs": self.inputs,
            "interleaving": [action_to_json(a) for a in self.interleaving],
            "wildcard_matchings": [[list(r), list(s)] for r, s in self.wildcard_matchings],
            "violation": self.violation,
            "property": self.prop,
            "buffer": self.buffer,
            "program": self.program_text,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReplayCase":
        d = json.loads(text)
        return cls(
            inputs=d["inputs"],
            interleaving=[action_from_json(a) for a in d["interleaving"]],
            wildcard_matchings=[(tuple(r), tuple(s)) for r, s in d["wildcard_matchings"]],
            violation=d["violation"], prop=d["property"], buffer=d["buffer"],
            program_text=d.get("program"),
        )


@dataclass
class VerificationResult:
    verdict: str
    counterexample: Optional[ReplayCase] = None
    stats: Stats = field(default_factory=Stats)
    violation: Optional[str] = None  # deadlock | before
    found_by: Optional[str] = None  # engine | model
    model_trace: Optional[list] = None
    models: list = field(default_factory=list, compare=False)
    paths: list = field(default_factory=list, compare=False)
    note: str = ""


# -- monitor ---------------------------------------------------------------------


def completion_labels(trace, buffer: str = INFINITE) -> list:
    """Labels completed by each action of `trace`, computed from the actions alone."""
    kinds, out = {}, []
    for a in trace:
        done = []
        if isinstance(a, Issue):
            op = a.op
            kinds[op.ref] = op.kind
            if buffer == INFINITE and (op.kind in ("send", "isend") or (
                    op.kind == "wait" and kinds.get((op.rank, op.target)) == "isend")):
                done.append(op)
        elif isinstance(a, B):
            done.extend(a.ops)
        elif isinstance(a, W):
            done.append(a.op)
        else:
            if not (buffer == INFINITE and a.send.kind in ("send", "isend")):
                done.append(a.send)
            done.append(a.recv)
        out.append({o.label for o in done if o.label is not None})
    return out


def check_monitor(trace, prop: Before, buffer: str = INFINITE) -> bool:
    """True iff `prop.first` never completes strictly before `prop.second` along `trace`."""
    for labels in completion_labels(trace, buffer):
        if prop.second in labels:
            return True
        if prop.first in labels:
            return False
    return True


# -- worklist --------------------------------------------------------------------


@dataclass
class WorkItem:
    state: GlobalState
    trace: tuple = ()


class Worklist:
    """DFS worklist: the most recently pushed state is selected first."""

    def __init__(self):
        self.pending: list = []

    def push(self, item: WorkItem):
        self.pending.append(item)

    def push_all(self, items):
        # Reversed so the first successor is explored first.
        for it in reversed(list(items)):
            self.pending.append(it)

    def pop(self) -> WorkItem:
        return self.pending.pop()

    def __len__(self):
        return len(self.pending)

    def __bool__(self):
        return bool(self.pending)


def prune(worklist: Worklist, pc_current: PathCondition, domains) -> int:
    """Drop every pending state whose path condition implies `pc_current`."""
    keep = [it for it in worklist.pending if not implies(it.state.pc, pc_current, domains)]
    removed = len(worklist.pending) - len(keep)
    worklist.pending = keep
    return removed


# -- scheduling and matching -----------------------------------------------------------


def match_n(en: list):
    """One deterministic matching: the barrier, else the W/SR of the lowest receiver."""
    for a in en:
        if isinstance(a, B):
            return a
    det = [a for a in en if isinstance(a, (W, SR))]
    if not det:
        return None

    def key(a):
        if isinstance(a, W):
            return (a.rank, a.op.index, -1)
        return (a.recv.rank, a.recv.index, a.send.rank)
    return min(det, key=key)


def match_w(en: list) -> list:
    stars = [a for a in en if isinstance(a, SRStar)]
    return sorted(stars, key=lambda a: (a.recv.rank, a.recv.index, a.send.rank, a.send.index))


def execute_step(item: WorkItem, rank: int, ctx: Context) -> list:
    """Advance process `rank` by one statement; returns one item, or several on a fork."""
    s = item.state
    p = s.procs[rank]
    if is_comm(p.cont[0]):
        a = Issue(rank, next_op(p, ctx))
        return [WorkItem(apply_action(s, a, ctx, settle=False, check=False), item.trace + (a,))]
    return [WorkItem(t, item.trace) for t in step_local(s, rank, ctx)]


def matching(item: WorkItem, ctx: Context):
    """Returns ('step', item), ('fork', items) or ('end', item)."""
    en = enabled(item.state, ctx)
    a = match_n(en)
    if a is not None:
        return "step", WorkItem(apply_action(item.state, a, ctx, settle=False, check=False), item.trace + (a,))
    stars = match_w(en)
    if stars:
        return "fork", [WorkItem(apply_action(item.state, a, ctx, settle=False, check=False), item.trace + (a,))
                        for a in stars]
    return "end", item


def _run_por(item: WorkItem, ctx: Context):
    while True:
        rank = next((p.rank for p in item.state.procs if p.flag == ACTIVE), None)
        if rank is not None:
            succ = execute_step(item, rank, ctx)
            if len(succ) > 1:
                return "fork", succ
            item = succ[0]
            continue
        what, nxt = matching(item, ctx)
        if what == "step":
            item = nxt
        else:
            return what, nxt


def _run_full(item: WorkItem, ctx: Context):
    """Exploration without reduction: every enabled action is a branch point."""
    while True:
        s = item.state
        rank = next((p.rank for p in s.procs
                     if p.flag == ACTIVE and p.cont and not is_comm(p.cont[0])), None)
        if rank is not None:
            succ = [WorkItem(t, item.trace) for t in step_local(s, rank, ctx)]
            if len(succ) > 1:
                return "fork", succ
            item = succ[0]
            continue
        en = enabled(s, ctx)
        if not en:
            return "end", item
        nxt = [WorkItem(apply_action(s, a, ctx, settle=False, check=False), item.trace + (a,)) for a in en]
        if len(nxt) > 1:
            return "fork", nxt
        item = nxt[0]


# -- the verification loop ------------------------------------------------------------


class Verifier:
    def __init__(self, prog: Program, prop, opts: Optional[EngineOptions] = None,
                 program_text: Optional[str] = None):
        self.prog = prog
        self.prop = prop
        self.opts = opts or EngineOptions()
        self.ctx = Context.for_program(prog, self.opts.buffer)
        self.program_text = program_text
        self.labels = prog.labels()

    def run(self) -> VerificationResult:
        opts, ctx = self.opts, self.ctx
        stats = Stats()
        result = VerificationResult(PROPERTY_HOLDS, stats=stats)
        wl = Worklist()
        wl.push(WorkItem(initial_state(self.prog, ctx, settle=False)))
        start = time.perf_counter()
        inconclusive = False
        run = _run_por if opts.por else _run_full
        try:
            while wl:
                if stats.paths_explored >= opts.max_paths:
                    result.verdict, result.note = BUDGET_EXCEEDED, f"path budget {opts.max_paths} reached"
                    break
                if time.perf_counter() - start > opts.timeout:
                    result.verdict, result.note = BUDGET_EXCEEDED, f"time budget {opts.timeout}s reached"
                    break
                what, got = run(wl.pop(), ctx)
                if what == "fork":
                    wl.push_all(got)
                    continue
                stats.paths_explored += 1
                done = self._path_end(got, wl, stats, result)
                if done is None:
                    inconclusive = True
                elif not done:
                    break
            else:
                if inconclusive and result.verdict == PROPERTY_HOLDS:
                    result.verdict = EXHAUSTED
                    result.note = "model checker budget exceeded on some paths; they were checked on the trace only"
        finally:
            stats.wall_time = time.perf_counter() - start
        return result

    def _record(self, result, item, outcome, **kw):
        if self.opts.record_paths:
            result.paths.append(PathRecord(len(result.paths) + 1, item.state.pc, item.trace,
                                           outcome, item.state, **kw))

    def _path_end(self, item: WorkItem, wl: Worklist, stats: Stats, result: VerificationResult):
        """Handle a finished path. Returns True to continue, False to stop, None if inconclusive."""
        s = item.state
        deadlock = is_deadlock(s, self.ctx)
        prop = self.prop
        if isinstance(prop, DeadlockFree):
            if deadlock:
                self._record(result, item, "deadlock")
                return self._violation(result, "deadlock", "engine", self._engine_case(item, "deadlock"))
            if not self.opts.prune:
                self._record(result, item, "terminated")
                return True
            model = self._model(s, result)
            stats.model_checker_calls += 1
            try:
                res = check_deadlock(model, self.opts.checker_budget)
            except BudgetExceeded:
                self._record(result, item, "terminated")
                return None
            self._record(result, item, "terminated", model_ok=res.holds)
            if res.holds:
                stats.states_pruned += prune(wl, s.pc, self.ctx.domains)
                return True
            result.model_trace = res.trace
            case = self._guided_deadlock(s, set(res.matchings(model)))
            return self._violation(result, "deadlock", "model", case)

        # Before property: deadlocked paths are not violations of an ordering property.
        if deadlock:
            self._record(result, item, "deadlock")
            return True
        ok = check_monitor(item.trace, prop, self.ctx.buffer)
        if not ok:
            self._record(result, item, "terminated", monitor_ok=False)
            return self._violation(result, "before", "engine", self._engine_case(item, "before"))
        if not self.opts.prune:
            self._record(result, item, "terminated", monitor_ok=True)
            return True
        model = self._model(s, result)
        stats.model_checker_calls += 1
        try:
            res = check_before(model, prop, self.opts.checker_budget, self.labels)
        except BudgetExceeded:
            self._record(result, item, "terminated", monitor_ok=True)
            return None
        self._record(result, item, "terminated", monitor_ok=True, model_ok=res.holds)
        if res.holds:
            stats.states_pruned += prune(wl, s.pc, self.ctx.domains)
            return True
        result.model_trace = res.trace
        return self._violation(result, "before", "model", self._guided_before(s))

    def _model(self, s, result):
        model = generate_csp(s, self.ctx)
        if self.opts.keep_models:
            result.models.append(model)
        return model

    def _violation(self, result, kind, by, case) -> bool:
        result.verdict = VIOLATION_FOUND
        result.violation = kind
        result.found_by = by
        result.counterexample = case
        return False

    # -- counterexamples --------------------------------------------------------------

    def _inputs(self, pc: PathCondition) -> dict:
        sol = solve(pc, self.ctx.domains) or {}
        return {s.name: sol.get(s.name, s.low) for s in self.prog.sym_inputs}

    def _case(self, inputs, trace, kind) -> ReplayCase:
        wild = [(a.recv.ref, a.send.ref) for a in trace if isinstance(a, SRStar)]
        return ReplayCase(inputs, list(trace), wild, kind, format_property(self.prop),
                          self.opts.buffer, self.program_text)

    def _engine_case(self, item: WorkItem, kind) -> ReplayCase:
        return self._case(self._inputs(item.state.pc), item.trace, kind)

    def _concrete(self, inputs):
        ctx = Context.for_program(self.prog, self.opts.buffer, inputs)
        return ctx, initial_state(self.prog, ctx)

    def _guided_deadlock(self, s: GlobalState, pairs: set) -> ReplayCase:
        inputs = self._inputs(s.pc)
        ctx, start = self._concrete(inputs)

        def allowed(a):
            return not isinstance(a, (SR, SRStar)) or (a.send.ref, a.recv.ref) in pairs

        for filt in (allowed, None):
            trace = _search(start, ctx, lambda t, en: is_deadlock(t, ctx, en), filt,
                            self.opts.checker_budget)
            if trace is not None:
                return self._case(inputs, trace, "deadlock")
        raise MsgVerifError("model counterexample could not be replayed on the program")

    def _guided_before(self, s: GlobalState) -> ReplayCase:
        inputs = self._inputs(s.pc)
        ctx, start = self._concrete(inputs)
        trace = _search_before(start, ctx, self.prop, self.opts.checker_budget)
        if trace is None:
            raise MsgVerifError("model counterexample could not be replayed on the program")
        return self._case(inputs, trace, "before")


def _search(start, ctx, goal, allowed, budget):
    """Breadth-first search of the concrete LTS for a state satisfying `goal`."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        en = enabled(s, ctx)
        if goal(s, en):
            return _unwind(parent, s)
        for a in en:
            if allowed is not None and not allowed(a):
                continue
            t = apply_action(s, a, ctx, check=False)
            if t not in parent:
                if len(parent) >= budget:
                    return None
                parent[t] = (s, a)
                queue.append(t)
    return None


def _search_before(start, ctx, prop: Before, budget):
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        ops = {o.ref: o for p in s.procs for o in p.seq}
        for a in enabled(s, ctx):
            done = completed_refs(a, s, ctx)
            if isinstance(a, Issue):
                ops[a.op.ref] = a.op
            labels = {ops[r].label for r in done}
            if prop.second in labels:
                continue
            t = apply_action(s, a, ctx, check=False)
            if prop.first in labels:
                return _unwind(parent, s) + [a]
            if t not in parent:
                if len(parent) >= budget:
                    return None
                parent[t] = (s, a)
                queue.append(t)
    return None


def _unwind(parent, s) -> list:
    out = []
    while parent[s] is not None:
        s, a = parent[s]
        out.append(a)
    return out[::-1]


def verify(prog: Program, prop, opts: Optional[EngineOptions] = None,
           program_text: Optional[str] = None) -> VerificationResult:
    return Verifier(prog, prop, opts, program_text).run()


# -- replay ---------------------------------------------------------------------------


@dataclass
class ReplayOutcome:
    reproduced: bool
    state: GlobalState
    detail: str


def replay(case: ReplayCase, prog: Optional[Program] = None) -> ReplayOutcome:
    """Re-execute a replay case and check that it exhibits its violation."""
    if prog is None:
        if case.program_text is None:
            raise MsgVerifError("replay case carries no program text")
        prog = parse_program(case.program_text)
    ctx = Context.for_program(prog, case.buffer, dict(case.inputs))
    s = initial_state(prog, ctx)
    for i, a in enumerate(case.interleaving):
        if a not in enabled(s, ctx):
            return ReplayOutcome(False, s, f"step {i}: {a} is not enabled")
        s = apply_action(s, a, ctx, check=False)
    if case.violation == "deadlock":
        ok = is_deadlock(s, ctx)
        return ReplayOutcome(ok, s, "deadlock reached" if ok else "final state is not a deadlock")
    prop = parse_property(case.prop, prog)
    ok = not check_monitor(case.interleaving, prop, case.buffer)
    return ReplayOutcome(ok, s, "ordering violated" if ok else "trace respects the ordering")
