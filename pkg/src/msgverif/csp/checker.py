"""Explicit-state exploration of CSP models.

A configuration is a term together with the set of channels currently
holding a message.  Every transition is visible, so every configuration
is stable; failures are read off directly from the offered events.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..errors import BudgetExceeded, PropertyError
from ..lang.ast import Before
from .terms import (
    TICK, ChanRead, ChanWrite, CspModel, Event, ExtChoice, Parallel, SeqComp, Skip, finished,
    par, seq,
)

DEFAULT_BUDGET = 10**6
_DONE = "<done>"  # term reached after the termination tick


class Semantics:
    """Transition relation of one model, with per-term offer caching."""

    def __init__(self, model: CspModel):
        self.model = model
        self.cap = {c.id: c.capacity for c in model.channels.values()}
        self._offers = {}

    def initial(self):
        return (self.model.root, frozenset())

    def offers(self, t) -> tuple:
        """Local offers of `t`: (kind, key, successor, channel action or None).

        kinds: ev (event), w/r (one-place write/read), w0/r0 (rendezvous halves),
        rv (completed rendezvous).
        """
        got = self._offers.get(t)
        if got is None:
            got = tuple(self._compute(t))
            self._offers[t] = got
        return got

    def _compute(self, t):
        if isinstance(t, Skip) or t == _DONE:
            return
        if isinstance(t, Event):
            yield ("ev", t.name, Skip(), None)
        elif isinstance(t, SeqComp):
            for k, key, succ, rd in self.offers(t.first):
                yield (k, key, seq(succ, t.second), rd)
        elif isinstance(t, ExtChoice):
            for o in t.options:
                yield from self.offers(o)
        elif isinstance(t, ChanRead):
            yield ("r" if self.cap[t.chan] else "r0", t.chan, t.cont, t)
        elif isinstance(t, ChanWrite):
            yield ("w" if self.cap[t.chan] else "w0", t.chan, t.cont, t)
        elif isinstance(t, Parallel):
            left, right = self.offers(t.left), self.offers(t.right)
            for k, key, succ, rd in left:
                if not (k == "ev" and key in t.sync):
                    yield (k, key, par(succ, t.right, t.sync, t.detached), rd)
            for k, key, succ, rd in right:
                if not (k == "ev" and key in t.sync):
                    yield (k, key, par(t.left, succ, t.sync, t.detached), rd)
            for k1, key1, s1, rd1 in left:
                for k2, key2, s2, rd2 in right:
                    if k1 == k2 == "ev" and key1 == key2 and key1 in t.sync:
                        yield ("ev", key1, par(s1, s2, t.sync, t.detached), None)
                    elif key1 == key2 and {k1, k2} == {"w0", "r0"}:
                        pair = (rd1, rd2) if k1 == "r0" else (rd2, rd1)
                        yield ("rv", key1, par(s1, s2, t.sync, t.detached), pair)
        else:
            raise TypeError(f"not a term: {t!r}")

    def transitions(self, config) -> list:
        term, full = config
        out = []
        for k, key, succ, act in self.offers(term):
            if k == "ev":
                out.append((key, (succ, full)))
            elif k == "w":
                if key not in full:
                    out.append((act.label, (succ, full | {key} | act.marks)))
            elif k == "r":
                if key in full and _guards_ok(act, full):
                    out.append((act.label, (succ, (full - {key}) | act.marks)))
            elif k == "rv":
                rd, wr = act
                if _guards_ok(rd, full):
                    out.append((rd.label, (succ, full | rd.marks | wr.marks)))
        if not out and term != _DONE and finished(term):
            out.append((TICK, (_DONE, full)))
        return out

    def is_deadlock(self, config, trans=None) -> bool:
        trans = self.transitions(config) if trans is None else trans
        return not trans and config[0] != _DONE


def _guards_ok(rd: ChanRead, full: frozenset) -> bool:
    return not (rd.guard_empty & full) and rd.guard_full <= full


@dataclass
class CheckResult:
    holds: bool
    trace: Optional[list] = None  # event labels of a counterexample
    states: int = 0

    def matchings(self, model: CspModel) -> list:
        """(send ref, recv ref) for every message transfer in the counterexample."""
        out = []
        for label in self.trace or ():
            info = model.event_meta.get(label)
            if info is not None and info.pair is not None:
                out.append(info.pair)
        return out


def _trace_to(parent, node):
    out = []
    while parent[node] is not None:
        node, label = parent[node]
        out.append(label)
    return out[::-1]


def check_deadlock(model: CspModel, budget: int = DEFAULT_BUDGET) -> CheckResult:
    sem = Semantics(model)
    start = sem.initial()
    parent = {start: None}
    stack = [start]
    while stack:
        c = stack.pop()
        trans = sem.transitions(c)
        if sem.is_deadlock(c, trans):
            return CheckResult(False, _trace_to(parent, c), len(parent))
        for label, d in reversed(trans):
            if d not in parent:
                if len(parent) >= budget:
                    raise BudgetExceeded(f"model exploration exceeds {budget} configurations")
                parent[d] = (c, label)
                stack.append(d)
    return CheckResult(True, None, len(parent))


def _event_sets(model: CspModel, prop: Before, program_labels=None):
    for name in (prop.first, prop.second):
        known = name in model.op_labels or (program_labels is not None and name in program_labels)
        if not known and program_labels is not None:
            raise PropertyError(f"unknown event label {name!r}")
    first = set(model.op_labels.get(prop.first, ()))
    second = set(model.op_labels.get(prop.second, ()))
    a_events = {lb for lb, info in model.event_meta.items() if first & set(info.completes)}
    b_events = {lb for lb, info in model.event_meta.items() if second & set(info.completes)}
    return a_events, b_events


def check_before(model: CspModel, prop: Before, budget: int = DEFAULT_BUDGET,
                 program_labels=None) -> CheckResult:
    """Search for a run where `prop.first` completes strictly before `prop.second`."""
    a_events, b_events = _event_sets(model, prop, program_labels)
    sem = Semantics(model)
    start = sem.initial()
    parent = {start: None}
    stack = [start]
    while stack:
        c = stack.pop()
        for label, d in reversed(sem.transitions(c)):
            if label in b_events:
                continue  # second has happened: the rest of this run is safe
            if label in a_events:
                return CheckResult(False, _trace_to(parent, c) + [label], len(parent))
            if d not in parent:
                if len(parent) >= budget:
                    raise BudgetExceeded(f"model exploration exceeds {budget} configurations")
                parent[d] = (c, label)
                stack.append(d)
    return CheckResult(True, None, len(parent))


def reachable(model: CspModel, budget: int = DEFAULT_BUDGET) -> dict:
    """Every reachable configuration mapped to its outgoing transitions (breadth first)."""
    sem = Semantics(model)
    start = sem.initial()
    graph, queue = {}, deque([start])
    graph[start] = None
    while queue:
        c = queue.popleft()
        trans = sem.transitions(c)
        graph[c] = trans
        for _, d in trans:
            if d not in graph:
                if len(graph) >= budget:
                    raise BudgetExceeded(f"model exploration exceeds {budget} configurations")
                graph[d] = None
                queue.append(d)
    return graph


def failures(model: CspModel, bound: int = 10**5) -> set:
    """Stable failures as (trace, maximal refusal) pairs.

    The full failure set is the downward closure of the refusals returned here.
    """
    sem = Semantics(model)
    alphabet = model.alphabet
    out = set()
    queue = deque([((), sem.initial())])
    count = 0
    while queue:
        trace, c = queue.popleft()
        count += 1
        if count > bound:
            raise BudgetExceeded(f"failure enumeration exceeds {bound} nodes")
        trans = sem.transitions(c)
        out.add((trace, alphabet - {lb for lb, _ in trans}))
        for label, d in trans:
            queue.append((trace + (label,), d))
    return out


def _deterministic(trans: list) -> dict:
    out = {}
    for label, d in trans:
        if label in out and out[label] != d:
            raise AssertionError(f"model is not deterministic on {label!r}")
        out[label] = d
    return out


def failures_equivalent(m1: CspModel, m2: CspModel, bound: int = 10**5):
    """Compare stable failures of two deterministic models; returns (equal, witness trace)."""
    s1, s2 = Semantics(m1), Semantics(m2)
    start = (s1.initial(), s2.initial())
    parent = {start: None}
    queue = deque([start])
    while queue:
        c1, c2 = node = queue.popleft()
        t1, t2 = _deterministic(s1.transitions(c1)), _deterministic(s2.transitions(c2))
        if set(t1) != set(t2):
            return False, _trace_to(parent, node)
        for label in sorted(t1):
            nxt = (t1[label], t2[label])
            if nxt not in parent:
                if len(parent) >= bound:
                    raise BudgetExceeded(f"product exploration exceeds {bound} configurations")
                parent[nxt] = (node, label)
                queue.append(nxt)
    return True, None


def outcomes(model: CspModel, budget: int = DEFAULT_BUDGET) -> set:
    """(matched pairs, deadlocked) for every maximal run of the model."""
    sem = Semantics(model)
    meta = model.event_meta
    start = (sem.initial(), frozenset())
    seen, stack, out = {start}, [start], set()
    while stack:
        c, pairs = stack.pop()
        trans = sem.transitions(c)
        if not trans:
            out.add((pairs, c[0] != _DONE))
            continue
        for label, d in trans:
            info = meta.get(label)
            p2 = pairs | {info.pair} if info is not None and info.pair is not None else pairs
            node = (d, p2)
            if node not in seen:
                if len(seen) >= budget:
                    raise BudgetExceeded(f"model exploration exceeds {budget} configurations")
                seen.add(node)
                stack.append(node)
    return out
