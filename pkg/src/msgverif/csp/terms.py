"""Terms of the CSP subset and the model container."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional

TICK = "✓"


def _cached_hash(self):
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self)))
        object.__setattr__(self, "_hash", h)
    return h


def _term(cls):
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


@_term
class Skip:
    pass


SKIP = Skip()


@_term
class Event:
    name: str


@_term
class SeqComp:
    first: object
    second: object


@_term
class ExtChoice:
    options: tuple


@_term
class Parallel:
    left: object
    right: object
    sync: frozenset = frozenset()
    # A detached thread does not hold up termination of the right-hand side.
    detached: bool = False


@_term
class ChanRead:
    chan: str
    var: str
    cont: object = SKIP
    guard_empty: frozenset = frozenset()  # channels that must hold no message
    guard_full: frozenset = frozenset()  # marker channels that must be written
    marks: frozenset = frozenset()  # marker channels set when this read fires

    @property
    def label(self) -> str:
        return f"{self.chan}?{self.var}"


@_term
class ChanWrite:
    chan: str
    var: str
    cont: object = SKIP
    marks: frozenset = frozenset()

    @property
    def label(self) -> str:
        return f"{self.chan}!"


def seq(first, second):
    if isinstance(first, Skip):
        return second
    return SeqComp(first, second)


def par(left, right, sync=frozenset(), detached=False):
    if detached and isinstance(left, Skip):
        return right
    if isinstance(left, Skip) and isinstance(right, Skip):
        return SKIP
    return Parallel(left, right, frozenset(sync), detached)


def finished(t) -> bool:
    if isinstance(t, Skip):
        return True
    if isinstance(t, Parallel):
        if t.detached:
            return finished(t.right)
        return finished(t.left) and finished(t.right)
    return False


def subterms(t):
    yield t
    if isinstance(t, SeqComp):
        yield from subterms(t.first)
        yield from subterms(t.second)
    elif isinstance(t, ExtChoice):
        for o in t.options:
            yield from subterms(o)
    elif isinstance(t, Parallel):
        yield from subterms(t.left)
        yield from subterms(t.right)
    elif isinstance(t, (ChanRead, ChanWrite)):
        yield from subterms(t.cont)


def canonical(t):
    """Rename channels and events in order of first appearance; erase variable names.

    Messages carry no data, so variables are irrelevant to behaviour.  Two terms
    are isomorphic up to renaming iff their canonical forms are equal.
    """
    names: dict = {}

    def nm(kind, x):
        key = (kind, x)
        if key not in names:
            names[key] = f"{kind}{sum(1 for k in names if k[0] == kind)}"
        return names[key]

    def go(u):
        if isinstance(u, Skip):
            return u
        if isinstance(u, Event):
            return Event(nm("e", u.name))
        if isinstance(u, SeqComp):
            return SeqComp(go(u.first), go(u.second))
        if isinstance(u, ExtChoice):
            return ExtChoice(tuple(go(o) for o in u.options))
        if isinstance(u, Parallel):
            left, right = go(u.left), go(u.right)
            return Parallel(left, right, frozenset(nm("e", e) for e in sorted(u.sync)), u.detached)
        if isinstance(u, ChanRead):
            c, v = nm("c", u.chan), "_"
            ge = frozenset(nm("c", x) for x in sorted(u.guard_empty))
            gf = frozenset(nm("c", x) for x in sorted(u.guard_full))
            mk = frozenset(nm("c", x) for x in sorted(u.marks))
            return ChanRead(c, v, go(u.cont), ge, gf, mk)
        if isinstance(u, ChanWrite):
            c, v = nm("c", u.chan), "_"
            mk = frozenset(nm("c", x) for x in sorted(u.marks))
            return ChanWrite(c, v, go(u.cont), mk)
        raise TypeError(f"not a term: {u!r}")

    return go(t)


@dataclass(frozen=True)
class Channel:
    id: str
    capacity: int
    origin: Optional[tuple] = None  # op ref of the send; None for marker channels


@dataclass(frozen=True)
class EventInfo:
    completes: tuple = ()  # op refs that complete on this event
    pair: Optional[tuple] = None  # (send ref, recv ref) for message transfers


@dataclass
class CspModel:
    root: object
    channels: dict = field(default_factory=dict)
    event_meta: dict = field(default_factory=dict)
    processes: tuple = ()
    barrier_events: frozenset = frozenset()
    op_labels: dict = field(default_factory=dict)  # property label -> op refs on this path

    @property
    def alphabet(self) -> frozenset:
        return frozenset(self.event_meta) | {TICK}

    def send_channels(self) -> list:
        return [c for c in self.channels.values() if c.origin is not None]
