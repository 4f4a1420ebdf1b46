"""CSP subset, path model generation and explicit-state checking."""
from .checker import (
    CheckResult, Semantics, check_before, check_deadlock, failures, failures_equivalent,
    outcomes, reachable,
)
from .model import generate_csp, ideal_model, ideal_smo, path_program, smo
from .render import dump_model, dump_term, parse_dump, parse_term, pretty, pretty_model
from .terms import (
    SKIP, TICK, ChanRead, ChanWrite, Channel, CspModel, Event, EventInfo, ExtChoice, Parallel,
    SeqComp, Skip, canonical, finished,
)

__all__ = [
    "CheckResult", "Semantics", "check_before", "check_deadlock", "failures",
    "failures_equivalent", "outcomes", "reachable", "generate_csp", "ideal_model", "ideal_smo",
    "path_program", "smo", "dump_model", "dump_term", "parse_dump", "parse_term",
    "pretty", "pretty_model", "SKIP", "TICK", "ChanRead", "ChanWrite", "Channel", "CspModel",
    "Event", "EventInfo", "ExtChoice", "Parallel", "SeqComp", "Skip", "canonical", "finished",
]
