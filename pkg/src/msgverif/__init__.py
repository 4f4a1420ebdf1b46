"""Symbolic execution of message-passing programs with CSP-model-checking-driven pruning."""
from .engine import (
    BUDGET_EXCEEDED, EXHAUSTED, PROPERTY_HOLDS, VIOLATION_FOUND, EngineOptions, ReplayCase,
    Stats, VerificationResult, replay, verify,
)
from .errors import MsgVerifError, ParseError
from .lang import parse_program, parse_property

__version__ = "0.1.0"

__all__ = [
    "BUDGET_EXCEEDED", "EXHAUSTED", "PROPERTY_HOLDS", "VIOLATION_FOUND", "EngineOptions",
    "ReplayCase", "Stats", "VerificationResult", "replay", "verify", "MsgVerifError",
    "ParseError", "parse_program", "parse_property",
]
