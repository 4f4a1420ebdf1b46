import random

import pytest
from hypothesis import given, settings, strategies as st

from msgverif import corpus
from msgverif.errors import ParseError
from msgverif.lang import (
    ANY, Before, BinOp, DeadlockFree, If, IntLit, IRecv, Program, Recv, Send, SymVar,
    format_program, format_property, parse_program, parse_property,
)
from msgverif.randprog import random_program


def test_smallest_pair():
    p = parse_program("proc 0 { send(1); }  proc 1 { recv(0); }")
    assert p.nprocs == 2
    assert p.processes == ((Send(IntLit(1)),), (Recv(IntLit(0)),))


def test_fig2_shape(load):
    p = load("fig2")
    assert p.nprocs == 4
    stmt = p.processes[1][0]
    assert isinstance(stmt, If)
    assert stmt.cond == BinOp("!=", SymVar("x"), IntLit(97))
    assert stmt.orelse == (IRecv(ANY, "req"),)
    assert p.domains() == {"x": (0, 255)}
    assert p.labels() == {"send_p0": 0, "send_p2": 2}


@pytest.mark.parametrize("text, msg", [
    ("proc 0 { wait(r); }", "undeclared request handle"),
    ("proc 0 { send(3); } proc 1 { recv(0); }", "out of range"),
    ("proc 0 { send(1) } proc 1 { recv(0); }", "expected ';'"),
    ("proc 1 { }", "declared in order"),
    ("sym x : int in [0, 3]; sym x : int in [0, 3]; proc 0 { }", "duplicate"),
    ("sym x : int in [4, 3]; proc 0 { }", "empty domain"),
    ("proc 0 { send(1) @a; } proc 1 { recv(0) @a; }", "label"),
])
def test_program_errors(text, msg):
    with pytest.raises(ParseError, match=msg):
        parse_program(text)


def test_error_position():
    with pytest.raises(ParseError) as e:
        parse_program("proc 0 {\n  send(1) $;\n}")
    assert (e.value.line, e.value.col) == (2, 11)


def test_default_domain():
    p = parse_program("sym x : int; proc 0 { if (x > 1) { barrier; } }")
    assert p.domains() == {"x": (0, 255)}


def test_properties():
    assert parse_property("deadlock_free") == DeadlockFree()
    assert parse_property("before send_p2 send_p0") == Before("send_p2", "send_p0")
    assert parse_property("// comment\nbefore a b\n") == Before("a", "b")
    for bad in ["until a b", "", "before a", "deadlock_free x"]:
        with pytest.raises(ParseError):
            parse_property(bad)


def test_property_labels_checked(load):
    prog = load("fig2")
    assert parse_property("before send_p2 send_p0", prog) == Before("send_p2", "send_p0")
    with pytest.raises(ParseError, match="unknown label"):
        parse_property("before send_p2 nope", prog)
    assert format_property(Before("a", "b")) == "before a b"


@pytest.mark.parametrize("name", corpus.PROGRAMS)
def test_corpus_round_trip(name):
    p = parse_program(corpus.read(name))
    assert parse_program(format_program(p)) == p


def test_corpus_properties_parse():
    prog = parse_program(corpus.read("fig2"))
    assert parse_property(corpus.read("deadlock_free.prop")) == DeadlockFree()
    assert parse_property(corpus.read("before_p2_p0.prop"), prog) == Before("send_p2", "send_p0")


def test_expressions_round_trip():
    text = """
    sym x : int in [0, 9];
    sym y : int in [-3, 3];
    proc 0 {
      var a : int;
      a := (x + 1) * (2 - y) - -3;
      while (a > 0 && !(a < 4) && (x == y || y >= 2)) { a := a - 1; }
      if (x != 7) { send(1) @s; } else { ssend(1); }
    }
    proc 1 { recv(*) @r; irecv(0, q); wait(q); }
    """
    p = parse_program(text)
    assert parse_program(format_program(p)) == p


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_random_round_trip(seed, symbolic):
    p = random_program(random.Random(seed), symbolic=symbolic)
    assert parse_program(format_program(p)) == p


def test_empty_program_rejected():
    with pytest.raises(ParseError):
        parse_program("")
    assert isinstance(parse_program("proc 0 { }"), Program)
