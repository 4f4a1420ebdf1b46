import random

import pytest

from msgverif import corpus
from msgverif.lang import parse_program
from msgverif.semantics import Context, apply_action, enabled, initial_state


@pytest.fixture
def load():
    def _load(name):
        return parse_program(corpus.read(name))
    return _load


def run(prog, actions_by_str, buffer="infinite"):
    """Fire actions picked by their string form; handy for spelling out scenarios."""
    ctx = Context.for_program(prog, buffer)
    s = initial_state(prog, ctx)
    for want in actions_by_str:
        en = enabled(s, ctx)
        match = [a for a in en if str(a) == want]
        assert match, f"{want!r} not enabled; have {[str(a) for a in en]}"
        s = apply_action(s, match[0], ctx)
    return s, ctx


def random_walk(prog, rng: random.Random, buffer="infinite", steps=None):
    """States visited by one uniformly random run of an input-free program."""
    ctx = Context.for_program(prog, buffer)
    s = initial_state(prog, ctx)
    out = [s]
    for _ in range(steps if steps is not None else 10**6):
        en = enabled(s, ctx)
        if not en:
            break
        s = apply_action(s, rng.choice(en), ctx)
        out.append(s)
    return out, ctx
