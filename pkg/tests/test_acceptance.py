"""Acceptance criteria 1-9, one test each.

Run with `pytest -v tests/test_acceptance.py` (one PASSED/FAILED line per
criterion) or directly with `python3 tests/test_acceptance.py`.
"""
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from msgverif import corpus  # noqa: E402
from msgverif.cli import RunConfig, compare_modes  # noqa: E402
from msgverif.csp import canonical, check_before, generate_csp  # noqa: E402
from msgverif.csp.terms import SKIP, ChanRead, ChanWrite, Event, ExtChoice, par, seq  # noqa: E402
from msgverif.engine import (  # noqa: E402
    PROPERTY_HOLDS, VIOLATION_FOUND, EngineOptions, WorkItem, check_monitor, execute_step,
    matching, replay, verify,
)
from msgverif.lang import Before, DeadlockFree, parse_program, parse_property  # noqa: E402
from msgverif.semantics import B, Context, SRStar, explore, initial_state  # noqa: E402

from oracles import (  # noqa: E402
    independence_failures, input_free_programs, model_oracle_failures, por_failures,
    reachable_sample, terminated_paths,
)

pytestmark = pytest.mark.acceptance

SEED = 2024


def prog(name):
    return parse_program(corpus.read(name))


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_1_fig2_deadlock_exact_paths():
    on, t_on = timed(lambda: verify(prog("fig2"), DeadlockFree(), EngineOptions(prune=True)))
    off, t_off = timed(lambda: verify(prog("fig2"), DeadlockFree(), EngineOptions(prune=False)))
    assert (on.verdict, on.stats.paths_explored) == (VIOLATION_FOUND, 2)
    assert (off.verdict, off.stats.paths_explored) == (VIOLATION_FOUND, 4)
    assert t_on < 1 and t_off < 1


def test_criterion_2_modified_fig2_paths():
    on, t_on = timed(lambda: verify(prog("fig2-modified"), DeadlockFree(), EngineOptions(prune=True)))
    off, t_off = timed(lambda: verify(prog("fig2-modified"), DeadlockFree(), EngineOptions(prune=False)))
    assert (off.verdict, off.stats.paths_explored) == (PROPERTY_HOLDS, 8)
    assert (on.verdict, on.stats.paths_explored) == (PROPERTY_HOLDS, 2)
    assert t_on < 1 and t_off < 1


def _expected_fig5():
    cp0 = ChanWrite("chan1", "a", seq(Event("B"), SKIP))
    choice = ExtChoice((ChanRead("chan1", "a"), ChanRead("chan2", "b")))
    cp1 = par(seq(choice, Event("ew")), seq(Event("B"), seq(Event("ew"), SKIP)), {"ew"})
    cp2 = seq(Event("B"), ChanWrite("chan2", "b", SKIP))
    return par(par(cp0, cp1, {"B"}), cp2, {"B"})


def _blocked(item, ctx):
    while True:
        r = next((p.rank for p in item.state.procs if p.flag == "active"), None)
        if r is None:
            return item
        (item,) = execute_step(item, r, ctx)


def test_criterion_3_fig5_model_and_forks():
    p = prog("fig5")
    ctx = Context.for_program(p)
    item = _blocked(WorkItem(initial_state(p, ctx, settle=False)), ctx)
    what, nxt = matching(item, ctx)
    assert what == "step" and isinstance(nxt.trace[-1], B)
    what, forks = matching(_blocked(nxt, ctx), ctx)
    assert what == "fork" and len(forks) == 2
    assert all(isinstance(f.trace[-1], SRStar) for f in forks)
    (t, *_), _ = terminated_paths(p, "infinite")
    m = generate_csp(t, ctx)
    assert canonical(m.root) == canonical(_expected_fig5())


def test_criterion_4_before_property_on_fig2():
    def run():
        p = prog("fig2")
        prop = Before("send_p2", "send_p0")
        res = verify(p, prop, EngineOptions(record_paths=True, keep_models=True))
        return p, prop, res
    (p, prop, res), elapsed = timed(run)
    p1 = res.paths[0]
    assert check_monitor(p1.trace, prop)  # the trace alone shows no violation
    model_check = check_before(res.models[0], prop, program_labels=p.labels())
    assert not model_check.holds
    assert res.verdict == VIOLATION_FOUND
    assert elapsed < 1


def test_criterion_5_independence():
    t0 = time.perf_counter()
    bad = []
    for s, ctx in reachable_sample(1000, SEED):
        bad += independence_failures(s, ctx)
    assert bad == []
    assert time.perf_counter() - t0 < 30


def test_criterion_6_por_preserves_deadlocks_and_matchings():
    t0 = time.perf_counter()
    bad = []
    for p in input_free_programs(200, SEED, max_procs=3, max_ops=4):
        for buf in ("infinite", "zero"):
            bad += por_failures(p, buf)
    assert bad == []
    assert time.perf_counter() - t0 < 60


def _corpus_paths():
    for name in corpus.PROGRAMS:
        p = prog(name)
        inputs = [{"x": 0}, {"x": 97}] if p.sym_inputs else [None]
        for buf in ("infinite", "zero"):
            for inp in inputs:
                ctx = Context.for_program(p, buf, inp)
                for t in sorted(explore(initial_state(p, ctx), ctx), key=repr):
                    if t.all_terminated():
                        yield t, ctx


def _random_paths(count, seed):
    rng = random.Random(seed)
    out = []
    for p in input_free_programs(10 * count, seed):
        buf = rng.choice(("infinite", "zero"))
        ts, ctx = terminated_paths(p, buf)
        if ts:
            out.append((rng.choice(ts), ctx))
        if len(out) == count:
            break
    return out


def test_criterion_7_model_oracles():
    t0 = time.perf_counter()
    cases = list(_corpus_paths()) + _random_paths(200, SEED)
    assert len(cases) >= 200
    bad = []
    for t, ctx in cases:
        bad += model_oracle_failures(t, ctx, bound=10**5)
    assert bad == []
    assert time.perf_counter() - t0 < 120


def test_criterion_8_pruning_soundness(tmp_path):
    mismatches = []
    for name in corpus.PROGRAMS:
        for buf in ("infinite", "zero"):
            opts = EngineOptions(buffer=buf)
            cmp = compare_modes(RunConfig(str(corpus.path(name)), "deadlock_free", opts,
                                          str(tmp_path)))
            if cmp.pure.verdict != cmp.pruned.verdict or cmp.mismatch != "none":
                mismatches.append((name, buf, cmp.pure.verdict, cmp.pruned.verdict))
    assert mismatches == []


def test_criterion_9_replay_fidelity():
    failures, count = [], 0
    jobs = [(name, "deadlock_free") for name in corpus.PROGRAMS]
    jobs += [("fig2", "before_p2_p0"), ("fig2-modified", "before_p2_p0")]
    for name, prop_name in jobs:
        text = corpus.read(name)
        p = parse_program(text)
        prop = parse_property(corpus.read(prop_name + ".prop"), p)
        for buf in ("infinite", "zero"):
            for por in (True, False):
                for prune in (True, False):
                    res = verify(p, prop, EngineOptions(por=por, prune=prune, buffer=buf),
                                 program_text=text)
                    if res.verdict == VIOLATION_FOUND:
                        count += 1
                        if not replay(res.counterexample).reproduced:
                            failures.append((name, prop_name, buf, por, prune))
    from msgverif.lang import format_program
    for rp in input_free_programs(150, SEED + 1):
        text = format_program(rp)
        for buf in ("infinite", "zero"):
            res = verify(rp, DeadlockFree(), EngineOptions(buffer=buf), program_text=text)
            if res.verdict == VIOLATION_FOUND:
                count += 1
                if not replay(res.counterexample).reproduced:
                    failures.append((text, buf))
    assert count >= 20
    assert failures == []


if __name__ == "__main__":
    import tempfile
    tests = [(n, f) for n, f in sorted(globals().items()) if n.startswith("test_criterion_")]
    tests.sort(key=lambda nf: int(nf[0].split("_")[2]))
    ok = True
    for name, fn in tests:
        t0 = time.perf_counter()
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(Path(d))
            else:
                fn()
            status = "PASS"
        except AssertionError as e:
            status, ok = f"FAIL {e}".splitlines()[0], False
        print(f"criterion {name.split('_')[2]}: {status}  ({time.perf_counter() - t0:.2f}s)  {name}")
    sys.exit(0 if ok else 1)
