# Walking through the four-process example with a wildcard receive.
#
# P1 branches on an input character. On the 'a' branch it posts a wildcard
# irecv, which can be matched by P0, P2 or P3. If P3's message is taken,
# the later recv(3) has no partner and the program deadlocks.

from msgverif import corpus
from msgverif.cli import render_case
from msgverif.engine import EngineOptions, verify
from msgverif.lang import DeadlockFree, format_expr, parse_program

text = corpus.read("fig2")
print(text)
prog = parse_program(text)

# Plain symbolic execution: every wildcard match is a separate path.
pure = verify(prog, DeadlockFree(), EngineOptions(prune=False, record_paths=True))
print("pruning off:", pure.verdict, "after", pure.stats.paths_explored, "paths")
for p in pure.paths:
    pc = " && ".join(format_expr(c) for c in p.pc) or "true"
    print(f"  path {p.number}: {p.outcome:10s} pc: {pc}")

# With pruning, each finished path is handed to the CSP model checker, which
# covers all other matchings of that path at once.
pruned = verify(prog, DeadlockFree(), EngineOptions(prune=True))
print("\npruning on: ", pruned.verdict, "after", pruned.stats.paths_explored, "paths,",
      pruned.stats.model_checker_calls, "model checks")
print("found by:", pruned.found_by)
print("model trace:", " ".join(pruned.model_trace or []))
print("counterexample:")
for step in render_case(pruned.counterexample):
    print("  ", step)
