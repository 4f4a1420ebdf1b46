# An ordering property on the four-process example: P2's message must never
# be delivered before P0's.
#
# The first explored path matches P0 first, so the trace alone looks fine.
# The model of that same path still contains the run where P2 wins, and the
# model checker finds it.

from msgverif import corpus
from msgverif.csp import check_before
from msgverif.engine import EngineOptions, check_monitor, replay, verify
from msgverif.lang import parse_program, parse_property

text = corpus.read("fig2")
prog = parse_program(text)
prop = parse_property(corpus.read("before_p2_p0.prop"), prog)
print("property:", prop)

res = verify(prog, prop, EngineOptions(record_paths=True, keep_models=True), program_text=text)
first = res.paths[0]
print("trace of path 1:")
for a in first.trace:
    print("  ", a)
print("monitor on the trace says ok:", check_monitor(first.trace, prop))

check = check_before(res.models[0], prop, program_labels=prog.labels())
print("model check holds:", check.holds)
print("model counterexample:", " ".join(check.trace))

print("\nverdict:", res.verdict, "found by", res.found_by)
print("replay reproduces it:", replay(res.counterexample).reproduced)

# Without pruning the engine only sees the traces it runs, and misses it.
pure = verify(prog, prop, EngineOptions(prune=False))
print("pruning off:", pure.verdict, "after", pure.stats.paths_explored, "paths")
