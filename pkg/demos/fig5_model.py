# The CSP model generated for one path of a program with non-blocking
# operations around a barrier.

from msgverif import corpus
from msgverif.csp import check_deadlock, dump_model, pretty_model
from msgverif.engine import EngineOptions, verify
from msgverif.lang import DeadlockFree, parse_program

prog = parse_program(corpus.read("fig5"))
res = verify(prog, DeadlockFree(), EngineOptions(keep_models=True))
print(res.verdict, "paths:", res.stats.paths_explored, "pruned:", res.stats.states_pruned)

model = res.models[0]
print()
print(pretty_model(model))

# Both writes sit in one-place channels; P1's wildcard read may take either.
print("\nchannels:")
for c in model.send_channels():
    print(f"  {c.id} capacity {c.capacity} from op {c.origin}")

print("\ndeadlock free on this model:", check_deadlock(model).holds)

# The dump is the format written by `msgverif verify --dump-model`.
print()
print(dump_model(model))

