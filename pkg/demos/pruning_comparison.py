# Paths explored with and without model-checker pruning, over the bundled
# corpus and both buffering modes.

from msgverif import corpus
from msgverif.engine import EngineOptions, verify
from msgverif.lang import DeadlockFree, parse_program

print(f"{'program':15s} {'buffer':9s} {'verdict off':16s} {'paths':>5s}   {'verdict on':16s} {'paths':>5s} {'checks':>6s}")
for name in corpus.PROGRAMS:
    prog = parse_program(corpus.read(name))
    for buf in ("infinite", "zero"):
        off = verify(prog, DeadlockFree(), EngineOptions(prune=False, buffer=buf))
        on = verify(prog, DeadlockFree(), EngineOptions(prune=True, buffer=buf))
        print(f"{name:15s} {buf:9s} {off.verdict:16s} {off.stats.paths_explored:5d}   "
              f"{on.verdict:16s} {on.stats.paths_explored:5d} {on.stats.model_checker_calls:6d}")
