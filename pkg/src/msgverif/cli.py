"""Command-line front end: verify, compare pure and pruned runs, generate random programs."""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .csp import dump_model
from .engine import (
    BUDGET_EXCEEDED, EXHAUSTED, PROPERTY_HOLDS, VIOLATION_FOUND, EngineOptions, ReplayCase,
    Stats, VerificationResult, replay, verify,
)
from .errors import MsgVerifError
from .lang import format_program, format_property, parse_program, parse_property
from .randprog import SEED_ENV, random_program, seed_from_env
from .semantics import INFINITE, ZERO

EXIT_HOLDS, EXIT_VIOLATION, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2, 3
EXIT_CODES = {PROPERTY_HOLDS: EXIT_HOLDS, VIOLATION_FOUND: EXIT_VIOLATION,
              EXHAUSTED: EXIT_ERROR, BUDGET_EXCEEDED: EXIT_ERROR}

# Key order of the keyvalue report; never reorder, only append.
REPORT_KEYS = (
    "program", "property", "por", "prune", "buffer", "verdict", "paths_explored",
    "states_pruned", "model_checker_calls", "wall_time", "violation", "found_by",
    "counterexample_steps", "counterexample", "model_trace", "replay_file", "model_dumps", "note",
)


@dataclass
class RunConfig:
    program_path: str
    property_path: str
    options: EngineOptions = field(default_factory=EngineOptions)
    output_dir: Optional[str] = None
    report_format: str = "text"
    dump_model: bool = False


@dataclass
class Report:
    program: str
    property: str
    options: EngineOptions
    verdict: str
    stats: Stats
    violation: Optional[str] = None
    found_by: Optional[str] = None
    counterexample: list = field(default_factory=list)  # rendered steps
    model_trace: Optional[list] = None
    replay_file: Optional[str] = None
    model_dumps: list = field(default_factory=list)
    note: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def fields(self) -> dict:
        o, st = self.options, self.stats
        return {
            "program": self.program,
            "property": self.property,
            "por": _onoff(o.por),
            "prune": _onoff(o.prune),
            "buffer": o.buffer,
            "verdict": self.verdict,
            "paths_explored": str(st.paths_explored),
            "states_pruned": str(st.states_pruned),
            "model_checker_calls": str(st.model_checker_calls),
            "wall_time": f"{st.wall_time:.6f}",
            "violation": self.violation or "-",
            "found_by": self.found_by or "-",
            "counterexample_steps": str(len(self.counterexample)),
            "counterexample": " | ".join(self.counterexample) or "-",
            "model_trace": " ".join(self.model_trace) if self.model_trace else "-",
            "replay_file": self.replay_file or "-",
            "model_dumps": " ".join(self.model_dumps) or "-",
            "note": self.note or "-",
        }

    def keyvalue(self, prefix: str = "") -> str:
        f = self.fields()
        return "".join(f"{prefix}{k}: {f[k]}\n" for k in REPORT_KEYS)

    def text(self) -> str:
        o, st = self.options, self.stats
        lines = [
            f"program   {self.program}",
            f"property  {self.property}",
            f"options   por={_onoff(o.por)} prune={_onoff(o.prune)} buffer={o.buffer}",
            f"verdict   {self.verdict}",
            f"paths     {st.paths_explored} explored, {st.states_pruned} pruned, "
            f"{st.model_checker_calls} model checks, {st.wall_time:.3f}s",
        ]
        if self.violation:
            lines.append(f"violation {self.violation} (found by {self.found_by})")
        if self.model_trace:
            lines.append("model trace: " + " ".join(self.model_trace))
        if self.counterexample:
            lines.append("counterexample:")
            lines.extend(f"  {i:3d}  {step}" for i, step in enumerate(self.counterexample, 1))
        if self.replay_file:
            lines.append(f"replay    {self.replay_file}")
        for d in self.model_dumps:
            lines.append(f"model     {d}")
        if self.note:
            lines.append(f"note      {self.note}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.keyvalue() if fmt == "keyvalue" else self.text()


def _onoff(b: bool) -> str:
    return "on" if b else "off"


def render_case(case: Optional[ReplayCase]) -> list:
    if case is None:
        return []
    steps = []
    if case.inputs:
        steps.append("inputs " + ", ".join(f"{k}={v}" for k, v in sorted(case.inputs.items())))
    steps.extend(str(a) for a in case.interleaving)
    return steps


def load_property(spec: str, prog):
    """A property file, or the property text itself when no such file exists."""
    p = Path(spec)
    if p.exists():
        return parse_property(p.read_text(), prog)
    if spec.strip().split()[:1] in (["deadlock_free"], ["before"]):
        return parse_property(spec, prog)
    raise FileNotFoundError(f"no such property file: {spec}")


def run_task(cfg: RunConfig) -> Report:
    """Verify one program against one property; writes the replay file on violation."""
    text = Path(cfg.program_path).read_text()
    prog = parse_program(text)
    prop = load_property(cfg.property_path, prog)
    opts = cfg.options
    if cfg.dump_model:
        opts = EngineOptions(**{**vars(opts), "keep_models": True})
    res = verify(prog, prop, opts, program_text=text)
    report = _report(cfg, prop, opts, res)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    stem = Path(cfg.program_path).stem
    if res.verdict == VIOLATION_FOUND and res.counterexample is not None:
        target = (out or Path(".")) / f"{stem}.replay.json"
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(res.counterexample.to_json())
        report.replay_file = str(target)
    if cfg.dump_model and res.models:
        target_dir = out or Path(".")
        target_dir.mkdir(parents=True, exist_ok=True)
        for i, m in enumerate(res.models, 1):
            f = target_dir / f"{stem}.path{i}.csp"
            f.write_text(dump_model(m))
            report.model_dumps.append(str(f))
    return report


def _report(cfg: RunConfig, prop, opts: EngineOptions, res: VerificationResult) -> Report:
    return Report(
        program=cfg.program_path, property=format_property(prop), options=opts,
        verdict=res.verdict, stats=res.stats, violation=res.violation, found_by=res.found_by,
        counterexample=render_case(res.counterexample), model_trace=res.model_trace,
        note=res.note,
    )


@dataclass
class Comparison:
    pure: Report
    pruned: Report
    mismatch: str  # none | sound | unsound

    @property
    def exit_code(self) -> int:
        return EXIT_MISMATCH if self.mismatch == "unsound" else self.pruned.exit_code

    def render(self, fmt: str) -> str:
        if fmt == "keyvalue":
            return (self.pure.keyvalue("pure.") + self.pruned.keyvalue("pruned.")
                    + f"mismatch: {self.mismatch}\n")
        a, b = self.pure, self.pruned
        rows = [
            ("", "pure", "pruned"),
            ("verdict", a.verdict, b.verdict),
            ("paths", a.stats.paths_explored, b.stats.paths_explored),
            ("pruned", a.stats.states_pruned, b.stats.states_pruned),
            ("model checks", a.stats.model_checker_calls, b.stats.model_checker_calls),
            ("time (s)", f"{a.stats.wall_time:.3f}", f"{b.stats.wall_time:.3f}"),
        ]
        out = [f"program   {a.program}", f"property  {a.property}"]
        out += [f"{r[0]:<14}{r[1]!s:<18}{r[2]!s}" for r in rows]
        out.append(f"mismatch  {self.mismatch}")
        return "\n".join(out) + "\n"


def classify(pure: str, pruned: str) -> str:
    """`unsound` when pruning loses a violation the pure run finds, or hides a holding verdict."""
    if pure == pruned:
        return "none"
    if {pure, pruned} & {BUDGET_EXCEEDED, EXHAUSTED}:
        return "sound"  # one side is inconclusive
    if pure == PROPERTY_HOLDS and pruned == VIOLATION_FOUND:
        # The model covers interleavings the trace monitor cannot see.
        return "sound"
    return "unsound"


def compare_modes(cfg: RunConfig) -> Comparison:
    """Run with pruning off, then on; the verdicts must agree up to model-only violations."""
    base = vars(cfg.options)
    out = Path(cfg.output_dir or ".")
    runs = []
    for prune, sub in ((False, "pure"), (True, "pruned")):
        runs.append(run_task(RunConfig(cfg.program_path, cfg.property_path,
                                       EngineOptions(**{**base, "prune": prune}),
                                       str(out / sub), cfg.report_format)))
    off, on = runs
    return Comparison(off, on, classify(off.verdict, on.verdict))


def run_replay(program_path: str, case_path: str) -> tuple:
    """Re-execute a replay file; returns (exit code, message)."""
    case = ReplayCase.from_json(Path(case_path).read_text())
    prog = parse_program(Path(program_path).read_text())
    got = replay(case, prog)
    status = "reproduced" if got.reproduced else "not reproduced"
    msg = f"replay    {case_path}\nviolation {case.violation}\nresult    {status}: {got.detail}\n"
    return (EXIT_VIOLATION if got.reproduced else EXIT_ERROR), msg


# -- argument handling ------------------------------------------------------------------


def _onoff_arg(s: str) -> bool:
    if s not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return s == "on"


def _add_engine_args(p: argparse.ArgumentParser):
    p.add_argument("program", help="program file (.mpl)")
    p.add_argument("property", help="property file, or property text such as deadlock_free")
    p.add_argument("--por", type=_onoff_arg, default=True, metavar="on|off")
    p.add_argument("--prune", type=_onoff_arg, default=True, metavar="on|off")
    p.add_argument("--buffer", choices=[INFINITE, ZERO], default=INFINITE)
    p.add_argument("--max-paths", type=int, default=10_000)
    p.add_argument("--timeout", type=float, default=60.0, help="seconds")
    p.add_argument("--report", choices=["text", "keyvalue"], default="text")
    p.add_argument("--out", metavar="DIR", help="directory for replay files and model dumps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msgverif", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="verify a program against a property")
    _add_engine_args(v)
    v.add_argument("--dump-model", action="store_true", help="write every path model checked")
    v.add_argument("--replay", metavar="FILE", help="re-execute a replay file instead of verifying")

    c = sub.add_parser("compare", help="run with pruning off and on and compare verdicts")
    _add_engine_args(c)

    r = sub.add_parser("random", help=f"generate random programs (seed from ${SEED_ENV})")
    r.add_argument("--count", type=int, default=10)
    r.add_argument("--seed", type=int, help=f"overrides ${SEED_ENV}")
    r.add_argument("--max-procs", type=int, default=3)
    r.add_argument("--max-ops", type=int, default=4)
    r.add_argument("--symbolic", action="store_true", help="add a symbolic input and a branch")
    r.add_argument("--out", metavar="DIR", required=True)
    r.add_argument("--compare", action="store_true",
                   help="also compare pure and pruned runs on each program (deadlock_free)")
    return ap


def _config(args) -> RunConfig:
    opts = EngineOptions(por=args.por, prune=args.prune, buffer=args.buffer,
                         max_paths=args.max_paths, timeout=args.timeout)
    return RunConfig(args.program, args.property, opts, args.out, args.report,
                     getattr(args, "dump_model", False))


def _random(args) -> int:
    seed = seed_from_env() if args.seed is None else args.seed
    rng = random.Random(seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    worst = EXIT_HOLDS
    for i in range(args.count):
        prog = random_program(rng, args.max_procs, args.max_ops, symbolic=args.symbolic)
        f = out / f"rand-{seed}-{i:03d}.mpl"
        f.write_text(f"// seed {seed}, program {i}\n" + format_program(prog))
        line = str(f)
        if args.compare:
            cmp = compare_modes(RunConfig(str(f), "deadlock_free", output_dir=str(out)))
            line += (f"  {cmp.pure.verdict}/{cmp.pruned.verdict}"
                     f"  paths {cmp.pure.stats.paths_explored}/{cmp.pruned.stats.paths_explored}"
                     f"  mismatch {cmp.mismatch}")
            if cmp.mismatch == "unsound":
                worst = EXIT_MISMATCH
        print(line)
    return worst


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "random":
            return _random(args)
        if args.command == "verify" and args.replay:
            code, msg = run_replay(args.program, args.replay)
            sys.stdout.write(msg)
            return code
        cfg = _config(args)
        result = compare_modes(cfg) if args.command == "compare" else run_task(cfg)
        sys.stdout.write(result.render(cfg.report_format))
        return result.exit_code
    except (OSError, MsgVerifError, ValueError) as e:
        print(f"msgverif: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
