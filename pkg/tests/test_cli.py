import subprocess
import sys

import pytest

from msgverif import corpus
from msgverif.cli import (
    REPORT_KEYS, RunConfig, classify, compare_modes, main, run_task,
)
from msgverif.csp import parse_dump
from msgverif.engine import (
    BUDGET_EXCEEDED, EXHAUSTED, PROPERTY_HOLDS, VIOLATION_FOUND, EngineOptions,
)

C = {name: str(corpus.path(name)) for name in corpus.PROGRAMS}
DF = str(corpus.path("deadlock_free.prop"))
BEFORE = str(corpus.path("before_p2_p0.prop"))


def kv(text):
    out = {}
    for line in text.splitlines():
        k, _, v = line.partition(": ")
        out[k] = v
    return out


def test_fig2_prune_on(tmp_path, capsys):
    code = main(["verify", C["fig2"], DF, "--prune", "on", "--report", "keyvalue",
                 "--out", str(tmp_path)])
    rep = kv(capsys.readouterr().out)
    assert code == 1
    assert rep["paths_explored"] == "2"
    assert rep["verdict"] == VIOLATION_FOUND
    assert (tmp_path / "fig2.replay.json").exists()


def test_fig5_holds(tmp_path, capsys):
    assert main(["verify", C["fig5"], DF, "--out", str(tmp_path)]) == 0
    assert "propertyHolds" in capsys.readouterr().out
    assert list(tmp_path.iterdir()) == []


def test_missing_file(capsys):
    assert main(["verify", "no/such.mpl", DF]) == 2
    assert "error" in capsys.readouterr().err


def test_parse_error_reported(tmp_path, capsys):
    bad = tmp_path / "bad.mpl"
    bad.write_text("proc 0 { send(1) }\n")
    assert main(["verify", str(bad), DF]) == 2
    assert "1:18" in capsys.readouterr().err


def test_unknown_label(tmp_path, capsys):
    assert main(["verify", C["fig2"], "before send_p2 nope", "--out", str(tmp_path)]) == 2


def test_inline_property(tmp_path, capsys):
    assert main(["verify", C["fig2"], "deadlock_free", "--out", str(tmp_path)]) == 1


def test_keyvalue_order_and_stats(tmp_path):
    cfg = RunConfig(C["fig2-modified"], DF, EngineOptions(), str(tmp_path), "keyvalue")
    rep = run_task(cfg)
    text = rep.keyvalue()
    assert [line.split(":")[0] for line in text.splitlines()] == list(REPORT_KEYS)
    got = kv(text)
    st = rep.stats
    assert got["paths_explored"] == str(st.paths_explored)
    assert got["states_pruned"] == str(st.states_pruned)
    assert got["model_checker_calls"] == str(st.model_checker_calls)
    assert got["wall_time"] == f"{st.wall_time:.6f}"


def test_report_matches_engine(tmp_path):
    from msgverif.engine import verify
    from msgverif.lang import DeadlockFree, parse_program
    res = verify(parse_program(corpus.read("fig2")), DeadlockFree())
    rep = run_task(RunConfig(C["fig2"], DF, EngineOptions(), str(tmp_path)))
    assert (rep.verdict, rep.violation, rep.found_by) == (res.verdict, res.violation, res.found_by)
    assert rep.stats == res.stats
    assert rep.model_trace == res.model_trace


def test_replay_round_trip(tmp_path, capsys):
    assert main(["verify", C["fig2"], DF, "--out", str(tmp_path)]) == 1
    capsys.readouterr()
    code = main(["verify", C["fig2"], DF, "--replay", str(tmp_path / "fig2.replay.json")])
    assert code == 1
    assert "reproduced: deadlock reached" in capsys.readouterr().out


def test_replay_against_wrong_program(tmp_path, capsys):
    main(["verify", C["fig2"], DF, "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["verify", C["fig5"], DF, "--replay", str(tmp_path / "fig2.replay.json")]) == 2


def test_dump_model(tmp_path, capsys):
    assert main(["verify", C["fig5"], DF, "--dump-model", "--out", str(tmp_path)]) == 0
    dumps = sorted(tmp_path.glob("fig5.path*.csp"))
    assert len(dumps) == 1
    assert parse_dump(dumps[0].read_text()).processes


def test_text_report_shows_counterexample(tmp_path, capsys):
    main(["verify", C["fig2"], DF, "--prune", "off", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "SR* P3.Send(1)#0 -> P1.IRecv(*,req)#0" in out
    assert "inputs x=97" in out


def test_compare_modes(tmp_path):
    cmp = compare_modes(RunConfig(C["fig2-modified"], DF, output_dir=str(tmp_path)))
    assert (cmp.pure.stats.paths_explored, cmp.pruned.stats.paths_explored) == (8, 2)
    assert cmp.mismatch == "none" and cmp.exit_code == 0
    cmp = compare_modes(RunConfig(C["fig2"], DF, output_dir=str(tmp_path)))
    assert (cmp.pure.stats.paths_explored, cmp.pruned.stats.paths_explored) == (4, 2)
    assert cmp.pure.verdict == cmp.pruned.verdict == VIOLATION_FOUND
    cmp = compare_modes(RunConfig(C["pair"], DF, output_dir=str(tmp_path)))
    assert cmp.pure.stats.paths_explored == cmp.pruned.stats.paths_explored


def test_compare_before_is_a_sound_difference(tmp_path, capsys):
    code = main(["compare", C["fig2"], BEFORE, "--report", "keyvalue", "--out", str(tmp_path)])
    rep = kv(capsys.readouterr().out)
    assert rep["mismatch"] == "sound"
    assert rep["pure.verdict"] == PROPERTY_HOLDS and rep["pruned.verdict"] == VIOLATION_FOUND
    assert code == 1


def test_classify():
    assert classify(PROPERTY_HOLDS, PROPERTY_HOLDS) == "none"
    assert classify(VIOLATION_FOUND, PROPERTY_HOLDS) == "unsound"
    assert classify(PROPERTY_HOLDS, VIOLATION_FOUND) == "sound"
    assert classify(VIOLATION_FOUND, BUDGET_EXCEEDED) == "sound"
    assert classify(EXHAUSTED, PROPERTY_HOLDS) == "sound"


def test_bad_option_value(capsys):
    with pytest.raises(SystemExit) as e:
        main(["verify", C["fig2"], DF, "--por", "maybe"])
    assert e.value.code == 2


def test_random_is_seeded(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MSGVERIF_SEED", "42")
    assert main(["random", "--count", "4", "--out", str(tmp_path / "a")]) == 0
    assert main(["random", "--count", "4", "--out", str(tmp_path / "b"), "--compare"]) == 0
    a = sorted(p.name for p in (tmp_path / "a").glob("*.mpl"))
    assert a == [f"rand-42-00{i}.mpl" for i in range(4)]
    for name in a:
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
    assert "mismatch none" in capsys.readouterr().out


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "msgverif.cli", "verify", C["pair"], DF,
                          "--report", "keyvalue"], capture_output=True, text=True, cwd=tmp_path)
    assert out.returncode == 0
    assert kv(out.stdout)["verdict"] == PROPERTY_HOLDS
