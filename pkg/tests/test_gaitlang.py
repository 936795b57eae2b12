import json
import math
import random
from pathlib import Path

import pytest

from trussforge.core import TRUSS_LINK, Vec3, build_topology
from trussforge.environments import flat_env
from trussforge.gaitlang import (
    BindError,
    Dock,
    DeactivateConnector,
    GaitProgram,
    Parallel,
    ParseError,
    Repeat,
    SetLength,
    UnknownGait,
    Undock,
    WaitSettle,
    WaitTime,
    builtin,
    builtin_names,
    execute,
    parse,
    serialize,
)
from trussforge.mechanics import SolverParams, rest_state

DATA = Path(__file__).parent / "data" / "invalid_gaits"


class TestParse:
    def test_set_statement(self):
        p = parse("set m1 len 0.45 rate 0.02")
        assert p.statements == (SetLength("m1", 0.45, 0.02),)

    def test_repeat_structure(self):
        p = parse("repeat 20 { set m1 len 0.48 wait settle "
                  "set m1 len 0.28 wait settle }")
        (rep,) = p.statements
        assert isinstance(rep, Repeat)
        assert rep.count == 20 and len(rep.block) == 4

    def test_missing_number_is_located(self):
        with pytest.raises(ParseError) as err:
            parse("set m1 len")
        assert err.value.expected == "NUMBER"

    def test_comments_ignored(self):
        p = parse("# a comment\nset m1 len 0.4 # trailing\nwait 2.0\n")
        assert len(p.statements) == 2

    def test_actuator_addressing(self):
        p = parse("set link.a len 0.1")
        assert p.statements[0].member == "link.a"

    def test_all_statement_kinds(self):
        text = """\
set m1 len 0.4 rate 0.01
wait settle 12.0
wait 3.5
dock a b
undock a
deactivate m1 a
repeat 2 {
  wait 1.0
}
parallel {
  {
    set m1.a len 0.1
  }
  {
    set m1.b len 0.1
  }
}
"""
        p = parse(text)
        kinds = [type(s) for s in p.statements]
        assert kinds == [SetLength, WaitSettle, WaitTime, Dock, Undock,
                         DeactivateConnector, Repeat, Parallel]

    def test_parallel_disjointness_enforced(self):
        with pytest.raises(BindError):
            parse("parallel { { set m1 len 1 } { set m1 len 2 } }")
        with pytest.raises(BindError):
            parse("parallel { { set m1 len 1 } { set m1.a len 0.1 } }")
        # distinct servos of one member are distinct resources
        parse("parallel { { set m1.a len 0.1 } { set m1.b len 0.1 } }")


class TestSerialize:
    def test_round_trip_builtins(self):
        for name in builtin_names():
            prog = builtin(name)
            assert parse(serialize(prog)) == prog

    def test_serialize_idempotent(self):
        for name in builtin_names():
            once = serialize(builtin(name))
            assert serialize(parse(once)) == once

    def test_empty_program(self):
        assert serialize(GaitProgram(())) == ""
        assert parse("") == GaitProgram(())

    def test_nested_repeat_indentation(self):
        text = serialize(parse("repeat 2 { repeat 3 { wait 1.0 } }"))
        assert "repeat 2 {\n  repeat 3 {\n    wait 1.0\n  }\n}\n" == text


class TestBuiltins:
    def test_phase_counts(self):
        assert builtin("triangle_crawl").phase_count() == 5
        assert builtin("square_crawl").phase_count() == 5
        assert builtin("inchworm").phase_count() == 3

    def test_unknown_gait(self):
        with pytest.raises(UnknownGait):
            builtin("nope")


def _fuzz_program(rng: random.Random, depth: int = 0) -> GaitProgram:
    members = ["m1", "m2", "arm", "m1.a", "m2.b"]
    nodes = ["a", "b", "tip"]

    def stmt(d):
        kinds = ["set", "wait_settle", "wait", "dock", "undock", "deact"]
        if d < 2:
            kinds += ["repeat", "parallel"]
        k = rng.choice(kinds)
        if k == "set":
            rate = round(rng.uniform(0.005, 0.05), 4) if rng.random() < 0.4 else None
            return SetLength(rng.choice(members), round(rng.uniform(0.1, 2.0), 4), rate)
        if k == "wait_settle":
            return WaitSettle(round(rng.uniform(1, 60), 2) if rng.random() < 0.5 else None)
        if k == "wait":
            return WaitTime(round(rng.uniform(0.1, 30), 3))
        if k == "dock":
            return Dock(rng.choice(nodes), rng.choice(nodes))
        if k == "undock":
            return Undock(rng.choice(nodes))
        if k == "deact":
            return DeactivateConnector(rng.choice(["m1", "m2", "arm"]),
                                       rng.choice(["a", "b"]))
        if k == "repeat":
            return Repeat(rng.randint(1, 5),
                          tuple(stmt(d + 1) for _ in range(rng.randint(1, 4))))
        # parallel with disjoint member sets: split the member pool
        pools = [["m1.a"], ["m2"], ["arm"]]
        blocks = []
        for pool in pools[:rng.randint(2, 3)]:
            inner = tuple(
                SetLength(pool[0], round(rng.uniform(0.1, 1.0), 3), None)
                for _ in range(rng.randint(1, 2)))
            blocks.append(inner + (WaitTime(round(rng.uniform(0.5, 5), 2)),))
        return Parallel(tuple(blocks))

    return GaitProgram(tuple(stmt(depth) for _ in range(rng.randint(1, 6))))


class TestFuzz:
    def test_parse_serialize_identity_on_200_programs(self):
        rng = random.Random(20260808)
        for i in range(200):
            prog = _fuzz_program(rng)
            text = serialize(prog)
            assert parse(text) == prog, f"fuzz case {i} failed"


class TestInvalidCorpus:
    def test_locations_match_manifest(self):
        manifest = json.loads((DATA / "manifest.json").read_text())
        assert len(manifest) == 20
        for name, meta in manifest.items():
            text = (DATA / f"{name}.gait").read_text()
            with pytest.raises(ParseError) as err:
                parse(text)
            assert err.value.line == meta["line"], name
            assert err.value.col == meta["col"], name
            assert err.value.expected == meta["expected"], name


class TestExecute:
    def _link_state(self):
        topo = build_topology(
            TRUSS_LINK, [Vec3(0, 0, 0.0005), Vec3(0.38, 0, 0.0005)], [(0, 1)],
            node_names=["ra", "rb"], member_names=["link"])
        return rest_state(topo)

    def test_empty_program_is_noop(self):
        state = self._link_state()
        out, rows = execute(GaitProgram(()), state, flat_env())
        assert out.time == state.time
        assert out.topology.node_ids() == state.topology.node_ids()

    def test_unknown_member_is_a_bind_error(self):
        with pytest.raises(BindError):
            execute(parse("set nope len 0.4\nwait 1.0"), self._link_state(),
                    flat_env())

    def test_unknown_node_is_a_bind_error(self):
        with pytest.raises(BindError):
            execute(parse("dock ra nope"), self._link_state(), flat_env())

    def test_wait_time_advances_clock(self):
        out, rows = execute(parse("wait 0.5"), self._link_state(), flat_env())
        assert out.time == pytest.approx(0.5, abs=0.01)
        assert len(rows) > 0

    def test_trajectories_are_deterministic(self):
        prog = parse("set link.b len 0.05\nwait 2.0\nset link.b len 0.0\nwait 2.0")
        rows = [execute(prog, self._link_state(), flat_env())[1]
                for _ in range(2)]
        assert rows[0] == rows[1]
