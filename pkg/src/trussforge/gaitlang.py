"""
trussforge.gaitlang
===================
A small DSL for open-loop gait and reconfiguration scripts.

Grammar::

    program  := stmt*
    stmt     := set | wait | dock | undock | deact | repeat | parallel
    set      := "set" IDENT "len" NUMBER ("rate" NUMBER)?
    wait     := "wait" ("settle" NUMBER? | NUMBER)
    dock     := "dock" IDENT IDENT
    undock   := "undock" IDENT
    deact    := "deactivate" IDENT ("a" | "b")
    repeat   := "repeat" INT "{" stmt* "}"
    parallel := "parallel" "{" ("{" stmt* "}")+ "}"

Comments run from "#" to end of line. Numbers are SI (meters, seconds,
m/s). IDENT may contain dots: ``set m1.a len 0.1`` addresses one servo of a
two-actuator member, ``set m1 len 0.45`` the whole member.

``set`` is non-blocking (it retargets and returns); motion happens during
subsequent waits. Parallel blocks must touch disjoint member sets and are
advanced in lockstep by simulated time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

from .core import TrussforgeError
from .mechanics import DockParams, Engine, SettleTimeout, SolverParams, trajectory_rows


DEFAULT_SETTLE_TIMEOUT = 30.0  # seconds of simulated time


class ParseError(TrussforgeError):
    def __init__(self, line: int, col: int, expected: str, found: str):
        super().__init__(f"{line}:{col}: expected {expected}, found {found}")
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class BindError(TrussforgeError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SetLength:
    member: str
    target: float
    rate: Optional[float] = None


@dataclass(frozen=True)
class WaitSettle:
    timeout: Optional[float] = None


@dataclass(frozen=True)
class WaitTime:
    seconds: float


@dataclass(frozen=True)
class Dock:
    node_a: str
    node_b: str


@dataclass(frozen=True)
class Undock:
    node: str


@dataclass(frozen=True)
class DeactivateConnector:
    member: str
    end: str


@dataclass(frozen=True)
class Repeat:
    count: int
    block: tuple


@dataclass(frozen=True)
class Parallel:
    blocks: tuple


Statement = Union[SetLength, WaitSettle, WaitTime, Dock, Undock,
                  DeactivateConnector, Repeat, Parallel]


@dataclass(frozen=True)
class GaitProgram:
    statements: tuple

    def phase_count(self) -> int:
        """Phases are wait statements in the cycle body: the top level of
        the outermost repeat when there is one, else of the program."""
        body = self.statements
        for st in self.statements:
            if isinstance(st, Repeat):
                body = st.block
                break
        return sum(isinstance(st, (WaitSettle, WaitTime)) for st in body)


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|"
    r"(?P<number>\d+(\.\d+)?([eE][+-]?\d+)?)|"
    r"(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|"
    r"(?P<lbrace>\{)|(?P<rbrace>\})|(?P<bad>.)"
)


@dataclass(frozen=True)
class _Token:
    kind: str   # IDENT NUMBER LBRACE RBRACE EOF
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        tok = m.group()
        if kind == "nl":
            line += 1
            col = 1
            continue
        if kind in ("ws", "comment"):
            col += len(tok)
            continue
        if kind == "bad":
            raise ParseError(line, col, "a token", repr(tok))
        tokens.append(_Token(kind.upper() if kind not in ("lbrace", "rbrace")
                             else ("LBRACE" if kind == "lbrace" else "RBRACE"),
                             tok, line, col))
        col += len(tok)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.toks = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.toks[self.i]

    def next(self) -> _Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, expected: str) -> ParseError:
        t = self.peek()
        found = t.text if t.kind != "EOF" else "end of input"
        return ParseError(t.line, t.col, expected, found)

    def expect_ident(self, what: str = "IDENT") -> _Token:
        t = self.peek()
        if t.kind != "IDENT":
            raise self.fail(what)
        return self.next()

    def expect_keyword(self, word: str) -> _Token:
        t = self.peek()
        if t.kind != "IDENT" or t.text != word:
            raise self.fail(f'"{word}"')
        return self.next()

    def expect_number(self) -> float:
        t = self.peek()
        if t.kind != "NUMBER":
            raise self.fail("NUMBER")
        self.next()
        return float(t.text)

    def expect_int(self) -> int:
        t = self.peek()
        if t.kind != "NUMBER" or not t.text.isdigit():
            raise self.fail("INT")
        self.next()
        return int(t.text)

    def expect_brace(self, kind: str):
        t = self.peek()
        if t.kind != kind:
            raise self.fail("{" if kind == "LBRACE" else "}")
        return self.next()

    def parse_program(self) -> GaitProgram:
        stmts = []
        while self.peek().kind != "EOF":
            stmts.append(self.parse_stmt())
        prog = GaitProgram(tuple(stmts))
        _check_parallel_disjoint(prog.statements, self)
        return prog

    def parse_block(self) -> tuple:
        self.expect_brace("LBRACE")
        stmts = []
        while self.peek().kind not in ("RBRACE", "EOF"):
            stmts.append(self.parse_stmt())
        self.expect_brace("RBRACE")
        return tuple(stmts)

    def parse_stmt(self) -> Statement:
        t = self.peek()
        if t.kind != "IDENT":
            raise self.fail("a statement keyword")
        word = t.text
        if word == "set":
            self.next()
            member = self.expect_ident("member label").text
            self.expect_keyword("len")
            target = self.expect_number()
            rate = None
            if self.peek().kind == "IDENT" and self.peek().text == "rate":
                self.next()
                rate = self.expect_number()
            return SetLength(member, target, rate)
        if word == "wait":
            self.next()
            nxt = self.peek()
            if nxt.kind == "IDENT" and nxt.text == "settle":
                self.next()
                timeout = None
                if self.peek().kind == "NUMBER":
                    timeout = self.expect_number()
                return WaitSettle(timeout)
            if nxt.kind == "NUMBER":
                return WaitTime(self.expect_number())
            raise self.fail('"settle" or NUMBER')
        if word == "dock":
            self.next()
            a = self.expect_ident("node label").text
            b = self.expect_ident("node label").text
            return Dock(a, b)
        if word == "undock":
            self.next()
            return Undock(self.expect_ident("node label").text)
        if word == "deactivate":
            self.next()
            member = self.expect_ident("member label").text
            endt = self.peek()
            if endt.kind != "IDENT" or endt.text not in ("a", "b"):
                raise self.fail('"a" or "b"')
            self.next()
            return DeactivateConnector(member, endt.text)
        if word == "repeat":
            tok = self.next()
            count = self.expect_int()
            if count < 1:
                raise ParseError(tok.line, tok.col, "count >= 1", str(count))
            return Repeat(count, self.parse_block())
        if word == "parallel":
            self.next()
            self.expect_brace("LBRACE")
            blocks = []
            while self.peek().kind == "LBRACE":
                blocks.append(self.parse_block())
            if not blocks:
                raise self.fail("{")
            self.expect_brace("RBRACE")
            return Parallel(tuple(blocks))
        raise self.fail("a statement keyword")


def _member_labels(stmts: Iterable[Statement]) -> set[str]:
    """Touched actuator resources: "m.a"/"m.b" are distinct; a bare member
    label claims both of its servos."""
    out: set[str] = set()
    for st in stmts:
        if isinstance(st, SetLength):
            if "." in st.member:
                out.add(st.member)
            else:
                out.add(st.member + ".a")
                out.add(st.member + ".b")
        elif isinstance(st, DeactivateConnector):
            out.add(st.member + "." + st.end)
        elif isinstance(st, Repeat):
            out |= _member_labels(st.block)
        elif isinstance(st, Parallel):
            for b in st.blocks:
                out |= _member_labels(b)
    return out


def _check_parallel_disjoint(stmts: Iterable[Statement], parser: Optional[_Parser]):
    for st in stmts:
        if isinstance(st, Repeat):
            _check_parallel_disjoint(st.block, parser)
        elif isinstance(st, Parallel):
            seen: set[str] = set()
            for b in st.blocks:
                labels = _member_labels(b)
                overlap = seen & labels
                if overlap:
                    raise BindError(
                        f"parallel blocks touch the same member(s): {sorted(overlap)}")
                seen |= labels
                _check_parallel_disjoint(b, parser)


def parse(text: str) -> GaitProgram:
    return _Parser(_tokenize(text)).parse_program()


# ---------------------------------------------------------------------------
# Serializer (canonical form)
# ---------------------------------------------------------------------------

def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return repr(float(x))
    return repr(float(x))


def _ser_stmt(st: Statement, indent: int, out: list[str]):
    pad = "  " * indent
    if isinstance(st, SetLength):
        line = f"{pad}set {st.member} len {_fmt_num(st.target)}"
        if st.rate is not None:
            line += f" rate {_fmt_num(st.rate)}"
        out.append(line)
    elif isinstance(st, WaitSettle):
        out.append(f"{pad}wait settle" +
                   (f" {_fmt_num(st.timeout)}" if st.timeout is not None else ""))
    elif isinstance(st, WaitTime):
        out.append(f"{pad}wait {_fmt_num(st.seconds)}")
    elif isinstance(st, Dock):
        out.append(f"{pad}dock {st.node_a} {st.node_b}")
    elif isinstance(st, Undock):
        out.append(f"{pad}undock {st.node}")
    elif isinstance(st, DeactivateConnector):
        out.append(f"{pad}deactivate {st.member} {st.end}")
    elif isinstance(st, Repeat):
        out.append(f"{pad}repeat {st.count} {{")
        for s in st.block:
            _ser_stmt(s, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(st, Parallel):
        out.append(f"{pad}parallel {{")
        for b in st.blocks:
            out.append(f"{pad}  {{")
            for s in b:
                _ser_stmt(s, indent + 2, out)
            out.append(f"{pad}  }}")
        out.append(f"{pad}}}")
    else:  # pragma: no cover
        raise TypeError(f"unknown statement {st!r}")


def serialize(program: GaitProgram) -> str:
    out: list[str] = []
    for st in program.statements:
        _ser_stmt(st, 0, out)
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------

def validate_bindings(program: GaitProgram, engine: Engine):
    """Check that every label resolves before any motion happens."""
    members = set(engine.member_ids)
    nodes = set(engine.node_ids)

    def walk(stmts):
        for st in stmts:
            if isinstance(st, SetLength):
                base = st.member.split(".")[0]
                if base not in members:
                    raise BindError(f"unknown member {st.member!r}")
                if "." in st.member:
                    end = st.member.rsplit(".", 1)[1]
                    if end not in ("a", "b"):
                        raise BindError(f"bad actuator address {st.member!r}")
            elif isinstance(st, DeactivateConnector):
                if st.member not in members:
                    raise BindError(f"unknown member {st.member!r}")
            elif isinstance(st, Dock):
                for nid in (st.node_a, st.node_b):
                    if nid not in nodes:
                        raise BindError(f"unknown node {nid!r}")
            elif isinstance(st, Undock):
                if st.node not in nodes:
                    raise BindError(f"unknown node {st.node!r}")
            elif isinstance(st, Repeat):
                walk(st.block)
            elif isinstance(st, Parallel):
                for b in st.blocks:
                    walk(b)

    walk(program.statements)


class _Task:
    """One executing block: a generator yielding wait requests."""

    __slots__ = ("gen", "req", "deadline", "parent", "pending_children", "done")

    def __init__(self, gen, parent):
        self.gen = gen
        self.req = None
        self.deadline = math.inf
        self.parent = parent
        self.pending_children = 0
        self.done = False


class GaitRunner:
    """Incremental interpreter: call ``advance_step`` once per engine step.

    Instant statements (set/dock/undock/deactivate) apply at step
    boundaries; waits suspend their block. Repeat iterations log
    ``cycle`` events so metrics can segment trajectories.
    """

    def __init__(self, program: GaitProgram, engine: Engine,
                 settle_timeout: float = DEFAULT_SETTLE_TIMEOUT,
                 dock_align_tol: Optional[float] = None,
                 dock_angle_tol: Optional[float] = None):
        validate_bindings(program, engine)
        self.engine = engine
        self.settle_timeout = settle_timeout
        self.dock_align_tol = dock_align_tol
        self.dock_angle_tol = dock_angle_tol
        self.tasks: list[_Task] = []
        root = _Task(self._gen_block(program.statements, top=True), None)
        self.tasks.append(root)
        self._quiet = 0
        self._pump_all()

    # -- generators -----------------------------------------------------------

    def _gen_block(self, stmts, top=False):
        eng = self.engine
        for st in stmts:
            if isinstance(st, SetLength):
                eng.set_length(st.member, st.target, st.rate)
            elif isinstance(st, WaitTime):
                yield ("time", eng.time + st.seconds)
            elif isinstance(st, WaitSettle):
                timeout = st.timeout if st.timeout is not None else self.settle_timeout
                yield ("settle", eng.time + timeout)
            elif isinstance(st, Dock):
                eng.dock(st.node_a, st.node_b,
                         align_tol=self.dock_align_tol,
                         angle_tol=self.dock_angle_tol)
            elif isinstance(st, Undock):
                eng.undock(st.node)
            elif isinstance(st, DeactivateConnector):
                eng.deactivate(st.member, st.end)
            elif isinstance(st, Repeat):
                for k in range(st.count):
                    yield from self._gen_block(st.block)
                    eng.log_event("cycle", {"index": k + 1, "of": st.count})
            elif isinstance(st, Parallel):
                yield ("spawn", st.blocks)
            else:  # pragma: no cover
                raise TypeError(f"unknown statement {st!r}")

    # -- scheduling -----------------------------------------------------------

    def _pump(self, task: _Task):
        """Advance one task until it blocks or finishes."""
        while True:
            try:
                req = next(task.gen)
            except StopIteration:
                task.done = True
                task.req = None
                parent = task.parent
                if parent is not None:
                    parent.pending_children -= 1
                    if parent.pending_children == 0:
                        self._pump(parent)
                return
            kind = req[0]
            if kind == "spawn":
                task.pending_children = len(req[1])
                task.req = ("join",)
                for block in req[1]:
                    child = _Task(self._gen_block(block), task)
                    self.tasks.append(child)
                    self._pump(child)
                if task.pending_children == 0:
                    continue
                return
            if kind == "time":
                task.req = ("time", req[1])
                return
            if kind == "settle":
                task.req = ("settle",)
                task.deadline = req[1]
                self._quiet = 0
                return
            raise TypeError(f"unknown request {req!r}")  # pragma: no cover

    def _pump_all(self):
        for task in list(self.tasks):
            if not task.done and task.req is None:
                self._pump(task)
        self.tasks = [t for t in self.tasks if not t.done]

    @property
    def done(self) -> bool:
        return not self.tasks

    def advance_step(self):
        """Step the engine once, then release any satisfied waits."""
        eng = self.engine
        eng.step_once()
        settled = (eng._max_speed_last < eng.params.settle_velocity_eps
                   and eng.lengths_settled())
        self._quiet = self._quiet + 1 if settled else 0
        changed = False
        for task in self.tasks:
            if task.done or task.req is None:
                continue
            kind = task.req[0]
            if kind == "time" and eng.time >= task.req[1] - 1e-12:
                task.req = None
                changed = True
            elif kind == "settle":
                if self._quiet >= eng.params.settle_consecutive:
                    task.req = None
                    task.deadline = math.inf
                    changed = True
                elif eng.time > task.deadline:
                    raise SettleTimeout(
                        f"gait wait settle unmet at t={eng.time:.2f}s "
                        f"(max speed {eng.max_speed():.2e})")
        if changed:
            for task in list(self.tasks):
                if not task.done and task.req is None:
                    self._pump(task)
            self.tasks = [t for t in self.tasks if not t.done]

    def run(self, on_step: Optional[Callable] = None, max_sim_time: float = 36000.0):
        start = self.engine.time
        while not self.done:
            self.advance_step()
            if on_step is not None:
                on_step(self.engine)
            if self.engine.time - start > max_sim_time:
                raise SettleTimeout("gait exceeded the maximum simulated duration")


def execute(program: GaitProgram, state, env, params: SolverParams = SolverParams(),
            hooks: Optional[dict] = None,
            dock_params: DockParams = DockParams(),
            trajectory_stride: int = 1):
    """Run a program against a state; returns (final state, trajectory rows).

    ``hooks``: optional {"on_step": fn(engine)} called after every step.
    Trajectory rows are sampled every ``trajectory_stride`` steps plus once
    at the end.
    """
    from .mechanics import _engine_from_state
    eng = _engine_from_state(state, env, params)
    eng.dock_params = dock_params
    rows: list[str] = []
    on_step_hook = (hooks or {}).get("on_step")

    def on_step(e: Engine):
        if e.step_count % trajectory_stride == 0:
            rows.extend(trajectory_rows(e))
        if on_step_hook is not None:
            on_step_hook(e)

    runner = GaitRunner(program, eng)
    runner.run(on_step=on_step)
    rows.extend(trajectory_rows(eng))
    return eng.to_state(), rows


# ---------------------------------------------------------------------------
# Built-in gait library
# ---------------------------------------------------------------------------

class UnknownGait(TrussforgeError):
    pass


# Labels follow the standard topology factories in trussforge.scenarios:
# the VTT triangle (members top_l, top_r, base), the single Truss Link
# (member "link"), and the flat tetrahedron patterns (fl, fr, lr, kl, kr /
# cf, cl, cr and "tail"). Setpoints are reconstructions: the published
# material gives phase structure, not servo targets.

_TRIANGLE_CRAWL = """\
# Five-phase differential-friction crawl of a triangle, forward = +y.
# The phase-4 retraction stops partway: finishing it together with the
# other two members keeps the per-cycle yaw small (calibrated against the
# published 8.3 cm/cycle travel and 1.5 cm/cycle drift).
repeat 20 {
  # 1. initial configuration
  set top_l len 1.5
  set top_r len 1.5
  set base len 1.5
  wait settle 45
  # 2. expand the front node out along the travel direction
  set top_l len 1.9
  set top_r len 1.9
  wait settle 45
  # 3. expand the member on the opposite side
  set base len 1.9
  wait settle 45
  # 4. retract one side
  set top_l len 1.75
  wait settle 45
  # 5. retract the remaining members back to the initial shape
  set top_l len 1.5
  set top_r len 1.5
  set base len 1.5
  wait settle 45
}
"""

_SQUARE_CRAWL = """\
# Five-phase square-configuration crawl, forward = +y.
repeat 20 {
  # 1. initial configuration
  set left len 1.5
  set right len 1.5
  set front len 1.5
  set rear len 1.5
  wait settle 45
  # 2. expand the leading edge upward (travel direction)
  set left len 1.9
  set right len 1.9
  wait settle 45
  # 3. relocate the middle of the square up
  set front len 1.9
  wait settle 45
  # 4. bring the side members up
  set left len 1.5
  set right len 1.5
  wait settle 45
  # 5. pull the rear edge up to the initial shape
  set front len 1.5
  set rear len 1.5
  wait settle 45
}
"""

_INCHWORM = """\
# Three-phase single-link inchworm, forward = +x (tip b leads).
repeat 8 {
  # 1. expand the front servo; the rear carries the body and sticks
  set link.b len 0.1
  wait settle 30
  # 2. contract the front servo while expanding the rear one
  parallel {
    {
      set link.b len 0.0
    }
    {
      set link.a len 0.1
    }
  }
  wait settle 30
  # 3. contract the rear servo, ready for the next cycle
  set link.a len 0.0
  wait settle 30
}
"""

_MOUND_CLIMB = """\
# Flat-pattern crawl toward the mound: the central vertex advances first,
# then the two middle vertices, then the trailing vertex, and finally the
# front vertex extends to restore the shape for the next cycle.
repeat 4 {
  # central vertex forward
  set cf len 0.9409
  set cl len 1.1041
  set cr len 1.1041
  wait settle 40
  # the two middle vertices on each side
  set cl len 1.0392
  set cr len 1.0392
  set fl len 1.6971
  set fr len 1.6971
  set lr len 1.8
  set tail len 1.9101
  wait settle 40
  # the trailing vertex
  set tail len 1.8
  wait settle 40
  # extend the front vertex, returning to the initial shape
  set cf len 1.0392
  set fl len 1.8
  set fr len 1.8
  wait settle 40
}
"""

_POPUP = """\
# Raise the central vertex into the tetrahedron apex by driving the three
# elevated members out against the base triangle.
undock r
set cf len 2.05
set cl len 2.05
set cr len 2.05
wait settle 120
"""

_STEP_FOLD = """\
# Fold the diamond-with-tail over the ledge against the obstacle, then
# retract the tail until it falls onto the front vertex and connects.
set kl len 0.46
set kr len 0.46
wait settle 30
set fl len 0.30
set fr len 0.30
wait settle 30
set kl len 0.35
set kr len 0.35
set lr len 0.30
wait settle 30
set tail len 0.28
wait settle 30
set fl len 0.35
set fr len 0.35
wait settle 30
"""

_SKYLIGHT_ASSIST = """\
# Fish for the rear vertex with the dangling ratchet link, lift it, hold
# while the links below gather into the base triangle, then detach.
set helper_ratchet len 0.48
wait settle 30
set helper_ratchet len 0.40
wait settle 30
set kl len 0.28
set kr len 0.28
set lr len 0.34
set tail len 0.28
wait settle 40
set fl len 0.28
set fr len 0.28
wait settle 60
deactivate helper_ratchet b
wait settle 30
set helper_ratchet len 0.30
wait settle 30
"""

BUILTIN_GAITS: dict[str, str] = {
    "triangle_crawl": _TRIANGLE_CRAWL,
    "square_crawl": _SQUARE_CRAWL,
    "inchworm": _INCHWORM,
    "mound_climb": _MOUND_CLIMB,
    "popup": _POPUP,
    "step_fold": _STEP_FOLD,
    "skylight_assist": _SKYLIGHT_ASSIST,
}


def register_builtin(name: str, text: str):
    BUILTIN_GAITS[name] = text


def builtin(name: str) -> GaitProgram:
    if name not in BUILTIN_GAITS:
        raise UnknownGait(f"unknown gait {name!r} (have {sorted(BUILTIN_GAITS)})")
    return parse(BUILTIN_GAITS[name])


def builtin_names() -> list[str]:
    return sorted(BUILTIN_GAITS)


def load_gait(path_or_name: str) -> GaitProgram:
    """CLI helper: "builtin:<name>" or a .gait file path."""
    if path_or_name.startswith("builtin:"):
        return builtin(path_or_name.split(":", 1)[1])
    with open(path_or_name, "r", encoding="utf-8") as fh:
        return parse(fh.read())
