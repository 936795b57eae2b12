"""
trussforge.scenarios
====================
The published experiments as scripted, metric-reporting simulations:

* crawl_flat       triangle crawling on flat ground, 20 cycles
* dock_flat        a triangle crawls to a docking port and latches
* mound_popup      flat pattern at the mound crest pops up 2D -> 3D
* step_tetra       diamond-with-tail folds into a tetrahedron over the step
* skylight_assist  a ratchet tetrahedron lifts a flat pattern into shape
* pit_octahedron   four planar robots dock and drop their core into a pit
* pit_tetra        a flat-spread tetrahedron squeezes its center into a pit

Each scenario is a declarative spec (environment, robot placements, gait
text, tolerances, success predicate). Runs are deterministic: identical
specs produce byte-identical reports and trajectories.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import core, environments, gaitlang, mechanics
from .core import (
    ShapeClass,
    Topology,
    TrussforgeError,
    Vec3,
    classify,
)
from .docking import mark_latched
from .environments import Environment, FeatureNotFound
from .gaitlang import GaitRunner, parse
from .mechanics import (
    DockParams,
    Engine,
    SolverParams,
    trajectory_rows,
)


class UnknownScenario(TrussforgeError):
    pass


class NoCycles(TrussforgeError):
    pass


# ---------------------------------------------------------------------------
# Topology factories (robot kinds referenced by scenario specs)
# ---------------------------------------------------------------------------

def _prefixed(topology: Topology, prefix: str) -> Topology:
    if not prefix:
        return topology
    nodes = {}
    for nid, nd in topology.nodes.items():
        nodes[prefix + nid] = replace(nd, id=prefix + nid)
    members = {}
    for mid, mem in topology.members.items():
        members[prefix + mid] = replace(
            mem, id=prefix + mid,
            end_a=prefix + mem.end_a, end_b=prefix + mem.end_b)
    return Topology(nodes, members, topology.allow_parallel_edges)


def _with_port(topology: Topology, node_id: str, axis: Vec3) -> Topology:
    nodes = dict(topology.nodes)
    nodes[node_id] = replace(nodes[node_id], port_axis=axis)
    return Topology(nodes, topology.members, topology.allow_parallel_edges)


def vtt_triangle(side: float = 1.5, prefix: str = "",
                 port_node: str = "", port_axis: tuple = (0.0, -1.0, 0.0)) -> Topology:
    """Triangle with front node "a" (+y) and base nodes "b", "c"."""
    h = math.sqrt(side * side - (side / 2) ** 2)
    topo = core.build_topology(
        core.VTT,
        [Vec3(-side / 2, 0, 0), Vec3(side / 2, 0, 0), Vec3(0, h, 0)],
        [(0, 2), (1, 2), (0, 1)],
        node_names=["b", "c", "a"],
        member_names=["top_l", "top_r", "base"],
    )
    if port_node:
        topo = _with_port(topo, port_node, Vec3(*port_axis))
    return _prefixed(topo, prefix)


def single_link(length: float = 0.38, prefix: str = "") -> Topology:
    """One Truss Link along +x; node "rb" is the leading tip."""
    topo = core.build_topology(
        core.TRUSS_LINK,
        [Vec3(0, 0, 0), Vec3(length, 0, 0)],
        [(0, 1)],
        node_names=["ra", "rb"],
        member_names=["link"],
    )
    return _prefixed(topo, prefix)


def flat6(scale: float = 0.35, prefix: str = "", tail_forward: bool = False,
          tail_len: float = 0.44, tail_side: float = -0.06) -> Topology:
    topo = core.flat_tetra_pattern(core.TRUSS_LINK, scale, "six_link")
    if tail_forward:
        # tail link folded about the rear joint so its tip lies alongside
        # the diamond (the free link pivots; this is a staging pose)
        h = scale * math.sqrt(3) / 2.0
        k = topo.nodes["k"].position
        ty = k.y + math.sqrt(max(tail_len ** 2 - tail_side ** 2, 0.0))
        topo = topo.with_positions({"t": Vec3(tail_side, ty, 0.0)})
    return _prefixed(topo, prefix)


def flat7(scale: float = 1.8, prefix: str = "") -> Topology:
    topo = core.flat_tetra_pattern(core.VTT, scale, "seven_link")
    # the tail joint is a latched dock so the pop-up script can release it
    topo = mark_latched(topo, "tail", "a")
    return _prefixed(topo, prefix)


def flat_k4(side: float = 1.8, prefix: str = "") -> Topology:
    """Flat tetrahedron pattern without the tail: C inside triangle F-L-R."""
    r = side / math.sqrt(3)
    topo = core.build_topology(
        core.VTT,
        [Vec3(0, 0, 0), Vec3(0, r, 0), Vec3(-side / 2, -r / 2, 0),
         Vec3(side / 2, -r / 2, 0)],
        [(2, 1), (3, 1), (2, 3), (0, 1), (2, 0), (3, 0)],
        node_names=["c", "f", "l", "r"],
        member_names=["fl", "fr", "lr", "cf", "cl", "cr"],
    )
    return _prefixed(topo, prefix)


def ratchet_tetra(edge: float = 0.30, prefix: str = "") -> Topology:
    """3D tetrahedron with a pendant ratchet link hanging off the apex."""
    r = edge / math.sqrt(3)
    apex_z = math.sqrt(edge * edge - r * r)
    angs = [math.pi / 2, math.pi / 2 + 2 * math.pi / 3, math.pi / 2 + 4 * math.pi / 3]
    base = [Vec3(r * math.cos(a), r * math.sin(a), 0.0) for a in angs]
    apex = Vec3(0.0, 0.0, apex_z)
    hook = Vec3(0.0, 0.0, apex_z - edge * 0.95)  # pendant dangling at rest
    topo = core.build_topology(
        core.TRUSS_LINK,
        base + [apex, hook],
        [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3), (3, 4)],
        node_names=["g1", "g2", "g3", "apex", "hook"],
        member_names=["b12", "b23", "b31", "u1", "u2", "u3", "ratchet"],
    )
    return _prefixed(topo, prefix)


def octa_core(spoke: float = 1.0, prefix: str = "") -> Topology:
    """Inner triangle of the flat octahedron. Two of its struts are doubled
    (the extra pair that brings the four-robot assembly to 14 members)."""
    r_in = spoke / math.sqrt(3)  # inner triangle circumradius for side=spoke
    # each inner node faces away from its antipodal outer vertex (it sits
    # at the midpoint of the opposite outer edge in the flat layout)
    a = Vec3(r_in * math.cos(math.radians(270)), r_in * math.sin(math.radians(270)), 0)
    b = Vec3(r_in * math.cos(math.radians(30)), r_in * math.sin(math.radians(30)), 0)
    c = Vec3(r_in * math.cos(math.radians(150)), r_in * math.sin(math.radians(150)), 0)
    topo = core.build_topology(
        core.VTT,
        [a, b, c],
        [(0, 1), (1, 2), (2, 0), (1, 0), (2, 1)],
        node_names=["a", "b", "c"],
        member_names=["ab", "bc", "ca", "ab2", "bc2"],
        allow_parallel_edges=True,
    )
    return _prefixed(topo, prefix)


def collinear_triangle(span: float = 2.0, prefix: str = "") -> Topology:
    """Outer-edge unit of the flat octahedron: a fully squashed triangle
    (two half-length struts plus the full edge, all collinear)."""
    topo = core.build_topology(
        core.VTT,
        [Vec3(-span / 2, 0, 0), Vec3(span / 2, 0, 0), Vec3(0, 0, 0)],
        [(0, 1), (0, 2), (1, 2)],
        node_names=["p", "q", "m"],
        member_names=["edge", "half_p", "half_q"],
    )
    return _prefixed(topo, prefix)


def step_fold_stage(prefix: str = "") -> Topology:
    """Diamond-with-tail late in the step fold: the diamond has descended
    past the ledge, its rear tip leans on the obstacle, and only the tail
    link still touches the upper surface."""
    pos = [
        Vec3(0.125, 0.0, 0.0),     # f, folded down past the step base
        Vec3(0.42, 0.23, 0.0),     # l, descended past the ledge
        Vec3(0.42, -0.23, 0.0),    # r
        Vec3(0.28, 0.0, 0.2505),   # k, perched on the obstacle
        Vec3(-0.05, 0.0, 0.30),    # t, still on the upper surface
    ]
    names = ["f", "l", "r", "k", "t"]
    edges = [(1, 0), (2, 0), (1, 2), (1, 3), (2, 3), (3, 4)]
    member_names = ["fl", "fr", "lr", "kl", "kr", "tail"]
    topo = core.build_topology(core.TRUSS_LINK, pos, edges, names, member_names)
    return _prefixed(topo, prefix)


ROBOT_KINDS: dict[str, Callable[..., Topology]] = {
    "step_fold_stage": step_fold_stage,
    "vtt_triangle": vtt_triangle,
    "single_link": single_link,
    "flat6": flat6,
    "flat7": flat7,
    "flat_k4": flat_k4,
    "ratchet_tetra": ratchet_tetra,
    "octa_core": octa_core,
    "collinear_triangle": collinear_triangle,
}


@dataclass(frozen=True)
class Placement:
    kind: str
    prefix: str = ""
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0
    drape_hi: Optional[float] = None  # per-robot drape probe start
    no_drape: bool = False            # 3D robots are placed, not draped
    kwargs: dict = field(default_factory=dict)

    def build(self) -> Topology:
        topo = ROBOT_KINDS[self.kind](prefix=self.prefix, **self.kwargs)
        return topo.transformed(self.yaw, Vec3(self.x, self.y, self.z))


def combine(topologies: list[Topology]) -> Topology:
    nodes: dict = {}
    members: dict = {}
    for t in topologies:
        overlap = nodes.keys() & t.nodes.keys()
        if overlap:
            raise ValueError(f"node id collision across robots: {sorted(overlap)}")
        nodes.update(t.nodes)
        members.update(t.members)
    return Topology(nodes, members, allow_parallel_edges=True)


def _drape(topo: Topology, env: Environment, clearance: float = 0.0005,
           ceiling: float = 3.0, ceilings_by_prefix: Optional[dict] = None,
           skip_prefixes: tuple = ()) -> Topology:
    """Raise each node onto its local support surface. Robots that are
    placed in 3D (skip_prefixes) keep their explicit pose."""
    pos = {}
    for nid in topo.node_ids():
        if any(nid.startswith(pref) for pref in skip_prefixes if pref):
            continue
        p = topo.nodes[nid].position
        hi = ceiling
        if ceilings_by_prefix:
            for pref, h in ceilings_by_prefix.items():
                if pref and nid.startswith(pref):
                    hi = h
                    break
                if pref == "" and "_" not in nid:
                    hi = h
                    break
        ground = environments.support_height(env, p.x, p.y, hi=hi)
        pos[nid] = Vec3(p.x, p.y, max(p.z, ground + clearance))
    return topo.with_positions(pos)


# ---------------------------------------------------------------------------
# Spec and report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    description: str
    env_name: str
    robots: tuple
    gait_text: str
    env_kwargs: dict = field(default_factory=dict)
    params: SolverParams = SolverParams()
    dock_params: DockParams = DockParams()
    success: str = "always"
    heading: tuple = (0.0, 1.0)
    export_stride: int = 25
    drop_height: float = 0.0005
    strut_length: float = 1.5
    removable: tuple = ()
    drape: bool = True
    env_override: Optional[Environment] = None  # set by negative_control only

    def environment(self) -> Environment:
        if self.env_override is not None:
            return self.env_override
        return environments.builtin_env(self.env_name, **self.env_kwargs)

    def build_topology(self) -> Topology:
        return combine([p.build() for p in self.robots])

    def drape_ceilings(self) -> dict:
        return {p.prefix: p.drape_hi for p in self.robots if p.drape_hi is not None}

    def drape_skips(self) -> tuple:
        return tuple(p.prefix for p in self.robots if p.no_drape)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "env": {"name": self.env_name, "kwargs": self.env_kwargs},
            "robots": [
                {"kind": p.kind, "prefix": p.prefix, "x": p.x, "y": p.y,
                 "z": p.z, "yaw": p.yaw, "drape_hi": p.drape_hi,
                 "kwargs": p.kwargs}
                for p in self.robots
            ],
            "gait": self.gait_text,
            "params": {
                "dt": self.params.dt,
                "damping": self.params.damping,
                "contact_stiffness": self.params.contact_stiffness,
                "settle_velocity_eps": self.params.settle_velocity_eps,
                "settle_timeout": self.params.settle_timeout,
                "actuator_stiffness": self.params.actuator_stiffness,
            },
            "dock": {
                "proximity_radius": self.dock_params.proximity_radius,
                "align_tol": self.dock_params.align_tol,
                "angle_tol": self.dock_params.angle_tol,
            },
            "success": self.success,
            "heading": list(self.heading),
            "export_stride": self.export_stride,
            "strut_length": self.strut_length,
            "removable": list(self.removable),
        }


def spec_from_dict(data: dict) -> ScenarioSpec:
    params = data.get("params", {})
    dock = data.get("dock", {})
    return ScenarioSpec(
        name=data["name"],
        description=data.get("description", ""),
        env_name=data["env"]["name"],
        env_kwargs=data["env"].get("kwargs", {}),
        robots=tuple(Placement(**r) for r in data["robots"]),
        gait_text=data["gait"],
        params=SolverParams(**params),
        dock_params=DockParams(**dock),
        success=data.get("success", "always"),
        heading=tuple(data.get("heading", (0.0, 1.0))),
        export_stride=data.get("export_stride", 25),
        strut_length=data.get("strut_length", 1.5),
        removable=tuple(data.get("removable", ())),
    )


@dataclass(frozen=True)
class ScenarioReport:
    scenario: str
    success: bool
    metrics: dict
    events: tuple
    trajectory: tuple
    cause: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "success": self.success,
            "metrics": self.metrics,
            "events": [[e.time, e.kind, e.data] for e in self.events],
            "cause": self.cause,
        }


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def metrics_displacement(com_trace: list, heading: tuple) -> tuple[float, float]:
    """Mean forward progress along the heading and mean |perpendicular|
    drift per cycle, from COM positions at cycle boundaries."""
    if len(com_trace) < 2:
        raise NoCycles("need at least one completed cycle")
    hx, hy = heading
    norm = math.hypot(hx, hy)
    hx, hy = hx / norm, hy / norm
    fwd = []
    lat = []
    for (x0, y0), (x1, y1) in zip(com_trace, com_trace[1:]):
        dx, dy = x1 - x0, y1 - y0
        fwd.append(dx * hx + dy * hy)
        lat.append(abs(-dx * hy + dy * hx))
    return (sum(fwd) / len(fwd), sum(lat) / len(lat))


def largest_component(topology: Topology) -> frozenset:
    comps = topology.components()
    return max(comps, key=lambda c: (len(topology.member_ids_in(c)), sorted(c)[0]))


def shape_of_largest(topology: Topology) -> ShapeClass:
    return classify(topology.subgraph(largest_component(topology)))


def apex_height(topology: Topology, component: Optional[frozenset] = None) -> float:
    comp = component or largest_component(topology)
    return max(topology.nodes[n].position.z for n in comp)


# ---------------------------------------------------------------------------
# Success predicates
# ---------------------------------------------------------------------------

def _crawl_success(ctx: dict) -> bool:
    m = ctx["metrics"]
    dpc = m.get("displacement_per_cycle")
    drift = m.get("lateral_drift")
    if dpc is None or drift is None:
        return False
    return 0.083 * 0.7 <= dpc <= 0.083 * 1.3 and drift <= 0.03


def _dock_success(ctx: dict) -> bool:
    topo = ctx["state"].topology
    latched = any(e.kind == "latch" for e in ctx["events"])
    return latched and len(topo.components()) == 1


def _popup_success(ctx: dict) -> bool:
    m = ctx["metrics"]
    return (m["final_shape"] == ShapeClass.TETRAHEDRON.value
            and m["apex_height"] > 0.5 * ctx["spec"].strut_length)


def _step_success(ctx: dict) -> bool:
    topo = ctx["state"].topology
    comp = largest_component(topo)
    sub = topo.subgraph(comp)
    attached = any(e.kind == "attach" for e in ctx["events"])
    return (classify(sub) == ShapeClass.TETRAHEDRON
            and len(sub.nodes) == 4 and len(sub.members) == 6 and attached)


def _skylight_success(ctx: dict) -> bool:
    topo = ctx["state"].topology
    comps = topo.components()
    if len(comps) != 2:
        return False
    shapes = {}
    for comp in comps:
        sub = topo.subgraph(comp)
        shapes[len(sub.members)] = classify(sub)
    detach_after = any(e.kind == "detach" for e in ctx["events"])
    return (shapes.get(7) == ShapeClass.RATCHET_TETRAHEDRON
            and shapes.get(6) == ShapeClass.TETRAHEDRON and detach_after)


def _pit_octa_success(ctx: dict) -> bool:
    topo = ctx["state"].topology
    comps = topo.components()
    if len(comps) != 1:
        return False
    m = ctx["metrics"]
    return (len(topo.members) == 14
            and m["final_shape"] == ShapeClass.OCTAHEDRON.value
            and ShapeClass.FLATTENED_OCTAHEDRON.value in m.get("shape_timeline", []))


def _pit_tetra_success(ctx: dict) -> bool:
    m = ctx["metrics"]
    topo = ctx["state"].topology
    low = min(topo.nodes[n].position.z for n in largest_component(topo))
    return m["final_shape"] == ShapeClass.TETRAHEDRON.value and low < -0.10


SUCCESS_PREDICATES: dict[str, Callable[[dict], bool]] = {
    "always": lambda ctx: True,
    "crawl": _crawl_success,
    "dock": _dock_success,
    "popup": _popup_success,
    "step_fold": _step_success,
    "skylight": _skylight_success,
    "pit_octahedron": _pit_octa_success,
    "pit_tetra": _pit_tetra_success,
}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def run(spec: ScenarioSpec, out_dir: Optional[str] = None) -> ScenarioReport:
    """Execute a scenario deterministically and evaluate its predicate."""
    env = spec.environment()
    topo = spec.build_topology()
    if spec.drape:
        topo = _drape(topo, env, clearance=spec.drop_height,
                      ceilings_by_prefix=spec.drape_ceilings(),
                      skip_prefixes=spec.drape_skips())
    engine = Engine(topo, env, spec.params, dock_params=spec.dock_params)

    rows: list[str] = []
    com_trace: list = []
    shape_timeline: list[str] = []
    events_seen = 0
    cause = None

    def largest_comp_index() -> int:
        counts = [0] * engine.n_components
        for j in range(engine.n_members):
            counts[engine.component_of_node[engine.m_ia[j]]] += 1
        return max(range(engine.n_components), key=lambda i: (counts[i], -i))

    def snapshot_com():
        c = engine.com_of_component(largest_comp_index())
        com_trace.append((c.x, c.y))

    try:
        engine.run_until_settled(timeout=spec.params.settle_timeout)
        snapshot_com()
        shape_timeline.append(shape_of_largest(engine.topology).value)
        events_seen = len(engine.events)
        runner = GaitRunner(parse(spec.gait_text), engine,
                            dock_align_tol=spec.dock_params.align_tol,
                            dock_angle_tol=spec.dock_params.angle_tol)
        while not runner.done:
            runner.advance_step()
            if engine.step_count % spec.export_stride == 0:
                rows.extend(trajectory_rows(engine))
            new_events = engine.events[events_seen:]
            if new_events:
                for ev in new_events:
                    if ev.kind == "cycle":
                        snapshot_com()
                    elif ev.kind in ("attach", "latch", "detach"):
                        shape_timeline.append(
                            shape_of_largest(engine.topology).value)
                events_seen = len(engine.events)
    except TrussforgeError as exc:
        cause = f"{type(exc).__name__}: {exc}"
    rows.extend(trajectory_rows(engine))

    state = engine.to_state()
    topo2 = state.topology
    comp = largest_component(topo2)
    final_shape = classify(topo2.subgraph(comp))
    shape_timeline.append(final_shape.value)
    metrics: dict = {
        "sim_time": state.time,
        "final_shape": final_shape.value,
        "apex_height": apex_height(topo2, comp),
        "components": len(topo2.components()),
        "member_count": len(topo2.members),
        "largest_component_members": len(topo2.member_ids_in(comp)),
        "shape_timeline": shape_timeline,
    }
    cycles = max(0, len(com_trace) - 1)
    metrics["cycles"] = cycles
    if cycles >= 1:
        dpc, drift = metrics_displacement(com_trace, spec.heading)
        metrics["displacement_per_cycle"] = dpc
        metrics["lateral_drift"] = drift
        hx, hy = spec.heading
        norm = math.hypot(hx, hy)
        metrics["cycle_displacements"] = [
            ((x1 - x0) * hx + (y1 - y0) * hy) / norm
            for (x0, y0), (x1, y1) in zip(com_trace, com_trace[1:])
        ]

    ctx = {"state": state, "events": state.event_log, "metrics": metrics,
           "spec": spec}
    success = False if cause is not None else SUCCESS_PREDICATES[spec.success](ctx)
    report = ScenarioReport(
        scenario=spec.name,
        success=success,
        metrics=metrics,
        events=state.event_log,
        trajectory=tuple(rows),
        cause=cause,
    )
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"{spec.name}.report.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, default=str)
        mechanics.write_trajectory_csv(
            os.path.join(out_dir, f"{spec.name}.trajectory.csv"), rows)
    return report


def negative_control(spec: ScenarioSpec, feature_removed: str) -> ScenarioReport:
    """Re-run the scenario with one environment feature deleted, to show
    that success depends on it."""
    env = spec.environment()
    if feature_removed not in env.feature_labels():
        raise FeatureNotFound(
            f"scenario {spec.name} has no feature {feature_removed!r}")
    control = replace(
        spec,
        name=f"{spec.name}-no-{feature_removed}",
        env_override=env.without_feature(feature_removed),
    )
    return run(control)


# ---------------------------------------------------------------------------
# Catalog: crawl_flat
# ---------------------------------------------------------------------------

def _crawl_flat_spec() -> ScenarioSpec:
    return ScenarioSpec(
        name="crawl_flat",
        description="Triangle crawls on flat carpet for 20 cycles; forward "
                    "travel and perpendicular drift are measured per cycle.",
        env_name="flat",
        robots=(Placement("vtt_triangle", kwargs={"side": 1.5}),),
        gait_text=gaitlang.BUILTIN_GAITS["triangle_crawl"],
        success="crawl",
        heading=(0.0, 1.0),
        export_stride=50,
        strut_length=1.5,
    )


# ---------------------------------------------------------------------------
# Catalog: dock_flat
# ---------------------------------------------------------------------------

_DOCK_GAP = 0.125          # tip-to-port gap left after the staged crawl
_DOCK_CRAWL_CYCLES = 2

_DOCK_FLAT_GAIT = """\
# crawl toward the target port, then close the last stretch by reaching
# with the two front members and latch
repeat 2 {
  set top_l len 1.5
  set top_r len 1.5
  set base len 1.5
  wait settle 45
  set top_l len 1.9
  set top_r len 1.9
  wait settle 45
  set base len 1.9
  wait settle 45
  set top_l len 1.75
  wait settle 45
  set top_l len 1.5
  set top_r len 1.5
  set base len 1.5
  wait settle 45
}
set top_l len 1.56
set top_r len 1.56
wait settle 30
dock a tgt_a
wait settle 20
"""


def _dock_flat_spec() -> ScenarioSpec:
    # crawler apex starts at y=1.3 and advances ~0.065 per cycle; the reach
    # phase then extends the front members to put the tip onto the port
    h = math.sqrt(1.5 ** 2 - 0.75 ** 2)
    port_apex_y = h + _DOCK_CRAWL_CYCLES * 0.0653 + _DOCK_GAP
    return ScenarioSpec(
        name="dock_flat",
        description="One triangle crawls to the docking port of another and "
                    "locks its front connector into it.",
        env_name="flat",
        robots=(
            Placement("vtt_triangle", kwargs={"side": 1.5}),
            # rotated half a turn, so its apex (the port) faces the crawler
            Placement("vtt_triangle", prefix="tgt_", y=port_apex_y + h,
                      yaw=math.pi,
                      kwargs={"side": 1.5, "port_node": "a",
                              "port_axis": (0.0, 1.0, 0.0)}),
        ),
        gait_text=_DOCK_FLAT_GAIT,
        dock_params=DockParams(align_tol=0.12, angle_tol=math.pi),
        success="dock",
        heading=(0.0, 1.0),
        export_stride=50,
        strut_length=1.5,
    )


# ---------------------------------------------------------------------------
# Catalog: mound_popup
# ---------------------------------------------------------------------------

MOUND_START_X = 0.70     # central vertex starts on the box, at the moment
                         # it crests the edge; the ramp is how it got there
MOUND_BOX_W = 1.6
MOUND_BOX_D = 1.2

_MOUND_SCENARIO_GAIT = """\
# One positioning cycle at the mound crest (the central vertex is already
# over the box), then release the trailing link and pop the apex up.
set fl len 2.12
set fr len 2.12
wait settle 50
set lr len 2.12
wait settle 50
set fl len 1.96
wait settle 50
set fl len 1.8
set fr len 1.8
set lr len 1.8
wait settle 50
undock r
set cf len 2.05
set cl len 2.05
set cr len 2.05
wait settle 120
"""


def _mound_popup_spec() -> ScenarioSpec:
    return ScenarioSpec(
        name="mound_popup",
        description="Seven-link flat pattern positioned at the mound crest "
                    "pops its elevated central vertex out of the planar "
                    "singularity into a tetrahedron apex.",
        env_name="mound",
        env_kwargs={"box_w": MOUND_BOX_W, "box_d": MOUND_BOX_D},
        robots=(Placement("flat7", yaw=-math.pi / 2, x=MOUND_START_X,
                          kwargs={"scale": 1.8}),),
        gait_text=_MOUND_SCENARIO_GAIT,
        success="popup",
        heading=(1.0, 0.0),
        export_stride=25,
        strut_length=1.8,
        removable=("mound", "ramp"),
    )


# ---------------------------------------------------------------------------
# Catalog: pit_tetra
# ---------------------------------------------------------------------------

_PIT_TETRA_GAIT = """\
# squeeze the central node down into the pit by contracting the outer
# triangle, then firm up the hanging form
set fl len 1.55
set fr len 1.55
set lr len 1.55
wait settle 60
set cf len 1.18
set cl len 1.18
set cr len 1.18
wait settle 60
"""


def _pit_tetra_spec() -> ScenarioSpec:
    return ScenarioSpec(
        name="pit_tetra",
        description="Flat tetrahedron pattern over a pit: contracting the "
                    "outer triangle forces the central vertex down through "
                    "the opening, breaking the planar singularity.",
        env_name="pit",
        env_kwargs={"depth": 0.35, "opening": environments.square_polygon(0.9)},
        robots=(Placement("flat_k4", kwargs={"side": 1.8}),),
        gait_text=_PIT_TETRA_GAIT,
        success="pit_tetra",
        export_stride=25,
        strut_length=1.8,
        removable=("pit",),
    )


# ---------------------------------------------------------------------------
# Catalog: pit_octahedron
# ---------------------------------------------------------------------------

_OCTA_SPOKE = 1.0        # spoke and inner-triangle strut length
_OCTA_EDGE = 2.0         # outer triangle edge

_PIT_OCTA_GAIT = """\
# four planar robots fuse into the 14-member flattened octahedron, then
# contract the inner triangle and outer ring together: the only consistent
# shape pushes the inner triangle out of plane, and the pit says "down"
dock t1_m core_c
wait settle 10
dock t2_m core_a
wait settle 10
dock t3_m core_b
wait settle 10
dock t2_p t1_q
wait settle 10
dock t3_p t2_q
wait settle 10
dock t1_p t3_q
wait settle 15
set core_ab len 0.943
set core_bc len 0.943
set core_ca len 0.943
set core_ab2 len 0.943
set core_bc2 len 0.943
set t1_edge len 1.94
set t2_edge len 1.94
set t3_edge len 1.94
wait settle 60
set t1_edge len 1.82
set t2_edge len 1.82
set t3_edge len 1.82
wait settle 90
"""


def octa_pit_opening() -> tuple:
    """Pit opening for the octahedron drop: support tongues under the three
    inner nodes (they must start on solid ground) and lobes where the
    members' sliding pads swing, so the pads cannot bridge the rim."""
    pts = []
    for tn in (30, 150, 270):
        for da, r in ((-20, 0.585), (0, 0.56), (20, 0.585), (45, 0.95), (75, 0.95)):
            a = math.radians(tn + da)
            pts.append((r * math.cos(a), r * math.sin(a)))
    pts.sort(key=lambda p: math.atan2(p[1], p[0]))
    return tuple(pts)


def _pit_octa_spec() -> ScenarioSpec:
    R = _OCTA_EDGE / math.sqrt(3)       # outer circumradius
    placements = [Placement("octa_core", prefix="core_",
                            kwargs={"spoke": _OCTA_SPOKE})]
    vert = {
        "A": (R * math.cos(math.radians(90)), R * math.sin(math.radians(90))),
        "B": (R * math.cos(math.radians(210)), R * math.sin(math.radians(210))),
        "C": (R * math.cos(math.radians(330)), R * math.sin(math.radians(330))),
    }
    pairs = [("t1_", "A", "B"), ("t2_", "B", "C"), ("t3_", "C", "A")]
    for prefix, u, v in pairs:
        ux, uy = vert[u]
        vx, vy = vert[v]
        cx, cy = (ux + vx) / 2, (uy + vy) / 2
        yaw = math.atan2(vy - uy, vx - ux)
        placements.append(Placement("collinear_triangle", prefix=prefix,
                                    x=cx, y=cy, yaw=yaw,
                                    kwargs={"span": _OCTA_EDGE}))
    return ScenarioSpec(
        name="pit_octahedron",
        description="Fourteen members in four planar robots dock into a "
                    "flattened octahedron whose inner triangle then drops "
                    "into the pit, forming the 3D octahedron.",
        env_name="pit",
        env_kwargs={"depth": 0.35, "opening": octa_pit_opening()},
        robots=tuple(placements),
        gait_text=_PIT_OCTA_GAIT,
        dock_params=DockParams(align_tol=0.06, angle_tol=math.pi),
        success="pit_octahedron",
        export_stride=25,
        strut_length=_OCTA_SPOKE,
        removable=("pit",),
    )


# ---------------------------------------------------------------------------
# Catalog: step_tetra
# ---------------------------------------------------------------------------

_STEP_TETRA_GAIT = """\
# The diamond has folded over the ledge and its rear tip rests on the
# obstacle; reel the tail in until it tips over the edge, swings down the
# step face and lands on the front vertex, closing the tetrahedron.
wait 6
set tail len 0.28 rate 0.005
wait 40
set tail len 0.29
wait 10
"""


def _step_tetra_spec() -> ScenarioSpec:
    return ScenarioSpec(
        name="step_tetra",
        description="Diamond-with-tail folded over the step leans on the "
                    "obstacle while the retracting tail link drops off the "
                    "ledge onto the front vertex, forming a tetrahedron.",
        env_name="step",
        robots=(Placement("step_fold_stage", no_drape=True, z=0.0005),),
        gait_text=_STEP_TETRA_GAIT,
        params=SolverParams(actuator_stiffness=800.0),
        dock_params=DockParams(proximity_radius=0.04),
        success="step_fold",
        heading=(1.0, 0.0),
        export_stride=25,
        strut_length=0.35,
        removable=("obstacle",),
    )


# ---------------------------------------------------------------------------
# Catalog: skylight_assist
# ---------------------------------------------------------------------------

_SKYLIGHT_GAIT = """\
# Fish for the rear vertex with the dangling ratchet link, lift it, and
# hold while the links below gather into the tetrahedron around it; the
# tail link closes onto the front vertex, then the helper lets go.
set tail len 0.45
set helper_ratchet len 0.465
wait 14
set helper_ratchet len 0.38 rate 0.01
wait 12
set kl len 0.31
set kr len 0.31
set lr len 0.34
set fl len 0.42
set fr len 0.42
wait 10
set kl len 0.28
set kr len 0.28
set fl len 0.449
set fr len 0.449
set tail len 0.48
wait 10
set fl len 0.28
set fr len 0.28
wait 16
set tail len 0.43
wait 10
deactivate helper_ratchet b
wait 5
set helper_ratchet len 0.3
wait 10
"""


def _skylight_spec() -> ScenarioSpec:
    return ScenarioSpec(
        name="skylight_assist",
        description="A ratchet tetrahedron on the roof fishes through the "
                    "skylight, lifts the flat pattern's rear vertex and "
                    "holds it while the pattern folds into a tetrahedron.",
        env_name="skylight",
        robots=(
            # diamond-with-tail under the skylight, rear tip at the cutout
            # center, tail link staged folded forward alongside the body
            Placement("flat6", yaw=-math.pi / 2, x=0.303, drape_hi=0.2,
                      kwargs={"scale": 0.35, "tail_forward": True,
                              "tail_side": -0.01}),
            Placement("ratchet_tetra", prefix="helper_", z=0.2505,
                      no_drape=True, kwargs={"edge": 0.30}),
        ),
        gait_text=_SKYLIGHT_GAIT,
        env_kwargs={"slope": math.radians(10),
                    "cutout": environments.teardrop_polygon(r=0.12)},
        params=SolverParams(actuator_stiffness=800.0),
        dock_params=DockParams(proximity_radius=0.035),
        success="skylight",
        heading=(1.0, 0.0),
        export_stride=25,
        strut_length=0.35,
        removable=("ceiling",),
    )


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_BUILDERS: dict[str, Callable[[], ScenarioSpec]] = {
    "crawl_flat": _crawl_flat_spec,
    "dock_flat": _dock_flat_spec,
    "mound_popup": _mound_popup_spec,
    "step_tetra": _step_tetra_spec,
    "skylight_assist": _skylight_spec,
    "pit_octahedron": _pit_octa_spec,
    "pit_tetra": _pit_tetra_spec,
}


def builtin_scenarios() -> list[str]:
    return sorted(_BUILDERS)


def get_scenario(name: str) -> ScenarioSpec:
    if name not in _BUILDERS:
        raise UnknownScenario(f"unknown scenario {name!r} (have {builtin_scenarios()})")
    return _BUILDERS[name]()
