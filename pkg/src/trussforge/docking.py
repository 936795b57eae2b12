"""
trussforge.docking
==================
Connector state machines and the topology rewiring they drive.

Magnetic (free-form) connectors greedily merge any active tips within a
proximity radius into one shared node, separate when the member tension
exceeds the published pull-apart force, and can be deactivated (magnet
retracted) which both detaches and disarms them.

Mechanical connectors follow the align / insert / latch sequence: a dock
attempt succeeds only when the insert tip is within the position tolerance
of the port and the member axis is within the angle tolerance of the port
axis. Latched joints are permanent until explicitly undocked and never
separate under load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .core import (
    DockPhase,
    Topology,
    TrussforgeError,
    Vec3,
    merge_nodes,
    split_node,
)
from .mechanics import DockParams, QuasiStaticState, SimEvent


class DockRefused(TrussforgeError):
    pass


class NotLatched(TrussforgeError):
    pass


class ReactivateWhileContracted(TrussforgeError):
    pass


@dataclass(frozen=True)
class MagneticConnectorState:
    active: bool
    attached_to: Optional[str]   # shared node id when attached


@dataclass(frozen=True)
class MechanicalDockState:
    phase: DockPhase


def connector_state(topology: Topology, member_id: str, end: str):
    """Inspect one member end's connector."""
    mem = topology.members[member_id]
    node = mem.end_a if end == "a" else mem.end_b
    active = mem.connector_active_a if end == "a" else mem.connector_active_b
    phase = mem.dock_phase_a if end == "a" else mem.dock_phase_b
    if mem.spec.connector_separation_force is not None:
        attached = topology.degree(node) > 1
        return MagneticConnectorState(active=active, attached_to=node if attached else None)
    return MechanicalDockState(phase=phase)


def _set_end_field(topology: Topology, member_id: str, end: str, **fields) -> Topology:
    mem = topology.members[member_id]
    suffixed = {f"{k}_{end}": v for k, v in fields.items()}
    members = dict(topology.members)
    members[member_id] = replace(mem, **suffixed)
    return Topology(topology.nodes, members, topology.allow_parallel_edges)


def _with_topology(state: QuasiStaticState, topology: Topology,
                   new_events: Iterable[SimEvent] = ()) -> QuasiStaticState:
    return QuasiStaticState(
        topology=topology,
        node_velocities={n: state.node_velocities.get(n, Vec3(0, 0, 0))
                         for n in topology.node_ids()},
        contacts=state.contacts,
        time=state.time,
        event_log=tuple(state.event_log) + tuple(new_events),
    )


# ---------------------------------------------------------------------------
# Magnetic free-form connectors
# ---------------------------------------------------------------------------

def magnet_candidate_nodes(topology: Topology) -> list[str]:
    """Nodes carrying at least one active magnetic connector end."""
    out = []
    for nid in topology.node_ids():
        for mem in topology.members_at(nid):
            if mem.spec.connector_separation_force is None:
                continue
            active = mem.connector_active_a if mem.end_a == nid else mem.connector_active_b
            if active:
                out.append(nid)
                break
    return out


def proximity_attach(state: QuasiStaticState, radius: float,
                     excluded_pairs: Iterable[tuple[str, str]] = ()) -> QuasiStaticState:
    """Merge every group of active magnetic tips within ``radius``.

    Merging is transitive (three tips can meet at one point) and idempotent:
    a second pass at unchanged positions produces no events.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    topo = state.topology
    excluded = {tuple(sorted(p)) for p in excluded_pairs}
    events = []
    while True:
        cands = magnet_candidate_nodes(topo)
        merged = False
        for x in range(len(cands)):
            a = cands[x]
            pa = topo.nodes[a].position
            for y in range(x + 1, len(cands)):
                b = cands[y]
                if tuple(sorted((a, b))) in excluded:
                    continue
                if any(b in mem.ends() for mem in topo.members_at(a)):
                    continue  # would collapse a member
                if pa.distance_to(topo.nodes[b].position) <= radius:
                    topo = merge_nodes(topo, a, b)
                    events.append(SimEvent(state.time, "attach",
                                           {"nodes": [a, b], "joint": a}))
                    merged = True
                    break
            if merged:
                break
        if not merged:
            break
    if not events:
        return state
    return _with_topology(state, topo, events)


def separation_check(state: QuasiStaticState,
                     tensions: dict[str, float]) -> QuasiStaticState:
    """Split any magnetic joint whose pull-apart tension exceeds the
    connector separation force (compression never separates)."""
    topo = state.topology
    events = []
    changed = True
    while changed:
        changed = False
        for mid in topo.member_ids():
            mem = topo.members[mid]
            sep = mem.spec.connector_separation_force
            if sep is None:
                continue
            tension = tensions.get(mid, 0.0)
            if tension <= sep:
                continue
            for end, node_id, phase in (("a", mem.end_a, mem.dock_phase_a),
                                        ("b", mem.end_b, mem.dock_phase_b)):
                if phase == DockPhase.LATCHED:
                    continue
                if topo.degree(node_id) < 2:
                    continue
                topo, new_id = split_node(topo, node_id, [(mid, end)])
                events.append(SimEvent(state.time, "detach", {
                    "member": mid, "end": end, "node": node_id,
                    "tension": tension,
                }))
                changed = True
                break
            if changed:
                break
    if not events:
        return state
    return _with_topology(state, topo, events)


def deactivate(state: QuasiStaticState, member_id: str, end: str) -> QuasiStaticState:
    """Retract the magnet: detaches if attached, and disarms the end."""
    topo = state.topology
    mem = topo.members[member_id]
    node_id = mem.end_a if end == "a" else mem.end_b
    events = []
    if topo.degree(node_id) > 1:
        topo, _ = split_node(topo, node_id, [(member_id, end)])
        events.append(SimEvent(state.time, "detach", {
            "member": member_id, "end": end, "node": node_id, "reason": "deactivated",
        }))
    topo = _set_end_field(topo, member_id, end, connector_active=False)
    return _with_topology(state, topo, events)


def reactivate(state: QuasiStaticState, member_id: str, end: str,
               dock_params: DockParams = DockParams()) -> QuasiStaticState:
    """Re-arm a retracted magnet; refused while the servo is still fully
    contracted (the retraction is mechanical, tied to contraction)."""
    topo = state.topology
    mem = topo.members[member_id]
    if mem.current_length <= mem.spec.min_length + dock_params.full_contraction_eps:
        raise ReactivateWhileContracted(
            f"member {member_id} at {mem.current_length:.3f} m is fully contracted")
    topo = _set_end_field(topo, member_id, end, connector_active=True)
    return _with_topology(state, topo)


# ---------------------------------------------------------------------------
# Mechanical (VTT) docking
# ---------------------------------------------------------------------------

def free_end_of(topology: Topology, member_id: str) -> Optional[str]:
    mem = topology.members[member_id]
    for end, node in (("a", mem.end_a), ("b", mem.end_b)):
        if topology.degree(node) == 1:
            return end
    return None


def dock_alignment(tip: Vec3, other_end: Vec3, port: Vec3,
                   port_axis: Vec3) -> tuple[float, float]:
    """(tip-to-port distance, angle between insert axis and port axis).

    The insert axis points from the member body out through the tip.
    """
    dist = tip.distance_to(port)
    ax = (tip.x - other_end.x, tip.y - other_end.y, tip.z - other_end.z)
    na = math.sqrt(ax[0] ** 2 + ax[1] ** 2 + ax[2] ** 2)
    pa = (port_axis.x, port_axis.y, port_axis.z)
    npa = math.sqrt(pa[0] ** 2 + pa[1] ** 2 + pa[2] ** 2)
    if na < 1e-12 or npa < 1e-12:
        return dist, math.pi
    cosang = (ax[0] * pa[0] + ax[1] * pa[1] + ax[2] * pa[2]) / (na * npa)
    cosang = max(-1.0, min(1.0, cosang))
    return dist, math.acos(cosang)


def port_occupied(topology: Topology, port_node: str) -> bool:
    for mem in topology.members_at(port_node):
        if mem.end_a == port_node and mem.dock_phase_a == DockPhase.LATCHED:
            return True
        if mem.end_b == port_node and mem.dock_phase_b == DockPhase.LATCHED:
            return True
    return False


def vtt_dock(state: QuasiStaticState, insert_member: str, port_node: str,
             align_tol: Optional[float] = None,
             angle_tol: Optional[float] = None,
             dock_params: DockParams = DockParams(),
             insert_end: Optional[str] = None) -> QuasiStaticState:
    """Mechanical docking: lock member rotation, insert, latch.

    The insert is the member end nearest the port unless ``insert_end`` is
    given; it must not already be latched. Refused (with the measured
    misalignment) when the tip is outside the tolerances or the port is
    already latched.
    """
    align_tol = dock_params.align_tol if align_tol is None else align_tol
    angle_tol = dock_params.angle_tol if angle_tol is None else angle_tol
    topo = state.topology
    if port_node not in topo.nodes:
        raise DockRefused(f"unknown port node {port_node!r}")
    if port_occupied(topo, port_node):
        raise DockRefused(f"port {port_node} is occupied")
    mem = topo.members[insert_member]
    if insert_end is None:
        port_pos = topo.nodes[port_node].position
        da = topo.nodes[mem.end_a].position.distance_to(port_pos)
        db = topo.nodes[mem.end_b].position.distance_to(port_pos)
        insert_end = "a" if da <= db else "b"
    end = insert_end
    phase = mem.dock_phase_a if end == "a" else mem.dock_phase_b
    if phase == DockPhase.LATCHED:
        raise DockRefused(f"member {insert_member} end {end} is already latched")
    tip_node = mem.end_a if end == "a" else mem.end_b
    other_node = mem.end_b if end == "a" else mem.end_a
    if tip_node == port_node:
        raise DockRefused("insert tip is already the port node")
    if any(port_node in m2.ends() for m2 in topo.members_at(tip_node)):
        raise DockRefused("insert tip already shares a member with the port")
    port_axis = topo.nodes[port_node].port_axis or Vec3(1.0, 0.0, 0.0)
    dist, angle = dock_alignment(
        topo.nodes[tip_node].position, topo.nodes[other_node].position,
        topo.nodes[port_node].position, port_axis)
    if dist > align_tol or angle > angle_tol:
        raise DockRefused(
            f"misaligned: {dist * 1000:.1f} mm / {math.degrees(angle):.1f} deg "
            f"(tol {align_tol * 1000:.1f} mm / {math.degrees(angle_tol):.1f} deg)")
    # phase machine: rotation lock, insert, latch — then fuse the joint
    topo = _set_end_field(topo, insert_member, end, dock_phase=DockPhase.ROTATION_LOCKED)
    topo = _set_end_field(topo, insert_member, end, dock_phase=DockPhase.INSERTED)
    topo = merge_nodes(topo, port_node, tip_node)
    topo = _set_end_field(topo, insert_member, end, dock_phase=DockPhase.LATCHED)
    ev = SimEvent(state.time, "latch", {
        "member": insert_member, "end": end, "port": port_node,
        "distance": dist, "angle": angle,
    })
    return _with_topology(state, topo, [ev])


def vtt_undock(state: QuasiStaticState, joint_node: str) -> QuasiStaticState:
    """Release the latched insert(s) at a joint back to free connectors."""
    topo = state.topology
    if joint_node not in topo.nodes:
        raise NotLatched(f"unknown node {joint_node!r}")
    latched = []
    for mem in topo.members_at(joint_node):
        if mem.end_a == joint_node and mem.dock_phase_a == DockPhase.LATCHED:
            latched.append((mem.id, "a"))
        if mem.end_b == joint_node and mem.dock_phase_b == DockPhase.LATCHED:
            latched.append((mem.id, "b"))
    if not latched:
        raise NotLatched(f"no latched connector at {joint_node}")
    events = []
    for mid, end in latched:
        if topo.degree(joint_node) < 2:
            break
        topo, new_id = split_node(topo, joint_node, [(mid, end)])
        topo = _set_end_field(topo, mid, end, dock_phase=DockPhase.FREE)
        events.append(SimEvent(state.time, "detach", {
            "member": mid, "end": end, "node": joint_node, "reason": "undock",
        }))
    return _with_topology(state, topo, events)


def mark_latched(topology: Topology, member_id: str, end: str) -> Topology:
    """Label a pre-built joint as a latched dock (so vtt_undock can open it)."""
    return _set_end_field(topology, member_id, end, dock_phase=DockPhase.LATCHED)
