import math
import random

import pytest

from trussforge.core import (
    TRUSS_LINK,
    VTT,
    DockPhase,
    Node,
    Topology,
    Vec3,
    build_topology,
)
from trussforge.docking import (
    DockRefused,
    NotLatched,
    ReactivateWhileContracted,
    connector_state,
    deactivate,
    dock_alignment,
    mark_latched,
    proximity_attach,
    reactivate,
    separation_check,
    vtt_dock,
    vtt_undock,
)
from trussforge.mechanics import rest_state


def two_links(gap=0.005):
    """Two magnetic links with facing tips `gap` apart."""
    return build_topology(
        TRUSS_LINK,
        [Vec3(-0.38 - gap / 2, 0, 0), Vec3(-gap / 2, 0, 0),
         Vec3(gap / 2, 0, 0), Vec3(0.38 + gap / 2, 0, 0)],
        [(0, 1), (3, 2)],
        node_names=["a_far", "a_tip", "b_tip", "b_far"],
        member_names=["la", "lb"],
    )


def three_tips(r=0.004):
    pts = [Vec3(r * math.cos(a), r * math.sin(a), 0)
           for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    far = [Vec3(0.4 * math.cos(a), 0.4 * math.sin(a), 0)
           for a in (0, 2 * math.pi / 3, 4 * math.pi / 3)]
    return build_topology(
        TRUSS_LINK,
        [pts[0], far[0], pts[1], far[1], pts[2], far[2]],
        [(1, 0), (3, 2), (5, 4)],
        node_names=["t0", "f0", "t1", "f1", "t2", "f2"],
    )


class TestProximityAttach:
    def test_tips_within_radius_merge(self):
        state = rest_state(two_links(gap=0.005))
        out = proximity_attach(state, radius=0.010)
        assert len(out.topology.nodes) == 3
        assert any(e.kind == "attach" for e in out.event_log)

    def test_tips_out_of_range_untouched(self):
        state = rest_state(two_links(gap=0.050))
        out = proximity_attach(state, radius=0.010)
        assert len(out.topology.nodes) == 4
        assert out is state  # no-op returns the same state

    def test_three_tips_form_one_joint(self):
        state = rest_state(three_tips())
        out = proximity_attach(state, radius=0.012)
        assert len(out.topology.nodes) == 4
        joint = [n for n in out.topology.node_ids()
                 if out.topology.degree(n) == 3]
        assert len(joint) == 1

    def test_idempotent_second_pass(self):
        state = rest_state(two_links(gap=0.005))
        once = proximity_attach(state, radius=0.010)
        twice = proximity_attach(once, radius=0.010)
        assert twice is once

    def test_member_count_conserved(self):
        state = rest_state(three_tips())
        out = proximity_attach(state, radius=0.012)
        assert len(out.topology.members) == len(state.topology.members)

    def test_inactive_tip_never_attaches(self):
        state = rest_state(two_links(gap=0.005))
        state = deactivate(state, "la", "b")
        out = proximity_attach(state, radius=0.010)
        assert len(out.topology.nodes) == 4


class TestSeparation:
    def _joined(self):
        state = rest_state(two_links(gap=0.004))
        return proximity_attach(state, radius=0.010)

    def test_exact_threshold_behavior(self):
        eps = 1e-6
        hold = separation_check(self._joined(), {"la": 13.6 - eps})
        assert len(hold.topology.components()) == 1
        split = separation_check(self._joined(), {"la": 13.6 + eps})
        assert len(split.topology.components()) == 2
        assert any(e.kind == "detach" for e in split.event_log)

    def test_compression_always_holds(self):
        out = separation_check(self._joined(), {"la": 0.0, "lb": 0.0})
        assert len(out.topology.components()) == 1

    def test_member_count_conserved(self):
        out = separation_check(self._joined(), {"la": 50.0})
        assert len(out.topology.members) == 2

    def test_latched_joint_never_separates(self):
        state = self._joined()
        joint = [n for n in state.topology.node_ids()
                 if state.topology.degree(n) == 2][0]
        topo = mark_latched(state.topology, "la", "b")
        topo = mark_latched(topo, "lb", "b")
        from trussforge.mechanics import QuasiStaticState
        state = QuasiStaticState(topo, state.node_velocities, state.contacts,
                                 state.time, state.event_log)
        out = separation_check(state, {"la": 500.0, "lb": 500.0})
        assert len(out.topology.components()) == 1


class TestDeactivate:
    def test_deactivate_attached_end_detaches(self):
        state = proximity_attach(rest_state(two_links(gap=0.004)), radius=0.01)
        out = deactivate(state, "la", "b")
        assert len(out.topology.components()) == 2
        cs = connector_state(out.topology, "la", "b")
        assert not cs.active and cs.attached_to is None

    def test_reactivate_requires_extension(self):
        # fully contracted link: the magnet stays retracted
        topo = build_topology(
            TRUSS_LINK, [Vec3(0, 0, 0), Vec3(0.28, 0, 0)], [(0, 1)],
            member_names=["la"])
        state = deactivate(rest_state(topo), "la", "b")
        with pytest.raises(ReactivateWhileContracted):
            reactivate(state, "la", "b")

    def test_reactivate_after_extension(self):
        topo = build_topology(
            TRUSS_LINK, [Vec3(0, 0, 0), Vec3(0.40, 0, 0)], [(0, 1)],
            member_names=["la"])
        state = deactivate(rest_state(topo), "la", "b")
        out = reactivate(state, "la", "b")
        assert connector_state(out.topology, "la", "b").active


def vtt_pair(offset=Vec3(0.003, 0.002, 0.0), axis_tilt=math.radians(2.0)):
    """A VTT insert member approaching a port node along +x."""
    tip = Vec3(0, 0, 0) + offset
    back = Vec3(tip.x - 1.2 * math.cos(axis_tilt), tip.y - 1.2 * math.sin(axis_tilt), 0)
    topo = build_topology(
        VTT,
        [back, tip, Vec3(0, 0, 0), Vec3(1.2, 0, 0)],
        [(0, 1), (2, 3)],
        node_names=["back", "tip", "port", "anchor"],
        member_names=["insert", "stay"],
    )
    nodes = dict(topo.nodes)
    nodes["port"] = Node(id="port", position=nodes["port"].position,
                         port_axis=Vec3(1.0, 0.0, 0.0))
    return Topology(nodes, topo.members)


class TestVttDock:
    def test_within_tolerance_latches(self):
        state = rest_state(vtt_pair(Vec3(0.003, 0.002, 0), math.radians(2)))
        out = vtt_dock(state, "insert", "port",
                       align_tol=0.005, angle_tol=math.radians(5))
        assert any(e.kind == "latch" for e in out.event_log)
        assert out.topology.members["insert"].dock_phase_b == DockPhase.LATCHED
        assert len(out.topology.components()) == 1

    def test_misaligned_refused(self):
        state = rest_state(vtt_pair(Vec3(0.012, 0, 0), 0.0))
        with pytest.raises(DockRefused):
            vtt_dock(state, "insert", "port",
                     align_tol=0.005, angle_tol=math.radians(5))

    def test_occupied_port_refused(self):
        state = rest_state(vtt_pair())
        out = vtt_dock(state, "insert", "port",
                       align_tol=0.005, angle_tol=math.radians(5))
        with pytest.raises(DockRefused):
            vtt_dock(out, "stay", "port",
                     align_tol=1.0, angle_tol=math.pi)

    def test_undock_then_redock(self):
        state = rest_state(vtt_pair())
        out = vtt_dock(state, "insert", "port",
                       align_tol=0.005, angle_tol=math.radians(5))
        released = vtt_undock(out, "port")
        assert len(released.topology.components()) == 2
        again = vtt_dock(released, "insert", "port",
                         align_tol=0.02, angle_tol=math.radians(10))
        assert len(again.topology.components()) == 1

    def test_undock_free_node_refused(self):
        state = rest_state(vtt_pair())
        with pytest.raises(NotLatched):
            vtt_undock(state, "port")

    def test_predicate_matches_geometric_oracle(self):
        rng = random.Random(42)
        align_tol, angle_tol = 0.005, math.radians(5)
        agree = 0
        for _ in range(100):
            off = Vec3(rng.uniform(-0.009, 0.009), rng.uniform(-0.009, 0.009),
                       rng.uniform(-0.003, 0.003))
            tilt = rng.uniform(-math.radians(9), math.radians(9))
            state = rest_state(vtt_pair(off, tilt))
            # independent oracle computed from raw positions
            tip = state.topology.nodes["tip"].position
            back = state.topology.nodes["back"].position
            port = state.topology.nodes["port"].position
            d = math.dist((tip.x, tip.y, tip.z), (port.x, port.y, port.z))
            ax = (tip.x - back.x, tip.y - back.y, tip.z - back.z)
            na = math.sqrt(sum(c * c for c in ax))
            cosang = max(-1.0, min(1.0, ax[0] / na))
            ang = math.acos(cosang)
            should_dock = d <= align_tol and ang <= angle_tol
            try:
                vtt_dock(state, "insert", "port",
                         align_tol=align_tol, angle_tol=angle_tol)
                did = True
            except DockRefused:
                did = False
            assert did == should_dock
            agree += 1
        assert agree == 100

    def test_alignment_helper(self):
        d, a = dock_alignment(Vec3(0.003, 0, 0), Vec3(-1.0, 0, 0),
                              Vec3(0, 0, 0), Vec3(1, 0, 0))
        assert d == pytest.approx(0.003)
        assert a == pytest.approx(0.0, abs=1e-12)


class TestDockStatementPaths:
    def test_magnetic_dock_command_merges_when_close(self):
        from trussforge.environments import flat_env
        from trussforge.mechanics import Engine, SolverParams
        topo = two_links(gap=0.008).translated(Vec3(0, 0, 0.0005))
        eng = Engine(topo, flat_env(), SolverParams(actuator_stiffness=800.0))
        eng.dock("a_tip", "b_tip")
        assert len(eng.topology.components()) == 1
        assert any(e.kind == "attach" for e in eng.events)

    def test_magnetic_dock_command_refused_when_far(self):
        from trussforge.environments import flat_env
        from trussforge.mechanics import Engine, SolverParams
        topo = two_links(gap=0.20).translated(Vec3(0, 0, 0.0005))
        eng = Engine(topo, flat_env(), SolverParams(actuator_stiffness=800.0))
        with pytest.raises(DockRefused):
            eng.dock("a_tip", "b_tip")
