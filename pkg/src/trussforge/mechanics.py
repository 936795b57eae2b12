"""
trussforge.mechanics
====================
Quasi-static solver. Motion is computed as a sequence of damped
near-equilibrium states:

1. actuator axial forces from a rate-limited, force-saturated length
   tracking controller;
2. gravity lumped at the member ends;
3. contact normal forces distributed from the center of mass of each
   connected component (minimum-norm non-negative solution when statically
   indeterminate), with penalty springs handling penetration;
4. Coulomb stick/slip friction with a velocity-threshold static/kinetic
   transition;
5. semi-implicit velocity/position update with per-node damping,
   v' = (m v + dt F) / (m + dt c).

Also houses the analysis operations: node Jacobians and singularity tests,
the apex expansion-force law F = m g / sin(alpha) and its inverse, and
support-polygon tumble prediction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import nnls as _scipy_nnls

from .core import DockPhase, Topology, TrussforgeError, Vec3
from .environments import Environment, FrictionParams

G = 9.81  # m/s^2, gravity magnitude used by the closed-form laws


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class NumericalDivergence(TrussforgeError):
    pass


class SettleTimeout(TrussforgeError):
    pass


class ZeroLengthMember(TrussforgeError):
    pass


class DegenerateAngle(TrussforgeError):
    pass


class InsufficientForce(TrussforgeError):
    pass


# ---------------------------------------------------------------------------
# Parameter and state records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverParams:
    dt: float = 0.002
    damping: float = 40.0               # N*s/m per node
    contact_stiffness: float = 5.0e4    # N/m penalty
    settle_velocity_eps: float = 1.0e-4  # m/s; also the stick/slip threshold
    settle_timeout: float = 30.0        # s of simulated time
    actuator_stiffness: float = 5.0e4   # N/m length-tracking gain
    # Derived/secondary knobs (all deterministic):
    contact_damping_ratio: float = 1.0
    axial_damping_ratio: float = 0.7
    friction_iterations: int = 6
    redistribution_stride: int = 4
    velocity_cap: float = 20.0          # m/s; beyond this the run has diverged
    max_penetration: float = 0.02       # m; penalty force saturates past this
    support_normal_min_z: float = 0.25  # contacts steeper than this are walls
    settle_consecutive: int = 5

    def __post_init__(self):
        if min(self.dt, self.damping, self.contact_stiffness,
               self.settle_velocity_eps, self.settle_timeout,
               self.actuator_stiffness) <= 0:
            raise ValueError("solver parameters must be positive")


# Contact modes are plain strings to keep CSV rows compact.
MODE_SEPARATED = "separated"
MODE_STICKING = "sticking"
MODE_SLIDING = "sliding"


@dataclass(frozen=True)
class ContactPoint:
    """Reported contact: owner is "node:<id>" or "pad:<member id>"."""
    owner: str
    position: Vec3
    surface_normal: Vec3
    normal_force: float
    mode: str
    friction: FrictionParams
    feature: str = ""
    friction_force: Vec3 = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: str
    data: dict

    def as_tuple(self):
        return (self.time, self.kind, self.data)


@dataclass(frozen=True)
class QuasiStaticState:
    topology: Topology
    node_velocities: dict
    contacts: tuple
    time: float
    event_log: tuple

    def velocity_of(self, node_id: str) -> Vec3:
        return self.node_velocities.get(node_id, Vec3(0.0, 0.0, 0.0))


def rest_state(topology: Topology, time: float = 0.0) -> QuasiStaticState:
    return QuasiStaticState(
        topology=topology,
        node_velocities={n: Vec3(0.0, 0.0, 0.0) for n in topology.node_ids()},
        contacts=(),
        time=time,
        event_log=(),
    )


# ---------------------------------------------------------------------------
# Normal-force distribution from the center of mass
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalForceResult:
    forces: tuple
    com_inside_support: bool


def _min_norm_nonneg(A: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    """min ||N||^2 s.t. A N = b, N >= 0 (active set on the KKT system).

    Returns None when the equality system is infeasible over the
    nonnegative orthant (center of mass outside the support region).
    """
    k = A.shape[1]
    free = list(range(k))
    for _ in range(4 * k + 8):
        Af = A[:, free]
        M = Af @ Af.T
        try:
            lam = np.linalg.solve(M, b)
        except np.linalg.LinAlgError:
            lam = np.linalg.lstsq(M, b, rcond=None)[0]
        Nf = Af.T @ lam
        if Nf.size and float(Nf.min()) < -1e-9:
            free.pop(int(np.argmin(Nf)))
            if not free:
                return None
            continue
        slack = A.T @ lam
        worst, worst_i = 1e-9, -1
        for i in range(k):
            if i not in free and slack[i] > worst:
                worst, worst_i = slack[i], i
        if worst_i >= 0:
            free.append(worst_i)
            free.sort()
            continue
        N = np.zeros(k)
        N[free] = np.maximum(Nf, 0.0)
        if np.linalg.norm(A @ N - b) > 1e-7 * max(1.0, np.linalg.norm(b)):
            return None
        return N
    return None


def normal_forces(
    positions: Sequence[Vec3],
    normals: Sequence[Vec3],
    com: Vec3,
    weight: float,
) -> NormalForceResult:
    """Distribute ``weight`` over the contacts from the COM position.

    Satisfies vertical force balance and horizontal moment balance about the
    COM projection; statically indeterminate sets get the unique minimum-norm
    non-negative solution. If the COM projects outside the support region the
    result is flagged and a best-effort (least-residual) distribution is
    returned for the tumble path.
    """
    if len(positions) == 0:
        raise ValueError("need at least one contact")
    if weight <= 0:
        raise ValueError("weight must be positive")
    P = np.array([p.as_array() for p in positions])
    Nrm = np.array([n.as_array() for n in normals])
    c = com.as_array()
    k = len(positions)
    A = np.zeros((3, k))
    for i in range(k):
        r = P[i] - c
        m = np.cross(r, Nrm[i])
        A[0, i] = Nrm[i][2]
        A[1, i] = m[0]
        A[2, i] = m[1]
    b = np.array([weight, 0.0, 0.0])
    sol = _min_norm_nonneg(A, b)
    if sol is not None:
        return NormalForceResult(tuple(float(x) for x in sol), True)
    best, _ = _scipy_nnls(A, b)
    return NormalForceResult(tuple(float(x) for x in best), False)


# ---------------------------------------------------------------------------
# Coulomb stick/slip rule
# ---------------------------------------------------------------------------

def friction_step(
    contacts: Sequence[ContactPoint],
    tangential_applied: Sequence[Vec3],
    tangential_velocity: Sequence[Vec3],
    params: SolverParams = SolverParams(),
) -> tuple[tuple[Vec3, ...], tuple[str, ...]]:
    """Per-contact Coulomb rule.

    At rest (|v| below the settle threshold) a contact sticks when the
    applied tangential force fits inside the static cone and the friction
    cancels it exactly; otherwise it slides with kinetic friction opposing
    the velocity (or the applied force right at onset).
    """
    forces: list[Vec3] = []
    modes: list[str] = []
    for cp, fa, vt in zip(contacts, tangential_applied, tangential_velocity):
        n = cp.normal_force
        if n <= 0.0:
            forces.append(Vec3(0.0, 0.0, 0.0))
            modes.append(MODE_SEPARATED)
            continue
        fmag = math.sqrt(fa.x ** 2 + fa.y ** 2 + fa.z ** 2)
        vmag = math.sqrt(vt.x ** 2 + vt.y ** 2 + vt.z ** 2)
        at_rest = vmag < params.settle_velocity_eps
        if at_rest and fmag <= cp.friction.mu_static * n:
            forces.append(fa.scaled(-1.0))
            modes.append(MODE_STICKING)
            continue
        direction = vt if not at_rest else fa
        dmag = math.sqrt(direction.x ** 2 + direction.y ** 2 + direction.z ** 2)
        if dmag < 1e-15:
            forces.append(Vec3(0.0, 0.0, 0.0))
            modes.append(MODE_STICKING)
            continue
        scale = -cp.friction.mu_kinetic * n / dmag
        forces.append(direction.scaled(scale))
        modes.append(MODE_SLIDING)
    return tuple(forces), tuple(modes)


# ---------------------------------------------------------------------------
# Analysis operations
# ---------------------------------------------------------------------------

def node_jacobian(topology: Topology, node_id: str) -> np.ndarray:
    """Rows are unit vectors from the node toward each neighbor, so member
    length-rates are J @ v with the neighbors held fixed."""
    members = topology.members_at(node_id)
    if not members:
        raise ZeroLengthMember(f"node {node_id} has no incident members")
    p = topology.nodes[node_id].position.as_array()
    rows = []
    for m in members:
        q = topology.nodes[m.other_end(node_id)].position.as_array()
        d = q - p
        norm = float(np.linalg.norm(d))
        if norm < 1e-12:
            raise ZeroLengthMember(f"member {m.id} has zero length")
        rows.append(d / norm)
    return np.array(rows)


def min_singular_value(topology: Topology, node_id: str) -> float:
    J = node_jacobian(topology, node_id)
    if J.shape[0] < 3:
        return 0.0  # a null out-of-plane direction always exists
    return float(np.linalg.svd(J, compute_uv=False)[-1])


def is_singular(topology: Topology, node_id: str, tol: float = 1e-6) -> tuple[bool, float]:
    s = min_singular_value(topology, node_id)
    return (s < tol, s)


def expansion_force(lifted_mass: float, alpha: float) -> float:
    """Total expansion force needed to raise the apex at elevation angle
    alpha: m g / sin(alpha). Unbounded (DegenerateAngle) at the flat
    singular configuration."""
    if lifted_mass <= 0:
        raise ValueError("lifted_mass must be positive")
    if not (0.0 < alpha <= math.pi / 2 + 1e-12):
        raise DegenerateAngle(f"elevation angle {alpha} outside (0, pi/2]")
    return lifted_mass * G / math.sin(alpha)


def min_popup_angle(lifted_mass: float, total_available_force: float) -> float:
    """Inverse of expansion_force: smallest elevation angle at which the
    available force can raise the apex."""
    if lifted_mass <= 0 or total_available_force <= 0:
        raise ValueError("mass and force must be positive")
    ratio = lifted_mass * G / total_available_force
    if ratio > 1.0:
        raise InsufficientForce(
            f"need {lifted_mass * G:.2f} N but only {total_available_force:.2f} N available"
        )
    return math.asin(ratio)


def support_polygon(contact_xy: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    """2D convex hull (counter-clockwise, Andrew monotone chain)."""
    pts = sorted(set((float(x), float(y)) for x, y in contact_xy))
    if len(pts) <= 2:
        return pts
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class TumbleCheck:
    stable: bool
    pivot_edge: Optional[tuple] = None  # ((x1,y1),(x2,y2)) being rolled over


def check_tumble(com_xy: tuple[float, float],
                 contact_xy: Sequence[tuple[float, float]],
                 tol: float = 1e-9) -> TumbleCheck:
    """Stable iff the COM ground projection lies inside (or on) the support
    hull; otherwise reports the violated hull edge as the pivot."""
    hull = support_polygon(contact_xy)
    x, y = com_xy
    if len(hull) == 0:
        return TumbleCheck(False, None)
    if len(hull) == 1:
        ok = math.hypot(x - hull[0][0], y - hull[0][1]) <= 1e-6
        return TumbleCheck(ok, None if ok else (hull[0], hull[0]))
    if len(hull) == 2:
        (x1, y1), (x2, y2) = hull
        ex, ey = x2 - x1, y2 - y1
        ll = ex * ex + ey * ey
        t = max(0.0, min(1.0, ((x - x1) * ex + (y - y1) * ey) / ll)) if ll else 0.0
        d = math.hypot(x - (x1 + t * ex), y - (y1 + t * ey))
        ok = d <= 1e-6
        return TumbleCheck(ok, None if ok else (hull[0], hull[1]))
    worst = None
    worst_d = tol
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        # hull is CCW: inside points have positive cross products
        d = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])
        if d < -worst_d:
            if worst is None or d < worst[0]:
                worst = (d, (a, b))
    if worst is None:
        return TumbleCheck(True, None)
    return TumbleCheck(False, worst[1])


def will_tumble(state: "QuasiStaticState", component: Optional[frozenset] = None) -> TumbleCheck:
    """Support-polygon stability of one connected component (the largest by
    member count when unspecified), using the state's reported contacts."""
    topo = state.topology
    if component is None:
        comps = topo.components()
        component = max(comps, key=lambda c: (len(topo.member_ids_in(c)), sorted(c)[0]))
    contact_xy = []
    for cp in state.contacts:
        owner_id = cp.owner.split(":", 1)[1]
        if cp.owner.startswith("node:"):
            in_comp = owner_id in component
        else:
            in_comp = topo.members[owner_id].end_a in component
        if in_comp and cp.normal_force > 0 and cp.surface_normal.z > 0.25:
            contact_xy.append((cp.position.x, cp.position.y))
    if not contact_xy:
        return TumbleCheck(False, None)
    com = component_com(topo, component)
    return check_tumble((com.x, com.y), contact_xy)


def component_com(topology: Topology, component: frozenset) -> Vec3:
    from .core import member_end_masses
    acc = np.zeros(3)
    mass = 0.0
    for mid in topology.member_ids_in(component):
        m = topology.members[mid]
        ma, mb = member_end_masses(m)
        acc += ma * topology.nodes[m.end_a].position.as_array()
        acc += mb * topology.nodes[m.end_b].position.as_array()
        mass += ma + mb
    return Vec3.from_array(acc / mass) if mass > 0 else Vec3(0, 0, 0)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DockParams:
    """Connector behavior knobs (defaults follow the hardware notes)."""
    proximity_radius: float = 0.012      # ~ magnet sphere diameter
    align_tol: float = 0.005             # m, mechanical docking insert
    angle_tol: float = math.radians(5.0)
    reattach_clearance: float = 1.5      # x radius before a split pair re-arms
    full_contraction_eps: float = 0.01   # m above min length counts as contracted
    attach_grace: float = 1.0            # s; merge shock can't trip separation


class Engine:
    """Mutable integration state for one simulation instance.

    The hot path is pure scalar Python: at truss scales (a dozen nodes)
    that outruns numpy by a wide margin. numpy only appears in the
    redistribution solve and in snapshots. Everything iterates in sorted-id
    order, so identical inputs integrate to bitwise-identical trajectories.
    """

    def __init__(self, topology: Topology, env: Environment, params: SolverParams,
                 dock_params: DockParams = DockParams(),
                 time: float = 0.0):
        self.env = env
        self.params = params
        self.dock_params = dock_params
        self.time = float(time)
        self.step_count = 0
        self.events: list[SimEvent] = []
        self.contact_modes: dict[str, str] = {}
        self._contact_report: list = []
        self._prev_contact_keys: set[str] = set()
        self._saturated: set[str] = set()
        self._tumbling: set[str] = set()
        self._attach_cooldown: set[tuple[str, str]] = set()
        self._attach_grace: dict[str, float] = {}
        self._sep_grace_until: float = -1.0
        self._redis_cache: dict[str, float] = {}
        self._redis_keys: frozenset = frozenset()
        self._com_outside: set[str] = set()
        self.on_structure_change: list[Callable] = []
        self._load_topology(topology, velocities=None)

    # -- structure (re)loading ---------------------------------------------

    def _load_topology(self, topology: Topology, velocities: Optional[dict]):
        self.topology = topology
        self.node_ids = topology.node_ids()
        self.member_ids = topology.member_ids()
        self.nidx = {n: i for i, n in enumerate(self.node_ids)}
        self.midx = {m: j for j, m in enumerate(self.member_ids)}
        n, m = len(self.node_ids), len(self.member_ids)
        self.n_nodes = n
        self.n_members = m
        self.px = [topology.nodes[nid].position.x for nid in self.node_ids]
        self.py = [topology.nodes[nid].position.y for nid in self.node_ids]
        self.pz = [topology.nodes[nid].position.z for nid in self.node_ids]
        self.vx = [0.0] * n
        self.vy = [0.0] * n
        self.vz = [0.0] * n
        if velocities:
            for nid, v in velocities.items():
                if nid in self.nidx:
                    i = self.nidx[nid]
                    self.vx[i], self.vy[i], self.vz[i] = v[0], v[1], v[2]
        self.pinned = [topology.nodes[nid].pinned for nid in self.node_ids]

        self.m_ia = [0] * m
        self.m_ib = [0] * m
        self.m_mass = [0.0] * m
        self.m_split = [0.0] * m
        self.m_fmax = [0.0] * m
        self.m_rate = [0.0] * m
        self.m_min = [0.0] * m
        self.m_max = [0.0] * m
        self.m_pad = [0.0] * m
        self.two_act = [False] * m
        self.m_sep_force = [None] * m
        self.ref_a = [0.0] * m
        self.ref_b = [0.0] * m
        self.tgt_a = [0.0] * m
        self.tgt_b = [0.0] * m
        self.rate_a = [0.0] * m
        self.rate_b = [0.0] * m
        self.core_len = [0.0] * m
        self.ext_max_a = [0.0] * m
        self.ext_max_b = [0.0] * m
        self.member_tension = [0.0] * m
        for j, mid in enumerate(self.member_ids):
            mem = topology.members[mid]
            sp = mem.spec
            ia, ib = self.nidx[mem.end_a], self.nidx[mem.end_b]
            self.m_ia[j] = ia
            self.m_ib[j] = ib
            self.m_mass[j] = sp.member_mass
            self.m_split[j] = sp.mass_split
            self.m_fmax[j] = sp.max_actuation_force
            self.m_rate[j] = sp.actuation_rate
            self.m_min[j] = sp.min_length
            self.m_max[j] = sp.max_length
            self.m_pad[j] = sp.pad_offset
            self.two_act[j] = sp.expansion_actuators_per_member >= 2
            self.m_sep_force[j] = sp.connector_separation_force
            self.core_len[j] = sp.min_length
            travel = sp.max_length - sp.min_length
            if self.two_act[j]:
                self.ext_max_a[j] = travel / 2.0
                self.ext_max_b[j] = travel / 2.0
            else:
                self.ext_max_a[j] = travel
                self.ext_max_b[j] = 0.0
            self.rate_a[j] = sp.actuation_rate
            self.rate_b[j] = sp.actuation_rate
            # re-derive reference extensions from the actual length so a
            # freshly loaded state starts in force balance
            dx = self.px[ib] - self.px[ia]
            dy = self.py[ib] - self.py[ia]
            dz = self.pz[ib] - self.pz[ia]
            L = math.sqrt(dx * dx + dy * dy + dz * dz)
            ext = min(max(L - self.core_len[j], 0.0),
                      self.ext_max_a[j] + self.ext_max_b[j])
            if self.two_act[j]:
                tot = mem.ext_a + mem.ext_b
                sa = mem.ext_a / tot if tot > 1e-12 else 0.5
                self.ref_a[j] = ext * sa
                self.ref_b[j] = ext * (1.0 - sa)
            else:
                self.ref_a[j] = ext
                self.ref_b[j] = 0.0
            self.tgt_a[j] = self.ref_a[j]
            self.tgt_b[j] = self.ref_b[j]
        for j, mid in enumerate(self.member_ids):
            mem = topology.members[mid]
            if abs(mem.target_length - mem.current_length) > 1e-9:
                self._set_member_target(j, mem.target_length, None)

        self.has_magnetic = any(s is not None for s in self.m_sep_force)

        # static (nominal-split) node masses set the damping scales
        static_mass = [0.0] * n
        for j in range(m):
            static_mass[self.m_ia[j]] += self.m_mass[j] * self.m_split[j]
            static_mass[self.m_ib[j]] += self.m_mass[j] * (1.0 - self.m_split[j])
        static_mass = [sm if sm > 1e-3 else 1e-3 for sm in static_mass]
        self.node_static_mass = static_mass
        p = self.params
        # Stiffnesses are capped per body so that omega*dt stays in the
        # stable band for light platforms (a Truss Link tip is ~0.14 kg).
        cap = 0.2 / (p.dt * p.dt)
        self.k_contact = [min(p.contact_stiffness, cap * sm) for sm in static_mass]
        self.c_contact = [p.contact_damping_ratio * math.sqrt(kc * sm)
                          for kc, sm in zip(self.k_contact, static_mass)]
        self.k_axial = [0.0] * m
        self.c_axial = [0.0] * m
        for j in range(m):
            ma, mb = static_mass[self.m_ia[j]], static_mass[self.m_ib[j]]
            m_red = ma * mb / max(ma + mb, 1e-9)
            self.k_axial[j] = min(p.actuator_stiffness, cap * m_red)
            self.c_axial[j] = p.axial_damping_ratio * math.sqrt(
                self.k_axial[j] * m_red)

        # connected components
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for j in range(m):
            ra, rb = find(self.m_ia[j]), find(self.m_ib[j])
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        comp_of = [find(i) for i in range(n)]
        roots = sorted(set(comp_of))
        self.component_of_node = [roots.index(c) for c in comp_of]
        self.n_components = len(roots)
        self.component_key = [self.node_ids[r] for r in roots]

        # magnetic proximity candidates (recomputed only on structure change)
        self._magnet_nodes = []
        self._adjacent: dict[str, set[str]] = {nid: set() for nid in self.node_ids}
        for j, mid in enumerate(self.member_ids):
            mem = topology.members[mid]
            self._adjacent[mem.end_a].add(mem.end_b)
            self._adjacent[mem.end_b].add(mem.end_a)
        for nid in self.node_ids:
            for mem in topology.members_at(nid):
                if mem.spec.connector_separation_force is None:
                    continue
                active = mem.connector_active_a if mem.end_a == nid else mem.connector_active_b
                if active:
                    self._magnet_nodes.append(nid)
                    break

        self._redis_keys = frozenset()
        self._redis_cache = {}
        gx, gy, gz = self.env.gravity
        self.gravity = (float(gx), float(gy), float(gz))
        self.node_mass = list(static_mass)
        for cb in self.on_structure_change:
            cb(self)

    # -- commands ------------------------------------------------------------

    def _member_index(self, member_id: str) -> int:
        j = self.midx.get(member_id)
        if j is None:
            raise KeyError(f"unknown member {member_id!r}")
        return j

    def set_length(self, label: str, value: float, rate: Optional[float] = None):
        """Command a member length ("m1") or one servo extension ("m1.a")."""
        if "." in label:
            member_id, end = label.rsplit(".", 1)
            if end not in ("a", "b"):
                raise KeyError(f"bad actuator address {label!r}")
            j = self._member_index(member_id)
            r = self.m_rate[j] if rate is None else float(rate)
            if end == "a":
                self.tgt_a[j] = min(max(value, 0.0), self.ext_max_a[j])
                self.rate_a[j] = r
            else:
                if not self.two_act[j]:
                    raise KeyError(f"member {member_id!r} has no second actuator")
                self.tgt_b[j] = min(max(value, 0.0), self.ext_max_b[j])
                self.rate_b[j] = r
            return
        j = self._member_index(label)
        self._set_member_target(j, value, rate)

    def _set_member_target(self, j: int, value: float, rate: Optional[float]):
        value = min(max(value, self.m_min[j]), self.m_max[j])
        ext = value - self.core_len[j]
        r = self.m_rate[j] if rate is None else float(rate)
        if self.two_act[j]:
            self.tgt_a[j] = ext / 2.0
            self.tgt_b[j] = ext / 2.0
        else:
            self.tgt_a[j] = ext
            self.tgt_b[j] = 0.0
        self.rate_a[j] = r
        self.rate_b[j] = r

    def target_length(self, member_id: str) -> float:
        j = self._member_index(member_id)
        return self.core_len[j] + self.tgt_a[j] + self.tgt_b[j]

    def current_length(self, member_id: str) -> float:
        j = self._member_index(member_id)
        ia, ib = self.m_ia[j], self.m_ib[j]
        return math.sqrt((self.px[ib] - self.px[ia]) ** 2 +
                         (self.py[ib] - self.py[ia]) ** 2 +
                         (self.pz[ib] - self.pz[ia]) ** 2)

    def lengths_settled(self, tol: float = 1e-4) -> bool:
        for j in range(self.n_members):
            if abs(self.tgt_a[j] - self.ref_a[j]) >= tol:
                return False
            if abs(self.tgt_b[j] - self.ref_b[j]) >= tol:
                return False
        return True

    def max_speed(self) -> float:
        best = 0.0
        for i in range(self.n_nodes):
            a = abs(self.vx[i])
            if a > best:
                best = a
            a = abs(self.vy[i])
            if a > best:
                best = a
            a = abs(self.vz[i])
            if a > best:
                best = a
        return best

    def log_event(self, kind: str, data: dict):
        self.events.append(SimEvent(self.time, kind, data))

    # -- one integration step ------------------------------------------------

    def step_once(self):
        p = self.params
        dt = p.dt
        n = self.n_nodes
        m = self.n_members
        px, py, pz = self.px, self.py, self.pz
        vx, vy, vz = self.vx, self.vy, self.vz
        ia_l, ib_l = self.m_ia, self.m_ib

        fx = [0.0] * n
        fy = [0.0] * n
        fz = [0.0] * n
        node_mass = [0.0] * n

        ux_l = [0.0] * m
        uy_l = [0.0] * m
        uz_l = [0.0] * m
        L_l = [0.0] * m

        saturated_now = []
        for j in range(m):
            # 1. rate-limited actuator references
            ra, rb = self.rate_a[j] * dt, self.rate_b[j] * dt
            da = self.tgt_a[j] - self.ref_a[j]
            if da > ra:
                da = ra
            elif da < -ra:
                da = -ra
            db = self.tgt_b[j] - self.ref_b[j]
            if db > rb:
                db = rb
            elif db < -rb:
                db = -rb
            self.ref_a[j] += da
            self.ref_b[j] += db
            ref_len = self.core_len[j] + self.ref_a[j] + self.ref_b[j]
            if ref_len < self.m_min[j]:
                ref_len = self.m_min[j]
            elif ref_len > self.m_max[j]:
                ref_len = self.m_max[j]

            # 2. geometry
            ia, ib = ia_l[j], ib_l[j]
            dx = px[ib] - px[ia]
            dy = py[ib] - py[ia]
            dz = pz[ib] - pz[ia]
            L = math.sqrt(dx * dx + dy * dy + dz * dz)
            if L < 1e-9:
                raise ZeroLengthMember(
                    f"member {self.member_ids[j]} collapsed to zero length")
            ux, uy, uz = dx / L, dy / L, dz / L
            ux_l[j], uy_l[j], uz_l[j] = ux, uy, uz
            L_l[j] = L

            # 3. actuator axial force (length tracking, saturated)
            dldt = ((vx[ib] - vx[ia]) * ux + (vy[ib] - vy[ia]) * uy +
                    (vz[ib] - vz[ia]) * uz)
            f_raw = self.k_axial[j] * (ref_len - L) - self.c_axial[j] * dldt
            fmax = self.m_fmax[j]
            if f_raw > fmax:
                f_ax = fmax
                saturated_now.append(j)
            elif f_raw < -fmax:
                f_ax = -fmax
                saturated_now.append(j)
            else:
                f_ax = f_raw
            self.member_tension[j] = -f_ax if f_ax < 0.0 else 0.0
            fx[ia] -= ux * f_ax
            fy[ia] -= uy * f_ax
            fz[ia] -= uz * f_ax
            fx[ib] += ux * f_ax
            fy[ib] += uy * f_ax
            fz[ib] += uz * f_ax

            # 4. mass attribution
            if self.two_act[j]:
                frac_b = (self.core_len[j] / 2.0 + self.ref_a[j]) / ref_len
                if frac_b < 0.05:
                    frac_b = 0.05
                elif frac_b > 0.95:
                    frac_b = 0.95
            else:
                frac_b = 1.0 - self.m_split[j]
            node_mass[ia] += self.m_mass[j] * (1.0 - frac_b)
            node_mass[ib] += self.m_mass[j] * frac_b

        for j in saturated_now:
            mid = self.member_ids[j]
            if mid not in self._saturated:
                self._saturated.add(mid)
                self.log_event("actuator_saturated", {"member": mid})
        if self._saturated:
            now = {self.member_ids[j] for j in saturated_now}
            for mid in sorted(self._saturated - now):
                self._saturated.discard(mid)

        gx, gy, gz = self.gravity
        for i in range(n):
            fx[i] += node_mass[i] * gx
            fy[i] += node_mass[i] * gy
            fz[i] += node_mass[i] * gz
        self.node_mass = node_mass

        # 5. contact detection (nodes then pads, sorted order)
        qpt = self.env.query_pt
        contacts = []
        for i in range(n):
            hit = qpt(px[i], py[i], pz[i])
            if hit is not None:
                depth, nx, ny, nz, fi = hit
                contacts.append(("node:" + self.node_ids[i], i, -1, 0.0,
                                 px[i], py[i], pz[i], depth, nx, ny, nz, fi))
        for j in range(m):
            off = self.m_pad[j]
            if off <= 0.0:
                continue
            ia = ia_l[j]
            cx = px[ia] + off * ux_l[j]
            cy = py[ia] + off * uy_l[j]
            cz = pz[ia] + off * uz_l[j]
            hit = qpt(cx, cy, cz)
            if hit is not None:
                depth, nx, ny, nz, fi = hit
                contacts.append(("pad:" + self.member_ids[j], ia, ib_l[j],
                                 off / L_l[j], cx, cy, cz, depth, nx, ny, nz, fi))

        keys = frozenset(c[0] for c in contacts)
        if keys != self._prev_contact_keys:
            for k in sorted(keys - self._prev_contact_keys):
                self.log_event("contact_made", {"owner": k})
                self.contact_modes.setdefault(k, MODE_STICKING)
            for k in sorted(self._prev_contact_keys - keys):
                self.log_event("contact_broken", {"owner": k})
                self.contact_modes.pop(k, None)
            self._prev_contact_keys = keys

        # 6. penalty normal forces (dynamics side)
        pen_n = []
        for c in contacts:
            key, i0, i1, t, ccx, ccy, ccz, depth, nx, ny, nz, fi = c
            kc = self.k_contact[i0]
            if i1 < 0:
                wvx, wvy, wvz = vx[i0], vy[i0], vz[i0]
            else:
                w0 = 1.0 - t
                wvx = w0 * vx[i0] + t * vx[i1]
                wvy = w0 * vy[i0] + t * vy[i1]
                wvz = w0 * vz[i0] + t * vz[i1]
            vn = wvx * nx + wvy * ny + wvz * nz
            d_eff = depth if depth < p.max_penetration else p.max_penetration
            f = kc * d_eff - self.c_contact[i0] * vn
            if f < 0.0:
                f = 0.0
            pen_n.append(f)
            if i1 < 0:
                fx[i0] += nx * f
                fy[i0] += ny * f
                fz[i0] += nz * f
            else:
                w0 = 1.0 - t
                fx[i0] += nx * f * w0
                fy[i0] += ny * f * w0
                fz[i0] += nz * f * w0
                fx[i1] += nx * f * t
                fy[i1] += ny * f * t
                fz[i1] += nz * f * t

        # 7. quasi-static normal redistribution from the component COM
        if (keys != self._redis_keys
                or self.step_count % p.redistribution_stride == 0):
            self._recompute_redistribution(contacts, pen_n, node_mass, keys)
        cache = self._redis_cache
        n_report = [cache.get(c[0], pen_n[k]) for k, c in enumerate(contacts)]

        # 8. tentative velocities then friction impulses (PGS, fixed order)
        damping = p.damping
        denom = [0.0] * n
        vtx = [0.0] * n
        vty = [0.0] * n
        vtz = [0.0] * n
        for i in range(n):
            nm = node_mass[i]
            if nm < 1e-3:
                nm = 1e-3
            dnm = nm + dt * damping
            denom[i] = dnm
            vtx[i] = (nm * vx[i] + dt * fx[i]) / dnm
            vty[i] = (nm * vy[i] + dt * fy[i]) / dnm
            vtz[i] = (nm * vz[i] + dt * fz[i]) / dnm

        features = self.env.features
        fr_data = []
        for k, c in enumerate(contacts):
            key, i0, i1, t, ccx, ccy, ccz, depth, nx, ny, nz, fi = c
            ncone = n_report[k]
            if ncone <= 0.0:
                fr_data.append(None)
                continue
            fr = features[fi].friction
            if i1 < 0:
                m_c = denom[i0]
            else:
                w0 = 1.0 - t
                m_c = 1.0 / (w0 * w0 / denom[i0] + t * t / denom[i1])
            mode = self.contact_modes.get(key, MODE_STICKING)
            mu = fr.mu_static if mode == MODE_STICKING else fr.mu_kinetic
            fr_data.append([key, i0, i1, t, nx, ny, nz, m_c,
                            mu * ncone * dt, fr.mu_static * ncone * dt,
                            0.0, 0.0, 0.0])

        for _ in range(p.friction_iterations):
            for kd in fr_data:
                if kd is None:
                    continue
                i0, i1, t = kd[1], kd[2], kd[3]
                nx, ny, nz = kd[4], kd[5], kd[6]
                if i1 < 0:
                    wvx, wvy, wvz = vtx[i0], vty[i0], vtz[i0]
                else:
                    w0 = 1.0 - t
                    wvx = w0 * vtx[i0] + t * vtx[i1]
                    wvy = w0 * vty[i0] + t * vty[i1]
                    wvz = w0 * vtz[i0] + t * vtz[i1]
                vn = wvx * nx + wvy * ny + wvz * nz
                tx = wvx - vn * nx
                ty = wvy - vn * ny
                tz = wvz - vn * nz
                m_c = kd[7]
                njx = kd[10] - m_c * tx
                njy = kd[11] - m_c * ty
                njz = kd[12] - m_c * tz
                mag = math.sqrt(njx * njx + njy * njy + njz * njz)
                cap = kd[8]
                if mag > cap:
                    s = cap / mag
                    njx *= s
                    njy *= s
                    njz *= s
                ddx = njx - kd[10]
                ddy = njy - kd[11]
                ddz = njz - kd[12]
                kd[10], kd[11], kd[12] = njx, njy, njz
                if i1 < 0:
                    vtx[i0] += ddx / denom[i0]
                    vty[i0] += ddy / denom[i0]
                    vtz[i0] += ddz / denom[i0]
                else:
                    w0 = 1.0 - t
                    vtx[i0] += w0 * ddx / denom[i0]
                    vty[i0] += w0 * ddy / denom[i0]
                    vtz[i0] += w0 * ddz / denom[i0]
                    vtx[i1] += t * ddx / denom[i1]
                    vty[i1] += t * ddy / denom[i1]
                    vtz[i1] += t * ddz / denom[i1]

        # 9. finalize modes + contact report
        eps = p.settle_velocity_eps
        report = []
        for k, c in enumerate(contacts):
            key, i0, i1, t, ccx, ccy, ccz, depth, nx, ny, nz, fi = c
            kd = fr_data[k]
            if kd is None:
                self.contact_modes[key] = MODE_STICKING
                report.append((key, ccx, ccy, ccz, nx, ny, nz, n_report[k],
                               MODE_SEPARATED, fi, 0.0, 0.0, 0.0))
                continue
            if i1 < 0:
                wvx, wvy, wvz = vtx[i0], vty[i0], vtz[i0]
            else:
                w0 = 1.0 - t
                wvx = w0 * vtx[i0] + t * vtx[i1]
                wvy = w0 * vty[i0] + t * vty[i1]
                wvz = w0 * vtz[i0] + t * vtz[i1]
            vn = wvx * nx + wvy * ny + wvz * nz
            tx = wvx - vn * nx
            ty = wvy - vn * ny
            tz = wvz - vn * nz
            tmag = math.sqrt(tx * tx + ty * ty + tz * tz)
            jmag = math.sqrt(kd[10] ** 2 + kd[11] ** 2 + kd[12] ** 2)
            if tmag < eps and jmag < kd[9] * (1.0 - 1e-12):
                mode = MODE_STICKING
            else:
                mode = MODE_SLIDING
            self.contact_modes[key] = mode
            report.append((key, ccx, ccy, ccz, nx, ny, nz, n_report[k], mode, fi,
                           kd[10] / dt, kd[11] / dt, kd[12] / dt))
        self._contact_report = report

        # 10. integrate
        cap = p.velocity_cap
        maxs = 0.0
        for i in range(n):
            if self.pinned[i]:
                vtx[i] = vty[i] = vtz[i] = 0.0
                continue
            a = abs(vtx[i])
            if a > maxs:
                maxs = a
            a = abs(vty[i])
            if a > maxs:
                maxs = a
            a = abs(vtz[i])
            if a > maxs:
                maxs = a
            px[i] += dt * vtx[i]
            py[i] += dt * vty[i]
            pz[i] += dt * vtz[i]
        self.vx, self.vy, self.vz = vtx, vty, vtz
        if maxs > cap:
            raise NumericalDivergence(
                f"node speed {maxs:.1f} m/s exceeds cap at t={self.time:.3f}")
        self._max_speed_last = maxs
        self.step_count += 1
        self.time += dt

        # 11. connector automatics (magnetic separation, proximity attach)
        if self.has_magnetic or self._attach_cooldown:
            self._docking_passes()

    # -- redistribution -------------------------------------------------------

    def _recompute_redistribution(self, contacts, pen_n, node_mass, keys):
        p = self.params
        cache: dict[str, float] = {}
        outside_now: set[str] = set()
        g = abs(self.gravity[2])
        comp_of = self.component_of_node
        for comp in range(self.n_components):
            sup = []
            w_extra = 0.0
            for k, c in enumerate(contacts):
                if comp_of[c[1]] != comp:
                    continue
                if c[10] > p.support_normal_min_z:   # nz
                    sup.append(c)
                else:
                    cache[c[0]] = pen_n[k]
                    w_extra += pen_n[k] * c[10]
            if not sup:
                continue
            wsum = 0.0
            cx = cy = cz = 0.0
            for i in range(self.n_nodes):
                if comp_of[i] == comp:
                    mi = node_mass[i]
                    wsum += mi
                    cx += mi * self.px[i]
                    cy += mi * self.py[i]
                    cz += mi * self.pz[i]
            cx /= wsum
            cy /= wsum
            cz /= wsum
            weight = wsum * g - w_extra
            if weight <= 0.0:
                for c in sup:
                    cache[c[0]] = 0.0
                continue
            kk = len(sup)
            A = np.zeros((3, kk))
            for col, c in enumerate(sup):
                rx, ry, rz = c[4] - cx, c[5] - cy, c[6] - cz
                nx, ny, nz = c[8], c[9], c[10]
                A[0, col] = nz
                A[1, col] = ry * nz - rz * ny
                A[2, col] = rz * nx - rx * nz
            b = np.array([weight, 0.0, 0.0])
            sol = _min_norm_nonneg(A, b)
            ck = self.component_key[comp]
            if sol is None:
                best, _ = _scipy_nnls(A, b)
                for col, c in enumerate(sup):
                    cache[c[0]] = float(best[col])
                outside_now.add(ck)
                if ck not in self._tumbling:
                    self._tumbling.add(ck)
                    self.log_event("tumble_onset", {"component": ck})
            else:
                for col, c in enumerate(sup):
                    cache[c[0]] = float(sol[col])
                self._tumbling.discard(ck)
        self._redis_cache = cache
        self._redis_keys = keys
        self._com_outside = outside_now

    # -- connector automatics ---------------------------------------------------

    def _docking_passes(self):
        topo = self.topology
        # magnetic separation: an attached magnetic end whose member tension
        # exceeds the separation force splits off (compression always holds);
        # a fresh merge gets a short grace while its shock rings out
        if self._sep_grace_until > self.time:
            self._proximity_pass()
            return
        for j, mid in enumerate(self.member_ids):
            sep = self.m_sep_force[j]
            if sep is None or self.member_tension[j] <= sep + 1e-12:
                continue
            mem = topo.members[mid]
            for end, node_id, phase in (
                ("a", mem.end_a, mem.dock_phase_a),
                ("b", mem.end_b, mem.dock_phase_b),
            ):
                if phase == DockPhase.LATCHED:
                    continue
                if topo.degree(node_id) < 2:
                    continue
                from .core import split_node
                topo2, new_id = split_node(topo, node_id, [(mid, end)])
                self.log_event("detach", {
                    "member": mid, "end": end, "node": node_id,
                    "tension": self.member_tension[j],
                })
                self._attach_cooldown.add(tuple(sorted((node_id, new_id))))
                self._swap_topology(topo2)
                return  # one structural change per step
        self._proximity_pass()

    def _proximity_pass(self):
        radius = self.dock_params.proximity_radius
        clear_r = radius * self.dock_params.reattach_clearance
        nidx = self.nidx
        px, py, pz = self.px, self.py, self.pz
        for pair in sorted(self._attach_cooldown):
            a, b = pair
            if a not in nidx or b not in nidx:
                self._attach_cooldown.discard(pair)
                continue
            i0, i1 = nidx[a], nidx[b]
            d = math.sqrt((px[i0] - px[i1]) ** 2 + (py[i0] - py[i1]) ** 2 +
                          (pz[i0] - pz[i1]) ** 2)
            if d > clear_r:
                self._attach_cooldown.discard(pair)
        cands = self._magnet_nodes
        for x in range(len(cands)):
            a = cands[x]
            i0 = nidx[a]
            for y in range(x + 1, len(cands)):
                b = cands[y]
                if b in self._adjacent[a]:
                    continue  # merging would collapse a member
                if (a, b) in self._attach_cooldown or (b, a) in self._attach_cooldown:
                    continue
                i1 = nidx[b]
                d = math.sqrt((px[i0] - px[i1]) ** 2 + (py[i0] - py[i1]) ** 2 +
                              (pz[i0] - pz[i1]) ** 2)
                if d <= radius:
                    from .core import merge_nodes
                    topo2 = merge_nodes(self.topology, a, b)
                    self.log_event("attach", {"nodes": [a, b], "joint": a})
                    self._sep_grace_until = self.time + self.dock_params.attach_grace
                    self._swap_topology(topo2)
                    return  # one merge per step keeps bookkeeping simple

    def _swap_topology(self, topo2: Topology):
        """Replace the structure, carrying dynamic state over by id."""
        vels = {nid: (self.vx[i], self.vy[i], self.vz[i])
                for i, nid in enumerate(self.node_ids)}
        pos_by_id = {nid: Vec3(self.px[i], self.py[i], self.pz[i])
                     for i, nid in enumerate(self.node_ids)}
        topo_pos = {nid: pos_by_id[nid] for nid in topo2.nodes if nid in pos_by_id}
        merged = topo2.with_positions(topo_pos)
        refs = {mid: (self.ref_a[j], self.ref_b[j], self.tgt_a[j], self.tgt_b[j],
                      self.rate_a[j], self.rate_b[j])
                for j, mid in enumerate(self.member_ids)}
        self._load_topology(merged, velocities=vels)
        for j, mid in enumerate(self.member_ids):
            if mid in refs:
                (self.ref_a[j], self.ref_b[j], self.tgt_a[j], self.tgt_b[j],
                 self.rate_a[j], self.rate_b[j]) = refs[mid]
        self._prev_contact_keys = frozenset()
        self._redis_keys = frozenset()

    # -- running ---------------------------------------------------------------

    def run_steps(self, count: int, on_step: Optional[Callable] = None):
        if on_step is None:
            for _ in range(count):
                self.step_once()
        else:
            for _ in range(count):
                self.step_once()
                on_step(self)

    def run_time(self, duration: float, on_step: Optional[Callable] = None):
        self.run_steps(max(1, int(round(duration / self.params.dt))), on_step)

    def run_until_settled(self, timeout: Optional[float] = None,
                          on_step: Optional[Callable] = None,
                          require_targets: bool = True):
        p = self.params
        limit = p.settle_timeout if timeout is None else timeout
        deadline = self.time + limit
        quiet = 0
        while self.time < deadline:
            self.step_once()
            if on_step is not None:
                on_step(self)
            if self._max_speed_last < p.settle_velocity_eps and (
                    not require_targets or self.lengths_settled()):
                quiet += 1
                if quiet >= p.settle_consecutive:
                    return
            else:
                quiet = 0
        raise SettleTimeout(
            f"no rest state within {limit:.1f} s (max speed {self.max_speed():.2e})")

    # -- snapshots ---------------------------------------------------------------

    def contact_points(self) -> tuple:
        out = []
        feats = self.env.features
        for (key, ccx, ccy, ccz, nx, ny, nz, nf, mode, fi, ffx, ffy, ffz) in self._contact_report:
            out.append(ContactPoint(
                owner=key,
                position=Vec3(ccx, ccy, ccz),
                surface_normal=Vec3(nx, ny, nz),
                normal_force=nf,
                mode=mode,
                friction=feats[fi].friction,
                feature=feats[fi].label,
                friction_force=Vec3(ffx, ffy, ffz),
            ))
        return tuple(out)

    def to_state(self) -> QuasiStaticState:
        positions = {nid: Vec3(self.px[i], self.py[i], self.pz[i])
                     for i, nid in enumerate(self.node_ids)}
        topo = self.topology.with_positions(positions)
        members = {}
        for j, mid in enumerate(self.member_ids):
            mem = topo.members[mid]
            tgt = self.core_len[j] + self.tgt_a[j] + self.tgt_b[j]
            tgt = min(max(tgt, self.m_min[j]), self.m_max[j])
            members[mid] = replace(
                mem, target_length=tgt,
                ext_a=self.ref_a[j], ext_b=self.ref_b[j],
            )
        topo = Topology(topo.nodes, members, topo.allow_parallel_edges)
        vels = {nid: Vec3(self.vx[i], self.vy[i], self.vz[i])
                for i, nid in enumerate(self.node_ids)}
        return QuasiStaticState(
            topology=topo,
            node_velocities=vels,
            contacts=self.contact_points(),
            time=self.time,
            event_log=tuple(self.events),
        )

    def adopt_state(self, st: "QuasiStaticState"):
        """Reload structure/positions from a state, preserving actuator refs."""
        refs = {mid: (self.ref_a[j], self.ref_b[j], self.tgt_a[j], self.tgt_b[j],
                      self.rate_a[j], self.rate_b[j])
                for j, mid in enumerate(self.member_ids)}
        vels = {nid: (v.x, v.y, v.z) for nid, v in st.node_velocities.items()}
        self.events = list(st.event_log)
        self._load_topology(st.topology, velocities=vels)
        for j, mid in enumerate(self.member_ids):
            if mid in refs:
                (self.ref_a[j], self.ref_b[j], self.tgt_a[j], self.tgt_b[j],
                 self.rate_a[j], self.rate_b[j]) = refs[mid]
        self._prev_contact_keys = frozenset()
        self._redis_keys = frozenset()

    def dock(self, node_a: str, node_b: str,
             align_tol: Optional[float] = None, angle_tol: Optional[float] = None):
        """Connect two nodes using the platform's connector semantics."""
        from . import docking
        topo = self.topology
        if node_a not in topo.nodes or node_b not in topo.nodes:
            raise docking.DockRefused(f"unknown node in dock({node_a}, {node_b})")
        kinds = {mem.spec.connector_kind for mem in topo.members_at(node_a)}
        st = self.to_state()
        from .core import ConnectorKind
        if ConnectorKind.MAGNETIC in kinds:
            i0, i1 = self.nidx[node_a], self.nidx[node_b]
            d = math.sqrt((self.px[i0] - self.px[i1]) ** 2 +
                          (self.py[i0] - self.py[i1]) ** 2 +
                          (self.pz[i0] - self.pz[i1]) ** 2)
            if d > self.dock_params.proximity_radius:
                raise docking.DockRefused(
                    f"magnetic tips {d * 1000:.1f} mm apart exceed the snap radius")
            from .core import merge_nodes
            topo2 = merge_nodes(topo, node_a, node_b)
            self.log_event("attach", {"nodes": [node_a, node_b], "joint": node_a})
            self._sep_grace_until = self.time + self.dock_params.attach_grace
            self._swap_topology(topo2)
            return
        # "dock A B" inserts the connector at node A into the port at B;
        # the insert member is the first not-yet-latched member end at A
        insert = None
        for mem in topo.members_at(node_a):
            end = "a" if mem.end_a == node_a else "b"
            phase = mem.dock_phase_a if end == "a" else mem.dock_phase_b
            if phase != DockPhase.LATCHED and node_b not in mem.ends():
                insert = (mem.id, end)
                break
        if insert is None:
            raise docking.DockRefused(f"no free connector end at {node_a}")
        st2 = docking.vtt_dock(st, insert[0], node_b,
                               align_tol=align_tol, angle_tol=angle_tol,
                               dock_params=self.dock_params,
                               insert_end=insert[1])
        self.adopt_state(st2)

    def undock(self, node_id: str):
        from . import docking
        st2 = docking.vtt_undock(self.to_state(), node_id)
        self.adopt_state(st2)

    def deactivate(self, member_id: str, end: str):
        from . import docking
        st2 = docking.deactivate(self.to_state(), member_id, end)
        self.adopt_state(st2)

    def reactivate(self, member_id: str, end: str):
        from . import docking
        st2 = docking.reactivate(self.to_state(), member_id, end,
                                 dock_params=self.dock_params)
        self.adopt_state(st2)

    def node_position(self, node_id: str) -> Vec3:
        i = self.nidx[node_id]
        return Vec3(self.px[i], self.py[i], self.pz[i])

    def com_of_component(self, index: int = 0) -> Vec3:
        wsum = cx = cy = cz = 0.0
        for i in range(self.n_nodes):
            if self.component_of_node[i] == index:
                mi = self.node_mass[i]
                wsum += mi
                cx += mi * self.px[i]
                cy += mi * self.py[i]
                cz += mi * self.pz[i]
        return Vec3(cx / wsum, cy / wsum, cz / wsum)

    _max_speed_last = 0.0


# ---------------------------------------------------------------------------
# Pure operations over states
# ---------------------------------------------------------------------------

def _engine_from_state(state: QuasiStaticState, env: Environment,
                       params: SolverParams) -> Engine:
    eng = Engine(state.topology, env, params, time=state.time)
    eng.events = list(state.event_log)
    for nid, v in state.node_velocities.items():
        if nid in eng.nidx:
            i = eng.nidx[nid]
            eng.vx[i], eng.vy[i], eng.vz[i] = v.x, v.y, v.z
    return eng


def step(state: QuasiStaticState, env: Environment,
         commands: Optional[dict] = None,
         params: SolverParams = SolverParams()) -> QuasiStaticState:
    """One integration step as a pure state -> state function."""
    eng = _engine_from_state(state, env, params)
    for label, value in sorted((commands or {}).items()):
        eng.set_length(label, value)
    eng.step_once()
    return eng.to_state()


def settle(state: QuasiStaticState, env: Environment,
           params: SolverParams = SolverParams(),
           timeout: Optional[float] = None) -> QuasiStaticState:
    """Run steps until every node is slower than the settle threshold."""
    eng = _engine_from_state(state, env, params)
    eng.run_until_settled(timeout=timeout)
    return eng.to_state()


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = "time,node,x,y,z,contact_mode,normal_force"


def format_float(x: float) -> str:
    """Shortest round-trip decimal form; byte-stable across runs."""
    return repr(float(x))


def trajectory_rows(engine: Engine) -> list[str]:
    """One CSV row per node at the engine's current time."""
    by_node = {}
    for rep in engine._contact_report:
        if rep[0].startswith("node:"):
            by_node[rep[0][5:]] = (rep[8], rep[7])
    rows = []
    t = format_float(engine.time)
    for i, nid in enumerate(engine.node_ids):
        mode, nf = by_node.get(nid, ("none", 0.0))
        rows.append(
            f"{t},{nid},{format_float(engine.px[i])},{format_float(engine.py[i])},"
            f"{format_float(engine.pz[i])},{mode},{format_float(nf)}"
        )
    return rows


def write_trajectory_csv(path: str, rows: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")


def force_curve(lifted_mass: float, start_deg: float = 1.0, stop_deg: float = 90.0,
                step_deg: float = 0.5) -> list[tuple[float, float]]:
    """(alpha_deg, total expansion force) samples of the pop-up law."""
    if start_deg <= 0.0:
        raise DegenerateAngle("force curve must start above 0 degrees")
    out = []
    k = 0
    while True:
        a = start_deg + k * step_deg
        if a > stop_deg + 1e-9:
            break
        out.append((a, expansion_force(lifted_mass, math.radians(a))))
        k += 1
    return out


def write_force_curve_csv(path: str, lifted_mass: float,
                          start_deg: float = 1.0, stop_deg: float = 90.0,
                          step_deg: float = 0.5) -> None:
    pts = force_curve(lifted_mass, start_deg, stop_deg, step_deg)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("alpha_deg,force_N\n")
        for a, f in pts:
            fh.write(f"{format_float(a)},{format_float(f)}\n")
