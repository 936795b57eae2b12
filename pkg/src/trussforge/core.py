"""
trussforge.core
===============
Data model for truss robots: nodes (spherical joints), prismatic members,
platform parameter bundles, topology construction, shape classification and
mass accounting.

Topologies are value objects: every operation returns a new, validated
Topology and never mutates its input, so snapshots can be shared freely
across threads.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class TrussforgeError(Exception):
    """Base class for all library errors."""


class LengthOutOfRange(TrussforgeError):
    def __init__(self, member_id: str, length: float, lo: float, hi: float):
        super().__init__(
            f"member {member_id!r} length {length:.4f} m outside [{lo}, {hi}]"
        )
        self.member_id = member_id
        self.length = length


class DuplicateEdge(TrussforgeError):
    pass


class DanglingIndex(TrussforgeError):
    pass


class SelfMerge(TrussforgeError):
    pass


class EmptyPartition(TrussforgeError):
    pass


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vec3:
    """A point or force in the global inertial frame (z up, SI units)."""
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"non-finite Vec3 ({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def distance_to(self, other: "Vec3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


# ---------------------------------------------------------------------------
# Platform parameter bundles
# ---------------------------------------------------------------------------

class ConnectorKind(str, Enum):
    MAGNETIC = "magnetic"
    MECHANICAL = "mechanical"


@dataclass(frozen=True)
class PlatformSpec:
    """Per-platform actuation, mass and connector parameters.

    ``mass_split`` is the fraction of the member mass lumped at end ``a``
    (the actuator end); the remainder sits at end ``b``. ``pad_offset`` is
    the distance of the sliding ground pad from the actuator-end node along
    the member axis (0 means the platform has no pads and only the end
    nodes touch the ground).
    """
    name: str
    min_length: float
    max_length: float
    max_actuation_force: float
    actuation_rate: float
    member_mass: float
    mass_split: float
    connector_kind: ConnectorKind
    connector_separation_force: Optional[float] = None  # magnetic only
    pad_offset: float = 0.0
    expansion_actuators_per_member: int = 1

    def __post_init__(self):
        if not (0.0 < self.min_length < self.max_length):
            raise ValueError("require 0 < min_length < max_length")
        if self.max_actuation_force <= 0:
            raise ValueError("max_actuation_force must be > 0")
        if not (0.0 < self.mass_split < 1.0):
            raise ValueError("mass_split must be in (0, 1)")
        if self.pad_offset < 0:
            raise ValueError("pad_offset must be >= 0")

    @property
    def travel(self) -> float:
        return self.max_length - self.min_length


VTT = PlatformSpec(
    name="vtt",
    min_length=0.94,
    max_length=2.13,
    max_actuation_force=220.0,
    actuation_rate=0.02,
    member_mass=1.92,
    mass_split=0.65,
    connector_kind=ConnectorKind.MECHANICAL,
    connector_separation_force=None,
    pad_offset=0.54,
    expansion_actuators_per_member=1,
)

TRUSS_LINK = PlatformSpec(
    name="truss_link",
    min_length=0.28,
    max_length=0.48,
    max_actuation_force=80.0,
    actuation_rate=0.02,
    member_mass=0.28,
    mass_split=0.5,
    connector_kind=ConnectorKind.MAGNETIC,
    connector_separation_force=13.6,
    pad_offset=0.0,
    expansion_actuators_per_member=2,
)

PLATFORMS = {VTT.name: VTT, TRUSS_LINK.name: TRUSS_LINK}


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------

class DockPhase(str, Enum):
    """Mechanical connector latch progression. Only LATCHED transmits force
    permanently; magnetic platforms stay FREE and rely on shared nodes."""
    FREE = "free"
    ROTATION_LOCKED = "rotation_locked"
    INSERTED = "inserted"
    LATCHED = "latched"


@dataclass(frozen=True)
class Node:
    id: str
    position: Vec3
    pinned: bool = False
    # Optional docking port direction for mechanical platforms.
    port_axis: Optional[Vec3] = None


@dataclass(frozen=True)
class Member:
    """Prismatic strut between two spherical-joint nodes.

    ``current_length`` is always re-derived from node positions by the
    solver; ``target_length`` is the commanded setpoint. ``ext_a``/``ext_b``
    are the per-end servo extensions for two-actuator platforms
    (ext_a + ext_b + core == current length at rest).
    """
    id: str
    end_a: str
    end_b: str
    current_length: float
    target_length: float
    spec: PlatformSpec
    connector_active_a: bool = True
    connector_active_b: bool = True
    dock_phase_a: DockPhase = DockPhase.FREE
    dock_phase_b: DockPhase = DockPhase.FREE
    ext_a: float = 0.0
    ext_b: float = 0.0

    def ends(self) -> tuple[str, str]:
        return (self.end_a, self.end_b)

    def other_end(self, node_id: str) -> str:
        if node_id == self.end_a:
            return self.end_b
        if node_id == self.end_b:
            return self.end_a
        raise KeyError(f"{node_id} is not an end of member {self.id}")


@dataclass(frozen=True)
class Topology:
    """A (possibly disconnected) graph of nodes and members."""
    nodes: dict[str, Node]
    members: dict[str, Member]
    allow_parallel_edges: bool = False

    # -- validation --------------------------------------------------------

    def validate(self) -> "Topology":
        seen_pairs = set()
        for mid in sorted(self.members):
            m = self.members[mid]
            if m.end_a == m.end_b:
                raise DanglingIndex(f"member {mid} loops on node {m.end_a}")
            for end in m.ends():
                if end not in self.nodes:
                    raise DanglingIndex(f"member {mid} references missing node {end}")
            pair = tuple(sorted(m.ends()))
            if pair in seen_pairs and not self.allow_parallel_edges:
                raise DuplicateEdge(f"duplicate member between {pair[0]} and {pair[1]}")
            seen_pairs.add(pair)
            length = self.nodes[m.end_a].position.distance_to(self.nodes[m.end_b].position)
            # Solver compliance keeps |pos_b - pos_a| within ~1 cm of the
            # stored value; only reject genuinely impossible lengths.
            if not (m.spec.min_length - 0.02 <= length <= m.spec.max_length + 0.02):
                raise LengthOutOfRange(mid, length, m.spec.min_length, m.spec.max_length)
        referenced = {e for m in self.members.values() for e in m.ends()}
        for nid in self.nodes:
            if nid not in referenced:
                raise DanglingIndex(f"node {nid} has no member ends attached")
        return self

    # -- queries -----------------------------------------------------------

    def node_ids(self) -> list[str]:
        return sorted(self.nodes)

    def member_ids(self) -> list[str]:
        return sorted(self.members)

    def members_at(self, node_id: str) -> list[Member]:
        return [
            self.members[mid]
            for mid in sorted(self.members)
            if node_id in self.members[mid].ends()
        ]

    def degree(self, node_id: str) -> int:
        return len(self.members_at(node_id))

    def platform(self) -> PlatformSpec:
        specs = {m.spec.name for m in self.members.values()}
        if len(specs) != 1:
            raise ValueError(f"topology mixes platforms: {sorted(specs)}")
        return next(iter(self.members.values())).spec

    def components(self) -> list[frozenset[str]]:
        """Connected components as sorted frozensets of node ids."""
        parent: dict[str, str] = {n: n for n in self.nodes}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for mid in sorted(self.members):
            m = self.members[mid]
            ra, rb = find(m.end_a), find(m.end_b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        groups: dict[str, set[str]] = {}
        for n in sorted(self.nodes):
            groups.setdefault(find(n), set()).add(n)
        return sorted((frozenset(g) for g in groups.values()), key=lambda g: sorted(g)[0])

    def member_ids_in(self, component: frozenset[str]) -> list[str]:
        return [mid for mid in sorted(self.members) if self.members[mid].end_a in component]

    def subgraph(self, component: frozenset[str]) -> "Topology":
        nodes = {n: self.nodes[n] for n in component}
        members = {
            mid: self.members[mid]
            for mid in sorted(self.members)
            if self.members[mid].end_a in component
        }
        return Topology(nodes, members, self.allow_parallel_edges)

    # -- transforms ----------------------------------------------------------

    def with_positions(self, positions: dict[str, Vec3]) -> "Topology":
        nodes = {
            nid: replace(node, position=positions.get(nid, node.position))
            for nid, node in self.nodes.items()
        }
        members = {}
        for mid, m in self.members.items():
            length = nodes[m.end_a].position.distance_to(nodes[m.end_b].position)
            members[mid] = replace(m, current_length=length)
        return Topology(nodes, members, self.allow_parallel_edges)

    def translated(self, d: Vec3) -> "Topology":
        return self.with_positions(
            {nid: n.position + d for nid, n in self.nodes.items()}
        )

    def transformed(self, yaw: float, d: Vec3) -> "Topology":
        """Rigid transform: rotate by yaw about +z, then translate by d."""
        c, s = math.cos(yaw), math.sin(yaw)
        out = {}
        for nid, n in self.nodes.items():
            p = n.position
            out[nid] = Vec3(c * p.x - s * p.y + d.x, s * p.x + c * p.y + d.y, p.z + d.z)
        return self.with_positions(out)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_topology(
    spec: PlatformSpec,
    node_positions: Sequence[Vec3],
    edges: Sequence[tuple[int, int]],
    node_names: Optional[Sequence[str]] = None,
    member_names: Optional[Sequence[str]] = None,
    allow_parallel_edges: bool = False,
) -> Topology:
    """Build and validate a topology from positions and index pairs.

    Member ``end_a`` is the actuator end (heavy end for asymmetric
    platforms) and is the first index of each pair.
    """
    n = len(node_positions)
    if node_names is None:
        node_names = [f"n{i:02d}" for i in range(n)]
    if member_names is None:
        member_names = [f"m{i:02d}" for i in range(len(edges))]
    nodes: dict[str, Node] = {}
    members: dict[str, Member] = {}
    for name, pos in zip(node_names, node_positions):
        nodes[name] = Node(id=name, position=pos)
    for name, (ia, ib) in zip(member_names, edges):
        if not (0 <= ia < n and 0 <= ib < n):
            raise DanglingIndex(f"edge ({ia}, {ib}) outside node range 0..{n - 1}")
        if ia == ib:
            raise DanglingIndex(f"edge ({ia}, {ib}) is a self-loop")
        a, b = node_names[ia], node_names[ib]
        length = node_positions[ia].distance_to(node_positions[ib])
        if not (spec.min_length <= length <= spec.max_length):
            raise LengthOutOfRange(name, length, spec.min_length, spec.max_length)
        ext = length - spec.min_length
        if spec.expansion_actuators_per_member >= 2:
            ext_a = ext_b = ext / 2.0
        else:
            ext_a, ext_b = ext, 0.0
        members[name] = Member(
            id=name, end_a=a, end_b=b,
            current_length=length, target_length=length, spec=spec,
            ext_a=ext_a, ext_b=ext_b,
        )
    return Topology(nodes, members, allow_parallel_edges).validate()


def flat_tetra_pattern(spec: PlatformSpec, scale: float, variant: str) -> Topology:
    """Planar fold-up patterns for a tetrahedron.

    ``six_link``: diamond-with-tail (front tip F, crossbar L-R, rear tip K,
    tail node T behind K). Folding about the L-R crossbar and joining T to F
    yields the complete tetrahedron graph.

    ``seven_link``: central node C inside triangle F-L-R plus a trailing
    tail member C-T. Raising C out of plane yields a tetrahedron with the
    tail pendant.
    """
    if variant == "six_link":
        s = scale
        h = s * math.sqrt(3) / 2.0
        pos = [
            Vec3(0.0, h, 0.0),      # F front tip
            Vec3(-s / 2, 0.0, 0.0),  # L
            Vec3(s / 2, 0.0, 0.0),   # R
            Vec3(0.0, -h, 0.0),     # K rear tip
            Vec3(0.0, -h - s, 0.0),  # T tail end
        ]
        names = ["f", "l", "r", "k", "t"]
        edges = [(1, 0), (2, 0), (1, 2), (1, 3), (2, 3), (3, 4)]
        member_names = ["fl", "fr", "lr", "kl", "kr", "tail"]
        return build_topology(spec, pos, edges, names, member_names)
    if variant == "seven_link":
        # Central node C at the centroid of triangle F-L-R, so the centroid
        # links are side/sqrt(3). The side is clamped into the band where
        # both the sides and the centroid links fit the platform's length
        # range; "scale" is the requested side length before clamping.
        lo = spec.min_length * math.sqrt(3) * 1.01
        hi = spec.max_length * 0.98
        if lo > hi:
            raise LengthOutOfRange("lr", scale, spec.min_length, spec.max_length)
        side = min(max(scale, lo), hi)
        r = side / math.sqrt(3)
        tail_len = min(max(scale, spec.min_length * 1.05), spec.max_length * 0.95)
        tail_dir = (math.cos(-math.pi / 6), math.sin(-math.pi / 6))  # out past R
        pos = [
            Vec3(0.0, 0.0, 0.0),          # C central (future apex)
            Vec3(0.0, r, 0.0),            # F front vertex
            Vec3(-side / 2, -r / 2, 0.0),  # L
            Vec3(side / 2, -r / 2, 0.0),   # R
            Vec3(side / 2 + tail_len * tail_dir[0],
                 -r / 2 + tail_len * tail_dir[1], 0.0),  # T trailing end
        ]
        # Actuator (heavy, pad-carrying) ends sit at the rear of the pattern
        # so the light front vertex keeps ground traction while crawling.
        names = ["c", "f", "l", "r", "t"]
        edges = [(2, 1), (3, 1), (2, 3), (0, 1), (2, 0), (3, 0), (3, 4)]
        member_names = ["fl", "fr", "lr", "cf", "cl", "cr", "tail"]
        return build_topology(spec, pos, edges, names, member_names)
    raise ValueError(f"unknown flat pattern variant {variant!r}")


# ---------------------------------------------------------------------------
# Shape classification
# ---------------------------------------------------------------------------

class ShapeClass(str, Enum):
    TRIANGLE = "Triangle"
    SQUARE = "Square"
    FLAT_TETRA_PATTERN_6 = "FlatTetraPattern6"
    FLAT_TETRA_PATTERN_7 = "FlatTetraPattern7"
    TETRAHEDRON = "Tetrahedron"
    FLATTENED_OCTAHEDRON = "FlattenedOctahedron"
    OCTAHEDRON = "Octahedron"
    RATCHET_TETRAHEDRON = "RatchetTetrahedron"
    OTHER = "Other"


def _octahedron_edges() -> list[tuple[int, int]]:
    # Outer triangle 0,1,2; inner triangle 3,4,5 (3 opposite 0, etc.).
    return [
        (0, 1), (1, 2), (2, 0),
        (3, 4), (4, 5), (5, 3),
        (0, 4), (0, 5), (1, 5), (1, 3), (2, 3), (2, 4),
    ]


# Reference graphs as (node_count, edge list). Parallel edges are collapsed
# before matching, so a doubled strut counts as one structural edge.
_CATALOG: list[tuple[ShapeClass, int, list[tuple[int, int]]]] = [
    (ShapeClass.TRIANGLE, 3, [(0, 1), (1, 2), (2, 0)]),
    (ShapeClass.SQUARE, 4, [(0, 1), (1, 2), (2, 3), (3, 0)]),
    (ShapeClass.TETRAHEDRON, 4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
    (ShapeClass.FLAT_TETRA_PATTERN_6, 5,
     [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (3, 4)]),
    # K4 + pendant: shared by the 7-link flat pattern and the ratchet
    # tetrahedron; classify() disambiguates by coplanarity.
    (ShapeClass.RATCHET_TETRAHEDRON, 5,
     [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (0, 4)]),
    (ShapeClass.OCTAHEDRON, 6, _octahedron_edges()),
]

# Graph classes whose flat (coplanar) geometry carries a distinct name.
_PLANAR_ALIAS = {
    ShapeClass.RATCHET_TETRAHEDRON: ShapeClass.FLAT_TETRA_PATTERN_7,
    ShapeClass.OCTAHEDRON: ShapeClass.FLATTENED_OCTAHEDRON,
}

_COPLANAR_TOL = 0.02  # m; generous vs contact compliance, strict vs real 3D


def _canonical_edges(n: int, edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    return frozenset(tuple(sorted(e)) for e in edges)


def _isomorphic(n1: int, e1: frozenset, n2: int, e2: frozenset) -> bool:
    if n1 != n2 or len(e1) != len(e2):
        return False
    deg1 = [0] * n1
    deg2 = [0] * n2
    for a, b in e1:
        deg1[a] += 1
        deg1[b] += 1
    for a, b in e2:
        deg2[a] += 1
        deg2[b] += 1
    if sorted(deg1) != sorted(deg2):
        return False
    # Brute force with degree pruning; catalog graphs have <= 6 nodes.
    order = sorted(range(n1), key=lambda i: deg1[i])
    for perm in itertools.permutations(range(n2)):
        if any(deg1[order[i]] != deg2[perm[i]] for i in range(n1)):
            continue
        mapping = {order[i]: perm[i] for i in range(n1)}
        if all(tuple(sorted((mapping[a], mapping[b]))) in e2 for a, b in e1):
            return True
    return False


def is_coplanar(topology: Topology, tol: float = _COPLANAR_TOL) -> bool:
    pts = np.array([topology.nodes[n].position.as_array() for n in topology.node_ids()])
    if len(pts) <= 3:
        return True
    centered = pts - pts.mean(axis=0)
    # Smallest singular value == extent along the best-fit plane normal.
    sv = np.linalg.svd(centered, compute_uv=False)
    return float(sv[-1]) < tol * math.sqrt(len(pts))


def classify(topology: Topology) -> ShapeClass:
    """Match the connection graph against the built-in shape catalog.

    Parallel edges are collapsed first. The two catalog collisions
    (K4+pendant, octahedron graph) are resolved by coplanarity: a flat
    configuration reports the flat-pattern name, a 3D one the solid's.
    """
    ids = topology.node_ids()
    index = {nid: i for i, nid in enumerate(ids)}
    edges = _canonical_edges(
        len(ids),
        ((index[m.end_a], index[m.end_b]) for m in topology.members.values()),
    )
    for shape, n_ref, edges_ref in _CATALOG:
        if _isomorphic(len(ids), edges, n_ref, _canonical_edges(n_ref, edges_ref)):
            if shape in _PLANAR_ALIAS and is_coplanar(topology):
                return _PLANAR_ALIAS[shape]
            return shape
    return ShapeClass.OTHER


# ---------------------------------------------------------------------------
# Mass accounting
# ---------------------------------------------------------------------------

def member_end_masses(member: Member) -> tuple[float, float]:
    """Lumped masses at (end_a, end_b) per the platform mass split."""
    m = member.spec.member_mass
    return (m * member.spec.mass_split, m * (1.0 - member.spec.mass_split))


def total_mass(topology: Topology) -> float:
    return sum(m.spec.member_mass for m in topology.members.values())


def center_of_mass(topology: Topology) -> Vec3:
    """Mass-weighted mean of the per-member end lumps."""
    acc = np.zeros(3)
    mass = 0.0
    for mid in topology.member_ids():
        m = topology.members[mid]
        ma, mb = member_end_masses(m)
        acc += ma * topology.nodes[m.end_a].position.as_array()
        acc += mb * topology.nodes[m.end_b].position.as_array()
        mass += ma + mb
    if mass == 0.0:
        return Vec3(0.0, 0.0, 0.0)
    return Vec3.from_array(acc / mass)


# ---------------------------------------------------------------------------
# Node surgery (docking bookkeeping)
# ---------------------------------------------------------------------------

def merge_nodes(topology: Topology, node_a: str, node_b: str) -> Topology:
    """Rewire all member ends of ``node_b`` onto ``node_a``.

    The surviving node sits at the average of the two positions (magnet/port
    equilibrium). Raises SelfMerge for identical ids.
    """
    if node_a == node_b:
        raise SelfMerge(f"cannot merge node {node_a} with itself")
    na, nb = topology.nodes[node_a], topology.nodes[node_b]
    mid_pos = Vec3(
        (na.position.x + nb.position.x) / 2,
        (na.position.y + nb.position.y) / 2,
        (na.position.z + nb.position.z) / 2,
    )
    nodes = {nid: n for nid, n in topology.nodes.items() if nid != node_b}
    nodes[node_a] = replace(na, position=mid_pos)
    members = {}
    for mid, m in topology.members.items():
        ea = node_a if m.end_a == node_b else m.end_a
        eb = node_a if m.end_b == node_b else m.end_b
        members[mid] = replace(m, end_a=ea, end_b=eb)
    return Topology(nodes, members, allow_parallel_edges=True).with_positions({})


def split_node(
    topology: Topology,
    node_id: str,
    detach_ends: Iterable[tuple[str, str]],
    new_node_id: Optional[str] = None,
) -> tuple[Topology, str]:
    """Move the listed (member_id, end) attachments onto a fresh node.

    The new node starts at the identical position; subsequent dynamics pull
    the pieces apart. Returns (topology, new_node_id).
    """
    detach = set(detach_ends)
    if not detach:
        raise EmptyPartition(f"no member ends given to split off node {node_id}")
    here = {(m.id, "a") for m in topology.members_at(node_id) if m.end_a == node_id}
    here |= {(m.id, "b") for m in topology.members_at(node_id) if m.end_b == node_id}
    if not detach <= here:
        raise EmptyPartition(f"{sorted(detach - here)} are not ends at node {node_id}")
    if detach == here:
        raise EmptyPartition(f"cannot split all ends off node {node_id}")
    if new_node_id is None:
        base = node_id.split("+")[0]
        k = 1
        new_node_id = f"{base}+{k}"
        while new_node_id in topology.nodes:
            k += 1
            new_node_id = f"{base}+{k}"
    src = topology.nodes[node_id]
    nodes = dict(topology.nodes)
    nodes[new_node_id] = Node(id=new_node_id, position=src.position)
    members = {}
    for mid, m in topology.members.items():
        ea = new_node_id if (mid, "a") in detach and m.end_a == node_id else m.end_a
        eb = new_node_id if (mid, "b") in detach and m.end_b == node_id else m.end_b
        members[mid] = replace(m, end_a=ea, end_b=eb)
    return Topology(nodes, members, topology.allow_parallel_edges), new_node_id


# ---------------------------------------------------------------------------
# Serialization (documented JSON schema)
# ---------------------------------------------------------------------------

def topology_to_dict(topology: Topology) -> dict:
    """Schema: {platform, nodes:[{id,x,y,z}], members:[{id,a,b,length,target}]}.

    Field and list ordering is fixed (sorted ids) so serialization is
    byte-stable for determinism tests.
    """
    platform = topology.platform().name if topology.members else ""
    return {
        "platform": platform,
        "nodes": [
            {
                "id": nid,
                "x": topology.nodes[nid].position.x,
                "y": topology.nodes[nid].position.y,
                "z": topology.nodes[nid].position.z,
            }
            for nid in topology.node_ids()
        ],
        "members": [
            {
                "id": mid,
                "a": topology.members[mid].end_a,
                "b": topology.members[mid].end_b,
                "length": topology.members[mid].current_length,
                "target": topology.members[mid].target_length,
            }
            for mid in topology.member_ids()
        ],
    }


def topology_to_json(topology: Topology) -> str:
    return json.dumps(topology_to_dict(topology), separators=(", ", ": "))


def topology_from_dict(data: dict) -> Topology:
    spec = PLATFORMS[data["platform"]]
    nodes = {
        nd["id"]: Node(id=nd["id"], position=Vec3(nd["x"], nd["y"], nd["z"]))
        for nd in data["nodes"]
    }
    members = {}
    for md in data["members"]:
        length = nodes[md["a"]].position.distance_to(nodes[md["b"]].position)
        ext = max(0.0, length - spec.min_length)
        if spec.expansion_actuators_per_member >= 2:
            ext_a = ext_b = ext / 2.0
        else:
            ext_a, ext_b = ext, 0.0
        members[md["id"]] = Member(
            id=md["id"], end_a=md["a"], end_b=md["b"],
            current_length=length, target_length=md.get("target", length),
            spec=spec, ext_a=ext_a, ext_b=ext_b,
        )
    return Topology(nodes, members, allow_parallel_edges=True).validate()


def topology_from_json(text: str) -> Topology:
    return topology_from_dict(json.loads(text))
