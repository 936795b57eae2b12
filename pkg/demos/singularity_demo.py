"""Why flat patterns are stuck: the member-length Jacobian loses rank.

For a node with k incident members, each row of the Jacobian is the unit
vector toward a neighbor, so member length-rates are J v. When every
member lies in the ground plane no combination of length-rates produces an
out-of-plane force: the smallest singular value collapses to zero.
"""

import math

import numpy as np

from trussforge import TRUSS_LINK, VTT, Vec3, build_topology, flat_tetra_pattern
from trussforge.mechanics import is_singular, node_jacobian

print("flat seven-link pattern, central node:")
flat = flat_tetra_pattern(VTT, 1.8, "seven_link")
J = node_jacobian(flat, "c")
singular, smin = is_singular(flat, "c", tol=1e-9)
print(f"  J =\n{np.round(J, 3)}")
print(f"  rank {np.linalg.matrix_rank(J, tol=1e-9)}, "
      f"sigma_min = {smin:.2e}, singular = {singular}\n")

r = 0.35 / math.sqrt(3)
h = math.sqrt(0.35 ** 2 - r ** 2)
angs = [math.pi / 2 + k * 2 * math.pi / 3 for k in range(3)]
tet = build_topology(
    TRUSS_LINK,
    [Vec3(r * math.cos(a), r * math.sin(a), 0) for a in angs] + [Vec3(0, 0, h)],
    [(0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)],
    node_names=["g1", "g2", "g3", "apex"],
)
singular, smin = is_singular(tet, "apex", tol=1e-9)
print("tetrahedron apex (after the pop-up):")
print(f"  sigma_min = {smin:.3f}, singular = {singular}")
print("\nthe environment's job is to bridge between these two states.")
