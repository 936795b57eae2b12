"""
trussforge.environments
=======================
Parametric surface features (floor, ramp, box, cylinder, ceiling-with-cutout,
pit) composed into immutable environments, plus the single contact query the
solver sees. Reproduces the three physical rigs (mound, step, skylight) and
the simulated pit at their published dimensions.

Contacts are point queries: the solver collides nodes and sliding pads, not
member segments. Each feature implements a scalar ``query_pt`` hot path
returning ``(depth, nx, ny, nz)`` or None; the object API wraps it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import TrussforgeError, Vec3


class FeatureNotFound(TrussforgeError):
    pass


@dataclass(frozen=True)
class FrictionParams:
    mu_static: float = 0.55   # measured carpet values
    mu_kinetic: float = 0.43

    def __post_init__(self):
        if not (0.0 <= self.mu_kinetic <= self.mu_static):
            raise ValueError("require 0 <= mu_kinetic <= mu_static")


DEFAULT_FRICTION = FrictionParams()


@dataclass(frozen=True)
class ContactQuery:
    """Result of probing one point: deepest penetration wins."""
    depth: float               # > 0 means penetrating
    normal: np.ndarray         # unit, points out of the material
    friction: FrictionParams
    feature: str               # label of the winning feature

    @property
    def penetrating(self) -> bool:
        return self.depth > 0.0


def _poly_contains(poly, x: float, y: float) -> bool:
    """Ray-casting point-in-polygon; boundary points count as outside."""
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            xi = x1 + t * (x2 - x1)
            if x < xi:
                inside = not inside
    return inside


def _poly_boundary_dist(poly, x: float, y: float) -> tuple[float, float, float]:
    """Distance to the polygon boundary and the unit direction toward the
    nearest boundary point: (dist, dx, dy)."""
    best = math.inf
    bx = by = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        ll = ex * ex + ey * ey
        t = 0.0 if ll == 0 else ((x - x1) * ex + (y - y1) * ey) / ll
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        px, py = x1 + t * ex, y1 + t * ey
        d = math.hypot(x - px, y - py)
        if d < best:
            best = d
            bx, by = px, py
    if best == 0.0:
        return 0.0, 0.0, 0.0
    return best, (bx - x) / best, (by - y) / best


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceFeature:
    label: str
    friction: FrictionParams = DEFAULT_FRICTION

    def query_pt(self, x: float, y: float, z: float):  # pragma: no cover
        raise NotImplementedError

    def query(self, p) -> Optional[ContactQuery]:
        hit = self.query_pt(float(p[0]), float(p[1]), float(p[2]))
        if hit is None:
            return None
        depth, nx, ny, nz = hit
        return ContactQuery(depth, np.array([nx, ny, nz]), self.friction, self.label)

    def params_dict(self) -> dict:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class HalfSpaceFloor(SurfaceFeature):
    """Horizontal support plane at z = height."""
    height: float = 0.0

    def query_pt(self, x, y, z):
        depth = self.height - z
        if depth <= 0.0:
            return None
        return (depth, 0.0, 0.0, 1.0)

    def params_dict(self):
        return {"height": self.height}


@dataclass(frozen=True)
class Ramp(SurfaceFeature):
    """Solid wedge ascending +x from (x0, z0); ``length`` is the sloped
    surface length (hypotenuse), matching how the rig was measured."""
    incline: float = 0.35
    length: float = 1.0
    width: float = 10.0
    x0: float = 0.0
    y0: float = 0.0
    z0: float = 0.0

    def query_pt(self, x, y, z):
        run = self.length * math.cos(self.incline)
        lx = x - self.x0
        if not (0.0 <= lx <= run and abs(y - self.y0) <= self.width / 2):
            return None
        sn, cs = math.sin(self.incline), math.cos(self.incline)
        # n . (q - p) with q on the surface plane; positive below the surface
        depth = sn * lx + cs * (self.z0 - z)
        if depth <= 0.0:
            return None
        return (depth, -sn, 0.0, cs)

    def params_dict(self):
        return {"incline": self.incline, "length": self.length, "width": self.width,
                "x0": self.x0, "y0": self.y0, "z0": self.z0}


@dataclass(frozen=True)
class SlopedFloor(SurfaceFeature):
    """Infinite plane descending along +x by ``slope`` radians, passing
    through z = z0 at x = x0."""
    slope: float = math.radians(10)
    x0: float = 0.0
    z0: float = 0.0

    def query_pt(self, x, y, z):
        sn, cs = math.sin(self.slope), math.cos(self.slope)
        depth = sn * (self.x0 - x) + cs * (self.z0 - z)
        if depth <= 0.0:
            return None
        return (depth, sn, 0.0, cs)

    def params_dict(self):
        return {"slope": self.slope, "x0": self.x0, "z0": self.z0}


@dataclass(frozen=True)
class Box(SurfaceFeature):
    """Axis-aligned solid box; local origin at the center of the base."""
    w: float = 1.0   # extent along x
    d: float = 1.0   # extent along y
    h: float = 1.0   # extent along z
    x0: float = 0.0
    y0: float = 0.0
    z0: float = 0.0

    def query_pt(self, x, y, z):
        lx = x - self.x0
        ly = y - self.y0
        lz = z - self.z0
        if not (abs(lx) < self.w / 2 and abs(ly) < self.d / 2 and 0.0 < lz < self.h):
            return None
        best = self.w / 2 - lx
        n = (1.0, 0.0, 0.0)
        if self.w / 2 + lx < best:
            best, n = self.w / 2 + lx, (-1.0, 0.0, 0.0)
        if self.d / 2 - ly < best:
            best, n = self.d / 2 - ly, (0.0, 1.0, 0.0)
        if self.d / 2 + ly < best:
            best, n = self.d / 2 + ly, (0.0, -1.0, 0.0)
        if self.h - lz < best:
            best, n = self.h - lz, (0.0, 0.0, 1.0)
        return (best, n[0], n[1], n[2])

    def params_dict(self):
        return {"w": self.w, "d": self.d, "h": self.h,
                "x0": self.x0, "y0": self.y0, "z0": self.z0}


@dataclass(frozen=True)
class Cylinder(SurfaceFeature):
    """Upright solid cylinder standing on z = z0."""
    radius: float = 0.04
    height: float = 0.25
    x0: float = 0.0
    y0: float = 0.0
    z0: float = 0.0

    def query_pt(self, x, y, z):
        lz = z - self.z0
        r = math.hypot(x - self.x0, y - self.y0)
        if not (0.0 < lz < self.height and r < self.radius):
            return None
        top_depth = self.height - lz
        side_depth = self.radius - r
        if top_depth < side_depth:
            return (top_depth, 0.0, 0.0, 1.0)
        if r < 1e-12:
            return (side_depth, 1.0, 0.0, 0.0)
        return (side_depth, (x - self.x0) / r, (y - self.y0) / r, 0.0)

    def params_dict(self):
        return {"radius": self.radius, "height": self.height,
                "x0": self.x0, "y0": self.y0, "z0": self.z0}


@dataclass(frozen=True)
class CeilingWithCutout(SurfaceFeature):
    """Level slab with a cutout hole; ``height`` is the clearance under the
    slab's lower face. Points inside the cutout polygon pass freely."""
    height: float = 0.24
    thickness: float = 0.04
    cutout: tuple = ()   # polygon vertices ((x, y), ...)

    def query_pt(self, x, y, z):
        if not (self.height < z < self.height + self.thickness):
            return None
        if len(self.cutout) >= 3 and _poly_contains(self.cutout, x, y):
            return None
        from_below = z - self.height
        from_above = self.height + self.thickness - z
        if from_below <= from_above:
            return (from_below, 0.0, 0.0, -1.0)
        return (from_above, 0.0, 0.0, 1.0)

    def params_dict(self):
        return {"height": self.height, "thickness": self.thickness,
                "cutout": [list(v) for v in self.cutout]}


@dataclass(frozen=True)
class Pit(SurfaceFeature):
    """Floor at z = 0 with a recessed region of ``depth`` under the opening
    polygon. Boundary points count as outside (rim tie-break: outside wins).
    Under-floor points near the rim are pushed sideways back into the pit
    when that is the smaller translation."""
    depth: float = 0.35
    opening: tuple = ()   # polygon vertices ((x, y), ...)

    def query_pt(self, x, y, z):
        inside = len(self.opening) >= 3 and _poly_contains(self.opening, x, y)
        if inside:
            d = -self.depth - z
            if d <= 0.0:
                return None
            return (d, 0.0, 0.0, 1.0)
        up_depth = -z
        if up_depth <= 0.0:
            return None
        if len(self.opening) >= 3 and z > -self.depth:
            dist, dx, dy = _poly_boundary_dist(self.opening, x, y)
            if dist < up_depth:
                return (dist, dx, dy, 0.0)
        return (up_depth, 0.0, 0.0, 1.0)

    def params_dict(self):
        return {"depth": self.depth, "opening": [list(v) for v in self.opening]}


_FEATURE_TYPES = {
    "HalfSpaceFloor": HalfSpaceFloor,
    "Ramp": Ramp,
    "SlopedFloor": SlopedFloor,
    "Box": Box,
    "Cylinder": Cylinder,
    "CeilingWithCutout": CeilingWithCutout,
    "Pit": Pit,
}


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Environment:
    features: tuple
    gravity: tuple = (0.0, 0.0, -9.81)

    def __post_init__(self):
        if not self.features:
            raise ValueError("environment needs at least one feature")

    def contact_query(self, p) -> Optional[ContactQuery]:
        """Deepest-penetration feature wins; None when the point is free."""
        hit = self.query_pt(float(p[0]), float(p[1]), float(p[2]))
        if hit is None:
            return None
        depth, nx, ny, nz, fi = hit
        f = self.features[fi]
        return ContactQuery(depth, np.array([nx, ny, nz]), f.friction, f.label)

    def query_pt(self, x: float, y: float, z: float):
        """Scalar hot path: (depth, nx, ny, nz, feature_index) or None."""
        best = None
        for i, f in enumerate(self.features):
            hit = f.query_pt(x, y, z)
            if hit is not None and (best is None or hit[0] > best[0]):
                best = (hit[0], hit[1], hit[2], hit[3], i)
        return best

    def without_feature(self, label: str) -> "Environment":
        kept = tuple(f for f in self.features if f.label != label)
        if len(kept) == len(self.features):
            raise FeatureNotFound(f"no feature labelled {label!r}")
        return Environment(kept, self.gravity)

    def feature_labels(self) -> list[str]:
        return [f.label for f in self.features]


def contact_query(env: Environment, point: Vec3) -> Optional[ContactQuery]:
    return env.contact_query(point.as_array())


# ---------------------------------------------------------------------------
# The reference experiment rigs
# ---------------------------------------------------------------------------

MOUND_BOX_HEIGHT = 0.20      # 20 cm tall plywood box
MOUND_RAMP_LENGTH = 0.585    # 58.5 cm long ramp
STEP_HEIGHT = 0.30           # 30 cm tall step
STEP_OBSTACLE_OFFSET = 0.25  # obstacle ~25 cm after the step
SKYLIGHT_CLEARANCE = 0.24    # ~24 cm at the center


def mound_env(box_w: float = 0.62, box_d: float = 1.4,
              friction: FrictionParams = DEFAULT_FRICTION) -> Environment:
    """Level floor, 0.20 m box, and the 0.585 m ramp joining floor to box
    top. The ramp ascends +x and meets the box's -x face."""
    incline = math.asin(MOUND_BOX_HEIGHT / MOUND_RAMP_LENGTH)
    run = MOUND_RAMP_LENGTH * math.cos(incline)
    return Environment((
        HalfSpaceFloor(label="floor", friction=friction),
        Ramp(label="ramp", friction=friction, incline=incline,
             length=MOUND_RAMP_LENGTH, width=box_d, x0=0.0),
        Box(label="mound", friction=friction, w=box_w, d=box_d,
            h=MOUND_BOX_HEIGHT, x0=run + box_w / 2),
    ))


def step_env(obstacle_radius: float = 0.04,
             friction: FrictionParams = DEFAULT_FRICTION) -> Environment:
    """Upper surface at z = 0.30 for x < 0, a 0.30 m drop to the lower
    floor, and the upright cylindrical obstacle 0.25 m after the step."""
    return Environment((
        HalfSpaceFloor(label="floor", friction=friction),
        Box(label="upper", friction=friction, w=6.0, d=6.0, h=STEP_HEIGHT, x0=-3.0),
        Cylinder(label="obstacle", friction=friction, radius=obstacle_radius,
                 height=0.25, x0=STEP_OBSTACLE_OFFSET),
    ))


def teardrop_polygon(r: float = 0.18, tip_len: float = 0.30, n: int = 20) -> tuple:
    """Circle of radius r joined to a triangle tip along +x."""
    pts = []
    start = math.radians(40)
    end = math.radians(320)
    for i in range(n + 1):
        a = start + (end - start) * i / n
        pts.append((r * math.cos(a), r * math.sin(a)))
    pts.append((r + tip_len, 0.0))
    return tuple(pts)


def skylight_env(slope: float = math.radians(10),
                 cutout: Optional[tuple] = None,
                 friction: FrictionParams = DEFAULT_FRICTION) -> Environment:
    """Level ceiling with a teardrop cutout over a sloped floor; clearance
    is 0.24 m at the center of the ceiling (x = 0)."""
    if cutout is None:
        cutout = teardrop_polygon()
    return Environment((
        SlopedFloor(label="floor", friction=friction, slope=slope, x0=0.0, z0=0.0),
        CeilingWithCutout(label="ceiling", friction=friction,
                          height=SKYLIGHT_CLEARANCE, thickness=0.01,
                          cutout=cutout),
    ))


def square_polygon(side: float, cx: float = 0.0, cy: float = 0.0) -> tuple:
    h = side / 2
    return ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h))


def pit_env(depth: float = 0.35, opening: Optional[tuple] = None,
            friction: FrictionParams = DEFAULT_FRICTION) -> Environment:
    if opening is None:
        opening = square_polygon(1.2)
    return Environment((
        Pit(label="pit", friction=friction, depth=depth, opening=opening),
    ))


def flat_env(friction: FrictionParams = DEFAULT_FRICTION) -> Environment:
    return Environment((HalfSpaceFloor(label="floor", friction=friction),))


BUILTIN_ENVS = {
    "flat": flat_env,
    "mound": mound_env,
    "step": step_env,
    "skylight": skylight_env,
    "pit": pit_env,
}


def builtin_env(name: str, **kwargs) -> Environment:
    if name not in BUILTIN_ENVS:
        raise FeatureNotFound(f"unknown builtin environment {name!r}")
    return BUILTIN_ENVS[name](**kwargs)


# ---------------------------------------------------------------------------
# JSON files
# ---------------------------------------------------------------------------

def environment_to_dict(env: Environment) -> dict:
    feats = []
    for f in env.features:
        feats.append({
            "variant": type(f).__name__,
            "label": f.label,
            "params": f.params_dict(),
            "friction": {"mu_static": f.friction.mu_static,
                         "mu_kinetic": f.friction.mu_kinetic},
        })
    return {"gravity": list(env.gravity), "features": feats}


def environment_from_dict(data: dict) -> Environment:
    feats = []
    for fd in data["features"]:
        cls = _FEATURE_TYPES[fd["variant"]]
        fr = FrictionParams(**fd.get("friction", {}))
        params = dict(fd.get("params", {}))
        for key in ("cutout", "opening"):
            if key in params:
                params[key] = tuple(tuple(v) for v in params[key])
        feats.append(cls(label=fd["label"], friction=fr, **params))
    return Environment(tuple(feats), tuple(data.get("gravity", (0.0, 0.0, -9.81))))


def load_environment(path_or_name: str) -> Environment:
    """Accepts a builtin name (flat|mound|step|skylight|pit) or a JSON path."""
    if path_or_name in BUILTIN_ENVS:
        return BUILTIN_ENVS[path_or_name]()
    with open(path_or_name, "r", encoding="utf-8") as fh:
        return environment_from_dict(json.load(fh))


def save_environment(env: Environment, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(environment_to_dict(env), fh, indent=2)


def support_height(env: Environment, x: float, y: float,
                   lo: float = -2.0, hi: float = 3.0) -> float:
    """Height of the supporting surface under (x, y), by bisection on the
    contact query. ``hi`` must start in free space (pass a value under any
    ceiling)."""
    if env.query_pt(x, y, hi) is not None:
        return hi
    if env.query_pt(x, y, lo) is None:
        return lo
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if env.query_pt(x, y, mid) is None:
            hi = mid
        else:
            lo = mid
    return hi
