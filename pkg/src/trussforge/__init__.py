"""Quasi-static simulator and teleoperation environment for modular truss
robots: differential-friction crawling, docking and self-reconfiguration,
and environment-enabled 2D-to-3D transformations."""

from .core import (
    PLATFORMS,
    TRUSS_LINK,
    VTT,
    Member,
    Node,
    PlatformSpec,
    ShapeClass,
    Topology,
    Vec3,
    build_topology,
    center_of_mass,
    classify,
    flat_tetra_pattern,
    merge_nodes,
    split_node,
    total_mass,
)
from .environments import (
    Environment,
    FrictionParams,
    builtin_env,
    contact_query,
    flat_env,
    load_environment,
    mound_env,
    pit_env,
    skylight_env,
    step_env,
)
from .mechanics import (
    ContactPoint,
    DockParams,
    Engine,
    QuasiStaticState,
    SolverParams,
    expansion_force,
    friction_step,
    is_singular,
    min_popup_angle,
    node_jacobian,
    normal_forces,
    rest_state,
    settle,
    step,
    support_polygon,
    will_tumble,
)
from .gaitlang import GaitProgram, builtin, execute, parse, serialize
from .scenarios import ScenarioReport, ScenarioSpec, builtin_scenarios, get_scenario, run

__version__ = "0.1.0"
