"""Run the environment-exploitation scenarios and print their verdicts.

Each scenario pairs a scripted open-loop gait with an environment feature
the robot needs: the mound raises the central vertex out of the planar
singularity, the step + obstacle guide the diamond fold, the skylight lets
a helper lift from above, and the pit swallows the octahedron's core.
"""

import sys
import time

from trussforge.scenarios import builtin_scenarios, get_scenario, negative_control, run

names = sys.argv[1:] or ["pit_tetra", "pit_octahedron", "step_tetra",
                         "mound_popup", "skylight_assist"]

for name in names:
    spec = get_scenario(name)
    t0 = time.perf_counter()
    report = run(spec)
    wall = time.perf_counter() - t0
    print(f"{name}: {'success' if report.success else 'FAILED'} "
          f"({wall:.0f}s wall, {report.metrics['sim_time']:.0f}s simulated)")
    print(f"  final shape {report.metrics['final_shape']}, "
          f"{report.metrics['member_count']} members in "
          f"{report.metrics['components']} component(s), "
          f"apex {report.metrics['apex_height']:.2f} m")
    timeline = list(dict.fromkeys(report.metrics["shape_timeline"]))
    print(f"  shape timeline: {' -> '.join(timeline)}")
    if spec.removable:
        control = negative_control(spec, spec.removable[0])
        print(f"  without {spec.removable[0]!r}: "
              f"{'success' if control.success else 'fails'} "
              f"(shape {control.metrics['final_shape']})")
    print()
