"""Calibration sweep for the solver's node damping.

The published crawl numbers (8.3 cm travel and 1.5 cm drift per cycle) pin
the only free dissipation parameter. This sweep runs a short crawl at
several damping values and reports where the per-cycle travel lands; the
default of 40 N*s/m was frozen from exactly this procedure.
"""

import sys

from trussforge import Engine, SolverParams, flat_env
from trussforge.gaitlang import GaitRunner, parse
from trussforge.scenarios import metrics_displacement, vtt_triangle

CYCLES = int(sys.argv[1]) if len(sys.argv) > 1 else 3

GAIT = f"""
repeat {CYCLES} {{
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
}}
"""

print(f"{'damping':>8} {'cm/cycle':>9} {'drift cm':>9}")
for damping in (20.0, 40.0, 80.0, 160.0):
    engine = Engine(vtt_triangle(1.5), flat_env(),
                    SolverParams(damping=damping))
    engine.run_until_settled(timeout=30)
    com = engine.com_of_component(0)
    trace = [(com.x, com.y)]
    runner = GaitRunner(parse(GAIT), engine)
    seen = 0
    while not runner.done:
        runner.advance_step()
        for ev in engine.events[seen:]:
            if ev.kind == "cycle":
                c = engine.com_of_component(0)
                trace.append((c.x, c.y))
        seen = len(engine.events)
    dpc, drift = metrics_displacement(trace, (0.0, 1.0))
    marker = "  <-- default" if damping == 40.0 else ""
    print(f"{damping:8.0f} {dpc * 100:9.2f} {drift * 100:9.2f}{marker}")

print("\nreference: 8.3 cm/cycle travel, 1.5 cm/cycle drift")
