"""Differential-friction crawling, the short version.

A triangle crawls by shifting its center of mass so that the contacts it
wants to keep stationary carry more normal force (and so more friction)
than the ones it wants to slide. Five phases per cycle; here we run four
cycles and report per-cycle travel.
"""

import math

from trussforge import Engine, SolverParams, flat_env
from trussforge.gaitlang import GaitRunner, parse
from trussforge.scenarios import metrics_displacement, vtt_triangle

CYCLES = 4
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

engine = Engine(vtt_triangle(1.5), flat_env(), SolverParams())
engine.run_until_settled(timeout=30)

com_trace = [(engine.com_of_component(0).x, engine.com_of_component(0).y)]
runner = GaitRunner(parse(GAIT), engine)
seen = 0
while not runner.done:
    runner.advance_step()
    for ev in engine.events[seen:]:
        if ev.kind == "cycle":
            c = engine.com_of_component(0)
            com_trace.append((c.x, c.y))
            print(f"cycle {ev.data['index']}: COM moved to "
                  f"({c.x:+.3f}, {c.y:+.3f}) at t={engine.time:.0f}s")
    seen = len(engine.events)

dpc, drift = metrics_displacement(com_trace, (0.0, 1.0))
print(f"\nper-cycle forward travel: {dpc * 100:.1f} cm "
      f"(reference run: 8.3 cm/cycle)")
print(f"per-cycle lateral drift:  {drift * 100:.1f} cm "
      f"(reference run: 1.5 cm/cycle)")
