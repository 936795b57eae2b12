"""The gait scripting language: parse, canonical form, execution.

Scripts are plain text; `set` retargets an actuator and returns
immediately, waits block until time passes or the structure settles, and
`parallel` runs blocks over disjoint actuators in lockstep. A two-actuator
member exposes its servos as `name.a` and `name.b`.
"""

from trussforge import flat_env, rest_state
from trussforge.gaitlang import builtin, builtin_names, execute, parse, serialize
from trussforge.scenarios import single_link

messy = """
# an inchworm cycle, written untidily
repeat   2 {
    set link.b len 0.1
  wait settle
     parallel { { set link.b len 0.0 } { set link.a len 0.1 } }
  wait settle
  set link.a len 0.0
   wait   settle
}
"""

program = parse(messy)
print("canonical form:\n")
print(serialize(program))
print(f"phases per cycle: {program.phase_count()}")

state = rest_state(single_link())
final, rows = execute(program, state, flat_env(), trajectory_stride=100)
x0 = state.topology.nodes["ra"].position.x
x1 = final.topology.nodes["ra"].position.x
print(f"\nafter two cycles the link advanced {100 * (x1 - x0):.1f} cm")
print(f"trajectory rows sampled: {len(rows)}")

print("\nbuilt-in gait library:", ", ".join(builtin_names()))
print("triangle_crawl phases:", builtin("triangle_crawl").phase_count())
