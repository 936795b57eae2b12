"""The pop-up force law: why a flat pattern cannot raise its own apex.

The total expansion force needed to lift the apex grows as 1/sin(alpha),
so a few centimeters of elevation (a mound, a step, a pit edge) cut the
required force by orders of magnitude.
"""

import math

from trussforge import expansion_force, min_popup_angle
from trussforge.mechanics import force_curve, write_force_curve_csv

LIFTED = 3 * 1.92 * 0.35   # apex-side lumps of the three elevated struts
BUDGET = 3 * 220.0         # three actuators at full force

print(f"lifted mass {LIFTED:.2f} kg, actuator budget {BUDGET:.0f} N\n")
print(f"{'alpha':>8} {'force needed':>14}")
for deg in (0.5, 1, 2, 5, 10, 20, 45, 90):
    f = expansion_force(LIFTED, math.radians(deg))
    marker = "  <-- within budget" if f <= BUDGET else ""
    print(f"{deg:7.1f}deg {f:12.1f} N{marker}")

a_min = min_popup_angle(LIFTED, BUDGET)
print(f"\nminimum workable elevation angle: {math.degrees(a_min):.2f} deg")
print(f"round trip: force at that angle = {expansion_force(LIFTED, a_min):.1f} N")

pts = force_curve(LIFTED, 1.0, 90.0, 0.5)
ratio = dict(pts)[5.0] / dict(pts)[90.0]
print(f"F(5deg)/F(90deg) = {ratio:.2f}  (= 1/sin 5deg)")

write_force_curve_csv("out_force_curve.csv", LIFTED)
print("wrote out_force_curve.csv (alpha_deg, force_N at 0.5 deg steps)")
