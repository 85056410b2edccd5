"""Two tiny systems, solved by hand-checkable rules.

A segment grows at unit rate about a fixed midpoint and stops, under
Model 1, when one of its own ends hits another segment; under Model 2 it
also stops when a growing end of another segment hits it.  On two or
three points everything can be followed by eye.
"""

import math
from pathlib import Path

from lilyseg import (
    MarkedPoint,
    MarkedPointSet,
    analyze,
    render_svg,
    solve_chain,
    solve_fixed_point,
    stopping_map,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)


def show(name, mps):
    print(f"\n=== {name} ===")
    for model in (1, 2):
        solution = solve_fixed_point(mps, model)
        report = analyze(solution)
        radii = ", ".join(f"{r:.4f}" if math.isfinite(r) else "inf" for r in solution.radii)
        print(f"Model {model}: radii [{radii}]")
        print(f"  stops: {stopping_map(solution).as_dict()}")
        if model == 1 and report.cycles:
            print(f"  cycles: {report.cycles}")
        if model == 2 and report.doublets:
            print(f"  doublets: {report.doublets}")
        highlight = "cycles" if model == 1 else "doublets"
        path = OUT / f"{name}_model{model}.svg"
        path.write_text(render_svg(solution, highlight=highlight))
        print(f"  rendered -> {path}")


# Two points: horizontal line through the origin, vertical through (3, 4).
# Their carriers meet at (3, 0), reached by the horizontal tip at time 3 and
# the vertical tip at time 4.  Under Model 1 the vertical segment stops at
# radius 4 (its end lands on the horizontal line, which grows forever).
# Under Model 2 the pair stops together: a doublet of radius 4.
pair = MarkedPointSet((MarkedPoint(0, 0, 0.0), MarkedPoint(3, 4, math.pi / 2)))
show("pair", pair)

# Three points arranged so that under Model 1 each segment stops on the next
# around a triangle: a 3-cycle, with every radius finite.  Model 2 instead
# resolves the earliest meeting as a doublet and lets the third grow on.
triangle = MarkedPointSet(
    (
        MarkedPoint(3.4, 2.6, 0.21),
        MarkedPoint(3.6, 0.1, 1.94),
        MarkedPoint(6.3, 2.8, 0.55),
    )
)
show("triangle", triangle)

# The chain solver narrates how a radius gets certified: follow the chain
# of tentative stops until a link is confirmed against an infinite segment
# or the chain closes on itself.
solution, traces = solve_chain(triangle, 1)
print("\nchain traces (Model 1, triangle):")
for t in traces:
    tail = f"cycle of length {t.cycle_length}" if t.terminal == "cycle" else "infinite segment"
    print(f"  {' -> '.join(map(str, t.chain))}  ends at {tail}")
