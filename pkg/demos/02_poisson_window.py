"""Solve both models on one Poisson window and compare their texture.

Model 1 keeps every segment growing until its own tip is blocked, so
segments thread past each other and form long chains closed by cycles.
Model 2 also stops a segment when it is hit, which freezes pairs early:
shorter segments, many doublets.
"""

import math
from pathlib import Path

import numpy as np

from lilyseg import (
    Rectangle,
    analyze,
    contact_count_identity,
    render_svg,
    sample_poisson,
    solve_chain,
    solve_fixed_point,
    solve_greedy_oracle,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

window = Rectangle.square(20.0)
mps = sample_poisson(1.0, window, seed=2024)
print(f"sampled {len(mps)} germs in a 20x20 window (seed 2024)")

for model in (1, 2):
    fixed = solve_fixed_point(mps, model)
    chained = solve_chain(mps, model)[0]
    greedy = solve_greedy_oracle(mps, model)
    agree = np.array_equal(fixed.radii.to_array(), chained.radii.to_array()) and np.array_equal(
        fixed.radii.to_array(), greedy.radii.to_array()
    )
    radii = fixed.radii.to_array()
    finite = radii[np.isfinite(radii)]
    report = analyze(fixed)
    ident = contact_count_identity(report, fixed)
    print(f"\nModel {model}:")
    print(f"  three solvers agree exactly: {agree}")
    print(f"  {len(finite)} finite segments, {np.isinf(radii).sum()} infinite")
    print(f"  mean radius {finite.mean():.3f}, max {finite.max():.3f}")
    print(f"  clusters: {len(report.clusters)}, cycles: {len(report.cycles)}, doublets: {len(report.doublets)}")
    print(f"  contact identity: {ident.n_contacts} contacts vs expected {ident.contacts_expected}")
    highlight = "cycles" if model == 1 else "doublets"
    path = OUT / f"poisson20_model{model}.svg"
    path.write_text(render_svg(fixed, highlight=highlight, clip_to_window=True))
    print(f"  rendered -> {path}")
