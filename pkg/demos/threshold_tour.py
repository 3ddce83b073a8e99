"""
The stationary threshold as a function of alpha
===============================================

tau(alpha) = (sum_j p_j**alpha) ** (1/(alpha-1)) marks the crossover
probability: entries above it shrink under the power transform, entries
below it grow.  This script tabulates tau over a fine alpha grid for a few
distributions and confirms the two structural facts the analysis kit
checks at scale:

  * tau never decreases as alpha grows (it sweeps from 1/C up toward
    the largest entry), and
  * the (rising, falling) partition it induces agrees entry by entry
    with the actual movement of the transform.

Run:  python3 demos/threshold_tour.py
"""

import numpy as np

from gradtamper.transform import (
    threshold_monotonicity_check,
    threshold_partition,
    transform_probabilities,
)

rng = np.random.default_rng(12)

distributions = {
    "three-class": np.array([0.7, 0.2, 0.1]),
    "ten-class random": rng.dirichlet(np.ones(10)),
    "almost one-hot": np.array([0.94, 0.02, 0.02, 0.02]),
}

grid = np.round(np.arange(0.05, 0.99, 0.05), 10)

for name, p in distributions.items():
    rep = threshold_monotonicity_check(p, grid)
    print(f"\n=== {name} (C = {p.size}) ===")
    print("alpha   tau")
    for a, t in zip(rep.alphas[::4], rep.thresholds[::4]):  # every 4th row
        print(f"{a:5.2f}   {t:.6f}")
    print(
        f"monotone over the full {grid.size}-point grid: {rep.passed} "
        f"(min successive diff {rep.min_successive_diff:.2e})"
    )
    print(f"range: 1/C = {1 / p.size:.4f}  ->  max entry = {p.max():.4f}")

    alpha = 0.4
    rising, falling = threshold_partition(p, alpha)
    moved = transform_probabilities(p, alpha) - p
    print(f"partition at alpha = {alpha}: rising {sorted(rising)}, falling {sorted(falling)}")
    for i in sorted(rising):
        assert moved[i] >= 0.0
    for i in sorted(falling):
        assert moved[i] < 0.0
    print("movement agrees with the partition for every entry")
