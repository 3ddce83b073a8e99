"""
How the power transform reshapes a distribution
================================================

A walk through p' = p**alpha / sum(p**alpha) on a few hand-picked
probability vectors.  For each strength alpha the script prints the
transformed vector, the stationary threshold tau, and a bar sketch of
which entries rose (below tau) and which fell (above tau).

Run:  python3 demos/transform_families.py
"""

import numpy as np

from gradtamper.transform import stationary_threshold, transform_probabilities

FAMILIES = {
    "peaked": np.array([0.7, 0.2, 0.1]),
    "near-uniform": np.array([0.28, 0.26, 0.24, 0.22]),
    "long tail": np.array([0.5, 0.25, 0.12, 0.08, 0.05]),
}

ALPHAS = [1.0, 0.75, 0.5, 0.25, 0.0]


def bar(x, width=32):
    return "#" * max(1, int(round(x * width)))


for name, p in FAMILIES.items():
    print(f"\n=== {name}: p = {np.array2string(p, precision=3)} ===")
    for alpha in ALPHAS:
        out = transform_probabilities(p, alpha)
        if alpha < 1.0:
            tau = stationary_threshold(p, alpha)
            tag = f"tau = {tau:.4f}"
        else:
            tau = None
            tag = "identity (every entry stationary)"
        print(f"\nalpha = {alpha:4.2f}   {tag}")
        for i, (before, after) in enumerate(zip(p, out)):
            if tau is None:
                move = " "
            elif before > tau:
                move = "v"  # above the threshold: shrinks
            else:
                move = "^"  # at or below: grows (or stays)
            print(f"  p[{i}] {before:.4f} -> {after:.4f} {move}  {bar(after)}")

print(
    "\nSmaller alpha pulls every distribution toward uniform; the threshold"
    "\nseparates losers (above) from gainers (below) exactly, and at alpha=0"
    "\nthe output is uniform no matter the input."
)
