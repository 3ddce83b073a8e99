"""
Composing tampering with label smoothing
========================================

Both knobs act on the same gradient: smoothing replaces the one-hot target
q with a softened q', tampering replaces the backward probabilities p with
p'.  They compose without interacting in the code path — the logit
gradient is always (backward probabilities) - (effective targets).  This
script runs the 2x2 ablation on the desk dataset and prints the
generalization gap (train acc - test acc) for each corner.

At this scale the gap numbers are small and noisy; the table is a
demonstration of the experiment protocol, not evidence in either
direction.

Run:  python3 demos/smoothing_ablation.py
"""

from gradtamper.harness import DataSpec, TrainConfig, load_datasets, train
from gradtamper.transform import TamperSpec

datasets = load_datasets(DataSpec())

corners = [(1.0, 0.0), (1.0, 0.1), (0.3, 0.0), (0.3, 0.1)]
results = {}
for alpha, eps in corners:
    cfg = TrainConfig(tamper=TamperSpec(alpha), label_smoothing=eps)
    _, records = train(cfg, datasets)
    results[(alpha, eps)] = records[-1]
    print(f"done: alpha={alpha}, eps={eps}")

print("\nalpha  eps   train_acc  test_acc  gap      |logits|")
for (alpha, eps), r in results.items():
    print(
        f"{alpha:5.2f}  {eps:4.2f}  {r.train_acc:9.3f}  {r.test_acc:8.3f}  "
        f"{r.gap:+.3f}  {r.mean_logit_norm:8.2f}"
    )

plain, smoothed = results[(0.3, 0.0)], results[(0.3, 0.1)]
direction = "narrowed" if smoothed.gap < plain.gap else "did not narrow"
print(
    f"\nat alpha=0.3, adding eps=0.1 smoothing {direction} the gap "
    f"({plain.gap:+.3f} -> {smoothed.gap:+.3f}) on this run"
)
