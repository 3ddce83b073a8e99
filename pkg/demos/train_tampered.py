"""
Backward-only tampering in a real training run
==============================================

Trains the same seeded network twice on the 10-class blob dataset: once
untouched (alpha = 1) and once with the backward-pass probabilities pushed
toward uniform (alpha = 0.3).  The forward pass, loss, data order, and
initialization are identical; only the gradient of the loss with respect
to the logits changes, from (p - q) to (p' - q).

Watch two things in the output:

  * both runs train fine — the tampered gradient is a descent direction
    (it is the exact gradient of a scaled-logit surrogate), and
  * the tampered run's logits keep growing long after the baseline's have
    settled, because weaker backward probabilities keep the pressure on.

Run:  python3 demos/train_tampered.py [--alpha 0.3] [--epochs 30]
"""

import argparse

from gradtamper.harness import DataSpec, TrainConfig, load_datasets, train
from gradtamper.transform import TamperSpec


def run(alpha, epochs, datasets):
    cfg = TrainConfig(tamper=TamperSpec(alpha), epochs=epochs)
    _, records = train(cfg, datasets)
    print(f"\n--- alpha = {alpha} ---")
    print("epoch  train_loss  train_acc  test_acc  gap      |logits|")
    for r in records:
        if r.epoch % 5 == 0 or r.epoch == epochs - 1:
            print(
                f"{r.epoch:5d}  {r.train_loss:10.4f}  {r.train_acc:9.3f}  "
                f"{r.test_acc:8.3f}  {r.gap:+.3f}  {r.mean_logit_norm:8.2f}"
            )
    return records[-1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--alpha", type=float, default=0.3, help="tampering strength to compare")
    ap.add_argument("--epochs", type=int, default=30)
    args = ap.parse_args()

    datasets = load_datasets(DataSpec())
    base = run(1.0, args.epochs, datasets)
    tampered = run(args.alpha, args.epochs, datasets)

    print("\n=== summary ===")
    print(f"final train acc : {base.train_acc:.3f} (baseline)  {tampered.train_acc:.3f} (tampered)")
    print(f"final test acc  : {base.test_acc:.3f} (baseline)  {tampered.test_acc:.3f} (tampered)")
    print(f"final |logits|  : {base.mean_logit_norm:8.2f} (baseline)  "
          f"{tampered.mean_logit_norm:8.2f} (tampered)")
    ratio = tampered.mean_logit_norm / base.mean_logit_norm
    print(f"the tampered run's mean logit norm is {ratio:.1f}x the baseline's")


if __name__ == "__main__":
    main()
