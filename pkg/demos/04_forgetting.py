"""
Forgetting by deleting: random and targeted removal
===================================================

Removal is the mirror image of learning: deleting records is complete
and immediate, so these protocols chart how much accuracy the support
set can afford to lose. Random removal deletes seeded uniform draws;
the targeted variant recounts which record served each class best and
deletes exactly those.
"""

import numpy as np

from knnstore import (EngineConfig, gaussian_clusters, mvf_removed_ids,
                      run_mvf_removal, run_random_removal)

support, test = gaussian_clusters(num_classes=5, dim=16,
                                  train_per_class=40, test_per_class=10,
                                  seed=23)
cfg = EngineConfig(k=10)

report = run_random_removal(support, test, cfg,
                            fractions=[0.0, 0.25, 0.5, 0.75, 0.9],
                            seed=5)
print("random removal: accuracy vs fraction of support deleted\n")
for step, fraction in zip(report.steps, [0.0, 0.25, 0.5, 0.75, 0.9]):
    print(f"  {fraction:4.0%} removed  support={step.support_size:3d}  "
          f"accuracy={step.accuracy:.3f}")

# Well-separated clusters survive heavy pruning: a handful of examples
# per class anchors the vote as firmly as forty did.

report = run_mvf_removal(support, test, rounds=5, cfg=cfg)
print("\ntargeted removal: per round, each class loses the one record")
print("that contributed most to correct classifications\n")
for step in report.steps:
    ids = mvf_removed_ids(step)
    print(f"  round {step.index}: removed {len(ids)} records "
          f"{ids}  accuracy={step.accuracy:.3f}")
