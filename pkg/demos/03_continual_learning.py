"""
Learning by inserting: class- and sample-incremental protocols
==============================================================

Adding a class is one insert call; there is no training step to redo
and nothing else in the store moves. The protocols below grow a store
step by step and score a held-out test set after every step, so the
accuracy trajectory is the whole story.
"""

import numpy as np

from knnstore import (EngineConfig, gaussian_clusters, report_to_csv,
                      run_class_incremental, run_sample_incremental)

# Synthetic stand-in for real embeddings: unit-norm class means with
# isotropic noise, well separated at this spread.
support, test = gaussian_clusters(num_classes=5, dim=16,
                                  train_per_class=30, test_per_class=10,
                                  seed=7)
cfg = EngineConfig(k=10)

report = run_class_incremental(support, test, cfg)
print("class-incremental: one new class per step, test set restricted")
print("to the classes seen so far\n")
for step in report.steps:
    print(f"  step {step.index}: {step.removed_or_added:6s} "
          f"support={step.support_size:3d}  accuracy={step.accuracy:.3f}")

# Sample-incremental grows every class at once; steps are nested, so
# step 3 contains exactly the records of step 2 plus the new ones.
report = run_sample_incremental(support, test,
                                per_class_counts=[2, 5, 10, 30], cfg=cfg,
                                seed=1)
print("\nsample-incremental: more examples of every class per step\n")
for step in report.steps:
    print(f"  step {step.index}: {step.removed_or_added:10s} "
          f"support={step.support_size:3d}  accuracy={step.accuracy:.3f}")

# Reports serialize to a fixed CSV schema, one overall row plus one row
# per class and step.
print("\nreport CSV, first four lines:")
for line in report_to_csv(report).splitlines()[:4]:
    print(f"  {line}")
