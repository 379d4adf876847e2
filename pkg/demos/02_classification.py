"""
Exact top-k retrieval and majority-vote classification
======================================================

No index, no approximation: every query scans the whole collection
with cosine similarity in double precision. Ties break the same way
every run: equal similarity prefers the smaller record id, equal votes
prefer the larger summed similarity, then the smaller label id.
"""

import numpy as np

from knnstore import (Collection, EmbeddingRecord, EngineConfig, classify,
                      top_k)

coll = Collection.create("planar", dimension=2, labels=("east", "north"))
coll.insert([
    EmbeddingRecord(id=0, label_id=0, vector=np.array([1.0, 0.0])),
    EmbeddingRecord(id=1, label_id=0, vector=np.array([0.9, 0.3])),
    EmbeddingRecord(id=2, label_id=1, vector=np.array([0.0, 1.0])),
    EmbeddingRecord(id=3, label_id=1, vector=np.array([0.3, 0.9])),
    EmbeddingRecord(id=4, label_id=1, vector=np.array([0.5, 0.8])),
])

query = np.array([0.7, 0.7], dtype=np.float32)

print("top_k, k=5 (cosine similarity is scale invariant, so the")
print("query's own length never matters):")
for n in top_k(coll, query, k=5):
    print(f"  id={n.record_id}  label={coll.labels[n.label_id]:5s}  "
          f"similarity={n.similarity:.6f}")

# classify = top_k + vote. k defaults to 10; with 5 records stored the
# vote simply covers everything.
result = classify(coll, query, EngineConfig(k=3))
print(f"\nk=3 vote: {[(coll.labels[l], v) for l, v in result.votes.items()]}")
print(f"predicted: {coll.labels[result.predicted_label_id]}")

# With k=4 the vote ties 2 vs 2 and the summed similarity decides.
result = classify(coll, query, EngineConfig(k=4))
sums = {coll.labels[l]: f"{s:.6f}"
        for l, s in result.summed_similarity.items()}
print(f"\nk=4 vote ties: {dict(result.votes)}, summed similarity {sums}")
print(f"predicted: {coll.labels[result.predicted_label_id]}")
