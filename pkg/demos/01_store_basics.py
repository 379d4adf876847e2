"""
Collections, mutations and durable snapshots
============================================

A Collection is a bag of labeled embedding vectors with unique integer
ids. Every mutation bumps a generation counter, and save/load gives a
bitwise round trip through the EMBV1 segment format.
"""

import tempfile
from pathlib import Path

import numpy as np

from knnstore import Collection, EmbeddingRecord

# A collection is born with a fixed dimension and label vocabulary.
coll = Collection.create("animals", dimension=4,
                         labels=("cat", "dog", "bird"))
print(f"created {coll.name!r}: dim={coll.dimension}, "
      f"labels={coll.labels}, generation={coll.generation}")

# Records carry an id, a label id and a float32 vector. Inserts are
# batched and atomic: one bad record rejects the whole batch.
rng = np.random.default_rng(0)
records = [
    EmbeddingRecord(id=i, label_id=i % 3,
                    vector=rng.normal(size=4).astype(np.float32),
                    source_tag="camera-a")
    for i in range(9)
]
coll.insert(records)
print(f"after insert: {len(coll)} records, generation {coll.generation}")

# Deletes report what was actually removed and what was never there.
result = coll.delete([0, 1, 999])
print(f"delete [0, 1, 999]: deleted={result.deleted}, "
      f"missing={result.missing}, generation={coll.generation}")

# Relabeling speaks label ids; label_index translates from names.
previous = coll.relabel(3, coll.label_index("bird"))
print(f"record 3 moved from label {coll.labels[previous]!r} to 'bird'")

# snapshot() pins an immutable view; readers keep working off it while
# writers mutate.
view = coll.snapshot()
print(f"snapshot: ids={view.ids.tolist()}")

coll.delete([2])
print(f"snapshot still holds {len(view)} rows; "
      f"live collection holds {len(coll)}")

# save() compacts tombstones away and writes segment + manifest with
# CRC32C checksums; load() refuses anything corrupt.
with tempfile.TemporaryDirectory() as tmp:
    target = Path(tmp) / "animals"
    coll.save(target)
    print(f"saved to {sorted(p.name for p in target.iterdir())}")

    loaded = Collection.load(target)
    assert list(loaded.scan()) == list(coll.scan())
    assert loaded.generation == coll.generation
    print(f"reloaded {len(loaded)} records at generation "
          f"{loaded.generation}: identical")
