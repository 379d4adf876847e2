"""
The same store over HTTP and from the shell
===========================================

`knnstore serve` exposes collections over four endpoints; the CLI
wraps the same library calls for scripting. Both persist before they
answer, so whatever a response confirms is already on disk. This demo
drives the service in process; point real clients at
`knnstore serve --store DIR`.
"""

import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from knnstore import build_collection, gaussian_clusters
from knnstore.cli import main
from knnstore.service import create_app

support, _ = gaussian_clusters(num_classes=3, dim=8, train_per_class=10,
                               test_per_class=1, seed=11)

with tempfile.TemporaryDirectory() as tmp:
    store = Path(tmp) / "store"
    build_collection(support, name="demo").save(store / "demo")

    client = TestClient(create_app(store))

    doc = client.get("/collections/demo/stats").json()
    print(f"stats: {doc['record_count']} records, labels {doc['labels']}, "
          f"generation {doc['generation']}")

    query = support.vectors[0] + 0.01
    doc = client.post("/collections/demo/query",
                      json={"vector": query.tolist(), "k": 3}).json()
    print(f"query: predicted {doc['predicted_label']!r}, "
          f"neighbors {[n['record_id'] for n in doc['neighbors']]}, "
          f"votes {doc['votes']}")

    doc = client.post("/collections/demo/records", json={"records": [
        {"id": 500, "label": "c01",
         "vector": np.zeros(8, dtype=float).tolist()[:7] + [1.0]}]}).json()
    print(f"insert: {doc}")

    doc = client.request("DELETE", "/collections/demo/records",
                         json={"ids": [500, 777]}).json()
    print(f"delete: {doc}")

    # Errors share one shape: code, message, offending_field. Contract
    # violations are 400, unknown collections 404.
    resp = client.post("/collections/demo/query",
                       json={"vector": [1.0, 2.0]})
    print(f"short vector -> {resp.status_code}: {resp.json()}")

    # The CLI sees the same bytes the service just wrote.
    print("\n$ knnstore stats --store ... --collection demo")
    main(["stats", "--store", str(store), "--collection", "demo"])
