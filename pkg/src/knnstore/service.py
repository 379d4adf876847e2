"""HTTP facade over a directory of collections.

One service process owns one store directory; each collection lives in
its own subdirectory. Collections are created out of band (the `ingest`
command); the service loads them lazily on first touch and writes every
mutation to disk before answering, so a response in hand means the
change survives a crash.

Labels cross the wire as names, never ids. Every error body uses the
shared vocabulary {code, message, offending_field}.
"""

from __future__ import annotations

import re
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import DEFAULT_K, EngineConfig, classify
from .errors import (
    KnnStoreError,
    RecordInvalidError,
    UnknownCollectionError,
)
from .segment import MANIFEST_NAME
from .store import Collection, EmbeddingRecord, match_ids

_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.-]*\Z")


class QueryBody(BaseModel):
    vector: list[float]
    k: int | None = None


class RecordBody(BaseModel):
    id: int
    label: str
    vector: list[float]
    source_tag: str | None = None


class InsertBody(BaseModel):
    records: list[RecordBody]


class DeleteBody(BaseModel):
    ids: list[int] | None = None
    predicate: str | None = None


class StoreService:
    """Loads, caches and persists the collections under one directory."""

    def __init__(self, store_dir: Path | str):
        self.store_dir = Path(store_dir)
        self._collections: dict[str, Collection] = {}
        self._lock = threading.Lock()

    def collection_dir(self, name: str) -> Path:
        return self.store_dir / name

    def resolve(self, name: str) -> Collection:
        if not _NAME_RE.match(name):
            raise UnknownCollectionError(
                f"no collection named {name!r}", offending_field="name")
        with self._lock:
            coll = self._collections.get(name)
            if coll is None:
                if not (self.collection_dir(name) / MANIFEST_NAME).exists():
                    raise UnknownCollectionError(
                        f"no collection named {name!r}",
                        offending_field="name")
                coll = Collection.load(self.collection_dir(name))
                self._collections[name] = coll
            return coll

    def persist(self, collection: Collection) -> None:
        collection.save(self.collection_dir(collection.name))


def _neighbor_payload(view_labels, result):
    return [{"record_id": n.record_id,
             "label": view_labels[n.label_id],
             "label_id": n.label_id,
             "similarity": n.similarity}
            for n in result.neighbors]


def create_app(store_dir: Path | str) -> FastAPI:
    service = StoreService(store_dir)
    app = FastAPI(title="knnstore")
    app.state.service = service

    @app.exception_handler(KnnStoreError)
    async def _store_error(request: Request, exc: KnnStoreError):
        status = 404 if isinstance(exc, UnknownCollectionError) else 400
        return JSONResponse(status_code=status, content=exc.to_dict())

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request,
                                exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        field = ".".join(str(p) for p in first.get("loc", ()) if p != "body")
        return JSONResponse(status_code=400, content={
            "code": "RECORD_INVALID",
            "message": first.get("msg", "invalid request body"),
            "offending_field": field or None,
        })

    @app.post("/collections/{name}/query")
    def query(name: str, body: QueryBody):
        coll = service.resolve(name)
        cfg = EngineConfig(k=body.k if body.k is not None else DEFAULT_K)
        vector = np.asarray(body.vector, dtype=np.float32)
        result = classify(coll, vector, cfg)
        labels = coll.labels
        return {
            "predicted_label": labels[result.predicted_label_id],
            "predicted_label_id": result.predicted_label_id,
            "neighbors": _neighbor_payload(labels, result),
            "votes": {labels[l]: v for l, v in result.votes.items()},
            "k": cfg.k,
            "generation": coll.generation,
        }

    @app.post("/collections/{name}/records", status_code=201)
    def insert_records(name: str, body: InsertBody):
        coll = service.resolve(name)
        records = [
            EmbeddingRecord(
                id=r.id, label_id=coll.label_index(r.label),
                vector=np.asarray(r.vector, dtype=np.float32),
                source_tag=r.source_tag)
            for r in body.records
        ]
        inserted = coll.insert(records)
        service.persist(coll)
        return {"inserted": inserted, "generation": coll.generation}

    @app.delete("/collections/{name}/records")
    def delete_records(name: str, body: DeleteBody):
        coll = service.resolve(name)
        if (body.ids is None) == (body.predicate is None):
            raise RecordInvalidError(
                "give exactly one of ids or predicate",
                offending_field="ids")
        ids = body.ids if body.ids is not None \
            else match_ids(coll, body.predicate)
        result = coll.delete(ids)
        service.persist(coll)
        return {"deleted": result.deleted, "missing": result.missing,
                "generation": coll.generation}

    @app.get("/collections/{name}/stats")
    def stats(name: str):
        coll = service.resolve(name)
        view = coll.snapshot()
        per_class = {label: 0 for label in view.labels}
        for label_id, count in zip(*np.unique(view.label_ids,
                                              return_counts=True)):
            per_class[view.labels[int(label_id)]] = int(count)
        return {
            "name": view.name,
            "dimension": view.dimension,
            "record_count": len(view),
            "labels": list(view.labels),
            "per_class": per_class,
            "generation": view.generation,
        }

    return app
