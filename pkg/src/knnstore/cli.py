"""Command line front end.

Subcommands:
  ingest    load an exported manifest + segments into a store
  classify  classify a query segment against a collection, CSV out
  erase     delete records by id list or predicate, then persist
  protocol  run an evaluation schedule, report CSV out
  serve     run the HTTP service over a store directory
  stats     print collection statistics as JSON

Results go to stdout unless --output names a file. Errors print one
`error [CODE]: message` line on stderr and exit 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import segment as segio
from .engine import DEFAULT_K, EngineConfig, classify as engine_classify
from .errors import (
    CollectionExistsError,
    DimensionMismatchError,
    KnnStoreError,
    LabelInvalidError,
    RecordInvalidError,
    ScheduleError,
    UnknownCollectionError,
)
from .harness import (
    Schedule,
    emit_report,
    labeled_set_from_collection,
    report_to_csv,
    run_schedule,
)
from .store import Collection, EmbeddingRecord, match_ids

CLASSIFY_COLUMNS = ("query_id", "true_label", "predicted_label", "votes",
                    "top_k_ids")


def _collection_dir(store: str, name: str) -> Path:
    return Path(store) / name


def _load_collection(store: str, name: str) -> Collection:
    path = _collection_dir(store, name)
    if not (path / segio.MANIFEST_NAME).exists():
        raise UnknownCollectionError(f"no collection named {name!r} in "
                                     f"{store}", offending_field="collection")
    return Collection.load(path)


def _read_export(path: str):
    """Records plus metadata from an exported manifest + segments."""
    mpath = segio.manifest_path(path)
    manifest = segio.read_manifest(mpath)
    records = []
    for info in manifest.segments:
        ids, label_ids, tags, vectors = segio.read_segment(
            mpath.parent / info.path, expected_crc=info.crc32c)
        records.extend(
            EmbeddingRecord(id=int(ids[i]), label_id=int(label_ids[i]),
                            vector=vectors[i], source_tag=tags[i])
            for i in range(len(ids)))
    return manifest, records


def _open_output(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


# ---------------------------------------------------------------------------
# subcommands


def _cmd_ingest(args) -> int:
    manifest, records = _read_export(args.export)
    name = args.collection or manifest.name
    target = _collection_dir(args.store, name)
    if args.append:
        coll = _load_collection(args.store, name)
        if coll.dimension != manifest.dimension:
            raise DimensionMismatchError(
                f"export dimension {manifest.dimension} != collection "
                f"dimension {coll.dimension}", offending_field="dimension")
        if coll.labels != tuple(manifest.labels):
            raise LabelInvalidError(
                "export label vocabulary differs from the collection's",
                offending_field="labels")
    else:
        if (target / segio.MANIFEST_NAME).exists():
            raise CollectionExistsError(
                f"collection {name!r} already exists; use --append",
                offending_field="collection")
        coll = Collection.create(name, manifest.dimension, manifest.labels)
    inserted = coll.insert(records)
    coll.save(target)
    print(f"ingested {inserted} records into {name!r} "
          f"(generation {coll.generation})")
    return 0


def _cmd_classify(args) -> int:
    coll = _load_collection(args.store, args.collection)
    ids, label_ids, _, vectors = segio.read_segment(Path(args.queries))
    cfg = EngineConfig(k=args.k)
    labels = coll.labels

    out, close = _open_output(args.output)
    try:
        writer = csv.writer(out)
        writer.writerow(CLASSIFY_COLUMNS)
        for i in range(len(ids)):
            result = engine_classify(coll, vectors[i], cfg)
            true_id = int(label_ids[i])
            true_label = labels[true_id] if true_id < len(labels) \
                else str(true_id)
            votes = ";".join(f"{labels[l]}:{result.votes[l]}"
                             for l in sorted(result.votes))
            top = ";".join(str(n.record_id) for n in result.neighbors)
            writer.writerow([int(ids[i]), true_label,
                             labels[result.predicted_label_id], votes, top])
    finally:
        if close:
            out.close()
    if close:
        print(f"classified {len(ids)} queries (k={args.k}, "
              f"generation {coll.generation})")
    return 0


def _cmd_erase(args) -> int:
    chosen = [opt for opt in (args.ids, args.ids_file, args.predicate)
              if opt is not None]
    if len(chosen) != 1:
        raise RecordInvalidError(
            "give exactly one of --ids, --ids-file or --predicate",
            offending_field="ids")
    coll = _load_collection(args.store, args.collection)
    if args.ids is not None:
        ids = [int(part) for part in args.ids.split(",") if part]
    elif args.ids_file is not None:
        text = Path(args.ids_file).read_text(encoding="utf-8")
        ids = [int(line) for line in text.split() if line]
    else:
        ids = match_ids(coll, args.predicate)
    result = coll.delete(ids)
    coll.save(_collection_dir(args.store, args.collection))
    print(f"erased {result.deleted} records from {args.collection!r} "
          f"(generation {coll.generation})")
    if result.missing:
        print(f"not found: {','.join(str(i) for i in result.missing)}")
    return 0


def _cmd_protocol(args) -> int:
    schedule = Schedule.from_json(Path(args.schedule).read_text(
        encoding="utf-8"))
    if args.k is not None:
        schedule = Schedule(schedule.kind, seed=schedule.seed, k=args.k,
                            params=schedule.params)
    if args.seed is not None:
        schedule = Schedule(schedule.kind, seed=args.seed, k=schedule.k,
                            params=schedule.params)

    datasets = None
    support = test = None
    if schedule.kind == "merge":
        if not args.dataset:
            raise ScheduleError(
                "merge schedules need --dataset SUPPORT:TEST pairs",
                offending_field="dataset")
        datasets = []
        for pair in args.dataset:
            sup_name, sep, test_name = pair.partition(":")
            if not sep:
                raise ScheduleError(
                    f"--dataset {pair!r} must look like SUPPORT:TEST",
                    offending_field="dataset")
            sup = labeled_set_from_collection(
                _load_collection(args.store, sup_name), role="support",
                source_tag=sup_name)
            tst = labeled_set_from_collection(
                _load_collection(args.store, test_name), role="test",
                source_tag=sup_name)
            datasets.append((sup, tst))
    else:
        if not args.support or not args.test:
            raise ScheduleError(
                f"{schedule.kind} schedules need --support and --test",
                offending_field="support")
        support = labeled_set_from_collection(
            _load_collection(args.store, args.support), role="support")
        test = labeled_set_from_collection(
            _load_collection(args.store, args.test), role="test")

    report = run_schedule(schedule, support=support, test=test,
                          datasets=datasets)
    if args.output:
        emit_report(report, args.output)
        print(f"wrote {len(report.steps)} steps to {args.output} "
              f"(kind={schedule.kind}, k={report.k}, seed={report.seed})")
    else:
        sys.stdout.write(report_to_csv(report))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_stats(args) -> int:
    coll = _load_collection(args.store, args.collection)
    view = coll.snapshot()
    per_class = {label: 0 for label in view.labels}
    for label_id, count in zip(*np.unique(view.label_ids,
                                          return_counts=True)):
        per_class[view.labels[int(label_id)]] = int(count)
    doc = {"name": view.name, "dimension": view.dimension,
           "record_count": len(view), "labels": list(view.labels),
           "per_class": per_class, "generation": view.generation}
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knnstore",
        description="Exact k-NN classification over a mutable "
                    "embedding store.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest",
                       help="load an exported manifest + segments")
    p.add_argument("export", help="export manifest.json or its directory")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--collection", default=None,
                   help="collection name (default: the export's own)")
    p.add_argument("--append", action="store_true",
                   help="add to an existing collection")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("classify",
                       help="classify an EMBV1 query segment")
    p.add_argument("queries", help="query segment (.embv)")
    p.add_argument("--store", required=True)
    p.add_argument("--collection", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("erase", help="delete records and persist")
    p.add_argument("--store", required=True)
    p.add_argument("--collection", required=True)
    p.add_argument("--ids", default=None, help="comma-separated ids")
    p.add_argument("--ids-file", default=None,
                   help="file with one id per line")
    p.add_argument("--predicate", default=None,
                   help="label=NAME or source_tag=TAG")
    p.set_defaults(func=_cmd_erase)

    p = sub.add_parser("protocol", help="run an evaluation schedule")
    p.add_argument("--schedule", required=True, help="schedule JSON path")
    p.add_argument("--store", required=True)
    p.add_argument("--support", default=None, help="support collection")
    p.add_argument("--test", default=None, help="test collection")
    p.add_argument("--dataset", action="append", default=[],
                   metavar="SUPPORT:TEST",
                   help="collection pair for merge schedules (repeatable)")
    p.add_argument("--k", type=int, default=None,
                   help="override the schedule's k")
    p.add_argument("--seed", type=int, default=None,
                   help="override the schedule's seed")
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    p.set_defaults(func=_cmd_protocol)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("stats", help="collection statistics as JSON")
    p.add_argument("--store", required=True)
    p.add_argument("--collection", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KnnStoreError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
