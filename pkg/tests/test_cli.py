import csv
import json

import numpy as np
import pytest

from knnstore import (
    Collection,
    EngineConfig,
    Manifest,
    evaluate_accuracy,
    gaussian_clusters,
    load_report,
    write_manifest,
    write_segment,
)
from knnstore.cli import main


def write_export(directory, labeled, name):
    """Lay a LabeledSet down as the manifest + segment an encoder emits."""
    directory.mkdir(parents=True, exist_ok=True)
    info = write_segment(
        directory / "part-00000.embv",
        ((int(labeled.ids[i]), int(labeled.label_ids[i]),
          labeled.source_tag, labeled.vectors[i])
         for i in range(len(labeled))),
        labeled.dimension)
    write_manifest(directory / "manifest.json",
                   Manifest(format_version=1, name=name,
                            dimension=labeled.dimension,
                            labels=labeled.labels, segments=(info,)))
    return directory


def write_queries(path, labeled):
    write_segment(path, ((int(labeled.ids[i]), int(labeled.label_ids[i]),
                          None, labeled.vectors[i])
                         for i in range(len(labeled))),
                  labeled.dimension)
    return path


@pytest.fixture
def workspace(tmp_path):
    support, test = gaussian_clusters(4, 8, 15, 10, seed=31)
    write_export(tmp_path / "export", support, "clusters")
    write_export(tmp_path / "export-test", test, "clusters-test")
    write_queries(tmp_path / "queries.embv", test)
    store = tmp_path / "store"
    assert main(["ingest", str(tmp_path / "export"),
                 "--store", str(store)]) == 0
    return tmp_path, store, support, test


class TestIngest:
    def test_reports_count_and_creates_collection(self, workspace, capsys):
        tmp_path, store, support, _ = workspace
        coll = Collection.load(store / "clusters")
        assert len(coll) == len(support)
        assert coll.labels == support.labels

    def test_table_scale_ingest(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        n = 50_000
        support, _ = gaussian_clusters(10, 8, 1, 1, seed=0)
        big = support.__class__(
            labels=tuple(f"l{i}" for i in range(10)),
            ids=np.arange(n, dtype=np.uint64),
            label_ids=rng.integers(0, 10, size=n).astype(np.uint32),
            vectors=rng.normal(size=(n, 8)).astype(np.float32))
        write_export(tmp_path / "big", big, "big")
        assert main(["ingest", str(tmp_path / "big"),
                     "--store", str(tmp_path / "store")]) == 0
        assert "ingested 50000 records" in capsys.readouterr().out
        assert len(Collection.load(tmp_path / "store" / "big")) == n

    def test_empty_export(self, tmp_path, capsys):
        support, _ = gaussian_clusters(2, 4, 2, 1, seed=0)
        empty = support.subset(np.array([], dtype=int))
        write_export(tmp_path / "exp", empty, "nothing")
        assert main(["ingest", str(tmp_path / "exp"),
                     "--store", str(tmp_path / "store")]) == 0
        assert "ingested 0 records" in capsys.readouterr().out
        coll = Collection.load(tmp_path / "store" / "nothing")
        assert len(coll) == 0

    def test_wrong_magic_fails_at_offset_zero(self, tmp_path, capsys):
        exp = tmp_path / "exp"
        support, _ = gaussian_clusters(2, 4, 2, 1, seed=0)
        write_export(exp, support, "x")
        seg = exp / "part-00000.embv"
        seg.write_bytes(b"JUNK" + seg.read_bytes()[4:])
        rc = main(["ingest", str(exp), "--store", str(tmp_path / "store")])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error [")
        assert "offset 0" in err

    def test_existing_collection_needs_append(self, workspace, capsys):
        tmp_path, store, _, _ = workspace
        rc = main(["ingest", str(tmp_path / "export"),
                   "--store", str(store)])
        assert rc == 2
        assert "[COLLECTION_EXISTS]" in capsys.readouterr().err

    def test_append_extends(self, workspace, capsys):
        tmp_path, store, support, _ = workspace
        more, _ = gaussian_clusters(4, 8, 3, 1, seed=77)
        more.ids = more.ids + np.uint64(10_000)
        write_export(tmp_path / "more", more, "clusters")
        assert main(["ingest", str(tmp_path / "more"), "--store", str(store),
                     "--append"]) == 0
        coll = Collection.load(store / "clusters")
        assert len(coll) == len(support) + len(more)

    def test_append_rejects_vocabulary_change(self, workspace, capsys):
        tmp_path, store, _, _ = workspace
        other, _ = gaussian_clusters(3, 8, 2, 1, seed=5)
        write_export(tmp_path / "other", other, "clusters")
        rc = main(["ingest", str(tmp_path / "other"), "--store", str(store),
                   "--append"])
        assert rc == 2
        assert "[LABEL_INVALID]" in capsys.readouterr().err


class TestClassify:
    def test_one_row_per_query_in_order(self, workspace, tmp_path):
        _, store, _, test = workspace
        out = tmp_path / "preds.csv"
        assert main(["classify", str(tmp_path / "queries.embv"),
                     "--store", str(store), "--collection", "clusters",
                     "--k", "5", "--output", str(out)]) == 0
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(test)
        assert [int(r["query_id"]) for r in rows] == list(map(int, test.ids))
        for row in rows:
            assert row["votes"]
            assert len(row["top_k_ids"].split(";")) == 5

    def test_accuracy_matches_harness(self, workspace, tmp_path):
        _, store, support, test = workspace
        out = tmp_path / "preds.csv"
        main(["classify", str(tmp_path / "queries.embv"),
              "--store", str(store), "--collection", "clusters",
              "--k", "5", "--output", str(out)])
        with open(out, newline="") as fh:
            rows = list(csv.DictReader(fh))
        csv_accuracy = sum(r["true_label"] == r["predicted_label"]
                           for r in rows) / len(rows)
        assert csv_accuracy == evaluate_accuracy(support, test,
                                                 EngineConfig(k=5))

    def test_single_stored_vector_is_its_own_neighbor(self, workspace,
                                                      tmp_path, capsys):
        _, store, support, _ = workspace
        one = support.subset(np.array([0]))
        q = tmp_path / "one.embv"
        write_queries(q, one)
        main(["classify", str(q), "--store", str(store),
              "--collection", "clusters", "--k", "1"])
        out = capsys.readouterr().out
        rows = list(csv.DictReader(out.splitlines()))
        assert len(rows) == 1
        assert rows[0]["predicted_label"] == rows[0]["true_label"]
        assert rows[0]["top_k_ids"] == str(int(support.ids[0]))

    def test_unknown_collection(self, workspace, capsys):
        tmp_path, store, _, _ = workspace
        rc = main(["classify", str(tmp_path / "queries.embv"),
                   "--store", str(store), "--collection", "nope"])
        assert rc == 2
        assert "[UNKNOWN_COLLECTION]" in capsys.readouterr().err


class TestErase:
    def test_erase_one_id_then_again(self, workspace, capsys):
        _, store, _, _ = workspace
        assert main(["erase", "--store", str(store),
                     "--collection", "clusters", "--ids", "0"]) == 0
        assert "erased 1 records" in capsys.readouterr().out
        assert main(["erase", "--store", str(store),
                     "--collection", "clusters", "--ids", "0"]) == 0
        out = capsys.readouterr().out
        assert "erased 0 records" in out
        assert "not found: 0" in out

    def test_erase_by_ids_file(self, workspace, tmp_path, capsys):
        _, store, _, _ = workspace
        ids_file = tmp_path / "ids.txt"
        ids_file.write_text("1\n2\n3\n")
        assert main(["erase", "--store", str(store),
                     "--collection", "clusters",
                     "--ids-file", str(ids_file)]) == 0
        assert "erased 3 records" in capsys.readouterr().out

    def test_erase_by_label_removes_it_from_predictions(self, workspace,
                                                        tmp_path, capsys):
        _, store, support, test = workspace
        assert main(["erase", "--store", str(store),
                     "--collection", "clusters",
                     "--predicate", "label=c02"]) == 0
        capsys.readouterr()

        # the persisted store must hold zero matching records
        coll = Collection.load(store / "clusters")
        assert all(rec.label_id != 2 for rec in coll.scan())

        # and the erased label can never be predicted again
        out = tmp_path / "preds.csv"
        main(["classify", str(tmp_path / "queries.embv"),
              "--store", str(store), "--collection", "clusters",
              "--output", str(out)])
        with open(out, newline="") as fh:
            predictions = {r["predicted_label"] for r in csv.DictReader(fh)}
        assert "c02" not in predictions

    def test_requires_exactly_one_selector(self, workspace, capsys):
        _, store, _, _ = workspace
        rc = main(["erase", "--store", str(store),
                   "--collection", "clusters"])
        assert rc == 2
        rc = main(["erase", "--store", str(store), "--collection",
                   "clusters", "--ids", "1", "--predicate", "label=c00"])
        assert rc == 2


class TestProtocol:
    def _schedule(self, tmp_path, doc):
        path = tmp_path / "schedule.json"
        path.write_text(json.dumps(doc))
        return path

    def test_two_class_toy_gives_two_steps(self, tmp_path, capsys):
        support, test = gaussian_clusters(2, 8, 5, 3, seed=3)
        write_export(tmp_path / "sup", support, "toy")
        write_export(tmp_path / "test", test, "toy-test")
        store = tmp_path / "store"
        main(["ingest", str(tmp_path / "sup"), "--store", str(store)])
        main(["ingest", str(tmp_path / "test"), "--store", str(store)])
        sched = self._schedule(tmp_path,
                               {"kind": "class-incremental", "k": 3})
        out = tmp_path / "report.csv"
        assert main(["protocol", "--schedule", str(sched),
                     "--store", str(store), "--support", "toy",
                     "--test", "toy-test", "--output", str(out)]) == 0
        report = load_report(out)
        assert len(report.steps) == 2
        assert report.k == 3

    def test_same_config_twice_is_byte_identical(self, workspace, tmp_path,
                                                 capsys):
        _, store, _, _ = workspace
        main(["ingest", str(tmp_path / "export-test"),
              "--store", str(store)])
        sched = self._schedule(
            tmp_path, {"kind": "random-removal", "seed": 11, "k": 3,
                       "steps": {"fractions": [0.25, 0.75]}})
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        for out in (out_a, out_b):
            assert main(["protocol", "--schedule", str(sched),
                         "--store", str(store), "--support", "clusters",
                         "--test", "clusters-test",
                         "--output", str(out)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_mvf_shrink_bound(self, tmp_path, capsys):
        support, test = gaussian_clusters(5, 8, 10, 4, seed=17)
        write_export(tmp_path / "sup", support, "five")
        write_export(tmp_path / "test", test, "five-test")
        store = tmp_path / "store"
        main(["ingest", str(tmp_path / "sup"), "--store", str(store)])
        main(["ingest", str(tmp_path / "test"), "--store", str(store)])
        sched = self._schedule(tmp_path, {"kind": "mvf-removal", "k": 3,
                                          "steps": {"rounds": 3}})
        out = tmp_path / "report.csv"
        assert main(["protocol", "--schedule", str(sched),
                     "--store", str(store), "--support", "five",
                     "--test", "five-test", "--output", str(out)]) == 0
        report = load_report(out)
        assert len(support) - report.steps[-1].support_size <= 15

    def test_merge_via_dataset_pairs(self, tmp_path, capsys):
        a = gaussian_clusters(2, 8, 6, 3, seed=1)
        b = gaussian_clusters(3, 8, 6, 3, seed=2)
        store = tmp_path / "store"
        for (sup, tst), name in [(a, "setA"), (b, "setB")]:
            write_export(tmp_path / f"{name}", sup, name)
            write_export(tmp_path / f"{name}-t", tst, f"{name}-test")
            main(["ingest", str(tmp_path / name), "--store", str(store)])
            main(["ingest", str(tmp_path / f"{name}-t"),
                  "--store", str(store)])
        sched = self._schedule(tmp_path, {"kind": "merge", "k": 3})
        out = tmp_path / "report.csv"
        assert main(["protocol", "--schedule", str(sched),
                     "--store", str(store),
                     "--dataset", "setA:setA-test",
                     "--dataset", "setB:setB-test",
                     "--output", str(out)]) == 0
        report = load_report(out)
        assert [s.removed_or_added for s in report.steps] == \
            ["isolated:setA", "isolated:setB",
             "merged:setA", "merged:setB"]

    def test_schedule_error_reported(self, workspace, tmp_path, capsys):
        _, store, _, _ = workspace
        sched = self._schedule(tmp_path, {"kind": "not-a-protocol"})
        rc = main(["protocol", "--schedule", str(sched),
                   "--store", str(store), "--support", "clusters",
                   "--test", "clusters"])
        assert rc == 2
        assert "[SCHEDULE_INVALID]" in capsys.readouterr().err


class TestStats:
    def test_counts_match_ingest(self, workspace, capsys):
        _, store, support, _ = workspace
        assert main(["stats", "--store", str(store),
                     "--collection", "clusters"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["record_count"] == len(support)
        assert doc["per_class"] == support.per_class_counts()
        assert doc["generation"] == 1
        assert doc["dimension"] == 8
