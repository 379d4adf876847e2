import numpy as np
import pytest

from knnstore import (
    DimensionMismatchError,
    EmptyCollectionError,
    EngineConfig,
    LabeledSet,
    Schedule,
    ScheduleError,
    build_collection,
    dataset_info,
    evaluate_accuracy,
    gaussian_clusters,
    labeled_set_from_collection,
    mvf_removed_ids,
    mvf_skipped_classes,
    run_class_incremental,
    run_merge_consistency,
    run_mvf_removal,
    run_random_removal,
    run_sample_incremental,
    run_schedule,
)


@pytest.fixture(scope="module")
def clusters():
    return gaussian_clusters(5, 16, 20, 8, seed=42)


class TestEvaluateAccuracy:
    def test_separated_clusters_classify_perfectly(self, clusters):
        support, test = clusters
        assert evaluate_accuracy(support, test, EngineConfig(k=5)) == 1.0

    def test_empty_support_rejected(self, clusters):
        _, test = clusters
        empty = LabeledSet(labels=test.labels, ids=[], label_ids=[],
                           vectors=np.empty((0, 16), dtype=np.float32))
        with pytest.raises(EmptyCollectionError):
            evaluate_accuracy(empty, test)

    def test_empty_test_rejected(self, clusters):
        support, _ = clusters
        empty = LabeledSet(labels=support.labels, ids=[], label_ids=[],
                           vectors=np.empty((0, 16), dtype=np.float32),
                           role="test")
        with pytest.raises(EmptyCollectionError):
            evaluate_accuracy(support, empty)

    def test_dimension_mismatch_rejected(self, clusters):
        support, _ = clusters
        other = gaussian_clusters(5, 8, 4, 2, seed=1)[1]
        other.labels = support.labels
        with pytest.raises(DimensionMismatchError):
            evaluate_accuracy(support, other)

    def test_vocabulary_mismatch_rejected(self, clusters):
        support, test = clusters
        other = gaussian_clusters(3, 16, 4, 2, seed=1)[1]
        with pytest.raises(ScheduleError):
            evaluate_accuracy(support, other)


class TestClassIncremental:
    def test_steps_and_sizes(self, clusters):
        support, test = clusters
        report = run_class_incremental(support, test, EngineConfig(k=5))
        assert report.protocol == "class-incremental"
        assert [s.index for s in report.steps] == [1, 2, 3, 4, 5]
        assert [s.support_size for s in report.steps] == \
            [20, 40, 60, 80, 100]
        assert [s.removed_or_added for s in report.steps] == \
            ["+c00", "+c01", "+c02", "+c03", "+c04"]
        assert report.steps[0].accuracy == 1.0
        assert report.steps[0].per_class_size == {"c00": 20}

    def test_respects_explicit_order(self, clusters):
        support, test = clusters
        order = ["c03", "c00", "c04", "c01", "c02"]
        report = run_class_incremental(support, test, EngineConfig(k=5),
                                       class_order=order)
        assert [s.removed_or_added for s in report.steps] == \
            ["+" + c for c in order]
        assert report.steps[0].per_class_size == {"c03": 20}

    def test_order_must_be_a_permutation(self, clusters):
        support, test = clusters
        with pytest.raises(ScheduleError, match="permutation"):
            run_class_incremental(support, test, class_order=["c00", "c01"])
        with pytest.raises(ScheduleError, match="unknown"):
            run_class_incremental(
                support, test,
                class_order=["c00", "c01", "c02", "c03", "nope"])

    def test_each_step_matches_fresh_store(self, clusters):
        support, test = clusters
        cfg = EngineConfig(k=5)
        report = run_class_incremental(support, test, cfg)
        for t, step in enumerate(report.steps, start=1):
            seen = list(range(t))
            sub_support = support.subset(
                np.flatnonzero(np.isin(support.label_ids, seen)))
            sub_test = test.subset(
                np.flatnonzero(np.isin(test.label_ids, seen)))
            fresh = evaluate_accuracy(sub_support, sub_test, cfg)
            assert step.accuracy == fresh


class TestSampleIncremental:
    def test_nested_growth_and_clamping(self, clusters):
        support, test = clusters
        report = run_sample_incremental(support, test, [1, 2, 5, 50],
                                        EngineConfig(k=3), seed=9)
        assert [s.support_size for s in report.steps] == [5, 10, 25, 100]
        # the last count exceeds the 20 available per class and clamps
        assert report.steps[-1].per_class_size == \
            {f"c{i:02d}": 20 for i in range(5)}
        assert report.steps[-1].removed_or_added == "+50/class"

    def test_deterministic_for_a_seed(self, clusters):
        support, test = clusters
        a = run_sample_incremental(support, test, [2, 4], seed=5)
        b = run_sample_incremental(support, test, [2, 4], seed=5)
        assert a == b

    def test_counts_validated(self, clusters):
        support, test = clusters
        with pytest.raises(ScheduleError):
            run_sample_incremental(support, test, [])
        with pytest.raises(ScheduleError):
            run_sample_incremental(support, test, [0, 2])
        with pytest.raises(ScheduleError):
            run_sample_incremental(support, test, [5, 5])
        with pytest.raises(ScheduleError):
            run_sample_incremental(support, test, [5, 3])


class TestRandomRemoval:
    def test_fraction_zero_is_the_baseline(self, clusters):
        support, test = clusters
        cfg = EngineConfig(k=5)
        report = run_random_removal(support, test, cfg,
                                    fractions=[0.0, 0.5], seed=3)
        assert report.steps[0].removed_or_added == "-0"
        assert report.steps[0].support_size == len(support)
        assert report.steps[0].accuracy == \
            evaluate_accuracy(support, test, cfg)
        assert report.steps[1].support_size == len(support) // 2

    def test_counts_variant(self, clusters):
        support, test = clusters
        report = run_random_removal(support, test, counts=[10, 60], seed=3)
        assert [s.support_size for s in report.steps] == [90, 40]
        assert [s.removed_or_added for s in report.steps] == ["-10", "-50"]

    def test_deterministic_for_a_seed(self, clusters):
        support, test = clusters
        a = run_random_removal(support, test, fractions=[0.3, 0.6], seed=8)
        b = run_random_removal(support, test, fractions=[0.3, 0.6], seed=8)
        assert a == b

    def test_stratified_removes_per_class(self, clusters):
        support, test = clusters
        report = run_random_removal(support, test, fractions=[0.5, 0.95],
                                    seed=1, stratified=True)
        assert report.steps[0].per_class_size == \
            {f"c{i:02d}": 10 for i in range(5)}
        # round(0.95 * 20) = 19, so exactly one survivor per class
        assert report.steps[1].per_class_size == \
            {f"c{i:02d}": 1 for i in range(5)}

    def test_schedule_validation(self, clusters):
        support, test = clusters
        with pytest.raises(ScheduleError):
            run_random_removal(support, test)
        with pytest.raises(ScheduleError):
            run_random_removal(support, test, fractions=[0.5], counts=[3])
        with pytest.raises(ScheduleError):
            run_random_removal(support, test, fractions=[1.5])
        with pytest.raises(ScheduleError):
            run_random_removal(support, test, counts=[101])
        with pytest.raises(ScheduleError):
            run_random_removal(support, test, counts=[50, 50])


class TestMvfRemoval:
    def test_one_removal_per_class_per_round(self, clusters):
        support, test = clusters
        report = run_mvf_removal(support, test, rounds=3,
                                 cfg=EngineConfig(k=5))
        sizes = [len(support)] + [s.support_size for s in report.steps]
        for before, after, step in zip(sizes, sizes[1:], report.steps):
            removed = mvf_removed_ids(step)
            assert before - after == len(removed)
            assert len(removed) <= len(support.labels)
            assert mvf_skipped_classes(step) == []

    def test_removed_ids_are_distinct_across_rounds(self, clusters):
        support, test = clusters
        report = run_mvf_removal(support, test, rounds=4,
                                 cfg=EngineConfig(k=5))
        seen = []
        for step in report.steps:
            seen.extend(mvf_removed_ids(step))
        assert len(seen) == len(set(seen))

    def test_exhausted_class_is_skipped_with_note(self):
        # class a holds one record, b and c hold three each; round two
        # finds a exhausted and says so
        base, test = gaussian_clusters(3, 8, 3, 4, seed=0)
        keep = np.flatnonzero((base.label_ids != 0) |
                              (np.arange(len(base)) == 0))
        support = base.subset(keep)
        report = run_mvf_removal(support, test, rounds=2,
                                 cfg=EngineConfig(k=1))
        assert mvf_skipped_classes(report.steps[0]) == []
        assert len(mvf_removed_ids(report.steps[0])) == 3
        assert mvf_skipped_classes(report.steps[1]) == ["c00"]
        assert len(mvf_removed_ids(report.steps[1])) == 2

    def test_rounds_validated(self, clusters):
        support, test = clusters
        with pytest.raises(ScheduleError):
            run_mvf_removal(support, test, rounds=0)


class TestMergeConsistency:
    def test_isolated_then_merged_steps(self):
        a = gaussian_clusters(3, 8, 10, 5, seed=1)
        b = gaussian_clusters(2, 8, 10, 5, seed=2)
        a[0].source_tag = "xray"
        b[0].source_tag = "derm"
        report = run_merge_consistency([a, b], EngineConfig(k=3))
        kinds = [s.removed_or_added for s in report.steps]
        assert kinds == ["isolated:xray", "isolated:derm",
                         "merged:xray", "merged:derm"]
        merged_sizes = [s.support_size for s in report.steps[2:]]
        assert merged_sizes == [50, 50]
        assert set(report.steps[2].per_class_size) == \
            {"xray/c00", "xray/c01", "xray/c02"}

    def test_well_separated_merge_keeps_accuracy(self):
        a = gaussian_clusters(3, 16, 15, 6, seed=3)
        b = gaussian_clusters(3, 16, 15, 6, seed=4)
        a[0].source_tag = "left"
        b[0].source_tag = "right"
        report = run_merge_consistency([a, b], EngineConfig(k=3))
        by_kind = {s.removed_or_added: s.accuracy for s in report.steps}
        assert by_kind["isolated:left"] == 1.0
        assert by_kind["merged:left"] == 1.0
        assert by_kind["merged:right"] == 1.0

    def test_duplicate_tags_rejected(self):
        a = gaussian_clusters(2, 8, 5, 2, seed=1)
        b = gaussian_clusters(2, 8, 5, 2, seed=2)
        a[0].source_tag = "same"
        b[0].source_tag = "same"
        with pytest.raises(ScheduleError):
            run_merge_consistency([a, b])

    def test_empty_dataset_skipped(self):
        a = gaussian_clusters(2, 8, 5, 3, seed=1)
        a[0].source_tag = "solo"
        empty_sup = LabeledSet(labels=("x",), ids=[], label_ids=[],
                               vectors=np.empty((0, 8), dtype=np.float32),
                               source_tag="void")
        empty_test = LabeledSet(labels=("x",), ids=[], label_ids=[],
                                vectors=np.empty((0, 8), dtype=np.float32),
                                role="test", source_tag="void")
        report = run_merge_consistency([a, (empty_sup, empty_test)])
        assert [s.removed_or_added for s in report.steps] == \
            ["isolated:solo", "merged:solo"]

    def test_dimension_mismatch_rejected(self):
        a = gaussian_clusters(2, 8, 5, 2, seed=1)
        b = gaussian_clusters(2, 16, 5, 2, seed=2)
        a[0].source_tag = "p"
        b[0].source_tag = "q"
        with pytest.raises(DimensionMismatchError):
            run_merge_consistency([a, b])


class TestScheduleConfig:
    def test_json_round_trip(self):
        schedule = Schedule(kind="random-removal", seed=7, k=3,
                            params={"fractions": [0.1, 0.5]})
        assert Schedule.from_json(schedule.to_json()) == schedule

    def test_unknown_kind_rejected(self):
        with pytest.raises(ScheduleError):
            Schedule(kind="nope")
        with pytest.raises(ScheduleError):
            Schedule.from_json('{"kind": "nope"}')

    def test_malformed_json_rejected(self):
        with pytest.raises(ScheduleError):
            Schedule.from_json("{nope")
        with pytest.raises(ScheduleError):
            Schedule.from_json('[1, 2]')
        with pytest.raises(ScheduleError):
            Schedule.from_json('{"kind": "merge", "bogus": 1}')

    def test_run_schedule_dispatches(self, clusters):
        support, test = clusters
        schedule = Schedule(kind="class-incremental", seed=0, k=5)
        report = run_schedule(schedule, support=support, test=test)
        direct = run_class_incremental(support, test, EngineConfig(k=5))
        assert report == direct

    def test_run_schedule_requires_data(self):
        with pytest.raises(ScheduleError):
            run_schedule(Schedule(kind="merge"))
        with pytest.raises(ScheduleError):
            run_schedule(Schedule(kind="mvf-removal"))


class TestLabeledSet:
    def test_round_trip_through_collection(self, clusters):
        support, _ = clusters
        coll = build_collection(support)
        back = labeled_set_from_collection(coll)
        assert back.labels == support.labels
        assert np.array_equal(np.sort(back.ids), np.sort(support.ids))
        assert len(back) == len(support)

    def test_per_class_counts(self, clusters):
        support, _ = clusters
        assert support.per_class_counts() == \
            {f"c{i:02d}": 20 for i in range(5)}


class TestDatasetRegistry:
    @pytest.mark.parametrize("name,classes,train,test", [
        ("cifar10", 10, 50_000, 10_000),
        ("cifar100", 100, 50_000, 10_000),
        ("stl10", 10, 5_000, 8_000),
        ("pneumonia", 2, 5_232, 624),
        ("melanoma", 7, 10_015, 1_513),
    ])
    def test_split_sizes(self, name, classes, train, test):
        info = dataset_info(name)
        assert info.num_classes == classes
        assert info.train_count == train
        assert info.test_count == test

    def test_label_names_match_class_counts(self):
        for name in ("cifar10", "stl10", "pneumonia", "melanoma"):
            info = dataset_info(name)
            assert len(info.label_names) == info.num_classes

    def test_unknown_dataset(self):
        with pytest.raises(Exception):
            dataset_info("imagenet")
