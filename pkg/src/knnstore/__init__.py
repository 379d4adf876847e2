"""Exact k-NN image classification over a mutable embedding store.

Task knowledge lives in the stored embeddings, not in model weights:
adding a class is an insert, honoring a deletion request is a delete,
and both take effect for the very next query. The engine never
approximates; every query is an exact cosine scan of the live records.

The HTTP facade lives in knnstore.service (create_app), the command
line in knnstore.cli.
"""

from ._crc32c import crc32c
from .engine import (
    ATTRIBUTION_RULES,
    DEFAULT_K,
    ClassificationResult,
    EngineConfig,
    Neighbor,
    classify,
    classify_batch,
    neighbor_attribution,
    top_k,
)
from .errors import (
    ChecksumError,
    CollectionExistsError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyCollectionError,
    FormatError,
    InvalidVectorError,
    KnnStoreError,
    LabelInvalidError,
    RecordInvalidError,
    ScheduleError,
    UnknownCollectionError,
    UnknownIdError,
    ZeroNormError,
)
from .harness import (
    DATASETS,
    DatasetInfo,
    LabeledSet,
    ProtocolReport,
    ProtocolStep,
    Schedule,
    build_collection,
    dataset_info,
    emit_report,
    evaluate_accuracy,
    gaussian_clusters,
    labeled_set_from_collection,
    load_report,
    mvf_removed_ids,
    mvf_skipped_classes,
    report_to_csv,
    run_class_incremental,
    run_merge_consistency,
    run_mvf_removal,
    run_random_removal,
    run_sample_incremental,
    run_schedule,
)
from .segment import (
    MANIFEST_NAME,
    Manifest,
    SegmentInfo,
    manifest_path,
    read_manifest,
    read_segment,
    write_manifest,
    write_segment,
)
from .store import (
    Collection,
    CollectionRegistry,
    CollectionView,
    DeleteResult,
    EmbeddingRecord,
    create_collection,
    match_ids,
)

__version__ = "1.0.0"

__all__ = [
    "ATTRIBUTION_RULES",
    "DATASETS",
    "DEFAULT_K",
    "MANIFEST_NAME",
    "ChecksumError",
    "ClassificationResult",
    "Collection",
    "CollectionExistsError",
    "CollectionRegistry",
    "CollectionView",
    "DatasetInfo",
    "DeleteResult",
    "DimensionMismatchError",
    "DuplicateIdError",
    "EmbeddingRecord",
    "EmptyCollectionError",
    "EngineConfig",
    "FormatError",
    "InvalidVectorError",
    "KnnStoreError",
    "LabelInvalidError",
    "LabeledSet",
    "Manifest",
    "Neighbor",
    "ProtocolReport",
    "ProtocolStep",
    "RecordInvalidError",
    "Schedule",
    "ScheduleError",
    "SegmentInfo",
    "UnknownCollectionError",
    "UnknownIdError",
    "ZeroNormError",
    "build_collection",
    "classify",
    "classify_batch",
    "create_collection",
    "crc32c",
    "dataset_info",
    "emit_report",
    "evaluate_accuracy",
    "gaussian_clusters",
    "labeled_set_from_collection",
    "load_report",
    "manifest_path",
    "match_ids",
    "mvf_removed_ids",
    "mvf_skipped_classes",
    "neighbor_attribution",
    "read_manifest",
    "read_segment",
    "report_to_csv",
    "run_class_incremental",
    "run_merge_consistency",
    "run_mvf_removal",
    "run_random_removal",
    "run_sample_incremental",
    "run_schedule",
    "top_k",
    "write_manifest",
    "write_segment",
]
