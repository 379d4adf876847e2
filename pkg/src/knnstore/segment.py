"""EMBV1 binary segment files and the JSON manifest that indexes them.

Segment layout, little-endian throughout:

    magic "EMBV" | version 0x01 | dimension u32 | record_count u64
    then record_count records, each:
        id u64 | label_id u32 | tag_len u16 | tag bytes (UTF-8) | dimension x f32
    trailing CRC32C (u32) over all preceding bytes

The manifest is UTF-8 JSON: format_version, name, dimension, labels,
segments (path + crc32c + count), generation. Segment paths are relative
to the manifest's directory. Readers refuse to load on any checksum or
layout violation; errors report the byte offset of the first problem.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ._crc32c import crc32c
from .errors import ChecksumError, FormatError

MAGIC = b"EMBV"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sBIQ")          # magic, version, dimension, count
_RECORD_FIXED = struct.Struct("<QIH")      # id, label_id, tag length
_CRC_TRAILER = struct.Struct("<I")

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class SegmentInfo:
    path: str
    crc32c: int
    count: int


@dataclass(frozen=True)
class Manifest:
    format_version: int
    name: str
    dimension: int
    labels: tuple[str, ...]
    segments: tuple[SegmentInfo, ...] = ()
    generation: int = 0

    @property
    def record_count(self) -> int:
        return sum(s.count for s in self.segments)

    def to_json(self) -> str:
        doc = {
            "format_version": self.format_version,
            "name": self.name,
            "dimension": self.dimension,
            "labels": list(self.labels),
            "segments": [
                {"path": s.path, "crc32c": s.crc32c, "count": s.count}
                for s in self.segments
            ],
            "generation": self.generation,
        }
        return json.dumps(doc, indent=2) + "\n"


def write_segment(path: Path | str,
                  records: Iterable[tuple[int, int, str | None, np.ndarray]],
                  dimension: int) -> SegmentInfo:
    """Write records as one EMBV1 segment; returns its info entry.

    Each record is (id, label_id, source_tag, float32 vector). Vector bytes
    are written verbatim, so a later read returns bit-identical values.
    """
    path = Path(path)
    parts = [bytearray()]
    count = 0
    for rid, label_id, tag, vector in records:
        tag_bytes = tag.encode("utf-8") if tag else b""
        if len(tag_bytes) > 0xFFFF:
            raise FormatError("source_tag longer than 65535 bytes",
                              offending_field="source_tag")
        vec = np.ascontiguousarray(vector, dtype="<f4")
        if vec.shape != (dimension,):
            # a mismatched vector would checksum fine but tear the
            # record framing for every reader
            raise FormatError(
                f"record {rid}: vector shape {vec.shape} does not "
                f"match segment dimension {dimension}",
                offending_field="vector")
        parts.append(_RECORD_FIXED.pack(rid, label_id, len(tag_bytes)))
        parts.append(tag_bytes)
        parts.append(vec.tobytes())
        count += 1

    parts[0] = _HEADER.pack(MAGIC, FORMAT_VERSION, dimension, count)
    payload = b"".join(parts)
    checksum = crc32c(payload)

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(_CRC_TRAILER.pack(checksum))
    tmp.replace(path)
    return SegmentInfo(path=path.name, crc32c=checksum, count=count)


def read_segment(path: Path | str,
                 expected_crc: int | None = None):
    """Read one EMBV1 segment.

    Returns (ids u64 array, label_ids u32 array, tags list, vectors (n, d)
    float32 array). Refuses partial data: any structural violation raises
    FormatError with the byte offset, any checksum mismatch ChecksumError.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path.name}: segment file is missing",
                          offending_field="path") from None

    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"{path.name}: bad magic, expected EMBV", offset=0)
    if len(data) < 5 or data[4] != FORMAT_VERSION:
        found = data[4] if len(data) >= 5 else None
        raise FormatError(
            f"{path.name}: unsupported format version {found}", offset=4)
    if len(data) < _HEADER.size + _CRC_TRAILER.size:
        raise FormatError(f"{path.name}: truncated header",
                          offset=len(data))

    checksum = _CRC_TRAILER.unpack_from(data, len(data) - 4)[0]
    computed = crc32c(data[:-4])
    if checksum != computed:
        raise ChecksumError(
            f"{path.name}: checksum mismatch "
            f"(stored {checksum:#010x}, computed {computed:#010x})")
    if expected_crc is not None and checksum != expected_crc:
        raise ChecksumError(
            f"{path.name}: checksum {checksum:#010x} does not match "
            f"manifest entry {expected_crc:#010x}")

    _, _, dimension, count = _HEADER.unpack_from(data, 0)
    body_end = len(data) - 4
    offset = _HEADER.size

    ids = np.empty(count, dtype=np.uint64)
    label_ids = np.empty(count, dtype=np.uint32)
    tags: list[str | None] = []
    vectors = np.empty((count, dimension), dtype=np.float32)
    vec_bytes = 4 * dimension

    for i in range(count):
        if offset + _RECORD_FIXED.size > body_end:
            raise FormatError(f"{path.name}: truncated record {i}",
                              offset=offset)
        rid, label_id, tag_len = _RECORD_FIXED.unpack_from(data, offset)
        offset += _RECORD_FIXED.size
        if offset + tag_len + vec_bytes > body_end:
            raise FormatError(f"{path.name}: truncated record {i}",
                              offset=offset)
        if tag_len:
            try:
                tags.append(data[offset:offset + tag_len].decode("utf-8"))
            except UnicodeDecodeError:
                raise FormatError(
                    f"{path.name}: record {i} source_tag is not UTF-8",
                    offset=offset) from None
            offset += tag_len
        else:
            tags.append(None)
        ids[i] = rid
        label_ids[i] = label_id
        vectors[i] = np.frombuffer(data, dtype="<f4", count=dimension,
                                   offset=offset)
        offset += vec_bytes

    if offset != body_end:
        raise FormatError(
            f"{path.name}: {body_end - offset} trailing bytes after "
            f"record {count - 1}", offset=offset)
    return ids, label_ids, tags, vectors


def write_manifest(path: Path | str, manifest: Manifest) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(manifest.to_json(), encoding="utf-8")
    tmp.replace(path)


def read_manifest(path: Path | str) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path.name}: manifest is not valid JSON: {exc}")

    def require(name, kind):
        if name not in doc:
            raise FormatError(f"{path.name}: manifest missing field '{name}'",
                              offending_field=name)
        value = doc[name]
        if not isinstance(value, kind) or isinstance(value, bool):
            raise FormatError(
                f"{path.name}: manifest field '{name}' has wrong type",
                offending_field=name)
        return value

    version = require("format_version", int)
    if version != FORMAT_VERSION:
        raise FormatError(
            f"{path.name}: unknown format_version {version}",
            offending_field="format_version")

    labels = require("labels", list)
    segments = []
    for entry in require("segments", list):
        if not isinstance(entry, dict):
            raise FormatError(f"{path.name}: malformed segment entry",
                              offending_field="segments")
        try:
            segments.append(SegmentInfo(path=entry["path"],
                                        crc32c=entry["crc32c"],
                                        count=entry["count"]))
        except KeyError as exc:
            raise FormatError(
                f"{path.name}: segment entry missing {exc}",
                offending_field="segments") from None

    return Manifest(
        format_version=version,
        name=require("name", str),
        dimension=require("dimension", int),
        labels=tuple(str(x) for x in labels),
        segments=tuple(segments),
        generation=require("generation", int),
    )


def manifest_path(store_dir: Path | str) -> Path:
    """Resolve a store directory or direct manifest path to the manifest file."""
    p = Path(store_dir)
    return p / MANIFEST_NAME if p.is_dir() else p
