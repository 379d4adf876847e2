"""EMBV1 emission: binary segments plus the JSON manifest.

Wire layout, little-endian:

    "EMBV" | u8 version=1 | u32 dimension | u64 count
    per record: u64 id | u32 label_id | u16 tag_len | tag | dim x f32
    u32 CRC32C (Castagnoli) over everything before it

The store that consumes these files keeps its own reader; this module
is self-contained on purpose so the two sides only share the bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sBIQ")
_RECORD = struct.Struct("<QIH")
_TRAILER = struct.Struct("<I")

# CRC32C lookup table, reflected polynomial 0x82F63B78
_TABLE = []
for _byte in range(256):
    _crc = _byte
    for _ in range(8):
        _crc = (_crc >> 1) ^ 0x82F63B78 if _crc & 1 else _crc >> 1
    _TABLE.append(_crc)


def crc32c(data: bytes, crc: int = 0) -> int:
    crc ^= 0xFFFFFFFF
    for byte in data:
        crc = _TABLE[(crc ^ byte) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFF


def write_segment(path, ids, label_ids, vectors, tag: str | None = None):
    """Write one segment; returns {"path", "crc32c", "count"}.

    ids and label_ids are integer arrays, vectors a (n, d) float32
    array. All records share the optional source tag.
    """
    path = Path(path)
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    n, dim = vectors.shape
    tag_bytes = (tag or "").encode("utf-8")

    parts = [_HEADER.pack(b"EMBV", 1, dim, n)]
    for i in range(n):
        parts.append(_RECORD.pack(int(ids[i]), int(label_ids[i]),
                                  len(tag_bytes)))
        parts.append(tag_bytes)
        parts.append(vectors[i].tobytes())
    payload = b"".join(parts)
    checksum = crc32c(payload)

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(_TRAILER.pack(checksum))
    tmp.replace(path)
    return {"path": path.name, "crc32c": checksum, "count": n}


def read_segment(path):
    """Read a segment back; returns (ids, label_ids, vectors).

    Only used by our own tests; the consuming store has the
    authoritative reader. Verifies the trailing checksum.
    """
    data = Path(path).read_bytes()
    magic, version, dim, n = _HEADER.unpack_from(data, 0)
    if magic != b"EMBV" or version != 1:
        raise ValueError(f"{path}: not an EMBV1 segment")
    stored = _TRAILER.unpack_from(data, len(data) - 4)[0]
    if crc32c(data[:-4]) != stored:
        raise ValueError(f"{path}: checksum mismatch")

    ids = np.empty(n, dtype=np.uint64)
    label_ids = np.empty(n, dtype=np.uint32)
    vectors = np.empty((n, dim), dtype=np.float32)
    offset = _HEADER.size
    for i in range(n):
        rid, label, tag_len = _RECORD.unpack_from(data, offset)
        offset += _RECORD.size + tag_len
        ids[i] = rid
        label_ids[i] = label
        vectors[i] = np.frombuffer(data, dtype="<f4", count=dim,
                                   offset=offset)
        offset += dim * 4
    return ids, label_ids, vectors


def write_manifest(path, *, name, dimension, labels, segments,
                   extraction=None):
    """Manifest JSON in the store's schema plus an `extraction` block
    describing how the embeddings were produced."""
    doc = {
        "format_version": 1,
        "name": name,
        "dimension": int(dimension),
        "labels": list(labels),
        "segments": list(segments),
        "generation": 0,
    }
    if extraction is not None:
        doc["extraction"] = extraction
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    tmp.replace(path)
