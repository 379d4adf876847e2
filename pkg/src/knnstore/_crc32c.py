"""CRC32C (Castagnoli) checksum.

No suitable package is available in this environment, so the checksum is
implemented here: a table-driven byte loop as the reference, plus a
chunk-parallel numpy path for large buffers. The fast path splits the
input into fixed-size chunks, runs all chunk registers simultaneously,
and folds them together using the GF(2) linearity of the CRC register
(the same trick zlib's crc32_combine uses).

Reference check vector: crc32c(b"123456789") == 0xE3069283.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

_POLY = 0x82F63B78  # Castagnoli, reflected

_CHUNK = 4096
_PARALLEL_THRESHOLD = 4 * _CHUNK


def _build_table() -> list[int]:
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ _POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_TABLE = _build_table()
_TABLE_NP = np.array(_TABLE, dtype=np.uint32)


def _update(state: int, data: bytes) -> int:
    table = _TABLE
    for b in data:
        state = table[(state ^ b) & 0xFF] ^ (state >> 8)
    return state


def crc32c_naive(data: bytes) -> int:
    """Plain byte-loop CRC32C; the reference the fast path is tested against."""
    return _update(0xFFFFFFFF, data) ^ 0xFFFFFFFF


# A linear map over GF(2)^32 is kept as the images of the 32 basis vectors.

def _apply(cols: tuple[int, ...], value: int) -> int:
    out = 0
    k = 0
    while value:
        if value & 1:
            out ^= cols[k]
        value >>= 1
        k += 1
    return out


def _compose(f: tuple[int, ...], g: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(_apply(f, c) for c in g)


# Register advance for one zero byte: s -> table[s & 0xFF] ^ (s >> 8).
_ZERO_BYTE_MAP = tuple(_TABLE[(1 << k) & 0xFF] ^ ((1 << k) >> 8) for k in range(32))
_IDENTITY_MAP = tuple(1 << k for k in range(32))


@lru_cache(maxsize=64)
def _advance_map(length: int) -> tuple[int, ...]:
    """Linear map advancing the register past `length` zero bytes."""
    result = _IDENTITY_MAP
    base = _ZERO_BYTE_MAP
    while length:
        if length & 1:
            result = _compose(base, result)
        base = _compose(base, base)
        length >>= 1
    return result


def _chunk_registers(chunks: np.ndarray) -> np.ndarray:
    """Run the CRC register for every chunk row in parallel, init 0."""
    cols = np.ascontiguousarray(chunks.T)
    states = np.zeros(chunks.shape[0], dtype=np.uint32)
    table = _TABLE_NP
    mask = np.uint32(0xFF)
    eight = np.uint32(8)
    for j in range(cols.shape[0]):
        states = table[(states ^ cols[j]) & mask] ^ (states >> eight)
    return states


def crc32c(data: bytes) -> int:
    """CRC32C of `data` as an unsigned 32-bit integer."""
    n = len(data)
    if n < _PARALLEL_THRESHOLD:
        return crc32c_naive(data)

    arr = np.frombuffer(data, dtype=np.uint8)
    m = n // _CHUNK
    body = arr[: m * _CHUNK].reshape(m, _CHUNK)
    registers = _chunk_registers(body)

    shift_chunk = _advance_map(_CHUNK)
    raw = 0
    for value in registers.tolist():
        raw = _apply(shift_chunk, raw) ^ value

    tail = data[m * _CHUNK :]
    if tail:
        raw = _apply(_advance_map(len(tail)), raw) ^ _update(0, tail)

    return raw ^ _apply(_advance_map(n), 0xFFFFFFFF) ^ 0xFFFFFFFF
