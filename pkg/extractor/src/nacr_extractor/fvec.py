"""Writer for the .fvec interchange format consumed by the classifier side.

Layout, little-endian: magic "FVC1", u16 version=1, u32 record count,
u32 dim, then per record u16 id length, UTF-8 id bytes, u8 label, and
dim float32 values. Must stay bit-compatible with the trainer's reader.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"FVC1"
VERSION = 1


def write_fvec(records: list[tuple[str, int, np.ndarray]], path) -> None:
    """records: (recording_id, label, values); all values share one dim."""
    if not records:
        raise ValueError("write_fvec: no records")
    dim = np.asarray(records[0][2]).size
    if dim == 0:
        raise ValueError("write_fvec: zero-dimensional records are not allowed")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HII", VERSION, len(records), dim))
        for rid, label, values in records:
            values = np.asarray(values)
            if values.size != dim:
                raise ValueError(
                    f"write_fvec: record {rid!r} has dimension {values.size}, "
                    f"expected {dim}"
                )
            encoded = rid.encode("utf-8")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", label))
            f.write(values.astype("<f4").tobytes())
