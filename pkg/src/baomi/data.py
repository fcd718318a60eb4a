"""Feature-vector files, dataset manifests, and stratified fold assignment.

The `.fvec` interchange format carries one fixed-width float32 vector per
recording together with its id and binary label. Layout, little-endian:

    magic "FVC1" | u16 version=1 | u32 record count | u32 dim
    then per record: u16 id length | id bytes (UTF-8) | u8 label | dim * f32

Values are float32 on disk and widened to float64 in memory.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"FVC1"
VERSION = 1

LABEL_ABSENT = 0
LABEL_PRESENT = 1
LABEL_NAMES = {LABEL_ABSENT: "absent", LABEL_PRESENT: "present"}
_LABEL_OF = {"absent": LABEL_ABSENT, "present": LABEL_PRESENT}


class FvecFormatError(ValueError):
    """Corrupt or unsupported .fvec file."""


class ManifestError(ValueError):
    """Malformed dataset manifest CSV."""


@dataclass
class FeatureRecord:
    """One recording's representation vector with id and binary label."""

    recording_id: str
    label: int
    values: np.ndarray

    def __post_init__(self):
        if self.label not in (LABEL_ABSENT, LABEL_PRESENT):
            raise ValueError(f"{self.recording_id}: label must be 0 or 1")
        self.values = np.asarray(self.values, dtype=np.float64)


@dataclass
class ManifestRow:
    recording_id: str
    wav_path: str
    raw_label: str


@dataclass
class FoldAssignment:
    """Deterministic stratified assignment of recording ids to folds."""

    fold_of: dict[str, int]
    seed: int
    n_folds: int = 5

    def split(self, fold: int) -> tuple[list[str], list[str]]:
        """(train_ids, test_ids) for one held-out fold."""
        train = [r for r, f in self.fold_of.items() if f != fold]
        test = [r for r, f in self.fold_of.items() if f == fold]
        return train, test


# -- .fvec I/O -----------------------------------------------------------------

def write_fvec(records: list[FeatureRecord], path) -> None:
    """Write records to an .fvec file; all must share one dimension > 0."""
    if not records:
        raise ValueError("write_fvec: no records")
    dim = records[0].values.size
    if dim == 0:
        raise ValueError("write_fvec: zero-dimensional records are not allowed")
    for r in records:
        if r.values.size != dim:
            raise ValueError(
                f"write_fvec: record {r.recording_id!r} has dimension "
                f"{r.values.size}, expected {dim}"
            )
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<HII", VERSION, len(records), dim))
        for r in records:
            rid = r.recording_id.encode("utf-8")
            f.write(struct.pack("<H", len(rid)))
            f.write(rid)
            f.write(struct.pack("<B", r.label))
            f.write(r.values.astype("<f4").tobytes())


def read_fvec(path) -> list[FeatureRecord]:
    """Read an .fvec file, validating magic, version, and byte counts."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 14:
        raise FvecFormatError(f"{path}: truncated header")
    if blob[:4] != MAGIC:
        raise FvecFormatError(f"{path}: bad magic {blob[:4]!r}")
    version, count, dim = struct.unpack_from("<HII", blob, 4)
    if version != VERSION:
        raise FvecFormatError(f"{path}: unsupported version {version}")
    records = []
    off = 14
    for _ in range(count):
        if off + 2 > len(blob):
            raise FvecFormatError(f"{path}: truncated file")
        (id_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        end = off + id_len + 1 + 4 * dim
        if end > len(blob):
            raise FvecFormatError(f"{path}: truncated file")
        rid = blob[off : off + id_len].decode("utf-8")
        off += id_len
        label = blob[off]
        off += 1
        values = np.frombuffer(blob, dtype="<f4", count=dim, offset=off)
        off += 4 * dim
        records.append(FeatureRecord(rid, int(label), values.astype(np.float64)))
    if off != len(blob):
        raise FvecFormatError(f"{path}: {len(blob) - off} trailing bytes")
    return records


# -- manifests -------------------------------------------------------------------

def read_manifest(path) -> list[ManifestRow]:
    """Parse a `recording_id,wav_path,label` CSV with unique ids."""
    rows: list[ManifestRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"recording_id", "wav_path", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ManifestError(
                f"{path}: manifest must have columns recording_id,wav_path,label"
            )
        for line in reader:
            rid = line["recording_id"].strip()
            raw = line["label"].strip().lower()
            if raw not in ("present", "absent", "unknown"):
                raise ManifestError(f"{path}: unrecognized label {line['label']!r}")
            if rid in seen:
                raise ManifestError(f"{path}: duplicate recording_id {rid!r}")
            seen.add(rid)
            rows.append(ManifestRow(rid, line["wav_path"].strip(), raw))
    return rows


def filter_unknown(rows: list[ManifestRow]) -> tuple[list[ManifestRow], list[str]]:
    """Drop Unknown rows; returns (kept rows, skipped recording ids)."""
    kept = [r for r in rows if r.raw_label != "unknown"]
    skipped = [r.recording_id for r in rows if r.raw_label == "unknown"]
    return kept, skipped


def label_value(raw_label: str) -> int:
    return _LABEL_OF[raw_label.lower()]


# -- folds -------------------------------------------------------------------------

def make_folds(records: list[FeatureRecord], seed: int, n_folds: int = 5) -> FoldAssignment:
    """Stratified fold assignment: per class, sort ids, shuffle, deal round-robin.

    Deterministic for a given (id set, seed); per-class fold sizes differ by
    at most one.
    """
    by_class: dict[int, list[str]] = {}
    for r in records:
        by_class.setdefault(r.label, []).append(r.recording_id)
    for label, ids in sorted(by_class.items()):
        if len(ids) < n_folds:
            raise ValueError(
                f"make_folds: class {LABEL_NAMES.get(label, label)} has only "
                f"{len(ids)} records, need at least {n_folds}"
            )
    rng = np.random.default_rng(seed)
    fold_of: dict[str, int] = {}
    for label in sorted(by_class):
        ids = sorted(by_class[label])
        order = rng.permutation(len(ids))
        for pos, idx in enumerate(order):
            fold_of[ids[idx]] = pos % n_folds
    return FoldAssignment(fold_of=fold_of, seed=seed, n_folds=n_folds)
