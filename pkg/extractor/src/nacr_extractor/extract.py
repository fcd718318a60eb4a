"""Manifest-to-.fvec extraction over a chosen codec and backend."""

from __future__ import annotations

import sys

from nacr_extractor import audio, fvec, pretrained, surrogate
from nacr_extractor.codecs import CodecSpec, pool, verify_dim

BACKENDS = ("pretrained", "surrogate")


def extract_nacr(manifest_path, spec: CodecSpec, out_path,
                 backend: str = "pretrained", log=sys.stderr) -> tuple[int, int]:
    """Pad, resample, encode, pool, and write one record per recording.

    Returns (records written, feature dimension). Fails before writing
    anything if the manifest is empty or any vector width disagrees with
    the codec's frame arithmetic.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    rows, skipped = audio.read_manifest(manifest_path)
    for rid in skipped:
        print(f"warning: skipping recording {rid!r} with label unknown", file=log)
    if not rows:
        raise ValueError(f"{manifest_path}: no present/absent rows to extract")

    signals = []
    rates = set()
    for row in rows:
        samples, rate = audio.load_wav(row.wav_path)
        signals.append(samples)
        rates.add(rate)
    if len(rates) != 1:
        raise ValueError(f"mixed sample rates in manifest: {sorted(rates)}")
    src_rate = rates.pop()

    signals = audio.pad_to_max(signals)
    duration_s = signals[0].size / src_rate
    encode = surrogate.encode if backend == "surrogate" else pretrained.encode

    records = []
    dim = None
    for row, x in zip(rows, signals):
        resampled = audio.resample(x, src_rate, spec.sample_rate)
        vector = pool(spec, encode(spec, resampled))
        verify_dim(spec, resampled.size, vector.size, duration_s)
        if dim is None:
            dim = vector.size
        elif vector.size != dim:
            raise ValueError(
                f"{row.recording_id}: dimension {vector.size} != {dim}"
            )
        records.append((row.recording_id, row.label, vector))
    fvec.write_fvec(records, out_path)
    return len(records), dim
