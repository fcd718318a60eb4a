"""Deterministic stand-in encoders with each codec's exact frame arithmetic.

The real codecs need pretrained checkpoints. This backend replaces each
encoder with a frozen random projection over simple per-frame statistics:
weights derive from a hash of the codec id, so outputs are reproducible
across runs and machines, and frame counts, stream layout, and pooling
match the real models. Use it to validate the pipeline end to end when
checkpoints are unavailable; the vectors carry signal (energy and texture
per frame) but are not codec embeddings.
"""

from __future__ import annotations

import hashlib

import numpy as np

from nacr_extractor.codecs import CodecSpec

N_STATS = 5


def _rng_for(codec_id: str, stream: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{codec_id}/{stream}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _frame_stats(x: np.ndarray, hop: int, n_frames: int) -> np.ndarray:
    """[n_frames, N_STATS] per-frame summary statistics."""
    padded = np.zeros(n_frames * hop)
    padded[: min(x.size, padded.size)] = x[: padded.size]
    frames = padded.reshape(n_frames, hop)
    diffs = np.diff(frames, axis=1)
    return np.stack(
        [
            np.abs(frames).mean(axis=1),
            np.sqrt((frames**2).mean(axis=1)),
            np.abs(frames).max(axis=1),
            (np.abs(np.diff(np.signbit(frames), axis=1))).mean(axis=1),
            np.sqrt((diffs**2).mean(axis=1)),
        ],
        axis=1,
    )


def _project(codec_id: str, stream: int, stats: np.ndarray) -> np.ndarray:
    rng = _rng_for(codec_id, stream)
    w = rng.standard_normal(N_STATS)
    b = rng.standard_normal()
    return np.tanh(stats @ w + b)


def encode(spec: CodecSpec, x: np.ndarray) -> np.ndarray | list[np.ndarray]:
    """Frozen surrogate codes for one signal at the codec's sample rate.

    Returns [levels, frames] (or [levels, chunks, frames] for chunked
    codecs) for the mean-style poolers, or a list of per-scale 1-D streams
    for concat pooling.
    """
    if spec.pooling == "concat_codes":
        base = spec.n_frames(x.size)
        streams = []
        for stream, scale in enumerate(spec.scales):
            hop = spec.hop // scale
            streams.append(_project(spec.codec_id, stream,
                                    _frame_stats(x, hop, base * scale)))
        return streams
    if spec.chunk_seconds is not None:
        chunk = int(round(spec.chunk_seconds * spec.sample_rate))
        n_chunks = max(1, -(-x.size // chunk))
        frames_per_chunk = chunk // spec.hop
        padded = np.zeros(n_chunks * chunk)
        padded[: x.size] = x
        codes = np.empty((spec.n_streams, n_chunks, frames_per_chunk))
        for stream in range(spec.n_streams):
            for c in range(n_chunks):
                stats = _frame_stats(padded[c * chunk : (c + 1) * chunk],
                                     spec.hop, frames_per_chunk)
                codes[stream, c] = _project(spec.codec_id, stream, stats)
        return codes
    n_frames = spec.n_frames(x.size)
    return np.stack(
        [
            _project(spec.codec_id, stream, _frame_stats(x, spec.hop, n_frames))
            for stream in range(spec.n_streams)
        ]
    )
