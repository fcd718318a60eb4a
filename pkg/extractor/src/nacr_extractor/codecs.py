"""Codec registry: sample rates, frame arithmetic, and pooling rules.

Each codec encodes audio into one or more quantized code streams. Pooling
collapses the quantizer axis and keeps the time axis, so the feature
dimension is the (total) frame count:

    mean_pool       mean over the quantizer levels        -> [frames]
    code_sum_mean   sum the levels, then divide by count  -> [frames]
    concat_codes    concatenate multi-scale 1-D streams   -> [sum of frames]

EnCodec 48 kHz processes fixed one-second chunks, so its vector is the
per-chunk frame count (150) regardless of input length; chunks are
averaged. The `expected_dim` of every codec is its dimension when inputs
are padded to the reference duration of 64.512 s, the longest recording
in the target corpus; those dimensions double as a wiring checksum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REFERENCE_MAX_DURATION_S = 64.512


class UnknownCodecError(ValueError):
    pass


class DimMismatchError(RuntimeError):
    """Encoder output width disagrees with the codec's frame arithmetic."""


@dataclass(frozen=True)
class CodecSpec:
    codec_id: str
    sample_rate: int
    hop: int  # coarsest stream's hop in samples at the codec rate
    n_streams: int  # quantizer levels
    pooling: str  # mean_pool | code_sum_mean | concat_codes
    expected_dim: int  # dimension at the reference max-duration padding
    scales: tuple[int, ...] = (1,)  # per-stream temporal multipliers
    chunk_seconds: float | None = None
    rounding: str = "ceil"  # frame-count rounding: ceil | floor

    def n_frames(self, n_samples: int) -> int:
        frames = n_samples / self.hop
        frames = math.floor(frames) if self.rounding == "floor" else math.ceil(frames)
        return max(frames, 1)

    def output_dim(self, n_samples: int) -> int:
        """Feature dimension for an input of n_samples at the codec rate."""
        if self.chunk_seconds is not None:
            return int(round(self.chunk_seconds * self.sample_rate)) // self.hop
        frames = self.n_frames(n_samples)
        if self.pooling == "concat_codes":
            return frames * sum(self.scales)
        return frames


CODECS: dict[str, CodecSpec] = {
    spec.codec_id: spec
    for spec in (
        CodecSpec("encodec24", 24000, 320, 32, "mean_pool", 4839),
        CodecSpec("encodec48", 48000, 320, 16, "mean_pool", 150, chunk_seconds=1.0),
        CodecSpec("dac", 16000, 320, 12, "mean_pool", 3225, rounding="floor"),
        CodecSpec("speech_tokenizer", 16000, 320, 8, "code_sum_mean", 3226),
        CodecSpec("snac24", 24000, 2048, 3, "concat_codes", 5292, scales=(1, 2, 4)),
        CodecSpec("snac32", 32000, 3072, 4, "concat_codes", 10080, scales=(1, 2, 4, 8)),
    )
}


def get_codec(codec_id: str) -> CodecSpec:
    try:
        return CODECS[codec_id]
    except KeyError:
        raise UnknownCodecError(
            f"unknown codec {codec_id!r}; choose from {sorted(CODECS)}"
        ) from None


# -- pooling ---------------------------------------------------------------------

def mean_pool(codes: np.ndarray) -> np.ndarray:
    """[levels, frames] -> [frames] by averaging the quantizer axis."""
    return codes.mean(axis=0)


def code_sum_mean(codes: np.ndarray) -> np.ndarray:
    """Sum the code streams across levels, then average by the level count."""
    return codes.sum(axis=0) / codes.shape[0]


def concat_codes(streams: list[np.ndarray]) -> np.ndarray:
    """Concatenate already one-dimensional multi-scale code streams."""
    return np.concatenate([np.asarray(s).reshape(-1) for s in streams])


def pool(spec: CodecSpec, codes) -> np.ndarray:
    if spec.pooling == "mean_pool":
        arr = np.asarray(codes)
        if arr.ndim == 3:  # [levels, chunks, frames] for chunked codecs
            return arr.mean(axis=(0, 1))
        return mean_pool(arr)
    if spec.pooling == "code_sum_mean":
        return code_sum_mean(np.asarray(codes))
    if spec.pooling == "concat_codes":
        return concat_codes(codes)
    raise ValueError(f"unknown pooling rule {spec.pooling!r}")


def verify_dim(spec: CodecSpec, n_samples: int, got_dim: int,
               source_duration_s: float) -> None:
    """Fail loudly rather than let a wrong-width vector reach a file."""
    predicted = spec.output_dim(n_samples)
    if got_dim != predicted:
        raise DimMismatchError(
            f"{spec.codec_id}: encoder produced dimension {got_dim}, frame "
            f"arithmetic predicts {predicted} for {n_samples} samples"
        )
    at_reference = abs(source_duration_s - REFERENCE_MAX_DURATION_S) < 1e-6
    if at_reference and got_dim != spec.expected_dim:
        raise DimMismatchError(
            f"{spec.codec_id}: dimension {got_dim} at reference padding, "
            f"expected {spec.expected_dim}"
        )
