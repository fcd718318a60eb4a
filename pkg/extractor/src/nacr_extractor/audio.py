"""WAV loading, max-duration padding, resampling, and manifest parsing.

Mirrors the pipeline's shared external formats: PCM 16-bit mono WAV inputs
and `recording_id,wav_path,label` manifest CSVs. Resampling to each codec's
required rate happens here; the classifier side never resamples.
"""

from __future__ import annotations

import csv
import wave
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly


class AudioFormatError(ValueError):
    pass


class ManifestError(ValueError):
    pass


LABELS = {"absent": 0, "present": 1}


@dataclass
class ManifestRow:
    recording_id: str
    wav_path: str
    label: int  # 0 absent, 1 present


def read_manifest(path) -> tuple[list[ManifestRow], list[str]]:
    """Parse rows, dropping Unknown; returns (kept rows, skipped ids)."""
    kept: list[ManifestRow] = []
    skipped: list[str] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        required = {"recording_id", "wav_path", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ManifestError(
                f"{path}: manifest needs columns recording_id,wav_path,label"
            )
        for line in reader:
            rid = line["recording_id"].strip()
            if rid in seen:
                raise ManifestError(f"{path}: duplicate recording_id {rid!r}")
            seen.add(rid)
            raw = line["label"].strip().lower()
            if raw == "unknown":
                skipped.append(rid)
                continue
            if raw not in LABELS:
                raise ManifestError(f"{path}: unrecognized label {line['label']!r}")
            kept.append(ManifestRow(rid, line["wav_path"].strip(), LABELS[raw]))
    return kept, skipped


def load_wav(path) -> tuple[np.ndarray, int]:
    """PCM 16-bit mono WAV -> (float64 samples in [-1, 1], sample rate)."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getnchannels() != 1:
                raise AudioFormatError(f"{path}: expected mono audio")
            if wf.getsampwidth() != 2:
                raise AudioFormatError(f"{path}: expected 16-bit PCM")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioFormatError(f"{path}: unsupported or malformed WAV ({exc})") from exc
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0, rate


def pad_to_max(signals: list[np.ndarray]) -> list[np.ndarray]:
    """Zero-pad every signal at the end to the longest one's length."""
    target = max(s.size for s in signals)
    out = []
    for s in signals:
        padded = np.zeros(target)
        padded[: s.size] = s
        out.append(padded)
    return out


def resample(x: np.ndarray, src_rate: int, dst_rate: int) -> np.ndarray:
    """Polyphase resampling to the codec's required input rate."""
    if src_rate == dst_rate:
        return x
    ratio = Fraction(dst_rate, src_rate)
    return resample_poly(x, ratio.numerator, ratio.denominator)
