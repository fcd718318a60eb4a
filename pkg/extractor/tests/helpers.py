"""Test helpers: write synthetic WAVs and manifests without other packages."""

import csv
import wave

import numpy as np


def write_wav(path, samples, sample_rate):
    quantized = np.clip(np.round(np.asarray(samples) * 32768.0), -32768, 32767)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(quantized.astype("<i2").tobytes())


def make_manifest(out_dir, durations_s, sample_rate=4000, labels=None,
                  extra_rows=()):
    """Tone WAVs of the given durations plus a manifest; returns its path."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(123)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["recording_id", "wav_path", "label"])
        for i, duration in enumerate(durations_s):
            rid = f"smoke{i:03d}"
            n = int(round(duration * sample_rate))
            t = np.arange(n) / sample_rate
            freq = 80.0 + 40.0 * (i % 5)
            x = 0.4 * np.sin(2 * np.pi * freq * t)
            x += 0.05 * rng.standard_normal(n)
            x /= max(1.0, np.abs(x).max() / 0.9)
            path = out_dir / f"{rid}.wav"
            write_wav(path, x, sample_rate)
            label = labels[i] if labels else ("present" if i % 2 else "absent")
            writer.writerow([rid, str(path), label])
        for row in extra_rows:
            writer.writerow(row)
    return manifest
