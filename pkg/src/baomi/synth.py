"""Synthetic heart-sound-like recordings for demos and end-to-end checks.

Class 0 (absent): periodic pairs of 100 Hz tone bursts, a lub-dub pattern.
Class 1 (present): the same bursts plus band-limited noise (150-400 Hz)
filling the gap between the two bursts of each pair, a crude murmur.

Writing a directory of WAVs plus a manifest makes the whole pipeline
runnable without any real dataset:

    python3 -m baomi.synth demo_data --count 40
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from baomi.dsp import write_wav

SR = 4000
TONE_HZ = 100.0
MURMUR_BAND = (150.0, 400.0)


def _burst(rng: np.random.Generator, n: int) -> np.ndarray:
    """One Hann-enveloped tone burst of n samples."""
    t = np.arange(n) / SR
    env = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    phase = rng.uniform(0, 2 * np.pi)
    return env * np.sin(2 * np.pi * TONE_HZ * t + phase)


def _band_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    """White noise masked to the murmur band in the frequency domain."""
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / SR)
    spec[(freqs < MURMUR_BAND[0]) | (freqs > MURMUR_BAND[1])] = 0.0
    noise = np.fft.irfft(spec, n)
    peak = np.abs(noise).max()
    return noise / peak if peak > 0 else noise


def make_recording(rng: np.random.Generator, label: int,
                   duration_s: float) -> np.ndarray:
    """One synthetic recording; label 1 adds the murmur noise."""
    n = int(duration_s * SR)
    x = np.zeros(n)
    burst_len = int(0.10 * SR)
    pair_gap = int(0.30 * SR)  # S1 to S2
    period = int(0.95 * SR)  # beat to beat
    start = int(rng.uniform(0, 0.1) * SR)
    while start + pair_gap + burst_len < n:
        x[start : start + burst_len] += _burst(rng, burst_len)
        s2 = start + pair_gap
        x[s2 : s2 + burst_len] += _burst(rng, burst_len)
        if label == 1:
            gap_lo = start + burst_len
            gap_hi = s2
            x[gap_lo:gap_hi] += 0.45 * _band_noise(rng, gap_hi - gap_lo)
        start += period
    x += 0.01 * rng.standard_normal(n)
    return 0.9 * x / np.abs(x).max()


def generate_dataset(out_dir, count: int = 200, seed: int = 0,
                     min_duration_s: float = 2.0,
                     max_duration_s: float = 4.0) -> Path:
    """Write `count` WAVs (half per class) and a manifest CSV; returns its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest = out_dir / "manifest.csv"
    with open(manifest, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["recording_id", "wav_path", "label"])
        for i in range(count):
            label = i % 2
            rid = f"synth{i:04d}"
            duration = rng.uniform(min_duration_s, max_duration_s)
            wav_path = out_dir / f"{rid}.wav"
            write_wav(wav_path, make_recording(rng, label, duration), SR)
            writer.writerow([rid, str(wav_path), "present" if label else "absent"])
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir")
    parser.add_argument("--count", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    manifest = generate_dataset(args.out_dir, count=args.count, seed=args.seed)
    print(manifest)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
