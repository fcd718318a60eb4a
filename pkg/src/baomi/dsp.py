"""WAV ingestion, padding, and cepstral feature extraction.

Produces one fixed-length vector per recording: 40 mel-frequency cepstral
coefficients or 14 linear-frequency cepstral coefficients, averaged over
25 ms frames hopped every 10 ms. Parameters are pinned here (Hann window,
128 mel / 24 linear triangular filters, log floor 1e-10, orthonormal
DCT-II) so outputs are reproducible bit for bit.

Filterbank weights are the exact integral of each triangle over each FFT
bin's width rather than point samples at bin centers; with 128 mel filters
and short low-rate frames, point sampling leaves some filters with no bins
at all, and integration keeps every filter row positive and every non-DC
bin covered.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

INT16_SCALE = 32768.0


class WavFormatError(ValueError):
    """File is not the supported PCM 16-bit mono WAV encoding."""


class ClipTooShortError(ValueError):
    """Recording is shorter than one analysis frame."""


@dataclass
class AudioClip:
    """A mono recording with samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate_hz: int
    recording_id: str

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError(f"{self.recording_id}: empty clip")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"{self.recording_id}: bad sample rate")
        if np.abs(self.samples).max() > 1.0:
            raise ValueError(f"{self.recording_id}: samples exceed [-1, 1]")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass
class SpectralConfig:
    frame_length_ms: float = 25.0
    hop_ms: float = 10.0
    n_mel_filters: int = 128
    n_linear_filters: int = 24
    n_mfcc: int = 40
    n_lfcc: int = 14
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.n_mfcc > self.n_mel_filters:
            raise ValueError("n_mfcc cannot exceed n_mel_filters")
        if self.n_lfcc > self.n_linear_filters:
            raise ValueError("n_lfcc cannot exceed n_linear_filters")

    def frame_samples(self, sr: int) -> int:
        return int(round(self.frame_length_ms * sr / 1000.0))

    def hop_samples(self, sr: int) -> int:
        return int(round(self.hop_ms * sr / 1000.0))

    def fft_size(self, sr: int) -> int:
        n = self.frame_samples(sr)
        return 1 << (n - 1).bit_length()


# -- WAV I/O -----------------------------------------------------------------

def load_wav(path, recording_id: str | None = None) -> AudioClip:
    """Read a PCM 16-bit mono WAV file, scaling samples by 1/32768.

    Stereo, float, or compressed encodings raise WavFormatError, as do
    malformed headers.
    """
    path = str(path)
    rid = recording_id if recording_id is not None else path
    try:
        with wave.open(path, "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise WavFormatError(f"{path}: unsupported or malformed WAV ({exc})") from exc
    except EOFError as exc:
        raise WavFormatError(f"{path}: malformed WAV header") from exc
    if channels != 1:
        raise WavFormatError(f"{path}: expected mono, got {channels} channels")
    if width != 2:
        raise WavFormatError(f"{path}: expected 16-bit PCM, got {8 * width}-bit")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / INT16_SCALE
    return AudioClip(samples=samples, sample_rate_hz=rate, recording_id=rid)


def write_wav(path, samples: np.ndarray, sample_rate_hz: int) -> None:
    """Write float samples in [-1, 1] as PCM 16-bit mono."""
    quantized = np.clip(np.round(np.asarray(samples) * INT16_SCALE), -32768, 32767)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate_hz)
        wf.writeframes(quantized.astype("<i2").tobytes())


def pad_to_max(clips: list[AudioClip]) -> list[AudioClip]:
    """Zero-pad every clip at the end to the longest clip's sample count."""
    if not clips:
        raise ValueError("pad_to_max: empty clip list")
    rates = {c.sample_rate_hz for c in clips}
    if len(rates) != 1:
        raise ValueError(f"pad_to_max: mixed sample rates {sorted(rates)}")
    target = max(c.samples.size for c in clips)
    out = []
    for c in clips:
        padded = np.zeros(target)
        padded[: c.samples.size] = c.samples
        out.append(AudioClip(padded, c.sample_rate_hz, c.recording_id))
    return out


# -- filterbanks ---------------------------------------------------------------

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def _triangle_bank(edges_hz: np.ndarray, fft_size: int, sr: int) -> np.ndarray:
    """Triangular filters sampled by integrating over each FFT bin's width.

    edges_hz has n_filters + 2 points; filter i spans (edges[i], edges[i+2])
    with its peak at edges[i+1]. Weight of bin k in filter i is the mean of
    the triangle over [f_k - bw/2, f_k + bw/2].
    """
    n_bins = fft_size // 2 + 1
    bin_w = sr / fft_size
    centers = np.arange(n_bins) * bin_w
    lo = centers - bin_w / 2
    hi = centers + bin_w / 2
    left = edges_hz[:-2, None]
    peak = edges_hz[1:-1, None]
    right = edges_hz[2:, None]

    def seg_integral(a, b, x0, x1, y0, y1):
        # integral of the line through (x0,y0),(x1,y1) over [a,b] clipped to [x0,x1]
        u = np.clip(a, x0, x1)
        v = np.clip(b, x0, x1)
        slope = (y1 - y0) / np.maximum(x1 - x0, 1e-30)
        return (v - u) * y0 + slope * ((v - x0) ** 2 - (u - x0) ** 2) / 2.0

    rising = seg_integral(lo[None, :], hi[None, :], left, peak, 0.0, 1.0)
    falling = seg_integral(lo[None, :], hi[None, :], peak, right, 1.0, 0.0)
    return (rising + falling) / bin_w


def mel_filterbank(n_filters: int, fft_size: int, sr: int) -> np.ndarray:
    """HTK-mel-spaced triangular filters covering 0 to Nyquist."""
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(sr / 2.0), n_filters + 2))
    return _triangle_bank(edges, fft_size, sr)


def linear_filterbank(n_filters: int, fft_size: int, sr: int) -> np.ndarray:
    """Linearly spaced triangular filters covering 0 to Nyquist."""
    edges = np.linspace(0.0, sr / 2.0, n_filters + 2)
    return _triangle_bank(edges, fft_size, sr)


def filter_support_hz(n_filters: int, sr: int, scale: str) -> np.ndarray:
    """(left, center, right) frequencies of each filter, shape [n_filters, 3]."""
    if scale == "mel":
        edges = mel_to_hz(
            np.linspace(hz_to_mel(0.0), hz_to_mel(sr / 2.0), n_filters + 2)
        )
    else:
        edges = np.linspace(0.0, sr / 2.0, n_filters + 2)
    return np.stack([edges[:-2], edges[1:-1], edges[2:]], axis=1)


# -- cepstral features ----------------------------------------------------------

def frame_signal(x: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Slice into full overlapping frames, shape [n_frames, frame_len]."""
    if x.size < frame_len:
        raise ClipTooShortError(
            f"clip of {x.size} samples is shorter than one {frame_len}-sample frame"
        )
    n_frames = 1 + (x.size - frame_len) // hop
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    return x[idx]


def hann_window(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def filterbank_energies(clip: AudioClip, cfg: SpectralConfig, scale: str) -> np.ndarray:
    """Per-frame filterbank magnitudes, shape [n_frames, n_filters]."""
    sr = clip.sample_rate_hz
    frame_len = cfg.frame_samples(sr)
    frames = frame_signal(clip.samples, frame_len, cfg.hop_samples(sr))
    windowed = frames * hann_window(frame_len)[None, :]
    mag = np.abs(np.fft.rfft(windowed, n=cfg.fft_size(sr), axis=1))
    if scale == "mel":
        bank = mel_filterbank(cfg.n_mel_filters, cfg.fft_size(sr), sr)
    elif scale == "linear":
        bank = linear_filterbank(cfg.n_linear_filters, cfg.fft_size(sr), sr)
    else:
        raise ValueError(f"unknown filterbank scale {scale!r}")
    return mag @ bank.T


def _cepstrum(clip: AudioClip, cfg: SpectralConfig, scale: str, n_keep: int) -> np.ndarray:
    energies = filterbank_energies(clip, cfg, scale)
    log_e = np.log(energies + cfg.log_floor)
    coeffs = dct(log_e, type=2, norm="ortho", axis=1)[:, :n_keep]
    return coeffs.mean(axis=0)


def mfcc(clip: AudioClip, cfg: SpectralConfig | None = None) -> np.ndarray:
    """40-dim MFCC vector: mel filterbank, log, DCT-II, mean over frames."""
    cfg = cfg or SpectralConfig()
    return _cepstrum(clip, cfg, "mel", cfg.n_mfcc)


def lfcc(clip: AudioClip, cfg: SpectralConfig | None = None) -> np.ndarray:
    """14-dim LFCC vector: same pipeline over 24 linearly spaced filters."""
    cfg = cfg or SpectralConfig()
    return _cepstrum(clip, cfg, "linear", cfg.n_lfcc)
