"""Real codec backends over frozen pretrained encoders.

Each loader imports its codec package lazily and raises
CheckpointUnavailableError when the package or its pretrained weights
cannot be obtained, so callers can fall back to the surrogate backend
explicitly. Pooling operates on the raw quantized code indices, cast to
float; the time axis survives pooling and becomes the feature dimension,
which `verify_dim` checks against the registry's frame arithmetic before
anything is written.

Inference is deterministic: models run in eval mode, no sampling anywhere.
"""

from __future__ import annotations

import numpy as np

from nacr_extractor.codecs import CodecSpec

_MODELS: dict[str, object] = {}


class CheckpointUnavailableError(RuntimeError):
    """Codec package or pretrained checkpoint is not available."""


def _torch():
    try:
        import torch
        return torch
    except ImportError as exc:
        raise CheckpointUnavailableError(
            "the pretrained backend needs torch; install it or use "
            "--backend surrogate"
        ) from exc


def _load(key: str, loader):
    if key not in _MODELS:
        try:
            _MODELS[key] = loader()
        except ImportError as exc:
            raise CheckpointUnavailableError(
                f"codec package for {key!r} is not installed ({exc}); "
                f"use --backend surrogate to test the pipeline"
            ) from exc
        except Exception as exc:
            raise CheckpointUnavailableError(
                f"could not load pretrained weights for {key!r} ({exc})"
            ) from exc
    return _MODELS[key]


def _encodec(spec: CodecSpec, x: np.ndarray) -> np.ndarray:
    torch = _torch()
    name = "facebook/encodec_24khz" if spec.sample_rate == 24000 else "facebook/encodec_48khz"

    def loader():
        from transformers import EncodecModel

        return EncodecModel.from_pretrained(name).eval()

    model = _load(spec.codec_id, loader)
    wav = torch.tensor(x, dtype=torch.float32)[None, None, :]
    if spec.sample_rate == 48000:  # stereo model; duplicate the mono channel
        wav = wav.repeat(1, 2, 1)
    with torch.no_grad():
        encoded = model.encode(wav, bandwidth=None)
    # audio_codes: [n_chunks, batch, n_q, frames]
    codes = encoded.audio_codes.squeeze(1).float().numpy()
    if spec.chunk_seconds is not None:
        return np.transpose(codes, (1, 0, 2))  # [n_q, chunks, frames]
    return codes[0]  # [n_q, frames]


def _dac(spec: CodecSpec, x: np.ndarray) -> np.ndarray:
    torch = _torch()

    def loader():
        import dac

        return dac.DAC.load(dac.utils.download(model_type="16khz")).eval()

    model = _load(spec.codec_id, loader)
    wav = torch.tensor(x, dtype=torch.float32)[None, None, :]
    with torch.no_grad():
        _, codes, *_ = model.encode(wav)
    return codes[0].float().numpy()  # [n_q, frames]


def _speech_tokenizer(spec: CodecSpec, x: np.ndarray) -> np.ndarray:
    torch = _torch()

    def loader():
        from speechtokenizer import SpeechTokenizer

        raise CheckpointUnavailableError(
            "speech_tokenizer needs a local checkpoint; set one up and adapt "
            "this loader, or use --backend surrogate"
        )

    model = _load(spec.codec_id, loader)
    wav = torch.tensor(x, dtype=torch.float32)[None, None, :]
    with torch.no_grad():
        codes = model.encode(wav)  # [n_q, batch, frames]
    return codes[:, 0].float().numpy()


def _snac(spec: CodecSpec, x: np.ndarray) -> list[np.ndarray]:
    torch = _torch()
    name = "hubertsiuzdak/snac_24khz" if spec.sample_rate == 24000 else "hubertsiuzdak/snac_32khz"

    def loader():
        from snac import SNAC

        return SNAC.from_pretrained(name).eval()

    model = _load(spec.codec_id, loader)
    wav = torch.tensor(x, dtype=torch.float32)[None, None, :]
    with torch.no_grad():
        codes = model.encode(wav)  # list of [1, frames] per scale
    return [c[0].float().numpy() for c in codes]


def encode(spec: CodecSpec, x: np.ndarray):
    """Quantized codes for one signal at the codec's rate, pooling-ready."""
    if spec.codec_id.startswith("encodec"):
        return _encodec(spec, x)
    if spec.codec_id == "dac":
        return _dac(spec, x)
    if spec.codec_id == "speech_tokenizer":
        return _speech_tokenizer(spec, x)
    if spec.codec_id.startswith("snac"):
        return _snac(spec, x)
    raise CheckpointUnavailableError(f"no pretrained backend for {spec.codec_id!r}")
