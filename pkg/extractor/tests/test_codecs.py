"""Codec registry arithmetic and pooling rules."""

import numpy as np
import pytest

from nacr_extractor.codecs import (
    CODECS,
    REFERENCE_MAX_DURATION_S,
    DimMismatchError,
    UnknownCodecError,
    code_sum_mean,
    concat_codes,
    get_codec,
    mean_pool,
    pool,
    verify_dim,
)


class TestRegistry:
    def test_all_six_codecs_present(self):
        assert sorted(CODECS) == [
            "dac", "encodec24", "encodec48", "snac24", "snac32",
            "speech_tokenizer",
        ]

    def test_unknown_codec(self):
        with pytest.raises(UnknownCodecError):
            get_codec("mp3")

    @pytest.mark.parametrize(
        "codec_id,expected",
        [
            ("encodec24", 4839),
            ("encodec48", 150),
            ("dac", 3225),
            ("speech_tokenizer", 3226),
            ("snac24", 5292),
            ("snac32", 10080),
        ],
    )
    def test_reference_duration_dims(self, codec_id, expected):
        spec = get_codec(codec_id)
        n = int(round(REFERENCE_MAX_DURATION_S * spec.sample_rate))
        assert spec.output_dim(n) == expected == spec.expected_dim

    def test_floor_vs_ceil_split_dac_speech_tokenizer(self):
        # both run at 16 kHz hop 320; the reference padding falls between
        # frame boundaries so the two models disagree by exactly one frame
        n = int(round(REFERENCE_MAX_DURATION_S * 16000))
        assert get_codec("dac").n_frames(n) == 3225
        assert get_codec("speech_tokenizer").n_frames(n) == 3226


class TestPooling:
    def test_mean_pool_keeps_time_axis(self):
        codes = np.arange(12.0).reshape(3, 4)
        np.testing.assert_allclose(mean_pool(codes), codes.mean(axis=0))
        assert mean_pool(codes).shape == (4,)

    def test_code_sum_mean_matches_recipe(self):
        codes = np.arange(6.0).reshape(2, 3)
        np.testing.assert_allclose(code_sum_mean(codes), codes.sum(axis=0) / 2)

    def test_concat_codes(self):
        streams = [np.zeros(3), np.ones(6), np.full(12, 2.0)]
        out = concat_codes(streams)
        assert out.shape == (21,)
        np.testing.assert_array_equal(out[:3], 0.0)
        np.testing.assert_array_equal(out[3:9], 1.0)

    def test_pool_dispatch_chunked(self):
        spec = get_codec("encodec48")
        codes = np.random.default_rng(0).standard_normal((4, 3, 150))
        out = pool(spec, codes)
        assert out.shape == (150,)
        np.testing.assert_allclose(out, codes.mean(axis=(0, 1)))


class TestVerifyDim:
    def test_arithmetic_mismatch_raises(self):
        spec = get_codec("dac")
        with pytest.raises(DimMismatchError, match="frame arithmetic"):
            verify_dim(spec, 16000, got_dim=51, source_duration_s=1.0)

    def test_reference_duration_checksum(self):
        spec = get_codec("dac")
        n = int(round(REFERENCE_MAX_DURATION_S * spec.sample_rate))
        verify_dim(spec, n, got_dim=3225,
                   source_duration_s=REFERENCE_MAX_DURATION_S)

    def test_ok_at_other_durations(self):
        spec = get_codec("encodec24")
        verify_dim(spec, 24000 * 2, got_dim=150, source_duration_s=2.0)
