"""fvec serialization, manifests, and stratified folds."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baomi.data import (
    FeatureRecord,
    FvecFormatError,
    ManifestError,
    filter_unknown,
    make_folds,
    read_fvec,
    read_manifest,
    write_fvec,
)


def make_records(n, dim, seed=0, f32=True):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        values = rng.standard_normal(dim)
        if f32:
            values = values.astype(np.float32).astype(np.float64)
        out.append(FeatureRecord(f"rec{i:04d}", int(rng.integers(0, 2)), values))
    return out


class TestFvecFormat:
    def test_single_record_byte_layout(self, tmp_path):
        path = tmp_path / "one.fvec"
        write_fvec([FeatureRecord("r1", 1, np.array([0.5, -0.25]))], path)
        blob = path.read_bytes()
        # 4 magic + 2 version + 4 count + 4 dim + 2 idlen + 2 id + 1 label + 8 values
        assert len(blob) == 27
        assert blob[:4] == b"FVC1"
        assert blob[14:16] == (2).to_bytes(2, "little")
        assert blob[16:18] == b"r1"
        assert blob[18] == 1

    def test_roundtrip_100_records(self, tmp_path):
        path = tmp_path / "r.fvec"
        records = make_records(100, 17, seed=1)
        write_fvec(records, path)
        back = read_fvec(path)
        assert len(back) == 100
        for a, b in zip(records, back):
            assert a.recording_id == b.recording_id
            assert a.label == b.label
            np.testing.assert_array_equal(a.values, b.values)

    def test_roundtrip_preserves_dac_dimension(self, tmp_path):
        path = tmp_path / "dac.fvec"
        write_fvec(make_records(3, 3225, seed=2), path)
        back = read_fvec(path)
        assert all(r.values.size == 3225 for r in back)

    def test_empty_list_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no records"):
            write_fvec([], tmp_path / "x.fvec")

    def test_zero_dim_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="zero-dimensional"):
            write_fvec([FeatureRecord("r", 0, np.zeros(0))], tmp_path / "x.fvec")

    def test_dimension_mismatch_rejected(self, tmp_path):
        records = [
            FeatureRecord("a", 0, np.zeros(3)),
            FeatureRecord("b", 1, np.zeros(4)),
        ]
        with pytest.raises(ValueError, match="dimension"):
            write_fvec(records, tmp_path / "x.fvec")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.fvec"
        path.write_bytes(b"XXXX" + b"\x00" * 20)
        with pytest.raises(FvecFormatError, match="magic"):
            read_fvec(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v9.fvec"
        good = tmp_path / "good.fvec"
        write_fvec(make_records(1, 2), good)
        blob = bytearray(good.read_bytes())
        blob[4] = 9
        path.write_bytes(bytes(blob))
        with pytest.raises(FvecFormatError, match="version"):
            read_fvec(path)

    def test_truncated_payload(self, tmp_path):
        good = tmp_path / "good.fvec"
        write_fvec(make_records(4, 8), good)
        trunc = tmp_path / "trunc.fvec"
        trunc.write_bytes(good.read_bytes()[:-5])
        with pytest.raises(FvecFormatError, match="truncated"):
            read_fvec(trunc)

    def test_trailing_garbage(self, tmp_path):
        good = tmp_path / "good.fvec"
        write_fvec(make_records(2, 3), good)
        noisy = tmp_path / "noisy.fvec"
        noisy.write_bytes(good.read_bytes() + b"\x01\x02")
        with pytest.raises(FvecFormatError, match="trailing"):
            read_fvec(noisy)

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(1, 20),
        dim=st.integers(1, 32),
        seed=st.integers(0, 2**16),
    )
    def test_roundtrip_property(self, tmp_path_factory, n, dim, seed):
        path = tmp_path_factory.mktemp("fvec") / "p.fvec"
        records = make_records(n, dim, seed=seed)
        write_fvec(records, path)
        back = read_fvec(path)
        for a, b in zip(records, back):
            assert a.recording_id == b.recording_id
            assert a.label == b.label
            np.testing.assert_array_equal(a.values, b.values)


class TestManifest:
    def test_parse_and_filter(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "recording_id,wav_path,label\n"
            "a,/tmp/a.wav,Present\n"
            "b,/tmp/b.wav,absent\n"
            "c,/tmp/c.wav,Unknown\n"
        )
        rows = read_manifest(path)
        assert [r.raw_label for r in rows] == ["present", "absent", "unknown"]
        kept, skipped = filter_unknown(rows)
        assert [r.recording_id for r in kept] == ["a", "b"]
        assert skipped == ["c"]

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "recording_id,wav_path,label\na,x.wav,present\na,y.wav,absent\n"
        )
        with pytest.raises(ManifestError, match="duplicate"):
            read_manifest(path)

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("recording_id,wav_path,label\na,x.wav,maybe\n")
        with pytest.raises(ManifestError, match="label"):
            read_manifest(path)

    def test_missing_columns_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("id,path\n1,x\n")
        with pytest.raises(ManifestError, match="columns"):
            read_manifest(path)


def class_fold_counts(assignment, records, n_folds=5):
    counts = {0: [0] * n_folds, 1: [0] * n_folds}
    for r in records:
        counts[r.label][assignment.fold_of[r.recording_id]] += 1
    return counts


class TestFolds:
    def test_balanced_20(self):
        records = [
            FeatureRecord(f"r{i}", i % 2, np.zeros(1)) for i in range(20)
        ]
        assignment = make_folds(records, seed=3)
        counts = class_fold_counts(assignment, records)
        assert counts[0] == [2] * 5
        assert counts[1] == [2] * 5

    def test_deterministic(self):
        records = make_records(40, 2, seed=5)
        a = make_folds(records, seed=11)
        b = make_folds(records, seed=11)
        assert a.fold_of == b.fold_of
        c = make_folds(records, seed=12)
        assert a.fold_of != c.fold_of

    def test_circor_distribution(self):
        # 179 present + 695 absent: present per fold in {35, 36}, absent 139
        records = [FeatureRecord(f"p{i}", 1, np.zeros(1)) for i in range(179)]
        records += [FeatureRecord(f"a{i}", 0, np.zeros(1)) for i in range(695)]
        counts = class_fold_counts(make_folds(records, seed=7), records)
        assert sorted(counts[1]) == [35, 36, 36, 36, 36]
        assert counts[0] == [139] * 5

    def test_partition_is_exact(self):
        records = make_records(37, 2, seed=9)
        assignment = make_folds(records, seed=1)
        all_ids = {r.recording_id for r in records}
        assert set(assignment.fold_of) == all_ids
        for fold in range(5):
            train, test = assignment.split(fold)
            assert set(train) | set(test) == all_ids
            assert set(train) & set(test) == set()

    def test_too_few_per_class(self):
        records = [FeatureRecord(f"r{i}", 1, np.zeros(1)) for i in range(4)]
        records += [FeatureRecord(f"s{i}", 0, np.zeros(1)) for i in range(9)]
        with pytest.raises(ValueError, match="at least"):
            make_folds(records, seed=0)

    @settings(max_examples=25, deadline=None)
    @given(
        n0=st.integers(5, 60),
        n1=st.integers(5, 60),
        seed=st.integers(0, 2**16),
    )
    def test_stratification_property(self, n0, n1, seed):
        records = [FeatureRecord(f"a{i}", 0, np.zeros(1)) for i in range(n0)]
        records += [FeatureRecord(f"b{i}", 1, np.zeros(1)) for i in range(n1)]
        counts = class_fold_counts(make_folds(records, seed=seed), records)
        for label in (0, 1):
            assert max(counts[label]) - min(counts[label]) <= 1
        assert sum(counts[0]) == n0 and sum(counts[1]) == n1
