"""CLI subcommands: features, train, report, export-embeddings."""

import csv
import json

import numpy as np
import pytest

from baomi.cli import main, render_report, validate_report
from baomi.data import FeatureRecord, read_fvec, write_fvec
from baomi.synth import generate_dataset


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    manifest = generate_dataset(out, count=12, seed=1)
    return out, manifest


@pytest.fixture(scope="module")
def feature_files(synth_dir, tmp_path_factory):
    out, manifest = synth_dir
    feats = tmp_path_factory.mktemp("feats")
    mfcc = feats / "mfcc.fvec"
    lfcc = feats / "lfcc.fvec"
    assert main(["features", "--manifest", str(manifest), "--kind", "mfcc",
                 "--out", str(mfcc)]) == 0
    assert main(["features", "--manifest", str(manifest), "--kind", "lfcc",
                 "--out", str(lfcc)]) == 0
    return mfcc, lfcc


class TestFeaturesCommand:
    def test_mfcc_dimension_and_count(self, synth_dir, tmp_path, capsys):
        _, manifest = synth_dir
        out = tmp_path / "m.fvec"
        assert main(["features", "--manifest", str(manifest), "--kind", "mfcc",
                     "--out", str(out)]) == 0
        captured = capsys.readouterr()
        assert "12 records of dimension 40" in captured.out
        records = read_fvec(out)
        assert len(records) == 12
        assert all(r.values.size == 40 for r in records)

    def test_unknown_rows_skipped_with_warning(self, synth_dir, tmp_path, capsys):
        out_dir, manifest = synth_dir
        rows = manifest.read_text().splitlines()
        wav = rows[1].split(",")[1]
        patched = tmp_path / "with_unknown.csv"
        patched.write_text(
            "\n".join(rows) + f"\nmystery,{wav},Unknown\n"
        )
        out = tmp_path / "l.fvec"
        assert main(["features", "--manifest", str(patched), "--kind", "lfcc",
                     "--out", str(out)]) == 0
        captured = capsys.readouterr()
        assert "mystery" in captured.err and "unknown" in captured.err
        assert len(read_fvec(out)) == 12

    def test_missing_wav_names_path_and_fails(self, tmp_path, capsys):
        manifest = tmp_path / "m.csv"
        manifest.write_text(
            "recording_id,wav_path,label\nr0,/nonexistent/gone.wav,present\n"
        )
        assert main(["features", "--manifest", str(manifest), "--kind", "mfcc",
                     "--out", str(tmp_path / "x.fvec")]) == 1
        captured = capsys.readouterr()
        assert "/nonexistent/gone.wav" in captured.err


class TestTrainCommand:
    def test_single_branch_cnn(self, feature_files, tmp_path, capsys):
        mfcc, _ = feature_files
        out = tmp_path / "run"
        rc = main(["train", "--model", "cnn", "--a", str(mfcc), "--out", str(out),
                   "--seed", "3", "--epochs", "1", "--batch-size", "4"])
        assert rc == 0
        report = json.loads((out / "report.json").read_text())
        validate_report(report)
        assert len(report["folds"]) == 5
        assert report["seed"] == 3
        assert report["config"]["model"] == "cnn"
        assert (out / "fold0.ckpt").exists()
        assert (out / "fold0.ckpt.json").exists()
        table = capsys.readouterr().out
        assert "mean" in table

    def test_baomi_requires_two_sources(self, feature_files, tmp_path, capsys):
        mfcc, _ = feature_files
        rc = main(["train", "--model", "baomi", "--a", str(mfcc),
                   "--out", str(tmp_path / "r")])
        assert rc == 1
        assert "--b" in capsys.readouterr().err

    def test_single_feature_model_rejects_pair(self, feature_files, tmp_path, capsys):
        mfcc, lfcc = feature_files
        rc = main(["train", "--model", "cnn", "--a", str(mfcc), "--b", str(lfcc),
                   "--out", str(tmp_path / "r")])
        assert rc == 1
        assert "single" in capsys.readouterr().err

    def test_baomi_run_writes_head_weights_and_embeddings(
        self, feature_files, tmp_path
    ):
        mfcc, lfcc = feature_files
        out = tmp_path / "run"
        rc = main([
            "train", "--model", "baomi", "--a", str(mfcc), "--b", str(lfcc),
            "--out", str(out), "--seed", "5", "--epochs", "1",
            "--heads", "2", "--head-dim", "2", "--export-embeddings",
        ])
        assert rc == 0
        weights = list(csv.reader((out / "head_weights_fold0.csv").open()))
        assert weights[0] == ["epoch", "direction", "head", "weight"]
        assert len(weights) == 1 + 1 * 2 * 2  # header + epochs x dirs x heads
        emb = list(csv.reader((out / "embeddings.csv").open()))
        assert len(emb) == 13 and len(emb[1]) == 2 + 128
        sidecar = json.loads((out / "fold0.ckpt.json").read_text())
        assert sidecar["model"] == "baomi"
        assert "bandit_state" in sidecar

    def test_mismatched_ids_fail_with_offender(self, feature_files, tmp_path, capsys):
        mfcc, _ = feature_files
        records = read_fvec(mfcc)
        renamed = [
            FeatureRecord("odd_" + r.recording_id if i == 0 else r.recording_id,
                          r.label, r.values)
            for i, r in enumerate(records)
        ]
        other = tmp_path / "renamed.fvec"
        write_fvec(renamed, other)
        rc = main(["train", "--model", "baomi", "--a", str(mfcc), "--b", str(other),
                   "--out", str(tmp_path / "r"), "--epochs", "1"])
        assert rc == 1
        assert "mismatch" in capsys.readouterr().err


class TestReportCommand:
    def report_dict(self):
        frag = {"fold": 0, "acc": 89.93, "ma_f1": 79.37, "wa_f1": 89.67,
                "confusion": [[120, 10], [8, 37]]}
        return {
            "config": {"model": "baomi"},
            "seed": 7,
            "folds": [frag],
            "mean": {"acc": 89.93, "ma_f1": 79.37, "wa_f1": 89.67},
        }

    def test_renders_two_decimals(self, tmp_path, capsys):
        path = tmp_path / "report.json"
        path.write_text(json.dumps(self.report_dict()))
        assert main(["report", str(path)]) == 0
        out = capsys.readouterr().out
        assert "89.93" in out and "79.37" in out and "89.67" in out

    def test_round_trip_values_unchanged(self, tmp_path):
        report = self.report_dict()
        path = tmp_path / "report.json"
        path.write_text(json.dumps(report))
        reparsed = json.loads(path.read_text())
        assert render_report(reparsed) == render_report(report)

    def test_empty_folds_rejected(self, tmp_path, capsys):
        report = self.report_dict()
        report["folds"] = []
        path = tmp_path / "report.json"
        path.write_text(json.dumps(report))
        assert main(["report", str(path)]) == 1
        assert "folds" in capsys.readouterr().err

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "report.json"
        path.write_text("{not json")
        assert main(["report", str(path)]) == 1


class TestExportEmbeddingsCommand:
    def test_from_checkpoint(self, feature_files, tmp_path):
        mfcc, lfcc = feature_files
        run = tmp_path / "run"
        assert main([
            "train", "--model", "baomi", "--a", str(mfcc), "--b", str(lfcc),
            "--out", str(run), "--seed", "2", "--epochs", "1",
            "--heads", "2", "--head-dim", "2",
        ]) == 0
        out = tmp_path / "emb.csv"
        rc = main([
            "export-embeddings", "--checkpoint", str(run / "fold1.ckpt"),
            "--a", str(mfcc), "--b", str(lfcc), "--out", str(out),
        ])
        assert rc == 0
        rows = list(csv.reader(out.open()))
        assert len(rows) == 13
        assert len(rows[1]) == 2 + 128
