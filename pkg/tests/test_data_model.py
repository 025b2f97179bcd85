import math

import numpy as np
import pytest

from aespace.data_model import (
    Dataset,
    ImageRecord,
    compute_score,
    load_dataset,
    save_dataset,
    score_histogram,
    write_histogram_csv,
)
from aespace.errors import EmptyInputError, FormatError, ParseError, RecordError


def make_record(rec_id, views, faves, features=(0.0, 1.0)):
    return ImageRecord(id=rec_id, views=views, faves=faves, features=np.array(features, dtype=float))


class TestComputeScore:
    def test_thousand_views_ten_faves_is_one_third(self):
        assert abs(compute_score(1000, 10) - 1.0 / 3.0) < 1e-12

    def test_faves_equal_views_is_one(self):
        for v in (2, 3, 17, 1000, 10**9):
            assert compute_score(v, v) == 1.0

    def test_single_fave_is_zero(self):
        assert compute_score(500, 1) == 0.0

    def test_rejects_views_below_two(self):
        for v in (1, 0, -5):
            with pytest.raises(RecordError) as exc:
                compute_score(v, 1)
            assert exc.value.field == "views"

    def test_rejects_bad_faves(self):
        with pytest.raises(RecordError) as exc:
            compute_score(100, 0)
        assert exc.value.field == "faves"
        with pytest.raises(RecordError) as exc:
            compute_score(100, 101)
        assert exc.value.field == "faves"

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            v = int(rng.integers(2, 10**6))
            f = int(rng.integers(1, v + 1))
            assert 0.0 <= compute_score(v, f) <= 1.0

    def test_monotone_in_faves(self):
        scores = [compute_score(1000, f) for f in range(2, 1001)]
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_monotone_in_views(self):
        scores = [compute_score(v, 50) for v in range(51, 400)]
        assert all(a > b for a, b in zip(scores, scores[1:]))

    def test_power_scaling_invariance(self):
        assert abs(compute_score(1000, 10) - compute_score(10**6, 100)) < 1e-12
        rng = np.random.default_rng(7)
        for _ in range(100):
            v = int(rng.integers(2, 1000))
            f = int(rng.integers(1, v + 1))
            k = int(rng.integers(1, 4))
            assert abs(compute_score(v**k, f**k) - compute_score(v, f)) < 1e-10


class TestRecordValidation:
    def test_features_cast_to_float(self):
        rec = make_record("a", 10, 2, [1, 2])
        assert rec.features.dtype == np.float64


class TestLoadSave:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("")
        ds = load_dataset(path)
        assert len(ds) == 0
        assert ds.d_in is None

    def test_single_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": 100, "faves": 5, "features": [1.0, 2.0]}\n')
        ds = load_dataset(path)
        assert len(ds) == 1
        assert ds.d_in == 2
        assert ds.records[0].id == "x"

    def test_invalid_views_soft_rejected(self, tmp_path, caplog):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"id": "bad", "views": 1, "faves": 1, "features": [0.0]}\n'
            '{"id": "ok", "views": 100, "faves": 5, "features": [0.0]}\n'
        )
        with caplog.at_level("WARNING"):
            ds = load_dataset(path)
        assert [r.id for r in ds.records] == ["ok"]
        assert any("line 1" in m for m in caplog.messages)

    def test_faves_above_views_soft_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "bad", "views": 10, "faves": 11, "features": [0.0]}\n')
        assert len(load_dataset(path)) == 0

    def test_duplicate_id_soft_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        line = '{"id": "x", "views": 100, "faves": 5, "features": [1.0]}\n'
        path.write_text(line + line)
        assert len(load_dataset(path)) == 1

    def test_malformed_json_is_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": 100\n')
        with pytest.raises(ParseError) as exc:
            load_dataset(path)
        assert "line 1" in str(exc.value)

    def test_non_integer_views_is_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": 100.5, "faves": 5, "features": [0.0]}\n')
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_boolean_views_is_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": true, "faves": 5, "features": [0.0]}\n')
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_missing_features_is_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": 100, "faves": 5}\n')
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_inconsistent_feature_length_is_fatal(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text(
            '{"id": "a", "views": 100, "faves": 5, "features": [0.0, 1.0]}\n'
            '{"id": "b", "views": 100, "faves": 5, "features": [0.0]}\n'
        )
        with pytest.raises(FormatError):
            load_dataset(path)

    def test_latent_score_out_of_range_soft_rejected(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"id": "x", "views": 100, "faves": 5, "features": [0.0], "latent_score": 1.5}\n')
        assert len(load_dataset(path)) == 0

    def test_round_trip_exact(self, tmp_path):
        records = [
            ImageRecord("a", 1000, 10, np.array([0.1, 1.0 / 3.0]), latent_score=0.25),
            ImageRecord("b", 12345, 678, np.array([1e-17, -2.5])),
        ]
        ds = Dataset(records=records, d_in=2)
        path = tmp_path / "d.jsonl"
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert len(loaded) == 2
        for orig, back in zip(records, loaded.records):
            assert back.id == orig.id
            assert back.views == orig.views
            assert back.faves == orig.faves
            assert np.array_equal(back.features, orig.features)
            assert back.latent_score == orig.latent_score


class TestScoreHistogram:
    def test_two_scores_two_bins(self):
        # V=1024: F=2 gives score 0.1 exactly, F=512 gives 0.9 exactly
        ds = Dataset(records=[make_record("a", 1024, 2), make_record("b", 1024, 512)], d_in=2)
        edges, counts = score_histogram(ds, 2)
        assert list(counts) == [1, 1]
        np.testing.assert_allclose(edges, [0.0, 0.5, 1.0])

    def test_score_one_lands_in_last_bin(self):
        ds = Dataset(records=[make_record(f"r{i}", 50, 50) for i in range(5)], d_in=2)
        _, counts = score_histogram(ds, 4)
        assert list(counts) == [0, 0, 0, 5]

    def test_counts_sum_to_size(self):
        rng = np.random.default_rng(3)
        records = []
        for i in range(200):
            v = int(rng.integers(2, 10**5))
            f = int(rng.integers(1, v + 1))
            records.append(make_record(f"r{i}", v, f))
        ds = Dataset(records=records, d_in=2)
        edges, counts = score_histogram(ds, 7)
        assert counts.sum() == 200
        assert edges[0] == 0.0 and edges[-1] == 1.0
        np.testing.assert_allclose(np.diff(edges), 1.0 / 7.0)

    def test_empty_dataset_raises(self):
        with pytest.raises(EmptyInputError):
            score_histogram(Dataset(records=[], d_in=None), 4)

    def test_bad_bin_count_raises(self):
        ds = Dataset(records=[make_record("a", 10, 2)], d_in=2)
        with pytest.raises(ValueError):
            score_histogram(ds, 0)

    def test_csv_output(self, tmp_path):
        ds = Dataset(records=[make_record("a", 1024, 2), make_record("b", 1024, 512)], d_in=2)
        edges, counts = score_histogram(ds, 2)
        path = tmp_path / "h.csv"
        write_histogram_csv(edges, counts, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "bin_lo,bin_hi,count"
        assert lines[1] == "0.0,0.5,1"
        assert lines[2] == "0.5,1.0,1"
