import json
import math

import numpy as np
import pytest

from aespace.data_model import compute_score, score_histogram, validate_record
from aespace.errors import ConfigError
from aespace.synth import (
    BASIS_SIZE,
    SynthConfig,
    basis,
    generate,
    mixing_matrix,
    rounding_error_bound,
    write_sidecar,
)


class TestConfig:
    def test_valid(self):
        SynthConfig(n=1, d_in=2).validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=0, d_in=4),
            dict(n=10, d_in=1),
            dict(n=10, d_in=4, noise_sigma=-0.1),
            dict(n=10, d_in=4, view_range=(99, 1000)),
            dict(n=10, d_in=4, view_range=(1000, 1000)),
            dict(n=10, d_in=4, view_range=(2000, 1000)),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SynthConfig(**kwargs).validate()


class TestBasis:
    def test_values(self):
        np.testing.assert_allclose(basis(0.0), [0.0, 0.0, 0.0, 0.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(basis(0.5), [0.5, 0.25, 0.125, 0.0, -1.0], atol=1e-12)

    def test_size(self):
        assert basis(0.3).shape == (BASIS_SIZE,)


class TestGenerate:
    def test_determinism(self):
        cfg = SynthConfig(n=40, d_in=6, noise_sigma=0.1, seed=123)
        a = generate(cfg)
        b = generate(cfg)
        assert [r.id for r in a.records] == [r.id for r in b.records]
        for ra, rb in zip(a.records, b.records):
            assert ra.views == rb.views
            assert ra.faves == rb.faves
            assert np.array_equal(ra.features, rb.features)
            assert ra.latent_score == rb.latent_score

    def test_records_pass_validation(self):
        cfg = SynthConfig(n=100, d_in=4, noise_sigma=0.3, seed=5)
        ds = generate(cfg)
        assert len(ds) == 100
        assert ds.d_in == 4
        for rec in ds.records:
            validate_record(rec)
            assert cfg.view_range[0] <= rec.views <= cfg.view_range[1]
            assert 0.0 <= rec.latent_score <= 1.0

    def test_ids_unique(self):
        ds = generate(SynthConfig(n=50, d_in=3, seed=2))
        ids = [r.id for r in ds.records]
        assert len(set(ids)) == 50

    def test_score_recovery_universal_bound(self):
        cfg = SynthConfig(n=300, d_in=4, noise_sigma=0.0, seed=11)
        ds = generate(cfg)
        bound = rounding_error_bound(cfg)
        assert bound == pytest.approx(math.log(2) / math.log(100))
        for rec in ds.records:
            assert abs(compute_score(rec.views, rec.faves) - rec.latent_score) <= bound

    def test_score_recovery_tight_at_high_view_counts(self):
        # bound shrinks as log(view lo) grows; frozen seed keeps the max
        # observed error well under 0.02 at this range
        cfg = SynthConfig(n=100, d_in=4, noise_sigma=0.0, seed=13, view_range=(10**8, 10**9))
        ds = generate(cfg)
        err = max(abs(compute_score(r.views, r.faves) - r.latent_score) for r in ds.records)
        assert err < 0.02

    def test_noise_free_features_follow_mixing_matrix(self):
        cfg = SynthConfig(n=30, d_in=5, noise_sigma=0.0, seed=9)
        ds = generate(cfg)
        mix = mixing_matrix(cfg)
        for rec in ds.records:
            np.testing.assert_array_equal(rec.features, mix @ basis(rec.latent_score))

    def test_noise_changes_features_not_counts(self):
        clean = generate(SynthConfig(n=20, d_in=4, noise_sigma=0.0, seed=21))
        noisy = generate(SynthConfig(n=20, d_in=4, noise_sigma=0.5, seed=21))
        for rc, rn in zip(clean.records, noisy.records):
            assert rc.views == rn.views
            assert rc.faves == rn.faves
            assert rc.latent_score == rn.latent_score
            assert not np.array_equal(rc.features, rn.features)

    def test_mixing_matrix_rows_unit_norm(self):
        mix = mixing_matrix(SynthConfig(n=1, d_in=7, seed=4))
        assert mix.shape == (7, BASIS_SIZE)
        np.testing.assert_allclose(np.linalg.norm(mix, axis=1), 1.0, atol=1e-12)

    def test_score_histogram_near_uniform(self):
        ds = generate(SynthConfig(n=10000, d_in=2, seed=42))
        _, counts = score_histogram(ds, 10)
        sigma = math.sqrt(10000 * 0.1 * 0.9)
        assert np.all(np.abs(counts - 1000) <= 3 * sigma)


class TestSidecar:
    def test_contents(self, tmp_path):
        cfg = SynthConfig(n=5, d_in=3, noise_sigma=0.2, seed=8)
        path = tmp_path / "side.json"
        write_sidecar(cfg, path)
        payload = json.loads(path.read_text())
        assert payload["n"] == 5
        assert payload["d_in"] == 3
        assert payload["seed"] == 8
        matrix = np.array(payload["mixing_matrix"])
        assert matrix.shape == (3, BASIS_SIZE)
        np.testing.assert_array_equal(matrix, mixing_matrix(cfg))
