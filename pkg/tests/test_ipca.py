from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import subspace_angles
from scipy.stats import ortho_group

from backend.core.exceptions import InvalidArgumentError
from backend.core.ipca import ipca_init, ipca_project, ipca_update


def _max_angle(a, b):
    return float(np.max(subspace_angles(a.components.T, b.components.T)))


class TestIpcaInit:

    def test_identical_rows_give_rank_zero(self):
        model = ipca_init(np.tile([1.5, -2.0, 3.0], (6, 1)))
        assert model.rank == 0
        assert model.components.shape == (0, 3)
        assert np.array_equal(model.mean, [1.5, -2.0, 3.0])
        assert model.n_seen == 6

    def test_collinear_points(self):
        t = np.array([-1.0, 0.0, 2.0, 3.0])
        model = ipca_init(np.outer(t, [1.0, 1.0]) / math.sqrt(2.0))
        assert model.rank == 1
        assert np.allclose(np.abs(model.components[0]), [1 / math.sqrt(2.0)] * 2, atol=1e-12)

    def test_singular_values_are_standard_deviations(self):
        batch = np.random.default_rng(0).standard_normal((50, 3))
        model = ipca_init(batch)
        centered = batch - batch.mean(axis=0)
        expected = np.linalg.svd(centered, compute_uv=False) / math.sqrt(50)
        assert np.allclose(model.singular_values, expected, rtol=1e-12)

    def test_model_arrays_are_read_only(self):
        model = ipca_init(np.random.default_rng(1).standard_normal((10, 2)))
        with pytest.raises(ValueError):
            model.mean[0] = 1.0


class TestIpcaUpdate:

    def test_batches_reproduce_full_fit(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            p = int(rng.integers(1, 11))
            n = int(rng.integers(p + 2, 101))
            X = rng.standard_normal((n, p)) * rng.uniform(0.5, 3.0, size=p) + rng.standard_normal(p)
            cuts = np.sort(rng.choice(np.arange(1, n), size=int(rng.integers(1, min(5, n - 1) + 1)), replace=False))
            batches = np.split(X, cuts)

            model = ipca_init(batches[0])
            for batch in batches[1:]:
                model = ipca_update(model, batch)
            full = ipca_init(X)

            assert model.n_seen == n
            assert model.rank == full.rank
            assert np.allclose(model.singular_values, full.singular_values, rtol=1e-8, atol=0.0)
            assert _max_angle(model, full) <= 1e-8
            assert np.allclose(model.mean, full.mean, rtol=1e-12, atol=1e-12)
            assert np.allclose(model.components @ model.components.T, np.eye(model.rank), atol=1e-9)

    def test_pooled_mean(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((7, 3)), rng.standard_normal((5, 3))
        model = ipca_update(ipca_init(a), b)
        assert np.allclose(model.mean, np.vstack([a, b]).mean(axis=0), atol=1e-15)

    def test_update_with_mean_keeps_subspace(self):
        rng = np.random.default_rng(4)
        model = ipca_init(rng.standard_normal((30, 4)) @ np.diag([3.0, 2.0, 1.0, 0.5]))
        updated = ipca_update(model, np.tile(model.mean, (10, 1)))
        assert updated.rank == model.rank
        assert _max_angle(updated, model) <= 1e-9
        assert np.allclose(updated.mean, model.mean, atol=1e-12)

    def test_rotation_keeps_singular_values(self):
        rng = np.random.default_rng(6)
        first, second = rng.standard_normal((20, 5)), rng.standard_normal((12, 5))
        A = ortho_group.rvs(5, random_state=7)
        plain = ipca_update(ipca_init(first), second)
        rotated = ipca_update(ipca_init(first @ A), second @ A)
        assert np.allclose(rotated.singular_values, plain.singular_values, atol=1e-9)

    def test_dimension_mismatch(self):
        model = ipca_init(np.random.default_rng(0).standard_normal((5, 3)))
        with pytest.raises(InvalidArgumentError):
            ipca_update(model, np.ones((2, 4)))


class TestIpcaProject:

    def test_mean_projects_to_zero(self):
        model = ipca_init(np.random.default_rng(10).standard_normal((25, 3)))
        assert np.allclose(ipca_project(model, model.mean[np.newaxis, :]), 0.0, atol=1e-14)

    def test_reconstruction_of_full_rank_batch(self):
        batch = np.random.default_rng(11).standard_normal((15, 4))
        model = ipca_init(batch)
        assert model.rank == 4
        scores = ipca_project(model, batch)
        assert np.allclose(scores @ model.components + model.mean, batch, atol=1e-9)

    def test_rank_zero_projection_is_empty(self):
        model = ipca_init(np.ones((4, 2)))
        assert ipca_project(model, np.zeros((3, 2))).shape == (3, 0)

    def test_requires_matrix(self):
        model = ipca_init(np.random.default_rng(12).standard_normal((5, 2)))
        with pytest.raises(InvalidArgumentError):
            ipca_project(model, [1.0, 2.0])
        with pytest.raises(InvalidArgumentError):
            ipca_project(model, np.ones((2, 3)))
