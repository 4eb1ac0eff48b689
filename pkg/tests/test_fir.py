from __future__ import annotations

import logging

import numpy as np
import pytest
from scipy.stats import ortho_group

from backend.core.depth import projection_depth, select_deepest
from backend.core.exceptions import InvalidArgumentError, InvalidStateError, NumericFailureError
from backend.core.fir import (
    FirConfig,
    SelectionBox,
    box_contains,
    fir_estimate,
    scaled_distance,
    selection_box,
    subset_size,
)
from backend.core.numerics import RngStream, sample_unit_directions
from backend.core.robust_pca import fdb_estimate
from backend.core.simdata import SimSpec, generate


def _grid_with_outliers():
    return np.concatenate([np.linspace(0.0, 1.0, 36), [100.0] * 4])[:, np.newaxis]


class TestScaledDistance:

    def test_zero_row(self):
        assert scaled_distance([[0.0, 0.0]], [1.0, 2.0]).tolist() == [0.0]

    def test_unit_scaling(self):
        assert scaled_distance([[1.0, 1.0]], [1.0, 1.0]).tolist() == [2.0]

    def test_scaled_axes(self):
        assert scaled_distance([[2.0, 3.0]], [2.0, 1.0]).tolist() == [10.0]

    def test_rank_zero_is_invalid_state(self):
        with pytest.raises(InvalidStateError):
            scaled_distance(np.zeros((3, 0)), [])

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            scaled_distance([[1.0, 2.0, 3.0]], [1.0, 1.0])


class TestSelectionBox:

    def test_half_range_expansion(self):
        box = selection_box([[0.0], [1.0], [2.0]], expand=0.5)
        assert box.lower.tolist() == [-1.0]
        assert box.upper.tolist() == [3.0]

    def test_identical_scores_give_zero_width(self):
        box = selection_box([[1.5, -2.0]] * 4)
        assert box.lower.tolist() == [1.5, -2.0]
        assert box.upper.tolist() == [1.5, -2.0]

    def test_uses_two_leading_axes(self):
        box = selection_box(np.random.default_rng(0).standard_normal((10, 5)))
        assert box.axes == 2

    def test_single_axis_box(self):
        box = selection_box([[0.0], [2.0]])
        assert box.axes == 1
        assert box_contains(box, [1.0, 1e9])

    def test_corner_is_inside(self):
        box = SelectionBox(lower=np.array([0.0, 0.0]), upper=np.array([1.0, 2.0]))
        assert box_contains(box, [1.0, 2.0])
        assert box_contains(box, [0.0, 0.0, 50.0])

    def test_outside_on_one_axis(self):
        box = SelectionBox(lower=np.array([0.0, 0.0]), upper=np.array([1.0, 2.0]))
        assert not box_contains(box, [1.5, 1.0])

    def test_empty_scores_rejected(self):
        with pytest.raises(InvalidArgumentError):
            selection_box(np.zeros((0, 2)))


class TestFirConfig:

    def test_subset_size_is_exact_for_decimal_alpha(self):
        assert subset_size(0.57, 100) == 57
        assert subset_size(0.75, 40) == 30

    def test_resolve_defaults_batch_to_a_tenth(self):
        assert FirConfig().resolve(200, 5) == (150, 20)

    def test_resolve_small_n_uses_p_plus_one(self):
        assert FirConfig().resolve(40, 5) == (30, 6)

    def test_resolve_rejects_small_n(self):
        with pytest.raises(InvalidArgumentError):
            FirConfig().resolve(6, 5)

    @pytest.mark.parametrize("batch_m", [5, 30])
    def test_resolve_rejects_batch_outside_bounds(self, batch_m):
        with pytest.raises(InvalidArgumentError):
            FirConfig(batch_m=batch_m).resolve(40, 5)

    def test_non_dividing_batch_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="firpca.fir"):
            h, m = FirConfig(batch_m=7).resolve(40, 1)
        assert (h, m) == (30, 7)
        assert any("does not divide" in record.getMessage() for record in caplog.records)

    def test_breakdown_bound_warns(self, caplog):
        with caplog.at_level(logging.WARNING, logger="firpca.fir"):
            FirConfig(alpha=0.5, batch_m=10).resolve(40, 5)
        assert any("breakdown bound" in record.getMessage() for record in caplog.records)

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            FirConfig(alpha=1.0)

    def test_config_is_frozen(self):
        config = FirConfig()
        with pytest.raises(ValueError):
            config.alpha = 0.6


class TestFirEstimate:

    def test_excludes_far_outliers_in_one_dimension(self):
        result = fir_estimate(_grid_with_outliers(), FirConfig(alpha=0.75, batch_m=10), directions=[[1.0]])
        assert result.h == 30
        assert result.n_selected == 30
        assert not set(result.h_indices.tolist()) & {36, 37, 38, 39}
        assert 0.0 <= result.mu[0] <= 1.0

    def test_subset_invariants(self):
        rng = np.random.default_rng(1)
        Z = rng.standard_normal((123, 4))
        config = FirConfig(alpha=0.75, batch_m=13, seed=3)
        directions = sample_unit_directions(4, 200, config.rng())
        result = fir_estimate(Z, config, directions=directions)

        h, m = config.resolve(123, 4)
        assert result.n_selected == m * (h // m)
        assert np.all(np.diff(result.h_indices) > 0)
        seed = select_deepest(projection_depth(Z, directions).depth, m)
        assert set(seed) <= set(result.h_indices.tolist())

        subset = Z[result.h_indices]
        assert np.array_equal(result.mu, subset.mean(axis=0))
        assert np.allclose(result.sigma, np.cov(subset, rowvar=False), atol=1e-14)
        assert np.array_equal(result.sigma, result.sigma.T)
        assert np.min(np.linalg.eigvalsh(result.sigma)) >= -1e-10 * np.trace(result.sigma)

    def test_deterministic(self):
        Z = np.random.default_rng(2).standard_normal((100, 3))
        config = FirConfig(seed=9, stream_id=4, n_directions=100)
        first, second = fir_estimate(Z, config), fir_estimate(Z, config)
        assert np.array_equal(first.h_indices, second.h_indices)
        assert np.array_equal(first.mu, second.mu)
        assert np.array_equal(first.sigma, second.sigma)

    def test_orthogonal_equivariance(self):
        rng = np.random.default_rng(2025)
        for trial in range(50):
            n, p = int(rng.integers(40, 121)), int(rng.integers(2, 6))
            Z = rng.standard_normal((n, p)) @ np.diag(rng.uniform(0.5, 2.0, size=p))
            A = ortho_group.rvs(p, random_state=trial)
            v = rng.standard_normal(p) * 5.0
            config = FirConfig(alpha=0.75, seed=trial)
            D = sample_unit_directions(p, 150, config.rng())

            base = fir_estimate(Z, config, directions=D)
            moved = fir_estimate(Z @ A + v, config, directions=D @ A)

            assert np.array_equal(base.h_indices, moved.h_indices)
            assert np.allclose(moved.mu, base.mu @ A + v, atol=1e-8)
            assert np.linalg.norm(moved.sigma - A.T @ base.sigma @ A) <= 1e-8

    def test_permutation_invariance(self):
        rng = np.random.default_rng(77)
        Z = rng.standard_normal((90, 3))
        config = FirConfig(alpha=0.75, batch_m=9)
        D = sample_unit_directions(3, 150, RngStream(1, 1))
        base = fir_estimate(Z, config, directions=D)
        for _ in range(50):
            perm = rng.permutation(90)
            shuffled = fir_estimate(Z[perm], config, directions=D)
            assert sorted(perm[shuffled.h_indices].tolist()) == base.h_indices.tolist()
            assert np.allclose(shuffled.mu, base.mu, atol=1e-12)
            assert np.allclose(shuffled.sigma, base.sigma, atol=1e-12)

    def test_rank_collapse(self):
        Z = np.concatenate([np.zeros(30), np.arange(1.0, 11.0)])[:, np.newaxis]
        with pytest.raises(NumericFailureError):
            fir_estimate(Z, FirConfig(alpha=0.75, batch_m=10), directions=[[1.0]])

    def test_rejects_too_few_rows(self):
        with pytest.raises(InvalidArgumentError):
            fir_estimate(np.random.default_rng(0).standard_normal((5, 4)), FirConfig(batch_m=5))


@pytest.mark.slow
class TestFirContamination:

    def test_point_outliers_stay_out_of_subset(self):
        fir_clean, fdb_contaminated = 0, 0
        for seed in range(20):
            data = generate(SimSpec(n=1000, p=10, eps=0.4, kind="point", seed=seed))
            config = FirConfig(alpha=0.5, seed=seed, stream_id=1)
            directions = sample_unit_directions(10, 500, config.rng())

            fir = fir_estimate(data.X, config, directions=directions)
            fdb = fdb_estimate(data.X, 0.5, directions=directions)
            fir_clean += int(not np.any(data.labels[fir.h_indices]))
            fdb_contaminated += int(np.any(data.labels[fdb.h_indices]))

        assert fir_clean >= 18
        assert fdb_contaminated >= 10
