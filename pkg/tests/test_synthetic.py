"""Synthetic hierarchy and planted-trace generators."""
import numpy as np
import pytest

from safari.linalg import semantic_distance
from safari.subspace import build_sfs
from safari.synthetic import (
    HierarchySpec,
    generate_hierarchy,
    leaf_directions,
    planted_spike_trace,
)
from safari.thresholds import scan_sequence


def make(branching, ppl=1, dim=8, spread=0.0, seed=0):
    return generate_hierarchy(
        HierarchySpec(
            branching=tuple(branching),
            points_per_leaf=ppl,
            dim=dim,
            angular_spread=spread if np.ndim(spread) else (spread,) * len(branching),
            seed=seed,
        )
    )


class TestHierarchySpec:
    def test_counts(self):
        spec = HierarchySpec((3, 3, 3, 3), points_per_leaf=5, dim=64, angular_spread=0.1)
        assert spec.depth == 4
        assert spec.n_leaves == 81
        assert spec.n_points == 405

    def test_scalar_spread_broadcasts(self):
        spec = HierarchySpec((2, 2), points_per_leaf=1, dim=4, angular_spread=0.2)
        assert spec.angular_spread == (0.2, 0.2)

    def test_increasing_spread_rejected(self):
        with pytest.raises(ValueError, match="must not increase"):
            HierarchySpec((2, 2), points_per_leaf=1, dim=4, angular_spread=(0.1, 0.2))

    def test_nonincreasing_spread_accepted(self):
        HierarchySpec((2, 2), points_per_leaf=1, dim=4, angular_spread=(0.2, 0.2))
        HierarchySpec((2, 2), points_per_leaf=1, dim=4, angular_spread=(0.2, 0.1))

    def test_too_many_roots_for_dim(self):
        with pytest.raises(ValueError, match="orthogonal root directions"):
            HierarchySpec((10,), points_per_leaf=1, dim=4, angular_spread=0.0)

    def test_depth_and_factor_limits(self):
        with pytest.raises(ValueError, match="depth"):
            HierarchySpec((2, 2, 2, 2, 2), points_per_leaf=1, dim=8, angular_spread=0.0)
        with pytest.raises(ValueError, match=">= 1"):
            HierarchySpec((2, 0), points_per_leaf=1, dim=8, angular_spread=0.0)
        with pytest.raises(ValueError, match="points_per_leaf"):
            HierarchySpec((2,), points_per_leaf=0, dim=8, angular_spread=0.0)

    def test_negative_spread_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            HierarchySpec((2,), points_per_leaf=1, dim=4, angular_spread=-0.1)


class TestGenerateHierarchy:
    def test_zero_spread_two_roots_exactly_orthogonal(self):
        es = make([2, 1, 1, 1], ppl=1, dim=4, spread=0.0)
        assert es.n == 2
        assert abs(float(es.rows[0] @ es.rows[1])) < 1e-12
        for level in range(4):
            assert es.labels.label_ids[0, level] != es.labels.label_ids[1, level]

    def test_rows_are_unit_norm(self):
        es = make([3, 2], ppl=4, dim=16, spread=(0.3, 0.1), seed=7)
        np.testing.assert_allclose(np.linalg.norm(es.rows, axis=1), 1.0, atol=1e-12)

    def test_shape_ids_and_nesting(self):
        es = make([3, 2, 2], ppl=3, dim=12, spread=(0.4, 0.2, 0.05), seed=3)
        assert es.rows.shape == (36, 12)
        assert len(set(es.ids)) == 36
        assert es.labels.level_count == 3
        es.labels.validate_nesting()

    def test_label_levels_coarsen_upward(self):
        es = make([3, 2, 2], ppl=2, dim=12, spread=(0.4, 0.2, 0.05), seed=3)
        counts = [len(set(es.labels.label_ids[:, k])) for k in range(3)]
        assert counts == [12, 6, 3]

    def test_deterministic_by_seed(self):
        a = make([3, 3], ppl=5, dim=16, spread=(0.3, 0.1), seed=42)
        b = make([3, 3], ppl=5, dim=16, spread=(0.3, 0.1), seed=42)
        c = make([3, 3], ppl=5, dim=16, spread=(0.3, 0.1), seed=43)
        assert a.rows.tobytes() == b.rows.tobytes()
        assert a.ids == b.ids
        assert a.rows.tobytes() != c.rows.tobytes()

    def test_transition_angle_is_exact(self):
        es = make([1, 3, 1, 1], ppl=1, dim=8, spread=(0.25, 0.0, 0.0, 0.0), seed=5)
        root = generate_hierarchy(
            HierarchySpec((1,), points_per_leaf=1, dim=8, angular_spread=0.0, seed=5)
        ).rows[0]
        for row in es.rows:
            assert float(root @ row) == pytest.approx(np.cos(0.25), abs=1e-12)

    def test_leaf_directions_match_point_clouds(self):
        spec = HierarchySpec((4, 2), points_per_leaf=20, dim=12,
                             angular_spread=(0.4, 0.05), seed=13)
        paths, directions = leaf_directions(spec)
        es = generate_hierarchy(spec)
        assert len(paths) == 8
        np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0, atol=1e-12)
        for k, path in enumerate(paths):
            cloud = es.rows[[i for i, item in enumerate(es.ids) if item.startswith(path + "#")]]
            mean = cloud.mean(axis=0)
            assert semantic_distance(mean, directions[k]) < 0.01

    def test_class_leading_direction_aligns_with_generator(self):
        # the sign convention shared with the decomposition keeps the top
        # singular vector near the generating direction, not its negation
        spec = HierarchySpec((5,), points_per_leaf=50, dim=16, angular_spread=0.05, seed=21)
        paths, directions = leaf_directions(spec)
        es = generate_hierarchy(spec)
        leaf = es.labels.label_ids[:, 0]
        name_to_row = {path: directions[k] for k, path in enumerate(paths)}
        for class_id in range(5):
            cloud = es.rows[leaf == class_id]
            sfs = build_sfs(cloud)
            generator = name_to_row[es.labels.vocab[0][class_id]]
            assert semantic_distance(sfs.basis[0], generator) <= 0.05

    def test_within_leaf_tighter_than_cross_root(self):
        es = make([3, 3, 3, 3], ppl=4, dim=16, spread=(0.5, 0.25, 0.12, 0.05), seed=11)
        leaf = es.labels.label_ids[:, 0]
        root = es.labels.label_ids[:, -1]
        within, cross = [], []
        rng = np.random.default_rng(0)
        for _ in range(400):
            i, j = rng.integers(0, es.n, size=2)
            if i == j:
                continue
            d = semantic_distance(es.rows[i], es.rows[j])
            if leaf[i] == leaf[j]:
                within.append(d)
            elif root[i] != root[j]:
                cross.append(d)
        assert within and cross
        assert np.mean(within) < np.mean(cross)


class TestPlantedSpikeTrace:
    def test_spike_heights_exact(self):
        trace = planted_spike_trace(200, 1.0, 0.05, [50, 120], 5.0, seed=1)
        assert trace.shape == (200,)
        assert trace[50] == 1.0 + 5.0 * 0.05
        assert trace[120] == 1.0 + 5.0 * 0.05

    def test_baseline_statistics(self):
        trace = planted_spike_trace(20000, 1.0, 0.05, [], 5.0, seed=2)
        assert float(trace.mean()) == pytest.approx(1.0, abs=0.002)
        assert float(trace.std(ddof=1)) == pytest.approx(0.05, rel=0.05)

    def test_deterministic_by_seed(self):
        a = planted_spike_trace(500, 1.0, 0.05, [100], 5.0, seed=9)
        b = planted_spike_trace(500, 1.0, 0.05, [100], 5.0, seed=9)
        assert a.tobytes() == b.tobytes()

    def test_duplicate_positions_rejected(self):
        with pytest.raises(ValueError, match="duplicates"):
            planted_spike_trace(100, 1.0, 0.05, [10, 10], 5.0)

    def test_position_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            planted_spike_trace(100, 1.0, 0.05, [100], 5.0)
        with pytest.raises(ValueError, match="outside"):
            planted_spike_trace(100, 1.0, 0.05, [-1], 5.0)

    def test_bad_length_and_std(self):
        with pytest.raises(ValueError, match="length"):
            planted_spike_trace(0, 1.0, 0.05, [], 5.0)
        with pytest.raises(ValueError, match="baseline_std"):
            planted_spike_trace(10, 1.0, -0.05, [], 5.0)

    def test_spikes_trip_sliding_window(self):
        positions = [60, 130, 200]
        trace = planted_spike_trace(260, 1.0, 0.05, positions, 6.0, seed=4)
        flags = scan_sequence(trace, window_size=50, multiplier=3.0)
        for p in positions:
            assert flags[p]
        false_hits = [i for i, f in enumerate(flags) if f and i not in positions]
        assert len(false_hits) <= 3
