import numpy as np
import pytest

from safari.engine import (
    Cluster,
    SafariConfig,
    merge_clusters,
    naive_nearest_pair_oracle,
    nearest_pair,
    run_safari,
)
from safari.errors import NumericError


def make_cluster(cid, indices, centroid):
    idx = np.asarray(indices, dtype=np.int64)
    return Cluster(id=cid, member_indices=idx, centroid=np.asarray(centroid, float), size=idx.size)


def unit_rows(rng, n, d):
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


class TestMergeClusters:
    def test_weighted_centroid(self):
        a = make_cluster(0, [0, 1, 2], [1.0, 0.0])
        b = make_cluster(1, [3], [0.0, 1.0])
        m = merge_clusters(a, b, 7)
        assert m.id == 7
        assert m.size == 4
        np.testing.assert_allclose(m.centroid, [0.75, 0.25])
        assert m.member_indices.tolist() == [0, 1, 2, 3]

    def test_centroid_matches_recompute_from_rows(self):
        rng = np.random.default_rng(2)
        rows = rng.standard_normal((10, 4))
        ia, ib = [0, 3, 5], [1, 2]
        a = make_cluster(0, ia, rows[ia].mean(axis=0))
        b = make_cluster(1, ib, rows[ib].mean(axis=0))
        m = merge_clusters(a, b, 2)
        np.testing.assert_allclose(m.centroid, rows[sorted(ia + ib)].mean(axis=0), atol=1e-12)

    def test_overlapping_members_rejected(self):
        a = make_cluster(0, [0, 1], [1.0, 0.0])
        b = make_cluster(1, [1, 2], [0.0, 1.0])
        with pytest.raises(ValueError):
            merge_clusters(a, b, 2)

    def test_self_merge_rejected(self):
        a = make_cluster(0, [0], [1.0, 0.0])
        with pytest.raises(ValueError):
            merge_clusters(a, a, 1)


class TestNearestPair:
    def test_identical_direction_singletons_first(self):
        clusters = [
            make_cluster(0, [0], [1.0, 0.0]),
            make_cluster(1, [1], [2.0, 0.0]),
            make_cluster(2, [2], [0.0, 1.0]),
        ]
        assert nearest_pair(clusters) == (0, 1)
        assert naive_nearest_pair_oracle(clusters) == (0, 1)

    def test_tie_breaks_lexicographically(self):
        # two pairs at distance exactly zero; (0, 1) must win over (2, 3)
        clusters = [
            make_cluster(0, [0], [1.0, 0.0]),
            make_cluster(1, [1], [1.0, 0.0]),
            make_cluster(2, [2], [0.0, 1.0]),
            make_cluster(3, [3], [0.0, 1.0]),
        ]
        assert nearest_pair(clusters) == (0, 1)
        assert naive_nearest_pair_oracle(clusters) == (0, 1)

    def test_agrees_with_oracle_on_random_collections(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            m = int(rng.integers(2, 25))
            d = int(rng.integers(2, 8))
            clusters = [make_cluster(i, [i], rng.standard_normal(d)) for i in range(m)]
            assert nearest_pair(clusters) == naive_nearest_pair_oracle(clusters)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            nearest_pair([make_cluster(0, [0], [1.0, 0.0])])


class TestRunSafariBasics:
    def test_two_rows_single_merge_no_flag(self):
        res = run_safari(np.eye(2), SafariConfig(window_size=2, shift_mode="exact"))
        assert len(res.dendrogram.events) == 1
        assert len(res.shift_trace) == 1
        assert res.dendrogram.events[0].is_sfs is False
        assert res.dendrogram.sfs_registry == {}
        assert res.dendrogram.n_leaves == 2

    def test_event_bookkeeping(self):
        rng = np.random.default_rng(5)
        rows = unit_rows(rng, 12, 4)
        res = run_safari(rows, SafariConfig(window_size=4, min_observations=2))
        events = res.dendrogram.events
        assert [e.iteration for e in events] == list(range(1, 12))
        assert [e.new_id for e in events] == list(range(12, 23))
        used = [i for e in events for i in (e.left_id, e.right_id)]
        assert len(used) == len(set(used)), "each cluster id consumed exactly once"
        assert events[-1].new_id == 22

    def test_window_semantics_match_brute_force(self):
        # replay the trace: mu/tau must equal stats of the previous window,
        # the flag must be the strict threshold test, warm-up included
        rng = np.random.default_rng(7)
        rows = unit_rows(rng, 40, 6)
        cfg = SafariConfig(window_size=5, multiplier=2.0, min_observations=3)
        res = run_safari(rows, cfg)
        values = [r.exact for r in res.shift_trace]
        for k, rec in enumerate(res.shift_trace):
            past = np.asarray(values[max(0, k - 5):k])
            mu = float(past.mean()) if past.size else 0.0
            tau = float(past.std(ddof=1)) if past.size > 1 else 0.0
            assert rec.mu == pytest.approx(mu, abs=1e-12)
            assert rec.tau == pytest.approx(tau, abs=1e-12)
            want_flag = past.size >= 3 and values[k] > mu + 2.0 * tau
            assert rec.is_sfs == want_flag

    def test_every_shift_feeds_window_even_when_flagged(self):
        # after a flagged iteration, the window stats must include its value
        rng = np.random.default_rng(9)
        rows = unit_rows(rng, 30, 5)
        cfg = SafariConfig(window_size=50, multiplier=1.0, min_observations=2)
        res = run_safari(rows, cfg)
        flagged = [r for r in res.shift_trace if r.is_sfs]
        assert flagged, "fixture should produce at least one flag"
        values = [r.exact for r in res.shift_trace]
        k = res.shift_trace.index(flagged[0])
        later = res.shift_trace[k + 1]
        np.testing.assert_allclose(later.mu, np.mean(values[: k + 1]), atol=1e-12)

    def test_registry_holds_flagged_subspaces(self):
        rng = np.random.default_rng(11)
        rows = unit_rows(rng, 25, 5)
        res = run_safari(rows, SafariConfig(window_size=6, min_observations=2))
        flagged_iters = [r.iteration for r in res.shift_trace if r.is_sfs]
        assert sorted(res.dendrogram.sfs_registry) == flagged_iters
        for it, sfs in res.dendrogram.sfs_registry.items():
            assert sfs.iteration_created == it
            ev = res.dendrogram.events[it - 1]
            assert sfs.source_cluster_id == ev.new_id
            assert sfs.rank >= 1

    def test_both_mode_thresholds_on_exact(self):
        rng = np.random.default_rng(13)
        rows = unit_rows(rng, 20, 4)
        exact = run_safari(rows, SafariConfig(window_size=5, min_observations=2, shift_mode="exact"))
        both = run_safari(rows, SafariConfig(window_size=5, min_observations=2, shift_mode="both"))
        for re_, rb in zip(exact.shift_trace, both.shift_trace):
            assert rb.exact == re_.exact
            assert rb.approx is not None
            assert rb.is_sfs == re_.is_sfs
            assert rb.mu == re_.mu and rb.tau == re_.tau

    def test_approx_mode_trace_and_registry(self):
        rng = np.random.default_rng(15)
        rows = unit_rows(rng, 24, 4)
        res = run_safari(rows, SafariConfig(window_size=5, min_observations=2, shift_mode="approx"))
        assert all(r.exact is None and r.dis_sum is None for r in res.shift_trace)
        assert all(r.approx is not None and r.approx >= 0.0 for r in res.shift_trace)
        for it, sfs in res.dendrogram.sfs_registry.items():
            assert sfs.iteration_created == it

    def test_deterministic_repeat_runs(self):
        rng = np.random.default_rng(17)
        rows = unit_rows(rng, 30, 6)
        r1 = run_safari(rows, SafariConfig(window_size=8, shift_mode="both", min_observations=2))
        r2 = run_safari(rows.copy(), SafariConfig(window_size=8, shift_mode="both", min_observations=2))
        for e1, e2 in zip(r1.dendrogram.events, r2.dendrogram.events):
            assert (e1.left_id, e1.right_id, e1.new_id) == (e2.left_id, e2.right_id, e2.new_id)
            assert e1.linkage_distance == e2.linkage_distance
            assert e1.shift_exact.total == e2.shift_exact.total
            assert e1.shift_approx == e2.shift_approx
            assert (e1.threshold_mu, e1.threshold_tau, e1.is_sfs) == (
                e2.threshold_mu,
                e2.threshold_tau,
                e2.is_sfs,
            )

    def test_heap_and_naive_strategies_agree_exactly(self):
        rng = np.random.default_rng(19)
        for _ in range(6):
            n = int(rng.integers(8, 50))
            rows = unit_rows(rng, n, int(rng.integers(2, 8)))
            cfg_h = SafariConfig(window_size=5, min_observations=2, pair_strategy="heap")
            cfg_n = SafariConfig(window_size=5, min_observations=2, pair_strategy="naive")
            rh = run_safari(rows, cfg_h)
            rn = run_safari(rows, cfg_n)
            for eh, en in zip(rh.dendrogram.events, rn.dendrogram.events):
                assert (eh.left_id, eh.right_id, eh.new_id) == (en.left_id, en.right_id, en.new_id)
                assert eh.linkage_distance == en.linkage_distance

    def test_size_dominant_side_is_kept(self):
        # equal-size tie must keep the second (larger-id) cluster's subspace:
        # detectable through which side's rank-1 basis the shift is measured from
        rows = np.array(
            [
                [1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ]
        )
        res = run_safari(rows, SafariConfig(window_size=3, min_observations=2))
        # iter1 merges rows 0,1; iter2 merges rows 2,3; iter3 joins the two
        # 2-clusters (ids 4 and 5): tie -> cluster 5 (span e2) is dominant.
        ev = res.dendrogram.events[2]
        assert (ev.left_id, ev.right_id) == (4, 5)
        bx_shift = res.shift_trace[2].exact
        # dominant basis is e2 with sigma sqrt(2); merged spectrum (sqrt2, sqrt2):
        # dis term 0 at index 0 -> nonzero contribution only via index pairing
        assert bx_shift == pytest.approx(0.0, abs=1e-9)


class TestRunSafariErrors:
    def test_too_few_rows(self):
        with pytest.raises(NumericError):
            run_safari(np.array([[1.0, 0.0]]))

    def test_zero_norm_row_reported_with_index(self):
        rows = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        with pytest.raises(NumericError, match="index 1"):
            run_safari(rows)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            run_safari(np.eye(3), SafariConfig(window_size=1))

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            run_safari(np.eye(3), SafariConfig(shift_mode="quick"))

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            run_safari(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestFixtures:
    def test_blob_fixture_final_merge_is_global_max(self):
        rng = np.random.default_rng(123)
        d = 8

        def blob(axis):
            center = np.zeros(d)
            center[axis] = 1.0
            pts = center + 0.01 * rng.standard_normal((20, d))
            return pts / np.linalg.norm(pts, axis=1, keepdims=True)

        rows = np.vstack([blob(0), blob(1)])
        res = run_safari(rows, SafariConfig(window_size=10, min_observations=2))
        values = [r.exact for r in res.shift_trace]
        assert int(np.argmax(values)) == len(values) - 1
        assert res.shift_trace[-1].is_sfs

    def test_hub_fixture_flags_hub_joins_not_pair_merges(self):
        def unit(v):
            return v / np.linalg.norm(v)

        eps = 0.01
        pts = []
        for k in range(3):
            base = np.zeros(6)
            base[k] = 1.0
            tangent = np.zeros(6)
            tangent[k + 3] = 1.0
            pts.append(unit(base))
            pts.append(unit(np.cos(eps) * base + np.sin(eps) * tangent))
        hub1 = unit(pts[0] + pts[2])
        hub2 = unit(pts[2] + pts[4])
        rows = np.vstack(pts + [hub1, hub2])

        res = run_safari(rows, SafariConfig(window_size=7, multiplier=1.5, min_observations=2))
        flags = {r.iteration for r in res.shift_trace if r.is_sfs}
        # iterations 1-3 are the within-pair merges
        assert flags.isdisjoint({1, 2, 3})
        # iteration 4 is the first hub absorption (hub row 6 joins pair cluster 8)
        ev4 = res.dendrogram.events[3]
        assert (ev4.left_id, ev4.right_id) == (6, 8)
        assert 4 in flags
