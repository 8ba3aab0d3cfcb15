from __future__ import annotations

import numpy as np
import pytest

import genquot as gq

from conftest import angular_net_gauge_ratio


def seed(i, j=0):
    return gq.SeedSpec(i, j)


class TestMakeBody:
    def test_deterministic(self):
        a = gq.make_body(4, 8, seed(31))
        b = gq.make_body(4, 8, seed(31))
        assert a.gamma.tobytes() == b.gamma.tobytes()

    def test_column_norms_consistent(self):
        body = gq.make_body(6, 20, seed(32))
        assert np.max(np.abs(body.column_norms - np.linalg.norm(body.gamma, axis=0))) <= 1e-12

    def test_segment_body(self):
        body = gq.make_body(1, 1, seed(33))
        g = float(body.gamma[0, 0])
        assert gq.body_norm(body, [g]) == pytest.approx(1.0, abs=1e-9)
        assert gq.body_norm(body, [2 * g]) == pytest.approx(2.0, abs=1e-9)

    def test_bad_dims(self):
        with pytest.raises(gq.UsageError):
            gq.make_body(5, 4, seed(1))

    def test_rank_deficient_rejected(self):
        m = np.ones((3, 4))
        with pytest.raises(gq.NumericError):
            gq.body_from_matrix(m)

    def test_column_norm_concentration(self):
        # columns land in [1/2, 2] for nearly every body at (n, N) = (50, 100)
        good = 0
        for i in range(200):
            body = gq.make_body(50, 100, seed(900, i))
            if body.column_norms.min() >= 0.5 and body.column_norms.max() <= 2.0:
                good += 1
        assert good / 200 >= 0.99


class TestBodyNorm:
    def test_cross_polytope_l1(self, cross3):
        assert gq.body_norm(cross3, [1.0, -2.0, 3.0]) == pytest.approx(6.0, abs=1e-9)

    def test_vertices_inside(self):
        body = gq.make_body(5, 12, seed(34))
        for j in range(body.N):
            assert gq.body_norm(body, body.gamma[:, j]) <= 1.0 + 1e-8

    def test_zero_vector(self, cross2):
        assert gq.body_norm(cross2, [0.0, 0.0]) == 0.0

    def test_homogeneous(self):
        body = gq.make_body(4, 9, seed(35))
        x = gq.gaussian_vector(4, 1.0, seed(35, 7))
        base = gq.body_norm(body, x)
        assert gq.body_norm(body, -2.5 * x) == pytest.approx(2.5 * base, rel=1e-8)

    def test_triangle_inequality(self):
        body = gq.make_body(4, 10, seed(36))
        rng = gq.generator(seed(36, 1))
        for _ in range(100):
            x, y = rng.normal(size=4), rng.normal(size=4)
            assert (gq.body_norm(body, x + y)
                    <= gq.body_norm(body, x) + gq.body_norm(body, y) + 1e-8)

    def test_scaled_duplicate_columns_closed_form(self):
        # columns {e_i * s_ij}: gauge is sum_i |x_i| / max_j s_ij
        scales = [(1.0, 0.5), (2.0, 0.25), (0.75, 3.0)]
        cols = []
        for i, pair in enumerate(scales):
            for s in pair:
                col = np.zeros(3)
                col[i] = s
                cols.append(col)
        body = gq.body_from_matrix(np.column_stack(cols))
        rng = gq.generator(seed(37))
        for _ in range(50):
            x = rng.normal(size=3)
            expected = sum(abs(x[i]) / max(scales[i]) for i in range(3))
            assert gq.body_norm(body, x) == pytest.approx(expected, abs=1e-8)

    def test_lower_bound_from_circumradius(self):
        body = gq.make_body(5, 15, seed(38))
        rng = gq.generator(seed(38, 1))
        for _ in range(50):
            x = rng.normal(size=5)
            assert gq.body_norm(body, x) >= np.linalg.norm(x) / body.circumradius - 1e-8

    def test_batch_hull_agrees_with_lp(self):
        for n, big_n, s in ((2, 6, 40), (3, 20, 41), (4, 32, 42), (5, 40, 43)):
            body = gq.make_body(n, big_n, seed(s))
            rng = gq.generator(seed(s, 1))
            pts = rng.normal(size=(25, n))
            hull_vals = gq.body_norm_many(body, pts)
            lp_vals = np.array([gq.body_norm(body, p) for p in pts])
            assert np.max(np.abs(hull_vals - lp_vals)) <= 1e-7 * (1 + np.max(lp_vals))


class TestDualNorm:
    def test_linf_on_cross_polytope(self, cross2):
        assert gq.dual_norm(cross2, [3.0, -4.0]) == 4.0

    def test_zero(self, cross2):
        assert gq.dual_norm(cross2, [0.0, 0.0]) == 0.0

    def test_duality_pairing(self):
        body = gq.make_body(4, 12, seed(44))
        rng = gq.generator(seed(44, 1))
        for _ in range(100):
            x, u = rng.normal(size=4), rng.normal(size=4)
            assert x @ u <= gq.body_norm(body, x) * gq.dual_norm(body, u) + 1e-8

    def test_lp_dual_witness_achieves_equality(self):
        body = gq.make_body(4, 12, seed(45))
        rng = gq.generator(seed(45, 1))
        for _ in range(20):
            x = rng.normal(size=4)
            val, y = gq.body_norm_with_dual(body, x)
            assert gq.dual_norm(body, y) <= 1.0 + 1e-7
            assert x @ y >= val * gq.dual_norm(body, y) - 1e-6


class TestOperatorNorm:
    def test_identity(self):
        body = gq.make_body(3, 9, seed(46))
        assert gq.operator_norm(body, np.eye(3)) == pytest.approx(1.0, abs=1e-8)

    def test_homogeneity(self):
        body = gq.make_body(3, 9, seed(46))
        assert gq.operator_norm(body, 2 * np.eye(3)) == pytest.approx(2.0, abs=1e-8)

    def test_against_angular_net(self):
        body = gq.make_body(2, 4, seed(7))
        t = gq.gaussian_matrix(2, 2, 1.0, seed(7, 1))
        net = angular_net_gauge_ratio(body, t, points=10_000)
        assert gq.operator_norm(body, t) == pytest.approx(net, abs=1e-3 * (1 + net))

    def test_extreme_point_attainment(self):
        body = gq.make_body(3, 8, seed(47))
        t = gq.gaussian_matrix(3, 3, 1.0, seed(47, 1))
        q = gq.operator_norm(body, t)
        vals = [gq.body_norm(body, t @ body.gamma[:, j]) for j in range(body.N)]
        assert all(q >= v - 1e-8 for v in vals)
        assert q == pytest.approx(max(vals), abs=1e-10)


class TestRadii:
    def test_cross_polytope_2d(self, cross2):
        est = gq.radii(cross2)
        assert est.circumradius == 1.0
        assert est.inradius_estimate == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-4)
        assert est.inradius_estimate == pytest.approx(
            gq.dual_norm(cross2, est.certificate_direction), abs=1e-10)

    def test_cross_polytope_3d(self, cross3):
        est = gq.radii(cross3, seed=seed(48))
        assert est.inradius_estimate == pytest.approx(1.0 / np.sqrt(3.0), abs=2e-3)

    def test_ordering(self):
        for i in range(5):
            body = gq.make_body(6, 14, seed(49, i))
            est = gq.radii(body, seed=seed(49, 100 + i))
            assert est.inradius_estimate <= est.circumradius

    def test_inradius_floor_across_seeds(self):
        # B contains c k^(-1/2) D with c >= 0.2 for nearly every seed at (25, 50)
        n = 25
        hits = 0
        for i in range(100):
            body = gq.make_body(n, 2 * n, seed(950, i))
            est = gq.radii(body, seed=seed(951, i))
            if est.inradius_estimate >= 0.2 / np.sqrt(n):
                hits += 1
        assert hits >= 95

    def test_seed_required_above_2d(self):
        body = gq.make_body(3, 6, seed(50))
        with pytest.raises(gq.UsageError):
            gq.radii(body)


class TestMeanWidth:
    def test_cross_polytope_closed_form(self, cross2):
        est, err = gq.mean_width(cross2, 1_000_000, seed(51))
        target = 2.0 * np.sqrt(2.0) / np.pi
        assert abs(est - target) <= 3 * err

    def test_scaling_same_seed(self):
        body = gq.make_body(3, 7, seed(52))
        scaled = gq.body_from_matrix(3.0 * body.gamma)
        a, _ = gq.mean_width(body, 2000, seed(52, 1))
        b, _ = gq.mean_width(scaled, 2000, seed(52, 1))
        assert b == pytest.approx(3.0 * a, rel=1e-12)

    def test_log_over_n_bound(self):
        body = gq.make_body(16, 256, seed(53))
        est, _ = gq.mean_width(body, 100_000, seed(53, 1))
        assert est <= 2.0 * np.sqrt(np.log(16) / 16)

    def test_min_samples(self, cross2):
        with pytest.raises(gq.UsageError):
            gq.mean_width(cross2, 99, seed(1))


class TestVolumeRatio:
    def test_cross_polytope_2d(self, cross2):
        ratio, lo, hi = gq.volume_ratio(cross2, 200_000, seed(54))
        target = np.sqrt(2.0 / np.pi)
        assert lo - 1e-9 <= target <= hi + 1e-9
        assert ratio == pytest.approx(target, abs=0.01)

    def test_segment(self):
        body = gq.make_body(1, 1, seed(55))
        ratio, lo, hi = gq.volume_ratio(body, 10_000, seed(55, 1))
        g = abs(float(body.gamma[0, 0]))
        assert lo - 1e-12 <= g <= hi + 1e-12

    def test_dimension_cap(self):
        body = gq.make_body(9, 18, seed(56))
        with pytest.raises(gq.UsageError):
            gq.volume_ratio(body, 10_000, seed(1))

    def test_min_samples(self, cross2):
        with pytest.raises(gq.UsageError):
            gq.volume_ratio(cross2, 9_999, seed(1))


class TestSectionDistortion:
    def test_one_dimensional_section(self):
        body = gq.make_body(4, 11, seed(57))
        sub = gq.haar_subspace(4, 1, seed(57, 1))
        hi, lo = gq.section_distortion(body, sub, 100, seed(57, 2))
        assert hi == lo

    def test_cross_polytope_full_distortion(self, cross2):
        sub = gq.HaarSubspace(2, 2, np.eye(2))
        hi, lo = gq.section_distortion(cross2, sub, 10_000, seed(58))
        assert hi / lo == pytest.approx(np.sqrt(2.0), abs=1e-2)

    def test_max_gauge_reaches_inradius_reciprocal(self, cross2):
        sub = gq.HaarSubspace(2, 2, np.eye(2))
        hi, _ = gq.section_distortion(cross2, sub, 100_000, seed(59))
        est = gq.radii(cross2)
        assert hi >= 1.0 / est.inradius_estimate - 1e-6

    def test_dimension_mismatch(self, cross2):
        sub = gq.haar_subspace(3, 2, seed(60))
        with pytest.raises(gq.UsageError):
            gq.section_distortion(cross2, sub, 100, seed(1))


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        body = gq.make_body(4, 10, seed(61, 5))
        path = tmp_path / "body.mtx"
        gq.save_body(body, path)
        loaded = gq.load_body(path)
        assert loaded.gamma.tobytes() == body.gamma.tobytes()
        assert loaded.seed == body.seed
        assert (loaded.n, loaded.N) == (body.n, body.N)

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("NOT-A-BODY 1 2 3 4\n1 1\n1.0\n")
        with pytest.raises(gq.IoError):
            gq.load_body(path)

    def test_shape_mismatch_detected(self, tmp_path):
        body = gq.make_body(2, 3, seed(62))
        text = gq.body.format_body(body).replace("GENQUOT-BODY v1 2 3", "GENQUOT-BODY v1 2 4")
        path = tmp_path / "mismatch.mtx"
        path.write_text(text)
        with pytest.raises(gq.IoError):
            gq.load_body(path)


def test_volume_trend_at_4_64():
    # ratio_per_dim CI stays below 3.0 sqrt(log(N/n)/n) across seeds at (4, 64)
    scale = 3.0 * np.sqrt(np.log(64 / 4) / 4)
    hits = 0
    for i in range(5):
        body = gq.make_body(4, 64, seed(960, i))
        _, _, hi = gq.volume_ratio(body, 20_000, seed(961, i))
        if hi <= scale:
            hits += 1
    assert hits == 5
