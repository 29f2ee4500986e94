import math

import numpy as np
import pytest

from cxbody.spheregrid import (
    arc_gauss_rule,
    circle_rule,
    disc_rule,
    funk_hecke_factor,
    integrate,
    phase_difference_grid,
    simplex_moment,
    simplex_rule,
    sphere_rule,
    sphere_volume,
)

PI = math.pi


class TestCircleRule:
    def test_constant(self):
        r = circle_rule(64)
        assert integrate(r, np.ones(64)) == pytest.approx(2 * PI, rel=1e-14)

    def test_oscillatory_exactness(self):
        r = circle_rule(64)
        for m in (1, 2, 31, 63):
            val = integrate(r, np.exp(1j * m * r.angles))
            assert abs(val) < 1e-13

    def test_square_support_integral(self):
        # int max(|cos|, |sin|) = 8 int_0^{pi/4} cos = 4 sqrt(2)
        r = circle_rule(256)
        f = np.maximum(np.abs(np.cos(r.angles)), np.abs(np.sin(r.angles)))
        assert integrate(r, f) == pytest.approx(4 * math.sqrt(2), abs=5e-4)

    def test_arc_rule_handles_corners_exactly(self):
        breaks = [PI / 4 + k * PI / 2 for k in range(4)]
        r = arc_gauss_rule(breaks, per_arc=32)
        f = np.maximum(np.abs(np.cos(r.angles)), np.abs(np.sin(r.angles)))
        assert integrate(r, f) == pytest.approx(4 * math.sqrt(2), rel=1e-13)

    def test_rejects_small_or_odd(self):
        with pytest.raises(ValueError):
            circle_rule(2)
        with pytest.raises(ValueError):
            circle_rule(33)


class TestSphereRule:
    def test_volume_s3(self):
        r = sphere_rule(2, (16, 24))
        assert integrate(r, np.ones(r.num_nodes)) == pytest.approx(2 * PI**2, rel=1e-12)

    def test_first_moment_s3(self):
        r = sphere_rule(2, (16, 24))
        f = np.abs(r.nodes[:, 0]) ** 2
        assert integrate(r, f) == pytest.approx(PI**2, rel=1e-10)

    def test_volume_s5_streaming(self):
        r = sphere_rule(3, (10, 8))
        val = integrate(r, lambda pts: np.ones(pts.shape[0]))
        assert val == pytest.approx(PI**3, rel=1e-12)

    def test_moment_s5(self):
        r = sphere_rule(3, (10, 8))
        val = integrate(r, lambda pts: np.abs(pts[:, 0]) ** 2)
        assert val == pytest.approx(PI**3 / 3.0, rel=1e-10)

    def test_monomial_exactness(self):
        # z^a conj(z)^b moments vanish unless phases match; matched ones
        # are Dirichlet moments of the simplex marginal
        r = sphere_rule(2, (12, 16))
        u1, u2 = r.nodes[:, 0], r.nodes[:, 1]
        vol = sphere_volume(2)
        got = integrate(r, (np.abs(u1) ** 4) * (np.abs(u2) ** 2))
        assert got == pytest.approx(vol * simplex_moment([2, 1]), rel=1e-11)
        assert abs(integrate(r, u1**2 * np.abs(u2) ** 2)) < 1e-12
        got2 = integrate(r, (u1 * np.conj(u2)) * (np.conj(u1) * u2))
        assert got2 == pytest.approx(vol * simplex_moment([1, 1]), rel=1e-11)

    def test_weights_positive_and_sum(self):
        for n, lv in ((2, (8, 12)), (3, (6, 6))):
            r = sphere_rule(n, lv)
            _, w = r.materialize()
            assert np.all(w > 0)
            assert w.sum() == pytest.approx(sphere_volume(n), rel=1e-12)

    def test_unsupported_dimension(self):
        with pytest.raises(ValueError):
            sphere_rule(4)

    def test_nonfinite_sample_names_node(self):
        r = sphere_rule(2, (8, 12))
        f = np.ones(r.num_nodes)
        f[17] = np.nan
        with pytest.raises(ValueError, match="node 17"):
            integrate(r, f)


class TestSimplexRule:
    def test_moments(self):
        for n, nt in ((2, 24), (3, 16)):
            r = simplex_rule(n, nt)
            assert r.weights.sum() == pytest.approx(1.0, rel=1e-13)
            for expo in ([1] + [0] * (n - 1), [2] + [0] * (n - 1), [1] * n):
                got = float(np.sum(r.weights * np.prod(r.nodes ** np.asarray(expo), axis=1)))
                assert got == pytest.approx(simplex_moment(expo), rel=1e-12)


class TestDiscRule:
    def test_plain_area_matches_sphere_volume(self):
        r = disc_rule(0)
        area = integrate(r, np.ones(r.num_nodes))
        assert area == pytest.approx(PI, rel=1e-12)
        assert funk_hecke_factor(2) * area == pytest.approx(2 * PI**2, rel=1e-12)

    def test_weighted_area_n3(self):
        r = disc_rule(1)
        got = integrate(r, np.ones(r.num_nodes))
        assert funk_hecke_factor(3) * got == pytest.approx(PI**3, rel=1e-12)

    def test_moment_cross_check(self):
        r = disc_rule(0)
        got = integrate(r, np.abs(r.nodes) ** 2)
        assert funk_hecke_factor(2) * got == pytest.approx(PI**2, rel=1e-12)

    def test_odd_function_vanishes(self):
        r = disc_rule(0)
        assert abs(integrate(r, r.nodes)) < 1e-14

    def test_singular_endpoint_exact(self):
        for p in (-1.0, -1.5, -0.5):
            r = disc_rule(0, singular_p=p)
            got = integrate(r, np.abs(r.nodes) ** p)
            assert got == pytest.approx(2 * PI / (p + 2.0), rel=1e-10)

    def test_inverse_norm_over_s3(self):
        # int_{S^3} |v . u|^(-1) dv = 2 pi^2 int_0^1 t^(-1/2) dt = 4 pi^2
        r = disc_rule(0, singular_p=-1.0)
        got = funk_hecke_factor(2) * integrate(r, np.abs(r.nodes) ** -1.0)
        assert got == pytest.approx(4 * PI**2, rel=1e-10)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            disc_rule(-1)
        with pytest.raises(ValueError):
            disc_rule(0, singular_p=-2.5)


class TestPhaseGrid:
    def test_shapes(self):
        c2, w2 = phase_difference_grid(2, 16)
        assert c2.shape == (16, 1) and w2.sum() == pytest.approx(1.0)
        c3, w3 = phase_difference_grid(3, 8)
        assert c3.shape == (64, 3) and w3.sum() == pytest.approx(1.0)
