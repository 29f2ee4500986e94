import math

import numpy as np
import pytest

from cxbody.harmonics import (
    BiDegreeSpectrum,
    MultiplierTable,
    analyze,
    analyze_invariant,
    apply_multipliers,
    invariant_components_at,
    project_bidegree,
    project_bidegree_dense,
    rule_from_id,
    spectrum_from_json,
    spectrum_to_json,
    synthesize,
)
from cxbody.specialfn import disk_poly, harmonic_dim
from cxbody.spheregrid import integrate, simplex_rule, sphere_rule

RULE = sphere_rule(2, (12, 20))  # resolves bi-degree totals through 9


def zonal(n, k, l, pole):
    return lambda pts: disk_poly(n, k, l, pts @ np.conj(pole))


class TestProjection:
    def test_monomial_reproduction(self):
        # f = Re(v_1^2): the (2, 0) block is u_1^2 / 2
        nodes, _ = RULE.materialize()
        f = (nodes[:, 0] ** 2).real
        comp = project_bidegree(f, 2, 0, RULE)
        np.testing.assert_allclose(comp, nodes[:, 0] ** 2 / 2.0, atol=1e-12)

    def test_constant_blocks(self):
        f = np.ones(RULE.num_nodes)
        np.testing.assert_allclose(project_bidegree(f, 0, 0, RULE), 1.0, atol=1e-12)
        assert np.max(np.abs(project_bidegree(f, 1, 1, RULE))) < 1e-12

    def test_matches_dense_reference(self):
        small = sphere_rule(2, (6, 12))
        rng = np.random.default_rng(7)
        pole = np.array([0.6 + 0.3j, 0.2 - 0.1j])
        pole /= np.linalg.norm(pole)
        nodes, _ = small.materialize()
        f = np.cos(nodes[:, 0].real * 2.0) + nodes[:, 1].imag ** 2
        for k, l in [(0, 0), (1, 0), (2, 1), (1, 2), (2, 2)]:
            fast = project_bidegree(f, k, l, small)
            dense = project_bidegree_dense(f, k, l, small)
            np.testing.assert_allclose(fast, dense, atol=1e-11)

    def test_idempotency_and_orthogonality(self):
        pole = np.array([1.0 + 0j, 0.0 + 0j])
        f = zonal(2, 2, 1, pole)
        comp = project_bidegree(f, 2, 1, RULE)
        nodes, _ = RULE.materialize()
        np.testing.assert_allclose(comp, f(nodes), atol=1e-11)
        again = project_bidegree(comp, 2, 1, RULE)
        np.testing.assert_allclose(again, comp, atol=1e-10)
        other = project_bidegree(comp, 1, 2, RULE)
        assert np.max(np.abs(other)) < 1e-11

    def test_resolution_guard(self):
        with pytest.raises(ValueError, match="resolve"):
            project_bidegree(np.ones(RULE.num_nodes), 6, 5, RULE)


class TestAnalyze:
    def test_band_limited_roundtrip(self):
        rng = np.random.default_rng(11)
        nodes, _ = RULE.materialize()
        f = np.zeros(RULE.num_nodes, dtype=np.complex128)
        for k, l in [(2, 0), (1, 1), (3, 1)]:
            pole = rng.normal(size=2) + 1j * rng.normal(size=2)
            pole /= np.linalg.norm(pole)
            f += rng.normal() * disk_poly(2, k, l, nodes @ np.conj(pole))
        spec = analyze(f, 6, RULE)
        assert spec.residual_sup() < 1e-9
        np.testing.assert_allclose(synthesize(spec), f, atol=1e-9)

    def test_parity_of_odd_function(self):
        nodes, _ = RULE.materialize()
        f = nodes[:, 0].real
        spec = analyze(f, 4, RULE)
        for (k, l), comp in spec.components.items():
            if (k + l) % 2 == 0:
                assert np.max(np.abs(comp)) < 1e-10

    def test_parseval(self):
        rng = np.random.default_rng(3)
        nodes, w = RULE.materialize()
        f = 1.0 + 0.3 * np.real(nodes[:, 0] * np.conj(nodes[:, 1])) + 0.1 * np.abs(nodes[:, 0]) ** 4
        spec = analyze(f, 8, RULE)
        total_sq = float(np.sum(w * np.abs(f) ** 2))
        parts = sum(float(np.sum(w * np.abs(c) ** 2)) for c in spec.components.values())
        parts += float(np.sum(w * np.abs(spec.residual) ** 2))
        assert parts == pytest.approx(total_sq, rel=1e-6)

    def test_empty_spectrum_synthesizes_zero(self):
        spec = BiDegreeSpectrum(2, 4, "sphere", {}, RULE)
        assert np.max(np.abs(synthesize(spec))) == 0.0


class TestMultipliers:
    def test_identity_table(self):
        nodes, _ = RULE.materialize()
        f = np.abs(nodes[:, 0]) ** 2
        spec = analyze(f, 4, RULE)
        table = MultiplierTable("composite", 2, 4,
                                {kl: 1.0 for kl in spec.components}, "closed-form")
        out = apply_multipliers(spec, table)
        np.testing.assert_allclose(synthesize(out), synthesize(spec), atol=1e-13)

    def test_commutativity(self):
        nodes, _ = RULE.materialize()
        f = 1.0 + 0.2 * np.real(nodes[:, 0] ** 2)
        spec = analyze(f, 4, RULE)
        rng = np.random.default_rng(5)
        t1 = MultiplierTable("composite", 2, 4,
                             {kl: complex(rng.normal(), rng.normal()) for kl in spec.components},
                             "closed-form")
        t2 = MultiplierTable("composite", 2, 4,
                             {kl: complex(rng.normal(), rng.normal()) for kl in spec.components},
                             "closed-form")
        a = synthesize(apply_multipliers(apply_multipliers(spec, t1), t2))
        b = synthesize(apply_multipliers(apply_multipliers(spec, t2), t1))
        np.testing.assert_allclose(a, b, atol=1e-10)

    def test_missing_entry_raises(self):
        spec = BiDegreeSpectrum(2, 4, "sphere", {(0, 0): np.ones(4)}, RULE)
        table = MultiplierTable("composite", 2, 4, {}, "closed-form")
        with pytest.raises(ValueError, match="no entry"):
            apply_multipliers(spec, table)


class TestInvariantPath:
    def test_diagonal_zonal_reproduced(self):
        for n in (2, 3):
            simp = simplex_rule(n, 20)
            f = lambda t: disk_poly(n, 2, 2, np.sqrt(t[:, 0]).astype(complex)).real
            spec = analyze_invariant(f, n, 8, simp, nphase=32)
            got = spec.component(2, 2)
            np.testing.assert_allclose(got, f(simp.nodes), atol=1e-10)
            assert spec.residual_sup() < 1e-10

    def test_matches_full_grid_analysis(self):
        # circle-invariant smooth function, n=2: both paths agree
        rule = sphere_rule(2, (16, 24))
        simp = simplex_rule(2, 16)
        g = lambda t1: 1.0 / (1.0 + t1**2)
        nodes, _ = rule.materialize()
        spec_full = analyze(g(np.abs(nodes[:, 0]) ** 2), 8, rule)
        spec_inv = analyze_invariant(lambda t: g(t[:, 0]), 2, 8, simp, nphase=32)
        t_full = np.abs(nodes[:, 0]) ** 2
        for k in range(4):
            inv_at = invariant_components_at(spec_inv, simp.nodes)[(k, k)]
            np.testing.assert_allclose(inv_at, spec_inv.component(k, k), atol=1e-10)
            # compare values on the full grid via barycentric lookup
            comp_full = spec_full.component(k, k)
            vals = invariant_components_at(
                spec_inv, np.column_stack([t_full, 1.0 - t_full]))[(k, k)]
            np.testing.assert_allclose(comp_full.real, vals, atol=1e-8)
            assert np.max(np.abs(comp_full.imag)) < 1e-10

    def test_off_diagonal_absent(self):
        simp = simplex_rule(2, 16)
        spec = analyze_invariant(lambda t: t[:, 0] ** 2, 2, 6, simp)
        assert set(spec.components) == {(k, k) for k in range(4)}


class TestSerialization:
    def test_roundtrip(self):
        simp = simplex_rule(2, 8)
        spec = analyze_invariant(lambda t: 1.0 + t[:, 0], 2, 4, simp)
        doc = spectrum_to_json(spec)
        back = spectrum_from_json(doc)
        assert back.kmax == spec.kmax and back.domain == "simplex"
        np.testing.assert_allclose(back.component(1, 1), spec.component(1, 1))

    def test_rule_from_id(self):
        r = rule_from_id("s3:12x20x20")
        assert r.num_nodes == 12 * 400
