import math

import numpy as np
import pytest

from cxbody.experiments import (
    Claim,
    ExperimentRecord,
    adjointness_suite,
    bp_summary,
    embedding_scan,
    experiment_ids,
    image_counterexample,
    injectivity_counterexample,
    positive_p_search,
    run_experiment,
)


class TestInjectivityI:
    @pytest.fixture(scope="class")
    def record(self):
        return injectivity_counterexample("I", "ngon:4", -1.0, 2, 0.1,
                                          quick=True, levels=(32, 40))

    def test_passes(self, record):
        assert record.verdict == "pass"

    def test_equality_slack(self, record):
        assert record.claim("ibody_equality_slack").value < 1e-6

    def test_volume_excess_bracket(self, record):
        c = record.claim("volume_excess")
        assert 1.5e-3 < c.value < 2.2e-3

    def test_quadratic_margin_shrinkage(self, record):
        assert 3.0 < record.claim("eps_scaling_curvature").value < 5.0

    def test_deterministic_rerun(self, record):
        again = injectivity_counterexample("I", "ngon:4", -1.0, 2, 0.1,
                                           quick=True, levels=(32, 40))
        for c1, c2 in zip(record.claims, again.claims):
            assert c1.value == pytest.approx(c2.value, abs=1e-10)

    def test_p_positive_flips_ordering(self):
        rec = injectivity_counterexample("I", "ngon:4", 1.0, 2, 0.1,
                                         quick=True, levels=(32, 40))
        assert rec.verdict == "pass"
        # for p > 0 the raw volume drops but -p V(K) still exceeds -p V(L)
        assert rec.claim("neg_p_volume_ordering").value > 0
        assert rec.claim("volume_excess").value < 0

    def test_body_without_vanishing_mode_rejected(self, tmp_path):
        # an ellipse-like body keeps every even circle mode, so the tested
        # perturbation is visible and no counterexample exists
        import json

        path = tmp_path / "ellipse.json"
        path.write_text(json.dumps(
            {"fourier": {"0": [1.0, 0.0], "2": [0.15, 0.0], "-2": [0.15, 0.0]}}))
        with pytest.raises(ValueError, match="injectivity set is everything"):
            injectivity_counterexample("I", f"support-samples:{path}", -1.0, 2, 0.1)


class TestInjectivityPi:
    @pytest.fixture(scope="class")
    def record(self):
        return injectivity_counterexample("Pi", "ngon:4", 1.0, 2, 0.1,
                                          quick=True, levels=(24, 32))

    def test_passes(self, record):
        assert record.verdict == "pass"

    def test_certified_margin(self, record):
        c = record.claim("certified_volume_margin")
        assert c.passed and c.value > 5 * c.error_bar

    def test_equality_slack(self, record):
        assert record.claim("pbody_equality_slack").value < 1e-6


class TestAdjointness:
    def test_square(self):
        rec = adjointness_suite("ngon:4", -1.0, trials=5, quick=True)
        assert rec.verdict == "pass"
        assert rec.claim("dual_adjointness_residual").value < 1e-5
        assert rec.claim("v1_adjointness_residual").value < 1e-4

    def test_disc(self):
        rec = adjointness_suite("disc", -1.0, trials=4, quick=True)
        assert rec.verdict == "pass"


class TestEmbeddingScan:
    def test_c2_family(self):
        expectations = {f"lq:{q:g}|p={p:g}": "embeds"
                        for q in (2.5, 4.0) for p in (-1.0, -0.5)}
        rec = embedding_scan(["lq:2.5", "lq:4"], [-1.0, -0.5], 2, kmax=12,
                             expectations=expectations)
        assert rec.verdict == "pass"
        for key, rep in rec.meta["reports"].items():
            assert rep["verdict"] == "embeds"
            assert rep["min"] > 0


class TestImageAbortPath:
    def test_c2_disc_aborts(self):
        # in two complex dimensions every invariant body embeds for p<0,
        # so the pipeline must abort with the embed report
        rec = image_counterexample("I", n=2, q=4.0, p=-1.0, kmax=12, nt=24,
                                   extra_bands=4, quick=True)
        assert rec.verdict == "aborted"
        assert not rec.claim("negativity_set_found").passed


class TestSearchAndSummary:
    def test_positive_p_search_reports_honestly(self):
        rec = positive_p_search(trials=1, kmax=8, p_list=(0.5,))
        assert rec.verdict == "pass"
        assert "counterexample_found" in rec.meta

    def test_bp_summary_assembly(self):
        mk = lambda rid, verdict: ExperimentRecord(
            rid, {}, {}, [Claim("x", 0.0, 0.0, verdict == "pass")], verdict, 0, 0.0)
        rows = bp_summary([
            mk("embed-scan-c2", "pass"),
            mk("img-I-c3", "pass"),
            mk("img-Pi-c3", "pass"),
            ExperimentRecord("bp-search-c2-ppos", {}, {},
                             [Claim("embed[lq:4|p=0.5]", -1.0, 0.1, True,
                                    note="verdict fails")],
                             "pass", 0, 0.0),
        ])
        d = {(op, n, ps): status for op, n, ps, status in rows}
        assert "affirmative" in d[("I(disc,p)", 2, "p<0")]
        assert d[("I(C,p)", 3, "p<0")] == "counterexample-found"
        assert d[("Pi(C)", 3, "p=1")] == "counterexample-found"
        assert d[("any", 2, "p>0")] == "counterexample-found"

    def test_bp_summary_missing_records(self):
        rows = bp_summary([])
        d = {(op, n, ps): status for op, n, ps, status in rows}
        assert "no record" in d[("I(C,p)", 3, "p<0")]


class TestRegistry:
    def test_ids_stable(self):
        ids = experiment_ids()
        for required in ("inj-I-square", "inj-Pi-square", "adjoint-square",
                         "embed-scan-c2", "embed-b4-c3", "img-I-c3",
                         "img-Pi-c3", "bp-search-c2-ppos"):
            assert required in ids

    def test_unknown_id(self):
        with pytest.raises(ValueError, match="unknown experiment"):
            run_experiment("nope")

    def test_run_and_persist(self, tmp_path):
        rec = run_experiment("inj-I-square", out_dir=str(tmp_path), quick=True)
        assert rec.verdict == "pass"
        assert (tmp_path / "inj-I-square.json").exists()
