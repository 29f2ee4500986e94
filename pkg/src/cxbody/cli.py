"""cxbody command line: tables, body operators, volumes, experiments.

Exit codes: 0 all requested checks pass, 2 inconclusive, 1 runtime error,
64 usage.  Artifacts are canonical JSON (sorted keys, 17-digit floats);
an identical configuration and seed reproduces them byte-for-byte apart
from the timestamp/runtime lines, independent of ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import backend
from .io import (
    dumps_canonical,
    parse_config,
    parse_grid_spec,
    record_to_dict,
    write_artifact,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64


def _emit(payload: dict, out: str | None) -> None:
    if out:
        write_artifact(out, payload)
    else:
        sys.stdout.write(dumps_canonical(payload) + "\n")


def _probe_points(n: int, count: int, seed: int = 2024) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _surface_measure_from_spec(spec: str, n: int, rule):
    from .bodies import SurfaceMeasureData, named_harmonic

    if spec == "uniform":
        return SurfaceMeasureData(
            n, "sphere", rule, np.ones(rule.num_nodes),
            density_fn=lambda v: np.ones(np.atleast_2d(v).shape[0]),
            label="uniform")
    if spec.startswith("band:"):
        kv = dict(item.split("=") for item in spec.split(":", 1)[1].split(","))
        Y = named_harmonic(kv.get("harm", "re_z1sq"), n)
        eps = float(kv.get("eps", "0.1"))
        nodes, _ = rule.materialize()
        dens = 1.0 + eps * np.real(Y(nodes))
        return SurfaceMeasureData(
            n, "sphere", rule, dens,
            density_fn=lambda v: 1.0 + eps * np.real(Y(np.atleast_2d(v))),
            label=spec)
    raise ValueError(f"unknown surface-measure spec {spec!r}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cxbody", description=__doc__)
    ap.add_argument("--config", help="key=value config file (flags override)")
    ap.add_argument("--threads", type=int, default=None,
                    help="numba thread count (or CXBODY_THREADS)")
    sub = ap.add_subparsers(dest="verb")

    def common(p, body_k=False, planar=False, grid=False):
        p.add_argument("--out", help="artifact path (default: stdout)")
        p.add_argument("--n", type=int, default=2)
        if planar:
            p.add_argument("--C", default="disc", help="planar body spec")
        if body_k:
            p.add_argument("--K", default="ball", help="star body spec")
        if grid:
            p.add_argument("--grid", help="grid spec, e.g. s3:48x64x64")

    p = sub.add_parser("multipliers", help="closed-form multiplier tables")
    common(p, planar=True)
    p.add_argument("--kind", choices=["J", "F", "T"], required=True)
    p.add_argument("--p", type=float, default=-1.0)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--kmax", type=int, default=16)

    p = sub.add_parser("nu", help="the factorizing circle measure")
    common(p, planar=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--mmax", type=int, default=48)

    p = sub.add_parser("ibody", help="intersection-type body")
    common(p, body_k=True, planar=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--points", type=int, default=8)

    p = sub.add_parser("pbody", help="projection-type body")
    common(p, planar=True, grid=True)
    p.add_argument("--SK", default="uniform", help="surface measure spec")
    p.add_argument("--points", type=int, default=8)

    p = sub.add_parser("cbody", help="centroid-type body")
    common(p, body_k=True, planar=True)
    p.add_argument("--points", type=int, default=8)

    p = sub.add_parser("embed", help="embedding test")
    common(p, body_k=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--kmax", type=int, default=16)
    p.add_argument("--extra-bands", type=int, default=4)

    p = sub.add_parser("vol", help="star-body volume")
    common(p, body_k=True)

    p = sub.add_parser("dmv", help="dual mixed volume")
    common(p, body_k=True)
    p.add_argument("--L", default="ball")
    p.add_argument("--p", type=float, required=True)

    p = sub.add_parser("ineq", help="inequality check")
    common(p, body_k=True)
    p.add_argument("--kind", default="dual-Lp-Minkowski",
                   choices=["dual-Lp-Minkowski"])
    p.add_argument("--L", default="ball")
    p.add_argument("--p", type=float, required=True)

    p = sub.add_parser("exp", help="experiment pipelines")
    p.add_argument("action", choices=["run", "list"])
    p.add_argument("ids", nargs="*", help="experiment ids or 'all'")
    p.add_argument("--out", default="runs")
    p.add_argument("--quick", action="store_true",
                   help="reduced grids (recorded in the artifact)")

    p = sub.add_parser("summary", help="answer matrix from recorded runs")
    p.add_argument("--runs", default="runs")
    p.add_argument("--out", help="CSV path (default: stdout)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.verb is None:
        ap.print_usage()
        return EXIT_USAGE

    cfg = parse_config(args.config) if args.config else {}
    threads = args.threads or int(os.environ.get("CXBODY_THREADS", "0") or 0)
    if threads:
        backend.set_threads(threads)

    try:
        return _dispatch(args, cfg)
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


def _grid_levels(args, cfg, default=None):
    spec = getattr(args, "grid", None) or cfg.get("grid")
    if not spec:
        return default
    kind, n, levels = parse_grid_spec(spec)
    return levels


def _dispatch(args, cfg) -> int:
    from .bodies import make_planar_body, make_star_body
    from .geometry import dual_mixed_volume, verify_inequality, volume
    from .operators import (
        INVERSION_NOTE,
        centroid_body,
        embed_test,
        intersection_body,
        multiplier_table,
        nu_measure,
        projection_body,
    )
    from .spheregrid import sphere_rule

    if args.verb == "multipliers":
        C = make_planar_body(args.C)
        if args.kind == "J":
            table = multiplier_table("J", n=args.n, kmax=args.kmax, C=C, p=args.p)
        elif args.kind == "F":
            q = args.q if args.q is not None else -2.0 * args.n - args.p
            table = multiplier_table("F", n=args.n, kmax=args.kmax, q=q)
        else:
            table = multiplier_table("T", n=args.n, kmax=args.kmax,
                                     mu=nu_measure(C, args.p).measure)
        entries = {f"{k},{l}": v for (k, l), v in sorted(table.entries.items())}
        _emit({"inputs": {"kind": args.kind, "C": args.C, "p": args.p,
                          "n": args.n, "kmax": args.kmax},
               "values": entries, "provenance": table.provenance,
               "notes": INVERSION_NOTE if args.kind == "F" else ""},
              args.out)
        return EXIT_OK

    if args.verb == "nu":
        C = make_planar_body(args.C)
        nu = nu_measure(C, args.p, mmax=args.mmax)
        coeffs = {str(m): nu.coeff(m) for m in range(-args.mmax, args.mmax + 1)
                  if m % 2 == 0}
        _emit({"inputs": {"C": args.C, "p": args.p, "mmax": args.mmax},
               "values": {"coefficients": coeffs,
                          "total_mass": nu.total_mass(),
                          "atoms_angles": nu.measure.atom_angles,
                          "atoms_weights": nu.measure.atom_weights},
               "provenance": nu.realization,
               "error-bars": {"consistency": nu.consistency}}, args.out)
        return EXIT_OK

    if args.verb == "ibody":
        C = make_planar_body(args.C)
        K = make_star_body(args.K, args.n)
        body = intersection_body(C, args.p, K, kmax=args.kmax)
        pts = _probe_points(args.n, args.points)
        _emit({"inputs": {"C": args.C, "K": args.K, "p": args.p, "n": args.n},
               "grid-id": f"kmax={args.kmax}",
               "values": {"radial": body.rho(pts),
                          "directions_re": pts.real, "directions_im": pts.imag},
               "provenance": body.provenance.get("route", "spectral")}, args.out)
        return EXIT_OK

    if args.verb == "pbody":
        C = make_planar_body(args.C)
        levels = _grid_levels(args, cfg, (24, 32))
        rule = sphere_rule(args.n, levels)
        SK = _surface_measure_from_spec(args.SK, args.n, rule)
        pts = _probe_points(args.n, args.points)
        h = projection_body(C, SK, pts)
        _emit({"inputs": {"C": args.C, "SK": args.SK, "n": args.n},
               "grid-id": rule.rule_id,
               "values": {"support": h, "directions_re": pts.real,
                          "directions_im": pts.imag},
               "provenance": "kernel-quadrature"}, args.out)
        return EXIT_OK

    if args.verb == "cbody":
        C = make_planar_body(args.C)
        K = make_star_body(args.K, args.n)
        pts = _probe_points(args.n, args.points)
        h = centroid_body(C, K, pts)
        _emit({"inputs": {"C": args.C, "K": args.K, "n": args.n},
               "values": {"support": h, "directions_re": pts.real,
                          "directions_im": pts.imag},
               "provenance": "kernel-quadrature"}, args.out)
        return EXIT_OK

    if args.verb == "embed":
        K = make_star_body(args.K, args.n)
        rep = embed_test(K, args.p, kmax=args.kmax, extra_bands=args.extra_bands)
        _emit({"inputs": {"K": args.K, "p": args.p, "n": args.n,
                          "kmax": rep.kmax},
               "values": {"minimum": rep.minimum, "verdict": rep.verdict,
                          "residual_sup": rep.residual_sup},
               "error-bars": {"truncation": rep.error_bar},
               "provenance": "band-limited multiplier synthesis"}, args.out)
        return EXIT_INCONCLUSIVE if rep.verdict == "inconclusive" else EXIT_OK

    if args.verb == "vol":
        K = make_star_body(args.K, args.n)
        _emit({"inputs": {"K": args.K, "n": args.n},
               "values": {"volume": volume(K)}}, args.out)
        return EXIT_OK

    if args.verb == "dmv":
        K = make_star_body(args.K, args.n)
        L = make_star_body(args.L, args.n)
        _emit({"inputs": {"K": args.K, "L": args.L, "p": args.p, "n": args.n},
               "values": {"dual_mixed_volume": dual_mixed_volume(args.p, K, L)}},
              args.out)
        return EXIT_OK

    if args.verb == "ineq":
        K = make_star_body(args.K, args.n)
        L = make_star_body(args.L, args.n)
        rep = verify_inequality(args.kind, p=args.p, K=K, L=L)
        _emit({"inputs": {"kind": args.kind, "K": args.K, "L": args.L,
                          "p": args.p, "n": args.n},
               "values": {"lhs": rep.lhs, "rhs": rep.rhs, "margin": rep.margin,
                          "dilate_residual": rep.equality_diagnostic},
               "provenance": "quadrature"}, args.out)
        return EXIT_OK if rep.holds(1e-9 * (abs(rep.rhs) + abs(rep.lhs))) else EXIT_ERROR

    if args.verb == "exp":
        from .experiments import experiment_ids, run_experiment

        if args.action == "list":
            sys.stdout.write("\n".join(experiment_ids()) + "\n")
            return EXIT_OK
        ids = args.ids or []
        if not ids:
            sys.stderr.write("exp run needs ids or 'all'\n")
            return EXIT_USAGE
        if ids == ["all"]:
            ids = experiment_ids()
        worst = EXIT_OK
        for exp_id in ids:
            rec = run_experiment(exp_id, out_dir=args.out, quick=args.quick)
            sys.stdout.write(f"{rec.id}: {rec.verdict} "
                             f"({len(rec.claims)} claims, {rec.runtime_s:.1f}s)\n")
            if rec.verdict == "aborted":
                worst = max(worst, EXIT_INCONCLUSIVE)
            elif rec.verdict != "pass":
                worst = max(worst, EXIT_ERROR)
        return worst

    if args.verb == "summary":
        import glob

        from .experiments import Claim, ExperimentRecord, bp_summary

        records = []
        for path in sorted(glob.glob(os.path.join(args.runs, "*.json"))):
            with open(path) as fh:
                doc = json.load(fh)
            claims = [Claim(**c) for c in doc["claims"]]
            records.append(ExperimentRecord(
                doc["id"], doc["inputs"], doc["grids"], claims, doc["verdict"],
                doc["seed"], doc["runtime_s"], doc.get("meta", {})))
        rows = bp_summary(records)
        lines = ["operator,n,p_sign,status"]
        lines += [f"{op},{n},{ps},{status}" for op, n, ps, status in rows]
        text = "\n".join(lines) + "\n"
        if args.out:
            os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
