"""Kernel and multiplier operators on the sphere, and the body maps.

The central object is the transform with kernel h_C(v . u)^p acting on
functions of v (here called the J transform, CLI kind "J").  On the
bi-degree block (k, l) it acts by the scalar

    lambda_{k,l} = alpha_{k,l}^{(n,p)} * (1/pi) * int_{S^1} h_C(c)^p c^(k-l) dc,

    alpha_{k,l}^{(n,p)} = pi^n G((p+k-l)/2+1) G((p-k+l)/2+1)
                          / (G((p+k+l)/2+n) G((p-k-l)/2+1)),

with G the Gamma function.  The circle-moment index is k - l in the
operational convention pi_{k,l}(T f) = lambda_{k,l} pi_{k,l} f used
throughout; the quadrature cross-checks in the tests pin this choice,
including for bodies C that are not conjugation-symmetric.

Two companions: the degree-q sphere Fourier multiplier ("F"),

    lambda_{k,l}[F_q] = (-1)^((k+l)/2) 2^(2n+q) pi^n G((k+l+q)/2+n) / G((k+l-q)/2)

on even blocks, and the circle-rotation average T_mu ("T") with
lambda_{k,l} = int c^(k-l) dmu.  The factorization

    (2 pi)^2 lambda[J_{C,p}] = lambda[F_{-2n-p}] * lambda[T_{nu_{C,p}}]

holds identically in the Gamma algebra, with nu_{C,p} the circle measure
whose coefficients are the degree-p circle Fourier multipliers applied to
h_C^p.  Note: the multiplier product forces F_{-2n-p} o F_p = (2 pi)^(2n)
times the identity; that constant is used everywhere here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .bodies import (
    CircleMeasure,
    PlanarBody,
    StarBody,
    SurfaceMeasureData,
    planar_fourier_coeffs,
    planar_surface_measure,
)
from .harmonics import (
    BandFunction,
    BiDegreeSpectrum,
    MultiplierTable,
    analyze,
    analyze_invariant,
    apply_multipliers,
    invariant_components_at,
    synthesize,
)
from .kernels import jquad_pairs, min_abs_hermitian_pair
from .specialfn import gamma_fn, harmonic_dim
from .spheregrid import (
    SimplexRule,
    SphereRule,
    disc_rule,
    funk_hecke_factor,
    gauss01,
    gauss_jacobi01,
    integrate,
    simplex_rule,
    sphere_rule,
    sphere_volume,
)

TWO_PI = 2.0 * math.pi

INVERSION_NOTE = ("composing the degree-(-2n-p) and degree-p sphere Fourier "
                  "multipliers gives (2*pi)^(2n) times the identity; the "
                  "closed-form multiplier product forces this constant "
                  "(not (2*pi)^n) and all tables here use it")


def _gamma_or_pole(x: float, k: int, l: int) -> float:
    try:
        return gamma_fn(x)
    except ValueError as exc:
        raise ValueError(f"Gamma pole at entry ({k}, {l}): {exc}") from exc


def alpha_coefficient(n: int, p: float, k: int, l: int) -> float:
    """The Gamma-ratio factor of the kernel-transform multipliers."""
    num = (_gamma_or_pole((p + k - l) / 2.0 + 1.0, k, l)
           * _gamma_or_pole((p - k + l) / 2.0 + 1.0, k, l))
    den = (_gamma_or_pole((p + k + l) / 2.0 + n, k, l)
           * _gamma_or_pole((p - k - l) / 2.0 + 1.0, k, l))
    return math.pi**n * num / den


def fourier_multiplier(n: int, q: float, k: int, l: int) -> float:
    """Sphere Fourier multiplier of degree q on the even block (k, l)."""
    d = k + l
    if d % 2 != 0:
        return 0.0
    sign = -1.0 if (d // 2) % 2 else 1.0
    num = _gamma_or_pole((d + q) / 2.0 + n, k, l)
    den = _gamma_or_pole((d - q) / 2.0, k, l)
    return sign * 2.0 ** (2 * n + q) * math.pi**n * num / den


def _check_p(p: float) -> None:
    if not (-2.0 < p <= 1.0) or p == 0.0:
        raise ValueError(f"kernel exponent must lie in (-2, 1] minus 0, got {p}")


def multiplier_table(kind: str, *, n: int, kmax: int, C: Optional[PlanarBody] = None,
                     p: Optional[float] = None, q: Optional[float] = None,
                     mu: Optional[CircleMeasure] = None) -> MultiplierTable:
    """Closed-form multiplier table of the requested kind (J | F | T)."""
    entries: dict = {}
    if kind == "J":
        _check_p(p)
        coeffs = planar_fourier_coeffs(C, p, 2 * kmax)
        mm = 2 * kmax
        for k in range(kmax + 1):
            for l in range(kmax + 1 - k):
                cm = coeffs[(k - l) + mm]
                if k == l:
                    entries[(k, l)] = 2.0 * coeffs[mm].real * alpha_coefficient(n, p, k, l)
                elif cm == 0:
                    entries[(k, l)] = 0.0
                else:
                    entries[(k, l)] = cm * alpha_coefficient(n, p, k, l)
        return MultiplierTable("J", n, kmax, entries, "closed-form",
                               {"C": C.label, "p": p})
    if kind == "F":
        if q is None or (q == int(q) and int(q) % 2 == 0):
            raise ValueError(f"Fourier degree must avoid even integers, got {q}")
        for k in range(kmax + 1):
            for l in range(kmax + 1 - k):
                entries[(k, l)] = fourier_multiplier(n, q, k, l)
        return MultiplierTable("F", n, kmax, entries, "closed-form", {"q": q})
    if kind == "T":
        for k in range(kmax + 1):
            for l in range(kmax + 1 - k):
                entries[(k, l)] = mu.moment(k - l)
        return MultiplierTable("T", n, kmax, entries, "closed-form",
                               {"mu": mu.label})
    raise ValueError(f"unknown multiplier kind {kind!r}")


def multiplier_table_J_quadrature(C: PlanarBody, p: float, n: int, kmax: int,
                                  nr: int = 64, per_arc: int = 48) -> MultiplierTable:
    """Kernel-transform multipliers by disc quadrature (independent route).

    lambda_{k,l} = (2 pi^(n-1)/(n-2)!) int_D h_C(z)^p disk_poly(n,k,l,z)
    (1-|z|^2)^(n-2) dA, with Gauss-Jacobi radial nodes absorbing |z|^p.
    """
    from .specialfn import disk_poly

    _check_p(p)
    rule = disc_rule(n - 2, singular_p=p, nr=nr,
                     angular=C.quadrature(per_arc=per_arc, m_smooth=256))
    hp = C.support_complex(rule.nodes)
    hp = np.where(np.abs(rule.nodes) > 0, hp, 1.0) ** p
    factor = funk_hecke_factor(n)
    entries = {}
    for k in range(kmax + 1):
        for l in range(kmax + 1 - k):
            vals = disk_poly(n, k, l, rule.nodes)
            entries[(k, l)] = factor * complex(np.sum(rule.weights * hp * vals))
    return MultiplierTable("J", n, kmax, entries, "quadrature",
                           {"C": C.label, "p": p})


# ---------------------------------------------------------------------------
# the circle measure nu_{C,p}


@dataclass
class NuMeasure:
    """Circle measure factorizing the kernel transform (coefficients exact).

    ``coeffs[m + mmax]`` holds c_m; the realized form is a density or an
    atom list depending on (C, p).  The sign law (-p) * nu >= 0 is
    verified on the realization at construction.
    """

    C_label: str
    p: float
    mmax: int
    coeffs: np.ndarray
    measure: CircleMeasure
    realization: str
    consistency: float = 0.0

    def coeff(self, m: int) -> complex:
        return self.coeffs[m + self.mmax]

    def total_mass(self) -> float:
        return TWO_PI * self.coeff(0).real

    def moment(self, m: int) -> complex:
        if abs(m) > self.mmax:
            raise ValueError(f"moment order {m} beyond stored mmax {self.mmax}")
        return self.coeff(m) * (TWO_PI if m == 0 else math.pi)


def circle_fourier_multiplier(p: float, m: int) -> float:
    """Degree-p Fourier multiplier on the circle (even orders m)."""
    if m % 2 != 0:
        return 0.0
    sign = -1.0 if (abs(m) // 2) % 2 else 1.0
    return (sign * 2.0 ** (2 + p) * math.pi
            * gamma_fn((abs(m) + p) / 2.0 + 1.0) / gamma_fn((abs(m) - p) / 2.0))


def nu_measure(C: PlanarBody, p: float, mmax: int = 48) -> NuMeasure:
    """The factorizing circle measure for (C, p), with realized form.

    Realizations: constant density for the disc; -2 pi times the surface
    measure of iC for p = 1; density 2 pi / h_{iC} for p = -1; otherwise
    a truncated Fourier density (provenance recorded).  The sign law and,
    where a special-case route exists, coefficient consistency are
    checked to 1e-8.
    """
    _check_p(p)
    hc = planar_fourier_coeffs(C, p, mmax)
    coeffs = np.zeros(2 * mmax + 1, dtype=np.complex128)
    for m in range(-mmax, mmax + 1):
        coeffs[m + mmax] = circle_fourier_multiplier(p, m) * hc[m + mmax]

    sign = 1.0 if p < 0 else -1.0  # sign of nu itself: -p nu >= 0
    iC = C.times_i()
    consistency = 0.0
    if p == 1.0:
        smeas = planar_surface_measure(iC)
        measure = smeas.scaled(-TWO_PI)
        realization = "surface-measure-of-iC"
    elif p == -1.0:
        from .spheregrid import circle_rule

        rule = iC.quadrature(per_arc=64, m_smooth=512)
        dens = TWO_PI / iC.support(rule.angles)
        measure = CircleMeasure.from_density(rule, dens, even=True,
                                             label=f"nu({C.label},-1)")
        realization = "polar-density-of-iC"
    else:
        measure = _fourier_density_measure(coeffs, mmax, f"nu({C.label},{p:g})")
        realization = "fourier-truncated"

    scale = max(abs(coeffs[mmax]), 1e-30)
    if realization != "fourier-truncated":
        for m in range(-mmax, mmax + 1, 2):
            diff = abs(measure.coeff(m) - coeffs[m + mmax])
            consistency = max(consistency, diff)
        if consistency > 1e-8 * scale:
            raise ValueError(
                f"nu realization disagrees with coefficient route by {consistency:.2e} "
                "(convention bug)")
    _check_nu_sign(measure, coeffs, mmax, p, scale)
    out = NuMeasure(C.label, p, mmax, coeffs, measure, realization, consistency)
    return out


def _fourier_density_measure(coeffs: np.ndarray, mmax: int, label: str) -> CircleMeasure:
    from .spheregrid import circle_rule

    rule = circle_rule(512)
    dens = np.full(rule.num_nodes, coeffs[mmax].real)
    for m in range(2, mmax + 1, 2):
        dens += (coeffs[m + mmax] / 2.0 * np.exp(-1j * m * rule.angles)
                 + coeffs[-m + mmax] / 2.0 * np.exp(1j * m * rule.angles)).real
    return CircleMeasure.from_density(rule, dens, even=True, label=label)


def _check_nu_sign(measure: CircleMeasure, coeffs: np.ndarray, mmax: int,
                   p: float, scale: float) -> None:
    tol = 1e-9 * scale * TWO_PI
    if measure.atom_weights.size:
        if np.min(-p * measure.atom_weights) < -tol:
            raise ValueError("sign law violated on atoms (convention bug)")
    if measure.density is not None and measure.rule is not None:
        if np.min(-p * measure.density) < -tol:
            # truncated densities may dip; fall through to the Fejer check
            if not _fejer_nonneg(coeffs, mmax, p, tol):
                raise ValueError("sign law violated by the density (convention bug)")
    elif not _fejer_nonneg(coeffs, mmax, p, tol):
        raise ValueError("sign law violated in the Fejer sense (convention bug)")


def _fejer_nonneg(coeffs: np.ndarray, mmax: int, p: float, tol: float) -> bool:
    theta = np.linspace(0.0, TWO_PI, 720, endpoint=False)
    vals = np.full_like(theta, (-p) * coeffs[mmax].real)
    for m in range(2, mmax + 1, 2):
        w = 1.0 - m / (mmax + 1.0)
        vals += w * (-p) * (coeffs[m + mmax] / 2.0 * np.exp(-1j * m * theta)
                            + coeffs[-m + mmax] / 2.0 * np.exp(1j * m * theta)).real
    return bool(np.min(vals) >= -tol)


# ---------------------------------------------------------------------------
# the transforms as point operators


def apply_T(f: Callable, mu: Union[CircleMeasure, NuMeasure],
            pts: np.ndarray) -> np.ndarray:
    """(T_mu f)(u) = int f(c u) dmu(c), at the given sphere points."""
    if isinstance(mu, NuMeasure):
        mu = mu.measure
    pts = np.atleast_2d(pts)
    out = np.zeros(pts.shape[0], dtype=np.complex128)
    for ang, w in zip(mu.atom_angles, mu.atom_weights):
        out += w * np.asarray(f(np.exp(1j * ang) * pts))
    if mu.density is not None:
        for ang, w, g in zip(mu.rule.angles, mu.rule.weights, mu.density):
            out += (w * g) * np.asarray(f(np.exp(1j * ang) * pts))
    if np.max(np.abs(out.imag)) <= 1e-12 * max(1.0, float(np.max(np.abs(out)))):
        return out.real
    return out


def _unitary_frame(u: np.ndarray) -> np.ndarray:
    """A unitary with first column u (deterministic Gram-Schmidt)."""
    n = u.shape[0]
    cols = [u]
    for j in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[j] = 1.0
        v = e
        for c in cols:
            v = v - np.vdot(c, v) * c
        nv = np.linalg.norm(v)
        if nv > 1e-7:
            cols.append(v / nv)
        if len(cols) == n:
            break
    return np.column_stack(cols)


def _frame_rule(C: PlanarBody, n: int, p: float, nt: int, nphase: int):
    """Kernel-adapted local rule: nodes v' with v'.e1 = sqrt(t) e^(i phi1).

    Returns (local nodes (N, n), weights W, first-phase angles).  The
    Gauss-Jacobi radial weights already contain the kernel's t^(p/2)
    factor, and the first-phase grid follows the support function's
    corner structure (arc-Gauss for polygons), so
    sum_j W_j h_C(phi1_j)^p f(v_j) integrates h_C(v.e1)^p f(v) at full
    order with no singular evaluations.
    """
    crule = C.quadrature(per_arc=max(24, nphase // 2), m_smooth=nphase)
    a1 = crule.angles
    w1 = crule.weights / TWO_PI  # probability weights for the phi1 average
    m1 = a1.shape[0]
    phases = TWO_PI * np.arange(nphase) / nphase
    if n == 2:
        t, wt = gauss_jacobi01(nt, 0.0, p / 2.0)
        p1, p2 = np.meshgrid(a1, phases, indexing="ij")
        w12 = np.outer(w1, np.full(nphase, 1.0 / nphase)).ravel()
        m12 = m1 * nphase
        tt = np.repeat(t, m12)
        phi1 = np.tile(p1.ravel(), nt)
        phi2 = np.tile(p2.ravel(), nt)
        nodes = np.column_stack([
            np.sqrt(tt) * np.exp(1j * phi1),
            np.sqrt(1.0 - tt) * np.exp(1j * phi2),
        ])
        w = sphere_volume(2) * np.repeat(wt, m12) * np.tile(w12, nt)
        return nodes, w, phi1
    t, wt = gauss_jacobi01(nt, 1.0, p / 2.0)
    wt = 2.0 * wt  # marginal density of |v_1|^2 on S^5 is 2(1-t)
    s, ws = gauss01(nt)
    p1, p2, p3 = np.meshgrid(a1, phases, phases, indexing="ij")
    w123 = (w1[:, None, None] / nphase**2
            * np.ones((1, nphase, nphase))).ravel()
    blocks, wblocks, phiblocks = [], [], []
    for ti, wi in zip(t, wt):
        for sj, wj in zip(s, ws):
            blocks.append(np.column_stack([
                math.sqrt(ti) * np.exp(1j * p1.ravel()),
                math.sqrt((1 - ti) * sj) * np.exp(1j * p2.ravel()),
                math.sqrt((1 - ti) * (1 - sj)) * np.exp(1j * p3.ravel()),
            ]))
            wblocks.append(sphere_volume(3) * wi * wj * w123)
            phiblocks.append(p1.ravel())
    return np.concatenate(blocks), np.concatenate(wblocks), np.concatenate(phiblocks)


def apply_J_quadrature(C: PlanarBody, p: float, f: Union[Callable, np.ndarray],
                       out_points: np.ndarray, n: int,
                       method: str = "auto",
                       rule: Optional[SphereRule] = None,
                       nt: int = 32, nphase: int = 64,
                       report: Optional[dict] = None) -> np.ndarray:
    """(J_{C,p} f)(u) = int h_C(v . u)^p f(v) dv at the given points.

    ``frame`` (default for callable f): per output point, integrate in a
    unitary frame aligned with u; Gauss-Jacobi radial nodes absorb the
    |z|^p kernel singularity exactly, so p < 0 costs no accuracy.
    ``grid``: raw sphere-rule sums for sampled f; kernel singularities
    near grid nodes are detected and the points jittered (reported).
    """
    _check_p(p)
    out_points = np.atleast_2d(out_points)
    if method == "auto":
        method = "frame" if callable(f) else "grid"
    if method == "frame":
        if not callable(f):
            raise ValueError("frame quadrature needs a callable integrand")
        nodes, w, phi1 = _frame_rule(C, n, p, nt, nphase)
        kern = w * C.support(phi1) ** p
        out = np.empty(out_points.shape[0], dtype=np.complex128)
        for i, u in enumerate(out_points):
            U = _unitary_frame(u)
            vals = np.asarray(f(nodes @ U.T))
            out[i] = np.sum(kern * vals)
        if np.max(np.abs(out.imag)) <= 1e-10 * max(1.0, float(np.max(np.abs(out)))):
            return out.real
        return out
    if method == "grid":
        rule = rule or sphere_rule(n)
        nodes, w = rule.materialize()
        fv = np.asarray(f(nodes) if callable(f) else f, dtype=np.float64)
        pts = out_points
        if p < 0:
            gap = min_abs_hermitian_pair(pts, nodes)
            if gap < 1e-8:
                pts = pts @ _jitter_unitary(n).T
                warnings.warn("kernel singularity met a grid node; output "
                              "points jittered by ~1e-7")
                if report is not None:
                    report["jittered"] = True
        if C.kind not in ("ngon", "disc"):
            raise ValueError("grid route supports disc and polygon bodies")
        verts = C.vertices if C.kind == "ngon" else None
        return jquad_pairs(pts, nodes, w, fv, p, verts)
    raise ValueError(f"unknown method {method!r}")


def _jitter_unitary(n: int) -> np.ndarray:
    th = 1e-7
    U = np.eye(n, dtype=np.complex128)
    U[0, 0] = U[1, 1] = math.cos(th)
    U[0, 1] = -math.sin(th)
    U[1, 0] = math.sin(th)
    return U


# ---------------------------------------------------------------------------
# body operators


def _profile_band(K: StarBody, power: float) -> Optional[BandFunction]:
    """Exact band profile of rho_K^power, when the construction carries one."""
    prov = K.provenance
    if prov.get("kind") == "perturb" and abs(prov["power"] - power) < 1e-12:
        base = prov["base"]
        if base.label == "ball" and isinstance(prov["Y"], BandFunction):
            bf = BandFunction(K.n, 1.0)
            for amp, k, l, pole in prov["Y"].terms:
                bf.add_zonal(prov["eps"] * amp, k, l, pole)
            return bf
    if prov.get("kind") == "band-profile" and abs(prov["power"] - power) < 1e-12:
        return prov["profile"]
    if K.label == "ball":
        return BandFunction(K.n, 1.0)
    return None


def intersection_body(C: PlanarBody, p: float, K: StarBody,
                      route: str = "spectral", kmax: int = 16,
                      simp: Optional[SimplexRule] = None,
                      rule: Optional[SphereRule] = None) -> StarBody:
    """The p-kernel intersection-type body: rho^(-p) = J_{C,p} rho_K^(2n+p) / (2n+p).

    The spectral route applies the multiplier table to the profile
    rho_K^(2n+p) (exact for band-limited constructions, residual-checked
    otherwise); the quadrature route integrates the kernel directly and
    is used as a cross-check.
    """
    _check_p(p)
    n = K.n
    power = 2 * n + p
    table = multiplier_table("J", n=n, kmax=kmax, C=C, p=p)

    if route == "quadrature":
        def rho_neg_p_q(pts):
            vals = apply_J_quadrature(C, p, lambda v: K.rho(v) ** power,
                                      pts, n) / power
            return np.asarray(vals, dtype=np.float64)
        return _body_from_rho_neg_p(K, C, p, rho_neg_p_q, route)

    band = _profile_band(K, power)
    if band is not None:
        gfun = band.apply_table(table).scale(1.0 / power)

        def rho_neg_p(pts):
            return np.real(gfun(pts))

        body = _body_from_rho_neg_p(K, C, p, rho_neg_p, "spectral")
        body.provenance["rho_neg_p_band"] = gfun
        return body
    if K.torus_invariant:
        simp = simp or simplex_rule(n, 32 if n == 2 else 24)
        spec = analyze_invariant(lambda t: K.rho_simplex(t) ** power, n, kmax, simp)
        out_spec = apply_multipliers(spec, table)
        from .harmonics import invariant_interpolator

        interp = invariant_interpolator(out_spec)

        def rho_neg_p(pts):
            return interp(np.abs(np.atleast_2d(pts)) ** 2) / power

        body = _body_from_rho_neg_p(K, C, p, rho_neg_p, "spectral")
        body.provenance["profile_spectrum"] = spec
        body.provenance["residual_sup"] = spec.residual_sup()
        return body
    if n != 2:
        raise ValueError("general (non-invariant) bodies need n = 2 grids")
    rule = rule or sphere_rule(2, (24, 2 * kmax + 4))
    spec = analyze(lambda v: K.rho(v) ** power, kmax, rule)
    out_spec = apply_multipliers(spec, table)
    vals = np.real(synthesize(out_spec)) / power
    nodes, _ = rule.materialize()

    from .harmonics import zonal_matrix

    def rho_neg_p(pts):
        pts2 = np.atleast_2d(pts)
        out = np.zeros(pts2.shape[0], dtype=np.complex128)
        for (k, l), comp in out_spec.components.items():
            kern = zonal_matrix(pts2, nodes, 2, k, l)
            out += harmonic_dim(2, k, l) / rule.volume * (kern @ (rule.weights * comp))
        return np.real(out) / power

    body = _body_from_rho_neg_p(K, C, p, rho_neg_p, "spectral")
    body.provenance["residual_sup"] = spec.residual_sup()
    return body


def _body_from_rho_neg_p(K: StarBody, C: PlanarBody, p: float,
                         rho_neg_p: Callable, route: str) -> StarBody:
    from .bodies import _probe_points

    probe = _probe_points(K.n, 1024)
    vals = np.asarray(rho_neg_p(probe))
    if np.min(vals) <= 0:
        raise ValueError("non-positive transform output; not a star body")

    def radial(pts):
        return np.asarray(rho_neg_p(pts)) ** (-1.0 / p)

    return StarBody(K.n, radial, f"I({C.label},{p:g})[{K.label}]",
                    K.origin_symmetric, K.s1_invariant, K.torus_invariant,
                    provenance={"kind": "intersection", "C": C.label, "p": p,
                                "base": K, "route": route,
                                "rho_neg_p": rho_neg_p})


def projection_body(C: PlanarBody, SK: SurfaceMeasureData,
                    out_points: np.ndarray, route: str = "quadrature",
                    kmax: int = 16) -> np.ndarray:
    """Support values of the projection-type body: h(u) = (1/2) int h_C(v.u) dS_K(v).

    The Fourier route filters the measure through the multiplier
    factorization (for band-limited densities); the quadrature route sums
    kernel values directly against the density and atoms.
    """
    SK.validate()
    n = SK.n
    out_points = np.atleast_2d(out_points)
    if route == "quadrature":
        out = np.zeros(out_points.shape[0])
        if SK.atom_points is not None and SK.atom_weights is not None:
            z = SK.atom_points @ out_points.conj().T  # (A, P) v . u pairs
            out += 0.5 * np.einsum("a,ap->p", SK.atom_weights, C.support_complex(z))
        if SK.density is not None or SK.density_fn is not None:
            if SK.density_fn is not None:
                vals = apply_J_quadrature(C, 1.0, SK.density_fn, out_points, n)
            elif SK.domain == "simplex":
                spec = analyze_invariant(SK.density, n, kmax, SK.rule)

                def dens_fn(v):
                    comps = invariant_components_at(spec, np.abs(np.atleast_2d(v)) ** 2)
                    return np.real(sum(comps.values()))

                vals = apply_J_quadrature(C, 1.0, dens_fn, out_points, n)
            else:
                nodes, w = SK.rule.materialize()
                verts = C.vertices if C.kind == "ngon" else None
                if C.kind not in ("ngon", "disc"):
                    raise ValueError("quadrature route supports disc/polygon bodies")
                vals = jquad_pairs(out_points, nodes, w, SK.density, 1.0, verts)
            out += 0.5 * np.asarray(vals)
        return out
    if route == "fourier":
        if SK.density is None:
            raise ValueError("fourier route needs a density")
        t_table = multiplier_table("T", n=n, kmax=kmax,
                                   mu=planar_surface_measure(C.times_i()))
        f_table = multiplier_table("F", n=n, kmax=kmax, q=-2.0 * n - 1.0)
        if SK.domain == "simplex":
            spec = analyze_invariant(SK.density, n, kmax, SK.rule)
            spec = apply_multipliers(apply_multipliers(spec, f_table), t_table)
            comps = invariant_components_at(spec, np.abs(out_points) ** 2)
            return -np.real(sum(comps.values())) / (4.0 * math.pi)
        spec = analyze(SK.density, kmax, SK.rule)
        spec = apply_multipliers(apply_multipliers(spec, f_table), t_table)
        from .harmonics import zonal_matrix

        nodes, w = SK.rule.materialize()
        out = np.zeros(out_points.shape[0], dtype=np.complex128)
        for (k, l), comp in spec.components.items():
            kern = zonal_matrix(out_points, nodes, n, k, l)
            out += harmonic_dim(n, k, l) / SK.rule.volume * (kern @ (w * comp))
        return -np.real(out) / (4.0 * math.pi)
    raise ValueError(f"unknown route {route!r}")


def centroid_body(C: PlanarBody, K: StarBody, out_points: np.ndarray) -> np.ndarray:
    """Support values of the centroid-type body of K (volume-normalized).

    h(u) = V(K)^(-1) (1/(2n+1)) int h_C(v . u) rho_K(v)^(2n+1) dv.
    """
    from .geometry import volume

    n = K.n
    vol_k = volume(K)
    vals = apply_J_quadrature(C, 1.0, lambda v: K.rho(v) ** (2 * n + 1),
                              np.atleast_2d(out_points), n)
    return np.real(vals) / ((2 * n + 1) * vol_k)


# ---------------------------------------------------------------------------
# embedding test


@dataclass
class EmbedReport:
    """Outcome of the distributional positivity test for embedding into L_p."""

    body: str
    n: int
    p: float
    minimum: float
    error_bar: float
    witness: Optional[np.ndarray]
    verdict: str  # embeds | fails | inconclusive
    kmax: int
    residual_sup: float
    meta: dict = field(default_factory=dict)


def embed_test(K: StarBody, p: float, kmax: int = 16,
               simp: Optional[SimplexRule] = None,
               rule: Optional[SphereRule] = None,
               eval_points: int = 600, safety: float = 5.0,
               extra_bands: int = 4) -> EmbedReport:
    """Positivity of the scaled degree-p Fourier functional of rho_K^(-p).

    Analyze rho^(-p) through kmax plus ``extra_bands`` guard bands, apply
    the degree-p multipliers, synthesize, scale by 1/Gamma(-p/2) and
    minimize over an evaluation grid.  The error bar bounds the truncated
    tail by the measured geometric decay of the band sup-norms times the
    (polynomially growing) multipliers; the verdict is ``fails`` only
    when the minimum clears the bar by the safety factor.  Positivity at
    finite resolution can only be falsified, never confirmed, so
    ``embeds`` still carries the bar.
    """
    n = K.n
    if not K.origin_symmetric:
        raise ValueError("embedding test needs an origin-symmetric body")
    if p == 0.0 or p <= -2 * n or (p > 0 and p == int(p) and int(p) % 2 == 0):
        raise ValueError(f"embedding exponent {p} outside the admissible set")
    gamma_scale = gamma_fn(-p / 2.0)
    kmax_ext = kmax + 2 * extra_bands
    f_table = multiplier_table("F", n=n, kmax=kmax_ext, q=p)

    if K.torus_invariant:
        simp = simp or simplex_rule(n, 48 if n == 2 else 24)
        spec = analyze_invariant(lambda t: K.rho_simplex(t) ** (-p), n, kmax_ext, simp)
        out_spec = apply_multipliers(spec, f_table)
        grid = _simplex_eval_grid(n, eval_points)
        comps = invariant_components_at(out_spec, grid,
                                        cache_key=("embed-eval", eval_points))
        vals = np.real(sum(comps.values())) / gamma_scale
        band_sup = {k: float(np.max(np.abs(spec.component(k, k))))
                    for k, _ in spec.components}
        residual = spec.residual_sup()
        j = int(np.argmin(vals))
        witness = grid[j]
    else:
        if n != 2:
            raise ValueError("non-invariant embedding tests need n = 2 grids")
        rule = rule or sphere_rule(2, (24, 2 * kmax_ext + 4))
        spec = analyze(lambda v: K.rho(v) ** (-p), kmax_ext, rule)
        out_spec = apply_multipliers(spec, f_table)
        vals = np.real(synthesize(out_spec)) / gamma_scale
        band = {}
        for (k, l), comp in spec.components.items():
            d = k + l
            band[d] = max(band.get(d, 0.0), float(np.max(np.abs(comp))))
        band_sup = {d // 2: v for d, v in band.items() if d % 2 == 0}
        residual = spec.residual_sup()
        nodes, _ = rule.materialize()
        j = int(np.argmin(vals))
        witness = nodes[j]

    bar = _tail_bar(n, p, kmax_ext // 2, band_sup, residual) / abs(gamma_scale)
    minimum = float(np.min(vals))
    if minimum < -safety * bar:
        verdict = "fails"
    elif minimum >= -bar:
        verdict = "embeds"
    else:
        verdict = "inconclusive"
    return EmbedReport(K.label, n, p, minimum, bar, witness, verdict, kmax_ext,
                       residual, {"gamma_scale": gamma_scale,
                                  "band_sup": band_sup})


def _tail_bar(n: int, p: float, kedge: int, band_sup: dict,
              residual: float) -> float:
    """Tail bound |sum_{k > kedge} lambda_k pi_k f| from measured decay.

    Band sup-norms of analytic profiles decay geometrically; the ratio is
    measured on the last computed bands (capped at 0.9) and the
    polynomial multiplier growth is folded in.  Falls back to a crude
    residual-times-multiplier bound when no decay is measurable.
    """
    lam = {k: abs(fourier_multiplier(n, p, k, k)) for k in range(kedge, kedge + 8)}
    sups = [band_sup.get(k, 0.0) for k in sorted(band_sup)]
    tail_amp = max(band_sup.get(kedge, 0.0), 1e-300)
    ratios = []
    for k in range(max(1, kedge - 3), kedge + 1):
        lo, hi = band_sup.get(k - 1, 0.0), band_sup.get(k, 0.0)
        if lo > 0 and hi > 0:
            ratios.append(hi / lo)
    r = min(max(ratios) if ratios else 0.9, 0.9)
    g = lam[kedge + 1] / max(lam[kedge], 1e-300)
    rg = min(r * g, 0.95)
    tail = lam[kedge + 1] * tail_amp * r / (1.0 - rg)
    crude = 3.0 * residual * lam[kedge + 1]
    dust = 1e-10 * lam[kedge] * max(sups, default=1.0)
    return max(tail, min(crude, 10 * tail) if residual > 0 else 0.0) + dust


def _simplex_eval_grid(n: int, count: int) -> np.ndarray:
    """Deterministic interior evaluation grid on the simplex."""
    if n == 2:
        t = np.linspace(0.001, 0.999, count)
        return np.column_stack([t, 1.0 - t])
    m = max(4, int(math.sqrt(2 * count)))
    pts = []
    for i in range(1, m):
        for j in range(1, m - i):
            t1 = i / m
            t2 = j / m
            pts.append([t1, t2, 1.0 - t1 - t2])
    return np.asarray(pts)


# ---------------------------------------------------------------------------
# identity checks used by tests and the acceptance suite


def theorem_b_residual(C: PlanarBody, p: float, n: int, kmax: int) -> float:
    """Worst relative defect of (2 pi)^2 lambda[J] = lambda[F_{-2n-p}] lambda[T_nu]."""
    jt = multiplier_table("J", n=n, kmax=kmax, C=C, p=p)
    ft = multiplier_table("F", n=n, kmax=kmax, q=-2.0 * n - p)
    nu = nu_measure(C, p, mmax=2 * kmax)
    worst = 0.0
    for k in range(kmax + 1):
        for l in range(kmax + 1 - k):
            if (k + l) % 2 != 0:
                continue
            lhs = (TWO_PI**2) * jt.get(k, l)
            rhs = ft.get(k, l) * nu.moment(k - l)
            scale = max(abs(lhs), abs(rhs), 1e-30)
            if abs(lhs) < 1e-300 and abs(rhs) < 1e-300:
                continue
            worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def fourier_inversion_residual(n: int, p: float, kmax: int) -> float:
    """Defect of lambda[F_{-2n-p}] lambda[F_p] = (2 pi)^(2n) on even blocks."""
    fa = multiplier_table("F", n=n, kmax=kmax, q=p)
    fb = multiplier_table("F", n=n, kmax=kmax, q=-2.0 * n - p)
    target = TWO_PI ** (2 * n)
    worst = 0.0
    for k in range(kmax + 1):
        for l in range(kmax + 1 - k):
            if (k + l) % 2 != 0:
                continue
            worst = max(worst, abs(fa.get(k, l) * fb.get(k, l) - target) / target)
    return worst
