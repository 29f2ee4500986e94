"""Body representations: planar convex bodies, star bodies in C^n, measures.

The planar body C enters every kernel through its support function on the
circle; star/convex bodies in C^n enter through radial or support
functions plus (for the projection-body side) surface-area measures.
Surface measures are first-class data here: bodies consumed by the
projection operator may exist only through Minkowski's existence theorem,
so the measure, not the body, is what the pipelines manipulate.

Convexity of perturbed bodies is certified only by sampling (a necessary
condition); reports say "sampled-convex" and carry the worst witness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .harmonics import (
    BandFunction,
    BiDegreeSpectrum,
    analyze,
    analyze_invariant,
    invariant_components_at,
    rule_from_id,
)
from .spheregrid import (
    CircleRule,
    SimplexRule,
    SphereRule,
    arc_gauss_rule,
    circle_rule,
    integrate,
    simplex_rule,
    sphere_rule,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# planar bodies


@dataclass
class PlanarBody:
    """Origin-symmetric convex body in the complex plane, via its support.

    ``symmetry_order`` is the largest s with h(e^(2 pi i / s) c) = h(c);
    0 encodes full rotation invariance (the disc).  ``kinks`` lists the
    support-function corner angles (polygons), used to build quadrature
    that keeps spectral accuracy.
    """

    kind: str
    support_fn: Callable[[np.ndarray], np.ndarray]
    label: str
    symmetry_order: int
    vertices: Optional[np.ndarray] = None
    kinks: Optional[np.ndarray] = None
    rotation: float = 0.0
    conjugated: bool = False

    def support(self, theta) -> np.ndarray:
        return self.support_fn(np.asarray(theta, dtype=np.float64))

    def support_complex(self, z: np.ndarray) -> np.ndarray:
        """1-homogeneous support evaluated at complex arguments."""
        z = np.asarray(z, dtype=np.complex128)
        r = np.abs(z)
        theta = np.angle(np.where(r > 0, z, 1.0))
        return r * self.support(theta)

    def quadrature(self, per_arc: int = 64, m_smooth: int = 512) -> CircleRule:
        if self.kinks is not None and self.kinks.size:
            return arc_gauss_rule(np.sort(self.kinks % TWO_PI), per_arc)
        return circle_rule(m_smooth)

    def rotate(self, angle: float) -> "PlanarBody":
        """The body e^(i angle) C."""
        base = self

        def h(theta):
            return base.support_fn(np.asarray(theta) - angle)

        verts = None if base.vertices is None else base.vertices * np.exp(1j * angle)
        kinks = None if base.kinks is None else (base.kinks + angle) % TWO_PI
        return PlanarBody(base.kind, h, f"rot({angle:g})*{base.label}",
                          base.symmetry_order, verts, kinks,
                          base.rotation + angle, base.conjugated)

    def conjugate(self) -> "PlanarBody":
        base = self

        def h(theta):
            return base.support_fn(-np.asarray(theta))

        verts = None if base.vertices is None else np.conj(base.vertices)
        kinks = None if base.kinks is None else (-base.kinks) % TWO_PI
        return PlanarBody(base.kind, h, f"conj({base.label})",
                          base.symmetry_order, verts, kinks,
                          -base.rotation, not base.conjugated)

    def times_i(self) -> "PlanarBody":
        return self.rotate(math.pi / 2.0)


def _detect_symmetry_order(h: Callable, max_order: int = 64) -> int:
    theta = np.linspace(0.0, TWO_PI, 257)[:-1]
    ref = h(theta)
    scale = np.max(np.abs(ref))
    full = True
    best = 1
    for s in range(2, max_order + 1):
        if np.max(np.abs(h(theta + TWO_PI / s) - ref)) < 1e-12 * scale:
            best = s
        else:
            full = False
    # invariant under every tested rotation: treat as fully invariant
    return 0 if full else best


def make_planar_body(spec: str) -> PlanarBody:
    """Body mini-language: ``disc``, ``ngon:k`` (k even >= 4, vertices at
    the k-th roots of unity), optional ``@angle`` rotation suffix, or
    ``support-samples:FILE`` (JSON with Fourier coefficients or samples).
    """
    spec = spec.strip()
    angle = 0.0
    if "@" in spec:
        spec, _, ang = spec.partition("@")
        angle = float(ang)
    if spec == "disc":
        body = PlanarBody("disc", lambda th: np.ones_like(np.asarray(th, dtype=float)),
                          "disc", 0)
    elif spec.startswith("ngon:"):
        k = int(spec.split(":")[1])
        if k % 2 != 0:
            raise ValueError(f"ngon:{k} is not origin-symmetric (odd vertex count)")
        if k < 4:
            raise ValueError(f"ngon:{k} is degenerate (needs k >= 4)")
        beta = TWO_PI * np.arange(k) / k
        verts = np.exp(1j * beta)

        def h(theta, beta=beta):
            th = np.asarray(theta, dtype=np.float64)
            return np.max(np.cos(th[..., None] - beta), axis=-1)

        kinks = (beta + math.pi / k) % TWO_PI
        body = PlanarBody("ngon", h, f"ngon:{k}", k, verts, np.sort(kinks))
    elif spec.startswith("support-samples:"):
        body = _planar_from_file(spec.split(":", 1)[1])
    else:
        raise ValueError(f"unknown planar body spec {spec!r}")
    if angle != 0.0:
        body = body.rotate(angle)
    _validate_planar(body)
    return body


def _planar_from_file(path: str) -> PlanarBody:
    with open(path) as fh:
        doc = json.load(fh)
    if "fourier" in doc:
        coeffs = {int(m): complex(c[0], c[1]) for m, c in doc["fourier"].items()}

        def h(theta):
            th = np.asarray(theta, dtype=np.float64)
            out = np.zeros_like(th, dtype=np.complex128)
            for m, c in coeffs.items():
                out += c * np.exp(1j * m * th)
            return out.real
    else:
        samples = np.asarray(doc["samples"], dtype=np.float64)
        mgrid = samples.shape[0]
        fft = np.fft.rfft(samples) / mgrid

        def h(theta):
            th = np.asarray(theta, dtype=np.float64)
            out = np.full_like(th, fft[0].real)
            for m in range(1, min(len(fft), mgrid // 2)):
                out = out + 2.0 * (fft[m] * np.exp(1j * m * th)).real
            return out
    return PlanarBody("sampled", h, f"sampled({path})", _detect_symmetry_order(h))


def _validate_planar(body: PlanarBody) -> None:
    theta = np.linspace(0.0, TWO_PI, 513)[:-1]
    h = body.support(theta)
    if np.min(h) <= 0:
        raise ValueError(f"{body.label}: support not positive (origin not interior)")
    if np.max(np.abs(h - body.support(theta + math.pi))) > 1e-10 * np.max(h):
        raise ValueError(f"{body.label}: not origin-symmetric")
    dens = _fejer_curvature_minimum(body)
    if dens < -1e-9 * np.max(h):
        raise ValueError(f"{body.label}: support fails the convexity criterion "
                         f"(curvature functional dips to {dens:.3e})")


def _fejer_curvature_minimum(body: PlanarBody, order: int = 48) -> float:
    """Minimum over angles of the Fejer mean of the curvature measure h'' + h.

    The coefficient sequence (1 - m^2) c_m[h] represents a non-negative
    measure exactly when C is convex; Fejer summation preserves the sign
    even for polygons, where raw partial sums oscillate.
    """
    c = planar_fourier_coeffs(body, 1.0, order)
    mmax = order
    theta = np.linspace(0.0, TWO_PI, 1024, endpoint=False)
    vals = np.full_like(theta, ((1 - 0**2) * c[mmax]).real)
    for m in range(1, mmax + 1):
        w = 1.0 - m / (mmax + 1.0)
        term = (1.0 - m * m) * c[m + mmax] / 2.0
        term_neg = (1.0 - m * m) * c[-m + mmax] / 2.0
        vals += w * (term * np.exp(-1j * m * theta) + term_neg * np.exp(1j * m * theta)).real
    return float(np.min(vals))


def planar_fourier_coeffs(C: PlanarBody, p: float, mmax: int) -> np.ndarray:
    """Circle-Fourier coefficients c_m[h_C^p], m = -mmax..mmax (offset mmax).

    Convention: c_0 = (1/2pi) int f, and c_m = (1/pi) int f(c) c^m dc for
    m != 0.  Odd coefficients vanish by origin symmetry; so do all m not
    divisible by the symmetry order.  Both vanishing families are set to
    exact zeros (and verified by quadrature in the tests).
    """
    if not (-2.0 < p <= 1.0) or p == 0.0:
        raise ValueError(f"support exponent must lie in (-2, 1] minus 0, got {p}")
    rule = C.quadrature()
    hp = C.support(rule.angles) ** p
    out = np.zeros(2 * mmax + 1, dtype=np.complex128)
    for m in range(-mmax, mmax + 1):
        if m % 2 != 0:
            continue
        if C.symmetry_order == 0 and m != 0:
            continue
        if C.symmetry_order > 0 and m % C.symmetry_order != 0:
            continue
        val = np.sum(rule.weights * hp * np.exp(1j * m * rule.angles))
        out[m + mmax] = val / (TWO_PI if m == 0 else math.pi)
    return out


# ---------------------------------------------------------------------------
# measures on the circle


@dataclass
class CircleMeasure:
    """Finite signed measure on S^1: smooth density samples plus atoms."""

    rule: Optional[CircleRule]
    density: Optional[np.ndarray]
    atom_angles: np.ndarray
    atom_weights: np.ndarray
    even: bool
    label: str = ""

    @classmethod
    def from_density(cls, rule: CircleRule, density, even=True, label="") -> "CircleMeasure":
        dens = np.asarray(density, dtype=np.float64)
        if dens.shape == ():
            dens = np.full(rule.num_nodes, float(dens))
        return cls(rule, dens, np.empty(0), np.empty(0), even, label)

    @classmethod
    def from_atoms(cls, angles, weights, even=True, label="") -> "CircleMeasure":
        return cls(None, None, np.asarray(angles, dtype=np.float64),
                   np.asarray(weights, dtype=np.float64), even, label)

    def total_mass(self) -> float:
        tot = float(np.sum(self.atom_weights))
        if self.density is not None:
            tot += float(np.sum(self.rule.weights * self.density))
        return tot

    def total_variation(self) -> float:
        tot = float(np.sum(np.abs(self.atom_weights)))
        if self.density is not None:
            tot += float(np.sum(self.rule.weights * np.abs(self.density)))
        return tot

    def moment(self, m: int) -> complex:
        """int c^m dmu(c): the raw circle moments driving the transforms."""
        val = complex(np.sum(self.atom_weights * np.exp(1j * m * self.atom_angles)))
        if self.density is not None:
            val += complex(np.sum(self.rule.weights * self.density
                                  * np.exp(1j * m * self.rule.angles)))
        return val

    def coeff(self, m: int) -> complex:
        return self.moment(m) / (TWO_PI if m == 0 else math.pi)

    def conjugate_pushforward(self) -> "CircleMeasure":
        rule = self.rule
        if self.density is not None:
            # push nodes through conjugation; node order is immaterial
            rule = CircleRule((-self.rule.angles) % TWO_PI, self.rule.weights,
                              self.rule.rule_id + "#")
        return CircleMeasure(rule, None if self.density is None else self.density.copy(),
                             (-self.atom_angles) % TWO_PI,
                             self.atom_weights.copy(), self.even,
                             f"conj#({self.label})")

    def scaled(self, c: float) -> "CircleMeasure":
        dens = None if self.density is None else self.density * c
        return CircleMeasure(self.rule, dens, self.atom_angles,
                             self.atom_weights * c, self.even,
                             f"{c:g}*({self.label})")


def planar_surface_measure(C: PlanarBody) -> CircleMeasure:
    """Surface-area measure of the planar body.

    Polygons give atoms at the outer edge normals weighted by edge
    length; smooth bodies give the density with Fourier coefficients
    (1 - m^2) c_m[h].
    """
    if C.kind == "ngon":
        verts = C.vertices
        order = np.argsort(np.angle(verts) % TWO_PI, kind="stable")
        v = verts[order]
        nxt = np.roll(v, -1)
        lengths = np.abs(nxt - v)
        normals = np.angle((v + nxt) / 2.0) % TWO_PI
        return CircleMeasure.from_atoms(normals, lengths, even=True,
                                        label=f"S({C.label})")
    coeffs = planar_fourier_coeffs(C, 1.0, 64)
    mmax = 64
    rule = circle_rule(512)
    dens = np.full(rule.num_nodes, coeffs[mmax].real)
    for m in range(2, mmax + 1, 2):
        term = (1.0 - m * m) * coeffs[m + mmax] / 2.0
        term_neg = (1.0 - m * m) * coeffs[-m + mmax] / 2.0
        dens += (term * np.exp(-1j * m * rule.angles)
                 + term_neg * np.exp(1j * m * rule.angles)).real
    return CircleMeasure.from_density(rule, dens, even=True, label=f"S({C.label})")


# ---------------------------------------------------------------------------
# star bodies in C^n


@dataclass
class StarBody:
    """Star body via a positive radial function callable at sphere points."""

    n: int
    radial: Callable[[np.ndarray], np.ndarray]
    label: str
    origin_symmetric: bool = True
    s1_invariant: bool = False
    torus_invariant: bool = False
    support: Optional[Callable[[np.ndarray], np.ndarray]] = None
    provenance: dict = field(default_factory=dict)

    def rho(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.radial(np.atleast_2d(pts)), dtype=np.float64)

    def rho_simplex(self, t: np.ndarray) -> np.ndarray:
        """Radial values on the fundamental domain (torus-invariant bodies)."""
        if not self.torus_invariant:
            raise ValueError(f"{self.label} is not coordinate-phase invariant")
        pts = np.sqrt(np.atleast_2d(t)).astype(np.complex128)
        return self.rho(pts)


def _probe_points(n: int, count: int = 4096, seed: int = 20240) -> np.ndarray:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _detect_flags(radial: Callable, n: int) -> tuple[bool, bool, bool]:
    pts = _probe_points(n, 512)
    base = np.asarray(radial(pts))
    scale = np.max(np.abs(base))
    rng = np.random.default_rng(7)
    sym = True
    s1 = True
    torus = True
    for _ in range(3):
        c = np.exp(1j * rng.uniform(0, TWO_PI))
        phases = np.exp(1j * rng.uniform(0, TWO_PI, size=n))
        if np.max(np.abs(radial(-pts) - base)) > 1e-9 * scale:
            sym = False
        if np.max(np.abs(radial(c * pts) - base)) > 1e-9 * scale:
            s1 = False
        if np.max(np.abs(radial(pts * phases) - base)) > 1e-9 * scale:
            torus = False
    return sym, s1, torus


def make_star_body(spec: str, n: int) -> StarBody:
    """Star-body mini-language.

    ``ball``; ``lq:q`` (complex l_q ball); ``lq-polar:q`` (its polar);
    ``perturb:base=ball,p=-1,harm=re_z1sq,eps=0.1``;
    ``radial-grid:FILE.json`` / ``support-grid:FILE.json``.
    """
    spec = spec.strip()
    if spec == "ball":
        return StarBody(n, lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
                        "ball", True, True, True,
                        support=lambda pts: np.ones(np.atleast_2d(pts).shape[0]))
    if spec.startswith("lq:") or spec.startswith("lq-polar:"):
        q = float(spec.split(":")[1])
        if q < 1:
            raise ValueError(f"l_q exponent must be >= 1, got {q}")
        qdual = q / (q - 1.0) if q > 1 else math.inf

        def rho_lq(pts, qq=q):
            pts = np.atleast_2d(pts)
            return np.sum(np.abs(pts) ** qq, axis=1) ** (-1.0 / qq)

        def norm_dual(pts, qq=qdual):
            pts = np.atleast_2d(pts)
            if math.isinf(qq):
                return np.max(np.abs(pts), axis=1)
            return np.sum(np.abs(pts) ** qq, axis=1) ** (1.0 / qq)

        if spec.startswith("lq:"):
            return StarBody(n, rho_lq, f"lq:{q:g}", True, True, True,
                            support=norm_dual,
                            provenance={"kind": "lq", "q": q, "convex": True})
        return StarBody(n, lambda pts: 1.0 / norm_dual(pts),
                        f"lq-polar:{q:g}", True, True, True,
                        support=lambda pts: 1.0 / rho_lq(pts),
                        provenance={"kind": "lq-polar", "q": q, "convex": True})
    if spec.startswith("perturb:"):
        kv = dict(item.split("=") for item in spec.split(":", 1)[1].split(","))
        base = make_star_body(kv.get("base", "ball"), n)
        p = float(kv["p"])
        eps = float(kv.get("eps", "0.1"))
        harm = named_harmonic(kv.get("harm", "re_z1sq"), n)
        return perturb_radial_power(base, p, harm, eps)
    if spec.startswith("radial-grid:") or spec.startswith("support-grid:"):
        return _star_from_file(spec, n)
    raise ValueError(f"unknown star body spec {spec!r}")


def _star_from_file(spec: str, n: int) -> StarBody:
    kind, path = spec.split(":", 1)
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("n", n) != n:
        raise ValueError(f"file {path} has n={doc.get('n')}, expected {n}")
    rule = rule_from_id(doc["rule_id"])
    samples = np.asarray(doc["samples"], dtype=np.float64)
    if kind == "radial-grid" and np.min(samples) <= 0:
        raise ValueError("radial samples must be positive")
    kmax = int(doc.get("kmax", 12))
    if isinstance(rule, SimplexRule):
        spec_ = analyze_invariant(samples, n, kmax, rule)

        def fn(pts):
            pts = np.atleast_2d(pts)
            t = np.abs(pts) ** 2
            comps = invariant_components_at(spec_, t)
            return sum(comps.values()).real + 0 * t[:, 0]
    else:
        spec_ = analyze(samples, kmax, rule)
        from .harmonics import project_bidegree_dense, synthesize

        def fn(pts):
            pts = np.atleast_2d(pts)
            nodes, w = rule.materialize()
            from .harmonics import zonal_matrix
            from .specialfn import harmonic_dim
            out = np.zeros(pts.shape[0], dtype=np.complex128)
            for (k, l), comp in spec_.components.items():
                kern = zonal_matrix(pts, nodes, rule.n, k, l)
                out += harmonic_dim(rule.n, k, l) / rule.volume * (kern @ (w * comp))
            return out.real
    label = f"{kind}({path})"
    sym, s1, torus = _detect_flags(fn, n)
    if kind == "radial-grid":
        return StarBody(n, fn, label, sym, s1, torus,
                        provenance={"kind": kind, "path": path, "kmax": kmax})
    # support-grid: the body whose support function is the stored h;
    # radial values come from the min formula (computed on demand)
    return StarBody(n, lambda pts: support_to_radial(fn, n, pts), label,
                    sym, s1, torus, support=fn,
                    provenance={"kind": kind, "path": path, "kmax": kmax,
                                "convex": True})


def named_harmonic(name: str, n: int) -> BandFunction:
    """Registry of closed-form perturbation harmonics.

    ``re_z1sq`` = Re(u_1^2); ``rezonal:k:l[:j]`` = Re of the (k, l) zonal
    with pole e_j; ``zonal:k:l[:j]`` keeps the complex zonal.
    """
    if name == "re_z1sq":
        pole = np.zeros(n, dtype=np.complex128)
        pole[0] = 1.0
        return BandFunction(n).add_real_zonal(1.0, 2, 0, pole)
    if name.startswith(("rezonal:", "zonal:")):
        parts = name.split(":")
        k, l = int(parts[1]), int(parts[2])
        j = int(parts[3]) if len(parts) > 3 else 0
        pole = np.zeros(n, dtype=np.complex128)
        pole[j] = 1.0
        bf = BandFunction(n)
        if name.startswith("rezonal:"):
            return bf.add_real_zonal(1.0, k, l, pole)
        return bf.add_zonal(1.0, k, l, pole)
    raise ValueError(f"unknown harmonic {name!r}")


def perturb_radial_power(L: StarBody, p: float, Y, eps: float) -> StarBody:
    """Star body K with rho_K^(2n+p) = rho_L^(2n+p) + eps * Y.

    Positivity of the perturbed power profile is required; on violation
    the error reports the minimal admissible bound on |eps|.
    """
    n = L.n
    power = 2 * n + p
    Yfn = Y if callable(Y) else Y

    def profile(pts):
        pts = np.atleast_2d(pts)
        base = np.asarray(L.radial(pts), dtype=np.float64) ** power
        out = base + eps * np.real(Yfn(pts))
        return out

    probe = _probe_points(n, 8192)
    vals = profile(probe)
    if np.min(vals) <= 0.0:
        base = np.asarray(L.radial(probe), dtype=np.float64) ** power
        y = np.real(Yfn(probe))
        mask = np.sign(eps) * y < 0
        bound = float(np.min(base[mask] / np.abs(y[mask])))
        raise ValueError(
            f"perturbation destroys positivity; need |eps| < {bound:.6g}")

    def radial(pts):
        return profile(pts) ** (1.0 / power)

    # d rho / d eps = Y * profile^(1/power - 1) / power: sampled bound
    lip = float(np.max(np.abs(np.real(Yfn(probe)))
                       * vals ** (1.0 / power - 1.0))) / abs(power)
    even = Y.is_even() if isinstance(Y, BandFunction) else False
    s1 = (Y.is_s1_invariant() if isinstance(Y, BandFunction) else False) and L.s1_invariant
    return StarBody(n, radial, f"perturb({L.label},p={p:g},eps={eps:g})",
                    L.origin_symmetric and even, s1, False,
                    provenance={"kind": "perturb", "base": L, "p": p,
                                "Y": Y, "eps": eps, "power": power,
                                "lipschitz_in_eps": lip})


# ---------------------------------------------------------------------------
# support <-> radial


def support_to_radial(h: Callable, n: int, pts: np.ndarray,
                      coarse_levels=(12, 16), refine_iters: int = 40) -> np.ndarray:
    """rho_K(u) = min over directions v of h(v) / <u, v>, refined locally.

    Real inner product <u, v> = Re(u . conj(v)); the coarse minimum over a
    product grid is polished by a shrinking local search (deterministic).
    """
    pts = np.atleast_2d(pts)
    grid, _ = sphere_rule(n, coarse_levels).materialize()
    grid = np.concatenate([grid, pts])
    hv = np.asarray(h(grid), dtype=np.float64)
    out = np.empty(pts.shape[0])
    for i, u in enumerate(pts):
        dots = np.real(grid @ np.conj(u))
        ok = dots > 1e-9
        ratios = hv[ok] / dots[ok]
        j = int(np.argmin(ratios))
        best_v = grid[ok][j]
        best = ratios[j]
        step = 0.35
        for _ in range(refine_iters):
            cand = best_v[None, :] + step * _local_offsets(n) @ _tangent_basis(best_v)
            cand = cand / np.linalg.norm(cand, axis=1, keepdims=True)
            hc = np.asarray(h(cand), dtype=np.float64)
            dc = np.real(cand @ np.conj(u))
            mask = dc > 1e-9
            if np.any(mask):
                vals = hc[mask] / dc[mask]
                jj = int(np.argmin(vals))
                if vals[jj] < best:
                    best = float(vals[jj])
                    best_v = cand[mask][jj]
                    continue
            step *= 0.5
            if step < 1e-9:
                break
        out[i] = best
    return out


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    d = 2 * v.shape[0]
    x = np.concatenate([v.real, v.imag])
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(d)[:, : d - 1]]))
    basis = q[:, 1:].T  # (d-1, d) real tangent directions
    return (basis[:, : d // 2] + 1j * basis[:, d // 2:])


def _local_offsets(n: int) -> np.ndarray:
    d = 2 * n - 1
    eye = np.eye(d)
    return np.concatenate([eye, -eye])


def polar_pair(K: StarBody) -> StarBody:
    """The polar body, via rho of the polar = 1 / h of the body."""
    if K.support is None:
        raise ValueError(f"{K.label} carries no support function")
    # h of the polar is 1 / rho, valid for convex K with interior origin
    support = (lambda pts: 1.0 / np.asarray(K.radial(np.atleast_2d(pts)))) \
        if K.provenance.get("convex") else None
    return StarBody(K.n, lambda pts: 1.0 / np.asarray(K.support(np.atleast_2d(pts))),
                    f"polar({K.label})", K.origin_symmetric, K.s1_invariant,
                    K.torus_invariant, support=support,
                    provenance={"kind": "polar", "base": K})


# ---------------------------------------------------------------------------
# surface measures in C^n


@dataclass
class SurfaceMeasureData:
    """Even surface-area-measure data: density on a rule and/or atoms.

    ``density_fn``, when supplied, evaluates the density at arbitrary
    sphere points and unlocks the exact kernel-adapted quadrature in the
    projection operator (grid samples alone fall back to pairwise sums).
    """

    n: int
    domain: str  # 'sphere' | 'simplex'
    rule: Union[SphereRule, SimplexRule, None]
    density: Optional[np.ndarray]
    atom_points: Optional[np.ndarray] = None
    atom_weights: Optional[np.ndarray] = None
    even: bool = True
    label: str = ""
    density_fn: Optional[Callable] = None

    def total_mass(self) -> float:
        tot = 0.0
        if self.density is not None:
            if self.domain == "simplex":
                from .spheregrid import sphere_volume
                tot += float(np.sum(self.rule.weights * self.density)) * sphere_volume(self.n)
            else:
                tot += float(np.sum(self.rule.weights * self.density))
        if self.atom_weights is not None:
            tot += float(np.sum(self.atom_weights))
        return tot

    def validate(self) -> None:
        if not self.even:
            raise ValueError("surface measures must be even here")
        if self.density is not None and np.min(self.density) < 0:
            raise ValueError("surface density must be non-negative")
        if self.domain == "sphere" and self.density is not None:
            nodes, w = self.rule.materialize()
            centroid = np.abs(np.sum(w[:, None] * self.density[:, None] * nodes, axis=0))
            if np.max(centroid) > 1e-8 * self.total_mass():
                raise ValueError("surface measure is not centered")
            x = np.concatenate([nodes.real, nodes.imag], axis=1)
            m2 = (w * self.density)[:, None, None] * (x[:, :, None] * x[:, None, :])
            mat = np.sum(m2, axis=0)
            ev = np.linalg.eigvalsh(mat)
            if ev[0] < 1e-10 * ev[-1]:
                raise ValueError("surface measure concentrates on a subsphere")


def surface_density_from_support(h: Callable, n: int, points: np.ndarray,
                                 step: float = 1e-3,
                                 validate: bool = True) -> np.ndarray:
    """Surface-area-measure density from a smooth support function.

    The density at u is det of the Hessian of the 1-homogeneous extension
    of h, restricted to the tangent space at u.  The Hessian is built by
    Richardson-extrapolated central differences in the ambient real
    coordinates, so the same code serves n = 2 and n = 3.
    """
    pts = np.atleast_2d(points)
    d = 2 * n

    def h_ext(x):
        # x: (..., d) real ambient coordinates
        r = np.linalg.norm(x, axis=-1)
        z = (x[..., :n] + 1j * x[..., n:]) / r[..., None]
        return r * np.asarray(h(z.reshape(-1, n))).reshape(r.shape)

    x0 = np.concatenate([pts.real, pts.imag], axis=1)  # (P, d)
    dens = np.empty(pts.shape[0])
    hess = _fd_hessian(h_ext, x0, step)
    hess2 = _fd_hessian(h_ext, x0, step / 2.0)
    hess = (4.0 * hess2 - hess) / 3.0
    for i in range(pts.shape[0]):
        u = x0[i] / np.linalg.norm(x0[i])
        q, _ = np.linalg.qr(np.column_stack([u, np.eye(d)[:, : d - 1]]))
        B = q[:, 1:]
        dens[i] = np.linalg.det(B.T @ hess[i] @ B)
    if validate and np.min(dens) <= 0:
        raise ValueError("support function is not of positive curvature")
    return dens


def _fd_hessian(f: Callable, x0: np.ndarray, h: float) -> np.ndarray:
    p, d = x0.shape
    offsets = [np.zeros(d)]
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        offsets.extend([e, -e])
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros(d)
            e[i] = h
            ej = np.zeros(d)
            ej[j] = h
            offsets.extend([e + ej, e - ej, -e + ej, -e - ej])
    off = np.asarray(offsets)  # (K, d)
    vals = f(x0[:, None, :] + off[None, :, :])  # (P, K)
    hess = np.empty((p, d, d))
    base = vals[:, 0]
    idx = 1
    diag = {}
    for i in range(d):
        plus, minus = vals[:, idx], vals[:, idx + 1]
        diag[i] = (plus - 2.0 * base + minus) / h**2
        idx += 2
    for i in range(d):
        hess[:, i, i] = diag[i]
    for i in range(d):
        for j in range(i + 1, d):
            pp, pm, mp, mm = (vals[:, idx], vals[:, idx + 1],
                              vals[:, idx + 2], vals[:, idx + 3])
            hess[:, i, j] = hess[:, j, i] = (pp - pm - mp + mm) / (4.0 * h**2)
            idx += 4
    return hess


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class GeometryReport:
    star_positive: bool
    min_radial: float
    sampled_convex: bool
    convexity_witness: Optional[tuple]
    convexity_margin: float
    s1_invariant: bool
    s1_defect: float
    pairs_tested: int
    seed: int

    def all_pass(self) -> bool:
        return self.star_positive and self.sampled_convex


def geometry_checks(K: StarBody, pairs: int = 100_000, seed: int = 0) -> GeometryReport:
    """Sampled star-positivity / midpoint-convexity / circle-invariance.

    Convexity is a necessary-condition check on random boundary pairs
    ("sampled-convex"), reported with the worst witness found.
    """
    rng = np.random.default_rng(seed)
    probe = _probe_points(K.n, 4096, seed=seed + 1)
    rho0 = K.rho(probe)
    min_r = float(np.min(rho0))
    worst_margin = -math.inf
    witness = None
    batch = 20_000
    done = 0
    while done < pairs:
        b = min(batch, pairs - done)
        u = rng.normal(size=(b, K.n)) + 1j * rng.normal(size=(b, K.n))
        v = rng.normal(size=(b, K.n)) + 1j * rng.normal(size=(b, K.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        x = K.rho(u)[:, None] * u
        y = K.rho(v)[:, None] * v
        m = (x + y) / 2.0
        norm_m = np.linalg.norm(m, axis=1)
        ok = norm_m > 1e-12
        mhat = m[ok] / norm_m[ok][:, None]
        margin = norm_m[ok] - K.rho(mhat)  # > 0 means midpoint escapes
        j = int(np.argmax(margin))
        if margin[j] > worst_margin:
            worst_margin = float(margin[j])
            witness = (u[ok][j].copy(), v[ok][j].copy())
        done += b
    scale = max(1.0, float(np.max(rho0)))
    convex_ok = worst_margin <= 1e-9 * scale
    c = np.exp(1j * rng.uniform(0, TWO_PI, size=8))
    s1_defect = max(float(np.max(np.abs(K.rho(ci * probe) - rho0))) for ci in c)
    return GeometryReport(min_r > 0, min_r, convex_ok, witness, worst_margin,
                          s1_defect < 1e-9 * scale, s1_defect, pairs, seed)
