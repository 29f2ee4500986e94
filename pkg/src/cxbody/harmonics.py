"""Bi-degree spectral analysis on S^(2n-1) and multiplier transforms.

A function f on S^(2n-1) splits into components pi_{k,l} f living in the
unitary-irreducible blocks of bi-degree (k, l).  The projection uses the
zonal reproducing kernel

    (pi_{k,l} f)(u) = (d_{k,l} / vol) * int disk_poly(n, k, l, u . v) f(v) dv,

with u . v the Hermitian inner product (conjugation on the second slot).
This normalization is pinned by idempotency and by monomial reproduction
(f = v_1^2 has pi_{2,0} f = u_1^2); both are enforced in the tests.

Two evaluation strategies:

* full product grids (n = 2): the phase dependence of the kernel is a
  trig polynomial, so the O(N^2) sums factor exactly through a small set
  of phase modes.  A dense reference path exists for validation.
* circle-invariant functions (any n): all work happens on the simplex of
  squared moduli against phase-averaged Gram kernels; only the diagonal
  (k, k) blocks survive.

Spectra apply multiplier tables entrywise and serialize to JSON.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .kernels import gram_phase_average
from .specialfn import disk_poly, harmonic_dim
from .spheregrid import (
    SimplexRule,
    SphereRule,
    phase_difference_grid,
    simplex_rule,
    sphere_rule,
    sphere_volume,
)

__all__ = [
    "BiDegreeSpectrum",
    "MultiplierTable",
    "analyze",
    "analyze_invariant",
    "apply_multipliers",
    "project_bidegree",
    "project_bidegree_dense",
    "synthesize",
    "spectrum_to_json",
    "spectrum_from_json",
    "invariant_components_at",
    "l2_norm",
]


# ---------------------------------------------------------------------------
# spectra


@dataclass
class BiDegreeSpectrum:
    """Band-limited even/odd content of a sphere function, by bi-degree.

    ``domain`` is ``"sphere"`` (components sampled on the rule nodes,
    complex) or ``"simplex"`` (circle-invariant input; only (k, k)
    components, sampled on the simplex rule, real).
    """

    n: int
    kmax: int
    domain: str
    components: dict
    rule: Union[SphereRule, SimplexRule]
    residual: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def component(self, k: int, l: int) -> np.ndarray:
        return self.components[(k, l)]

    def residual_sup(self) -> float:
        if self.residual is None:
            return 0.0
        return float(np.max(np.abs(self.residual)))


@dataclass(frozen=True)
class MultiplierTable:
    """Map (k, l) -> scalar for a named multiplier transform.

    ``kind`` is one of J | F | T | composite; ``provenance`` records
    whether entries came from closed forms or quadrature.
    """

    kind: str
    n: int
    kmax: int
    entries: dict
    provenance: str
    params: dict = field(default_factory=dict)

    def get(self, k: int, l: int) -> complex:
        try:
            return self.entries[(k, l)]
        except KeyError:
            raise ValueError(
                f"multiplier table {self.kind} (kmax={self.kmax}) has no entry ({k}, {l})")

    def hermitian_defect(self) -> float:
        worst = 0.0
        for (k, l), v in self.entries.items():
            w = self.entries.get((l, k))
            if w is not None:
                worst = max(worst, abs(np.conj(v) - w))
        return worst


# ---------------------------------------------------------------------------
# full-grid machinery (n = 2)


def _grid_shape(rule: SphereRule) -> tuple[int, int, int]:
    return rule.simplex.num_nodes, rule.n_phase, rule.n_phase


def _phase_dft_matrix(m: int, kmax: int) -> np.ndarray:
    """E[a, q] = exp(-i q phi_a) for q = -kmax..kmax."""
    phi = 2.0 * math.pi * np.arange(m) / m
    q = np.arange(-kmax, kmax + 1)
    return np.exp(-1j * np.outer(phi, q))


def _phase_modes(f_grid: np.ndarray, kmax: int) -> np.ndarray:
    """fhat[t, q1, q2] = (1/m^2) sum_ab f[t,a,b] e^(-i(q1 phi_a + q2 phi_b))."""
    nt, m, _ = f_grid.shape
    E = _phase_dft_matrix(m, kmax)
    tmp = np.tensordot(f_grid, E, axes=([1], [0]))      # (nt, m, q1)
    out = np.tensordot(tmp, E, axes=([1], [0]))         # (nt, q1, q2)
    return out / (m * m)


def _kernel_delta_modes(k: int, l: int, n: int, s: np.ndarray, t: np.ndarray,
                        kmax: int) -> np.ndarray:
    """ghat[j, i, q]: delta-Fourier modes of disk_poly(n,k,l, a e^{i d} + b).

    a = sqrt(s_j t_i), b = sqrt((1-s_j)(1-t_i)); exact since the kernel is
    a trig polynomial of degree <= max(k, l) in the relative phase.
    """
    nd = 2 * kmax + 2
    delta = 2.0 * math.pi * np.arange(nd) / nd
    a = np.sqrt(np.outer(s, t))
    b = np.sqrt(np.outer(1.0 - s, 1.0 - t))
    z = a[..., None] * np.exp(1j * delta) + b[..., None]
    g = disk_poly(n, k, l, z)
    q = np.arange(-kmax, kmax + 1)
    E = np.exp(-1j * np.outer(delta, q))
    return np.tensordot(g, E, axes=([2], [0])) / nd


def _component_from_modes(k: int, l: int, rule: SphereRule, fhat: np.ndarray,
                          kmax: int) -> np.ndarray:
    """Assemble pi_{k,l} f on the grid from phase modes of f."""
    s = rule.simplex.nodes[:, 0]
    tw = rule.simplex.weights
    m = rule.n_phase
    d = harmonic_dim(rule.n, k, l)
    ghat = _kernel_delta_modes(k, l, rule.n, s, s, kmax)   # (ns, nt, 2K+1)
    qs = np.arange(-kmax, kmax + 1)
    q2 = k - l - qs
    keep = np.abs(q2) <= kmax
    fsel = np.zeros((fhat.shape[0], qs.shape[0]), dtype=np.complex128)
    fsel[:, keep] = fhat[:, np.nonzero(keep)[0], q2[keep] + kmax]
    inner = np.einsum("jiq,iq->jq", ghat * tw[None, :, None], fsel)
    phi = 2.0 * math.pi * np.arange(m) / m
    E1 = np.exp(1j * np.outer(phi, qs))                  # (m, q)
    E2 = np.exp(1j * np.outer(phi, k - l - qs))
    comp = d * np.einsum("jq,aq,bq->jab", inner, E1, E2)
    return comp.reshape(-1)


def project_bidegree(f, k: int, l: int, rule: SphereRule) -> np.ndarray:
    """Project grid samples onto the bi-degree (k, l) block (n = 2 rules).

    Exact (to rounding) for inputs the rule resolves; requires
    k + l < n_phase / 2 so the phase modes are alias-free.
    """
    _require_resolution(rule, k + l)
    f_grid = _as_grid(f, rule)
    fhat = _phase_modes(f_grid, max(k, l))
    return _component_from_modes(k, l, rule, fhat, max(k, l))


def _require_resolution(rule: SphereRule, degree: int) -> None:
    if rule.n != 2:
        raise ValueError("full-grid projection is implemented for n=2 rules; "
                         "use analyze_invariant for circle-invariant data")
    if 2 * degree >= rule.n_phase:
        raise ValueError(
            f"rule {rule.rule_id} cannot resolve bi-degree total {degree}")


def _as_grid(f, rule: SphereRule) -> np.ndarray:
    if callable(f):
        nodes, _ = rule.materialize()
        f = np.asarray(f(nodes))
    f = np.asarray(f)
    if f.shape[0] != rule.num_nodes:
        raise ValueError("sample count does not match rule")
    return f.reshape(_grid_shape(rule)).astype(np.complex128)


def analyze(f, kmax: int, rule: SphereRule) -> BiDegreeSpectrum:
    """All bi-degree components with k + l <= kmax, plus the residual.

    One phase-mode pass is shared across components; memory is one
    complex grid per component.
    """
    _require_resolution(rule, kmax)
    f_grid = _as_grid(f, rule)
    fhat = _phase_modes(f_grid, kmax)
    comps = {}
    for k in range(kmax + 1):
        for l in range(kmax + 1 - k):
            comps[(k, l)] = _component_from_modes(k, l, rule, fhat, kmax)
    total = np.zeros(rule.num_nodes, dtype=np.complex128)
    for v in comps.values():
        total += v
    residual = f_grid.reshape(-1) - total
    return BiDegreeSpectrum(rule.n, kmax, "sphere", comps, rule, residual)


def synthesize(spec: BiDegreeSpectrum) -> np.ndarray:
    """Pointwise sum of the stored components (zero function if empty)."""
    dtype = np.float64 if spec.domain == "simplex" else np.complex128
    out = np.zeros(spec.rule.num_nodes, dtype=dtype)
    for v in spec.components.values():
        out = out + v
    return out


def apply_multipliers(spec: BiDegreeSpectrum, table: MultiplierTable) -> BiDegreeSpectrum:
    """Scale each component by its table entry (missing entries raise)."""
    if table.kmax < spec.kmax:
        raise ValueError(
            f"table kmax {table.kmax} below spectrum kmax {spec.kmax}")
    comps = {}
    for kl, v in spec.components.items():
        scaled = table.get(*kl) * v
        if spec.domain == "simplex" and np.iscomplexobj(scaled):
            if np.max(np.abs(scaled.imag)) <= 1e-12 * max(1.0, np.max(np.abs(scaled))):
                scaled = scaled.real
        comps[kl] = scaled
    return BiDegreeSpectrum(spec.n, spec.kmax, spec.domain, comps, spec.rule,
                            None, dict(spec.meta, multiplied=table.kind))


# ---------------------------------------------------------------------------
# dense reference (small grids; validates the structured path)


def zonal_matrix(upts: np.ndarray, vnodes: np.ndarray, n: int, k: int, l: int) -> np.ndarray:
    """Matrix disk_poly(n, k, l, u_i . v_j); O(P N) memory, reference use."""
    z = upts @ vnodes.conj().T
    if np.abs(z).max() > 1.0 + 1e-10:
        raise ValueError("points must lie on the unit sphere")
    return disk_poly(n, k, l, z)


def project_bidegree_dense(f, k: int, l: int, rule: SphereRule,
                           out_points: Optional[np.ndarray] = None) -> np.ndarray:
    nodes, w = rule.materialize()
    fv = np.asarray(f(nodes) if callable(f) else f)
    pts = nodes if out_points is None else out_points
    d = harmonic_dim(rule.n, k, l)
    kern = zonal_matrix(pts, nodes, rule.n, k, l)
    return (d / rule.volume) * (kern @ (w * fv))


# ---------------------------------------------------------------------------
# circle-invariant path: simplex domain, diagonal blocks only

_GRAM_CACHE: dict = {}


def _gram_tensor(n: int, s_nodes: np.ndarray, t_nodes: np.ndarray, kdiag: int,
                 nphase: int, cache_key=None) -> np.ndarray:
    if cache_key is not None and cache_key in _GRAM_CACHE:
        return _GRAM_CACHE[cache_key]
    cosines, wd = phase_difference_grid(n, nphase)
    a = np.sqrt(s_nodes[:, None, :] * t_nodes[None, :, :])   # (ns, nt, n)
    sumsq = np.sum(s_nodes[:, None, :] * t_nodes[None, :, :], axis=2)
    if n == 2:
        cross = (2.0 * a[:, :, 0] * a[:, :, 1])[:, :, None]
    else:
        cross = np.stack([
            2.0 * a[:, :, 0] * a[:, :, 1],
            2.0 * a[:, :, 0] * a[:, :, 2],
            2.0 * a[:, :, 1] * a[:, :, 2],
        ], axis=2)
    K = gram_phase_average(sumsq, cross, cosines, wd, kdiag, n - 2)
    if cache_key is not None:
        _GRAM_CACHE[cache_key] = K
    return K


def analyze_invariant(f, n: int, kmax: int, simp: SimplexRule,
                      nphase: Optional[int] = None) -> BiDegreeSpectrum:
    """Diagonal-block analysis of a circle-invariant function.

    ``f``: samples on the simplex nodes or a callable on barycentric
    coordinates.  Components (k, k), 2k <= kmax, are returned as real
    samples on the simplex rule.  The integrand's phase dependence sits
    entirely in the kernel (trig degree k per angle), so the default
    phase count 2*(kmax//2) + 4 is already exact.
    """
    if simp.n != n:
        raise ValueError("simplex rule dimension mismatch")
    fv = np.asarray(f(simp.nodes) if callable(f) else f, dtype=np.float64)
    if fv.shape[0] != simp.num_nodes:
        raise ValueError("sample count does not match simplex rule")
    kdiag = kmax // 2
    if nphase is None:
        nphase = 2 * kdiag + 4
    key = ("gram", n, simp.rule_id, kdiag, nphase)
    K = _gram_tensor(n, simp.nodes, simp.nodes, kdiag, nphase, cache_key=key)
    tw = simp.weights
    comps = {}
    total = np.zeros_like(fv)
    for k in range(kdiag + 1):
        d = harmonic_dim(n, k, k)
        comp = d * (K[k] @ (tw * fv))
        comps[(k, k)] = comp
        total += comp
    return BiDegreeSpectrum(n, kmax, "simplex", comps, simp, fv - total)


def invariant_components_at(spec: BiDegreeSpectrum, s_points: np.ndarray,
                            nphase: Optional[int] = None,
                            cache_key=None) -> dict:
    """Evaluate simplex-domain components at arbitrary barycentric points.

    Uses idempotency: a component is reproduced by its own kernel
    integral, so off-grid values follow from the stored samples.  Pass a
    hashable ``cache_key`` when the same evaluation grid recurs.
    """
    if spec.domain != "simplex":
        raise ValueError("only simplex-domain spectra support this evaluation")
    kdiag = max(k for k, _ in spec.components)
    if nphase is None:
        nphase = 2 * kdiag + 4
    if cache_key is not None:
        cache_key = ("gram-eval", spec.n, spec.rule.rule_id, kdiag, nphase, cache_key)
    K = _gram_tensor(spec.n, np.atleast_2d(s_points), spec.rule.nodes, kdiag, nphase,
                     cache_key=cache_key)
    tw = spec.rule.weights
    out = {}
    for (k, _), comp in spec.components.items():
        d = harmonic_dim(spec.n, k, k)
        out[(k, k)] = d * (K[k] @ (tw * comp))
    return out


def invariant_combine(a: BiDegreeSpectrum, b: BiDegreeSpectrum,
                      ca: float = 1.0, cb: float = 1.0) -> BiDegreeSpectrum:
    """Componentwise ca*a + cb*b for simplex-domain spectra on one rule."""
    if a.domain != "simplex" or b.domain != "simplex":
        raise ValueError("invariant_combine works on simplex-domain spectra")
    if a.rule.rule_id != b.rule.rule_id:
        raise ValueError("spectra live on different rules")
    keys = set(a.components) | set(b.components)
    comps = {}
    zero = np.zeros(a.rule.num_nodes)
    for kl in keys:
        comps[kl] = ca * a.components.get(kl, zero) + cb * b.components.get(kl, zero)
    return BiDegreeSpectrum(a.n, max(a.kmax, b.kmax), "simplex", comps, a.rule)


def invariant_add_const(spec: BiDegreeSpectrum, c: float) -> BiDegreeSpectrum:
    """Add a constant (the (0,0) block of a constant is the constant itself)."""
    comps = dict(spec.components)
    comps[(0, 0)] = comps.get((0, 0), np.zeros(spec.rule.num_nodes)) + c
    return BiDegreeSpectrum(spec.n, spec.kmax, "simplex", comps, spec.rule)


def invariant_values(spec: BiDegreeSpectrum, t_points: np.ndarray,
                     cache_key=None) -> np.ndarray:
    """Synthesized values of a simplex-domain spectrum at barycentric points."""
    comps = invariant_components_at(spec, t_points, cache_key=cache_key)
    return np.real(sum(comps.values()))


class SimplexInterpolator:
    """Barycentric Lagrange interpolation on the collapsed simplex grid.

    Exact for data that is polynomial in the barycentric coordinates of
    degree below the grid order; this covers every synthesized
    band-limited invariant profile, which makes radial evaluation of
    such bodies at arbitrary points cheap (no kernel integrals).
    """

    def __init__(self, simp: SimplexRule, values: np.ndarray):
        if not simp.factors:
            raise ValueError("simplex rule carries no factor grids")
        self.simp = simp
        self.values = np.asarray(values, dtype=np.float64)
        self._w = [self._bary_weights(x) for x in simp.factors]

    @staticmethod
    def _bary_weights(x: np.ndarray) -> np.ndarray:
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        w = 1.0 / np.prod(diff, axis=1)
        return w / np.max(np.abs(w))

    @staticmethod
    def _interp_1d(x: np.ndarray, w: np.ndarray, fvals: np.ndarray,
                   xq: np.ndarray) -> np.ndarray:
        """Interpolate along the last axis of fvals ((nx,) or (nr, nx))."""
        d = xq[:, None] - x[None, :]
        exact = np.abs(d) < 1e-14
        dsafe = np.where(exact, 1.0, d)
        c = np.where(exact, 0.0, w[None, :] / dsafe)
        denom = np.sum(c, axis=1)
        hit = np.any(exact, axis=1)
        if fvals.ndim == 1:
            out = (c @ fvals) / denom
            if np.any(hit):
                out[hit] = fvals[np.argmax(exact[hit], axis=1)]
            return out
        out = (c @ fvals.T) / denom[:, None]
        if np.any(hit):
            out[hit] = fvals[:, np.argmax(exact[hit], axis=1)].T
        return out

    def __call__(self, t_points: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t_points)
        if self.simp.n == 2:
            x = self.simp.factors[0]
            return self._interp_1d(x, self._w[0], self.values, t[:, 0])
        xi, eta = self.simp.factors
        nxi, neta = xi.shape[0], eta.shape[0]
        grid = self.values.reshape(nxi, neta)
        x3 = np.clip(t[:, 2], 0.0, 1.0 - 1e-15)
        denom = np.maximum(1.0 - x3, 1e-15)
        ev = np.clip(t[:, 0] / denom, 0.0, 1.0)
        rows = self._interp_1d(eta, self._w[1], grid, ev)        # (P, nxi)
        d = x3[:, None] - xi[None, :]
        exact = np.abs(d) < 1e-14
        d = np.where(exact, 1.0, d)
        c = self._w[0][None, :] / d
        c = np.where(exact, 0.0, c)
        out = np.sum(c * rows, axis=1) / np.sum(c, axis=1)
        hit = np.any(exact, axis=1)
        if np.any(hit):
            idx = np.argmax(exact[hit], axis=1)
            out[hit] = rows[hit, idx]
        return out


def invariant_interpolator(spec: BiDegreeSpectrum) -> SimplexInterpolator:
    """Fast evaluator of a simplex-domain spectrum's synthesized values."""
    return SimplexInterpolator(spec.rule, synthesize(spec))


# ---------------------------------------------------------------------------
# closed-form band-limited functions


class BandFunction:
    """Finite zonal combination  const + sum_i amp_i * disk_poly(k_i, l_i, . pole_i).

    Evaluable at arbitrary sphere points, with its bi-degree components
    known exactly (each term is pure (k_i, l_i)); this is what the
    perturbation pipelines and the multiplier-route operators consume.
    """

    def __init__(self, n: int, const: float = 0.0, terms=None):
        self.n = n
        self.const = float(const)
        self.terms = list(terms or [])  # (amp complex, k, l, pole (n,) complex)

    def add_zonal(self, amp: complex, k: int, l: int, pole) -> "BandFunction":
        pole = np.asarray(pole, dtype=np.complex128)
        pole = pole / np.linalg.norm(pole)
        self.terms.append((complex(amp), int(k), int(l), pole))
        return self

    def add_real_zonal(self, amp: complex, k: int, l: int, pole) -> "BandFunction":
        """Add amp*Z_{k,l} + conj pair so the total stays real-valued."""
        self.add_zonal(amp / 2.0, k, l, pole)
        self.add_zonal(np.conj(amp) / 2.0, l, k, pole)
        return self

    @property
    def kmax(self) -> int:
        return max([k + l for _, k, l, _ in self.terms], default=0)

    def bidegrees(self):
        return sorted({(k, l) for _, k, l, _ in self.terms} | ({(0, 0)} if self.const else set()))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.full(pts.shape[0], complex(self.const), dtype=np.complex128)
        for amp, k, l, pole in self.terms:
            out += amp * disk_poly(self.n, k, l, pts @ np.conj(pole))
        if np.max(np.abs(out.imag)) <= 1e-12 * max(1.0, np.max(np.abs(out.real))):
            return out.real
        return out

    def component_values(self, k: int, l: int, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0], dtype=np.complex128)
        if (k, l) == (0, 0):
            out += self.const
        for amp, kk, ll, pole in self.terms:
            if (kk, ll) == (k, l):
                out += amp * disk_poly(self.n, k, l, pts @ np.conj(pole))
        return out

    def apply_table(self, table: MultiplierTable) -> "BandFunction":
        """Multiplier transform, term by term (exact on band functions)."""
        c = table.get(0, 0) * self.const
        if abs(complex(c).imag) > 1e-12 * max(1.0, abs(c)):
            raise ValueError("constant component acquired an imaginary part")
        out = BandFunction(self.n, complex(c).real)
        for amp, k, l, pole in self.terms:
            out.add_zonal(table.get(k, l) * amp, k, l, pole)
        return out

    def scale(self, c: complex) -> "BandFunction":
        out = BandFunction(self.n, self.const * c)
        for amp, k, l, pole in self.terms:
            out.add_zonal(amp * c, k, l, pole)
        return out

    def is_even(self) -> bool:
        return all((k + l) % 2 == 0 for _, k, l, _ in self.terms)

    def is_s1_invariant(self) -> bool:
        return all(k == l for _, k, l, _ in self.terms)


# ---------------------------------------------------------------------------
# norms, serialization


def l2_norm(spec_or_samples, rule=None) -> float:
    """L2 norm over the sphere; simplex-domain samples are lifted by symmetry."""
    if isinstance(spec_or_samples, BiDegreeSpectrum):
        raise TypeError("pass samples plus the rule")
    samples = np.asarray(spec_or_samples)
    if isinstance(rule, SimplexRule):
        val = float(np.sum(rule.weights * np.abs(samples) ** 2))
        return math.sqrt(val * sphere_volume(rule.n))
    w = rule.weights
    return math.sqrt(float(np.sum(w * np.abs(samples) ** 2)))


def spectrum_to_json(spec: BiDegreeSpectrum) -> dict:
    comps = []
    for (k, l), v in sorted(spec.components.items()):
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            comps.append({"k": k, "l": l,
                          "samples_re": arr.real.tolist(),
                          "samples_im": arr.imag.tolist()})
        else:
            comps.append({"k": k, "l": l, "samples": arr.tolist()})
    return {"n": spec.n, "kmax": spec.kmax, "domain": spec.domain,
            "rule_id": spec.rule.rule_id, "components": comps}


def spectrum_from_json(doc: dict) -> BiDegreeSpectrum:
    rule = rule_from_id(doc["rule_id"])
    comps = {}
    for c in doc["components"]:
        if "samples" in c:
            arr = np.asarray(c["samples"], dtype=np.float64)
        else:
            arr = np.asarray(c["samples_re"]) + 1j * np.asarray(c["samples_im"])
        comps[(c["k"], c["l"])] = arr
    return BiDegreeSpectrum(doc["n"], doc["kmax"], doc["domain"], comps, rule)


def rule_from_id(rule_id: str):
    """Rebuild a rule from its id string (s3:, s5:, sim2:, sim3:)."""
    head, _, rest = rule_id.partition(":")
    if head in ("s3", "s5"):
        parts = [int(p) for p in rest.split("x")]
        n = 2 if head == "s3" else 3
        return sphere_rule(n, (parts[0], parts[1]))
    if head in ("sim2", "sim3"):
        return simplex_rule(int(head[-1]), int(rest))
    raise ValueError(f"cannot rebuild rule from id {rule_id!r}")
