"""Volumes, dual and first mixed volumes, and the inequality certificates.

Volume comparisons for bodies known only through their surface measure
are certified through the first-mixed-volume chain

    V1(K, L) >= V(K)^((2n-1)/2n) V(L)^(1/2n)
    =>  V(K) <= V1(K, L)^(2n/(2n-1)) * V(L)^(-1/(2n-1)),

exactly as the proofs consume it; reports then say "certified via V1"
and never present a direct V(K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .bodies import StarBody, SurfaceMeasureData
from .spheregrid import (
    SimplexRule,
    SphereRule,
    simplex_rule,
    sphere_rule,
    sphere_volume,
)


def _rho_powers_integral(K: StarBody, power: float,
                         other: Optional[Callable] = None,
                         other_power: float = 0.0,
                         simp: Optional[SimplexRule] = None,
                         rule: Optional[SphereRule] = None) -> float:
    """int rho_K^power * g^other_power over the sphere, by the best grid."""
    n = K.n
    if K.torus_invariant and (other is None or getattr(other, "torus_invariant", False)):
        simp = simp or simplex_rule(n, 64 if n == 2 else 32)
        vals = K.rho_simplex(simp.nodes) ** power
        if other is not None:
            vals = vals * other.rho_simplex(simp.nodes) ** other_power
        return float(np.sum(simp.weights * vals)) * sphere_volume(n)
    rule = rule or sphere_rule(n, (48, 48) if n == 2 else (16, 12))
    total = 0.0
    for nodes, w in rule.iter_blocks():
        vals = K.rho(nodes) ** power
        if other is not None:
            vals = vals * other.rho(nodes) ** other_power
        total += float(np.sum(w * vals))
    return total


def volume(K: StarBody, simp: Optional[SimplexRule] = None,
           rule: Optional[SphereRule] = None) -> float:
    """V(K) = (1/2n) int rho_K^(2n)."""
    n = K.n
    return _rho_powers_integral(K, 2 * n, simp=simp, rule=rule) / (2 * n)


def dual_mixed_volume(p: float, K: StarBody, L: StarBody,
                      simp: Optional[SimplexRule] = None,
                      rule: Optional[SphereRule] = None) -> float:
    """Dual mixed volume of index p: (1/2n) int rho_K^(2n-p) rho_L^p."""
    if p == 0.0:
        raise ValueError("dual mixed volume index must be non-zero")
    if K.n != L.n:
        raise ValueError("bodies live in different dimensions")
    n = K.n
    return _rho_powers_integral(K, 2 * n - p, other=L, other_power=p,
                                simp=simp, rule=rule) / (2 * n)


def mixed_volume_V1(SK: SurfaceMeasureData, hL: Callable,
                    out_of_band_tol: float = 0.0) -> float:
    """First mixed volume (1/2n) int h_L dS_K (density quadrature + atoms)."""
    n = SK.n
    total = 0.0
    if SK.density is not None:
        if SK.domain == "simplex":
            pts = np.sqrt(SK.rule.nodes).astype(np.complex128)
            total += float(np.sum(SK.rule.weights * SK.density
                                  * np.asarray(hL(pts)))) * sphere_volume(n)
        else:
            nodes, w = SK.rule.materialize()
            total += float(np.sum(w * SK.density * np.asarray(hL(nodes))))
    if SK.atom_points is not None and SK.atom_weights is not None:
        total += float(np.sum(SK.atom_weights * np.asarray(hL(SK.atom_points))))
    return total / (2 * n)


@dataclass
class InequalityReport:
    """Two-sided record of one inequality check."""

    kind: str
    lhs: float
    rhs: float
    margin: float
    equality_diagnostic: float
    details: dict = field(default_factory=dict)

    def holds(self, tol: float = 0.0) -> bool:
        return self.margin >= -tol


def dilate_residual(K: StarBody, L: StarBody, samples: int = 512) -> float:
    """How far K and L are from being dilates: spread of rho_K / rho_L."""
    from .bodies import _probe_points

    pts = _probe_points(K.n, samples)
    ratio = K.rho(pts) / L.rho(pts)
    return float(np.max(ratio) - np.min(ratio)) / float(np.mean(ratio))


def verify_inequality(kind: str, *, p: Optional[float] = None,
                      K: Optional[StarBody] = None, L: Optional[StarBody] = None,
                      SK: Optional[SurfaceMeasureData] = None,
                      hL: Optional[Callable] = None,
                      VL: Optional[float] = None,
                      simp=None, rule=None) -> InequalityReport:
    """Checked inequalities.

    ``dual-Lp-Minkowski``: p Vtilde_p(K, L) <= p V(K)^((m-p)/m) V(L)^(p/m).
    ``minkowski-first``:   V1(K, L) >= V(K)^((m-1)/m) V(L)^(1/m).
    ``certified-volume``:  the V1 chain bound V(K) <= V1^(m/(m-1)) VL^(-1/(m-1)),
    emitted when h_K is unknown; lhs is the certified bound on V(K).
    """
    if kind == "dual-Lp-Minkowski":
        m = 2 * K.n
        vk = volume(K, simp=simp, rule=rule)
        vl = volume(L, simp=simp, rule=rule)
        dv = dual_mixed_volume(p, K, L, simp=simp, rule=rule)
        lhs = p * dv
        rhs = p * vk ** ((m - p) / m) * vl ** (p / m)
        return InequalityReport(kind, lhs, rhs, rhs - lhs,
                                dilate_residual(K, L),
                                {"V(K)": vk, "V(L)": vl, "dmv": dv, "p": p})
    if kind == "minkowski-first":
        m = 2 * SK.n
        v1 = mixed_volume_V1(SK, hL)
        vk = VL if K is None else volume(K, simp=simp, rule=rule)
        vl = volume(L, simp=simp, rule=rule) if VL is None else VL
        rhs_val = vk ** ((m - 1) / m) * vl ** (1 / m) if K is not None else math.nan
        diag = dilate_residual(K, L) if (K is not None and L is not None) else math.nan
        return InequalityReport(kind, rhs_val, v1, v1 - rhs_val, diag,
                                {"V1": v1})
    if kind == "certified-volume":
        m = 2 * SK.n
        v1 = mixed_volume_V1(SK, hL)
        bound = v1 ** (m / (m - 1)) * VL ** (-1.0 / (m - 1))
        return InequalityReport(kind, bound, VL, VL - bound, math.nan,
                                {"V1": v1, "V(L)": VL,
                                 "note": "certified via V1; V(K) itself not computed"})
    raise ValueError(f"unknown inequality kind {kind!r}")
