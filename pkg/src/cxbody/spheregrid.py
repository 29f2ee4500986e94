"""Deterministic quadrature on S^1, S^(2n-1) (n = 2, 3) and the weighted disc.

Sphere rules are product rules built from the fact that for u uniform on
S^(2n-1) the squared moduli (|u_1|^2, ..., |u_n|^2) are uniform on the
simplex while the coordinate phases are independent and uniform.  The
simplex part uses Gauss-Legendre (n=2) or a collapsed Gauss-Jacobi x
Gauss-Legendre square (n=3); phases use the trapezoid rule.

Disc rules implement the zonal (Funk-Hecke) reduction

    int_{S^(2n-1)} F(v . u) dv = (2 pi^(n-1) / (n-2)!) int_D F(z) (1-|z|^2)^(n-2) dA,

with optional Gauss-Jacobi placement of the radial nodes so that kernels
behaving like |z|^p near the origin (p > -2) are integrated accurately.

All reductions are deterministic: fixed chunk boundaries, fixed tree
combine, independent of thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .kernels import chunked_sum, chunked_sum_complex

MATERIALIZE_LIMIT = 4_000_000


def sphere_volume(n: int) -> float:
    """Surface volume of S^(2n-1): 2 pi^n / (n-1)!."""
    return 2.0 * math.pi**n / math.factorial(n - 1)


def funk_hecke_factor(n: int) -> float:
    """Constant 2 pi^(n-1) / (n-2)! of the zonal reduction to the disc."""
    return 2.0 * math.pi ** (n - 1) / math.factorial(n - 2)


def gauss01(m: int):
    """Gauss-Legendre nodes/weights for integrals over [0, 1]."""
    x, w = roots_legendre(m)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_jacobi01(m: int, alpha: float, beta: float):
    """Nodes/weights for int_0^1 g(x) (1-x)^alpha x^beta dx."""
    if alpha <= -1.0 or beta <= -1.0:
        raise ValueError("Gauss-Jacobi exponents must exceed -1")
    x, w = roots_jacobi(m, alpha, beta)
    return 0.5 * (x + 1.0), w / 2.0 ** (alpha + beta + 1.0)


# ---------------------------------------------------------------------------
# circle rules


@dataclass(frozen=True)
class CircleRule:
    """Quadrature on S^1 parametrized by the angle; weights sum to 2 pi."""

    angles: np.ndarray
    weights: np.ndarray
    rule_id: str

    @property
    def num_nodes(self) -> int:
        return self.angles.shape[0]

    @property
    def nodes(self) -> np.ndarray:
        return np.exp(1j * self.angles)


def circle_rule(m: int) -> CircleRule:
    """Uniform (trapezoid) rule; integrates e^(i k theta) exactly for |k| < m."""
    if m < 4 or m % 2 != 0:
        raise ValueError(f"circle rule needs an even node count >= 4, got {m}")
    angles = 2.0 * math.pi * np.arange(m) / m
    weights = np.full(m, 2.0 * math.pi / m)
    return CircleRule(angles, weights, f"circle:{m}")


def arc_gauss_rule(breaks: Sequence[float], per_arc: int = 48) -> CircleRule:
    """Composite Gauss-Legendre rule on the arcs between the given angles.

    Used for support functions with corners: spectral accuracy on each arc.
    ``breaks`` must be strictly increasing and span exactly 2 pi.
    """
    br = np.asarray(breaks, dtype=np.float64)
    if br.ndim != 1 or br.size < 1:
        raise ValueError("need at least one break angle")
    if not np.all(np.diff(br) > 0) or abs((br[-1] - br[0]) - 2.0 * math.pi) > 1e-12:
        br = np.concatenate([br, [br[0] + 2.0 * math.pi]])
    if not np.all(np.diff(br) > 0):
        raise ValueError("break angles must be strictly increasing")
    x, w = gauss01(per_arc)
    angs, wts = [], []
    for a, b in zip(br[:-1], br[1:]):
        angs.append(a + (b - a) * x)
        wts.append((b - a) * w)
    return CircleRule(np.concatenate(angs), np.concatenate(wts),
                      f"arcs:{br.size - 1}x{per_arc}")


# ---------------------------------------------------------------------------
# simplex rules (squared-moduli marginal of the uniform sphere measure)


@dataclass(frozen=True)
class SimplexRule:
    """Probability rule for the uniform measure on the (n-1)-simplex.

    ``factors`` holds the 1-D node sets of the collapsed coordinates
    (t for n=2; (xi, eta) with t = (eta(1-xi), (1-eta)(1-xi), xi) for
    n=3), enabling exact barycentric interpolation of band-limited data.
    """

    n: int
    nodes: np.ndarray    # (N, n) barycentric, strictly interior
    weights: np.ndarray  # sums to 1
    rule_id: str
    factors: tuple = ()

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]


def simplex_rule(n: int, nt: int) -> SimplexRule:
    if n == 2:
        t, w = gauss01(nt)
        nodes = np.column_stack([t, 1.0 - t])
        return SimplexRule(2, nodes, w / w.sum(), f"sim2:{nt}", (t,))
    if n == 3:
        # collapsed square: t3 = xi, (t1, t2) = (1-xi)(eta, 1-eta); the
        # Jacobian (1-xi) goes into the xi rule
        xi, wxi = gauss_jacobi01(nt, 1.0, 0.0)
        eta, weta = gauss01(nt)
        XI, ETA = np.meshgrid(xi, eta, indexing="ij")
        t3 = XI.ravel()
        t1 = ((1.0 - XI) * ETA).ravel()
        t2 = ((1.0 - XI) * (1.0 - ETA)).ravel()
        w = np.outer(wxi, weta).ravel()
        return SimplexRule(3, np.column_stack([t1, t2, t3]), w / w.sum(),
                           f"sim3:{nt}", (xi, eta))
    raise ValueError(f"simplex rule supports n in {{2, 3}}, got {n}")


def simplex_moment(exponents: Sequence[int]) -> float:
    """Dirichlet moment E[prod t_j^a_j] for t uniform on the simplex."""
    a = [int(e) for e in exponents]
    n = len(a)
    num = math.factorial(n - 1)
    for e in a:
        num *= math.factorial(e)
    return num / math.factorial(sum(a) + n - 1)


# ---------------------------------------------------------------------------
# sphere rules


@dataclass
class SphereRule:
    """Product rule on S^(2n-1): simplex nodes x independent phases.

    Nodes are materialized on demand (complex (N, n) array) when the
    total count is below MATERIALIZE_LIMIT; larger rules are consumed
    through :meth:`iter_blocks` or callable-based :func:`integrate`.
    """

    n: int
    simplex: SimplexRule
    n_phase: int
    rule_id: str
    _nodes: Optional[np.ndarray] = field(default=None, repr=False)
    _weights: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def num_nodes(self) -> int:
        return self.simplex.num_nodes * self.n_phase**self.n

    @property
    def volume(self) -> float:
        return sphere_volume(self.n)

    def phase_angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.n_phase) / self.n_phase

    def _block(self, idx: int) -> tuple[np.ndarray, np.ndarray]:
        """All nodes sharing simplex node ``idx``; weight block included."""
        t = self.simplex.nodes[idx]
        m = self.n_phase
        phases = np.exp(1j * self.phase_angles())
        if self.n == 2:
            p1, p2 = np.meshgrid(phases, phases, indexing="ij")
            nodes = np.column_stack([
                math.sqrt(t[0]) * p1.ravel(),
                math.sqrt(t[1]) * p2.ravel(),
            ])
        else:
            p1, p2, p3 = np.meshgrid(phases, phases, phases, indexing="ij")
            nodes = np.column_stack([
                math.sqrt(t[0]) * p1.ravel(),
                math.sqrt(t[1]) * p2.ravel(),
                math.sqrt(t[2]) * p3.ravel(),
            ])
        w = self.volume * self.simplex.weights[idx] / m**self.n
        return nodes, np.full(nodes.shape[0], w)

    def iter_blocks(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        for idx in range(self.simplex.num_nodes):
            yield self._block(idx)

    def materialize(self) -> tuple[np.ndarray, np.ndarray]:
        if self._nodes is None:
            if self.num_nodes > MATERIALIZE_LIMIT:
                raise MemoryError(
                    f"rule {self.rule_id} has {self.num_nodes} nodes; "
                    "use iter_blocks() or integrate() with a callable")
            blocks = list(self.iter_blocks())
            self._nodes = np.concatenate([b[0] for b in blocks])
            self._weights = np.concatenate([b[1] for b in blocks])
        return self._nodes, self._weights

    @property
    def nodes(self) -> np.ndarray:
        return self.materialize()[0]

    @property
    def weights(self) -> np.ndarray:
        return self.materialize()[1]


DEFAULT_LEVELS = {2: (48, 64), 3: (24, 32)}


def sphere_rule(n: int, levels: Optional[tuple[int, int]] = None) -> SphereRule:
    """Product rule on S^(2n-1); ``levels = (simplex order, phases per angle)``."""
    if n not in (2, 3):
        raise ValueError(f"sphere rule supports n in {{2, 3}}, got {n}")
    nt, m = levels if levels is not None else DEFAULT_LEVELS[n]
    simp = simplex_rule(n, nt)
    dim = 2 * n - 1
    phases = "x".join([str(m)] * n)
    return SphereRule(n, simp, m, f"s{dim}:{nt}x{phases}")


# ---------------------------------------------------------------------------
# disc rules


@dataclass(frozen=True)
class DiscRule:
    """Rule for int_D F(z) (1-|z|^2)^alpha dA on the unit disc.

    With ``singular_p`` set, the radial nodes are Gauss-Jacobi placed so
    integrands behaving like |z|^p near 0 are handled at full order (the
    factor x^(p/2), x = |z|^2, is absorbed into the weights).
    """

    alpha: int
    singular_p: Optional[float]
    nodes: np.ndarray    # complex (N,)
    weights: np.ndarray
    rule_id: str

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]


def disc_rule(alpha: int, singular_p: Optional[float] = None, nr: int = 48,
              angular: Union[int, CircleRule] = 64) -> DiscRule:
    if alpha < 0 or alpha != int(alpha):
        raise ValueError(f"weight exponent must be a non-negative integer, got {alpha}")
    if singular_p is not None and not (-2.0 < singular_p <= 1.0):
        raise ValueError(f"singular exponent must lie in (-2, 1], got {singular_p}")
    beta = 0.0 if singular_p is None else singular_p / 2.0
    x, wx = gauss_jacobi01(nr, float(alpha), beta)
    if beta != 0.0:
        wx = wx * x ** (-beta)
    crule = circle_rule(angular) if isinstance(angular, int) else angular
    r = np.sqrt(x)
    z = r[:, None] * np.exp(1j * crule.angles)[None, :]
    w = 0.5 * np.outer(wx, crule.weights)
    sid = "sing" if singular_p is None else f"sing{singular_p:g}"
    return DiscRule(int(alpha), singular_p, z.ravel(), w.ravel(),
                    f"disc:a{alpha}:{sid}:{nr}x{crule.num_nodes}")


# ---------------------------------------------------------------------------
# integration

Rule = Union[CircleRule, SphereRule, DiscRule, SimplexRule]


def _check_finite(vals: np.ndarray, where: str) -> None:
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise ValueError(f"non-finite sample at node {idx} of {where}")


def integrate(rule: Rule, f) -> Union[float, complex]:
    """Weighted sum of samples against the rule, in a fixed deterministic order.

    ``f`` is either an array of samples at the rule nodes or a callable
    evaluated blockwise (mandatory for sphere rules too large to
    materialize).  Non-finite samples raise, naming the offending node.
    """
    if callable(f):
        if isinstance(rule, SphereRule):
            partials = []
            for bidx, (nodes, w) in enumerate(rule.iter_blocks()):
                vals = np.asarray(f(nodes))
                if not np.all(np.isfinite(vals)):
                    sub = int(np.argmax(~np.isfinite(np.asarray(vals))))
                    raise ValueError(
                        f"non-finite sample in block {bidx} at node {sub}, "
                        f"point {nodes[sub]}")
                if np.iscomplexobj(vals):
                    partials.append(chunked_sum_complex(w * vals))
                else:
                    partials.append(chunked_sum(w * vals))
            total = partials[0]
            buf = np.asarray(partials)
            while buf.shape[0] > 1:
                half = buf.shape[0] // 2
                buf = np.concatenate([buf[0:2 * half:2] + buf[1:2 * half:2], buf[2 * half:]])
            total = buf[0]
            return complex(total) if np.iscomplexobj(buf) else float(total)
        if isinstance(rule, CircleRule):
            samples = np.asarray(f(rule.nodes))
        elif isinstance(rule, SimplexRule):
            samples = np.asarray(f(rule.nodes))
        else:
            samples = np.asarray(f(rule.nodes))
    else:
        samples = np.asarray(f)
    if samples.shape[0] != rule.num_nodes:
        raise ValueError(
            f"sample count {samples.shape[0]} does not match rule {rule.rule_id} "
            f"({rule.num_nodes} nodes)")
    _check_finite(samples, rule.rule_id)
    if isinstance(rule, SphereRule):
        w = rule.weights
    else:
        w = rule.weights
    if np.iscomplexobj(samples):
        return chunked_sum_complex(w * samples)
    return chunked_sum(w * np.asarray(samples, dtype=np.float64))


def phase_difference_grid(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Relative-phase grid entering zonal kernel averages.

    Returns (cosines, weights): for n=2 a single angle (cos d); for n=3
    the three pairwise cosines (cos(d1-d2), cos d1, cos d2) on an m x m
    grid.  Weights are the uniform probability weights.
    """
    ang = 2.0 * math.pi * np.arange(m) / m
    if n == 2:
        return np.cos(ang)[:, None], np.full(m, 1.0 / m)
    if n == 3:
        d1, d2 = np.meshgrid(ang, ang, indexing="ij")
        cosines = np.column_stack([
            np.cos((d1 - d2).ravel()),
            np.cos(d1.ravel()),
            np.cos(d2.ravel()),
        ])
        return cosines, np.full(m * m, 1.0 / (m * m))
    raise ValueError(f"phase grid supports n in {{2, 3}}, got {n}")
