"""Scalar special-function layer: Gamma, Jacobi and disk polynomials.

Everything downstream (multiplier tables, projection kernels, closed-form
transforms) reduces to these three families plus the dimensions of the
bi-degree harmonic spaces on S^(2n-1).

Conventions pinned here:

* ``disk_poly`` is normalized to 1 at z = 1;
* the radial part of ``disk_poly(n, k, l, .)`` is the Jacobi polynomial
  P_min(k,l)^(n-2, |k-l|) evaluated at 2|z|^2 - 1;
* ``harmonic_dim`` uses the unitary-group branching formula
  (k+l+n-1)/(n-1) * C(k+n-2, k) * C(l+n-2, l).
"""

from __future__ import annotations

import math

import numpy as np

GAMMA_MAX_ARG = 50.0

# Lanczos g=7, 9-term coefficient set; ~1e-14 relative over the range we allow.
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function via a Lanczos series, reflected for x < 1/2.

    Raises ValueError at non-positive integers (poles) and for |x| > 50
    (beyond the range any closed-form multiplier needs).
    """
    x = float(x)
    if abs(x) > GAMMA_MAX_ARG:
        raise ValueError(f"gamma_fn argument {x} outside supported range |x| <= {GAMMA_MAX_ARG}")
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma_fn pole at non-positive integer {x}")
    if x < 0.5:
        # Euler reflection; sin(pi x) is safe here, |x| <= 50
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


def _lanczos(x: float) -> float:
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i in range(1, 9):
        acc += _LANCZOS_C[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def gamma_ratio(num_args, den_args) -> float:
    """Product of Gamma over numerator args divided by denominator args."""
    val = 1.0
    for a in num_args:
        val *= gamma_fn(a)
    for a in den_args:
        val /= gamma_fn(a)
    return val


def jacobi_poly(m: int, a: float, b: float, x):
    """Jacobi polynomial P_m^(a,b)(x) by the three-term recurrence.

    ``x`` may be a float or an ndarray in [-1, 1] (a hair of slack is
    tolerated for rounding at the endpoints).
    """
    if m < 0 or m != int(m):
        raise ValueError(f"degree must be a non-negative integer, got {m}")
    if a <= -1.0 or b <= -1.0:
        raise ValueError(f"Jacobi parameters must exceed -1, got a={a}, b={b}")
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(arr) > 1.0 + 1e-9):
        raise ValueError("jacobi_poly argument outside [-1, 1]")
    m = int(m)
    pm2 = np.ones_like(arr)
    if m == 0:
        return pm2 if isinstance(x, np.ndarray) else float(pm2)
    pm1 = (a - b) / 2.0 + (a + b + 2.0) / 2.0 * arr
    for j in range(2, m + 1):
        c1 = 2.0 * j * (j + a + b) * (2.0 * j + a + b - 2.0)
        c2 = (2.0 * j + a + b - 1.0) * (a * a - b * b)
        c3 = (2.0 * j + a + b - 2.0) * (2.0 * j + a + b - 1.0) * (2.0 * j + a + b)
        c4 = 2.0 * (j + a - 1.0) * (j + b - 1.0) * (2.0 * j + a + b)
        pm2, pm1 = pm1, ((c2 + c3 * arr) * pm1 - c4 * pm2) / c1
    return pm1 if isinstance(x, np.ndarray) else float(pm1)


def disk_poly(n: int, k: int, l: int, z):
    """Zonal bi-degree-(k, l) element on S^(2n-1) as a function on the disc.

    For z = r e^(i theta), |z| <= 1:

        r^|k-l| e^(i (k-l) theta) * P_m^(n-2, |k-l|)(2 r^2 - 1) / P_m(1),

    m = min(k, l).  Value 1 at z = 1; conjugating z swaps (k, l); and
    disk_poly(n, k, l, c z) = c^k conj(c)^l disk_poly(n, k, l, z) for |c|=1.
    """
    if n < 2:
        raise ValueError(f"complex dimension must be >= 2, got {n}")
    if k < 0 or l < 0:
        raise ValueError(f"bi-degree indices must be >= 0, got ({k}, {l})")
    zarr = np.asarray(z, dtype=np.complex128)
    r2 = (zarr * zarr.conj()).real
    if np.any(r2 > 1.0 + 1e-12):
        raise ValueError("disk_poly argument must satisfy |z| <= 1")
    m = min(k, l)
    d = abs(k - l)
    xr = np.asarray(np.minimum(2.0 * r2 - 1.0, 1.0))
    radial = np.asarray(jacobi_poly(m, n - 2, d, xr)) / math.comb(m + n - 2, m)
    if d == 0:
        out = radial.astype(np.complex128)
    elif k > l:
        out = zarr ** d * radial
    else:
        out = zarr.conj() ** d * radial
    return out if isinstance(z, np.ndarray) else complex(out)


def disk_poly_unit_value(n: int, k: int, l: int) -> float:
    """Value of the unnormalized radial factor at z = 1 (always P_m(1))."""
    return float(math.comb(min(k, l) + n - 2, min(k, l)))


def harmonic_dim(n: int, k: int, l: int) -> int:
    """Dimension of the space of bi-degree-(k, l) spherical harmonics on S^(2n-1)."""
    if n < 2:
        raise ValueError(f"complex dimension must be >= 2, got {n}")
    if k < 0 or l < 0:
        raise ValueError(f"bi-degree indices must be >= 0, got ({k}, {l})")
    num = (k + l + n - 1) * math.comb(k + n - 2, k) * math.comb(l + n - 2, l)
    q, r = divmod(num, n - 1)
    assert r == 0, "branching dimension formula must divide exactly"
    return q


def harmonic_dim_total(n: int, m: int) -> int:
    """dim of all degree-m spherical harmonics on S^(2n-1) (oracle for sums)."""
    d = 2 * n
    if m == 0:
        return 1
    if m == 1:
        return d
    return math.comb(d + m - 1, m) - math.comb(d + m - 3, m - 2)
