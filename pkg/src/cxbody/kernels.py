"""Hot numerical kernels, in numba and pure-numpy variants.

Three kernel families live here:

* deterministic chunked summation (all quadrature reductions),
* phase-averaged zonal Gram matrices (projections of circle-invariant
  functions onto the diagonal bi-degree blocks),
* pairwise kernel quadrature ``sum_j w_j h(z_ij)^p f_j`` for the support
  kernel transform on raw sphere grids.

Both variants use identical chunking/loop orders where it matters for
reproducibility: results do not depend on the numba thread count.
"""

from __future__ import annotations

import numpy as np

from .backend import USE_NUMBA

CHUNK = 4096


def jacobi_recurrence_arrays(kmax: int, alpha: float, beta: float = 0.0):
    """Three-term recurrence coefficients for Jacobi polynomials P_m^(a,b).

    Returns (c1, c2, c3, c4, p1a, p1b) with
    ``P_m = ((c2[m] + c3[m] x) P_{m-1} - c4[m] P_{m-2}) / c1[m]`` for m >= 2
    and ``P_1 = p1a + p1b x``.
    """
    m = np.arange(kmax + 1, dtype=np.float64)
    ab = alpha + beta
    c1 = 2.0 * m * (m + ab) * (2.0 * m + ab - 2.0)
    c2 = (2.0 * m + ab - 1.0) * (alpha * alpha - beta * beta)
    c3 = (2.0 * m + ab - 2.0) * (2.0 * m + ab - 1.0) * (2.0 * m + ab)
    c4 = 2.0 * (m + alpha - 1.0) * (m + beta - 1.0) * (2.0 * m + ab)
    c1[:2] = 1.0  # unused entries, avoid division by zero
    return c1, c2, c3, c4, (alpha - beta) / 2.0, (ab + 2.0) / 2.0


# ---------------------------------------------------------------------------
# deterministic reduction


def _partials_numpy(x: np.ndarray) -> np.ndarray:
    npts = x.shape[0]
    offsets = np.arange(0, npts, CHUNK)
    return np.add.reduceat(x, offsets)


def _combine_pairwise(partials: np.ndarray) -> float:
    # fixed-topology tree combine; independent of thread count
    buf = partials
    while buf.shape[0] > 1:
        half = buf.shape[0] // 2
        tail = buf[2 * half:]
        buf = np.concatenate([buf[0:2 * half:2] + buf[1:2 * half:2], tail])
    return float(buf[0])


def chunked_sum(x: np.ndarray) -> float:
    """Deterministic sum of a float64 vector (fixed chunks, tree combine).

    reduceat is strictly sequential within each fixed chunk, so the
    result is independent of the backend and of any thread count; it
    also beats a compiled parallel reduction at these sizes, so both
    backends share this path.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return _combine_pairwise(_partials_numpy(x))


def chunked_sum_complex(x: np.ndarray) -> complex:
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return complex(chunked_sum(x.real), chunked_sum(x.imag))


# ---------------------------------------------------------------------------
# zonal Gram kernels
#
# K[k, s, t] = sum_d wd[d] * P_k^(alpha,0)(2*q(s,t,d) - 1) / P_k(1)
# with q(s,t,d) = sumsq[s,t] + sum_p cross[s,t,p] * phase_cos[d,p].


def _gram_numpy(sumsq, cross, phase_cos, wd, c1, c2, c3, c4, p1a, p1b, inv_pk1):
    ns, nt = sumsq.shape
    kmaxp1 = inv_pk1.shape[0]
    out = np.empty((kmaxp1, ns, nt))
    for s in range(ns):
        q = sumsq[s][:, None] + cross[s] @ phase_cos.T  # (nt, nd)
        x = 2.0 * q - 1.0
        pm2 = np.ones_like(x)
        out[0, s] = inv_pk1[0] * (pm2 @ wd)
        if kmaxp1 == 1:
            continue
        pm1 = p1a + p1b * x
        out[1, s] = inv_pk1[1] * (pm1 @ wd)
        for k in range(2, kmaxp1):
            pk = ((c2[k] + c3[k] * x) * pm1 - c4[k] * pm2) / c1[k]
            out[k, s] = inv_pk1[k] * (pk @ wd)
            pm2, pm1 = pm1, pk
    return out


# ---------------------------------------------------------------------------
# pairwise kernel quadrature for the support kernel transform
#
# out[i] = sum_j w[j] * h(z_ij)^p * f[j],   z_ij = sum_c u[i,c] * conj(v[j,c])
# h is |z| for the disc and max_j Re(vert_j * conj(z)) for a polygon.


def _jquad_numpy(upts, vnodes, w, fvals, p, verts):
    out = np.empty(upts.shape[0])
    wf = w * fvals
    block = max(1, (1 << 22) // max(vnodes.shape[0], 1))
    for i0 in range(0, upts.shape[0], block):
        z = upts[i0:i0 + block] @ vnodes.conj().T
        if verts.shape[0] == 0:
            h = np.abs(z)
        else:
            h = np.max(z.real[..., None] * verts.real
                       + z.imag[..., None] * verts.imag, axis=-1)
        out[i0:i0 + block] = (h ** p) @ wf
    return out


def _min_abs_pair_numpy(upts, vnodes):
    m = np.inf
    block = max(1, (1 << 22) // max(vnodes.shape[0], 1))
    for i0 in range(0, upts.shape[0], block):
        z = upts[i0:i0 + block] @ vnodes.conj().T
        m = min(m, float(np.min(np.abs(z))))
    return m


if USE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def _gram_nb(sumsq, cross, phase_cos, wd, c1, c2, c3, c4, p1a, p1b, inv_pk1):
        ns, nt = sumsq.shape
        nd = wd.shape[0]
        npair = phase_cos.shape[1]
        kmaxp1 = inv_pk1.shape[0]
        out = np.zeros((kmaxp1, ns, nt))
        for s in prange(ns):
            for t in range(nt):
                base = sumsq[s, t]
                for d in range(nd):
                    q = base
                    for pidx in range(npair):
                        q += cross[s, t, pidx] * phase_cos[d, pidx]
                    x = 2.0 * q - 1.0
                    pm2 = 1.0
                    out[0, s, t] += wd[d] * pm2 * inv_pk1[0]
                    if kmaxp1 > 1:
                        pm1 = p1a + p1b * x
                        out[1, s, t] += wd[d] * pm1 * inv_pk1[1]
                        for k in range(2, kmaxp1):
                            pk = ((c2[k] + c3[k] * x) * pm1 - c4[k] * pm2) / c1[k]
                            out[k, s, t] += wd[d] * pk * inv_pk1[k]
                            pm2 = pm1
                            pm1 = pk
        return out

    @njit(cache=True, parallel=True)
    def _jquad_nb(upts, vnodes, w, fvals, p, verts):
        npts = upts.shape[0]
        nnodes = vnodes.shape[0]
        ncoord = vnodes.shape[1]
        nverts = verts.shape[0]
        out = np.empty(npts)
        for i in prange(npts):
            acc = 0.0
            for j in range(nnodes):
                zr = 0.0
                zi = 0.0
                for c in range(ncoord):
                    ur = upts[i, c].real
                    ui = upts[i, c].imag
                    vr = vnodes[j, c].real
                    vi = vnodes[j, c].imag
                    zr += ur * vr + ui * vi
                    zi += ui * vr - ur * vi
                if nverts == 0:
                    h = np.sqrt(zr * zr + zi * zi)
                else:
                    h = -1e300
                    for q in range(nverts):
                        cand = zr * verts[q].real + zi * verts[q].imag
                        if cand > h:
                            h = cand
                acc += w[j] * h ** p * fvals[j]
            out[i] = acc
        return out

    @njit(cache=True, parallel=True)
    def _min_abs_pair_nb(upts, vnodes):
        npts = upts.shape[0]
        nnodes = vnodes.shape[0]
        ncoord = vnodes.shape[1]
        mins = np.empty(npts)
        for i in prange(npts):
            best = 1e300
            for j in range(nnodes):
                zr = 0.0
                zi = 0.0
                for c in range(ncoord):
                    ur = upts[i, c].real
                    ui = upts[i, c].imag
                    vr = vnodes[j, c].real
                    vi = vnodes[j, c].imag
                    zr += ur * vr + ui * vi
                    zi += ui * vr - ur * vi
                a = zr * zr + zi * zi
                if a < best:
                    best = a
            mins[i] = best
        return np.sqrt(np.min(mins))


def gram_phase_average(sumsq, cross, phase_cos, wd, kmax, alpha):
    """Phase-averaged zonal Gram tensor K[k, s, t] for k = 0..kmax."""
    c1, c2, c3, c4, p1a, p1b = jacobi_recurrence_arrays(kmax, float(alpha))
    from math import comb

    pk1 = np.array([comb(k + int(alpha), k) for k in range(kmax + 1)], dtype=np.float64)
    inv_pk1 = 1.0 / pk1
    args = (np.ascontiguousarray(sumsq), np.ascontiguousarray(cross),
            np.ascontiguousarray(phase_cos), np.ascontiguousarray(wd),
            c1, c2, c3, c4, p1a, p1b, inv_pk1)
    if USE_NUMBA:
        return _gram_nb(*args)
    return _gram_numpy(*args)


def jquad_pairs(upts, vnodes, w, fvals, p, verts=None):
    """out[i] = sum_j w[j] h(u_i . v_j)^p f[j]; disc kernel when verts is None."""
    if verts is None:
        verts = np.empty(0, dtype=np.complex128)
    args = (np.ascontiguousarray(upts, dtype=np.complex128),
            np.ascontiguousarray(vnodes, dtype=np.complex128),
            np.ascontiguousarray(w, dtype=np.float64),
            np.ascontiguousarray(fvals, dtype=np.float64),
            float(p),
            np.ascontiguousarray(verts, dtype=np.complex128))
    if USE_NUMBA:
        return _jquad_nb(*args)
    return _jquad_numpy(*args)


def min_abs_hermitian_pair(upts, vnodes):
    """min_ij |u_i . v_j| (kernel-singularity collision diagnostic)."""
    u = np.ascontiguousarray(upts, dtype=np.complex128)
    v = np.ascontiguousarray(vnodes, dtype=np.complex128)
    if USE_NUMBA:
        return float(_min_abs_pair_nb(u, v))
    return _min_abs_pair_numpy(u, v)
