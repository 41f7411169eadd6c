"""Batched fixed-point voltage iteration kernels.

Region sweeps and brute-force searches evaluate the same iteration
``v <- v0 - Z (s* / v*)`` for tens of thousands of independent load
vectors, so this inner loop is the hot path of the package.  Two
implementations with identical semantics are provided:

* a numba ``@njit`` kernel (default when numba imports), and
* a vectorized pure-numpy fallback.

Set ``POLYREST_DISABLE_NUMBA=1`` to force the numpy path.  The
dispatch decision is made once at import time; ``benchmarks/`` calls
both implementations directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_DIVERGED = 2

prange = numba.prange if numba is not None else range

NUMBA_ENABLED = numba is not None and os.environ.get(
    "POLYREST_DISABLE_NUMBA", ""
).lower() not in ("1", "true", "yes")


def fixed_point_batch_numpy(z, loads, v0, tol, max_iter, div_bound):
    """Iterate all rows of ``loads`` to a fixed point simultaneously.

    Parameters
    ----------
    z : (N, N) complex impedance bus matrix.
    loads : (M, N) complex net loads (consumption minus generation).
    v0 : complex slack voltage.
    tol : infinity-norm stopping tolerance on successive iterates.
    max_iter : iteration budget per point.
    div_bound : abort a point once any ``|v_j|`` falls below this.

    Returns
    -------
    v : (M, N) complex final voltage per point.
    status : (M,) int, one of the STATUS_* codes.
    iters : (M,) int, iterations performed per point.
    """
    m, n = loads.shape
    v = np.full((m, n), v0, dtype=np.complex128)
    status = np.full(m, STATUS_MAX_ITER, dtype=np.int64)
    iters = np.full(m, max_iter, dtype=np.int64)
    if n == 0 or m == 0:
        status[:] = STATUS_CONVERGED
        iters[:] = 0
        return v, status, iters
    s_conj = np.conj(loads)
    active = np.arange(m)
    va = v[active]
    zt = z.T.copy()
    for it in range(1, max_iter + 1):
        v_new = v0 - (s_conj[active] / np.conj(va)) @ zt
        collapsed = np.abs(v_new).min(axis=1) < div_bound
        settled = np.abs(v_new - va).max(axis=1) <= tol
        done = collapsed | settled
        if done.any():
            idx = active[done]
            v[idx] = v_new[done]
            status[idx] = np.where(
                collapsed[done], STATUS_DIVERGED, STATUS_CONVERGED
            )
            iters[idx] = it
            keep = ~done
            active = active[keep]
            va = v_new[keep]
            if active.size == 0:
                return v, status, iters
        else:
            va = v_new
    v[active] = va
    return v, status, iters


def _fixed_point_batch_jit(z, loads, v0, tol, max_iter, div_bound):
    m, n = loads.shape
    v = np.empty((m, n), dtype=np.complex128)
    status = np.full(m, STATUS_MAX_ITER, dtype=np.int64)
    iters = np.full(m, max_iter, dtype=np.int64)
    for p in prange(m):
        vp = np.full(n, v0, dtype=np.complex128)
        w = np.empty(n, dtype=np.complex128)
        if n == 0:
            status[p] = STATUS_CONVERGED
            iters[p] = 0
        for it in range(1, max_iter + 1) if n else range(0):
            for j in range(n):
                w[j] = np.conj(loads[p, j]) / np.conj(vp[j])
            collapsed = False
            diff = 0.0
            for j in range(n):
                acc = 0.0 + 0.0j
                for k in range(n):
                    acc += z[j, k] * w[k]
                val = v0 - acc
                d = abs(val - vp[j])
                if d > diff:
                    diff = d
                if abs(val) < div_bound:
                    collapsed = True
                vp[j] = val
            if collapsed:
                status[p] = STATUS_DIVERGED
                iters[p] = it
                break
            if diff <= tol:
                status[p] = STATUS_CONVERGED
                iters[p] = it
                break
        v[p] = vp
    return v, status, iters


if numba is not None:
    fixed_point_batch_numba = numba.njit(cache=True, parallel=True)(
        _fixed_point_batch_jit
    )
else:  # pragma: no cover
    fixed_point_batch_numba = None


def fixed_point_batch(z, loads, v0, tol, max_iter, div_bound):
    """Dispatch to the numba kernel or the numpy fallback."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    loads = np.ascontiguousarray(loads, dtype=np.complex128)
    if NUMBA_ENABLED and loads.shape[1] > 0:
        return fixed_point_batch_numba(
            z, loads, complex(v0), float(tol), int(max_iter), float(div_bound)
        )
    return fixed_point_batch_numpy(
        z, loads, complex(v0), float(tol), int(max_iter), float(div_bound)
    )
