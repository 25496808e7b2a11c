"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba kernels are used when numba imports cleanly and the environment
variable ``STARSLICE_NUMBA`` is not set to ``0``/``false``/``off``.  Both
paths are always importable (``numpy_kernels`` / ``numba_kernels``) so the
test-suite and the benchmark can compare them directly.

Density factor encoding used by :func:`radial_moments`
------------------------------------------------------
Each factor ``k`` multiplies the integrand by a function of ``r * a[:, k]``
where ``a`` is a per-direction scalar supplied by the caller:

* kind 0 -- constant ``params[k, 0]``
* kind 1 -- Gaussian ``params[k, 0] * exp(-(r a)^2 / (2 params[k, 1]^2))``
* kind 2 -- generalized Gaussian ``exp(-((r a) / params[k, 1]) ** params[k, 0])``
"""
import os
import types

import numpy as np

KIND_CONSTANT = 0
KIND_GAUSSIAN = 1
KIND_GENGAUSS = 2


def _env_wants_numba():
    flag = os.environ.get("STARSLICE_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


# --------------------------------------------------------------------------
# numpy implementations


def _lp_gauge_np(X, p):
    A = np.abs(X)
    if np.isinf(p):
        return A.max(axis=1)
    # rescale by the row max so tiny/huge coordinates do not under/overflow
    m = A.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((A / safe[:, None]) ** p, axis=1)
    return np.where(m > 0, safe * s ** (1.0 / p), 0.0)


def _quadform_gauge_np(X, A):
    q = np.einsum("ij,jk,ik->i", X, A, X)
    return np.sqrt(np.maximum(q, 0.0))


def _radial_moments_np(rho, a, kinds, params, t_nodes, w_nodes, k):
    # Gauss-Legendre on [0, rho]: r = rho (t + 1) / 2
    half = 0.5 * rho
    r = half[:, None] * (t_nodes[None, :] + 1.0)
    vals = r ** (k - 1)
    for j in range(kinds.shape[0]):
        kind = kinds[j]
        if kind == KIND_CONSTANT:
            vals = vals * params[j, 0]
        elif kind == KIND_GAUSSIAN:
            ra = r * a[:, j][:, None]
            vals = vals * (params[j, 0] * np.exp(-0.5 * (ra / params[j, 1]) ** 2))
        else:
            ra = r * a[:, j][:, None]
            vals = vals * np.exp(-((ra / params[j, 1]) ** params[j, 0]))
    return half * (vals @ w_nodes)


numpy_kernels = types.SimpleNamespace(
    lp_gauge=_lp_gauge_np,
    quadform_gauge=_quadform_gauge_np,
    radial_moments=_radial_moments_np,
)


# --------------------------------------------------------------------------
# numba implementations

numba_kernels = None
try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

if nb is not None:
    _jit = dict(nogil=True, cache=True, fastmath=False)

    @nb.njit(**_jit)
    def _lp_gauge_nb(X, p):
        N, n = X.shape
        out = np.empty(N)
        for i in range(N):
            m = 0.0
            for j in range(n):
                v = abs(X[i, j])
                if v > m:
                    m = v
            if m == 0.0 or np.isinf(p):
                out[i] = m
                continue
            s = 0.0
            for j in range(n):
                s += (abs(X[i, j]) / m) ** p
            out[i] = m * s ** (1.0 / p)
        return out

    @nb.njit(**_jit)
    def _quadform_gauge_nb(X, A):
        N, n = X.shape
        out = np.empty(N)
        for i in range(N):
            q = 0.0
            for j in range(n):
                row = 0.0
                for l in range(n):
                    row += A[j, l] * X[i, l]
                q += X[i, j] * row
            out[i] = np.sqrt(q) if q > 0.0 else 0.0
        return out

    @nb.njit(**_jit)
    def _radial_moments_nb(rho, a, kinds, params, t_nodes, w_nodes, k):
        N = rho.shape[0]
        J = t_nodes.shape[0]
        K = kinds.shape[0]
        out = np.empty(N)
        for i in range(N):
            half = 0.5 * rho[i]
            acc = 0.0
            for jj in range(J):
                r = half * (t_nodes[jj] + 1.0)
                v = r ** (k - 1)
                for f in range(K):
                    kind = kinds[f]
                    if kind == 0:
                        v *= params[f, 0]
                    elif kind == 1:
                        z = r * a[i, f] / params[f, 1]
                        v *= params[f, 0] * np.exp(-0.5 * z * z)
                    else:
                        z = r * a[i, f] / params[f, 1]
                        v *= np.exp(-(z ** params[f, 0]))
                acc += w_nodes[jj] * v
            out[i] = half * acc
        return out

    numba_kernels = types.SimpleNamespace(
        lp_gauge=_lp_gauge_nb,
        quadform_gauge=_quadform_gauge_nb,
        radial_moments=_radial_moments_nb,
    )


USE_NUMBA = numba_kernels is not None and _env_wants_numba()
BACKEND = "numba" if USE_NUMBA else "numpy"
_active = numba_kernels if USE_NUMBA else numpy_kernels


def lp_gauge(X, p):
    """Row-wise l_p (quasi-)norm of an ``(N, n)`` array; ``p = inf`` gives max-norm."""
    return _active.lp_gauge(np.ascontiguousarray(X, dtype=np.float64), float(p))


def quadform_gauge(X, A):
    """Row-wise ``sqrt(x^T A x)`` for a positive-definite ``A``."""
    return _active.quadform_gauge(
        np.ascontiguousarray(X, dtype=np.float64), np.ascontiguousarray(A, dtype=np.float64)
    )


def radial_moments(rho, a, kinds, params, t_nodes, w_nodes, k):
    """``int_0^rho r^(k-1) prod_f phi_f(r a_f) dr`` per direction by Gauss-Legendre."""
    return _active.radial_moments(
        np.ascontiguousarray(rho, dtype=np.float64),
        np.ascontiguousarray(a, dtype=np.float64).reshape(len(rho), -1),
        np.ascontiguousarray(kinds, dtype=np.int64),
        np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 2),
        np.ascontiguousarray(t_nodes, dtype=np.float64),
        np.ascontiguousarray(w_nodes, dtype=np.float64),
        int(k),
    )
