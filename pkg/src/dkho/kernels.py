"""Hot loops, each with a numba implementation and a pure-numpy fallback.

The backend is chosen once at import time. Set ``DKHO_PURE_NUMPY=1`` to force
the numpy path (also used automatically when numba is not importable). Every
public kernel accepts ``backend="numba" | "numpy"`` to override the default,
which is what the benchmark and the cross-backend tests use.

The numba kernels are compiled without fastmath so both paths perform the same
floating-point operations in the same order; results agree to roundoff (libm
``sin`` may differ in the last ulp, which chaotic orbits amplify over long runs).
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("DKHO_PURE_NUMPY", "").strip().lower()
NUMBA_AVAILABLE = numba is not None
DEFAULT_BACKEND = "numba" if NUMBA_AVAILABLE and _FLAG in ("", "0", "false", "no") else "numpy"

BACKENDS = ("numba", "numpy")


def _resolve(backend: str | None) -> str:
    backend = DEFAULT_BACKEND if backend is None else backend
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def _jit(func):
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


# ---------------------------------------------------------------------------
# classical kicked-oscillator map
# ---------------------------------------------------------------------------


def _orbits_loop(ics, amplitude, w, theta, n):
    c = math.cos(theta)
    s = math.sin(theta)
    m = ics.shape[0]
    out = np.empty((m, n + 1, 2))
    for k in range(m):
        x = ics[k, 0]
        p = ics[k, 1]
        out[k, 0, 0] = x
        out[k, 0, 1] = p
        for i in range(n):
            p = p + amplitude * math.sin(w * x)
            x, p = x * c + p * s, -x * s + p * c
            out[k, i + 1, 0] = x
            out[k, i + 1, 1] = p
    return out


def _orbits_numpy(ics, amplitude, w, theta, n):
    c = math.cos(theta)
    s = math.sin(theta)
    out = np.empty((ics.shape[0], n + 1, 2))
    x = ics[:, 0].copy()
    p = ics[:, 1].copy()
    out[:, 0, 0] = x
    out[:, 0, 1] = p
    for i in range(n):
        p = p + amplitude * np.sin(w * x)
        x, p = x * c + p * s, -x * s + p * c
        out[:, i + 1, 0] = x
        out[:, i + 1, 1] = p
    return out


_orbits_numba = _jit(_orbits_loop)


def orbits(ics, amplitude, w, theta, n, backend=None):
    """Stroboscopic orbits (kick, then rotate) for an ``(m, 2)`` array of initial points.

    Returns an ``(m, n + 1, 2)`` array including the initial points.
    """
    ics = np.ascontiguousarray(np.atleast_2d(np.asarray(ics, dtype=float)))
    if _resolve(backend) == "numba":
        return _orbits_numba(ics, float(amplitude), float(w), float(theta), int(n))
    return _orbits_numpy(ics, float(amplitude), float(w), float(theta), int(n))


def _web_hist_loop(ics, amplitude, w, theta, n, xmin, xmax, pmin, pmax, nx, npix, rot):
    c = math.cos(theta)
    s = math.sin(theta)
    cr = math.cos(rot)
    sr = math.sin(rot)
    hx = nx / (xmax - xmin)
    hp = npix / (pmax - pmin)
    counts = np.zeros((nx, npix), dtype=np.int64)
    for k in range(ics.shape[0]):
        x = ics[k, 0]
        p = ics[k, 1]
        for i in range(n + 1):
            if i > 0:
                p = p + amplitude * math.sin(w * x)
                x, p = x * c + p * s, -x * s + p * c
            xr = x * cr - p * sr
            pr = x * sr + p * cr
            fi = math.floor((xr - xmin) * hx)
            fj = math.floor((pr - pmin) * hp)
            if 0 <= fi < nx and 0 <= fj < npix:
                counts[int(fi), int(fj)] += 1
    return counts


def _web_hist_numpy(ics, amplitude, w, theta, n, xmin, xmax, pmin, pmax, nx, npix, rot):
    c = math.cos(theta)
    s = math.sin(theta)
    cr = math.cos(rot)
    sr = math.sin(rot)
    hx = nx / (xmax - xmin)
    hp = npix / (pmax - pmin)
    flat = np.zeros(nx * npix, dtype=np.int64)
    x = ics[:, 0].copy()
    p = ics[:, 1].copy()
    for i in range(n + 1):
        if i > 0:
            p = p + amplitude * np.sin(w * x)
            x, p = x * c + p * s, -x * s + p * c
        fi = np.floor((x * cr - p * sr - xmin) * hx)
        fj = np.floor((x * sr + p * cr - pmin) * hp)
        ok = (fi >= 0) & (fi < nx) & (fj >= 0) & (fj < npix)
        idx = fi[ok].astype(np.int64) * npix + fj[ok].astype(np.int64)
        flat += np.bincount(idx, minlength=nx * npix)
    return flat.reshape(nx, npix)


_web_hist_numba = _jit(_web_hist_loop)


def web_histogram(ics, amplitude, w, theta, n, bounds, resolution, rotation=0.0, backend=None):
    """Count visits of all orbit points (kicks 0..n) on a regular grid.

    ``bounds`` is ``((xmin, xmax), (pmin, pmax))``; ``resolution`` is ``(nx, np)``.
    With ``rotation`` nonzero every visited point is rotated counterclockwise by
    that angle before binning. Points outside the window are dropped.
    """
    ics = np.ascontiguousarray(np.atleast_2d(np.asarray(ics, dtype=float)))
    (xmin, xmax), (pmin, pmax) = bounds
    nx, npix = resolution
    args = (ics, float(amplitude), float(w), float(theta), int(n),
            float(xmin), float(xmax), float(pmin), float(pmax), int(nx), int(npix), float(rotation))
    if _resolve(backend) == "numba":
        return _web_hist_numba(*args)
    return _web_hist_numpy(*args)


# ---------------------------------------------------------------------------
# coherent-state amplitudes
# ---------------------------------------------------------------------------


def _coherent_loop(betas, dim):
    m = betas.shape[0]
    out = np.zeros((m, dim), dtype=np.complex128)
    for k in range(m):
        b = betas[k]
        r = abs(b)
        if r == 0.0:
            out[k, 0] = 1.0
            continue
        logr = math.log(r)
        # c_{n+1} = c_n * beta / sqrt(n+1), accumulated in log-magnitude
        logc = -0.5 * r * r
        u = b / r
        phase = 1.0 + 0.0j
        for j in range(dim):
            if j > 0:
                logc += logr - 0.5 * math.log(j)
                phase *= u
            if logc > -745.0:
                out[k, j] = math.exp(logc) * phase
    return out


def _coherent_numpy(betas, dim):
    r = np.abs(betas)
    nz = r > 0
    n = np.arange(dim)
    logfac = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    out = np.zeros((betas.shape[0], dim), dtype=np.complex128)
    if np.any(~nz):
        out[~nz, 0] = 1.0
    if np.any(nz):
        rb = r[nz][:, None]
        logc = -0.5 * rb**2 + n[None, :] * np.log(rb) - 0.5 * logfac[None, :]
        ang = np.angle(betas[nz])[:, None] * n[None, :]
        out[nz] = np.exp(logc) * np.exp(1j * ang)
    return out


_coherent_numba = _jit(_coherent_loop)


def coherent_amplitudes(betas, dim, backend=None):
    """Truncated coherent-state amplitudes ``c_n = exp(-|b|^2/2) b^n / sqrt(n!)``.

    ``betas`` may be a scalar or 1-D array; returns shape ``(len(betas), dim)``.
    """
    betas = np.ascontiguousarray(np.atleast_1d(np.asarray(betas, dtype=np.complex128)))
    if _resolve(backend) == "numba":
        return _coherent_numba(betas, int(dim))
    return _coherent_numpy(betas, int(dim))


# ---------------------------------------------------------------------------
# Floquet evolution
# ---------------------------------------------------------------------------


def _evolve_pair_loop(u1, u2, psi, n, top):
    dim = psi.shape[0]
    cross = np.empty(n + 1, dtype=np.complex128)
    leak = np.zeros((n + 1, 2))
    a = psi.copy()
    b = psi.copy()
    for i in range(n + 1):
        if i > 0:
            a = np.dot(u1, a)
            b = np.dot(u2, b)
        acc = 0.0j
        for j in range(dim):
            acc += b[j].conjugate() * a[j]
        cross[i] = acc
        la = 0.0
        lb = 0.0
        for j in range(top, dim):
            la += a[j].real ** 2 + a[j].imag ** 2
            lb += b[j].real ** 2 + b[j].imag ** 2
        leak[i, 0] = la
        leak[i, 1] = lb
    return cross, leak, a, b


def _evolve_pair_numpy(u1, u2, psi, n, top):
    cross = np.empty(n + 1, dtype=np.complex128)
    leak = np.zeros((n + 1, 2))
    a = psi.copy()
    b = psi.copy()
    for i in range(n + 1):
        if i > 0:
            a = u1 @ a
            b = u2 @ b
        cross[i] = np.vdot(b, a)
        leak[i, 0] = np.sum(a[top:].real ** 2 + a[top:].imag ** 2)
        leak[i, 1] = np.sum(b[top:].real ** 2 + b[top:].imag ** 2)
    return cross, leak, a, b


_evolve_pair_numba = _jit(_evolve_pair_loop)


def evolve_pair(u1, u2, psi, n, top, backend=None):
    """Evolve one state under two unitaries in parallel for ``n`` kicks.

    Returns ``(cross, leakage, psi1, psi2)`` where ``cross[k] = <U2^k psi|U1^k psi>``,
    ``leakage[k]`` holds the population in basis states ``>= top`` for both
    branches, and ``psi1``, ``psi2`` are the final states.
    """
    u1 = np.ascontiguousarray(u1, dtype=np.complex128)
    u2 = np.ascontiguousarray(u2, dtype=np.complex128)
    psi = np.ascontiguousarray(psi, dtype=np.complex128)
    if _resolve(backend) == "numba":
        return _evolve_pair_numba(u1, u2, psi, int(n), int(top))
    return _evolve_pair_numpy(u1, u2, psi, int(n), int(top))
