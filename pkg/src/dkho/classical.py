"""Classical stroboscopic kicked-oscillator map and stochastic-web scans.

One period is a momentum kick ``P += A sin(w X)`` followed by a clockwise
rotation by ``theta``, the classical analogue of applying the kick phase and
then ``exp(-i a^dag a theta)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from scipy.ndimage import map_coordinates

from . import kernels
from .errors import NotPeriodicError
from .params import ModelParams, PhasePoint, nu_tau

TWO_PI = 2.0 * math.pi


def amplitude_from_kappa(kappa: float) -> float:
    """Classical kick impulse in (X, P) units for a dimensionless kick strength."""
    return 2.0 * math.sqrt(2.0) * kappa / math.pi


@dataclass(frozen=True)
class ClassicalMap:
    theta: float
    amplitude: float
    w: float = TWO_PI

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"spatial frequency must be positive, got {self.w}")
        if not math.isfinite(self.amplitude):
            raise ValueError("kick amplitude must be finite")

    @classmethod
    def from_kappa(cls, kappa: float, theta: float) -> "ClassicalMap":
        return cls(theta=theta, amplitude=amplitude_from_kappa(kappa))

    @classmethod
    def from_params(cls, params: ModelParams, which: int = 1) -> "ClassicalMap":
        kappa = params.kappa1 if which == 1 else params.kappa2
        return cls.from_kappa(kappa, nu_tau(params))


@dataclass(frozen=True)
class OrbitStability:
    trace: float
    classification: Literal["elliptic", "hyperbolic", "parabolic"]


def kick(pp: PhasePoint, cmap: ClassicalMap) -> PhasePoint:
    X, P = pp
    return PhasePoint(X, P + cmap.amplitude * math.sin(cmap.w * X))


def rotate(pp: PhasePoint, theta: float) -> PhasePoint:
    X, P = pp
    c, s = math.cos(theta), math.sin(theta)
    return PhasePoint(X * c + P * s, -X * s + P * c)


def step(pp: PhasePoint, cmap: ClassicalMap) -> PhasePoint:
    return rotate(kick(pp, cmap), cmap.theta)


def orbit(pp0: PhasePoint, cmap: ClassicalMap, n: int, backend: str | None = None) -> np.ndarray:
    """Stroboscopic orbit as an ``(n + 1, 2)`` array, starting with ``pp0``."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return kernels.orbits([tuple(pp0)], cmap.amplitude, cmap.w, cmap.theta, n, backend=backend)[0]


def orbits(ics: Sequence[PhasePoint], cmap: ClassicalMap, n: int, backend: str | None = None) -> np.ndarray:
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return kernels.orbits(np.asarray(ics, dtype=float), cmap.amplitude, cmap.w, cmap.theta, n, backend=backend)


Bounds = tuple[tuple[float, float], tuple[float, float]]


def _norm_resolution(resolution) -> tuple[int, int]:
    if np.isscalar(resolution):
        resolution = (resolution, resolution)
    nx, npix = (int(v) for v in resolution)
    if nx < 2 or npix < 2:
        raise ValueError(f"resolution must be >= 2 per axis, got {resolution}")
    return nx, npix


def _hist_chunk(args):
    ics, amp, w, theta, n, bounds, res, rot, backend = args
    return kernels.web_histogram(ics, amp, w, theta, n, bounds, res, rotation=rot, backend=backend)


def web_scan(
    ics: Sequence[PhasePoint],
    cmap: ClassicalMap,
    n: int,
    bounds: Bounds,
    resolution,
    jobs: int = 1,
    rotation: float = 0.0,
    backend: str | None = None,
) -> np.ndarray:
    """Occupancy histogram of the orbits of all ``ics`` over kicks ``0..n``.

    Returns integer counts indexed ``[X_index, P_index]``. Orbits are split
    across ``jobs`` worker processes and merged by summation, so the result
    does not depend on the worker count.
    """
    ics = np.asarray(ics, dtype=float).reshape(-1, 2)
    if len(ics) == 0:
        raise ValueError("web_scan needs at least one initial condition")
    res = _norm_resolution(resolution)
    (xmin, xmax), (pmin, pmax) = bounds
    if not (xmax > xmin and pmax > pmin):
        raise ValueError(f"empty bounds {bounds}")
    jobs = max(1, min(int(jobs), len(ics)))
    chunks = [
        (c, cmap.amplitude, cmap.w, cmap.theta, n, bounds, res, rotation, backend)
        for c in np.array_split(ics, jobs)
    ]
    if jobs == 1:
        return _hist_chunk(chunks[0])
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_hist_chunk, chunks))
    return np.sum(parts, axis=0)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel().astype(float)
    b = b.ravel().astype(float)
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den if den > 0 else float("nan")


def rotate_histogram(hist: np.ndarray, angle: float) -> np.ndarray:
    """Bilinear resampling of a square-window histogram rotated about its centre."""
    nx, npix = hist.shape
    ci, cj = (nx - 1) / 2.0, (npix - 1) / 2.0
    I, J = np.meshgrid(np.arange(nx) - ci, np.arange(npix) - cj, indexing="ij")
    c, s = math.cos(angle), math.sin(angle)
    # value at output cell = input at the inverse-rotated location
    src_i = I * c + J * s + ci
    src_j = -I * s + J * c + cj
    return map_coordinates(hist.astype(float), [src_i, src_j], order=1, cval=0.0)


def web_symmetry_score(
    ics: Sequence[PhasePoint],
    cmap: ClassicalMap,
    n: int,
    extent: float,
    resolution: int = 64,
    folds: int = 6,
    method: Literal["points", "bilinear"] = "points",
    backend: str | None = None,
) -> float:
    """Pearson correlation between the web histogram and its ``2 pi / folds`` rotation.

    ``method="points"`` rotates every visited point exactly and re-bins it on
    the same grid. ``method="bilinear"`` rotates the binned histogram by
    bilinear resampling, which smears one-cell-wide web lines; it scores a
    perfectly symmetric point set around 0.8 and is kept for comparison.
    """
    bounds = ((-extent, extent), (-extent, extent))
    angle = TWO_PI / folds
    hist = web_scan(ics, cmap, n, bounds, resolution, backend=backend)
    if method == "points":
        rot = web_scan(ics, cmap, n, bounds, resolution, rotation=angle, backend=backend)
    elif method == "bilinear":
        rot = rotate_histogram(hist, angle)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _pearson(hist, rot)


def step_jacobian(pp: PhasePoint, cmap: ClassicalMap) -> np.ndarray:
    c, s = math.cos(cmap.theta), math.sin(cmap.theta)
    R = np.array([[c, s], [-s, c]])
    Kj = np.array([[1.0, 0.0], [cmap.amplitude * cmap.w * math.cos(cmap.w * pp[0]), 1.0]])
    return R @ Kj


def orbit_stability(
    pp0: PhasePoint,
    cmap: ClassicalMap,
    period: int,
    closure_tol: float = 1e-6,
    parabolic_tol: float = 1e-9,
) -> OrbitStability:
    """Linear stability of a periodic orbit from the trace of its monodromy matrix."""
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    pts = orbit(pp0, cmap, period)
    gap = float(np.hypot(*(pts[-1] - pts[0])))
    if gap > closure_tol:
        raise NotPeriodicError(f"orbit from {tuple(pp0)} misses closure after {period} steps by {gap:.3g}")
    M = np.eye(2)
    for pt in pts[:-1]:
        M = step_jacobian(pt, cmap) @ M
    tr = float(np.trace(M))
    if abs(abs(tr) - 2.0) <= parabolic_tol:
        kind = "parabolic"
    elif abs(tr) > 2.0:
        kind = "hyperbolic"
    else:
        kind = "elliptic"
    return OrbitStability(tr, kind)
