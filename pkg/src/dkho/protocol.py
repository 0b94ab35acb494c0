"""Peres overlap, Ramsey readout and Husimi Q functions.

Two internal levels ``g1``, ``g2`` carry the motional state through Floquet
operators with kick strengths ``kappa1``, ``kappa2``. Besides ``F_j`` each kick
multiplies branch ``j`` by ``exp(-i kappa_j / (sqrt(2) eta^2))``; those phases
are combined here into the Ramsey phase ``phi_n = (kappa2 - kappa1) n / (sqrt(2) eta^2)``.

Readout conventions
-------------------
``"derived"`` (default) follows from the cat state, the pi/2 pulse and the
per-branch phases::

    1 - 2 P_g  = cos(phi) Re(c) - sin(phi) Im(c)
    1 - 2 P_g' = sin(phi) Re(c) + cos(phi) Im(c)

The 2x2 system is a rotation, so the overlap can be recovered at every kick.
``"printed"`` uses ``+ sin(phi) Im(c)`` in the first row, the form usually
quoted for this protocol; its determinant is ``cos(2 phi)`` and kicks with
``cos(2 phi) ~ 0`` cannot be inverted. :func:`ramsey_direct` simulates the
full two-level evolution and agrees with ``"derived"``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from scipy.special import gammaincc

from . import kernels
from .errors import ConsistencyError, SingularKickIndexError
from .fockspace import (
    FloquetOperator,
    check_leakage,
    coherent_state,
    iter_evolve,
    kick_phase_scale,
    top_window,
)
from .params import alpha_from_phasepoint

Convention = Literal["derived", "printed"]
CONVENTIONS = ("derived", "printed")
PROB_EPS = 1e-9


def ramsey_phase(n, delta_kappa: float, eta: float):
    return delta_kappa * np.asarray(n, dtype=float) / (math.sqrt(2.0) * eta**2)


def _readout_matrix(phi, convention: Convention):
    c, s = np.cos(phi), np.sin(phi)
    if convention == "derived":
        return c, -s, s, c
    if convention == "printed":
        return c, s, s, c
    raise ValueError(f"unknown convention {convention!r}")


def readout_determinant(phi, convention: Convention = "derived"):
    a, b, c, d = _readout_matrix(phi, convention)
    return a * d - b * c


def ramsey_probabilities(cross, n, delta_kappa: float, eta: float, convention: Convention = "derived"):
    """Excitation probabilities ``(P_g, P_g')`` for cross overlap(s) ``cross`` at kick(s) ``n``.

    Raises :class:`ConsistencyError` if a value falls outside ``[-1e-9, 1 + 1e-9]``;
    values are never clipped.
    """
    cross = np.asarray(cross, dtype=np.complex128)
    a, b, c, d = _readout_matrix(ramsey_phase(n, delta_kappa, eta), convention)
    pg = 0.5 * (1.0 - (a * cross.real + b * cross.imag))
    pgp = 0.5 * (1.0 - (c * cross.real + d * cross.imag))
    for name, v in (("P_g", pg), ("P_g'", pgp)):
        if np.any(v < -PROB_EPS) or np.any(v > 1.0 + PROB_EPS):
            raise ConsistencyError(f"{name} outside [0, 1]: range [{np.min(v):.3g}, {np.max(v):.3g}]")
    if pg.ndim == 0:
        return float(pg), float(pgp)
    return pg, pgp


def reconstruct_cross(P_g, P_g_prime, delta_kappa, eta, n, convention: Convention = "derived"):
    """Solve the readout system for ``Re c + i Im c``; also return the determinant.

    Vectorised; no singularity check.
    """
    a, b, c, d = _readout_matrix(ramsey_phase(n, delta_kappa, eta), convention)
    y1 = 1.0 - 2.0 * np.asarray(P_g, dtype=float)
    y2 = 1.0 - 2.0 * np.asarray(P_g_prime, dtype=float)
    det = a * d - b * c
    with np.errstate(divide="ignore", invalid="ignore"):
        re = (d * y1 - b * y2) / det
        im = (-c * y1 + a * y2) / det
    return re + 1j * im, det


def reconstruct_overlap(
    P_g: float,
    P_g_prime: float,
    delta_kappa: float,
    eta: float,
    n: int,
    convention: Convention = "derived",
    singular_threshold: float = 1e-3,
) -> float:
    """Overlap ``O`` recovered from one pair of measured probabilities.

    Raises :class:`SingularKickIndexError` when ``|det| <= singular_threshold``.
    """
    cross, det = reconstruct_cross(P_g, P_g_prime, delta_kappa, eta, n, convention)
    if abs(float(det)) <= singular_threshold:
        raise SingularKickIndexError(int(n), abs(float(det)))
    return float(abs(complex(cross)) ** 2)


class OverlapRecord(NamedTuple):
    n: int
    cross: complex
    O: float
    P_g: float
    P_g_prime: float
    det: float


@dataclass(frozen=True)
class OverlapSeries:
    n: np.ndarray
    cross: np.ndarray
    O: np.ndarray
    P_g: np.ndarray
    P_g_prime: np.ndarray
    det: np.ndarray
    O_reconstructed: np.ndarray
    leakage: np.ndarray = field(repr=False)  # (n + 1, 2): both branches
    convention: str = "derived"

    def __len__(self):
        return len(self.n)

    def __getitem__(self, k) -> OverlapRecord:
        return OverlapRecord(int(self.n[k]), complex(self.cross[k]), float(self.O[k]),
                             float(self.P_g[k]), float(self.P_g_prime[k]), float(self.det[k]))

    def records(self) -> list[OverlapRecord]:
        return [self[k] for k in range(len(self))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("n,re_cross,im_cross,O,P_g,P_g_prime,det,O_reconstructed\n")
            for k in range(len(self)):
                c = self.cross[k]
                fh.write(
                    f"{self.n[k]},{c.real:.17g},{c.imag:.17g},{self.O[k]:.17g},{self.P_g[k]:.17g},"
                    f"{self.P_g_prime[k]:.17g},{self.det[k]:.17g},{self.O_reconstructed[k]:.17g}\n"
                )


def overlap_series(
    F1: FloquetOperator,
    F2: FloquetOperator,
    alpha: complex,
    n_max: int,
    convention: Convention = "derived",
    singular_threshold: float = 1e-3,
    warn_at: float = 1e-6,
    error_at: float | None = 1e-3,
    coherent_tol: float = 1e-8,
    backend: str | None = None,
) -> OverlapSeries:
    """Evolve ``|alpha>`` under ``F1`` and ``F2`` in parallel and record the Peres overlap.

    Each kick costs two matrix-vector products. ``O_reconstructed`` is NaN at
    kick indices where the readout system is singular.
    """
    if F1.dim != F2.dim:
        raise ValueError(f"operator dimensions differ: {F1.dim} vs {F2.dim}")
    if F1.eta != F2.eta or F1.theta != F2.theta:
        raise ValueError("F1 and F2 must share eta and theta")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    psi0 = coherent_state(alpha, F1.dim, tol=coherent_tol)
    top = top_window(F1.dim)
    cross, leak, _, _ = kernels.evolve_pair(F1.matrix, F2.matrix, psi0, n_max, top, backend=backend)
    check_leakage(leak, F1.dim, warn_at, error_at)
    n = np.arange(n_max + 1)
    dk = F2.kappa - F1.kappa
    pg, pgp = ramsey_probabilities(cross, n, dk, F1.eta, convention)
    rec, det = reconstruct_cross(pg, pgp, dk, F1.eta, n, convention)
    O_rec = np.where(np.abs(det) > singular_threshold, np.abs(rec) ** 2, np.nan)
    return OverlapSeries(
        n=n,
        cross=cross,
        O=np.abs(cross) ** 2,
        P_g=pg,
        P_g_prime=pgp,
        det=np.abs(det),
        O_reconstructed=O_rec,
        leakage=leak,
        convention=convention,
    )


def ramsey_direct(
    F1: FloquetOperator,
    F2: FloquetOperator,
    alpha: complex,
    n: int,
    beta: complex | None = None,
) -> tuple[float, float]:
    """``(P_g, P_g')`` from an explicit simulation of the two-level protocol.

    Prepares ``(|g1>|alpha> + |g2>|beta>)/sqrt(2)`` (and the variant with ``i``
    on ``|g2>``), applies ``n`` kicks including each branch's constant
    ``+1`` phase, then the pi/2 pulse ``|g1> -> (|g1>+|g2>)/sqrt2``,
    ``|g2> -> (|g2>-|g1>)/sqrt2`` and returns the ``|g1>`` population.
    """
    dim = F1.dim
    a = coherent_state(alpha, dim)
    b = a if beta is None else coherent_state(beta, dim)
    ph1 = np.exp(-1j * kick_phase_scale(F1.kappa, F1.eta))
    ph2 = np.exp(-1j * kick_phase_scale(F2.kappa, F2.eta))
    out = []
    for weight in (1.0, 1j):
        g1 = a / math.sqrt(2.0)
        g2 = weight * b / math.sqrt(2.0)
        for _ in range(n):
            g1 = ph1 * (F1.matrix @ g1)
            g2 = ph2 * (F2.matrix @ g2)
        after = (g1 - g2) / math.sqrt(2.0)
        out.append(float(np.vdot(after, after).real))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Husimi Q function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QGridSpec:
    x_range: tuple[float, float]
    p_range: tuple[float, float]
    resolution: tuple[int, int]

    @classmethod
    def square(cls, extent: float, resolution: int, center: tuple[float, float] = (0.0, 0.0)) -> "QGridSpec":
        cx, cp = center
        return cls((cx - extent, cx + extent), (cp - extent, cp + extent), (resolution, resolution))

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        (x0, x1), (p0, p1) = self.x_range, self.p_range
        nx, npix = self.resolution
        dx, dp = (x1 - x0) / nx, (p1 - p0) / npix
        return x0 + dx * (np.arange(nx) + 0.5), p0 + dp * (np.arange(npix) + 0.5)

    @property
    def cell(self) -> tuple[float, float]:
        (x0, x1), (p0, p1) = self.x_range, self.p_range
        return (x1 - x0) / self.resolution[0], (p1 - p0) / self.resolution[1]


@dataclass(frozen=True)
class QGrid:
    """Q values on a phase-space grid, indexed ``[X_index, P_index]``; masked cells are NaN."""

    spec: QGridSpec
    eta: float
    values: np.ndarray
    masked: int

    @property
    def X(self) -> np.ndarray:
        return self.spec.axes()[0]

    @property
    def P(self) -> np.ndarray:
        return self.spec.axes()[1]

    @property
    def area_element(self) -> float:
        """Cell area in the ``d^2 alpha`` measure: ``(pi / 2 eta)^2 dX dP``."""
        dx, dp = self.spec.cell
        return (math.pi / (2.0 * self.eta)) ** 2 * dx * dp

    def mass(self, where: np.ndarray | None = None) -> float:
        v = np.where(np.isnan(self.values), 0.0, self.values)
        if where is not None:
            v = np.where(where, v, 0.0)
        return float(v.sum() * self.area_element)

    def radius(self) -> np.ndarray:
        X, P = np.meshgrid(self.X, self.P, indexing="ij")
        return np.hypot(X, P)

    def mass_outside(self, radius: float) -> float:
        return self.mass(self.radius() > radius)

    def to_csv(self, path) -> None:
        X, P = self.X, self.P
        with open(path, "w", newline="") as fh:
            fh.write("X,P,Q\n")
            for i, x in enumerate(X):
                for j, p in enumerate(P):
                    fh.write(f"{x:.17g},{p:.17g},{self.values[i, j]:.17g}\n")


def _grid_alphas(spec: QGridSpec, eta: float) -> np.ndarray:
    X, P = spec.axes()
    XX, PP = np.meshgrid(X, P, indexing="ij")
    return (math.pi / (2.0 * eta)) * (XX + 1j * PP).ravel()


def _q_from_states(states: np.ndarray, spec: QGridSpec, eta: float, mask_tol: float, chunk: int, weights=None):
    """Mean of ``|<beta|psi_k>|^2 / pi`` over the rows of ``states``.

    Picks the cheaper of direct projection and an averaged density matrix.
    """
    states = np.atleast_2d(states)
    k, dim = states.shape
    w = np.full(k, 1.0 / k) if weights is None else np.asarray(weights, dtype=float)
    betas = _grid_alphas(spec, eta)
    use_rho = k > dim
    if use_rho:
        rho = (states.T * w) @ states.conj()  # rho[m, n] = sum_k w_k psi_m psi_n^*
    out = np.empty(betas.shape[0])
    masked = 0
    for start in range(0, betas.shape[0], chunk):
        G = kernels.coherent_amplitudes(betas[start : start + chunk], dim)
        deficiency = 1.0 - np.sum(np.abs(G) ** 2, axis=1)
        if use_rho:
            q = np.einsum("gm,gm->g", G.conj(), G @ rho.T).real
        else:
            q = (np.abs(G.conj() @ states.T) ** 2) @ w
        bad = deficiency > mask_tol
        q = q / math.pi
        q[bad] = np.nan
        masked += int(bad.sum())
        out[start : start + chunk] = q
    return out.reshape(spec.resolution), masked


def q_function(psi: np.ndarray, spec: QGridSpec, eta: float, mask_tol: float = 1e-6, chunk: int = 4096) -> QGrid:
    """Husimi ``Q(beta) = |<beta|psi>|^2 / pi`` on an (X, P) grid.

    Grid points whose coherent state is truncated by more than ``mask_tol`` are NaN.
    """
    values, masked = _q_from_states(np.asarray(psi)[None, :], spec, eta, mask_tol, chunk)
    return QGrid(spec, eta, values, masked)


def time_averaged_q(
    F: FloquetOperator,
    alpha0: complex,
    n_kicks: int,
    stride: int,
    spec: QGridSpec,
    mask_tol: float = 1e-6,
    warn_at: float = 1e-6,
    error_at: float | None = 1e-3,
    chunk: int = 4096,
) -> tuple[QGrid, np.ndarray]:
    """Q function averaged over kicks ``0, stride, 2 stride, ... <= n_kicks``.

    Also returns the averaged Fock populations.
    """
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    psi0 = coherent_state(alpha0, F.dim)
    top = top_window(F.dim)
    picks = []
    leak = []
    for k, psi in enumerate(iter_evolve(F, psi0, n_kicks)):
        leak.append(float(np.sum(np.abs(psi[top:]) ** 2)))
        if k % stride == 0:
            picks.append(psi)
    check_leakage(np.array(leak), F.dim, warn_at, error_at)
    states = np.array(picks)
    values, masked = _q_from_states(states, spec, F.eta, mask_tol, chunk)
    populations = np.mean(np.abs(states) ** 2, axis=0)
    return QGrid(spec, F.eta, values, masked), populations


def radial_mass_outside(populations: np.ndarray, eta: float, radius: float) -> float:
    """Exact Q mass beyond a phase-space radius for a state with Fock populations ``p_n``.

    The angular integral of ``|<beta|n>|^2`` leaves ``sum_n p_n Gamma(n+1, R^2) / n!``
    with ``R = pi radius / (2 eta)``.
    """
    R = abs(alpha_from_phasepoint((radius, 0.0), eta))
    n = np.arange(len(populations))
    return float(np.sum(populations * gammaincc(n + 1, R**2)))
