"""Truncated Fock-basis operators, coherent states and Floquet evolution."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammainc

from . import kernels
from .errors import TruncationError, TruncationWarning
from .params import PhasePoint

SQRT2 = math.sqrt(2.0)


def ladder_matrix(dim: int) -> np.ndarray:
    """Dense real matrix of ``a^dag + a`` in the first ``dim`` Fock states."""
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    off = np.sqrt(np.arange(1, dim, dtype=float))
    return np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class QuadratureEigensystem:
    """Eigenpairs of the truncated ``a^dag + a``; ``vectors[:, i]`` belongs to ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@lru_cache(maxsize=16)
def quadrature_eigensystem(dim: int) -> QuadratureEigensystem:
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    off = np.sqrt(np.arange(1, dim, dtype=float))
    try:
        x, V = eigh_tridiagonal(np.zeros(dim), off)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ArithmeticError(f"tridiagonal eigensolve failed for dim={dim}") from exc
    x.setflags(write=False)
    V.setflags(write=False)
    return QuadratureEigensystem(x, V)


def kick_phase_scale(kappa: float, eta: float) -> float:
    """Prefactor ``kappa / (sqrt(2) eta^2)`` of the cosine kick phase."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return kappa / (SQRT2 * eta**2)


def kick_unitary(kappa: float, eta: float, dim: int) -> np.ndarray:
    """``exp(-i kappa cos(2 eta (a^dag + a)) / (sqrt(2) eta^2))`` in the truncated basis."""
    es = quadrature_eigensystem(dim)
    arg = kick_phase_scale(kappa, eta) * np.cos(2.0 * eta * es.values)
    V = es.vectors
    # V diag(e^{-i arg}) V^T as two real products
    return (V * np.cos(arg)) @ V.T - 1j * ((V * np.sin(arg)) @ V.T)


@dataclass(frozen=True)
class FloquetOperator:
    """One-period propagator ``diag(e^{-i n theta}) . kick`` (kick first)."""

    matrix: np.ndarray = field(repr=False)
    kappa: float
    eta: float
    theta: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        return self.matrix @ other


def floquet(kappa: float, eta: float, theta: float, dim: int) -> FloquetOperator:
    """Build the Floquet operator for one kick strength.

    The constant phase ``exp(-i kappa / (sqrt(2) eta^2))`` per kick, coming from
    the ``+1`` in the kick potential, is not included here.
    """
    U = np.exp(-1j * theta * np.arange(dim))[:, None] * kick_unitary(kappa, eta, dim)
    U.setflags(write=False)
    return FloquetOperator(U, float(kappa), float(eta), float(theta))


def required_dim(alpha: complex, tol: float = 1e-8) -> int:
    """Smallest basis size whose coherent-state truncation loss is at most ``tol``."""
    lam = abs(alpha) ** 2
    lo = max(2, int(lam))
    # P(Poisson(lam) >= n) = gammainc(n, lam)
    n = lo
    stepsize = max(8, int(math.sqrt(lam + 1)))
    while gammainc(n, lam) > tol:
        n += stepsize
    while n > lo and gammainc(n - 1, lam) <= tol:
        n -= 1
    return n


def coherent_state(alpha: complex, dim: int, tol: float = 1e-8, backend: str | None = None) -> np.ndarray:
    """Truncated coherent state ``|alpha>``.

    Raises :class:`TruncationError` if the missing norm ``1 - ||c||^2`` exceeds ``tol``.
    """
    if dim < 2:
        raise ValueError(f"Fock dimension must be >= 2, got {dim}")
    c = kernels.coherent_amplitudes(alpha, dim, backend=backend)[0]
    deficiency = 1.0 - float(np.vdot(c, c).real)
    if deficiency > tol:
        raise TruncationError(
            f"coherent state alpha={complex(alpha):.4g} loses {deficiency:.3g} of its norm in dim={dim}",
            suggested_dim=required_dim(alpha, tol),
        )
    return c


def truncation_deficiency(alpha: complex, dim: int) -> float:
    c = kernels.coherent_amplitudes(alpha, dim)[0]
    return 1.0 - float(np.vdot(c, c).real)


def fock_state(n: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.complex128)
    v[n] = 1.0
    return v


def top_window(dim: int, fraction: float = 0.1) -> int:
    """Index of the first basis state in the leakage window (top ``fraction`` of the basis)."""
    return dim - max(1, int(math.ceil(fraction * dim)))


def check_leakage(leakage: np.ndarray, dim: int, warn_at: float = 1e-6, error_at: float | None = 1e-3) -> None:
    """Warn or raise according to the largest population seen at the top of the basis."""
    worst = float(np.max(leakage)) if np.size(leakage) else 0.0
    if error_at is not None and worst > error_at:
        raise TruncationError(
            f"population {worst:.3g} reached the top of a dim={dim} basis (error threshold {error_at:g})",
            suggested_dim=2 * dim,
        )
    if worst > warn_at:
        warnings.warn(
            f"population {worst:.3g} reached the top of a dim={dim} basis (warn threshold {warn_at:g})",
            TruncationWarning,
            stacklevel=3,
        )


@dataclass(frozen=True)
class Evolution:
    states: np.ndarray  # (n + 1, dim)
    leakage: np.ndarray  # (n + 1,)


def iter_evolve(F: FloquetOperator, psi0: np.ndarray, n: int):
    """Yield ``psi0, F psi0, ..., F^n psi0`` without storing them."""
    psi = np.asarray(psi0, dtype=np.complex128)
    if psi.shape != (F.dim,):
        raise ValueError(f"state has shape {psi.shape}, operator has dim {F.dim}")
    yield psi
    for _ in range(n):
        psi = F.matrix @ psi
        yield psi


def evolve_series(
    F: FloquetOperator,
    psi0: np.ndarray,
    n: int,
    warn_at: float = 1e-6,
    error_at: float | None = 1e-3,
    window: float = 0.1,
) -> Evolution:
    """States after ``0..n`` kicks, with a per-kick leakage monitor."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    top = top_window(F.dim, window)
    states = np.empty((n + 1, F.dim), dtype=np.complex128)
    for k, psi in enumerate(iter_evolve(F, psi0, n)):
        states[k] = psi
    leakage = np.sum(np.abs(states[:, top:]) ** 2, axis=1)
    check_leakage(leakage, F.dim, warn_at, error_at)
    return Evolution(states, leakage)


def mean_annihilation(psi: np.ndarray) -> complex:
    """``<a> = sum_n conj(c_n) c_{n+1} sqrt(n+1)``."""
    psi = np.asarray(psi)
    return complex(np.sum(np.conj(psi[:-1]) * psi[1:] * np.sqrt(np.arange(1, psi.shape[0]))))


def expectation_XP(psi: np.ndarray, eta: float) -> PhasePoint:
    """Quantum centroid in (X, P) units."""
    a = mean_annihilation(psi)
    return PhasePoint(2.0 * eta * a.real / math.pi, 2.0 * eta * a.imag / math.pi)


def write_state_csv(path, psi: np.ndarray) -> None:
    """CSV with columns ``n, re, im``."""
    psi = np.asarray(psi)
    with open(path, "w", newline="") as fh:
        fh.write("n,re,im\n")
        for n, c in enumerate(psi):
            fh.write(f"{n},{c.real:.17g},{c.imag:.17g}\n")


def read_state_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 1] + 1j * data[:, 2]


_DUMP_MAGIC = b"DKHOFLQ1"
_DUMP_HEADER = np.dtype([("magic", "S8"), ("dim", "<u8"), ("kappa", "<f8"), ("eta", "<f8"), ("theta", "<f8")])


def dump_operator(path, F: FloquetOperator) -> None:
    """Binary dump: 40-byte header (magic, dim, kappa, eta, theta; little-endian),
    then ``dim * dim`` row-major complex128 entries as (re, im) float64 pairs."""
    header = np.array([(_DUMP_MAGIC, F.dim, F.kappa, F.eta, F.theta)], dtype=_DUMP_HEADER)
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(F.matrix, dtype="<c16").tobytes())


def load_operator(path) -> FloquetOperator:
    raw = open(path, "rb").read()
    header = np.frombuffer(raw[: _DUMP_HEADER.itemsize], dtype=_DUMP_HEADER)[0]
    if header["magic"] != _DUMP_MAGIC:
        raise ValueError(f"{path}: not a Floquet operator dump")
    dim = int(header["dim"])
    U = np.frombuffer(raw[_DUMP_HEADER.itemsize :], dtype="<c16").reshape(dim, dim).astype(np.complex128)
    return FloquetOperator(U, float(header["kappa"]), float(header["eta"]), float(header["theta"]))
