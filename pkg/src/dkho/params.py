"""Model parameters, unit conventions and conversions.

Phase-space units: ``X`` is measured in wavelengths of the kick potential
``cos(2 k x)`` (so the kick phase has period 1 in ``X``) and ``P`` in the
matching momentum unit. A coherent amplitude ``alpha`` then maps to
``X + iP = 2 eta alpha / pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from scipy import constants

from .errors import AdiabaticValidityError, InvalidResonanceError

HBAR = constants.hbar


class PhasePoint(NamedTuple):
    X: float
    P: float


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless definition of one kicked-oscillator experiment.

    ``r/q`` is reduced to lowest terms on construction.
    """

    r: int
    q: int
    eta: float
    kappa1: float
    kappa2: float
    fock_dim: int = 400
    n_kicks: int = 1000

    def __post_init__(self):
        r, q = int(self.r), int(self.q)
        if r <= 0 or q <= 0:
            raise InvalidResonanceError(f"r and q must be positive integers, got r={r}, q={q}")
        g = math.gcd(r, q)
        object.__setattr__(self, "r", r // g)
        object.__setattr__(self, "q", q // g)
        if self.q <= 2:
            raise InvalidResonanceError(f"resonance requires q > 2, got r/q = {self.r}/{self.q}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.kappa1 < 0 or self.kappa2 < 0:
            raise ValueError("kick strengths must be non-negative")
        if int(self.fock_dim) < 2:
            raise ValueError(f"fock_dim must be >= 2, got {self.fock_dim}")
        if int(self.n_kicks) < 0:
            raise ValueError(f"n_kicks must be >= 0, got {self.n_kicks}")

    @property
    def theta(self) -> float:
        return nu_tau(self)

    @property
    def delta_kappa(self) -> float:
        return self.kappa2 - self.kappa1


def nu_tau(params: ModelParams | tuple[int, int]) -> float:
    """Rotation angle per kick period, ``2 pi r / q``.

    Accepts a :class:`ModelParams` or a bare ``(r, q)`` pair.
    """
    if isinstance(params, ModelParams):
        r, q = params.r, params.q
    else:
        r, q = params
        if q <= 0 or r <= 0:
            raise InvalidResonanceError(f"r and q must be positive, got {r}/{q}")
        g = math.gcd(int(r), int(q))
        r, q = r // g, q // g
    if q <= 2:
        raise InvalidResonanceError(f"resonance requires q > 2, got r/q = {r}/{q}")
    return 2.0 * math.pi * r / q


def alpha_from_phasepoint(pp: PhasePoint | tuple[float, float], eta: float) -> complex:
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    X, P = pp
    return math.pi * complex(X, P) / (2.0 * eta)


def phasepoint_from_alpha(alpha: complex, eta: float) -> PhasePoint:
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    alpha = complex(alpha)
    return PhasePoint(2.0 * eta * alpha.real / math.pi, 2.0 * eta * alpha.imag / math.pi)


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters of one ion-trap kick channel (SI units).

    ``detuning`` is signed and must be nonzero; a negative detuning gives a
    negative kick strength.
    """

    rabi: float
    detuning: float
    pulse_width: float
    mass: float
    trap_freq: float
    wavenumber: float

    def __post_init__(self):
        if self.detuning == 0:
            raise ValueError("detuning must be nonzero")
        for name in ("pulse_width", "mass", "trap_freq", "wavenumber"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def eta(self) -> float:
        """Lamb-Dicke parameter ``k sqrt(hbar / 2 m nu)``."""
        return self.wavenumber * math.sqrt(HBAR / (2.0 * self.mass * self.trap_freq))

    def check_validity(self, max_rabi_ratio: float = 0.1, min_width_detuning: float = 10.0) -> None:
        ratio = abs(self.rabi / self.detuning)
        if not ratio < max_rabi_ratio:
            raise AdiabaticValidityError("|rabi/detuning|", ratio, max_rabi_ratio)
        prod = self.pulse_width * abs(self.detuning)
        if not prod > min_width_detuning:
            raise AdiabaticValidityError("pulse_width*|detuning|", prod, min_width_detuning)


@dataclass(frozen=True)
class KickStrength:
    eta: float
    kappa: float
    K: float  # kick impulse in J s, multiplies [cos(2kx) + 1] per kick


def kappa_from_physical(
    phys: PhysicalParams, max_rabi_ratio: float = 0.1, min_width_detuning: float = 10.0
) -> KickStrength:
    """Convert laboratory parameters to the dimensionless kick strength.

    ``kappa = rabi^2 eta^2 sigma sqrt(2 pi) / (8 detuning)`` and
    ``K = hbar sigma sqrt(pi) rabi^2 / (8 detuning)``, related by
    ``kappa = sqrt(2) eta^2 K / hbar``.
    """
    phys.check_validity(max_rabi_ratio, min_width_detuning)
    eta = phys.eta
    om2 = phys.rabi**2
    kappa = om2 * eta**2 * phys.pulse_width * math.sqrt(2.0 * math.pi) / (8.0 * phys.detuning)
    K = HBAR * phys.pulse_width * math.sqrt(math.pi) * om2 / (8.0 * phys.detuning)
    return KickStrength(eta=eta, kappa=kappa, K=K)
