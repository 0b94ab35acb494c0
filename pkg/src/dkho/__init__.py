"""Quantum and classical delta-kicked harmonic oscillator in an ion trap."""

__version__ = "0.1.0"

from .classical import ClassicalMap, OrbitStability, orbit, orbit_stability, step, web_scan, web_symmetry_score
from .fockspace import FloquetOperator, coherent_state, evolve_series, expectation_XP, floquet, kick_unitary
from .params import ModelParams, PhasePoint, PhysicalParams, alpha_from_phasepoint, kappa_from_physical, nu_tau, phasepoint_from_alpha
from .protocol import OverlapSeries, QGrid, QGridSpec, overlap_series, q_function, ramsey_probabilities, reconstruct_overlap, time_averaged_q

__all__ = [
    "ClassicalMap", "OrbitStability", "orbit", "orbit_stability", "step", "web_scan", "web_symmetry_score",
    "FloquetOperator", "coherent_state", "evolve_series", "expectation_XP", "floquet", "kick_unitary",
    "ModelParams", "PhasePoint", "PhysicalParams", "alpha_from_phasepoint", "kappa_from_physical", "nu_tau",
    "phasepoint_from_alpha", "OverlapSeries", "QGrid", "QGridSpec", "overlap_series", "q_function",
    "ramsey_probabilities", "reconstruct_overlap", "time_averaged_q",
]
