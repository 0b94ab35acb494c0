import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from dkho.errors import AdiabaticValidityError, InvalidResonanceError
from dkho.params import (
    HBAR,
    ModelParams,
    PhasePoint,
    PhysicalParams,
    alpha_from_phasepoint,
    kappa_from_physical,
    nu_tau,
    phasepoint_from_alpha,
)

# 40Ca+ in a 1 MHz trap, 397 nm standing wave
CA40 = dict(
    rabi=2 * math.pi * 20e6,
    detuning=2 * math.pi * 1e9,
    pulse_width=50e-9,
    mass=40 * 1.66053906660e-27,
    trap_freq=2 * math.pi * 1e6,
    wavenumber=2 * math.pi / 397e-9,
)


class TestNuTau:
    def test_one_sixth(self):
        assert nu_tau((1, 6)) == pytest.approx(math.pi / 3, abs=1e-15)

    def test_one_quarter(self):
        assert nu_tau((1, 4)) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_q_two_rejected(self):
        with pytest.raises(InvalidResonanceError):
            nu_tau((2, 2))

    def test_model_params_reduce(self):
        mp = ModelParams(r=2, q=12, eta=0.5, kappa1=0.2, kappa2=0.225)
        assert (mp.r, mp.q) == (1, 6)
        assert mp.theta == pytest.approx(math.pi / 3)

    @pytest.mark.parametrize("r,q", [(2, 4), (1, 2), (3, 3), (0, 6), (1, -6)])
    def test_model_params_bad_resonance(self, r, q):
        with pytest.raises(InvalidResonanceError):
            ModelParams(r=r, q=q, eta=0.5, kappa1=0.2, kappa2=0.2)

    @pytest.mark.parametrize("field,value", [("eta", 0.0), ("fock_dim", 1), ("kappa1", -0.1), ("n_kicks", -1)])
    def test_model_params_bad_fields(self, field, value):
        kw = dict(r=1, q=6, eta=0.5, kappa1=0.2, kappa2=0.2)
        kw[field] = value
        with pytest.raises(ValueError):
            ModelParams(**kw)


class TestPhaseSpaceMap:
    def test_hyperbolic_point(self):
        assert alpha_from_phasepoint((1.0, 0.0), 0.5) == pytest.approx(math.pi)

    def test_origin(self):
        for eta in (0.05, 0.25, 0.5):
            assert alpha_from_phasepoint((0.0, 0.0), eta) == 0

    def test_elliptic_point(self):
        a = alpha_from_phasepoint((0.0, 2 / math.sqrt(3)), 0.25)
        assert a == pytest.approx(1j * 4 * math.pi / math.sqrt(3), abs=1e-13)
        # the same point written as i pi / (eta sqrt3)
        assert a == pytest.approx(1j * math.pi / (0.25 * math.sqrt(3)), abs=1e-13)

    def test_inverse_examples(self):
        assert phasepoint_from_alpha(math.pi, 0.5) == pytest.approx((1.0, 0.0))
        assert phasepoint_from_alpha(0, 0.5) == (0.0, 0.0)

    def test_roundtrip_alpha(self):
        a = 3.7 - 1.2j
        assert alpha_from_phasepoint(phasepoint_from_alpha(a, 0.25), 0.25) == pytest.approx(a, abs=1e-14)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(-10, 10), st.floats(-10, 10), st.sampled_from([0.05, 0.25, 0.5])
    )
    def test_roundtrip_property(self, X, P, eta):
        back = phasepoint_from_alpha(alpha_from_phasepoint(PhasePoint(X, P), eta), eta)
        assert back.X == pytest.approx(X, abs=1e-13)
        assert back.P == pytest.approx(P, abs=1e-13)

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            alpha_from_phasepoint((1, 0), 0.0)
        with pytest.raises(ValueError):
            phasepoint_from_alpha(1.0, -1.0)


class TestKappaConversion:
    def test_no_light_no_kick(self):
        ks = kappa_from_physical(PhysicalParams(**{**CA40, "rabi": 0.0}))
        assert ks.kappa == 0.0 and ks.K == 0.0

    def test_against_symbolic(self):
        Om, De, sg, m, nu, k, hb = sp.symbols("Omega Delta sigma m nu k hbar", positive=True)
        eta = k * sp.sqrt(hb / (2 * m * nu))
        kappa = Om**2 * eta**2 * sg * sp.sqrt(2 * sp.pi) / (8 * De)
        K = hb * sg * sp.sqrt(sp.pi) * Om**2 / (8 * De)
        subs = {Om: CA40["rabi"], De: CA40["detuning"], sg: CA40["pulse_width"], m: CA40["mass"],
                nu: CA40["trap_freq"], k: CA40["wavenumber"], hb: HBAR}
        ks = kappa_from_physical(PhysicalParams(**CA40))
        assert ks.eta == pytest.approx(float(eta.evalf(30, subs=subs)), rel=1e-14)
        assert ks.kappa == pytest.approx(float(kappa.evalf(30, subs=subs)), rel=1e-14)
        assert ks.K == pytest.approx(float(K.evalf(30, subs=subs)), rel=1e-14)
        # the two kick-strength formulas are the same quantity
        assert sp.simplify(kappa - sp.sqrt(2) * eta**2 * K / hb) == 0

    def test_calcium_eta_order(self):
        # about 0.18 for this ion and trap
        assert 0.05 < PhysicalParams(**CA40).eta < 0.2

    @settings(max_examples=200, deadline=None)
    @given(
        st.just(0.0) | st.floats(1.0, 5e7),
        st.floats(1e9, 1e11) | st.floats(-1e11, -1e9),
        st.floats(2e-8, 1e-6),
        st.floats(1e-26, 1e-24),
        st.floats(1e5, 1e8),
        st.floats(1e6, 1e8),
    )
    def test_kappa_K_consistency(self, rabi, det, width, mass, nu, k):
        ks = kappa_from_physical(PhysicalParams(rabi, det, width, mass, nu, k))
        assert ks.kappa == pytest.approx(math.sqrt(2) * ks.eta**2 * ks.K / HBAR, rel=1e-14, abs=1e-300)

    def test_linear_scaling(self):
        base = kappa_from_physical(PhysicalParams(**CA40)).kappa
        twice_width = kappa_from_physical(PhysicalParams(**{**CA40, "pulse_width": 2 * CA40["pulse_width"]})).kappa
        twice_om2 = kappa_from_physical(PhysicalParams(**{**CA40, "rabi": math.sqrt(2) * CA40["rabi"]})).kappa
        assert twice_width == pytest.approx(2 * base, rel=1e-14)
        assert twice_om2 == pytest.approx(2 * base, rel=1e-14)

    def test_negative_detuning_flips_sign(self):
        pos = kappa_from_physical(PhysicalParams(**CA40)).kappa
        neg = kappa_from_physical(PhysicalParams(**{**CA40, "detuning": -CA40["detuning"]})).kappa
        assert neg == pytest.approx(-pos)

    def test_large_rabi_rejected(self):
        with pytest.raises(AdiabaticValidityError, match="rabi/detuning"):
            kappa_from_physical(PhysicalParams(**{**CA40, "rabi": 0.5 * CA40["detuning"]}))

    def test_short_pulse_rejected(self):
        with pytest.raises(AdiabaticValidityError, match="pulse_width"):
            kappa_from_physical(PhysicalParams(**{**CA40, "pulse_width": 1e-9}))

    def test_thresholds_configurable(self):
        phys = PhysicalParams(**{**CA40, "rabi": 0.5 * CA40["detuning"]})
        ks = kappa_from_physical(phys, max_rabi_ratio=0.9)
        assert ks.kappa > 0

    def test_zero_detuning_invalid(self):
        with pytest.raises(ValueError):
            PhysicalParams(**{**CA40, "detuning": 0.0})
