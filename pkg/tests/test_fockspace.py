import math
import warnings

import numpy as np
import pytest
from scipy.special import gammainc

from dkho.classical import ClassicalMap, orbit
from dkho.errors import TruncationError, TruncationWarning
from dkho.fockspace import (
    coherent_state,
    dump_operator,
    evolve_series,
    expectation_XP,
    floquet,
    fock_state,
    kick_unitary,
    ladder_matrix,
    load_operator,
    mean_annihilation,
    quadrature_eigensystem,
    read_state_csv,
    required_dim,
    top_window,
    write_state_csv,
)
from dkho.params import PhasePoint, alpha_from_phasepoint, phasepoint_from_alpha

from oracles import coherent_factorial, kick_oracle, ladder_dense

THETA = math.pi / 3


class TestLadder:
    def test_dim2(self):
        assert np.array_equal(ladder_matrix(2), [[0, 1], [1, 0]])

    def test_dim3_offdiag(self):
        L = ladder_matrix(3)
        assert np.allclose(np.diag(L, 1), [1, math.sqrt(2)])
        assert np.array_equal(np.diag(L), np.zeros(3))
        assert np.array_equal(L, L.T)

    def test_dim3_eigenvalues(self):
        # characteristic polynomial -l^3 + 3 l = 0
        es = quadrature_eigensystem(3)
        assert np.allclose(es.values, [-math.sqrt(3), 0, math.sqrt(3)], atol=1e-14)

    def test_matches_oracle(self):
        assert np.array_equal(ladder_matrix(12), ladder_dense(12))

    def test_too_small(self):
        with pytest.raises(ValueError):
            ladder_matrix(1)

    @pytest.mark.parametrize("dim", [8, 101, 400])
    def test_eigensystem_invariants(self, dim):
        es = quadrature_eigensystem(dim)
        assert np.max(np.abs(es.vectors.T @ es.vectors - np.eye(dim))) < 1e-10
        assert np.all(np.diff(es.values) > 0)
        assert np.max(np.abs(es.values + es.values[::-1])) < 1e-9
        assert not es.vectors.flags.writeable


class TestCoherent:
    def test_vacuum(self):
        v = coherent_state(0, 10)
        assert v[0] == 1 and np.all(v[1:] == 0)

    def test_against_factorial_series(self):
        a = 1.3 - 0.7j
        assert np.allclose(coherent_state(a, 40), coherent_factorial(a, 40), atol=1e-15)

    def test_poisson_mean(self):
        c = coherent_state(2.0, 100)
        mean = np.sum(np.arange(100) * np.abs(c) ** 2)
        assert mean == pytest.approx(4.0, abs=1e-10)

    def test_reference_start_truncation(self):
        c = coherent_state(math.pi, 400)
        assert 1 - np.vdot(c, c).real < 1e-12
        # Poisson tail P(n >= 400) for mean pi^2
        assert gammainc(400, math.pi**2) < 1e-12

    def test_truncation_error_suggests_dim(self):
        with pytest.raises(TruncationError) as info:
            coherent_state(5.0, 20)
        need = info.value.suggested_dim
        assert need == required_dim(5.0)
        coherent_state(5.0, need)
        with pytest.raises(TruncationError):
            coherent_state(5.0, need - 1)

    def test_large_alpha_no_underflow(self):
        a = 45.0  # exp(-|a|^2/2) underflows
        c = coherent_state(a, required_dim(a))
        assert np.vdot(c, c).real == pytest.approx(1.0, abs=1e-8)
        assert mean_annihilation(c) == pytest.approx(a, rel=1e-7)


class TestKickUnitary:
    def test_zero_kappa_identity(self):
        assert np.allclose(kick_unitary(0.0, 0.5, 30), np.eye(30), atol=1e-13)

    @pytest.mark.parametrize("dim", [8, 16, 32])
    def test_oracle(self, dim):
        dev = np.max(np.abs(kick_unitary(0.2, 0.5, dim) - kick_oracle(0.2, 0.5, dim)))
        assert dev < 1e-9

    def test_oracle_other_parameters(self):
        assert np.max(np.abs(kick_unitary(0.05, 0.25, 16) - kick_oracle(0.05, 0.25, 16))) < 1e-10

    def test_parity(self):
        U = kick_unitary(0.2, 0.5, 60)
        par = np.diag((-1.0) ** np.arange(60))
        assert np.max(np.abs(U @ par - par @ U)) < 1e-10


class TestFloquet:
    def test_identity(self):
        F = floquet(0.0, 0.5, 2 * math.pi, 50)
        assert np.allclose(F.matrix, np.eye(50), atol=1e-10)

    def test_unitary_large(self):
        U = floquet(0.2, 0.5, THETA, 400).matrix
        assert np.max(np.abs(U.conj().T @ U - np.eye(400))) < 1e-10

    def test_resonance_closure(self):
        U = floquet(0.0, 0.5, THETA, 40).matrix
        assert np.allclose(np.linalg.matrix_power(U, 6), np.eye(40), atol=1e-10)

    def test_norm_preserved_random_vectors(self):
        rng = np.random.default_rng(0)
        for params in [(0.2, 0.5, THETA, 100), (0.225, 0.25, THETA, 200), (1.3, 0.1, 1.0, 64)]:
            F = floquet(*params)
            for _ in range(100):
                v = rng.normal(size=F.dim) + 1j * rng.normal(size=F.dim)
                assert np.linalg.norm(F @ v) / np.linalg.norm(v) == pytest.approx(1.0, abs=1e-10)

    def test_parity(self):
        F = floquet(0.2, 0.5, THETA, 80)
        par = np.diag((-1.0) ** np.arange(80))
        assert np.max(np.abs(F.matrix @ par - par @ F.matrix)) < 1e-9

    def test_kick_applied_first(self):
        U = floquet(0.2, 0.5, THETA, 20).matrix
        K = kick_unitary(0.2, 0.5, 20)
        R = np.diag(np.exp(-1j * THETA * np.arange(20)))
        assert np.allclose(U, R @ K, atol=1e-14)
        assert not np.allclose(U, K @ R, atol=1e-6)

    def test_binary_dump_roundtrip(self, tmp_path):
        F = floquet(0.2, 0.5, THETA, 12)
        dump_operator(tmp_path / "f.bin", F)
        raw = (tmp_path / "f.bin").read_bytes()
        assert len(raw) == 40 + 12 * 12 * 16
        G = load_operator(tmp_path / "f.bin")
        assert np.array_equal(G.matrix, F.matrix)
        assert (G.kappa, G.eta, G.theta, G.dim) == (F.kappa, F.eta, F.theta, 12)


class TestEvolve:
    def test_zero_kicks(self):
        F = floquet(0.2, 0.5, THETA, 64)
        psi = coherent_state(1.0, 64)
        ev = evolve_series(F, psi, 0)
        assert ev.states.shape == (1, 64)
        assert np.array_equal(ev.states[0], psi)

    def test_free_rotation_of_coherent_state(self):
        a, th = 2.0 + 1.0j, 0.7
        F = floquet(0.0, 0.5, th, 80)
        ev = evolve_series(F, coherent_state(a, 80), 25)
        for n, psi in enumerate(ev.states):
            assert mean_annihilation(psi) == pytest.approx(a * np.exp(-1j * n * th), abs=1e-9)
            assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-9)

    def test_leakage_unstable_reference_run(self):
        # population keeps reaching the top of the basis: the hyperbolic state
        # spreads along the web (value recorded on first run)
        F = floquet(0.2, 0.5, THETA, 400)
        with pytest.warns(TruncationWarning):
            ev = evolve_series(F, coherent_state(math.pi, 400), 1000, error_at=None)
        assert ev.leakage.max() == pytest.approx(6.683e-3, rel=1e-3)
        assert np.max(np.abs(np.linalg.norm(ev.states, axis=1) - 1)) < 1e-9

    def test_leakage_escalates(self):
        F = floquet(0.2, 0.5, THETA, 400)
        with pytest.raises(TruncationError) as info:
            evolve_series(F, coherent_state(math.pi, 400), 1000)
        assert info.value.suggested_dim == 800

    def test_quiet_when_contained(self):
        F = floquet(0.2, 0.5, THETA, 200)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            evolve_series(F, coherent_state(0.5, 200), 20)

    def test_top_window(self):
        assert top_window(400) == 360
        assert top_window(10) == 9

    def test_doubling(self):
        a = 1j * 2 * math.pi / math.sqrt(3)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            small = evolve_series(floquet(0.2, 0.5, THETA, 400), coherent_state(a, 400), 60)
            big = evolve_series(floquet(0.2, 0.5, THETA, 800), coherent_state(a, 800), 60)
        assert np.max(np.abs(small.states[-1][:200] - big.states[-1][:200])) < 1e-8


class TestCentroid:
    def test_coherent(self):
        for a, eta in [(math.pi, 0.5), (2 - 3j, 0.25), (0.3j, 0.05)]:
            dim = required_dim(a, 1e-14)
            got = expectation_XP(coherent_state(a, dim), eta)
            assert got == pytest.approx(phasepoint_from_alpha(a, eta), abs=1e-10)

    def test_fock_state(self):
        assert expectation_XP(fock_state(5, 20), 0.5) == (0.0, 0.0)

    def _quantum_vs_classical(self, pp0, eta, kappa, n, amplitude=None, theta=THETA):
        a = alpha_from_phasepoint(pp0, eta)
        dim = required_dim(2 * abs(a) + 4, 1e-10)
        F = floquet(kappa, eta, theta, dim)
        ev = evolve_series(F, coherent_state(a, dim), n)
        amp = ClassicalMap.from_kappa(kappa, theta).amplitude if amplitude is None else amplitude
        cl = orbit(pp0, ClassicalMap(theta, amp), n)
        q = np.array([expectation_XP(psi, eta) for psi in ev.states])
        r = np.hypot(cl[:, 0], cl[:, 1])
        return np.max(np.abs(q - cl) / r[:, None])

    def test_one_kick_hyperbolic_start(self):
        assert self._quantum_vs_classical(PhasePoint(1.0, 0.0), 0.05, 0.01, 1) < 0.01

    def test_ehrenfest_ten_kicks(self):
        assert self._quantum_vs_classical(PhasePoint(0.3, 0.4), 0.05, 0.01, 10) < 0.01

    def test_calibration_is_discriminating(self):
        # half the impulse, or the opposite rotation sense, misses the 1% bound
        pp0 = PhasePoint(0.3, 0.4)
        half = ClassicalMap.from_kappa(0.01, THETA).amplitude / 2
        assert self._quantum_vs_classical(pp0, 0.05, 0.01, 10, amplitude=half) > 0.01
        a = alpha_from_phasepoint(pp0, 0.05)
        dim = required_dim(2 * abs(a) + 4, 1e-10)
        ev = evolve_series(floquet(0.01, 0.05, THETA, dim), coherent_state(a, dim), 10)
        wrong = orbit(pp0, ClassicalMap(-THETA, ClassicalMap.from_kappa(0.01, THETA).amplitude), 10)
        q = np.array([expectation_XP(psi, 0.05) for psi in ev.states])
        assert np.max(np.abs(q - wrong)) > 0.1


class TestStateCSV:
    def test_roundtrip(self, tmp_path):
        psi = coherent_state(1.1 + 0.4j, 30)
        write_state_csv(tmp_path / "s.csv", psi)
        assert (tmp_path / "s.csv").read_text().splitlines()[0] == "n,re,im"
        assert np.array_equal(read_state_csv(tmp_path / "s.csv"), psi)
