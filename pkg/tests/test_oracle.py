import math

import numpy as np
import pytest
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from triwell import oracle
from triwell.estimator import STAT_NAMES
from triwell.model import FIRST_TRANSFER_TIME, ModelParams, Schedule
from triwell.oracle import (
    FockBasis,
    QuantumState,
    build_hamiltonian,
    coherent_initial,
    evolve,
    expectations,
    fock_initial,
    moment_vector,
    oracle_stats_at_times,
    states_at_times,
)

IDX = {name: i for i, name in enumerate(STAT_NAMES)}


def model(j=1.0, chi=0.0, n=8, kind="fock", j_cut=None, chi_cut=None):
    return ModelParams(j_schedule=Schedule(j, j_cut), chi_schedule=Schedule(chi, chi_cut),
                       n_atoms=n, initial_state_kind=kind)


class TestBasis:
    def test_dimension(self):
        for n in (0, 1, 2, 8, 40):
            assert FockBasis.for_total(n).dim == (n + 1) * (n + 2) // 2

    def test_index_roundtrip(self):
        b = FockBasis.for_total(9)
        for i, (n1, n2, n3) in enumerate(b.states):
            assert b.index_of(int(n1), int(n2), int(n3)) == i

    def test_lexicographic_order(self):
        b = FockBasis.for_total(2)
        expected = [(0, 0, 2), (0, 1, 1), (0, 2, 0), (1, 0, 1), (1, 1, 0), (2, 0, 0)]
        assert [tuple(s) for s in b.states] == expected

    def test_outside_sector_rejected(self):
        b = FockBasis.for_total(3)
        with pytest.raises(ValueError):
            b.index_of(1, 1, 2)


class TestHamiltonian:
    def test_tunnelling_matrix_element(self):
        b = FockBasis.for_total(2)
        h = build_hamiltonian(b, 1.0, 0.0)
        assert h[b.index_of(1, 1, 0), b.index_of(2, 0, 0)] == pytest.approx(-math.sqrt(2))

    def test_interaction_diagonal(self):
        b = FockBasis.for_total(200)
        h = build_hamiltonian(b, 1.0, 1e-3)
        k = b.index_of(0, 200, 0)
        assert h[k, k] == pytest.approx(1e-3 * 200 * 199)

    def test_no_direct_end_well_coupling(self):
        b = FockBasis.for_total(2)
        h = build_hamiltonian(b, 1.0, 0.0)
        assert h[b.index_of(2, 0, 0), b.index_of(0, 0, 2)] == 0.0

    def test_hermitian_and_sparse(self):
        b = FockBasis.for_total(11)
        h = build_hamiltonian(b, 0.7, 0.02)
        assert abs(h - h.T).max() == 0.0
        assert np.diff(h.tocsr().indptr).max() <= 5


class TestEvolution:
    def test_single_atom_rabi_pattern(self):
        # one atom in the middle well: an analytic three-level problem
        st = fock_initial(1)
        times = np.linspace(0.0, 4.0, 41)
        snaps = states_at_times(st, Schedule(1.0), Schedule(0.4), times)
        p2 = np.array([expectations(s).stats[IDX["n2"]] for s in snaps])
        np.testing.assert_allclose(p2, np.cos(math.sqrt(2) * times) ** 2, atol=1e-9)

    def test_no_tunnelling_freezes_populations(self):
        st = fock_initial(6)
        snaps = evolve(st, Schedule(0.0), Schedule(0.03), dt=0.5, t_final=3.0)
        for s in snaps:
            assert expectations(s).stats[IDX["n2"]] == pytest.approx(6.0, abs=1e-10)

    def test_linear_beamsplitter_populations(self):
        st = fock_initial(8)
        times = np.linspace(0.0, 3.0, 31)
        snaps = states_at_times(st, Schedule(1.0), Schedule(0.0), times)
        n2 = np.array([expectations(s).stats[IDX["n2"]] for s in snaps])
        np.testing.assert_allclose(n2, 8 * np.cos(math.sqrt(2) * times) ** 2, atol=1e-9)

    def test_norm_preserved(self):
        st = fock_initial(10)
        snaps = evolve(st, Schedule(1.0), Schedule(0.05), dt=0.1, t_final=5.0)
        for s in snaps:
            assert abs(s.norm() - 1.0) < 1e-10

    def test_energy_and_number_conserved(self):
        st = fock_initial(8)
        h = build_hamiltonian(st.basis, 1.0, 0.025)
        snaps = evolve(st, Schedule(1.0), Schedule(0.025), dt=0.25, t_final=5.0)
        e = [np.vdot(s.amplitudes, h @ s.amplitudes).real for s in snaps]
        n = [sum(expectations(s).stats[IDX[k]] for k in ("n1", "n2", "n3")) for s in snaps]
        assert max(abs(x - e[0]) for x in e) < 1e-9 * max(1.0, abs(e[0]))
        assert max(abs(x - 8.0) for x in n) < 1e-9 * 8.0

    def test_pulsed_schedule_freezes_witness(self):
        tau = FIRST_TRANSFER_TIME
        pr = model(chi=0.02, n=6, j_cut=tau, chi_cut=tau)
        times = np.array([0.0, 0.5, tau, 2.0, 5.0, 9.0])
        stats = oracle_stats_at_times(pr, times)
        xi = stats[:, IDX["xi13"]]
        assert xi[3] == pytest.approx(xi[2], abs=1e-9)
        assert xi[5] == pytest.approx(xi[2], abs=1e-9)

    def test_dense_and_sparse_propagators_agree(self, monkeypatch):
        st = fock_initial(7)
        times = np.linspace(0.0, 2.0, 9)
        dense = [moment_vector(s) for s in states_at_times(st, Schedule(1.0), Schedule(0.03), times)]
        oracle._propagator_parts.cache_clear()
        monkeypatch.setattr(oracle, "DENSE_EIG_MAX", 1)
        sparse_path = [moment_vector(s) for s in states_at_times(st, Schedule(1.0), Schedule(0.03), times)]
        oracle._propagator_parts.cache_clear()
        np.testing.assert_allclose(np.array(dense), np.array(sparse_path), atol=1e-9)


class TestExpectations:
    def test_initial_middle_well_fock(self):
        ex = expectations(fock_initial(12))
        assert ex.stats[IDX["xi13"]] == 0.0
        assert ex.stats[IDX["vn2"]] == 0.0
        assert ex.stats[IDX["n2"]] == 12.0

    def test_beamsplitter_peak_witness_equals_quarter_number(self):
        st = fock_initial(8)
        snaps = states_at_times(st, Schedule(1.0), Schedule(0.0),
                                np.array([FIRST_TRANSFER_TIME]))
        ex = expectations(snaps[0])
        assert ex.stats[IDX["xi13"]] == pytest.approx(2.0, abs=1e-9)
        assert ex.stats[IDX["n1"]] == pytest.approx(4.0, abs=1e-9)

    def test_embedded_product_fock_state(self):
        b = FockBasis.for_total(5)
        amp = np.zeros(b.dim, dtype=complex)
        amp[b.index_of(2, 0, 3)] = 1.0
        ex = expectations(QuantumState(basis=b, amplitudes=amp))
        assert ex.stats[IDX["xi13"]] == pytest.approx(-6.0)
        assert ex.stats[IDX["vn13"]] == 0.0

    def test_steering_never_positive_under_fock_dynamics(self):
        pr = model(chi=0.025, n=8)
        stats = oracle_stats_at_times(pr, np.arange(0, 301) * 0.01)
        assert stats[:, IDX["xis1"]].max() <= 1e-12
        assert stats[:, IDX["xis3"]].max() <= 1e-12


class TestCoherent:
    def test_truncation_error_bound(self):
        mix = coherent_initial(4.0, 30)
        assert mix.truncation_error < 1e-8
        assert abs(mix.weights.sum() - 1.0) < 1e-12

    def test_cutoff_too_small_rejected(self):
        with pytest.raises(ValueError):
            coherent_initial(16.0, 20)

    def test_vacuum_mean(self):
        mix = coherent_initial(0.0, 0)
        assert len(mix.sector_states) == 1
        assert mix.sector_states[0].basis.n_total == 0

    def test_linear_dynamics_preserves_coherence(self):
        # coherent in, coherent out: the witness stays identically zero
        pr = model(chi=0.0, n=8, kind="coherent")
        stats = oracle_stats_at_times(pr, np.linspace(0.0, 5.0, 21))
        assert np.abs(stats[:, IDX["xi13"]]).max() < 1e-8
        # the clipped Poisson tail shaves O(tail * (8 sigma)^2) off the variance
        assert stats[0, IDX["vn2"]] == pytest.approx(8.0, abs=1e-5)

    def test_brute_force_cross_check(self):
        # independent tensor-product construction with per-mode cutoffs
        c1, c2, c3 = 10, 21, 10
        nbar, chi, t = 4.0, 0.05, 0.4

        def ladder(c):
            return sparse.diags(np.sqrt(np.arange(1, c, dtype=float)), 1)

        eye = [sparse.identity(c, format="csr") for c in (c1, c2, c3)]
        a1 = sparse.kron(sparse.kron(ladder(c1), eye[1]), eye[2], format="csr")
        a2 = sparse.kron(sparse.kron(eye[0], ladder(c2)), eye[2], format="csr")
        a3 = sparse.kron(sparse.kron(eye[0], eye[1]), ladder(c3), format="csr")
        h = chi * (a1.T @ a1.T @ a1 @ a1 + a2.T @ a2.T @ a2 @ a2 + a3.T @ a3.T @ a3 @ a3) \
            - (a1.T @ a2 + a2.T @ a1 + a3.T @ a2 + a2.T @ a3)
        beta = math.sqrt(nbar)
        coh = np.array([math.exp(-nbar / 2) * beta ** k / math.sqrt(math.factorial(k))
                        for k in range(c2)])
        vac1 = np.zeros(c1); vac1[0] = 1.0
        vac3 = np.zeros(c3); vac3[0] = 1.0
        psi = np.kron(np.kron(vac1, coh), vac3).astype(complex)
        psi /= np.linalg.norm(psi)
        phit = expm_multiply(-1j * h.tocsc().astype(complex) * t, psi)
        n1 = (a1.T @ a1).tocsr()
        n3 = (a3.T @ a3).tocsr()
        x13 = (a1.T @ a3).tocsr()
        xi_brute = abs(np.vdot(phit, x13 @ phit)) ** 2 - np.vdot(phit, n1 @ (n3 @ phit)).real

        pr = model(chi=chi, n=4, kind="coherent")
        stats = oracle_stats_at_times(pr, np.array([t]), coherent_cutoff=20)
        assert stats[0, IDX["xi13"]] == pytest.approx(xi_brute, abs=1e-7)
