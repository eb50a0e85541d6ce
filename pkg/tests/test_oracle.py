"""Tests for the master-equation oracle."""

import math

import numpy as np
import pytest

from waveguide_bh.exceptions import ConfigError, GridError, OracleCapError
from waveguide_bh.lattice import AmplitudeGrid, ModelParams
from waveguide_bh.oracle import (
    EquivalenceReport,
    FockBasis,
    LindbladGenerator,
    build_operators,
    check_equivalence,
    density_diagnostics,
    embed_pure_state,
    evolve_density,
    extract_grid,
    fock_vector,
    lindblad_rhs,
    populations,
)
from waveguide_bh.propagation import IntegratorConfig, evolve
from waveguide_bh.states import homogeneous, local_pair


def random_density(rng, dim: int) -> np.ndarray:
    """Random Hermitian, positive, unit-trace matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestFockBasis:
    """Test basis enumeration and ordering."""

    def test_dimension_and_order(self):
        """Test vacuum, doubles, then pairs."""
        basis = FockBasis(5)
        assert basis.dim == len(basis) == 16
        assert basis.states[0] == (0, 0, 0, 0, 0)
        assert basis.states[basis.double(2)] == (0, 0, 2, 0, 0)
        assert basis.pair(0, 1) == 6
        assert basis.pair(3, 1) == basis.pair(1, 3)
        assert basis.two_particle == slice(1, 16)
        assert len(set(basis.states)) == basis.dim

    def test_single_particle_states(self):
        """Test the optional one-particle block."""
        basis = FockBasis(4, include_single=True)
        assert basis.dim == 1 + 10 + 4
        assert basis.states[-1] == (0, 0, 0, 1)


class TestOperators:
    """Test Fock-space operator matrices."""

    def test_onsite_jump_matrix_element(self):
        """Test <0| a_j^2 / sqrt(2) |2_j> = 1."""
        ops = build_operators(3)
        for j, jump in enumerate(ops.onsite_jumps):
            assert jump[0, ops.basis.double(j)] / math.sqrt(2) == pytest.approx(1.0)
            assert jump.nnz == 1

    def test_nn_jump_matrix_element(self):
        """Test <0| a_j a_{j+1} |1_j 1_{j+1}> = 1."""
        ops = build_operators(4)
        for j, jump in enumerate(ops.nn_jumps):
            assert jump[0, ops.basis.pair(j, j + 1)] == pytest.approx(1.0)

    def test_two_site_hamiltonian(self):
        """Test the Bose-Hubbard block for L=2 against hand-derived entries."""
        kappa, beta_r = 0.7, 1.9
        ops = build_operators(2)
        H = (kappa * ops.hopping + beta_r * ops.interaction).toarray()[1:, 1:]
        s = math.sqrt(2) * kappa
        expected = np.array([[beta_r, 0, -s], [0, beta_r, -s], [-s, -s, 0]])
        np.testing.assert_allclose(H, expected, atol=1e-14)

    def test_number_operators(self):
        """Test n_j on a pair state."""
        ops = build_operators(4)
        k = ops.basis.pair(1, 3)
        occupations = [op.diagonal()[k].real for op in ops.number]
        assert occupations == [0.0, 1.0, 0.0, 1.0]

    def test_dimension_cap(self):
        """Test that oversized bases are refused."""
        build_operators(30)
        with pytest.raises(OracleCapError) as exc_info:
            build_operators(32)
        assert exc_info.value.size == 1 + 32 * 33 // 2
        assert exc_info.value.cap == 500


class TestLindbladRhs:
    """Test the master-equation right-hand side."""

    def test_closed_system_is_commutator(self, rng):
        """Test d(rho)/dt = -i[H, rho] without losses."""
        p = ModelParams(L=3, kappa=1.0, beta_r=2.0)
        ops = build_operators(3)
        rho = random_density(rng, ops.basis.dim)
        H = (p.kappa * ops.hopping + p.beta_r * ops.interaction).toarray()
        np.testing.assert_allclose(
            lindblad_rhs(rho, p, ops), -1j * (H @ rho - rho @ H), atol=1e-13
        )

    def test_population_transfer_to_vacuum(self):
        """Test rates of |2_j><2_j| decaying into the vacuum."""
        p = ModelParams(L=4, kappa=0.0, gamma=1.5)
        ops = build_operators(4)
        rho = np.zeros((ops.basis.dim, ops.basis.dim), dtype=complex)
        j = ops.basis.double(2)
        rho[j, j] = 1.0
        derivative = lindblad_rhs(rho, p, ops)
        assert derivative[j, j].real == pytest.approx(-2 * p.gamma)
        assert derivative[0, 0].real == pytest.approx(2 * p.gamma)

    def test_nn_population_rate(self):
        """Test the neighbouring-pair decay rate 2*gamma_nn."""
        p = ModelParams(L=4, kappa=0.0, gamma_nn=0.8)
        ops = build_operators(4)
        rho = np.zeros((ops.basis.dim, ops.basis.dim), dtype=complex)
        k = ops.basis.pair(1, 2)
        rho[k, k] = 1.0
        derivative = lindblad_rhs(rho, p, ops)
        assert derivative[k, k].real == pytest.approx(-2 * p.gamma_nn)
        assert derivative[0, 0].real == pytest.approx(2 * p.gamma_nn)

    def test_trace_preserving(self, rng):
        """Test Tr(d(rho)/dt) = 0 with all losses on."""
        p = ModelParams(L=4, kappa=1.0, beta_r=1.0, gamma=3.0, gamma_nn=2.0)
        ops = build_operators(4)
        derivative = lindblad_rhs(random_density(rng, ops.basis.dim), p, ops)
        assert abs(np.trace(derivative)) <= 1e-12
        np.testing.assert_allclose(derivative, derivative.conj().T, atol=1e-12)

    def test_shape_mismatch(self):
        """Test rejection of a density matrix of the wrong size."""
        with pytest.raises(GridError):
            lindblad_rhs(np.eye(3), ModelParams(L=3))

    def test_corrupted_sign_flips_losses(self):
        """Test that the corrupted generator gains population."""
        p = ModelParams(L=3, kappa=0.0, gamma=1.0)
        ops = build_operators(3)
        generator = LindbladGenerator.from_params(ops, p, corrupt_sign=True)
        rho = np.zeros((ops.basis.dim, ops.basis.dim), dtype=complex)
        j = ops.basis.double(0)
        rho[j, j] = 1.0
        assert generator(rho)[j, j].real > 0


class TestStateMapping:
    """Test grid <-> density matrix mapping."""

    def test_embed_local_pair(self):
        """Test that a localized pair is a single Fock state."""
        basis = FockBasis(5)
        rho = embed_pure_state(local_pair(5, 1, 3), basis)
        k = basis.pair(1, 3)
        assert rho[k, k] == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(rho) > 1e-15) == 1

    def test_embed_homogeneous(self):
        """Test trace, purity and empty vacuum of an embedded state."""
        basis = FockBasis(6)
        rho = embed_pure_state(homogeneous(6, 0.9), basis)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
        assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-14)
        assert rho[0, 0] == 0.0
        assert populations(rho, basis) == pytest.approx((0.0, 0.0, 1.0))

    def test_embed_requires_unit_norm(self):
        """Test rejection of unnormalized grids."""
        c = AmplitudeGrid(2 * local_pair(3, 0, 1).values)
        with pytest.raises(GridError, match="unnormalized"):
            embed_pure_state(c)

    def test_extract_recovers_grid(self, make_grid):
        """Test grid recovery up to a global phase."""
        basis = FockBasis(4)
        c = make_grid(4)
        recovered = extract_grid(embed_pure_state(c, basis), basis).values
        k = np.unravel_index(np.argmax(np.abs(recovered)), recovered.shape)
        phase = c.values[k] / recovered[k]
        assert abs(phase) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(recovered * phase, c.values, atol=1e-12)

    def test_fock_vector_norm(self, make_grid):
        """Test that the Fock vector carries the grid norm."""
        c = make_grid(5, normalize=False)
        psi = fock_vector(c, FockBasis(5))
        assert np.vdot(psi, psi).real == pytest.approx(np.vdot(c.values, c.values).real)

    def test_diagnostics(self):
        """Test Hermiticity, trace and positivity diagnostics."""
        rho = embed_pure_state(local_pair(3, 0, 2))
        diagnostics = density_diagnostics(rho)
        assert diagnostics["hermiticity_error"] == 0.0
        assert diagnostics["trace"] == pytest.approx(1.0)
        assert diagnostics["min_eigenvalue"] >= -1e-14


class TestDensityEvolution:
    """Test RK4 on the master equation."""

    def test_closed_evolution_stays_pure(self):
        """Test trace and purity without losses."""
        p = ModelParams(L=4, kappa=1.0, beta_r=1.0)
        rho0 = embed_pure_state(local_pair(4, 1, 2))
        traj = evolve_density(rho0, p, IntegratorConfig(dt=1e-3, t_final=1.0, sample_every=250))
        for rho in traj.states:
            assert np.trace(rho).real == pytest.approx(1.0, abs=1e-8)
            assert np.trace(rho @ rho).real == pytest.approx(1.0, abs=1e-8)

    def test_vacuum_fills_up(self):
        """Test monotone growth of the vacuum population under loss."""
        p = ModelParams(L=4, kappa=1.0, gamma=2.0)
        rho0 = embed_pure_state(homogeneous(4, 0.5))
        traj = evolve_density(rho0, p, IntegratorConfig(dt=1e-3, t_final=1.0, sample_every=100))
        basis = traj.basis
        vacuum = [populations(rho, basis)[0] for rho in traj.states]
        assert np.all(np.diff(vacuum) > 0)
        for rho in traj.states:
            p0, p1, p2 = populations(rho, basis)
            assert p1 == 0.0
            assert p0 + p2 == pytest.approx(1.0, abs=1e-8)


class TestEquivalence:
    """Test the grid/master-equation equivalence check."""

    def _check(self, c0, p, t_final=2.0, **kwargs):
        ic = IntegratorConfig(dt=1e-3, t_final=t_final, sample_every=100)
        traj = evolve(c0, p, ic)
        return check_equivalence(traj, p, ic, **kwargs)

    def test_onsite_loss(self):
        """Test agreement for a localized pair with on-site loss."""
        report = self._check(local_pair(5, 1, 2), ModelParams(L=5, gamma=2.0))
        assert isinstance(report, EquivalenceReport)
        assert report.max_deviation <= 1e-6
        assert report.population_deviation <= 1e-6
        assert report.vacuum_coherence <= 1e-10
        assert report.min_block_purity >= 1 - 1e-6
        assert report.passed(1e-5)
        assert report.samples == 21

    def test_closed_system(self):
        """Test agreement without losses."""
        report = self._check(homogeneous(4, 0.9), ModelParams(L=4, beta_r=1.0), t_final=1.0)
        assert report.max_deviation <= 1e-8

    @pytest.mark.parametrize("state", ["local", "homogeneous"])
    def test_nearest_neighbour_loss(self, state):
        """Test agreement with strong nearest-neighbour loss over kappa t in [0, 2]."""
        c0 = local_pair(4, 1, 2) if state == "local" else homogeneous(4, 0.9)
        report = self._check(c0, ModelParams(L=4, gamma_nn=5.0))
        assert report.t_final == pytest.approx(2.0)
        assert report.max_deviation <= 1e-6
        assert report.population_deviation <= 1e-6
        assert report.vacuum_coherence <= 1e-10
        assert report.passed(1e-5)

    def test_single_particle_block_stays_empty(self):
        """Test that two-body loss never populates one-particle states."""
        report = self._check(
            local_pair(4, 0, 1), ModelParams(L=4, gamma=1.0, gamma_nn=1.0),
            t_final=0.5, include_single=True,
        )
        assert report.single_particle_population <= 1e-12
        assert report.max_deviation <= 1e-6

    def test_corrupted_sign_is_detected(self):
        """Test that a sign error in the losses is caught."""
        report = self._check(
            local_pair(4, 1, 2), ModelParams(L=4, gamma=2.0), t_final=1.0, corrupt_sign=True
        )
        assert report.max_deviation > 1e-3
        assert not report.passed(1e-5)

    def test_parameter_mismatch(self):
        """Test rejection of a trajectory from another model."""
        ic = IntegratorConfig(dt=1e-3, t_final=0.1)
        traj = evolve(local_pair(4, 1, 2), ModelParams(L=4, gamma=1.0), ic)
        with pytest.raises(ConfigError, match="different model parameters"):
            check_equivalence(traj, ModelParams(L=4, gamma=2.0), ic)
