"""Master-equation oracle on the vacuum + two-particle Fock space.

Two-body losses only connect the two-particle manifold to the vacuum, so
evolving the full density matrix under the Lindblad equation must reproduce
the non-Hermitian Schrödinger evolution of the amplitude grid in the
two-particle block. :func:`check_equivalence` measures how well it does.

Jump operators are a_j^2 at rate gamma (on-site) and a_j a_{j+1} at rate
2*gamma_nn (nearest neighbour); the latter is chosen so that the
anti-Hermitian part of the effective Hamiltonian is -i*gamma_nn*n_j*n_{j+1}.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict

from waveguide_bh.exceptions import (
    ConfigError,
    GridError,
    InstabilityError,
    OracleCapError,
)
from waveguide_bh.lattice import AmplitudeGrid, ModelParams, norm, validate_params
from waveguide_bh.observables import g2_matrix, site_density
from waveguide_bh.propagation import IntegratorConfig, Trajectory

DIM_CAP = 500
NORM_TOL = 1e-8


class FockBasis:
    """Ordered Fock states: vacuum, |2_n>, |1_n 1_m> (n < m), then optionally |1_n>.

    States are stored as occupation tuples of length L.
    """

    def __init__(self, L: int, include_single: bool = False) -> None:
        self.L = L
        self.include_single = include_single
        states: list[tuple[int, ...]] = [(0,) * L]
        states += [self._occupation({n: 2}) for n in range(L)]
        states += [
            self._occupation({n: 1, m: 1}) for n in range(L) for m in range(n + 1, L)
        ]
        if include_single:
            states += [self._occupation({n: 1}) for n in range(L)]
        self.states = states
        self._index = {state: i for i, state in enumerate(states)}

    def _occupation(self, sites: dict[int, int]) -> tuple[int, ...]:
        occ = [0] * self.L
        for site, count in sites.items():
            occ[site] = count
        return tuple(occ)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def two_particle(self) -> slice:
        """Index range of the two-particle manifold."""
        return slice(1, 1 + self.L * (self.L + 1) // 2)

    def index(self, occupation: tuple[int, ...]) -> int:
        return self._index[tuple(occupation)]

    def double(self, n: int) -> int:
        return 1 + n

    def pair(self, n: int, m: int) -> int:
        if n == m:
            return self.double(n)
        n, m = min(n, m), max(n, m)
        return self.index(self._occupation({n: 1, m: 1}))

    def __len__(self) -> int:
        return self.dim


@dataclass
class FockOperators:
    """Sparse operators on a :class:`FockBasis`.

    ``hopping`` is -sum_j (a_j^dag a_{j+1} + h.c.) and ``interaction`` is
    sum_j n_j (n_j - 1) / 2, so H_BH = kappa*hopping + beta_r*interaction.
    """

    basis: FockBasis
    hopping: sp.csr_matrix
    interaction: sp.csr_matrix
    number: list[sp.csr_matrix]
    onsite_jumps: list[sp.csr_matrix]
    nn_jumps: list[sp.csr_matrix]


def _ladder_matrix(basis: FockBasis, transition) -> sp.csr_matrix:
    """Matrix of an operator given as occupation -> [(new occupation, amplitude)]."""
    rows, cols, data = [], [], []
    for col, occ in enumerate(basis.states):
        for new_occ, amplitude in transition(list(occ)):
            if amplitude == 0.0:
                continue
            rows.append(basis.index(tuple(new_occ)))
            cols.append(col)
            data.append(amplitude)
    return sp.csr_matrix(
        (np.array(data, dtype=np.complex128), (rows, cols)),
        shape=(basis.dim, basis.dim),
    )


def _hop(dst: int, src: int):
    """a_dst^dag a_src."""

    def transition(occ):
        if occ[src] == 0:
            return []
        amplitude = math.sqrt(occ[src])
        occ[src] -= 1
        amplitude *= math.sqrt(occ[dst] + 1)
        occ[dst] += 1
        return [(occ, amplitude)]

    return transition


def _annihilate_two(i: int, j: int):
    """a_i a_j (i == j gives a_i^2)."""

    def transition(occ):
        amplitude = 1.0
        for site in (j, i):
            if occ[site] == 0:
                return []
            amplitude *= math.sqrt(occ[site])
            occ[site] -= 1
        return [(occ, amplitude)]

    return transition


def build_operators(
    L: int, include_single: bool = False, cap: int = DIM_CAP
) -> FockOperators:
    """Assemble hopping, interaction, number and jump operators for L sites.

    Raises:
        OracleCapError: if the basis dimension exceeds ``cap``
    """
    if L < 2:
        raise ConfigError(f"oracle needs L >= 2, got L={L}")
    dim = 1 + L * (L + 1) // 2 + (L if include_single else 0)
    if dim > cap:
        raise OracleCapError(
            f"Fock basis of dimension {dim} exceeds the oracle cap of {cap}", dim, cap
        )
    basis = FockBasis(L, include_single)

    hopping = sp.csr_matrix((basis.dim, basis.dim), dtype=np.complex128)
    for j in range(L - 1):
        hopping = hopping - _ladder_matrix(basis, _hop(j, j + 1))
        hopping = hopping - _ladder_matrix(basis, _hop(j + 1, j))

    occupations = np.array(basis.states, dtype=float)
    number = [sp.diags(occupations[:, j].astype(np.complex128), format="csr") for j in range(L)]
    interaction = sp.diags(
        (0.5 * np.sum(occupations * (occupations - 1), axis=1)).astype(np.complex128),
        format="csr",
    )
    return FockOperators(
        basis=basis,
        hopping=hopping.tocsr(),
        interaction=interaction,
        number=number,
        onsite_jumps=[_ladder_matrix(basis, _annihilate_two(j, j)) for j in range(L)],
        nn_jumps=[_ladder_matrix(basis, _annihilate_two(j, j + 1)) for j in range(L - 1)],
    )


@dataclass
class LindbladGenerator:
    """Precomputed pieces of the master-equation right-hand side."""

    hamiltonian: sp.csr_matrix
    effective: sp.csr_matrix
    jumps: list[tuple[float, sp.csr_matrix]] = field(default_factory=list)

    @classmethod
    def from_params(
        cls, ops: FockOperators, p: ModelParams, corrupt_sign: bool = False
    ) -> "LindbladGenerator":
        """Build the generator; ``corrupt_sign`` negates the loss rates."""
        sign = -1.0 if corrupt_sign else 1.0
        hamiltonian = (p.kappa * ops.hopping + p.beta_r * ops.interaction).tocsr()
        jumps = [(sign * p.gamma, op) for op in ops.onsite_jumps]
        jumps += [(sign * 2.0 * p.gamma_nn, op) for op in ops.nn_jumps]
        decay = sp.csr_matrix(hamiltonian.shape, dtype=np.complex128)
        for rate, op in jumps:
            decay = decay + rate * (op.conj().T @ op)
        effective = (hamiltonian - 0.5j * decay).tocsr()
        return cls(hamiltonian=hamiltonian, effective=effective, jumps=jumps)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        left = self.effective @ rho
        right = (self.effective @ rho.conj().T).conj().T
        out = -1j * (left - right)
        for rate, op in self.jumps:
            if rate != 0.0:
                out = out + rate * (op @ (op @ rho).conj().T).conj().T
        return out


def _check_rho(rho: np.ndarray, basis: FockBasis) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (basis.dim, basis.dim):
        raise GridError(
            f"density matrix shape {rho.shape} does not match basis dimension {basis.dim}"
        )
    return rho


def lindblad_rhs(
    rho: np.ndarray,
    p: ModelParams,
    ops: Optional[FockOperators] = None,
    corrupt_sign: bool = False,
) -> np.ndarray:
    """d(rho)/dt = -i[H_BH, rho] + sum_k rate_k (L rho L^dag - {L^dag L, rho}/2)."""
    validate_params(p)
    ops = ops or build_operators(p.L)
    rho = _check_rho(rho, ops.basis)
    return LindbladGenerator.from_params(ops, p, corrupt_sign)(rho)


@dataclass(frozen=True, eq=False)
class DensityTrajectory:
    times: np.ndarray
    states: tuple[np.ndarray, ...]
    basis: FockBasis


def evolve_density(
    rho0: np.ndarray,
    p: ModelParams,
    ic: IntegratorConfig,
    ops: Optional[FockOperators] = None,
    sample_steps: Optional[Iterable[int]] = None,
    corrupt_sign: bool = False,
) -> DensityTrajectory:
    """RK4 on the master equation, re-enforcing Hermiticity every step.

    Sampling follows ``ic.sample_every`` unless explicit step indices are given.

    Raises:
        InstabilityError: if a sampled density matrix contains non-finite values
    """
    validate_params(p)
    ops = ops or build_operators(p.L)
    rho = _check_rho(rho0, ops.basis).copy()
    generator = LindbladGenerator.from_params(ops, p, corrupt_sign)

    n = ic.n_steps
    if sample_steps is None:
        steps = sorted(set(range(0, n + 1, ic.sample_every)) | {n})
    else:
        steps = sorted(set(sample_steps) | {0})
        n = steps[-1]
    wanted = set(steps)
    dt = ic.dt

    samples = [rho.copy()]
    for step in range(1, n + 1):
        k1 = generator(rho)
        k2 = generator(rho + 0.5 * dt * k1)
        k3 = generator(rho + 0.5 * dt * k2)
        k4 = generator(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        if step in wanted:
            if not np.all(np.isfinite(rho)):
                raise InstabilityError(
                    f"non-finite density matrix at t={step * dt:g}", dt
                )
            samples.append(rho.copy())
    return DensityTrajectory(
        times=np.array(steps, dtype=float) * dt,
        states=tuple(samples),
        basis=ops.basis,
    )


def fock_vector(c, basis: FockBasis) -> np.ndarray:
    """Fock coefficients of a grid: <2_n|psi> = c_nn, <1_n 1_m|psi> = sqrt(2) c_nm."""
    arr = np.asarray(c.values if isinstance(c, AmplitudeGrid) else c)
    psi = np.zeros(basis.dim, dtype=np.complex128)
    L = basis.L
    for n in range(L):
        psi[basis.double(n)] = arr[n, n]
        for m in range(n + 1, L):
            psi[basis.pair(n, m)] = math.sqrt(2.0) * arr[n, m]
    return psi


def embed_pure_state(c: AmplitudeGrid, basis: Optional[FockBasis] = None) -> np.ndarray:
    """rho = |psi><psi| for a unit-norm grid, with zero vacuum amplitude."""
    basis = basis or FockBasis(c.L)
    total = norm(c)
    if abs(total - 1.0) > NORM_TOL:
        raise GridError(f"cannot embed unnormalized state (norm {total:.12g})")
    psi = fock_vector(c, basis)
    return np.outer(psi, psi.conj())


def extract_grid(rho: np.ndarray, basis: FockBasis) -> AmplitudeGrid:
    """Recover the grid from a rank-1 two-particle block, up to a global phase.

    The phase is fixed so that the largest-magnitude amplitude is real positive.
    """
    block = rho[basis.two_particle, basis.two_particle]
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (block + block.conj().T))
    weight = max(float(eigenvalues[-1]), 0.0)
    psi = math.sqrt(weight) * eigenvectors[:, -1]
    anchor = psi[int(np.argmax(np.abs(psi)))]
    if abs(anchor) > 0:
        psi = psi * (abs(anchor) / anchor)

    L = basis.L
    offset = basis.two_particle.start
    values = np.zeros((L, L), dtype=np.complex128)
    for n in range(L):
        values[n, n] = psi[basis.double(n) - offset]
        for m in range(n + 1, L):
            values[n, m] = values[m, n] = psi[basis.pair(n, m) - offset] / math.sqrt(2.0)
    return AmplitudeGrid(values)


def populations(rho: np.ndarray, basis: FockBasis) -> tuple[float, float, float]:
    """(P0, P1, P2): vacuum, one-particle and two-particle probabilities."""
    diagonal = np.real(np.diag(rho))
    p0 = float(diagonal[0])
    p2 = float(np.sum(diagonal[basis.two_particle]))
    p1 = float(np.sum(diagonal[basis.two_particle.stop :]))
    return p0, p1, p2


def density_diagnostics(rho: np.ndarray) -> dict[str, float]:
    """Hermiticity error, trace and smallest eigenvalue of rho."""
    hermitian = 0.5 * (rho + rho.conj().T)
    return {
        "hermiticity_error": float(np.max(np.abs(rho - rho.conj().T))),
        "trace": float(np.real(np.trace(rho))),
        "min_eigenvalue": float(np.linalg.eigvalsh(hermitian)[0]),
    }


def occupation_expectations(rho: np.ndarray, ops: FockOperators) -> np.ndarray:
    """Tr(rho n_k) for every site."""
    return np.array([np.real(np.sum(op.diagonal() * np.diag(rho))) for op in ops.number])


def pair_correlations(rho: np.ndarray, basis: FockBasis) -> np.ndarray:
    """Tr(rho a_n^dag a_m^dag a_m a_n) for all n, m (diagonal in the Fock basis)."""
    L = basis.L
    diagonal = np.real(np.diag(rho))
    G2 = np.zeros((L, L))
    for n in range(L):
        G2[n, n] = 2.0 * diagonal[basis.double(n)]
        for m in range(n + 1, L):
            G2[n, m] = G2[m, n] = diagonal[basis.pair(n, m)]
    return G2


class EquivalenceReport(BaseModel):
    """Maximum deviations between master-equation and grid evolution."""

    model_config = ConfigDict(frozen=True)

    L: int
    samples: int
    t_final: float
    block_deviation: float
    density_deviation: float
    correlation_deviation: float
    population_deviation: float
    vacuum_coherence: float
    min_block_purity: float
    single_particle_population: float = 0.0

    @property
    def max_deviation(self) -> float:
        return max(self.block_deviation, self.density_deviation, self.correlation_deviation)

    def passed(self, threshold: float) -> bool:
        return self.max_deviation <= threshold


def _trajectory_steps(traj: Trajectory, ic: IntegratorConfig) -> list[int]:
    steps = np.rint(traj.times / ic.dt).astype(int)
    if np.max(np.abs(steps * ic.dt - traj.times)) > 1e-9 * max(1.0, ic.t_final):
        raise ConfigError("trajectory samples are not on the integrator's time grid")
    return [int(s) for s in steps]


def check_equivalence(
    traj: Trajectory,
    p: ModelParams,
    ic: IntegratorConfig,
    include_single: bool = False,
    corrupt_sign: bool = False,
) -> EquivalenceReport:
    """Evolve the embedded initial state under the master equation and compare.

    At every sample of ``traj`` the two-particle block of rho is compared with
    |psi><psi| of the unnormalized grid state, Tr(rho n_k) with 2*N_k, and
    Tr(rho a_n^dag a_m^dag a_m a_n) with G2[n, m].
    """
    validate_params(p)
    if traj.params != p:
        raise ConfigError("trajectory was produced with different model parameters")
    steps = _trajectory_steps(traj, ic)
    ops = build_operators(p.L, include_single)
    basis = ops.basis
    rho0 = embed_pure_state(traj.states[0], basis)
    density = evolve_density(rho0, p, ic, ops, steps, corrupt_sign)

    block = basis.two_particle
    worst = dict.fromkeys(
        ("block", "density", "correlation", "population", "vacuum", "single"), 0.0
    )
    min_purity = 1.0
    for c, rho in zip(traj.states, density.states):
        psi = fock_vector(c, basis)[block]
        rho_block = rho[block, block]
        worst["block"] = max(worst["block"], float(np.max(np.abs(rho_block - np.outer(psi, psi.conj())))))
        worst["density"] = max(
            worst["density"],
            float(np.max(np.abs(occupation_expectations(rho, ops) - 2.0 * site_density(c)))),
        )
        worst["correlation"] = max(
            worst["correlation"],
            float(np.max(np.abs(pair_correlations(rho, basis) - g2_matrix(c).G2))),
        )
        _, p1, p2 = populations(rho, basis)
        worst["population"] = max(worst["population"], abs(p2 - norm(c)))
        worst["vacuum"] = max(worst["vacuum"], float(np.max(np.abs(rho[0, block]))))
        worst["single"] = max(worst["single"], abs(p1))
        trace = float(np.real(np.trace(rho_block)))
        if trace > 1e-12:
            normalized = rho_block / trace
            min_purity = min(min_purity, float(np.real(np.trace(normalized @ normalized))))

    return EquivalenceReport(
        L=p.L,
        samples=len(traj),
        t_final=float(traj.times[-1]),
        block_deviation=worst["block"],
        density_deviation=worst["density"],
        correlation_deviation=worst["correlation"],
        population_deviation=worst["population"],
        vacuum_coherence=worst["vacuum"],
        min_block_purity=min_purity,
        single_particle_population=worst["single"],
    )
