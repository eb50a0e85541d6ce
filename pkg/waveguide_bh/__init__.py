"""waveguide-bh: two-boson dissipative Bose-Hubbard dynamics in a photonic lattice."""

__version__ = "0.1.0"

from waveguide_bh.lattice import (
    AmplitudeGrid,
    ModelParams,
    assemble_generator,
    norm,
    rhs,
    validate_params,
)
from waveguide_bh.observables import (
    g2_avg,
    g2_matrix,
    intensity_map,
    observe,
    site_density,
)
from waveguide_bh.oracle import check_equivalence
from waveguide_bh.propagation import (
    IntegratorConfig,
    Trajectory,
    evolve,
    propagator_expm,
    step_rk4,
)
from waveguide_bh.states import (
    InitialStateSpec,
    homogeneous,
    load_state,
    local_pair,
    save_state,
)

__all__ = [
    "AmplitudeGrid",
    "InitialStateSpec",
    "IntegratorConfig",
    "ModelParams",
    "Trajectory",
    "assemble_generator",
    "check_equivalence",
    "evolve",
    "g2_avg",
    "g2_matrix",
    "homogeneous",
    "intensity_map",
    "load_state",
    "local_pair",
    "norm",
    "observe",
    "propagator_expm",
    "rhs",
    "save_state",
    "site_density",
    "step_rk4",
    "validate_params",
]
