"""dlab: exact Dobrushin-interface ground states of the disordered Ising
ferromagnet over reproducible random coupling fields, with the shift,
graining and interface calculus and a Monte Carlo experiment harness."""

from .disorder import (
    CAP_SCALE,
    CouplingField,
    PointMass,
    ReluGauss,
    Uniform,
    check_condition,
    kappa,
    parse_distribution,
    shift_field,
    width,
)
from .graining import Coarse, Fine, audit_grainings, find_compatible, grain, graining_chain
from .groundstate import (
    GroundResult,
    SpinConfiguration,
    brute_force_ground,
    energy_gap,
    ground_state,
    ground_state_auto,
    hamiltonian,
    layering,
    restricted_ground,
)
from .interface import construct_shift, no_overhang_reduce, profile, verify_guarantees
from .lattice import Box, box_radius, boundaries, components, edge_class, interior, visible_boundary
from .shifts import (
    Shift,
    enumerate_shifts,
    is_admissible,
    level_components,
    trip_entropy,
    tv,
)

__version__ = "0.1.0"
