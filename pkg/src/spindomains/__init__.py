"""Dissipative dynamics of collectively coupled spin domains.

Chains of spin ensembles share pairwise reservoirs; collective decay then
migrates excitation from domain to domain without any direct coupling.  The
package provides an exact Lindblad engine in the collective-spin basis, a
cumulant mean-field ODE backend for macroscopic domain sizes, closed-form
steady-state oracles, and a reproducible simulation CLI.
"""

from .analytic import (
    clebsch_gordan,
    mf_transfer_bound,
    steady_inversion_single_absorber,
    two_spin_dark_fraction,
)
from .lindblad import (
    ConvergenceError,
    DomainChain,
    Observables,
    Trajectory,
    evolve,
    initial_state,
    liouvillian_apply,
    observables,
    steady_state,
    thermal_occupation,
)
from .meanfield import MeanFieldOverflow, MeanFieldState, mf_evolve, mf_init, mf_rhs
from .spin_algebra import (
    CollectiveOperator,
    DensityState,
    SpinSector,
    collective_jz,
    collective_lowering,
    collective_raising,
    dicke_density,
    dicke_product_density,
    embed_operator,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SpinSector",
    "CollectiveOperator",
    "DensityState",
    "collective_lowering",
    "collective_raising",
    "collective_jz",
    "embed_operator",
    "dicke_density",
    "dicke_product_density",
    "DomainChain",
    "Trajectory",
    "Observables",
    "ConvergenceError",
    "thermal_occupation",
    "liouvillian_apply",
    "evolve",
    "steady_state",
    "observables",
    "initial_state",
    "MeanFieldState",
    "MeanFieldOverflow",
    "mf_init",
    "mf_rhs",
    "mf_evolve",
    "clebsch_gordan",
    "steady_inversion_single_absorber",
    "two_spin_dark_fraction",
    "mf_transfer_bound",
]
