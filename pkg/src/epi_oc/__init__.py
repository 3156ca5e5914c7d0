"""Heroin-epidemic compartmental model with optimal prevention/treatment.

Library layout:

- :mod:`epi_oc.model` - parameters, presets, state conventions, vector fields
- :mod:`epi_oc.integrators` - fixed-step RK4, forward and backward
- :mod:`epi_oc.equilibria` - drug-free point, R0, endemic cubic
- :mod:`epi_oc.stability` - Jacobians, Routh-Hurwitz tests, eigenvalue oracle
- :mod:`epi_oc.sensitivity` - normalized sensitivity indices of R0
- :mod:`epi_oc.control` - cost, Hamiltonian, adjoints, forward-backward sweep
- :mod:`epi_oc.scenarios` - configs, presets, runs, sweeps, reports
- :mod:`epi_oc.cli` - the `epi-oc` command
"""

__version__ = "0.1.0"

from .control import (ControlGrid, SweepOptions, SweepResult,
                      characterize_controls, cost_functional,
                      detect_singular_arcs, forward_backward_sweep,
                      gradient_check, hamiltonian)
from .equilibria import (EndemicEquilibrium, NextGenDecomposition,
                         basic_reproduction_number, drug_free_equilibrium,
                         endemic_cubic_coeffs, endemic_equilibrium,
                         next_generation)
from .integrators import TimeGrid, Trajectory, rk4_backward, rk4_forward
from .model import (DEFAULT_INITIAL_STATE, ModelParams, feasibility_bounds,
                    preset, rhs_controlled, rhs_uncontrolled)
from .scenarios import ScenarioSpec, load_config, run_scenario, run_sweep
from .sensitivity import SensitivityReport, sensitivity_indices
from .stability import (StabilityVerdict, dfe_local_stability,
                        eigenvalues_5x5, endemic_local_stability,
                        global_stability_condition, jacobian_dfe,
                        jacobian_endemic)
