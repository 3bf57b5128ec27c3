"""Rotational two-mode cut-out-beam piezoelectric harvester simulation."""
from .geometry import (ConfigError, HarvesterConfig, SectionModel, build_sections, centrifugal_profile,
                       gravity_profile)
from .modal import (FrequencyMap, ModalError, ModeSet, ModeShape, assemble_boundary_matrix, frequency_map,
                    modal_analysis, mode_shapes, natural_frequencies, resonances, rms_centrifugal,
                    section_wavenumbers)
from .reduced import (ReducedModel, SystemState, build_reduced_model, coupling_coefficient, linear_response,
                      modal_coefficients, ode_rhs)
from .forces import (MagnetConfig, StopperConfig, StopperModal, impact_force, magnet_force,
                     magnet_gap_kinematics, stopper_modal, stopper_preset)
from .simulate import (BandwidthError, IntegrationError, ModelFamily, SweepCurve, SweepPlan, bandwidth,
                       integrate, power_area, steady_state_metrics, sweep)
from .scenario import Scenario, ScenarioError, load_scenario

__version__ = "0.1.0"
