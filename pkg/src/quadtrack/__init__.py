"""Perception-feedback quadrotor tracking controller simulation library.

Position loop with saturated thrust, vector-alignment attitude loop, gyro
bias observer, rigid-body plant, and the analysis tooling that turns the
stability conditions into numeric checks.
"""

from .analysis import (ConditionReport, Lemma1Constants, attitude_gap_bound,
                       condition_matrices, lemma1_constants, lyapunov_v1,
                       lyapunov_v2, lyapunov_v3, practical_stability_bound)
from .attitude import AlignmentErrors, AttitudeGains, alignment, torque
from .attitude_reference import (ReferenceFilterState, desired_omega,
                                 desired_rotation, filter_step)
from .config import (ScenarioConfig, TrajectorySpec, load_config,
                     nominal_params, nominal_references, scenario_config)
from .geometry import hat, is_rotation, project_to_so3, rotation_gap, \
    so3_exp, vee
from .harness import (DivergenceError, Telemetry, lemniscate, read_telemetry,
                      run_scenario, trajectory_point, write_telemetry)
from .observer import ObserverGains, ObserverMemory, bias_estimate
from .plant import (ConfigurationError, ControlInput, DisturbanceSpec,
                    PhysicalParams, RigidBodyState, state_derivative, step)
from .position import (PositionCtrlMemory, PositionGains, TrajectoryPoint,
                       thrust_bounds, thrust_vector)
from .sensing import (GyroBias, InertialReferenceSet, NoiseSpec, Sensor,
                      SensorFrame, apparent_acceleration_reference)

__version__ = "0.1.0"
