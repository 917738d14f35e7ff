"""Desk-scale multi-AUV formation tracking with adaptive sliding-mode control."""

from .controller import (
    AdaptiveState,
    ControllerState,
    SuperTwistGains,
    SurfaceConfig,
    adaptive_control,
    adaptive_update,
    assumption_holds,
    equivalent_control,
    first_order_smc,
    lyapunov_value,
    reference_rate,
    sliding_surface,
    super_twist_u1,
    super_twist_u2_step,
    validate_gains,
)
from .engine import (
    ControllerConfig,
    FlowConfig,
    Metrics,
    Scenario,
    SimLog,
    SimulationAbort,
    compute_metrics,
    detect_convergence,
    phase_trajectory,
    run,
    step,
)
from .export import (
    ComparisonResult,
    ExportBundle,
    chatter_count,
    compare_runs,
    export_flow_grid,
    export_results,
)
from .flow import (
    DisturbanceModel,
    FlowParams,
    LayeredField,
    disturbance_wrench,
    flow_velocity,
    layered_velocity,
    stream_function,
)
from .formation import (
    FollowerOffset,
    FormationSpec,
    TrajectorySpec,
    follower_reference,
    formation_error,
    leader_reference,
)
from .mpc import MpcConfig, MpcShell, MpcSolution, mpc_cost, mpc_optimize, predict_rollout
from .scenario import (
    ScenarioError,
    parse_scenario,
    scenario_from_dict,
    scenario_to_dict,
    serialize_scenario,
)
from .thrusters import ThrusterConfig, Wrench5, allocate, build_tcm, wrench_from_thrust
from .vehicle import (
    InertialDynamicsTerms,
    JacobianSet,
    RigidBodyParams,
    SingularityError,
    VehicleState,
    Wrench6,
    dynamics_body,
    dynamics_inertial_terms,
    estimated_dynamics,
    kinematic_transform,
)

__version__ = "0.1.0"
