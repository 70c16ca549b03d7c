"""Finite-time distance-based formation tracking for leader-follower teams.

A library and CLI for simulating single-integrator formations in the plane
or in space, where followers regulate squared distance errors to their
neighbors through signum-family control laws and track the leaders' unknown
bounded velocity in finite time.
"""

from .analysis import (
    ControlBound,
    ConvergenceReport,
    FollowerReport,
    build_report,
    compare_convergence,
    control_boundedness,
    convergence_time,
    finite_difference_velocities,
    monotonicity_violations,
    sliding_entry_time,
    vdot_bound_check,
    velocity_mismatch,
)
from .control import (
    ConstantProfile,
    ControlConfig,
    ErrorState,
    LeaderVelocityProfile,
    ModulatedProfile,
    SinusoidProfile,
    basin_critical_points_2d,
    basin_threshold_2d,
    basin_threshold_numeric,
    check_basin,
    compute_z,
    control_basic,
    control_fixed_time,
    control_modulated,
    control_modulated_fixed_time,
    convergence_gain_bound,
    finite_time_bound,
    lyapunov_value,
    squared_distance_errors,
)
from .export import (
    export_metrics,
    export_trajectory_csv,
    load_metrics,
    load_trajectory_csv,
)
from .graph import (
    AugmentedGraph,
    DistanceSpec,
    FormationGraph,
    Realization,
    augment_leader_clique,
    build_procedure1_graph,
    rigidity_matrix,
    rigidity_rank_check,
    verify_acyclic,
    verify_realizable,
)
from .kinematics import (
    AgentState,
    FrameRotation,
    local_displacement,
    random_rotation,
    sgn_alpha,
    sgn_elementwise,
)
from .plots import emit_plots
from .scenario import ScenarioError, load_scenario, resolve_scenario
from .simulate import (
    SimConfig,
    SimulationError,
    Trajectory,
    ValidationError,
    basin_report,
    closed_loop_rhs,
    leader_velocity,
    simulate,
    step_euler,
    step_rk4,
)

__version__ = "0.1.0"
