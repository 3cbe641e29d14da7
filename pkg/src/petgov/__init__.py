"""Constrained rigid-body attitude control on SO(3) with a periodic
event-triggered reference governor.

The package couples a PD-stabilized rigid body with a supervisory layer
that steers an auxiliary reference attitude toward a goal along an
artificial potential field, throttled by invariant-set safety margins and
gated by a sampled event condition.  Torque saturation and a geometric
pointing-cone constraint are enforced throughout the maneuver without any
online optimization.
"""

from . import governor, harness, plant, so3
from .governor import (
    BoundaryEscapeError,
    ConstraintSpec,
    GovernorParams,
    GovernorState,
    PotentialParams,
    attractive_grad,
    event_check,
    gamma_aggregate,
    gamma_d_cached,
    gamma_d_offline,
    gamma_d_oracle,
    gamma_g,
    governor_step,
    navigation_field,
    reference_rhs,
    repulsive_grad,
)
from .harness import (
    ConstraintReport,
    PerturbationSpec,
    ScenarioConfig,
    SweepResult,
    TrajectoryLog,
    geodesic_feasibility_check,
    load_paper_scenario,
    monitor_constraints,
    paper_scenario_path,
    simulate,
    sweep,
)
from .plant import (
    BodyState,
    Gains,
    Inertia,
    dynamics_rhs,
    lyapunov_v,
    lyapunov_vdot,
    pd_torque,
)

__version__ = "0.1.0"

__all__ = [
    "so3",
    "plant",
    "governor",
    "harness",
    "BodyState",
    "BoundaryEscapeError",
    "ConstraintReport",
    "ConstraintSpec",
    "Gains",
    "GovernorParams",
    "GovernorState",
    "Inertia",
    "PerturbationSpec",
    "PotentialParams",
    "ScenarioConfig",
    "SweepResult",
    "TrajectoryLog",
    "attractive_grad",
    "dynamics_rhs",
    "event_check",
    "gamma_aggregate",
    "gamma_d_cached",
    "gamma_d_offline",
    "gamma_d_oracle",
    "gamma_g",
    "geodesic_feasibility_check",
    "governor_step",
    "load_paper_scenario",
    "lyapunov_v",
    "lyapunov_vdot",
    "monitor_constraints",
    "navigation_field",
    "paper_scenario_path",
    "pd_torque",
    "reference_rhs",
    "repulsive_grad",
    "simulate",
    "sweep",
    "__version__",
]
