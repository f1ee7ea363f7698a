"""morsecr: critical-point shape descriptors for discretized continuum robots.

Pipeline: a pseudo-rigid-body robot model (``model``), static equilibrium
under tendon / magnetic / direct actuation (``statics``), the Morse-number
descriptor over directional projections with J/C/S classification
(``morse``), inverse morphology control (``control``), analytic ground
truth (``oracle``), and a CLI (``cli``).

The rotation kernels run on a compiled extension when available and fall
back to pure numpy; ``morsecr.BACKEND`` names the active one.
"""

from ._backend import BACKEND
from .control import (
    ControlResult,
    MorphologyGoal,
    critical_joints_of,
    degeneracy_margin,
    objective,
    solve_morphology_control,
)
from .model import (
    ActuatorElement,
    ChartBoundError,
    Configuration,
    RobotModel,
    Shape,
    compose_chain,
    distal_pose,
    exp_so3,
    forward_kinematics,
    linearized_curvature,
    load_model,
    make_model,
    model_from_dict,
    model_to_dict,
    straight_model,
)
from .morse import (
    Direction,
    MorseResult,
    classify,
    direction_distal_orthogonal,
    direction_initial,
    direction_max_search,
    hemisphere_lattice,
    morse_number,
)
from .oracle import (
    AnalyticCurve,
    Biarc,
    CircularArc,
    Helix,
    StraightLine,
    continuous_critical_points,
    continuous_morse_count,
    sample_to_model,
)
from .statics import (
    ActuationCommand,
    EquilibriumReport,
    external_torque,
    residual,
    residual_jacobian,
    solve_equilibrium,
)

__version__ = "0.1.0"

__all__ = [
    "ActuationCommand",
    "ActuatorElement",
    "AnalyticCurve",
    "BACKEND",
    "Biarc",
    "ChartBoundError",
    "CircularArc",
    "Configuration",
    "ControlResult",
    "Direction",
    "EquilibriumReport",
    "Helix",
    "MorphologyGoal",
    "MorseResult",
    "RobotModel",
    "Shape",
    "StraightLine",
    "classify",
    "compose_chain",
    "continuous_critical_points",
    "continuous_morse_count",
    "critical_joints_of",
    "degeneracy_margin",
    "direction_distal_orthogonal",
    "direction_initial",
    "direction_max_search",
    "distal_pose",
    "exp_so3",
    "external_torque",
    "forward_kinematics",
    "hemisphere_lattice",
    "linearized_curvature",
    "load_model",
    "make_model",
    "model_from_dict",
    "model_to_dict",
    "morse_number",
    "objective",
    "residual",
    "residual_jacobian",
    "sample_to_model",
    "solve_equilibrium",
    "solve_morphology_control",
    "straight_model",
]
