"""Four-wheel independent-steering rover locomotion stack.

Library layout:

* ``types``      core value types and frame conventions
* ``kinematics`` per-mode inverse kinematics and forward odometry
* ``manager``    supervisory state machine, steering trajectories, health
* ``control``    PI/PD loops and the motor/thermal plant
* ``terrain``    heightfield, tilt bed, soil, obstacles
* ``sim``        deterministic world stepper, loads, traction, tracking
* ``scenario``   scenario/campaign file schema
* ``harness``    campaign runner, metrics, reports, figures
* ``protocol``   teleoperation wire schema
* ``server``     WebSocket teleoperation service
"""

__version__ = "0.1.0"

from .types import (  # noqa: F401
    AckermannCommand,
    BodyTwist,
    CrabCommand,
    LocomotionMode,
    PointTurnCommand,
    Pose2p5,
    RoverGeometry,
    SkidCommand,
    WheelSetpointArray,
    WheelStateArray,
)
from .kinematics import (  # noqa: F401
    contact_point,
    forward_odometry,
    icr_residual,
    integrate_pose,
    inverse_kinematics,
)
