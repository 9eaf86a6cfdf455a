"""Scene geometry: radar placement, body dimensions, gait and wall parameters."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum


class NodeId(Enum):
    """The six limb nodes of the kinematic model.

    N4/N6 are the half-cycle (pi-shifted) counterparts of N3/N5.
    """

    HEAD = "N1"
    TORSO = "N2"
    HAND_L = "N3"
    HAND_R = "N4"
    FOOT_L = "N5"
    FOOT_R = "N6"


ALL_NODES = tuple(NodeId)


@dataclass(frozen=True)
class WallParams:
    """Homogeneous wall between radar and target.

    The wall adds ``thickness * (sqrt(rel_permittivity) - 1)`` to every
    one-way propagation distance.
    """

    thickness: float = 0.12
    rel_permittivity: float = 6.0

    def __post_init__(self):
        if self.thickness < 0:
            raise ValueError(f"wall thickness must be >= 0, got {self.thickness}")
        if self.rel_permittivity < 1:
            raise ValueError(
                f"wall rel_permittivity must be >= 1, got {self.rel_permittivity}"
            )

    @property
    def extra_path(self) -> float:
        """Extra one-way path in meters; 0 for a zero-thickness wall."""
        return self.thickness * (math.sqrt(self.rel_permittivity) - 1.0)


@dataclass(frozen=True)
class SceneParams:
    """Anthropometric, gait and geometry parameters of the observed scene.

    Defaults describe a 1.8 m tester walking indoors with the radar antenna
    mounted at 1.5 m.  The initial speed is chosen high enough that the
    vertical micro-undulation contributes < 5% of the squared-velocity
    budget of head and torso.
    """

    radar_height: float = 1.5            # h0, meters above ground
    initial_position: tuple[float, float] = (3.0, 0.0)   # (x1, y1) meters
    torso_upper: float = 1.5             # h1
    torso_lower: float = 0.95            # h2
    arm_length: float = 0.65             # l1
    leg_length: float = 0.9              # l2
    initial_velocity: tuple[float, float] = (-0.6, 1.0)  # (v1x, v1y) m/s
    undulation_amplitude: float = 0.05   # alpha, meters
    gait_frequency: float = 2.0 * math.pi   # phi, rad/s
    arm_max_angle: float = math.pi / 6   # theta1
    leg_max_angle: float = math.pi / 4   # theta2
    in_situ_height_drop: float = 0.4     # delta h1
    in_situ_quarter_time: float = 1.0    # t0; full in-place cycle lasts 4*t0
    window: float = 4.0                  # T, observation window seconds
    wall: WallParams = field(default_factory=WallParams)
    through_wall: bool = True

    def __post_init__(self):
        if not (self.torso_upper > self.torso_lower > 0):
            raise ValueError("need torso_upper > torso_lower > 0")
        if self.arm_length <= 0 or self.leg_length <= 0:
            raise ValueError("limb lengths must be positive")
        if self.undulation_amplitude < 0:
            raise ValueError("undulation_amplitude must be >= 0")
        if self.in_situ_height_drop >= self.torso_upper:
            raise ValueError("in_situ_height_drop must stay below torso_upper")
        if self.in_situ_quarter_time <= 0:
            raise ValueError("in_situ_quarter_time must be positive")
        if self.window * self.gait_frequency / math.pi < 2.0:
            raise ValueError(
                "gait habit constraint violated: window * gait_frequency / pi "
                f"= {self.window * self.gait_frequency / math.pi:.3f} < 2"
            )
        head_offset = abs(self.torso_upper - self.radar_height + 0.15)
        if self.undulation_amplitude >= 0.1 * head_offset:
            warnings.warn(
                "undulation amplitude is not small against the head height "
                f"offset ({self.undulation_amplitude} vs {head_offset}); the "
                "flattened head-distance curve may be inaccurate",
                stacklevel=2,
            )

    @property
    def speed(self) -> float:
        """Magnitude of the initial horizontal velocity (v1)."""
        vx, vy = self.initial_velocity
        return math.hypot(vx, vy)

    @property
    def wall_extra_path(self) -> float:
        """One-way path added by the wall, 0 in free-space mode."""
        return self.wall.extra_path if self.through_wall else 0.0

    def node_rest_height(self, node: NodeId) -> float:
        """Resting height above ground of a node in the neutral pose."""
        if node is NodeId.HEAD:
            return self.torso_upper + 0.15
        if node is NodeId.TORSO:
            return 0.5 * (self.torso_upper + self.torso_lower)
        if node in (NodeId.HAND_L, NodeId.HAND_R):
            return self.torso_upper - self.arm_length
        return self.torso_lower - self.leg_length

    def motion_direction(self) -> tuple[float, float]:
        """Unit direction of body translation; toward the radar when at rest.

        Pendulum limbs swing along this direction, so it must stay defined
        even for in-place activities (speed 0).
        """
        vx, vy = self.initial_velocity
        v = math.hypot(vx, vy)
        if v > 0:
            return (vx / v, vy / v)
        x1, y1 = self.initial_position
        r = math.hypot(x1, y1)
        if r == 0:
            return (-1.0, 0.0)
        return (-x1 / r, -y1 / r)
