"""Planar geometric kernels shared by the scenario predicates.

All quantities are expressed in the observer's body frame: +longitudinal is
the heading direction, +lateral is the observer's left. Angles are radians.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateGeometry, InvalidThreshold
from .tracklog import ObjectState

DEFAULT_HALF_ANGLE = math.pi / 4


class Direction(enum.Enum):
    """The four relative-direction cones around an observer."""

    FORWARD = "forward"
    BACKWARD = "backward"
    LEFT = "left"
    RIGHT = "right"


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


@dataclass(frozen=True)
class RelativeOffset:
    """A planar displacement in an observer's body frame."""

    longitudinal: float
    lateral: float
    distance: float

    def __post_init__(self) -> None:
        expected = math.hypot(self.longitudinal, self.lateral)
        if abs(self.distance - expected) > 1e-9 * max(1.0, expected):
            raise InvalidThreshold(
                f"distance {self.distance!r} does not match hypot(longitudinal, lateral) = {expected!r}"
            )


def relative_offset(observer: ObjectState, target: ObjectState) -> RelativeOffset:
    """Target's planar displacement from the observer, rotated into the observer's heading frame."""
    dx = target.position[0] - observer.position[0]
    dy = target.position[1] - observer.position[1]
    ch = math.cos(observer.heading)
    sh = math.sin(observer.heading)
    longitudinal = ch * dx + sh * dy
    lateral = -sh * dx + ch * dy
    return RelativeOffset(longitudinal, lateral, math.hypot(longitudinal, lateral))


def _check_half_angle(value: float, name: str) -> None:
    if not (0.0 < value < math.pi / 2):
        raise InvalidThreshold(f"{name} must lie strictly between 0 and pi/2, got {value!r}")


def classify_direction(
    offset: RelativeOffset,
    long_half_angle: float = DEFAULT_HALF_ANGLE,
    lat_half_angle: float = DEFAULT_HALF_ANGLE,
) -> Direction | None:
    """Assign an offset to one of the four direction cones, or None.

    A point belongs to forward/backward when its angular distance from the
    +/-longitudinal axis is <= long_half_angle, and to left/right when its
    angular distance from the +/-lateral axis is <= lat_half_angle. Overlaps
    resolve with priority forward > backward > left > right; the origin is
    unclassified.
    """
    _check_half_angle(long_half_angle, "long_half_angle")
    _check_half_angle(lat_half_angle, "lat_half_angle")
    if offset.distance == 0.0:
        return None
    lon, lat = offset.longitudinal, offset.lateral
    if abs(math.atan2(lat, lon)) <= long_half_angle:
        return Direction.FORWARD
    if abs(math.atan2(lat, -lon)) <= long_half_angle:
        return Direction.BACKWARD
    if lat > 0 and abs(math.atan2(lon, lat)) <= lat_half_angle:
        return Direction.LEFT
    if lat < 0 and abs(math.atan2(lon, -lat)) <= lat_half_angle:
        return Direction.RIGHT
    return None


def bearing_angle(observer: ObjectState, target: ObjectState) -> float:
    """Unsigned angle in [0, pi] between the observer's heading and the ray to target."""
    dx = target.position[0] - observer.position[0]
    dy = target.position[1] - observer.position[1]
    if math.hypot(dx, dy) == 0.0:
        raise DegenerateGeometry("bearing undefined: observer and target share a planar position")
    return abs(wrap_angle(math.atan2(dy, dx) - observer.heading))


def velocity_bearing_angle(observer: ObjectState, target: ObjectState) -> float:
    """Unsigned angle in [0, pi] between the observer's velocity and the ray to target."""
    dx = target.position[0] - observer.position[0]
    dy = target.position[1] - observer.position[1]
    if math.hypot(dx, dy) == 0.0:
        raise DegenerateGeometry("velocity bearing undefined: zero planar distance")
    vx, vy = observer.velocity[0], observer.velocity[1]
    if math.hypot(vx, vy) == 0.0:
        raise DegenerateGeometry("velocity bearing undefined: observer has zero planar speed")
    return abs(wrap_angle(math.atan2(dy, dx) - math.atan2(vy, vx)))


_AXIS_COORDS = {
    # direction -> (axial, orthogonal) selectors on (longitudinal, lateral)
    Direction.FORWARD: lambda lon, lat: (lon, lat),
    Direction.BACKWARD: lambda lon, lat: (-lon, lat),
    Direction.LEFT: lambda lon, lat: (lat, lon),
    Direction.RIGHT: lambda lon, lat: (-lat, lon),
}


def segment_crosses_front_plane(
    track_state: ObjectState,
    related_prev: ObjectState,
    related_next: ObjectState,
    direction: Direction = Direction.FORWARD,
    lateral_band: float = 5.0,
    forward_extent: float = 10.0,
) -> bool:
    """Whether a displacement segment crosses the track's direction axis in-window.

    Both endpoints are expressed in the track's frame. The segment crosses
    when the coordinate orthogonal to the direction ray changes sign (a
    single on-axis endpoint counts; a segment lying on the axis does not),
    the crossing point sits within [0, forward_extent] along the ray, and
    both endpoints stay within lateral_band of the ray.
    """
    if lateral_band <= 0:
        raise InvalidThreshold(f"lateral_band must be > 0, got {lateral_band!r}")
    if forward_extent <= 0:
        raise InvalidThreshold(f"forward_extent must be > 0, got {forward_extent!r}")
    select = _AXIS_COORDS[direction]
    off_prev = relative_offset(track_state, related_prev)
    off_next = relative_offset(track_state, related_next)
    a0, o0 = select(off_prev.longitudinal, off_prev.lateral)
    a1, o1 = select(off_next.longitudinal, off_next.lateral)
    if o0 == 0.0 and o1 == 0.0:
        return False
    if o0 * o1 > 0.0:
        return False
    if abs(o0) > lateral_band or abs(o1) > lateral_band:
        return False
    t = o0 / (o0 - o1)
    axial_at_crossing = a0 + t * (a1 - a0)
    return 0.0 <= axial_at_crossing <= forward_extent
