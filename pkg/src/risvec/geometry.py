"""Road-side deployment geometry and vehicle mobility.

The scene is a straight road segment along the x axis. The base station and
the reflecting surface are mounted above ground on the same side of the road;
the surface is a uniform linear array laid out along x, so the angle that
matters for its steering response is measured against the array broadside,
which points in the -y direction (toward the road).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError("position coordinates must be finite")
        if self.z < 0.0:
            raise ValueError("height must be nonnegative")


@dataclass
class VehicleState:
    """One vehicle on the road. Antenna height is fixed by the layout."""

    vehicle_id: int
    position: Position3D
    speed_mps: float

    def __post_init__(self):
        if self.speed_mps < 0.0:
            raise ValueError("speed must be nonnegative")


@dataclass(frozen=True)
class ScenarioLayout:
    """Static deployment: endpoint positions and the road segment."""

    bs: Position3D
    ris: Position3D
    road_start_x: float = 0.0
    road_end_x: float = 500.0
    road_y: float = 200.0
    vehicle_antenna_z: float = 1.5
    speed_min_mps: float = 10.0
    speed_max_mps: float = 15.0

    def __post_init__(self):
        if not self.road_end_x > self.road_start_x:
            raise ValueError("road segment must have positive length")
        if not 0.0 <= self.speed_min_mps <= self.speed_max_mps:
            raise ValueError("bad speed range")

    @property
    def road_length(self) -> float:
        return self.road_end_x - self.road_start_x

    def vehicle_position(self, x: float) -> Position3D:
        return Position3D(x, self.road_y, self.vehicle_antenna_z)


def distance(a: Position3D, b: Position3D) -> float:
    """Euclidean distance in metres."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def sin_angle_to_ris(p: Position3D, ris: Position3D) -> float:
    """Sine of the angle between the direction ris->p and the array broadside.

    The array runs along x with broadside -y, so sin(theta) is the x offset
    over the horizontal (ground-plane) distance. Height does not enter: the
    element spacing only shifts phase along x.
    """
    dx = p.x - ris.x
    dy = p.y - ris.y
    dh = math.hypot(dx, dy)
    if dh == 0.0:
        raise ValueError("point is horizontally coincident with the array")
    return dx / dh


def spawn_vehicles(layout: ScenarioLayout, k: int, rng: np.random.Generator,
                   static: bool = False) -> list[VehicleState]:
    """Place k vehicles uniformly on the road with uniform random speeds."""
    xs = rng.uniform(layout.road_start_x, layout.road_end_x, size=k)
    speeds = rng.uniform(layout.speed_min_mps, layout.speed_max_mps, size=k)
    if static:
        speeds = np.zeros(k)
    return [
        VehicleState(i, layout.vehicle_position(float(xs[i])), float(speeds[i]))
        for i in range(k)
    ]


def advance_vehicles(vehicles: list[VehicleState], dt: float,
                     layout: ScenarioLayout, rng: np.random.Generator) -> None:
    """Move every vehicle by speed*dt; wrap to road start with a fresh speed.

    Mutates in place. A vehicle that leaves the segment re-enters at
    road_start_x, which keeps the number of active vehicles constant.
    """
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    for v in vehicles:
        x = v.position.x + v.speed_mps * dt
        if x > layout.road_end_x:
            x = layout.road_start_x
            v.speed_mps = float(rng.uniform(layout.speed_min_mps,
                                            layout.speed_max_mps))
        v.position = layout.vehicle_position(x)
