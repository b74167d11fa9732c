"""Spatial experiment layout: user positions, a moving-user trajectory and anchors.

All randomness is drawn from numpy's PCG64 generator (``np.random.default_rng``)
seeded with ``[seed, stream_tag]`` so that independent draws never share a stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

# stream tags for np.random.default_rng([seed, tag])
PLACEMENT_STREAM = 1
ANCHOR_STREAM = 2


class ScenarioError(ValueError):
    pass


@dataclass
class TrajectoryConfig:
    """Parametric path of the moving user.

    ``shape="sine"`` follows ``start + s*u + amplitude*sin(2*pi*s/period)*n``
    with ``u`` the heading and ``n`` its left normal; ``shape="straight"``
    drops the sine term. Points are spaced exactly ``step_length`` apart
    (chord length, not arc length).
    """

    num_points: int = 60
    step_length: float = 10.0
    start_x: float = -280.0
    start_y: float = 250.0
    heading_deg: float = 0.0
    shape: str = "sine"
    amplitude: float = 90.0
    period: float = 400.0


@dataclass
class ScenarioConfig:
    area_x_min: float = -500.0
    area_x_max: float = 500.0
    area_y_min: float = 0.0
    area_y_max: float = 500.0
    bs_x: float = 0.0
    bs_y: float = 0.0
    bs_z: float = 10.0
    user_height: float = 1.5
    num_users: int = 2048
    anchor_fraction: float = 0.10
    seed: int = 0
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)

    @property
    def bs_position(self) -> np.ndarray:
        return np.array([self.bs_x, self.bs_y, self.bs_z])

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.area_x_max - self.area_x_min, self.area_y_max - self.area_y_min))

    def validate(self) -> None:
        if self.num_users < 1:
            raise ScenarioError("num_users must be >= 1")
        if not (self.area_x_max > self.area_x_min and self.area_y_max > self.area_y_min):
            raise ScenarioError("area extents must be nonempty")
        if not 0.0 <= self.anchor_fraction <= 1.0:
            raise ScenarioError("anchor_fraction must lie in [0, 1]")
        if self.trajectory.num_points > self.num_users:
            raise ScenarioError(
                f"trajectory has {self.trajectory.num_points} points but only {self.num_users} users"
            )


@dataclass
class UePlacement:
    positions: np.ndarray  # (N, 3) meters
    trajectory_indices: np.ndarray  # ordered, int
    anchor_indices: np.ndarray  # sorted, int, duplicate-free

    @property
    def num_users(self) -> int:
        return len(self.positions)

    def trajectory_order(self) -> np.ndarray:
        """Per-user position along the trajectory, -1 for users off the curve."""
        order = np.full(self.num_users, -1, dtype=np.int64)
        order[self.trajectory_indices] = np.arange(len(self.trajectory_indices))
        return order

    def anchor_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_users, dtype=bool)
        mask[self.anchor_indices] = True
        return mask


def _inside(config: ScenarioConfig, xy: np.ndarray) -> np.ndarray:
    xy = np.atleast_2d(xy)
    return (
        (xy[:, 0] >= config.area_x_min)
        & (xy[:, 0] <= config.area_x_max)
        & (xy[:, 1] >= config.area_y_min)
        & (xy[:, 1] <= config.area_y_max)
    )


def _curve(traj: TrajectoryConfig):
    phi = np.deg2rad(traj.heading_deg)
    u = np.array([np.cos(phi), np.sin(phi)])
    n = np.array([-u[1], u[0]])
    start = np.array([traj.start_x, traj.start_y])
    if traj.shape == "straight":
        return lambda s: start + s * u
    if traj.shape == "sine":
        if traj.period <= 0:
            raise ScenarioError("trajectory period must be positive")
        w = 2.0 * np.pi / traj.period
        return lambda s: start + s * u + traj.amplitude * np.sin(w * s) * n
    raise ScenarioError(f"unknown trajectory shape {traj.shape!r}")


def generate_trajectory(config: ScenarioConfig) -> np.ndarray:
    """Walk the configured curve in chords of exactly ``step_length`` meters.

    Returns a ``(num_points, 3)`` array at ``user_height``.
    """
    traj = config.trajectory
    if traj.step_length <= 0:
        raise ScenarioError("step_length must be positive")
    if traj.num_points < 2:
        raise ScenarioError("a trajectory needs at least two points")
    curve = _curve(traj)
    step = traj.step_length

    s = 0.0
    points = [curve(s)]
    for _ in range(traj.num_points - 1):
        here = points[-1]

        def gap(t, here=here):
            return np.linalg.norm(curve(t) - here) - step

        # the chord first reaches `step` no later than arc length `step`
        hi = s + step
        while gap(hi) < 0:
            hi += step
        s = brentq(gap, s, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        nxt = curve(s)
        # snap the residual floating error onto the exact chord length
        d = nxt - here
        points.append(here + d * (step / np.linalg.norm(d)))

    xy = np.array(points)
    if not np.all(_inside(config, xy)):
        raise ScenarioError("trajectory leaves the configured area")
    return np.column_stack([xy, np.full(len(xy), config.user_height)])


def select_anchors(placement: UePlacement, fraction: float, seed: int) -> np.ndarray:
    """Draw floor(fraction*N) distinct user indices uniformly, returned sorted."""
    if not 0.0 <= fraction <= 1.0:
        raise ScenarioError("anchor fraction must lie in [0, 1]")
    n = placement.num_users
    count = int(np.floor(fraction * n + 1e-9))
    rng = np.random.default_rng([seed, ANCHOR_STREAM])
    return np.sort(rng.choice(n, size=count, replace=False)).astype(np.int64)


def generate_placement(config: ScenarioConfig, with_trajectory: bool = True) -> UePlacement:
    """Trajectory points first (in time order), then uniform users over the area."""
    config.validate()
    if with_trajectory and config.trajectory.num_points > 0:
        traj = generate_trajectory(config)
    else:
        traj = np.zeros((0, 3))
    rng = np.random.default_rng([config.seed, PLACEMENT_STREAM])
    rest = config.num_users - len(traj)
    xs = rng.uniform(config.area_x_min, config.area_x_max, size=rest)
    ys = rng.uniform(config.area_y_min, config.area_y_max, size=rest)
    uniform = np.column_stack([xs, ys, np.full(rest, config.user_height)])
    positions = np.vstack([traj, uniform])

    placement = UePlacement(
        positions=positions,
        trajectory_indices=np.arange(len(traj), dtype=np.int64),
        anchor_indices=np.zeros(0, dtype=np.int64),
    )
    placement.anchor_indices = select_anchors(placement, config.anchor_fraction, config.seed)
    return placement
