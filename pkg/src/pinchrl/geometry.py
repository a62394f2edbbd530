"""Waveguide geometry, pinching configurations and random-waypoint mobility.

Points are plain ``numpy`` arrays of shape ``(3,)`` holding ``[x, y, z]`` in
meters. Waveguides are indexed from 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np


def point3(x: float, y: float, z: float = 0.0) -> np.ndarray:
    p = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError(f"non-finite point {p}")
    return p


@dataclass(frozen=True)
class WaveguideLayout:
    """Parallel waveguides running along the x axis.

    Waveguide ``n`` is fed at ``[0, y_n, A_n]`` and ends at ``[D_n, y_n, A_n]``.
    """

    lengths: tuple[float, ...] = (100.0, 100.0)
    heights: tuple[float, ...] = (10.0, 10.0)
    offsets: tuple[float, ...] = (0.0, 3.0)
    pa_counts: tuple[int, ...] = (4, 4)

    def __post_init__(self):
        for name in ("lengths", "heights", "offsets", "pa_counts"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        n = len(self.lengths)
        if n < 1:
            raise ValueError("layout needs at least one waveguide")
        if not (len(self.heights) == len(self.offsets) == len(self.pa_counts) == n):
            raise ValueError("per-waveguide sequences must all have length N")
        if any(d <= 0 for d in self.lengths):
            raise ValueError(f"waveguide lengths must be positive: {self.lengths}")
        if any(a <= 0 for a in self.heights):
            raise ValueError(f"waveguide heights must be positive: {self.heights}")
        if any(int(p) != p or p < 1 for p in self.pa_counts):
            raise ValueError(f"PA counts must be integers >= 1: {self.pa_counts}")

    @property
    def n_waveguides(self) -> int:
        return len(self.lengths)

    @property
    def total_pas(self) -> int:
        return int(sum(self.pa_counts))

    def check_index(self, n: int) -> None:
        if not 0 <= n < self.n_waveguides:
            raise IndexError(f"waveguide index {n} out of range for N={self.n_waveguides}")

    def feed_point(self, n: int) -> np.ndarray:
        self.check_index(n)
        return point3(0.0, self.offsets[n], self.heights[n])

    def end_point(self, n: int) -> np.ndarray:
        self.check_index(n)
        return point3(self.lengths[n], self.offsets[n], self.heights[n])

    def slices(self) -> list[slice]:
        """Slices of the stacked PA index belonging to each waveguide."""
        bounds = np.concatenate([[0], np.cumsum(self.pa_counts)])
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def pa_position(layout: WaveguideLayout, n: int, x: float) -> np.ndarray:
    """Cartesian position of a pinching antenna at axial coordinate ``x``.

    ``x`` is not clipped to the waveguide; out-of-guide placements are
    penalized by the caller.
    """
    layout.check_index(n)
    return point3(x, layout.offsets[n], layout.heights[n])


@dataclass(frozen=True)
class PinchingConfig:
    """Axial PA positions, one array per waveguide. May be infeasible."""

    positions: tuple[np.ndarray, ...]

    def __post_init__(self):
        arrs = tuple(np.array(p, dtype=float).reshape(-1) for p in self.positions)
        for a in arrs:
            a.setflags(write=False)
        object.__setattr__(self, "positions", arrs)

    @classmethod
    def from_flat(cls, layout: WaveguideLayout, flat: Sequence[float]) -> "PinchingConfig":
        flat = np.asarray(flat, dtype=float).reshape(-1)
        if flat.size != layout.total_pas:
            raise ValueError(f"expected {layout.total_pas} positions, got {flat.size}")
        return cls(tuple(flat[s] for s in layout.slices()))

    @classmethod
    def uniform(cls, layout: WaveguideLayout) -> "PinchingConfig":
        """Centers of ``P_n`` equal cells: ``x = (p - 1/2) D_n / P_n``."""
        return cls(tuple(
            (np.arange(p) + 0.5) * d / p for d, p in zip(layout.lengths, layout.pa_counts)
        ))

    def flat(self) -> np.ndarray:
        return np.concatenate(self.positions)

    def matches(self, layout: WaveguideLayout) -> bool:
        return tuple(len(p) for p in self.positions) == layout.pa_counts

    def points(self, layout: WaveguideLayout) -> np.ndarray:
        """Stacked ``(sum P_n, 3)`` Cartesian PA positions."""
        if not self.matches(layout):
            raise ValueError("pinching config does not match layout PA counts")
        rows = [
            np.column_stack([x, np.full_like(x, layout.offsets[n]), np.full_like(x, layout.heights[n])])
            for n, x in enumerate(self.positions)
        ]
        return np.vstack(rows)

    def out_of_guide(self, layout: WaveguideLayout) -> list[tuple[int, int, float]]:
        return [
            (n, p, float(x))
            for n, xs in enumerate(self.positions)
            for p, x in enumerate(xs)
            if x < 0.0 or x > layout.lengths[n]
        ]

    def is_feasible(self, layout: WaveguideLayout, min_spacing: float) -> bool:
        return not self.out_of_guide(layout) and not spacing_violations(self, min_spacing)


class SpacingViolation(NamedTuple):
    waveguide: int
    p: int
    q: int
    gap: float


def spacing_violations(config: PinchingConfig, min_spacing: float) -> list[SpacingViolation]:
    """Same-waveguide unordered PA pairs closer than ``min_spacing``.

    A gap exactly equal to ``min_spacing`` is feasible.
    """
    out = []
    for n, xs in enumerate(config.positions):
        gaps = np.abs(xs[:, None] - xs[None, :])
        for p, q in zip(*np.triu_indices(len(xs), k=1)):
            if gaps[p, q] < min_spacing:
                out.append(SpacingViolation(n, int(p), int(q), float(gaps[p, q])))
    return out


# ---------------------------------------------------------------------------
# Random waypoint mobility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RwpParams:
    x_range: tuple[float, float] = (0.0, 100.0)
    y_range: tuple[float, float] = (5.0, 30.0)
    speed_range: tuple[float, float] = (1.0, 5.0)
    pause: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("x_range", "y_range", "speed_range"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        (x_lo, x_hi), (y_lo, y_hi), (v_min, v_max) = self.x_range, self.y_range, self.speed_range
        # degenerate (point) areas are allowed
        if x_lo > x_hi or y_lo > y_hi:
            raise ValueError(f"empty service area {self.x_range} x {self.y_range}")
        if not 0 < v_min <= v_max:
            raise ValueError(f"speed range must satisfy 0 < v_min <= v_max: {self.speed_range}")
        if self.pause < 0:
            raise ValueError("pause must be non-negative")
        if self.dt <= 0:
            raise ValueError("time step must be positive")

    @property
    def v_max(self) -> float:
        return self.speed_range[1]

    def contains(self, p: np.ndarray, tol: float = 1e-9) -> bool:
        return (
            self.x_range[0] - tol <= p[0] <= self.x_range[1] + tol
            and self.y_range[0] - tol <= p[1] <= self.y_range[1] + tol
            and p[2] == 0.0
        )


@dataclass(frozen=True)
class UserMobilityState:
    position: np.ndarray
    waypoint: np.ndarray
    speed: float
    pause_left: float = 0.0

    def with_(self, **kw) -> "UserMobilityState":
        return replace(self, **kw)


def _draw_point(rng: np.random.Generator, params: RwpParams) -> np.ndarray:
    return point3(rng.uniform(*params.x_range), rng.uniform(*params.y_range), 0.0)


def rwp_reset(rng: np.random.Generator, params: RwpParams) -> UserMobilityState:
    position = _draw_point(rng, params)
    waypoint = _draw_point(rng, params)
    speed = float(rng.uniform(*params.speed_range))
    return UserMobilityState(position, waypoint, speed, 0.0)


def rwp_advance(
    state: UserMobilityState, rng: np.random.Generator, params: RwpParams
) -> UserMobilityState:
    """Advance the user by one control interval.

    Motion stops at the waypoint when it is reached inside the interval. With
    zero pause a new waypoint and speed are drawn right away; otherwise they
    are drawn once the pause has elapsed.
    """
    if state.pause_left > 0:
        left = state.pause_left - params.dt
        if left > 0:
            return state.with_(pause_left=left)
        return state.with_(
            waypoint=_draw_point(rng, params),
            speed=float(rng.uniform(*params.speed_range)),
            pause_left=0.0,
        )

    delta = state.waypoint - state.position
    dist = float(np.linalg.norm(delta))
    travel = state.speed * params.dt
    if travel < dist:
        return state.with_(position=state.position + delta * (travel / dist))

    arrived = state.waypoint.copy()
    if params.pause > 0:
        return state.with_(position=arrived, pause_left=params.pause)
    return UserMobilityState(
        arrived, _draw_point(rng, params), float(rng.uniform(*params.speed_range)), 0.0
    )
