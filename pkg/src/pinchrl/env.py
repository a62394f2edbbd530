"""Episodic decision process for joint beamforming and PA placement.

Action layout (all reals, nominally in ``[-1, 1]``)::

    [Re(w_1..w_N), Im(w_1..w_N), t_{1,1}..t_{N,P_N}]

where each placement entry maps to ``x = (t + 1) / 2 * D_n``.

State layout::

    [previous action, previous beam power, Re/Im pairs of g_n, Re/Im pairs of h_{n,k}]

Beam quantities in the state are expressed relative to the power budget and
wireless coefficients are rescaled by ``d_ref^(alpha/2) / eta_los``; these are
observation transforms only and never touch the reward.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import (
    BlockageDraw,
    ChannelParams,
    ChannelRealization,
    achievable_rate,
    assemble,
    dbm_to_watt,
    realize_blockage,
)
from .geometry import (
    PinchingConfig,
    RwpParams,
    SpacingViolation,
    UserMobilityState,
    WaveguideLayout,
    rwp_advance,
    rwp_reset,
    spacing_violations,
)

POWER_RTOL = 1e-9


@dataclass(frozen=True)
class EnvConfig:
    p_bs: float = dbm_to_watt(20.0)
    r_th: float = 1.0
    min_spacing: float = 0.0111 / 2
    horizon: int = 100
    pen1: float = 10.0
    pen2: float = 1.0
    pen3: float = 1.0
    layout: WaveguideLayout = field(default_factory=WaveguideLayout)
    rwp: RwpParams = field(default_factory=RwpParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    obs_ref_distance: float = 10.0

    def __post_init__(self):
        problems = []
        if not self.p_bs > 0:
            problems.append("p_bs must be positive")
        if self.r_th < 0:
            problems.append("r_th must be non-negative")
        if not self.min_spacing > 0:
            problems.append("min_spacing must be positive")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            problems.append("horizon must be an integer >= 1")
        if min(self.pen1, self.pen2, self.pen3) < 0:
            problems.append("penalty weights must be non-negative")
        if problems:
            raise ValueError("; ".join(problems))
        self.channel.delta_for(self.layout)

    @property
    def n_waveguides(self) -> int:
        return self.layout.n_waveguides

    @property
    def action_dim(self) -> int:
        return 2 * self.layout.n_waveguides + self.layout.total_pas

    @property
    def state_dim(self) -> int:
        return self.action_dim + 1 + 4 * self.layout.total_pas

    @property
    def noise(self) -> float:
        return self.channel.noise_power

    @property
    def obs_channel_scale(self) -> float:
        return self.obs_ref_distance ** (self.channel.alpha / 2) / self.channel.eta_los_value


# ---------------------------------------------------------------------------
# Beamformer and action coding
# ---------------------------------------------------------------------------


def normalize_beamformer(w_raw: np.ndarray, p_bs: float) -> np.ndarray:
    """Rescale ``w_raw`` so that ``||w||^2 = p_bs``. Zero input raises."""
    w_raw = np.asarray(w_raw, dtype=complex)
    power = float(np.vdot(w_raw, w_raw).real)
    if power == 0.0:
        raise ValueError("cannot normalize a zero beamformer")
    return w_raw * np.sqrt(p_bs / power)


def uniform_beamformer(n: int, p_bs: float) -> np.ndarray:
    return np.full(n, np.sqrt(p_bs / n), dtype=complex)


def decode_action(raw: np.ndarray, cfg: EnvConfig) -> tuple[np.ndarray, PinchingConfig]:
    raw = np.asarray(raw, dtype=float).reshape(-1)
    if raw.size != cfg.action_dim:
        raise ValueError(f"action has {raw.size} entries, expected {cfg.action_dim}")
    n = cfg.n_waveguides
    w_raw = raw[:n] + 1j * raw[n:2 * n]
    try:
        w = normalize_beamformer(w_raw, cfg.p_bs)
    except ValueError:
        w = uniform_beamformer(n, cfg.p_bs)
    lengths = np.repeat(cfg.layout.lengths, cfg.layout.pa_counts)
    x = (raw[2 * n:] + 1.0) / 2.0 * lengths
    return w, PinchingConfig.from_flat(cfg.layout, x)


def encode_action(w: np.ndarray, config: PinchingConfig, cfg: EnvConfig) -> np.ndarray:
    """Inverse of :func:`decode_action` with ``w`` expressed relative to ``sqrt(p_bs)``."""
    w = np.asarray(w, dtype=complex) / np.sqrt(cfg.p_bs)
    lengths = np.repeat(cfg.layout.lengths, cfg.layout.pa_counts)
    t = 2.0 * config.flat() / lengths - 1.0
    return np.concatenate([w.real, w.imag, t])


# ---------------------------------------------------------------------------
# Reward
# ---------------------------------------------------------------------------


def indicator_I1(x: float) -> float:
    """QoS indicator: the (negative) shortfall, zero when met."""
    return 0.0 if x >= 0 else float(x)


def indicator_I2(x: float, length: float) -> float:
    """Distance from ``x`` to the guide ``[0, length]``; zero inside."""
    if x < 0:
        return float(-x)
    if x > length:
        return float(x - length)
    return 0.0


def indicator_I3(gap: float, min_spacing: float) -> float:
    """Spacing shortfall ``D - gap``; zero when ``gap >= D``."""
    return 0.0 if gap >= min_spacing else float(min_spacing - gap)


class Penalties(NamedTuple):
    qos: float
    out_of_guide: float
    spacing: float

    @property
    def total(self) -> float:
        return self.qos + self.out_of_guide + self.spacing


def penalties(rate: float, config: PinchingConfig, cfg: EnvConfig) -> Penalties:
    qos = -indicator_I1(rate - cfg.r_th) * cfg.pen1
    guide = sum(
        indicator_I2(x, cfg.layout.lengths[n])
        for n, xs in enumerate(config.positions)
        for x in xs
    ) * cfg.pen2
    spacing = sum(
        indicator_I3(v.gap, cfg.min_spacing) for v in spacing_violations(config, cfg.min_spacing)
    ) * cfg.pen3
    return Penalties(float(qos), float(guide), float(spacing))


def compute_reward(rate: float, config: PinchingConfig, cfg: EnvConfig) -> float:
    return rate - penalties(rate, config, cfg).total


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------


def encode_state(prev_action: np.ndarray, w: np.ndarray, chan: ChannelRealization, cfg: EnvConfig) -> np.ndarray:
    g = np.concatenate(chan.g)
    h = chan.H * cfg.obs_channel_scale
    power = float(np.vdot(w, w).real) / cfg.p_bs
    return np.concatenate([
        prev_action,
        [power],
        np.column_stack([g.real, g.imag]).ravel(),
        np.column_stack([h.real, h.imag]).ravel(),
    ])


def observed_channel(state: np.ndarray, cfg: EnvConfig) -> tuple[np.ndarray, np.ndarray]:
    """Recover the stacked ``(g, H)`` vectors from an encoded state."""
    total = cfg.layout.total_pas
    off = cfg.action_dim + 1
    g = state[off:off + 2 * total].reshape(-1, 2)
    h = state[off + 2 * total:off + 4 * total].reshape(-1, 2)
    return g[:, 0] + 1j * g[:, 1], (h[:, 0] + 1j * h[:, 1]) / cfg.obs_channel_scale


@dataclass(frozen=True)
class StepOutcome:
    state: np.ndarray
    reward: float
    rate: float
    qos_met: bool
    spacing_violations: list[SpacingViolation]
    out_of_guide: list[tuple[int, int, float]]
    user: np.ndarray
    pinching: PinchingConfig
    beamformer: np.ndarray
    penalties: Penalties
    t: int
    done: bool


class PinchingEnv:
    """Single-user pinching-antenna downlink as a sequential decision problem.

    Each step moves the user, redraws blockage and NLoS phases, then applies
    the action to the channel at the new user position. All randomness comes
    from ``rng``; the number of draws per step does not depend on the action,
    so equally seeded environments see matched realizations regardless of
    the policy driving them.
    """

    def __init__(self, cfg: EnvConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.mobility: UserMobilityState | None = None
        self.draw: BlockageDraw | None = None
        self.state: np.ndarray | None = None
        self.t = 0
        self.max_power_error = 0.0
        self.power_checks = 0

    @property
    def user(self) -> np.ndarray:
        return self.mobility.position

    def reset(self) -> np.ndarray:
        cfg = self.cfg
        self.t = 0
        self.mobility = rwp_reset(self.rng, cfg.rwp)
        config = PinchingConfig.uniform(cfg.layout)
        w = uniform_beamformer(cfg.n_waveguides, cfg.p_bs)
        chan = self._realize(config)
        self.state = encode_state(encode_action(w, config, cfg), w, chan, cfg)
        return self.state

    def _realize(self, config: PinchingConfig) -> ChannelRealization:
        cfg = self.cfg
        self.draw = BlockageDraw.sample(self.rng, cfg.layout.total_pas)
        blockage = realize_blockage(self.draw, cfg.layout, config, self.user, cfg.channel)
        return assemble(cfg.layout, config, self.user, blockage, cfg.channel)

    def step(self, action: np.ndarray) -> StepOutcome:
        """Apply a raw action (decoded with power normalization)."""
        w, config = decode_action(action, self.cfg)
        err = abs(float(np.vdot(w, w).real) - self.cfg.p_bs) / self.cfg.p_bs
        self.max_power_error = max(self.max_power_error, err)
        self.power_checks += 1
        if err > POWER_RTOL:
            raise RuntimeError(f"beam power off budget by relative {err:.3e}")
        return self.step_decoded(w, config)

    def step_decoded(self, w: np.ndarray, config: PinchingConfig) -> StepOutcome:
        """Apply a physical beamformer and placement as given."""
        if self.mobility is None:
            raise RuntimeError("reset() must be called before step()")
        cfg = self.cfg
        w = np.asarray(w, dtype=complex)
        self.mobility = rwp_advance(self.mobility, self.rng, cfg.rwp)
        chan = self._realize(config)
        rate = achievable_rate(chan, w, cfg.noise)
        pen = penalties(rate, config, cfg)
        self.state = encode_state(encode_action(w, config, cfg), w, chan, cfg)
        self.t += 1
        return StepOutcome(
            state=self.state,
            reward=rate - pen.total,
            rate=rate,
            qos_met=rate >= cfg.r_th,
            spacing_violations=spacing_violations(config, cfg.min_spacing),
            out_of_guide=config.out_of_guide(cfg.layout),
            user=self.user.copy(),
            pinching=config,
            beamformer=w,
            penalties=pen,
            t=self.t,
            done=self.t >= cfg.horizon,
        )
