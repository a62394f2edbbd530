"""Reference solutions: matched-filter beamforming, brute-force placement,
the fixed-placement benchmark and Monte-Carlo policy evaluation."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .channel import (
    BlockageDraw,
    ChannelParams,
    ChannelRealization,
    assemble,
    los_prob,
    realize_blockage,
)
from .env import EnvConfig, PinchingEnv, decode_action, observed_channel
from .geometry import PinchingConfig, WaveguideLayout


def mrt_beamformer(chan: ChannelRealization, p_bs: float) -> np.ndarray:
    """Matched filter ``sqrt(p_bs) G^H H / ||G^H H||``."""
    eff = chan.effective
    norm = np.linalg.norm(eff)
    if norm == 0:
        raise ValueError("effective channel is zero; matched filter undefined")
    return np.sqrt(p_bs) * eff / norm


def mrt_rate(chan: ChannelRealization, p_bs: float, noise: float) -> float:
    """Closed-form rate of the matched filter, ``log2(1 + p_bs ||G^H H||^2 / noise)``."""
    gain = float(np.vdot(chan.effective, chan.effective).real)
    return float(np.log2(1.0 + p_bs * gain / noise))


# ---------------------------------------------------------------------------
# Brute-force placement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    config: PinchingConfig
    rate: float
    upper_bound: float

    @property
    def slack(self) -> float:
        """Certified distance to the global optimum (bps/Hz)."""
        return max(self.upper_bound - self.rate, 0.0)


def _as_draw(blockage, total: int) -> BlockageDraw:
    if isinstance(blockage, BlockageDraw):
        return blockage
    return BlockageDraw.sample(np.random.default_rng(blockage), total)


def _pa_terms(x, n, p_index, layout, user, draw, params, delta):
    """Products ``g_n[p] h_{n,p}`` for candidate axial positions ``x`` of one PA."""
    x = np.asarray(x, dtype=float)
    d = np.sqrt((x - user[0]) ** 2 + (layout.offsets[n] - user[1]) ** 2 + (layout.heights[n] - user[2]) ** 2)
    los = draw.uniforms[p_index] < los_prob(d, params.beta)
    h = np.where(
        los,
        params.eta_los_value * np.exp(-1j * 2 * np.pi / params.wavelength * d) / d ** (params.alpha / 2),
        params.eta_nlos_value * np.exp(-1j * draw.phases[p_index]) / d ** (params.alpha_nlos / 2),
    )
    g = np.sqrt(delta[n]) * np.exp(-1j * 2 * np.pi / params.guided_wavelength * np.abs(x))
    return g * h


def placement_rate(
    layout: WaveguideLayout,
    config: PinchingConfig,
    user: np.ndarray,
    draw: BlockageDraw,
    params: ChannelParams,
    p_bs: float,
    noise: float,
) -> float:
    """Matched-filter rate of ``config`` under the matched realization ``draw``."""
    blockage = realize_blockage(draw, layout, config, user, params)
    return mrt_rate(assemble(layout, config, user, blockage, params), p_bs, noise)


def coherent_upper_bound(
    layout: WaveguideLayout,
    user: np.ndarray,
    draw: BlockageDraw,
    params: ChannelParams,
    p_bs: float,
    noise: float,
) -> float:
    """Rate bound valid for every in-guide placement under ``draw``.

    Each PA's channel modulus is largest at the guide point closest to the
    user (path loss decreases and, with matched uniforms, LoS can only switch
    on as the distance shrinks), and the per-guide sum is largest when all
    terms add in phase.
    """
    user = np.asarray(user, dtype=float)
    delta = params.delta_for(layout)
    gain = 0.0
    for n, s in enumerate(layout.slices()):
        x_best = np.clip(user[0], 0.0, layout.lengths[n])
        amp = sum(
            abs(_pa_terms(x_best, n, i, layout, user, draw, params, delta))
            for i in range(s.start, s.stop)
        )
        gain += amp ** 2
    return float(np.log2(1.0 + p_bs * gain / noise))


def _start_config(layout: WaveguideLayout, min_spacing: float) -> PinchingConfig:
    rows = []
    for length, count in zip(layout.lengths, layout.pa_counts):
        if count > 1 and (count - 1) * min_spacing > length:
            raise ValueError(
                f"{count} PAs cannot keep spacing {min_spacing} on a waveguide of length {length}"
            )
        if count == 1 or length / count >= min_spacing:
            rows.append((np.arange(count) + 0.5) * length / count)
        else:
            rows.append(np.arange(count) * length / (count - 1))
    return PinchingConfig(tuple(rows))


def _grid(length: float, resolution: float, extra) -> np.ndarray:
    steps = int(np.floor(length / resolution + 1e-9))
    pts = np.concatenate([np.arange(steps + 1) * resolution, [length], np.atleast_1d(extra)])
    pts = pts[(pts >= 0) & (pts <= length)]
    return np.unique(pts)


def grid_search_pinching(
    layout: WaveguideLayout,
    user: np.ndarray,
    blockage: BlockageDraw | int,
    params: ChannelParams,
    resolution: float,
    min_spacing: float,
    p_bs: float,
    noise: float,
    mode: str = "auto",
    max_sweeps: int = 30,
) -> OracleResult:
    """Best matched-filter placement on an axial grid for one time step.

    Candidates on each guide are the grid ``0, r, 2r, ...`` plus the point
    closest to the user. ``mode="exact"`` enumerates all joint placements
    (only for at most two PAs in total), ``"coordinate"`` optimizes one PA at
    a time until no move helps, additionally trying sub-wavelength offsets so
    the guided phases can be aligned. Blockage comes from a fixed
    :class:`BlockageDraw` (or a seed for one), so every candidate sees the
    same realization. Ties go to the lexicographically smallest placement.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    user = np.asarray(user, dtype=float)
    total = layout.total_pas
    draw = _as_draw(blockage, total)
    if mode == "auto":
        mode = "exact" if total <= 2 else "coordinate"
    if mode == "exact" and total > 2:
        raise ValueError("exact joint search is limited to two PAs in total")

    delta = params.delta_for(layout)
    bound = coherent_upper_bound(layout, user, draw, params, p_bs, noise)
    targets = [float(np.clip(user[0], 0.0, d)) for d in layout.lengths]

    def gain_to_rate(gain):
        return np.log2(1.0 + p_bs * gain / noise)

    if mode == "exact":
        owners = [n for n, c in enumerate(layout.pa_counts) for _ in range(c)]
        grids = [_grid(layout.lengths[n], resolution, targets[n]) for n in owners]
        terms = [_pa_terms(gr, n, i, layout, user, draw, params, delta) for i, (gr, n) in enumerate(zip(grids, owners))]
        best = None
        for combo in itertools.product(*[range(len(gr)) for gr in grids]):
            xs = [grids[i][k] for i, k in enumerate(combo)]
            if any(
                owners[i] == owners[j] and abs(xs[i] - xs[j]) < min_spacing
                for i, j in itertools.combinations(range(total), 2)
            ):
                continue
            sums = np.zeros(layout.n_waveguides, dtype=complex)
            for i, k in enumerate(combo):
                sums[owners[i]] += terms[i][k]
            rate = float(gain_to_rate(np.sum(np.abs(sums) ** 2)))
            if best is None or rate > best[0] or (rate == best[0] and tuple(xs) < best[1]):
                best = (rate, tuple(xs))
        if best is None:
            raise ValueError("no feasible placement on the grid")
        config = PinchingConfig.from_flat(layout, best[1])
        return OracleResult(config, best[0], bound)

    if mode != "coordinate":
        raise ValueError(f"unknown search mode {mode!r}")

    config = _start_config(layout, min_spacing)
    xs = [x.copy() for x in config.positions]
    lam_g = params.guided_wavelength
    fine = np.arange(-64, 65) * lam_g / 16
    local = np.arange(-32, 33) * lam_g / 32
    slices = layout.slices()
    contrib = [
        np.array([_pa_terms(xs[n][p], n, s.start + p, layout, user, draw, params, delta) for p in range(len(xs[n]))])
        for n, s in enumerate(slices)
    ]
    current = float(gain_to_rate(sum(abs(c.sum()) ** 2 for c in contrib)))

    for _ in range(max_sweeps):
        improved = False
        for n, s in enumerate(slices):
            base = _grid(layout.lengths[n], resolution, targets[n])
            for p in range(len(xs[n])):
                cand = np.unique(np.concatenate([base, targets[n] + fine, xs[n][p] + local]))
                cand = cand[(cand >= 0) & (cand <= layout.lengths[n])]
                others = np.delete(xs[n], p)
                if len(others):
                    ok = np.all(np.abs(cand[:, None] - others[None, :]) >= min_spacing, axis=1)
                    cand = cand[ok]
                terms = _pa_terms(cand, n, s.start + p, layout, user, draw, params, delta)
                rest = contrib[n].sum() - contrib[n][p]
                other_gain = sum(abs(c.sum()) ** 2 for m, c in enumerate(contrib) if m != n)
                rates = gain_to_rate(other_gain + np.abs(rest + terms) ** 2)
                k = int(np.argmax(rates))
                if rates[k] > current + 1e-12:
                    xs[n][p] = cand[k]
                    contrib[n][p] = terms[k]
                    current = float(rates[k])
                    improved = True
        if not improved:
            break

    config = PinchingConfig(tuple(xs))
    rate = placement_rate(layout, config, user, draw, params, p_bs, noise)
    return OracleResult(config, rate, bound)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


class Policy(Protocol):
    def __call__(self, state: np.ndarray) -> tuple[np.ndarray, PinchingConfig]: ...


def _block_diag_g(g: np.ndarray, layout: WaveguideLayout) -> np.ndarray:
    G = np.zeros((layout.total_pas, layout.n_waveguides), dtype=complex)
    for n, s in enumerate(layout.slices()):
        G[s, n] = g[s]
    return G


@dataclass
class FixedBaselinePolicy:
    """Uniformly spaced PAs that never move, with a matched filter computed
    from the channel seen in the latest observation."""

    cfg: EnvConfig

    def __post_init__(self):
        self.config = PinchingConfig.uniform(self.cfg.layout)

    def __call__(self, state: np.ndarray) -> tuple[np.ndarray, PinchingConfig]:
        g, H = observed_channel(state, self.cfg)
        eff = _block_diag_g(g, self.cfg.layout).conj().T @ H
        norm = np.linalg.norm(eff)
        if norm == 0:
            n = self.cfg.n_waveguides
            return np.full(n, np.sqrt(self.cfg.p_bs / n), dtype=complex), self.config
        return np.sqrt(self.cfg.p_bs) * eff / norm, self.config


def fixed_baseline_policy(cfg: EnvConfig) -> FixedBaselinePolicy:
    return FixedBaselinePolicy(cfg)


@dataclass
class ActorPolicy:
    """Deterministic actor output decoded into a beamformer and placement."""

    actor: Callable[[np.ndarray], np.ndarray]
    cfg: EnvConfig

    def __call__(self, state: np.ndarray) -> tuple[np.ndarray, PinchingConfig]:
        return decode_action(self.actor(state), self.cfg)


@dataclass
class ZeroPowerPolicy:
    cfg: EnvConfig

    def __call__(self, state):
        return np.zeros(self.cfg.n_waveguides, dtype=complex), PinchingConfig.uniform(self.cfg.layout)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class EpisodeTrace:
    users: np.ndarray
    positions: np.ndarray
    rates: np.ndarray
    rewards: np.ndarray
    beamformers: np.ndarray
    draws: list[BlockageDraw]
    spacing_violations: int
    out_of_guide: int


def rollout(policy: Policy, cfg: EnvConfig, rng: np.random.Generator) -> EpisodeTrace:
    env = PinchingEnv(cfg, rng)
    state = env.reset()
    users, positions, rates, rewards, beams, draws = [], [], [], [], [], []
    spacing = guide = 0
    for _ in range(cfg.horizon):
        w, config = policy(state)
        out = env.step_decoded(w, config)
        state = out.state
        users.append(out.user)
        positions.append(config.flat())
        rates.append(out.rate)
        rewards.append(out.reward)
        beams.append(out.beamformer)
        draws.append(env.draw)
        spacing += len(out.spacing_violations)
        guide += len(out.out_of_guide)
    return EpisodeTrace(
        np.array(users), np.array(positions), np.array(rates), np.array(rewards),
        np.array(beams), draws, spacing, guide,
    )


def episode_seeds(seed, episodes: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(episodes)


@dataclass
class EvalMetrics:
    mean_rate: float
    ci95: float
    qos_violation_rate: float
    spacing_violations: int
    out_of_guide: int
    episode_rates: np.ndarray
    traces: list[EpisodeTrace] = field(repr=False, default_factory=list)

    @property
    def episodes(self) -> int:
        return len(self.episode_rates)


def summarize(traces: list[EpisodeTrace], r_th: float) -> EvalMetrics:
    per_episode = np.array([t.rates.mean() for t in traces])
    all_rates = np.concatenate([t.rates for t in traces])
    n = len(per_episode)
    ci = 1.96 * per_episode.std(ddof=1) / np.sqrt(n) if n > 1 else 0.0
    return EvalMetrics(
        mean_rate=float(all_rates.mean()),
        ci95=float(ci),
        qos_violation_rate=float(np.mean(all_rates < r_th)),
        spacing_violations=sum(t.spacing_violations for t in traces),
        out_of_guide=sum(t.out_of_guide for t in traces),
        episode_rates=per_episode,
        traces=traces,
    )


def evaluate_policy(policy: Policy, cfg: EnvConfig, episodes: int, seed) -> EvalMetrics:
    """Noise-free Monte-Carlo rollouts, one independent generator per episode.

    Episode ``i`` uses the ``i``-th child of ``seed``, so two policies evaluated
    with the same seed face identical trajectories and blockage draws.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    traces = [rollout(policy, cfg, np.random.default_rng(s)) for s in episode_seeds(seed, episodes)]
    return summarize(traces, cfg.r_th)
