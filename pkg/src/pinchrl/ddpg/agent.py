"""Actor-critic learner and the episodic training loop."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mlp import Adam, Mlp, soft_update
from .replay import Batch, ReplayBuffer


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.99
    tau_critic: float = 0.001
    tau_actor: float = 0.001
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 100_000
    episodes: int = 2000
    noise_std: float = 0.2
    noise_decay: float = 0.999
    noise_floor: float = 0.02
    hidden: tuple[int, int] = (256, 256)
    warmup_batches: int = 10
    actor_final_scale: float = 1e-3
    reward_scale: float = 1.0
    preact_l2: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        problems = []
        if not 0 <= self.discount < 1:
            problems.append("discount must lie in [0, 1)")
        for name in ("tau_critic", "tau_actor"):
            if not 0 < getattr(self, name) <= 1:
                problems.append(f"{name} must lie in (0, 1]")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.episodes < 1:
            problems.append("episodes must be >= 1")
        if self.buffer_capacity < self.batch_size:
            problems.append("buffer_capacity must be >= batch_size")
        if min(self.actor_lr, self.critic_lr) <= 0:
            problems.append("learning rates must be positive")
        if self.noise_std < 0 or self.noise_floor < 0 or not 0 < self.noise_decay <= 1:
            problems.append("invalid exploration noise schedule")
        if self.preact_l2 < 0:
            problems.append("preact_l2 must be non-negative")
        if not self.reward_scale > 0:
            problems.append("reward_scale must be positive")
        if len(self.hidden) != 2 or min(self.hidden) < 1:
            problems.append("hidden must hold two positive layer widths")
        if problems:
            raise ValueError("; ".join(problems))

    def noise_at(self, episode: int) -> float:
        """Exploration std for a 0-based episode index."""
        return max(self.noise_std * self.noise_decay ** episode, self.noise_floor)


def critic_update(
    critic: Mlp,
    critic_target: Mlp,
    actor_target: Mlp,
    batch: Batch,
    discount: float,
    opt: Adam,
) -> float:
    """One step on the mean squared TD error; returns the pre-step loss.

    Targets bootstrap through the target actor: ``y = r + discount * Q'(s', mu'(s'))``.
    """
    a2 = actor_target(batch.s2)
    y = batch.r + discount * critic_target(np.hstack([batch.s2, a2]))[:, 0]
    q, acts = critic.forward(np.hstack([batch.s, batch.a]))
    err = q[:, 0] - y
    loss = float(np.mean(err ** 2))
    grads, _ = critic.backward(acts, (2.0 / len(err)) * err[:, None])
    opt.step(critic.params, grads)
    return loss


def actor_gradients(
    actor: Mlp, critic: Mlp, states: np.ndarray, preact_l2: float = 0.0
) -> tuple[list[np.ndarray], float]:
    """Gradient of ``-mean Q(s, mu(s)) + preact_l2 * mean ||z||^2`` w.r.t. actor
    parameters, and the mean Q.

    ``z`` is the actor's output pre-activation; the penalty keeps the tanh
    away from saturation unless the critic's slope justifies it.
    """
    a, a_acts = actor.forward(states)
    q, q_acts = critic.forward(np.hstack([states, a]))
    n = len(states)
    _, dx = critic.backward(q_acts, np.full((n, 1), -1.0 / n))
    extra = None
    if preact_l2 > 0:
        z = a_acts[-2] @ actor.params[-2] + actor.params[-1]
        extra = (2.0 * preact_l2 / n) * z
    grads, _ = actor.backward(a_acts, dx[:, states.shape[1]:], extra)
    return grads, float(q.mean())


def actor_update(actor: Mlp, critic: Mlp, batch: Batch, opt: Adam, preact_l2: float = 0.0) -> float:
    """Ascend the deterministic policy gradient; returns the pre-step mean Q."""
    grads, mean_q = actor_gradients(actor, critic, batch.s, preact_l2)
    opt.step(actor.params, grads)
    return mean_q


class Agent:
    def __init__(self, state_dim: int, action_dim: int, cfg: AgentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.state_dim = state_dim
        self.action_dim = action_dim
        h1, h2 = cfg.hidden
        self.actor = Mlp.init([state_dim, h1, h2, action_dim], "tanh", rng, cfg.actor_final_scale)
        self.critic = Mlp.init([state_dim + action_dim, h1, h2, 1], "identity", rng)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = Adam(self.actor.params, cfg.actor_lr)
        self.critic_opt = Adam(self.critic.params, cfg.critic_lr)

    def act(self, state: np.ndarray, noise_std: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
        a = self.actor(state)
        if noise_std > 0:
            a = np.clip(a + rng.normal(0.0, noise_std, a.shape), -1.0, 1.0)
        return a

    def update(self, batch: Batch) -> tuple[float, float]:
        cfg = self.cfg
        loss = critic_update(self.critic, self.critic_target, self.actor_target, batch, cfg.discount, self.critic_opt)
        mean_q = actor_update(self.actor, self.critic, batch, self.actor_opt, cfg.preact_l2)
        soft_update(self.critic_target, self.critic, cfg.tau_critic)
        soft_update(self.actor_target, self.actor, cfg.tau_actor)
        return loss, mean_q

    def networks(self) -> dict[str, Mlp]:
        return {
            "actor": self.actor,
            "critic": self.critic,
            "actor_target": self.actor_target,
            "critic_target": self.critic_target,
        }


@dataclass
class EpisodeLog:
    episode: int
    episode_reward: float
    mean_rate: float
    qos_violation_rate: float
    noise_std: float
    wall_ms: float


@dataclass
class TrainResult:
    agent: Agent
    log: list[EpisodeLog] = field(default_factory=list)
    buffer: ReplayBuffer | None = None
    env: object = None

    @property
    def rewards(self) -> np.ndarray:
        return np.array([e.episode_reward for e in self.log])


def train(
    env,
    cfg: AgentConfig,
    rng: np.random.Generator,
    on_episode: Callable[[EpisodeLog], None] | None = None,
) -> TrainResult:
    """Run ``cfg.episodes`` episodes of ``env.cfg.horizon`` steps each.

    ``rng`` seeds network initialization, exploration noise and minibatch
    sampling; the environment owns its own generator. Learning starts once the
    buffer holds ``warmup_batches * batch_size`` transitions, and every step
    after that performs one critic, one actor and two target updates.
    """
    init_rng, noise_rng, sample_rng = rng.spawn(3)
    agent = Agent(env.cfg.state_dim, env.cfg.action_dim, cfg, init_rng)
    buffer = ReplayBuffer(cfg.buffer_capacity, env.cfg.state_dim, env.cfg.action_dim)
    warm = cfg.warmup_batches * cfg.batch_size
    result = TrainResult(agent, buffer=buffer, env=env)

    for ep in range(cfg.episodes):
        start = time.perf_counter()
        sigma = cfg.noise_at(ep)
        s = env.reset()
        total_reward, rates = 0.0, []
        for _ in range(env.cfg.horizon):
            a = agent.act(s, sigma, noise_rng)
            out = env.step(a)
            buffer.push(s, a, cfg.reward_scale * out.reward, out.state)
            total_reward += out.reward
            rates.append(out.rate)
            s = out.state
            if len(buffer) >= max(warm, cfg.batch_size):
                agent.update(buffer.sample(sample_rng, cfg.batch_size))
        rates = np.asarray(rates)
        entry = EpisodeLog(
            episode=ep + 1,
            episode_reward=total_reward,
            mean_rate=float(rates.mean()),
            qos_violation_rate=float(np.mean(rates < env.cfg.r_th)),
            noise_std=sigma,
            wall_ms=(time.perf_counter() - start) * 1e3,
        )
        result.log.append(entry)
        if on_episode is not None:
            on_episode(entry)
    return result
