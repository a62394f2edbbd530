"""Experiment drivers behind the command line: training, power sweeps,
trajectory traces, oracle comparison and plain evaluation.

Every driver takes an :class:`ExperimentConfig` and an output directory,
writes CSV files there (plus the resolved config), and returns the rows it
wrote. Random streams derive from the master seed through fixed
``SeedSequence`` keys, so reruns are bit-identical.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import (
    ActorPolicy,
    EpisodeTrace,
    evaluate_policy,
    fixed_baseline_policy,
    grid_search_pinching,
    rollout,
)
from .channel import dbm_to_watt, watt_to_dbm
from .config import ExperimentConfig, dump_config
from .ddpg import Agent, TrainResult, load_checkpoint, read_header, save_checkpoint, train
from .env import PinchingEnv

log = logging.getLogger(__name__)

TRAIN_COLUMNS = ("episode", "episode_reward", "mean_rate", "qos_violation_rate", "noise_std")
SWEEP_COLUMNS = ("p_bs_dbm", "beta", "policy", "mean_rate", "ci95")
ORACLE_COLUMNS = ("t", "oracle_rate", "oracle_bound", "baseline_rate", "learned_rate")

# child keys of the master seed, one per purpose
_TRAIN, _SWEEP, _TRACE, _ORACLE, _EVAL = range(5)


def _stream(seed: int, purpose: int, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), purpose, *extra])


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _prepare(exp: ExperimentConfig, out) -> Path:
    out = Path(out if out is not None else exp.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    dump_config(exp, out / "config.yaml")
    return out


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def _scenario(exp: ExperimentConfig) -> dict:
    env = exp.env
    return {"beta": env.channel.beta, "r_th": env.r_th, "p_bs": env.p_bs, "seed": exp.seed}


def train_agent(exp: ExperimentConfig, on_episode=None) -> TrainResult:
    env_seq, agent_seq = _stream(exp.seed, _TRAIN).spawn(2)
    env = PinchingEnv(exp.env, np.random.default_rng(env_seq))
    return train(env, exp.agent, np.random.default_rng(agent_seq), on_episode)


def cmd_train(exp: ExperimentConfig, out=None, checkpoint_name: str = "checkpoint.npz") -> TrainResult:
    """Train and write ``training.csv``, ``timing.csv`` and a checkpoint.

    Wall-clock times go to ``timing.csv`` so that ``training.csv`` depends
    only on the config and seed.
    """
    out = _prepare(exp, out)

    def progress(e):
        if e.episode % 50 == 0 or e.episode == exp.agent.episodes:
            log.info("episode %d reward %.2f rate %.3f", e.episode, e.episode_reward, e.mean_rate)

    result = train_agent(exp, progress)
    write_csv(
        out / "training.csv",
        TRAIN_COLUMNS,
        [(e.episode, e.episode_reward, e.mean_rate, e.qos_violation_rate, e.noise_std) for e in result.log],
    )
    write_csv(out / "timing.csv", ("episode", "wall_ms"), [(e.episode, round(e.wall_ms, 3)) for e in result.log])
    save_checkpoint(out / checkpoint_name, result.agent, extra=_scenario(exp))
    return result


def load_agent(path, exp: ExperimentConfig) -> Agent:
    return load_checkpoint(path, exp.env.state_dim, exp.env.action_dim)


def resolve_agent(exp: ExperimentConfig, checkpoint, out: Path, retrain: bool, **scenario) -> tuple[Agent, str]:
    """Agent for a scenario that may differ from the checkpoint's.

    If the checkpoint was trained under other ``beta``/``r_th`` values and
    ``retrain`` is set, a fresh agent is trained with this config (cached in
    ``out``). Returns the agent and the path it came from.
    """
    variant = exp.with_env(**scenario)
    if checkpoint is not None:
        trained = read_header(checkpoint).get("extra", {})
        same = all(np.isclose(trained.get(k, np.nan), v) for k, v in scenario.items())
        if same or not retrain:
            return load_agent(checkpoint, variant), str(checkpoint)
    tag = "_".join(f"{k}{v:g}" for k, v in sorted(scenario.items())) or "default"
    path = out / f"checkpoint_{tag}.npz"
    if path.exists() and read_header(path).get("extra") == _scenario(variant):
        return load_agent(path, variant), str(path)
    log.info("training agent for %s", scenario)
    cmd_train(variant, out / f"train_{tag}", checkpoint_name="checkpoint.npz")
    (out / f"train_{tag}" / "checkpoint.npz").replace(path)
    return load_agent(path, variant), str(path)


# ---------------------------------------------------------------------------
# Evaluation drivers
# ---------------------------------------------------------------------------


def cmd_sweep(exp: ExperimentConfig, checkpoint=None, out=None) -> list[tuple]:
    """Mean rate versus BS power for each blockage density.

    Learned and baseline policies at every (power, beta) point face the same
    trajectories and blockage draws. One agent serves all powers; beamformers
    are renormalized to each budget by the decoder.
    """
    out = _prepare(exp, out)
    retrain = exp.sweep.retrain == "per_beta"
    rows, meta = [], {"retrain": exp.sweep.retrain, "realizations": exp.realizations, "agents": {}}
    eval_seed = _stream(exp.seed, _SWEEP)
    for beta in exp.sweep.beta:
        agent = None
        if checkpoint is not None or retrain:
            agent, source = resolve_agent(exp, checkpoint, out, retrain, beta=beta)
            meta["agents"][repr(beta)] = source
        for dbm in exp.sweep.p_bs_dbm:
            variant = exp.with_env(beta=beta, p_bs=dbm_to_watt(dbm))
            policies = {"fixed": fixed_baseline_policy(variant.env)}
            if agent is not None:
                policies["learned"] = ActorPolicy(agent.actor, variant.env)
            for name, policy in policies.items():
                m = evaluate_policy(policy, variant.env, exp.realizations, eval_seed)
                rows.append((float(dbm), float(beta), name, m.mean_rate, m.ci95))
                log.info("sweep %s dBm beta %s %s: %.4f +- %.4f", dbm, beta, name, m.mean_rate, m.ci95)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    (out / "sweep_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return rows


@dataclass
class TraceSummary:
    r_th: float
    correlation: float
    mean_spread: float
    mean_rate: float


def trace_columns(exp: ExperimentConfig) -> list[str]:
    cols = ["t", "user_x", "user_y"]
    for n, count in enumerate(exp.env.layout.pa_counts):
        cols += [f"x_{n + 1}_{p + 1}" for p in range(count)]
    return cols + ["rate"]


def trace_stats(trace: EpisodeTrace) -> tuple[float, float]:
    """Pearson correlation of user x with mean PA x, and mean PA spread."""
    mean_x = trace.positions.mean(axis=1)
    ux = trace.users[:, 0]
    if np.std(mean_x) == 0 or np.std(ux) == 0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(ux, mean_x)[0, 1])
    return corr, float(trace.positions.std(axis=1).mean())


def cmd_trace(exp: ExperimentConfig, checkpoint, out=None) -> list[TraceSummary]:
    """One evaluation episode per QoS threshold, all on the same trajectory."""
    from .plotting import plot_trace

    out = _prepare(exp, out)
    seq = _stream(exp.seed, _TRACE)
    summaries = []
    for r_th in exp.trace.r_th:
        agent, _ = resolve_agent(exp, checkpoint, out, exp.trace.retrain, r_th=r_th)
        variant = exp.with_env(r_th=r_th)
        trace = rollout(ActorPolicy(agent.actor, variant.env), variant.env, np.random.default_rng(seq))
        rows = [
            (t, u[0], u[1], *pos, rate)
            for t, (u, pos, rate) in enumerate(zip(trace.users, trace.positions, trace.rates))
        ]
        name = f"trace_rth{r_th:g}"
        write_csv(out / f"{name}.csv", trace_columns(exp), rows)
        plot_trace(out / f"{name}.csv", out / f"{name}.png")
        corr, spread = trace_stats(trace)
        summaries.append(TraceSummary(float(r_th), corr, spread, float(trace.rates.mean())))
    write_csv(
        out / "trace_summary.csv",
        ("r_th", "correlation", "mean_spread", "mean_rate"),
        [(s.r_th, s.correlation, s.mean_spread, s.mean_rate) for s in summaries],
    )
    return summaries


def cmd_oracle(exp: ExperimentConfig, checkpoint=None, out=None) -> list[tuple]:
    """Per-step oracle, baseline and learned rates on one fixed trajectory.

    ``oracle_bound`` certifies the oracle: no in-guide placement can exceed
    it under the same realization.
    """
    out = _prepare(exp, out)
    env_cfg = exp.env
    seq = _stream(exp.seed, _ORACLE)
    base = rollout(fixed_baseline_policy(env_cfg), env_cfg, np.random.default_rng(seq))
    learned = None
    if checkpoint is not None:
        agent = load_agent(checkpoint, exp)
        learned = rollout(ActorPolicy(agent.actor, env_cfg), env_cfg, np.random.default_rng(seq))
        assert np.array_equal(learned.users, base.users)
    rows = []
    for t, (user, draw) in enumerate(zip(base.users, base.draws)):
        res = grid_search_pinching(
            env_cfg.layout, user, draw, env_cfg.channel, exp.oracle.resolution,
            env_cfg.min_spacing, env_cfg.p_bs, env_cfg.noise, mode=exp.oracle.mode,
        )
        lr = learned.rates[t] if learned is not None else float("nan")
        rows.append((t, res.rate, res.upper_bound, base.rates[t], lr))
    columns = ORACLE_COLUMNS if learned is not None else ORACLE_COLUMNS[:-1]
    write_csv(out / "oracle.csv", columns, [r[: len(columns)] for r in rows])
    return rows


def cmd_eval(exp: ExperimentConfig, checkpoint=None, out=None) -> list[tuple]:
    """Monte-Carlo metrics of the baseline (and learned policy) at the configured power."""
    out = _prepare(exp, out)
    env_cfg = exp.env
    policies = {"fixed": fixed_baseline_policy(env_cfg)}
    if checkpoint is not None:
        policies["learned"] = ActorPolicy(load_agent(checkpoint, exp).actor, env_cfg)
    rows = []
    seed = _stream(exp.seed, _EVAL)
    for name, policy in policies.items():
        m = evaluate_policy(policy, env_cfg, exp.realizations, seed)
        rows.append((
            name, watt_to_dbm(env_cfg.p_bs), env_cfg.channel.beta, env_cfg.r_th, m.mean_rate, m.ci95,
            m.qos_violation_rate, m.spacing_violations, m.out_of_guide,
        ))
    write_csv(
        out / "eval.csv",
        ("policy", "p_bs_dbm", "beta", "r_th", "mean_rate", "ci95", "qos_violation_rate",
         "spacing_violations", "out_of_guide"),
        rows,
    )
    return rows
