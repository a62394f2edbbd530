"""Checkpoint container: a single ``.npz`` with a JSON header.

The header records the format version, the agent config and every network's
layer sizes and output activation. Parameter arrays are stored as float64 under
``<network>/<index>`` in layer order (weight, bias, weight, bias, ...).
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .agent import Agent, AgentConfig
from .mlp import Adam, Mlp

FORMAT_VERSION = 1
NETWORKS = ("actor", "critic", "actor_target", "critic_target")


class CheckpointError(Exception):
    pass


def save_checkpoint(path, agent: Agent, extra: dict | None = None) -> Path:
    path = Path(path)
    header = {
        "format_version": FORMAT_VERSION,
        "state_dim": agent.state_dim,
        "action_dim": agent.action_dim,
        "agent_config": dataclasses.asdict(agent.cfg),
        "networks": {
            name: {"sizes": list(net.sizes), "output": net.output}
            for name, net in agent.networks().items()
        },
        "extra": extra or {},
    }
    arrays = {"header": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    for name, net in agent.networks().items():
        for i, p in enumerate(net.params):
            arrays[f"{name}/{i}"] = np.ascontiguousarray(p, dtype=np.float64)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_header(path) -> dict:
    with np.load(path) as data:
        return json.loads(bytes(data["header"]).decode())


def load_checkpoint(path, state_dim: int | None = None, action_dim: int | None = None) -> Agent:
    """Rebuild an :class:`Agent`; optimizer moments are not persisted."""
    try:
        data = np.load(path)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"checkpoint format {header.get('format_version')} != supported {FORMAT_VERSION}"
            )
        if state_dim is not None and header["state_dim"] != state_dim:
            raise CheckpointError(f"checkpoint state_dim {header['state_dim']} != environment {state_dim}")
        if action_dim is not None and header["action_dim"] != action_dim:
            raise CheckpointError(f"checkpoint action_dim {header['action_dim']} != environment {action_dim}")
        cfg_fields = dict(header["agent_config"])
        cfg_fields["hidden"] = tuple(cfg_fields["hidden"])
        cfg = AgentConfig(**cfg_fields)

        agent = Agent.__new__(Agent)
        agent.cfg = cfg
        agent.state_dim = header["state_dim"]
        agent.action_dim = header["action_dim"]
        for name in NETWORKS:
            spec = header["networks"][name]
            n_params = 2 * (len(spec["sizes"]) - 1)
            params = [data[f"{name}/{i}"] for i in range(n_params)]
            setattr(agent, name, Mlp(spec["sizes"], spec["output"], params))
    agent.actor_opt = Adam(agent.actor.params, cfg.actor_lr)
    agent.critic_opt = Adam(agent.critic.params, cfg.critic_lr)
    return agent
