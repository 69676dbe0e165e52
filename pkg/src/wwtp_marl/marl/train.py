"""Training loop, training log and agent serialization."""
from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..env import WWTPEnv, random_actions
from ..impacts import (NormalizationBounds, RewardConfig, check_standard, constraint_penalty,
                       reward)
from ..plant import Action
from .buffer import ReplayBuffer, Transition
from .maddpg import (AGENT_NAMES, AgentNets, ObservationScaler, TrainConfig, act,
                     joint_observation, make_agents, soft_update_agent, td_targets,
                     update_actor, update_critic)
from .nets import MLP, Adam

LOG_COLUMNS = ("step", "reward", "do", "dose", "critic_loss_1", "critic_loss_2",
               "E", "EP", "GHG", "cost", "violation")
AGENTS_FORMAT = "wwtp_marl.agents"
AGENTS_VERSION = 1


@dataclass
class TrainingLog:
    """One row per environment interaction; critic losses are NaN before learning starts."""
    rows: list[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        k = LOG_COLUMNS.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(LOG_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join([str(r[0])] + [_fmt(v) for v in r[1:-1]] + [str(int(r[-1]))]) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path) -> "TrainingLog":
        lines = Path(path).read_text().splitlines()
        if not lines or tuple(lines[0].split(",")) != LOG_COLUMNS:
            raise ValueError(f"{path}: not a training log")
        rows = []
        for line in lines[1:]:
            v = line.split(",")
            rows.append((int(v[0]), *(float(x) for x in v[1:-1]), int(v[-1])))
        return cls(rows)


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


@dataclass
class TrainResult:
    agents: list[AgentNets]
    log: TrainingLog
    start_index: int           # sample point the run started from


def move_to_sample_point(env: WWTPEnv, index: int, n_samples: int, sample_seed: int) -> None:
    """Advance ``env`` through the first ``index`` intervals of the bounds-sampling run.

    The random action sequence is regenerated from ``sample_seed`` so the plant
    lands on exactly the state visited at that sample point.
    """
    if not 0 <= index < n_samples:
        raise ValueError(f"sample index {index} outside [0, {n_samples})")
    for do, dose in random_actions(np.random.default_rng(sample_seed), n_samples)[:index]:
        env.step(Action(float(do), float(dose)))


def train(env: WWTPEnv, rc: RewardConfig, tc: TrainConfig, bounds: NormalizationBounds,
          n_samples: int = 10_000, sample_seed: int = 0, progress=None) -> TrainResult:
    """Run ``tc.total_steps`` interactions from a random sample point of the bounds run.

    ``env`` must already hold the state the bounds were sampled from; it is advanced
    in place. ``progress`` is an optional callable receiving the step index.
    """
    if env.history_len < tc.obs_history:
        raise ValueError("environment history shorter than the observation window")
    init_ss, noise_ss, sample_ss, start_ss = np.random.SeedSequence(tc.seed).spawn(4)
    init_rng = np.random.default_rng(init_ss)
    noise_rng = np.random.default_rng(noise_ss)
    sample_rng = np.random.default_rng(sample_ss)
    start = int(np.random.default_rng(start_ss).integers(0, n_samples))
    move_to_sample_point(env, start, n_samples, sample_seed)

    agents = make_agents(tc, init_rng)
    scaler = ObservationScaler.from_config(env.influent)
    buf = ReplayBuffer(tc.buffer_capacity, len(agents), tc.obs_dim)
    log = TrainingLog()
    obs = joint_observation(env.history, scaler, tc.obs_history)
    decay = 1.0 - tc.noise_decay_per_epoch

    for t in range(tc.total_steps):
        a = [act(ag, obs[i], True, noise_rng) for i, ag in enumerate(agents)]
        res = env.step(Action(*a))
        conc = res.concentrations
        r = reward(res.impacts, bounds, constraint_penalty(conc, rc.standard, res.action,
                                                           res.action_prev, rc), rc)
        next_obs = joint_observation(env.history, scaler, tc.obs_history)
        buf.push(Transition(obs, res.action.as_array(), r, next_obs))

        losses = [math.nan] * len(agents)
        for i, ag in enumerate(agents):
            batch = buf.sample(tc.batch_size, sample_rng)
            if batch is None:
                break
            y = td_targets(batch, agents, tc.gamma, i)
            losses[i] = update_critic(ag, batch, y, agents)
            update_actor(ag, batch, agents)
        for ag in agents:
            soft_update_agent(ag, tc.tau)
        if (t + 1) % tc.steps_per_epoch == 0:
            for ag in agents:
                ag.noise_sigma *= decay

        iv = res.impacts
        violated = not check_standard(conc, rc.standard)["overall"]
        log.rows.append((t, r, res.action.DO_setpoint, res.action.pac_dose, *losses,
                         iv.energy, iv.ep, iv.ghg, iv.cost, int(violated)))
        obs = next_obs
        if progress is not None:
            progress(t)
    return TrainResult(agents, log, start)


def moving_average(x: np.ndarray, window: int = 100) -> np.ndarray:
    if window < 1 or len(x) < window:
        raise ValueError("window must be in [1, len(x)]")
    c = np.cumsum(np.concatenate([[0.0], x]))
    return (c[window:] - c[:-window]) / window


# --------------------------------------------------------------------------
# serialization

def _net_to_dict(net: MLP) -> dict:
    d = {"sizes": net.sizes, "output": net.output,
         "weights": [W.tolist() for W in net.weights],
         "biases": [b.tolist() for b in net.biases]}
    if net.output == "tanh_box":
        d["low"] = net.low.tolist()
        d["high"] = net.high.tolist()
    return d


def _net_from_dict(d: dict) -> MLP:
    net = MLP([np.array(W, dtype=np.float64) for W in d["weights"]],
              [np.array(b, dtype=np.float64) for b in d["biases"]],
              d["output"], d.get("low"), d.get("high"))
    if net.sizes != list(d["sizes"]):
        raise ValueError(f"declared sizes {d['sizes']} do not match weights {net.sizes}")
    return net


def agents_to_dict(agents: list[AgentNets], tc: TrainConfig, extra: dict | None = None) -> dict:
    return {
        "format": AGENTS_FORMAT,
        "version": AGENTS_VERSION,
        "config": {**asdict(tc), **(extra or {})},
        "agents": [{"name": AGENT_NAMES[ag.index], "low": ag.low, "high": ag.high,
                    "noise_sigma": ag.noise_sigma, "actor": _net_to_dict(ag.actor),
                    "critic": _net_to_dict(ag.critic)} for ag in agents],
    }


def agents_from_dict(d: dict) -> tuple[list[AgentNets], dict]:
    if d.get("format") != AGENTS_FORMAT:
        raise ValueError("not an agents document")
    if d.get("version") != AGENTS_VERSION:
        raise ValueError(f"unsupported agents version {d.get('version')}")
    cfg = d.get("config", {})
    agents = []
    for i, a in enumerate(d["agents"]):
        actor, critic = _net_from_dict(a["actor"]), _net_from_dict(a["critic"])
        agents.append(AgentNets(i, actor, critic, actor.copy(), critic.copy(),
                                Adam(cfg.get("actor_lr", 1e-4)), Adam(cfg.get("critic_lr", 1e-3)),
                                float(a["noise_sigma"]), float(a["low"]), float(a["high"])))
    return agents, cfg


def save_agents(path, agents: list[AgentNets], tc: TrainConfig, extra: dict | None = None) -> None:
    Path(path).write_text(json.dumps(agents_to_dict(agents, tc, extra)))


def load_agents(path) -> tuple[list[AgentNets], dict]:
    return agents_from_dict(json.loads(Path(path).read_text()))
