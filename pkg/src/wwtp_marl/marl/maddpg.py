"""Two-agent MADDPG: decentralized actors, centralized critics, shared reward."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env import ACTION_BOUNDS, HistoryEntry
from ..influent import InfluentConfig, feature_bounds
from .buffer import Batch
from .nets import MLP, Adam, init_mlp, mlp_forward, mlp_gradients, soft_update

AGENT_NAMES = ("do", "dose")
INFLUENT_FEATURES = ("COD", "TN", "TP", "NH3N", "Q")
FEATURES_PER_STEP = len(INFLUENT_FEATURES) + 3   # + sin, cos, own control


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.95
    tau: float = 0.01
    batch_size: int = 256
    total_steps: int = 5000
    buffer_capacity: int = 1000
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    noise_sigma0: float = 0.2              # fraction of each action range
    noise_decay_per_epoch: float = 0.0002
    steps_per_epoch: int = 1
    obs_history: int = 5
    hidden: tuple[int, ...] = (64, 64)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must be in [0, 1]")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if self.total_steps < 0 or self.obs_history < 1 or self.steps_per_epoch < 1:
            raise ValueError("total_steps, obs_history and steps_per_epoch must be positive")
        if self.noise_sigma0 < 0 or not 0 <= self.noise_decay_per_epoch < 1:
            raise ValueError("bad exploration noise settings")

    @property
    def obs_dim(self) -> int:
        return FEATURES_PER_STEP * self.obs_history


# --------------------------------------------------------------------------
# observations

@dataclass(frozen=True)
class ObservationScaler:
    """Fixed min/max used to map observation features onto [0, 1]."""
    lo: np.ndarray
    hi: np.ndarray
    action_lo: np.ndarray
    action_hi: np.ndarray

    @classmethod
    def from_config(cls, cfg: InfluentConfig) -> "ObservationScaler":
        fb = feature_bounds(cfg)
        lo = np.array([fb[k][0] for k in INFLUENT_FEATURES])
        hi = np.array([fb[k][1] for k in INFLUENT_FEATURES])
        return cls(lo, hi, np.array([b[0] for b in ACTION_BOUNDS]),
                   np.array([b[1] for b in ACTION_BOUNDS]))

    def influent(self, values: np.ndarray) -> np.ndarray:
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        return (values - self.lo) / span

    def action(self, a: np.ndarray) -> np.ndarray:
        return (a - self.action_lo) / (self.action_hi - self.action_lo)


def build_observation(history, agent_id: int, scaler: ObservationScaler,
                      length: int = 5) -> np.ndarray:
    """Flatten the last ``length`` history entries for one agent.

    Per entry: scaled COD, TN, TP, NH3N, Q, sin/cos of hour of day, and the
    agent's own control variable scaled by its box.
    """
    entries: list[HistoryEntry] = list(history)[-length:]
    if len(entries) < length:
        raise ValueError(f"need {length} history entries, got {len(entries)}")
    out = np.empty((length, FEATURES_PER_STEP))
    for k, e in enumerate(entries):
        inf = e.influent
        out[k, :5] = scaler.influent(np.array([inf.COD, inf.TN, inf.TP, inf.NH3N, inf.Q]))
        ang = 2.0 * math.pi * inf.hour / 24.0
        out[k, 5] = math.sin(ang)
        out[k, 6] = math.cos(ang)
        own = (e.action.DO_setpoint, e.action.pac_dose)[agent_id]
        lo, hi = scaler.action_lo[agent_id], scaler.action_hi[agent_id]
        out[k, 7] = (own - lo) / (hi - lo)
    return out.ravel()


def joint_observation(history, scaler: ObservationScaler, length: int = 5) -> np.ndarray:
    return np.stack([build_observation(history, i, scaler, length)
                     for i in range(len(AGENT_NAMES))])


# --------------------------------------------------------------------------
# agents

@dataclass
class AgentNets:
    index: int
    actor: MLP
    critic: MLP
    target_actor: MLP
    target_critic: MLP
    actor_opt: Adam
    critic_opt: Adam
    noise_sigma: float                 # fraction of the action range
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.target_actor.sizes != self.actor.sizes or \
                self.target_critic.sizes != self.critic.sizes:
            raise ValueError("target shapes must equal learned shapes")

    @property
    def span(self) -> float:
        return self.high - self.low


def make_agents(tc: TrainConfig, rng: np.random.Generator) -> list[AgentNets]:
    n = len(AGENT_NAMES)
    critic_in = n * tc.obs_dim + n
    agents = []
    for i in range(n):
        lo, hi = ACTION_BOUNDS[i]
        actor = init_mlp([tc.obs_dim, *tc.hidden, 1], rng, "tanh_box", [lo], [hi])
        critic = init_mlp([critic_in, *tc.hidden, 1], rng)
        agents.append(AgentNets(i, actor, critic, actor.copy(), critic.copy(),
                                Adam(tc.actor_lr), Adam(tc.critic_lr), tc.noise_sigma0,
                                lo, hi))
    return agents


def act(agent: AgentNets, obs: np.ndarray, explore: bool, rng: np.random.Generator | None) -> float:
    """Actor output plus optional Gaussian noise, clipped to the action box."""
    y, _ = mlp_forward(agent.actor, obs)
    a = float(y[0])
    if explore and agent.noise_sigma > 0:
        a += rng.normal(0.0, agent.noise_sigma * agent.span)
    return min(max(a, agent.low), agent.high)


def _norm_actions(actions: np.ndarray, agents: list[AgentNets]) -> np.ndarray:
    lo = np.array([a.low for a in agents])
    return (actions - lo) / np.array([a.span for a in agents])


def critic_input(obs: np.ndarray, actions: np.ndarray, agents: list[AgentNets]) -> np.ndarray:
    """Concatenate all observations with all actions scaled to [0, 1]; ``obs`` is (N, n, d)."""
    return np.concatenate([obs.reshape(len(obs), -1), _norm_actions(actions, agents)], axis=1)


def td_targets(batch: Batch, agents: list[AgentNets], gamma: float, i: int) -> np.ndarray:
    """``y = r + gamma * Q'_i(o', mu'(o'))``; no terminal masking."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    nxt = np.column_stack([mlp_forward(ag.target_actor, batch.next_obs[:, k])[0][:, 0]
                           for k, ag in enumerate(agents)])
    q, _ = mlp_forward(agents[i].target_critic, critic_input(batch.next_obs, nxt, agents))
    return batch.reward + gamma * q[:, 0]


def update_critic(agent: AgentNets, batch: Batch, targets: np.ndarray,
                  agents: list[AgentNets]) -> float:
    """One Adam step on the MSE ``mean((y - Q)^2)``; returns the pre-update loss."""
    x = critic_input(batch.obs, batch.action, agents)
    q, cache = mlp_forward(agent.critic, x)
    err = q[:, 0] - targets
    loss = float(np.mean(err ** 2))
    if not math.isfinite(loss):
        raise FloatingPointError(f"non-finite critic loss for agent {agent.index}: "
                                 f"max |Q| {np.max(np.abs(q)):.3g}, max |y| {np.max(np.abs(targets)):.3g}")
    grads, _ = mlp_gradients(agent.critic, cache, (2.0 / len(err)) * err[:, None])
    agent.critic_opt.step(agent.critic, grads)
    return loss


def actor_gradient(agent: AgentNets, batch: Batch, agents: list[AgentNets]):
    """Mean Q with agent ``i``'s batch action replaced by its actor, and grads of ``-mean Q``."""
    i = agent.index
    a_i, a_cache = mlp_forward(agent.actor, batch.obs[:, i])
    actions = batch.action.copy()
    actions[:, i] = a_i[:, 0]
    q, c_cache = mlp_forward(agent.critic, critic_input(batch.obs, actions, agents))
    n = len(q)
    _, dx = mlp_gradients(agent.critic, c_cache, np.full((n, 1), 1.0 / n))
    col = len(agents) * batch.obs.shape[2] + i
    dq_da = dx[:, col] / agent.span
    grads, _ = mlp_gradients(agent.actor, a_cache, -dq_da[:, None])
    return float(q.mean()), grads


def update_actor(agent: AgentNets, batch: Batch, agents: list[AgentNets]) -> float:
    """Deterministic policy-gradient ascent step; returns the pre-update mean Q."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    q, grads = actor_gradient(agent, batch, agents)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise FloatingPointError(f"non-finite actor gradient for agent {agent.index}")
    agent.actor_opt.step(agent.actor, grads)
    return q


def soft_update_agent(agent: AgentNets, tau: float) -> None:
    soft_update(agent.target_actor, agent.actor, tau)
    soft_update(agent.target_critic, agent.critic, tau)
