"""Control environment: plant + influent + impact assessment + observation history."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .impacts import CostFactors, EmissionFactors, ImpactVector, assess
from .influent import InfluentConfig, InfluentRecord, generate_influent
from .plant import (BASELINE_ACTION, DO_BOUNDS, DOSE_BOUNDS, Action, PlantParams,
                    PlantState, StepFluxes, seed_state, step, warmup)

ACTION_BOUNDS = (DO_BOUNDS, DOSE_BOUNDS)


@dataclass(frozen=True)
class HistoryEntry:
    """Influent at one decision time and the action in effect when it arrived."""
    influent: InfluentRecord
    action: Action


@dataclass
class StepResult:
    fluxes: StepFluxes
    impacts: ImpactVector
    action: Action
    action_prev: Action

    @property
    def concentrations(self) -> dict[str, float]:
        return self.fluxes.concentrations()


def random_actions(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` actions drawn uniformly from the action box, shape (n, 2)."""
    lo = np.array([b[0] for b in ACTION_BOUNDS])
    hi = np.array([b[1] for b in ACTION_BOUNDS])
    return lo + (hi - lo) * rng.random((n, 2))


class WWTPEnv:
    def __init__(self, plant: PlantParams | None = None, influent: InfluentConfig | None = None,
                 emission: EmissionFactors | None = None, costs: CostFactors | None = None,
                 dt_control: float = 1.0 / 24.0, history_len: int = 5):
        if dt_control <= 0:
            raise ValueError("dt_control must be positive")
        if history_len < 1:
            raise ValueError("history_len must be >= 1")
        self.plant = plant or PlantParams()
        self.influent = influent or InfluentConfig()
        self.emission = emission or EmissionFactors()
        self.costs = costs or CostFactors()
        self.dt = dt_control
        self.history_len = history_len
        self.state: PlantState = seed_state(self.plant)
        self.last_action = BASELINE_ACTION
        self.history: deque[HistoryEntry] = deque(maxlen=history_len)
        self.reset()

    @property
    def steps_per_day(self) -> int:
        return int(round(1.0 / self.dt))

    def reset(self, state: PlantState | None = None, action: Action = BASELINE_ACTION) -> None:
        """Place the plant in ``state`` with ``action`` assumed to have been in effect."""
        self.state = seed_state(self.plant) if state is None else state.copy()
        self.last_action = action.clipped()
        self.history.clear()
        t = self.state.elapsed
        for k in range(self.history_len - 1, -1, -1):
            self.history.append(HistoryEntry(generate_influent(self.influent, t - k * self.dt),
                                             self.last_action))

    def warmup(self, days: float = 20.0, action: Action = BASELINE_ACTION) -> None:
        state = warmup(self.plant, self.influent, action, days=days, dt_control=self.dt)
        self.reset(state, action)

    def current_influent(self) -> InfluentRecord:
        return self.history[-1].influent

    def step(self, a: Action) -> StepResult:
        a = a.clipped()
        inf = generate_influent(self.influent, self.state.elapsed)
        self.state, fl = step(self.state, inf, a, self.dt, self.plant)
        iv = assess(fl, self.emission, self.costs)
        prev = self.last_action
        self.last_action = a
        self.history.append(HistoryEntry(generate_influent(self.influent, self.state.elapsed), a))
        return StepResult(fl, iv, a, prev)
