"""Impact indicators, normalization, scalarized reward and discharge compliance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Mapping

import numpy as np

from .plant import (DO_BOUNDS, DOSE_BOUNDS, FECL3_STRENGTH, N2O_PER_N, PAC_STRENGTH,
                    Action, StepFluxes)

INDICATORS = ("energy", "ep", "ghg", "cost")

# raw importance coefficients for energy, EP and GHG
RAW_WEIGHTS = {"energy": 2.900, "ep": 2.017, "ghg": 2.754}


@dataclass(frozen=True)
class EmissionFactors:
    # kg PO4-eq per kg
    ep_TP: float = 3.07
    ep_COD: float = 0.022
    ep_NH4: float = 0.33
    ep_NO3: float = 0.095
    ep_NO2: float = 0.13
    # kg CO2-eq per unit
    electricity: float = 1.17      # per kWh
    fecl3: float = 0.986           # per kg FeCl3 (100 %)
    pac: float = 1.182             # per kg PAC (100 %)
    transport: float = 0.000192    # per kg.km
    n2o: float = 298.0
    ch4: float = 25.0
    # effluent emission defaults
    Bo: float = 0.25               # kg CH4/kg BOD
    MCF: float = 0.035
    EF_n2o: float = 0.016          # kg N2O-N/kg N
    # embodied energy of chemicals, kWh per kg of solution
    energy_fecl3_40: float = 3.4
    energy_pac_25: float = 1.94
    distance_km: float = 200.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"emission factor {f.name} must be positive")


@dataclass(frozen=True)
class CostFactors:
    electricity: float = 0.8       # CNY/kWh
    fecl3: float = 1.7             # CNY/kg (100 %)
    pac: float = 2.5               # CNY/kg (100 %)
    transport: float = 0.005       # CNY/(kg.km)
    distance_km: float = 200.0
    landfill: float = 0.52         # CNY/kg cake
    biogas_subsidy: float = 0.25   # CNY/kWh
    misc: float = 0.3              # CNY/m3

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"cost factor {f.name} must be >= 0")


@dataclass(frozen=True)
class DischargeStandard:
    name: str
    COD: float
    NH3N: float
    TN: float
    TP: float

    def __post_init__(self):
        if min(self.limits().values()) <= 0:
            raise ValueError("discharge limits must be positive")

    def limits(self) -> dict[str, float]:
        return {"COD": self.COD, "NH3N": self.NH3N, "TN": self.TN, "TP": self.TP}


STANDARDS = {
    "I-A": DischargeStandard("I-A", COD=50.0, NH3N=5.0, TN=15.0, TP=0.5),
    "I-B": DischargeStandard("I-B", COD=60.0, NH3N=8.0, TN=20.0, TP=1.0),
    "SW": DischargeStandard("SW", COD=30.0, NH3N=1.5, TN=15.0, TP=0.3),
}


@dataclass(frozen=True)
class ImpactVector:
    """Per-m3 indicators with their components.

    Component dicts hold signed contributions (recoveries negative) so that each
    total equals the sum of its components.
    """
    energy: float      # kWh/m3
    cost: float        # CNY/m3
    ep: float          # kg PO4-eq/m3
    ghg: float         # kg CO2-eq/m3
    energy_parts: Mapping[str, float] = field(default_factory=dict)
    cost_parts: Mapping[str, float] = field(default_factory=dict)
    ep_parts: Mapping[str, float] = field(default_factory=dict)
    ghg_parts: Mapping[str, float] = field(default_factory=dict)

    @property
    def energy_negative(self) -> bool:
        return self.energy < 0

    def totals(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in INDICATORS}

    def parts(self, indicator: str) -> Mapping[str, float]:
        return getattr(self, f"{indicator}_parts")

    def flat(self) -> dict[str, float]:
        out = self.totals()
        for ind in INDICATORS:
            for k, v in self.parts(ind).items():
                out[f"{ind}_{k}"] = v
        return out


@dataclass(frozen=True)
class NormalizationBounds:
    lo: Mapping[str, float]
    hi: Mapping[str, float]

    def __post_init__(self):
        for k in self.lo:
            if self.hi[k] < self.lo[k]:
                raise ValueError(f"bounds for {k}: max < min")

    def to_dict(self) -> dict:
        return {k: {"min": self.lo[k], "max": self.hi[k]} for k in self.lo}

    @classmethod
    def from_dict(cls, d: Mapping) -> "NormalizationBounds":
        return cls({k: float(v["min"]) for k, v in d.items()},
                   {k: float(v["max"]) for k, v in d.items()})


def default_weights() -> dict[str, float]:
    total = sum(RAW_WEIGHTS.values())
    return {k: v / total for k, v in RAW_WEIGHTS.items()}


@dataclass(frozen=True)
class RewardConfig:
    mode: str = "LCA"                  # LCA | COST
    standard: DischargeStandard = STANDARDS["I-A"]
    weights: Mapping[str, float] = field(default_factory=default_weights)
    violation_penalty: float = 1.0
    lambda_smooth: float = 0.1
    lambda_mag: float = 0.05

    def __post_init__(self):
        if self.mode not in ("LCA", "COST"):
            raise ValueError(f"unknown reward mode {self.mode!r}")
        if min(self.weights.values()) < 0 or abs(sum(self.weights.values()) - 1.0) > 1e-6:
            raise ValueError("weights must be non-negative and sum to 1")


# --------------------------------------------------------------------------
# indicator formulas

def eutrophication_potential(TP: float, COD: float, NH4: float, NO3: float, NO2: float,
                             f: EmissionFactors = EmissionFactors()) -> float:
    """kg PO4-eq per m3 from effluent loads in kg per m3."""
    if min(TP, COD, NH4, NO3, NO2) < 0:
        raise ValueError("effluent loads must be non-negative")
    return sum(_ep_parts(TP, COD, NH4, NO3, NO2, f).values())


def _ep_parts(TP, COD, NH4, NO3, NO2, f):
    return {
        "TP": f.ep_TP * TP,
        "COD": f.ep_COD * COD,
        "NH4": f.ep_NH4 * NH4,
        "NO3": f.ep_NO3 * NO3,
        "NO2": f.ep_NO2 * NO2,
    }


def effluent_ghg(BOD_eff: float, TN_eff: float,
                 f: EmissionFactors = EmissionFactors()) -> dict[str, float]:
    """CH4 and N2O (kg per time unit of the inputs) emitted from discharged effluent."""
    return {
        "CH4": BOD_eff * f.Bo * f.MCF,
        "N2O": TN_eff * f.EF_n2o * N2O_PER_N,
    }


def direct_energy(fl: StepFluxes) -> float:
    return fl.aeration_energy + fl.pump_energy + fl.other_energy


def chemical_energy(fl: StepFluxes, f: EmissionFactors) -> float:
    return (fl.fecl3_used / FECL3_STRENGTH * f.energy_fecl3_40
            + fl.pac_pure_used / PAC_STRENGTH * f.energy_pac_25)


def total_energy(fl: StepFluxes, f: EmissionFactors = EmissionFactors()) -> tuple[float, dict]:
    v = fl.treated_volume
    parts = {
        "aeration": fl.aeration_energy / v,
        "pumps": fl.pump_energy / v,
        "chemicals": chemical_energy(fl, f) / v,
        "other": fl.other_energy / v,
        "biogas": -fl.biogas_electricity / v,
    }
    return sum(parts.values()), parts


def life_cycle_cost(fl: StepFluxes, c: CostFactors = CostFactors()) -> tuple[float, dict]:
    v = fl.treated_volume
    moved = fl.fecl3_used + fl.pac_pure_used + fl.cake_mass
    parts = {
        "energy": direct_energy(fl) * c.electricity / v,
        "transport": moved * c.distance_km * c.transport / v,
        "chemicals": (fl.fecl3_used * c.fecl3 + fl.pac_pure_used * c.pac) / v,
        "sludge": fl.cake_mass * c.landfill / v,
        "misc": c.misc,
        "biogas": -fl.biogas_electricity * c.biogas_subsidy / v,
    }
    return sum(parts.values()), parts


def total_ghg(fl: StepFluxes, f: EmissionFactors = EmissionFactors()) -> tuple[float, dict]:
    v = fl.treated_volume
    eff = effluent_ghg(fl.load("BOD"), fl.load("TN"), f)
    moved = fl.fecl3_used + fl.pac_pure_used + fl.cake_mass
    parts = {
        "process": (f.n2o * (fl.process_N2O + eff["N2O"]) + f.ch4 * (fl.process_CH4 + eff["CH4"])) / v,
        "energy": direct_energy(fl) * f.electricity / v,
        "material": (fl.fecl3_used * f.fecl3 + fl.pac_pure_used * f.pac
                     + moved * f.distance_km * f.transport) / v,
        "biogas": -fl.biogas_electricity * f.electricity / v,
    }
    return sum(parts.values()), parts


def assess(fl: StepFluxes, f: EmissionFactors = EmissionFactors(),
           c: CostFactors = CostFactors()) -> ImpactVector:
    v = fl.treated_volume
    if v <= 0:
        raise ValueError("treated_volume must be positive")
    ep_parts = _ep_parts(*(fl.load(k) / v for k in ("TP", "COD", "NH4", "NO3", "NO2")), f)
    e, e_parts = total_energy(fl, f)
    cost, c_parts = life_cycle_cost(fl, c)
    g, g_parts = total_ghg(fl, f)
    return ImpactVector(energy=e, cost=cost, ep=sum(ep_parts.values()), ghg=g,
                        energy_parts=e_parts, cost_parts=c_parts, ep_parts=ep_parts,
                        ghg_parts=g_parts)


# --------------------------------------------------------------------------
# normalization and reward

def normalize(x: float, b: NormalizationBounds, indicator: str) -> float:
    if indicator not in b.lo:
        raise KeyError(f"no normalization bounds for {indicator!r}")
    lo, hi = b.lo[indicator], b.hi[indicator]
    if hi == lo:
        return 0.0
    return min(max((x - lo) / (hi - lo), 0.0), 1.0)


def bounds_from_samples(samples: Mapping[str, np.ndarray]) -> NormalizationBounds:
    return NormalizationBounds({k: float(np.min(v)) for k, v in samples.items()},
                               {k: float(np.max(v)) for k, v in samples.items()})


def sample_normalization_bounds(env, n: int = 10_000, seed: int = 0) -> NormalizationBounds:
    """Min/max of every indicator over ``n`` intervals of uniformly random actions.

    ``env`` is advanced in place from its current state.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    from .env import random_actions

    acts = random_actions(np.random.default_rng(seed), n)
    out = {k: np.empty(n) for k in INDICATORS}
    for i, (do, dose) in enumerate(acts):
        iv = env.step(Action(float(do), float(dose))).impacts
        for k in INDICATORS:
            out[k][i] = getattr(iv, k)
    return bounds_from_samples(out)


def check_standard(conc: Mapping[str, float], std: DischargeStandard) -> dict[str, bool]:
    """Per-component pass flags (``<=`` limit) plus an ``overall`` flag."""
    flags = {k: conc[k] <= lim for k, lim in std.limits().items()}
    flags["overall"] = all(flags.values())
    return flags


def action_norm(a: Action) -> np.ndarray:
    return np.array([
        (a.DO_setpoint - DO_BOUNDS[0]) / (DO_BOUNDS[1] - DO_BOUNDS[0]),
        (a.pac_dose - DOSE_BOUNDS[0]) / (DOSE_BOUNDS[1] - DOSE_BOUNDS[0]),
    ])


def constraint_penalty(conc: Mapping[str, float], std: DischargeStandard, a: Action,
                       a_prev: Action, rc: RewardConfig) -> float:
    violated = not check_standard(conc, std)["overall"]
    an, pn = action_norm(a), action_norm(a_prev)
    return (rc.violation_penalty * violated
            + rc.lambda_smooth * float(np.abs(an - pn).sum())
            + rc.lambda_mag * float(an.sum()))


def reward(iv: ImpactVector, b: NormalizationBounds, penalty: float, rc: RewardConfig) -> float:
    if rc.mode == "LCA":
        w = rc.weights
        score = (w["energy"] * normalize(iv.energy, b, "energy")
                 + w["ep"] * normalize(iv.ep, b, "ep")
                 + w["ghg"] * normalize(iv.ghg, b, "ghg"))
    else:
        score = normalize(iv.cost, b, "cost")
    return -(score + penalty)


def rounded_weights(rc: RewardConfig | None = None) -> dict[str, float]:
    w = (rc or RewardConfig()).weights
    return {k: round(v, 2) for k, v in w.items()}


def is_finite_vector(iv: ImpactVector) -> bool:
    return all(math.isfinite(v) for v in iv.totals().values())
