"""Scenario definitions, evaluation runs and the comparison report."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .config import RunConfig
from .env import WWTPEnv
from .impacts import (INDICATORS, STANDARDS, ImpactVector, NormalizationBounds, check_standard,
                      sample_normalization_bounds)
from .marl.maddpg import AgentNets, ObservationScaler, act, joint_observation
from .marl.train import TrainResult, save_agents, train
from .plant import BASELINE_ACTION, Action, PlantState

CONC_KEYS = ("COD", "NH3N", "TN", "TP")


def _num(v) -> str:
    """Round-trip text for a number; numpy scalars are written as plain floats."""
    return repr(float(v))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    mode: str | None                  # LCA | COST; None for the fixed-action baseline
    standard: str
    fixed_action: Action | None = None

    def __post_init__(self):
        if (self.fixed_action is None) == (self.mode is None):
            raise ValueError("a scenario has either a fixed action or a reward mode")
        if self.standard not in STANDARDS:
            raise ValueError(f"unknown standard {self.standard!r}")

    @property
    def trained(self) -> bool:
        return self.fixed_action is None

    @property
    def slug(self) -> str:
        return self.name.lower()


SCENARIOS: dict[str, ScenarioSpec] = {s.name: s for s in (
    ScenarioSpec("Baseline", None, "I-A", BASELINE_ACTION),
    ScenarioSpec("LCA-IA", "LCA", "I-A"),
    ScenarioSpec("LCA-IB", "LCA", "I-B"),
    ScenarioSpec("LCA-SW", "LCA", "SW"),
    ScenarioSpec("Cost", "COST", "I-A"),
)}


def get_scenario(name: str) -> ScenarioSpec:
    for s in SCENARIOS.values():
        if name in (s.name, s.slug):
            return s
    raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


# --------------------------------------------------------------------------
# episode logs

@dataclass(frozen=True)
class EpisodeRecord:
    t: float                          # d, start of the interval
    action: Action
    volume: float                     # m3 treated in the interval
    conc: Mapping[str, float]         # effluent g/m3
    impacts: ImpactVector
    violation: bool                   # against the scenario's own standard
    violation_ia: bool                # against Grade I-A


@dataclass
class EpisodeLog:
    scenario: str
    standard: str
    dt: float
    records: list[EpisodeRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def actions(self) -> np.ndarray:
        return np.array([r.action.as_array() for r in self.records])

    def mean_action(self) -> tuple[float, float]:
        a = self.actions()
        return float(a[:, 0].mean()), float(a[:, 1].mean())

    def totals(self) -> dict[str, float]:
        """Absolute sums over the log (kWh, CNY, kg PO4-eq, kg CO2-eq)."""
        return {k: math.fsum(getattr(r.impacts, k) * r.volume for r in self.records)
                for k in INDICATORS}

    def per_m3(self) -> dict[str, float]:
        v = math.fsum(r.volume for r in self.records)
        return {k: x / v for k, x in self.totals().items()}

    def violation_rate(self, grade_ia: bool = False) -> float:
        flags = [r.violation_ia if grade_ia else r.violation for r in self.records]
        return sum(flags) / len(flags)

    def columns(self) -> list[str]:
        parts = [f"{ind}_{k}" for ind in INDICATORS for k in self.records[0].impacts.parts(ind)]
        return (["t", "do", "dose", "volume"] + [f"eff_{k}" for k in CONC_KEYS]
                + list(INDICATORS) + parts + ["violation", "violation_ia"])

    def to_csv(self) -> str:
        if not self.records:
            raise ValueError("empty log")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for r in self.records:
            flat = r.impacts.flat()
            w.writerow([_num(r.t), _num(r.action.DO_setpoint), _num(r.action.pac_dose),
                        _num(r.volume)] + [_num(r.conc[k]) for k in CONC_KEYS]
                       + [_num(flat[c]) for c in self.columns()[8:-2]]
                       + [int(r.violation), int(r.violation_ia)])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path, scenario: str, standard: str, dt: float) -> "EpisodeLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        recs = []
        for row in rows:
            parts = {ind: {k[len(ind) + 1:]: float(v) for k, v in row.items()
                           if k.startswith(ind + "_")} for ind in INDICATORS}
            iv = ImpactVector(**{k: float(row[k]) for k in INDICATORS},
                              **{f"{k}_parts": parts[k] for k in INDICATORS})
            recs.append(EpisodeRecord(float(row["t"]), Action(float(row["do"]), float(row["dose"])),
                                      float(row["volume"]),
                                      {k: float(row[f"eff_{k}"]) for k in CONC_KEYS}, iv,
                                      bool(int(row["violation"])), bool(int(row["violation_ia"]))))
        return cls(scenario, standard, dt, recs)


Policy = Callable[[WWTPEnv], Action]


def rollout(env: WWTPEnv, policy: Policy, n_steps: int, spec: ScenarioSpec) -> EpisodeLog:
    std, ia = STANDARDS[spec.standard], STANDARDS["I-A"]
    log = EpisodeLog(spec.name, spec.standard, env.dt)
    for _ in range(n_steps):
        t = env.state.elapsed
        res = env.step(policy(env))
        conc = res.concentrations
        log.records.append(EpisodeRecord(
            t, res.action, res.fluxes.treated_volume, conc, res.impacts,
            not check_standard(conc, std)["overall"], not check_standard(conc, ia)["overall"]))
    return log


def make_env(cfg: RunConfig) -> WWTPEnv:
    return WWTPEnv(cfg.plant, cfg.influent, cfg.emission, cfg.costs,
                   dt_control=cfg.experiment.dt, history_len=cfg.train.obs_history)


def warm_state(cfg: RunConfig) -> PlantState:
    env = make_env(cfg)
    env.warmup(cfg.experiment.warmup_days, BASELINE_ACTION)
    return env.state


def run_baseline(spec: ScenarioSpec, cfg: RunConfig, start: PlantState | None = None) -> EpisodeLog:
    """Warm-up then the logged horizon at the fixed action."""
    if spec.trained:
        raise ValueError(f"{spec.name} is not a fixed-action scenario")
    env = make_env(cfg)
    env.reset(warm_state(cfg) if start is None else start, BASELINE_ACTION)
    return rollout(env, lambda _: spec.fixed_action, cfg.experiment.horizon_steps, spec)


def policy_from_agents(agents: Sequence[AgentNets], cfg: RunConfig) -> Policy:
    scaler = ObservationScaler.from_config(cfg.influent)
    n = cfg.train.obs_history

    def policy(env: WWTPEnv) -> Action:
        obs = joint_observation(env.history, scaler, n)
        return Action(*(act(ag, obs[i], False, None) for i, ag in enumerate(agents)))
    return policy


def run_trained(spec: ScenarioSpec, agents: Sequence[AgentNets], cfg: RunConfig,
                start: PlantState | None = None) -> EpisodeLog:
    """Baseline-action warm-up, then the horizon under the noise-free policy."""
    env = make_env(cfg)
    env.reset(warm_state(cfg) if start is None else start, BASELINE_ACTION)
    return rollout(env, policy_from_agents(agents, cfg), cfg.experiment.horizon_steps, spec)


def normalization_bounds(cfg: RunConfig, start: PlantState | None = None) -> NormalizationBounds:
    env = make_env(cfg)
    env.reset(warm_state(cfg) if start is None else start, BASELINE_ACTION)
    ex = cfg.experiment
    return sample_normalization_bounds(env, ex.bounds_samples, ex.bounds_seed)


def train_scenario(spec: ScenarioSpec, cfg: RunConfig, bounds: NormalizationBounds,
                   start: PlantState, seed: int, **reward_overrides) -> TrainResult:
    if not spec.trained:
        raise ValueError("the baseline is not trained")
    rc = cfg.reward.reward_config(spec.mode, spec.standard, **reward_overrides)
    env = make_env(cfg)
    env.reset(start, BASELINE_ACTION)
    ex = cfg.experiment
    return train(env, rc, replace(cfg.train, seed=seed), bounds, ex.bounds_samples, ex.bounds_seed)


# --------------------------------------------------------------------------
# comparisons

def cumulative_delta(log: EpisodeLog, baseline: EpisodeLog) -> dict[str, float]:
    """Per-indicator absolute sum of ``log`` minus that of ``baseline``."""
    if len(log) != len(baseline) or not math.isclose(log.dt, baseline.dt):
        raise ValueError("logs cover different horizons or intervals")
    a, b = log.totals(), baseline.totals()
    return {k: a[k] - b[k] for k in INDICATORS}


def component_breakdown(log: EpisodeLog) -> dict[str, dict[str, float]]:
    """Percent share of each component in its indicator's positive total.

    Negative components (recoveries) appear as negative percentages of the same
    positive total. A zero positive total gives NaN for every component.
    """
    if not log.records:
        raise ValueError("empty log")
    out = {}
    for ind in INDICATORS:
        sums: dict[str, float] = {}
        for r in log.records:
            for k, v in r.impacts.parts(ind).items():
                sums[k] = sums.get(k, 0.0) + v * r.volume
        pos = math.fsum(v for v in sums.values() if v > 0)
        out[ind] = {k: (100.0 * v / pos if pos > 0 else math.nan) for k, v in sums.items()}
    return out


def _mean_std(xs: Sequence[float]) -> dict[str, float]:
    a = np.asarray(xs, dtype=float)
    return {"mean": float(a.mean()), "std": float(a.std(ddof=1)) if len(a) > 1 else 0.0}


@dataclass
class SummaryReport:
    """Per-scenario aggregates over seeds, built purely from episode logs."""
    scenarios: dict[str, dict]

    @classmethod
    def build(cls, logs: Mapping[str, Sequence[EpisodeLog]]) -> "SummaryReport":
        if "Baseline" not in logs or not logs["Baseline"]:
            raise ValueError("a baseline log is required")
        base = logs["Baseline"][0]
        out = {}
        for name, runs in logs.items():
            if not runs:
                raise ValueError(f"no logs for {name}")
            acts = [r.mean_action() for r in runs]
            per = [r.per_m3() for r in runs]
            deltas = [cumulative_delta(r, base) for r in runs]
            shares = [component_breakdown(r) for r in runs]
            entry = {
                "standard": runs[0].standard,
                "n_runs": len(runs),
                "do": _mean_std([a[0] for a in acts]),
                "dose": _mean_std([a[1] for a in acts]),
                "per_m3": {k: _mean_std([p[k] for p in per]) for k in INDICATORS},
                "delta": {k: _mean_std([d[k] for d in deltas]) for k in INDICATORS},
                "delta_per_run": [d for d in deltas],
                "violation_rate": _mean_std([r.violation_rate() for r in runs]),
                "breakdown": {ind: {k: _mean_std([s[ind][k] for s in shares])["mean"]
                                    for k in shares[0][ind]} for ind in INDICATORS},
            }
            if name == "Baseline":
                entry["violation_rate_ia"] = _mean_std([r.violation_rate(True) for r in runs])
            out[name] = entry
        return cls(out)

    def to_json(self) -> str:
        return json.dumps(_nan_to_none(self.scenarios), indent=2, allow_nan=False)

    def table3_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "n_runs", "do_mean", "dose_mean"]
                   + [f"delta_{k}_{s}" for k in INDICATORS for s in ("mean", "std")])
        for name, e in self.scenarios.items():
            w.writerow([name, e["n_runs"], _num(e["do"]["mean"]), _num(e["dose"]["mean"])]
                       + [_num(e["delta"][k][s]) for k in INDICATORS for s in ("mean", "std")])
        return buf.getvalue()

    def breakdown_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "indicator", "component", "share_pct"])
        for name, e in self.scenarios.items():
            for ind in INDICATORS:
                for k, v in e["breakdown"][ind].items():
                    w.writerow([name, ind, k, "undefined" if math.isnan(v) else _num(v)])
        return buf.getvalue()


def _nan_to_none(o):
    """Undefined values (NaN) become JSON null."""
    if isinstance(o, dict):
        return {k: _nan_to_none(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_nan_to_none(v) for v in o]
    if isinstance(o, float) and math.isnan(o):
        return None
    return o


# --------------------------------------------------------------------------
# batch runner

def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("WWTP_MARL_THREADS")
    n = requested or (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


@dataclass(frozen=True)
class _Job:
    spec: ScenarioSpec
    seed: int
    cfg: RunConfig
    bounds: NormalizationBounds
    start: PlantState
    out_dir: str | None


def _run_job(job: _Job) -> tuple[str, int, EpisodeLog]:
    res = train_scenario(job.spec, job.cfg, job.bounds, job.start, job.seed)
    if job.out_dir is not None:
        d = Path(job.out_dir)
        res.log.write_csv(d / f"train_{job.spec.slug}_seed{job.seed}.csv")
        save_agents(d / f"agents_{job.spec.slug}_seed{job.seed}.json", res.agents,
                    replace(job.cfg.train, seed=job.seed),
                    {"scenario": job.spec.name, "start_index": res.start_index})
    log = run_trained(job.spec, res.agents, job.cfg, job.start)
    return job.spec.name, job.seed, log


def run_scenarios(cfg: RunConfig, names: Sequence[str] | None = None,
                  seeds: Sequence[int] | None = None, out_dir=None,
                  workers: int | None = None) -> dict[str, list[EpisodeLog]]:
    """Baseline once plus every trained scenario for every seed.

    Writes per-run training logs, agents and episode logs under ``out_dir`` when given.
    """
    specs = [get_scenario(n) for n in (names or list(SCENARIOS))]
    if not any(s.name == "Baseline" for s in specs):
        specs.insert(0, SCENARIOS["Baseline"])
    seeds = list(seeds if seeds is not None else cfg.experiment.seeds)
    start = warm_state(cfg)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    logs: dict[str, list[EpisodeLog]] = {s.name: [] for s in specs}
    logs["Baseline"].append(run_baseline(SCENARIOS["Baseline"], cfg, start))

    jobs = []
    if any(s.trained for s in specs):
        bounds = normalization_bounds(cfg, start)
        if out_dir is not None:
            Path(out_dir, "bounds.json").write_text(json.dumps(bounds.to_dict(), indent=2))
        jobs = [_Job(s, seed, cfg, bounds, start, None if out_dir is None else str(out_dir))
                for s in specs if s.trained for seed in seeds]
    n = worker_count(workers)
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    for name, _, log in results:      # job order is preserved by map
        logs[name].append(log)

    if out_dir is not None:
        write_outputs(logs, seeds, out_dir)
    return logs


def write_outputs(logs: Mapping[str, Sequence[EpisodeLog]], seeds: Sequence[int], out_dir) -> SummaryReport:
    d = Path(out_dir)
    for name, runs in logs.items():
        slug = get_scenario(name).slug
        if name == "Baseline":
            runs[0].write_csv(d / f"episode_{slug}.csv")
        else:
            for seed, log in zip(seeds, runs):
                log.write_csv(d / f"episode_{slug}_seed{seed}.csv")
    rep = SummaryReport.build(logs)
    (d / "summary.json").write_text(rep.to_json())
    (d / "table3_analog.csv").write_text(rep.table3_csv())
    (d / "breakdown.csv").write_text(rep.breakdown_csv())
    return rep
