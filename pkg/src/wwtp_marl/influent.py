"""Deterministic diurnal influent generator.

Flow and concentrations follow a double-peak daily shape ``p(t)`` built from
two raised-cosine bumps (morning and evening peaks), shifted to zero daily mean
and scaled so that ``p = 1`` at the peak hours.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class InfluentConfig:
    mean_flow: float = 2000.0            # m3/d
    flow_amplitude: float = 0.3          # fraction of mean
    peak_hours: tuple[float, float] = (8.0, 19.0)
    peak_halfwidth: float = 5.0          # h, half-width of each raised-cosine bump
    mean_COD: float = 400.0              # g/m3
    mean_TN: float = 40.0
    mean_NH3N: float = 25.0
    mean_TP: float = 6.0
    concentration_amplitude: float = 0.2
    dilution_coupling: float = 0.5

    def __post_init__(self):
        means = (self.mean_flow, self.mean_COD, self.mean_TN, self.mean_NH3N, self.mean_TP)
        if min(means) <= 0:
            raise ValueError("influent means must be strictly positive")
        for amp in (self.flow_amplitude, self.concentration_amplitude):
            if not 0.0 <= amp <= 0.9:
                raise ValueError(f"amplitude {amp} outside [0, 0.9]")
        if self.mean_NH3N > self.mean_TN:
            raise ValueError("mean_NH3N must not exceed mean_TN")
        if self.dilution_coupling < 0:
            raise ValueError("dilution_coupling must be >= 0")
        h1, h2 = sorted(self.peak_hours)
        gap = min(h2 - h1, 24.0 - (h2 - h1))
        if not 0 < self.peak_halfwidth <= gap / 2:
            raise ValueError("peak bumps must not overlap")


@dataclass(frozen=True)
class InfluentRecord:
    t: float      # d since simulation start
    Q: float      # m3/d
    COD: float    # g/m3
    TN: float
    NH3N: float
    TP: float

    @property
    def hour(self) -> float:
        return (self.t % 1.0) * 24.0


def _bump(hour: float, center: float, halfwidth: float) -> float:
    d = abs(hour - center) % 24.0
    d = min(d, 24.0 - d)
    if d >= halfwidth:
        return 0.0
    return 0.5 * (1.0 + math.cos(math.pi * d / halfwidth))


def diurnal_shape(cfg: InfluentConfig, t: float) -> float:
    """Zero-mean, unit-peak daily pattern at time ``t`` (days)."""
    hour = (t % 1.0) * 24.0
    raw = sum(_bump(hour, c, cfg.peak_halfwidth) for c in cfg.peak_hours)
    mean = 2.0 * cfg.peak_halfwidth / 24.0
    return (raw - mean) / (1.0 - mean)


def shape_range(cfg: InfluentConfig) -> tuple[float, float]:
    mean = 2.0 * cfg.peak_halfwidth / 24.0
    return -mean / (1.0 - mean), 1.0


def _concentration_factor(cfg: InfluentConfig, p: float) -> float:
    return (1.0 + cfg.concentration_amplitude * p) / (
        1.0 + cfg.dilution_coupling * cfg.flow_amplitude * p)


def generate_influent(cfg: InfluentConfig, t: float) -> InfluentRecord:
    p = diurnal_shape(cfg, t)
    f = _concentration_factor(cfg, p)
    return InfluentRecord(
        t=t,
        Q=cfg.mean_flow * (1.0 + cfg.flow_amplitude * p),
        COD=cfg.mean_COD * f,
        TN=cfg.mean_TN * f,
        NH3N=cfg.mean_NH3N * f,
        TP=cfg.mean_TP * f,
    )


def influent_series(cfg: InfluentConfig, horizon: float, dt: float) -> list[InfluentRecord]:
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    if dt > horizon:
        raise ValueError(f"dt={dt} exceeds horizon={horizon}")
    n = math.ceil(horizon / dt - 1e-9)
    return [generate_influent(cfg, k * dt) for k in range(n)]


def feature_bounds(cfg: InfluentConfig) -> dict[str, tuple[float, float]]:
    """Min/max of each influent variable over a day, used to scale observations."""
    lo, hi = shape_range(cfg)
    f = [_concentration_factor(cfg, p) for p in (lo, hi)]
    q = [cfg.mean_flow * (1.0 + cfg.flow_amplitude * p) for p in (lo, hi)]
    out = {"Q": (min(q), max(q))}
    for name in ("COD", "TN", "NH3N", "TP"):
        m = getattr(cfg, f"mean_{name}")
        out[name] = (m * min(f), m * max(f))
    return out


def series_array(records: list[InfluentRecord]) -> np.ndarray:
    """Stack records as rows ``t, Q, COD, TN, NH3N, TP``."""
    return np.array([[r.t, r.Q, r.COD, r.TN, r.NH3N, r.TP] for r in records])


CSV_HEADER = ("t_days", "Q_m3d", "COD", "TN", "NH3N", "TP")
