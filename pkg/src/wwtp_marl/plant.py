"""Reduced activated-sludge plant surrogate.

Layout (UCT-type):

    influent -> primary clarifier -> anaerobic -> anoxic 1 -> anoxic 2 -> aerobic -> secondary clarifier -> effluent
                                        ^____ a-recycle ___|       ^___ nitrate recycle __|        |
                                                            ^____________ RAS _____________________|
    primary sludge + WAS -> thickening -> FeCl3 conditioning -> digester (CHP) -> dewatering -> cake

Each biological tank carries seven states (column order of ``STATE_NAMES``).
Integration is explicit Euler with a fixed sub-step; negative values are clamped
to zero and counted.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np
from numba import njit

from .influent import InfluentConfig, InfluentRecord, generate_influent

STATE_NAMES = ("SS", "SNH", "SNO", "SPO", "XH", "XA", "XI")
TANK_NAMES = ("anaerobic", "anoxic1", "anoxic2", "aerobic")
SS, SNH, SNO, SPO, XH, XA, XI = range(7)
AEROBIC = 3

DO_BOUNDS = (0.0, 5.0)       # g O2/m3
DOSE_BOUNDS = (0.0, 0.5)     # kg PAC solution (25 %) per m3 wastewater
PAC_STRENGTH = 0.25
FECL3_STRENGTH = 0.40
CH4_DENSITY = 0.717          # kg/m3
N2O_PER_N = 44.0 / 28.0


@dataclass(frozen=True)
class Action:
    DO_setpoint: float
    pac_dose: float

    def clipped(self) -> "Action":
        return Action(
            float(np.clip(self.DO_setpoint, *DO_BOUNDS)),
            float(np.clip(self.pac_dose, *DOSE_BOUNDS)),
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.DO_setpoint, self.pac_dose])


BASELINE_ACTION = Action(1.5, 0.125)


@dataclass(frozen=True)
class Kinetics:
    mu_H: float = 4.0        # 1/d
    K_S: float = 20.0        # g COD/m3
    K_OH: float = 0.2        # g O2/m3
    K_NO: float = 0.5        # g N/m3
    eta_g: float = 0.8
    Y_H: float = 0.67
    b_H: float = 0.3         # 1/d
    mu_A: float = 0.9        # 1/d
    K_NH: float = 1.8        # g N/m3
    K_OA: float = 0.5        # g O2/m3
    Y_A: float = 0.24
    b_A: float = 0.05        # 1/d
    i_N: float = 0.086       # g N/g COD biomass
    i_P: float = 0.038       # g P/g COD biomass (lumps poly-P storage)
    f_XI: float = 0.08
    K_nut_N: float = 0.05    # nutrient-limitation half-saturation, 0 disables
    K_nut_P: float = 0.001

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)


@dataclass(frozen=True)
class PlantParams:
    # m3; primary clarifier, anaerobic, anoxic1, anoxic2, aerobic, secondary clarifier
    tank_volumes: tuple = (300.0, 200.0, 400.0, 600.0, 800.0, 600.0)
    sludge_recycle_ratio: float = 1.5
    irr_anox1_to_anaerobic: float = 3.0
    irr_aerobic_to_anox2: float = 2.0
    SRT_target: float = 15.0             # d
    enable_wastage: bool = True
    fecl3_dose: float = 0.030            # kg FeCl3 (100 %) per kg TSS
    kinetics: Kinetics = field(default_factory=Kinetics)
    p_binding: float = 0.065             # kg P per kg PAC (100 %)
    K_precip: float = 0.3                # g P/m3, half-saturation of precipitation
    SAE: float = 1.0                     # kg O2/kWh at zero DO
    DO_sat: float = 9.0                  # g/m3
    # influent fractionation
    f_COD_soluble: float = 0.5
    f_COD_particulate_degradable: float = 0.35
    f_TP_orthophosphate: float = 0.7
    f_organic_nutrient_particulate: float = 0.5
    primary_removal: float = 0.5         # particulate fraction settled in the primary
    effluent_TSS: float = 3.0            # g/m3
    tss_per_cod: float = 0.75
    # N2O yield p(DO) = base + peak * exp(-DO / scale), fraction of nitrified N
    n2o_base: float = 0.004
    n2o_peak: float = 0.016
    n2o_do_scale: float = 0.5
    # sludge line
    digester_hrt: float = 20.0           # d
    vs_destruction: float = 0.45
    ch4_yield: float = 0.35              # m3 CH4/kg COD destroyed
    fugitive_ch4: float = 0.02
    chp_efficiency: float = 0.35
    ch4_lhv: float = 10.0                # kWh/m3
    dewatered_solids: float = 0.25
    primary_sludge_solids: float = 30.0  # kg/m3
    thickened_solids: float = 50.0       # kg/m3
    # pumps
    H_static: float = 5.0                # m
    H_friction: float = 1.0              # m
    pump_efficiency: float = 0.7
    # other energy
    mixing_w_per_m3: float = 3.0         # applied to unaerated tanks
    fixed_other_kw: float = 13.58
    substep: float = 0.0005              # d

    def __post_init__(self):
        if min(self.tank_volumes) <= 0:
            raise ValueError("tank volumes must be positive")
        k = self.kinetics
        for name in ("Y_H", "Y_A", "f_XI"):
            if not 0 < getattr(k, name) < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        for name in ("pump_efficiency", "chp_efficiency", "vs_destruction",
                     "fugitive_ch4", "dewatered_solids", "primary_removal"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        if self.SAE <= 0 or self.DO_sat <= DO_BOUNDS[1]:
            raise ValueError("SAE must be positive and DO_sat above the DO range")

    @property
    def bio_volumes(self) -> np.ndarray:
        return np.array(self.tank_volumes[1:5], dtype=np.float64)

    def p_n2o(self, do: float) -> float:
        return self.n2o_base + self.n2o_peak * math.exp(-do / self.n2o_do_scale)


@dataclass(frozen=True)
class TankState:
    SS: float
    SNH: float
    SNO: float
    SPO: float
    XH: float
    XA: float
    XI: float

    def as_array(self) -> np.ndarray:
        return np.array([self.SS, self.SNH, self.SNO, self.SPO, self.XH, self.XA, self.XI])

    @classmethod
    def from_array(cls, x) -> "TankState":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class PlantState:
    tanks: np.ndarray               # (4, 7), g/m3
    blanket_kg: float = 0.0         # solids held in the secondary clarifier underflow
    digester_cod_kg: float = 0.0
    elapsed: float = 0.0            # d
    clamp_count: int = 0

    def tank(self, i: int) -> TankState:
        return TankState.from_array(self.tanks[i])

    def copy(self) -> "PlantState":
        return replace(self, tanks=self.tanks.copy())


@dataclass
class StepFluxes:
    treated_volume: float        # m3/interval (influent)
    eff_volume: float            # m3/interval
    eff_COD: float               # g/m3, flow-weighted means over the interval
    eff_BOD: float
    eff_NH4: float
    eff_NO3: float
    eff_NO2: float
    eff_TN: float
    eff_TP: float
    OUR_total: float             # kg O2/interval
    aeration_energy: float       # kWh/interval
    pump_energy: float
    other_energy: float
    biogas_electricity: float
    fecl3_used: float            # kg FeCl3 (100 %)
    pac_pure_used: float         # kg PAC (100 %)
    cake_mass: float             # kg wet cake
    process_N2O: float           # kg N2O
    process_CH4: float           # kg CH4
    DO_setpoint: float = 0.0
    pac_dose: float = 0.0
    wastage_flow: float = 0.0    # m3/d
    srt_days: float = 0.0
    nitrified_N: float = 0.0     # kg N
    precipitated_P: float = 0.0  # kg P
    cod_in: float = 0.0          # kg entering the biological reactors
    n_in: float = 0.0
    p_in: float = 0.0
    clamped: int = 0

    def load(self, name: str) -> float:
        """Effluent load of ``name`` (e.g. ``"TP"``) in kg per interval."""
        return getattr(self, f"eff_{name}") * self.eff_volume / 1000.0

    def concentrations(self) -> dict[str, float]:
        return {"COD": self.eff_COD, "NH3N": self.eff_NH4, "TN": self.eff_TN, "TP": self.eff_TP}

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


FLUX_FIELDS = tuple(f.name for f in fields(StepFluxes))


class PlantError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# kinetics

def process_rates(tank: TankState | np.ndarray, DO: float, p: PlantParams) -> dict[str, float]:
    x = tank.as_array() if isinstance(tank, TankState) else np.asarray(tank, dtype=np.float64)
    r = _rates(x, DO, p.kinetics.as_array())
    return dict(zip(("aerobic_growth_H", "anoxic_growth_H", "nitrification", "decay_H", "decay_A"), r))


@njit(cache=True)
def _switch(s, k):
    if k <= 0.0:
        return 1.0
    return s / (k + s)


@njit(cache=True)
def _rates(x, DO, kin):
    mu_H, K_S, K_OH, K_NO, eta_g = kin[0], kin[1], kin[2], kin[3], kin[4]
    b_H, mu_A, K_NH, K_OA = kin[6], kin[7], kin[8], kin[9]
    b_A, K_nut_N, K_nut_P = kin[11], kin[15], kin[16]
    ss, snh, sno, spo, xh, xa = x[0], x[1], x[2], x[3], x[4], x[5]
    nut = _switch(snh, K_nut_N) * _switch(spo, K_nut_P)
    monod_s = ss / (K_S + ss)
    out = np.empty(5)
    out[0] = mu_H * monod_s * DO / (K_OH + DO) * nut * xh
    out[1] = mu_H * eta_g * monod_s * K_OH / (K_OH + DO) * sno / (K_NO + sno) * nut * xh
    out[2] = mu_A * snh / (K_NH + snh) * DO / (K_OA + DO) * _switch(spo, K_nut_P) * xa
    out[3] = b_H * xh
    out[4] = b_A * xa
    return out


@njit(cache=True)
def _derivatives(x, DO, kin):
    Y_H, Y_A, i_N, i_P, f_XI = kin[5], kin[10], kin[12], kin[13], kin[14]
    r = _rates(x, DO, kin)
    dec = r[3] + r[4]
    d = np.empty(7)
    d[0] = -(r[0] + r[1]) / Y_H + (1.0 - f_XI) * dec
    d[1] = -i_N * (r[0] + r[1]) - (i_N + 1.0 / Y_A) * r[2] + i_N * (1.0 - f_XI) * dec
    d[2] = -(1.0 - Y_H) / (2.86 * Y_H) * r[1] + r[2] / Y_A
    d[3] = -i_P * (r[0] + r[1] + r[2]) + i_P * (1.0 - f_XI) * dec
    d[4] = r[0] + r[1] - r[3]
    d[5] = r[2] - r[4]
    d[6] = f_XI * dec
    our = (1.0 - Y_H) / Y_H * r[0] + 4.57 / Y_A * r[2]
    return d, our, r[2] / Y_A


# accumulator layout returned by _integrate
ACC_OUR, ACC_NIT, ACC_PRECIP, ACC_EFF, ACC_WAS = 0, 1, 2, 3, 10
ACC_SIZE = 17


@njit(cache=True)
def _integrate(x, n_sub, h, Qin, inlet, DO_ae, precip_cap, Qr, Qa1, Qa2, Qw, V, kin,
               tss_e, tss_per_cod, k_prec):
    """Advance the four tanks ``n_sub`` Euler steps of length ``h`` (d).

    Returns (accumulators in g, clamp count, error code). The error code is
    ``-1`` on success, otherwise ``tank * 7 + state`` of the first non-finite value.
    """
    acc = np.zeros(ACC_SIZE)
    clamps = 0
    Qe = Qin - Qw
    q01 = Qin + Qa1
    q12 = Qin + Qr
    q23 = Qin + Qr + Qa2
    dos = np.array([0.0, 0.0, 0.0, DO_ae])
    xe = np.empty(7)
    xu = np.empty(7)
    dx = np.empty((4, 7))
    for _ in range(n_sub):
        ae = x[3]
        tss_ae = tss_per_cod * (ae[4] + ae[5] + ae[6])
        ratio = 1.0
        if tss_ae > tss_e:
            ratio = tss_e / tss_ae
        for j in range(7):
            if j < 4:
                xe[j] = ae[j]
                xu[j] = ae[j]
            else:
                xe[j] = ratio * ae[j]
                xu[j] = (q12 * ae[j] - Qe * xe[j]) / (Qr + Qw)
        for i in range(4):
            d, our, nit = _derivatives(x[i], dos[i], kin)
            for j in range(7):
                dx[i, j] = d[j]
            if i == AEROBIC:
                acc[ACC_OUR] += our * V[i] * h
                acc[ACC_NIT] += nit * V[i] * h
        for j in range(7):
            dx[0, j] += (Qin * inlet[j] + Qa1 * x[1, j] - q01 * x[0, j]) / V[0]
            dx[1, j] += (q01 * x[0, j] + Qr * xu[j] - (Qa1 + q12) * x[1, j]) / V[1]
            dx[2, j] += (q12 * x[1, j] + Qa2 * x[3, j] - q23 * x[2, j]) / V[2]
            dx[3, j] += (q23 * x[2, j] - q23 * x[3, j]) / V[3]
            acc[ACC_EFF + j] += Qe * xe[j] * h
            acc[ACC_WAS + j] += Qw * xu[j] * h
        # chemical P precipitation in the aerobic tank: saturating in phosphate,
        # capped by what is present
        spo = x[3, 3]
        prec = precip_cap / V[3] * spo / (k_prec + spo) if spo > 0.0 else 0.0
        avail = spo / h + dx[3, 3]
        if avail < 0.0:
            avail = 0.0
        if prec > avail:
            prec = avail
        dx[3, 3] -= prec
        acc[ACC_PRECIP] += prec * V[3] * h
        for i in range(4):
            for j in range(7):
                v = x[i, j] + h * dx[i, j]
                if not np.isfinite(v):
                    return acc, clamps, i * 7 + j
                if v < 0.0:
                    v = 0.0
                    clamps += 1
                x[i, j] = v
    return acc, clamps, -1



# --------------------------------------------------------------------------
# energy helpers

def aeration_energy(OUR: float, DO: float, p: PlantParams) -> float:
    """kWh needed to transfer ``OUR`` kg O2 while holding ``DO`` g/m3."""
    if OUR < 0:
        raise ValueError("OUR must be non-negative")
    if not 0 <= DO < p.DO_sat:
        raise ValueError(f"DO={DO} outside [0, DO_sat={p.DO_sat})")
    return OUR / (p.SAE * (p.DO_sat - DO) / p.DO_sat)


def pump_energy(Q: float, p: PlantParams) -> float:
    """Pump power in kW for flow ``Q`` in m3/s."""
    if Q < 0:
        raise ValueError("Q must be non-negative")
    H = p.H_static + p.H_friction
    return 1000.0 * 9.8 * Q * H / (1000.0 * p.pump_efficiency)


# --------------------------------------------------------------------------
# plant step

def bio_inlet(inf: InfluentRecord, p: PlantParams) -> tuple[np.ndarray, dict[str, float]]:
    """Primary-clarifier effluent composition (g/m3) and primary sludge (g/m3 of influent)."""
    k = p.kinetics
    cod = inf.COD
    f_xs = p.f_COD_particulate_degradable
    f_xi = 1.0 - p.f_COD_soluble - f_xs
    prim = p.primary_removal
    xi = cod * f_xi * (1.0 - prim)
    ss = cod * p.f_COD_soluble + cod * f_xs * (1.0 - prim)
    org_n = max(inf.TN - inf.NH3N, 0.0)
    org_p = inf.TP * (1.0 - p.f_TP_orthophosphate)
    part = p.f_organic_nutrient_particulate * prim
    snh = max(inf.NH3N + org_n * (1.0 - part) - k.i_N * xi, 0.0)
    spo = max(inf.TP * p.f_TP_orthophosphate + org_p * (1.0 - part) - k.i_P * xi, 0.0)
    inlet = np.array([ss, snh, 0.0, spo, 0.0, 0.0, xi])
    sludge = {
        "cod_degradable": cod * f_xs * prim,
        "cod_inert": cod * f_xi * prim,
    }
    return inlet, sludge


def tank_tss(tanks: np.ndarray, p: PlantParams) -> np.ndarray:
    return p.tss_per_cod * tanks[:, XH:].sum(axis=1)


def wastage_flow(state: PlantState, Q: float, p: PlantParams) -> float:
    """Waste flow (m3/d) that removes solids at the rate implied by ``SRT_target``."""
    if not p.enable_wastage:
        return 0.0
    tss = tank_tss(state.tanks, p)
    inventory = float(tss @ p.bio_volumes)
    Qr = p.sludge_recycle_ratio * Q
    tss_ae = tss[AEROBIC]
    tss_e = min(p.effluent_TSS, tss_ae)
    W = inventory / p.SRT_target - Q * tss_e
    if W <= 0:
        return 0.0
    F = (Q + Qr) * tss_ae
    # W (Qr + Qw) = Qw (F - (Q - Qw) tss_e)
    a, b, c = tss_e, F - Q * tss_e - W, -W * Qr
    if a == 0:
        return -c / b
    return (-b + math.sqrt(b * b - 4 * a * c)) / (2 * a)


def step(state: PlantState, inf: InfluentRecord, a: Action, dt_control: float,
         p: PlantParams) -> tuple[PlantState, StepFluxes]:
    if dt_control <= 0:
        raise ValueError("dt_control must be positive")
    a = a.clipped()
    k = p.kinetics
    V = p.bio_volumes
    Q = inf.Q
    Qr = p.sludge_recycle_ratio * Q
    Qa1 = p.irr_anox1_to_anaerobic * Q
    Qa2 = p.irr_aerobic_to_anox2 * Q
    Qw = min(wastage_flow(state, Q, p), 0.5 * Q)
    inlet, primary = bio_inlet(inf, p)

    n_sub = max(1, math.ceil(dt_control / p.substep - 1e-9))
    h = dt_control / n_sub
    pac_pure_rate = a.pac_dose * PAC_STRENGTH * Q            # kg/d
    precip_cap = p.p_binding * pac_pure_rate * 1000.0        # g P/d
    x = state.tanks.copy()
    acc, clamps, err = _integrate(
        x, n_sub, h, Q, inlet, a.DO_setpoint, precip_cap, Qr, Qa1, Qa2, Qw, V,
        k.as_array(), p.effluent_TSS, p.tss_per_cod, p.K_precip)
    if err >= 0:
        tank, var = divmod(int(err), 7)
        raise PlantError(
            f"non-finite {STATE_NAMES[var]} in {TANK_NAMES[tank]} tank at t={state.elapsed:.4f} d")

    vol_in = Q * dt_control
    vol_e = (Q - Qw) * dt_control
    eff = acc[ACC_EFF:ACC_EFF + 7]
    was = acc[ACC_WAS:ACC_WAS + 7]
    xsum_e = eff[XH] + eff[XA] + eff[XI]
    cod_e = (eff[SS] + xsum_e) / vol_e
    tn_e = (eff[SNH] + eff[SNO] + k.i_N * xsum_e) / vol_e
    tp_e = (eff[SPO] + k.i_P * xsum_e) / vol_e

    # sludge line, masses in kg over the interval
    prim_deg = primary["cod_degradable"] * vol_in / 1000.0
    prim_inert = primary["cod_inert"] * vol_in / 1000.0
    was_bio = (was[XH] + was[XA]) / 1000.0
    was_inert = was[XI] / 1000.0 + k.f_XI * was_bio
    was_deg = (1.0 - k.f_XI) * was_bio
    tss_sludge = p.tss_per_cod * (prim_deg + prim_inert + was_bio + was[XI] / 1000.0)
    fecl3 = p.fecl3_dose * tss_sludge
    pac_pure = pac_pure_rate * dt_control

    deg_in_rate = (prim_deg + was_deg) / dt_control               # kg COD/d
    k_destroy = p.vs_destruction / (1.0 - p.vs_destruction) / p.digester_hrt
    kappa = k_destroy + 1.0 / p.digester_hrt
    m0 = state.digester_cod_kg
    m_ss = deg_in_rate / kappa
    decay = math.exp(-kappa * dt_control)
    m1 = m_ss + (m0 - m_ss) * decay
    m_int = m_ss * dt_control + (m0 - m_ss) * (1.0 - decay) / kappa
    destroyed = k_destroy * m_int
    digested_out = m_int / p.digester_hrt
    ch4_m3 = p.ch4_yield * destroyed
    process_ch4 = p.fugitive_ch4 * ch4_m3 * CH4_DENSITY
    biogas_el = (1.0 - p.fugitive_ch4) * ch4_m3 * p.ch4_lhv * p.chp_efficiency
    dry = (p.tss_per_cod * (prim_inert + was_inert + digested_out)
           + pac_pure + fecl3 + acc[ACC_PRECIP] / 1000.0)
    cake = dry / p.dewatered_solids

    hours = dt_control * 24.0
    sludge_m3_per_d = (Qw + (p.tss_per_cod * prim_deg + p.tss_per_cod * prim_inert)
                       / p.primary_sludge_solids / dt_control
                       + tss_sludge / p.thickened_solids / dt_control)
    pumps = pump_energy(sludge_m3_per_d / 86400.0, p) * hours
    unaerated = float(sum(p.tank_volumes[1:4]))
    other = (p.mixing_w_per_m3 * unaerated / 1000.0 + p.fixed_other_kw) * hours
    our_kg = acc[ACC_OUR] / 1000.0
    nitrified = acc[ACC_NIT] / 1000.0

    tss_new = tank_tss(x, p)
    inventory = float(tss_new @ V)
    removed = (p.tss_per_cod * (xsum_e + was[XH] + was[XA] + was[XI])) / dt_control
    srt = inventory / removed if removed > 0 else math.inf
    qu = Qr + Qw
    tss_u = ((Q + Qr) * tss_new[AEROBIC] - (Q - Qw) * min(p.effluent_TSS, tss_new[AEROBIC])) / qu

    fl = StepFluxes(
        treated_volume=vol_in,
        eff_volume=vol_e,
        eff_COD=cod_e,
        eff_BOD=0.5 * cod_e,
        eff_NH4=eff[SNH] / vol_e,
        eff_NO3=eff[SNO] / vol_e,
        eff_NO2=0.0,
        eff_TN=tn_e,
        eff_TP=tp_e,
        OUR_total=our_kg,
        aeration_energy=aeration_energy(our_kg, a.DO_setpoint, p),
        pump_energy=pumps,
        other_energy=other,
        biogas_electricity=biogas_el,
        fecl3_used=fecl3,
        pac_pure_used=pac_pure,
        cake_mass=cake,
        process_N2O=p.p_n2o(a.DO_setpoint) * nitrified * N2O_PER_N,
        process_CH4=process_ch4,
        DO_setpoint=a.DO_setpoint,
        pac_dose=a.pac_dose,
        wastage_flow=Qw,
        srt_days=srt,
        nitrified_N=nitrified,
        precipitated_P=acc[ACC_PRECIP] / 1000.0,
        cod_in=(inlet[SS] + inlet[XI]) * vol_in / 1000.0,
        n_in=(inlet[SNH] + k.i_N * inlet[XI]) * vol_in / 1000.0,
        p_in=(inlet[SPO] + k.i_P * inlet[XI]) * vol_in / 1000.0,
        clamped=int(clamps),
    )
    new_state = PlantState(
        tanks=x,
        blanket_kg=tss_u * p.tank_volumes[5] * 0.25 / 1000.0,
        digester_cod_kg=m1,
        elapsed=state.elapsed + dt_control,
        clamp_count=state.clamp_count + int(clamps),
    )
    return new_state, fl


def tracer_inventory(state: PlantState, p: PlantParams) -> dict[str, float]:
    """COD, N and P held in the biological tanks (kg)."""
    k = p.kinetics
    x = state.tanks
    V = p.bio_volumes
    xs = x[:, XH] + x[:, XA] + x[:, XI]
    return {
        "COD": float((x[:, SS] + xs) @ V) / 1000.0,
        "N": float((x[:, SNH] + x[:, SNO] + k.i_N * xs) @ V) / 1000.0,
        "P": float((x[:, SPO] + k.i_P * xs) @ V) / 1000.0,
    }


def tracer_outflow(fl: StepFluxes, p: PlantParams) -> dict[str, float]:
    """COD, N and P leaving with effluent and waste sludge (kg); reactions excluded."""
    v = fl.eff_volume
    return {
        "COD": fl.eff_COD * v / 1000.0,
        "N": fl.eff_TN * v / 1000.0,
        "P": fl.eff_TP * v / 1000.0,
    }


# --------------------------------------------------------------------------
# initial conditions

# Rounded day-300 state of the default plant under the baseline action.
SEED_TANKS = np.array([
    [161.0, 20.5, 0.0, 3.09, 741.0, 37.9, 636.0],
    [119.0, 15.7, 0.03, 2.41, 995.0, 50.6, 836.0],
    [69.8, 10.0, 0.03, 1.66, 1007.0, 51.2, 842.0],
    [3.8, 1.14, 4.80, 0.12, 1040.0, 52.3, 844.0],
])


def seed_state(p: PlantParams | None = None) -> PlantState:
    return PlantState(tanks=SEED_TANKS.copy(), digester_cod_kg=2910.0)


def quasi_steady_change(before: PlantState, after: PlantState, floor: float = 1.0) -> float:
    """Largest relative change of any tank variable, relative to max(|x|, floor)."""
    scale = np.maximum(np.abs(after.tanks), floor)
    return float(np.max(np.abs(after.tanks - before.tanks) / scale))


def warmup(p: PlantParams, cfg: InfluentConfig, a: Action, days: float = 20.0,
           dt_control: float = 1.0 / 24.0, state: PlantState | None = None,
           tolerance: float = 0.02) -> PlantState:
    """Integrate ``days`` under constant action ``a`` and return the final state.

    Warns when any tank variable moved by more than ``tolerance`` over the last day.
    """
    state = seed_state(p) if state is None else state.copy()
    n = int(round(days / dt_control))
    per_day = int(round(1.0 / dt_control))
    day_before = state
    for i in range(n):
        if i == n - per_day:
            day_before = state
        inf = generate_influent(cfg, state.elapsed)
        state, _ = step(state, inf, a, dt_control, p)
    change = quasi_steady_change(day_before, state)
    if change > tolerance:
        warnings.warn(f"warm-up not quasi-steady: max relative daily change {change:.3%}",
                      RuntimeWarning, stacklevel=2)
    return state


def simulate(state: PlantState, cfg: InfluentConfig, actions, dt_control: float,
             p: PlantParams) -> tuple[PlantState, list[StepFluxes]]:
    """Run a sequence of actions (one per interval) from ``state``."""
    out = []
    for a in actions:
        inf = generate_influent(cfg, state.elapsed)
        state, fl = step(state, inf, a, dt_control, p)
        out.append(fl)
    return state, out
