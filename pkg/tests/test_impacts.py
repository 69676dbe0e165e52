import math

import numpy as np
import pytest

from conftest import make_fluxes, random_fluxes
from wwtp_marl.impacts import (STANDARDS, CostFactors, NormalizationBounds,
                               RewardConfig, assess, bounds_from_samples, check_standard,
                               constraint_penalty, effluent_ghg, eutrophication_potential,
                               life_cycle_cost, normalize, reward, rounded_weights, total_energy,
                               total_ghg)
from wwtp_marl.plant import Action

# independent straight-line oracles ------------------------------------------


def ep_oracle(TP, COD, NH4, NO3, NO2):
    return 3.07 * TP + 0.022 * COD + 0.33 * NH4 + 0.095 * NO3 + 0.13 * NO2


def cost_oracle(direct_kwh, pac, fecl3, cake, biogas_kwh):
    return (direct_kwh * 0.8 + (fecl3 + pac + cake) * 200 * 0.005 + fecl3 * 1.7 + pac * 2.5
            + cake * 0.52 + 0.3 - biogas_kwh * 0.25)


def ghg_oracle(direct_kwh, pac, fecl3, moved, n2o, ch4, biogas_kwh):
    return (298 * n2o + 25 * ch4 + direct_kwh * 1.17 + pac * 1.182 + fecl3 * 0.986
            + moved * 200 * 0.000192 - biogas_kwh * 1.17)


def energy_oracle(aer, pumps, fecl3_pure, pac_pure, other, biogas):
    return aer + pumps + fecl3_pure / 0.4 * 3.4 + pac_pure / 0.25 * 1.94 + other - biogas


# worked examples ------------------------------------------------------------


def test_ep_example():
    ep = eutrophication_potential(0.0004, 0.030, 0.002, 0.010, 0.0001)
    assert ep == pytest.approx(ep_oracle(0.0004, 0.030, 0.002, 0.010, 0.0001), abs=1e-12)
    assert ep == pytest.approx(0.003511, abs=1e-9)


def test_ep_single_terms_and_zero():
    assert eutrophication_potential(0, 0, 0, 0, 0) == 0.0
    assert eutrophication_potential(0.001, 0, 0, 0, 0) == pytest.approx(0.00307, abs=1e-15)
    with pytest.raises(ValueError):
        eutrophication_potential(-1e-6, 0, 0, 0, 0)


def test_effluent_ghg_examples():
    assert effluent_ghg(20.0, 0.0)["CH4"] == pytest.approx(0.175, abs=1e-12)
    assert effluent_ghg(0.0, 10.0)["N2O"] == pytest.approx(10 * 0.016 * 44 / 28, abs=1e-12)
    assert effluent_ghg(0.0, 10.0)["N2O"] == pytest.approx(0.25143, abs=1e-5)
    assert effluent_ghg(0.0, 0.0) == {"CH4": 0.0, "N2O": 0.0}


def test_cost_example():
    fl = make_fluxes(aeration_energy=0.5, pac_pure_used=0.03, fecl3_used=0.005, cake_mass=0.08,
                     biogas_electricity=0.05)
    cost, parts = life_cycle_cost(fl)
    assert cost == pytest.approx(cost_oracle(0.5, 0.03, 0.005, 0.08, 0.05), abs=1e-12)
    assert cost == pytest.approx(0.9276, abs=1e-9)
    assert parts["energy"] == pytest.approx(0.4)
    assert parts["chemicals"] == pytest.approx(0.0835)
    assert parts["transport"] == pytest.approx(0.115)
    assert parts["sludge"] == pytest.approx(0.0416)
    assert parts["biogas"] == pytest.approx(-0.0125)


def test_cost_all_zero_is_misc_only():
    assert life_cycle_cost(make_fluxes())[0] == pytest.approx(0.3, abs=1e-15)


def test_doubling_electricity_price_doubles_energy_cost_only():
    fl = make_fluxes(aeration_energy=0.5, pac_pure_used=0.03, cake_mass=0.08)
    _, p1 = life_cycle_cost(fl, CostFactors())
    _, p2 = life_cycle_cost(fl, CostFactors(electricity=1.6))
    assert p2["energy"] == pytest.approx(2 * p1["energy"])
    for k in p1:
        if k != "energy":
            assert p2[k] == p1[k]


def test_ghg_example():
    pac, fecl3, moved = 0.03125, 0.005, 0.115
    fl = make_fluxes(aeration_energy=0.5, pac_pure_used=pac, fecl3_used=fecl3,
                     cake_mass=moved - pac - fecl3, process_N2O=1.8 / 298.0,
                     biogas_electricity=0.09)
    ghg, parts = total_ghg(fl)
    assert ghg == pytest.approx(ghg_oracle(0.5, pac, fecl3, moved, 1.8 / 298, 0, 0.09), abs=1e-12)
    assert ghg == pytest.approx(2.326, abs=5e-4)
    assert parts["process"] == pytest.approx(1.8)
    assert parts["biogas"] == pytest.approx(-0.1053)


def test_ghg_single_n2o_factor():
    assert total_ghg(make_fluxes(process_N2O=0.01))[0] == pytest.approx(2.98, abs=1e-12)


def test_energy_example():
    pac = 0.078 / 1.94 * 0.25       # PAC (100 %) whose 25 % solution carries 0.078 kWh
    fl = make_fluxes(aeration_energy=0.23, pump_energy=0.05, pac_pure_used=pac,
                     other_energy=0.25, biogas_electricity=0.09)
    e, parts = total_energy(fl)
    assert e == pytest.approx(0.518, abs=1e-12)
    assert parts["chemicals"] == pytest.approx(0.078, abs=1e-12)


def test_energy_may_be_negative():
    e, _ = total_energy(make_fluxes(aeration_energy=0.1, biogas_electricity=0.5))
    assert e < 0
    assert assess(make_fluxes(aeration_energy=0.1, biogas_electricity=0.5)).energy_negative


def test_oracles_agree_on_random_fluxes():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        fl = random_fluxes(rng)
        v = fl.treated_volume
        iv = assess(fl)
        direct = fl.aeration_energy + fl.pump_energy + fl.other_energy
        loads = [getattr(fl, f"eff_{k}") * fl.eff_volume / 1000 / v
                 for k in ("TP", "COD", "NH4", "NO3", "NO2")]
        eff_ch4 = fl.eff_BOD * fl.eff_volume / 1000 * 0.25 * 0.035
        eff_n2o = fl.eff_TN * fl.eff_volume / 1000 * 0.016 * 44 / 28
        moved = fl.fecl3_used + fl.pac_pure_used + fl.cake_mass
        assert iv.ep == pytest.approx(ep_oracle(*loads), rel=1e-12, abs=1e-15)
        assert iv.cost == pytest.approx(
            cost_oracle(direct / v, fl.pac_pure_used / v, fl.fecl3_used / v, fl.cake_mass / v,
                        fl.biogas_electricity / v), rel=1e-12, abs=1e-12)
        assert iv.ghg == pytest.approx(
            ghg_oracle(direct / v, fl.pac_pure_used / v, fl.fecl3_used / v, moved / v,
                       (fl.process_N2O + eff_n2o) / v, (fl.process_CH4 + eff_ch4) / v,
                       fl.biogas_electricity / v), rel=1e-12, abs=1e-12)
        assert iv.energy == pytest.approx(
            energy_oracle(fl.aeration_energy / v, fl.pump_energy / v, fl.fecl3_used / v,
                          fl.pac_pure_used / v, fl.other_energy / v,
                          fl.biogas_electricity / v), rel=1e-12, abs=1e-12)


def test_components_sum_to_totals():
    rng = np.random.default_rng(1)
    for _ in range(200):
        iv = assess(random_fluxes(rng))
        for ind in ("energy", "cost", "ep", "ghg"):
            assert math.fsum(iv.parts(ind).values()) == pytest.approx(getattr(iv, ind), abs=1e-9)


def test_assess_rejects_zero_volume():
    with pytest.raises(ValueError):
        assess(make_fluxes(treated_volume=0.0))


# normalization, reward, compliance -----------------------------------------

B = NormalizationBounds({"energy": 0.0, "ep": 0.0, "ghg": 0.0, "cost": 0.0},
                        {"energy": 10.0, "ep": 10.0, "ghg": 10.0, "cost": 10.0})


def test_normalize_examples():
    assert normalize(0.0, B, "energy") == 0.0
    assert normalize(10.0, B, "energy") == 1.0
    assert normalize(5.0, B, "energy") == 0.5
    assert normalize(12.0, B, "energy") == 1.0
    assert normalize(-3.0, B, "energy") == 0.0
    flat = NormalizationBounds({"energy": 2.0}, {"energy": 2.0})
    assert normalize(7.0, flat, "energy") == 0.0
    with pytest.raises(KeyError):
        normalize(1.0, flat, "ep")


def test_bounds_reject_inverted_and_roundtrip():
    with pytest.raises(ValueError):
        NormalizationBounds({"energy": 1.0}, {"energy": 0.0})
    b = bounds_from_samples({"energy": np.array([3.0, 1.0, 2.0])})
    assert (b.lo["energy"], b.hi["energy"]) == (1.0, 3.0)
    assert NormalizationBounds.from_dict(b.to_dict()) == b


def test_weights_round_to_published_values():
    assert rounded_weights() == {"energy": 0.38, "ep": 0.26, "ghg": 0.36}
    w = RewardConfig().weights
    assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)
    assert w["energy"] == pytest.approx(2.9 / 7.671)


def test_reward_examples():
    iv = assess(make_fluxes())
    half = NormalizationBounds({k: getattr(iv, k) - 1.0 for k in ("energy", "ep", "ghg", "cost")},
                               {k: getattr(iv, k) + 1.0 for k in ("energy", "ep", "ghg", "cost")})
    assert reward(iv, half, 0.0, RewardConfig("LCA")) == pytest.approx(-0.5, abs=1e-12)
    assert reward(iv, half, 0.0, RewardConfig("COST")) == pytest.approx(-0.5, abs=1e-12)
    zero = NormalizationBounds({k: getattr(iv, k) for k in ("energy", "ep", "ghg", "cost")},
                               {k: getattr(iv, k) + 1.0 for k in ("energy", "ep", "ghg", "cost")})
    assert reward(iv, zero, 1.0, RewardConfig("LCA")) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValueError):
        RewardConfig("PROFIT")


def test_check_standard_examples():
    zeros = {"COD": 0.0, "NH3N": 0.0, "TN": 0.0, "TP": 0.0}
    assert check_standard(zeros, STANDARDS["I-A"])["overall"]
    c = dict(zeros, TP=0.4)
    assert check_standard(c, STANDARDS["I-A"])["overall"]
    assert not check_standard(c, STANDARDS["SW"])["TP"]
    at_limit = dict(zeros, NH3N=5.0)
    assert check_standard(at_limit, STANDARDS["I-A"])["overall"]


def test_constraint_penalty_examples():
    zeros = {"COD": 0.0, "NH3N": 0.0, "TN": 0.0, "TP": 0.0}
    rc = RewardConfig()
    lo = Action(0.0, 0.0)
    assert constraint_penalty(zeros, STANDARDS["I-A"], lo, lo, rc) == 0.0
    only_violation = RewardConfig(lambda_smooth=0.0, lambda_mag=0.0)
    assert constraint_penalty(dict(zeros, TP=0.6), STANDARDS["I-A"], Action(1, 0.1),
                              Action(2, 0.2), only_violation) == 1.0
    smooth = RewardConfig(lambda_smooth=0.1, lambda_mag=0.0)
    assert constraint_penalty(zeros, STANDARDS["I-A"], Action(5.0, 0.2), Action(0.0, 0.2),
                              smooth) == pytest.approx(0.1, abs=1e-15)
