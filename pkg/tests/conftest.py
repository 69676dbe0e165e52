import numpy as np
import pytest

from wwtp_marl.plant import BASELINE_ACTION, PlantParams, StepFluxes, warmup
from wwtp_marl.influent import InfluentConfig


@pytest.fixture(scope="session")
def warm_state():
    return warmup(PlantParams(), InfluentConfig(), BASELINE_ACTION, days=20.0)


def make_fluxes(**kw) -> StepFluxes:
    """All-zero fluxes over 1 m3 unless overridden."""
    base = dict(treated_volume=1.0, eff_volume=1.0, eff_COD=0.0, eff_BOD=0.0, eff_NH4=0.0,
                eff_NO3=0.0, eff_NO2=0.0, eff_TN=0.0, eff_TP=0.0, OUR_total=0.0,
                aeration_energy=0.0, pump_energy=0.0, other_energy=0.0,
                biogas_electricity=0.0, fecl3_used=0.0, pac_pure_used=0.0, cake_mass=0.0,
                process_N2O=0.0, process_CH4=0.0)
    base.update(kw)
    return StepFluxes(**base)


def random_fluxes(rng: np.random.Generator) -> StepFluxes:
    v = float(rng.uniform(10, 200))
    return make_fluxes(
        treated_volume=v, eff_volume=v * float(rng.uniform(0.95, 1.0)),
        eff_COD=rng.uniform(0, 60), eff_BOD=rng.uniform(0, 20), eff_NH4=rng.uniform(0, 8),
        eff_NO3=rng.uniform(0, 15), eff_NO2=rng.uniform(0, 1), eff_TN=rng.uniform(0, 25),
        eff_TP=rng.uniform(0, 1), OUR_total=rng.uniform(0, 50),
        aeration_energy=rng.uniform(0, 60), pump_energy=rng.uniform(0, 5),
        other_energy=rng.uniform(0, 20), biogas_electricity=rng.uniform(0, 30),
        fecl3_used=rng.uniform(0, 3), pac_pure_used=rng.uniform(0, 5), cake_mass=rng.uniform(0, 80),
        process_N2O=rng.uniform(0, 0.2), process_CH4=rng.uniform(0, 0.5))


def gradcheck(net, x, upstream, rng, n_params: int = 20, h: float = 1e-5) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Checks the input gradient in full and ``n_params`` random entries of every
    parameter array, for the scalar loss ``sum(upstream * y)``.
    """
    from wwtp_marl.marl.nets import mlp_forward, mlp_gradients

    def loss():
        return float(np.sum(upstream * mlp_forward(net, x)[0]))

    _, cache = mlp_forward(net, x)
    grads, dx = mlp_gradients(net, cache, upstream)
    pairs = []
    for p, g in zip(net.params(), grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for j in rng.choice(flat.size, size=min(n_params, flat.size), replace=False):
            old = flat[j]
            flat[j] = old + h
            lp = loss()
            flat[j] = old - h
            lm = loss()
            flat[j] = old
            pairs.append((gflat[j], (lp - lm) / (2 * h)))
    xf, dxf = x.reshape(-1), dx.reshape(-1)
    for j in range(xf.size):
        old = xf[j]
        xf[j] = old + h
        lp = loss()
        xf[j] = old - h
        lm = loss()
        xf[j] = old
        pairs.append((dxf[j], (lp - lm) / (2 * h)))
    a = np.array(pairs)
    num = np.linalg.norm(a[:, 0] - a[:, 1])
    den = max(np.linalg.norm(a[:, 0]) + np.linalg.norm(a[:, 1]), 1e-12)
    return float(num / den)


def random_net_case(rng, k: int):
    """The k-th (net, input, upstream) case: cycles through the shapes used in training."""
    from wwtp_marl.marl.nets import init_mlp
    shapes = [([40, 64, 64, 1], "tanh_box"), ([82, 64, 64, 1], "identity"),
              ([3, 5, 2], "identity"), ([4, 7, 6, 3], "tanh_box"), ([2, 1], "identity")]
    sizes, out = shapes[k % len(shapes)]
    box = (np.zeros(sizes[-1]), rng.uniform(0.5, 5.0, sizes[-1])) if out == "tanh_box" else (None, None)
    net = init_mlp(sizes, rng, out, *box)
    x = rng.uniform(-1, 1, size=(int(rng.integers(1, 5)), sizes[0]))
    up = rng.normal(size=(len(x), sizes[-1]))
    return net, x, up


def conservation_residuals(days: float = 1.0) -> dict[str, float]:
    """|in - out - storage change| / in for COD, N and P with reactions and wastage off."""
    from dataclasses import replace
    from wwtp_marl.influent import generate_influent
    from wwtp_marl.plant import Action, Kinetics, seed_state, step, tracer_inventory, tracer_outflow
    p = replace(PlantParams(), kinetics=Kinetics(mu_H=0.0, mu_A=0.0, b_H=0.0, b_A=0.0),
                enable_wastage=False)
    cfg = InfluentConfig()
    state = seed_state(p)
    before = tracer_inventory(state, p)
    inflow = dict.fromkeys(before, 0.0)
    outflow = dict.fromkeys(before, 0.0)
    for _ in range(int(round(days * 24))):
        state, fl = step(state, generate_influent(cfg, state.elapsed), Action(2.0, 0.0), 1 / 24, p)
        out = tracer_outflow(fl, p)
        for k, v in (("COD", fl.cod_in), ("N", fl.n_in), ("P", fl.p_in)):
            inflow[k] += v
            outflow[k] += out[k]
    after = tracer_inventory(state, p)
    return {k: abs(inflow[k] - outflow[k] - (after[k] - before[k])) / inflow[k] for k in before}
