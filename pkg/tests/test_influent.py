import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wwtp_marl.influent import (InfluentConfig, diurnal_shape, feature_bounds, generate_influent,
                                influent_series, series_array)

CFG = InfluentConfig()


def test_zero_amplitude_is_constant():
    cfg = InfluentConfig(flow_amplitude=0.0)
    assert {generate_influent(cfg, t).Q for t in np.linspace(0, 1, 25)} == {2000.0}


def test_peak_flow_value():
    r = generate_influent(CFG, 8.0 / 24.0)
    assert diurnal_shape(CFG, 8.0 / 24.0) == pytest.approx(1.0, abs=1e-12)
    assert r.Q == pytest.approx(2600.0, abs=1e-9)


def test_dilution_lowers_peak_concentration():
    r = generate_influent(CFG, 8.0 / 24.0)
    assert r.COD == pytest.approx(400 * 1.2 / 1.15, rel=1e-12)


def test_series_length_and_pointwise():
    s = influent_series(CFG, 10.0, 1.0 / 24.0)
    assert len(s) == 240
    assert s[5] == generate_influent(CFG, 5 * (1.0 / 24.0))
    one = influent_series(CFG, 1.0, 1.0)
    assert len(one) == 1 and one[0].t == 0.0
    assert series_array(s).shape == (240, 6)
    with pytest.raises(ValueError):
        influent_series(CFG, 1.0, 2.0)


def test_daily_mean_flow():
    n = 24 * 60
    q = [generate_influent(CFG, k / n).Q for k in range(n)]
    assert np.mean(q) == pytest.approx(CFG.mean_flow, rel=1e-3)


def test_feature_bounds_cover_a_day():
    b = feature_bounds(CFG)
    recs = influent_series(CFG, 1.0, 1.0 / 1440)
    for name, (lo, hi) in b.items():
        v = [getattr(r, name) for r in recs]
        assert lo - 1e-9 <= min(v) and max(v) <= hi + 1e-9


@pytest.mark.parametrize("kw", [dict(mean_flow=0.0), dict(flow_amplitude=0.95),
                                dict(mean_NH3N=50.0), dict(dilution_coupling=-1.0),
                                dict(peak_hours=(8.0, 10.0))])
def test_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        InfluentConfig(**kw)


@given(st.floats(0, 365, allow_nan=False))
def test_periodic_and_consistent(t):
    a, b = generate_influent(CFG, t), generate_influent(CFG, t + 1.0)
    for name in ("Q", "COD", "TN", "NH3N", "TP"):
        assert math.isclose(getattr(a, name), getattr(b, name), rel_tol=1e-9, abs_tol=1e-12)
    assert a.Q > 0 and a.NH3N <= a.TN and min(a.COD, a.TP) >= 0
    assert generate_influent(CFG, t) == a
