import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from endowment_hjb.model import (ConfigError, ConstraintSet, MarketParams, ModelParams, Schedule,
                                 UtilityParams, coeff_a, coeff_b, coeff_c, fichera_limit,
                                 integrated_c, load_config, merton_ratio, pension_params, theta)


def test_theta_examples():
    assert theta(MarketParams(0.04, 0.0, 0.2)) == pytest.approx(0.2)
    assert theta(MarketParams(0.03, 0.03, 0.7)) == 0.0
    assert theta(MarketParams(0.1, 0.02, 0.4)) == pytest.approx(0.2)


def test_theta_tracks_fields():
    p = pension_params()
    assert p.replace(mu=0.06).market.theta == pytest.approx(0.3)


def test_coeff_a_examples():
    p = pension_params(rho=0.0)
    assert coeff_a(0.0, 1.0, 0.0, p) == pytest.approx(0.00845)
    assert coeff_a(3.0, 0.0, 2.7, pension_params()) == 0.0
    # 4 * (0.00845 + 0.005 + 0.0065)
    assert coeff_a(0.0, 2.0, 0.5, pension_params()) == pytest.approx(0.0798)


@given(st.floats(-5, 5), st.floats(0, 100), st.floats(-0.99, 0.99))
def test_coeff_a_nonnegative(pi, z, rho):
    assert coeff_a(0.0, z, pi, pension_params(rho=rho)) >= -1e-15


def test_coeff_b_examples():
    p = pension_params()
    assert coeff_b(0.0, 0.0, 3.0, p) == 1.0
    assert coeff_b(0.0, 1.0, 0.0, p) == pytest.approx(1.0138)
    assert coeff_b(0.0, 1.0, 0.5, p) == pytest.approx(1.0468)


def test_coeff_c_examples():
    assert coeff_c(0.0, pension_params()) == pytest.approx(0.0031)
    assert coeff_c(0.0, pension_params(mu_c=0.0, sigma_c=0.0)) == 0.0
    assert coeff_c(0.0, pension_params(gamma=0.5)) == pytest.approx(-0.0078875)


def test_integrated_c_piecewise():
    p = pension_params(mu_c=[[0.0, 0.02], [10.0, 0.04]])
    c1 = coeff_c(0.0, p)
    c2 = coeff_c(15.0, p)
    assert integrated_c(0.0, 20.0, p) == pytest.approx(10 * c1 + 10 * c2)
    assert integrated_c(5.0, 12.0, p) == pytest.approx(5 * c1 + 2 * c2)


@pytest.mark.parametrize("t,pi", [(0.0, 0.0), (20.0, 5.0), (7.3, -2.1)])
def test_fichera_limit_is_one(t, pi):
    assert fichera_limit(t, pi, pension_params()) == pytest.approx(1.0)


def test_merton_ratio_examples():
    m = merton_ratio(pension_params())
    assert m.value == pytest.approx(0.5) and not m.clamped
    assert merton_ratio(pension_params(mu=0.0)).value == 0.0
    c = merton_ratio(pension_params(pi_lo=0.0, pi_hi=0.3))
    assert c.value == pytest.approx(0.3) and c.clamped


def test_schedule_right_continuous():
    s = Schedule(((0.0, 1.0), (5.0, 2.0)))
    assert s(4.999) == 1.0 and s(5.0) == 2.0 and s(50.0) == 2.0
    assert s.integral(0.0, 10.0) == pytest.approx(15.0)
    assert s.breaks_in(0.0, 5.0) == []


@pytest.mark.parametrize("bad", [[[1.0, 0.1]], [[0.0, 1.0], [0.0, 2.0]], [[0.0, float("nan")]]])
def test_schedule_rejects(bad):
    with pytest.raises(ConfigError):
        Schedule.coerce(bad)


@pytest.mark.parametrize("kw", [dict(rho=1.0), dict(rho=-1.0), dict(gamma=0.0), dict(gamma=1.0),
                                dict(sigma=0.0), dict(sigma_c=-0.1), dict(pi_lo=2.0, pi_hi=1.0),
                                dict(horizon_t=0.0)])
def test_invalid_params(kw):
    with pytest.raises(ConfigError):
        pension_params(**kw)


def test_constraint_helpers():
    a = ConstraintSet(-1.0, 2.0)
    assert a.clip(3.0) == 2.0 and a.contains(np.array([-1.0, 2.0])) and not a.contains(2.5)


def test_utility_call():
    assert UtilityParams(-1.0)(2.0) == -0.5
    assert UtilityParams(0.5)(4.0) == pytest.approx(4.0)


def test_dict_round_trip():
    p = pension_params(mu_c=[[0.0, 0.02], [10.0, 0.03]])
    assert ModelParams.from_dict(p.to_dict()) == p


def test_from_dict_names_missing_key():
    cfg = pension_params().to_dict()
    del cfg["utility"]["gamma"]
    with pytest.raises(ConfigError) as err:
        ModelParams.from_dict(cfg)
    assert err.value.path == "utility.gamma"


def test_from_dict_bad_number():
    cfg = pension_params().to_dict()
    cfg["market"]["mu"] = "lots"
    with pytest.raises(ConfigError, match="market.mu"):
        ModelParams.from_dict(cfg)


def test_constraint_default():
    cfg = pension_params().to_dict()
    del cfg["constraint"]
    assert ModelParams.from_dict(cfg).constraint == ConstraintSet(-5.0, 5.0)


def test_shipped_config_matches_example(tmp_path):
    from pathlib import Path
    cfg = load_config(Path(__file__).parent.parent / "configs" / "pension.yaml")
    assert ModelParams.from_dict(cfg) == pension_params()


def test_load_config_garbage(tmp_path):
    f = tmp_path / "x.yaml"
    f.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(f)
    f.write_text("a: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(f)


def test_replace_unknown():
    with pytest.raises(TypeError):
        pension_params(nope=1)
