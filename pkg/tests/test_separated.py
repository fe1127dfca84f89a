import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cas_waveform import InvalidInputError
from cas_waveform.channels import (
    SystemConfig,
    gen_random_sensing,
    gen_rayleigh_channel,
    make_iid_sensing,
    make_rng,
)
from cas_waveform.separated import alg1_search, golden_section, p3_objective, p3_solve, sw_eval
from oracles import sw_brute

BASE = SystemConfig()


def _general(seed, snr_s=10.0, snr_c=10.0, cfg=BASE):
    rng = make_rng(seed, 0)
    s = gen_random_sensing(rng, cfg.n_tx, cfg.m_s)
    c = gen_rayleigh_channel(cfg.m_c, cfg.n_tx, rng)
    return s, c, cfg.with_snr(snr_s, snr_c)


def _iid(seed, snr_s=20.0, snr_c=20.0, lam=1.0):
    c = gen_rayleigh_channel(BASE.m_c, BASE.n_tx, make_rng(seed, 0))
    return make_iid_sensing(lam, BASE.n_tx, BASE.m_s), c, BASE.with_snr(snr_s, snr_c)


def test_endpoints_equal_prior_variance():
    s, c, cfg = _general(1)
    zero = sw_eval(0.0, s, c, cfg).result
    full = sw_eval(cfg.power_budget, s, c, cfg).result
    assert zero.d_s == pytest.approx(s.prior_variance, rel=1e-12)
    assert zero.d_c == 0.0
    assert full.rate == 0.0
    assert full.d_total == pytest.approx(s.prior_variance, rel=1e-9)


def test_iid_endpoint_per_element():
    s, c, cfg = _iid(0)
    n_elem = cfg.n_tx * cfg.m_s
    for x in (0.0, cfg.power_budget):
        assert sw_eval(x, s, c, cfg).result.d_total / n_elem == pytest.approx(1.0, abs=1e-9)


def test_sw_eval_rejects_out_of_range():
    s, c, cfg = _general(0)
    with pytest.raises(InvalidInputError):
        sw_eval(-1.0, s, c, cfg)
    with pytest.raises(InvalidInputError):
        sw_eval(cfg.power_budget * 1.01, s, c, cfg)


@given(st.integers(0, 1000), st.floats(0.0, 1.0), st.floats(-10, 30), st.floats(-10, 30))
def test_sw_eval_tightness(seed, frac, snr_s, snr_c):
    s, c, cfg = _general(seed, snr_s, snr_c)
    x = frac * cfg.power_budget
    d = sw_eval(x, s, c, cfg)
    assert d.p_s.sum() == pytest.approx(x, abs=1e-9 * cfg.power_budget)
    assert d.p_c.sum() == pytest.approx(cfg.power_budget - x, abs=1e-9 * cfg.power_budget)
    assert (d.p_s >= 0).all() and (d.p_c >= 0).all()
    if d.result.meta["k_active"]:
        assert d.result.meta["achieved_rate"] == pytest.approx(d.result.rate, abs=1e-8)
    assert d.result.d_total <= s.prior_variance + 1e-9


def test_dense_grid_never_exceeds_prior():
    s, c, cfg = _general(3, 5.0, 15.0)
    for x in np.linspace(0, cfg.power_budget, 301):
        assert sw_eval(x, s, c, cfg).result.d_total <= s.prior_variance + 1e-9


def test_alg1_matches_p3_on_iid():
    s, c, cfg = _iid(0)
    a = alg1_search(s, c, cfg).result.d_total
    p = p3_solve(s, c, cfg).result.d_total
    assert a == pytest.approx(p, rel=1e-4)


@pytest.mark.parametrize("seed", [0, 1])
def test_alg1_matches_dense_oracle(seed):
    s, c, cfg = _general(seed, 10.0, 20.0)
    best = alg1_search(s, c, cfg, validate=True, validate_points=801)
    ref = sw_brute(s, c, cfg, points=801)
    assert best.result.d_total <= ref * (1 + 1e-6)
    assert not best.result.meta["dense_disagrees"]


def test_alg1_below_endpoints():
    s, c, cfg = _general(4)
    assert alg1_search(s, c, cfg).result.d_total <= s.prior_variance + 1e-12


def test_alg1_huge_eps_single_refinement():
    s, c, cfg = _general(5)
    meta = alg1_search(s, c, cfg, eps=1e30).result.meta
    # initial grid plus one refined grid
    assert meta["rounds"] == 2
    assert meta["evaluations"] == 2 * 21


def test_alg1_validates_parameters():
    s, c, cfg = _general(0)
    with pytest.raises(InvalidInputError):
        alg1_search(s, c, cfg, grid_l=1)
    with pytest.raises(InvalidInputError):
        alg1_search(s, c, cfg, eps=0.0)


def test_p3_objective_endpoints_and_interior():
    s, c, cfg = _iid(1)
    prior = cfg.n_tx * cfg.m_s * 1.0
    assert p3_objective(0.0, s, c, cfg) == pytest.approx(prior, rel=1e-12)
    assert p3_objective(cfg.power_budget, s, c, cfg) == pytest.approx(prior, rel=1e-12)
    grid = np.linspace(0, cfg.power_budget, 1000)
    h = np.array([p3_objective(x, s, c, cfg) for x in grid])
    assert h[1:-1].min() < prior * (1 - 1e-3)


def test_p3_objective_matches_sw_eval():
    s, c, cfg = _iid(2, 15.0, 5.0, lam=2.0)
    for x in np.linspace(0, cfg.power_budget, 11):
        assert p3_objective(x, s, c, cfg) == pytest.approx(sw_eval(x, s, c, cfg).result.d_total, rel=1e-10)


def test_p3_requires_iid():
    s, c, cfg = _general(0)
    with pytest.raises(InvalidInputError):
        p3_objective(1.0, s, c, cfg)
    with pytest.raises(InvalidInputError):
        p3_solve(s, c, cfg)


def test_p3_matches_brute_grid():
    s, c, cfg = _iid(3, 20.0, 10.0)
    grid = np.linspace(0, cfg.power_budget, 10_001)
    h = np.array([p3_objective(x, s, c, cfg) for x in grid])
    opt = p3_solve(s, c, cfg)
    assert abs(opt.p_split[0] - grid[np.argmin(h)]) <= grid[1] - grid[0]
    assert opt.result.d_total <= h.min() + 1e-9


def test_p3_sensing_power_grows_with_comm_snr():
    c = gen_rayleigh_channel(BASE.m_c, BASE.n_tx, make_rng(0, 0))
    s = make_iid_sensing(1.0, BASE.n_tx, BASE.m_s)
    splits = [p3_solve(s, c, BASE.with_snr(20.0, snr_c)).p_split[0] for snr_c in (0, 5, 10, 15, 20)]
    assert all(b >= a - 1e-6 for a, b in zip(splits, splits[1:]))


def test_p3_zero_capacity_limit():
    s, c, cfg = _iid(0, 20.0, -200.0)
    assert p3_solve(s, c, cfg).result.d_total == pytest.approx(cfg.n_tx * cfg.m_s, rel=1e-9)


def test_golden_section_boundary_minimum():
    x, fx = golden_section(lambda t: (t - 3.0) ** 2, 0.0, 2.0)
    assert x == 2.0 and fx == 1.0
    x, _ = golden_section(lambda t: (t - 0.7) ** 2, 0.0, 2.0)
    assert x == pytest.approx(0.7, abs=1e-8)


@given(st.integers(0, 10_000), st.floats(0, 30), st.floats(0, 30), st.floats(0.2, 5.0))
def test_p3_second_differences_nonnegative(seed, snr_s, snr_c, lam):
    s, c, cfg = _iid(seed, snr_s, snr_c, lam)
    grid = np.linspace(0, cfg.power_budget, 200)
    h = np.array([p3_objective(x, s, c, cfg) for x in grid])
    assert np.diff(h, 2).min() >= -1e-8 * np.abs(h).max()
