import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsbeam.model import ChannelSet, min_weighted_sinr, sinr
from irsbeam.txbf import build_p22, solve_p2
from helpers import cgauss, random_channels, random_unit_phases, small_config


def _flat_channels(rng, K, M, N=0):
    """Channels with no surface so the effective channel is just bs_to_user."""
    return ChannelSet(
        bs_to_irs=np.zeros((K, N, M), dtype=complex),
        irs_to_user=np.zeros((K, N), dtype=complex),
        bs_to_user=cgauss(rng, (K, K, M)),
    )


def test_build_rejects_nonpositive_level():
    cfg = small_config(1, 2, 0)
    a = cgauss(np.random.default_rng(0), (1, 1, 2))
    with pytest.raises(ValueError):
        build_p22(0.0, a, cfg)
    with pytest.raises(ValueError):
        build_p22(-1.0, a, cfg)


def test_zero_channels_give_zero_solution():
    K, M = 2, 2
    cfg = small_config(K, M, 0)
    ch = ChannelSet(bs_to_irs=np.zeros((K, 0, M), dtype=complex),
                    irs_to_user=np.zeros((K, 0), dtype=complex),
                    bs_to_user=np.zeros((K, K, M), dtype=complex))
    res = solve_p2(ch, np.zeros(0), cfg)
    assert res.t_star == 0.0
    assert res.bisection_iters == 0
    assert np.all(res.w.vectors == 0)


def test_single_cell_matches_matched_filter_bound():
    """With no interference the optimum is full-power transmission along the
    channel, reaching P ||a||^2 / sigma^2 exactly."""
    rng = np.random.default_rng(10)
    cfg = small_config(1, 2, 0, power=2.0, noise=0.5)
    for _ in range(10):
        ch = _flat_channels(rng, 1, 2)
        res = solve_p2(ch, np.zeros(0), cfg)
        a = ch.bs_to_user[0, 0]
        bound = 2.0 * np.sum(np.abs(a) ** 2) / 0.5
        assert res.t_star <= bound + 1e-9
        assert res.t_star >= bound - 1e-4 * bound - 1e-9
        w = res.w.vectors[0]
        cosine = np.abs(np.vdot(a, w)) / (np.linalg.norm(a) * np.linalg.norm(w))
        assert cosine >= 1 - 1e-6


def test_result_is_self_consistent():
    rng = np.random.default_rng(11)
    K, M, N = 3, 2, 4
    cfg = small_config(K, M, N, power=1.5, noise=0.2)
    ch = random_channels(rng, K, M, N)
    v = random_unit_phases(rng, N)
    res = solve_p2(ch, v, cfg)
    assert res.t_star == pytest.approx(min_weighted_sinr(v, res.w, ch, cfg), rel=1e-12)
    assert res.bracket_width > 0
    assert res.bisection_iters > 0


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_power_budgets_are_respected(seed):
    rng = np.random.default_rng(seed)
    K, M = 2, 2
    cfg = small_config(K, M, 0, power=1.0, noise=0.3)
    ch = _flat_channels(rng, K, M)
    res = solve_p2(ch, np.zeros(0), cfg)
    assert np.all(res.w.power() <= cfg.power_budget + 1e-6)
    # the returned level is supported by every user
    per_user = sinr(np.zeros(0), res.w, ch, cfg) / cfg.weight
    assert np.min(per_user) == pytest.approx(res.t_star, rel=1e-10)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_more_power_never_hurts(seed):
    rng = np.random.default_rng(seed)
    ch = _flat_channels(rng, 2, 2)
    lo = solve_p2(ch, np.zeros(0), small_config(2, 2, 0, power=0.5, noise=0.3))
    hi = solve_p2(ch, np.zeros(0), small_config(2, 2, 0, power=2.0, noise=0.3))
    assert hi.t_star >= lo.t_star - 1e-6


def test_weight_scaling_rescales_the_level():
    rng = np.random.default_rng(12)
    ch = _flat_channels(rng, 2, 2)
    base = solve_p2(ch, np.zeros(0), small_config(2, 2, 0, noise=0.3))
    half = solve_p2(ch, np.zeros(0),
                    small_config(2, 2, 0, weight=[2.0, 2.0], noise=0.3))
    assert half.t_star == pytest.approx(base.t_star / 2.0, rel=2e-3)


def test_requested_resolution_is_reached():
    rng = np.random.default_rng(13)
    cfg = small_config(2, 2, 0, noise=0.3)
    ch = _flat_channels(rng, 2, 2)
    res = solve_p2(ch, np.zeros(0), cfg, delta_t=1e-2)
    assert res.bracket_width <= 1e-2 + 1e-12
    with pytest.raises(ValueError):
        solve_p2(ch, np.zeros(0), cfg, delta_t=0.0)


def test_solution_phase_is_normalized():
    """The optimizer leaves Re(a_ii^H w_i) >= 0 and Im = 0, so the inner
    product with the own channel is a nonnegative real."""
    rng = np.random.default_rng(14)
    K, M = 3, 2
    cfg = small_config(K, M, 0, noise=0.4)
    ch = _flat_channels(rng, K, M)
    res = solve_p2(ch, np.zeros(0), cfg)
    for i in range(K):
        ip = np.vdot(ch.bs_to_user[i, i], res.w.vectors[i])
        assert ip.real >= -1e-7
        assert abs(ip.imag) <= 1e-6 * max(1.0, ip.real)


def _grid_best(ch, cfg, steps):
    """Exhaustive max-min over per-cell powers at M = 1 (phases cancel)."""
    g = np.abs(ch.bs_to_user[:, :, 0]) ** 2
    p0 = np.linspace(0.0, cfg.power_budget[0], steps)
    p1 = np.linspace(0.0, cfg.power_budget[1], steps)
    P0, P1 = np.meshgrid(p0, p1, indexing="ij")
    s0 = P0 * g[0, 0] / (P1 * g[0, 1] + cfg.noise_power[0])
    s1 = P1 * g[1, 1] / (P0 * g[1, 0] + cfg.noise_power[1])
    worst = np.minimum(s0 / cfg.weight[0], s1 / cfg.weight[1])
    return float(worst.max())


def test_two_cell_scalar_grid_oracle():
    rng = np.random.default_rng(15)
    cfg = small_config(2, 1, 0, power=1.0, noise=0.5)
    for _ in range(3):
        ch = _flat_channels(rng, 2, 1)
        res = solve_p2(ch, np.zeros(0), cfg)
        best = _grid_best(ch, cfg, 401)
        assert res.t_star >= best * (1 - 0.02)
        assert res.t_star <= best * (1 + 0.02) + 1e-9
