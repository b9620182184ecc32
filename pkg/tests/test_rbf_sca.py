import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsbeam.model import (
    ReflectVector,
    TransmitBeamformers,
    min_weighted_sinr_from_quadratic,
    quadratic_data,
    sinr_from_quadratic,
)
from irsbeam.rbf_sca import ScaContractViolation, f_aux, f_upper, sca_update
from helpers import cgauss, random_channels, random_unit_phases, small_config


def _instance(rng, K=2, M=2, N=3, power=1.0, noise=0.4):
    cfg = small_config(K, M, N, power=power, noise=noise)
    ch = random_channels(rng, K, M, N)
    w = TransmitBeamformers(np.sqrt(power) * cgauss(rng, (K, M)) / np.sqrt(M))
    return cfg, quadratic_data(ch, w)


def test_gap_sign_tracks_the_level():
    """F_i <= 0 exactly when user i's weighted SINR reaches t."""
    rng = np.random.default_rng(0)
    cfg, data = _instance(rng)
    v = random_unit_phases(rng, 3)
    levels = sinr_from_quadratic(ReflectVector(v), data, cfg) / cfg.weight
    for i in range(2):
        below = f_aux(v, data, levels[i] * 0.999, cfg)
        above = f_aux(v, data, levels[i] * 1.001, cfg)
        assert below[i] <= 1e-12
        assert above[i] > 0
    with pytest.raises(ValueError):
        f_aux(v, data, -0.1, cfg)


@settings(max_examples=200)
@given(seed=st.integers(0, 2**32 - 1))
def test_majorant_dominates_and_touches(seed):
    rng = np.random.default_rng(seed)
    cfg, data = _instance(rng)
    v_local = random_unit_phases(rng, 3)
    v = random_unit_phases(rng, 3)
    t = float(rng.uniform(0.0, 3.0))
    up = f_upper(v, v_local, data, t, cfg)
    raw = f_aux(v, data, t, cfg)
    scale = np.maximum(1.0, np.abs(raw))
    assert np.all(up >= raw - 1e-9 * scale)
    at_point = f_upper(v_local, v_local, data, t, cfg)
    there = f_aux(v_local, data, t, cfg)
    assert np.allclose(at_point, there, atol=1e-10 * np.max(scale))


@settings(max_examples=50)
@given(seed=st.integers(0, 2**32 - 1))
def test_linearization_matches_finite_differences(seed):
    """The majorant's directional derivative at the expansion point equals the
    true one: the linearized signal term is a first-order model."""
    rng = np.random.default_rng(seed)
    cfg, data = _instance(rng)
    v_local = random_unit_phases(rng, 3)
    direction = cgauss(rng, 3)
    direction /= np.linalg.norm(direction)
    t = 1.3
    h = 1e-6

    def along(fun, s):
        return fun(v_local + s * direction, data, t, cfg)

    num_up = (f_upper(v_local + h * direction, v_local, data, t, cfg)
              - f_upper(v_local - h * direction, v_local, data, t, cfg)) / (2 * h)
    num_raw = (along(f_aux, h) - along(f_aux, -h)) / (2 * h)
    scale = np.maximum(1.0, np.abs(num_raw))
    assert np.all(np.abs(num_up - num_raw) <= 1e-5 * scale)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_update_supports_the_current_level(seed):
    """The minimizer of the majorant never drops below the level it was handed."""
    rng = np.random.default_rng(seed)
    cfg, data = _instance(rng)
    v0 = ReflectVector(random_unit_phases(rng, 3))
    t0 = min_weighted_sinr_from_quadratic(v0, data, cfg)
    v1, z = sca_update(v0, data, t0, cfg)
    assert z <= 1e-6
    assert v1.max_modulus() <= 1.0 + 1e-12
    t1 = min_weighted_sinr_from_quadratic(v1, data, cfg)
    assert t1 >= t0 * (1 - 1e-7) - 1e-12


def test_update_accepts_zero_level():
    rng = np.random.default_rng(1)
    cfg, data = _instance(rng)
    v0 = ReflectVector.zero(3)
    v1, z = sca_update(v0, data, 0.0, cfg)
    assert z <= 1e-9
    assert v1.values.shape == (3,)
    with pytest.raises(ValueError):
        sca_update(v0, data, -1.0, cfg)


def test_repeated_updates_converge_upward():
    rng = np.random.default_rng(2)
    cfg, data = _instance(rng, K=2, M=2, N=4)
    v = ReflectVector(random_unit_phases(rng, 4))
    values = [min_weighted_sinr_from_quadratic(v, data, cfg)]
    for _ in range(12):
        v, _ = sca_update(v, data, values[-1], cfg)
        values.append(min_weighted_sinr_from_quadratic(v, data, cfg))
    diffs = np.diff(values)
    assert np.all(diffs >= -1e-9 * np.maximum(1.0, np.abs(values[:-1])))
    assert values[-1] > values[0]


def test_single_link_phase_alignment():
    """K = M = 1: enough updates align every surface phase with the direct
    path, reaching P (|d| + sum |c_n|)^2 / sigma^2."""
    rng = np.random.default_rng(3)
    P, sig = 2.0, 0.5
    cfg = small_config(1, 1, 2, power=P, noise=sig)
    ch = random_channels(rng, 1, 1, 2)
    w = TransmitBeamformers(np.array([[np.sqrt(P)]], dtype=complex))
    data = quadratic_data(ch, w)
    v = ReflectVector(random_unit_phases(rng, 2))
    t = min_weighted_sinr_from_quadratic(v, data, cfg)
    for _ in range(60):
        v, _ = sca_update(v, data, t, cfg)
        t_new = min_weighted_sinr_from_quadratic(v, data, cfg)
        if t_new - t < 1e-10:
            t = t_new
            break
        t = t_new
    best = (np.abs(data.d[0, 0]) + np.sum(np.abs(data.c[0, 0]))) ** 2 / sig
    assert t == pytest.approx(best, rel=1e-2)
