"""Shared builders for randomized test instances."""

import numpy as np

from irsbeam.model import ChannelSet, SystemConfig


def small_config(K, M, N, power=1.0, weight=None, noise=1.0):
    return SystemConfig(
        num_cells=K, num_antennas=M, num_reflect=N,
        power_budget=np.full(K, float(power)),
        weight=np.ones(K) if weight is None else np.asarray(weight, dtype=float),
        noise_power=np.full(K, float(noise)),
    )


def cgauss(rng, shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_channels(rng, K, M, N, scale=1.0):
    return ChannelSet(
        bs_to_irs=cgauss(rng, (K, N, M), scale),
        irs_to_user=cgauss(rng, (K, N), scale),
        bs_to_user=cgauss(rng, (K, K, M), scale),
    )


def random_unit_phases(rng, N):
    return np.exp(2j * np.pi * rng.random(N))


ACCEPTANCE_LINES = []


def record_acceptance(index, ok, detail):
    """Collect one verdict line per criterion for the terminal summary."""
    line = f"ACCEPTANCE {index:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
