"""Scenario construction: node geometry, path loss, and seeded channel draws.

Distances are in meters, powers in linear watts inside the library; dB/dBm
conversion happens only here. Channel randomness comes from counter-based
streams keyed by (seed, link type, link index) so that every link draws from
its own substream and adding links never shifts existing draws.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, SystemConfig

__all__ = [
    "Geometry",
    "PathLossModel",
    "ScenarioSpec",
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss_linear",
    "paper_default_scenario",
    "generate_channels",
    "save_scenario",
    "load_scenario",
    "scenario_to_mapping",
    "scenario_from_mapping",
]


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(x_dbm):
    return 10.0 ** (np.asarray(x_dbm, dtype=float) / 10.0) * 1e-3


def watt_to_dbm(x_w):
    return 10.0 * np.log10(np.asarray(x_w, dtype=float) / 1e-3)


@dataclass(frozen=True)
class Geometry:
    """2-D positions of base stations, users, and the reflecting surface."""

    bs_positions: np.ndarray
    user_positions: np.ndarray
    irs_position: np.ndarray

    def __post_init__(self):
        bs = np.atleast_2d(np.asarray(self.bs_positions, dtype=float))
        us = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        irs = np.asarray(self.irs_position, dtype=float).reshape(2)
        if bs.shape[1] != 2 or us.shape[1] != 2:
            raise ValueError("positions must be 2-D points")
        if bs.shape[0] != us.shape[0]:
            raise ValueError("need one user position per base station")
        for name, a, b in (
            ("bs-user", bs[:, None, :], us[None, :, :]),
            ("bs-irs", bs, irs[None, :]),
            ("irs-user", us, irs[None, :]),
        ):
            if np.min(np.linalg.norm(a - b, axis=-1)) <= 0:
                raise ValueError(f"{name} distance must be strictly positive")
        for arr, field in ((bs, "bs_positions"), (us, "user_positions"), (irs, "irs_position")):
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)

    @property
    def num_cells(self):
        return self.bs_positions.shape[0]

    def dist_bs_user(self, user, bs):
        return float(np.linalg.norm(self.bs_positions[bs] - self.user_positions[user]))

    def dist_bs_irs(self, bs):
        return float(np.linalg.norm(self.bs_positions[bs] - self.irs_position))

    def dist_irs_user(self, user):
        return float(np.linalg.norm(self.user_positions[user] - self.irs_position))


@dataclass(frozen=True)
class PathLossModel:
    """Distance-power law: gain = 10^(c0_db/10) * (d / d0_m)^(-exponent)."""

    c0_db: float = -30.0
    d0_m: float = 1.0
    exponent_bs_user: float = 3.6
    exponent_bs_irs: float = 2.0
    exponent_irs_user: float = 2.5

    def __post_init__(self):
        if self.d0_m <= 0:
            raise ValueError("d0_m must be > 0")
        if min(self.exponent_bs_user, self.exponent_bs_irs, self.exponent_irs_user) < 0:
            raise ValueError("exponents must be >= 0")


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to draw channels deterministically."""

    config: SystemConfig
    geometry: Geometry
    path_loss: PathLossModel
    seed: int

    def __post_init__(self):
        if self.geometry.num_cells != self.config.num_cells:
            raise ValueError("geometry and config disagree on the number of cells")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")


def path_loss_linear(d, exponent, model):
    """Linear power gain of a link of length d under the given power law."""
    if d <= 0:
        raise ValueError("distance must be > 0")
    return float(db_to_linear(model.c0_db) * (d / model.d0_m) ** (-exponent))


def paper_default_scenario(p_max_dbm, seed):
    """Three-cell layout used throughout the experiments.

    Base stations at (-100, 0), (100, 0), (0, 100); users at (-5, 0), (5, 0),
    (0, 5); surface at (0, -10); 2 antennas per base station, 20 reflecting
    units, -80 dBm noise, unit weights, a common power budget of p_max_dbm.
    """
    config = SystemConfig(
        num_cells=3,
        num_antennas=2,
        num_reflect=20,
        power_budget=np.full(3, dbm_to_watt(p_max_dbm)),
        weight=np.ones(3),
        noise_power=np.full(3, dbm_to_watt(-80.0)),
    )
    geometry = Geometry(
        bs_positions=np.array([[-100.0, 0.0], [100.0, 0.0], [0.0, 100.0]]),
        user_positions=np.array([[-5.0, 0.0], [5.0, 0.0], [0.0, 5.0]]),
        irs_position=np.array([0.0, -10.0]),
    )
    return ScenarioSpec(config=config, geometry=geometry, path_loss=PathLossModel(), seed=int(seed))


# Stream tags for the counter-based generator; one substream per link.
_STREAM_BS_USER = 0
_STREAM_IRS_USER = 1


def _link_rng(seed, stream, i, k=0):
    packed = (stream << 32) | (i << 16) | k
    return np.random.Generator(np.random.Philox(key=np.array([seed, packed], dtype=np.uint64)))


def _cn_samples(rng, n, variance):
    """n i.i.d. circularly symmetric complex Gaussians via Box-Muller."""
    u1 = 1.0 - rng.random(n)  # (0, 1], keeps the log finite
    u2 = rng.random(n)
    radial = np.sqrt(-2.0 * np.log(u1))
    return np.sqrt(variance / 2.0) * radial * np.exp(2j * np.pi * u2)


def _steering(num_elements, sin_angle):
    return np.exp(1j * np.pi * np.arange(num_elements) * sin_angle)


def generate_channels(spec):
    """Draw one ChannelSet: line-of-sight to the surface, Rayleigh elsewhere.

    The surface link of base station k is the deterministic rank-one product
    sqrt(PL) * a_irs a_bs^H of unit-modulus steering vectors for uniform
    half-wavelength linear arrays laid along the x-axis; its per-entry modulus
    is exactly sqrt(PL). Fading links have i.i.d. complex-Gaussian entries with
    per-entry variance equal to the link's path-loss gain.
    """
    cfg = spec.config
    geo = spec.geometry
    pl = spec.path_loss
    K, M, N = cfg.num_cells, cfg.num_antennas, cfg.num_reflect
    seed = int(spec.seed)

    h = np.empty((K, K, M), dtype=np.complex128)
    for i in range(K):
        for k in range(K):
            gain = path_loss_linear(geo.dist_bs_user(i, k), pl.exponent_bs_user, pl)
            h[i, k] = _cn_samples(_link_rng(seed, _STREAM_BS_USER, i, k), M, gain)

    f = np.empty((K, N), dtype=np.complex128)
    for i in range(K):
        gain = path_loss_linear(geo.dist_irs_user(i), pl.exponent_irs_user, pl) if N else 1.0
        f[i] = _cn_samples(_link_rng(seed, _STREAM_IRS_USER, i), N, gain)

    G = np.empty((K, N, M), dtype=np.complex128)
    for k in range(K):
        d = geo.dist_bs_irs(k)
        gain = path_loss_linear(d, pl.exponent_bs_irs, pl)
        direction = (geo.irs_position - geo.bs_positions[k]) / d
        # both arrays lie along the x-axis, so sin(angle) is the x-component
        a_bs = _steering(M, direction[0])
        a_irs = _steering(N, -direction[0])
        G[k] = np.sqrt(gain) * np.outer(a_irs, a_bs.conj())

    return ChannelSet(bs_to_irs=G, irs_to_user=f, bs_to_user=h)


def _fmt_points(points):
    return " ".join(f"{p[0]:.10g},{p[1]:.10g}" for p in np.atleast_2d(points))


def _parse_points(text):
    pts = []
    for chunk in text.replace(";", " ").split():
        x, y = chunk.split(",")
        pts.append((float(x), float(y)))
    return np.array(pts)


def scenario_to_mapping(spec):
    """Flat key-value form of a ScenarioSpec (the [scenario] file section)."""
    cfg = spec.config
    geo = spec.geometry
    pl = spec.path_loss
    return {
        "num_cells": str(cfg.num_cells),
        "num_antennas": str(cfg.num_antennas),
        "num_reflect": str(cfg.num_reflect),
        "power_budget_dbm": " ".join(f"{x:.10g}" for x in watt_to_dbm(cfg.power_budget)),
        "weight": " ".join(f"{x:.10g}" for x in cfg.weight),
        "noise_power_dbm": " ".join(f"{x:.10g}" for x in watt_to_dbm(cfg.noise_power)),
        "bs_positions": _fmt_points(geo.bs_positions),
        "user_positions": _fmt_points(geo.user_positions),
        "irs_position": _fmt_points(geo.irs_position),
        "c0_db": f"{pl.c0_db:.10g}",
        "d0_m": f"{pl.d0_m:.10g}",
        "exponent_bs_user": f"{pl.exponent_bs_user:.10g}",
        "exponent_bs_irs": f"{pl.exponent_bs_irs:.10g}",
        "exponent_irs_user": f"{pl.exponent_irs_user:.10g}",
        "seed": str(int(spec.seed)),
    }


_SCENARIO_KEYS = {
    "num_cells", "num_antennas", "num_reflect", "power_budget_dbm", "weight",
    "noise_power_dbm", "bs_positions", "user_positions", "irs_position",
    "c0_db", "d0_m", "exponent_bs_user", "exponent_bs_irs", "exponent_irs_user",
    "seed",
}


def scenario_from_mapping(mapping):
    """Inverse of scenario_to_mapping; rejects unknown keys."""
    unknown = set(mapping) - _SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    missing = _SCENARIO_KEYS - set(mapping)
    if missing:
        raise ValueError(f"missing scenario keys: {sorted(missing)}")
    K = int(mapping["num_cells"])

    def vec(key, conv=float):
        vals = [conv(x) for x in mapping[key].split()]
        if len(vals) == 1:
            vals = vals * K
        if len(vals) != K:
            raise ValueError(f"{key}: expected 1 or {K} values")
        return np.array(vals)

    config = SystemConfig(
        num_cells=K,
        num_antennas=int(mapping["num_antennas"]),
        num_reflect=int(mapping["num_reflect"]),
        power_budget=dbm_to_watt(vec("power_budget_dbm")),
        weight=vec("weight"),
        noise_power=dbm_to_watt(vec("noise_power_dbm")),
    )
    geometry = Geometry(
        bs_positions=_parse_points(mapping["bs_positions"]),
        user_positions=_parse_points(mapping["user_positions"]),
        irs_position=_parse_points(mapping["irs_position"])[0],
    )
    path_loss = PathLossModel(
        c0_db=float(mapping["c0_db"]),
        d0_m=float(mapping["d0_m"]),
        exponent_bs_user=float(mapping["exponent_bs_user"]),
        exponent_bs_irs=float(mapping["exponent_bs_irs"]),
        exponent_irs_user=float(mapping["exponent_irs_user"]),
    )
    return ScenarioSpec(config=config, geometry=geometry, path_loss=path_loss,
                        seed=int(mapping["seed"]))


def save_scenario(spec, path):
    parser = configparser.ConfigParser()
    parser["scenario"] = scenario_to_mapping(spec)
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)


def load_scenario(path):
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    if "scenario" not in parser:
        raise ValueError(f"{path}: missing [scenario] section")
    return scenario_from_mapping(dict(parser["scenario"]))
