"""Core domain types and SINR arithmetic for the multi-cell downlink with a reflecting surface.

Each base station i serves one user i with a dedicated beamformer; all cells share
the spectrum, so user i sees interference from every other cell. A passive surface
with per-unit reflection coefficients v (|v[n]| <= 1) adds a reflected path on top
of each direct base-station-to-user channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SystemConfig",
    "ChannelSet",
    "TransmitBeamformers",
    "ReflectVector",
    "QuadraticData",
    "reflect_channel",
    "effective_channel",
    "effective_channels_all",
    "quadratic_data",
    "sinr",
    "sinr_from_quadratic",
    "min_weighted_sinr",
    "min_weighted_sinr_from_quadratic",
]


def _frozen_complex(x, shape, name):
    a = np.asarray(x, dtype=np.complex128)
    if a.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a.view(np.float64))):
        raise ValueError(f"{name}: non-finite entries")
    a.setflags(write=False)
    return a


def _frozen_real(x, length, name, positive=True):
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (length,):
        raise ValueError(f"{name}: expected shape ({length},), got {a.shape}")
    if positive and not np.all(a > 0):
        raise ValueError(f"{name}: all entries must be > 0")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SystemConfig:
    """Static system dimensions and per-user scalars.

    Attributes
    ----------
    num_cells : int
        Number of base-station/user pairs sharing the band.
    num_antennas : int
        Transmit antennas per base station.
    num_reflect : int
        Reflecting units at the surface; 0 means no surface is present.
    power_budget : (num_cells,) float array, watts
    weight : (num_cells,) float array
        Positive per-user priority weights in the max-min objective.
    noise_power : (num_cells,) float array, watts
    """

    num_cells: int
    num_antennas: int
    num_reflect: int
    power_budget: np.ndarray
    weight: np.ndarray
    noise_power: np.ndarray

    def __post_init__(self):
        if self.num_cells < 1 or self.num_antennas < 1 or self.num_reflect < 0:
            raise ValueError("need num_cells >= 1, num_antennas >= 1, num_reflect >= 0")
        K = self.num_cells
        object.__setattr__(self, "power_budget", _frozen_real(self.power_budget, K, "power_budget"))
        object.__setattr__(self, "weight", _frozen_real(self.weight, K, "weight"))
        object.__setattr__(self, "noise_power", _frozen_real(self.noise_power, K, "noise_power"))


@dataclass(frozen=True)
class ChannelSet:
    """All propagation channels for one scenario draw.

    ``bs_to_irs[k]`` is the (num_reflect, num_antennas) matrix from base station k
    to the surface; ``irs_to_user[i]`` the (num_reflect,) vector from the surface
    to user i; ``bs_to_user[i, k]`` the (num_antennas,) vector from base station k
    to user i.
    """

    bs_to_irs: np.ndarray
    irs_to_user: np.ndarray
    bs_to_user: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.bs_to_user, dtype=np.complex128)
        if h.ndim != 3 or h.shape[0] != h.shape[1]:
            raise ValueError("bs_to_user must have shape (K, K, M)")
        K, _, M = h.shape
        G = np.asarray(self.bs_to_irs, dtype=np.complex128)
        if G.ndim != 3 or G.shape[0] != K or G.shape[2] != M:
            raise ValueError("bs_to_irs must have shape (K, N, M)")
        N = G.shape[1]
        object.__setattr__(self, "bs_to_irs", _frozen_complex(G, (K, N, M), "bs_to_irs"))
        object.__setattr__(self, "irs_to_user", _frozen_complex(self.irs_to_user, (K, N), "irs_to_user"))
        object.__setattr__(self, "bs_to_user", _frozen_complex(h, (K, K, M), "bs_to_user"))

    @property
    def num_cells(self):
        return self.bs_to_user.shape[0]

    @property
    def num_antennas(self):
        return self.bs_to_user.shape[2]

    @property
    def num_reflect(self):
        return self.bs_to_irs.shape[1]


@dataclass(frozen=True)
class TransmitBeamformers:
    """Per-base-station transmit beamforming vectors, stacked (K, M)."""

    vectors: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.vectors, dtype=np.complex128)
        if a.ndim != 2:
            raise ValueError("vectors must be a (K, M) array")
        object.__setattr__(self, "vectors", _frozen_complex(a, a.shape, "vectors"))

    def power(self):
        """Transmit power per base station, ||w_i||^2."""
        return np.sum(np.abs(self.vectors) ** 2, axis=1)


@dataclass(frozen=True)
class ReflectVector:
    """Reflection coefficients of the surface, one complex entry per unit."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.complex128)
        if a.ndim != 1:
            raise ValueError("values must be a flat complex vector")
        object.__setattr__(self, "values", _frozen_complex(a, a.shape, "values"))

    def max_modulus(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @staticmethod
    def zero(num_reflect):
        return ReflectVector(np.zeros(num_reflect, dtype=np.complex128))


@dataclass(frozen=True)
class QuadraticData:
    """Coefficients of the expansion |v^H c + d|^2 = v^H C v + 2 Re(v^H u) + |d|^2.

    Indexed [i, k]: receive user i, transmit base station k, for a fixed set of
    beamformers. c[i, k] is the surface-domain signature of the reflected path,
    d[i, k] the direct-path scalar, C = c c^H and u = c * conj(d).
    """

    c: np.ndarray
    d: np.ndarray
    C: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=np.complex128)
        if c.ndim != 3 or c.shape[0] != c.shape[1]:
            raise ValueError("c must have shape (K, K, N)")
        K, _, N = c.shape
        object.__setattr__(self, "c", _frozen_complex(c, (K, K, N), "c"))
        object.__setattr__(self, "d", _frozen_complex(self.d, (K, K), "d"))
        object.__setattr__(self, "C", _frozen_complex(self.C, (K, K, N, N), "C"))
        object.__setattr__(self, "u", _frozen_complex(self.u, (K, K, N), "u"))


def reflect_channel(f, G):
    """Surface-composed channel: row n of G scaled by conj(f[n]).

    Parameters
    ----------
    f : (N,) complex array, surface-to-user channel.
    G : (N, M) complex array, base-station-to-surface channel.

    Returns
    -------
    (N, M) complex array.
    """
    f = np.asarray(f, dtype=np.complex128)
    G = np.asarray(G, dtype=np.complex128)
    if f.ndim != 1 or G.ndim != 2 or G.shape[0] != f.shape[0]:
        raise ValueError(f"incompatible shapes f {f.shape}, G {G.shape}")
    return np.conj(f)[:, None] * G


def effective_channel(v, phi, h):
    """Combined direct-plus-reflected channel phi^H v + h seen at one user."""
    v = np.asarray(v.values if isinstance(v, ReflectVector) else v, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if phi.shape != (v.shape[0], h.shape[0]):
        raise ValueError(f"incompatible shapes v {v.shape}, phi {phi.shape}, h {h.shape}")
    if v.shape[0] == 0:
        return h.copy()
    return phi.conj().T @ v + h


def effective_channels_all(v, channels):
    """All effective channels a[i, k] = phi_{i,k}^H v + h_{i,k}, stacked (K, K, M)."""
    K = channels.num_cells
    M = channels.num_antennas
    vv = v.values if isinstance(v, ReflectVector) else np.asarray(v, dtype=np.complex128)
    if vv.shape[0] != channels.num_reflect:
        raise ValueError("reflect vector length does not match channels")
    a = np.empty((K, K, M), dtype=np.complex128)
    for i in range(K):
        for k in range(K):
            phi = reflect_channel(channels.irs_to_user[i], channels.bs_to_irs[k])
            a[i, k] = effective_channel(vv, phi, channels.bs_to_user[i, k])
    return a


def quadratic_data(channels, w):
    """Quadratic-form data of every (user, base station) pair for fixed beamformers."""
    K = channels.num_cells
    N = channels.num_reflect
    wv = w.vectors if isinstance(w, TransmitBeamformers) else np.asarray(w, dtype=np.complex128)
    if wv.shape != (K, channels.num_antennas):
        raise ValueError("beamformers do not match channel dimensions")
    c = np.empty((K, K, N), dtype=np.complex128)
    d = np.empty((K, K), dtype=np.complex128)
    C = np.empty((K, K, N, N), dtype=np.complex128)
    u = np.empty((K, K, N), dtype=np.complex128)
    for i in range(K):
        for k in range(K):
            phi = reflect_channel(channels.irs_to_user[i], channels.bs_to_irs[k])
            cik = phi @ wv[k]
            dik = np.vdot(channels.bs_to_user[i, k], wv[k])
            c[i, k] = cik
            d[i, k] = dik
            C[i, k] = np.outer(cik, cik.conj())
            u[i, k] = cik * np.conj(dik)
    return QuadraticData(c=c, d=d, C=C, u=u)


def sinr_from_quadratic(v, data, config):
    """Per-user SINR evaluated through the quadratic-form data |v^H c + d|^2.

    Equal to sinr() at the beamformers the data was built from; the two code
    paths share no arithmetic.
    """
    K = config.num_cells
    vv = np.asarray(v.values if isinstance(v, ReflectVector) else v, dtype=np.complex128)
    gains = np.abs(np.einsum("n,ikn->ik", vv.conj(), data.c) + data.d) ** 2
    out = np.empty(K)
    for i in range(K):
        interf = gains[i].sum() - gains[i, i]
        out[i] = gains[i, i] / (interf + config.noise_power[i])
    return out


def min_weighted_sinr_from_quadratic(v, data, config):
    return float(np.min(sinr_from_quadratic(v, data, config) / config.weight))


def sinr(v, w, channels, config):
    """Per-user SINR under beamformers w and reflection coefficients v."""
    K = config.num_cells
    a = effective_channels_all(v, channels)
    wv = w.vectors if isinstance(w, TransmitBeamformers) else np.asarray(w, dtype=np.complex128)
    # gains[i, k] = |a_{i,k}^H w_k|^2
    gains = np.abs(np.einsum("ikm,km->ik", a.conj(), wv)) ** 2
    out = np.empty(K)
    for i in range(K):
        interf = gains[i].sum() - gains[i, i]
        out[i] = gains[i, i] / (interf + config.noise_power[i])
    return out


def min_weighted_sinr(v, w, channels, config):
    """min_i sinr_i / weight_i, the max-min objective value."""
    return float(np.min(sinr(v, w, channels, config) / config.weight))
