"""Max-min SINR beamforming for a multi-cell downlink aided by a reflecting surface.

Joint alternating optimization of per-base-station transmit beamformers and the
surface's reflection coefficients, with a semidefinite-relaxation route and a
successive-convex-approximation route for the reflect update, plus the
benchmark schemes and scenario generation used in the experiments.
"""

from .model import (
    ChannelSet,
    QuadraticData,
    ReflectVector,
    SystemConfig,
    TransmitBeamformers,
    effective_channel,
    effective_channels_all,
    min_weighted_sinr,
    quadratic_data,
    reflect_channel,
    sinr,
)
from .scenario import (
    Geometry,
    PathLossModel,
    ScenarioSpec,
    generate_channels,
    paper_default_scenario,
    path_loss_linear,
)

__version__ = "0.1.0"
