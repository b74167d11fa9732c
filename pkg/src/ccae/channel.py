"""Geometric multipath CSI over a uniform linear array.

The array lies along the x axis at the base-station position, so the
direction cosine of an arrival is ``(p_x - bs_x) / |p - bs|`` and broadside
is the y-z plane. A path of total length ``L`` has amplitude ``L**-exponent``
and carrier phase ``exp(-2j*pi*L/wavelength)``. Each scatterer adds one
single-bounce path with a static random reflection phase; scatterers are
drawn once and shared by every user.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import UePlacement

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE = 0.1  # meters

SCATTERER_STREAM = 3
NOISE_STREAM = 4


class ChannelError(ValueError):
    pass


@dataclass
class ArrayGeometry:
    num_antennas: int = 32
    element_spacing: float = 0.5  # wavelengths
    carrier_frequency: float = 2.0e9

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def validate(self) -> None:
        if self.num_antennas < 1:
            raise ChannelError("num_antennas must be >= 1")
        if self.element_spacing <= 0:
            raise ChannelError("element_spacing must be positive")


@dataclass
class ChannelConfig:
    mode: str = "los"  # "los" or "nlos"
    num_scatterers: int = 10
    # scatterer bounds; None falls back to the scenario area
    scatterer_x_min: float | None = None
    scatterer_x_max: float | None = None
    scatterer_y_min: float | None = None
    scatterer_y_max: float | None = None
    scatterer_height: float = 5.0
    path_loss_exponent: float = 2.0
    snr_db: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in ("los", "nlos"):
            raise ChannelError(f"unknown channel mode {self.mode!r}")
        if self.mode == "nlos" and self.num_scatterers < 1:
            raise ChannelError("NLoS needs at least one scatterer")
        if self.num_scatterers < 0:
            raise ChannelError("num_scatterers must be >= 0")
        if np.isnan(self.snr_db) or self.snr_db == -np.inf:
            raise ChannelError("snr_db must be finite or +inf")


def steering_vector(sin_angle, geometry: ArrayGeometry) -> np.ndarray:
    """ULA response ``exp(-2j*pi*spacing*m*sin_angle)`` for m = 0..M-1.

    ``sin_angle`` may be an array; the antenna axis is appended last.
    """
    s = np.asarray(sin_angle, dtype=float)
    if np.any(np.abs(s) > 1.0):
        raise ChannelError("|sin_angle| must not exceed 1")
    m = np.arange(geometry.num_antennas)
    return np.exp(-2j * np.pi * geometry.element_spacing * s[..., None] * m)


def draw_scatterers(config: ChannelConfig, bounds: tuple[float, float, float, float]):
    """Return static scatterer positions ``(P, 3)`` and reflection phases ``(P,)``."""
    x0, x1, y0, y1 = bounds
    x0 = x0 if config.scatterer_x_min is None else config.scatterer_x_min
    x1 = x1 if config.scatterer_x_max is None else config.scatterer_x_max
    y0 = y0 if config.scatterer_y_min is None else config.scatterer_y_min
    y1 = y1 if config.scatterer_y_max is None else config.scatterer_y_max
    rng = np.random.default_rng([config.seed, SCATTERER_STREAM])
    p = config.num_scatterers
    xs = rng.uniform(x0, x1, size=p)
    ys = rng.uniform(y0, y1, size=p)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=p)
    pos = np.column_stack([xs, ys, np.full(p, config.scatterer_height)])
    return pos, phases


def synthesize_csi(
    placement: UePlacement,
    geometry: ArrayGeometry,
    config: ChannelConfig,
    bs_position=(0.0, 0.0, 10.0),
    scatterers: tuple[np.ndarray, np.ndarray] | None = None,
    area: tuple[float, float, float, float] | None = None,
) -> np.ndarray:
    """Noise-free CSI matrix ``(N, M)`` complex128.

    ``scatterers`` overrides the random draw (positions, phases); otherwise
    they are drawn within the scatterer bounds, defaulting to ``area`` or
    the bounding box of the users.
    """
    geometry.validate()
    config.validate()
    bs = np.asarray(bs_position, dtype=float)
    users = np.asarray(placement.positions, dtype=float)
    lam = geometry.wavelength
    n_exp = config.path_loss_exponent

    if scatterers is None:
        if area is None:
            area = (users[:, 0].min(), users[:, 0].max(), users[:, 1].min(), users[:, 1].max())
        scatterers = draw_scatterers(config, area) if config.num_scatterers else (np.zeros((0, 3)), np.zeros(0))
    sc_pos, sc_phase = scatterers

    d_direct = np.linalg.norm(users - bs, axis=1)
    if np.any(d_direct < MIN_DISTANCE):
        raise ChannelError("user collocated with the base station")

    h = np.zeros((len(users), geometry.num_antennas), dtype=complex)
    if config.mode == "los":
        gain = d_direct ** (-n_exp) * np.exp(-2j * np.pi * d_direct / lam)
        sin_direct = np.clip((users[:, 0] - bs[0]) / d_direct, -1.0, 1.0)
        h += gain[:, None] * steering_vector(sin_direct, geometry)

    for pos, phase in zip(sc_pos, sc_phase):
        d_bs = np.linalg.norm(pos - bs)
        d_ue = np.linalg.norm(users - pos, axis=1)
        if d_bs < MIN_DISTANCE or np.any(d_ue < MIN_DISTANCE):
            raise ChannelError("user or base station collocated with a scatterer")
        length = d_bs + d_ue
        gain = length ** (-n_exp) * np.exp(1j * phase - 2j * np.pi * length / lam)
        a = steering_vector(np.clip((pos[0] - bs[0]) / d_bs, -1.0, 1.0), geometry)
        h += gain[:, None] * a[None, :]
    return h


def add_noise(csi: np.ndarray, snr_db: float, seed: int) -> np.ndarray:
    """Add circular complex Gaussian noise at a per-row SNR.

    Row ``n`` uses its own stream ``default_rng([seed, NOISE_STREAM, n])`` so
    the result does not depend on evaluation order.
    """
    csi = np.asarray(csi)
    if snr_db == np.inf:
        return csi.copy()
    if not np.isfinite(snr_db):
        raise ChannelError("snr_db must be finite or +inf")
    n, m = csi.shape
    var = np.sum(np.abs(csi) ** 2, axis=1) / (m * 10.0 ** (snr_db / 10.0))
    noise = np.empty_like(csi, dtype=complex)
    for row in range(n):
        rng = np.random.default_rng([seed, NOISE_STREAM, row])
        z = rng.standard_normal((2, m))
        noise[row] = np.sqrt(var[row] / 2.0) * (z[0] + 1j * z[1])
    return csi + noise
