"""CSI to autoencoder features: scaling, angular-domain DFT, magnitude."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SCALING_MODES = ("unit_norm", "standardize")


class FeatureError(ValueError):
    pass


@dataclass
class FeatureSet:
    entries: np.ndarray  # (N, D) float64
    scaling_mode: str = "unit_norm"
    # per-dimension statistics, populated only for "standardize"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.entries.shape[1]

    def __len__(self) -> int:
        return len(self.entries)


def angular_transform(h: np.ndarray) -> np.ndarray:
    """Unitary DFT across the antenna axis (last axis).

    Uses the ``exp(+2j*pi*k*m/M)`` kernel so that a half-wavelength steering
    vector with ``sin_angle = 2k/M`` lands in bin ``k``.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] < 1:
        raise FeatureError("need at least one antenna")
    return np.fft.ifft(h, axis=-1, norm="ortho")


def extract_features(csi: np.ndarray, scaling_mode: str = "unit_norm") -> FeatureSet:
    """Per row: scale to unit norm, go to the angular domain, take magnitudes.

    ``scaling_mode="standardize"`` additionally standardizes each feature
    dimension to zero mean and unit variance over the whole set (the
    statistics are kept on the returned ``FeatureSet``). Entries are then
    no longer nonnegative.
    """
    if scaling_mode not in SCALING_MODES:
        raise FeatureError(f"unknown scaling mode {scaling_mode!r}")
    csi = np.asarray(csi, dtype=complex)
    if csi.ndim != 2:
        raise FeatureError("CSI must be an (N, M) matrix")
    if not np.all(np.isfinite(csi)):
        raise FeatureError("CSI contains NaN or Inf")
    norms = np.linalg.norm(csi, axis=1)
    if np.any(norms == 0):
        bad = int(np.flatnonzero(norms == 0)[0])
        raise FeatureError(f"row {bad} is all zero and cannot be normalized")

    x = np.abs(angular_transform(csi / norms[:, None]))
    if scaling_mode == "unit_norm":
        return FeatureSet(entries=x, scaling_mode=scaling_mode)

    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return FeatureSet(entries=(x - mean) / std, scaling_mode=scaling_mode, mean=mean, std=std)
