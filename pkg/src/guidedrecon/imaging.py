"""Image-domain operators for magnification.

Sampling averages ``r x r`` blocks; its adjoint-style partner replicates each
low-resolution pixel over its block, so ``S = upsample . downsample`` replaces
every block by its mean and is an orthogonal projector. The guiding subspace
holds images whose orthonormal 2D DCT-II vanishes outside the top-left
``k x k`` coefficient block.

Pixels live on the [0, 1] scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import ConfigurationError, DimensionError
from .reconstruction import SubspaceBasis
from .signal import LinearOperator

__all__ = [
    "BlockSamplingScheme",
    "DctGuidingScheme",
    "NoiseModel",
    "PSNR_CAP",
    "downsample",
    "upsample",
    "make_sampling_projector",
    "dct2",
    "idct2",
    "make_guiding_projector",
    "make_guiding_basis",
    "add_noise",
    "psnr",
    "k_scale",
    "synthetic_image",
]

PSNR_CAP = 99.0


@dataclass(frozen=True)
class BlockSamplingScheme:
    w: int
    r: int

    def __post_init__(self):
        if self.w < 1 or self.r < 1:
            raise ConfigurationError("image side and factor must be positive")
        if self.w % self.r:
            raise ConfigurationError(f"image side {self.w} is not divisible by factor {self.r}")

    @property
    def low_side(self) -> int:
        return self.w // self.r

    @property
    def dim(self) -> int:
        return self.low_side ** 2


@dataclass(frozen=True)
class DctGuidingScheme:
    w: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.w:
            raise ConfigurationError(f"band k={self.k} must lie in [1, {self.w}]")

    @property
    def dim(self) -> int:
        return self.k ** 2

    def k_scale(self, sampling: BlockSamplingScheme) -> float:
        return k_scale(sampling.w, sampling.r, self.k)


@dataclass(frozen=True)
class NoiseModel:
    variance: float
    seed: int

    def __post_init__(self):
        if not self.variance >= 0:
            raise ConfigurationError("noise variance must be nonnegative")


def k_scale(w: int, r: int, k: int) -> float:
    return (w / r) / k


def _as_square(f, side: int, what: str) -> np.ndarray:
    a = np.asarray(f, dtype=np.float64)
    if a.ndim == 1 and a.size == side * side:
        a = a.reshape(side, side)
    if a.shape != (side, side):
        raise ConfigurationError(f"{what} must be {side}x{side}, got shape {a.shape}")
    return a


def downsample(f, scheme: BlockSamplingScheme) -> np.ndarray:
    """Average each ``r x r`` block; returns a ``(w/r) x (w/r)`` image."""
    a = _as_square(f, scheme.w, "image")
    m, r = scheme.low_side, scheme.r
    return a.reshape(m, r, m, r).mean(axis=(1, 3))


def upsample(f_d, scheme: BlockSamplingScheme) -> np.ndarray:
    """Copy each low-resolution pixel into an ``r x r`` block."""
    a = _as_square(f_d, scheme.low_side, "low-resolution image")
    return np.repeat(np.repeat(a, scheme.r, axis=0), scheme.r, axis=1)


def make_sampling_projector(scheme: BlockSamplingScheme) -> LinearOperator:
    def apply(x):
        return upsample(downsample(x, scheme), scheme).reshape(-1)

    return LinearOperator(apply, scheme.w ** 2, "S")


def dct2(f) -> np.ndarray:
    """Orthonormal separable 2D DCT-II of a square image."""
    a = np.asarray(f, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError(f"dct2 needs a square image, got shape {a.shape}")
    return fft.dctn(a, type=2, norm="ortho")


def idct2(c) -> np.ndarray:
    a = np.asarray(c, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError(f"idct2 needs a square array, got shape {a.shape}")
    return fft.idctn(a, type=2, norm="ortho")


def make_guiding_projector(scheme: DctGuidingScheme) -> LinearOperator:
    w, k = scheme.w, scheme.k

    def apply(x):
        c = dct2(x.reshape(w, w))
        c[k:, :] = 0.0
        c[:, k:] = 0.0
        return idct2(c).reshape(-1)

    return LinearOperator(apply, w * w, "T")


def make_guiding_basis(scheme: DctGuidingScheme) -> SubspaceBasis:
    """Coefficient coordinates of the low-pass subspace (the retained ``k x k`` DCT block)."""
    w, k = scheme.w, scheme.k

    def analysis(x):
        return dct2(np.asarray(x).reshape(w, w))[:k, :k].reshape(-1)

    def synthesis(y):
        c = np.zeros((w, w))
        c[:k, :k] = np.asarray(y).reshape(k, k)
        return idct2(c).reshape(-1)

    return SubspaceBasis(analysis, synthesis, k * k)


def add_noise(f_d, model: NoiseModel) -> np.ndarray:
    """Add i.i.d. zero-mean Gaussian noise drawn from ``model.seed``."""
    a = np.asarray(f_d, dtype=np.float64)
    if model.variance == 0:
        return a.copy()
    rng = np.random.default_rng(model.seed)
    return a + rng.normal(0.0, math.sqrt(model.variance), size=a.shape)


def psnr(reference, estimate, cap: float = PSNR_CAP) -> float:
    """``20 log10(1 / RMSE)`` for [0, 1]-scaled images, capped at ``cap`` dB."""
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.size != est.size or (ref.ndim == est.ndim and ref.shape != est.shape):
        raise DimensionError(f"shape mismatch: {ref.shape} vs {est.shape}")
    rmse = float(np.sqrt(np.mean((ref.reshape(-1) - est.reshape(-1)) ** 2)))
    if rmse == 0.0:
        return cap
    return min(cap, 20.0 * math.log10(1.0 / rmse))


def synthetic_image(w: int = 128, seed: int = 0, bumps: int = 80) -> np.ndarray:
    """Deterministic test image: a seeded mixture of Gaussian bumps scaled to [0.1, 0.9].

    Bump widths run from about one to eight pixels at ``w = 128``, so the
    image has detail above the low-resolution band without sharp edges.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:w, 0:w] / w
    img = np.zeros((w, w))
    for _ in range(bumps):
        cy, cx = rng.uniform(0.05, 0.95, size=2)
        sy, sx = rng.uniform(0.008, 0.06, size=2)
        amp = rng.uniform(-1.0, 1.0)
        img += amp * np.exp(-((yy - cy) ** 2 / (2 * sy * sy) + (xx - cx) ** 2 / (2 * sx * sx)))
    img -= img.min()
    img /= img.max()
    return 0.1 + 0.8 * img
