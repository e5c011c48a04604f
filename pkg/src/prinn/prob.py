"""Normal distributions, affine pushforward, mode-normalised likelihood and
seeded Box-Muller sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

__all__ = [
    "Normal",
    "DegeneratePushforward",
    "pdf",
    "pushforward",
    "normalized_likelihood",
    "affine_likelihood",
    "sample",
    "NormalSampler",
]


class DegeneratePushforward(ValueError):
    """Zero slope: the image of the distribution is a point mass at ``offset``."""

    def __init__(self, offset: float):
        super().__init__(f"zero slope collapses the distribution to a point mass at {offset!r}")
        self.offset = offset


@dataclass(frozen=True)
class Normal:
    mean: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.mean) and np.isfinite(self.variance)):
            raise ValueError("normal parameters must be finite")
        if self.variance <= 0:
            raise ValueError(f"variance must be positive, got {self.variance!r}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def pdf(d: Normal, x):
    z = x - d.mean
    return (1.0 / math.sqrt(2.0 * math.pi * d.variance)) * ad.exp(-(z * z) * (0.5 / d.variance))


def pushforward(base: Normal, offset: float, slope: float) -> Normal:
    """Distribution of ``offset + slope * theta`` for ``theta ~ base``."""
    if slope == 0:
        raise DegeneratePushforward(offset)
    return Normal(offset + slope * base.mean, slope * slope * base.variance)


def normalized_likelihood(d: Normal, x):
    """``pdf(d, x) / pdf(d, mean)``: 1 at the mean, in (0, 1] elsewhere."""
    z = x - d.mean
    return ad.exp(-(z * z) * (0.5 / d.variance))


def affine_likelihood(base: Normal, offset, slope, at=0.0):
    """Normalised likelihood of ``at`` under the pushforward of ``base``.

    Works elementwise on arrays and Vars (offset and slope may be
    differentiable). Where the slope is exactly zero the pushforward is a
    point mass, so the likelihood is 1 if ``offset == at`` and 0 otherwise.
    """
    s = ad.value_of(slope)
    o = ad.value_of(offset)
    degenerate = s == 0
    if not np.any(degenerate):
        z = at - (offset + slope * base.mean)
        return ad.exp(-(z * z) / (2.0 * base.variance * (slope * slope)))
    point_mass = (degenerate & (o == at)).astype(float)
    # substitute a harmless slope at degenerate points and mask them out
    safe_slope = slope + degenerate.astype(float)
    z = at - (offset + safe_slope * base.mean)
    regular = ad.exp(-(z * z) / (2.0 * base.variance * (safe_slope * safe_slope)))
    return regular * (1.0 - degenerate.astype(float)) + point_mass


class NormalSampler:
    """Seeded normal generator (Box-Muller over a PCG64 uniform stream).

    One instance per worker; instances are never shared.
    """

    def __init__(self, seed: int):
        self._uniform = np.random.Generator(np.random.PCG64(seed))

    def standard(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("need at least one sample")
        m = (n + 1) // 2
        u1 = 1.0 - self._uniform.random(m)  # (0, 1]: keeps log finite
        u2 = self._uniform.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        return z[:n]

    def normal(self, d: Normal, n: int) -> np.ndarray:
        return d.mean + d.std * self.standard(n)


def sample(d: Normal, seed: int, n: int) -> np.ndarray:
    return NormalSampler(seed).normal(d, n)
