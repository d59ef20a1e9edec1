"""Finite weighted outcome distributions with quantile and check-loss primitives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .errors import EmptyInput, GammaOutOfRange, NegativeWeight, ZeroTotalWeight

PROB_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedDistribution:
    """Discrete law on a strictly increasing support.

    Build instances with :func:`make_weighted_dist` or :meth:`from_arrays`;
    the raw constructor trusts its input.
    """

    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", _frozen(self.support))
        object.__setattr__(self, "probs", _frozen(self.probs))

    @classmethod
    def from_arrays(cls, values, weights) -> WeightedDistribution:
        values = np.asarray(values, dtype=np.float64).ravel()
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if values.size == 0:
            raise EmptyInput("at least one (value, weight) pair is required")
        if values.shape != weights.shape:
            raise ValueError("values and weights must have the same length")
        if not np.all(np.isfinite(values)):
            raise ValueError("support values must be finite")
        if np.any(weights < 0):
            raise NegativeWeight("weights must be nonnegative")
        total = weights.sum()
        if not total > 0:
            raise ZeroTotalWeight("total weight must be positive")
        support, inverse = np.unique(values, return_inverse=True)
        merged = np.bincount(inverse, weights=weights, minlength=support.size)
        probs = merged / merged.sum()
        # tiny weights can underflow to zero on normalization, so filter afterwards
        keep = probs > 0
        support, probs = support[keep], probs[keep]
        return cls(support, probs / probs.sum())

    def __len__(self) -> int:
        return self.support.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedDistribution):
            return NotImplemented
        return (np.array_equal(self.support, other.support)
                and np.array_equal(self.probs, other.probs))

    def __hash__(self):
        return hash((self.support.tobytes(), self.probs.tobytes()))

    def __repr__(self) -> str:
        pts = ", ".join(f"{y:g}: {p:.6g}" for y, p in zip(self.support, self.probs))
        return f"WeightedDistribution({{{pts}}})"

    def cdf(self, y: float) -> float:
        return float(self.probs[self.support <= y].sum())

    def prob_at(self, y: float) -> float:
        i = np.searchsorted(self.support, y)
        if i < self.support.size and self.support[i] == y:
            return float(self.probs[i])
        return 0.0

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> WeightedDistribution:
        return cls.from_arrays(data["support"], data["probs"])


def make_weighted_dist(pairs: Iterable[tuple[float, float]]) -> WeightedDistribution:
    """Normalize (value, weight) pairs into a canonical distribution.

    Duplicate values are merged and zero-weight points dropped.
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("at least one (value, weight) pair is required")
    values, weights = zip(*pairs)
    return WeightedDistribution.from_arrays(values, weights)


def point_mass(c: float) -> WeightedDistribution:
    return WeightedDistribution(np.array([float(c)]), np.array([1.0]))


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise GammaOutOfRange(f"gamma must lie in (0, 1), got {gamma}")


def quantile(d: WeightedDistribution, gamma: float) -> float:
    """Smallest support value whose CDF reaches ``gamma``."""
    _check_gamma(gamma)
    return float(d.support[kernels.quantile_index(d.probs, gamma)])


def check_loss_expectation(d: WeightedDistribution, gamma: float, q: float) -> float:
    """E[gamma (Y-q)^+ + (1-gamma) (q-Y)^+] under ``d``."""
    _check_gamma(gamma)
    return float(kernels.check_loss(d.support, d.probs, gamma, float(q)))


def mean(d: WeightedDistribution) -> float:
    return float(d.probs @ d.support)


def quantile_check_loss(d: WeightedDistribution, gamma: float) -> float:
    """Expected check loss at the ``gamma``-quantile.

    Accepts the closed interval [0, 1]; the endpoints give zero, which is the
    limit the bound formulas need when a quantile level degenerates.
    """
    if not 0.0 <= gamma <= 1.0:
        raise GammaOutOfRange(f"gamma must lie in [0, 1], got {gamma}")
    if gamma == 0.0 or gamma == 1.0:
        return 0.0
    return float(kernels.check_loss_at_quantile(d.support, d.probs, gamma)[1])
