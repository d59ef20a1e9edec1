"""Sensitivity parameters and the algebra connecting the models.

A treatment pair (lambda1, lambda2) bounds the density ratio of the latent
confounder between arms; an outcome pair (gamma1, gamma2) bounds the ratio
of the potential-outcome law given the confounder to its observed-arm law.
Both are boxes around 1. Together they imply a single box on the outcome
density ratio, which is what the bound formulas consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import WeightedDistribution, quantile_check_loss
from .errors import (
    InvalidPair,
    TauBelowHalf,
    UnboundedGamma,
    UnboundedGammaWithNonzeroGamma1,
    ValidationError,
)

UNBOUNDED = math.inf


@dataclass(frozen=True)
class LambdaPair:
    lambda1: float
    lambda2: float

    def __post_init__(self):
        l1, l2 = float(self.lambda1), float(self.lambda2)
        if not (0.0 <= l1 <= 1.0 <= l2 < math.inf):
            raise InvalidPair(f"need 0 <= lambda1 <= 1 <= lambda2 < inf, got ({l1}, {l2})")
        object.__setattr__(self, "lambda1", l1)
        object.__setattr__(self, "lambda2", l2)

    @classmethod
    def symmetric(cls, lam: float) -> LambdaPair:
        if not lam >= 1.0:
            raise InvalidPair(f"lambda must be ≥ 1 for symmetric specification (got {lam})")
        return cls(1.0 / lam, lam)

    @property
    def width(self) -> float:
        return self.lambda2 - self.lambda1

    def to_list(self) -> list:
        return [self.lambda1, self.lambda2]


@dataclass(frozen=True)
class GammaPair:
    """Outcome pair; ``gamma2 = inf`` marks an unbounded upper ratio."""

    gamma1: float
    gamma2: float

    def __post_init__(self):
        g1, g2 = float(self.gamma1), float(self.gamma2)
        if not (0.0 <= g1 <= 1.0 <= g2):
            raise InvalidPair(f"need 0 <= gamma1 <= 1 <= gamma2, got ({g1}, {g2})")
        object.__setattr__(self, "gamma1", g1)
        object.__setattr__(self, "gamma2", g2)

    @classmethod
    def symmetric(cls, gam: float) -> GammaPair:
        if gam == math.inf:
            return cls.uninformative()
        if not gam >= 1.0:
            raise InvalidPair(f"gamma must be ≥ 1 for symmetric specification (got {gam})")
        return cls(1.0 / gam, gam)

    @classmethod
    def uninformative(cls) -> GammaPair:
        return cls(0.0, UNBOUNDED)

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.gamma2)

    @property
    def uninformative_pair(self) -> bool:
        return self.unbounded and self.gamma1 == 0.0

    def as_lambda(self) -> LambdaPair:
        return LambdaPair(self.gamma1, self.gamma2)

    def to_list(self) -> list:
        return [self.gamma1, "inf" if self.unbounded else self.gamma2]


@dataclass(frozen=True)
class ImpliedLambda:
    """Density-ratio box implied jointly by the treatment and outcome pairs.

    ``lambda_bar2`` can be infinite only on the control side when
    ``lambda1 = 0`` and the outcome pair is uninformative.
    """

    lambda_bar1: float
    lambda_bar2: float
    tau_bar: float

    @property
    def width(self) -> float:
        return self.lambda_bar2 - self.lambda_bar1


@dataclass(frozen=True)
class EmsmDeltaSpec:
    delta: float

    def __post_init__(self):
        if not 0.0 <= float(self.delta) <= 1.0:
            raise ValidationError(f"delta must lie in [0, 1], got {self.delta}")
        object.__setattr__(self, "delta", float(self.delta))


def _tau(a1: float, a2: float) -> float:
    if a1 == a2:
        # only reachable with a1 = a2 = 1
        return 0.5
    if math.isinf(a2):
        return 1.0
    return (a2 - 1.0) / (a2 - a1)


def tau_level(lam) -> float:
    """Quantile level (lambda2 - 1)/(lambda2 - lambda1); 1/2 for the trivial pair.

    Also accepts a :class:`GammaPair` (giving the outcome-side level).
    """
    if isinstance(lam, GammaPair):
        if lam.unbounded:
            raise UnboundedGamma("tau level of an unbounded gamma pair is undefined")
        return _tau(lam.gamma1, lam.gamma2)
    return _tau(lam.lambda1, lam.lambda2)


def odds(c: float) -> float:
    return c / (1.0 - c)


def _safe_mul(a: float, b: float) -> float:
    # 0 * inf arises only as a limit in which the finite factor is exactly 0
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def _implied_box(a1: float, a2: float, g1: float, g2: float) -> ImpliedLambda:
    if math.isinf(a2) or math.isinf(g2):
        # product form; the quantile-level form has inf/inf terms here
        lb1 = 1.0 - min(_safe_mul(1.0 - a1, 1.0 - g1), _safe_mul(a2 - 1.0, g2 - 1.0))
        lb2 = 1.0 + min(_safe_mul(1.0 - a1, g2 - 1.0), _safe_mul(a2 - 1.0, 1.0 - g1))
    else:
        t, tg = _tau(a1, a2), _tau(g1, g2)
        scale = (a2 - a1) * (g2 - g1)
        lb1 = 1.0 - scale * min((1.0 - t) * (1.0 - tg), t * tg)
        lb2 = 1.0 + scale * min((1.0 - t) * tg, t * (1.0 - tg))
    return ImpliedLambda(lb1, lb2, _tau(lb1, lb2))


def _resolve(a1: float, a2: float, gam: GammaPair) -> ImpliedLambda:
    if gam.unbounded:
        if gam.gamma1 != 0.0:
            raise UnboundedGammaWithNonzeroGamma1(
                "an unbounded gamma2 is only defined together with gamma1 = 0")
        return ImpliedLambda(a1, a2, _tau(a1, a2))
    return _implied_box(a1, a2, gam.gamma1, gam.gamma2)


def implied_lambda(lam: LambdaPair, gam: GammaPair) -> ImpliedLambda:
    """Implied box for the treated-arm outcome ratio."""
    return _resolve(lam.lambda1, lam.lambda2, gam)


def control_pair(lam: LambdaPair) -> tuple[float, float]:
    """Treatment pair seen from the control arm: (1/lambda2, 1/lambda1)."""
    inv1 = math.inf if lam.lambda1 == 0.0 else 1.0 / lam.lambda1
    return 1.0 / lam.lambda2, inv1


def tau_level_control(lam: LambdaPair) -> float:
    return _tau(*control_pair(lam))


def implied_lambda_control(lam: LambdaPair, gam_prime: GammaPair) -> ImpliedLambda:
    """Implied box for the control-arm outcome ratio.

    Equivalent to :func:`implied_lambda` after relabelling the arms, which
    turns (lambda1, lambda2) into (1/lambda2, 1/lambda1).
    """
    return _resolve(*control_pair(lam), gam_prime)


def implied_emsm_deltas(gam: GammaPair, d: WeightedDistribution) -> tuple[float, float]:
    """Mean-shift parameters implied by an outcome density-ratio pair."""
    if gam.unbounded:
        raise UnboundedGamma("implied deltas need a bounded gamma2")
    tg = tau_level(gam)
    w = gam.gamma2 - gam.gamma1
    return w * quantile_check_loss(d, 1.0 - tg), w * quantile_check_loss(d, tg)


def emsm_recommended_deltas(spec, lam: LambdaPair, d: WeightedDistribution) -> tuple[float, float]:
    """Recommended mean-shift parameters indexed by a single delta in [0, 1]."""
    delta = spec.delta if isinstance(spec, EmsmDeltaSpec) else EmsmDeltaSpec(spec).delta
    t = tau_level(lam)
    m = max(1.0 - t, t)
    if delta == 0.0:
        return 0.0, 0.0
    if m == 1.0:
        # limit of E rho_m / (1 - m) as m -> 1 on a discrete law
        mu = float(d.probs @ d.support)
        return delta * (mu - d.support[0]), delta * (d.support[-1] - mu)
    c = delta / (1.0 - m)
    return c * quantile_check_loss(d, 1.0 - m), c * quantile_check_loss(d, m)


def matching_gammas(delta: float, tau: float) -> GammaPair:
    """Smallest-gamma2 outcome pair whose deMSM bounds reproduce eMSM(delta)."""
    delta = EmsmDeltaSpec(delta).delta
    if not 0.5 <= tau < 1.0:
        raise TauBelowHalf(f"matching needs tau in [1/2, 1), got {tau}")
    return GammaPair(1.0 - delta, 1.0 + delta * odds(tau))


def symmetric_matching_feasible(delta: float, tau: float) -> bool:
    """Whether gamma1 = 1/gamma2 = 1 - delta also reproduces eMSM(delta)."""
    return tau > 0 and delta >= (2.0 * tau - 1.0) / tau


def emsm_implied_lambdas(delta: float, lam: LambdaPair) -> LambdaPair:
    delta = EmsmDeltaSpec(delta).delta
    return LambdaPair(1.0 - delta * (1.0 - lam.lambda1), 1.0 + delta * (lam.lambda2 - 1.0))
