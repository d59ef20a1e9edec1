"""Closed-form sharp bounds for the causal means and their contrast.

Per stratum, the unobserved-arm mean (``nu1 = E(Y1 | T=0)``,
``nu0 = E(Y0 | T=1)``) is bounded by reweighting the observed-arm outcome
law with a density ratio confined to a box; the optimum is the observed
mean shifted by box width times an expected check loss at the quantile
where the optimal ratio switches from the lower to the upper endpoint.
The population means mix observed and bounded parts with the propensity.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .dist import WeightedDistribution, mean, quantile_check_loss
from .errors import (
    EmptyGrid,
    MissingStratumDistribution,
    TauBelowHalf,
    UnboundedGamma,
    ValidationError,
)
from .params import (
    EmsmDeltaSpec,
    GammaPair,
    LambdaPair,
    _tau,
    control_pair,
    emsm_implied_lambdas,
    implied_lambda,
    implied_lambda_control,
    tau_level,
)

WEIGHT_TOL = 1e-12


class Model(str, enum.Enum):
    MSM = "msm"
    DEMSM = "demsm"
    EMSM = "emsm"


# ---------------------------------------------------------------------------
# single-arm bounds


def box_bounds(d: WeightedDistribution, a1: float, a2: float) -> tuple[float, float]:
    """Sharp range of E[r(Y) Y] over ratios r in [a1, a2] with E[r(Y)] = 1."""
    mu = mean(d)
    if math.isinf(a2):
        # limit tau -> 1: all free mass goes to the extreme support points
        return (mu - (1.0 - a1) * (mu - d.support[0]),
                mu + (1.0 - a1) * (d.support[-1] - mu))
    t = _tau(a1, a2)
    w = a2 - a1
    return mu - w * quantile_check_loss(d, 1.0 - t), mu + w * quantile_check_loss(d, t)


def msm_nu1_bounds(d: WeightedDistribution, lam: LambdaPair) -> tuple[float, float]:
    return box_bounds(d, lam.lambda1, lam.lambda2)


def msm_nu0_bounds(d0: WeightedDistribution, lam: LambdaPair) -> tuple[float, float]:
    return box_bounds(d0, *control_pair(lam))


def demsm_nu1_bounds(d: WeightedDistribution, lam: LambdaPair, gam: GammaPair) -> tuple[float, float]:
    imp = implied_lambda(lam, gam)
    return box_bounds(d, imp.lambda_bar1, imp.lambda_bar2)


def demsm_nu0_bounds(d0: WeightedDistribution, lam: LambdaPair,
                     gam_prime: GammaPair) -> tuple[float, float]:
    imp = implied_lambda_control(lam, gam_prime)
    return box_bounds(d0, imp.lambda_bar1, imp.lambda_bar2)


def demsm_nu1_upper_minform(d: WeightedDistribution, lam: LambdaPair, gam: GammaPair) -> float:
    """Upper bound written directly in both pairs; symmetric under swapping them."""
    if gam.unbounded:
        raise UnboundedGamma("the min-form needs a bounded gamma2")
    t, tg = tau_level(lam), tau_level(gam)
    scale = lam.width * (gam.gamma2 - gam.gamma1)
    terms = (
        tg * quantile_check_loss(d, 1.0 - t),
        (1.0 - tg) * quantile_check_loss(d, t),
        t * quantile_check_loss(d, 1.0 - tg),
        (1.0 - t) * quantile_check_loss(d, tg),
    )
    return mean(d) + scale * min(terms)


def _emsm_box(a1: float, a2: float, delta: float) -> tuple[float, float]:
    t = _tau(a1, a2)
    if t < 0.5:
        raise TauBelowHalf(f"the recommended eMSM specification needs tau >= 1/2, got {t}")
    return 1.0 - delta * (1.0 - a1), 1.0 + delta * (a2 - 1.0)


def emsm_nu1_bounds_recommended(d: WeightedDistribution, lam: LambdaPair,
                                delta: float) -> tuple[float, float]:
    delta = EmsmDeltaSpec(delta).delta
    t = tau_level(lam)
    if t < 0.5:
        raise TauBelowHalf(f"the recommended eMSM specification needs tau >= 1/2, got {t}")
    mu = mean(d)
    w = delta * lam.width
    return mu - w * quantile_check_loss(d, 1.0 - t), mu + w * quantile_check_loss(d, t)


def emsm_nu0_bounds_recommended(d0: WeightedDistribution, lam: LambdaPair,
                                delta: float) -> tuple[float, float]:
    """Control-arm analogue, using the relabelled pair (1/lambda2, 1/lambda1)."""
    delta = EmsmDeltaSpec(delta).delta
    a1, a2 = control_pair(lam)
    if delta == 0.0:
        m = mean(d0)
        return m, m
    return box_bounds(d0, *_emsm_box(a1, a2, delta))


# ---------------------------------------------------------------------------
# observed law, specification and report


@dataclass(frozen=True)
class Stratum:
    id: str
    weight: float
    propensity: float
    dist1: Optional[WeightedDistribution]
    dist0: Optional[WeightedDistribution]

    def __post_init__(self):
        if not 0.0 <= self.propensity <= 1.0:
            raise ValidationError(f"stratum {self.id!r}: propensity must lie in [0, 1]")
        if self.weight < 0:
            raise ValidationError(f"stratum {self.id!r}: weight must be nonnegative")


@dataclass(frozen=True)
class ObservedLaw:
    strata: tuple[Stratum, ...]

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        if not self.strata:
            raise ValidationError("an observed law needs at least one stratum")
        ids = [s.id for s in self.strata]
        if len(set(ids)) != len(ids):
            raise ValidationError("stratum ids must be unique")
        total = math.fsum(s.weight for s in self.strata)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"stratum weights must sum to 1, got {total!r}")

    @classmethod
    def single(cls, dist1, dist0, propensity: float, id: str = "all") -> ObservedLaw:
        return cls((Stratum(id, 1.0, propensity, dist1, dist0),))

    def missing_arms(self) -> list[tuple[str, int]]:
        out = []
        for s in self.strata:
            if s.dist1 is None:
                out.append((s.id, 1))
            if s.dist0 is None:
                out.append((s.id, 0))
        return out

    def to_dict(self) -> dict:
        return {"strata": [
            {"id": s.id, "weight": s.weight, "propensity": s.propensity,
             "dist1": None if s.dist1 is None else s.dist1.to_dict(),
             "dist0": None if s.dist0 is None else s.dist0.to_dict()}
            for s in self.strata]}

    @classmethod
    def from_dict(cls, data: Mapping) -> ObservedLaw:
        strata = []
        for raw in data["strata"]:
            d1, d0 = raw.get("dist1"), raw.get("dist0")
            strata.append(Stratum(
                id=str(raw["id"]),
                weight=float(raw["weight"]),
                propensity=float(raw["propensity"]),
                dist1=None if d1 is None else WeightedDistribution.from_dict(d1),
                dist0=None if d0 is None else WeightedDistribution.from_dict(d0),
            ))
        return cls(tuple(strata))


@dataclass(frozen=True)
class StratumParams:
    lam: LambdaPair
    gam: GammaPair
    gam_prime: GammaPair
    delta: Optional[float]


@dataclass(frozen=True)
class SensitivitySpec:
    lam: LambdaPair
    gam: GammaPair = field(default_factory=GammaPair.uninformative)
    gam_prime: Optional[GammaPair] = None
    delta: Optional[float] = None
    overrides: Mapping[str, Mapping] = field(default_factory=dict)

    def __post_init__(self):
        if self.gam_prime is None:
            object.__setattr__(self, "gam_prime", self.gam)
        if self.delta is not None:
            object.__setattr__(self, "delta", EmsmDeltaSpec(self.delta).delta)

    @classmethod
    def symmetric(cls, lam: float, gam: float = math.inf, gam0: Optional[float] = None,
                  delta: Optional[float] = None) -> SensitivitySpec:
        g = GammaPair.symmetric(gam)
        g0 = g if gam0 is None else GammaPair.symmetric(gam0)
        return cls(LambdaPair.symmetric(lam), g, g0, delta)

    def for_stratum(self, stratum_id: str) -> StratumParams:
        o = self.overrides.get(stratum_id, {})
        delta = o.get("delta", self.delta)
        return StratumParams(
            lam=o.get("lam", self.lam),
            gam=o.get("gam", self.gam),
            gam_prime=o.get("gam_prime", o.get("gam", self.gam_prime)),
            delta=None if delta is None else float(delta),
        )

    def to_dict(self) -> dict:
        out = {"lambda": self.lam.to_list(), "gamma": self.gam.to_list(),
               "gamma0": self.gam_prime.to_list(), "delta": self.delta}
        if self.overrides:
            out["overrides"] = {
                k: {name: (v.to_list() if hasattr(v, "to_list") else v)
                    for name, v in sorted(o.items())}
                for k, o in sorted(self.overrides.items())}
        return out


def _parse_pair(value, cls):
    if isinstance(value, (list, tuple)):
        lo, hi = (float(v) for v in value)
        return cls(lo, hi)
    return cls.symmetric(float(value))


def parse_overrides(data: Mapping) -> dict:
    """Per-stratum overrides from a JSON sidecar keyed by stratum id.

    Each entry may set ``lambda``, ``gamma``, ``gamma0`` (a symmetric scalar or
    an explicit ``[low, high]`` pair; ``"inf"`` allowed for gammas) and ``delta``.
    """
    out = {}
    for sid, entry in data.items():
        o = {}
        if "lambda" in entry:
            o["lam"] = _parse_pair(entry["lambda"], LambdaPair)
        if "gamma" in entry:
            o["gam"] = _parse_pair(entry["gamma"], GammaPair)
        if "gamma0" in entry:
            o["gam_prime"] = _parse_pair(entry["gamma0"], GammaPair)
        if "delta" in entry:
            o["delta"] = EmsmDeltaSpec(entry["delta"]).delta
        unknown = set(entry) - {"lambda", "gamma", "gamma0", "delta"}
        if unknown:
            raise ValidationError(f"unknown override keys for stratum {sid!r}: {sorted(unknown)}")
        out[str(sid)] = o
    return out


@dataclass(frozen=True)
class StratumBounds:
    nu1_lo: float
    nu1_hi: float
    nu0_lo: float
    nu0_hi: float
    nu1_ref: float
    nu0_ref: float


INTERVAL_KEYS = ("mu1_lo", "mu1_hi", "mu0_lo", "mu0_hi", "ate_lo", "ate_hi")


@dataclass(frozen=True)
class BoundsReport:
    model: Model
    strata: Mapping[str, StratumBounds]
    mu1_lo: float
    mu1_hi: float
    mu0_lo: float
    mu0_hi: float
    mu1_ref: float
    mu0_ref: float
    spec: Mapping

    @property
    def ate_lo(self) -> float:
        return self.mu1_lo - self.mu0_hi

    @property
    def ate_hi(self) -> float:
        return self.mu1_hi - self.mu0_lo

    @property
    def ate_ref(self) -> float:
        return self.mu1_ref - self.mu0_ref

    def interval(self, name: str) -> tuple[float, float]:
        return getattr(self, f"{name}_lo"), getattr(self, f"{name}_hi")

    def endpoints(self) -> dict:
        return {k: getattr(self, k) for k in INTERVAL_KEYS}

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "spec": self.spec,
            "strata": {k: vars(v) for k, v in self.strata.items()},
            "bounds": self.endpoints(),
            "reference": {"mu1": self.mu1_ref, "mu0": self.mu0_ref, "ate": self.ate_ref},
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _round12(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.12g}") + 0.0
    if isinstance(obj, dict):
        return {str(k): _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Byte-stable JSON: sorted keys, floats at 12 significant digits."""
    return json.dumps(_round12(obj), sort_keys=True, indent=2) + "\n"


def stratum_bounds(s: Stratum, params: StratumParams, model: Model,
                   need1: bool = True, need0: bool = True) -> StratumBounds:
    nan = math.nan
    nu1 = (nan, nan)
    nu0 = (nan, nan)
    if need1:
        if model is Model.MSM:
            nu1 = msm_nu1_bounds(s.dist1, params.lam)
        elif model is Model.DEMSM:
            nu1 = demsm_nu1_bounds(s.dist1, params.lam, params.gam)
        else:
            nu1 = emsm_nu1_bounds_recommended(s.dist1, params.lam, _need_delta(params))
    if need0:
        if model is Model.MSM:
            nu0 = msm_nu0_bounds(s.dist0, params.lam)
        elif model is Model.DEMSM:
            nu0 = demsm_nu0_bounds(s.dist0, params.lam, params.gam_prime)
        else:
            nu0 = emsm_nu0_bounds_recommended(s.dist0, params.lam, _need_delta(params))
    return StratumBounds(
        nu1_lo=nu1[0], nu1_hi=nu1[1], nu0_lo=nu0[0], nu0_hi=nu0[1],
        nu1_ref=mean(s.dist1) if s.dist1 is not None else nan,
        nu0_ref=mean(s.dist0) if s.dist0 is not None else nan,
    )


def _need_delta(params: StratumParams) -> float:
    if params.delta is None:
        raise ValidationError("the eMSM model needs a delta value")
    return params.delta


def aggregate_bounds(law: ObservedLaw, spec: SensitivitySpec, model="demsm") -> BoundsReport:
    """Population bounds on mu1, mu0 and their difference.

    The contrast bounds pair the upper mu1 bound with the lower mu0 bound (and
    vice versa); one latent-confounder law attains both at once, so the
    contrast is sharp.
    """
    model = Model(model)
    mu1 = [0.0, 0.0]
    mu0 = [0.0, 0.0]
    ref1 = ref0 = 0.0
    per = {}
    for s in law.strata:
        if s.weight == 0.0:
            continue
        e, w = s.propensity, s.weight
        need1 = e < 1.0  # nu1 enters with weight 1 - e
        need0 = e > 0.0  # nu0 enters with weight e
        # each arm law enters either as an observed mean or through its bound
        if s.dist1 is None:
            raise MissingStratumDistribution(f"stratum {s.id!r} needs the treated-arm distribution")
        if s.dist0 is None:
            raise MissingStratumDistribution(f"stratum {s.id!r} needs the control-arm distribution")
        sb = stratum_bounds(s, spec.for_stratum(s.id), model, need1, need0)
        per[s.id] = sb
        m1 = sb.nu1_ref
        m0 = sb.nu0_ref
        ref1 += w * m1
        ref0 += w * m0
        for k, nu in enumerate((sb.nu1_lo, sb.nu1_hi)):
            mu1[k] += w * (e * m1 + ((1.0 - e) * nu if need1 else 0.0))
        for k, nu in enumerate((sb.nu0_lo, sb.nu0_hi)):
            mu0[k] += w * ((1.0 - e) * m0 + (e * nu if need0 else 0.0))
    return BoundsReport(model, per, mu1[0], mu1[1], mu0[0], mu0[1], ref1, ref0,
                        {"model": model.value, **spec.to_dict()})


# ---------------------------------------------------------------------------
# sensitivity curves

CURVE_COLUMNS = ("value",) + INTERVAL_KEYS + ("mu1_ref", "mu0_ref", "ate_ref")


def curve_spec(value: float, mode, lam: Optional[float] = None) -> SensitivitySpec:
    mode = Model(mode)
    if mode is Model.EMSM:
        if lam is None:
            raise ValidationError("an eMSM curve runs over delta and needs a fixed lambda")
        return SensitivitySpec.symmetric(lam, delta=value)
    if mode is Model.MSM:
        return SensitivitySpec.symmetric(value)
    return SensitivitySpec.symmetric(value, value, value)


def validate_curve_grid(grid: Sequence[float], mode="demsm") -> list[float]:
    grid = [float(v) for v in grid]
    if not grid:
        raise EmptyGrid("the grid must contain at least one value")
    for v in grid:
        if Model(mode) is Model.EMSM:
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"delta grid values must lie in [0, 1], got {v}")
        elif not v >= 1.0:
            raise ValidationError(f"grid values must be >= 1, got {v}")
    return grid


def sensitivity_curve(law: ObservedLaw, grid: Sequence[float], mode="demsm",
                      lam: Optional[float] = None) -> list[dict]:
    """One row of aggregated bounds per grid value.

    ``demsm`` sets lambda = gamma = gamma0 = value, ``msm`` sets lambda =
    value, and ``emsm`` treats the grid as delta values at a fixed ``lam``.
    """
    grid = validate_curve_grid(grid, mode)
    mode = Model(mode)
    rows = []
    for v in grid:
        rep = aggregate_bounds(law, curve_spec(v, mode, lam), mode)
        row = {"value": v, **rep.endpoints(),
               "mu1_ref": rep.mu1_ref, "mu0_ref": rep.mu0_ref, "ate_ref": rep.ate_ref}
        rows.append(row)
    return rows


def compare_models(law: ObservedLaw, lam: float, gam: float, delta: float,
                   gam0: Optional[float] = None) -> dict:
    """MSM, deMSM and recommended-eMSM bounds side by side with matching diagnostics."""
    from .params import matching_gammas, symmetric_matching_feasible, tau_level_control

    lp = LambdaPair.symmetric(lam)
    spec_msm = SensitivitySpec(lp)
    spec_de = SensitivitySpec.symmetric(lam, gam, gam0)
    spec_em = SensitivitySpec(lp, delta=delta)
    t = tau_level(lp)
    imp = implied_lambda(lp, spec_de.gam)
    matched = matching_gammas(delta, t)
    return {
        "msm": aggregate_bounds(law, spec_msm, Model.MSM).to_dict(),
        "demsm": aggregate_bounds(law, spec_de, Model.DEMSM).to_dict(),
        "emsm": aggregate_bounds(law, spec_em, Model.EMSM).to_dict(),
        "diagnostics": {
            "tau": t,
            "tau_control": tau_level_control(lp),
            "implied_lambda_bar": [imp.lambda_bar1, imp.lambda_bar2],
            "tau_bar": imp.tau_bar,
            "matched_gamma": matched.to_list(),
            "symmetric_gamma_matches": symmetric_matching_feasible(delta, t),
            "emsm_implied_lambda": emsm_implied_lambdas(delta, lp).to_list(),
        },
    }
