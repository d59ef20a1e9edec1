"""Independent checks on the closed-form bounds.

Three routes, none of which evaluates a check loss:

* ``greedy_density_ratio_bound`` solves the box-constrained reweighting LP
  exactly by filling the budget from the top (or bottom) of the support.
* ``binary_u_grid_oracle`` searches latent-confounder laws with a binary U
  on a grid, solving the outcome-ratio subproblem greedily in each cell.
  Every cell is a feasible model, so its value can never beat the sharp bound.
* ``build_witness`` constructs one joint law that attains the upper treated
  bound and the lower control bound together; ``verify_witness`` audits it
  against every model constraint.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bounds import SensitivitySpec, demsm_nu0_bounds, demsm_nu1_bounds
from .dist import WeightedDistribution, mean
from .errors import (
    InfeasibleBox,
    NegativeImpliedDensity,
    ResolutionOutOfRange,
    UnboundedGamma,
    ValidationError,
)
from .params import (
    GammaPair,
    ImpliedLambda,
    LambdaPair,
    _safe_mul,
    control_pair,
    implied_lambda,
    implied_lambda_control,
    tau_level,
)

BOX_SLACK = 1e-12
DENSITY_SLACK = 1e-13


def _box(lam) -> tuple[float, float]:
    if isinstance(lam, LambdaPair):
        return lam.lambda1, lam.lambda2
    if isinstance(lam, ImpliedLambda):
        return lam.lambda_bar1, lam.lambda_bar2
    if isinstance(lam, GammaPair):
        return lam.gamma1, lam.gamma2
    lo, hi = lam
    return float(lo), float(hi)


def _maximize(direction: str) -> bool:
    if direction not in ("max", "min"):
        raise ValueError(f"direction must be 'max' or 'min', got {direction!r}")
    return direction == "max"


def greedy_density_ratio_bound(d: WeightedDistribution, lam, direction: str = "max") -> float:
    """Optimum of sum p(y) r(y) y over r(y) in [lo, hi] with sum p(y) r(y) = 1."""
    lo, hi = _box(lam)
    if lo > 1.0 + BOX_SLACK or hi < 1.0 - BOX_SLACK or math.isinf(hi):
        raise InfeasibleBox(f"box [{lo}, {hi}] cannot normalize to 1")
    return float(kernels.greedy_box(d.support, d.probs, lo, hi, _maximize(direction)))


def vertex_enumeration_bound(d: WeightedDistribution, lam, direction: str = "max") -> float:
    """Brute force over LP vertices: every coordinate at a box end except at most one."""
    lo, hi = _box(lam)
    y, p = d.support, d.probs
    n = len(y)
    best = -math.inf if direction == "max" else math.inf
    better = (lambda a, b: a > b) if direction == "max" else (lambda a, b: a < b)
    for ends in itertools.product((lo, hi), repeat=n):
        r = np.array(ends)
        for free in [None, *range(n)]:
            rr = r.copy()
            if free is not None:
                rest = 1.0 - (p @ rr - p[free] * rr[free])
                if p[free] == 0:
                    continue
                rr[free] = rest / p[free]
                if not lo - BOX_SLACK <= rr[free] <= hi + BOX_SLACK:
                    continue
            elif abs(p @ rr - 1.0) > 1e-12:
                continue
            val = float(np.sum(p * rr * y))
            if better(val, best):
                best = val
    return best


def binary_u_grid_oracle(d: WeightedDistribution, lam: LambdaPair, gam: GammaPair,
                         direction: str = "max", resolution: float = 1e-2) -> float:
    """Best value of E(Y1 | T=0) over binary-U models on a grid.

    Searches Q(U=1 | T=1) over (0, 1) and the treatment ratio at U=1 over
    [lambda1, lambda2], each with ceil(1/resolution) steps; the ratio at U=0
    is forced by normalization and must land in the box.
    """
    if gam.unbounded:
        raise UnboundedGamma("the grid oracle needs a bounded gamma2")
    if not 0.0 < resolution <= 0.1:
        raise ResolutionOutOfRange(f"resolution must lie in (0, 0.1], got {resolution}")
    n = math.ceil(1.0 / resolution - 1e-9)
    return float(kernels.grid_scan(d.support, d.probs, lam.lambda1, lam.lambda2,
                                   gam.gamma1, gam.gamma2, _maximize(direction), n))


# ---------------------------------------------------------------------------
# witness


@dataclass
class WitnessJoint:
    """Binary-U joint law attaining the upper mu1 and lower mu0 bounds.

    Conditional outcome laws are probability vectors aligned with the
    observed support of each arm: index 0 is U=1, index 1 is U=0. They are
    indexed by U only, so the potential outcomes are independent of T given
    U by construction; ``coupling`` records that Y0 and Y1 are independent
    given (T, U).
    """

    p_treat: float
    u_given_t1: float
    u_given_t0: float
    support1: np.ndarray
    y1_given_u: tuple
    support0: np.ndarray
    y0_given_u: tuple
    coupling: str = "product"
    info: dict = field(default_factory=dict)

    def e_y1_given_t0(self) -> float:
        a = self.u_given_t0
        return float(a * (self.y1_given_u[0] @ self.support1)
                     + (1.0 - a) * (self.y1_given_u[1] @ self.support1))

    def e_y0_given_t1(self) -> float:
        a = self.u_given_t1
        return float(a * (self.y0_given_u[0] @ self.support0)
                     + (1.0 - a) * (self.y0_given_u[1] @ self.support0))

    def to_dict(self) -> dict:
        return {
            "p_treat": self.p_treat,
            "u_given_t1": self.u_given_t1,
            "u_given_t0": self.u_given_t0,
            "support1": self.support1.tolist(),
            "y1_given_u1": self.y1_given_u[0].tolist(),
            "y1_given_u0": self.y1_given_u[1].tolist(),
            "support0": self.support0.tolist(),
            "y0_given_u1": self.y0_given_u[0].tolist(),
            "y0_given_u0": self.y0_given_u[1].tolist(),
            "coupling": self.coupling,
            "e_y1_given_t0": self.e_y1_given_t0(),
            "e_y0_given_t1": self.e_y0_given_t1(),
            "info": self.info,
        }


def _excess_box(g: GammaPair, share: float, comp: float) -> tuple[float, float]:
    """Clipped outcome box minus 1, for a U=1 component of weight ``share``.

    The clip keeps the complementary U=0 ratio inside the box as well. Working
    with ratio - 1 avoids cancellation when either weight is tiny.
    """
    o = math.inf if share == 0.0 else comp / share
    return (-min(1.0 - g.gamma1, _safe_mul(o, g.gamma2 - 1.0)),
            min(g.gamma2 - 1.0, _safe_mul(o, 1.0 - g.gamma1)))


def _split_ratios(d: WeightedDistribution, level: float, below: float, above: float):
    """Value ``below`` under the ``level``-quantile, ``above`` over it.

    The quantile atom is split so that exactly ``level`` of the mass carries
    ``below``; the split is stored as a mass-weighted value at the atom.
    """
    y, p = d.support, d.probs
    qi = kernels.quantile_index(p, level)
    cdf_q = float(p[: qi + 1].sum())
    frac_above = min(1.0, max(0.0, (cdf_q - level) / p[qi]))
    r = np.where(np.arange(len(y)) < qi, below, above).astype(float)
    r[qi] = frac_above * above + (1.0 - frac_above) * below
    return r, float(y[qi]), frac_above


def _component_laws(p: np.ndarray, excess: np.ndarray, share: float, comp: float):
    """U=1 law with ratio 1 + excess, and the U=0 law the mixture identity forces."""
    law1 = p * (1.0 + excess)
    if comp == 0.0:
        return law1, p.copy()
    law0 = p * (1.0 - (share / comp) * excess)
    if np.any(law0 < -DENSITY_SLACK) or np.any(law1 < -DENSITY_SLACK):
        raise NegativeImpliedDensity(f"implied mass {min(law0.min(), law1.min())!r}")
    return np.clip(law1, 0.0, None), np.clip(law0, 0.0, None)


def _arm(d: WeightedDistribution, g: GammaPair, imp: ImpliedLambda, share: float, comp: float):
    e_lo, e_hi = _excess_box(g, share, comp)
    if imp.lambda_bar1 == imp.lambda_bar2 or e_hi == e_lo:
        return _component_laws(d.probs, np.zeros_like(d.probs), share, comp), "degenerate"
    # the level that normalizes the U=1 law; analytically tau_bar on the treated
    # side and 1 - tau_bar' on the control side, but exact in floating point
    level = e_hi / (e_hi - e_lo)
    excess, q, frac = _split_ratios(d, level, e_lo, e_hi)
    info = {"gamma_bar": [1.0 + e_lo, 1.0 + e_hi], "quantile": q,
            "atom_share_upper": frac, "tau_bar": imp.tau_bar}
    return _component_laws(d.probs, excess, share, comp), info


def build_witness(d1: WeightedDistribution, d0: WeightedDistribution, lam: LambdaPair,
                  gam: GammaPair, gam_prime: GammaPair, p_treat: float = 0.5) -> WitnessJoint:
    """Construct the binary-U law attaining the upper mu1 and lower mu0 bounds."""
    if gam.unbounded or gam_prime.unbounded:
        raise UnboundedGamma("the witness needs bounded gamma pairs")
    if lam.lambda1 == 0.0:
        raise ValidationError("the witness needs lambda1 > 0 (the control-arm ratio is unbounded)")
    tau = tau_level(lam)
    a1, c1 = 1.0 - tau, tau                           # Q(U=1 | T=1), Q(U=0 | T=1)
    a0, c0 = lam.lambda2 * (1.0 - tau), lam.lambda1 * tau  # same given T=0; a0 + c0 = 1

    imp = implied_lambda(lam, gam)
    y1_laws, info1 = _arm(d1, gam, imp, a1, c1)
    imp0 = implied_lambda_control(lam, gam_prime)
    y0_laws, info0 = _arm(d0, gam_prime, imp0, a0, c0)

    return WitnessJoint(
        p_treat=float(p_treat), u_given_t1=a1, u_given_t0=a0,
        support1=d1.support.copy(), y1_given_u=y1_laws,
        support0=d0.support.copy(), y0_given_u=y0_laws,
        info={"tau": tau, "tau_prime": a0, "treated": info1, "control": info0},
    )


@dataclass
class CheckResult:
    passed: bool
    violation: float
    detail: str = ""


@dataclass
class AuditReport:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": {k: {"passed": c.passed, "violation": c.violation, "detail": c.detail}
                           for k, c in self.checks.items()}}


def _check(violation: float, tol: float, detail: str = "") -> CheckResult:
    violation = float(violation)
    return CheckResult(bool(violation <= tol), violation, detail)


def _law_check(support, laws, mix, d: WeightedDistribution, tol: float) -> CheckResult:
    if support.shape != d.support.shape or not np.array_equal(support, d.support):
        return CheckResult(False, math.inf, "witness support differs from the observed support")
    worst = 0.0
    for law in laws:
        worst = max(worst, abs(law.sum() - 1.0), float(max(0.0, -law.min())))
    mixed = mix * laws[0] + (1.0 - mix) * laws[1]
    worst = max(worst, float(np.abs(mixed - d.probs).max()))
    return _check(worst, tol, "max |mixture - observed|, |sum - 1|, negative mass")


def _ratio_check(laws, d: WeightedDistribution, g: GammaPair, tol: float) -> CheckResult:
    worst = 0.0
    for law in laws:
        r = law / d.probs
        worst = max(worst, float(np.max(g.gamma1 - r)), float(np.max(r - g.gamma2)))
    return _check(max(worst, 0.0), tol, f"outcome ratios outside [{g.gamma1}, {g.gamma2}]")


def verify_witness(w: WitnessJoint, d1: WeightedDistribution, d0: WeightedDistribution,
                   spec: SensitivitySpec, tol: float = 1e-10, stratum=None) -> AuditReport:
    """Audit a witness against the observed law and every model constraint."""
    if stratum is None:
        lam, gam, gp = spec.lam, spec.gam, spec.gam_prime
    else:
        sp = spec.for_stratum(stratum)
        lam, gam, gp = sp.lam, sp.gam, sp.gam_prime
    checks = {}

    # (a) the witness reproduces the observed arm laws
    checks["mixture_treated"] = _law_check(w.support1, w.y1_given_u, w.u_given_t1, d1, tol)
    checks["mixture_control"] = _law_check(w.support0, w.y0_given_u, w.u_given_t0, d0, tol)

    # (b) treatment ratio Q(u | T=0) / Q(u | T=1) sits on the box ends; compared
    # cross-multiplied, since Q(u | T=1) can be tiny when tau is near 0 or 1
    worst = 0.0
    detail = []
    for q1, q0, target in ((w.u_given_t1, w.u_given_t0, lam.lambda2),
                           (1.0 - w.u_given_t1, 1.0 - w.u_given_t0, lam.lambda1)):
        if q1 > 0.0:
            detail.append(f"{q0 / q1:.12g}")
        worst = max(worst, abs(q0 - target * q1), lam.lambda1 * q1 - q0, q0 - lam.lambda2 * q1)
    checks["treatment_ratio"] = _check(worst, tol, "ratios at U=1, U=0: " + ", ".join(detail))

    # (c) outcome density ratios stay in their boxes
    if w.support1.shape == d1.support.shape and w.support0.shape == d0.support.shape:
        checks["outcome_ratio_treated"] = _ratio_check(w.y1_given_u, d1, gam, tol)
        checks["outcome_ratio_control"] = _ratio_check(w.y0_given_u, d0, gp, tol)
    else:
        checks["outcome_ratio_treated"] = CheckResult(False, math.inf, "support mismatch")
        checks["outcome_ratio_control"] = CheckResult(False, math.inf, "support mismatch")

    # (d) both bounds attained by the same law
    hi1 = demsm_nu1_bounds(d1, lam, gam)[1]
    lo0 = demsm_nu0_bounds(d0, lam, gp)[0]
    e1, e0 = w.e_y1_given_t0(), w.e_y0_given_t1()
    checks["attains_mu1_upper"] = _check(abs(e1 - hi1), tol, f"E_Q(Y1|T=0)={e1!r}, bound={hi1!r}")
    checks["attains_mu0_lower"] = _check(abs(e0 - lo0), tol, f"E_Q(Y0|T=1)={e0!r}, bound={lo0!r}")

    # (e) joint of (Y0, Y1) given U is the same under both treatment arms
    if w.coupling != "product":
        checks["latent_unconfoundedness"] = CheckResult(False, math.inf, "coupling is not a product")
    else:
        worst = 0.0
        for u in (0, 1):
            joint_t1 = np.outer(w.y0_given_u[u], w.y1_given_u[u])
            joint_t0 = np.outer(w.y0_given_u[u], w.y1_given_u[u])
            worst = max(worst, float(np.abs(joint_t1 - joint_t0).max()))
        checks["latent_unconfoundedness"] = _check(worst, tol, "outcome laws indexed by U only")

    return AuditReport(checks)


def oracle_comparison(d: WeightedDistribution, lam: LambdaPair, gam: GammaPair,
                      resolution: float = 1e-3, arm: int = 1) -> dict:
    """Closed-form bounds for one arm next to the greedy and grid oracles.

    ``arm=1`` bounds E(Y1 | T=0) from the treated law ``d``; ``arm=0`` bounds
    E(Y0 | T=1) from the control law, where the oracles run on the relabelled
    treatment pair.
    """
    if arm == 1:
        lo, hi = demsm_nu1_bounds(d, lam, gam)
        imp = implied_lambda(lam, gam)
        grid_lam = lam
    elif arm == 0:
        lo, hi = demsm_nu0_bounds(d, lam, gam)
        imp = implied_lambda_control(lam, gam)
        a1, a2 = control_pair(lam)
        grid_lam = None if math.isinf(a2) else LambdaPair(a1, a2)
    else:
        raise ValueError(f"arm must be 0 or 1, got {arm!r}")
    row = {
        "closed_lo": lo, "closed_hi": hi,
        "greedy_lo": greedy_density_ratio_bound(d, imp, "min"),
        "greedy_hi": greedy_density_ratio_bound(d, imp, "max"),
        "reference": mean(d),
    }
    if gam.unbounded or grid_lam is None:
        row["grid_lo"] = row["grid_hi"] = math.nan
    else:
        row["grid_lo"] = binary_u_grid_oracle(d, grid_lam, gam, "min", resolution)
        row["grid_hi"] = binary_u_grid_oracle(d, grid_lam, gam, "max", resolution)
    row["greedy_err"] = max(abs(row["greedy_lo"] - lo), abs(row["greedy_hi"] - hi))
    row["grid_gap_hi"] = hi - row["grid_hi"]
    row["grid_gap_lo"] = row["grid_lo"] - lo
    return row
