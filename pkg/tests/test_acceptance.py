"""Acceptance criteria 1-7, each at its stated tolerance and time budget.

Each test prints one ``[criterion N] PASS|FAIL`` line, also under pytest
capture. Run stand-alone with ``python3 tests/test_acceptance.py``.
"""

import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from demsm.bounds import (  # noqa: E402
    Model,
    ObservedLaw,
    SensitivitySpec,
    Stratum,
    aggregate_bounds,
    demsm_nu0_bounds,
    demsm_nu1_bounds,
    emsm_nu1_bounds_recommended,
    msm_nu0_bounds,
    msm_nu1_bounds,
    sensitivity_curve,
)
from demsm.cli import main as cli_main  # noqa: E402
from demsm.dist import make_weighted_dist, mean  # noqa: E402
from demsm.estimate import Sample, bootstrap_ci, plugin_bounds  # noqa: E402
from demsm.oracle import (  # noqa: E402
    binary_u_grid_oracle,
    build_witness,
    greedy_density_ratio_bound,
    verify_witness,
)
from demsm.params import (  # noqa: E402
    GammaPair,
    LambdaPair,
    emsm_implied_lambdas,
    emsm_recommended_deltas,
    implied_emsm_deltas,
    implied_lambda,
    implied_lambda_control,
    matching_gammas,
    tau_level,
)

from conftest import random_dist, random_gamma, random_lambda  # noqa: E402

LAM = LambdaPair(0.5, 2.0)
GAM = GammaPair(0.5, 2.0)
UNIFORM = make_weighted_dist([(0, 1), (1, 1), (2, 1)])


class _Reporter:
    def __init__(self, capsys=None):
        self.capsys = capsys

    def __call__(self, n, title, ok, detail):
        line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        if self.capsys is not None:
            with self.capsys.disabled():
                print("\n" + line)
        else:
            print(line)


@pytest.fixture
def report(capsys):
    return _Reporter(capsys)


def _within(a, b, tol):
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))


def _contains(outer, inner, tol):
    return outer[0] - tol <= inner[0] and inner[1] <= outer[1] + tol


# ---------------------------------------------------------------------------


def test_criterion_1_shrinkage(report):
    t0 = time.perf_counter()
    lam, gam = LambdaPair.symmetric(2), GammaPair.symmetric(2)
    imp = implied_lambda(lam, gam)
    imp0 = implied_lambda_control(lam, gam)
    worst = abs(imp.tau_bar - 2 / 3)
    rng = np.random.default_rng(101)
    strata = [UNIFORM, make_weighted_dist([(0, 1), (1, 1)])] + [random_dist(rng) for _ in range(50)]
    for d in strata:
        ref = mean(d)
        pairs = [(demsm_nu1_bounds(d, lam, gam), msm_nu1_bounds(d, lam)),
                 (demsm_nu0_bounds(d, lam, gam), msm_nu0_bounds(d, lam))]
        for de, msm in pairs:
            for k in (0, 1):
                worst = max(worst, abs((de[k] - ref) - 0.5 * (msm[k] - ref)))
    worst = max(worst, abs(imp0.tau_bar - 2 / 3))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    report(1, "tau_bar = 2/3 and 1/2 shrinkage at Lambda=Gamma=2", ok,
           f"tau_bar={imp.tau_bar!r}, max deviation error {worst:.2e} over {len(strata)} strata, {elapsed:.3f}s")
    assert ok


def test_criterion_2_worked_instances(report):
    t0 = time.perf_counter()
    imp = implied_lambda(LAM, GAM)
    checks = {
        # value, greedy-oracle confirmation
        "msm nu1": (msm_nu1_bounds(UNIFORM, LAM), (0.5, 1.5),
                    (greedy_density_ratio_bound(UNIFORM, LAM, "min"), greedy_density_ratio_bound(UNIFORM, LAM, "max"))),
        "demsm nu1": (demsm_nu1_bounds(UNIFORM, LAM, GAM), (0.75, 1.25),
                      (greedy_density_ratio_bound(UNIFORM, imp, "min"), greedy_density_ratio_bound(UNIFORM, imp, "max"))),
    }
    law = ObservedLaw.single(UNIFORM, UNIFORM, 0.5)
    rep = aggregate_bounds(law, SensitivitySpec(LAM, GAM, GAM), Model.DEMSM)
    imp0 = implied_lambda_control(LAM, GAM)
    g1 = (greedy_density_ratio_bound(UNIFORM, imp, "min"), greedy_density_ratio_bound(UNIFORM, imp, "max"))
    g0 = (greedy_density_ratio_bound(UNIFORM, imp0, "min"), greedy_density_ratio_bound(UNIFORM, imp0, "max"))
    ate_greedy = (0.5 * 1 + 0.5 * g1[0] - (0.5 * 1 + 0.5 * g0[1]), 0.5 * 1 + 0.5 * g1[1] - (0.5 * 1 + 0.5 * g0[0]))
    checks["ate e=0.5"] = (rep.interval("ate"), (-0.25, 0.25), ate_greedy)
    em = emsm_nu1_bounds_recommended(UNIFORM, LAM, 0.5)
    checks["emsm delta=0.5"] = (em, checks["demsm nu1"][0], checks["demsm nu1"][2])
    ok = True
    parts = []
    for name, (got, want, oracle) in checks.items():
        good = _within(got, want, 1e-12) and _within(oracle, want, 1e-12)
        ok &= good
        parts.append(f"{name}={tuple(round(v, 12) for v in got)}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 1.0
    report(2, "worked instances on uniform{0,1,2}", ok, ", ".join(parts) + f", {elapsed:.3f}s")
    assert ok


def test_criterion_3_oracle_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    greedy_err = 0.0
    worst_gap = 0.0
    min_gap = np.inf
    for _ in range(200):
        d, lam, gam = random_dist(rng), random_lambda(rng), random_gamma(rng)
        lo, hi = demsm_nu1_bounds(d, lam, gam)
        imp = implied_lambda(lam, gam)
        greedy_err = max(greedy_err, abs(lo - greedy_density_ratio_bound(d, imp, "min")),
                         abs(hi - greedy_density_ratio_bound(d, imp, "max")))
        if lam.lambda1 > 0:
            lo0, hi0 = demsm_nu0_bounds(d, lam, gam)
            imp0 = implied_lambda_control(lam, gam)
            greedy_err = max(greedy_err, abs(lo0 - greedy_density_ratio_bound(d, imp0, "min")),
                             abs(hi0 - greedy_density_ratio_bound(d, imp0, "max")))
        gap = hi - binary_u_grid_oracle(d, lam, gam, "max", 1e-3)
        worst_gap = max(worst_gap, gap)
        min_gap = min(min_gap, gap)
    elapsed = time.perf_counter() - t0
    ok = greedy_err <= 1e-12 and min_gap >= -1e-12 and worst_gap <= 2e-3 and elapsed < 60
    report(3, "closed form vs greedy and grid oracles, 200 instances", ok,
           f"max greedy error {greedy_err:.2e}, grid gap in [{min_gap:.2e}, {worst_gap:.2e}], {elapsed:.1f}s")
    assert ok


def test_criterion_4_witness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    failures = []
    worst = 0.0
    for i in range(100):
        d1, d0 = random_dist(rng), random_dist(rng)
        lam = random_lambda(rng, lo=0.05)
        gam, gp = random_gamma(rng), random_gamma(rng)
        w = build_witness(d1, d0, lam, gam, gp, p_treat=float(rng.uniform(0.1, 0.9)))
        audit = verify_witness(w, d1, d0, SensitivitySpec(lam, gam, gp), tol=1e-10)
        worst = max(worst, max(c.violation for c in audit.checks.values()))
        if not audit.passed:
            failures.append((i, audit.failures()))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    report(4, "witness audit on 100 random instances", ok,
           f"{100 - len(failures)}/100 pass, max violation {worst:.2e}, {elapsed:.2f}s")
    assert ok, failures[:5]


def test_criterion_5_model_relations(report):
    rng = np.random.default_rng(505)
    tol = 1e-9
    counts = dict.fromkeys(("containment", "sandwich", "swap", "matching", "delta round-trip"), 0)
    bad = []
    for i in range(200):
        d, lam, gam = random_dist(rng), random_lambda(rng), random_gamma(rng)
        de = demsm_nu1_bounds(d, lam, gam)
        inner = LambdaPair(max(lam.lambda1, gam.gamma1), min(lam.lambda2, gam.gamma2))
        if _contains(msm_nu1_bounds(d, lam), de, tol) and _contains(msm_nu1_bounds(d, inner), de, tol):
            counts["containment"] += 1
        else:
            bad.append((i, "containment"))
        imp = implied_lambda(lam, gam)
        if (max(lam.lambda1, gam.gamma1) - tol <= imp.lambda_bar1 <= 1 + tol
                and 1 - tol <= imp.lambda_bar2 <= min(lam.lambda2, gam.gamma2) + tol):
            counts["sandwich"] += 1
        else:
            bad.append((i, "sandwich"))
        swapped = demsm_nu1_bounds(d, gam.as_lambda(), GammaPair(lam.lambda1, lam.lambda2))
        if _within(de, swapped, tol):
            counts["swap"] += 1
        else:
            bad.append((i, "swap"))
        # matching identities need tau >= 1/2
        sym = LambdaPair.symmetric(float(rng.uniform(1.01, 5.0)))
        delta = float(rng.uniform(0, 1))
        t = tau_level(sym)
        em = emsm_nu1_bounds_recommended(d, sym, delta)
        if (_within(em, demsm_nu1_bounds(d, sym, matching_gammas(delta, t)), tol)
                and _within(em, msm_nu1_bounds(d, emsm_implied_lambdas(delta, sym)), tol)):
            counts["matching"] += 1
        else:
            bad.append((i, "matching"))
        if _within(implied_emsm_deltas(matching_gammas(delta, t), d), emsm_recommended_deltas(delta, sym, d), tol):
            counts["delta round-trip"] += 1
        else:
            bad.append((i, "delta round-trip"))
    ok = not bad
    report(5, "model relations on 200 random instances", ok,
           ", ".join(f"{k} {v}/200" for k, v in counts.items()))
    assert ok, bad[:5]


def _random_law(rng):
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k))
    w[-1] = 1.0 - w[:-1].sum()
    return ObservedLaw(tuple(Stratum(f"s{j}", float(w[j]), float(rng.uniform(0.1, 0.9)),
                                     random_dist(rng), random_dist(rng)) for j in range(k)))


def test_criterion_6_monotonicity(report, tmp_path, capsys):
    rng = np.random.default_rng(606)
    tol = 1e-12
    grid = [1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 8.0]
    bad = []
    # the curve command itself, on a few laws
    for i in range(5):
        path = tmp_path / f"law{i}.json"
        path.write_text(json.dumps(_random_law(rng).to_dict()))
        code = cli_main(["curve", "--law", str(path), "--grid", ",".join(map(str, grid))])
        out = capsys.readouterr().out
        rows = list(csv.DictReader(io.StringIO(out)))
        if code != 0 or len(rows) != len(grid):
            bad.append(("cli", i))
            continue
        for q in ("mu1", "mu0", "ate"):
            lo = [float(r[f"{q}_lo"]) for r in rows]
            hi = [float(r[f"{q}_hi"]) for r in rows]
            # CSV values carry 12 significant digits
            if any(lo[j + 1] > lo[j] + 1e-11 or hi[j + 1] < hi[j] - 1e-11 for j in range(len(grid) - 1)):
                bad.append(("cli", i, q))
    # full precision through the library, more laws
    n_laws = 100
    for i in range(n_laws):
        law = _random_law(rng)
        rows = sensitivity_curve(law, grid)
        for q in ("mu1", "mu0", "ate"):
            for a, b in zip(rows, rows[1:]):
                if b[f"{q}_lo"] > a[f"{q}_lo"] + tol or b[f"{q}_hi"] < a[f"{q}_hi"] - tol:
                    bad.append(("curve", i, q))
    # mixed (Lambda, Gamma) bracketed by the symmetric choices at min and max
    n_mixed = 300
    for i in range(n_mixed):
        d = random_dist(rng)
        L, G = float(rng.uniform(1, 6)), float(rng.uniform(1, 6))
        lo, hi = min(L, G), max(L, G)
        mixed = demsm_nu1_bounds(d, LambdaPair.symmetric(L), GammaPair.symmetric(G))
        small = demsm_nu1_bounds(d, LambdaPair.symmetric(lo), GammaPair.symmetric(lo))
        big = demsm_nu1_bounds(d, LambdaPair.symmetric(hi), GammaPair.symmetric(hi))
        if not (_contains(mixed, small, tol) and _contains(big, mixed, tol)):
            bad.append(("mixed", i))
    ok = not bad
    report(6, "monotone curves and mixed-parameter bracketing", ok,
           f"5 CLI curves, {n_laws} library curves x {len(grid)} points, {n_mixed} mixed pairs; "
           f"{len(bad)} violations")
    assert ok, bad[:5]


def _uniform_dgp(rng, n):
    t = (rng.random(n) < 0.5).astype(int)
    y = rng.integers(0, 3, size=n).astype(float)
    return Sample(y, t, np.full(n, "a"))


@pytest.mark.slow
def test_criterion_7_estimation(report):
    t0 = time.perf_counter()
    spec = SensitivitySpec(LAM, GAM, GAM)
    pop = aggregate_bounds(ObservedLaw.single(UNIFORM, UNIFORM, 0.5), spec, Model.DEMSM)
    keys = ("mu1_lo", "mu1_hi", "mu0_lo", "mu0_hi", "ate_lo", "ate_hi")
    rng = np.random.default_rng(707)
    errors = []
    for n in (200, 2000, 20000):
        rep = plugin_bounds(_uniform_dgp(rng, n), spec)
        errors.append(max(abs(getattr(rep, k) - getattr(pop, k)) for k in keys))
    converges = errors[0] > errors[1] > errors[2] and errors[2] < 0.02

    reps, B, level, n = 200, 500, 0.95, 1000
    covered = 0
    for r in range(reps):
        s = _uniform_dgp(np.random.default_rng([7, r]), n)
        lo, hi = bootstrap_ci(s, spec, B=B, level=level, seed=r).envelope("ate")
        covered += lo <= pop.ate_lo and pop.ate_hi <= hi
    rate = covered / reps
    elapsed = time.perf_counter() - t0
    ok = converges and rate >= level - 0.05 and elapsed < 300
    report(7, "plug-in convergence and bootstrap envelope coverage", ok,
           "max endpoint error at n=200/2000/20000: " + "/".join(f"{e:.4f}" for e in errors)
           + f"; coverage {covered}/{reps} = {rate:.3f} (B={B}, n={n}); {elapsed:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
