import numpy as np
import pytest

from demsm.bounds import Model, SensitivitySpec
from demsm.errors import DataError, DegenerateResample, EmptyArmInStratum, EmptySample, ValidationError
from demsm.estimate import (
    EmptyArmWarning,
    Sample,
    bootstrap_ci,
    empirical_observed_law,
    plugin_bounds,
    read_sample_csv,
)
from demsm.params import GammaPair, LambdaPair

from conftest import GAM, LAM

SPEC = SensitivitySpec(LAM, GAM, GAM)


def _uniform_sample(n=1):
    ys = np.tile([0.0, 1.0, 2.0], n)
    y = np.concatenate([ys, ys])
    t = np.concatenate([np.ones(3 * n), np.zeros(3 * n)]).astype(int)
    return Sample(y, t, np.full(y.size, "a"))


def _draw(rng, n):
    """Two strata; uniform{0,1,2} outcomes shifted by stratum and arm."""
    x = rng.integers(0, 2, size=n)
    t = (rng.random(n) < np.where(x == 0, 0.4, 0.7)).astype(int)
    y = rng.integers(0, 3, size=n) + x + 0.5 * t
    return Sample(y.astype(float), t, x.astype(str))


class TestEmpiricalLaw:
    def test_counting(self):
        s = Sample.from_rows([(0, 1, "a"), (2, 1, "a"), (1, 0, "a"), (1, 0, "a")])
        (st,) = empirical_observed_law(s).strata
        assert (st.weight, st.propensity) == (1.0, 0.5)
        assert st.dist1.to_dict() == {"support": [0.0, 2.0], "probs": [0.5, 0.5]}
        assert st.dist0.to_dict() == {"support": [1.0], "probs": [1.0]}

    def test_two_strata(self):
        s = Sample.from_rows([(0, 1, "a"), (1, 0, "a"), (0, 1, "b"), (1, 0, "b")])
        assert [st.weight for st in empirical_observed_law(s).strata] == [0.5, 0.5]

    def test_empty_arm(self):
        s = Sample.from_rows([(0, 1, "a"), (1, 0, "a"), (1, 0, "b")])
        with pytest.warns(EmptyArmWarning, match="'b'"):
            law = empirical_observed_law(s)
        assert law.missing_arms() == [("b", 1)]
        with pytest.raises(EmptyArmInStratum) as exc:
            empirical_observed_law(s, strict=True)
        assert exc.value.stratum == "b"

    def test_bad_input(self):
        with pytest.raises(EmptySample):
            Sample.from_rows([])
        with pytest.raises(DataError):
            Sample(np.array([1.0]), np.array([2]), np.array(["a"]))
        with pytest.raises(DataError):
            Sample(np.array([np.nan]), np.array([1]), np.array(["a"]))


class TestPlugin:
    def test_exact_population(self):
        rep = plugin_bounds(_uniform_sample(5), SPEC)
        assert rep.interval("ate") == pytest.approx((-0.25, 0.25), abs=1e-12)

    def test_trivial_params(self):
        s = _draw(np.random.default_rng(0), 300)
        rep = plugin_bounds(s, SensitivitySpec(LambdaPair(1, 1), GammaPair(1, 1)))
        assert rep.ate_lo == pytest.approx(rep.ate_hi, abs=1e-12)
        assert rep.ate_lo == pytest.approx(rep.ate_ref, abs=1e-12)

    def test_demsm_inside_msm(self):
        s = _draw(np.random.default_rng(1), 400)
        de = plugin_bounds(s, SPEC, Model.DEMSM)
        msm = plugin_bounds(s, SensitivitySpec(LAM), Model.MSM)
        assert msm.ate_lo <= de.ate_lo + 1e-12 and de.ate_hi <= msm.ate_hi + 1e-12

    def test_read_csv(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("y,t,x\n0,1,a\n2,1,a\n1,0,a\n1,0,a\n")
        s = read_sample_csv(p)
        assert len(s) == 4 and s.t.tolist() == [1, 1, 0, 0]
        p.write_text("y,t\n0,1\n")
        with pytest.raises(DataError):
            read_sample_csv(p)
        p.write_text("y,t,x\n0,3,a\n")
        with pytest.raises(DataError):
            read_sample_csv(p)


class TestBootstrap:
    def test_deterministic(self):
        s = _draw(np.random.default_rng(2), 300)
        a = bootstrap_ci(s, SPEC, B=100, seed=11)
        b = bootstrap_ci(s, SPEC, B=100, seed=11)
        assert a.intervals == b.intervals
        assert np.array_equal(a.replicates, b.replicates)

    def test_row_order_invariant(self):
        s = _draw(np.random.default_rng(3), 300)
        perm = np.random.default_rng(4).permutation(len(s))
        shuffled = Sample(s.y[perm], s.t[perm], s.x[perm])
        assert bootstrap_ci(s, SPEC, B=100, seed=5).intervals == \
            bootstrap_ci(shuffled, SPEC, B=100, seed=5).intervals

    def test_level_narrows(self):
        s = _draw(np.random.default_rng(5), 300)
        wide = bootstrap_ci(s, SPEC, B=200, level=0.95, seed=1)
        narrow = bootstrap_ci(s, SPEC, B=200, level=0.01, seed=1)
        for k in wide.intervals:
            w, n = wide.intervals[k], narrow.intervals[k]
            assert n[1] - n[0] < w[1] - w[0]

    def test_argument_checks(self):
        s = _uniform_sample()
        with pytest.raises(ValidationError):
            bootstrap_ci(s, SPEC, B=50)
        with pytest.raises(ValidationError):
            bootstrap_ci(s, SPEC, B=100, level=1.0)

    def test_degenerate_resample(self):
        # ten strata with one treated row each: a usable resample must keep all ten
        x = np.repeat([str(k) for k in range(10)], 20)
        t = np.tile(np.r_[1, np.zeros(19, dtype=int)], 10)
        s = Sample(np.arange(200.0) % 3, t, x)
        with pytest.raises(DegenerateResample):
            bootstrap_ci(s, SPEC, B=100)

    def test_to_dict(self):
        out = bootstrap_ci(_draw(np.random.default_rng(6), 200), SPEC, B=100).to_dict()
        assert set(out["envelope"]) == {"mu1", "mu0", "ate"}
