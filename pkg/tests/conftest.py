import numpy as np
import pytest
from hypothesis import strategies as st

from demsm import _kernels_py, kernels
from demsm.dist import WeightedDistribution, make_weighted_dist
from demsm.params import GammaPair, LambdaPair

try:
    from demsm import _kernels as _compiled
except ImportError:
    _compiled = None

KERNEL_NAMES = ("quantile_index", "check_loss", "check_loss_at_quantile", "greedy_box", "grid_scan")


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run a test against each kernel implementation in turn."""
    if request.param == "compiled":
        if _compiled is None:
            pytest.skip("compiled extension not built")
        impl = _compiled
    else:
        impl = _kernels_py
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def uniform3():
    return make_weighted_dist([(0, 1), (1, 1), (2, 1)])


@pytest.fixture
def half_half():
    return make_weighted_dist([(0, 1), (1, 1)])


LAM = LambdaPair(0.5, 2.0)
GAM = GammaPair(0.5, 2.0)


@st.composite
def dists(draw, max_size=6, lo=-3.0, hi=3.0):
    k = draw(st.integers(1, max_size))
    ys = draw(st.lists(st.floats(lo, hi, allow_nan=False), min_size=k, max_size=k, unique=True))
    ws = draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    return WeightedDistribution.from_arrays(ys, ws)


@st.composite
def lambda_pairs(draw, min_lo=0.0, max_hi=5.0):
    return LambdaPair(draw(st.floats(min_lo, 1.0)), draw(st.floats(1.0, max_hi)))


@st.composite
def gamma_pairs(draw, min_lo=0.0, max_hi=5.0):
    return GammaPair(draw(st.floats(min_lo, 1.0)), draw(st.floats(1.0, max_hi)))


def random_dist(rng, max_size=6, scale=2.0):
    k = int(rng.integers(1, max_size + 1))
    y = np.sort(rng.choice(np.arange(0, 10 * scale + 1) / 10, size=k, replace=False))
    return WeightedDistribution.from_arrays(y, rng.dirichlet(np.ones(k)))


def random_lambda(rng, lo=0.0, hi=4.0):
    return LambdaPair(rng.uniform(lo, 1.0), rng.uniform(1.0, hi))


def random_gamma(rng, lo=0.0, hi=4.0):
    return GammaPair(rng.uniform(lo, 1.0), rng.uniform(1.0, hi))
