import numpy as np
import pytest

from ujack import rng
from ujack.errors import BudgetExceeded, NotCentered
from ujack.hoeffding import (
    DiscreteDistribution,
    degeneracy_order,
    full_mean,
    hoeffding_projection,
    is_completely_degenerate,
    marginalize,
    projection_marginal_residual,
    random_instance,
    verify_hoeffding_decomposition,
)
from ujack.kernels import SymmetricKernel
from ujack.sample import Observation, Sample


def O(v):
    return Observation((0.0,), (float(v),))


@pytest.fixture
def prod():
    return SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0] * vs[:, 1, 0], "prod")


@pytest.fixture
def P01():
    return DiscreteDistribution.uniform_on_payloads([0, 1])


@pytest.mark.parametrize("a", [0.0, 1.0, 2.5, -3.0])
def test_first_marginal(prod, P01, a):
    assert marginalize(prod, P01, 1).evaluate(O(a)) == pytest.approx(a / 2, abs=1e-15)


def test_identity_and_full_marginal(prod, P01):
    same = marginalize(prod, P01, 2)
    assert same.evaluate(O(2), O(3)) == 6.0
    assert marginalize(prod, P01, 0).value() == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("a, b", [(0, 1), (2, 3), (-1, 0.5)])
def test_projections_by_hand(prod, P01, a, b):
    assert hoeffding_projection(prod, P01, 1).evaluate(O(a)) == pytest.approx(a / 2 - 0.25, abs=1e-15)
    want = a * b - a / 2 - b / 2 + 0.25
    assert hoeffding_projection(prod, P01, 2).evaluate(O(a), O(b)) == pytest.approx(want, abs=1e-14)


def test_constant_projects_to_zero():
    h = SymmetricKernel(3, lambda xs, vs: np.full(xs.shape[0], 4.2), "c")
    P = DiscreteDistribution.uniform_on_payloads([0, 1, 5])
    for k in (1, 2, 3):
        proj = hoeffding_projection(h, P, k)
        assert abs(proj.evaluate(*[O(t) for t in (0.3, 1, 5)[:k]])) <= 1e-14


def test_budget_guard(prod):
    P = DiscreteDistribution.uniform_on_payloads(range(10))
    with pytest.raises(BudgetExceeded):
        marginalize(prod, P, 0, budget=50)


def _centered(P):
    mu = float(np.dot(P.probs, P.V[:, 0]))
    return mu


def test_degeneracy_product_is_complete():
    P = DiscreteDistribution([O(0), O(1), O(3)], [0.2, 0.5, 0.3])
    mu = _centered(P)
    h = SymmetricKernel(2, lambda xs, vs: (vs[:, 0, 0] - mu) * (vs[:, 1, 0] - mu), "cprod")
    assert degeneracy_order(h, P) == 1
    assert is_completely_degenerate(h, P)


def test_degeneracy_sum_is_nondegenerate():
    P = DiscreteDistribution([O(0), O(1), O(3)], [0.2, 0.5, 0.3])
    mu = _centered(P)
    h = SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0] + vs[:, 1, 0] - 2 * mu, "csum")
    assert degeneracy_order(h, P) == 0


def test_degeneracy_zero_kernel():
    P = DiscreteDistribution.uniform_on_payloads([0, 1])
    h = SymmetricKernel(3, lambda xs, vs: np.zeros(xs.shape[0]), "zero")
    assert degeneracy_order(h, P) == 2


def test_degeneracy_requires_centering(prod, P01):
    with pytest.raises(NotCentered):
        degeneracy_order(prod, P01)


def test_decomposition_product_kernel(prod):
    s = Sample(np.zeros(6), [0.5, 1.0, 2.0, -1.0, 3.0, 0.0])
    P = DiscreteDistribution.uniform_on_payloads([0, 1, 2])
    assert verify_hoeffding_decomposition(s, prod, P)["max_abs_residual"] <= 1e-10


def test_decomposition_cubic_random():
    gen = rng.generator(5, "test")
    c = gen.normal(size=4)

    def poly(xs, vs):
        a = vs[:, :, 0]
        return c[0] + c[1] * a.sum(1) + c[2] * (a**2).sum(1) + c[3] * a.prod(1)

    h = SymmetricKernel(3, poly, "poly")
    P = DiscreteDistribution([O(t) for t in gen.uniform(-1, 1, 4)], gen.dirichlet(np.ones(4)))
    s = Sample(np.zeros(8), gen.normal(size=8))
    assert verify_hoeffding_decomposition(s, h, P)["max_abs_residual"] <= 1e-10


def test_decomposition_constant():
    h = SymmetricKernel(2, lambda xs, vs: np.full(xs.shape[0], 3.0), "c")
    s = Sample(np.zeros(5), np.arange(5.0))
    rep = verify_hoeffding_decomposition(s, h, DiscreteDistribution.uniform_on_payloads([1, 2]))
    assert rep["lhs"] == 0 and rep["max_abs_residual"] == 0


def test_randomized_decomposition_and_degeneracy():
    for i in range(20):
        sample, h, P = random_instance(31, i)
        assert verify_hoeffding_decomposition(sample, h, P)["max_abs_residual"] <= 1e-10
        for k in range(1, h.order + 1):
            assert projection_marginal_residual(h, P, k) <= 1e-10


def test_tower_property():
    for i in range(10):
        _, h, P = random_instance(8, i)
        direct = full_mean(h, P)
        for k in range(h.order + 1):
            via = marginalize(marginalize(h, P, k), P, 0).value()
            assert abs(via - direct) <= 1e-12 * max(1.0, abs(direct))


def test_projection_symmetric():
    _, h, P = random_instance(3, 2)
    if h.order < 2:
        h = SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0] ** 2 * vs[:, 1, 0] + vs[:, 1, 0] ** 2 * vs[:, 0, 0])
    proj = hoeffding_projection(h, P, 2)
    assert proj.evaluate(O(0.3), O(-1.1)) == pytest.approx(proj.evaluate(O(-1.1), O(0.3)), abs=1e-13)
