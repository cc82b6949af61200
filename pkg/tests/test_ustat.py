import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import brute_g, brute_u
from ujack.errors import SampleTooSmall
from ujack.kernels import LocalKernelSpec, SymmetricKernel, epanechnikov, gsv_base_kernel
from ujack.oracles import random_local_instance
from ujack.sample import Sample, synthesize_null_regression
from ujack.ustat import (
    iter_combinations,
    jackknife_table,
    u_statistic_exact,
    u_statistic_incomplete,
    u_statistic_pruned,
)


def const(c, r=2):
    return SymmetricKernel(r, lambda xs, vs: np.full(xs.shape[0], c), "const")


def triple_product():
    return SymmetricKernel(3, lambda xs, vs: np.prod(vs[:, :, 0], axis=1), "prod3")


@pytest.mark.parametrize("n, r", [(5, 1), (6, 2), (7, 3), (8, 4), (9, 5)])
def test_combinations_lexicographic(n, r):
    got = np.concatenate(list(iter_combinations(n, r, block=7)))
    want = np.array(list(itertools.combinations(range(n), r)))
    np.testing.assert_array_equal(got, want)


def test_constant_kernel(null_sample):
    assert u_statistic_exact(null_sample, const(1.0)) == 1.0


def test_product_kernel_exact(product_sample, product_kernel):
    # ordered pairs: sum_{i != j} a_i a_j / 12 = ((10^2 - 30) / 12)
    want = Fraction(10**2 - 30, 12)
    assert want == Fraction(35, 6)
    assert u_statistic_exact(product_sample, product_kernel) == pytest.approx(35 / 6, rel=1e-15)


def test_order_three_against_triple_loop():
    s = Sample(np.zeros(5), [1.0, 1.0, 2.0, 3.0, 5.0])
    assert abs(u_statistic_exact(s, triple_product()) - brute_u(s, triple_product())) <= 1e-13


def test_sample_too_small():
    s = Sample(np.zeros(2), [1.0, 2.0])
    with pytest.raises(SampleTooSmall):
        u_statistic_exact(s, triple_product())
    with pytest.raises(SampleTooSmall):
        jackknife_table(s, [SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0], "h")])


def test_pruned_far_design_point(null_sample):
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (5.0,), 0.2)
    assert u_statistic_pruned(null_sample, spec) == 0.0


def test_pruned_matches_exact_n200(null_sample):
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.4,), 0.3)
    exact = u_statistic_exact(null_sample, spec.as_kernel())
    assert u_statistic_pruned(null_sample, spec) == pytest.approx(exact, rel=1e-12)


def test_pruned_wide_bandwidth_is_noop(null_sample):
    diam = np.ptp(null_sample.X)
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.5,), 2 * diam)
    assert u_statistic_pruned(null_sample, spec) == u_statistic_exact(null_sample, spec.as_kernel())


def test_pruned_equals_exact_random_instances():
    for i in range(50):
        _, sample, specs = random_local_instance(1234, i)
        for spec in specs[:1]:
            exact = u_statistic_exact(sample, spec.as_kernel())
            pruned = u_statistic_pruned(sample, spec)
            assert abs(pruned - exact) <= 1e-12 * abs(exact) + 1e-300


def test_jackknife_product_example(product_sample, product_kernel):
    t = jackknife_table(product_sample, [product_kernel])
    np.testing.assert_allclose(t.g[:, 0], [3, 16 / 3, 7, 8], rtol=1e-15)
    assert t.u[0] == pytest.approx(35 / 6, rel=1e-15)
    assert t.g[:, 0].mean() == pytest.approx(35 / 6, rel=1e-15)


def test_jackknife_constant(null_sample):
    t = jackknife_table(null_sample, [const(2.5), const(-1.0)])
    assert np.all(t.g[:, 0] == 2.5) and np.all(t.g[:, 1] == -1.0)
    np.testing.assert_array_equal(t.u, [2.5, -1.0])


def test_jackknife_matches_brute_force_gsv():
    s = synthesize_null_regression(30, "gaussian:0.1", 3)
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.5,), 0.35)
    t = jackknife_table(s, [spec])
    h = spec.as_kernel()
    for i in range(s.n):
        assert abs(t.g[i, 0] - brute_g(s, h, i)) <= 1e-13


def test_jackknife_matches_brute_force_order3():
    s = Sample(np.zeros(7), [0.5, -1.0, 2.0, 3.0, 0.1, 1.5, -0.7])
    t = jackknife_table(s, [triple_product()])
    for i in range(s.n):
        assert abs(t.g[i, 0] - brute_g(s, triple_product(), i)) <= 1e-13


def test_jackknife_r2_direct_formula(null_sample):
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.6,), 0.4)
    t = jackknife_table(null_sample, [spec])
    n = null_sample.n
    xs = np.stack(np.broadcast_arrays(null_sample.X[:, None, :], null_sample.X[None, :, :]), axis=2)
    vs = np.stack(np.broadcast_arrays(null_sample.V[:, None, :], null_sample.V[None, :, :]), axis=2)
    H = spec(xs.reshape(n * n, 2, 1), vs.reshape(n * n, 2, 2)).reshape(n, n)
    np.fill_diagonal(H, 0.0)
    direct = H.sum(axis=1) / (n - 1)
    np.testing.assert_allclose(t.g[:, 0], direct, rtol=1e-12, atol=1e-14)


def test_averaging_identity_random():
    for i in range(20):
        _, sample, specs = random_local_instance(77, i)
        t = jackknife_table(sample, specs)
        assert np.all(np.abs(t.g.mean(axis=0) - t.u) <= 1e-12 * (1 + np.abs(t.u)))


def test_shuffle_invariance(null_sample):
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.3,), 0.4)
    base = u_statistic_exact(null_sample, spec.as_kernel())
    perm = np.random.default_rng(5).permutation(null_sample.n)
    shuffled = u_statistic_exact(null_sample.take(perm), spec.as_kernel())
    assert abs(shuffled - base) <= 1e-12 * max(1.0, abs(base))


def test_incomplete_constant_and_determinism(null_sample):
    assert u_statistic_incomplete(null_sample, const(1.0), 17, seed=3) == 1.0
    h = triple_product()
    assert u_statistic_incomplete(null_sample, h, 500, 8) == u_statistic_incomplete(null_sample, h, 500, 8)


def test_incomplete_close_to_exact():
    s = Sample(np.zeros(6), [0.3, -1.2, 2.0, 0.7, 1.1, -0.4])
    h = SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0] * vs[:, 1, 0], "prod")
    exact = u_statistic_exact(s, h)
    pairs = np.array(list(itertools.combinations(range(6), 2)))
    sd = np.std(s.V[pairs, 0].prod(axis=1))
    est = u_statistic_incomplete(s, h, 10**5, seed=1)
    assert abs(est - exact) <= 3 * sd / math.sqrt(10**5)


def test_incomplete_table_averaging():
    s = synthesize_null_regression(80, "gaussian:0.1", 2)
    spec = LocalKernelSpec(gsv_base_kernel(), epanechnikov(), (0.5,), 0.4)
    t = jackknife_table(s, [spec], incomplete_terms=20000, seed=4)
    exact = jackknife_table(s, [spec])
    assert abs(t.g.mean() - t.u[0]) <= 1e-12 * (1 + abs(t.u[0]))
    assert abs(t.u[0] - exact.u[0]) < 0.1 * np.abs(exact.g).max()
