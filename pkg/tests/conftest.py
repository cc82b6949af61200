import itertools
import math

import numpy as np
import pytest

from ujack.kernels import SymmetricKernel
from ujack.sample import Sample, synthesize_null_regression


def brute_u(sample, h):
    """Average of h over all ordered tuples of distinct indices, one at a time."""
    total = []
    for idx in itertools.permutations(range(sample.n), h.order):
        xs = sample.X[list(idx)][None]
        vs = sample.V[list(idx)][None]
        total.append(float(h(xs, vs)[0]))
    return math.fsum(total) / len(total)


def brute_g(sample, h, i):
    """Leave-one-out U-statistic of h(D_i, .) over ordered (r-1)-tuples."""
    others = [j for j in range(sample.n) if j != i]
    vals = []
    for idx in itertools.permutations(others, h.order - 1):
        rows = [i] + list(idx)
        vals.append(float(h(sample.X[rows][None], sample.V[rows][None])[0]))
    return math.fsum(vals) / len(vals)


@pytest.fixture
def product_kernel():
    return SymmetricKernel(2, lambda xs, vs: vs[:, 0, 0] * vs[:, 1, 0], "prod")


@pytest.fixture
def product_sample():
    return Sample(np.zeros(4), [1.0, 2.0, 3.0, 4.0])


@pytest.fixture
def null_sample():
    return synthesize_null_regression(200, ("gaussian", 0.1), 11)
