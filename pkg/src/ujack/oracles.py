"""Randomized identity checks shared by the ``oracle`` command and the tests."""

import numpy as np

from ujack import rng
from ujack.kernels import LocalKernelSpec, base_kernel, epanechnikov, uniform
from ujack.sample import Sample
from ujack.ustat import jackknife_table, u_statistic_exact, u_statistic_pruned

_METHODS = ("gsv", "llw", "aw-sign", "aw-raw")


def random_local_instance(seed, index, max_n=60, n_theta=3):
    """A random regression sample with a few localized kernels."""
    gen = rng.generator(seed, "local-instance", index)
    method = _METHODS[int(gen.integers(len(_METHODS)))]
    cap = max_n if method in ("gsv", "llw") else min(max_n, 40)
    n = int(gen.integers(5, cap + 1))
    x = gen.random(n)
    # rounding creates ties in both coordinates
    y = np.round(gen.normal(size=n) + 0.5 * x, int(gen.integers(1, 4)))
    sample = Sample(x[:, None], np.column_stack([x, y]))
    L = epanechnikov() if gen.random() < 0.7 else uniform()
    specs = []
    for _ in range(n_theta):
        thr = float(gen.choice(y)) if method == "llw" else None
        specs.append(LocalKernelSpec(base_kernel(method, 1, thr), L, (float(gen.random()),), float(gen.uniform(0.1, 0.8))))
    return method, sample, specs


def averaging_residual(table):
    """``max_t |mean_i g[i, t] - u[t]| / (1 + |u[t]|)``."""
    gap = np.abs(table.g.mean(axis=0) - table.u) / (1 + np.abs(table.u))
    return float(np.max(gap))


def jackknife_suite(seed, instances=50):
    """Averaging identity and pruned-vs-exact agreement on random instances."""
    averaging = []
    pruned = []
    methods = []
    for i in range(instances):
        method, sample, specs = random_local_instance(seed, i)
        methods.append(method)
        table = jackknife_table(sample, specs)
        averaging.append(averaging_residual(table))
        spec = specs[0]
        exact = u_statistic_exact(sample, spec.as_kernel())
        fast = u_statistic_pruned(sample, spec)
        pruned.append(abs(exact - fast) / max(abs(exact), 1e-300) if exact != fast else 0.0)
    return {
        "seed": int(seed),
        "instances": instances,
        "methods": methods,
        "averaging_max_rel_residual": max(averaging),
        "pruned_max_rel_difference": max(pruned),
    }
