"""U-statistics, leave-one-out jackknife tables and incomplete evaluation.

Tuples are enumerated once as unordered index subsets in lexicographic
order; since kernels are symmetric, the average over ordered tuples equals
the average over subsets. Sums are accumulated with compensation
(``math.fsum`` within a block, Neumaier across blocks).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ujack import rng
from ujack.errors import InvalidParameter, SampleTooSmall
from ujack.kernels import LocalKernelSpec

BLOCK = 1 << 16


def _all_combinations(n, r):
    if r == 0:
        return np.zeros((1, 0), dtype=np.intp)
    if r > n:
        return np.zeros((0, r), dtype=np.intp)
    if r == 1:
        return np.arange(n, dtype=np.intp)[:, None]
    if r == 2:
        i, j = np.triu_indices(n, 1)
        return np.column_stack([i, j]).astype(np.intp)
    parts = []
    for i in range(n - r + 1):
        tail = _all_combinations(n - i - 1, r - 1) + (i + 1)
        parts.append(np.column_stack([np.full(len(tail), i, dtype=np.intp), tail]))
    return np.concatenate(parts)


def iter_combinations(n, r, block=BLOCK):
    """Yield all ``r``-subsets of ``range(n)`` in lexicographic order, in blocks."""
    total = math.comb(n, r) if r <= n else 0
    if total == 0:
        return
    if total <= block or r <= 1:
        combos = _all_combinations(n, r)
        for start in range(0, len(combos), block):
            yield combos[start : start + block]
        return
    for i in range(n - r + 1):
        for tail in iter_combinations(n - i - 1, r - 1, block):
            head = np.full((len(tail), 1), i, dtype=np.intp)
            yield np.concatenate([head, tail + (i + 1)], axis=1)


class CompensatedSum:
    """Neumaier accumulator over arrays of running sums."""

    def __init__(self, shape=()):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x):
        x = np.asarray(x, dtype=float)
        t = self.s + x
        big = np.abs(self.s) >= np.abs(x)
        self.c += np.where(big, (self.s - t) + x, (x - t) + self.s)
        self.s = t

    @property
    def value(self):
        return self.s + self.c


def _check_order(n, r, need):
    if n < need:
        raise SampleTooSmall(f"need n >= {need} for an order-{r} kernel, got n = {n}")


def _tuple_values(sample, h, combos):
    return h(sample.X[combos], sample.V[combos])


def u_statistic_exact(sample, h):
    """Complete U-statistic ``U_n(h)`` by enumerating every ``r``-subset."""
    r = h.order
    _check_order(sample.n, r, r)
    acc = CompensatedSum()
    for combos in iter_combinations(sample.n, r):
        acc.add(math.fsum(_tuple_values(sample, h, combos)))
    return float(acc.value) / math.comb(sample.n, r)


def support_indices(sample, spec):
    """Indices whose covariate lies in the bandwidth box of ``spec``.

    Observations are bucketed on a grid of side ``b`` and only the ``3^m``
    cells around the design point are scanned; the exact box test runs on
    that candidate set. The result is sorted ascending.
    """
    b = spec.bandwidth * spec.smoothing.support_radius
    x = np.asarray(spec.design_point)
    cells = np.floor(sample.X / b).astype(np.int64)
    home = np.floor(x / b).astype(np.int64)
    near = np.all(np.abs(cells - home) <= 1, axis=1)
    candidates = np.flatnonzero(near)
    keep = spec.in_box(sample.X[candidates])
    return candidates[keep]


def u_statistic_pruned(sample, spec):
    """``U_n`` of a localized kernel, enumerating only in-box observations.

    Agrees with :func:`u_statistic_exact` on the composed kernel up to
    summation rounding: dropped tuples contribute exact zeros and surviving
    tuples are visited in the same relative order.
    """
    r = spec.order
    _check_order(sample.n, r, r)
    idx = support_indices(sample, spec)
    acc = CompensatedSum()
    for combos in iter_combinations(len(idx), r):
        acc.add(math.fsum(_tuple_values(sample, spec, idx[combos])))
    return float(acc.value) / math.comb(sample.n, r)


@dataclass
class JackknifeTable:
    """Leave-one-out values ``g[i, t]`` and full U-statistics ``u[t]``.

    ``g[i, t]`` is the order-``(r-1)`` U-statistic of ``h_t(D_i, .)`` over the
    sample without observation ``i``.
    """

    g: np.ndarray
    u: np.ndarray
    n: int
    r: int
    theta_labels: list = field(default_factory=list)

    @property
    def n_theta(self):
        return self.u.shape[0]

    def centered(self):
        return self.g - self.u[None, :]

    def select(self, columns):
        columns = list(columns)
        return JackknifeTable(
            self.g[:, columns],
            self.u[columns],
            self.n,
            self.r,
            [self.theta_labels[c] for c in columns] if self.theta_labels else [],
        )

    def negated(self):
        return JackknifeTable(-self.g, -self.u, self.n, self.r, [f"-{t}" for t in self.theta_labels])

    @staticmethod
    def concat(tables):
        tables = list(tables)
        return JackknifeTable(
            np.concatenate([t.g for t in tables], axis=1),
            np.concatenate([t.u for t in tables]),
            tables[0].n,
            tables[0].r,
            sum((list(t.theta_labels) for t in tables), []),
        )


def _jackknife_column(sample, h, idx):
    """Per-observation tuple sums and the total, over subsets of ``idx``."""
    n, r = sample.n, h.order
    per_obs = CompensatedSum(n)
    total = CompensatedSum()
    for combos in iter_combinations(len(idx), r):
        rows = idx[combos]
        vals = _tuple_values(sample, h, rows)
        total.add(math.fsum(vals))
        block = np.zeros(n)
        for k in range(r):
            block += np.bincount(rows[:, k], weights=vals, minlength=n)
        per_obs.add(block)
    return per_obs.value, float(total.value)


def _incomplete_column(sample, h, n_terms, gen):
    n, r = sample.n, h.order
    rows = _random_subsets(n, r, n_terms, gen)
    vals = _tuple_values(sample, h, rows)
    per_obs = np.zeros(n)
    for k in range(r):
        per_obs += np.bincount(rows[:, k], weights=vals, minlength=n)
    u = math.fsum(vals) / n_terms
    # each sampled subset stands in for C(n, r) / n_terms subsets
    g = per_obs * (n / (r * n_terms))
    return g, u


def _random_subsets(n, r, count, gen):
    """``count`` uniform draws of ``r`` distinct indices (rejection sampling)."""
    out = np.empty((count, r), dtype=np.intp)
    filled = 0
    while filled < count:
        need = count - filled
        cand = gen.integers(0, n, size=(need + need // 4 + 8, r))
        srt = np.sort(cand, axis=1)
        ok = np.all(np.diff(srt, axis=1) > 0, axis=1) if r > 1 else np.ones(len(cand), bool)
        good = srt[ok][:need]
        out[filled : filled + len(good)] = good
        filled += len(good)
    return out


def jackknife_table(sample, kernels, incomplete_terms=None, seed=0, labels=None, executor=None):
    """Build the leave-one-out table over a list of kernels or local specs.

    Local specs are pruned to their bandwidth box: observations outside it
    have ``g[i] = 0`` exactly because the composed kernel carries the factor
    ``L_b(x - x_i)``. With ``incomplete_terms`` each column is estimated from
    that many uniformly drawn subsets instead (opt-in).
    """
    kernels = list(kernels)
    if not kernels:
        raise InvalidParameter("need at least one kernel")
    r = kernels[0].order
    if any(h.order != r for h in kernels):
        raise InvalidParameter("all kernels in a table must share the same order")
    n = sample.n
    _check_order(n, r, r + 1)
    if incomplete_terms is not None and int(incomplete_terms) < 1:
        raise InvalidParameter("incomplete_terms must be >= 1")
    denom_g = math.comb(n - 1, r - 1)
    denom_u = math.comb(n, r)
    full = np.arange(n)

    def column(t):
        h = kernels[t]
        if incomplete_terms is not None:
            return _incomplete_column(sample, h, int(incomplete_terms), rng.generator(seed, "incomplete-table", t))
        idx = support_indices(sample, h) if isinstance(h, LocalKernelSpec) else full
        per_obs, total = _jackknife_column(sample, h, idx)
        return per_obs / denom_g, total / denom_u

    if executor is None:
        cols = [column(t) for t in range(len(kernels))]
    else:
        cols = list(executor.map(column, range(len(kernels))))
    g = np.column_stack([c[0] for c in cols])
    u = np.array([c[1] for c in cols])
    if labels is None:
        labels = [getattr(h, "label", f"h{t}") for t, h in enumerate(kernels)]
    return JackknifeTable(g, u, n, r, list(labels))


def u_statistic_incomplete(sample, h, n_terms, seed):
    """Average of ``h`` over ``n_terms`` uniformly drawn ``r``-subsets."""
    r = h.order
    _check_order(sample.n, r, r)
    if int(n_terms) < 1:
        raise InvalidParameter("n_terms must be >= 1")
    gen = rng.generator(seed, "incomplete")
    acc = CompensatedSum()
    remaining = int(n_terms)
    while remaining > 0:
        take = min(remaining, BLOCK)
        rows = _random_subsets(sample.n, r, take, gen)
        acc.add(math.fsum(_tuple_values(sample, h, rows)))
        remaining -= take
    return float(acc.value) / int(n_terms)
