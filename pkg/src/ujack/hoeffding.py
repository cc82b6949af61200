"""Exact Hoeffding projections over finitely supported distributions.

Everything here is computed by full enumeration over the support, so the
results are exact up to floating-point rounding. Enumeration sizes are
guarded by an explicit budget.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ujack import rng
from ujack.errors import BudgetExceeded, InvalidParameter, NotCentered
from ujack.kernels import SymmetricKernel
from ujack.sample import Observation, Sample
from ujack.ustat import u_statistic_exact

DEFAULT_BUDGET = 10**7
DEFAULT_TOL = 1e-10


class DiscreteDistribution:
    """Probability measure on finitely many observations."""

    def __init__(self, support, probs):
        support = [s if isinstance(s, Observation) else Observation(*s) for s in support]
        probs = np.asarray(probs, dtype=float)
        if not support:
            raise InvalidParameter("support must be non-empty")
        if probs.shape != (len(support),):
            raise InvalidParameter("need one probability per support point")
        if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidParameter("probabilities must be non-negative and sum to 1")
        self.support = support
        self.probs = probs
        self.X = np.array([s.x for s in support], dtype=float)
        self.V = np.array([s.v for s in support], dtype=float)

    @classmethod
    def uniform_on_payloads(cls, values, x=0.0):
        values = list(values)
        return cls([Observation((x,), (float(v),)) for v in values], np.full(len(values), 1 / len(values)))

    @classmethod
    def empirical(cls, sample):
        return cls(sample.observations, np.full(sample.n, 1 / sample.n))

    @property
    def size(self):
        return len(self.support)


@dataclass(frozen=True)
class ProjectedKernel(SymmetricKernel):
    """A kernel of arity ``k`` derived from a source kernel by projection."""

    source: str = ""

    @property
    def k(self):
        return self.order

    def value(self):
        """Value of an arity-0 projection (a constant)."""
        if self.order != 0:
            raise InvalidParameter("value() is only defined for arity 0")
        return self.evaluate()


def _support_grid(P, count, budget):
    size = P.size**count
    if size > budget:
        raise BudgetExceeded(f"enumeration of {P.size}^{count} = {size} terms exceeds budget {budget}")
    idx = np.array(list(itertools.product(range(P.size), repeat=count)), dtype=np.intp).reshape(size, count)
    weights = np.prod(P.probs[idx], axis=1) if count else np.ones(1)
    return idx, weights


def marginalize(h, P, k, budget=DEFAULT_BUDGET):
    """``P^{r-k} h``: integrate out the last ``r - k`` arguments under ``P``."""
    r = h.order
    if not 0 <= k <= r:
        raise InvalidParameter(f"k must lie in [0, {r}]")
    if k == r:
        return ProjectedKernel(r, h.func, h.label, source=f"P^0 {h.label}")
    idx, weights = _support_grid(P, r - k, budget)
    G = len(weights)
    chunk = max(1, (1 << 18) // G)

    def func(xs, vs):
        T = xs.shape[0]
        out = np.empty(T)
        for start in range(0, T, chunk):
            xb, vb = xs[start : start + chunk], vs[start : start + chunk]
            t = xb.shape[0]
            fx = np.repeat(xb, G, axis=0)
            fv = np.repeat(vb, G, axis=0)
            gx = np.tile(P.X[idx], (t, 1, 1))
            gv = np.tile(P.V[idx], (t, 1, 1))
            vals = h(np.concatenate([fx, gx], axis=1), np.concatenate([fv, gv], axis=1))
            out[start : start + t] = vals.reshape(t, G) @ weights
        return out

    return ProjectedKernel(k, func, f"P^{r - k} {h.label}", source=f"P^{r - k} {h.label}")


def hoeffding_projection(h, P, k, budget=DEFAULT_BUDGET):
    """``pi_k h(x_1..x_k) = sum_{A subset [k]} (-1)^{k-|A|} (P^{r-|A|} h)(x_A)``."""
    r = h.order
    if not 1 <= k <= r:
        raise InvalidParameter(f"k must lie in [1, {r}]")
    marginals = [marginalize(h, P, j, budget) for j in range(k + 1)]
    subsets = [
        (sub, (-1) ** (k - len(sub))) for j in range(k + 1) for sub in itertools.combinations(range(k), j)
    ]

    def func(xs, vs):
        T = xs.shape[0]
        total = np.zeros(T)
        for sub, coef in subsets:
            cols = list(sub)
            if cols:
                vals = marginals[len(cols)](xs[:, cols, :], vs[:, cols, :])
            else:
                vals = np.full(T, marginals[0](np.zeros((1, 0, P.X.shape[1])), np.zeros((1, 0, P.V.shape[1])))[0])
            total += coef * vals
        return total

    return ProjectedKernel(k, func, f"pi_{k} {h.label}", source=f"pi_{k} {h.label}")


def full_mean(h, P, budget=DEFAULT_BUDGET):
    """``P^r h``."""
    return marginalize(h, P, 0, budget).value()


def _on_support(kernel, P, budget):
    """Values of ``kernel`` on every point of ``support^k``."""
    idx, _ = _support_grid(P, kernel.order, budget)
    return kernel(P.X[idx], P.V[idx])


def degeneracy_order(h, P, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET):
    """Largest ``k`` in ``0..r-1`` such that ``P^{r-k} h`` vanishes on ``support^k``.

    ``0`` means non-degenerate, ``r - 1`` means completely degenerate. The
    kernel must already be centered (``P^r h = 0``).
    """
    if not tol > 0:
        raise InvalidParameter("tol must be positive")
    mean = full_mean(h, P, budget)
    if abs(mean) > tol:
        raise NotCentered(f"P^r h = {mean!r}; center the kernel first")
    order = 0
    for k in range(1, h.order):
        vals = _on_support(marginalize(h, P, k, budget), P, budget)
        if np.max(np.abs(vals)) > tol:
            break
        order = k
    return order


def is_completely_degenerate(h, P, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET):
    return degeneracy_order(h, P, tol, budget) == h.order - 1


def verify_hoeffding_decomposition(sample, h, P=None, tol=DEFAULT_TOL, budget=DEFAULT_BUDGET):
    """Compare ``U_n(h) - P^r h`` with ``sum_k C(r, k) U_n^{(k)}(pi_k h)``.

    ``P`` defaults to the empirical distribution of ``sample``; the identity
    holds for any ``P``.
    """
    if P is None:
        P = DiscreteDistribution.empirical(sample)
    r = h.order
    lhs = u_statistic_exact(sample, h) - full_mean(h, P, budget)
    terms = [math.comb(r, k) * u_statistic_exact(sample, hoeffding_projection(h, P, k, budget)) for k in range(1, r + 1)]
    rhs = math.fsum(terms)
    residual = abs(lhs - rhs)
    return {"lhs": lhs, "rhs": rhs, "max_abs_residual": residual, "ok": residual <= tol}


def projection_marginal_residual(h, P, k, budget=DEFAULT_BUDGET):
    """Largest ``|sum_x P(x) pi_k h(z_1..z_{k-1}, x)|`` over support fixings."""
    proj = hoeffding_projection(h, P, k, budget)
    marg = marginalize(proj, P, k - 1, budget)
    if k == 1:
        return abs(marg.value())
    return float(np.max(np.abs(_on_support(marg, P, budget))))


def random_polynomial_kernel(r, gen, degree=2):
    """Random symmetric polynomial in scalar payloads (power-sum basis)."""
    powers = [(p, float(c)) for p in range(1, degree + 1) for c in [gen.normal()]]
    pair = float(gen.normal())
    const = float(gen.normal())

    def func(xs, vs):
        a = vs[:, :, 0]
        out = np.full(a.shape[0], const)
        for p, c in powers:
            out = out + c * np.sum(a**p, axis=1)
        if a.shape[1] >= 2:
            out = out + pair * (np.sum(a, axis=1) ** 2 - np.sum(a * a, axis=1))
        return out + np.prod(a, axis=1)

    return SymmetricKernel(r, func, f"poly{r}")


def random_instance(seed, index):
    """One randomized oracle instance: (sample, kernel, distribution)."""
    gen = rng.generator(seed, "hoeffding-suite", index)
    r = int(gen.integers(1, 4))
    n = int(gen.integers(max(r, 2), 9))
    atoms = int(gen.integers(1, 5))
    values = gen.uniform(-1, 1, atoms)
    probs = gen.dirichlet(np.ones(atoms))
    probs = probs / math.fsum(probs)
    P = DiscreteDistribution([Observation((0.0,), (float(v),)) for v in values], probs)
    sample = Sample(np.zeros(n), gen.uniform(-1.5, 1.5, n))
    return sample, random_polynomial_kernel(r, gen), P


def run_oracle_suite(seed, instances=20, budget=DEFAULT_BUDGET):
    """Randomized decomposition and degeneracy checks; returns a JSON-able dict."""
    decomposition = []
    degeneracy = []
    for i in range(instances):
        sample, h, P = random_instance(seed, i)
        rep = verify_hoeffding_decomposition(sample, h, P, budget=budget)
        decomposition.append(rep["max_abs_residual"])
        for k in range(1, h.order + 1):
            degeneracy.append(projection_marginal_residual(h, P, k, budget))
    return {
        "seed": int(seed),
        "instances": instances,
        "decomposition_max_abs_residual": max(decomposition),
        "degeneracy_max_abs_marginal": max(degeneracy),
        "decomposition_residuals": decomposition,
        "projections_checked": len(degeneracy),
    }
