"""Jackknife multiplier bootstrap draws, quantiles and p-values."""

import math
from dataclasses import dataclass

import numpy as np

from ujack import rng
from ujack.errors import DimensionMismatch, InvalidParameter, NonPositiveScale

# draws per block; fixed so block shapes never depend on the worker count
DRAW_BLOCK = 256


@dataclass(frozen=True)
class MultiplierDrawPlan:
    """``B`` standard-normal multiplier vectors addressed by ``(seed, t)``."""

    B: int
    seed: int
    multiplier_law: str = "normal"

    def __post_init__(self):
        if int(self.B) != self.B or self.B < 1:
            raise InvalidParameter(f"B must be a positive integer, got {self.B!r}")
        if self.multiplier_law != "normal":
            raise InvalidParameter("only standard normal multipliers are supported")


@dataclass(frozen=True)
class BootstrapDraws:
    values: np.ndarray
    B: int
    seed: int

    def quantile(self, alpha):
        return quantile(self, alpha)

    def p_value(self, observed):
        return p_value(self, observed)


def multipliers(seed, t, n):
    """The multiplier vector of draw ``t``."""
    return rng.generator(seed, "multiplier", t).standard_normal(n)


def multiplier_draw(table, xi):
    """``U#(h_t) = n^{-1/2} sum_i xi_i (g[i, t] - u[t])`` for every column."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (table.n,):
        raise DimensionMismatch(f"xi has shape {xi.shape}, expected ({table.n},)")
    return (xi @ table.centered()) / math.sqrt(table.n)


def multiplier_process_draws(table, plan, executor=None):
    """All ``B`` draws of the multiplier process, shape ``(B, n_theta)``."""
    centered = table.centered()
    root_n = math.sqrt(table.n)

    def block(start):
        stop = min(start + DRAW_BLOCK, plan.B)
        xi = np.stack([multipliers(plan.seed, t, table.n) for t in range(start, stop)])
        return (xi @ centered) / root_n

    starts = range(0, plan.B, DRAW_BLOCK)
    parts = list(executor.map(block, starts)) if executor is not None else [block(s) for s in starts]
    return np.concatenate(parts, axis=0)


def bootstrap_sup_draws(table, scale, plan, executor=None):
    """Sorted draws of ``max_t scale[t] * U#(h_t)``."""
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (table.n_theta,):
        raise DimensionMismatch(f"scale has shape {scale.shape}, expected ({table.n_theta},)")
    if not np.all(scale > 0):
        raise NonPositiveScale("every scale entry must be positive")
    centered = table.centered() * scale[None, :]
    root_n = math.sqrt(table.n)

    def block(start):
        stop = min(start + DRAW_BLOCK, plan.B)
        xi = np.stack([multipliers(plan.seed, t, table.n) for t in range(start, stop)])
        return np.max((xi @ centered) / root_n, axis=1)

    starts = range(0, plan.B, DRAW_BLOCK)
    parts = list(executor.map(block, starts)) if executor is not None else [block(s) for s in starts]
    values = np.sort(np.concatenate(parts))
    values.setflags(write=False)
    return BootstrapDraws(values, plan.B, plan.seed)


def conditional_covariance(table, t1, t2):
    """``n^{-1} sum_i (g[i,t1] - u[t1]) (g[i,t2] - u[t2])``."""
    c = table.centered()
    return math.fsum(c[:, t1] * c[:, t2]) / table.n


def conditional_covariance_matrix(table):
    c = table.centered()
    return (c.T @ c) / table.n


def conditional_variances(table):
    c = table.centered()
    return np.array([math.fsum(col * col) for col in c.T]) / table.n


def quantile(draws, alpha):
    """``inf{t : F_B(t) >= alpha}``, i.e. the ``ceil(alpha B)``-th order statistic."""
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha!r}")
    # 1e-9 absorbs representation error in alpha * B (e.g. 0.95 * 20)
    k = max(1, math.ceil(alpha * draws.B - 1e-9))
    return float(draws.values[k - 1])


def p_value(draws, observed):
    """``(1 + #{draws >= observed}) / (B + 1)``."""
    exceed = draws.B - int(np.searchsorted(draws.values, observed, side="left"))
    return (1 + exceed) / (draws.B + 1)
