"""Sup-type tests built on generalized local U-processes.

For a grid of parameters ``theta = (x, phi, b)`` the observed statistic is

    S = max_theta sqrt(n b^m) (U_n(h_theta) - center_theta) / (r c_theta)

and its bootstrap analogue is ``max_theta b^{m/2} U#(h_theta) / c_theta``
where ``c_theta`` is the jackknife normalizing constant. The test rejects
when ``S`` exceeds the ``(1 - alpha)`` bootstrap quantile.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ujack import jmb
from ujack.errors import (
    AllThetaDegenerate,
    DegenerateNormalizer,
    InputError,
    InvalidParameter,
    SampleTooSmall,
)
from ujack.kernels import LocalKernelSpec, base_kernel, method_order, smoothing_kernel
from ujack.ustat import jackknife_table

log = logging.getLogger(__name__)

# complete enumeration is the default up to C(300, 3) subsets per column
COMPLETE_BUDGET = math.comb(300, 3)


def design_grid(grid_min=0.05, grid_max=0.95, points=19, m=1):
    """Equidistant design points; tensor product over axes when ``m > 1``."""
    if int(points) != points or points < 1:
        raise InvalidParameter("grid_points must be a positive integer")
    lo = np.broadcast_to(np.asarray(grid_min, dtype=float), (m,))
    hi = np.broadcast_to(np.asarray(grid_max, dtype=float), (m,))
    if np.any(hi < lo):
        raise InvalidParameter("grid_max must be >= grid_min")
    axes = [np.linspace(lo[j], hi[j], int(points)) for j in range(m)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([a.ravel() for a in mesh])


@dataclass
class ThetaGrid:
    """Parameter grid: design points x bandwidths (x y-thresholds for llw)."""

    design_points: np.ndarray
    base: str
    bandwidths: list
    y_thresholds: list = None
    two_sided: bool = False

    def __post_init__(self):
        pts = np.asarray(self.design_points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] == 0:
            raise InvalidParameter("need at least one design point")
        self.design_points = pts
        bws = [float(b) for b in self.bandwidths]
        if not bws:
            raise InvalidParameter("bandwidth set must be non-empty")
        if not all(b > 0 and np.isfinite(b) for b in bws):
            raise InvalidParameter("bandwidths must be positive")
        self.bandwidths = sorted(bws)
        if self.base == "llw":
            if not self.y_thresholds:
                raise InvalidParameter("llw needs at least one y threshold")
            self.y_thresholds = [float(y) for y in self.y_thresholds]
        else:
            self.y_thresholds = None

    @property
    def m(self):
        return self.design_points.shape[1]

    def thetas(self):
        """One-sided parameter list in (bandwidth, design point, y) order."""
        ys = self.y_thresholds or [None]
        return [
            {"x": tuple(float(t) for t in x), "b": b, "y": y}
            for b in self.bandwidths
            for x in self.design_points
            for y in ys
        ]


@dataclass
class TestReport:
    method: str
    n: int
    m: int
    r: int
    grid: list
    bandwidths: list
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    alpha: float
    boot: int
    seed: int
    dropped_thetas: list
    per_theta: list
    draws: jmb.BootstrapDraws = field(default=None, repr=False, compare=False)

    __test__ = False  # not a pytest class

    def to_dict(self):
        per_theta = []
        for row in self.per_theta:
            entry = {"x": list(row["x"]), "b": row["b"], "u": row["u"], "c_hat": row["c_hat"]}
            if row.get("y") is not None:
                entry["y"] = row["y"]
            if row.get("sign", 1) != 1:
                entry["sign"] = row["sign"]
            per_theta.append(entry)
        return {
            "method": self.method,
            "n": self.n,
            "m": self.m,
            "r": self.r,
            "grid": [list(x) for x in self.grid],
            "bandwidths": list(self.bandwidths),
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "boot": self.boot,
            "seed": self.seed,
            "dropped_thetas": list(self.dropped_thetas),
            "per_theta": per_theta,
        }


def normalizing_constant_jackknife(table, b, m):
    """``c(theta) = sqrt(b^m / n * sum_i (g[i, theta] - u[theta])^2)``."""
    b = np.broadcast_to(np.asarray(b, dtype=float), (table.n_theta,))
    return np.sqrt(b**m * jmb.conditional_variances(table))


def normalizer_floor(u, b, m):
    """Per-theta floor below which a normalizing constant counts as zero."""
    b = np.broadcast_to(np.asarray(b, dtype=float), np.shape(u))
    return 1e-12 * (1.0 + np.max(np.abs(u))) * np.sqrt(b**m)


def sup_statistic(table, c_hat, b, m, r, centering=None, floor=None):
    """``max_theta sqrt(n b^m) (u - center) / (r c_hat)``."""
    c_hat = np.asarray(c_hat, dtype=float)
    b = np.broadcast_to(np.asarray(b, dtype=float), (table.n_theta,))
    center = np.zeros(table.n_theta) if centering is None else np.asarray(centering, dtype=float)
    if floor is None:
        floor = normalizer_floor(table.u, b, m)
    floor = np.broadcast_to(floor, (table.n_theta,))
    bad = np.flatnonzero(~(c_hat > floor))
    if bad.size:
        i = int(bad[0])
        raise DegenerateNormalizer(i, float(c_hat[i]), float(floor[i]))
    return float(np.max(_contributions(table.u, c_hat, b, m, r, table.n, center)))


def _contributions(u, c_hat, b, m, r, n, center):
    return np.sqrt(n * b**m) * (u - center) / (r * c_hat)


def _check_sample(sample, method, r):
    if sample.n < r + 1:
        raise SampleTooSmall(f"{method} needs n >= {r + 1}, got {sample.n}")
    if method in ("gsv", "llw") and (sample.m != 1 or sample.p != 2):
        raise InputError(f"{method} needs one covariate and payload (x, y)")
    if method.startswith("aw") and sample.p != sample.m + 1:
        raise InputError(f"{method} needs payload (x_1..x_m, y)")


def run_test(
    sample,
    base,
    grid,
    plan,
    alpha,
    centering=None,
    smoothing="epanechnikov",
    incomplete_terms=None,
    executor=None,
):
    """Run the JMB sup test of ``base`` over ``grid``.

    Parameters
    ----------
    sample : Sample
    base : str
        Method identifier: gsv, llw, aw-sign or aw-raw.
    grid : ThetaGrid
    plan : MultiplierDrawPlan
    alpha : float
        Nominal level; the critical value is the ``1 - alpha`` bootstrap quantile.
    centering : array_like, optional
        ``P^r h_theta`` per one-sided theta (default zero).
    incomplete_terms : int, optional
        Switch to incomplete U-statistics with this many subsets per theta.

    Thetas whose normalizing constant falls below the floor are dropped from
    both the observed and the bootstrap supremum and listed in the report.
    """
    if not 0 < alpha < 1:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha!r}")
    if grid.base != base:
        raise InvalidParameter(f"grid was built for {grid.base!r}, not {base!r}")
    m = sample.m
    if grid.m != m:
        raise InvalidParameter(f"design points have dimension {grid.m}, sample has m = {m}")
    r = method_order(base, m)
    _check_sample(sample, base, r)
    if incomplete_terms is None and base.startswith("aw") and math.comb(sample.n, r) > COMPLETE_BUDGET:
        raise InputError(
            f"complete enumeration of C({sample.n}, {r}) subsets is too large; "
            "pass incomplete_terms (--incomplete-terms) explicitly"
        )
    for b in grid.bandwidths:
        if sample.n * b ** (1.5 * m) < 1:
            warnings.warn(f"bandwidth {b!r} is small for n = {sample.n} (n b^(3m/2) < 1)", stacklevel=2)

    L = smoothing_kernel(smoothing)
    thetas = grid.thetas()
    specs = [LocalKernelSpec(base_kernel(base, m, th["y"]), L, th["x"], th["b"]) for th in thetas]
    table = jackknife_table(sample, specs, incomplete_terms=incomplete_terms, seed=plan.seed, executor=executor)
    center = np.zeros(len(thetas)) if centering is None else np.asarray(centering, dtype=float)
    if center.shape != (len(thetas),):
        raise InvalidParameter(f"centering needs {len(thetas)} entries")
    signs = [1] * len(thetas)
    if grid.two_sided:
        table = table.concat([table, table.negated()])
        center = np.concatenate([center, -center])
        thetas = thetas + thetas
        signs = signs + [-1] * len(signs)

    b = np.array([th["b"] for th in thetas])
    c_hat = normalizing_constant_jackknife(table, b, m)
    floor = normalizer_floor(table.u, b, m)
    keep = np.flatnonzero(c_hat > floor)
    dropped = [int(i) for i in np.flatnonzero(~(c_hat > floor))]
    if keep.size == 0:
        raise AllThetaDegenerate("every theta has a vanishing normalizing constant")
    if dropped:
        log.info("dropping %d of %d thetas with vanishing normalizer", len(dropped), len(thetas))

    kept = table.select(keep)
    statistic = sup_statistic(kept, c_hat[keep], b[keep], m, r, center[keep], floor[keep])
    scale = b[keep] ** (m / 2) / c_hat[keep]
    draws = jmb.bootstrap_sup_draws(kept, scale, plan, executor=executor)
    critical = jmb.quantile(draws, 1 - alpha)
    pval = jmb.p_value(draws, statistic)

    contrib = np.full(len(thetas), np.nan)
    contrib[keep] = _contributions(table.u[keep], c_hat[keep], b[keep], m, r, table.n, center[keep])
    per_theta = [
        {
            "x": th["x"],
            "b": th["b"],
            "y": th["y"],
            "sign": s,
            "u": float(table.u[i]),
            "c_hat": float(c_hat[i]),
            "contribution": None if np.isnan(contrib[i]) else float(contrib[i]),
        }
        for i, (th, s) in enumerate(zip(thetas, signs))
    ]
    return TestReport(
        method=base,
        n=sample.n,
        m=m,
        r=r,
        grid=[tuple(float(t) for t in x) for x in grid.design_points],
        bandwidths=list(grid.bandwidths),
        statistic=statistic,
        critical_value=critical,
        p_value=pval,
        reject=bool(statistic > critical),
        alpha=float(alpha),
        boot=plan.B,
        seed=plan.seed,
        dropped_thetas=dropped,
        per_theta=per_theta,
        draws=draws,
    )


def run_test_uniform_bandwidth(sample, base, design_points, bandwidth_set, plan, alpha, **kwargs):
    """Sup over (theta, b) pairs for every ``b`` in ``bandwidth_set``."""
    bandwidth_set = list(bandwidth_set)
    if not bandwidth_set:
        raise InvalidParameter("bandwidth set must be non-empty")
    y_thresholds = kwargs.pop("y_thresholds", None)
    two_sided = kwargs.pop("two_sided", False)
    grid = ThetaGrid(design_points, base, bandwidth_set, y_thresholds, two_sided)
    return run_test(sample, base, grid, plan, alpha, **kwargs)
