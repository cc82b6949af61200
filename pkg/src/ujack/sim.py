"""Monte Carlo size study for the regression monotonicity test."""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ujack import rng
from ujack.errors import InvalidParameter, UjackError
from ujack.jmb import MultiplierDrawPlan
from ujack.sample import parse_error_kind, synthesize_null_regression
from ujack.stattests import ThetaGrid, design_grid, run_test

log = logging.getLogger(__name__)

CONFIG_KEYS = (
    "n",
    "error",
    "reps",
    "boot",
    "alpha_list",
    "grid_min",
    "grid_max",
    "grid_points",
    "bandwidth_exponent",
    "seed",
)


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    error: str = "gaussian:0.1"
    reps: int = 500
    boot: int = 500
    alphas: tuple = (0.05, 0.10)
    grid_min: float = 0.05
    grid_max: float = 0.95
    grid_points: int = 19
    bandwidth_exponent: float = -0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 3:
            raise InvalidParameter("n must be >= 3")
        if self.reps < 1 or self.boot < 1:
            raise InvalidParameter("reps and boot must be >= 1")
        if not self.alphas or not all(0 < a < 1 for a in self.alphas):
            raise InvalidParameter("alphas must lie in (0, 1)")
        parse_error_kind(self.error)
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))

    @property
    def bandwidth(self):
        return self.n**self.bandwidth_exponent

    def to_dict(self):
        return {
            "n": self.n,
            "error": self.error,
            "reps": self.reps,
            "boot": self.boot,
            "alpha_list": list(self.alphas),
            "grid_min": self.grid_min,
            "grid_max": self.grid_max,
            "grid_points": self.grid_points,
            "bandwidth_exponent": self.bandwidth_exponent,
            "seed": self.seed,
        }


def load_config(path):
    """Parse a flat ``key=value`` file (``#`` starts a comment)."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in CONFIG_KEYS:
                raise InvalidParameter(f"{path}:{lineno}: unknown or malformed entry {line!r}")
            values[key] = val
    return parse_config(values)


def parse_config(values):
    kw = {}
    try:
        for key in ("n", "reps", "boot", "grid_points", "seed"):
            if key in values:
                kw[key] = int(values[key])
        for key in ("grid_min", "grid_max", "bandwidth_exponent"):
            if key in values:
                kw[key] = float(values[key])
        if "alpha_list" in values:
            kw["alphas"] = tuple(float(a) for a in str(values["alpha_list"]).split(",") if a.strip())
    except ValueError as exc:
        raise InvalidParameter(f"bad config value: {exc}") from None
    if "error" in values:
        kw["error"] = str(values["error"])
    return SimConfig(**kw)


@dataclass
class SimResult:
    config: SimConfig
    rates: dict
    p_values: list
    statistics: list
    failures: int
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self, include_runtime=False):
        out = {
            "config": self.config.to_dict(),
            "rates": {repr(a): r for a, r in self.rates.items()},
            "failures": self.failures,
            "p_values": list(self.p_values),
            "statistics": list(self.statistics),
        }
        if include_runtime:
            out["runtime_seconds"] = self.runtime
        return out


def replication_seed(master, index):
    return rng.derive_seed(master, "replication", index)


def _one_replication(args):
    config, index = args
    seed = replication_seed(config.seed, index)
    sample = synthesize_null_regression(config.n, config.error, seed)
    grid = ThetaGrid(design_grid(config.grid_min, config.grid_max, config.grid_points), "gsv", [config.bandwidth])
    try:
        report = run_test(sample, "gsv", grid, MultiplierDrawPlan(config.boot, seed), config.alphas[0])
    except UjackError as exc:
        return index, None, None, {}, str(exc)
    decisions = {a: bool(report.statistic > report.draws.quantile(1 - a)) for a in config.alphas}
    return index, report.statistic, report.p_value, decisions, None


def run_size_study(config, workers=1, indices=None):
    """Replicate the null GSV test ``config.reps`` times.

    Replication ``i`` draws its sample and multipliers from streams keyed by
    ``(config.seed, i)``, so results do not depend on ``workers``. Failed
    replications are counted and excluded from the rates.
    """
    start = time.perf_counter()
    indices = range(config.reps) if indices is None else indices
    jobs = [(config, i) for i in indices]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_replication, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_one_replication(j) for j in jobs]
    results.sort(key=lambda t: t[0])
    ok = [t for t in results if t[4] is None]
    failures = len(results) - len(ok)
    for t in results:
        if t[4] is not None:
            log.warning("replication %d failed: %s", t[0], t[4])
    rates = {
        a: (sum(t[3][a] for t in ok) / len(ok) if ok else math.nan) for a in config.alphas
    }
    return SimResult(
        config=config,
        rates=rates,
        p_values=[t[2] for t in ok],
        statistics=[t[1] for t in ok],
        failures=failures,
        runtime=time.perf_counter() - start,
    )


def rejection_curve(p_values, levels=None):
    """Empirical rejection rate ``mean(p <= alpha)`` on a grid of levels."""
    if levels is None:
        levels = np.round(np.arange(1, 100) / 100, 2)
    p = np.sort(np.asarray(p_values, dtype=float))
    if p.size == 0:
        return [(float(a), math.nan) for a in levels]
    counts = np.searchsorted(p, levels, side="right")
    return [(float(a), c / p.size) for a, c in zip(levels, counts)]


def emit_rejection_curve(result, path=None):
    """The 99-point rejection curve; written as CSV when ``path`` is given."""
    curve = rejection_curve(result.p_values)
    if path is not None:
        with open(path, "w") as fh:
            fh.write("alpha,rejection_rate\n")
            for a, rate in curve:
                fh.write(f"{a!r},{rate!r}\n")
    return curve


def dkw_band(m, level=0.01):
    """Half-width of the two-sided DKW confidence band for ``m`` draws."""
    return math.sqrt(math.log(2 / level) / (2 * m))
