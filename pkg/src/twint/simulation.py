"""
Simulation study of regression robustness.

Each dataset has covariates evenly spaced on [0.1, 10], responses
y = −0.5 + 2x + ε with ε ~ t(df) (standard normal for df = inf).  Three
models are fitted per replicate: OLS, t-error regression and twin-t-error
regression.  Agreement between models is summarised by the empirical cdf of
absolute differences in their coefficient estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from twint._random import substream
from twint.data import Dataset, write_rows
from twint.estimation import ErrorFamily, FitConfig, RegressionSpec, fit_regression

__all__ = [
    "BETA_TRUE",
    "DEFAULT_DFS",
    "DEFAULT_NS",
    "MODELS",
    "EcdfCurve",
    "EstimateTable",
    "ScenarioConfig",
    "abs_diff_ecdf",
    "default_grid",
    "make_design",
    "run_scenario",
    "simulate_dataset",
]

BETA_TRUE = (-0.5, 2.0)
MODELS = ("ols", "t", "twin_t")
PARAMS = ("beta0", "beta1")
DEFAULT_NS = (50, 100, 200)
DEFAULT_DFS = (3.0, 5.0, 8.0, math.inf)
NEAR_ZERO = 1e-3


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    true_df: float = math.inf
    replicates: int = 200
    seed: int = 1

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.true_df > 0:
            raise ValueError("true_df must be > 0")

    @property
    def label(self) -> str:
        df = "inf" if math.isinf(self.true_df) else f"{self.true_df:g}"
        return f"n{self.n}_df{df}"


def default_grid(replicates: int = 200, seed: int = 1) -> list[ScenarioConfig]:
    """The 12 scenarios n ∈ {50, 100, 200} × df ∈ {3, 5, 8, ∞}."""
    return [ScenarioConfig(n, df, replicates, seed) for n in DEFAULT_NS for df in DEFAULT_DFS]


def make_design(n: int) -> np.ndarray:
    """x_i = 0.1 + 9.9 (i−1)/(n−1), i = 1..n."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return 0.1 + 9.9 * np.arange(n) / (n - 1)


def simulate_dataset(cfg: ScenarioConfig, replicate_index: int) -> Dataset:
    rng = substream(cfg.seed, replicate_index)
    x = make_design(cfg.n)
    if math.isinf(cfg.true_df):
        eps = rng.standard_normal(cfg.n)
    else:
        eps = rng.standard_t(cfg.true_df, cfg.n)
    y = BETA_TRUE[0] + BETA_TRUE[1] * x + eps
    return Dataset.from_arrays(y=y, x=x)


@dataclass
class EstimateTable:
    """Estimates indexed as [replicate, model, parameter]."""

    config: ScenarioConfig
    estimates: np.ndarray  # (R, 3, 2)
    converged: np.ndarray  # (R, 3) bool

    @property
    def n_failed(self) -> int:
        return int(np.sum(~self.converged.all(axis=1)))

    def column(self, model: str, parameter: str) -> np.ndarray:
        return self.estimates[:, MODELS.index(model), PARAMS.index(parameter)]

    def write_csv(self, path) -> None:
        rows = []
        for r in range(self.estimates.shape[0]):
            for m, model in enumerate(MODELS):
                rows.append([r, model, *self.estimates[r, m], bool(self.converged[r, m])])
        write_rows(path, ["replicate", "model", *PARAMS, "converged"], rows)


def _fit_replicate(args):
    cfg, index, fit_config = args
    ds = simulate_dataset(cfg, index)
    y, x = ds.column("y"), ds.column("x")
    D = np.column_stack([np.ones_like(x), x])
    ols, *_ = np.linalg.lstsq(D, y, rcond=None)
    est = [ols[:2]]
    conv = [True]
    for family in (ErrorFamily.STUDENT_T, ErrorFamily.TWIN_T):
        rep = fit_regression(RegressionSpec(family), y, x, config=fit_config)
        est.append([rep.estimates["beta0"], rep.estimates["beta1"]])
        conv.append(rep.converged and all(np.isfinite(est[-1])))
    return np.array(est, dtype=float), np.array(conv)


def run_scenario(cfg: ScenarioConfig, workers: int = 1, fit_config: FitConfig | None = None) -> EstimateTable:
    """Fit OLS, t and twin-t regressions to every replicate of ``cfg``.

    Replicate ``i`` draws from the stream ``(cfg.seed, i)``; the table is
    identical whatever ``workers`` is.
    """
    fit_config = fit_config or FitConfig()
    jobs = [(cfg, i, fit_config) for i in range(cfg.replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_replicate, jobs, chunksize=4))
    else:
        results = [_fit_replicate(j) for j in jobs]
    est = np.stack([r[0] for r in results])
    conv = np.stack([r[1] for r in results])
    return EstimateTable(cfg, est, conv)


@dataclass(frozen=True)
class EcdfCurve:
    sorted_values: np.ndarray
    probs: np.ndarray

    def __call__(self, t) -> np.ndarray:
        """Right-continuous ecdf evaluated at ``t``."""
        k = np.searchsorted(self.sorted_values, np.asarray(t, dtype=float), side="right")
        return k / self.sorted_values.size

    def fraction_below(self, threshold: float) -> float:
        """Fraction of values strictly below ``threshold``."""
        return float(np.searchsorted(self.sorted_values, threshold, side="left") / self.sorted_values.size)

    def write_csv(self, path) -> None:
        write_rows(path, ["abs_diff", "prob"], zip(self.sorted_values, self.probs))


def abs_diff_ecdf(table: EstimateTable, model_a: str, model_b: str, parameter: str) -> EcdfCurve:
    """Ecdf of |estimate_a − estimate_b| over converged replicates."""
    ok = table.converged[:, MODELS.index(model_a)] & table.converged[:, MODELS.index(model_b)]
    diffs = np.abs(table.column(model_a, parameter) - table.column(model_b, parameter))[ok]
    if diffs.size == 0:
        raise ValueError("no usable replicates in the estimate table")
    values = np.sort(diffs)
    return EcdfCurve(values, np.arange(1, values.size + 1) / values.size)


def write_scenario_outputs(table: EstimateTable, out_dir) -> list[Path]:
    """Estimate table plus the four ecdf curves used for the figure analogues."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label = table.config.label
    paths = [out_dir / f"{label}_estimates.csv"]
    table.write_csv(paths[0])
    pairs = [("twin_t", "ols"), ("t", "ols"), ("twin_t", "t"), ("ols", "t")]
    for a, b in pairs:
        for param in PARAMS:
            p = out_dir / f"{label}_ecdf_{a}_vs_{b}_{param}.csv"
            abs_diff_ecdf(table, a, b, param).write_csv(p)
            paths.append(p)
    return paths
