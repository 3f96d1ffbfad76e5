"""Monte Carlo risk harness and theoretical rate calculator.

The harness simulates replicate datasets, fits a plan of estimators, and
scores each fit by empirical MISE on an evaluation grid.  The rate functions
implement the closed-form risk rates (all constants fixed to 1, so only
slopes and orderings are meaningful) together with their analytic
cost-weighted gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .basis import FunctionSeries, fourier_matrix, series_eval
from .simulate import (CoefficientPanel, ModelConfig, sample_population,
                       substream)
from . import estimators as est

__all__ = [
    "RiskReport",
    "RateQuery",
    "RateGradient",
    "EstimatorSpec",
    "empirical_mise",
    "rmspe",
    "run_monte_carlo",
    "rate_g",
    "rate_f",
    "rate_gradient",
    "slope_recovery",
    "default_eval_grid_g",
    "default_eval_grid_f",
    "adaptive_g",
    "fixed_g",
    "adaptive_f",
    "fixed_f",
    "single_subject_f",
    "posterior_g",
    "posterior_f",
]


def default_eval_grid_g(points: int = 10000) -> np.ndarray:
    """Midpoint grid t_i = (i - 0.5)/points, i = 1..points."""
    return (np.arange(1, points + 1) - 0.5) / points


def default_eval_grid_f(N: int = 20000, points: int = 1000) -> np.ndarray:
    """Held-out grid {(20 i + 1)/N : i = 0..points-1}."""
    return (20.0 * np.arange(points) + 1.0) / N


def empirical_mise(estimate: FunctionSeries, truth_values, grid) -> float:
    """Mean squared difference between the series and truth values on a grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("evaluation grid must be nonempty")
    diff = series_eval(estimate, grid) - np.asarray(truth_values, dtype=float)
    return float(np.mean(diff**2))


def rmspe(estimate: FunctionSeries, test_t, test_y) -> float:
    """Root mean squared prediction error on held-out points."""
    test_t = np.asarray(test_t, dtype=float)
    if test_t.size == 0:
        raise ValueError("test set must be nonempty")
    diff = series_eval(estimate, test_t) - np.asarray(test_y, dtype=float)
    return float(np.sqrt(np.mean(diff**2)))


# ---------------------------------------------------------------------------
# Estimator plans


@dataclass(frozen=True)
class EstimatorSpec:
    """One entry of a Monte Carlo plan: a label, the target function
    ("g" or "f", where "f" means subject 0), and a fit on a panel."""

    label: str
    target: str
    fit: Callable[[CoefficientPanel], FunctionSeries]


def adaptive_g(tau: float = 6.5) -> EstimatorSpec:
    def fit(panel):
        sel = est.lepskii_threshold_g(panel, tau=tau)
        return est.threshold_estimate_g(panel, sel.k1)
    return EstimatorSpec(f"adaptive_g_tau{tau:g}", "g", fit)


def fixed_g(beta: float) -> EstimatorSpec:
    """Pooled estimator with the nonadaptive threshold (n*m)^(1/(1+2*beta))."""
    def fit(panel):
        K = math.ceil((panel.n * panel.m) ** (1.0 / (1.0 + 2.0 * beta)))
        return est.threshold_estimate_g(panel, K)
    return EstimatorSpec(f"fixed_g_beta{beta:g}", "g", fit)


def adaptive_f(tau1: float = 4.5, tau2: float = 6.5, subject: int = 0) -> EstimatorSpec:
    def fit(panel):
        sel = est.lepskii_thresholds_f(panel, subject, tau1=tau1, tau2=tau2)
        return est.double_threshold_estimate_f(panel, subject, sel.k1, sel.k2)
    return EstimatorSpec(f"adaptive_f_tau{tau1:g}_{tau2:g}", "f", fit)


def fixed_f(alpha: float, alpha_tilde: float, subject: int = 0) -> EstimatorSpec:
    """Double-thresholding estimator with the nonadaptive threshold pair."""
    def fit(panel):
        k1 = math.ceil(panel.n ** (1.0 / (1.0 + 2.0 * alpha_tilde)))
        k2 = max(k1, math.ceil((panel.n * panel.m) ** (1.0 / (1.0 + 2.0 * alpha))))
        return est.double_threshold_estimate_f(panel, subject, k1, k2)
    return EstimatorSpec(f"fixed_f_a{alpha:g}_at{alpha_tilde:g}", "f", fit)


def single_subject_f(tau: float = 2.0, denominator: str = "nm",
                     subject: int = 0) -> EstimatorSpec:
    def fit(panel):
        return est.single_subject_estimate(panel.coeffs[subject], panel.n, panel.m,
                                           tau=tau, denominator=denominator)
    return EstimatorSpec(f"single_f_tau{tau:g}", "f", fit)


def posterior_g(spec: est.PosteriorSpec) -> EstimatorSpec:
    label = f"posterior_g_b{spec.prior_spectrum.decay:g}_bt{spec.deviation_spectrum.decay:g}"
    return EstimatorSpec(label, "g", lambda panel: est.posterior_mean_g(panel, spec))


def posterior_f(spec: est.PosteriorSpec, subject: int = 0) -> EstimatorSpec:
    label = f"posterior_f_b{spec.prior_spectrum.decay:g}_bt{spec.deviation_spectrum.decay:g}"
    return EstimatorSpec(label, "f",
                         lambda panel: est.posterior_mean_f(panel, subject, spec))


# ---------------------------------------------------------------------------
# Monte Carlo harness


@dataclass
class RiskReport:
    """Per-replicate MISE values for one estimator, with a config echo."""

    label: str
    target: str
    mises: np.ndarray
    failures: int
    config: dict
    seed: int

    @property
    def replicates(self) -> int:
        return self.mises.size

    def _clean(self) -> np.ndarray:
        vals = self.mises[np.isfinite(self.mises)]
        if vals.size == 0:
            raise ValueError(f"no successful replicates for {self.label}")
        return vals

    @property
    def median(self) -> float:
        return float(np.median(self._clean()))

    @property
    def mean(self) -> float:
        return float(np.mean(self._clean()))

    @property
    def quartiles(self) -> tuple[float, float]:
        q1, q3 = np.percentile(self._clean(), [25.0, 75.0])
        return float(q1), float(q3)

    @property
    def mean_log(self) -> float:
        return float(np.mean(np.log(self._clean())))

    def to_csv(self) -> str:
        lines = ["replicate,estimator,mise"]
        for r, v in enumerate(self.mises, start=1):
            lines.append(f"{r},{self.label},{float(v)!r}")
        return "\n".join(lines) + "\n"

    def summary_row(self) -> str:
        q1, q3 = self.quartiles
        return (f"{self.label},{self.target},{self.replicates},{self.failures},"
                f"{self.median!r},{self.mean!r},{q1!r},{q3!r},{self.mean_log!r}")


class _GridEvaluator:
    """Caches the basis design matrix for repeated series evaluation."""

    def __init__(self, grid: np.ndarray, width: int):
        self.grid = np.asarray(grid, dtype=float)
        self.psi = fourier_matrix(self.grid, width)

    def __call__(self, series: FunctionSeries) -> np.ndarray:
        k = min(len(series), self.psi.shape[1])
        if len(series) > self.psi.shape[1]:
            raise ValueError("series wider than the cached evaluator")
        return self.psi[:, :k] @ series.coeffs[:k]


def run_monte_carlo(cfg: ModelConfig, plan, replicates: int, seed: int,
                    eval_grid_g=None, eval_grid_f=None) -> dict[str, RiskReport]:
    """Simulate ``replicates`` sequence-mode datasets and score every
    estimator in the plan by empirical MISE against its target.

    Deterministic given (cfg, plan, replicates, seed); replicate r uses the
    substream keyed by (seed, r).
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if cfg.mode != "sequence":
        raise ValueError("run_monte_carlo operates in sequence mode; "
                         "use simulate_regression + empirical_coefficients for regression studies")
    plan = list(plan)
    targets = {spec.target for spec in plan}
    evaluators = {}
    if "g" in targets:
        grid = default_eval_grid_g() if eval_grid_g is None else np.asarray(eval_grid_g, float)
        evaluators["g"] = _GridEvaluator(grid, cfg.k_max)
    if "f" in targets:
        grid = default_eval_grid_f() if eval_grid_f is None else np.asarray(eval_grid_f, float)
        evaluators["f"] = _GridEvaluator(grid, cfg.k_max)

    mises = {spec.label: np.full(replicates, np.nan) for spec in plan}
    failures = {spec.label: 0 for spec in plan}
    dev_sd = np.sqrt(cfg.deviation_spectrum.eigenvalues(cfg.k_max))
    for r in range(replicates):
        rng = substream(seed, r)
        g = sample_population(cfg, rng)
        # all-subject deviation and noise draws in one shot; equivalent in
        # distribution to per-subject sampling but much faster for large m
        deviations = dev_sd * rng.standard_normal((cfg.m, cfg.k_max))
        noise = rng.standard_normal((cfg.m, cfg.k_max)) / math.sqrt(cfg.n)
        panel = CoefficientPanel(n=cfg.n, m=cfg.m,
                                 coeffs=g.padded(cfg.k_max) + deviations + noise)
        truth_values = {}
        if "g" in evaluators:
            truth_values["g"] = evaluators["g"](g)
        if "f" in evaluators:
            f0 = FunctionSeries(g.padded(cfg.k_max) + deviations[0])
            truth_values["f"] = evaluators["f"](f0)
        for spec in plan:
            try:
                fitted = spec.fit(panel)
                ev = evaluators[spec.target]
                diff = ev(fitted) - truth_values[spec.target]
                mises[spec.label][r] = float(np.mean(diff**2))
            except Exception:
                failures[spec.label] += 1

    config_echo = {
        "n": cfg.n, "m": cfg.m, "k_max": cfg.k_max, "mode": cfg.mode,
        "alpha": cfg.prior_spectrum.decay, "alpha_scale": cfg.prior_spectrum.scale,
        "alpha_tilde": cfg.deviation_spectrum.decay,
        "alpha_tilde_scale": cfg.deviation_spectrum.scale,
        "replicates": replicates, "seed": seed,
    }
    return {spec.label: RiskReport(spec.label, spec.target, mises[spec.label],
                                   failures[spec.label], dict(config_echo), seed)
            for spec in plan}


# ---------------------------------------------------------------------------
# Theoretical rates


@dataclass(frozen=True)
class RateQuery:
    """Continuous (n, m) point with smoothness exponents and unit costs."""

    n: float
    m: float
    alpha: float
    alpha_tilde: float
    cost_n: float = 1.0
    cost_m: float = 1.0

    def __post_init__(self):
        for name in ("n", "m", "alpha", "alpha_tilde", "cost_n", "cost_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def delta(self) -> float:
        if self.n <= 1:
            raise ValueError("delta = log(m)/log(n) needs n > 1")
        return math.log(self.m) / math.log(self.n)


def rate_g(q: RateQuery) -> float:
    """Population-risk rate m^-1 + (n m)^(-2a/(1+2a)), constants set to 1."""
    p = 2.0 * q.alpha / (1.0 + 2.0 * q.alpha)
    return 1.0 / q.m + (q.n * q.m) ** (-p)


def rate_f(q: RateQuery) -> float:
    """Subject-risk rate n^(-2a~/(1+2a~)) + (n m)^(-2a/(1+2a))."""
    p = 2.0 * q.alpha / (1.0 + 2.0 * q.alpha)
    pt = 2.0 * q.alpha_tilde / (1.0 + 2.0 * q.alpha_tilde)
    return q.n ** (-pt) + (q.n * q.m) ** (-p)


class RateGradient(NamedTuple):
    dn: float
    dm: float
    steeper_axis: str


def rate_gradient(q: RateQuery, target: str) -> RateGradient:
    """Cost-weighted analytic partial derivatives of the chosen rate.

    ``steeper_axis`` is "n" when a unit of cost spent on n decreases the rate
    more than a unit spent on m (arrow slope below 45 degrees).
    """
    p = 2.0 * q.alpha / (1.0 + 2.0 * q.alpha)
    shared = (q.n * q.m) ** (-p)
    if target == "g":
        dn = -p * shared / q.n
        dm = -1.0 / q.m**2 - p * shared / q.m
    elif target == "f":
        pt = 2.0 * q.alpha_tilde / (1.0 + 2.0 * q.alpha_tilde)
        dn = -pt * q.n ** (-pt - 1.0) - p * shared / q.n
        dm = -p * shared / q.m
    else:
        raise ValueError(f"unknown target {target!r}")
    dn /= q.cost_n
    dm /= q.cost_m
    return RateGradient(dn, dm, "n" if abs(dn) > abs(dm) else "m")


def slope_recovery(axis_values, summaries) -> float:
    """Least-squares slope of log(summary) against log(axis value)."""
    x = np.log(np.asarray(axis_values, dtype=float))
    y = np.log(np.asarray(summaries, dtype=float))
    if x.size < 3:
        raise ValueError("need at least 3 sweep points")
    if np.ptp(x) == 0:
        raise ValueError("sweep axis is constant")
    return float(np.polyfit(x, y, 1)[0])
