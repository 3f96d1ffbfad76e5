"""Estimators of the population-level and subject-specific functions.

Includes empirical basis coefficients, pooled/thresholded series estimators,
data-driven (Lepskii-style) threshold selection, the double-thresholding
subject estimator, a single-subject baseline, conjugate posterior means, and
truth-dependent oracle thresholds for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import FunctionSeries, Spectrum, fourier_matrix
from .simulate import CoefficientPanel, RegressionDataset

__all__ = [
    "ThresholdSelection",
    "PosteriorSpec",
    "empirical_coefficients",
    "pooled_coefficients",
    "threshold_estimate_g",
    "lepskii_threshold_g",
    "double_threshold_estimate_f",
    "lepskii_thresholds_f",
    "single_subject_threshold",
    "single_subject_estimate",
    "posterior_mean_g",
    "posterior_mean_f",
    "oracle_thresholds",
]


@dataclass(frozen=True)
class ThresholdSelection:
    """Outcome of a data-driven threshold search.

    For the population rule ``kind == "g_single_threshold"`` and
    ``k1 == k2``; for the subject rule ``kind == "f_double_threshold"`` and
    ``k1 <= k2``.
    """

    kind: str
    k1: int
    k2: int
    tau1: float
    tau2: float
    search_bound: int

    def __post_init__(self):
        if self.kind not in ("g_single_threshold", "f_double_threshold"):
            raise ValueError(f"unknown threshold kind {self.kind!r}")
        if self.k1 > self.k2:
            raise ValueError("k1 must not exceed k2")
        if self.k2 > self.search_bound:
            raise ValueError("threshold exceeds its search bound")

    def to_csv(self) -> str:
        return ("kind,k1,k2,tau1,tau2,bound\n"
                f"{self.kind},{self.k1},{self.k2},{self.tau1!r},{self.tau2!r},{self.search_bound}\n")


@dataclass(frozen=True)
class PosteriorSpec:
    """Eigenvalue laws assumed by the conjugate posterior-mean estimators.

    Either spectrum may deliberately differ from the data-generating truth to
    study misspecified hyperparameters.
    """

    prior_spectrum: Spectrum
    deviation_spectrum: Spectrum


def empirical_coefficients(data, width: int, n: int | None = None,
                           normalize: bool = True) -> CoefficientPanel:
    """Per-subject empirical basis coefficients.

    For a :class:`RegressionDataset`, entry (j, k) is
    ``(1/n) * sum_i Y_i^(j) psi_k(t_i^(j))``; pass ``normalize=False`` for the
    raw, unnormalized inner product.  For a 2-D array of sequence-mode
    coefficient rows the data is passed through truncated to ``width``.

    The panel is flagged as aliased when ``width`` exceeds half the grid size.
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    if isinstance(data, RegressionDataset):
        lengths = {g.size for g in data.grids}
        if len(lengths) != 1:
            raise ValueError("subjects must share a common grid size")
        n_obs = lengths.pop()
        rows = np.empty((data.m, width))
        for j, (grid, y) in enumerate(zip(data.grids, data.observations)):
            psi = fourier_matrix(grid, width)
            rows[j] = psi.T @ y
            if normalize:
                rows[j] /= n_obs
        return CoefficientPanel(n=n if n is not None else n_obs, m=data.m,
                                coeffs=rows, aliased=width > n_obs / 2)
    if isinstance(data, CoefficientPanel):
        return CoefficientPanel(n=data.n, m=data.m, coeffs=data.coeffs[:, :width],
                                aliased=data.aliased)
    rows = np.atleast_2d(np.asarray(data, dtype=float))[:, :width]
    if n is None:
        raise ValueError("sequence-mode input needs the precision n")
    return CoefficientPanel(n=n, m=rows.shape[0], coeffs=rows)


def pooled_coefficients(panel: CoefficientPanel, exclude_subject: int | None = None) -> np.ndarray:
    """Column means of the panel, optionally leaving one subject out.

    ``exclude_subject`` is a 0-based row index.
    """
    if exclude_subject is None:
        return panel.coeffs.mean(axis=0)
    if panel.m < 2:
        raise ValueError("leave-one-out pooling needs at least 2 subjects")
    if not 0 <= exclude_subject < panel.m:
        raise IndexError(f"subject index out of range: {exclude_subject}")
    mask = np.ones(panel.m, dtype=bool)
    mask[exclude_subject] = False
    return panel.coeffs[mask].mean(axis=0)


def threshold_estimate_g(panel: CoefficientPanel, K: int,
                         exclude_subject: int | None = None) -> FunctionSeries:
    """Pooled series estimator keeping the first K coefficients."""
    if K < 0 or K > panel.width:
        raise ValueError(f"K must be in 0..{panel.width}, got {K}")
    if K == 0:
        return FunctionSeries.zero()
    return FunctionSeries(pooled_coefficients(panel, exclude_subject)[:K])


def _lepskii_min_k(sq_terms: np.ndarray, tau: float, denom: float, bound: int) -> int:
    """Smallest k in 1..bound with sum_{i=k+1..l} sq_terms[i] <= tau*l/denom
    for every l in (k, bound].

    ``sq_terms[i-1]`` holds the i-th squared coefficient term.  k = bound
    always qualifies (the condition set is empty there).
    """
    if bound < 1:
        raise ValueError("search bound must be >= 1")
    partial = np.concatenate([[0.0], np.cumsum(sq_terms[:bound])])
    slack = partial[1:] - tau * np.arange(1, bound + 1) / denom
    # suffix_max[k-1] = max over l in (k, bound] of slack[l-1]; the defining
    # condition for k is suffix_max[k-1] <= partial[k].
    suffix_max = np.full(bound, -np.inf)
    if bound > 1:
        suffix_max[: bound - 1] = np.maximum.accumulate(slack[::-1])[::-1][1:]
    ok = np.nonzero(suffix_max <= partial[1:])[0]
    return int(ok[0]) + 1 if ok.size else bound


def lepskii_threshold_g(panel: CoefficientPanel, tau: float = 6.5,
                        exclude_subject: int | None = None) -> ThresholdSelection:
    """Data-driven truncation level for the pooled estimator of g.

    Searches k in 1..floor(sqrt(n*m)) for the smallest level whose estimator
    is within ``tau * l / (n*m)`` (squared L2, via Parseval) of every finer
    one.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    bound = int(math.isqrt(panel.n * panel.m))
    if bound > panel.width:
        raise ValueError(f"panel too narrow for search bound {bound}")
    pooled_sq = pooled_coefficients(panel, exclude_subject) ** 2
    k = _lepskii_min_k(pooled_sq, tau, panel.n * panel.m, bound)
    return ThresholdSelection("g_single_threshold", k, k, tau, tau, bound)


def double_threshold_estimate_f(panel: CoefficientPanel, subject: int,
                                k1: int, k2: int) -> FunctionSeries:
    """Subject estimator using own coefficients up to k1, leave-one-out pooled
    coefficients on (k1, k2], zero beyond."""
    if k1 > k2:
        raise ValueError(f"need k1 <= k2, got ({k1}, {k2})")
    if k2 > panel.width:
        raise ValueError("k2 exceeds panel width")
    if k2 == 0:
        return FunctionSeries.zero()
    coeffs = np.zeros(k2)
    coeffs[:k1] = panel.coeffs[subject, :k1]
    if k2 > k1:
        coeffs[k1:k2] = pooled_coefficients(panel, exclude_subject=subject)[k1:k2]
    return FunctionSeries(coeffs)


def lepskii_thresholds_f(panel: CoefficientPanel, subject: int,
                         tau1: float = 4.5, tau2: float = 6.5) -> ThresholdSelection:
    """Data-driven thresholds (k1, k1 v k2) for the double-thresholding
    subject estimator.

    k2 runs the pooled rule (leave-one-out, bound ``tau2 * l / (n*m)`` over
    l <= sqrt(n*m)); k1 runs the own-vs-pooled rule (bound ``tau1 * l / n``
    over l <= sqrt(n)), whose norm differences reduce to sums of squared
    (own - pooled) coefficient gaps.
    """
    if panel.m < 2:
        raise ValueError("need at least 2 subjects; use single_subject_estimate for m = 1")
    if tau1 <= 0 or tau2 <= 0:
        raise ValueError("tau values must be positive")
    n, m = panel.n, panel.m
    bound2 = int(math.isqrt(n * m))
    bound1 = int(math.isqrt(n))
    if bound2 > panel.width:
        raise ValueError(f"panel too narrow for search bound {bound2}")
    pooled = pooled_coefficients(panel, exclude_subject=subject)
    k2 = _lepskii_min_k(pooled**2, tau2, n * m, bound2)
    gaps_sq = (panel.coeffs[subject] - pooled) ** 2
    k1 = _lepskii_min_k(gaps_sq, tau1, n, bound1)
    return ThresholdSelection("f_double_threshold", k1, max(k1, k2), tau1, tau2, bound2)


def single_subject_threshold(row: np.ndarray, n: int, m: int, tau: float = 2.0,
                             denominator: str = "nm") -> ThresholdSelection:
    """Threshold of the single-subject baseline estimator.

    The comparison bound is ``tau * l / (n*m)`` by default; ``denominator="n"``
    switches to ``tau * l / n``.
    """
    row = np.asarray(row, dtype=float)
    if denominator not in ("nm", "n"):
        raise ValueError(f"unknown denominator choice {denominator!r}")
    denom = n * m if denominator == "nm" else n
    bound = int(math.isqrt(n))
    if bound > row.size:
        raise ValueError(f"row too short for search bound {bound}")
    k = _lepskii_min_k(row**2, tau, denom, bound)
    return ThresholdSelection("g_single_threshold", k, k, tau, tau, bound)


def single_subject_estimate(row: np.ndarray, n: int, m: int, tau: float = 2.0,
                            denominator: str = "nm") -> FunctionSeries:
    """Project one subject's coefficient row to its data-driven threshold."""
    row = np.asarray(row, dtype=float)
    sel = single_subject_threshold(row, n, m, tau, denominator)
    return FunctionSeries(row[: sel.k1])


def posterior_mean_g(panel: CoefficientPanel, spec: PosteriorSpec) -> FunctionSeries:
    """Conjugate posterior mean for g: shrink the all-subject pooled mean by
    ``1 / (zeta_k^{-1} m^{-1} (zeta~_k + 1/n) + 1)``."""
    lam = spec.prior_spectrum.eigenvalues(panel.width)
    lamt = spec.deviation_spectrum.eigenvalues(panel.width)
    pooled = pooled_coefficients(panel)
    shrink = 1.0 / ((lamt + 1.0 / panel.n) / (panel.m * lam) + 1.0)
    return FunctionSeries(shrink * pooled)


def posterior_mean_f(panel: CoefficientPanel, subject: int, spec: PosteriorSpec) -> FunctionSeries:
    """Conjugate posterior mean for one subject's function.

    Combines the subject's own coefficients with the leave-one-out pooled
    mean of the m - 1 donor subjects; with m = 1 it degrades to conjugate
    shrinkage against the subject's marginal prior variance.
    """
    n = panel.n
    width = panel.width
    lam = spec.prior_spectrum.eigenvalues(width)
    lamt = spec.deviation_spectrum.eigenvalues(width)
    donors = panel.m - 1
    own = panel.coeffs[subject]
    ybar = (pooled_coefficients(panel, exclude_subject=subject)
            if donors > 0 else np.zeros(width))
    c = 1.0 / lam + 1.0 / lamt + donors / (lamt + 1.0 / n)
    a = (1.0 / lamt) * donors / (lamt + 1.0 / n) / c
    b = (1.0 / lam + donors / (lamt + 1.0 / n)) / c
    return FunctionSeries((own * n + ybar * a) / (n + b / lamt))


def oracle_thresholds(g_truth: FunctionSeries, deviation_spectrum: Spectrum,
                      n: int, m: int, search_max: int | None = None) -> tuple[int, int]:
    """Truth-dependent oracle thresholds (k1*, k2*) for the double-thresholding
    estimator.

    k2* is the smallest k with ``sum_{l>k} (g_l^2 + lambda~_l) <= k/(n m)``;
    k1* is the smallest k <= k2* with that bias plus the variance proxy
    ``k/n + sum_{k+1..k2*} (lambda~_l (1 + 1/m) + 1/(n m))`` at most ``2 k / n``.
    Tail sums past the working range use the analytic integral bound.
    """
    if search_max is None:
        search_max = max(len(g_truth), n * m, 16)
    lamt = deviation_spectrum.eigenvalues(search_max)
    g_sq = g_truth.padded(search_max) ** 2
    tail_beyond = deviation_spectrum.tail_sum(search_max)
    # bias[k] = sum_{l > k} (g_l^2 + lambda~_l), k = 0..search_max
    combined = g_sq + lamt
    bias = np.concatenate([np.cumsum(combined[::-1])[::-1], [0.0]]) + tail_beyond
    k_grid = np.arange(search_max + 1)
    feasible2 = np.nonzero(bias[1:] <= k_grid[1:] / (n * m))[0]
    if feasible2.size == 0:
        raise ValueError("oracle search range too small; raise search_max")
    k2 = int(feasible2[0]) + 1

    var_terms = lamt[:k2] * (1.0 + 1.0 / m) + 1.0 / (n * m)
    # variance[k] = k/n + sum_{l=k+1..k2} var_terms[l]
    var_tail = np.concatenate([np.cumsum(var_terms[::-1])[::-1], [0.0]])
    ks = np.arange(1, k2 + 1)
    total = bias[k2] + ks / n + var_tail[1:]
    feasible1 = np.nonzero(total <= 2.0 * ks / n)[0]
    k1 = int(feasible1[0]) + 1 if feasible1.size else k2
    return k1, k2
