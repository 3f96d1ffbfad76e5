"""Data generation for the hierarchical two-level model.

Two observation modes are supported:

* ``sequence``: each subject's data is its coefficient vector observed with
  i.i.d. N(0, 1/n) noise per coefficient (the idealized white-noise model).
* ``regression``: each subject is observed at fixed grid points in [0, 1]
  with i.i.d. N(0, noise_sd^2) errors.

All randomness flows through a master seed; every (replicate, subject) pair
consumes its own counter-derived substream so results do not depend on
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import FunctionSeries, Spectrum, fourier_matrix, series_eval

__all__ = [
    "ModelConfig",
    "CoefficientPanel",
    "RegressionDataset",
    "GridFunction",
    "default_k_max",
    "substream",
    "sample_population",
    "sample_subjects",
    "observe_sequence",
    "observe_panel",
    "build_covariance",
    "study1_grids",
    "simulate_regression",
]


def default_k_max(n: int, m: int) -> int:
    """Truncation level comfortably above the Lepskii search bound sqrt(n*m)."""
    return int(math.ceil(4.0 * math.sqrt(n * m)))


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from a master seed and integer counters."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, key)]))


@dataclass(frozen=True)
class ModelConfig:
    """Sampling configuration for the hierarchical model.

    ``n`` is the per-subject precision (sequence mode) or observation count
    (regression mode); ``m`` is the number of subjects.
    """

    n: int
    m: int
    prior_spectrum: Spectrum
    deviation_spectrum: Spectrum
    k_max: int = 0
    mode: str = "sequence"

    def __post_init__(self):
        if self.n < 1 or self.m < 0:
            raise ValueError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if self.mode not in ("sequence", "regression"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k_max == 0:
            object.__setattr__(self, "k_max", default_k_max(self.n, max(self.m, 1)))
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass(frozen=True)
class CoefficientPanel:
    """m x K matrix of per-subject basis coefficients, plus (n, m).

    ``aliased`` is set when the coefficients came from a regression grid too
    coarse for the requested number of frequencies.
    """

    n: int
    m: int
    coeffs: np.ndarray
    aliased: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[0] != self.m:
            raise ValueError(f"coeffs must be an {self.m} x K matrix, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficient panel has non-finite entries")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class RegressionDataset:
    """Per-subject grids and noisy observations for the regression model."""

    grids: tuple
    observations: tuple
    noise_sd: float = 1.0

    def __post_init__(self):
        grids = tuple(np.asarray(g, dtype=float) for g in self.grids)
        obs = tuple(np.asarray(y, dtype=float) for y in self.observations)
        if len(grids) != len(obs):
            raise ValueError("need one observation vector per grid")
        for j, (g, y) in enumerate(zip(grids, obs)):
            if g.size != y.size:
                raise ValueError(f"subject {j + 1}: grid and observations differ in length")
            if g.size > 1 and not np.all(np.diff(g) > 0):
                raise ValueError(f"subject {j + 1}: grid must be strictly increasing")
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "observations", obs)

    @property
    def m(self) -> int:
        return len(self.grids)

    def to_csv(self) -> str:
        lines = ["subject,t,y"]
        for j, (g, y) in enumerate(zip(self.grids, self.observations), start=1):
            for t, v in zip(g, y):
                lines.append(f"{j},{float(t)!r},{float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, noise_sd: float = 1.0) -> "RegressionDataset":
        rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        if not rows or rows[0] != "subject,t,y":
            raise ValueError("expected header 'subject,t,y'")
        by_subject: dict[int, list] = {}
        for ln in rows[1:]:
            j_str, t_str, y_str = ln.split(",")
            by_subject.setdefault(int(j_str), []).append((float(t_str), float(y_str)))
        grids, obs = [], []
        for j in sorted(by_subject):
            pairs = by_subject[j]
            grids.append(np.array([p[0] for p in pairs]))
            obs.append(np.array([p[1] for p in pairs]))
        return cls(tuple(grids), tuple(obs), noise_sd=noise_sd)


class GridFunction:
    """Function known only at a fixed set of points (covariance-route truths)."""

    def __init__(self, points, values):
        order = np.argsort(np.asarray(points, dtype=float))
        self.points = np.asarray(points, dtype=float)[order]
        self.values = np.asarray(values, dtype=float)[order]

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = np.searchsorted(self.points, t)
        idx = np.clip(idx, 0, self.points.size - 1)
        if not np.allclose(self.points[idx], t, rtol=0.0, atol=1e-12):
            raise ValueError("GridFunction evaluated off its support points")
        return self.values[idx]


def sample_population(cfg: ModelConfig, rng: np.random.Generator) -> FunctionSeries:
    """Draw g with independent N(0, lambda_k) coefficients, k = 1..k_max."""
    sd = np.sqrt(cfg.prior_spectrum.eigenvalues(cfg.k_max))
    return FunctionSeries(sd * rng.standard_normal(cfg.k_max))


def sample_subjects(g: FunctionSeries, cfg: ModelConfig, rng: np.random.Generator):
    """Draw m subject series g + e^(j), e_k^(j) ~ N(0, lambda~_k), independently."""
    if len(g) > cfg.k_max:
        raise ValueError("population series longer than k_max")
    base = g.padded(cfg.k_max)
    sd = np.sqrt(cfg.deviation_spectrum.eigenvalues(cfg.k_max))
    return [FunctionSeries(base + sd * rng.standard_normal(cfg.k_max)) for _ in range(cfg.m)]


def observe_sequence(f: FunctionSeries, cfg: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    """One subject's noisy coefficient row: f_k + n^{-1/2} Z_k."""
    return f.padded(cfg.k_max) + rng.standard_normal(cfg.k_max) / math.sqrt(cfg.n)


def observe_panel(subjects, cfg: ModelConfig, rng: np.random.Generator) -> CoefficientPanel:
    """Stack sequence observations of every subject into a panel."""
    rows = np.empty((len(subjects), cfg.k_max))
    for j, f in enumerate(subjects):
        rows[j] = observe_sequence(f, cfg, rng)
    return CoefficientPanel(n=cfg.n, m=len(subjects), coeffs=rows)


def build_covariance(spec: Spectrum, points, terms: int) -> np.ndarray:
    """Finite Mercer sum ``sum_{k<=terms} lambda_k psi_k(s) psi_k(t)``.

    The result is symmetrized; positive semi-definiteness may require a small
    diagonal jitter (see ``simulate_regression``).
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.zeros((0, 0))
    psi = fourier_matrix(points, terms)
    cov = (psi * spec.eigenvalues(terms)) @ psi.T
    return 0.5 * (cov + cov.T)


def study1_grids(n: int, m: int, j: int, N: int = 20000, eval_count: int = 1000):
    """Disjoint train grid for subject j and the shared evaluation grid.

    Train: {2(m i + j)/N : i = 0..n-1}.  Eval: {(20 i + 1)/N : i = 0..eval_count-1}.
    """
    if not 1 <= j <= m:
        raise ValueError(f"subject index must be in 1..{m}, got {j}")
    if 2 * (m * (n - 1) + j) > N:
        raise ValueError(f"grid overflow: need 2*(m*(n-1)+j) <= N, got N={N}")
    if 20 * (eval_count - 1) + 1 > N:
        raise ValueError("eval grid overflows N")
    train = (2.0 * (m * np.arange(n) + j)) / N
    eval_grid = (20.0 * np.arange(eval_count) + 1.0) / N
    return train, eval_grid


def _mvn_sample(mean, cov, rng: np.random.Generator):
    """Cholesky sampler with a trace-scaled PSD repair jitter."""
    dim = cov.shape[0]
    if dim == 0:
        return np.zeros(0)
    jitter = 1e-10 * np.trace(cov) / dim
    try:
        chol = np.linalg.cholesky(cov + jitter * np.eye(dim))
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError(f"covariance not PSD after jitter {jitter:g}") from err
    return np.asarray(mean) + chol @ rng.standard_normal(dim)


def simulate_regression(cfg: ModelConfig, grids, seed: int, noise_sd: float = 1.0,
                        eval_grid=None, sampling: str = "series"):
    """Generate (g truth, subject truths, RegressionDataset).

    ``sampling="series"`` draws g and the deviations as k_max-term series;
    ``sampling="covariance"`` draws exact multivariate normals from the
    finite Mercer covariance at the needed points, in which case truths come
    back as :class:`GridFunction` over the subject's grid plus ``eval_grid``.
    """
    grids = [np.asarray(g, dtype=float) for g in grids]
    if len(grids) != cfg.m:
        raise ValueError(f"need {cfg.m} grids, got {len(grids)}")
    if sampling not in ("series", "covariance"):
        raise ValueError(f"unknown sampling route {sampling!r}")
    rng_g = substream(seed, 0)

    if sampling == "series":
        g = sample_population(cfg, rng_g)
        subjects, observations = [], []
        for j, grid in enumerate(grids, start=1):
            rng_j = substream(seed, j)
            f = sample_subjects(g, ModelConfig(cfg.n, 1, cfg.prior_spectrum,
                                               cfg.deviation_spectrum, cfg.k_max,
                                               cfg.mode), rng_j)[0]
            y = series_eval(f, grid) + noise_sd * rng_j.standard_normal(grid.size)
            subjects.append(f)
            observations.append(y)
        return g, subjects, RegressionDataset(tuple(grids), tuple(observations), noise_sd)

    eval_grid = np.zeros(0) if eval_grid is None else np.asarray(eval_grid, dtype=float)
    all_points = np.unique(np.concatenate([eval_grid] + grids))
    cov_g = build_covariance(cfg.prior_spectrum, all_points, cfg.k_max)
    g_values = _mvn_sample(np.zeros(all_points.size), cov_g, rng_g)
    g = GridFunction(all_points, g_values)
    subjects, observations = [], []
    for j, grid in enumerate(grids, start=1):
        rng_j = substream(seed, j)
        pts = np.unique(np.concatenate([eval_grid, grid]))
        cov_d = build_covariance(cfg.deviation_spectrum, pts, cfg.k_max)
        dev = _mvn_sample(np.zeros(pts.size), cov_d, rng_j)
        f = GridFunction(pts, g(pts) + dev)
        y = f(grid) + noise_sd * rng_j.standard_normal(grid.size)
        subjects.append(f)
        observations.append(y)
    return g, subjects, RegressionDataset(tuple(grids), tuple(observations), noise_sd)
