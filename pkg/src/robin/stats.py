"""Tests on stability curves: GP Bayes factor, interval-wise permutation test, AUC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline, CubicSpline
from scipy.linalg import LinAlgError, cho_factor, cho_solve

LENGTHSCALES = (0.05, 0.1, 0.2, 0.4, 0.8)
SIGNAL_SHARES = (0.1, 0.5, 0.9, 0.99)
VARIANCE_FLOOR = 1e-8
JITTER = 1e-8
PROFILE_EPS = 1e-4


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GPHyper:
    signal_variance: float
    lengthscale: float
    noise_variance: float

    def __post_init__(self):
        if self.signal_variance < 0 or self.lengthscale <= 0 or self.noise_variance <= 0:
            raise ValueError(f"invalid GP hyperparameters: {self}")


@dataclass(frozen=True)
class GPFit:
    hyper: GPHyper
    log_marginal: float


@dataclass(frozen=True)
class BayesFactorResult:
    bf: float
    fit_signal: GPFit
    fit_noise: GPFit
    profile: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        def fit(f):
            h = f.hyper
            return {"signal_variance": h.signal_variance, "lengthscale": h.lengthscale,
                    "noise_variance": h.noise_variance, "log_marginal": f.log_marginal}

        return {"test": "gp", "bf": self.bf, "signal": fit(self.fit_signal),
                "noise": fit(self.fit_noise), "profile": self.profile.tolist()}


@dataclass(frozen=True)
class ITPResult:
    component_pvalues: np.ndarray
    adjusted_pvalues: np.ndarray
    interval_pvalues: np.ndarray = field(repr=False)  # K x K, [i, j] for interval i..j
    basis_size: int = 0
    permutations: int = 0

    def to_dict(self) -> dict:
        return {"test": "itp", "raw": self.component_pvalues.tolist(),
                "adjusted": self.adjusted_pvalues.tolist(),
                "B": self.permutations, "K": self.basis_size}


@dataclass(frozen=True)
class AUCResult:
    area1: float
    area2: float
    ratio: float | None  # None when area1 == 0

    def to_dict(self) -> dict:
        return {"test": "auc", "area1": self.area1, "area2": self.area2, "ratio": self.ratio}


# ---------------------------------------------------------------------------
# Gaussian process Bayes factor
# ---------------------------------------------------------------------------

def se_kernel(x: np.ndarray, signal_variance: float, lengthscale: float) -> np.ndarray:
    d = x[:, None] - x[None, :]
    return signal_variance * np.exp(-(d * d) / (2.0 * lengthscale**2))


def gp_log_marginal(x, y, h: GPHyper) -> float:
    """Log marginal likelihood of ``y`` under a zero-mean GP with SE kernel plus noise."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise ValueError("x and y must be non-empty vectors of equal length")
    n = y.size
    k = se_kernel(x, h.signal_variance, h.lengthscale)
    k[np.diag_indices(n)] += h.noise_variance + JITTER * h.signal_variance
    try:
        c, lower = cho_factor(k, lower=True, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericalError(f"covariance is not positive definite: {exc}") from exc
    alpha = cho_solve((c, lower), y)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return float(-0.5 * y @ alpha - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi))


def _second_moment(y: np.ndarray) -> float:
    return max(float(np.mean(y * y)), VARIANCE_FLOOR)


def fit_gp(x, y, model: str = "signal") -> GPFit:
    """Maximum-likelihood fit of the noise-only or the signal-plus-noise GP.

    The noise model has a closed-form optimum. The signal model searches a
    fixed grid of lengthscales and signal shares of the total variance; ties
    keep the smaller signal variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    total = _second_moment(y)
    if model == "noise":
        h = GPHyper(0.0, 1.0, total)
        return GPFit(h, gp_log_marginal(x, y, h))
    if model != "signal":
        raise ValueError(f"model must be 'signal' or 'noise', got {model!r}")
    if y.size < 3:
        raise ValueError("the signal model needs at least 3 points")
    if total <= VARIANCE_FLOOR:
        # nothing to explain: a correlated kernel would only win on log det
        h = GPHyper(0.0, LENGTHSCALES[0], total)
        return GPFit(h, gp_log_marginal(x, y, h))
    best = None
    for share in SIGNAL_SHARES:
        sw = share * total
        sn = max(total - sw, VARIANCE_FLOOR)
        for ell in LENGTHSCALES:
            h = GPHyper(sw, ell, sn)
            lml = gp_log_marginal(x, y, h)
            if best is None or lml > best.log_marginal:
                best = GPFit(h, lml)
    return best


def log_ratio_profile(mean1, mean2, eps: float = PROFILE_EPS) -> np.ndarray:
    mean1 = np.asarray(mean1, dtype=np.float64)
    mean2 = np.asarray(mean2, dtype=np.float64)
    return np.log2((mean1 + eps) / (mean2 + eps))


def robin_gp_test(mean1, mean2, levels) -> BayesFactorResult:
    """Bayes factor (log scale) for a signal in ``log2(mean1 / mean2)`` along ``levels``."""
    mean1 = np.asarray(mean1, dtype=np.float64)
    mean2 = np.asarray(mean2, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64)
    if not (mean1.shape == mean2.shape == levels.shape):
        raise ValueError("curves and levels must have the same length")
    if levels.size < 3:
        raise ValueError("need at least 3 levels")
    d = log_ratio_profile(mean1, mean2)
    signal = fit_gp(levels, d, "signal")
    noise = fit_gp(levels, d, "noise")
    return BayesFactorResult(signal.log_marginal - noise.log_marginal, signal, noise, d)


# ---------------------------------------------------------------------------
# Interval-wise testing
# ---------------------------------------------------------------------------

def _knots(x: np.ndarray, size: int, order: int) -> tuple[np.ndarray, int]:
    k = min(order, size) - 1  # degree
    lo, hi = float(x.min()), float(x.max())
    inner = np.linspace(lo, hi, size - k + 1)
    return np.concatenate([np.full(k, lo), inner, np.full(k, hi)]), k


def bspline_basis(levels, size: int | None = None, order: int = 4) -> np.ndarray:
    """Design matrix (len(levels) x size) of a clamped B-spline basis with uniform knots."""
    x = np.asarray(levels, dtype=np.float64)
    knots, k = _knots(x, len(x) if size is None else size, order)
    return BSpline.design_matrix(np.clip(x, knots[0], knots[-1]), knots, k).toarray()


def greville_abscissae(levels, size: int | None = None, order: int = 4) -> np.ndarray:
    """Location of each basis function (mean of its interior knots)."""
    x = np.asarray(levels, dtype=np.float64)
    size = len(x) if size is None else size
    knots, k = _knots(x, size, order)
    if k == 0:
        return (knots[:-1] + knots[1:]) / 2
    return np.array([knots[i + 1:i + k + 1].mean() for i in range(size)])


def project(curves, levels, size: int | None = None) -> np.ndarray:
    """Least-squares B-spline coefficients for each row of ``curves``."""
    curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
    phi = bspline_basis(levels, size)
    coef, *_ = np.linalg.lstsq(phi, curves.T, rcond=None)
    return coef.T


def _interval_stats(diff: np.ndarray) -> np.ndarray:
    """Sum of squared mean differences over every interval; (..., K, K) upper-triangular."""
    sq = diff * diff
    csum = np.concatenate([np.zeros(sq.shape[:-1] + (1,)), np.cumsum(sq, axis=-1)], axis=-1)
    out = csum[..., None, 1:] - csum[..., :-1, None]
    k = diff.shape[-1]
    return np.where(np.triu(np.ones((k, k), dtype=bool)), out, np.nan)


def robin_fda_test(group1, group2, levels, permutations: int = 1000, seed: int = 0) -> ITPResult:
    """Interval testing procedure on B-spline coefficients of two groups of curves.

    Each interval of consecutive coefficients is tested with a two-sample
    permutation test; the adjusted p-value of a coefficient is the largest
    p-value over all intervals that contain it.
    """
    g1 = np.atleast_2d(np.asarray(group1, dtype=np.float64))
    g2 = np.atleast_2d(np.asarray(group2, dtype=np.float64))
    levels = np.asarray(levels, dtype=np.float64)
    if g1.shape[1] != levels.size or g2.shape[1] != levels.size:
        raise ValueError("curves must be sampled on the level grid")
    if g1.shape[0] < 2 or g2.shape[0] < 2:
        raise ValueError("need at least 2 curves per group")
    n1 = g1.shape[0]
    coef = project(np.vstack([g1, g2]), levels)
    k = coef.shape[1]

    observed = _interval_stats(coef[:n1].mean(0) - coef[n1:].mean(0))
    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((permutations, coef.shape[0])), axis=1)
    shuffled = coef[perms]  # B x N x K
    diffs = shuffled[:, :n1].mean(1) - shuffled[:, n1:].mean(1)
    null = _interval_stats(diffs)
    tol = 1e-12 * np.maximum(1.0, np.abs(observed))
    exceed = np.sum(null >= observed - tol, axis=0)
    pvals = (1.0 + exceed) / (permutations + 1.0)
    pvals = np.where(np.isnan(observed), np.nan, pvals)

    adjusted = np.empty(k)
    for c in range(k):
        adjusted[c] = np.nanmax(pvals[: c + 1, c:])
    raw = np.diag(pvals).copy()
    return ITPResult(raw, adjusted, pvals, basis_size=k, permutations=permutations)


# ---------------------------------------------------------------------------
# Area under the curves
# ---------------------------------------------------------------------------

def spline_area(levels, values) -> float:
    """Integral of the cubic spline interpolant over the level range."""
    x = np.asarray(levels, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if x.size < 2 or x.shape != y.shape:
        raise ValueError("need at least 2 points of matching length")
    return float(CubicSpline(x, y, bc_type="not-a-knot").integrate(x[0], x[-1]))


def robin_auc(mean1, mean2, levels) -> AUCResult:
    a1 = spline_area(levels, mean1)
    a2 = spline_area(levels, mean2)
    return AUCResult(a1, a2, a2 / a1 if a1 != 0 else None)
