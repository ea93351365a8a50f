"""Quantitative checks on hypothesis sets.

Covers the empirical data share of each hypothesis cell, moment probes of
distribution preservation, conditional moment curves against the
call-center ground truth, the density-exponent law of squared-Euclidean
quantizers, and negative log-likelihood of held-out labels under a
Gaussian fit or a kernel density estimate of the hypothesis set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import numpy as np

from .datasets import CallCenterModel
from .metrics import nearest_indices
from .network import NetworkSpec, fit_mhp
from .optim import TrainConfig
from .validation import as_point, as_points

REPORT_SCHEMA_VERSION = 1


@dataclass
class ShareReport:
    """Per-hypothesis empirical data shares plus uniformity statistics.

    ``chi_square_vs_uniform`` is sample_count * N * sum_i (share_i - 1/N)^2,
    the Pearson statistic against the equal-share reference.
    """

    shares: np.ndarray
    max_share: float
    min_share: float
    chi_square_vs_uniform: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "shares": [float(s) for s in self.shares],
            "max_share": self.max_share,
            "min_share": self.min_share,
            "chi_square_vs_uniform": self.chi_square_vs_uniform,
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ShareReport":
        return cls(
            shares=np.asarray(payload["shares"], dtype=np.float64),
            max_share=float(payload["max_share"]),
            min_share=float(payload["min_share"]),
            chi_square_vs_uniform=float(payload["chi_square_vs_uniform"]),
            sample_count=int(payload["sample_count"]),
        )


def voronoi_shares(hyps, samples) -> ShareReport:
    """Fraction of samples assigned to each hypothesis.

    Assignment is plain Euclidean nearest-neighbor with lowest-index tie
    breaking; both supported metrics induce this same partition.
    """
    hyps = as_points(hyps, name="hyps")
    samples = as_points(samples, dim=hyps.shape[1], name="samples")
    winners = nearest_indices(samples, hyps)
    counts = np.bincount(winners, minlength=hyps.shape[0])
    n_hyp = hyps.shape[0]
    total = samples.shape[0]
    shares = counts / total
    chi_square = total * n_hyp * float(((shares - 1.0 / n_hyp) ** 2).sum())
    return ShareReport(
        shares=shares,
        max_share=float(shares.max()),
        min_share=float(shares.min()),
        chi_square_vs_uniform=chi_square,
        sample_count=total,
    )


@dataclass(frozen=True)
class CoordinateProbe:
    """Test function b(y) = y_j."""

    index: int = 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64)[:, self.index]


@dataclass(frozen=True)
class SecondMomentProbe:
    """Test function b(y) = y_j^2."""

    index: int = 0

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64)[:, self.index] ** 2


@dataclass(frozen=True)
class BoxIndicatorProbe:
    """Indicator of the axis-aligned box [lower, upper]."""

    lower: tuple
    upper: tuple

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-d and of equal length")
        if not np.all(lo < hi):
            raise ValueError("box requires lower < upper in every coordinate")
        object.__setattr__(self, "lower", tuple(float(v) for v in lo))
        object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        inside = np.all((pts >= lo) & (pts <= hi), axis=1)
        return inside.astype(np.float64)


def moment_probe_gap(hyps, probe, reference_samples) -> float:
    """|mean of the probe over hypotheses - mean over reference samples|.

    A distribution-preserving hypothesis set drives this gap to zero for
    every continuous bounded probe as the set grows.
    """
    hyps = as_points(hyps, name="hyps")
    reference = as_points(reference_samples, dim=hyps.shape[1], name="reference_samples")
    return float(abs(probe(hyps).mean() - probe(reference).mean()))


def conditional_moment_curve(model, x_grid, call_center: CallCenterModel) -> dict:
    """Hypothesis-set mean/variance across times of day vs the Erlang truth.

    ``model`` is anything whose ``predict`` maps (B, 1) inputs to
    (B, N, 1) hypothesis sets.  Variances are population form over the N
    hypotheses.  Returns arrays keyed x, hyp_mean, hyp_var, true_mean,
    true_var.
    """
    x = np.asarray(x_grid, dtype=np.float64).ravel()
    hyp_sets = np.asarray(model.predict(x[:, None]))
    if hyp_sets.ndim != 3 or hyp_sets.shape[2] != 1:
        raise ValueError("model must predict scalar hypothesis sets of shape (B, N, 1)")
    values = hyp_sets[:, :, 0]
    return {
        "x": x,
        "hyp_mean": values.mean(axis=1),
        "hyp_var": values.var(axis=1),
        "true_mean": np.asarray(call_center.conditional_mean(x)),
        "true_var": np.asarray(call_center.conditional_var(x)),
    }


def density_exponent_ks(hyps, grid, density, exponent: float) -> float:
    """KS distance between 1-d hypotheses and the law proportional to density**exponent.

    The target CDF comes from trapezoid integration of the re-exponentiated
    density over ``grid``; the supremum is evaluated at the hypothesis
    positions from both sides of the empirical step function.
    """
    hyps = as_points(hyps, dim=1, name="hyps")[:, 0]
    grid = np.asarray(grid, dtype=np.float64).ravel()
    density = np.asarray(density, dtype=np.float64).ravel()
    if grid.shape != density.shape or grid.size < 2:
        raise ValueError("grid and density must be 1-d arrays of equal length >= 2")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing")
    if np.any(density < 0.0):
        raise ValueError("density must be nonnegative on the grid")
    powered = density ** exponent
    if not np.all(np.isfinite(powered)):
        raise ValueError("density**exponent is not finite on the grid")
    segments = 0.5 * (powered[1:] + powered[:-1]) * np.diff(grid)
    total = float(segments.sum())
    if not (np.isfinite(total) and total > 0.0):
        raise ValueError("density**exponent is not normalizable on the grid")
    cdf = np.concatenate([[0.0], np.cumsum(segments)]) / total
    sorted_h = np.sort(hyps)
    target = np.interp(sorted_h, grid, cdf)
    count = sorted_h.size
    upper = np.arange(1, count + 1) / count
    lower = np.arange(0, count) / count
    return float(np.maximum(np.abs(upper - target), np.abs(target - lower)).max())


@dataclass
class NllReport:
    """Mean negative log-likelihood of test points under one estimator."""

    estimator: str
    nll_per_sample: float
    test_count: int
    bandwidth: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "estimator": self.estimator,
            "nll_per_sample": self.nll_per_sample,
            "test_count": self.test_count,
            "bandwidth": None if self.bandwidth is None else [float(b) for b in self.bandwidth],
        }


def _loaded_covariance(hyps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Population mean/covariance with a tiny trace-scaled diagonal load."""
    mean = hyps.mean(axis=0)
    centered = hyps - mean
    cov = centered.T @ centered / hyps.shape[0]
    dim = hyps.shape[1]
    cov = cov + np.eye(dim) * (1e-9 * np.trace(cov) / dim)
    return mean, cov


def nll_norm(hyps, test) -> NllReport:
    """NLL under a single Gaussian fitted to the hypothesis set."""
    hyps = as_points(hyps, name="hyps")
    test = as_points(test, dim=hyps.shape[1], name="test")
    count, dim = hyps.shape
    if count <= dim:
        raise ValueError(f"need more hypotheses ({count}) than dimensions ({dim}) "
                         "for a nondegenerate covariance")
    mean, cov = _loaded_covariance(hyps)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("hypothesis covariance is singular even after diagonal loading") from exc
    diff = test - mean
    z = np.linalg.solve(chol, diff.T).T
    log_det = 2.0 * float(np.log(np.diagonal(chol)).sum())
    nll = 0.5 * (dim * np.log(2.0 * np.pi) + log_det + np.einsum("ij,ij->i", z, z))
    return NllReport(estimator="norm", nll_per_sample=float(nll.mean()),
                     test_count=test.shape[0])


def scott_bandwidth(points: np.ndarray) -> np.ndarray:
    """Per-dimension Scott bandwidth: std * count^(-1 / (dim + 4))."""
    points = as_points(points, name="points")
    sd = points.std(axis=0)
    if np.any(sd == 0.0):
        raise ValueError("a dimension has zero variance; pass an explicit bandwidth")
    return sd * points.shape[0] ** (-1.0 / (points.shape[1] + 4))


def _resolve_bandwidth(hyps: np.ndarray, bandwidth) -> np.ndarray:
    if bandwidth is None:
        return scott_bandwidth(hyps)
    bw = np.asarray(bandwidth, dtype=np.float64)
    if bw.ndim == 0:
        bw = np.full(hyps.shape[1], float(bw))
    if bw.shape != (hyps.shape[1],):
        raise ValueError(f"bandwidth must be scalar or of length {hyps.shape[1]}")
    if not np.all(bw > 0.0):
        raise ValueError("bandwidth must be positive")
    return bw


def kde_log_density(points, hyps, bandwidth) -> np.ndarray:
    """Log density of a Gaussian product-kernel estimate centered on ``hyps``."""
    hyps = as_points(hyps, name="hyps")
    points = as_points(points, dim=hyps.shape[1], name="points")
    bw = _resolve_bandwidth(hyps, bandwidth)
    u = (points[:, None, :] - hyps[None, :, :]) / bw
    log_kernels = -0.5 * np.einsum("pki,pki->pk", u, u)
    top = log_kernels.max(axis=1)
    lse = top + np.log(np.exp(log_kernels - top[:, None]).sum(axis=1))
    dim = hyps.shape[1]
    return lse - np.log(hyps.shape[0]) - np.log(bw).sum() - 0.5 * dim * np.log(2.0 * np.pi)


def nll_kde(hyps, test, bandwidth=None) -> NllReport:
    """NLL under a Gaussian-kernel density estimate of the hypothesis set.

    ``bandwidth`` is a scalar, a per-dimension vector, or None for Scott's
    rule; the resolved value is reported for reproducibility.
    """
    hyps = as_points(hyps, name="hyps")
    test = as_points(test, dim=hyps.shape[1], name="test")
    bw = _resolve_bandwidth(hyps, bandwidth)
    log_density = kde_log_density(test, hyps, bw)
    return NllReport(estimator="kde", nll_per_sample=float(-log_density.mean()),
                     test_count=test.shape[0], bandwidth=bw)


def _gaussian_nll_batch(hyp_sets: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row Gaussian NLL: fit a Gaussian to each (N, n) set, evaluate its label."""
    count = hyp_sets.shape[1]
    dim = hyp_sets.shape[2]
    if count <= dim:
        raise ValueError(f"need more hypotheses ({count}) than dimensions ({dim})")
    mean = hyp_sets.mean(axis=1)
    centered = hyp_sets - mean[:, None, :]
    cov = np.einsum("bki,bkj->bij", centered, centered) / count
    trace = np.einsum("bii->b", cov)
    cov = cov + np.eye(dim)[None] * (1e-9 * trace / dim)[:, None, None]
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("a per-input hypothesis covariance is singular") from exc
    diff = labels - mean
    z = np.linalg.solve(chol, diff[..., None])[..., 0]
    log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    return 0.5 * (dim * np.log(2.0 * np.pi) + log_det + np.einsum("bi,bi->b", z, z))


def _kde_nll_batch(hyp_sets: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row KDE NLL with Scott bandwidths per hypothesis set."""
    count = hyp_sets.shape[1]
    dim = hyp_sets.shape[2]
    sd = hyp_sets.std(axis=1)
    if np.any(sd == 0.0):
        raise ValueError("a per-input hypothesis set has zero variance in some dimension; "
                         "pass an explicit bandwidth")
    bw = sd * count ** (-1.0 / (dim + 4))
    u = (labels[:, None, :] - hyp_sets) / bw[:, None, :]
    log_kernels = -0.5 * np.einsum("bki,bki->bk", u, u)
    top = log_kernels.max(axis=1)
    lse = top + np.log(np.exp(log_kernels - top[:, None]).sum(axis=1))
    log_density = lse - np.log(count) - np.log(bw).sum(axis=1) - 0.5 * dim * np.log(2.0 * np.pi)
    return -log_density, bw


def conditional_nll_reports(model, X, Y) -> dict[str, NllReport]:
    """Both estimators evaluated per test input on the model's hypothesis set.

    For every test pair (x, y) the model's N hypotheses at x define the
    density estimate that is evaluated at y; the reported numbers are
    means over the test set, one per estimator.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] == 0:
        raise ValueError("test set is empty")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("test features and labels differ in length")
    hyp_sets = np.asarray(model.predict(X))
    if hyp_sets.shape[2] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: model emits dimension {hyp_sets.shape[2]}, "
                         f"labels have {Y.shape[1]}")
    norm_vals = _gaussian_nll_batch(hyp_sets, Y)
    kde_vals, bw = _kde_nll_batch(hyp_sets, Y)
    return {
        "norm": NllReport(estimator="norm", nll_per_sample=float(norm_vals.mean()),
                          test_count=int(Y.shape[0])),
        "kde": NllReport(estimator="kde", nll_per_sample=float(kde_vals.mean()),
                         test_count=int(Y.shape[0]), bandwidth=bw.mean(axis=0)),
    }


def nll_comparison(train, test, spec: NetworkSpec, cfg_a: TrainConfig,
                   cfg_b: TrainConfig) -> dict[str, dict[str, NllReport]]:
    """Train one model per config and report both estimators' NLL for each.

    The two configs must be identical apart from their metric (so the
    comparison uses identical hyperparameters, including the seed); the
    result is keyed by metric kind, independent of argument order.
    """
    if cfg_a.metric is None or cfg_b.metric is None:
        raise ValueError("both configs must carry a metric")
    if cfg_a.metric.kind == cfg_b.metric.kind:
        raise ValueError("configs must use different metric kinds")
    if replace(cfg_a, metric=None) != replace(cfg_b, metric=None):
        raise ValueError("configs must be identical apart from the metric")
    train_X, train_Y = train
    test_X, test_Y = test
    test_X = np.asarray(test_X, dtype=np.float64)
    if test_X.shape[0] == 0:
        raise ValueError("test set is empty")
    results: dict[str, dict[str, NllReport]] = {}
    for cfg in (cfg_a, cfg_b):
        model, _ = fit_mhp(train_X, train_Y, spec, cfg)
        results[cfg.metric.kind] = conditional_nll_reports(model, test_X, test_Y)
    return results
