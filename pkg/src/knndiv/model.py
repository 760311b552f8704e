"""Ground-truth machinery: Gaussian class-conditional models, posteriors, and oracles.

The estimators in this package are benchmarked against synthetic two-class
problems where everything is computable: multivariate Gaussians with
exponentially decaying correlation, the exact class-1 posterior, and the
squared Hellinger distance both in closed form and by Monte Carlo integration
over the mixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular, toeplitz

__all__ = [
    "GaussianSpec",
    "DistributionPair",
    "LabeledDataset",
    "build_ar_covariance",
    "sample",
    "posterior_eta",
    "hellinger_squared_gaussian",
    "functional_ground_truth_mc",
]


def build_ar_covariance(d: int, beta: float) -> np.ndarray:
    """Covariance matrix with entry (i, j) equal to ``beta ** |i - j|``.

    Parameters
    ----------
    d : int
        Ambient dimension, at least 1.
    beta : float
        Correlation decay, strictly inside (-1, 1). Outside that range the
        matrix may be singular or indefinite, so it is rejected.

    Returns
    -------
    np.ndarray
        Symmetric positive definite ``d x d`` Toeplitz matrix with unit
        diagonal.
    """
    if d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if not abs(beta) < 1:
        raise ValueError(f"correlation decay must satisfy |beta| < 1, got {beta}")
    return toeplitz(float(beta) ** np.arange(d))


@dataclass(frozen=True)
class GaussianSpec:
    """One class-conditional distribution: N(mu * 1_d, Sigma(beta)).

    Every coordinate has mean ``mu``; the covariance has unit diagonal and
    correlation ``beta ** |i - j|`` between coordinates i and j.
    """

    mu: float
    beta: float
    d: int

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.d}")
        if not abs(self.beta) < 1:
            raise ValueError(f"correlation decay must satisfy |beta| < 1, got {self.beta}")

    def mean(self) -> np.ndarray:
        return np.full(self.d, float(self.mu))

    def covariance(self) -> np.ndarray:
        return build_ar_covariance(self.d, self.beta)


@dataclass(frozen=True)
class DistributionPair:
    """Two class-conditional Gaussians plus class priors; the mixture they
    induce is the sampling distribution of every experiment.

    Priors live in [0, 1] and must sum to one. The degenerate endpoints are
    allowed so that single-class edge cases stay constructible.
    """

    class0: GaussianSpec
    class1: GaussianSpec
    prior0: float = 0.5
    prior1: float = 0.5

    def __post_init__(self) -> None:
        if self.class0.d != self.class1.d:
            raise ValueError(
                f"class dimensions differ: {self.class0.d} != {self.class1.d}"
            )
        if not (0.0 <= self.prior0 <= 1.0 and 0.0 <= self.prior1 <= 1.0):
            raise ValueError("priors must lie in [0, 1]")
        if abs(self.prior0 + self.prior1 - 1.0) > 1e-12:
            raise ValueError(
                f"priors must sum to 1, got {self.prior0} + {self.prior1}"
            )

    @property
    def d(self) -> int:
        return self.class0.d


@dataclass(frozen=True)
class LabeledDataset:
    """N points in d dimensions with binary labels."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        labels = np.asarray(self.labels)
        if points.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {points.shape}")
        if labels.ndim != 1 or labels.shape[0] != points.shape[0]:
            raise ValueError(
                f"labels must be one per point: {labels.shape} vs {points.shape}"
            )
        if not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must take only the values 0 and 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels.astype(np.int8))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(pair: DistributionPair, n: int, seed) -> LabeledDataset:
    """Draw a stratified sample of size ``n`` from the mixture.

    Exactly ``round(n * prior1)`` points carry label 1 (stratified rather
    than Binomial label counts, which removes label-count noise from trial
    to trial). Conditional draws apply the Cholesky factor of the class
    covariance to standard normal variates and shift by the class mean.
    Bit-identical output for identical ``seed``.
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    rng = _as_generator(seed)
    d = pair.d
    n1 = int(round(n * pair.prior1))
    n0 = n - n1

    blocks = []
    for spec, count in ((pair.class0, n0), (pair.class1, n1)):
        z = rng.standard_normal((count, d))
        chol = np.linalg.cholesky(spec.covariance())
        blocks.append(z @ chol.T + spec.mean())
    points = np.vstack(blocks)
    labels = np.repeat([0, 1], [n0, n1])
    order = rng.permutation(n)
    return LabeledDataset(points=points[order], labels=labels[order])


class _GaussianLogDensity:
    """Cholesky-backed log density of one GaussianSpec, vectorized over rows."""

    def __init__(self, spec: GaussianSpec):
        cov = spec.covariance()
        self._chol = np.linalg.cholesky(cov)  # raises if not positive definite
        self._mean = spec.mean()
        self._log_norm = -0.5 * (
            spec.d * np.log(2.0 * np.pi) + 2.0 * np.log(np.diag(self._chol)).sum()
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        centered = np.atleast_2d(x) - self._mean
        white = solve_triangular(self._chol, centered.T, lower=True)
        return self._log_norm - 0.5 * (white * white).sum(axis=0)


def posterior_eta(pair: DistributionPair, x: np.ndarray) -> np.ndarray | float:
    """Probability that a point at ``x`` belongs to class 1.

    Evaluates ``p1 f1(x) / (p0 f0(x) + p1 f1(x))`` through log-density
    differences, which stays accurate when both densities underflow (routine
    at d = 10). Accepts a single d-vector or an (m, d) batch; returns a
    scalar or a length-m vector accordingly.
    """
    x = np.asarray(x, dtype=float)
    scalar_input = x.ndim == 1
    if pair.prior1 == 0.0:
        out = np.zeros(1 if scalar_input else x.shape[0])
        return float(out[0]) if scalar_input else out
    if pair.prior0 == 0.0:
        out = np.ones(1 if scalar_input else x.shape[0])
        return float(out[0]) if scalar_input else out

    log0 = _GaussianLogDensity(pair.class0)
    log1 = _GaussianLogDensity(pair.class1)
    margin = (np.log(pair.prior1) + log1(x)) - (np.log(pair.prior0) + log0(x))
    # logistic of the log-odds; exp of the negative |margin| never overflows
    eta = np.where(
        margin >= 0,
        1.0 / (1.0 + np.exp(-np.abs(margin))),
        np.exp(-np.abs(margin)) / (1.0 + np.exp(-np.abs(margin))),
    )
    return float(eta[0]) if scalar_input else eta


def hellinger_squared_gaussian(pair: DistributionPair) -> float:
    """Squared Hellinger distance between the two class Gaussians, in closed form.

    Computes ``1 - BC`` where the Bhattacharyya coefficient is

        BC = det(S0)^(1/4) det(S1)^(1/4) / det(M)^(1/2)
             * exp(-(1/8) dmu' M^{-1} dmu),      M = (S0 + S1) / 2.

    Evaluated in log space via Cholesky factors, so indefinite covariances
    are rejected by construction. Symmetric in the two classes; exactly 0
    for identical specs. Priors do not enter.
    """
    s0 = pair.class0.covariance()
    s1 = pair.class1.covariance()
    mid = 0.5 * (s0 + s1)
    dmu = pair.class1.mean() - pair.class0.mean()

    def _logdet_chol(a: np.ndarray) -> float:
        chol = np.linalg.cholesky(a)
        return 2.0 * float(np.log(np.diag(chol)).sum())

    logdet0 = _logdet_chol(s0)
    logdet1 = _logdet_chol(s1)
    mid_factor = cho_factor(mid, lower=True)
    logdet_mid = 2.0 * float(np.log(np.diag(mid_factor[0])).sum())
    quad = float(dmu @ cho_solve(mid_factor, dmu))
    log_bc = 0.25 * logdet0 + 0.25 * logdet1 - 0.5 * logdet_mid - 0.125 * quad
    return 1.0 - float(np.exp(log_bc))


def functional_ground_truth_mc(pair: DistributionPair, g, n_mc: int, seed) -> float:
    """Monte Carlo estimate of ``E_f[g(eta)]`` over the mixture.

    Draws ``n_mc`` points from the mixture via :func:`sample`, evaluates the
    exact posterior at each, and averages ``g``. The companion ground truth
    for the squared Hellinger distance uses ``g(eta) = (sqrt(eta) -
    sqrt(1 - eta))**2``, for which this expectation equals the closed form
    of :func:`hellinger_squared_gaussian` under equal priors.
    """
    if n_mc < 1:
        raise ValueError(f"Monte Carlo sample size must be positive, got {n_mc}")
    data = sample(pair, n_mc, seed)
    total = 0.0
    chunk = 1 << 18
    for start in range(0, n_mc, chunk):
        eta = posterior_eta(pair, data.points[start : start + chunk])
        total += float(np.sum(g(np.asarray(eta))))
    return total / n_mc
