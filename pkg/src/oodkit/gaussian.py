"""Gaussian density model of training features and Mahalanobis scoring.

Distances are computed through the Cholesky factor of the (optionally
ridge-regularized) covariance: D = ||L^-1 (x - mu)||. The explicit inverse
is never used for scoring; it exists only so the sweep harness can report
how long forming it takes, and so tests can check the solve against the
inverse quadratic form.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigError, DataError, SingularCovarianceError
from .tensor_io import read_npy, write_npy


@dataclass(frozen=True)
class EpsilonPolicy:
    """Ridge policy for the covariance: none, absolute(eps), or relative(rho).

    relative(rho) adds rho * trace(Sigma)/d to the diagonal, scaling the
    ridge with the data; 'none' refuses to regularize and lets a singular
    covariance fail loudly.
    """

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "absolute", "relative"):
            raise ConfigError(f"unknown epsilon policy {self.kind!r}")
        if self.kind != "none" and self.value < 0:
            raise ConfigError(f"epsilon value {self.value} must be non-negative")

    @classmethod
    def none(cls) -> "EpsilonPolicy":
        return cls("none")

    @classmethod
    def absolute(cls, eps: float) -> "EpsilonPolicy":
        return cls("absolute", float(eps))

    @classmethod
    def relative(cls, rho: float) -> "EpsilonPolicy":
        return cls("relative", float(rho))

    @classmethod
    def parse(cls, text: str) -> "EpsilonPolicy":
        """Parse 'none', 'absolute:EPS', or 'relative:RHO'."""
        kind, _, value = text.partition(":")
        if kind == "none":
            return cls.none()
        if kind in ("absolute", "relative"):
            if not value:
                raise ConfigError(f"epsilon policy {kind!r} needs a value, e.g. {kind}:1e-6")
            try:
                return cls(kind, float(value))
            except ValueError:
                raise ConfigError(f"bad epsilon value {value!r}") from None
        raise ConfigError(f"unknown epsilon policy {text!r}")

    def describe(self) -> str:
        return self.kind if self.kind == "none" else f"{self.kind}:{self.value:g}"


DEFAULT_EPSILON = EpsilonPolicy.relative(1e-6)


@dataclass(frozen=True)
class GaussianModel:
    mean: np.ndarray          # (d,)
    covariance: np.ndarray    # (d, d), symmetric, divisor n-1
    factor: np.ndarray        # lower Cholesky of covariance + epsilon*I
    epsilon: float            # ridge actually applied
    n_fit: int

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    def regularized_covariance(self) -> np.ndarray:
        return self.covariance + self.epsilon * np.eye(self.d)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_npy(self.mean, directory / "mean.npy")
        write_npy(self.covariance, directory / "covariance.npy")
        meta = {"epsilon": self.epsilon, "d": self.d, "n_fit": self.n_fit}
        (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory) -> "GaussianModel":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        mean = read_npy(directory / "mean.npy")
        cov = read_npy(directory / "covariance.npy")
        if cov.shape != (meta["d"], meta["d"]) or mean.shape != (meta["d"],):
            raise DataError(f"{directory}: model files disagree with meta.json")
        factor = _cholesky(cov + meta["epsilon"] * np.eye(meta["d"]),
                           meta["d"], meta["n_fit"])
        return cls(mean, cov, factor, float(meta["epsilon"]), int(meta["n_fit"]))


def _cholesky(matrix: np.ndarray, d: int, n: int) -> np.ndarray:
    c, info = scipy.linalg.lapack.dpotrf(matrix, lower=1, clean=1)
    if info != 0:
        raise SingularCovarianceError(
            f"covariance not positive definite: Cholesky failed at pivot {info} "
            f"(d={d}, n={n})",
            d=d, n=n, pivot=int(info),
        )
    return c


def fit_gaussian(features: np.ndarray,
                 epsilon_policy: EpsilonPolicy = DEFAULT_EPSILON) -> GaussianModel:
    """Fit mean and sample covariance (divisor n-1), then factorize.

    Under policy 'none' a covariance that cannot be Cholesky-factorized is an
    error, never silently regularized. When n - 1 < d that failure is certain
    (rank at most n-1), so it is raised before allocating the d x d matrix.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got rank {features.ndim}")
    n, d = features.shape
    if n < 2:
        raise DataError(f"need at least 2 samples to fit a Gaussian, got {n}")
    if d < 1:
        raise DataError("need at least 1 feature dimension")
    if epsilon_policy.kind == "none" and n - 1 < d:
        raise SingularCovarianceError(
            f"singular covariance: {n} samples in {d} dimensions give rank at "
            f"most {n - 1} < {d}; refusing to fit with epsilon policy 'none' "
            "(choose absolute/relative regularization)",
            d=d, n=n, pivot=None,
        )
    mean = features.mean(axis=0)
    centered = features - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0  # exact symmetry
    if epsilon_policy.kind == "none":
        epsilon = 0.0
    elif epsilon_policy.kind == "absolute":
        epsilon = epsilon_policy.value
    else:
        scale = float(np.trace(cov)) / d
        # a zero-variance covariance has no scale to be relative to; fall back
        # to the raw value so relative(rho > 0) still yields an SPD matrix
        epsilon = epsilon_policy.value * scale if scale > 0 else epsilon_policy.value
    factor = _cholesky(cov + epsilon * np.eye(d), d, n)
    return GaussianModel(mean, cov, factor, epsilon, n)


def mahalanobis(model: GaussianModel, x: np.ndarray) -> float:
    """Distance D (the square root), via triangular solve against the factor."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.d,):
        raise DataError(f"expected vector of length {model.d}, got shape {x.shape}")
    z = scipy.linalg.solve_triangular(model.factor, x - model.mean, lower=True)
    return float(np.sqrt(z @ z))


def mahalanobis_batch(model: GaussianModel, m: np.ndarray) -> np.ndarray:
    """Row-wise distances; agrees with mahalanobis() elementwise."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != model.d:
        raise DataError(f"expected matrix with {model.d} columns, got shape {m.shape}")
    z = scipy.linalg.solve_triangular(model.factor, (m - model.mean).T, lower=True)
    return np.sqrt(np.einsum("ij,ij->j", z, z))


def invert_covariance_timed(model: GaussianModel) -> tuple[np.ndarray, float]:
    """Form the explicit inverse of the regularized covariance and time it.

    This is the operation whose cost the sweep table reports; scoring never
    depends on it.
    """
    eye = np.eye(model.d)
    t0 = time.perf_counter()
    inverse = scipy.linalg.cho_solve((model.factor, True), eye)
    elapsed = time.perf_counter() - t0
    return inverse, elapsed


def explicit_inverse_scores(train_features: np.ndarray,
                            test_features: np.ndarray) -> tuple[np.ndarray, float]:
    """Baseline emulation: score through an explicit dense (pseudo)inverse.

    Fits mean/covariance on the training rows, forms the inverse with a plain
    LU factorization (timed), and returns quadratic-form distance magnitudes
    for the test rows. On a rank-deficient covariance the LU succeeds on
    floating-point-noise pivots and the resulting "inverse" amplifies any
    off-span component by ~1e15, so test distances explode while train
    distances stay moderate. That breakdown is the point: this path exists to
    demonstrate why scoring at full dimension through an explicit inverse
    fails, and is never used by the solve-based scorer. The quadratic form
    through such an inverse is not even positive, so its magnitude is
    reported.
    """
    train = np.asarray(train_features, dtype=np.float64)
    test = np.asarray(test_features, dtype=np.float64)
    if train.ndim != 2 or test.ndim != 2 or train.shape[1] != test.shape[1]:
        raise DataError("train/test feature matrices must share a column count")
    n, d = train.shape
    if n < 2:
        raise DataError(f"need at least 2 samples, got {n}")
    mean = train.mean(axis=0)
    centered = train - mean
    cov = centered.T @ centered / (n - 1)
    cov = (cov + cov.T) / 2.0
    t0 = time.perf_counter()
    inverse = np.linalg.inv(cov)
    elapsed = time.perf_counter() - t0
    delta = test - mean
    d2 = np.einsum("ij,jk,ik->i", delta, inverse, delta)
    return np.sqrt(np.abs(d2)), elapsed


@dataclass(frozen=True)
class Ellipse:
    """Level set {x : (x-c)^T Sigma^-1 (x-c) = n_std^2} of a 2-D Gaussian."""

    center: np.ndarray     # (2,)
    semi_axes: np.ndarray  # (a, b) with a >= b > 0
    angle: float           # major-axis angle vs first coordinate, in (-pi/2, pi/2]
    n_std: float

    def boundary(self, num: int = 128) -> np.ndarray:
        """Points on the ellipse boundary, shape (num, 2)."""
        theta = np.linspace(0.0, 2.0 * np.pi, num, endpoint=False)
        a, b = self.semi_axes
        unit = np.stack([a * np.cos(theta), b * np.sin(theta)], axis=1)
        c, s = math.cos(self.angle), math.sin(self.angle)
        rot = np.array([[c, -s], [s, c]])
        return unit @ rot.T + self.center


def covariance_ellipse(model: GaussianModel, n_std: float) -> Ellipse:
    """Covariance ellipse of a 2-D model at n_std standard deviations."""
    if model.d != 2:
        raise ConfigError(f"covariance ellipse requires d=2, model has d={model.d}")
    if n_std <= 0:
        raise ConfigError(f"n_std must be positive, got {n_std}")
    eigvals, eigvecs = np.linalg.eigh(model.regularized_covariance())
    # eigh returns ascending order; leading axis last
    a = n_std * math.sqrt(max(eigvals[1], 0.0))
    b = n_std * math.sqrt(max(eigvals[0], 0.0))
    if eigvals[1] - eigvals[0] <= 1e-12 * abs(eigvals[1]):
        angle = 0.0  # circle: orientation arbitrary, normalized to 0
    else:
        v = eigvecs[:, 1]
        angle = math.atan2(v[1], v[0])
        if angle <= -math.pi / 2:
            angle += math.pi
        elif angle > math.pi / 2:
            angle -= math.pi
    return Ellipse(model.mean.copy(), np.array([a, b]), angle, float(n_std))
