"""Dimensionality reduction of embedding tensors.

Three families: average pooling over the spatial axes (stateless), PCA on
flattened standardized features (fit on train, applied to both splits), and
a from-scratch exact t-SNE (train and test embedded jointly, since t-SNE has
no out-of-sample transform).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DataError
from .tensor_io import read_npy, write_npy

_AXIS_NAMES = ("C", "D", "H", "W")


# ---------------------------------------------------------------------------
# Average pooling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PoolingSpec:
    """No-padding average pooling: kernel j, stride k, over (H,W) or (D,H,W)."""

    dims: int
    kernel: int
    stride: int

    def __post_init__(self):
        if self.dims not in (2, 3):
            raise ConfigError(f"pooling dims must be 2 or 3, got {self.dims}")
        if self.kernel < 1:
            raise ConfigError(f"pooling kernel must be >= 1, got {self.kernel}")
        if self.stride < 1:
            raise ConfigError(f"pooling stride must be >= 1, got {self.stride}")

    @property
    def pooled_axes(self) -> tuple[int, ...]:
        return (2, 3) if self.dims == 2 else (1, 2, 3)


def pooled_length(length: int, kernel: int, stride: int) -> int:
    return (length - kernel) // stride + 1


def average_pool(t: np.ndarray, spec: PoolingSpec) -> np.ndarray:
    """Pool (H,W) per (C,D) slice for dims=2, (D,H,W) per channel for dims=3.

    Each output cell is the arithmetic mean of the kernel^dims cells it
    covers; output axis length is floor((L - j)/k) + 1.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 4:
        raise DataError(f"expected a 4-axis tensor, got rank {t.ndim}")
    for axis in spec.pooled_axes:
        if t.shape[axis] < spec.kernel:
            raise ConfigError(
                f"axis {_AXIS_NAMES[axis]} (length {t.shape[axis]}) is shorter "
                f"than pooling kernel {spec.kernel}"
            )
    window = (spec.kernel,) * len(spec.pooled_axes)
    w = sliding_window_view(t, window, axis=spec.pooled_axes)
    if spec.dims == 2:
        w = w[:, :, ::spec.stride, ::spec.stride]
        return w.mean(axis=(-2, -1))
    w = w[:, ::spec.stride, ::spec.stride, ::spec.stride]
    return w.mean(axis=(-3, -2, -1))


def flatten(t: np.ndarray) -> np.ndarray:
    """C-order flattening to a feature vector."""
    return np.asarray(t, dtype=np.float64).reshape(-1)


def stack_features(tensors: list[np.ndarray], width: Optional[int] = None) -> np.ndarray:
    if not tensors:
        return np.empty((0, 0 if width is None else width))
    return np.stack([flatten(t) for t in tensors])


# ---------------------------------------------------------------------------
# Standardization + PCA
# ---------------------------------------------------------------------------

def fit_standardizer(train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population std; near-constant columns get std 1.

    Population (divide by n) rather than sample std, fixed for
    reproducibility. A column with std < 1e-12 standardizes to 0.
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2 or train.shape[0] < 2:
        raise DataError("standardizer needs a 2-D matrix with at least 2 rows")
    mean = train.mean(axis=0)
    std = train.std(axis=0)  # population
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


@dataclass(frozen=True)
class PcaModel:
    feature_mean: np.ndarray        # (d,)
    feature_std: np.ndarray         # (d,)
    components: np.ndarray          # (n, d), orthonormal rows
    explained_variance: np.ndarray  # (n,), non-increasing, non-negative

    @property
    def n(self) -> int:
        return self.components.shape[0]

    @property
    def d(self) -> int:
        return self.components.shape[1]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_npy(self.feature_mean, directory / "mean.npy")
        write_npy(self.feature_std, directory / "std.npy")
        write_npy(self.components, directory / "components.npy")
        write_npy(self.explained_variance, directory / "explained_variance.npy")
        meta = {"n": self.n, "d": self.d, "format_version": 1}
        (directory / "meta.json").write_text(json.dumps(meta, sort_keys=True) + "\n")

    @classmethod
    def load(cls, directory) -> "PcaModel":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        if meta.get("format_version") != 1:
            raise DataError(f"{directory}: unknown PCA format_version {meta.get('format_version')}")
        model = cls(
            feature_mean=read_npy(directory / "mean.npy"),
            feature_std=read_npy(directory / "std.npy"),
            components=read_npy(directory / "components.npy"),
            explained_variance=read_npy(directory / "explained_variance.npy"),
        )
        if model.components.shape != (meta["n"], meta["d"]):
            raise DataError(f"{directory}: components shape disagrees with meta.json")
        return model


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Make each component's largest-magnitude entry positive (first on ties)."""
    out = components.copy()
    for row in out:
        idx = int(np.argmax(np.abs(row)))
        if row[idx] < 0:
            row *= -1.0
    return out


def _complete_basis(components: list[np.ndarray], d: int, extra: int) -> list[np.ndarray]:
    """Deterministically extend an orthonormal set with canonical-basis residuals."""
    added = []
    for i in range(d):
        if len(added) == extra:
            break
        r = np.zeros(d)
        r[i] = 1.0
        for v in components + added:
            r -= (v @ r) * v
        norm = np.linalg.norm(r)
        if norm > 1e-8:
            added.append(r / norm)
    if len(added) < extra:
        raise ConfigError("could not complete an orthonormal basis")
    return added


def fit_pca(train: np.ndarray, n: int) -> PcaModel:
    """Top-n right singular vectors of the centered-standardized train matrix.

    When n_train < d the decomposition runs through the n_train x n_train
    Gram matrix, which is the only feasible route at d ~ 1e5; both routes
    span the same top-rank subspace. Requesting n beyond the numerical rank
    is allowed up to min(n_train - 1, d): beyond-rank components carry zero
    explained variance and deterministic filler directions, with a warning.
    """
    train = np.asarray(train, dtype=np.float64)
    if train.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got rank {train.ndim}")
    n_train, d = train.shape
    if n_train < 2:
        raise DataError(f"PCA needs at least 2 training rows, got {n_train}")
    bound = min(n_train - 1, d)
    if not 1 <= n <= bound:
        raise ConfigError(
            f"n_components {n} out of range: must be in [1, {bound}] "
            f"(min(n_train - 1, d) with n_train={n_train}, d={d})"
        )
    mean, std = fit_standardizer(train)
    z = (train - mean) / std

    if n_train < d:
        gram = z @ z.T
        gram = (gram + gram.T) / 2.0
        w, u = np.linalg.eigh(gram)
        w, u = w[::-1], u[:, ::-1]
    else:
        cov = z.T @ z
        cov = (cov + cov.T) / 2.0
        w, u = np.linalg.eigh(cov)
        w, u = w[::-1], u[:, ::-1]

    tol = w[0] * max(n_train, d) * np.finfo(np.float64).eps if w[0] > 0 else 0.0
    rank = int(np.sum(w > tol))
    k = min(n, rank)
    if n_train < d:
        comps = (z.T @ u[:, :k] / np.sqrt(w[:k])).T  # (k, d)
    else:
        comps = u[:, :k].T
    rows = list(comps)
    if k < n:
        warnings.warn(
            f"requested {n} components but numerical rank is {rank}; "
            f"components {k + 1}..{n} carry zero explained variance",
            stacklevel=2,
        )
        rows.extend(_complete_basis(rows, d, n - k))
    components = _fix_signs(np.stack(rows))
    explained = np.clip(w[:n], 0.0, None) / (n_train - 1)
    explained[k:] = 0.0
    return PcaModel(mean, std, components, explained)


def apply_pca(model: PcaModel, m: np.ndarray) -> np.ndarray:
    """Standardize with the train statistics, then project onto the components."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != model.d:
        raise DataError(f"expected matrix with {model.d} columns, got shape {m.shape}")
    z = (m - model.feature_mean) / model.feature_std
    return z @ model.components.T


# ---------------------------------------------------------------------------
# t-SNE (exact)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TsneConfig:
    n_components: int = 2
    perplexity: float = 30.0
    n_iter: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    seed: int = 0

    def __post_init__(self):
        if self.n_components < 1:
            raise ConfigError(f"n_components must be >= 1, got {self.n_components}")
        if self.perplexity <= 0:
            raise ConfigError(f"perplexity must be > 0, got {self.perplexity}")
        if self.n_iter < 1:
            raise ConfigError(f"n_iter must be >= 1, got {self.n_iter}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.early_exaggeration < 1:
            raise ConfigError(f"early_exaggeration must be >= 1, got {self.early_exaggeration}")
        if self.exaggeration_iters < 0:
            raise ConfigError(f"exaggeration_iters must be >= 0, got {self.exaggeration_iters}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")


_P_FLOOR = 1e-12
_ENTROPY_TOL = 1e-5
_MAX_SEARCH_STEPS = 50


def _squared_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.clip(d2, 0.0, None, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _joint_probabilities(d2: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized conditional Gaussians, per-point precision by binary search.

    Each row's precision beta is searched so the conditional entropy matches
    log(perplexity) within 1e-5, at most 50 bisection steps.
    """
    n = d2.shape[0]
    target = math.log(perplexity)
    p_cond = np.zeros((n, n))
    for i in range(n):
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        di = d2[i]
        p = np.zeros(n)
        for _ in range(_MAX_SEARCH_STEPS):
            p = np.exp(-di * beta)
            p[i] = 0.0
            sum_p = p.sum()
            if sum_p <= 0:
                sum_p = _P_FLOOR
            entropy = math.log(sum_p) + beta * float(di @ p) / sum_p
            diff = entropy - target
            if abs(diff) <= _ENTROPY_TOL:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == np.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == -np.inf else (beta + beta_min) / 2.0
        p_cond[i] = p / max(p.sum(), _P_FLOOR)
    p_joint = p_cond + p_cond.T
    p_joint /= p_joint.sum()
    return np.maximum(p_joint, _P_FLOOR)


def _kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum(p * np.log(p / q)))


def _student_t_affinities(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    num = 1.0 / (1.0 + _squared_distances(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return np.maximum(q, _P_FLOOR), num


def tsne_embed(joint: np.ndarray, config: TsneConfig) -> np.ndarray:
    """Embed all rows jointly; deterministic given config.seed."""
    y, _ = tsne_embed_trace(joint, config, collect_history=False)
    return y


def tsne_embed_trace(joint: np.ndarray, config: TsneConfig,
                     collect_history: bool = True) -> tuple[np.ndarray, list[float]]:
    """tsne_embed plus the per-iteration KL trace against the true affinities.

    history[0] is the KL at initialization and history[i] the KL after
    iteration i, always measured against the un-exaggerated P, so
    history[config.exaggeration_iters] is the end-of-exaggeration objective.
    """
    x = np.asarray(joint, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"feature matrix must be 2-D, got rank {x.ndim}")
    n = x.shape[0]
    if n < 4:
        raise DataError(f"t-SNE needs at least 4 rows, got {n}")
    if not config.perplexity < (n - 1) / 3.0:
        raise ConfigError(
            f"perplexity {config.perplexity} infeasible for {n} samples "
            f"(needs perplexity < (n - 1)/3 = {(n - 1) / 3.0:.2f})"
        )
    p = _joint_probabilities(_squared_distances(x), config.perplexity)

    rng = np.random.Generator(np.random.Philox(config.seed))
    y = rng.standard_normal((n, config.n_components)) * 1e-4
    velocity = np.zeros_like(y)
    gains = np.ones_like(y)

    history: list[float] = []
    if collect_history:
        q0, _ = _student_t_affinities(y)
        history.append(_kl_divergence(p, q0))

    for it in range(config.n_iter):
        exaggerating = it < config.exaggeration_iters
        p_eff = p * config.early_exaggeration if exaggerating else p
        q, num = _student_t_affinities(y)
        pq = (p_eff - q) * num
        grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)

        momentum = 0.5 if it < 250 else 0.8
        same_sign = (grad > 0) == (velocity > 0)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        velocity = momentum * velocity - config.learning_rate * (gains * grad)
        y = y + velocity
        y = y - y.mean(axis=0)

        if collect_history:
            q_now, _ = _student_t_affinities(y)
            history.append(_kl_divergence(p, q_now))

    return y, history


# ---------------------------------------------------------------------------
# Reducer specs and dataset-level reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityReducer:
    label: str = field(default="Baseline", init=False)
    stochastic: bool = field(default=False, init=False)


@dataclass(frozen=True)
class PoolReducer:
    spec: PoolingSpec
    stochastic: bool = field(default=False, init=False)

    @property
    def label(self) -> str:
        return f"AveragePool{self.spec.dims}D({self.spec.kernel}, {self.spec.stride})"


@dataclass(frozen=True)
class PcaReducer:
    n: int
    stochastic: bool = field(default=False, init=False)

    @property
    def label(self) -> str:
        return f"PCA({self.n})"


@dataclass(frozen=True)
class TsneReducer:
    config: TsneConfig = TsneConfig()
    stochastic: bool = field(default=True, init=False)

    @property
    def label(self) -> str:
        return "t-SNE"


ReducerSpec = Union[IdentityReducer, PoolReducer, PcaReducer, TsneReducer]

FittedReducer = Union[IdentityReducer, PoolingSpec, PcaModel, TsneConfig]


def with_seed(spec: ReducerSpec, seed: int) -> ReducerSpec:
    """Rebind the seed of a stochastic reducer; no-op for deterministic ones."""
    if isinstance(spec, TsneReducer):
        return TsneReducer(replace(spec.config, seed=seed))
    return spec


def reduce_dataset(
    train: list[np.ndarray],
    test: list[np.ndarray],
    spec: ReducerSpec,
) -> tuple[np.ndarray, np.ndarray, FittedReducer]:
    """Reduce both splits to feature matrices per the reducer spec.

    Pooling and flattening are stateless and applied identically to both
    splits; PCA is fit on train only; t-SNE embeds train and test jointly and
    splits the rows back by origin.
    """
    if not train:
        raise DataError("reduce_dataset needs at least one training tensor")
    shapes = {np.asarray(t).shape for t in train} | {np.asarray(t).shape for t in test}
    if len(shapes) != 1:
        raise DataError(f"tensors must share one shape, got {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 4:
        raise DataError(f"expected 4-axis tensors, got shape {shape}")
    width = int(np.prod(shape))

    if isinstance(spec, IdentityReducer):
        return (stack_features(train, width), stack_features(test, width), spec)
    if isinstance(spec, PoolReducer):
        pooled_train = [average_pool(t, spec.spec) for t in train]
        pooled_test = [average_pool(t, spec.spec) for t in test]
        w = int(np.prod(pooled_train[0].shape))
        return (stack_features(pooled_train, w), stack_features(pooled_test, w), spec.spec)
    if isinstance(spec, PcaReducer):
        train_fm = stack_features(train, width)
        test_fm = stack_features(test, width)
        model = fit_pca(train_fm, spec.n)
        return apply_pca(model, train_fm), apply_pca(model, test_fm), model
    if isinstance(spec, TsneReducer):
        train_fm = stack_features(train, width)
        test_fm = stack_features(test, width)
        joint = np.vstack([train_fm, test_fm]) if len(test) else train_fm
        embedded = tsne_embed(joint, spec.config)
        return embedded[: len(train)], embedded[len(train):], spec.config
    raise ConfigError(f"unknown reducer spec {spec!r}")
