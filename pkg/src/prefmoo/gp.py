"""RBF-kernel Gaussian process regression, one independent model per objective.

Kernel: k(x, x') = amplitude * exp(-||x - x'||^2 / lengthscale).  Hyper-
parameters (amplitude, lengthscale, observation-noise variance) are fitted by
maximizing the log marginal likelihood over a bounded log-space search: a
coarse grid probe followed by an L-BFGS-B polish from the best grid point, so
the fitted optimum is never worse than any probed grid point.

Fitted posteriors are immutable values; fitting produces a new object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.spatial.distance import cdist

__all__ = [
    "KernelConfig",
    "ObjectiveObservation",
    "GpPosterior",
    "MultiObjectiveGp",
    "rbf_kernel",
    "rbf_gram",
    "hyper_grid",
    "fit_gp",
    "fit_independent_gps",
    "sample_posterior",
]

HYPER_BOUNDS = (1e-3, 1e3)       # amplitude and lengthscale search box
NOISE_BOUNDS = (1e-8, 1.0)
BASE_JITTER = 1e-8               # relative to the amplitude
MAX_JITTER = 1e-4


@dataclass(frozen=True)
class KernelConfig:
    """RBF kernel hyper-parameters; ``lengthscale`` divides the squared distance."""

    amplitude: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if not (self.amplitude > 0 and self.lengthscale > 0):
            raise ValueError("kernel hyper-parameters must be positive")


@dataclass(frozen=True)
class ObjectiveObservation:
    """One input/output record: x in R^d, y in R^L."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))


def rbf_kernel(x, x2, cfg: KernelConfig) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape:
        raise ValueError(f"input dimensions differ: {x.shape} vs {x2.shape}")
    sq = float(np.sum((x - x2) ** 2))
    return cfg.amplitude * math.exp(-sq / cfg.lengthscale)


def rbf_gram(X, X2, cfg: KernelConfig) -> np.ndarray:
    """Kernel matrix between rows of X (n, d) and X2 (m, d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X.shape[1] != X2.shape[1]:
        raise ValueError("input dimensions differ")
    sq = cdist(X, X2, "sqeuclidean")
    return cfg.amplitude * np.exp(-sq / cfg.lengthscale)


def _chol_with_jitter(K: np.ndarray, scale: float):
    """Cholesky of K + jitter*I, doubling the jitter up to MAX_JITTER*scale."""
    jitter = BASE_JITTER * scale
    while True:
        try:
            return np.linalg.cholesky(K + jitter * np.eye(K.shape[0])), jitter
        except np.linalg.LinAlgError:
            jitter *= 2.0
            if jitter > MAX_JITTER * scale:
                raise


def _log_marginal_and_grad(sq: np.ndarray, y: np.ndarray, log_params: np.ndarray,
                           fixed_noise: float | None = None):
    """Log marginal likelihood and its gradient w.r.t. log(amp, ls[, noise])."""
    if fixed_noise is None:
        amp, ls, noise = np.exp(log_params)
    else:
        amp, ls = np.exp(log_params)
        noise = fixed_noise
    n = y.size
    Kf = amp * np.exp(-sq / ls)
    K = Kf + (noise + BASE_JITTER * amp) * np.eye(n)
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        return -np.inf, np.zeros(log_params.size)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
    lml = (-0.5 * float(y @ alpha) - float(np.sum(np.log(np.diag(L))))
           - 0.5 * n * math.log(2.0 * math.pi))
    Kinv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(n)))
    W = np.outer(alpha, alpha) - Kinv
    # dK/dlog(amp) = Kf, dK/dlog(ls) = Kf * sq/ls, dK/dlog(noise) = noise*I
    g_amp = 0.5 * float(np.sum(W * Kf))
    g_ls = 0.5 * float(np.sum(W * (Kf * sq / ls)))
    if fixed_noise is not None:
        return lml, np.array([g_amp, g_ls])
    g_noise = 0.5 * noise * float(np.trace(W))
    return lml, np.array([g_amp, g_ls, g_noise])


@dataclass(frozen=True)
class GpPosterior:
    """Fitted posterior of a single objective; immutable after construction."""

    X: np.ndarray
    y: np.ndarray
    config: KernelConfig
    noise: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float
    log_marginal: float

    @classmethod
    def from_config(cls, X, y, config: KernelConfig, noise: float = 0.0,
                    log_marginal: float = np.nan) -> "GpPosterior":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.size:
            raise ValueError("X and y lengths differ")
        K = rbf_gram(X, X, config) + noise * np.eye(y.size)
        L, jitter = _chol_with_jitter(K, config.amplitude)
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
        return cls(X=X, y=y, config=config, noise=noise, chol=L, alpha=alpha,
                   jitter=jitter, log_marginal=float(log_marginal))

    def mean(self, Xq) -> np.ndarray:
        Ks = rbf_gram(np.atleast_2d(np.asarray(Xq, dtype=float)), self.X, self.config)
        return Ks @ self.alpha

    def mean_var(self, Xq):
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Ks = rbf_gram(Xq, self.X, self.config)
        mu = Ks @ self.alpha
        V = np.linalg.solve(self.chol, Ks.T)
        var = self.config.amplitude - np.sum(V * V, axis=0)
        return mu, np.maximum(var, 0.0)

    def std(self, Xq) -> np.ndarray:
        _, var = self.mean_var(Xq)
        return np.sqrt(var)

    def cov(self, Xq) -> np.ndarray:
        """Full posterior covariance over the query rows."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Ks = rbf_gram(Xq, self.X, self.config)
        Kqq = rbf_gram(Xq, Xq, self.config)
        V = np.linalg.solve(self.chol, Ks.T)
        return Kqq - V.T @ V


def _stack(data, objective: int | None = None):
    X = np.stack([obs.x for obs in data])
    Y = np.stack([obs.y for obs in data])
    if X.ndim != 2 or len({obs.x.size for obs in data}) != 1:
        raise ValueError("all observations must share the input dimension")
    return (X, Y) if objective is None else (X, Y[:, objective])


def hyper_grid(sq: np.ndarray, grid_size: int = 5):
    """Log-space (amplitude, lengthscale) probe axes for a squared-distance matrix."""
    amps = np.log(np.geomspace(0.05, 5.0, grid_size))
    med = np.median(sq[sq > 0]) if np.any(sq > 0) else 1.0
    lss = np.log(np.clip(med * np.geomspace(0.05, 20.0, grid_size),
                         HYPER_BOUNDS[0], HYPER_BOUNDS[1]))
    return amps, lss


def fit_gp(data, objective: int = 0, grid_size: int = 5,
           noise: float | None = None) -> GpPosterior:
    """Fit one objective's GP by bounded marginal-likelihood maximization.

    Grid-probes log-spaced hyper-parameter triples, polishes the best probe
    with L-BFGS-B, and keeps whichever scores higher, so the result is at
    least as good as every probed grid point.  A fixed observation-noise
    variance can be supplied instead of fitting it.
    """
    X, y = _stack(list(data), objective)
    sq = cdist(X, X, "sqeuclidean")
    lo, hi = np.log(HYPER_BOUNDS[0]), np.log(HYPER_BOUNDS[1])

    amps, lss = hyper_grid(sq, grid_size)
    noises = ([None] if noise is not None
              else list(np.log(np.array([1e-6, 1e-4, 1e-2]))))

    best_val, best_p = -np.inf, None
    for a in amps:
        for s in lss:
            for v in noises:
                p = np.array([a, s] if v is None else [a, s, v])
                val, _ = _log_marginal_and_grad(sq, y, p, fixed_noise=noise)
                if val > best_val:
                    best_val, best_p = val, p

    def neg(p):
        val, grad = _log_marginal_and_grad(sq, y, p, fixed_noise=noise)
        return -val, -grad

    bounds = [(lo, hi), (lo, hi)]
    if noise is None:
        bounds.append((math.log(NOISE_BOUNDS[0]), math.log(NOISE_BOUNDS[1])))
    res = optimize.minimize(neg, best_p, jac=True, method="L-BFGS-B", bounds=bounds)
    if np.isfinite(res.fun) and -res.fun > best_val:
        best_val, best_p = -res.fun, res.x

    if noise is None:
        amp, ls, fitted_noise = np.exp(best_p)
    else:
        amp, ls = np.exp(best_p)
        fitted_noise = noise
    cfg = KernelConfig(amplitude=float(amp), lengthscale=float(ls))
    return GpPosterior.from_config(X, y, cfg, noise=float(fitted_noise),
                                   log_marginal=best_val)


@dataclass(frozen=True)
class MultiObjectiveGp:
    """Independent per-objective posteriors sharing the same inputs."""

    models: tuple

    @property
    def n_objectives(self) -> int:
        return len(self.models)

    def mean_var(self, Xq):
        """Per-objective means and variances over query rows -> (n, L), (n, L)."""
        mus, vs = zip(*(m.mean_var(Xq) for m in self.models))
        return np.column_stack(mus), np.column_stack(vs)


def fit_independent_gps(data) -> MultiObjectiveGp:
    data = list(data)
    L = data[0].y.size
    return MultiObjectiveGp(models=tuple(fit_gp(data, objective=l) for l in range(L)))


def sample_posterior(gp, x, n: int, rng) -> np.ndarray:
    """n i.i.d. objective-vector draws at a single input -> (n, L).

    ``gp`` is a MultiObjectiveGp (or any object with ``mean_var``); ``rng`` is
    an integer seed or a numpy Generator.
    """
    if n < 1:
        raise ValueError("need at least one draw")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    mu, var = gp.mean_var(np.atleast_2d(np.asarray(x, dtype=float)))
    return mu[0] + np.sqrt(var[0]) * rng.standard_normal((n, mu.shape[1]))
