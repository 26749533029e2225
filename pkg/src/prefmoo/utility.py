"""Utility models over objective space.

A utility model maps an objective vector ``f`` in R^L to a scalar preference
score (higher is preferred).  Two parametric forms live here:

* Chebyshev scalarization      U(f) = min_l f_l / w_l
* augmented Chebyshev          U(f) = min_l (f_l - r_l)/w_l + rho * sum_l (f_l - r_l)/w_l

Both are parameterized by a weight vector ``w`` on the open probability
simplex.  The module also defines the "family" objects used by the posterior
sampler and the acquisition code: a family maps a weight sample (plus optional
extra latents, e.g. the reference point of the augmented form) to utility
values and gradients, vectorized over batches of samples and objective
vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "validate_weights",
    "CsfUtility",
    "AugmentedCsfUtility",
    "csf_value",
    "csf_gradient",
    "augmented_csf_value",
    "CsfFamily",
    "AugmentedCsfFamily",
    "CSF_FAMILY",
]

WEIGHT_SUM_TOL = 1e-9


def validate_weights(w) -> np.ndarray:
    """Check that ``w`` is a strictly positive vector summing to 1."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weight vector must be one-dimensional and non-empty")
    if np.any(w <= 0.0):
        raise ValueError("all weights must be strictly positive")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
    return w


def _check_dim(f: np.ndarray, L: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != L:
        raise ValueError(f"objective vector has dimension {f.shape[-1]}, expected {L}")
    return f


@dataclass(frozen=True)
class CsfUtility:
    """Chebyshev scalarization with a fixed weight vector."""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", validate_weights(self.weights))

    @property
    def dim(self) -> int:
        return self.weights.size

    def value(self, f):
        """min_l f_l / w_l, vectorized over leading axes of ``f``."""
        f = _check_dim(f, self.dim)
        return np.min(f / self.weights, axis=-1)

    def gradient(self, f):
        """One-hot subgradient: 1/w_l at the active minimum, ties to lowest index."""
        f = _check_dim(f, self.dim)
        ratios = f / self.weights
        active = np.argmin(ratios, axis=-1)
        g = np.zeros_like(ratios)
        np.put_along_axis(g, np.expand_dims(active, -1),
                          np.expand_dims(1.0 / self.weights[active], -1), axis=-1)
        return g

    def to_dict(self) -> dict:
        return {"kind": "csf", "weights": self.weights.tolist()}


@dataclass(frozen=True)
class AugmentedCsfUtility:
    """Chebyshev scalarization augmented with a weighted-sum term.

    The sum term makes the utility strictly increasing in every coordinate,
    which rules out weakly Pareto optimal maximizers.
    """

    weights: np.ndarray
    reference: np.ndarray
    rho: float = 0.001

    def __post_init__(self):
        object.__setattr__(self, "weights", validate_weights(self.weights))
        ref = np.asarray(self.reference, dtype=float)
        if ref.shape != self.weights.shape:
            raise ValueError("reference point must match the weight dimension")
        object.__setattr__(self, "reference", ref)
        if not self.rho > 0:
            raise ValueError("augmentation coefficient must be positive")

    @property
    def dim(self) -> int:
        return self.weights.size

    def value(self, f):
        f = _check_dim(f, self.dim)
        shifted = (f - self.reference) / self.weights
        return np.min(shifted, axis=-1) + self.rho * np.sum(shifted, axis=-1)

    def gradient(self, f):
        """Subgradient: 1/w_l at the active minimum plus rho/w_l everywhere."""
        f = _check_dim(f, self.dim)
        shifted = (f - self.reference) / self.weights
        active = np.argmin(shifted, axis=-1)
        g = np.broadcast_to(self.rho / self.weights, shifted.shape).copy()
        np.put_along_axis(
            g, np.expand_dims(active, -1),
            np.take_along_axis(g, np.expand_dims(active, -1), axis=-1)
            + np.expand_dims(1.0 / self.weights[active], -1),
            axis=-1)
        return g

    def to_dict(self) -> dict:
        return {"kind": "augmented_csf", "weights": self.weights.tolist(),
                "reference": self.reference.tolist(), "rho": self.rho}


def csf_value(u: CsfUtility, f) -> float:
    return float(u.value(np.asarray(f, dtype=float)))


def csf_gradient(u: CsfUtility, f) -> np.ndarray:
    return u.gradient(np.asarray(f, dtype=float))


def augmented_csf_value(u: AugmentedCsfUtility, f) -> float:
    return float(u.value(np.asarray(f, dtype=float)))


class CsfFamily:
    """Chebyshev family: a weight sample fully determines the utility."""

    name = "csf"

    def extra_dim(self, L: int) -> int:
        return 0

    def extra_log_prior(self, extra) -> float:
        return 0.0

    def make(self, w, extra=None) -> CsfUtility:
        return CsfUtility(np.asarray(w, dtype=float))

    def values(self, w, F, extra=None) -> np.ndarray:
        """Utility of each row of ``F`` (n, L) under one weight vector -> (n,)."""
        F = np.asarray(F, dtype=float)
        return np.min(F / np.asarray(w, dtype=float), axis=-1)

    def gradients(self, w, F, extra=None) -> np.ndarray:
        """(n, L) one-hot subgradients under one weight vector."""
        w = np.asarray(w, dtype=float)
        F = np.atleast_2d(np.asarray(F, dtype=float))
        ratios = F / w
        active = np.argmin(ratios, axis=-1)
        g = np.zeros_like(ratios)
        g[np.arange(F.shape[0]), active] = 1.0 / w[active]
        return g

    def values_batch(self, W, F, extras=None) -> np.ndarray:
        """Utilities for S weight samples (S, L) x n vectors (n, L) -> (S, n)."""
        W = np.asarray(W, dtype=float)
        F = np.asarray(F, dtype=float)
        return np.min(F[None, :, :] / W[:, None, :], axis=-1)

    def gradients_batch(self, W, F, extras=None) -> np.ndarray:
        """(S, n, L) one-hot subgradients for each sample/vector pair."""
        W = np.asarray(W, dtype=float)
        F = np.asarray(F, dtype=float)
        ratios = F[None, :, :] / W[:, None, :]
        active = np.argmin(ratios, axis=-1)  # (S, n)
        g = np.zeros_like(ratios)
        s_idx, n_idx = np.meshgrid(np.arange(W.shape[0]), np.arange(F.shape[0]),
                                   indexing="ij")
        g[s_idx, n_idx, active] = 1.0 / W[s_idx, active]
        return g


@dataclass
class AugmentedCsfFamily:
    """Augmented Chebyshev family with a latent reference point.

    The reference point is an extra L-dimensional latent sampled jointly with
    the weights; its prior is N(0, ref_prior_var * I).  Gradients do not
    depend on the reference (it is a constant shift), so improvement-request
    data never informs it.
    """

    rho: float = 0.001
    ref_prior_var: float = 0.01

    name: str = field(default="augmented_csf", init=False)

    def extra_dim(self, L: int) -> int:
        return L

    def extra_log_prior(self, extra) -> float:
        extra = np.asarray(extra, dtype=float)
        v = self.ref_prior_var
        return float(-0.5 * np.sum(extra**2) / v
                     - 0.5 * extra.size * np.log(2.0 * np.pi * v))

    def make(self, w, extra=None) -> AugmentedCsfUtility:
        w = np.asarray(w, dtype=float)
        ref = np.zeros_like(w) if extra is None else np.asarray(extra, dtype=float)
        return AugmentedCsfUtility(w, ref, self.rho)

    def values(self, w, F, extra=None) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        F = np.asarray(F, dtype=float)
        ref = np.zeros_like(w) if extra is None else np.asarray(extra, dtype=float)
        shifted = (F - ref) / w
        return np.min(shifted, axis=-1) + self.rho * np.sum(shifted, axis=-1)

    def gradients(self, w, F, extra=None) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        F = np.atleast_2d(np.asarray(F, dtype=float))
        shifted = (F - (0.0 if extra is None else np.asarray(extra))) / w
        active = np.argmin(shifted, axis=-1)
        g = np.broadcast_to(self.rho / w, shifted.shape).copy()
        g[np.arange(F.shape[0]), active] += 1.0 / w[active]
        return g

    def values_batch(self, W, F, extras=None) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        F = np.asarray(F, dtype=float)
        refs = np.zeros_like(W) if extras is None else np.asarray(extras, dtype=float)
        shifted = (F[None, :, :] - refs[:, None, :]) / W[:, None, :]
        return np.min(shifted, axis=-1) + self.rho * np.sum(shifted, axis=-1)

    def gradients_batch(self, W, F, extras=None) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        F = np.asarray(F, dtype=float)
        refs = np.zeros_like(W) if extras is None else np.asarray(extras, dtype=float)
        shifted = (F[None, :, :] - refs[:, None, :]) / W[:, None, :]
        active = np.argmin(shifted, axis=-1)
        g = np.broadcast_to((self.rho / W)[:, None, :], shifted.shape).copy()
        s_idx, n_idx = np.meshgrid(np.arange(W.shape[0]), np.arange(F.shape[0]),
                                   indexing="ij")
        g[s_idx, n_idx, active] += 1.0 / W[s_idx, active]
        return g


CSF_FAMILY = CsfFamily()
