"""Mutual-information query selection for preference elicitation.

A query is scored by the mutual information between its (unknown) answer and
the preference weights, estimated over posterior weight samples:
MI = H[z] - E_w H[z | w], with p(z) approximated by the sample average of
p(z | w).  Pairwise-comparison answers are Bernoulli; improvement-request
answers are categorical over the L dimensions, with the per-category relation
products normalized into a proper distribution before taking entropies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .utility import CSF_FAMILY

__all__ = [
    "PcQuery",
    "IrQuery",
    "binary_mi",
    "binary_mi_batch",
    "categorical_mi",
    "categorical_mi_batch",
    "mi_pc",
    "mi_ir",
    "mi_pc_function_draws",
    "select_query",
    "build_pc_pool",
    "build_ir_pool",
]


@dataclass(frozen=True)
class PcQuery:
    f: np.ndarray
    f_other: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.f, dtype=float))
        b = np.atleast_1d(np.asarray(self.f_other, dtype=float))
        if a.shape != b.shape:
            raise ValueError("query vectors must share a dimension")
        object.__setattr__(self, "f", a)
        object.__setattr__(self, "f_other", b)


@dataclass(frozen=True)
class IrQuery:
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", np.atleast_1d(np.asarray(self.f, dtype=float)))


def _entropy(p: np.ndarray, axis=-1) -> np.ndarray:
    """Entropy in nats with the 0 log 0 := 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -np.sum(terms, axis=axis)


def binary_mi(p: np.ndarray) -> float:
    """BALD MI of a Bernoulli answer given per-sample success probabilities."""
    return float(binary_mi_batch(np.asarray(p, dtype=float)[:, None])[0])


def binary_mi_batch(p: np.ndarray) -> np.ndarray:
    """Binary BALD MI per column of a (samples, queries) probability matrix."""
    p = np.asarray(p, dtype=float)
    stacked = np.stack([p, 1.0 - p], axis=-1)          # (S, Q, 2)
    marginal = stacked.mean(axis=0)
    return np.maximum(_entropy(marginal) - _entropy(stacked).mean(axis=0), 0.0)


def categorical_mi(p: np.ndarray) -> float:
    """BALD MI of a categorical answer given per-sample distributions (S, K)."""
    return float(categorical_mi_batch(np.asarray(p, dtype=float)[:, None, :])[0])


def categorical_mi_batch(p: np.ndarray) -> np.ndarray:
    """Categorical BALD MI per query of a (samples, queries, K) tensor."""
    p = np.asarray(p, dtype=float)
    marginal = p.mean(axis=0)
    return np.maximum(_entropy(marginal) - _entropy(p, axis=-1).mean(axis=0), 0.0)


def _pc_probs(queries, samples, noise, family) -> np.ndarray:
    """p(first preferred | w) for each sample/query pair -> (S, Q)."""
    F = np.stack([q.f for q in queries])
    G = np.stack([q.f_other for q in queries])
    du = (family.values_batch(samples.weights, F, samples.extras)
          - family.values_batch(samples.weights, G, samples.extras))
    return np.exp(np.clip(log_ndtr(du / (math.sqrt(2.0) * noise.sigma_pc)),
                          -745.0, 0.0))


def _ir_probs(queries, samples, noise, family) -> np.ndarray:
    """Normalized categorical p(z = l | w) for each sample/query -> (S, Q, L)."""
    F = np.stack([q.f for q in queries])
    G = family.gradients_batch(samples.weights, F, samples.extras)   # (S, Q, L)
    diffs = G[..., :, None] - G[..., None, :]                        # (S, Q, L, L)
    log_terms = log_ndtr(diffs / noise.sigma_ir)
    idx = np.arange(G.shape[-1])
    log_terms[..., idx, idx] = 0.0
    logits = log_terms.sum(axis=-1)
    logits -= logits.max(axis=-1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=-1, keepdims=True)


def mi_pc(query: PcQuery, samples, noise, family=CSF_FAMILY) -> float:
    """Mutual information between a pairwise-comparison answer and the weights."""
    return binary_mi(_pc_probs([query], samples, noise, family)[:, 0])


def mi_ir(query: IrQuery, samples, noise, family=CSF_FAMILY) -> float:
    """Mutual information between an improvement-request answer and the weights."""
    return categorical_mi(_ir_probs([query], samples, noise, family)[:, 0, :])


def mi_pc_function_draws(query: PcQuery, utility_gp, sigma_pc: float,
                         n_draws: int, rng) -> float:
    """BALD MI for a nonparametric utility model: samples of the joint
    predictive at (f, f') stand in for parameter samples."""
    pair = np.stack([query.f, query.f_other])
    mean, cov = utility_gp.predict_joint(pair)
    chol = np.linalg.cholesky(cov + 1e-12 * np.eye(2))
    draws = mean + rng.standard_normal((n_draws, 2)) @ chol.T
    du = draws[:, 0] - draws[:, 1]
    p = np.exp(np.clip(log_ndtr(du / (math.sqrt(2.0) * sigma_pc)), -745.0, 0.0))
    return binary_mi(p)


def select_query(queries, samples, noise, kind: str, family=CSF_FAMILY):
    """Argmax-MI query from a pool; ties break to the lowest index.

    Returns (index, query, mi_value).
    """
    queries = list(queries)
    if not queries:
        raise ValueError("empty query pool")
    if kind == "pc":
        scores = binary_mi_batch(_pc_probs(queries, samples, noise, family))
    elif kind == "ir":
        scores = categorical_mi_batch(_ir_probs(queries, samples, noise, family))
    else:
        raise ValueError(f"unknown query kind {kind!r}")
    best = int(np.argmax(scores))
    return best, queries[best], float(scores[best])


def _pool_points(rng, n: int, L: int, mu_candidates) -> np.ndarray:
    """Objective-space pool points: GP means at random candidates mixed 50/50
    with uniform draws from the scaled unit box."""
    if mu_candidates is None or len(mu_candidates) == 0:
        return rng.uniform(0.0, 1.0, size=(n, L))
    mu_candidates = np.atleast_2d(np.asarray(mu_candidates, dtype=float))
    pick_mean = rng.random(n) < 0.5
    rows = mu_candidates[rng.integers(0, mu_candidates.shape[0], size=n)]
    uniform = rng.uniform(0.0, 1.0, size=(n, L))
    return np.where(pick_mean[:, None], rows, uniform)


def build_pc_pool(rng, n: int, L: int, mu_candidates=None) -> list:
    a = _pool_points(rng, n, L, mu_candidates)
    b = _pool_points(rng, n, L, mu_candidates)
    return [PcQuery(a[i], b[i]) for i in range(n)]


def build_ir_pool(rng, n: int, L: int, mu_candidates=None) -> list:
    pts = _pool_points(rng, n, L, mu_candidates)
    return [IrQuery(pts[i]) for i in range(n)]
