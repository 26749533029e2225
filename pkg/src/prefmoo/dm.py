"""Simulated decision maker answering preference queries from a hidden truth.

The ground-truth utility is a Chebyshev scalarization, its augmented variant,
or a monotone sigmoid basis-function model.  Pairwise comparisons are decided
by noisy utility values (independent Gaussian noise on each side) and
improvement requests by the argmax of noisy utility gradients, which induces
the gradient-ordering relations the preference model assumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .utility import AugmentedCsfUtility, CsfUtility

__all__ = [
    "BasisUtility",
    "DmConfig",
    "DecisionMaker",
    "sample_basis_truth",
    "sample_w_true",
    "truth_to_dict",
    "truth_from_dict",
]


@dataclass(frozen=True)
class BasisUtility:
    """Monotone sum of sigmoids: sum_i lam_i / (1 + exp(-(beta_i . f + b_i))).

    Non-negative lam_i and beta_i coordinates make the model monotonically
    non-decreasing in every objective.
    """

    lams: np.ndarray      # (M,) non-negative
    betas: np.ndarray     # (M, L) non-negative
    offsets: np.ndarray   # (M,)

    def __post_init__(self):
        lams = np.atleast_1d(np.asarray(self.lams, dtype=float))
        betas = np.atleast_2d(np.asarray(self.betas, dtype=float))
        offsets = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if np.any(lams < 0) or np.any(betas < 0):
            raise ValueError("basis coefficients must be non-negative for monotonicity")
        if betas.shape[0] != lams.size or offsets.size != lams.size:
            raise ValueError("inconsistent basis shapes")
        object.__setattr__(self, "lams", lams)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "offsets", offsets)

    @property
    def dim(self) -> int:
        return self.betas.shape[1]

    def value(self, f):
        f = np.asarray(f, dtype=float)
        z = f @ self.betas.T + self.offsets          # (..., M)
        return np.sum(self.lams / (1.0 + np.exp(-z)), axis=-1)

    def gradient(self, f):
        f = np.asarray(f, dtype=float)
        z = f @ self.betas.T + self.offsets
        s = 1.0 / (1.0 + np.exp(-z))
        return (self.lams * s * (1.0 - s)) @ self.betas

    def to_dict(self) -> dict:
        return {"kind": "basis", "lams": self.lams.tolist(),
                "betas": self.betas.tolist(), "offsets": self.offsets.tolist()}


@dataclass(frozen=True)
class DmConfig:
    sigma_pc: float = 0.1
    sigma_ir: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (self.sigma_pc >= 0 and self.sigma_ir >= 0):
            raise ValueError("noise scales must be non-negative")


class DecisionMaker:
    """Holds a seeded answer stream; answers are reproducible per (seed, order)."""

    def __init__(self, truth, config: DmConfig):
        self.truth = truth
        self.config = config
        self._rng = np.random.default_rng(config.seed)
        self.n_answers = 0

    def answer_pc(self, f, f_other) -> int:
        """1 if the first vector is preferred under noisy utilities, else 0."""
        eps = self._rng.standard_normal(2) * self.config.sigma_pc
        self.n_answers += 1
        u_first = float(self.truth.value(np.asarray(f, dtype=float)))
        u_second = float(self.truth.value(np.asarray(f_other, dtype=float)))
        return int(u_first + eps[0] > u_second + eps[1])

    def answer_ir(self, f) -> int:
        """Zero-based dimension whose noisy utility gradient is largest."""
        g = np.asarray(self.truth.gradient(np.asarray(f, dtype=float)), dtype=float)
        noise = self._rng.standard_normal(g.size) * self.config.sigma_ir
        self.n_answers += 1
        return int(np.argmax(g + noise))


def sample_w_true(L: int, rng, alpha: float = 2.0) -> np.ndarray:
    """Ground-truth preference weights from a symmetric Dirichlet."""
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    return rng.dirichlet(np.full(L, alpha))


def sample_basis_truth(n_bases: int, L: int, rng) -> BasisUtility:
    """Random monotone basis model: offsets and beta coordinates uniform in
    [0, 1], coefficients half-normal (|N(0,1)|)."""
    if n_bases < 1:
        raise ValueError("need at least one basis")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    lams = np.abs(rng.standard_normal(n_bases))
    betas = rng.uniform(0.0, 1.0, size=(n_bases, L))
    offsets = rng.uniform(0.0, 1.0, size=n_bases)
    return BasisUtility(lams=lams, betas=betas, offsets=offsets)


def truth_to_dict(truth) -> dict:
    return truth.to_dict()


def truth_from_dict(doc: dict):
    kind = doc["kind"]
    if kind == "csf":
        return CsfUtility(np.asarray(doc["weights"], dtype=float))
    if kind == "augmented_csf":
        return AugmentedCsfUtility(np.asarray(doc["weights"], dtype=float),
                                   np.asarray(doc["reference"], dtype=float),
                                   float(doc["rho"]))
    if kind == "basis":
        return BasisUtility(np.asarray(doc["lams"], dtype=float),
                            np.asarray(doc["betas"], dtype=float),
                            np.asarray(doc["offsets"], dtype=float))
    raise ValueError(f"unknown truth kind {kind!r}")
