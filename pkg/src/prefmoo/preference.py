"""Bayesian posterior over the preference weight vector.

Weak supervision comes in two forms.  A pairwise comparison (PC) says one
objective vector is preferred over another; its likelihood is a probit on the
utility difference, Phi((U(f) - U(f')) / (sqrt(2) * sigma_pc)).  An
improvement request (IR) names the dimension most in need of improvement at a
point; it expands to L-1 gradient-ordering relations, each contributing
Phi((g_l - g_l') / sigma_ir).  Combined with a Dirichlet prior on the simplex
this gives an unnormalized posterior which is sampled by random-walk
Metropolis in softmax-transformed coordinates (last logit pinned to zero,
Jacobian included in the target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, log_ndtr

from .utility import CSF_FAMILY

__all__ = [
    "PcRecord",
    "IrRecord",
    "PreferenceDataset",
    "NoiseConfig",
    "DirichletPrior",
    "PosteriorSamples",
    "pc_log_likelihood",
    "ir_log_likelihood",
    "make_log_posterior",
    "log_posterior_unnorm",
    "sample_weights",
    "w_error",
]

# Probabilities are kept inside [1e-300, 1 - 1e-16]: the upper clamp keeps
# log(1-p) computable, the lower floor only replaces actual -inf (log_ndtr is
# finite for every finite argument via its asymptotic expansion, and flattening
# strongly-violated regions to a common floor would stall the MCMC chain).
_LOG_P_MIN = math.log(1e-300)
_LOG_P_MAX = math.log1p(-1e-16)

DEFAULT_BURN_IN = 2000
DEFAULT_THIN = 2
TARGET_ACCEPT = 0.30
INDEP_PROPOSAL_PROB = 0.1   # prior-draw proposals let the chain cross likelihood cliffs


def log_probit(z) -> np.ndarray:
    """log Phi(z) in log space, finite for every finite argument."""
    out = np.minimum(log_ndtr(np.asarray(z, dtype=float)), _LOG_P_MAX)
    return np.where(np.isneginf(out), _LOG_P_MIN, out)


@dataclass(frozen=True)
class PcRecord:
    """The decision maker preferred ``preferred`` over ``other``."""

    preferred: np.ndarray
    other: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.preferred, dtype=float))
        o = np.atleast_1d(np.asarray(self.other, dtype=float))
        if p.shape != o.shape:
            raise ValueError("paired objective vectors must share a dimension")
        object.__setattr__(self, "preferred", p)
        object.__setattr__(self, "other", o)


@dataclass(frozen=True)
class IrRecord:
    """Improvement requested for zero-based dimension ``dim`` at point ``f``."""

    f: np.ndarray
    dim: int

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if not 0 <= self.dim < f.size:
            raise ValueError(f"requested dimension {self.dim} out of range for L={f.size}")
        object.__setattr__(self, "f", f)


@dataclass
class PreferenceDataset:
    """Accumulated PC and IR records, all sharing the objective dimension."""

    pc: list = field(default_factory=list)
    ir: list = field(default_factory=list)

    def __post_init__(self):
        dims = {r.preferred.size for r in self.pc} | {r.f.size for r in self.ir}
        if len(dims) > 1:
            raise ValueError("all records must share the objective dimension")

    def __len__(self) -> int:
        return len(self.pc) + len(self.ir)

    def add_pc(self, preferred, other) -> None:
        self.pc.append(PcRecord(preferred, other))

    def add_ir(self, f, dim: int) -> None:
        self.ir.append(IrRecord(f, dim))

    def to_dict(self) -> dict:
        return {
            "pc": [{"preferred": r.preferred.tolist(), "other": r.other.tolist()}
                   for r in self.pc],
            "ir": [{"f": r.f.tolist(), "dim": int(r.dim)} for r in self.ir],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PreferenceDataset":
        return cls(
            pc=[PcRecord(r["preferred"], r["other"]) for r in doc.get("pc", [])],
            ir=[IrRecord(r["f"], int(r["dim"])) for r in doc.get("ir", [])],
        )


@dataclass(frozen=True)
class NoiseConfig:
    sigma_pc: float = 0.1
    sigma_ir: float = 0.1

    def __post_init__(self):
        if not (self.sigma_pc > 0 and self.sigma_ir > 0):
            raise ValueError("noise scales must be positive")


@dataclass(frozen=True)
class DirichletPrior:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if np.any(a <= 0):
            raise ValueError("Dirichlet parameters must be positive")
        object.__setattr__(self, "alpha", a)

    @classmethod
    def symmetric(cls, L: int, value: float = 2.0) -> "DirichletPrior":
        return cls(np.full(L, value))

    @property
    def dim(self) -> int:
        return self.alpha.size

    def log_density(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0.0):
            return -np.inf
        log_b = float(np.sum(gammaln(self.alpha)) - gammaln(np.sum(self.alpha)))
        return float(np.sum((self.alpha - 1.0) * np.log(w)) - log_b)

    def sample(self, rng, size=None) -> np.ndarray:
        return rng.dirichlet(self.alpha, size=size)


@dataclass(frozen=True)
class PosteriorSamples:
    """MCMC draws from p(w | preference data); immutable once produced."""

    weights: np.ndarray                 # (T, L)
    seed: int
    extras: np.ndarray | None = None    # (T, E) extra latents, e.g. reference points
    acceptance_rate: float = np.nan
    low_acceptance: bool = False
    final_state: tuple | None = None    # (v, extra, step) for warm restarts

    def __len__(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights.mean(axis=0)

    @classmethod
    def from_fixed(cls, w, extras=None) -> "PosteriorSamples":
        """Singleton sample set around a known weight vector (e.g. EI-TP)."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        return cls(weights=w, seed=0,
                   extras=None if extras is None else np.atleast_2d(extras))


def pc_log_likelihood(dataset: PreferenceDataset, w, noise: NoiseConfig,
                      family=CSF_FAMILY, extra=None) -> float:
    if not dataset.pc:
        return 0.0
    pref = np.stack([r.preferred for r in dataset.pc])
    oth = np.stack([r.other for r in dataset.pc])
    du = family.values(w, pref, extra) - family.values(w, oth, extra)
    return float(np.sum(log_probit(du / (math.sqrt(2.0) * noise.sigma_pc))))


def ir_log_likelihood(dataset: PreferenceDataset, w, noise: NoiseConfig,
                      family=CSF_FAMILY, extra=None) -> float:
    if not dataset.ir:
        return 0.0
    F = np.stack([r.f for r in dataset.ir])
    dims = np.array([r.dim for r in dataset.ir])
    G = family.gradients(w, F, extra)                      # (m, L)
    diffs = G[np.arange(len(dims)), dims][:, None] - G     # (m, L), zero at l = dim
    terms = log_probit(diffs / noise.sigma_ir)
    terms[np.arange(len(dims)), dims] = 0.0                # drop the self relation
    return float(np.sum(terms))


def make_log_posterior(prior: DirichletPrior, dataset: PreferenceDataset,
                       noise: NoiseConfig, family=CSF_FAMILY):
    """Fast unnormalized log-posterior evaluator with pre-stacked records."""
    pref = np.stack([r.preferred for r in dataset.pc]) if dataset.pc else None
    oth = np.stack([r.other for r in dataset.pc]) if dataset.pc else None
    F_ir = np.stack([r.f for r in dataset.ir]) if dataset.ir else None
    dims = np.array([r.dim for r in dataset.ir]) if dataset.ir else None
    rows = None if dims is None else np.arange(dims.size)
    log_b = float(np.sum(gammaln(prior.alpha)) - gammaln(np.sum(prior.alpha)))
    alpha_m1 = prior.alpha - 1.0
    pc_scale = math.sqrt(2.0) * noise.sigma_pc

    F_pc = None if pref is None else np.concatenate([pref, oth])
    n_pc = 0 if pref is None else pref.shape[0]

    def logp(w, extra=None) -> float:
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0.0):
            return -np.inf
        lp = float(alpha_m1 @ np.log(w)) - log_b
        if extra is not None:
            lp += family.extra_log_prior(extra)
        if F_pc is not None:
            vals = family.values(w, F_pc, extra)
            du = vals[:n_pc] - vals[n_pc:]
            lp += float(np.sum(log_probit(du / pc_scale)))
        if F_ir is not None:
            G = family.gradients(w, F_ir, extra)
            diffs = G[rows, dims][:, None] - G
            terms = log_probit(diffs / noise.sigma_ir)
            terms[rows, dims] = 0.0
            lp += float(terms.sum())
        return lp

    return logp


def log_posterior_unnorm(w, prior: DirichletPrior, dataset: PreferenceDataset,
                         noise: NoiseConfig, family=CSF_FAMILY, extra=None) -> float:
    return make_log_posterior(prior, dataset, noise, family)(
        np.asarray(w, dtype=float), extra)


def _softmax_pinned(v: np.ndarray) -> np.ndarray:
    """Map v in R^(L-1) to the simplex via softmax with the last logit at 0."""
    z = np.concatenate([v, [0.0]])
    z -= z.max()
    e = np.exp(z)
    return e / e.sum()


def sample_weights(prior: DirichletPrior, dataset: PreferenceDataset,
                   noise: NoiseConfig, n_samples: int = 1000, seed: int = 0,
                   family=CSF_FAMILY, burn_in: int = DEFAULT_BURN_IN,
                   thin: int = DEFAULT_THIN, init_state: tuple | None = None,
                   init_candidates: tuple | None = None) -> PosteriorSamples:
    """Metropolis-Hastings over softmax coordinates (plus any extra latents).

    The target in v-space is log p(w | data) + sum_l log w_l (the softmax
    Jacobian).  The kernel mixes Gaussian random-walk moves, whose step adapts
    toward 30% acceptance during burn-in, with occasional independence
    proposals drawn from the prior: the IR likelihood is piecewise with sharp
    cliffs between gradient-ordering regions, and prior-draw proposals let the
    chain jump between such regions.  Deterministic given the seed.

    ``init_state`` warm-starts the chain from a previous run's final state;
    ``init_candidates`` is an optional (weights, extras) bank of previous
    posterior samples: the chain starts from whichever candidate scores best
    under the *current* posterior, so a fresh record that invalidates the old
    chain endpoint cannot strand the chain in a likelihood cliff.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    L = prior.dim
    E = family.extra_dim(L)
    rng = np.random.default_rng(seed)

    if init_state is not None:
        v, extra, step = (np.array(init_state[0], dtype=float),
                          np.array(init_state[1], dtype=float), float(init_state[2]))
    else:
        v = np.zeros(L - 1)
        extra = np.zeros(E)
        step = 0.5

    log_post = make_log_posterior(prior, dataset, noise, family)

    def log_prior_v(v, extra):
        """Prior density in v-space (the independence-proposal density)."""
        w = _softmax_pinned(v)
        if np.any(w <= 0.0):
            return -np.inf
        lp = prior.log_density(w) + float(np.sum(np.log(w)))
        return lp + (family.extra_log_prior(extra) if E else 0.0)

    def target(v, extra):
        w = _softmax_pinned(v)
        if np.any(w <= 0.0):
            return -np.inf
        return log_post(w, extra if E else None) + float(np.sum(np.log(w)))

    def draw_prior():
        w = np.clip(prior.sample(rng), 1e-12, None)
        v_new = np.log(w[:-1]) - math.log(w[-1])
        extra_new = (rng.standard_normal(E) * math.sqrt(family.ref_prior_var)
                     if E else np.zeros(0))
        return v_new, extra_new

    dim = (L - 1) + E
    cur_lp = target(v, extra)
    if init_candidates is not None:
        cand_w, cand_extras = init_candidates
        for k in range(np.atleast_2d(cand_w).shape[0]):
            w_k = np.clip(np.atleast_2d(cand_w)[k], 1e-12, None)
            v_k = np.log(w_k[:-1]) - math.log(w_k[-1])
            e_k = (np.zeros(E) if cand_extras is None
                   else np.atleast_2d(cand_extras)[k])
            lp_k = target(v_k, e_k)
            if lp_k > cur_lp:
                v, extra, cur_lp = v_k, e_k, lp_k
    samples = np.empty((n_samples, L))
    extra_samples = np.empty((n_samples, E)) if E else None

    n_total = burn_in + n_samples * thin
    accepted = 0
    rw_window = 0
    rw_window_accepted = 0
    kept = 0
    for t in range(n_total):
        if rng.random() < INDEP_PROPOSAL_PROB:
            v_new, extra_new = draw_prior()
            new_lp = target(v_new, extra_new)
            # Hastings correction for the independent prior proposal
            log_accept = (new_lp - cur_lp) - (log_prior_v(v_new, extra_new)
                                              - log_prior_v(v, extra))
            is_rw = False
        else:
            prop = rng.standard_normal(dim) * step
            v_new = v + prop[:L - 1]
            extra_new = extra + prop[L - 1:]
            new_lp = target(v_new, extra_new)
            log_accept = new_lp - cur_lp
            is_rw = True
            rw_window += 1
        if log_accept > math.log(rng.random()):
            v, extra, cur_lp = v_new, extra_new, new_lp
            accepted += 1
            rw_window_accepted += is_rw
        if t < burn_in and (t + 1) % 50 == 0 and rw_window:
            rate = rw_window_accepted / rw_window
            step *= math.exp(0.5 * (rate - TARGET_ACCEPT))
            rw_window = rw_window_accepted = 0
        if t >= burn_in and (t - burn_in) % thin == thin - 1:
            samples[kept] = _softmax_pinned(v)
            if E:
                extra_samples[kept] = extra
            kept += 1

    rate = accepted / n_total
    return PosteriorSamples(
        weights=samples, seed=seed, extras=extra_samples,
        acceptance_rate=rate, low_acceptance=rate < 0.01,
        final_state=(v.copy(), extra.copy(), step),
    )


def w_error(samples: PosteriorSamples, w_true) -> float:
    """Mean Euclidean distance of posterior samples to the true weights."""
    w_true = np.asarray(w_true, dtype=float)
    if w_true.size != samples.dim:
        raise ValueError("dimension mismatch between samples and true weights")
    return float(np.mean(np.linalg.norm(samples.weights - w_true, axis=1)))
