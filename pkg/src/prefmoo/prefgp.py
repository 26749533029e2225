"""Nonparametric utility model: preferential GP with monotonicity constraints.

A zero-mean GP over objective space is conditioned on two kinds of probit
factors: pairwise-comparison factors Phi((U(f) - U(f')) / (sqrt(2) sigma_pc))
over pairs of latent values, and derivative factors Phi(U'_l(q) / nu) that
softly force the partial derivatives at chosen constraint points to be
non-negative (nu small makes the constraint nearly hard).  The joint prior
couples values and derivatives through the RBF kernel's closed-form
derivatives.  Inference is expectation propagation: every factor depends on a
scalar linear projection of the joint latent vector, so each site is a 1-D
Gaussian in that projection (a pairwise site contributes four non-zero
entries to the joint site precision).  Updates are damped and applied in
parallel sweeps until the site parameters stop moving.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import log_ndtr

from .gp import KernelConfig, _chol_with_jitter

logger = logging.getLogger(__name__)

__all__ = [
    "PgpmTrainingSet",
    "PgpmPosterior",
    "uniform_constraint_grid",
    "build_joint_prior",
    "ep_fit",
    "pgpm_predict",
]

EP_DAMPING = 0.8
EP_TOL = 1e-6
EP_MAX_SWEEPS = 200
DEFAULT_KERNEL = KernelConfig(amplitude=1.0, lengthscale=0.5)
DEFAULT_STRICTNESS = 1e-6

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PgpmTrainingSet:
    """PC records plus the derivative-constraint layout."""

    pc: tuple                      # PcRecord-like objects with .preferred/.other
    constraint_points: np.ndarray  # (M, L)
    constraint_dims: np.ndarray    # (M,) zero-based dimension per constraint row
    strictness: float = DEFAULT_STRICTNESS
    sigma_pc: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "pc", tuple(self.pc))
        pts = np.asarray(self.constraint_points, dtype=float)
        pts = pts.reshape(0, self.dim) if pts.size == 0 else np.atleast_2d(pts)
        dims = np.asarray(self.constraint_dims, dtype=int).ravel()
        if pts.shape[0] != dims.size:
            raise ValueError("constraint points and dimensions differ in length")
        if not (self.strictness > 0 and self.sigma_pc > 0):
            raise ValueError("strictness and noise must be positive")
        object.__setattr__(self, "constraint_points", pts)
        object.__setattr__(self, "constraint_dims", dims)

    @property
    def dim(self) -> int:
        return self.pc[0].preferred.size if self.pc else self.constraint_points.shape[1]

    @property
    def n_constraints(self) -> int:
        return self.constraint_dims.size


def uniform_constraint_grid(lower, upper, per_dim: int, L: int):
    """Grid over the objective bounding box, every dimension constrained at
    every point -> (points (G*L, L), dims (G*L,))."""
    axes = [np.linspace(lower[l], upper[l], per_dim) for l in range(L)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    points = np.repeat(pts, L, axis=0)
    dims = np.tile(np.arange(L), pts.shape[0])
    return points, dims


def _unique_values(pc):
    """Distinct objective vectors over all PC endpoints, first-appearance order."""
    values, index, pairs = [], {}, []
    for rec in pc:
        ids = []
        for f in (rec.preferred, rec.other):
            key = np.asarray(f, dtype=float).tobytes()
            if key not in index:
                index[key] = len(values)
                values.append(np.asarray(f, dtype=float))
            ids.append(index[key])
        pairs.append(tuple(ids))
    return np.atleast_2d(np.stack(values)), pairs


def build_joint_prior(values, constraint_points, constraint_dims,
                      kernel: KernelConfig = DEFAULT_KERNEL) -> np.ndarray:
    """Joint covariance of (values, constrained derivatives) under the RBF kernel.

    For k(a, b) = t1 exp(-||a-b||^2 / t2):
        dk/da_l        = -(2/t2) (a_l - b_l) k
        d2k/da_l db_m  =  (2/t2) k (delta_lm - (2/t2)(a_l - b_l)(a_m - b_m))
    so the derivative-derivative diagonal equals 2 t1 / t2.
    """
    V = np.atleast_2d(np.asarray(values, dtype=float))
    Q = np.atleast_2d(np.asarray(constraint_points, dtype=float))
    dims = np.asarray(constraint_dims, dtype=int).ravel()
    N, M = V.shape[0], dims.size
    t2 = kernel.lengthscale

    def gram(A, B):
        diff = A[:, None, :] - B[None, :, :]
        return kernel.amplitude * np.exp(-np.sum(diff**2, axis=-1) / t2), diff

    K = np.empty((N + M, N + M))
    K_vv, _ = gram(V, V)
    K[:N, :N] = K_vv
    if M:
        K_qv, diff_qv = gram(Q, V)
        rows = np.arange(M)
        K_dv = -(2.0 / t2) * diff_qv[rows, :, dims[rows]][:, :] * K_qv
        K[N:, :N] = K_dv
        K[:N, N:] = K_dv.T
        K_qq, diff_qq = gram(Q, Q)
        d_l = diff_qq[rows[:, None], rows[None, :], dims[rows][:, None]]
        d_m = diff_qq[rows[:, None], rows[None, :], dims[rows][None, :]]
        delta = (dims[:, None] == dims[None, :]).astype(float)
        K[N:, N:] = (2.0 / t2) * K_qq * (delta - (2.0 / t2) * d_l * d_m)
    return K


def _probit_moments(m_cav, v_cav, c):
    """Posterior mean/variance of s ~ N(m_cav, v_cav) tilted by Phi(s / c)."""
    denom = np.sqrt(c * c + v_cav)
    z = m_cav / denom
    log_phi = -0.5 * z * z - _LOG_SQRT_2PI
    ratio = np.exp(log_phi - np.clip(log_ndtr(z), -700.0, 0.0))
    mean = m_cav + v_cav * ratio / denom
    var = v_cav - v_cav**2 * ratio * (z + ratio) / (c * c + v_cav)
    return mean, np.maximum(var, 1e-14)


@dataclass
class PgpmPosterior:
    """EP-approximate posterior over joint values and derivatives."""

    values: np.ndarray             # (N, L) latent-value locations
    constraint_points: np.ndarray
    constraint_dims: np.ndarray
    kernel: KernelConfig
    K: np.ndarray                  # jittered joint prior
    mu: np.ndarray                 # (N+M,) approximate posterior mean
    Sigma: np.ndarray              # (N+M, N+M) approximate posterior covariance
    site_tau: np.ndarray
    site_nu: np.ndarray
    converged: bool
    n_sweeps: int
    _chol_K: np.ndarray = field(repr=False, default=None)
    _beta: np.ndarray = field(repr=False, default=None)
    _D: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        L, _ = _chol_with_jitter(self.K, float(np.max(np.diag(self.K))))
        Kinv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(self.K.shape[0])))
        self._chol_K = L
        self._beta = Kinv @ self.mu
        self._D = Kinv - Kinv @ self.Sigma @ Kinv

    @property
    def n_values(self) -> int:
        return self.values.shape[0]

    def _cross(self, F: np.ndarray) -> np.ndarray:
        """Covariance of U(f*) rows with the joint latent vector -> (n, N+M)."""
        t2 = self.kernel.lengthscale
        k_v = self.kernel.amplitude * np.exp(
            -cdist(F, self.values, "sqeuclidean") / t2)
        if self.constraint_dims.size == 0:
            return k_v
        Q, dims = self.constraint_points, self.constraint_dims
        k_q = self.kernel.amplitude * np.exp(-cdist(F, Q, "sqeuclidean") / t2)
        dvals = F[:, dims] - Q[np.arange(dims.size), dims][None, :]
        k_d = (2.0 / t2) * dvals * k_q
        return np.concatenate([k_v, k_d], axis=1)

    def predict(self, F):
        """Predictive mean and variance of U at rows of F -> ((n,), (n,))."""
        F = np.atleast_2d(np.asarray(F, dtype=float))
        ks = self._cross(F)
        mean = ks @ self._beta
        var = self.kernel.amplitude - np.sum((ks @ self._D) * ks, axis=1)
        n_neg = int(np.sum(var < -1e-10))
        if n_neg:
            logger.debug("clamped %d negative predictive variances", n_neg)
        return mean, np.maximum(var, 0.0)

    def predict_joint(self, F):
        """Predictive mean and full covariance over rows of F."""
        F = np.atleast_2d(np.asarray(F, dtype=float))
        ks = self._cross(F)
        diff = F[:, None, :] - F[None, :, :]
        k_ff = self.kernel.amplitude * np.exp(
            -np.sum(diff**2, axis=-1) / self.kernel.lengthscale)
        cov = k_ff - ks @ self._D @ ks.T
        return ks @ self._beta, cov

    def value(self, F):
        """Utility-model interface: the predictive mean."""
        mean, _ = self.predict(F)
        return mean


def ep_fit(train: PgpmTrainingSet,
           kernel: KernelConfig = DEFAULT_KERNEL) -> PgpmPosterior:
    """Fit the monotonic preferential GP by damped parallel EP."""
    if not train.pc:
        raise ValueError("need at least one pairwise-comparison record")
    values, pairs = _unique_values(train.pc)
    N, M = values.shape[0], train.n_constraints
    size = N + M

    K = build_joint_prior(values, train.constraint_points, train.constraint_dims,
                          kernel)
    _, jitter = _chol_with_jitter(K, float(np.max(np.diag(K))))
    K = K + jitter * np.eye(size)

    # factor projections: s_k = a_k . (U, U'); preference pairs then derivatives
    n_factors = len(pairs) + M
    A = np.zeros((size, n_factors))
    c = np.empty(n_factors)
    for j, (i0, i1) in enumerate(pairs):
        A[i0, j] += 1.0
        A[i1, j] -= 1.0
        c[j] = math.sqrt(2.0) * train.sigma_pc
    for m in range(M):
        A[N + m, len(pairs) + m] = 1.0
        c[len(pairs) + m] = train.strictness

    tau = np.zeros(n_factors)
    nu = np.zeros(n_factors)

    def posterior(tau, nu):
        active = tau > 0.0
        if not np.any(active):
            return np.zeros(size), K.copy()
        U = A[:, active] * np.sqrt(tau[active])
        KU = K @ U
        B = np.eye(int(active.sum())) + U.T @ KU
        Lb = np.linalg.cholesky(B)
        V = np.linalg.solve(Lb, KU.T)
        Sigma = K - V.T @ V
        mu = Sigma @ (A @ nu)
        return mu, Sigma

    mu, Sigma = posterior(tau, nu)
    converged = False
    sweeps = 0
    for sweeps in range(1, EP_MAX_SWEEPS + 1):
        m_all = A.T @ mu
        v_all = np.einsum("jk,jl,lk->k", A, Sigma, A)
        tau_cav = 1.0 / np.maximum(v_all, 1e-14) - tau
        eta_cav = m_all / np.maximum(v_all, 1e-14) - nu
        ok = tau_cav > 1e-12
        m_cav = np.where(ok, eta_cav / np.where(ok, tau_cav, 1.0), 0.0)
        v_cav = np.where(ok, 1.0 / np.where(ok, tau_cav, 1.0), 1.0)
        m_hat, v_hat = _probit_moments(m_cav, v_cav, c)
        tau_new = np.where(ok, np.maximum(1.0 / v_hat - tau_cav, 0.0), tau)
        nu_new = np.where(ok, m_hat / v_hat - eta_cav, nu)
        d_tau = EP_DAMPING * (tau_new - tau)
        d_nu = EP_DAMPING * (nu_new - nu)
        tau = tau + d_tau
        nu = nu + d_nu
        mu, Sigma = posterior(tau, nu)
        if max(np.max(np.abs(d_tau)), np.max(np.abs(d_nu))) < EP_TOL:
            converged = True
            break
    if not converged:
        logger.warning("EP did not converge within %d sweeps", EP_MAX_SWEEPS)

    return PgpmPosterior(
        values=values, constraint_points=train.constraint_points,
        constraint_dims=train.constraint_dims, kernel=kernel, K=K, mu=mu,
        Sigma=Sigma, site_tau=tau, site_nu=nu, converged=converged,
        n_sweeps=sweeps,
    )


def pgpm_predict(post: PgpmPosterior, f_star):
    """Predictive (mean, variance) of the utility at one objective vector."""
    mean, var = post.predict(np.atleast_2d(np.asarray(f_star, dtype=float)))
    return float(mean[0]), float(var[0])
