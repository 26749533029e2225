"""Self-check oracles comparing independent computations of the same quantity.

Each check pits the production path against a slower independent method:
Monte Carlo EI against the quadrature form, the derived utility-value density
against total probability one, the one-dimensional quadrature against the
classical closed-form EI, and the two-point EP posterior against dense
numerical integration of the exact posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import acquisition
from .gp import KernelConfig
from .preference import PcRecord, PosteriorSamples
from .prefgp import PgpmTrainingSet, ep_fit

__all__ = [
    "DiagResult",
    "check_mc_vs_quadrature",
    "check_density_normalization",
    "check_closed_form_l1",
    "check_ep_vs_grid",
    "run_all",
]


@dataclass(frozen=True)
class DiagResult:
    name: str
    passed: bool
    detail: str


class _FrozenGp:
    """Stand-in posterior with fixed mean/variance at a single point."""

    def __init__(self, mu, var):
        self.mu = np.asarray(mu, dtype=float)
        self.var = np.asarray(var, dtype=float)

    def mean_var(self, X):
        return self.mu[None, :], self.var[None, :]


def random_acquisition_state(rng, L: int):
    """One random (mu, sigma, weights, incumbent) acquisition state.

    The incumbent is kept within a couple of posterior standard deviations of
    the predictive utility so the improvement probability is not vanishing;
    that is the regime acquisition optimization actually visits.
    """
    mu = rng.uniform(0.2, 0.9, L)
    sd = rng.uniform(0.02, 0.3, L)
    S = int(rng.integers(1, 6))
    W = rng.dirichlet(np.full(L, 2.0), size=S)
    y_obs = np.clip(mu + rng.normal(0.0, 0.15, L), 0.01, None)[None, :]
    inc = acquisition.IncumbentState(np.zeros((1, 1)), y_obs)
    return _FrozenGp(mu, sd**2), PosteriorSamples(weights=W, seed=0), inc


def check_mc_vs_quadrature(n_states: int = 50, n_joint: int = 100_000,
                           tol: float = 0.05, seed: int = 42) -> DiagResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(n_states):
        L = int(rng.integers(2, 4))
        gp, samples, inc = random_acquisition_state(rng, L)
        quad = acquisition.ei_quadrature(np.zeros(1), gp, samples, inc)
        n_f = max(1, int(math.ceil(n_joint / len(samples.weights))))
        mc = acquisition.ei_mc(np.zeros(1), gp, samples, inc, n_f=n_f, seed=trial)
        worst = max(worst, abs(mc - quad) / max(quad, 1e-4))
    return DiagResult("mc_vs_quadrature", worst <= tol,
                      f"worst relative gap {worst:.4f} over {n_states} states (tol {tol})")


def check_density_normalization(n_states: int = 20, tol: float = 1e-3,
                                seed: int = 7) -> DiagResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        L = int(rng.integers(1, 4))
        mu = rng.uniform(0.0, 1.0, L)
        sd = rng.uniform(0.02, 0.4, L)
        w = rng.dirichlet(np.full(L, 2.0))
        lo = float(np.min((mu - 10.0 * sd) / w))
        hi = float(np.max((mu + 10.0 * sd) / w))
        total = acquisition._adaptive_simpson(
            lambda u: float(acquisition.csf_value_density(np.array([u]), mu, sd, w)[0]),
            lo, hi, 1e-12 * max(hi - lo, 1.0))
        worst = max(worst, abs(total - 1.0))
    return DiagResult("density_normalization", worst <= tol,
                      f"worst |integral - 1| = {worst:.2e} over {n_states} states (tol {tol})")


def check_closed_form_l1(n_states: int = 20, tol: float = 1e-6,
                         seed: int = 3) -> DiagResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_states):
        mu = rng.uniform(0.0, 1.0)
        sd = rng.uniform(0.02, 0.4)
        u_best = mu + rng.uniform(-2.0, 2.0) * sd
        z = (mu - u_best) / sd
        closed = (mu - u_best) * norm.cdf(z) + sd * norm.pdf(z)
        quad = acquisition._ei_single_w(np.array([mu]), np.array([sd]),
                                        np.array([1.0]), u_best)
        worst = max(worst, abs(closed - quad))
    return DiagResult("closed_form_l1", worst <= tol,
                      f"worst |closed - quadrature| = {worst:.2e} (tol {tol})")


def exact_two_point_moments(k01: float, sigma_pc: float, amplitude: float = 1.0,
                            grid: int = 241, span: float = 6.0):
    """Dense 2-D integration of the exact one-record preference posterior.

    Returns mean and variance of U(f) - U(f') under
    p(u) ~ N(0, K) * Phi((u0 - u1) / (sqrt(2) sigma_pc)).
    """
    axis = np.linspace(-span * math.sqrt(amplitude), span * math.sqrt(amplitude), grid)
    u0, u1 = np.meshgrid(axis, axis, indexing="ij")
    K = np.array([[amplitude, k01], [k01, amplitude]])
    Kinv = np.linalg.inv(K)
    quad_form = (Kinv[0, 0] * u0**2 + 2 * Kinv[0, 1] * u0 * u1 + Kinv[1, 1] * u1**2)
    log_p = -0.5 * quad_form + norm.logcdf((u0 - u1) / (math.sqrt(2.0) * sigma_pc))
    p = np.exp(log_p - log_p.max())
    p /= p.sum()
    diff = u0 - u1
    mean = float(np.sum(p * diff))
    var = float(np.sum(p * (diff - mean) ** 2))
    return mean, var


def check_ep_vs_grid(tol: float = 0.10, sigma_pc: float = 0.1) -> DiagResult:
    f, f_other = np.array([0.7, 0.3]), np.array([0.3, 0.7])
    kernel = KernelConfig(amplitude=1.0, lengthscale=0.5)
    train = PgpmTrainingSet(pc=(PcRecord(f, f_other),),
                            constraint_points=np.empty((0, 2)),
                            constraint_dims=np.empty(0, dtype=int),
                            sigma_pc=sigma_pc)
    post = ep_fit(train, kernel)
    a = np.array([1.0, -1.0])
    ep_mean = float(a @ post.mu)
    ep_var = float(a @ post.Sigma @ a)
    k01 = float(kernel.amplitude
                * math.exp(-float(np.sum((f - f_other) ** 2)) / kernel.lengthscale))
    ex_mean, ex_var = exact_two_point_moments(k01, sigma_pc)
    mean_err = abs(ep_mean - ex_mean) / max(abs(ex_mean), 1e-9)
    var_err = abs(ep_var - ex_var) / max(ex_var, 1e-9)
    ok = mean_err <= tol and var_err <= tol
    return DiagResult("ep_vs_grid", ok,
                      f"mean {ep_mean:.4f} vs {ex_mean:.4f} ({mean_err:.1%}), "
                      f"var {ep_var:.4f} vs {ex_var:.4f} ({var_err:.1%}), tol {tol:.0%}")


def run_all() -> list:
    return [
        check_mc_vs_quadrature(),
        check_density_normalization(),
        check_closed_form_l1(),
        check_ep_vs_grid(),
    ]
