"""Deterministic interactive-session engine.

One engine instance owns the full state of an optimization session:
objective observations, preference records, the current weight posterior (or
monotonic-GP utility fit), the pending preference query, and all derived
randomness.  Every random draw comes from a seed derived from the session
seed, a purpose tag, and a monotonically increasing counter, so the same
sequence of operations always reproduces the same session regardless of
whether the batch harness or the HTTP service is driving it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import acquisition, active, prefgp
from .benchmarks import CandidateTable, build_candidate_table, get_benchmark
from .gp import MultiObjectiveGp, fit_independent_gps, ObjectiveObservation
from .preference import (DirichletPrior, NoiseConfig, PreferenceDataset,
                         PosteriorSamples, sample_weights)
from .utility import CSF_FAMILY, AugmentedCsfFamily

__all__ = ["SessionConfig", "Engine"]

# seed-derivation purpose tags
_P_INIT = 0
_P_POOL = 1
_P_MCMC = 2
_P_EI = 3
_P_MI = 4


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs beyond its observations."""

    L: int
    d: int
    seed: int = 0
    utility: str = "csf"              # csf | augmented | pgpm
    query_selection: str = "mi"       # mi | random
    sigma_pc: float = 0.1
    sigma_ir: float = 0.1
    alpha: float = 2.0
    rho: float = 0.001
    n_init: int = 4
    n_posterior_samples: int = 1000
    mcmc_burn_in: int = 2000
    mcmc_refresh_burn_in: int = 500
    mcmc_thin: int = 2
    pool_size: int = 256
    ei_weight_samples: int = 128
    mc_samples: int = 1000
    pgpm_mc_draws: int = 256
    pgpm_constraints_per_dim: int = 3
    pgpm_amplitude: float = 1.0
    pgpm_lengthscale: float = 0.5
    pgpm_strictness: float = 1e-6
    benchmark: str | None = None
    dtlz_norm: str = "euclidean"

    def validate(self) -> None:
        if self.L < 1 or self.d < 1:
            raise ValueError("L and d must be positive")
        if self.utility not in ("csf", "augmented", "pgpm"):
            raise ValueError(f"unknown utility model {self.utility!r}")
        if self.query_selection not in ("mi", "random"):
            raise ValueError(f"unknown query selection {self.query_selection!r}")
        if not (self.sigma_pc > 0 and self.sigma_ir > 0 and self.alpha > 0):
            raise ValueError("noise scales and prior strength must be positive")


class Engine:
    """Single-session state machine; one logical writer at a time."""

    def __init__(self, config: SessionConfig, candidates=None, bounds=None):
        config.validate()
        self.config = config
        self.table: CandidateTable | None = None
        if config.benchmark:
            spec = get_benchmark(config.benchmark, dtlz_norm=config.dtlz_norm)
            if spec.L != config.L or spec.d != config.d:
                raise ValueError(
                    f"benchmark {spec.name} has L={spec.L}, d={spec.d}")
            self.table = build_candidate_table(spec)
            self.candidates = self.table.X
            self.x_lower = np.asarray(spec.lower, dtype=float)
            span = np.asarray(spec.upper, dtype=float) - self.x_lower
            self.x_span = np.where(span > 0, span, 1.0)
            self.candidates_unit = self.table.x_unit
        else:
            if candidates is None:
                raise ValueError("external-objective mode needs an explicit candidate set")
            self.candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
            if self.candidates.shape[1] != config.d:
                raise ValueError("candidate dimension does not match d")
            if bounds is None:
                lo = self.candidates.min(axis=0)
                hi = self.candidates.max(axis=0)
            else:
                lo, hi = (np.asarray(b, dtype=float) for b in bounds)
            self.x_lower = lo
            self.x_span = np.where(hi > lo, hi - lo, 1.0)
            self.candidates_unit = (self.candidates - lo) / self.x_span

        self.noise = NoiseConfig(config.sigma_pc, config.sigma_ir)
        self.prior = DirichletPrior.symmetric(config.L, config.alpha)
        if config.utility == "augmented":
            self.family = AugmentedCsfFamily(rho=config.rho)
        else:
            self.family = CSF_FAMILY

        self.observed_x_unit: list = []
        self.observed_y_raw: list = []
        self.observed_indices: list = []
        self.dataset = PreferenceDataset()
        self.samples: PosteriorSamples | None = None
        self.pgpm_post = None
        self._chain_state = None
        self._gps: MultiObjectiveGp | None = None
        self.pending: dict | None = None
        self.query_log: list = []
        self.n_refresh = 0
        self.n_queries = 0
        self.n_ei = 0
        self.n_init_suggested = 0
        self._init_indices = None

    # -- deterministic seed derivation ------------------------------------

    def _seed(self, purpose: int, counter: int) -> int:
        ss = np.random.SeedSequence([self.config.seed, purpose, counter])
        return int(ss.generate_state(1)[0])

    def _rng(self, purpose: int, counter: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.config.seed, purpose, counter]))

    # -- observations ------------------------------------------------------

    @property
    def n_observations(self) -> int:
        return len(self.observed_y_raw)

    def observed_arrays(self):
        X = (np.stack(self.observed_x_unit) if self.observed_x_unit
             else np.empty((0, self.config.d)))
        Y = (np.stack(self.observed_y_raw) if self.observed_y_raw
             else np.empty((0, self.config.L)))
        return X, Y

    def scale_y(self, y_raw: np.ndarray) -> np.ndarray:
        """Map raw objective values into the engine's [0, 1] maximization scale."""
        y_raw = np.asarray(y_raw, dtype=float)
        if self.table is not None:
            span = np.where(self.table.raw_max > self.table.raw_min,
                            self.table.raw_max - self.table.raw_min, 1.0)
            return (self.table.raw_max - y_raw) / span
        # external mode: maximization framing, min-max over observed values
        _, Y = self.observed_arrays()
        if Y.shape[0] == 0:
            return np.zeros_like(y_raw) + 0.5
        lo, hi = Y.min(axis=0), Y.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        return np.clip((y_raw - lo) / span, 0.0, 1.0)

    def to_raw(self, scaled: np.ndarray) -> np.ndarray:
        """Inverse of ``scale_y``: objective values in original units."""
        scaled = np.asarray(scaled, dtype=float)
        if self.table is not None:
            return self.table.to_raw(scaled)
        _, Y = self.observed_arrays()
        if Y.shape[0] == 0:
            return scaled
        lo, hi = Y.min(axis=0), Y.max(axis=0)
        return lo + scaled * np.where(hi > lo, hi - lo, 1.0)

    def observed_y_scaled(self) -> np.ndarray:
        _, Y = self.observed_arrays()
        return np.stack([self.scale_y(y) for y in Y]) if Y.shape[0] else Y

    def x_to_unit(self, x) -> np.ndarray:
        """Original-units input mapped into the engine's unit box."""
        return (np.atleast_1d(np.asarray(x, dtype=float)) - self.x_lower) / self.x_span

    def x_from_unit(self, x_unit) -> np.ndarray:
        return self.x_lower + np.atleast_1d(np.asarray(x_unit, dtype=float)) * self.x_span

    def observe_index(self, index: int) -> None:
        """Benchmark mode: record the candidate's noise-free objective vector."""
        if self.table is None:
            raise ValueError("observe_index requires benchmark mode")
        self.observe(self.candidates_unit[index], self.table.raw[index], index=index)

    def observe(self, x_unit, y_raw, index: int = -1) -> None:
        x_unit = np.atleast_1d(np.asarray(x_unit, dtype=float))
        y_raw = np.atleast_1d(np.asarray(y_raw, dtype=float))
        if x_unit.size != self.config.d:
            raise ValueError(f"input has dimension {x_unit.size}, expected {self.config.d}")
        if y_raw.size != self.config.L:
            raise ValueError(f"objective has dimension {y_raw.size}, expected {self.config.L}")
        self.observed_x_unit.append(x_unit)
        self.observed_y_raw.append(y_raw)
        self.observed_indices.append(int(index))
        self._gps = None

    # -- surrogate ---------------------------------------------------------

    def fit_gps(self) -> MultiObjectiveGp:
        if self._gps is None:
            X, _ = self.observed_arrays()
            Y = self.observed_y_scaled()
            data = [ObjectiveObservation(x, y) for x, y in zip(X, Y)]
            self._gps = fit_independent_gps(data)
        return self._gps

    # -- preference posterior ----------------------------------------------

    def refresh_posterior(self) -> None:
        if self.config.utility == "pgpm":
            self._refresh_pgpm()
            return
        burn = (self.config.mcmc_burn_in if self._chain_state is None
                else self.config.mcmc_refresh_burn_in)
        cands = None
        if self.samples is not None:
            k = max(1, len(self.samples) // 32)
            cands = (self.samples.weights[::k],
                     None if self.samples.extras is None else self.samples.extras[::k])
        self.samples = sample_weights(
            self.prior, self.dataset, self.noise,
            n_samples=self.config.n_posterior_samples,
            seed=self._seed(_P_MCMC, self.n_refresh),
            family=self.family, burn_in=burn, thin=self.config.mcmc_thin,
            init_state=self._chain_state, init_candidates=cands)
        self._chain_state = self.samples.final_state
        self.n_refresh += 1

    def _refresh_pgpm(self) -> None:
        if not self.dataset.pc:
            self.pgpm_post = None
            return
        pts = np.stack([r.preferred for r in self.dataset.pc]
                       + [r.other for r in self.dataset.pc])
        lo = np.minimum(pts.min(axis=0), 0.0)
        hi = np.maximum(pts.max(axis=0), 1.0)
        cpts, cdims = prefgp.uniform_constraint_grid(
            lo, hi, self.config.pgpm_constraints_per_dim, self.config.L)
        train = prefgp.PgpmTrainingSet(
            pc=tuple(self.dataset.pc), constraint_points=cpts,
            constraint_dims=cdims, strictness=self.config.pgpm_strictness,
            sigma_pc=self.config.sigma_pc)
        kernel = prefgp.KernelConfig(self.config.pgpm_amplitude,
                                     self.config.pgpm_lengthscale)
        self.pgpm_post = prefgp.ep_fit(train, kernel)
        self.n_refresh += 1

    def posterior_samples(self) -> PosteriorSamples:
        if self.samples is None:
            self.refresh_posterior()
        return self.samples

    # -- preference queries --------------------------------------------------

    def _pool_means(self):
        if self.n_observations < max(2, self.config.n_init):
            return None
        mu, _ = self.fit_gps().mean_var(self.candidates_unit)
        return mu

    def build_query(self, kind: str) -> dict:
        """Select a new pending query of the given kind ('pc' or 'ir')."""
        if self.pending is not None:
            raise RuntimeError("a query is already pending")
        if kind not in ("pc", "ir"):
            raise ValueError(f"unknown query kind {kind!r}")
        rng = self._rng(_P_POOL, self.n_queries)
        means = self._pool_means()
        if kind == "pc":
            pool = active.build_pc_pool(rng, self.config.pool_size, self.config.L, means)
        else:
            pool = active.build_ir_pool(rng, self.config.pool_size, self.config.L, means)

        if self.config.query_selection == "random":
            idx = int(rng.integers(0, len(pool)))
            query, score = pool[idx], float("nan")
        elif self.config.utility == "pgpm" and self.pgpm_post is not None and kind == "pc":
            mi_rng = self._rng(_P_MI, self.n_queries)
            scores = [active.mi_pc_function_draws(q, self.pgpm_post,
                                                  self.config.sigma_pc, 256, mi_rng)
                      for q in pool]
            idx = acquisition.argmax_scores(scores)
            query, score = pool[idx], float(scores[idx])
        elif self.config.utility == "pgpm":
            # no utility fit yet (or IR with the GP model): first pool entry
            idx, query, score = 0, pool[0], float("nan")
        else:
            idx, query, score = active.select_query(
                pool, self.posterior_samples(), self.noise, kind, self.family)

        qid = f"q{self.n_queries}"
        self.n_queries += 1
        if kind == "pc":
            payload = {"id": qid, "kind": "pc", "f": query.f.tolist(),
                       "f_other": query.f_other.tolist()}
        else:
            payload = {"id": qid, "kind": "ir", "f": query.f.tolist()}
        self.pending = dict(payload, score=score)
        return payload

    def submit_answer(self, query_id: str, answer) -> None:
        """Record the answer to the pending query and refresh the posterior."""
        if self.pending is None or self.pending["id"] != query_id:
            raise KeyError(f"no pending query with id {query_id!r}")
        pending = self.pending
        if pending["kind"] == "pc":
            first = bool(answer)
            f, g = np.asarray(pending["f"]), np.asarray(pending["f_other"])
            if first:
                self.dataset.add_pc(f, g)
            else:
                self.dataset.add_pc(g, f)
        else:
            dim = int(answer)
            if not 0 <= dim < self.config.L:
                raise ValueError(f"dimension {dim} out of range for L={self.config.L}")
            self.dataset.add_ir(np.asarray(pending["f"]), dim)
        logged = {k: v for k, v in pending.items() if k != "score"}
        self.query_log.append({"query": logged, "answer": answer})
        self.pending = None
        self.refresh_posterior()

    # -- evaluation-point suggestion -----------------------------------------

    def initial_indices(self) -> np.ndarray:
        if self._init_indices is None:
            rng = self._rng(_P_INIT, 0)
            self._init_indices = rng.choice(self.candidates_unit.shape[0],
                                            size=self.config.n_init, replace=False)
        return self._init_indices

    def suggest(self):
        """Next candidate index and its acquisition score."""
        if self.n_init_suggested < self.config.n_init:
            idx = int(self.initial_indices()[self.n_init_suggested])
            self.n_init_suggested += 1
            return idx, float("nan")
        gps = self.fit_gps()
        mu, var = gps.mean_var(self.candidates_unit)
        sd = np.sqrt(np.maximum(var, 1e-18))
        X_obs, _ = self.observed_arrays()
        inc = acquisition.IncumbentState(observed_x=X_obs,
                                         observed_y=self.observed_y_scaled())
        rng = self._rng(_P_EI, self.n_ei)
        self.n_ei += 1

        if self.config.utility == "pgpm":
            if self.pgpm_post is None:
                self.refresh_posterior()
            if self.pgpm_post is None:
                scores = mu.mean(axis=1)  # no preference data yet: neutral utility
            else:
                u_best = float(self.pgpm_post.value(inc.observed_y).max())
                scores = acquisition.ei_mc_utility_grid(
                    mu, sd, self.pgpm_post, u_best, self.config.pgpm_mc_draws, rng)
        else:
            samples = self.posterior_samples()
            W, extras = samples.weights, samples.extras
            k = min(self.config.ei_weight_samples, W.shape[0])
            if k < W.shape[0]:
                pick = rng.choice(W.shape[0], size=k, replace=False)
                W = W[pick]
                extras = None if extras is None else extras[pick]
            sub = PosteriorSamples(weights=W, seed=samples.seed, extras=extras)
            u_best = inc.best_utility(sub, self.family)
            if self.config.utility == "augmented":
                scores = acquisition.ei_mc_joint(mu, sd, sub, u_best, rng, self.family)
            else:
                scores = acquisition.ei_quadrature_grid(mu, sd, W, u_best)
        idx = acquisition.argmax_scores(scores)
        return idx, float(scores[idx])

    # -- summaries -----------------------------------------------------------

    def posterior_mean_w(self):
        if self.config.utility == "pgpm" or self.samples is None:
            return None
        return self.samples.mean()

    def incumbent(self) -> dict | None:
        """Best observed point under the current posterior-mean utility."""
        if self.n_observations == 0:
            return None
        Y = self.observed_y_scaled()
        if self.config.utility == "pgpm" and self.pgpm_post is not None:
            vals = self.pgpm_post.value(Y)
        elif self.samples is not None:
            vals = self.family.values_batch(self.samples.weights, Y,
                                            self.samples.extras).mean(axis=0)
        else:
            vals = Y.mean(axis=1)
        best = int(np.argmax(vals))
        return {"observation": best, "x": np.asarray(self.observed_x_unit[best]).tolist(),
                "y": np.asarray(self.observed_y_raw[best]).tolist(),
                "utility_estimate": float(vals[best])}

    # -- persistence -----------------------------------------------------------

    def to_state(self) -> dict:
        state = {
            "config": asdict(self.config),
            "observed_x_unit": [x.tolist() for x in self.observed_x_unit],
            "observed_y_raw": [y.tolist() for y in self.observed_y_raw],
            "observed_indices": self.observed_indices,
            "dataset": self.dataset.to_dict(),
            "pending": self.pending,
            "query_log": self.query_log,
            "n_refresh": self.n_refresh,
            "n_queries": self.n_queries,
            "n_ei": self.n_ei,
            "n_init_suggested": self.n_init_suggested,
            "chain_state": None if self._chain_state is None else [
                np.asarray(self._chain_state[0]).tolist(),
                np.asarray(self._chain_state[1]).tolist(),
                float(self._chain_state[2])],
            "samples": None if self.samples is None else {
                "weights": self.samples.weights.tolist(),
                "extras": (None if self.samples.extras is None
                           else self.samples.extras.tolist()),
                "seed": self.samples.seed,
                "acceptance_rate": self.samples.acceptance_rate,
            },
        }
        if self.table is None:
            state["candidates"] = self.candidates.tolist()
        return state

    @classmethod
    def from_state(cls, state: dict) -> "Engine":
        config = SessionConfig(**state["config"])
        engine = cls(config, candidates=state.get("candidates"))
        for x, y, i in zip(state["observed_x_unit"], state["observed_y_raw"],
                           state["observed_indices"]):
            engine.observe(np.asarray(x), np.asarray(y), index=i)
        engine.dataset = PreferenceDataset.from_dict(state["dataset"])
        engine.pending = state["pending"]
        engine.query_log = list(state["query_log"])
        engine.n_refresh = state["n_refresh"]
        engine.n_queries = state["n_queries"]
        engine.n_ei = state["n_ei"]
        engine.n_init_suggested = state["n_init_suggested"]
        cs = state["chain_state"]
        engine._chain_state = None if cs is None else (
            np.asarray(cs[0]), np.asarray(cs[1]), float(cs[2]))
        doc = state.get("samples")
        if doc is not None:
            engine.samples = PosteriorSamples(
                weights=np.asarray(doc["weights"], dtype=float),
                seed=int(doc["seed"]),
                extras=(None if doc["extras"] is None
                        else np.asarray(doc["extras"], dtype=float)),
                acceptance_rate=float(doc["acceptance_rate"]),
                final_state=engine._chain_state)
        if config.utility == "pgpm" and engine.dataset.pc:
            engine.n_refresh -= 1
            engine._refresh_pgpm()
        return engine
