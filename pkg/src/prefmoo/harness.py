"""Batch experiment runner: the interactive optimization loop, baselines,
metrics, and reproducible CSV/JSON output.

One run interleaves a preference round (query selection, simulated-DM answer,
posterior refresh) with each Bayesian-optimization iteration (GP fits,
expected-improvement maximization over the candidate grid, observation).
Baselines skip the preference machinery: ``random`` draws candidates from a
seeded uniform stream, ``mobo-rs`` maximizes EI under a fresh prior-drawn
weight vector each iteration, and ``ei-tp`` fixes the ground-truth weights.
All randomness derives from the run seed, so repeated runs are bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import acquisition, active
from .benchmarks import benchmark_names, get_benchmark
from .dm import (DecisionMaker, DmConfig, sample_basis_truth, sample_w_true,
                 truth_to_dict)
from .engine import Engine, SessionConfig
from .preference import (DirichletPrior, NoiseConfig, PreferenceDataset,
                         sample_weights, w_error)
from .utility import AugmentedCsfUtility, CsfUtility

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "RunTrace",
    "run_mbo_apl",
    "run_experiment",
    "simple_regret",
    "aggregate",
    "trace_rows",
    "write_csv",
    "write_manifest",
    "run_preference_loop",
]

METHODS = ("proposed", "proposed-pc", "proposed-ir", "proposed-pgpm",
           "random", "mobo-rs", "ei-tp")
_QUERY_KINDS = {"proposed": ("pc", "ir"), "proposed-pc": ("pc",),
                "proposed-ir": ("ir",), "proposed-pgpm": ("pc",)}

# run-level seed-derivation purposes (engine purposes live in engine.py)
_P_TRUTH = 100
_P_DM = 101
_P_RANDOM_X = 102
_P_MOBO = 103


@dataclass(frozen=True)
class ExperimentConfig:
    benchmark: str = "schaffer2"
    method: str = "proposed"
    iters: int = 30
    n_init: int = 4
    seeds: tuple = (0,)
    sigma_pc: float = 0.1
    sigma_ir: float = 0.1
    alpha: float = 2.0
    mc_samples: int = 1000
    ei_weight_samples: int = 128
    n_posterior_samples: int = 1000
    pool_size: int = 256
    truth: str = "csf"            # csf | augmented | basis
    utility: str = ""             # defaults from the method when empty
    basis_size: int = 5
    rho: float = 0.001
    dtlz_norm: str = "euclidean"
    out: str = ""

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; valid: {', '.join(METHODS)}")
        if self.benchmark not in benchmark_names():
            raise ValueError(f"unknown benchmark {self.benchmark!r}; "
                             f"valid: {', '.join(benchmark_names())}")
        if self.iters < 1 or not self.seeds:
            raise ValueError("need at least one iteration and one seed")
        if self.truth not in ("csf", "augmented", "basis"):
            raise ValueError(f"unknown truth model {self.truth!r}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def utility_model(self) -> str:
        if self.utility:
            return self.utility
        return "pgpm" if self.method == "proposed-pgpm" else "csf"


@dataclass
class RunTrace:
    """Per-iteration records of one seeded run."""

    seed: int
    config: ExperimentConfig
    truth: dict
    selected: list = field(default_factory=list)
    observed_y: list = field(default_factory=list)
    incumbent: list = field(default_factory=list)
    regret: list = field(default_factory=list)
    w_err: list = field(default_factory=list)
    query_log: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.regret)


def _seed_int(seed: int, purpose: int, counter: int = 0) -> int:
    return int(np.random.SeedSequence([seed, purpose, counter]).generate_state(1)[0])


def _rng(seed: int, purpose: int, counter: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, purpose, counter]))


def _make_truth(cfg: ExperimentConfig, L: int, rng):
    if cfg.truth == "csf":
        return CsfUtility(sample_w_true(L, rng, cfg.alpha))
    if cfg.truth == "augmented":
        w = sample_w_true(L, rng, cfg.alpha)
        ref = rng.normal(0.0, 0.1, size=L)
        return AugmentedCsfUtility(w, ref, cfg.rho)
    return sample_basis_truth(cfg.basis_size, L, rng)


def simple_regret(observed_indices, true_values) -> float:
    """Gap between the candidate-set optimum and the best observed true utility."""
    true_values = np.asarray(true_values, dtype=float)
    if len(observed_indices) == 0:
        return float(true_values.max() - true_values.min())
    best_seen = float(np.max(true_values[np.asarray(observed_indices, dtype=int)]))
    return float(true_values.max() - best_seen)


def run_mbo_apl(cfg: ExperimentConfig, seed: int) -> RunTrace:
    """Execute one seeded run of the interactive loop (or a baseline)."""
    truth_rng = _rng(seed, _P_TRUTH)
    session = SessionConfig(
        L=0, d=0, seed=seed, utility=cfg.utility_model,
        sigma_pc=cfg.sigma_pc, sigma_ir=cfg.sigma_ir, alpha=cfg.alpha,
        rho=cfg.rho, n_init=cfg.n_init,
        n_posterior_samples=cfg.n_posterior_samples,
        pool_size=cfg.pool_size, ei_weight_samples=cfg.ei_weight_samples,
        mc_samples=cfg.mc_samples, benchmark=cfg.benchmark,
        dtlz_norm=cfg.dtlz_norm)
    # fill L/d from the benchmark spec
    spec = get_benchmark(cfg.benchmark, cfg.dtlz_norm)
    session = replace(session, L=spec.L, d=spec.d)
    engine = Engine(session)
    table = engine.table

    truth = _make_truth(cfg, spec.L, truth_rng)
    true_values = truth.value(table.scaled)
    dm = DecisionMaker(truth, DmConfig(cfg.sigma_pc, cfg.sigma_ir,
                                       seed=_seed_int(seed, _P_DM)))
    w_true = getattr(truth, "weights", None)

    trace = RunTrace(seed=seed, config=cfg, truth=truth_to_dict(truth))
    for idx in engine.initial_indices():
        engine.observe_index(int(idx))
        engine.n_init_suggested += 1

    uses_queries = cfg.method in _QUERY_KINDS
    rng_random_x = _rng(seed, _P_RANDOM_X)
    prior = DirichletPrior.symmetric(spec.L, cfg.alpha)

    for t in range(1, cfg.iters + 1):
        if uses_queries:
            for kind in _QUERY_KINDS[cfg.method]:
                payload = engine.build_query(kind)
                if kind == "pc":
                    ans = dm.answer_pc(np.asarray(payload["f"]),
                                       np.asarray(payload["f_other"]))
                else:
                    ans = dm.answer_ir(np.asarray(payload["f"]))
                engine.submit_answer(payload["id"], ans)

        if cfg.method == "random":
            idx = int(rng_random_x.integers(0, table.n))
        elif cfg.method == "mobo-rs":
            gps = engine.fit_gps()
            X_obs, _ = engine.observed_arrays()
            inc = acquisition.IncumbentState(X_obs, engine.observed_y_scaled())
            idx = acquisition.random_scalarization_select(
                engine.candidates_unit, gps, prior, inc,
                seed=_seed_int(seed, _P_MOBO, t))
        elif cfg.method == "ei-tp":
            gps = engine.fit_gps()
            mu, var = gps.mean_var(engine.candidates_unit)
            y_obs = engine.observed_y_scaled()
            u_best = np.array([float(np.min(y_obs / w_true, axis=1).max())])
            scores = acquisition.ei_quadrature_grid(
                mu, np.sqrt(np.maximum(var, 1e-18)), w_true[None, :], u_best)
            idx = acquisition.argmax_scores(scores)
        else:
            idx, _ = engine.suggest()

        engine.observe_index(idx)
        trace.selected.append(int(idx))
        trace.observed_y.append(table.raw[idx].tolist())
        regret = simple_regret(engine.observed_indices, true_values)
        trace.regret.append(regret)
        trace.incumbent.append(float(true_values.max() - regret))
        if engine.samples is not None and w_true is not None:
            trace.w_err.append(w_error(engine.samples, w_true))
        else:
            trace.w_err.append(float("nan"))
    trace.query_log = list(engine.query_log)
    return trace


def run_experiment(cfg: ExperimentConfig) -> list:
    return [run_mbo_apl(cfg, seed) for seed in cfg.seeds]


def aggregate(traces) -> dict:
    """Per-iteration mean and standard error across runs."""
    traces = list(traces)
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError("traces have mismatched lengths")
    out = {}
    for key in ("regret", "incumbent", "w_err"):
        data = np.array([getattr(t, key) for t in traces], dtype=float)
        mean = data.mean(axis=0)
        se = (data.std(axis=0, ddof=1) / np.sqrt(data.shape[0])
              if data.shape[0] > 1 else np.zeros(data.shape[1]))
        out[key] = {"mean": mean, "se": se}
    return out


def trace_rows(traces):
    for trace in traces:
        for t in range(len(trace)):
            yield (t + 1, trace.seed, trace.regret[t], trace.w_err[t],
                   trace.incumbent[t], trace.selected[t])


def write_csv(traces, path) -> None:
    lines = ["iteration,seed,regret,w_error,incumbent,selected_index"]
    for it, seed, regret, werr, inc, sel in trace_rows(traces):
        lines.append(f"{it},{seed},{regret!r},{werr!r},{inc!r},{sel}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(cfg: ExperimentConfig, traces, path) -> None:
    doc = {
        "config": asdict(cfg),
        "runs": [{"seed": t.seed, "truth": t.truth} for t in traces],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_preference_loop(L: int, rounds: int, selection: str, seed: int,
                        sigma_pc: float = 0.1, sigma_ir: float = 0.1,
                        alpha: float = 2.0, pool_size: int = 256,
                        n_samples: int = 1000) -> np.ndarray:
    """Pure preference-learning loop (no optimization): one PC and one IR
    query per round, posterior refreshed once per round; returns the
    weight-estimation error after each round."""
    if selection not in ("mi", "random"):
        raise ValueError(f"unknown selection mode {selection!r}")
    truth_rng = _rng(seed, _P_TRUTH)
    w_true = sample_w_true(L, truth_rng, alpha)
    truth = CsfUtility(w_true)
    dm = DecisionMaker(truth, DmConfig(sigma_pc, sigma_ir,
                                       seed=_seed_int(seed, _P_DM)))
    prior = DirichletPrior.symmetric(L, alpha)
    noise = NoiseConfig(sigma_pc, sigma_ir)
    dataset = PreferenceDataset()

    chain_state = None
    samples = sample_weights(prior, dataset, noise, n_samples=n_samples,
                             seed=_seed_int(seed, 2, 0))
    chain_state = samples.final_state

    errors = np.empty(rounds)
    for r in range(rounds):
        rng_pool = _rng(seed, 1, r)
        pc_pool = active.build_pc_pool(rng_pool, pool_size, L)
        ir_pool = active.build_ir_pool(rng_pool, pool_size, L)
        if selection == "mi":
            _, pc_q, _ = active.select_query(pc_pool, samples, noise, "pc")
            _, ir_q, _ = active.select_query(ir_pool, samples, noise, "ir")
        else:
            pc_q = pc_pool[int(rng_pool.integers(0, pool_size))]
            ir_q = ir_pool[int(rng_pool.integers(0, pool_size))]
        if dm.answer_pc(pc_q.f, pc_q.f_other):
            dataset.add_pc(pc_q.f, pc_q.f_other)
        else:
            dataset.add_pc(pc_q.f_other, pc_q.f)
        dataset.add_ir(ir_q.f, dm.answer_ir(ir_q.f))
        cands = (samples.weights[::max(1, len(samples) // 32)], None)
        samples = sample_weights(prior, dataset, noise, n_samples=n_samples,
                                 seed=_seed_int(seed, 2, r + 1),
                                 burn_in=500, init_state=chain_state,
                                 init_candidates=cands)
        chain_state = samples.final_state
        errors[r] = w_error(samples, w_true)
    return errors
