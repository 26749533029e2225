"""Multi-objective benchmark functions and candidate-grid construction.

All seven functions are classical minimization benchmarks.  The optimizer
works in a maximization framing on a finite candidate grid, so raw values are
negated and then min-max scaled to [0, 1] per output dimension over the full
candidate set; raw minimizers therefore become scaled maximizers with value 1.

The DTLZ ``g`` term is implemented with the Euclidean norm of the tail
subvector (``dtlz_norm="euclidean"``); the classical cardinality reading is
available behind ``dtlz_norm="cardinality"``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "BenchmarkSpec",
    "CandidateTable",
    "get_benchmark",
    "benchmark_names",
    "evaluate",
    "candidate_grid",
    "build_candidate_table",
]


@dataclass(frozen=True)
class BenchmarkSpec:
    """Name, box bounds, and candidate-grid shape of one benchmark."""

    name: str
    d: int
    L: int
    lower: tuple
    upper: tuple
    grid_shape: tuple
    dtlz_norm: str = "euclidean"

    @property
    def n_candidates(self) -> int:
        return int(np.prod(self.grid_shape))

    def with_options(self, **kw) -> "BenchmarkSpec":
        return replace(self, **kw)


_SPECS = {
    "dtlz1": BenchmarkSpec("dtlz1", d=3, L=3, lower=(0, 0, 0), upper=(1, 1, 1),
                           grid_shape=(10, 10, 10)),
    "dtlz3": BenchmarkSpec("dtlz3", d=3, L=3, lower=(0, 0, 0), upper=(1, 1, 1),
                           grid_shape=(10, 10, 10)),
    "kursawe": BenchmarkSpec("kursawe", d=3, L=2, lower=(-5, -5, -5),
                             upper=(5, 5, 5), grid_shape=(10, 10, 10)),
    "schaffer1": BenchmarkSpec("schaffer1", d=1, L=2, lower=(-10,), upper=(10,),
                               grid_shape=(1000,)),
    "schaffer2": BenchmarkSpec("schaffer2", d=1, L=2, lower=(-5,), upper=(10,),
                               grid_shape=(1000,)),
    "fonseca": BenchmarkSpec("fonseca", d=2, L=2, lower=(-4, -4), upper=(4, 4),
                             grid_shape=(10, 10)),
    "poloni": BenchmarkSpec("poloni", d=2, L=2, lower=(-np.pi, -np.pi),
                            upper=(np.pi, np.pi), grid_shape=(20, 20)),
}


def benchmark_names() -> list:
    return sorted(_SPECS)


def get_benchmark(name: str, dtlz_norm: str = "euclidean") -> BenchmarkSpec:
    try:
        spec = _SPECS[name.lower()]
    except KeyError:
        raise KeyError(
            f"unknown benchmark {name!r}; valid names: {', '.join(benchmark_names())}"
        ) from None
    return spec.with_options(dtlz_norm=dtlz_norm)


def _dtlz_g(x_tail: np.ndarray, mode: str) -> float:
    if mode == "euclidean":
        head = float(np.linalg.norm(x_tail))
    elif mode == "cardinality":
        head = float(x_tail.size)
    else:
        raise ValueError(f"unknown dtlz_norm mode {mode!r}")
    return 100.0 * (head + float(np.sum((x_tail - 0.5) ** 2
                                        - np.cos(20.0 * np.pi * (x_tail - 0.5)))))


def _dtlz1(x: np.ndarray, L: int, mode: str) -> np.ndarray:
    g = _dtlz_g(x[L - 1:], mode)
    f = np.empty(L)
    for i in range(L):
        val = 0.5 * (1.0 + g)
        val *= np.prod(x[: L - 1 - i])
        if i > 0:
            val *= 1.0 - x[L - 1 - i]
        f[i] = val
    return f


def _dtlz3(x: np.ndarray, L: int, mode: str) -> np.ndarray:
    g = _dtlz_g(x[L - 1:], mode)
    half_pi = np.pi / 2.0
    f = np.empty(L)
    for i in range(L):
        val = 1.0 + g
        val *= np.prod(np.cos(x[: L - 1 - i] * half_pi))
        if i > 0:
            val *= np.sin(x[L - 1 - i] * half_pi)
        f[i] = val
    return f


def _kursawe(x: np.ndarray) -> np.ndarray:
    f1 = float(np.sum(-10.0 * np.exp(-0.2 * np.sqrt(x[:-1] ** 2 + x[1:] ** 2))))
    f2 = float(np.sum(np.abs(x) ** 0.8 + 5.0 * np.sin(x**3)))
    return np.array([f1, f2])


def _schaffer1(x: np.ndarray) -> np.ndarray:
    v = float(x[0])
    return np.array([v**2, (v - 2.0) ** 2])


def _schaffer2(x: np.ndarray) -> np.ndarray:
    v = float(x[0])
    if v <= 1.0:
        f1 = -v
    elif v <= 3.0:
        f1 = v - 2.0
    elif v <= 4.0:
        f1 = 4.0 - v
    else:
        f1 = v - 4.0
    return np.array([f1, (v - 5.0) ** 2])


def _fonseca(x: np.ndarray) -> np.ndarray:
    c = 1.0 / np.sqrt(x.size)
    f1 = 1.0 - np.exp(-float(np.sum((x - c) ** 2)))
    f2 = 1.0 - np.exp(-float(np.sum((x + c) ** 2)))
    return np.array([f1, f2])


_POLONI_A1 = 0.5 * np.sin(1.0) - 2.0 * np.cos(1.0) + np.sin(2.0) - 1.5 * np.cos(2.0)
_POLONI_A2 = 1.5 * np.sin(1.0) - np.cos(1.0) + 2.0 * np.sin(2.0) - 0.5 * np.cos(2.0)


def _poloni(x: np.ndarray) -> np.ndarray:
    b1 = 0.5 * np.sin(x[0]) - 2.0 * np.cos(x[0]) + np.sin(x[1]) - 1.5 * np.cos(x[1])
    b2 = 1.5 * np.sin(x[0]) - np.cos(x[0]) + 2.0 * np.sin(x[1]) - 0.5 * np.cos(x[1])
    f1 = 1.0 + (_POLONI_A1 - b1) ** 2 + (_POLONI_A2 - b2) ** 2
    f2 = (x[0] + 3.0) ** 2 + (x[1] + 1.0) ** 2
    return np.array([f1, f2])


def evaluate(spec: BenchmarkSpec, x) -> np.ndarray:
    """Raw (minimization-framed) objective vector at ``x``; box-checked."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != spec.d:
        raise ValueError(f"{spec.name} expects d={spec.d}, got {x.size}")
    lower, upper = np.asarray(spec.lower), np.asarray(spec.upper)
    if np.any(x < lower - 1e-12) or np.any(x > upper + 1e-12):
        raise ValueError(f"input {x} outside the {spec.name} box")
    if spec.name == "dtlz1":
        return _dtlz1(x, spec.L, spec.dtlz_norm)
    if spec.name == "dtlz3":
        return _dtlz3(x, spec.L, spec.dtlz_norm)
    return {"kursawe": _kursawe, "schaffer1": _schaffer1, "schaffer2": _schaffer2,
            "fonseca": _fonseca, "poloni": _poloni}[spec.name](x)


def candidate_grid(spec: BenchmarkSpec) -> np.ndarray:
    """Deterministic lexicographically-sorted grid over the box -> (n, d)."""
    axes = [np.linspace(lo, hi, num) for lo, hi, num
            in zip(spec.lower, spec.upper, spec.grid_shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class CandidateTable:
    """Finite candidate set with raw values and the maximization scaling.

    ``scaled`` holds (raw_max - raw) / (raw_max - raw_min) per output
    dimension, so it lies in [0, 1] with 1 at each raw minimizer.  ``x_unit``
    rescales inputs to the unit box for GP fitting.
    """

    spec: BenchmarkSpec
    X: np.ndarray          # (n, d) original inputs
    x_unit: np.ndarray     # (n, d) inputs scaled to [0, 1]^d
    raw: np.ndarray        # (n, L) raw objective values
    scaled: np.ndarray     # (n, L) negated + min-max scaled values
    raw_min: np.ndarray
    raw_max: np.ndarray

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def to_raw(self, scaled) -> np.ndarray:
        """Invert the scaling: objective values in original units."""
        scaled = np.asarray(scaled, dtype=float)
        return self.raw_max - scaled * (self.raw_max - self.raw_min)


def build_candidate_table(spec: BenchmarkSpec) -> CandidateTable:
    X = candidate_grid(spec)
    raw = np.stack([evaluate(spec, x) for x in X])
    raw_min, raw_max = raw.min(axis=0), raw.max(axis=0)
    span = np.where(raw_max > raw_min, raw_max - raw_min, 1.0)
    scaled = (raw_max - raw) / span
    lower, upper = np.asarray(spec.lower, float), np.asarray(spec.upper, float)
    x_unit = (X - lower) / np.where(upper > lower, upper - lower, 1.0)
    return CandidateTable(spec=spec, X=X, x_unit=x_unit, raw=raw, scaled=scaled,
                          raw_min=raw_min, raw_max=raw_max)
