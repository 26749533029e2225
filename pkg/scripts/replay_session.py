#!/usr/bin/env python3
"""Replay a recorded interactive session through the engine, bypassing HTTP.

Reads a JSON document {"config": {...}, "ops": [...]} where ops is the exact
operation sequence a client performed: query/answer pairs, suggests, and
observes.  The engine is driven with the same session seed; every replayed
query and suggestion must match the recording (vectors compared in original
units), proving the service added nothing beyond transport.  Prints the final
engine state summary as JSON; exits 1 on any divergence.
"""

import argparse
import json
import sys

import numpy as np

from prefmoo.engine import Engine, SessionConfig
from prefmoo.benchmarks import get_benchmark


def fail(msg):
    print(f"replay mismatch: {msg}", file=sys.stderr)
    sys.exit(1)


def close(a, b, tol=1e-9):
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float),
                       atol=tol, rtol=0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("recording", help="JSON file with config and ops")
    args = parser.parse_args()

    doc = json.load(open(args.recording))
    body = doc["config"]
    benchmark = body.get("benchmark")
    fields = {k: v for k, v in body.items()
              if k not in ("benchmark", "L", "d", "candidates", "bounds")}
    if benchmark:
        spec = get_benchmark(benchmark, fields.get("dtlz_norm", "euclidean"))
        config = SessionConfig(L=spec.L, d=spec.d, benchmark=benchmark, **fields)
        engine = Engine(config)
    else:
        config = SessionConfig(L=body["L"], d=body["d"], **fields)
        engine = Engine(config, candidates=body.get("candidates"),
                        bounds=body.get("bounds"))

    for i, op in enumerate(doc["ops"]):
        kind = op["op"]
        if kind == "query":
            payload = engine.build_query(op["kind"])
            got_f = engine.to_raw(np.asarray(payload["f"]))
            if payload["id"] != op["payload"]["id"]:
                fail(f"op {i}: query id {payload['id']} != {op['payload']['id']}")
            if not close(got_f, op["payload"]["f"]):
                fail(f"op {i}: query vector diverged: {got_f.tolist()} "
                     f"vs {op['payload']['f']}")
            if payload["kind"] == "pc":
                got_g = engine.to_raw(np.asarray(payload["f_other"]))
                if not close(got_g, op["payload"]["f_other"]):
                    fail(f"op {i}: second query vector diverged")
        elif kind == "answer":
            engine.submit_answer(op["query_id"], op["value"])
        elif kind == "suggest":
            idx, _ = engine.suggest()
            if idx != op["index"]:
                fail(f"op {i}: suggested index {idx} != {op['index']}")
        elif kind == "observe":
            engine.observe(engine.x_to_unit(np.asarray(op["x"], dtype=float)),
                           np.asarray(op["y"], dtype=float))
        else:
            fail(f"op {i}: unknown op kind {kind!r}")

    mean = engine.posterior_mean_w()
    out = {
        "counts": {"observations": engine.n_observations,
                   "pc": len(engine.dataset.pc), "ir": len(engine.dataset.ir)},
        "posterior_mean_w": None if mean is None else np.round(mean, 6).tolist(),
        "incumbent": engine.incumbent(),
        "n_queries": engine.n_queries,
        "pending": engine.pending,
    }
    json.dump(out, sys.stdout)
    print()


if __name__ == "__main__":
    main()
