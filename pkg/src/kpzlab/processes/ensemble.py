"""Replica ensembles with a deterministic, scheduling-independent reduction.

Replica r always uses SeedSpec(master, r). Workers evaluate contiguous blocks
of replicas; the per-replica values are re-assembled in replica order before
any arithmetic, so results are bit-identical for any worker count.
"""
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..rng import SeedSpec


@dataclass
class EnsembleResult:
    replicas: int
    observables: dict
    seed: SeedSpec
    params: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, repr=False)

    def mean(self, name):
        return self.observables[name]["mean"]

    def stderr(self, name):
        return self.observables[name]["stderr"]

    def to_dict(self):
        return {"replicas": self.replicas, "observables": self.observables,
                "seed": self.seed.to_dict(), "params": self.params}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def summarize(values, bins=None):
    """Mean, variance, standard error and a histogram whose mass is len(values)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    mean = float(np.mean(v))
    var = float(np.var(v, ddof=1)) if n > 1 else 0.0
    finite = v[np.isfinite(v)]
    if bins is None:
        if finite.size and np.all(finite == np.round(finite)) and np.ptp(finite) < 500:
            lo, hi = float(finite.min()), float(finite.max())
            edges = np.arange(lo - 0.5, hi + 1.5)
        else:
            edges = 50
    else:
        edges = bins
    counts, edges = np.histogram(finite, bins=edges) if finite.size else (np.zeros(0), np.zeros(1))
    return {"mean": mean, "variance": max(var, 0.0), "stderr": math.sqrt(max(var, 0.0) / n),
            "n": n, "histogram": {"counts": counts.astype(int).tolist(),
                                  "edges": np.asarray(edges, dtype=float).tolist()}}


def _block(args):
    fn, master, lo, hi = args
    return [fn(SeedSpec(master, r)) for r in range(lo, hi)]


def run_ensemble(sample_fn, replicas, master, params=None, workers=1, bins=None,
                 keep_samples=False):
    """Evaluate `sample_fn(SeedSpec)` -> {name: value} for every replica."""
    replicas = int(replicas)
    if workers <= 1:
        rows = [sample_fn(SeedSpec(master, r)) for r in range(replicas)]
    else:
        edges = np.linspace(0, replicas, workers + 1).astype(int)
        jobs = [(sample_fn, master, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        with ProcessPoolExecutor(workers) as ex:
            rows = [row for part in ex.map(_block, jobs) for row in part]
    names = list(rows[0]) if rows else []
    samples = {nm: np.array([row[nm] for row in rows], dtype=float) for nm in names}
    obs = {nm: summarize(samples[nm], None if bins is None else bins.get(nm))
           for nm in names}
    return EnsembleResult(replicas, obs, SeedSpec(master, 0), dict(params or {}),
                          samples if keep_samples else {})
