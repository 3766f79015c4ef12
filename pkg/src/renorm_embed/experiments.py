"""Monte Carlo experiments probing the recursive estimates and the applications.

Every trial draws from its own stream ``rng_stream(seed, (cell, trial))`` so
results do not depend on evaluation order.  At toy parameters the reference
bounds are reported next to the estimates, not asserted.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import compatible_accepts
from .blocks import LevelSampler, SymbolSampler
from .classify import LevelContext, block_embed_oracle, clopper_pearson
from .core import ParameterSet, ProblemSpec, rng_stream, scales
from .deciders import lipschitz_embed_greedy
from .errors import ContractError, ResourceError

SCHEMA = "renorm-embed experiment v1"


@dataclass
class ExperimentResult:
    name: str
    params: dict
    seed: int
    trials: int
    columns: tuple
    rows: list = field(default_factory=list)

    def descriptor(self) -> dict:
        return {"schema": SCHEMA, "name": self.name, "params": self.params, "seed": self.seed,
                "trials": self.trials, "columns": list(self.columns)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                        for v in row])
        return buf.getvalue()

    def descriptor_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True, indent=1) + "\n"

    def write(self, path) -> tuple:
        """Write the CSV to ``path`` and the descriptor to ``path + '.json'``."""
        path = str(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())
        with open(path + ".json", "w", encoding="utf-8") as fh:
            fh.write(self.descriptor_json())
        return path, path + ".json"

    def column(self, name) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


def _cp(hits: int, trials: int) -> tuple:
    return (hits / trials,) + clopper_pearson(hits, trials)


def _spec_label(spec: ProblemSpec) -> str:
    return spec.name


# ---------------------------------------------------------------------------
# block-level experiments

def _level_sampler(ps, spec, side, j, catalogs=None, fixed_W=None):
    base = SymbolSampler(spec, side)
    if j <= 1:
        return LevelSampler(base, ps, j, fixed_W=fixed_W)
    if not catalogs or len(catalogs) < j:
        raise ResourceError(f"sampling level {j} needs good oracles from catalogs of levels 0..{j - 1}")
    oracles = [base.is_good] + [(lambda c: (lambda b: LevelContext(ps, c.level, spec, c).is_good(b, side)))(c)
                                for c in catalogs[:j - 1]]
    return LevelSampler(base, ps, j, oracles, fixed_W=fixed_W)


def tail_curve(j: int, ps: ParameterSet, spec: ProblemSpec, trials: int, p_grid: Sequence, seed: int,
               inner_trials: int = 200, side: str = "X") -> ExperimentResult:
    """Empirical ``P(S_j(X) <= p)`` against the reference ``p^{m_j} L_j^{-beta}``.

    At level 0 ``S_0`` is exact; above it is a nested Monte Carlo estimate with
    ``inner_trials`` partners per outer draw.
    """
    if trials < 1:
        raise ContractError("trials must be at least 1")
    sc = scales(ps, j)
    other = "Y" if side == "X" else "X"
    svals = []
    if j == 0:
        sampler = SymbolSampler(spec, side)
        for t in range(trials):
            b = sampler(rng_stream(seed, (0, t)))
            svals.append(float(spec.base_embedding_probability(side, b.chars[0])[0]))
    else:
        outer = _level_sampler(ps, spec, side, j)
        inner = _level_sampler(ps, spec, other, j)
        embeds = block_embed_oracle(spec, ps.R)
        for t in range(trials):
            X = outer(rng_stream(seed, (0, t)))
            hits = 0
            for u in range(inner_trials):
                Y = inner(rng_stream(seed, (1, t, u)))
                hits += bool(embeds(X, Y) if side == "X" else embeds(Y, X))
            svals.append(hits / inner_trials)
    svals = np.array(svals)
    res = ExperimentResult("tail", {"j": j, "profile": ps.name or "", "spec": _spec_label(spec), "side": side,
                                    "inner_trials": inner_trials if j else 0,
                                    "p_grid": [float(p) for p in p_grid]},
                           seed, trials, ("p", "estimate", "lo", "hi", "reference"))
    mj = float(sc.m_j)
    for p in p_grid:
        hits = int(np.sum(svals <= float(p)))
        est, lo, hi = _cp(hits, trials)
        ref = math.exp(mj * math.log(float(p)) - ps.beta * math.log(sc.L)) if float(p) > 0 else 0.0
        res.rows.append((float(p), est, lo, hi, ref))
    return res


def length_moment(j: int, ps: ParameterSet, spec: ProblemSpec, trials: int, seed: int,
                  xs: Sequence = (1, 2, 3), side: str = "X", fixed_W: int | None = None) -> ExperimentResult:
    """``E exp(L_{j-1}^{-6} (|X| - (2 - 2^{-j}) L_j))`` and tail rows against ``e^{-x}``.

    ``fixed_W`` pins the top-level geometric offset, which makes the length
    deterministic for an all-good law.
    """
    if j < 1:
        raise ContractError("length moments are defined for j >= 1")
    sc, sp = scales(ps, j), scales(ps, j - 1)
    sampler = _level_sampler(ps, spec, side, j, fixed_W=fixed_W)
    centre = (2 - Fraction(1, 2 ** j)) * sc.L
    unit = sp.L ** 6
    lengths = np.array([len(sampler(rng_stream(seed, (0, t))).chars) for t in range(trials)], dtype=float)
    vals = np.exp((lengths - float(centre)) / unit)
    # weight each distinct length by its frequency so a constant length gives its value exactly
    uniq, counts = np.unique(lengths, return_counts=True)
    mean = math.fsum(float(c) / trials * math.exp((u - float(centre)) / unit) for u, c in zip(uniq, counts))
    half = 1.96 * float(vals.std(ddof=1)) / math.sqrt(trials) if trials > 1 else math.inf
    res = ExperimentResult("length", {"j": j, "profile": ps.name or "", "spec": _spec_label(spec), "side": side,
                                      "xs": [float(x) for x in xs], "fixed_W": fixed_W},
                           seed, trials, ("quantity", "x", "estimate", "lo", "hi", "reference"))
    res.rows.append(("moment", "", mean, mean - half, mean + half, 1.0))
    for x in xs:
        hits = int(np.sum(lengths > float(centre) + float(x) * unit))
        est, lo, hi = _cp(hits, trials)
        res.rows.append(("tail", float(x), est, lo, hi, math.exp(-float(x))))
    return res


def good_fraction(j: int, ps: ParameterSet, spec: ProblemSpec, trials: int, seed: int,
                  catalogs=None, side: str = "X") -> ExperimentResult:
    """Fraction of sampled level-``j`` blocks that are good; unresolved ones are counted apart."""
    sc = scales(ps, j)
    good = unknown = 0
    if j == 0:
        sampler = SymbolSampler(spec, side)
        for t in range(trials):
            good += sampler.is_good(sampler(rng_stream(seed, (0, t))))
    else:
        if catalogs is None:
            from .construct import list_level_catalog
            catalogs = [list_level_catalog(0, ps, spec)]
            for k in range(1, j):
                catalogs.append(list_level_catalog(k, ps, spec, prev=catalogs[-1]))
        ctx = LevelContext(ps, j - 1, spec, catalogs[j - 1])
        sampler = _level_sampler(ps, spec, side, j, catalogs)
        for t in range(trials):
            b = sampler(rng_stream(seed, (0, t)))
            try:
                good += ctx.is_good(b, side)
            except ContractError:
                unknown += 1
    res = ExperimentResult("good-fraction", {"j": j, "profile": ps.name or "", "spec": _spec_label(spec),
                                             "side": side},
                           seed, trials, ("quantity", "estimate", "lo", "hi", "reference"))
    est, lo, hi = _cp(good, trials)
    res.rows.append(("good", est, lo, hi, 1 - float(sc.L) ** -ps.delta))
    est, lo, hi = _cp(unknown, trials)
    res.rows.append(("unknown", est, lo, hi, None))
    return res


# ---------------------------------------------------------------------------
# application-level experiments

def minimal_M_curve(n_grid: Sequence[int], M_grid: Sequence[int], trials: int, seed: int) -> ExperimentResult:
    """``P(X[1..n] M-embeds into Y[1..Mn])`` for independent fair bits, by the greedy decider."""
    res = ExperimentResult("minimal-M", {"n_grid": list(map(int, n_grid)), "M_grid": list(map(int, M_grid))},
                           seed, trials, ("n", "M", "estimate", "lo", "hi"))
    for ci, (n, M) in enumerate((n, M) for n in n_grid for M in M_grid):
        hits = 0
        for t in range(trials):
            rng = rng_stream(seed, (ci, t))
            bits = rng.integers(0, 2, size=n + M * n)
            hits += lipschitz_embed_greedy(bits[:n], bits[n:], M, M) is not None
        est, lo, hi = _cp(hits, trials)
        res.rows.append((int(n), int(M), est, lo, hi))
    return res


def compatibility_q_curve(q_grid: Sequence, n: int, trials: int, seed: int) -> ExperimentResult:
    """``P(two Bernoulli(q) sequences of length n are compatible)`` per ``q``."""
    res = ExperimentResult("compatibility", {"q_grid": [float(q) for q in q_grid], "n": int(n)},
                           seed, trials, ("q", "estimate", "lo", "hi"))
    for ci, q in enumerate(q_grid):
        q = float(q)
        hits = 0
        for t in range(trials):
            rng = rng_stream(seed, (ci, t))
            bits = (rng.random(2 * n) < q).astype(np.int8)
            hits += bool(compatible_accepts(bits[:n], bits[n:]))
        est, lo, hi = _cp(hits, trials)
        res.rows.append((q, est, lo, hi))
    return res


EXPERIMENTS = {
    "tail": tail_curve,
    "length": length_moment,
    "good-fraction": good_fraction,
    "minimal-M": minimal_M_curve,
    "compatibility": compatibility_q_curve,
}
