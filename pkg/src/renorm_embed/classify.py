"""Embedding probabilities and the semi-bad / strong / good classifiers.

Probabilities are carried as exact rational intervals: truncated enumeration
yields ``[lo, lo + deficit]`` and Monte Carlo yields an exact-binomial 95%
interval.  Classifiers are tri-state whenever an interval straddles a
threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .blocks import Block, symbol_block
from .core import ParameterSet, ProblemSpec, scales
from .errors import ContractError, ResourceError
from .rembed import rembed_holds


class Tri(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class Status(enum.Enum):
    GOOD = "good"
    SEMIBAD = "semibad"
    BAD = "bad"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ProbInterval:
    lo: Fraction
    hi: Fraction
    method: str
    trials: int | None = None
    halfwidth: float | None = None

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        lo, hi = max(lo, Fraction(0)), min(hi, Fraction(1))
        if lo > hi:
            raise ContractError("probability interval with lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x) -> bool:
        return self.lo <= Fraction(x) <= self.hi


@dataclass(frozen=True)
class BlockDistribution:
    level: int
    side: str
    entries: tuple  # of (Block, Fraction)
    mass_deficit: Fraction

    def total(self) -> Fraction:
        return sum((w for _, w in self.entries), Fraction(0))


# ---------------------------------------------------------------------------
# block oracles

def block_embed_oracle(spec: ProblemSpec, R: int, cache_size: int = 200_000) -> Callable[[Block, Block], bool]:
    """``X -> Y`` between blocks: the character-level R-embedding of their spans."""
    oracles = spec.oracles(R)
    rel = spec.relation_matrix()
    cache: dict = {}

    def embeds(X: Block, Y: Block) -> bool:
        xc, yc = X.chars, Y.chars
        if len(xc) == 1 and len(yc) == 1:
            return bool(rel[xc[0], yc[0]])
        if not (len(xc) <= 2 * R * len(yc) and len(yc) <= 2 * R * len(xc)):
            return False
        key = (xc, yc)
        hit = cache.get(key)
        if hit is None:
            hit = rembed_holds(xc, yc, oracles)
            if len(cache) < cache_size:
                cache[key] = hit
        return hit

    return embeds


# ---------------------------------------------------------------------------
# exact block probabilities

def _flog(x: Fraction) -> float:
    if x <= 0:
        return -math.inf
    return math.log(x.numerator) - math.log(x.denominator)


def w_factor(good_flags: Sequence[bool], ps: ParameterSet, j1: int) -> Fraction:
    """Probability, over the geometric draw, that the scan stops exactly at this block's end.

    ``good_flags`` lists the goodness of the block's sub-blocks; the block is
    assumed to begin and end with ``L^3`` good ones.
    """
    sc = scales(ps, j1 - 1)
    L3 = sc.L ** 3
    a = L3 + sc.L ** (ps.alpha - 1)
    n = len(good_flags)
    l = n - L3
    if l < a:
        return Fraction(0)
    q = 1 - Fraction(1, sc.L ** 4)
    need = 2 * L3
    ext = np.concatenate([np.asarray(good_flags, dtype=np.int64), np.ones(L3, dtype=np.int64)])
    cs = np.concatenate(([0], np.cumsum(ext)))
    starts = np.arange(a, l)
    ok = np.flatnonzero(cs[starts + need] - cs[starts] == need) if starts.size else np.array([], dtype=np.int64)
    w_min = int(starts[ok[-1]]) - a + 1 if ok.size else 0
    return q ** w_min - q ** (l - a + 1)


def block_probability(sub_items: Sequence, weights: dict, good: Callable, ps: ParameterSet, j1: int) -> Fraction:
    """Exact probability of a level-``j1`` block from its sub-block sequence.

    The good-conditioning of the first ``L^3`` sub-blocks cancels against the
    ``L^3`` good sub-blocks that must follow the block, leaving the plain
    product of sub-block weights times the geometric factor.
    """
    sc = scales(ps, j1 - 1)
    L3 = sc.L ** 3
    flags = [bool(good(s)) for s in sub_items]
    if len(flags) < 2 * L3 or not all(flags[:L3]) or not all(flags[-L3:]):
        return Fraction(0)
    prod = Fraction(1)
    for s in sub_items:
        prod *= weights[s]
    return prod * w_factor(flags, ps, j1)


# ---------------------------------------------------------------------------
# enumeration

def _level0_items(spec: ProblemSpec, side: str):
    mu = spec.mu(side)
    good = spec.good(side)
    return [(symbol_block(s), mu[s], s in good) for s in range(len(mu)) if mu[s] > 0]


def enumerate_block_distribution(j: int, ps: ParameterSet, spec: ProblemSpec, epsilon,
                                 side: str = "X", prev: BlockDistribution | None = None,
                                 prev_good: Callable[[Block], bool] | None = None,
                                 max_blocks: int = 200_000) -> BlockDistribution:
    """Law of level-``j`` blocks, truncated so that the missing mass is at most ``epsilon``.

    Level 0 is the symbol law itself.  Level ``j >= 1`` enumerates the most
    probable blocks built from the level-``(j-1)`` distribution ``prev``
    (computed from the symbol law when ``j = 1``); ``prev_good`` classifies
    those sub-blocks and defaults to the symbol good set.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ContractError("epsilon must be positive")
    if j == 0:
        entries = tuple((b, w) for b, w, _ in _level0_items(spec, side))
        return BlockDistribution(0, side, entries, spec.tail(side))
    if j == 1 and prev is None:
        items = _level0_items(spec, side)
    else:
        if prev is None or prev.level != j - 1:
            raise ContractError(f"level {j} enumeration needs the level-{j - 1} distribution")
        if prev_good is None:
            raise ContractError("a goodness oracle for the sub-blocks is required")
        items = [(b, w, bool(prev_good(b))) for b, w in prev.entries]
    if not any(g for _, _, g in items):
        raise ResourceError("no good sub-block has positive probability")
    tau = epsilon / 64
    while True:
        entries = _enumerate_above(items, ps, j, tau, max_blocks, epsilon)
        deficit = 1 - sum((w for _, w in entries), Fraction(0))
        if deficit <= epsilon:
            return BlockDistribution(j, side, tuple(entries), deficit)
        tau /= 16


def _enumerate_above(items, ps, j1, tau: Fraction, max_blocks: int, epsilon) -> list:
    """All blocks of probability at least ``tau`` (plus some below), in a fixed order."""
    sc = scales(ps, j1 - 1)
    L = sc.L
    L3 = L ** 3
    a = L3 + L ** (ps.alpha - 1)
    log_keep = math.log(tau.numerator) - math.log(tau.denominator)
    log_q = math.log1p(-1.0 / L ** 4)
    weights = [w for _, w, _ in items]
    goodf = [g for _, _, g in items]
    logs = [_flog(w) for w in weights]
    order = sorted(range(len(items)), key=lambda k: (-weights[k], k))
    bf = order[0]
    bg = next(k for k in order if goodf[k])
    alts_free = [(k, weights[k] / weights[bf]) for k in order if k != bf]
    alts_forced = [(k, weights[k] / weights[bg]) for k in order if k != bg and goodf[k]]
    lr_free = [(k, r, _flog(r)) for k, r in alts_free]
    lr_forced = [(k, r, _flog(r)) for k, r in alts_forced]
    rmax_log = max([lr for _, _, lr in lr_free + lr_forced], default=-math.inf)

    def h(l, bad):
        span = l - a
        best = -math.inf
        d = 0
        while True:
            v = (d * rmax_log if d else 0.0) + max(0, span - 2 * L3 * (bad + d)) * log_q
            best = max(best, v)
            if rmax_log == -math.inf or span - 2 * L3 * (bad + d) <= 0:
                break
            d += 1
        return best

    out = []
    n = a + L3
    while True:
        l = n - L3
        base_log = 2 * L3 * logs[bg] + (n - 2 * L3) * logs[bf]
        base_bad = 0 if goodf[bf] else n - 2 * L3
        if base_log + h(l, base_bad) < log_keep:
            break
        base_exact = weights[bg] ** (2 * L3) * weights[bf] ** (n - 2 * L3)
        base_seq = [bg] * L3 + [bf] * (n - 2 * L3) + [bg] * L3
        _dfs_blocks(out, items, goodf, ps, j1, n, L3, base_seq, base_exact, base_log, base_bad,
                    lr_free, lr_forced, log_keep, h, tau, max_blocks, epsilon)
        n += 1
    return out


def _dfs_blocks(out, items, goodf, ps, j1, n, L3, base_seq, base_exact, base_log, base_bad,
                lr_free, lr_forced, log_keep, h, tau, max_blocks, epsilon):
    l = n - L3
    stack = [(0, (), base_exact, base_log, base_bad)]
    while stack:
        start, mods, exact, lg, bad = stack.pop()
        seq = list(base_seq)
        for pos, k in mods:
            seq[pos] = k
        p = exact * w_factor([goodf[k] for k in seq], ps, j1)
        if p > 0 and (p >= tau or not mods):
            if len(out) >= max_blocks:
                raise ResourceError(f"block enumeration exceeded {max_blocks} blocks; "
                                    f"achieved deficit {float(1 - sum(w for _, w in out)):.3g} "
                                    f"> epsilon {float(epsilon):.3g}")
            subs = [items[k][0] for k in seq]
            chars = b"".join(s.chars for s in subs)
            blk = Block(j1, chars, sub=tuple(subs) if j1 >= 2 else None, T=l - (L3 + scales(ps, j1 - 1).L ** (ps.alpha - 1)))
            out.append((blk, p))
        children = []
        for pos in range(start, n):
            forced = pos < L3 or pos >= l
            alts = lr_forced if forced else lr_free
            base_k = base_seq[pos]
            for k, r, lr in alts:
                if lg + lr + h(l, bad + 1) < log_keep:
                    break
                nbad = bad + (0 if goodf[k] else 1) - (0 if goodf[base_k] else 1)
                children.append((pos + 1, mods + ((pos, k),), exact * r, lg + lr, nbad))
        stack.extend(reversed(children))


# ---------------------------------------------------------------------------
# embedding probabilities

def embedding_prob_exact(Xb: Block, j: int, dist: BlockDistribution, embed_oracle: Callable[[Block, Block], bool],
                         side: str = "X") -> ProbInterval:
    """``S_j`` of ``Xb`` against an enumerated partner distribution.

    With ``side='X'`` the partners are Y blocks and the question is ``Xb -> Y``;
    with ``side='Y'`` the partners are X blocks and the question is ``X -> Xb``.
    """
    if dist.level != j:
        raise ContractError(f"distribution is for level {dist.level}, not {j}")
    lo = Fraction(0)
    for other, w in dist.entries:
        ok = embed_oracle(Xb, other) if side == "X" else embed_oracle(other, Xb)
        if ok:
            lo += w
    return ProbInterval(lo, lo + dist.mass_deficit, "exact-truncated")


def clopper_pearson(successes: int, trials: int, level: float = 0.95) -> tuple:
    a = (1 - level) / 2
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(a, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta_dist.ppf(1 - a, successes + 1, trials - successes))
    return lo, hi


def mc_interval(successes: int, trials: int) -> ProbInterval:
    lo, hi = clopper_pearson(successes, trials)
    return ProbInterval(Fraction(lo), Fraction(hi), "monte-carlo", trials=trials, halfwidth=(hi - lo) / 2)


def embedding_prob_mc(Xb: Block, j: int, sampler, trials: int, rng,
                      embed_oracle: Callable[[Block, Block], bool], side: str = "X") -> ProbInterval:
    """Empirical ``S_j`` over ``trials`` partners drawn from ``sampler(rng)``."""
    if trials < 1:
        raise ContractError("trials must be at least 1")
    hits = 0
    for _ in range(trials):
        other = sampler(rng)
        ok = embed_oracle(Xb, other) if side == "X" else embed_oracle(other, Xb)
        hits += bool(ok)
    return mc_interval(hits, trials)


# ---------------------------------------------------------------------------
# classifiers

def semibad_threshold(ps: ParameterSet, j: int) -> Fraction:
    return 1 - Fraction(1, 20 * ps.k0 * scales(ps, j + 1).R_plus)


def strong_fraction(ps: ParameterSet, j: int) -> Fraction:
    return 1 - Fraction(1, 10 * ps.k0 * scales(ps, j + 1).R_plus)


def is_semibad(Xb: Block, j: int, ps: ParameterSet, S: ProbInterval, good: bool) -> Tri:
    """Semi-bad test given the block's goodness and an interval for its ``S_j``."""
    if good:
        return Tri.NO
    L = scales(ps, j).L
    if len(Xb.chars) > 10 * L:
        return Tri.NO
    if max(Xb.chars) > L ** ps.m:
        return Tri.NO
    thr = semibad_threshold(ps, j)
    if S.lo >= thr:
        return Tri.YES
    if S.hi < thr:
        return Tri.NO
    return Tri.UNKNOWN


def is_strong(window: Sequence[Block], j: int, ps: ParameterSet, semibad_list: Sequence[Block],
              embed_oracle: Callable[[Block, Block], bool], complete: bool = True,
              window_side: str = "Y") -> bool:
    """Every semi-bad block of the other side embeds into enough of the window.

    ``window_side='Y'`` means the window holds Y blocks and the semi-bad blocks
    are X blocks (``X -> Y_i``); ``'X'`` is the mirror (``X_i -> Y``).
    """
    if not complete:
        raise ContractError("strong-sequence test needs the complete semi-bad list")
    n = len(window)
    need = strong_fraction(ps, j) * n
    for sb in semibad_list:
        if window_side == "Y":
            hits = sum(1 for Y in window if embed_oracle(sb, Y))
        else:
            hits = sum(1 for X in window if embed_oracle(X, sb))
        if hits < need:
            return False
    return True


def is_good(Xb: Block, j1: int, ps: ParameterSet, sub_status: Sequence[Status],
            window_strong: Callable[[int, int], bool]) -> bool:
    """The four goodness conditions for a level-``j1`` block.

    ``window_strong(s, e)`` reports whether sub-blocks ``s..e-1`` form a
    strong sequence.
    """
    j = j1 - 1
    sc = scales(ps, j)
    n = len(sub_status)
    if n != Xb.n_sub:
        raise ContractError("one status per sub-block is required")
    if any(s is Status.UNKNOWN for s in sub_status):
        raise ContractError("sub-block statuses must be resolved before testing goodness")
    if n > sc.L ** (ps.alpha - 1) + sc.L ** 5:
        return False
    bad = [s for s in sub_status if s is not Status.GOOD]
    if len(bad) > ps.k0:
        return False
    if any(s is not Status.SEMIBAD for s in bad):
        return False
    w = sc.fl32
    for s in range(0, n - w + 1):
        if not window_strong(s, s + w):
            return False
    return True


class LevelContext:
    """Classifies level-``j+1`` blocks from a level-``j`` catalog.

    ``catalog`` must provide ``good_x``, ``good_y``, ``semibad_x``,
    ``semibad_y`` (sequences of blocks) and ``complete``.  At level 0 the
    symbol good sets decide goodness directly.
    """

    def __init__(self, ps: ParameterSet, j: int, spec: ProblemSpec, catalog, embed_oracle=None):
        self.ps, self.j, self.spec, self.catalog = ps, j, spec, catalog
        self.embed = embed_oracle or block_embed_oracle(spec, ps.R)
        self.good = {"X": {b.chars for b in catalog.good_x}, "Y": {b.chars for b in catalog.good_y}}
        self.semibad = {"X": {b.chars for b in catalog.semibad_x}, "Y": {b.chars for b in catalog.semibad_y}}
        self.semibad_list = {"X": list(catalog.semibad_x), "Y": list(catalog.semibad_y)}
        self.semibad_complete = bool(getattr(catalog, "semibad_complete", catalog.complete))

    def status(self, b: Block, side: str) -> Status:
        if b.chars in self.good[side]:
            return Status.GOOD
        if b.chars in self.semibad[side]:
            return Status.SEMIBAD
        if self.semibad_complete and getattr(self.catalog, "good_complete", True):
            return Status.BAD
        return Status.UNKNOWN

    def strong_profile(self, subs: Sequence[Block], side: str) -> list:
        """Per semi-bad partner, the 0/1 vector of which sub-blocks it meets."""
        other = "Y" if side == "X" else "X"
        rows = []
        for sb in self.semibad_list[other]:
            if side == "X":
                rows.append(np.array([self.embed(s, sb) for s in subs], dtype=np.int64))
            else:
                rows.append(np.array([self.embed(sb, s) for s in subs], dtype=np.int64))
        return rows

    def is_good(self, b: Block, side: str = "X") -> bool:
        if b.level != self.j + 1:
            raise ContractError(f"context classifies level {self.j + 1}, got a level-{b.level} block")
        subs = b.subblocks()
        statuses = [self.status(s, side) for s in subs]
        if not self.semibad_complete:
            raise ContractError("goodness needs the complete semi-bad list of the level below")
        rows = None
        frac = strong_fraction(self.ps, self.j)

        def window_strong(s, e):
            nonlocal rows
            if rows is None:
                rows = [np.concatenate(([0], np.cumsum(r))) for r in self.strong_profile(subs, side)]
            need = frac * (e - s)
            return all(int(cs[e] - cs[s]) >= need for cs in rows)

        return is_good(b, self.j + 1, self.ps, statuses, window_strong)
