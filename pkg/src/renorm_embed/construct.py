"""Deterministic catalogs of good and semi-bad blocks and the explicit good sequence.

Everything here is deterministic: candidates are visited in a fixed order
(length, then lexicographic in symbol indices) and no randomness is used.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .blocks import Block, join_blocks, symbol_block
from .classify import (BlockDistribution, LevelContext, ProbInterval, Status, Tri, block_embed_oracle,
                       block_probability, embedding_prob_exact, enumerate_block_distribution, is_semibad)
from .core import ParameterSet, ProblemSpec, scales
from .errors import ContractError, ResourceError

SIDES = ("X", "Y")


@dataclass(frozen=True)
class CatalogCaps:
    """Search limits; recorded in catalog metadata and part of the cache key."""

    max_good_candidates: int = 200_000
    max_semibad_candidates: int = 256
    epsilon: Fraction = Fraction(1, 2 ** 16)
    horizon_c: int = 3
    max_blocks: int = 200_000
    max_extension_trials: int = 64

    def as_dict(self) -> dict:
        return {"max_good_candidates": self.max_good_candidates,
                "max_semibad_candidates": self.max_semibad_candidates,
                "epsilon": str(Fraction(self.epsilon)), "horizon_c": self.horizon_c,
                "max_blocks": self.max_blocks, "max_extension_trials": self.max_extension_trials}


@dataclass(frozen=True)
class LevelCatalog:
    """Good and semi-bad level-``j`` blocks of both sides.

    ``weights`` maps ``(side, chars)`` to the exact block probability.  The
    catalog is ``complete`` when both the good and the semi-bad searches
    exhausted their finite candidate space.
    """

    level: int
    good_x: tuple
    good_y: tuple
    semibad_x: tuple
    semibad_y: tuple
    good_complete: bool
    semibad_complete: bool
    weights: dict = field(default_factory=dict, compare=False)
    metadata: tuple = ()

    @property
    def complete(self) -> bool:
        return self.good_complete and self.semibad_complete

    def good(self, side: str) -> tuple:
        return self.good_x if side == "X" else self.good_y

    def semibad(self, side: str) -> tuple:
        return self.semibad_x if side == "X" else self.semibad_y

    def to_json(self) -> str:
        def blocks(side, seq):
            return [{"block": block_to_obj(b), "p": str(self.weights.get((side, b.chars), ""))} for b in seq]
        obj = {"schema": "renorm-embed catalog v1", "level": self.level,
               "good_complete": self.good_complete, "semibad_complete": self.semibad_complete,
               "good_x": blocks("X", self.good_x), "good_y": blocks("Y", self.good_y),
               "semibad_x": blocks("X", self.semibad_x), "semibad_y": blocks("Y", self.semibad_y),
               "metadata": dict(self.metadata)}
        return json.dumps(obj, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LevelCatalog":
        obj = json.loads(text)
        weights = {}
        lists = {}
        for key, side in (("good_x", "X"), ("good_y", "Y"), ("semibad_x", "X"), ("semibad_y", "Y")):
            out = []
            for item in obj[key]:
                b = block_from_obj(item["block"])
                if item["p"]:
                    weights[(side, b.chars)] = Fraction(item["p"])
                out.append(b)
            lists[key] = tuple(out)
        return cls(obj["level"], lists["good_x"], lists["good_y"], lists["semibad_x"], lists["semibad_y"],
                   obj["good_complete"], obj["semibad_complete"], weights,
                   tuple(sorted(obj["metadata"].items())))


def block_to_obj(b: Block) -> dict:
    if b.level <= 1:
        return {"level": b.level, "chars": b.chars.hex()}
    return {"level": b.level, "sub": [block_to_obj(s) for s in b.sub]}


def block_from_obj(obj) -> Block:
    if obj["level"] <= 1:
        return Block(obj["level"], bytes.fromhex(obj["chars"]))
    return join_blocks(obj["level"], [block_from_obj(s) for s in obj["sub"]])


def _order_key(b: Block):
    return (len(b.chars), b.chars)


# ---------------------------------------------------------------------------
# level 0

def _level0_catalog(ps: ParameterSet, spec: ProblemSpec) -> LevelCatalog:
    lists, weights = {}, {}
    complete = True
    for side in SIDES:
        mu = spec.mu(side)
        good = sorted(spec.good(side))
        lists["good", side] = tuple(symbol_block(s) for s in good)
        sb = []
        for s in range(len(mu)):
            if s in spec.good(side):
                continue
            lo, hi = spec.base_embedding_probability(side, s)
            verdict = is_semibad(symbol_block(s), 0, ps, ProbInterval(lo, hi, "exact-truncated"), good=False)
            if verdict is Tri.YES:
                sb.append(symbol_block(s))
            elif verdict is Tri.UNKNOWN:
                complete = False
        lists["semibad", side] = tuple(sb)
        for s in range(len(mu)):
            weights[(side, bytes([s]))] = mu[s]
    meta = (("alphabet_truncation", "none"),)
    if spec.tail_x or spec.tail_y:
        meta = (("alphabet_truncation", "listed symbols only; tail mass excluded"),)
    return LevelCatalog(0, lists["good", "X"], lists["good", "Y"], lists["semibad", "X"], lists["semibad", "Y"],
                        True, complete and not (spec.tail_x or spec.tail_y), weights, meta)


# ---------------------------------------------------------------------------
# higher levels

def _count_good_candidates(n_lo, n_hi, L3, k0, G, S) -> int:
    total = 0
    for n in range(n_lo, n_hi + 1):
        mid = n - 2 * L3
        for b in range(0, min(k0, mid) + 1):
            total += math.comb(mid, b) * S ** b * G ** (n - b)
    return total


def _good_candidates(n_lo, n_hi, L3, k0, goods, semis):
    """Sub-block sequences with good ends and at most ``k0`` semi-bad ones, in a fixed order."""
    for n in range(n_lo, n_hi + 1):
        mid = n - 2 * L3
        for nb in range(0, min(k0, mid) + 1):
            for pos in itertools.combinations(range(L3, L3 + mid), nb):
                pos_set = set(pos)
                choices = [semis if k in pos_set else goods for k in range(n)]
                if nb and not semis:
                    continue
                for combo in itertools.product(*choices):
                    yield combo


def _semibad_candidates(n_lo, n_hi, L3, goods, items):
    for n in range(n_lo, n_hi + 1):
        choices = [goods] * L3 + [items] * (n - 2 * L3) + [goods] * L3
        for combo in itertools.product(*choices):
            yield combo


def _weights_for(prev: LevelCatalog, spec: ProblemSpec, side: str) -> dict:
    if prev.level == 0:
        return {symbol_block(s): w for s, w in enumerate(spec.mu(side))}
    out = {}
    for b in prev.good(side) + prev.semibad(side):
        w = prev.weights.get((side, b.chars))
        if w is not None:
            out[b] = w
    return out


def list_level_catalog(j: int, ps: ParameterSet, spec: ProblemSpec, caps: CatalogCaps | None = None,
                       prev: LevelCatalog | None = None, distributions: dict | None = None) -> LevelCatalog:
    """Catalog of good and semi-bad level-``j`` blocks of both sides.

    Level ``j >= 1`` needs the level-``(j-1)`` catalog ``prev`` (built on
    demand from level 0 when ``j = 1``).  Semi-bad certification uses exact
    embedding probabilities against the enumerated partner law truncated at
    ``caps.epsilon``; ``distributions`` may supply those laws keyed by side.
    """
    caps = caps or CatalogCaps()
    if j < 0:
        raise ContractError("level must be non-negative")
    if j == 0:
        return _level0_catalog(ps, spec)
    if prev is None:
        if j != 1:
            raise ContractError(f"level-{j} catalog needs the level-{j - 1} catalog")
        prev = _level0_catalog(ps, spec)
    if prev.level != j - 1:
        raise ContractError(f"previous catalog is level {prev.level}, need {j - 1}")
    sc = scales(ps, j - 1)
    L3 = sc.L3
    n_lo = sc.L ** (ps.alpha - 1) + 2 * L3
    n_hi = sc.L ** (ps.alpha - 1) + sc.L ** 5
    meta = {"horizon_c": str(caps.horizon_c), "caps": json.dumps(caps.as_dict(), sort_keys=True)}
    weights = {}
    lists = {}
    good_complete = True
    semibad_complete = True
    ctx = None
    if prev.semibad_complete:
        ctx = LevelContext(ps, j - 1, spec, prev)
    else:
        meta["good_search"] = "skipped: level-below semi-bad list incomplete"
        good_complete = False

    for side in SIDES:
        goods = sorted(prev.good(side), key=_order_key)
        semis = sorted(prev.semibad(side), key=_order_key)
        wmap = _weights_for(prev, spec, side)
        good_of = {b.chars for b in goods}
        found = []
        if ctx is not None:
            total = _count_good_candidates(n_lo, n_hi, L3, ps.k0, len(goods), len(semis))
            if total > caps.max_good_candidates:
                good_complete = False
                meta[f"good_candidates_{side}"] = f"{total} > cap {caps.max_good_candidates}"
            for seen, combo in enumerate(_good_candidates(n_lo, n_hi, L3, ps.k0, goods, semis)):
                if seen >= caps.max_good_candidates:
                    break
                blk = join_blocks(j, combo, W=0, T=len(combo) - L3 - (sc.L ** (ps.alpha - 1) + L3))
                if ctx.is_good(blk, side):
                    found.append(blk)
                    if all(s in wmap for s in combo):
                        weights[(side, blk.chars)] = block_probability(combo, wmap, lambda s: s.chars in good_of, ps, j)
        lists["good", side] = tuple(found)

    # semi-bad search: every realizable non-good block up to 10 L_j characters
    sc_j = scales(ps, j)
    char_cap = 10 * sc_j.L
    embeds = block_embed_oracle(spec, ps.R)
    for side in SIDES:
        other = "Y" if side == "X" else "X"
        sb = []
        if ctx is None:
            lists["semibad", side] = ()
            semibad_complete = False
            continue
        goods = sorted(prev.good(side), key=_order_key)
        if j == 1:
            items = [symbol_block(s) for s, w in enumerate(spec.mu(side)) if w > 0]
        else:
            items = sorted(prev.good(side) + prev.semibad(side), key=_order_key)
            semibad_complete = False
            meta[f"semibad_items_{side}"] = "sub-blocks restricted to cataloged good and semi-bad blocks"
        min_len = min((len(b.chars) for b in items), default=1)
        n_max = char_cap // max(min_len, 1)
        good_chars = {b.chars for b in lists["good", side]}
        dist = None
        examined = 0
        wmap = _weights_for(prev, spec, side)
        for combo in _semibad_candidates(n_lo, n_max, L3, goods, items):
            nchar = sum(len(b.chars) for b in combo)
            if nchar > char_cap:
                continue
            blk = join_blocks(j, combo)
            if blk.chars in good_chars:
                continue
            if examined >= caps.max_semibad_candidates:
                semibad_complete = False
                meta[f"semibad_candidates_{side}"] = f"more than cap {caps.max_semibad_candidates}"
                break
            examined += 1
            if max(blk.chars) > sc_j.L ** ps.m:
                continue
            if dist is None:
                dist = (distributions or {}).get(other) or enumerate_block_distribution(
                    j, ps, spec, caps.epsilon, side=other, max_blocks=caps.max_blocks)
            S = _exact_S(blk, j, dist, embeds, side, caps.horizon_c, ps.R)
            verdict = is_semibad(blk, j, ps, S, good=False)
            if verdict is Tri.YES:
                sb.append(blk)
                if all(s in wmap for s in combo):
                    good_of = {b.chars for b in goods}
                    weights[(side, blk.chars)] = block_probability(combo, wmap, lambda s: s.chars in good_of, ps, j)
            elif verdict is Tri.UNKNOWN:
                semibad_complete = False
        lists["semibad", side] = tuple(sb)
    return LevelCatalog(j, lists["good", "X"], lists["good", "Y"], lists["semibad", "X"], lists["semibad", "Y"],
                        good_complete, semibad_complete, weights, tuple(sorted(meta.items())))


def _exact_S(blk, j, dist, embeds, side, c, R):
    """Exact ``S_j`` with partners beyond the ``c R |X|`` length horizon left undecided.

    No R-embedding step stretches lengths by more than ``2R``, so for
    ``c >= 2`` the skipped partners are certain non-embeddings and the
    interval stays as narrow as the truncation deficit.
    """
    limit = c * R * len(blk.chars)
    near = tuple((b, w) for b, w in dist.entries if len(b.chars) <= limit)
    far = sum((w for b, w in dist.entries if len(b.chars) > limit), Fraction(0))
    iv = embedding_prob_exact(blk, j, BlockDistribution(dist.level, dist.side, near, dist.mass_deficit), embeds,
                              side=side)
    if c >= 2:
        return iv
    return ProbInterval(iv.lo, iv.hi + far, iv.method)


def classify_block(blk: Block, ps: ParameterSet, spec: ProblemSpec, side: str = "X",
                   caps: CatalogCaps | None = None, catalogs=None) -> Status:
    """Status of a single level-``j`` block, decided from scratch.

    Goodness uses the level-``(j-1)`` catalog; a non-good block is semi-bad
    when its exact embedding probability clears the threshold.  Anything
    the truncated computation cannot settle is ``UNKNOWN``.
    """
    caps = caps or CatalogCaps()
    j = blk.level
    if j == 0:
        cat = catalogs[0] if catalogs else _level0_catalog(ps, spec)
        return LevelContext(ps, 0, spec, cat).status(blk, side)
    if catalogs is None or len(catalogs) < j:
        catalogs = [list_level_catalog(0, ps, spec, caps)]
        for k in range(1, j):
            catalogs.append(list_level_catalog(k, ps, spec, caps, prev=catalogs[-1]))
    prev = catalogs[j - 1]
    if not prev.semibad_complete:
        return Status.UNKNOWN
    if LevelContext(ps, j - 1, spec, prev).is_good(blk, side):
        return Status.GOOD
    sc = scales(ps, j)
    if len(blk.chars) > 10 * sc.L or max(blk.chars) > sc.L ** ps.m:
        return Status.BAD
    other = "Y" if side == "X" else "X"
    dist = enumerate_block_distribution(j, ps, spec, caps.epsilon, side=other, max_blocks=caps.max_blocks)
    S = _exact_S(blk, j, dist, block_embed_oracle(spec, ps.R), side, caps.horizon_c, ps.R)
    verdict = is_semibad(blk, j, ps, S, good=False)
    return {Tri.YES: Status.SEMIBAD, Tri.NO: Status.BAD}.get(verdict, Status.UNKNOWN)


# ---------------------------------------------------------------------------
# extension and the explicit sequence

def extend_good_block(Xgood: Block, ps: ParameterSet, catalogs, spec: ProblemSpec, side: str = "X",
                      caps: CatalogCaps | None = None) -> Block:
    """A good level-``j+1`` block whose first sub-block is ``Xgood``.

    Fills the minimum mandated length with copies of one cataloged good
    block, trying fillers in lexicographic order.
    """
    caps = caps or CatalogCaps()
    j = Xgood.level
    if len(catalogs) <= j:
        raise ContractError(f"no catalog for level {j}")
    cat = catalogs[j]
    if not cat.semibad_complete:
        raise ContractError(f"level-{j} semi-bad catalog is incomplete; goodness one level up is undecidable")
    if Xgood.chars not in {b.chars for b in cat.good(side)}:
        raise ContractError("input block is not in the level's good list")
    sc = scales(ps, j)
    n = sc.L ** (ps.alpha - 1) + 2 * sc.L3
    ctx = LevelContext(ps, j, spec, cat)
    fillers = sorted(cat.good(side), key=lambda b: b.chars)
    for filler in fillers[:caps.max_extension_trials]:
        subs = [Xgood] + [filler] * (n - 1)
        blk = join_blocks(j + 1, subs, W=0, T=0, leftmost=True)
        if ctx.is_good(blk, side):
            return blk
    raise ResourceError(f"no good level-{j + 1} extension of length {n} found among "
                        f"{min(len(fillers), caps.max_extension_trials)} fillers "
                        "(the strong-window or the length and character conditions fail at this scale)")


def deterministic_sequence(J: int, ps: ParameterSet, spec: ProblemSpec, caps: CatalogCaps | None = None,
                           side: str = "X") -> tuple:
    """Characters of a level-``J`` block whose leading blocks are good at every level."""
    caps = caps or CatalogCaps()
    if J < 0:
        raise ContractError("J must be non-negative")
    catalogs = [list_level_catalog(0, ps, spec, caps)]
    goods = sorted(catalogs[0].good(side), key=lambda b: b.chars)
    if not goods:
        raise ResourceError("no good level-0 symbol")
    X = goods[0]
    for j in range(J):
        if j >= 1:
            catalogs.append(list_level_catalog(j, ps, spec, caps, prev=catalogs[j - 1]))
        X = extend_good_block(X, ps, catalogs, spec, side=side, caps=caps)
    return tuple(X.chars)
