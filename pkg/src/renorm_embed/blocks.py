"""Recursive block construction: sampling single blocks and partitioning sequences.

A level-(j+1) block is a run of level-j sub-blocks: ``L^3`` good ones, then
``L^(alpha-1)`` more, then a geometric number ``W`` of extra ones, and then
the scan continues until the first run of ``2 L^3`` good sub-blocks; the
block ends in the middle of that run.  Here ``L = L_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import ParameterSet, ProblemSpec, rng_stream, scales
from .errors import ContractError, ResourceError

DEFAULT_HORIZON = 10 ** 6


@dataclass(frozen=True)
class Block:
    """A level-j block.

    ``chars`` holds the symbol indices of its span.  Level-1 sub-blocks are
    its characters; from level 2 on the sub-blocks are kept in ``sub``.
    Equality looks at level, characters and sub-block structure only.
    """

    level: int
    chars: bytes
    sub: tuple | None = None
    W: int | None = field(default=None, compare=False)
    T: int | None = field(default=None, compare=False)
    leftmost: bool = field(default=False, compare=False)
    start: int = field(default=0, compare=False)

    def __post_init__(self):
        if not isinstance(self.chars, bytes):
            object.__setattr__(self, "chars", bytes(self.chars))
        if self.level == 0 and len(self.chars) != 1:
            raise ContractError("a level-0 block is a single character")
        if self.level >= 2 and self.sub is None:
            raise ContractError("blocks above level 1 need their sub-blocks")

    @property
    def end(self) -> int:
        return self.start + len(self.chars)

    @property
    def n_sub(self) -> int:
        if self.level == 0:
            return 0
        if self.level == 1:
            return len(self.chars)
        return len(self.sub)

    def subblocks(self) -> tuple:
        if self.level == 0:
            return ()
        if self.level == 1:
            return tuple(Block(0, self.chars[k:k + 1], start=self.start + k) for k in range(len(self.chars)))
        return self.sub

    def boundaries(self) -> tuple:
        """Character offsets (relative to the block) where sub-blocks end."""
        if self.level <= 1:
            return tuple(range(1, self.n_sub + 1))
        out, acc = [], 0
        for b in self.sub:
            acc += len(b.chars)
            out.append(acc)
        return tuple(out)


def symbol_block(symbol: int, start: int = 0) -> Block:
    return Block(0, bytes([symbol]), start=start)


def block_length(b: Block) -> int:
    """Number of characters in the block's span."""
    return len(b.chars)


def join_blocks(level: int, subs: Sequence[Block], **kw) -> Block:
    chars = b"".join(s.chars for s in subs)
    return Block(level, chars, sub=tuple(subs) if level >= 2 else None, **kw)


# ---------------------------------------------------------------------------
# samplers

class SymbolSampler:
    """Draws level-0 blocks from one side of a problem spec.

    A non-zero tail deficit is ignored and the listed masses renormalised; the
    deficit is reported in ``ignored_tail``.
    """

    level = 0

    def __init__(self, spec: ProblemSpec, side: str = "X"):
        mu = np.array([float(p) for p in spec.mu(side)], dtype=float)
        self.ignored_tail = spec.tail(side)
        self.p = mu / mu.sum()
        good = sorted(spec.good(side))
        self.good_mask = np.zeros(len(mu), dtype=bool)
        self.good_mask[good] = True
        gmass = mu[self.good_mask].sum()
        self.p_good = np.where(self.good_mask, mu, 0.0) / gmass if gmass > 0 else None
        self.size = len(mu)

    def draw(self, rng, size: int) -> np.ndarray:
        return rng.choice(self.size, size=size, p=self.p).astype(np.uint8)

    def draw_good(self, rng, size: int) -> np.ndarray:
        if self.p_good is None:
            raise ResourceError("no good symbol has positive probability")
        return rng.choice(self.size, size=size, p=self.p_good).astype(np.uint8)

    def __call__(self, rng, good: bool = False) -> Block:
        return symbol_block(int((self.draw_good if good else self.draw)(rng, 1)[0]))

    def is_good(self, b: Block) -> bool:
        return bool(self.good_mask[b.chars[0]])


def draw_geometric(rng, p_den: int) -> int:
    """W with P(W = k) = p (1-p)^k, p = 1/p_den, support {0, 1, ...}."""
    return int(rng.geometric(1.0 / p_den)) - 1


def sample_block(j1: int, sampler, good_oracle: Callable[[Block], bool] | None, ps: ParameterSet, rng,
                 horizon: int = DEFAULT_HORIZON, W: int | None = None) -> Block:
    """Draw one level-``j1`` block from level-``j1-1`` sub-blocks.

    ``sampler(rng, good)`` yields a sub-block, conditioned good when asked.
    For level-1 blocks over a :class:`SymbolSampler` the scan is vectorised.
    """
    if j1 < 1:
        raise ContractError("target level must be at least 1")
    sc = scales(ps, j1 - 1)
    L = sc.L
    L3 = L ** 3
    a = L3 + L ** (ps.alpha - 1)
    if W is None:
        W = draw_geometric(rng, L ** 4)
    if isinstance(sampler, SymbolSampler) and j1 == 1:
        return _sample_level1(sampler, rng, L3, a, W, horizon)
    if good_oracle is None:
        good_oracle = getattr(sampler, "is_good")
    subs = [sampler(rng, True) for _ in range(L3)]
    flags = [True] * L3
    run = L3
    need = 2 * L3
    k = L3 - 1
    while True:
        if run >= need and k - need + 1 >= a + W:
            l = k - need + 1
            break
        if len(subs) > horizon:
            raise ResourceError(f"no run of {need} good level-{j1 - 1} blocks within {horizon} sub-blocks; "
                                "good-block probability too low at these parameters")
        b = sampler(rng, False)
        g = bool(good_oracle(b))
        subs.append(b)
        flags.append(g)
        run = run + 1 if g else 0
        k += 1
    body = subs[:l + L3]
    return join_blocks(j1, body, W=W, T=l - a)


def _sample_level1(sampler: SymbolSampler, rng, L3, a, W, horizon) -> Block:
    need = 2 * L3
    seq = sampler.draw_good(rng, L3)
    chunk = max(4096, 2 * (a + W + need))
    seq = np.concatenate([seq, sampler.draw(rng, chunk)])
    lo = a + W
    while True:
        g = sampler.good_mask[seq].astype(np.int64)
        cs = np.concatenate(([0], np.cumsum(g)))
        last = len(seq) - need
        if last >= lo:
            starts = np.arange(lo, last + 1)
            ok = (cs[starts + need] - cs[starts]) == need
            hit = np.flatnonzero(ok)
            if hit.size:
                l = int(starts[hit[0]])
                break
        if len(seq) > horizon + need:
            raise ResourceError(f"no run of {need} good characters within {horizon} characters; "
                                "good-symbol probability too low at these parameters")
        seq = np.concatenate([seq, sampler.draw(rng, len(seq))])
    return Block(1, seq[:l + L3].tobytes(), W=W, T=l - a)


class LevelSampler:
    """Sampler of level-``j`` blocks built recursively from a symbol sampler."""

    def __init__(self, base: SymbolSampler, ps: ParameterSet, level: int,
                 good_oracles: Sequence[Callable[[Block], bool]] = (), horizon: int = DEFAULT_HORIZON,
                 max_rejections: int = 10 ** 5, fixed_W: int | None = None):
        """``fixed_W`` pins the geometric offset of the top level (the degenerate ``W = 0`` law)."""
        if level < 0:
            raise ContractError("level must be non-negative")
        self.base, self.ps, self.level, self.horizon = base, ps, level, horizon
        self.good_oracles = list(good_oracles) or [base.is_good]
        if level >= 1 and len(self.good_oracles) < level:
            raise ContractError(f"sampling level {level} needs good oracles for levels 0..{level - 1}")
        self.inner = None if level == 0 else LevelSampler(base, ps, level - 1, self.good_oracles, horizon)
        self.max_rejections = max_rejections
        self.fixed_W = fixed_W

    def __call__(self, rng, good: bool = False) -> Block:
        for _ in range(self.max_rejections):
            b = self.draw(rng)
            if not good or self.is_good(b):
                return b
        raise ResourceError(f"no good level-{self.level} block in {self.max_rejections} draws")

    def draw(self, rng) -> Block:
        if self.level == 0:
            return self.base(rng)
        return sample_block(self.level, self.inner if self.level > 1 else self.base,
                            self.good_oracles[self.level - 1], self.ps, rng, self.horizon, W=self.fixed_W)

    def is_good(self, b: Block) -> bool:
        if len(self.good_oracles) <= self.level:
            raise ContractError(f"no good oracle supplied for level {self.level}")
        return bool(self.good_oracles[self.level](b))


# ---------------------------------------------------------------------------
# hierarchies

@dataclass(frozen=True)
class BlockHierarchy:
    levels: tuple  # levels[j] is a tuple of level-j Blocks

    def coarsens(self) -> bool:
        """Every boundary of level j+1 is a boundary of level j."""
        for lo, hi in zip(self.levels, self.levels[1:]):
            fine = {b.end for b in lo} | {b.start for b in lo}
            if any(b.start not in fine or b.end not in fine for b in hi):
                return False
        return True

    def to_text(self) -> str:
        lines = []
        for j, blocks in enumerate(self.levels):
            lines.append(f"[level {j}]")
            for b in blocks:
                w = "-" if b.W is None else str(b.W)
                t = "-" if b.T is None else str(b.T)
                lines.append(f"{b.start} {b.end} {w} {t}")
        return "\n".join(lines) + "\n"


def partition_sequence(chars: Sequence[int], ps: ParameterSet, J: int,
                       good_oracles: Sequence[Callable[[Block], bool]], seed: int = 0,
                       w_source: Callable[[int, int], int] | None = None) -> BlockHierarchy:
    """Cut a character sequence into blocks of levels 0..J.

    ``good_oracles[j]`` classifies level-j blocks.  The geometric draws come
    from the stream ``(seed, level)`` unless ``w_source(level, index)`` is
    given.  An incomplete trailing block at any level is dropped.
    """
    if J < 0:
        raise ContractError("J must be non-negative")
    if len(good_oracles) < J:
        raise ContractError(f"good oracles needed for levels 0..{J - 1}")
    cur = tuple(symbol_block(int(c), start=k) for k, c in enumerate(chars))
    levels = [cur]
    for j1 in range(1, J + 1):
        sc = scales(ps, j1 - 1)
        L3 = sc.L ** 3
        a = L3 + sc.L ** (ps.alpha - 1)
        need = 2 * L3
        oracle = good_oracles[j1 - 1]
        if j1 == 1:
            # level-0 goodness depends only on the symbol
            memo = {c: bool(oracle(symbol_block(c))) for c in set(int(b.chars[0]) for b in cur)}
            good = np.array([memo[b.chars[0]] for b in cur], dtype=np.int64)
        else:
            good = np.array([bool(oracle(b)) for b in cur], dtype=np.int64)
        cs = np.concatenate(([0], np.cumsum(good)))
        last = len(cur) - need
        # next_run[s]: first start >= s of a run of `need` good blocks (len(cur) if none)
        next_run = np.full(max(last + 2, 1), len(cur), dtype=np.int64)
        if last >= 0:
            starts = np.arange(last + 1)
            ok = np.where(cs[starts + need] - cs[starts] == need, starts, len(cur))
            next_run[:last + 1] = np.minimum.accumulate(ok[::-1])[::-1]
        rng = rng_stream(seed, (7, j1))
        out = []
        pos = 0
        while True:
            W = w_source(j1, len(out)) if w_source is not None else draw_geometric(rng, sc.L ** 4)
            lo = pos + a + W
            if lo > last:
                break
            hit = int(next_run[lo])
            if hit > last:
                break
            l = hit - pos
            body = cur[pos:pos + l + L3]
            out.append(join_blocks(j1, body, W=W, T=l - a, leftmost=not out, start=body[0].start))
            pos += l + L3
        if not out:
            raise ResourceError(f"sequence of {len(chars)} characters is too short to complete a level-{j1} block")
        cur = tuple(out)
        levels.append(cur)
    return BlockHierarchy(tuple(levels))
