from fractions import Fraction

import numpy as np
import pytest

from renorm_embed.blocks import Block, LevelSampler, SymbolSampler, symbol_block
from renorm_embed.classify import (BlockDistribution, ProbInterval, Status, Tri, block_embed_oracle,
                                   embedding_prob_exact, embedding_prob_mc, enumerate_block_distribution, is_good,
                                   is_semibad, is_strong, semibad_threshold, strong_fraction)
from renorm_embed.core import get_profile, rng_stream, scales
from renorm_embed.encodings import compatible_spec, lipschitz_spec, roughiso_spec
from renorm_embed.errors import ContractError
from renorm_embed.rembed import rembed_holds

MICRO = get_profile("micro")
TINY = get_profile("micro-tiny")


def test_level0_distributions():
    q = Fraction(1, 3)
    d = enumerate_block_distribution(0, MICRO, compatible_spec(q), Fraction(1, 100))
    assert [(b.chars[0], w) for b, w in d.entries] == [(0, 1 - q), (1, q)]
    assert d.mass_deficit == 0
    d = enumerate_block_distribution(0, MICRO, lipschitz_spec(8, 1), Fraction(1, 100), side="Y")
    assert d.total() == 1


def test_level1_distribution_mass():
    eps = Fraction(1, 2 ** 20)
    d = enumerate_block_distribution(1, TINY, compatible_spec(Fraction(1, 2 ** 32)), eps)
    assert d.total() >= 1 - eps
    assert d.total() + d.mass_deficit == 1
    assert all(w > 0 for _, w in d.entries)
    L3 = TINY.L0 ** 3
    for b, _ in d.entries:
        assert set(b.chars[-L3:]) == {0} and set(b.chars[:L3]) == {0}


def test_exact_S_level0():
    for q in (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2)):
        spec = compatible_spec(q)
        d = enumerate_block_distribution(0, MICRO, spec, Fraction(1, 2))
        S = embedding_prob_exact(symbol_block(1), 0, d, block_embed_oracle(spec, 1))
        assert S.lo == S.hi == 1 - q


def test_exact_S_roughiso():
    for M0 in (2, 3):
        spec = roughiso_spec(M0, M0 + 8)
        d = enumerate_block_distribution(0, MICRO, spec, Fraction(1, 2), side="Y")
        for k in (M0 + 1, M0 + 2):
            S = embedding_prob_exact(symbol_block(k), 0, d, block_embed_oracle(spec, 1))
            exact = Fraction(1, 2 ** (2 ** (k - M0 - 1))) - Fraction(1, 2 ** (2 ** (k + M0)))
            assert S.lo <= exact <= S.hi
            assert S.hi - S.lo <= d.mass_deficit


def test_exact_S_all_related():
    d = BlockDistribution(0, "Y", ((symbol_block(0), Fraction(1, 2)), (symbol_block(1), Fraction(1, 2))), Fraction(0))
    S = embedding_prob_exact(symbol_block(0), 0, d, lambda x, y: True)
    assert S.lo == S.hi == 1


def test_mc_intervals():
    d = symbol_block(0)
    samp = lambda rng: d
    S = embedding_prob_mc(d, 0, samp, 1000, rng_stream(1, 0), lambda x, y: True)
    assert S.lo >= Fraction(99, 100)
    S = embedding_prob_mc(d, 0, samp, 1000, rng_stream(1, 0), lambda x, y: False)
    assert S.hi <= Fraction(1, 100)
    spec = compatible_spec(Fraction(3, 10))
    ysamp = SymbolSampler(spec, "Y")
    S = embedding_prob_mc(symbol_block(1), 0, ysamp, 10 ** 4, rng_stream(1, 0), block_embed_oracle(spec, 1))
    assert S.contains(Fraction(7, 10))


def test_clopper_pearson_exact_coverage():
    # coverage of the interval itself, summed over the binomial law: no sampling noise
    from scipy.stats import binom
    from renorm_embed.classify import clopper_pearson
    for n, p in ((200, 0.7), (50, 0.1), (1000, 0.98)):
        cov = sum(binom.pmf(k, n, p) for k in range(n + 1)
                  if clopper_pearson(k, n)[0] <= p <= clopper_pearson(k, n)[1])
        assert cov >= 0.95


def test_mc_covers_exact():
    # 100 seeded runs; the count is binomial around >= 95, so allow two standard deviations
    spec = compatible_spec(Fraction(3, 10))
    ysamp = SymbolSampler(spec, "Y")
    emb = block_embed_oracle(spec, 1)
    covered = sum(embedding_prob_mc(symbol_block(1), 0, ysamp, 200, rng_stream(2, t), emb).contains(Fraction(7, 10))
                  for t in range(100))
    assert covered >= 91


def test_prob_interval_clamped():
    iv = ProbInterval(Fraction(-1, 10), Fraction(11, 10), "exact-truncated")
    assert 0 <= iv.lo <= iv.hi <= 1


def test_is_semibad_rules():
    S = ProbInterval(Fraction(1), Fraction(1), "exact-truncated")
    assert is_semibad(symbol_block(1), 0, MICRO, S, good=True) is Tri.NO
    long = Block(1, bytes(10 * 64 + 1))
    assert is_semibad(long, 1, MICRO, S, good=False) is Tri.NO
    thr = semibad_threshold(MICRO, 0)
    assert is_semibad(symbol_block(1), 0, MICRO, ProbInterval(thr, thr, "x"), good=False) is Tri.YES
    below = thr - Fraction(1, 10 ** 6)
    assert is_semibad(symbol_block(1), 0, MICRO, ProbInterval(below, below, "x"), good=False) is Tri.NO
    assert is_semibad(symbol_block(1), 0, MICRO, ProbInterval(below, 1, "x"), good=False) is Tri.UNKNOWN
    # the character condition at level 0: symbol index above L_0^m
    big = symbol_block(255)
    assert is_semibad(big, 0, get_profile("micro-tiny").replace(m=1), S, good=False) is Tri.NO


def test_is_semibad_definite_on_enumerated_level1():
    spec = compatible_spec(Fraction(1, 2 ** 24))
    dy = enumerate_block_distribution(1, TINY, spec, Fraction(1, 2 ** 12), side="Y")
    dx = enumerate_block_distribution(1, TINY, spec, Fraction(1, 2 ** 12), side="X")
    emb = block_embed_oracle(spec, TINY.R)
    verdicts = []
    for b, _ in dx.entries[:40]:
        S = embedding_prob_exact(b, 1, dy, emb)
        verdicts.append(is_semibad(b, 1, TINY, S, good=False))
    assert Tri.UNKNOWN not in verdicts


def test_is_strong():
    emb = lambda x, y: x.chars[0] != 1 or y.chars[0] != 1
    Y1 = [symbol_block(0)]
    assert is_strong(Y1, 0, MICRO, [], emb)
    assert is_strong(Y1, 0, MICRO, [symbol_block(1)], emb)
    assert not is_strong([symbol_block(1)], 0, MICRO, [symbol_block(1)], emb)
    with pytest.raises(ContractError):
        is_strong(Y1, 0, MICRO, [], emb, complete=False)


def test_is_strong_matches_recount():
    rng = np.random.default_rng(12)
    spec = compatible_spec(Fraction(1, 5))
    emb = block_embed_oracle(spec, 1)
    sb = [symbol_block(1)]
    frac = strong_fraction(MICRO, 0)
    for _ in range(100):
        win = [symbol_block(int(c)) for c in (rng.random(rng.integers(1, 40)) < 0.02)]
        hits = [sum(emb(x, y) for y in win) for x in sb]
        assert is_strong(win, 0, MICRO, sb, emb) == all(h >= frac * len(win) for h in hits)


def _block(n):
    return Block(1, bytes(n))


def test_is_good_conditions():
    sc = scales(MICRO, 0)
    n = sc.L ** 2 + 2 * sc.L ** 3
    yes = lambda s, e: True
    assert is_good(_block(n), 1, MICRO, [Status.GOOD] * n, yes)
    st = [Status.SEMIBAD] * (MICRO.k0 + 1) + [Status.GOOD] * (n - MICRO.k0 - 1)
    assert not is_good(_block(n), 1, MICRO, st, yes)
    st = [Status.SEMIBAD] * MICRO.k0 + [Status.GOOD] * (n - MICRO.k0)
    assert is_good(_block(n), 1, MICRO, st, yes)
    st = [Status.BAD] + [Status.GOOD] * (n - 1)
    assert not is_good(_block(n), 1, MICRO, st, yes)
    big = sc.L ** (MICRO.alpha - 1) + sc.L ** 5
    assert is_good(_block(big), 1, MICRO, [Status.GOOD] * big, yes)
    assert not is_good(_block(big + 1), 1, MICRO, [Status.GOOD] * (big + 1), yes)
    assert not is_good(_block(n), 1, MICRO, [Status.GOOD] * n, lambda s, e: s != 5)
    with pytest.raises(ContractError):
        is_good(_block(n), 1, MICRO, [Status.UNKNOWN] + [Status.GOOD] * (n - 1), yes)


def test_block_oracle_length_pruning_is_exact():
    spec = compatible_spec(Fraction(1, 10))
    emb = block_embed_oracle(spec, 1)
    o = spec.oracles(1)
    rng = np.random.default_rng(13)
    for _ in range(200):
        x = (rng.random(rng.integers(1, 10)) < 0.2).astype(np.uint8)
        y = (rng.random(rng.integers(1, 25)) < 0.2).astype(np.uint8)
        assert emb(Block(1, x.tobytes()), Block(1, y.tobytes())) == rembed_holds(list(x), list(y), o)


def test_level_sampler_end_goodness_tiny():
    s = SymbolSampler(compatible_spec(Fraction(1, 20)))
    ls = LevelSampler(s, TINY, 1)
    for t in range(50):
        b = ls(rng_stream(14, t))
        assert set(b.chars[-8:]) == {0}
