"""Sample level-1 blocks, cut a sequence into a hierarchy and list the level-1 catalog.

Run with ``python3 demos/blocks_and_catalogs.py``; the catalog step takes about ten seconds.
"""

from fractions import Fraction

from renorm_embed.blocks import LevelSampler, SymbolSampler, partition_sequence
from renorm_embed.construct import deterministic_sequence, list_level_catalog
from renorm_embed.core import get_profile, rng_stream
from renorm_embed.encodings import compatible_spec

micro = get_profile("micro")
spec = compatible_spec(Fraction(1, 50))
base = SymbolSampler(spec, "X")
sampler = LevelSampler(base, micro, 1)
for t in range(3):
    b = sampler(rng_stream(1, t))
    print(f"level-1 block {t}: {len(b.chars)} symbols, {sum(b.chars)} ones, W={b.W}")

seq = base.draw(rng_stream(1, 100), 20_000)
h = partition_sequence(seq, micro, 1, [base.is_good], seed=1)
print("partition of 20000 symbols:", len(h.levels[1]), "level-1 blocks, coarsens:", h.coarsens())

tiny = get_profile("micro-tiny")
rare = compatible_spec(Fraction(1, 2 ** 24))
c0 = list_level_catalog(0, tiny, rare)
c1 = list_level_catalog(1, tiny, rare, prev=c0)
print("micro-tiny level-1 good blocks:", sorted(len(b.chars) for b in c1.good_x))
print("semi-bad search complete:", c1.semibad_complete)
print("explicit sequence good at levels 0 and 1:", "".join(map(str, deterministic_sequence(1, tiny, rare))))
