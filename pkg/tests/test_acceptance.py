"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line with its timing."""

import itertools
import random
from fractions import Fraction

import numpy as np

from renorm_embed.blocks import LevelSampler, SymbolSampler, partition_sequence
from renorm_embed.classify import block_embed_oracle
from renorm_embed.construct import deterministic_sequence, list_level_catalog
from renorm_embed.core import get_profile, rng_stream, scales
from renorm_embed.deciders import (
    check_deletion_sets,
    compatible_bruteforce,
    compatible_holds,
    lipschitz_bruteforce_table,
    lipschitz_embed_greedy,
    rough_iso_verify,
)
from renorm_embed.encodings import (
    compatible_oracles,
    compatible_spec,
    decode_compatible,
    decode_lipschitz,
    decode_roughiso,
    encode_lipschitz,
    gap_encode,
    lipschitz_oracles,
    lipschitz_spec,
    realize_gaps,
    roughiso_constants,
    roughiso_oracles,
    roughiso_spec,
)
from renorm_embed.errors import ContractError, ScaleError
from renorm_embed.experiments import (
    compatibility_q_curve,
    good_fraction,
    length_moment,
    minimal_M_curve,
    tail_curve,
)
from renorm_embed.partmaps import (
    build_G_family,
    build_H1_family,
    build_H2,
    check_admissible,
    check_class_G,
    check_class_H1,
    check_class_H2,
    h2_step,
)
from renorm_embed.rembed import EmbedOracles, rembed_bruteforce, rembed_decide, rembed_verify

MINUTE = 60.0


def _bit_tuples(n):
    return [tuple((code >> k) & 1 for k in range(n)) for code in range(1 << n)]


def test_c01_lipschitz_greedy_vs_bruteforce(criterion):
    with criterion(1, "Lipschitz greedy = brute force, |X|<=6, |Y|<=12, M in {1,2,3}", MINUTE) as rep:
        checked = mismatches = 0
        for M in (1, 2, 3):
            for n in range(0, 7):
                xs = _bit_tuples(n)
                for ny in range(0, 13):
                    table = lipschitz_bruteforce_table(n, ny, M)
                    for yc, Y in enumerate(_bit_tuples(ny)):
                        row = table[yc]
                        for xc, X in enumerate(xs):
                            got = lipschitz_embed_greedy(X, Y, M) is not None
                            mismatches += got != bool(row[xc])
                            checked += 1
        rep.note(f"{checked} pairs, {mismatches} mismatches")
        assert mismatches == 0


def test_c02_rembed_vs_bruteforce(criterion):
    with criterion(2, "rembed_decide = brute force on 500 random pairs", MINUTE) as rep:
        o = compatible_oracles(1)
        rng = np.random.default_rng(2024)
        yes = 0
        for _ in range(500):
            q = rng.choice([0.1, 0.3, 0.5])
            X = (rng.random(rng.integers(1, 9)) < q).astype(int).tolist()
            Y = (rng.random(rng.integers(1, 9)) < q).astype(int).tolist()
            w = rembed_decide(X, Y, o)
            assert (w is not None) == rembed_bruteforce(X, Y, o), (X, Y)
            if w is not None:
                yes += 1
                assert rembed_verify(X, Y, w, o)
        rep.note(f"{yes} embeddings, {500 - yes} non-embeddings")


def test_c03_compatible_vs_bruteforce(criterion):
    with criterion(3, "compatibility DP = exhaustive deletion search on 500 random pairs", MINUTE) as rep:
        rng = np.random.default_rng(2025)
        yes = 0
        for _ in range(500):
            q = rng.choice([0.2, 0.4, 0.6])
            X = (rng.random(rng.integers(1, 9)) < q).astype(int).tolist()
            Y = (rng.random(rng.integers(1, 9)) < q).astype(int).tolist()
            got = compatible_holds(X, Y)
            assert got == compatible_bruteforce(X, Y), (X, Y)
            yes += got
        rep.note(f"{yes} compatible, {500 - yes} incompatible")


# ---------------------------------------------------------------------------
# criterion 4

MAPS = get_profile("micro-maps")
J = 1
SC = scales(MAPS, J)
L3 = SC.L3


def _g_instance(rnd):
    """Micro-feasible region: n in [16L^3, 32L^3], n'/n in [0.75, 1.33], |B|, |B'| <= 2, pairs 2L^3 apart."""
    while True:
        n = rnd.randrange(16 * L3, 32 * L3 + 1)
        n2 = int(n * rnd.uniform(0.75, 1.33))
        B = sorted(rnd.sample(range(L3 + 1, n - L3), rnd.randint(0, 2)))
        Bp = sorted(rnd.sample(range(L3 + 1, n2 - L3), rnd.randint(0, 2)))
        if all(abs(Fraction(b * n2, n) - c) >= 2 * L3 for b in B for c in Bp):
            return n, n2, B, Bp


def _g_full_instance(rnd):
    """Anywhere in the stated preconditions, with up to four bad indices per side."""
    lo = (1 - 2 ** -(J + 1.75)) / MAPS.R + 1e-3
    hi = MAPS.R * (1 + 2 ** -(J + 1.75)) - 1e-3
    n = rnd.randrange(2 * L3 + 10, 32 * L3 + 1)
    n2 = max(int(n * rnd.uniform(lo, hi)), 2 * L3 + 10)
    B = sorted(rnd.sample(range(L3 + 1, n - L3), rnd.randint(0, 4)))
    Bp = sorted(rnd.sample(range(L3 + 1, n2 - L3), rnd.randint(0, 4)))
    return n, n2, B, Bp


def _shift_identities(fam, B, Bp):
    t1 = [fam[0].tau(b) for b in B]
    u1 = [fam[0].tau_inv(c) for c in Bp]
    for h, gm in enumerate(fam, 1):
        if [gm.tau(b) for b in B] != [t + h - 1 for t in t1]:
            return False
        if [gm.tau_inv(c) for c in Bp] != [u - h + 1 for u in u1]:
            return False
    return True


def test_c04_construction_soundness(criterion):
    with criterion(4, "G/H1/H2 builders pass their predicates, shift identities and the H2 step claim",
                   5 * MINUTE) as rep:
        rnd = random.Random(4)
        for _ in range(100):
            n, n2, B, Bp = _g_instance(rnd)
            fam = build_G_family(n, n2, B, Bp, J, MAPS)
            assert len(fam) == SC.L ** 2
            assert all(check_admissible(g) and check_class_G(g, B, Bp, J, MAPS) for g in fam)
            assert _shift_identities(fam, B, Bp)
        for _ in range(100):
            n = rnd.randrange(16 * L3, 32 * L3 + 1)
            n2 = int(n * rnd.uniform(1 / MAPS.R, MAPS.R))
            B = sorted(rnd.sample(range(L3 + 1, n - L3), rnd.randint(0, MAPS.k0)))
            fam = build_H1_family(n, n2, B, J, MAPS)
            assert all(check_admissible(g) and check_class_H1(g, B, n2, J, MAPS) for g in fam)
            assert _shift_identities(fam, B, [])
        steps = []
        for _ in range(100):
            n = rnd.randrange(16 * L3, 32 * L3 + 1)
            n2 = int(n * rnd.uniform(0.75, 4 / 3))
            kmax = (n - 2 * L3) // (10 * SC.R_plus)
            B = sorted(rnd.sample(range(L3 + 1, n - L3), rnd.randint(0, kmax)))
            gm = build_H2(n, n2, B, J, MAPS)
            assert check_admissible(gm) and check_class_H2(gm, B, n2, J, MAPS)
            s = h2_step(n, n2, B, J, MAPS)[3]
            assert SC.R_minus <= s <= SC.R_plus - 1
            steps.append(s)
        rep.note(f"H2 steps in [{min(steps)}, {max(steps)}] within [{SC.R_minus}, {SC.R_plus - 1}]")
        fails = 0
        trials = 200
        for _ in range(trials):
            n, n2, B, Bp = _g_full_instance(rnd)
            try:
                build_G_family(n, n2, B, Bp, J, MAPS, count=4)
            except (ScaleError, ContractError):
                fails += 1
        rep.note(f"diagnostic: G builder refuses {fails}/{trials} instances over the full precondition region")


# ---------------------------------------------------------------------------
# criterion 5

def test_c05_decode_soundness(criterion):
    with criterion(5, "decoded maps pass their verifiers on 200 embedding instances per application",
                   5 * MINUTE) as rep:
        rng = np.random.default_rng(5)
        # Lipschitz
        M0, o = 12, lipschitz_oracles(1)
        done = tries = 0
        worst = 0
        while done < 200:
            tries += 1
            Xs = rng.integers(0, 2, rng.integers(1, 10)).tolist()
            Ys = rng.integers(0, 2, M0 * rng.integers(1, 10)).tolist()
            X, Y = encode_lipschitz(Xs, Ys, M0, 1)
            w = rembed_decide(X, Y, o)
            if w is None:
                continue
            d = decode_lipschitz(Xs, Ys, M0, w, 1)
            assert d.map.valid_for(Xs, Ys)
            worst = max(worst, d.M_achieved)
            done += 1
        rep.note(f"Lipschitz 200/{tries} embed, max achieved M {worst}")
        # rough isometry
        for M0 in (2, 3):
            o = roughiso_oracles(M0, 1)
            M, D, C = roughiso_constants(M0, 1)
            done = tries = 0
            while done < 100:
                tries += 1
                sx = rng.integers(0, M0 + 3, rng.integers(1, 9)).tolist()
                sy = rng.integers(0, M0 + 3, rng.integers(1, 9)).tolist()
                A, B = realize_gaps(sx, "random", rng), realize_gaps(sy, "random", rng)
                w = rembed_decide(gap_encode(A), gap_encode(B), o)
                if w is None:
                    continue
                T = decode_roughiso(A, B, w, M0, 1)
                assert (T.M, T.D, T.C) == (M, D, C)
                assert rough_iso_verify(A, B, T)
                done += 1
            rep.note(f"rough-iso M0={M0} 100/{tries} embed")
        # compatible sequences
        o = compatible_oracles(1)
        done = tries = 0
        while done < 200:
            tries += 1
            X = (rng.random(rng.integers(1, 14)) < 0.3).astype(int).tolist()
            Y = (rng.random(rng.integers(1, 14)) < 0.3).astype(int).tolist()
            w = rembed_decide(X, Y, o)
            if w is None:
                continue
            assert check_deletion_sets(X, Y, decode_compatible(X, Y, w), require_distinct=True)
            done += 1
        rep.note(f"compatible 200/{tries} embed")


def test_c06_base_case_formulas(criterion):
    with criterion(6, "exact base-case embedding probabilities", MINUTE):
        for q in (Fraction(1, 10), Fraction(3, 10), Fraction(1, 2)):
            assert compatible_spec(q).base_embedding_probability("X", 1) == (1 - q, 1 - q)
        for M0 in (2, 3):
            # with classes up to K = k + M0 listed, the relation window is complete and the sum telescopes
            for k in (M0 + 1, M0 + 2):
                exact = Fraction(1, 2 ** (2 ** (k - M0 - 1))) - Fraction(1, 2 ** (2 ** (k + M0)))
                lo, hi = roughiso_spec(M0, k + M0).base_embedding_probability("X", k)
                assert lo == exact and hi - lo == Fraction(1, 2 ** (2 ** (k + M0)))


def test_c07_estimate_three(criterion):
    with criterion(7, "good X embeds into good Y over level-0 and level-1 catalogs",
                   10 * MINUTE) as rep:
        ps = get_profile("micro-tiny")
        spec = compatible_spec(Fraction(1, 2 ** 24))
        c0 = list_level_catalog(0, ps, spec)
        c1 = list_level_catalog(1, ps, spec, prev=c0)
        assert c0.good_complete and c1.good_complete
        embeds = block_embed_oracle(spec, ps.R)
        pairs = 0
        for cat in (c0, c1):
            for X in cat.good_x:
                for Y in cat.good_y:
                    assert embeds(X, Y), (X.chars, Y.chars)
                    pairs += 1
        rep.note(f"{pairs} pairs (level 0: {len(c0.good_x)}x{len(c0.good_y)}, "
                 f"level 1: {len(c1.good_x)}x{len(c1.good_y)})")


def test_c08_estimate_five_base(criterion):
    with criterion(8, "all-good segments at j=0 compress and expand", MINUTE) as rep:
        specs = [compatible_spec(Fraction(1, 10)), lipschitz_spec(8, 1), roughiso_spec(2, 6)]
        count = 0
        for spec in specs:
            o = EmbedOracles.from_spec(spec, 1)
            R0, lo, hi = o.R0, o.R0_minus, o.R0_plus
            gx, gy = sorted(spec.good_x), sorted(spec.good_y)
            for t in range(lo, hi + 1):
                for X in itertools.product(gx, repeat=R0):
                    for Y in itertools.product(gy, repeat=t):
                        assert rembed_decide(X, Y, o) is not None
                        count += 1
                for X in itertools.product(gx, repeat=t):
                    for Y in itertools.product(gy, repeat=R0):
                        assert rembed_decide(X, Y, o) is not None
                        count += 1
        rep.note(f"{count} segment pairs, R0={R0}, t in [{lo}, {hi}]")


def test_c09_block_structure(criterion):
    with criterion(9, "sampled level-1 blocks end (and begin) with L0^3 good sub-blocks", MINUTE) as rep:
        ps = get_profile("micro")
        spec = compatible_spec(Fraction(1, 50))
        base = SymbolSampler(spec, "X")
        sampler = LevelSampler(base, ps, 1)
        L3 = scales(ps, 0).L3
        lengths = []
        for t in range(1000):
            b = sampler(rng_stream(9, t))
            good = base.good_mask[np.frombuffer(b.chars, dtype=np.uint8)]
            assert good[-L3:].all() and good[:L3].all()
            lengths.append(len(b.chars))
        # blocks cut from one long sequence: the leftmost need not start with good symbols
        seq = base.draw(rng_stream(9, 10 ** 6), 200_000)
        levels = partition_sequence(seq, ps, 1, [base.is_good], seed=9).levels[1]
        for k, b in enumerate(levels):
            good = base.good_mask[np.frombuffer(b.chars, dtype=np.uint8)]
            assert good[-L3:].all()
            if k > 0:
                assert good[:L3].all()
        rep.note(f"1000 sampled blocks, lengths {min(lengths)}..{max(lengths)}; {len(levels)} partitioned blocks")


def test_c10_direction_checks(criterion):
    with criterion(10, "empirical directions: minimal M, compatibility in q, length tails", 10 * MINUTE) as rep:
        res = minimal_M_curve([10, 40], [2], 10_000, seed=7)
        p10, p40 = res.column("estimate")
        rep.note(f"M=2: P(10)={p10:.4f} P(40)={p40:.4f}")
        assert p40 < p10
        qs = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
        est = compatibility_q_curve(qs, 50, 10_000, seed=7).column("estimate")
        rep.note("compatibility n=50: " + " ".join(f"{e:.3f}" for e in est))
        assert all(a >= b for a, b in zip(est, est[1:])) and est[0] == 1.0 and est[-1] == 0.0
        lm = length_moment(1, get_profile("micro"), compatible_spec(Fraction(1, 50)), 10_000, seed=7)
        for _, x, e, lo, hi, ref in lm.rows[1:]:
            assert e <= ref + 2 * (hi - lo), (x, e, ref)
        rep.note("length tails " + " ".join(f"x={x:g}:{e:.4f}<=e^-x" for _, x, e, _, _, _ in lm.rows[1:])
                 + f"; moment {lm.rows[0][2]:.3f} (reference 1, reported only)")


def test_c11_determinism(criterion):
    with criterion(11, "catalog, construct and seeded experiments are byte-identical across runs",
                   5 * MINUTE):
        ps = get_profile("micro-tiny")
        spec = compatible_spec(Fraction(1, 2 ** 24))

        def catalogs():
            c0 = list_level_catalog(0, ps, spec)
            return c0.to_json() + list_level_catalog(1, ps, spec, prev=c0).to_json()

        assert catalogs() == catalogs()
        assert deterministic_sequence(1, ps, spec) == deterministic_sequence(1, ps, spec)
        q50 = compatible_spec(Fraction(1, 50))
        runs = [
            lambda: tail_curve(1, ps, q50, 20, [0.5, 0.9], seed=11, inner_trials=30),
            lambda: tail_curve(0, ps, compatible_spec(Fraction(3, 10)), 500, [0.7], seed=11),
            lambda: length_moment(1, get_profile("micro"), q50, 500, seed=11),
            lambda: good_fraction(1, ps, compatible_spec(0), 200, seed=11),
            lambda: minimal_M_curve([10, 20], [1, 2, 3], 300, seed=11),
            lambda: compatibility_q_curve([0.1, 0.3], 50, 300, seed=11),
        ]
        for run in runs:
            a, b = run(), run()
            assert a.to_csv() == b.to_csv() and a.descriptor_json() == b.descriptor_json()
