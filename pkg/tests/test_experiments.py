import csv
import io
import itertools
import json
import math
from fractions import Fraction

import pytest

from renorm_embed.core import get_profile, scales
from renorm_embed.encodings import (
    StarClass,
    classify_word,
    compatible_spec,
    lipschitz_spec,
    roughiso_spec,
    word_class_counts,
)
from renorm_embed.errors import ContractError
from renorm_embed.experiments import (
    EXPERIMENTS,
    compatibility_q_curve,
    good_fraction,
    length_moment,
    minimal_M_curve,
    tail_curve,
)

MICRO = get_profile("micro")
TINY = get_profile("micro-tiny")


def test_tail_two_point_compatible():
    res = tail_curve(0, MICRO, compatible_spec(Fraction(3, 10)), 2000, [0.5, 0.69, 0.7, 1.0], seed=3)
    est = dict(zip(res.column("p"), res.column("estimate")))
    assert est[0.5] == 0 and est[0.69] == 0 and est[1.0] == 1
    row = res.rows[2]
    assert row[2] <= 0.3 <= row[3]


def test_tail_roughiso_matches_exact():
    spec = roughiso_spec(2, 6)
    S = [spec.base_embedding_probability("X", k)[0] for k in range(7)]
    mu = spec.mu("X")
    grid = sorted(set(float(s) for s in S))[:-1]
    res = tail_curve(0, MICRO, spec, 4000, grid, seed=11)
    for p, est, lo, hi, _ in res.rows:
        exact = sum(m for m, s in zip(mu, S) if s <= p) / sum(mu)
        assert lo <= float(exact) <= hi


def test_tail_level1_reproducible():
    spec = compatible_spec(Fraction(1, 50))
    a = tail_curve(1, TINY, spec, 5, [0.5, 0.99], seed=4, inner_trials=20)
    b = tail_curve(1, TINY, spec, 5, [0.5, 0.99], seed=4, inner_trials=20)
    assert a.to_csv() == b.to_csv()
    assert a.params["inner_trials"] == 20
    ref = a.column("reference")
    sc = scales(TINY, 1)
    assert ref[0] == pytest.approx(0.5 ** float(sc.m_j) * sc.L ** -TINY.beta)


def test_length_moment_degenerate():
    res = length_moment(1, TINY, compatible_spec(0), 20, seed=1, fixed_W=0)
    sc0, sc1 = scales(TINY, 0), scales(TINY, 1)
    n = sc0.L ** (TINY.alpha - 1) + 2 * sc0.L3
    expected = math.exp((n - 1.5 * sc1.L) / sc0.L ** 6)
    row = res.rows[0]
    assert row[0] == "moment" and row[2] == expected and row[3] == row[4] == expected
    assert res.rows[1][0] == "tail" and res.rows[1][5] == math.exp(-1)


def test_length_moment_micro_level1():
    res = length_moment(1, MICRO, compatible_spec(Fraction(1, 50)), 300, seed=2)
    moment = res.rows[0]
    assert moment[3] <= moment[2] <= moment[4]
    for _, x, est, lo, hi, ref in res.rows[1:]:
        assert lo <= est <= hi and ref == math.exp(-x)
    with pytest.raises(ContractError):
        length_moment(0, MICRO, compatible_spec(0), 5, seed=1)


def test_good_fraction_q0():
    res = good_fraction(0, TINY, compatible_spec(0), 50, seed=5)
    assert res.rows[0][:2] == ("good", 1.0)
    assert res.rows[1][:2] == ("unknown", 0.0)
    assert res.rows[0][4] == 1 - float(scales(TINY, 0).L) ** -TINY.delta


def test_good_fraction_q0_level1_length_bound():
    # all symbols are good, so only the length condition can fail: n = 18 + W <= 34 sub-blocks
    res = good_fraction(1, TINY, compatible_spec(0), 400, seed=5)
    _, est, lo, hi, _ = res.rows[0]
    exact = 1 - (15 / 16) ** 17
    assert lo <= exact <= hi
    assert res.rows[1][1] == 0.0


def test_word_counts_match_enumeration():
    for M0, R in ((8, 1), (12, 1), (10, 2)):
        counts = [0, 0, 0]
        for w in itertools.product((0, 1), repeat=M0):
            counts[classify_word(w, R)] += 1
        assert tuple(counts) == word_class_counts(M0, R)


def test_good_fraction_lipschitz_y():
    spec = lipschitz_spec(16, 1)
    exact = word_class_counts(16, 1)[StarClass.STAR] / 2 ** 16
    res = good_fraction(0, MICRO, spec, 3000, seed=6, side="Y")
    _, est, lo, hi, _ = res.rows[0]
    assert lo <= exact <= hi


def test_minimal_M_small():
    res = minimal_M_curve([1, 10, 40], [1, 2], 400, seed=7)
    est = {(n, M): e for n, M, e, _, _ in res.rows}
    # at n = 1 and M = 1 the two bits must agree
    row = [r for r in res.rows if r[:2] == (1, 1)][0]
    assert row[3] <= 0.5 <= row[4]
    assert est[(40, 2)] <= est[(10, 2)]
    for n in (1, 10, 40):
        assert est[(n, 1)] <= est[(n, 2)] + 0.1


def test_compatibility_endpoints_and_trend():
    res = compatibility_q_curve([0.0, 0.1, 0.3, 0.6, 1.0], 50, 300, seed=8)
    est = res.column("estimate")
    assert est[0] == 1.0 and est[-1] == 0.0
    assert all(a >= b for a, b in zip(est, est[1:]))


def test_csv_and_sidecar(tmp_path):
    res = minimal_M_curve([10, 20, 40], [1, 2, 3], 50, seed=7)
    text = res.to_csv()
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["n", "M", "estimate", "lo", "hi"] and len(rows) == 10
    path, side = res.write(tmp_path / "curve.csv")
    assert open(path).read() == text
    desc = json.loads(open(side).read())
    assert desc["name"] == "minimal-M" and desc["seed"] == 7 and desc["trials"] == 50
    again = minimal_M_curve([10, 20, 40], [1, 2, 3], 50, seed=7)
    assert again.to_csv() == text and again.descriptor_json() == res.descriptor_json()
    assert minimal_M_curve([10, 20, 40], [1, 2, 3], 50, seed=8).to_csv() != text


def test_registry():
    assert set(EXPERIMENTS) == {"tail", "length", "good-fraction", "minimal-M", "compatibility"}
