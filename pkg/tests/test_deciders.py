from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renorm_embed.deciders import (DeletionSets, RoughIsoMap, check_deletion_sets, compatible_bruteforce,
                                   compatible_decide, lipschitz_bruteforce_table, lipschitz_embed_bruteforce,
                                   lipschitz_embed_greedy, rough_iso_search, rough_iso_verify)
from renorm_embed.errors import ContractError, ResourceError


def test_lipschitz_examples():
    assert lipschitz_embed_greedy([0, 1], [0, 0, 1], 2, 2).phi == (1, 3)
    assert lipschitz_embed_greedy([1], [0, 0], 2, 2) is None
    assert lipschitz_embed_greedy([0, 0, 0], [0, 1, 0, 1, 0], 2, 2).phi == (1, 3, 5)
    assert lipschitz_embed_bruteforce([1, 0], [1, 0], 1, 1) is True
    for X, Y in (([0, 1], [0, 0, 1]), ([1], [0, 0]), ([0, 0, 0], [0, 1, 0, 1, 0])):
        assert lipschitz_embed_bruteforce(X, Y, 2, 2) == (lipschitz_embed_greedy(X, Y, 2, 2) is not None)


def test_lipschitz_map_invariants():
    phi = lipschitz_embed_greedy([0, 1, 1, 0], [1, 0, 1, 1, 0, 0], 2, 2)
    assert phi.valid_for([0, 1, 1, 0], [1, 0, 1, 1, 0, 0])
    assert phi.phi[0] <= 2
    assert all(1 <= b - a <= 2 for a, b in zip(phi.phi, phi.phi[1:]))


def test_lipschitz_bruteforce_cap():
    with pytest.raises(ResourceError):
        lipschitz_embed_bruteforce([0] * 9, [0] * 9, 2)


def test_lipschitz_contract():
    with pytest.raises(ContractError):
        lipschitz_embed_greedy([0], [0], 0)
    with pytest.raises(ContractError):
        lipschitz_embed_greedy([2], [0], 1)


def test_greedy_equals_bruteforce_small_exhaustive():
    for M in (1, 2, 3):
        for n in range(1, 4):
            for ny in range(1, 7):
                table = lipschitz_bruteforce_table(n, ny, M)
                for xc in range(1 << n):
                    X = [(xc >> k) & 1 for k in range(n)]
                    for yc in range(1 << ny):
                        Y = [(yc >> k) & 1 for k in range(ny)]
                        assert bool(table[yc, xc]) == (lipschitz_embed_greedy(X, Y, M) is not None)
                        if yc % 7 == 0:
                            assert bool(table[yc, xc]) == lipschitz_embed_bruteforce(X, Y, M)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=5), st.lists(st.integers(0, 1), min_size=1, max_size=10),
       st.integers(1, 3))
def test_greedy_M_monotone(X, Y, M):
    if lipschitz_embed_greedy(X, Y, M, M) is not None:
        assert lipschitz_embed_greedy(X, Y, M + 1, M + 1) is not None


def test_compatible_examples():
    assert compatible_decide([1], [1]) is None
    assert compatible_decide([1, 0], [0, 1]) == DeletionSets((), ())
    assert compatible_decide([1, 1], [1, 0]) is None
    assert compatible_bruteforce([1], [1]) is False
    assert compatible_bruteforce([0, 1], [1, 0]) is True


def test_compatible_exhausted_side_accepts():
    assert compatible_decide([0, 0, 0], [1]) is not None
    assert compatible_decide([], [1, 1]) is not None


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=8), st.lists(st.integers(0, 1), max_size=8))
def test_compatible_matches_bruteforce(X, Y):
    ds = compatible_decide(X, Y)
    assert (ds is not None) == compatible_bruteforce(X, Y)
    assert (ds is not None) == (compatible_decide(Y, X) is not None)
    if ds is not None:
        assert check_deletion_sets(X, Y, ds)


def test_compatible_bruteforce_cap():
    with pytest.raises(ResourceError):
        compatible_bruteforce([0] * 11, [0])


def test_rough_iso_examples():
    T = RoughIsoMap({0: 0, 5: 11}, 2, 1, 1)
    assert rough_iso_verify([0, 5], [0, 11], T)
    assert not rough_iso_verify([0, 5], [0, 11, 13], RoughIsoMap({0: 0, 5: 11}, 2, 1, 0))
    for M, D, C in ((1, 0, 0), (3, Fraction(1, 2), 2)):
        A = [0, 2, 7]
        assert rough_iso_verify(A, A, RoughIsoMap({a: a for a in A}, M, D, C))
    with pytest.raises(ContractError):
        rough_iso_verify([0], [1], RoughIsoMap({0: 5}, 1, 0, 0))


def test_rough_iso_search_examples():
    T = rough_iso_search([0, 5], [0, 11], 2, 1, 1)
    assert T.as_dict() == {0: 0, 5: 11}
    assert rough_iso_search([0], [0, 100], 2, 1, 1) is None


def test_rough_iso_search_verified_random():
    rng = np.random.default_rng(11)
    for _ in range(30):
        A = sorted(set(rng.integers(0, 20, rng.integers(1, 6)).tolist()))
        B = sorted(set(rng.integers(0, 20, rng.integers(1, 6)).tolist()))
        T = rough_iso_search(A, B, 2, 2, 3)
        if T is not None:
            assert rough_iso_verify(A, B, T)
