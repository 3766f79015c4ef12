"""Reductions of the three applications to R-embeddings, and the decoders back.

* Lipschitz embeddings: X is the raw bit sequence; Y is cut into words of
  length ``M0`` classified as STAR (many flips), ZERO or ONE.
* Rough isometries: a 0/1 site sequence is cut at its ones; each block is
  encoded by the dyadic class of its number of zeros.
* Compatible sequences: the bits themselves, with zero as the good symbol.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .core import ProblemSpec
from .deciders import DeletionSets, LipschitzMap, RoughIsoMap, check_deletion_sets
from .errors import ContractError, InvariantViolation
from .rembed import EmbedOracles, EmbedWitness, rembed_verify


# ---------------------------------------------------------------------------
# compatible sequences

COMPATIBLE_RELATION = frozenset({(0, 0), (0, 1), (1, 0)})


def compatible_spec(q) -> ProblemSpec:
    """Bernoulli(q) bits on both sides; 1 may not meet 1; zero is good."""
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ContractError("q must lie in [0, 1]")
    return ProblemSpec(
        name=f"compatible(q={q})",
        alphabet_x=("0", "1"),
        alphabet_y=("0", "1"),
        mu_x=(1 - q, q),
        mu_y=(1 - q, q),
        relation=COMPATIBLE_RELATION,
        good_x=frozenset({0}),
        good_y=frozenset({0}),
        params=(("kind", "compatible"), ("q", str(q))),
    )


def compatible_oracles(R: int = 1) -> EmbedOracles:
    return compatible_spec(0).oracles(R)


# ---------------------------------------------------------------------------
# Lipschitz embeddings

class StarClass(enum.IntEnum):
    ZERO = 0
    ONE = 1
    STAR = 2


LIPSCHITZ_Y_ALPHABET = ("0", "1", "*")
LIPSCHITZ_RELATION = frozenset({(0, StarClass.ZERO), (0, StarClass.STAR), (1, StarClass.ONE), (1, StarClass.STAR)})


def star_threshold(R: int) -> int:
    """Flip count ``2 R0+ = 6 R^2`` that makes a word STAR."""
    return 6 * R * R


def classify_word(Z: Sequence[int], R: int) -> StarClass:
    Z = [int(b) for b in Z]
    if not Z:
        raise ContractError("cannot classify an empty word")
    flips = sum(1 for a, b in zip(Z, Z[1:]) if a != b)
    if flips >= star_threshold(R):
        return StarClass.STAR
    zeros = Z.count(0)
    return StarClass.ZERO if zeros > len(Z) - zeros else StarClass.ONE


@lru_cache(maxsize=64)
def word_class_counts(M0: int, R: int) -> tuple:
    """Exact number of length-``M0`` words in each class (ZERO, ONE, STAR).

    Counts words by (flips, ones) with a small dynamic program rather than
    enumerating all ``2^M0`` words.
    """
    if M0 < 1:
        raise ContractError("M0 must be at least 1")
    # state: (last bit, flips, ones) -> count
    table = {(0, 0, 0): 1, (1, 0, 1): 1}
    for _ in range(M0 - 1):
        nxt = {}
        for (last, f, k), c in table.items():
            for b in (0, 1):
                key = (b, f + (b != last), k + b)
                nxt[key] = nxt.get(key, 0) + c
        table = nxt
    counts = [0, 0, 0]
    thr = star_threshold(R)
    for (_, f, k), c in table.items():
        if f >= thr:
            counts[StarClass.STAR] += c
        elif M0 - k > k:
            counts[StarClass.ZERO] += c
        else:
            counts[StarClass.ONE] += c
    return tuple(counts)


def lipschitz_spec(M0: int, R: int) -> ProblemSpec:
    counts = word_class_counts(M0, R)
    total = 2 ** M0
    return ProblemSpec(
        name=f"lipschitz(M0={M0},R={R})",
        alphabet_x=("0", "1"),
        alphabet_y=LIPSCHITZ_Y_ALPHABET,
        mu_x=(Fraction(1, 2), Fraction(1, 2)),
        mu_y=tuple(Fraction(c, total) for c in counts),
        relation=LIPSCHITZ_RELATION,
        good_x=frozenset({0, 1}),
        good_y=frozenset({StarClass.STAR}),
        params=(("kind", "lipschitz"), ("M0", str(M0)), ("R", str(R))),
    )


def lipschitz_oracles(R: int) -> EmbedOracles:
    rel = np.zeros((2, 3), dtype=bool)
    for a, b in LIPSCHITZ_RELATION:
        rel[a, b] = True
    gx = np.array([True, True])
    gy = np.array([False, False, True])
    return EmbedOracles.with_R(lambda a, b: bool(rel[a, b]), lambda a: bool(gx[a]), lambda b: bool(gy[b]), R,
                               rel_matrix=rel, good_x_mask=gx, good_y_mask=gy)


def encode_lipschitz(Xstar, Ystar, M0: int, R: int) -> tuple:
    X = tuple(int(b) for b in Xstar)
    Yb = [int(b) for b in Ystar]
    if any(b not in (0, 1) for b in X) or any(b not in (0, 1) for b in Yb):
        raise ContractError("Lipschitz inputs must be bit sequences")
    if M0 < 1 or len(Yb) % M0:
        raise ContractError(f"|Ystar| = {len(Yb)} is not a multiple of M0 = {M0}")
    Y = tuple(int(classify_word(Yb[k:k + M0], R)) for k in range(0, len(Yb), M0))
    return X, Y


@dataclass(frozen=True)
class DecodedLipschitz:
    map: LipschitzMap
    M_achieved: int
    first: int
    boundary_left: int
    boundary_right: int


def _greedy_subsequence(xs, ybits, start, stop):
    out = []
    p = start
    for x in xs:
        while p < stop and ybits[p] != x:
            p += 1
        if p >= stop:
            return None
        out.append(p + 1)
        p += 1
    return out


def decode_lipschitz(Xstar, Ystar, M0: int, witness: EmbedWitness, R: int) -> DecodedLipschitz:
    """Turn an R-embedding of the encoded pair into an explicit Lipschitz map.

    Each step is matched greedily (leftmost bits) inside the Y-bits covered by
    the step; the measured constants are reported instead of a fixed bound.
    """
    X, Y = encode_lipschitz(Xstar, Ystar, M0, R)
    if not rembed_verify(X, Y, witness, lipschitz_oracles(R)):
        raise ContractError("witness does not verify for the encoded pair")
    ybits = [int(b) for b in Ystar]
    phi = []
    left = right = 0
    for r in range(len(witness.i_seq) - 1):
        a, a2 = witness.i_seq[r], witness.i_seq[r + 1]
        b, b2 = witness.ip_seq[r], witness.ip_seq[r + 1]
        part = _greedy_subsequence(X[a:a2], ybits, b * M0, b2 * M0)
        if part is None:
            raise InvariantViolation(f"no in-segment matching for step {r} (X {a}..{a2}, words {b}..{b2})")
        left = max(left, part[0] - b * M0)
        right = max(right, b2 * M0 - part[-1])
        phi.extend(part)
    gaps = [phi[0]] + [q - p for p, q in zip(phi, phi[1:])] if phi else [1]
    M_ach = max(gaps)
    first = phi[0] if phi else 1
    lm = LipschitzMap(tuple(phi), M_ach, first)
    return DecodedLipschitz(lm, M_ach, first, left, right)


# ---------------------------------------------------------------------------
# gap classes and rough isometries

def gap_class(L: int) -> int:
    """Class index j of a block with L zeros: 0 if L = 0, else 2^(j-1) <= L < 2^j."""
    if L < 0:
        raise ContractError("gap length must be non-negative")
    return int(L).bit_length()


def _check_points(points) -> list:
    pts = [int(p) for p in points]
    if not pts or pts[0] != 0:
        raise ContractError("point set must start at 0")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ContractError("points must be strictly increasing")
    return pts


def gap_encode(points) -> tuple:
    """One class symbol per gap between consecutive points."""
    pts = _check_points(points)
    return tuple(gap_class(b - a - 1) for a, b in zip(pts, pts[1:]))


def realize_gaps(symbols, choice: str = "min", rng=None) -> list:
    """A point set whose gap encoding is ``symbols``."""
    pts = [0]
    for j in symbols:
        j = int(j)
        if j < 0:
            raise ContractError("class index must be non-negative")
        if j == 0:
            L = 0
        elif choice == "min":
            L = 2 ** (j - 1)
        elif choice == "max":
            L = 2 ** j - 1
        elif choice == "random":
            L = int(rng.integers(2 ** (j - 1), 2 ** j))
        else:
            raise ContractError(f"unknown choice {choice!r}")
        pts.append(pts[-1] + L + 1)
    return pts


def gap_class_probability(j: int) -> Fraction:
    """P(C_j) for fair bits: 1/2 for j = 0, else (1/2)^(2^(j-1)) - (1/2)^(2^j)."""
    if j == 0:
        return Fraction(1, 2)
    return Fraction(1, 2 ** (2 ** (j - 1))) - Fraction(1, 2 ** (2 ** j))


def roughiso_spec(M0: int, K: int) -> ProblemSpec:
    """Gap classes ``C_0..C_K``; the mass of larger classes is the tail deficit."""
    if K < M0:
        raise ContractError("truncation K must be at least M0")
    names = tuple(f"C{j}" for j in range(K + 1))
    mu = tuple(gap_class_probability(j) for j in range(K + 1))
    tail = Fraction(1, 2 ** (2 ** K))
    rel = frozenset((a, b) for a in range(K + 1) for b in range(K + 1) if abs(a - b) <= M0)
    good = frozenset(range(M0 + 1))
    return ProblemSpec(
        name=f"roughiso(M0={M0},K={K})",
        alphabet_x=names, alphabet_y=names, mu_x=mu, mu_y=mu,
        relation=rel, good_x=good, good_y=good, tail_x=tail, tail_y=tail,
        params=(("kind", "roughiso"), ("M0", str(M0)), ("K", str(K))),
    )


def roughiso_oracles(M0: int, R: int) -> EmbedOracles:
    return EmbedOracles.with_R(lambda a, b: abs(int(a) - int(b)) <= M0, lambda a: int(a) <= M0,
                               lambda b: int(b) <= M0, R)


def roughiso_constants(M0: int, R: int) -> tuple:
    """``(M, D, C)`` used to certify decoded maps."""
    Rp = 3 * R * R
    return 2 ** (M0 + 2) * Rp, 2 ** (M0 + 1) * Rp, 2 ** (M0 + 1) * Rp


def decode_roughiso(pointsX, pointsY, witness: EmbedWitness, M0: int, R: int) -> RoughIsoMap:
    """Send every source point of block r to the left endpoint of its target block."""
    px, py = _check_points(pointsX), _check_points(pointsY)
    X, Y = gap_encode(px), gap_encode(py)
    if not rembed_verify(X, Y, witness, roughiso_oracles(M0, R)):
        raise ContractError("witness does not verify for the gap-encoded pair")
    assignment = {}
    for r in range(len(witness.i_seq) - 1):
        a, a2 = witness.i_seq[r], witness.i_seq[r + 1]
        target = py[witness.ip_seq[r]]
        for i in range(a, a2):
            assignment[px[i]] = target
    assignment[px[-1]] = py[-1]
    M, D, C = roughiso_constants(M0, R)
    return RoughIsoMap(assignment, M, D, C)


# ---------------------------------------------------------------------------
# compatible decoding

def decode_compatible(X, Y, witness: EmbedWitness, R: int = 1) -> DeletionSets:
    """Deletion sets from jump steps and from paired steps over two zeros."""
    X = tuple(int(b) for b in X)
    Y = tuple(int(b) for b in Y)
    o = compatible_oracles(R)
    if not rembed_verify(X, Y, witness, o):
        raise ContractError("witness does not verify under the compatible oracles")
    D, Dp = [], []
    for r in range(len(witness.i_seq) - 1):
        a, a2 = witness.i_seq[r], witness.i_seq[r + 1]
        b, b2 = witness.ip_seq[r], witness.ip_seq[r + 1]
        paired = (a2 - a, b2 - b) == (1, 1)
        if paired and not (X[a] == 0 and Y[b] == 0):
            continue
        D.extend(range(a + 1, a2 + 1))
        Dp.extend(range(b + 1, b2 + 1))
    ds = DeletionSets(tuple(D), tuple(Dp))
    if not check_deletion_sets(X, Y, ds, require_distinct=True):
        raise InvariantViolation("decoded deletion sets violate the expected conditions")
    return ds


# ---------------------------------------------------------------------------
# configuration

def spec_from_config(cfg: Mapping) -> ProblemSpec:
    """Build a problem spec from a ``[problem]`` table."""
    table = dict(cfg.get("problem", cfg))
    kind = table.get("kind", "custom")
    if kind == "compatible":
        return compatible_spec(Fraction(str(table.get("q", "0"))))
    if kind == "lipschitz":
        return lipschitz_spec(int(table["M0"]), int(table.get("R", 1)))
    if kind == "roughiso":
        return roughiso_spec(int(table["M0"]), int(table.get("K", int(table["M0"]) + 4)))
    if kind == "custom":
        return ProblemSpec.from_dict(table)
    raise ContractError(f"unknown problem kind {kind!r}")
