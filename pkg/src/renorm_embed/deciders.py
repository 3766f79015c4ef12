"""Direct deciders and verifiers for the three application problems.

These do not use the R-embedding machinery and serve as ground truth for it:
Lipschitz embeddings of bit sequences, compatibility of binary sequences, and
rough isometries between finite integer point sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._kernels import compatible_accepts, compatible_finish, lipschitz_greedy_kernel
from .errors import ContractError, ResourceError

LIPSCHITZ_BF_MAX_X = 8
LIPSCHITZ_BF_MAX_Y = 16
COMPATIBLE_BF_MAX = 10
ROUGHISO_SEARCH_MAX = 10
ROUGHISO_GENERAL_CAP = 10 ** 6


# ---------------------------------------------------------------------------
# Lipschitz embeddings

@dataclass(frozen=True)
class LipschitzMap:
    """A strictly increasing 1-based map ``phi(1..n)`` into positions of Y."""

    phi: tuple
    M: int
    first_max: int

    def valid_for(self, X: Sequence[int], Y: Sequence[int]) -> bool:
        """Check the map invariants and that ``X_i = Y_phi(i)``."""
        if len(self.phi) != len(X):
            return False
        prev = 0
        for i, p in enumerate(self.phi):
            if i == 0:
                if not 1 <= p <= self.first_max:
                    return False
            elif not 1 <= p - prev <= self.M:
                return False
            if p > len(Y) or Y[p - 1] != X[i]:
                return False
            prev = p
        return True


def _bits(seq, what="sequence") -> tuple:
    out = tuple(int(b) for b in seq)
    if any(b not in (0, 1) for b in out):
        raise ContractError(f"{what} must contain only bits 0/1")
    return out


def lipschitz_embed_greedy(Xstar, Ystar, M: int, first_max: int | None = None) -> LipschitzMap | None:
    """Leftmost map with gaps in ``[1, M]`` and ``phi(1) <= first_max``, if any.

    A backward pass marks the positions from which the rest of X can still be
    placed; the forward pass then takes the smallest such position at every
    step.  Taking the smallest matching position without the backward pass
    is not enough: for X=10, Y=1110, M=2 it commits to phi(1)=1 and fails,
    while phi=(2,4) is valid.
    """
    if first_max is None:
        first_max = M
    if M < 1 or first_max < 1:
        raise ContractError("M and first_max must be at least 1")
    X, Y = _bits(Xstar, "Xstar"), _bits(Ystar, "Ystar")
    n, ny = len(X), len(Y)
    if n == 0:
        return LipschitzMap((), M, first_max)
    phi = lipschitz_greedy_kernel(np.asarray(X, dtype=np.int8), np.asarray(Y, dtype=np.int8), M, first_max)
    if phi[0] < 0:
        return None
    phi = [int(p) for p in phi]
    return LipschitzMap(tuple(phi), M, first_max)


def lipschitz_embed_bruteforce(Xstar, Ystar, M: int, first_max: int | None = None) -> bool:
    """Exhaustive search over every strictly increasing map with the gap bounds."""
    if first_max is None:
        first_max = M
    X, Y = _bits(Xstar, "Xstar"), _bits(Ystar, "Ystar")
    if len(X) > LIPSCHITZ_BF_MAX_X or len(Y) > LIPSCHITZ_BF_MAX_Y:
        raise ResourceError(f"brute force limited to |X| <= {LIPSCHITZ_BF_MAX_X}, |Y| <= {LIPSCHITZ_BF_MAX_Y}")
    for phi in enumerate_lipschitz_maps(len(X), len(Y), M, first_max):
        if all(Y[p - 1] == x for p, x in zip(phi, X)):
            return True
    return False


def enumerate_lipschitz_maps(n: int, ny: int, M: int, first_max: int):
    """Yield every map ``phi`` of length ``n`` into ``[1, ny]`` with the gap bounds."""
    if n == 0:
        yield ()
        return
    for first in range(1, min(first_max, ny) + 1):
        for gaps in itertools.product(range(1, M + 1), repeat=n - 1):
            phi = [first]
            for g in gaps:
                phi.append(phi[-1] + g)
            if phi[-1] <= ny:
                yield tuple(phi)


def lipschitz_bruteforce_table(n: int, ny: int, M: int, first_max: int | None = None) -> np.ndarray:
    """Exhaustive embeddability table for all bit strings of lengths ``n`` and ``ny``.

    Entry ``[ycode, xcode]`` is true iff some map from
    :func:`enumerate_lipschitz_maps` matches; bit ``k`` of a code is the
    ``(k+1)``-th symbol.  This is the brute force evaluated for all pairs at
    once by enumerating maps instead of pairs.
    """
    if first_max is None:
        first_max = M
    if n > LIPSCHITZ_BF_MAX_X or ny > LIPSCHITZ_BF_MAX_Y:
        raise ResourceError(f"brute force limited to |X| <= {LIPSCHITZ_BF_MAX_X}, |Y| <= {LIPSCHITZ_BF_MAX_Y}")
    ycodes = np.arange(1 << ny, dtype=np.int64)
    table = np.zeros((1 << ny, 1 << n), dtype=bool)
    for phi in enumerate_lipschitz_maps(n, ny, M, first_max):
        xcode = np.zeros(1 << ny, dtype=np.int64)
        for k, p in enumerate(phi):
            xcode |= ((ycodes >> (p - 1)) & 1) << k
        table[ycodes, xcode] = True
    return table


# ---------------------------------------------------------------------------
# compatible sequences

@dataclass(frozen=True)
class DeletionSets:
    """1-based indices of zeros deleted from X (``D``) and from Y (``Dp``)."""

    D: tuple
    Dp: tuple


def _as_array(bits) -> np.ndarray:
    return np.asarray(_bits(bits), dtype=np.int8).reshape(-1)


def compatible_decide(X, Y) -> DeletionSets | None:
    """Zero-deletion grid walk; accept when either sequence is exhausted.

    The path prefers an aligned pair, then deleting a zero of X, then
    deleting a zero of Y.
    """
    x, y = _as_array(X), _as_array(Y)
    n, n2 = len(x), len(y)
    fin = compatible_finish(x, y)
    if not fin[0, 0]:
        return None
    i = j = 0
    D, Dp = [], []
    while i < n and j < n2:
        if not (x[i] == 1 and y[j] == 1) and fin[i + 1, j + 1]:
            i, j = i + 1, j + 1
        elif x[i] == 0 and fin[i + 1, j]:
            D.append(i + 1)
            i += 1
        else:
            Dp.append(j + 1)
            j += 1
    return DeletionSets(tuple(D), tuple(Dp))


def compatible_holds(X, Y) -> bool:
    return bool(compatible_accepts(_as_array(X), _as_array(Y)))


def surviving(seq, deleted) -> list:
    gone = set(deleted)
    return [v for k, v in enumerate(seq, 1) if k not in gone]


def check_deletion_sets(X, Y, ds: DeletionSets, require_distinct: bool = False) -> bool:
    """Deleted positions hold zeros and the surviving sequences never align two ones.

    With ``require_distinct`` the aligned surviving symbols must differ, which
    is the stronger conclusion obtained from decoding an R-embedding.
    """
    X, Y = _bits(X), _bits(Y)
    if any(not 1 <= k <= len(X) or X[k - 1] != 0 for k in ds.D):
        return False
    if any(not 1 <= k <= len(Y) or Y[k - 1] != 0 for k in ds.Dp):
        return False
    sx, sy = surviving(X, ds.D), surviving(Y, ds.Dp)
    for a, b in zip(sx, sy):
        if a == 1 and b == 1:
            return False
        if require_distinct and a == b:
            return False
    return True


def compatible_bruteforce(X, Y) -> bool:
    """Try every pair of zero-deletion subsets."""
    X, Y = _bits(X), _bits(Y)
    if len(X) > COMPATIBLE_BF_MAX or len(Y) > COMPATIBLE_BF_MAX:
        raise ResourceError(f"brute force limited to length {COMPATIBLE_BF_MAX}")

    def reductions(seq):
        zeros = [k for k, v in enumerate(seq) if v == 0]
        out = set()
        for r in range(len(zeros) + 1):
            for drop in itertools.combinations(zeros, r):
                gone = set(drop)
                out.add(tuple(v for k, v in enumerate(seq) if k not in gone))
        return out

    ys = reductions(Y)
    for sx in reductions(X):
        for sy in ys:
            if all(not (a == 1 and b == 1) for a, b in zip(sx, sy)):
                return True
    return False


# ---------------------------------------------------------------------------
# rough isometries

@dataclass(frozen=True)
class RoughIsoMap:
    assignment: tuple  # sorted (x, T(x)) pairs
    M: Fraction
    D: Fraction
    C: Fraction

    def __post_init__(self):
        a = self.assignment
        if isinstance(a, dict):
            a = a.items()
        object.__setattr__(self, "assignment", tuple(sorted((int(x), int(y)) for x, y in a)))
        for f in ("M", "D", "C"):
            object.__setattr__(self, f, Fraction(getattr(self, f)))

    def as_dict(self) -> dict:
        return dict(self.assignment)


def rough_iso_verify(A, B, T: RoughIsoMap) -> bool:
    """Exact two-sided distortion and C-density check."""
    A = sorted(set(int(a) for a in A))
    Bs = sorted(set(int(b) for b in B))
    amap = T.as_dict()
    if set(amap) != set(A):
        raise ContractError("assignment must be defined exactly on the source points")
    bset = set(Bs)
    if any(y not in bset for y in amap.values()):
        raise ContractError("assignment image is not contained in the target set")
    if T.M <= 0 or T.D < 0 or T.C < 0:
        return False
    xs = np.array(A, dtype=object)
    ys = np.array([amap[a] for a in A], dtype=object)
    Mn, Md = T.M.numerator, T.M.denominator
    Dn, Dd = T.D.numerator, T.D.denominator
    for k in range(len(A)):
        dx = np.abs(xs[k + 1:] - xs[k])
        dy = np.abs(ys[k + 1:] - ys[k])
        # dy <= M dx + D   <=>  dy*Md*Dd <= Mn*Dd*dx + Dn*Md
        if np.any(dy * (Md * Dd) > dx * (Mn * Dd) + Dn * Md):
            return False
        # dx/M - D <= dy   <=>  Md*Dd*dx - Dn*Mn <= Mn*Dd*dy
        if np.any(dx * (Md * Dd) - Dn * Mn > dy * (Mn * Dd)):
            return False
    images = sorted(set(amap.values()))
    if not images:
        return not Bs
    import bisect
    for b in Bs:
        k = bisect.bisect_left(images, b)
        best = min(abs(b - images[i]) for i in (k - 1, k) if 0 <= i < len(images))
        if best > T.C:
            return False
    return True


def rough_iso_search(A, B, M, D, C, monotone_only: bool = True) -> RoughIsoMap | None:
    """First verifying assignment in lexicographic order, weakly increasing if flagged."""
    A = sorted(set(int(a) for a in A))
    Bs = sorted(set(int(b) for b in B))
    if len(A) > ROUGHISO_SEARCH_MAX or len(Bs) > ROUGHISO_SEARCH_MAX:
        raise ResourceError(f"rough-isometry search limited to {ROUGHISO_SEARCH_MAX} points per side")
    if monotone_only:
        candidates = itertools.combinations_with_replacement(Bs, len(A))
    else:
        if len(Bs) ** len(A) > ROUGHISO_GENERAL_CAP:
            raise ResourceError(f"general search over |B|^|A| = {len(Bs) ** len(A)} maps exceeds {ROUGHISO_GENERAL_CAP}")
        candidates = itertools.product(Bs, repeat=len(A))
    for image in candidates:
        T = RoughIsoMap(tuple(zip(A, image)), M, D, C)
        if rough_iso_verify(A, Bs, T):
            return T
    return None
