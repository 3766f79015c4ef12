"""Generalized mappings between segments of sub-blocks and the builders for them.

A partition of ``[n]`` is a cut list ``0 = i_0 < i_1 < ... < i_z = n``; block
``r`` is ``{i_r + 1, ..., i_{r+1}}``.  A :class:`GeneralizedMapping` is stored
compactly as the coarse cut lists of a marked partition pair: marked
intervals stand for runs of singletons mapped rigidly, unmarked ones for a
single block mapped whole.  Elements are 1-based throughout.

The builders construct mappings of classes G, H1 and H2 and check their own
output; whenever a numeric step fails at the given scale they raise
:class:`ScaleError` naming the inequality.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import ParameterSet, at_most_dyadic_power, below_dyadic_power, scales
from .errors import ContractError, InvariantViolation, ScaleError
from .rembed import EmbedWitness

CLASS_TAGS = ("admissible", "G", "H1", "H2")


# ---------------------------------------------------------------------------
# partitions and mappings

@dataclass(frozen=True)
class Partition:
    cuts: tuple

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        if len(cuts) < 2:
            raise ContractError("a partition needs at least two cut points")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ContractError("partition cut points must be strictly increasing")
        object.__setattr__(self, "cuts", cuts)

    @property
    def length(self) -> int:
        return len(self.cuts) - 1

    def sizes(self) -> list:
        return [b - a for a, b in zip(self.cuts, self.cuts[1:])]


@dataclass(frozen=True)
class MarkedPartitionPair:
    P: Partition
    Pp: Partition
    Z: frozenset

    def __post_init__(self):
        object.__setattr__(self, "Z", frozenset(int(r) for r in self.Z))
        if self.P.length != self.Pp.length:
            raise ContractError("marked partition pair needs partitions of equal length")
        if any(not 0 <= r < self.P.length for r in self.Z):
            raise ContractError("marked index out of range")
        sx, sy = self.P.sizes(), self.Pp.sizes()
        bad = [r for r in sorted(self.Z) if sx[r] != sy[r]]
        if bad:
            raise ContractError(f"marked interval {bad[0]} has lengths {sx[bad[0]]} and {sy[bad[0]]}")


@dataclass(frozen=True)
class GeneralizedMapping:
    """Coarse cuts ``P``, ``Pp`` plus the marked set ``Z``; tags record passed predicates."""

    P: tuple
    Pp: tuple
    Z: frozenset
    tags: frozenset = field(default=frozenset(), compare=False)

    @property
    def n(self) -> int:
        return self.P[-1] - self.P[0]

    @property
    def n_prime(self) -> int:
        return self.Pp[-1] - self.Pp[0]

    @property
    def z(self) -> int:
        return len(self.P) - 1

    def tagged(self, *tags) -> "GeneralizedMapping":
        return GeneralizedMapping(self.P, self.Pp, self.Z, self.tags | frozenset(tags))

    def _lens(self, r):
        return self.P[r + 1] - self.P[r], self.Pp[r + 1] - self.Pp[r]

    def x_singleton(self, x: int) -> bool:
        r = bisect.bisect_left(self.P, x) - 1
        lx, _ = self._lens(r)
        return r in self.Z or lx == 1

    def y_singleton(self, y: int) -> bool:
        r = bisect.bisect_left(self.Pp, y) - 1
        _, ly = self._lens(r)
        return r in self.Z or ly == 1

    def tau(self, x: int) -> int | None:
        """Image of a singleton ``{x}``; ``None`` if ``x`` lies in a longer block."""
        r = bisect.bisect_left(self.P, x) - 1
        if r in self.Z:
            return self.Pp[r] + (x - self.P[r])
        lx, ly = self._lens(r)
        if lx == 1 and ly == 1:
            return self.Pp[r] + 1
        return None

    def tau_inv(self, y: int) -> int | None:
        r = bisect.bisect_left(self.Pp, y) - 1
        if r in self.Z:
            return self.P[r] + (y - self.Pp[r])
        lx, ly = self._lens(r)
        if lx == 1 and ly == 1:
            return self.P[r] + 1
        return None

    def fine_blocks(self):
        """Yield ``((x0, x1), (y0, y1))`` cut pairs of the induced fine partitions."""
        for r in range(self.z):
            a, b, c = self.P[r], self.P[r + 1], self.Pp[r]
            if r in self.Z:
                for k in range(b - a):
                    yield (a + k, a + k + 1), (c + k, c + k + 1)
            else:
                yield (a, b), (c, self.Pp[r + 1])

    def fine_length(self) -> int:
        return sum((self.P[r + 1] - self.P[r]) if r in self.Z else 1 for r in range(self.z))

    def to_text(self) -> str:
        return ("P: " + " ".join(map(str, self.P)) + "\n"
                + "P': " + " ".join(map(str, self.Pp)) + "\n"
                + "Z: " + " ".join(map(str, sorted(self.Z))) + "\n"
                + "tags: " + " ".join(t for t in CLASS_TAGS if t in self.tags) + "\n")

    @classmethod
    def from_text(cls, text: str) -> "GeneralizedMapping":
        from .errors import ParseError
        rows = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            head, sep, rest = line.partition(":")
            key = head.strip()
            if not sep or key not in ("P", "P'", "Z", "tags"):
                raise ParseError("expected one of 'P:', \"P':\", 'Z:', 'tags:'", lineno, 1)
            if key == "tags":
                unknown = [t for t in rest.split() if t not in CLASS_TAGS]
                if unknown:
                    raise ParseError(f"unknown class tag {unknown[0]!r}", lineno, line.find(unknown[0]) + 1)
                rows[key] = rest.split()
                continue
            try:
                rows[key] = [int(t) for t in rest.split()]
            except ValueError as exc:
                raise ParseError(f"bad integer list: {exc}", lineno, len(head) + 2) from None
        if not {"P", "P'", "Z"} <= set(rows):
            raise ParseError("mapping needs 'P:', \"P':\" and 'Z:' lines", 1, 1)
        mpp = MarkedPartitionPair(Partition(rows["P"]), Partition(rows["P'"]), frozenset(rows["Z"]))
        return induce_mapping(mpp).tagged(*rows.get("tags", ()))

    def diagram(self) -> list:
        """Coordinate list ``(x0, x1, y0, y1)`` per coarse interval, for plotting."""
        return [(self.P[r], self.P[r + 1], self.Pp[r], self.Pp[r + 1]) for r in range(self.z)]


def induce_mapping(mpp: MarkedPartitionPair) -> GeneralizedMapping:
    """The generalized mapping of a marked partition pair (marked intervals explode into singletons)."""
    if not isinstance(mpp, MarkedPartitionPair):
        raise ContractError("expected a MarkedPartitionPair")
    return GeneralizedMapping(mpp.P.cuts, mpp.Pp.cuts, mpp.Z)


def mapping_from_cuts(P, Pp, Z=()) -> GeneralizedMapping:
    return induce_mapping(MarkedPartitionPair(Partition(P), Partition(Pp), frozenset(Z)))


# ---------------------------------------------------------------------------
# class predicates

def _ratio_ok(lx: int, ly: int, j: int, R: int) -> bool:
    """``(1 - 2^-(j+5/4))/R < ly/lx < R (1 + 2^-(j+5/4))`` exactly."""
    rho = Fraction(ly, lx)
    return below_dyadic_power(rho / R - 1, j, 5, 4) and below_dyadic_power(1 - rho * R, j, 5, 4)


def check_admissible(gm: GeneralizedMapping) -> bool:
    for r in range(gm.z):
        if r in gm.Z:
            continue
        lx, ly = gm._lens(r)
        if (lx == 1) != (ly == 1):
            return False
    return True


def _check_long_intervals(gm, j, ps) -> bool:
    L = scales(ps, j).L
    for r in range(gm.z):
        if r in gm.Z:
            continue
        lx, ly = gm._lens(r)
        if lx == 1 and ly == 1:
            continue
        if min(lx, ly) <= L or not _ratio_ok(lx, ly, j, ps.R):
            return False
    return True


def _failed_G(gm, B, Bp, j, ps) -> str | None:
    if not check_admissible(gm):
        return "admissibility"
    if any(not gm.x_singleton(x) for x in B) or any(not gm.y_singleton(y) for y in Bp):
        return "bad indices are singletons"
    if not _check_long_intervals(gm, j, ps):
        return "long intervals exceed L_j with bounded length ratio"
    Bps = set(Bp)
    Bs = set(B)
    if any(gm.tau(x) in Bps for x in B) or any(gm.tau_inv(y) in Bs for y in Bp):
        return "(iv) images of bad indices avoid bad indices"
    return None


def check_class_G(gm, B, Bp, j, ps) -> bool:
    return _failed_G(gm, B, Bp, j, ps) is None


def _failed_H1(gm, B, n_prime, j, ps) -> str | None:
    L3 = scales(ps, j).L3
    if not check_admissible(gm):
        return "admissibility"
    if any(not gm.x_singleton(x) for x in B):
        return "bad indices are singletons"
    if not _check_long_intervals(gm, j, ps):
        return "long intervals exceed L_j with bounded length ratio"
    if any(not L3 < gm.tau(x) < n_prime - L3 for x in B):
        return "images of bad indices lie in (L_j^3, n'-L_j^3)"
    return None


def check_class_H1(gm, B, n_prime, j, ps) -> bool:
    return _failed_H1(gm, B, n_prime, j, ps) is None


def _failed_H2(gm, B, n_prime, j, ps) -> str | None:
    sc = scales(ps, j)
    if not check_admissible(gm):
        return "admissibility"
    if any(not gm.x_singleton(x) for x in B):
        return "bad indices are singletons"
    if any(not sc.L3 < gm.tau(x) < n_prime - sc.L3 for x in B):
        return "images of bad indices lie in (L_j^3, n'-L_j^3)"
    for r in range(gm.z):
        if r in gm.Z:
            continue
        lx, ly = gm._lens(r)
        if lx == 1 and ly == 1:
            continue
        if lx != sc.R_j or not sc.R_minus <= ly <= sc.R_plus:
            return "long intervals have X-length R_j and Y-length in [R_j^-, R_j^+]"
    return None


def check_class_H2(gm, B, n_prime, j, ps) -> bool:
    return _failed_H2(gm, B, n_prime, j, ps) is None


# ---------------------------------------------------------------------------
# the shift maps psi_s

@dataclass(frozen=True)
class PsiMap:
    """Three-piece linear bijection ``[0, n] -> [0, n']`` with half-margin ``h`` and shift ``s``."""

    n: int
    n_prime: int
    s: int
    h: Fraction

    @property
    def mid_slope(self) -> Fraction:
        return Fraction(self.n_prime - 2 * self.h) / (self.n - 2 * self.h)


def build_psi(n: int, n_prime: int, s: int, margin) -> PsiMap:
    """``margin`` is the full margin ``L_j^3``; the pieces break at half of it."""
    h = Fraction(margin) / 2
    if n <= 2 * h or n_prime <= 2 * h:
        raise ContractError("psi needs n, n' larger than the margin")
    if not 0 <= s < h:
        raise ContractError("psi needs 0 <= s < margin/2")
    return PsiMap(int(n), int(n_prime), int(s), h)


def psi_eval(pm: PsiMap, x) -> Fraction:
    x = Fraction(x)
    h, s, n, n2 = pm.h, pm.s, pm.n, pm.n_prime
    if not 0 <= x <= n:
        raise ContractError("psi argument outside [0, n]")
    if x <= h:
        return x * (h + s) / h
    if x <= n - h:
        return h + s + pm.mid_slope * (x - h)
    return n2 - (n - x) * (h - s) / h


def psi_inv(pm: PsiMap, y) -> Fraction:
    y = Fraction(y)
    h, s, n, n2 = pm.h, pm.s, pm.n, pm.n_prime
    if not 0 <= y <= n2:
        raise ContractError("psi-inverse argument outside [0, n']")
    if y <= h + s:
        return y * h / (h + s)
    if y <= n2 - h + s:
        return h + (y - h - s) / pm.mid_slope
    return n - (n2 - y) * h / (h - s)


def _min_gap(a: list, b: list) -> Fraction | None:
    """Smallest |u - v| over u in a, v in b (both sorted)."""
    if not a or not b:
        return None
    best = None
    k = 0
    for u in a:
        while k + 1 < len(b) and b[k + 1] <= u:
            k += 1
        for v in (b[k], b[k + 1] if k + 1 < len(b) else None):
            if v is not None:
                d = abs(u - v)
                if best is None or d < best:
                    best = d
    return best


def _check_margins(n, n_prime, B, Bp, L3):
    if B and (B[0] <= L3 or n - B[-1] <= L3):
        raise ContractError("bad X indices must lie more than L_j^3 from both ends")
    if Bp and (Bp[0] <= L3 or n_prime - Bp[-1] <= L3):
        raise ContractError("bad Y indices must lie more than L_j^3 from both ends")


def _sorted_in_range(S, n, what) -> list:
    out = sorted(set(int(v) for v in S))
    if out and (out[0] < 1 or out[-1] > n):
        raise ContractError(f"{what} indices must lie in [1, {n}]")
    return out


def find_separating_shift(n, n_prime, B, Bp, j, ps, check_pre: bool = True) -> int | None:
    """First integer ``s`` in ``[0, floor(L_j^{5/2})]`` whose psi separates every bad pair.

    Separation means ``|psi(i) - i'| >= 2 floor(L_j^{9/4})`` and
    ``|i - psi^{-1}(i')| >= 2 floor(L_j^{9/4})``.  Returns ``None`` if no integer
    shift works.
    """
    sc = scales(ps, j)
    B = _sorted_in_range(B, n, "B")
    Bp = _sorted_in_range(Bp, n_prime, "B'")
    if check_pre:
        cap = ps.k0 * scales(ps, j + 1).R_plus
        if len(B) > cap or len(Bp) > cap:
            raise ContractError(f"at most k0 R_(j+1)^+ = {cap} bad indices per side")
        _check_margins(n, n_prime, B, Bp, sc.L3)
    if not B or not Bp:
        return 0
    sep = 2 * sc.fl94
    for s in range(0, min(sc.fl52, (sc.L3 + 1) // 2 - 1) + 1):
        pm = build_psi(n, n_prime, s, sc.L3)
        fwd = [psi_eval(pm, i) for i in B]
        if _min_gap(fwd, Bp) < sep:
            continue
        back = [psi_inv(pm, y) for y in Bp]
        if _min_gap(B, back) < sep:
            continue
        return s
    return None


# ---------------------------------------------------------------------------
# Class G construction

def _floor(x) -> int:
    return int(Fraction(x) // 1)


def _lead_partition(T0: int, T1: int, pts: list, F: int, label: str) -> tuple:
    """Cuts over ``[T0+1, T1]`` isolating clusters of ``pts``; bad blocks at odd positions."""
    first = pts[0] - F
    if first <= T0:
        raise ScaleError(f"{label}: first bad index lies within floor(L_j^(17/8)) of the interval start")
    cuts = [T0, first]
    prev_bad = False
    while True:
        h = cuts[-1]
        if not prev_bad:
            i = h + F
            moved = True
            while moved:
                moved = False
                k = bisect.bisect_left(pts, i - F)
                if k < len(pts) and pts[k] <= i + 3 * F:
                    i = pts[k] + F + 1
                    moved = True
            if i >= T1:
                raise ScaleError(f"{label}: bad cluster plus floor(L_j^(17/8)) padding reaches the interval end")
            cuts.append(i)
            prev_bad = True
        else:
            k = bisect.bisect_left(pts, h + 3 * F + 1)
            if k >= len(pts):
                cuts.append(T1)
                break
            cuts.append(pts[k] - F - 1)
            prev_bad = False
    if cuts[-2] >= T1 or any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ScaleError(f"{label}: sub-partition is not strictly increasing")
    return cuts


def _follow_partition(U0: int, U1: int, lead: list, first: int, ratio: Fraction, label: str) -> list:
    """Partner cuts: bad blocks copy their length, good blocks scale by ``ratio``; last cut is ``U1``."""
    out = [U0, first]
    z = len(lead) - 1
    for h in range(1, z - 1):
        length = lead[h + 1] - lead[h]
        out.append(out[-1] + (length if h % 2 == 1 else _floor(length * ratio)))
    out.append(U1)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ScaleError(f"{label}: partner partition is not strictly increasing "
                         "(bad clusters too close to the interval ends for this scale)")
    return out


def _base_marked_pair(n, n_prime, B, Bp, j, ps, check_pre=True):
    sc = scales(ps, j)
    F = sc.fl178
    s0 = find_separating_shift(n, n_prime, B, Bp, j, ps, check_pre=check_pre)
    if s0 is None:
        raise ScaleError("no integer shift s in [0, L_j^(5/2)] separates B from psi^-1(B') by 2 L_j^(9/4)")
    pm = build_psi(n, n_prime, s0, sc.L3)
    typed = sorted([(Fraction(b), 0) for b in B] + [(psi_inv(pm, y), 1) for y in Bp])
    ts = [0]
    for (u, tu), (v, tv) in zip(typed, typed[1:]):
        if tu != tv:
            ts.append(_floor((u + v) / 2))
    ts.append(n)
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ScaleError("interval cut points t_r are not strictly increasing")
    P, Pp, Z = [0], [0], set()
    for r in range(1, len(ts)):
        T0, T1 = ts[r - 1], ts[r]
        U0, U1 = _floor(psi_eval(pm, T0)), _floor(psi_eval(pm, T1))
        if U1 <= U0:
            raise ScaleError("psi image of an interval is empty")
        Br = [b for b in B if T0 < b <= T1]
        Bpr = [y for y in Bp if U0 < y <= U1]
        if Br and Bpr:
            raise ScaleError("an interval meets both B and psi^-1(B')")
        if Br:
            xs = _lead_partition(T0, T1, Br, F, "case 1")
            ys = _follow_partition(U0, U1, xs, _floor(psi_eval(pm, Br[0])) - F,
                                   Fraction(U1 - U0, T1 - T0), "case 1")
        elif Bpr:
            ys = _lead_partition(U0, U1, Bpr, F, "case 2")
            xs = _follow_partition(T0, T1, ys, _floor(psi_inv(pm, Bpr[0])) - F,
                                   Fraction(T1 - T0, U1 - U0), "case 2")
        else:
            xs, ys = [T0, T1], [U0, U1]
        base = len(P) - 1
        Z.update(base + h for h in range(1, len(xs) - 1, 2) if len(xs) > 2)
        P.extend(xs[1:])
        Pp.extend(ys[1:])
    return P, Pp, Z, s0


def _shift_family(P, Pp, Z, count) -> list:
    out = []
    for h in range(1, count + 1):
        cuts = [Pp[0]] + [c + h - 1 for c in Pp[1:-1]] + [Pp[-1]]
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ScaleError(f"shift h={h} collapses the first or last partner interval")
        out.append(mapping_from_cuts(P, cuts, Z))
    return out


def _check_ratio_pre(n, n_prime, R, j, num, den, label):
    rho = Fraction(n_prime, n)
    if not (at_most_dyadic_power(rho / R - 1, j, num, den) and at_most_dyadic_power(1 - rho * R, j, num, den)):
        raise ContractError(f"length ratio n'/n outside the {label} bounds")


def build_G_family(n, n_prime, B, Bp, j, ps, count: int | None = None, check_pre: bool = True) -> list:
    """Class-G mappings ``Upsilon_h``, ``h = 1..count`` (default ``L_j^2``), with rigid shift identities."""
    sc = scales(ps, j)
    B = _sorted_in_range(B, n, "B")
    Bp = _sorted_in_range(Bp, n_prime, "B'")
    if check_pre:
        if j < 1:
            raise ContractError("class-G families are built for j >= 1")
        Lam = sc.L ** (ps.alpha - 1)
        if n <= Lam or n_prime <= Lam:
            raise ContractError("n and n' must exceed L_j^(alpha-1)")
        _check_ratio_pre(n, n_prime, ps.R, j, 7, 4, "(1 -+ 2^-(j+7/4)) R^-+1")
    if count is None:
        count = sc.L ** 2
    P, Pp, Z, _ = _base_marked_pair(n, n_prime, B, Bp, j, ps, check_pre=check_pre)
    fam = _shift_family(P, Pp, Z, count)
    out = []
    for gm in fam:
        why = _failed_G(gm, B, Bp, j, ps)
        if why is not None:
            raise ScaleError(f"class-G condition {why} fails for the constructed mapping")
        out.append(gm.tagged("admissible", "G"))
    return out


def build_H1_family(n, n_prime, B, j, ps, count: int | None = None, check_pre: bool = True) -> list:
    """Class-H1 mappings: an interior G-family with end segments of ``L_j^3/2`` (X) and ``L_j^3`` (Y)."""
    sc = scales(ps, j)
    B = _sorted_in_range(B, n, "B")
    L3 = sc.L3
    a = L3 // 2
    if check_pre:
        if j < 1:
            raise ContractError("class-H1 families are built for j >= 1")
        Lam = sc.L ** (ps.alpha - 1)
        if n <= Lam or n_prime <= Lam:
            raise ContractError("n and n' must exceed L_j^(alpha-1)")
        if not Fraction(1, ps.R) <= Fraction(n_prime, n) <= ps.R:
            raise ContractError("length ratio n'/n outside [1/R, R]")
        if len(B) > ps.k0:
            raise ContractError(f"at most k0 = {ps.k0} bad indices")
        _check_margins(n, n_prime, B, [], L3)
    n_in, np_in = n - 2 * a, n_prime - 2 * L3
    if n_in <= L3 or np_in <= L3:
        raise ScaleError("interior segments do not exceed L_j^3")
    inner = build_G_family(n_in, np_in, [b - a for b in B], [], j, ps, count=count, check_pre=False)
    out = []
    for g in inner:
        P = (0,) + tuple(c + a for c in g.P) + (n,)
        Pp = (0,) + tuple(c + L3 for c in g.Pp) + (n_prime,)
        Z = frozenset(r + 1 for r in g.Z)
        gm = mapping_from_cuts(P, Pp, Z)
        why = _failed_H1(gm, B, n_prime, j, ps)
        if why is not None:
            raise ScaleError(f"class-H1 condition {why} fails for the constructed mapping")
        out.append(gm.tagged("admissible", "H1"))
    return out


def h2_step(n, n_prime, B, j, ps) -> tuple:
    """Arithmetic of the H2 construction: ``(k, r, marked, s, r')``."""
    sc = scales(ps, j)
    L3, Rj = sc.L3, sc.R_j
    k, r = divmod(n - 2 * L3, Rj)
    # X cuts: 0, L3, L3 + Rj, ..., L3 + k Rj, [n - L3], n
    P = [0] + [L3 + h * Rj for h in range(k + 1)]
    if r > 0:
        P.append(n - L3)
    P.append(n)
    z = len(P) - 1
    B_P = {bisect.bisect_left(P, x) - 1 for x in B}
    extra = {k + 1} if r > 0 else set()
    middle_marked = B_P | extra
    marked_len = sum(P[h + 1] - P[h] for h in middle_marked)
    d = (k + 1 if r > 0 else k) - len(middle_marked)
    if d <= 0:
        raise InvariantViolation("no unmarked R_j interval left for the H2 construction")
    s, rp = divmod(n_prime - 2 * L3 - marked_len, d)
    return P, z, middle_marked, s, rp


def build_H2(n, n_prime, B, j, ps, check_pre: bool = True) -> GeneralizedMapping:
    """Class-H2 mapping: unmarked X steps of exactly ``R_j``, Y steps ``s`` or ``s+1``."""
    sc = scales(ps, j)
    B = _sorted_in_range(B, n, "B")
    L3 = sc.L3
    if check_pre:
        if j < 1:
            raise ContractError("class-H2 mappings are built for j >= 1")
        Lam = sc.L ** (ps.alpha - 1)
        if n <= Lam or n_prime <= Lam:
            raise ContractError("n and n' must exceed L_j^(alpha-1)")
        if not Fraction(3, 2 * ps.R) <= Fraction(n_prime, n) <= Fraction(2 * ps.R, 3):
            raise ContractError("length ratio n'/n outside [3/(2R), 2R/3]")
        if len(B) * 10 * sc.R_plus > n - 2 * L3:
            raise ContractError("|B| exceeds (n - 2 L_j^3)/(10 R_j^+)")
        _check_margins(n, n_prime, B, [], L3)
    if n - 2 * L3 < sc.R_j:
        raise ScaleError("n - 2 L_j^3 is shorter than one R_j step")
    P, z, middle_marked, s, rp = h2_step(n, n_prime, B, j, ps)
    if not sc.R_minus <= s <= sc.R_plus - 1:
        raise InvariantViolation(f"H2 step size s={s} outside [R_j^-, R_j^+ - 1] = [{sc.R_minus}, {sc.R_plus - 1}]")
    Pp = [0, L3]
    t = 0
    for h in range(1, z - 1):
        if h in middle_marked:
            Pp.append(Pp[-1] + P[h + 1] - P[h])
        else:
            t += 1
            Pp.append(Pp[-1] + (s + 1 if t <= rp else s))
    Pp.append(n_prime)
    if Pp[-2] != n_prime - L3:
        raise InvariantViolation("H2 partner cuts do not end at n' - L_j^3")
    Z = frozenset(middle_marked) | {0, z - 1}
    gm = mapping_from_cuts(P, Pp, Z)
    why = _failed_H2(gm, B, n_prime, j, ps)
    if why is not None:
        raise ScaleError(f"class-H2 condition {why} fails for the constructed mapping")
    return gm.tagged("admissible", "H2")


# ---------------------------------------------------------------------------
# compress / expand schedule and witness composition

def compress_embed_schedule(n, n_prime, j, ps, check_pre: bool = True) -> list:
    """Pairs ``((x0, x1), (y0, y1))`` of sub-block cut ranges.

    ``n = k R_j + r``: ``k`` X-steps of exactly ``R_j`` against Y-steps of
    ``s`` or ``s+1`` with ``s = floor((n'-r)/k)``, then ``r`` singleton pairs.
    Every Y-step lies in ``[R_j^-, R_j^+]``, the range good segments can be
    compressed or expanded into; otherwise :class:`ScaleError`.
    """
    sc = scales(ps, j)
    Rj = sc.R_j
    if check_pre:
        if n <= sc.L:
            raise ContractError("n must exceed L_j")
        _check_ratio_pre(n, n_prime, ps.R, j, 5, 4, "(1 -+ 2^-(j+5/4)) R^-+1")
    k, r = divmod(n, Rj)
    if k == 0:
        raise ScaleError("n is shorter than one R_j step")
    s, extra = divmod(n_prime - r, k)
    if not (sc.R_minus <= s and s + (1 if extra else 0) <= sc.R_plus):
        raise ScaleError(f"Y-step sizes {s}..{s + (1 if extra else 0)} leave [R_j^-, R_j^+] = "
                         f"[{sc.R_minus}, {sc.R_plus}]")
    out = []
    y = 0
    for i in range(k):
        step = s + 1 if i < extra else s
        out.append(((i * Rj, (i + 1) * Rj), (y, y + step)))
        y += step
    for t in range(r):
        out.append(((k * Rj + t, k * Rj + t + 1), (y + t, y + t + 1)))
    return out


def apply_mapping_embed(Xblocks: Sequence, Yblocks: Sequence, gm: GeneralizedMapping,
                        pair_oracle: Callable, good_oracles, j: int, ps: ParameterSet) -> EmbedWitness | None:
    """Compose a character-level witness for ``X -> Y`` from a class-checked mapping.

    ``pair_oracle(xchars, ychars)`` returns a witness or ``None`` for two
    character segments.  Singleton pairs are discharged by it directly; long
    intervals are split by :func:`compress_embed_schedule` (or taken whole when
    they already form an ``R_j``-step) and each piece is discharged likewise.
    ``good_oracles = (good_x, good_y)`` check that long intervals are all good.
    """
    if not gm.tags & {"G", "H1", "H2"}:
        raise ContractError("mapping carries no class tag (G, H1 or H2)")
    if gm.n != len(Xblocks) or gm.n_prime != len(Yblocks):
        raise ContractError("mapping lengths do not match the block sequences")
    sc = scales(ps, j)
    good_x, good_y = good_oracles

    def chars(blocks, a, b):
        return b"".join(blk.chars for blk in blocks[a:b])

    parts = []
    for (x0, x1), (y0, y1) in gm.fine_blocks():
        lx, ly = x1 - x0, y1 - y0
        if lx == 1 and ly == 1:
            pieces = [((x0, x1), (y0, y1))]
        else:
            if not all(good_x(b) for b in Xblocks[x0:x1]) or not all(good_y(b) for b in Yblocks[y0:y1]):
                raise ContractError("a long interval of the mapping contains a bad sub-block")
            if lx == sc.R_j and sc.R_minus <= ly <= sc.R_plus:
                pieces = [((x0, x1), (y0, y1))]
            else:
                sched = compress_embed_schedule(lx, ly, j, ps, check_pre=False)
                pieces = [((x0 + a, x0 + b), (y0 + c, y0 + d)) for (a, b), (c, d) in sched]
        for (a, b), (c, d) in pieces:
            w = pair_oracle(chars(Xblocks, a, b), chars(Yblocks, c, d))
            if w is None:
                return None
            parts.append(w)
    return EmbedWitness.concat(parts)
