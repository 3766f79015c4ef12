"""The generic R-embedding relation: decider, witness verifier and brute force.

A witness is a pair of index sequences ``0 = i_0 < i_1 < ...`` and
``0 = i'_0 < i'_1 < ...`` ending exactly at ``(|X|, |Y|)``.  Every step either
advances both sides by one over a related pair, or advances one side by
``R0`` and the other by some ``t`` in ``[R0-, R0+]`` across two segments made
of good items only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from ._kernels import rembed_distance
from .errors import ContractError, ParseError, ResourceError

DEFAULT_WORK_CAP = 4 * 10 ** 9
BRUTEFORCE_MAX = 12


@dataclass(frozen=True)
class EmbedOracles:
    """Item-level oracles plus the step constants ``(R0, R0-, R0+)``.

    ``rel_matrix``/``good_x_mask``/``good_y_mask`` are optional lookup tables
    used when items are symbol indices; otherwise the callables are used.
    """

    pair: Callable[[Any, Any], bool]
    good_x: Callable[[Any], bool]
    good_y: Callable[[Any], bool]
    R0: int
    R0_minus: int
    R0_plus: int
    rel_matrix: Any = None
    good_x_mask: Any = None
    good_y_mask: Any = None

    def __post_init__(self):
        if not (1 <= self.R0_minus <= self.R0_plus) or self.R0 < 1:
            raise ContractError("step constants need R0 >= 1 and 1 <= R0- <= R0+")

    @classmethod
    def with_R(cls, pair, good_x, good_y, R: int, **tables) -> "EmbedOracles":
        return cls(pair, good_x, good_y, R0=2 * R, R0_minus=1, R0_plus=3 * R * R, **tables)

    @classmethod
    def from_spec(cls, spec, R: int) -> "EmbedOracles":
        rel = spec.relation_matrix()
        gx = np.zeros(len(spec.alphabet_x), dtype=bool)
        gx[list(spec.good_x)] = True
        gy = np.zeros(len(spec.alphabet_y), dtype=bool)
        gy[list(spec.good_y)] = True
        return cls.with_R(
            lambda a, b: bool(rel[a, b]),
            lambda a: bool(gx[a]),
            lambda b: bool(gy[b]),
            R,
            rel_matrix=rel,
            good_x_mask=gx,
            good_y_mask=gy,
        )


@dataclass(frozen=True)
class EmbedWitness:
    i_seq: tuple
    ip_seq: tuple

    def __post_init__(self):
        object.__setattr__(self, "i_seq", tuple(int(v) for v in self.i_seq))
        object.__setattr__(self, "ip_seq", tuple(int(v) for v in self.ip_seq))

    def steps(self) -> list:
        """Increments ``(di, di')`` of every step."""
        return [(self.i_seq[r + 1] - self.i_seq[r], self.ip_seq[r + 1] - self.ip_seq[r])
                for r in range(len(self.i_seq) - 1)]

    def shifted(self, di: int, dj: int) -> "EmbedWitness":
        return EmbedWitness(tuple(v + di for v in self.i_seq), tuple(v + dj for v in self.ip_seq))

    def to_text(self) -> str:
        return "i: " + " ".join(map(str, self.i_seq)) + "\ni': " + " ".join(map(str, self.ip_seq)) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EmbedWitness":
        rows = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            head, sep, rest = line.partition(":")
            if not sep or head.strip() not in ("i", "i'"):
                raise ParseError("expected a line starting with 'i:' or \"i':\"", lineno, 1)
            vals = []
            col = len(head) + 2
            for tok in rest.split():
                try:
                    vals.append(int(tok))
                except ValueError:
                    raise ParseError(f"not an integer: {tok!r}", lineno, line.find(tok, col - 1) + 1) from None
            rows[head.strip()] = vals
        if set(rows) != {"i", "i'"}:
            raise ParseError("witness needs both an 'i:' and an \"i':\" line", 1, 1)
        return cls(tuple(rows["i"]), tuple(rows["i'"]))

    @classmethod
    def concat(cls, parts: Sequence["EmbedWitness"]) -> "EmbedWitness":
        """Join witnesses of consecutive segment pairs into one witness."""
        i_seq, ip_seq = [0], [0]
        for w in parts:
            oi, oj = i_seq[-1], ip_seq[-1]
            i_seq.extend(oi + v - w.i_seq[0] for v in w.i_seq[1:])
            ip_seq.extend(oj + v - w.ip_seq[0] for v in w.ip_seq[1:])
        return cls(tuple(i_seq), tuple(ip_seq))


def _tables(X, Y, oracles: EmbedOracles):
    n, n2 = len(X), len(Y)
    if (oracles.rel_matrix is not None and oracles.good_x_mask is not None
            and oracles.good_y_mask is not None):
        xi = np.fromiter((int(v) for v in X), dtype=np.int64, count=n)
        yi = np.fromiter((int(v) for v in Y), dtype=np.int64, count=n2)
        rel = np.ascontiguousarray(oracles.rel_matrix[np.ix_(xi, yi)]) if n and n2 else np.zeros((n, n2), bool)
        return rel, oracles.good_x_mask[xi].copy(), oracles.good_y_mask[yi].copy()
    ux, xi = _index_items(X)
    uy, yi = _index_items(Y)
    small = np.zeros((len(ux), len(uy)), dtype=bool)
    for a, xa in enumerate(ux):
        for b, yb in enumerate(uy):
            small[a, b] = bool(oracles.pair(xa, yb))
    gxs = np.array([bool(oracles.good_x(v)) for v in ux], dtype=bool)
    gys = np.array([bool(oracles.good_y(v)) for v in uy], dtype=bool)
    rel = small[np.ix_(xi, yi)] if n and n2 else np.zeros((n, n2), bool)
    return np.ascontiguousarray(rel), gxs[xi] if n else np.zeros(0, bool), gys[yi] if n2 else np.zeros(0, bool)


def _index_items(items):
    uniq, ids, seen = [], [], {}
    for v in items:
        k = seen.get(v)
        if k is None:
            k = seen[v] = len(uniq)
            uniq.append(v)
        ids.append(k)
    return uniq, np.array(ids, dtype=np.int64)


def rembed_decide(X: Sequence, Y: Sequence, oracles: EmbedOracles,
                  work_cap: int = DEFAULT_WORK_CAP) -> EmbedWitness | None:
    """Decide ``X -> Y`` for finite segments and return a witness if it holds.

    Among all witnesses the one with the fewest steps is returned, ties broken
    lexicographically by step type (paired, X-jump, Y-jump) and then by the
    smaller jump length.
    """
    n, n2 = len(X), len(Y)
    work = (n + 1) * (n2 + 1) * oracles.R0_plus
    if work > work_cap:
        raise ResourceError(f"rembed work (|X|+1)*(|Y|+1)*R0+ = {work} exceeds cap {work_cap}")
    rel, gx, gy = _tables(X, Y, oracles)
    dist = rembed_distance(rel, gx, gy, oracles.R0, oracles.R0_minus, oracles.R0_plus)
    if dist[0, 0] < 0:
        return None
    return _walk(dist, rel, gx, gy, oracles)


def rembed_holds(X, Y, oracles: EmbedOracles, work_cap: int = DEFAULT_WORK_CAP) -> bool:
    n, n2 = len(X), len(Y)
    work = (n + 1) * (n2 + 1) * oracles.R0_plus
    if work > work_cap:
        raise ResourceError(f"rembed work (|X|+1)*(|Y|+1)*R0+ = {work} exceeds cap {work_cap}")
    rel, gx, gy = _tables(X, Y, oracles)
    return bool(rembed_distance(rel, gx, gy, oracles.R0, oracles.R0_minus, oracles.R0_plus)[0, 0] >= 0)


def _walk(dist, rel, gx, gy, o: EmbedOracles) -> EmbedWitness:
    n, n2 = dist.shape[0] - 1, dist.shape[1] - 1
    px = np.concatenate(([0], np.cumsum(gx)))
    py = np.concatenate(([0], np.cumsum(gy)))

    def good(p, a, t):
        return p[a + t] - p[a] == t

    a = b = 0
    i_seq, ip_seq = [0], [0]
    while (a, b) != (n, n2):
        d = dist[a, b]
        nxt = None
        if a < n and b < n2 and rel[a, b] and dist[a + 1, b + 1] == d - 1:
            nxt = (a + 1, b + 1)
        if nxt is None and a + o.R0 <= n and good(px, a, o.R0):
            for t in range(o.R0_minus, o.R0_plus + 1):
                if b + t > n2:
                    break
                if good(py, b, t) and dist[a + o.R0, b + t] == d - 1:
                    nxt = (a + o.R0, b + t)
                    break
        if nxt is None and b + o.R0 <= n2 and good(py, b, o.R0):
            for t in range(o.R0_minus, o.R0_plus + 1):
                if a + t > n:
                    break
                if good(px, a, t) and dist[a + t, b + o.R0] == d - 1:
                    nxt = (a + t, b + o.R0)
                    break
        assert nxt is not None, "distance table inconsistent"
        a, b = nxt
        i_seq.append(a)
        ip_seq.append(b)
    return EmbedWitness(tuple(i_seq), tuple(ip_seq))


def step_valid(X, Y, a, b, di, dj, o: EmbedOracles) -> bool:
    """Check one step starting at prefix pair ``(a, b)``."""
    if a + di > len(X) or b + dj > len(Y) or di < 1 or dj < 1:
        return False
    if di == 1 and dj == 1 and o.pair(X[a], Y[b]):
        return True
    jump = (di == o.R0 and o.R0_minus <= dj <= o.R0_plus) or (dj == o.R0 and o.R0_minus <= di <= o.R0_plus)
    if not jump:
        return False
    return all(o.good_x(v) for v in X[a:a + di]) and all(o.good_y(v) for v in Y[b:b + dj])


def rembed_verify(X, Y, witness: EmbedWitness, oracles: EmbedOracles) -> bool:
    """True iff the witness is well formed and every step satisfies its condition."""
    i_seq, ip_seq = witness.i_seq, witness.ip_seq
    if len(i_seq) != len(ip_seq) or not i_seq or i_seq[0] != 0 or ip_seq[0] != 0:
        return False
    if i_seq[-1] != len(X) or ip_seq[-1] != len(Y):
        return False
    for r in range(len(i_seq) - 1):
        if not step_valid(X, Y, i_seq[r], ip_seq[r], i_seq[r + 1] - i_seq[r], ip_seq[r + 1] - ip_seq[r], oracles):
            return False
    return True


def rembed_bruteforce(X, Y, oracles: EmbedOracles) -> bool:
    """Exhaustive search over all step sequences (no memoisation)."""
    n, n2 = len(X), len(Y)
    if n > BRUTEFORCE_MAX or n2 > BRUTEFORCE_MAX:
        raise ResourceError(f"brute force limited to length {BRUTEFORCE_MAX}, got ({n}, {n2})")
    o = oracles
    candidates = [(1, 1)]
    for t in range(o.R0_minus, o.R0_plus + 1):
        candidates.append((o.R0, t))
        candidates.append((t, o.R0))

    def search(a, b):
        if a == n and b == n2:
            return True
        for di, dj in candidates:
            if step_valid(X, Y, a, b, di, dj, o) and search(a + di, b + dj):
                return True
        return False

    return search(0, 0)
