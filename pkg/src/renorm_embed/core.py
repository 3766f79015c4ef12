"""Parameters, per-level scale constants, problem specifications and RNG streams.

Everything here is immutable.  Scale quantities are exact: lengths are Python
integers, dyadic constants are :class:`fractions.Fraction` values, and every
fractional power of ``L_j`` is floored with an integer root so that no
decision ever depends on floating point.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import ContractError, ResourceError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib


# ---------------------------------------------------------------------------
# exact integer helpers

def iroot(x: int, k: int) -> int:
    """Return floor(x ** (1/k)) for a non-negative integer ``x``."""
    if x < 0 or k < 1:
        raise ContractError("iroot needs x >= 0 and k >= 1")
    if k == 1 or x < 2:
        return x
    if k == 2:
        from math import isqrt
        return isqrt(x)
    # Newton iteration from an over-estimate.
    r = 1 << -(-x.bit_length() // k)
    while True:
        s = ((k - 1) * r + x // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r ** k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def floor_pow(base: int, num: int, den: int) -> int:
    """Exact floor of ``base ** (num/den)`` for positive integers."""
    return iroot(base ** num, den)


def below_dyadic_power(x: Fraction, j: int, num: int, den: int) -> bool:
    """Decide ``x < 2 ** -(j + num/den)`` exactly.

    Both sides are raised to the ``den``-th power, which makes the right-hand
    side the rational ``2 ** -(j*den + num)``.
    """
    x = Fraction(x)
    if x <= 0:
        return True
    return x ** den * (2 ** (j * den + num)) < 1


def at_most_dyadic_power(x: Fraction, j: int, num: int, den: int) -> bool:
    """Decide ``x <= 2 ** -(j + num/den)`` exactly."""
    x = Fraction(x)
    if x <= 0:
        return True
    return x ** den * (2 ** (j * den + num)) <= 1


# ---------------------------------------------------------------------------
# parameter sets

CONSTRAINTS = (
    ("alpha>9", lambda p: p.alpha > 9),
    ("delta>max(2*alpha,48)", lambda p: p.delta > max(2 * p.alpha, 48)),
    ("beta>alpha*(delta+1)", lambda p: p.beta > p.alpha * (p.delta + 1)),
    ("m>9*alpha*beta", lambda p: p.m > 9 * p.alpha * p.beta),
    ("k0>36*alpha*beta", lambda p: p.k0 > 36 * p.alpha * p.beta),
    ("R>6*(m+1)", lambda p: p.R > 6 * (p.m + 1)),
)


@dataclass(frozen=True)
class ParameterSet:
    alpha: int
    beta: int
    delta: int
    m: int
    k0: int
    R: int
    L0: int
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        for f in ("alpha", "beta", "delta", "m", "k0", "R", "L0"):
            v = getattr(self, f)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ContractError(f"parameter {f} must be a positive integer, got {v!r}")
        if self.alpha < 2:
            raise ContractError("parameter alpha must be at least 2")

    @property
    def conforming(self) -> bool:
        return all(check(self) for _, check in CONSTRAINTS)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("alpha", "beta", "delta", "m", "k0", "R", "L0")}

    def replace(self, **changes) -> "ParameterSet":
        name = changes.pop("name", self.name)
        d = self.as_dict()
        d.update(changes)
        return ParameterSet(name=name, **d)


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple  # of (label, passed)
    conforming: bool
    usable: bool

    def failed(self) -> list:
        return [label for label, ok in self.checks if not ok]


def validate_parameters(ps: ParameterSet) -> ValidationReport:
    """Evaluate every parameter constraint; never raises."""
    checks = tuple((label, bool(check(ps))) for label, check in CONSTRAINTS)
    return ValidationReport(checks=checks, conforming=all(ok for _, ok in checks), usable=True)


PROFILES = {
    # Display and validation only: every level-1 quantity is astronomically large.
    "reference": ParameterSet(alpha=10, beta=600, delta=50, m=60000, k0=300000, R=400000,
                          L0=10 ** 12, name="reference"),
    # The small profile used for block sampling and length moments.
    "micro": ParameterSet(alpha=3, beta=2, delta=4, m=4, k0=2, R=1, L0=4, name="micro"),
    # Smallest scale: level-1 blocks have 18..34 characters, so level-1
    # enumeration and catalogs are tractable.
    "micro-tiny": ParameterSet(alpha=2, beta=2, delta=4, m=4, k0=1, R=2, L0=2, name="micro-tiny"),
    # Mapping builders at level 1: R=2 keeps the H1/H2 ratio windows non-empty.
    "micro-maps": ParameterSet(alpha=2, beta=3, delta=5, m=4, k0=1, R=2, L0=4, name="micro-maps"),
}


def get_profile(name: str) -> ParameterSet:
    try:
        return PROFILES[name]
    except KeyError:
        raise ContractError(f"unknown profile {name!r}; known: {', '.join(sorted(PROFILES))}") from None


# ---------------------------------------------------------------------------
# scales

MAX_SCALE_BITS = 200_000


@dataclass(frozen=True)
class ScaleRecord:
    j: int
    L: int
    R_j: int
    R_minus: int
    R_plus: int
    m_j: Fraction
    fl32: int
    fl52: int
    fl178: int
    fl94: int
    fl54: int

    @property
    def L3(self) -> int:
        return self.L ** 3


@lru_cache(maxsize=256)
def scales(ps: ParameterSet, j: int) -> ScaleRecord:
    """Exact per-level constants for level ``j``."""
    if j < 0:
        raise ContractError("level j must be non-negative")
    bits = ps.alpha ** j * ps.L0.bit_length()
    if bits > MAX_SCALE_BITS:
        raise ResourceError(f"L_{j} = L0^(alpha^{j}) needs about {bits} bits, above the cap of {MAX_SCALE_BITS}")
    L = ps.L0 ** (ps.alpha ** j)
    R_minus = 2 ** (2 * j + 1) - 2 ** j
    R_plus = ps.R ** 2 * (2 ** (2 * j + 1) + 2 ** j)
    # the defining forms 4^j(2-2^-j) and 4^j R^2 (2+2^-j) are integers
    assert Fraction(4 ** j) * (2 - Fraction(1, 2 ** j)) == R_minus
    assert Fraction(4 ** j) * ps.R ** 2 * (2 + Fraction(1, 2 ** j)) == R_plus
    return ScaleRecord(
        j=j,
        L=L,
        R_j=4 ** j * 2 * ps.R,
        R_minus=R_minus,
        R_plus=R_plus,
        m_j=ps.m + Fraction(1, 2 ** j),
        fl32=floor_pow(L, 3, 2),
        fl52=floor_pow(L, 5, 2),
        fl178=floor_pow(L, 17, 8),
        fl94=floor_pow(L, 9, 4),
        fl54=floor_pow(L, 5, 4),
    )


def min_block_subcount(ps: ParameterSet, j: int) -> int:
    """Smallest number of level-j sub-blocks in a level-(j+1) block."""
    L = scales(ps, j).L
    return L ** (ps.alpha - 1) + 2 * L ** 3


def max_good_subcount(ps: ParameterSet, j: int) -> int:
    """Largest sub-block count allowed for a good level-(j+1) block."""
    L = scales(ps, j).L
    return L ** (ps.alpha - 1) + L ** 5


# ---------------------------------------------------------------------------
# problem specifications

MAX_ALPHABET = 256


def _frac(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(v).limit_denominator(10 ** 12)
    return Fraction(v)


@dataclass(frozen=True)
class ProblemSpec:
    """Alphabets, symbol laws, the relation and the good sets.

    Symbols are referred to by their index into the alphabet tuples.  A
    non-zero ``tail_x``/``tail_y`` records probability mass carried by symbols
    beyond the listed (truncated) alphabet.
    """

    name: str
    alphabet_x: tuple
    alphabet_y: tuple
    mu_x: tuple
    mu_y: tuple
    relation: frozenset
    good_x: frozenset
    good_y: frozenset
    tail_x: Fraction = Fraction(0)
    tail_y: Fraction = Fraction(0)
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mu_x", tuple(_frac(v) for v in self.mu_x))
        object.__setattr__(self, "mu_y", tuple(_frac(v) for v in self.mu_y))
        object.__setattr__(self, "tail_x", _frac(self.tail_x))
        object.__setattr__(self, "tail_y", _frac(self.tail_y))
        object.__setattr__(self, "relation", frozenset((int(a), int(b)) for a, b in self.relation))
        object.__setattr__(self, "good_x", frozenset(int(a) for a in self.good_x))
        object.__setattr__(self, "good_y", frozenset(int(b) for b in self.good_y))
        nx, ny = len(self.alphabet_x), len(self.alphabet_y)
        if not (0 < nx <= MAX_ALPHABET and 0 < ny <= MAX_ALPHABET):
            raise ContractError(f"alphabets must have 1..{MAX_ALPHABET} symbols")
        if len(self.mu_x) != nx or len(self.mu_y) != ny:
            raise ContractError("one probability per symbol is required")
        for side, mu, tail in (("X", self.mu_x, self.tail_x), ("Y", self.mu_y, self.tail_y)):
            if any(p < 0 for p in mu) or tail < 0:
                raise ContractError(f"negative probability on side {side}")
            if sum(mu) + tail != 1:
                raise ContractError(f"side {side}: probabilities plus tail deficit must sum to 1")
        for a, b in self.relation:
            if not (0 <= a < nx and 0 <= b < ny):
                raise ContractError(f"relation pair {(a, b)} out of range")
        if not all(0 <= a < nx for a in self.good_x) or not all(0 <= b < ny for b in self.good_y):
            raise ContractError("good set index out of range")
        for a in self.good_x:
            for b in self.good_y:
                if (a, b) not in self.relation:
                    raise ContractError(f"good pair ({self.alphabet_x[a]}, {self.alphabet_y[b]}) missing from relation")

    # -- queries
    def relates(self, x: int, y: int) -> bool:
        return (x, y) in self.relation

    def relation_matrix(self) -> np.ndarray:
        m = np.zeros((len(self.alphabet_x), len(self.alphabet_y)), dtype=bool)
        for a, b in self.relation:
            m[a, b] = True
        return m

    def mu(self, side: str) -> tuple:
        return self.mu_x if side == "X" else self.mu_y

    def good(self, side: str) -> frozenset:
        return self.good_x if side == "X" else self.good_y

    def alphabet(self, side: str) -> tuple:
        return self.alphabet_x if side == "X" else self.alphabet_y

    def tail(self, side: str) -> Fraction:
        return self.tail_x if side == "X" else self.tail_y

    def base_embedding_probability(self, side: str, symbol: int) -> tuple:
        """Exact ``S_0`` of one symbol as ``(lo, hi)``; the tail widens ``hi``."""
        if side == "X":
            lo = sum((self.mu_y[b] for b in range(len(self.alphabet_y)) if (symbol, b) in self.relation), Fraction(0))
            return lo, lo + self.tail_y
        lo = sum((self.mu_x[a] for a in range(len(self.alphabet_x)) if (a, symbol) in self.relation), Fraction(0))
        return lo, lo + self.tail_x

    def check_tail(self, L0: int, upto: int | None = None) -> bool:
        """Check that mass beyond index k is at most 1/k for L0 <= k <= upto."""
        for mu, tail in ((self.mu_x, self.tail_x), (self.mu_y, self.tail_y)):
            last = upto if upto is not None else len(mu)
            beyond = sum(mu[L0:], Fraction(0)) + tail
            for k in range(L0, last + 1):
                if beyond * k > 1:
                    return False
                if k < len(mu):
                    beyond -= mu[k]
        return True

    def oracles(self, R: int):
        from .rembed import EmbedOracles
        return EmbedOracles.from_spec(self, R)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "alphabet_x": list(self.alphabet_x),
            "alphabet_y": list(self.alphabet_y),
            "mu_x": [str(p) for p in self.mu_x],
            "mu_y": [str(p) for p in self.mu_y],
            "relation": sorted([a, b] for a, b in self.relation),
            "good_x": sorted(self.good_x),
            "good_y": sorted(self.good_y),
            "tail_x": str(self.tail_x),
            "tail_y": str(self.tail_y),
            "params": [[k, str(v)] for k, v in self.params],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProblemSpec":
        return cls(
            name=d.get("name", "custom"),
            alphabet_x=tuple(d["alphabet_x"]),
            alphabet_y=tuple(d["alphabet_y"]),
            mu_x=tuple(Fraction(p) for p in d["mu_x"]),
            mu_y=tuple(Fraction(p) for p in d["mu_y"]),
            relation=frozenset(tuple(p) for p in d["relation"]),
            good_x=frozenset(d["good_x"]),
            good_y=frozenset(d["good_y"]),
            tail_x=Fraction(d.get("tail_x", 0)),
            tail_y=Fraction(d.get("tail_y", 0)),
            params=tuple((k, v) for k, v in d.get("params", [])),
        )


def check_symbols(seq, alphabet_size: int) -> tuple:
    """Validate a symbol sequence against an alphabet and return it as a tuple."""
    out = tuple(int(s) for s in seq)
    for s in out:
        if not 0 <= s < alphabet_size:
            raise ContractError(f"symbol index {s} outside alphabet of size {alphabet_size}")
    return out


# ---------------------------------------------------------------------------
# randomness

def rng_stream(master_seed: int, stream_id) -> np.random.Generator:
    """Independent, reproducible generator for ``(master_seed, stream_id)``.

    ``stream_id`` may be an integer or a tuple of integers; distinct ids map to
    distinct spawn keys of one :class:`numpy.random.SeedSequence`.
    """
    key = tuple(stream_id) if isinstance(stream_id, (tuple, list)) else (stream_id,)
    ss = np.random.SeedSequence(entropy=int(master_seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# configuration files

def load_config(path) -> dict:
    """Read a TOML configuration file (``[parameters]`` and ``[problem]`` tables)."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def parameters_from_config(cfg: Mapping) -> ParameterSet:
    if "profile" in cfg and "parameters" not in cfg:
        return get_profile(cfg["profile"])
    table = dict(cfg.get("parameters", cfg))
    base = table.pop("profile", None)
    if base is not None:
        return get_profile(base).replace(**{k: int(v) for k, v in table.items()})
    try:
        return ParameterSet(**{k: int(table[k]) for k in ("alpha", "beta", "delta", "m", "k0", "R", "L0")},
                            name=str(table.get("name", "custom")))
    except KeyError as exc:
        raise ContractError(f"parameter table is missing {exc.args[0]!r}") from None
