"""Enumeration of particle configurations and their summed weights.

Configurations are plain ``int`` bit-sets: bit ``x`` is set when vertex
``x`` is occupied.  Enumeration of a fixed-size class walks the integers
with that popcount in increasing order (Gosper's successor), so the order
is canonical and nothing is materialized.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Iterator

from .graph import ENUMERATION_MAX_VERTICES, Graph, LogWeight, resolve_mode

__all__ = [
    "CapExceededError",
    "DEFAULT_CAP",
    "StationaryDistribution",
    "to_mask",
    "members",
    "popcount",
    "enumerate_class",
    "enumerate_constrained",
    "class_weight",
    "inclusion_weights",
    "stationary_measure",
]

DEFAULT_CAP = 10**7


class CapExceededError(ValueError):
    """The requested exact computation would enumerate too many configurations."""


def to_mask(vertices: Iterable[int]) -> int:
    mask = 0
    for v in vertices:
        if v < 0:
            raise ValueError(f"negative vertex id {v}")
        mask |= 1 << v
    return mask


def members(mask: int) -> tuple[int, ...]:
    out = []
    x = 0
    while mask:
        if mask & 1:
            out.append(x)
        mask >>= 1
        x += 1
    return tuple(out)


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def check_cap(n: int, k: int, cap: int | None = DEFAULT_CAP) -> int:
    if n > ENUMERATION_MAX_VERTICES:
        raise CapExceededError(
            f"exact enumeration supports at most {ENUMERATION_MAX_VERTICES} vertices (got {n}); "
            "use the simulator instead"
        )
    size = math.comb(n, k)
    if cap is not None and size > cap:
        raise CapExceededError(
            f"C({n},{k}) = {size} configurations exceeds the enumeration cap {cap}; "
            "raise the cap or use the simulator instead"
        )
    return size


def _gosper(n: int, k: int) -> Iterator[int]:
    if k == 0:
        yield 0
        return
    limit = 1 << n
    v = (1 << k) - 1
    while v < limit:
        yield v
        low = v & -v
        ripple = v + low
        v = (((ripple ^ v) >> 2) // low) | ripple


def enumerate_class(n: int, k: int) -> Iterator[int]:
    """All size-``k`` subsets of ``range(n)`` as bit-sets, ascending."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= K <= N, got K={k}, N={n}")
    if n > ENUMERATION_MAX_VERTICES:
        raise CapExceededError(f"enumeration supports at most {ENUMERATION_MAX_VERTICES} vertices")
    return _gosper(n, k)


def enumerate_constrained(
    n: int, k: int, include: Iterable[int] = (), exclude: Iterable[int] = ()
) -> Iterator[int]:
    """Size-``k`` subsets containing every vertex of ``include`` and none of ``exclude``."""
    inc, exc = to_mask(include), to_mask(exclude)
    if inc & exc:
        raise ValueError("include and exclude sets overlap")
    if (inc | exc) >> n:
        raise ValueError("include/exclude vertex out of range")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= K <= N, got K={k}, N={n}")
    free = [x for x in range(n) if not (inc | exc) >> x & 1]
    need = k - popcount(inc)
    if need < 0 or need > len(free):
        return iter(())
    return _deposit(enumerate_class(len(free), need), free, inc)


def _deposit(compact: Iterator[int], free: list[int], base: int) -> Iterator[int]:
    # order-preserving: free positions are increasing
    for c in compact:
        mask = base
        i = 0
        while c:
            if c & 1:
                mask |= 1 << free[i]
            c >>= 1
            i += 1
        yield mask


# --- weights -----------------------------------------------------------------

def _integer_weights(g: Graph) -> tuple[list[int], int]:
    """Integers ``a`` and scale ``L`` with ``D(z) == a[z] / L`` exactly."""
    ds = [Fraction(d) / r for d, r in zip(g.degrees, g.rates)]
    scale = reduce(math.lcm, (d.denominator for d in ds), 1)
    return [int(d * scale) for d in ds], scale


def _log_weights(g: Graph) -> list[float]:
    return [math.log(d) - math.log(r) for d, r in zip(g.degrees, g.rates)]


class _Neumaier:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float):
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t

    @property
    def total(self) -> float:
        return self.s + self.c


def class_weight(g: Graph, configs: Iterable[int], mode: str | None = None):
    """Sum of configuration weights over ``configs``.

    Returns a Fraction (rational mode) or LogWeight; an empty stream gives
    the integer ``0`` rather than a weight.
    """
    mode = resolve_mode(g, mode)
    full = (1 << g.num_vertices) - 1
    if mode == "rational":
        a, scale = _integer_weights(g)
        by_size: dict[int, int] = {}
        for eta in configs:
            if eta & ~full:
                raise ValueError("configuration member out of range")
            w = 1
            k = 0
            for z in members(eta):
                w *= a[z]
                k += 1
            by_size[k] = by_size.get(k, 0) + w
        if not by_size:
            return 0
        return sum((Fraction(s, scale**k) for k, s in by_size.items()), Fraction(0))

    logs = _log_weights(g)
    desc = sorted(logs, reverse=True)
    accs: dict[int, _Neumaier] = {}
    for eta in configs:
        if eta & ~full:
            raise ValueError("configuration member out of range")
        ms = members(eta)
        k = len(ms)
        # sum of the k largest logs bounds every size-k term: no overflow
        ref = math.fsum(desc[:k])
        accs.setdefault(k, _Neumaier()).add(math.exp(math.fsum(logs[z] for z in ms) - ref))
    if not accs:
        return 0
    terms = [math.log(acc.total) + math.fsum(desc[:k]) for k, acc in accs.items()]
    top = max(terms)
    return LogWeight(top + math.log(math.fsum(math.exp(t - top) for t in terms)))


def inclusion_weights(
    g: Graph,
    k: int,
    mode: str | None = None,
    method: str = "enumerate",
    cap: int | None = DEFAULT_CAP,
):
    """Return ``(total, per_vertex)`` where ``total`` is the weight of the
    whole size-``k`` class and ``per_vertex[x]`` the weight of its members
    that contain ``x``.

    ``method="enumerate"`` makes one pass over the class (subject to
    ``cap``).  ``method="polynomial"`` uses elementary symmetric
    polynomials of the vertex weights instead, which needs no enumeration.
    """
    n = g.num_vertices
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= K <= N, got K={k}, N={n}")
    mode = resolve_mode(g, mode)
    if method == "enumerate":
        check_cap(n, k, cap)
        return _inclusion_enumerate(g, k, mode)
    if method == "polynomial":
        return _inclusion_polynomial(g, k, mode)
    raise ValueError(f"unknown method {method!r}")


def _inclusion_enumerate(g: Graph, k: int, mode: str):
    n = g.num_vertices
    if mode == "rational":
        a, scale = _integer_weights(g)
        total = 0
        per = [0] * n
        for eta in enumerate_class(n, k):
            ms = members(eta)
            w = 1
            for z in ms:
                w *= a[z]
            total += w
            for z in ms:
                per[z] += w
        denom = scale**k
        return Fraction(total, denom), [Fraction(p, denom) for p in per]

    logs = _log_weights(g)
    ref = math.fsum(sorted(logs, reverse=True)[:k])
    total = _Neumaier()
    per = [_Neumaier() for _ in range(n)]
    for eta in enumerate_class(n, k):
        ms = members(eta)
        w = math.exp(math.fsum(logs[z] for z in ms) - ref)
        total.add(w)
        for z in ms:
            per[z].add(w)
    return (
        LogWeight(math.log(total.total) + ref),
        [LogWeight(math.log(p.total) + ref) if p.total > 0 else 0 for p in per],
    )


def _esp_int(a: list[int], k: int) -> list[int]:
    e = [1] + [0] * k
    for w in a:
        for j in range(k, 0, -1):
            e[j] += e[j - 1] * w
    return e


def _esp_log(logs: list[float], k: int) -> list[float]:
    e = [0.0] + [-math.inf] * k
    for w in logs:
        for j in range(k, 0, -1):
            lo, hi = sorted((e[j], e[j - 1] + w))
            if hi > -math.inf:
                e[j] = hi + math.log1p(math.exp(lo - hi))
    return e


def _inclusion_polynomial(g: Graph, k: int, mode: str):
    n = g.num_vertices
    if mode == "rational":
        a, scale = _integer_weights(g)
        e = _esp_int(a, k)
        denom = scale**k
        per = []
        for x in range(n):
            # peel x off: e_j(without x) = e_j - a_x * e_{j-1}(without x)
            prev = 1
            for j in range(1, k):
                prev = e[j] - a[x] * prev
            per.append(Fraction(a[x] * prev, denom) if k > 0 else Fraction(0))
        return Fraction(e[k], denom), per

    logs = _log_weights(g)
    e = _esp_log(logs, k)
    per = []
    for x in range(n):
        if k == 0:
            per.append(0)
            continue
        rest = _esp_log(logs[:x] + logs[x + 1:], k - 1)
        per.append(LogWeight(logs[x] + rest[k - 1]) if rest[k - 1] > -math.inf else 0)
    return LogWeight(e[k]), per


# --- stationary law ----------------------------------------------------------

@dataclass(frozen=True)
class StationaryDistribution:
    """Product-form law on the size-``k`` class, indexed in canonical order."""

    k: int
    support: tuple[int, ...]
    mass: tuple
    normalizer: object

    def as_dict(self) -> dict[int, object]:
        return dict(zip(self.support, self.mass))

    def __getitem__(self, eta: int):
        i = _bisect(self.support, eta)
        if i is None:
            return 0
        return self.mass[i]


def _bisect(seq, item):
    i = bisect.bisect_left(seq, item)
    return i if i < len(seq) and seq[i] == item else None


def stationary_measure(
    g: Graph, k: int, mode: str | None = None, cap: int | None = DEFAULT_CAP
) -> StationaryDistribution:
    """Probability proportional to the configuration weight on the size-``k`` class."""
    n = g.num_vertices
    if not 0 < k <= n:
        raise ValueError(f"K must satisfy 0 < K <= N (got K={k}, N={n})")
    check_cap(n, k, cap)
    mode = resolve_mode(g, mode)
    support = tuple(enumerate_class(n, k))
    if mode == "rational":
        a, _ = _integer_weights(g)
        raw = []
        for eta in support:
            w = 1
            for z in members(eta):
                w *= a[z]
            raw.append(w)
        total = sum(raw)
        mass = tuple(Fraction(w, total) for w in raw)
        normalizer = class_weight(g, support, mode)
        return StationaryDistribution(k, support, mass, normalizer)

    logs = _log_weights(g)
    raw_log = [math.fsum(logs[z] for z in members(eta)) for eta in support]
    top = max(raw_log)
    scaled = [math.exp(l - top) for l in raw_log]
    total = math.fsum(scaled)
    mass = tuple(s / total for s in scaled)
    return StationaryDistribution(k, support, mass, LogWeight(top + math.log(total)))
