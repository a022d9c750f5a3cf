"""Exact long-run occupation probabilities and checks on their structure.

``p_K(x)`` is the weight of the size-``K`` configurations containing ``x``
divided by the weight of all size-``K`` configurations.  Closed forms for
the unit-rate star and path are provided separately and take only
``(N, K)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .combinatorics import DEFAULT_CAP, inclusion_weights
from .graph import Graph, LogWeight, resolve_mode, vertex_weight

__all__ = [
    "OccupationProfile",
    "PairRecord",
    "MonotonicityReport",
    "LogConcavityRow",
    "LogConcavityReport",
    "occupation_probability",
    "occupation_profile",
    "occupation_ratio",
    "check_sum_rule",
    "check_pairwise_monotonicity",
    "check_sigma_log_concavity",
    "class_weight_sequence",
    "star_profile",
    "path_profile",
    "star_leaf_center_ratio",
    "path_end_interior_ratio",
    "LOG_STRICT_MARGIN",
    "LOG_SUM_TOL",
]

LOG_SUM_TOL = 1e-12
LOG_STRICT_MARGIN = 1e-9


@dataclass(frozen=True)
class OccupationProfile:
    k: int
    p: tuple
    mode: str = "rational"

    @property
    def num_vertices(self) -> int:
        return len(self.p)

    def total(self):
        if self.mode == "rational":
            return sum(self.p, Fraction(0))
        return math.fsum(self.p)

    def __getitem__(self, x):
        return self.p[x]

    def __len__(self):
        return len(self.p)


def _require_k(g: Graph, k: int):
    if not 0 < k <= g.num_vertices:
        raise ValueError(f"K must satisfy 0 < K <= N (got K={k}, N={g.num_vertices})")


def _ratio(num, den, mode):
    if mode == "rational":
        return Fraction(num) / Fraction(den)
    return math.exp(_log(num) - _log(den))


def _log(w) -> float:
    return w.log if isinstance(w, LogWeight) else math.log(w)


def occupation_probability(
    g: Graph, k: int, x: int, mode=None, method="enumerate", cap=DEFAULT_CAP
):
    _require_k(g, k)
    if not 0 <= x < g.num_vertices:
        raise ValueError(f"vertex id {x} out of range for N={g.num_vertices}")
    mode = resolve_mode(g, mode)
    total, per = inclusion_weights(g, k, mode, method, cap)
    return _ratio(per[x], total, mode)


def occupation_profile(g: Graph, k: int, mode=None, method="enumerate", cap=DEFAULT_CAP):
    _require_k(g, k)
    mode = resolve_mode(g, mode)
    total, per = inclusion_weights(g, k, mode, method, cap)
    return OccupationProfile(k, tuple(_ratio(w, total, mode) for w in per), mode)


def occupation_ratio(g: Graph, k: int, x: int, y: int, mode=None, method="enumerate", cap=DEFAULT_CAP):
    """``p_K(x) / p_K(y)``, computed as the ratio of the two inclusion weights."""
    _require_k(g, k)
    for v in (x, y):
        if not 0 <= v < g.num_vertices:
            raise ValueError(f"vertex id {v} out of range for N={g.num_vertices}")
    mode = resolve_mode(g, mode)
    _, per = inclusion_weights(g, k, mode, method, cap)
    return _ratio(per[x], per[y], mode)


def check_sum_rule(profile: OccupationProfile, tol: float = LOG_SUM_TOL) -> bool:
    if profile.mode == "rational" and all(isinstance(v, Fraction) for v in profile.p):
        return profile.total() == profile.k
    return abs(math.fsum(float(v) for v in profile.p) - profile.k) <= tol


# --- ratio monotonicity ------------------------------------------------------

@dataclass(frozen=True)
class PairRecord:
    x: int
    y: int
    ratios: tuple
    starts_at_weight_ratio: bool
    ends_at_one: bool
    strictly_increasing: bool

    @property
    def passed(self) -> bool:
        return self.starts_at_weight_ratio and self.ends_at_one and self.strictly_increasing


@dataclass(frozen=True)
class MonotonicityReport:
    """Ratio sequences ``p_K(x)/p_K(y)``, K = 1..N, for every pair with D(x) < D(y)."""

    pairs: tuple[PairRecord, ...]
    equal_weight_pairs: tuple[tuple[int, int, bool], ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.pairs) and all(ok for _, _, ok in self.equal_weight_pairs)

    def pair(self, x: int, y: int) -> PairRecord:
        for p in self.pairs:
            if (p.x, p.y) == (x, y):
                return p
        raise KeyError((x, y))


def _less(a, b, mode) -> bool:
    if mode == "rational":
        return a < b
    return a < b * (1 + LOG_STRICT_MARGIN)


def _close(a, b, mode) -> bool:
    if mode == "rational":
        return a == b
    return abs(a - b) <= LOG_STRICT_MARGIN * max(abs(a), abs(b))


def check_pairwise_monotonicity(g: Graph, mode=None, method="enumerate", cap=DEFAULT_CAP) -> MonotonicityReport:
    mode = resolve_mode(g, mode)
    n = g.num_vertices
    weights = [vertex_weight(g, x, mode) for x in range(n)]
    if mode == "log":
        weights = [w.value for w in weights]
    profiles = [occupation_profile(g, k, mode, method, cap) for k in range(1, n + 1)]

    pairs = []
    equal = []
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            if _close(weights[x], weights[y], mode):
                if x < y:
                    ok = all(_close(pr.p[x], pr.p[y], mode) for pr in profiles)
                    equal.append((x, y, ok))
                continue
            if not weights[x] < weights[y]:
                continue
            ratios = tuple(
                pr.p[x] / pr.p[y] if mode == "rational" else float(pr.p[x]) / float(pr.p[y])
                for pr in profiles
            )
            first = _close(ratios[0], weights[x] / weights[y], mode)
            last = _close(ratios[-1], 1 if mode == "rational" else 1.0, mode)
            inc = all(_less(ratios[i], ratios[i + 1], mode) for i in range(n - 1))
            pairs.append(PairRecord(x, y, ratios, first, last, inc))
    return MonotonicityReport(tuple(pairs), tuple(equal))


# --- log-concavity of the class weights --------------------------------------

@dataclass(frozen=True)
class LogConcavityRow:
    k: int
    lhs: object  # weight(K+1) * weight(K-1)
    rhs: object  # weight(K) ** 2
    holds: bool


@dataclass(frozen=True)
class LogConcavityReport:
    rows: tuple[LogConcavityRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.holds for r in self.rows)


def class_weight_sequence(g: Graph, mode=None, method="enumerate", cap=DEFAULT_CAP) -> list:
    """Total class weight for K = 0..N."""
    mode = resolve_mode(g, mode)
    return [inclusion_weights(g, k, mode, method, cap)[0] for k in range(g.num_vertices + 1)]


def check_sigma_log_concavity(g: Graph, mode=None, method="enumerate", cap=DEFAULT_CAP) -> LogConcavityReport:
    mode = resolve_mode(g, mode)
    sigma = class_weight_sequence(g, mode, method, cap)
    rows = []
    for k in range(1, g.num_vertices):
        if mode == "rational":
            lhs, rhs = sigma[k + 1] * sigma[k - 1], sigma[k] ** 2
            holds = lhs < rhs
        else:
            lhs_log = sigma[k + 1].log + sigma[k - 1].log
            rhs_log = 2 * sigma[k].log
            lhs, rhs = LogWeight(lhs_log), LogWeight(rhs_log)
            holds = lhs_log < rhs_log + math.log1p(LOG_STRICT_MARGIN)
        rows.append(LogConcavityRow(k, lhs, rhs, holds))
    return LogConcavityReport(tuple(rows))


# --- unit-rate closed forms ---------------------------------------------------

def _closed_form_args(n: int, k: int, min_n: int = 2):
    if not isinstance(n, int) or n < min_n:
        raise ValueError(f"N must be an integer >= {min_n} (got {n})")
    if not isinstance(k, int) or not 0 < k <= n:
        raise ValueError(f"K must satisfy 0 < K <= N (got K={k}, N={n})")


def star_profile(n: int, k: int) -> OccupationProfile:
    """Unit-rate star, center 0 and leaves 1..N-1."""
    _closed_form_args(n, k)
    den = (n - 1) * k + (n - k)
    center = Fraction((n - 1) * k, den)
    leaf = Fraction(k, n - 1) * Fraction((n - 1) * k - (k - 1), den)
    return OccupationProfile(k, (center,) + (leaf,) * (n - 1))


def path_profile(n: int, k: int) -> OccupationProfile:
    """Unit-rate path 0 - 1 - ... - N-1.  For N = 2 both vertices are ends."""
    _closed_form_args(n, k)
    den = (k - 1) * k + 4 * (n - k) * (n - 1)
    end = Fraction((2 * n - k - 1) * k, den)
    if n == 2:
        return OccupationProfile(k, (end, end))
    interior = Fraction(k, n - 2) * Fraction((k - 2) * (k - 1) + 4 * (n - k) * (n - 2), den)
    return OccupationProfile(k, (end,) + (interior,) * (n - 2) + (end,))


def star_leaf_center_ratio(n: int, k: int) -> Fraction:
    """``p_K(leaf) / p_K(center)`` on the unit-rate star; linear in K."""
    _closed_form_args(n, k)
    return Fraction((n - 1) * (k - 1) + (n - k), (n - 1) ** 2)


def path_end_interior_ratio(n: int, k: int) -> Fraction:
    _closed_form_args(n, k, min_n=3)
    return Fraction((n - 2) * (2 * n - k - 1), (k - 2) * (k - 1) + 4 * (n - k) * (n - 2))
