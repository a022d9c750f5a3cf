"""Independent check of the product form through the process generator.

The generator of the exclusion process restricted to a fixed particle
number is assembled transition by transition, its stationary vector is
obtained by a direct linear solve, and the product-form law is tested
for detailed balance against it.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .combinatorics import StationaryDistribution, enumerate_class, members, popcount
from .graph import Graph, resolve_mode

__all__ = [
    "ORACLE_CAP",
    "OracleCapError",
    "SingularSystemError",
    "GeneratorMatrix",
    "BalanceReport",
    "swap",
    "transition_rate",
    "build_generator",
    "solve_stationary",
    "check_detailed_balance",
    "check_irreducibility",
    "total_variation",
]

ORACLE_CAP = 20_000
_DENSE_LIMIT = 2_000
RESIDUAL_TOL = 1e-12


class OracleCapError(ValueError):
    pass


class SingularSystemError(ArithmeticError):
    """The balance equations have no unique solution within tolerance."""


def swap(eta: int, x: int, y: int, n: int | None = None) -> int:
    """Exchange the states of vertices ``x`` and ``y``."""
    if x < 0 or y < 0 or (n is not None and (x >= n or y >= n)):
        raise ValueError(f"vertex out of range: ({x}, {y})")
    if (eta >> x & 1) == (eta >> y & 1):
        return eta
    return eta ^ (1 << x | 1 << y)


def _rate(g: Graph, x: int, mode: str):
    if mode == "rational":
        return Fraction(g.rates[x]) / g.degrees[x]
    return float(g.rates[x]) / g.degrees[x]


def transition_rate(g: Graph, eta: int, xi: int, mode: str | None = None):
    """Jump rate from ``eta`` to ``xi``: ``rate(x)/deg(x)`` when ``xi`` moves
    one particle from ``x`` to an empty neighbor, otherwise zero."""
    mode = resolve_mode(g, mode)
    diff = eta ^ xi
    zero = Fraction(0) if mode == "rational" else 0.0
    if popcount(diff) != 2:
        return zero
    x, y = members(diff)
    if not eta >> x & 1:
        x, y = y, x
    if not (eta >> x & 1) or (eta >> y & 1):
        return zero
    if (min(x, y), max(x, y)) not in g.edge_set:
        return zero
    return _rate(g, x, mode)


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse generator over the canonical ordering ``index``.

    ``rows[i]`` maps column positions to off-diagonal rates; ``diagonal[i]``
    is minus their sum.  Entries are Fractions in rational mode.
    """

    index: tuple[int, ...]
    rows: tuple[dict, ...]
    diagonal: tuple
    mode: str

    @property
    def size(self) -> int:
        return len(self.index)

    def to_dense(self) -> np.ndarray:
        q = np.zeros((self.size, self.size))
        for i, row in enumerate(self.rows):
            for j, r in row.items():
                q[i, j] = float(r)
            q[i, i] = float(self.diagonal[i])
        return q

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        ii, jj, vv = [], [], []
        for i, row in enumerate(self.rows):
            for j, r in row.items():
                ii.append(i)
                jj.append(j)
                vv.append(float(r))
            ii.append(i)
            jj.append(i)
            vv.append(float(self.diagonal[i]))
        return scipy.sparse.csr_matrix((vv, (ii, jj)), shape=(self.size, self.size))

    def row_sums(self) -> list:
        return [sum(row.values(), d * 0) + d for row, d in zip(self.rows, self.diagonal)]


def _check_oracle_cap(g: Graph, k: int, cap: int):
    if not 0 <= k <= g.num_vertices:
        raise ValueError(f"need 0 <= K <= N, got K={k}, N={g.num_vertices}")
    size = math.comb(g.num_vertices, k)
    if size > cap:
        raise OracleCapError(f"C({g.num_vertices},{k}) = {size} exceeds the oracle cap {cap}")


def _moves(g: Graph, eta: int):
    """Yield ``(x, y)`` for every particle at ``x`` with an empty neighbor ``y``."""
    for x in members(eta):
        for y in g.neighbors[x]:
            if not eta >> y & 1:
                yield x, y


def build_generator(g: Graph, k: int, mode: str | None = None, cap: int = ORACLE_CAP) -> GeneratorMatrix:
    _check_oracle_cap(g, k, cap)
    mode = resolve_mode(g, mode)
    index = tuple(enumerate_class(g.num_vertices, k))
    position = {eta: i for i, eta in enumerate(index)}
    zero = Fraction(0) if mode == "rational" else 0.0
    rows, diag = [], []
    for eta in index:
        row: dict[int, object] = {}
        for x, y in _moves(g, eta):
            j = position[swap(eta, x, y)]
            row[j] = row.get(j, zero) + _rate(g, x, mode)
        rows.append(row)
        diag.append(-sum(row.values(), zero))
    return GeneratorMatrix(index, tuple(rows), tuple(diag), mode)


def _reach(rows, start: int = 0) -> int:
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for j, r in rows[i].items():
            if r > 0 and j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen)


def solve_stationary(q: GeneratorMatrix) -> np.ndarray:
    """Probability vector ``v`` with ``v Q = 0``, aligned with ``q.index``.

    One balance equation is replaced by the normalization, and the
    resulting square system is solved directly.
    """
    n = q.size
    if n == 1:
        return np.ones(1)
    if _reach(q.rows) != n:
        raise SingularSystemError("generator is reducible: no unique stationary distribution")
    b = np.zeros(n)
    b[-1] = 1.0
    if n <= _DENSE_LIMIT:
        qd = q.to_dense()
        a = qd.T.copy()
        a[-1, :] = 1.0
        try:
            v = scipy.linalg.solve(a, b)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularSystemError(str(exc)) from None
        residual = np.max(np.abs(v @ qd))
    else:
        qs = q.to_sparse()
        a = qs.T.tolil()
        a[n - 1, :] = np.ones(n)
        try:
            v = scipy.sparse.linalg.splu(a.tocsc()).solve(b)
        except RuntimeError as exc:
            raise SingularSystemError(str(exc)) from None
        residual = np.max(np.abs(qs.T @ v))
    scale = max(1.0, max(abs(float(d)) for d in q.diagonal))
    if not np.all(np.isfinite(v)) or residual > RESIDUAL_TOL * scale:
        raise SingularSystemError(f"balance residual {residual:.3e} exceeds tolerance")
    return v


@dataclass(frozen=True)
class BalanceReport:
    max_residual: object
    worst_pair: tuple[int, int] | None

    @property
    def is_zero(self) -> bool:
        return self.max_residual == 0


def _as_mapping(dist) -> Mapping[int, object]:
    if isinstance(dist, StationaryDistribution):
        return dist.as_dict()
    return dist


def check_detailed_balance(g: Graph, k: int, dist, mode: str | None = None) -> BalanceReport:
    """Largest ``|pi(eta) q(eta, xi) - pi(xi) q(xi, eta)|`` over single-edge moves.

    ``dist`` maps configurations (bit-sets) to probabilities; missing
    configurations have probability zero.
    """
    mode = resolve_mode(g, mode)
    pi = _as_mapping(dist)
    worst, worst_pair = 0, None
    for eta in enumerate_class(g.num_vertices, k):
        p_eta = pi.get(eta, 0)
        for x, y in _moves(g, eta):
            xi = swap(eta, x, y)
            lhs = p_eta * _rate(g, x, mode)
            rhs = pi.get(xi, 0) * _rate(g, y, mode)
            r = abs(lhs - rhs)
            if r > worst:
                worst, worst_pair = r, (eta, xi)
    return BalanceReport(worst, worst_pair)


def check_irreducibility(g: Graph, k: int, cap: int = ORACLE_CAP) -> bool:
    """Breadth-first search over positive-rate moves from the first configuration."""
    _check_oracle_cap(g, k, cap)
    start = next(enumerate_class(g.num_vertices, k))
    seen = {start}
    queue = deque([start])
    while queue:
        eta = queue.popleft()
        for x, y in _moves(g, eta):
            if g.rates[x] > 0:
                xi = swap(eta, x, y)
                if xi not in seen:
                    seen.add(xi)
                    queue.append(xi)
    return len(seen) == math.comb(g.num_vertices, k)


def total_variation(p: Mapping[int, float], q: Mapping[int, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(float(p.get(e, 0)) - float(q.get(e, 0))) for e in keys)
