"""Graphs with per-vertex jump rates, and the vertex/configuration weights.

A vertex ``x`` carries the weight ``deg(x) / rate(x)``; a configuration (a
set of occupied vertices) carries the product of its members' weights.
Weights are exact :class:`~fractions.Fraction` values when every rate is
rational, and :class:`LogWeight` values otherwise.
"""
from __future__ import annotations

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

__all__ = [
    "GraphSpecError",
    "Graph",
    "LogWeight",
    "ValidationReport",
    "parse_graph_spec",
    "load_graph",
    "validate",
    "vertex_weight",
    "config_weight",
    "resolve_mode",
    "star_graph",
    "path_graph",
    "cycle_graph",
    "grid_graph",
    "ENUMERATION_MAX_VERTICES",
]

ENUMERATION_MAX_VERTICES = 64

Rate = Union[Fraction, float]


class GraphSpecError(ValueError):
    """Raised when a graph document cannot be turned into a :class:`Graph`."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class LogWeight:
    """A positive weight carried by its natural logarithm."""

    log: float

    @property
    def value(self) -> float:
        return math.exp(self.log)

    def __mul__(self, other):
        if isinstance(other, LogWeight):
            return LogWeight(self.log + other.log)
        return LogWeight(self.log + math.log(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LogWeight):
            return LogWeight(self.log - other.log)
        return LogWeight(self.log - math.log(other))

    def __add__(self, other):
        if not isinstance(other, LogWeight):
            if other == 0:
                return self
            other = LogWeight(math.log(other))
        hi, lo = max(self.log, other.log), min(self.log, other.log)
        return LogWeight(hi + math.log1p(math.exp(lo - hi)))

    __radd__ = __add__

    def __float__(self) -> float:
        return self.value

    def __lt__(self, other):
        return self.log < _as_log(other)

    def __le__(self, other):
        return self.log <= _as_log(other)

    def __gt__(self, other):
        return self.log > _as_log(other)

    def __ge__(self, other):
        return self.log >= _as_log(other)


def _as_log(w) -> float:
    if isinstance(w, LogWeight):
        return w.log
    return math.log(w) if w > 0 else -math.inf


def _coerce_rate(value) -> Rate:
    if isinstance(value, bool):
        raise TypeError("rate must be a number")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"unsupported rate type {type(value).__name__}")


@dataclass(frozen=True, eq=False)
class Graph:
    """Finite undirected graph on vertices ``0..num_vertices-1`` with jump rates.

    Construction only checks that vertex ids are in range; the remaining
    model preconditions (connectivity, no loops or duplicates, positive
    rates) are reported by :func:`validate`.
    """

    num_vertices: int
    edges: tuple[tuple[int, int], ...]
    rates: tuple[Rate, ...] = field(default=())

    def __post_init__(self):
        n = self.num_vertices
        if not isinstance(n, int) or n < 1:
            raise GraphSpecError("num_vertices must be a positive integer", field="num_vertices")
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphSpecError(f"vertex id out of range in edge ({u}, {v})", field="edges")
        object.__setattr__(self, "edges", edges)
        rates = tuple(_coerce_rate(r) for r in self.rates) if self.rates else (Fraction(1),) * n
        if len(rates) != n:
            raise GraphSpecError(f"expected {n} rates, got {len(rates)}", field="rates")
        object.__setattr__(self, "rates", rates)

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        adj: list[set[int]] = [set() for _ in range(self.num_vertices)]
        for u, v in self.edges:
            if u != v:
                adj[u].add(v)
                adj[v].add(u)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.neighbors)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(u, v), max(u, v)) for u, v in self.edges if u != v)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(r, Fraction) for r in self.rates)

    def fingerprint(self) -> tuple:
        """Hashable identity used to check that two runs refer to the same graph."""
        return (self.num_vertices, tuple(sorted(self.edge_set)), tuple(str(r) for r in self.rates))

    def to_dict(self) -> dict:
        return {
            "num_vertices": self.num_vertices,
            "edges": [list(e) for e in sorted(self.edge_set)],
            "rates": [str(r) if isinstance(r, Fraction) else repr(r) for r in self.rates],
        }

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.fingerprint() == other.fingerprint()

    def __hash__(self):
        return hash(self.fingerprint())


@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    defect_list: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.defect_list


def validate(g: Graph) -> ValidationReport:
    """Check the model preconditions; defects are collected, never raised."""
    defects = []
    seen = set()
    for u, v in g.edges:
        if u == v:
            defects.append(f"self-loop at vertex {u}")
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            defects.append(f"duplicate edge ({key[0]}, {key[1]})")
        seen.add(key)
    for x, d in enumerate(g.degrees):
        if d == 0:
            defects.append(f"isolated vertex {x}")
    for x, r in enumerate(g.rates):
        if not r > 0 or (isinstance(r, float) and not math.isfinite(r)):
            defects.append(f"nonpositive rate at vertex {x}")

    reached = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in g.neighbors[u]:
            if v not in reached:
                reached.add(v)
                queue.append(v)
    connected = len(reached) == g.num_vertices
    if not connected:
        defects.append(
            f"graph is disconnected: {g.num_vertices - len(reached)} vertices unreachable from vertex 0"
        )
    return ValidationReport(connected, tuple(defects))


def resolve_mode(g: Graph, mode: str | None = None) -> str:
    """Pick the weight carrier: ``"rational"`` when every rate is a Fraction."""
    if mode in (None, "auto"):
        return "rational" if g.is_rational else "log"
    if mode not in ("rational", "log"):
        raise ValueError(f"unknown weight mode {mode!r}")
    if mode == "rational" and not g.is_rational:
        raise ValueError("rational mode requires every rate to be a ratio of integers")
    return mode


def _check_vertex(g: Graph, x: int):
    if not 0 <= x < g.num_vertices:
        raise ValueError(f"vertex id {x} out of range for N={g.num_vertices}")


def vertex_weight(g: Graph, x: int, mode: str | None = None):
    """``deg(x) / rate(x)`` as a Fraction (rational mode) or a LogWeight."""
    _check_vertex(g, x)
    mode = resolve_mode(g, mode)
    if mode == "rational":
        return Fraction(g.degrees[x]) / g.rates[x]
    return LogWeight(math.log(g.degrees[x]) - math.log(g.rates[x]))


def config_weight(g: Graph, eta: Iterable[int], mode: str | None = None):
    mode = resolve_mode(g, mode)
    w = Fraction(1) if mode == "rational" else LogWeight(0.0)
    for z in eta:
        w = w * vertex_weight(g, z, mode)
    return w


# --- parsing -----------------------------------------------------------------

def parse_graph_spec(text: str) -> Graph:
    """Parse a JSON graph document or a plain edge-list.

    JSON form::

        {"num_vertices": 3, "edges": [[0, 1], [0, 2]], "rates": [1, "1/2", 0.25]}

    Edge-list form: first line ``N``, then ``u v`` lines and optional
    ``rate x value`` lines.  ``#`` starts a comment.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_json(text)
    return _parse_edge_list(text)


def _parse_json(text: str) -> Graph:
    try:
        doc = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise GraphSpecError(f"malformed document: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise GraphSpecError("top-level value must be an object")
    if "num_vertices" not in doc:
        raise GraphSpecError("missing required field", field="num_vertices")
    n = doc["num_vertices"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise GraphSpecError("must be a positive integer", field="num_vertices")
    raw_edges = doc.get("edges")
    if not isinstance(raw_edges, list):
        raise GraphSpecError("must be a list of two-element lists", field="edges")
    edges = []
    for i, e in enumerate(raw_edges):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
        ):
            raise GraphSpecError("edge must be a two-element integer list", field=f"edges[{i}]")
        if not all(0 <= v < n for v in e):
            raise GraphSpecError("vertex id out of range", field=f"edges[{i}]")
        edges.append((e[0], e[1]))
    rates = doc.get("rates")
    parsed_rates: list[Rate] = []
    if rates is not None:
        if not isinstance(rates, list) or len(rates) != n:
            raise GraphSpecError(f"must be a list of {n} rates", field="rates")
        for i, r in enumerate(rates):
            try:
                parsed_rates.append(_coerce_rate(r))
            except (TypeError, ValueError, ZeroDivisionError):
                raise GraphSpecError(f"unparseable rate {r!r}", field=f"rates[{i}]") from None
    return Graph(n, tuple(edges), tuple(parsed_rates))


_INT = re.compile(r"^[+-]?\d+$")


def _parse_edge_list(text: str) -> Graph:
    n = None
    edges = []
    rates: dict[int, Rate] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1 or not _INT.match(parts[0]) or int(parts[0]) < 1:
                raise GraphSpecError("first line must be the vertex count N", line=lineno)
            n = int(parts[0])
            continue
        if parts[0] == "rate":
            if len(parts) != 3 or not _INT.match(parts[1]):
                raise GraphSpecError("expected 'rate x value'", line=lineno)
            x = int(parts[1])
            if not 0 <= x < n:
                raise GraphSpecError("vertex id out of range", line=lineno)
            try:
                rates[x] = _coerce_rate(parts[2])
            except (ValueError, ZeroDivisionError):
                raise GraphSpecError(f"unparseable rate {parts[2]!r}", line=lineno) from None
            continue
        if len(parts) != 2 or not all(_INT.match(p) for p in parts):
            raise GraphSpecError("expected 'u v' edge line", line=lineno)
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < n and 0 <= v < n):
            raise GraphSpecError("vertex id out of range", line=lineno)
        edges.append((u, v))
    if n is None:
        raise GraphSpecError("empty document")
    full_rates = tuple(rates.get(x, Fraction(1)) for x in range(n))
    return Graph(n, tuple(edges), full_rates)


def load_graph(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph_spec(fh.read())


# --- standard families (unit rates unless given) -----------------------------

def star_graph(n: int, rates: Sequence | None = None) -> Graph:
    """Star with center 0 and leaves ``1..n-1``."""
    return Graph(n, tuple((0, x) for x in range(1, n)), tuple(rates or ()))


def path_graph(n: int, rates: Sequence | None = None) -> Graph:
    return Graph(n, tuple((x, x + 1) for x in range(n - 1)), tuple(rates or ()))


def cycle_graph(n: int, rates: Sequence | None = None) -> Graph:
    if n < 3:
        raise ValueError("a simple cycle needs at least 3 vertices")
    return Graph(n, tuple((x, (x + 1) % n) for x in range(n)), tuple(rates or ()))


def grid_graph(rows: int, cols: int, rates: Sequence | None = None) -> Graph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            x = r * cols + c
            if c + 1 < cols:
                edges.append((x, x + 1))
            if r + 1 < rows:
                edges.append((x, x + cols))
    return Graph(rows * cols, tuple(edges), tuple(rates or ()))
