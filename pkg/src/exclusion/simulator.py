"""Event-driven simulation of the exclusion process with occupation-time tallies.

Every occupied vertex attempts a jump at its own rate; the attempt picks a
uniform neighbor and succeeds only if that neighbor is empty.  Blocked
attempts consume time and change nothing.

Occupied time is credited lazily: a vertex is charged when its particle
leaves, and every occupied vertex is charged at each batch boundary.  The
time axis is cut at the burn-in and then into ``n_batches`` equal batches,
which give the batch-means standard error.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``;
replica ``i`` of seed ``s`` uses ``SeedSequence(s).spawn(n)[i]``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .graph import Graph

__all__ = [
    "RNG_ALGORITHM",
    "SimState",
    "SimulationEstimate",
    "init_state",
    "step",
    "run",
    "run_replicas",
    "merge",
]

RNG_ALGORITHM = "numpy PCG64 via SeedSequence(seed).spawn(replicas)"
DEFAULT_BATCHES = 100
DEFAULT_BURN_IN_FRACTION = 0.01


@numba.njit(cache=True, nogil=True)
def _advance(
    nbr, off, rates, rate_max, uniform_rates,
    occ, slot_pos, mark, acc, boundaries,
    rng, t, seg, total_rate, max_events,
):
    """Run up to ``max_events`` attempts, or until the last boundary is reached.

    Returns ``(t, seg, total_rate, attempts, moves)``.
    """
    k = slot_pos.shape[0]
    n_bounds = boundaries.shape[0]
    attempts = 0
    moves = 0
    while attempts < max_events and seg < n_bounds:
        t_new = t + rng.exponential(1.0 / total_rate)
        while seg < n_bounds and boundaries[seg] <= t_new:
            b = boundaries[seg]
            for i in range(k):
                x = slot_pos[i]
                acc[seg, x] += b - mark[x]
                mark[x] = b
            seg += 1
        if seg == n_bounds:
            t = boundaries[n_bounds - 1]
            break
        t = t_new
        attempts += 1
        while True:
            i = rng.integers(0, k)
            if uniform_rates or rng.random() * rate_max < rates[slot_pos[i]]:
                break
        x = slot_pos[i]
        y = nbr[off[x] + rng.integers(0, off[x + 1] - off[x])]
        if occ[y] == 0:
            acc[seg, x] += t - mark[x]
            occ[x] = 0
            occ[y] = 1
            mark[y] = t
            slot_pos[i] = y
            total_rate += rates[y] - rates[x]
            moves += 1
            if moves % 65536 == 0:
                total_rate = 0.0
                for j in range(k):
                    total_rate += rates[slot_pos[j]]
    return t, seg, total_rate, attempts, moves


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _boundaries(horizon: float, burn_in: float, n_batches: int) -> np.ndarray:
    if math.isinf(horizon):
        return np.array([burn_in, math.inf])
    width = (horizon - burn_in) / n_batches
    b = burn_in + width * np.arange(n_batches + 1)
    b[-1] = horizon
    return b


@dataclass
class SimState:
    """Mutable state of one trajectory.

    ``acc[0]`` collects occupied time before the burn-in cutoff and is
    discarded by estimates; ``acc[1:]`` are the batches.
    """

    graph: Graph
    k: int
    occ: np.ndarray
    slot_pos: np.ndarray
    mark: np.ndarray
    acc: np.ndarray
    boundaries: np.ndarray
    rng: np.random.Generator
    seed_entropy: object
    burn_in: float
    horizon: float
    t: float = 0.0
    seg: int = 0
    total_rate: float = 0.0
    attempts: int = 0
    moves: int = 0
    _nbr: np.ndarray = field(default=None, repr=False)
    _off: np.ndarray = field(default=None, repr=False)
    _rates: np.ndarray = field(default=None, repr=False)

    @property
    def configuration(self) -> frozenset[int]:
        return frozenset(int(x) for x in np.flatnonzero(self.occ))

    @property
    def elapsed(self) -> float:
        return self.t

    @property
    def finished(self) -> bool:
        return self.seg >= len(self.boundaries)

    def occupied_time(self) -> np.ndarray:
        """Cumulative occupied time per vertex since time 0, burn-in included."""
        out = self.acc.sum(axis=0)
        pending = self.occ.astype(bool)
        out[pending] += self.t - self.mark[pending]
        return out

    def check_invariants(self):
        assert int(self.occ.sum()) == self.k, "particle number changed"
        assert set(self.slot_pos.tolist()) == self.configuration, "two particles share a vertex"
        occ_time = self.occupied_time()
        assert np.all(occ_time <= self.t * (1 + 1e-12) + 1e-12)
        assert math.isclose(math.fsum(occ_time), self.k * self.t, rel_tol=1e-12, abs_tol=1e-9)


def _graph_arrays(g: Graph):
    off = np.zeros(g.num_vertices + 1, dtype=np.int64)
    off[1:] = np.cumsum(g.degrees)
    nbr = np.array([y for ys in g.neighbors for y in ys], dtype=np.int64)
    rates = np.array([float(r) for r in g.rates], dtype=np.float64)
    return nbr, off, rates


def init_state(
    g: Graph,
    k: int,
    placement: str = "lowest-index",
    seed=0,
    horizon: float = math.inf,
    burn_in: float = 0.0,
    n_batches: int = DEFAULT_BATCHES,
) -> SimState:
    n = g.num_vertices
    if not isinstance(k, (int, np.integer)) or not 0 < k <= n:
        raise ValueError(f"K must satisfy 0 < K <= N (got K={k}, N={n})")
    if min(g.degrees) == 0 or any(not r > 0 for r in g.rates):
        raise ValueError("every vertex needs a neighbor and a positive rate")
    ss = _seed_sequence(seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    if placement == "lowest-index":
        sites = np.arange(k)
    elif placement == "seeded-random":
        sites = np.sort(rng.choice(n, size=k, replace=False))
    else:
        raise ValueError(f"unknown placement {placement!r}")
    occ = np.zeros(n, dtype=np.uint8)
    occ[sites] = 1
    nbr, off, rates = _graph_arrays(g)
    boundaries = _boundaries(horizon, burn_in, n_batches)
    return SimState(
        graph=g,
        k=int(k),
        occ=occ,
        slot_pos=sites.astype(np.int64),
        mark=np.zeros(n),
        acc=np.zeros((len(boundaries), n)),
        boundaries=boundaries,
        rng=rng,
        seed_entropy=ss.entropy if not ss.spawn_key else (ss.entropy, ss.spawn_key),
        burn_in=burn_in,
        horizon=horizon,
        total_rate=float(rates[sites].sum()),
        _nbr=nbr,
        _off=off,
        _rates=rates,
    )


def _advance_state(s: SimState, max_events: int) -> SimState:
    if s.finished:
        return s
    uniform = bool(np.all(s._rates == s._rates[0]))
    s.t, s.seg, s.total_rate, a, m = _advance(
        s._nbr, s._off, s._rates, float(s._rates.max()), uniform,
        s.occ, s.slot_pos, s.mark, s.acc, s.boundaries,
        s.rng, s.t, s.seg, s.total_rate, max_events,
    )
    s.attempts += a
    s.moves += m
    return s


def step(s: SimState) -> SimState:
    """Perform one jump attempt in place (blocked attempts only advance time)."""
    return _advance_state(s, 1)


@dataclass(frozen=True)
class SimulationEstimate:
    """Post-burn-in occupation fractions from one or more pooled trajectories."""

    k: int
    graph_key: tuple
    batch_occupied: np.ndarray  # (batches, N) occupied time per batch
    batch_lengths: np.ndarray  # (batches,)
    horizons: tuple[float, ...]
    burn_ins: tuple[float, ...]
    seeds: tuple
    attempts: int
    moves: int

    @property
    def num_vertices(self) -> int:
        return self.batch_occupied.shape[1]

    @property
    def observed_time(self) -> float:
        return math.fsum(self.batch_lengths.tolist())

    @property
    def p_hat(self) -> np.ndarray:
        total = self.observed_time
        return np.array([math.fsum(col) / total for col in self.batch_occupied.T.tolist()])

    @property
    def stderr(self) -> np.ndarray:
        """Batch-means standard error of ``p_hat`` (ratio-estimator form)."""
        b = len(self.batch_lengths)
        if b < 2:
            return np.full(self.num_vertices, math.nan)
        p = self.p_hat
        lengths = self.batch_lengths
        total = self.observed_time
        out = []
        for x in range(self.num_vertices):
            dev = (self.batch_occupied[:, x] - p[x] * lengths) / total
            out.append(math.sqrt(b / (b - 1) * math.fsum((dev * dev).tolist())))
        return np.array(out)


def run(
    g: Graph,
    k: int,
    horizon: float,
    seed=0,
    burn_in: float | None = None,
    n_batches: int = DEFAULT_BATCHES,
    placement: str = "lowest-index",
) -> SimulationEstimate:
    """Simulate one trajectory up to ``horizon`` and return its estimate.

    ``burn_in`` defaults to 1% of the horizon.
    """
    if not (isinstance(horizon, (int, float)) and math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be a positive finite time (got {horizon})")
    if burn_in is None:
        burn_in = DEFAULT_BURN_IN_FRACTION * horizon
    if not 0 <= burn_in < horizon:
        raise ValueError(f"burn-in must satisfy 0 <= burn_in < horizon (got {burn_in})")
    if n_batches < 1:
        raise ValueError("n_batches must be positive")
    s = init_state(g, k, placement, seed, float(horizon), float(burn_in), n_batches)
    while not s.finished:
        _advance_state(s, 1 << 40)
    return SimulationEstimate(
        k=s.k,
        graph_key=g.fingerprint(),
        batch_occupied=s.acc[1:].copy(),
        batch_lengths=np.diff(s.boundaries),
        horizons=(float(horizon),),
        burn_ins=(float(burn_in),),
        seeds=(s.seed_entropy,),
        attempts=s.attempts,
        moves=s.moves,
    )


def run_replicas(
    g: Graph,
    k: int,
    horizon: float,
    seed=0,
    burn_in: float | None = None,
    replicas: int = 1,
    n_batches: int = DEFAULT_BATCHES,
    placement: str = "lowest-index",
    workers: int = 1,
) -> SimulationEstimate:
    """Independent replicas on spawned seed streams, pooled with :func:`merge`."""
    if replicas < 1:
        raise ValueError("replicas must be positive")
    children = _seed_sequence(seed).spawn(replicas)

    def one(ss):
        return run(g, k, horizon, ss, burn_in, n_batches, placement)

    if workers > 1 and replicas > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(one, children))
    else:
        estimates = [one(ss) for ss in children]
    return merge(estimates)


def merge(estimates) -> SimulationEstimate:
    """Pool estimates by total occupied time over total observed time."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("nothing to merge")
    first = estimates[0]
    for e in estimates[1:]:
        if e.graph_key != first.graph_key:
            raise ValueError("cannot merge estimates from different graphs")
        if e.k != first.k:
            raise ValueError(f"cannot merge estimates with different K ({first.k} vs {e.k})")
    return SimulationEstimate(
        k=first.k,
        graph_key=first.graph_key,
        batch_occupied=np.concatenate([e.batch_occupied for e in estimates]),
        batch_lengths=np.concatenate([e.batch_lengths for e in estimates]),
        horizons=sum((e.horizons for e in estimates), ()),
        burn_ins=sum((e.burn_ins for e in estimates), ()),
        seeds=sum((e.seeds for e in estimates), ()),
        attempts=sum(e.attempts for e in estimates),
        moves=sum(e.moves for e in estimates),
    )
