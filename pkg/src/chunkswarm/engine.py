"""Synchronous round-by-round execution of the three dissemination protocols.

Every round follows the same phase order, fixed for determinism:
transfers first (computed simultaneously against the pre-round state),
then churn, then the aliveness check, then the round counter increments.
Survival time is therefore the 1-based index of the first round whose
post-churn state misses some chunk; a state that is already dead at
seeding has survival time 0.

A trial owns a single deterministic RNG stream derived from the config
seed, so equal (config, seeding) pairs reproduce bit-identical reports.
Peer holdings are stored as an (n, k) boolean matrix internally; the
``peers`` property materialises PeerState values for inspection.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .core import ChunkSet, ConfigurationError, PeerState, Scenario, ScenarioConfig


class SeedingKind(Enum):
    """Initial-state rules for a trial."""

    EMPTY_PEERS_PLUS_ROOTS = "empty-plus-roots"
    STAIRCASE = "staircase"
    UNIFORM_ONE_CHUNK = "uniform-one-chunk"
    HALF_EMPTY_HALF_ONE = "half-empty-half-one"
    EXPLICIT_HISTOGRAM = "explicit-histogram"


@dataclass(frozen=True)
class Seeding:
    """A seeding rule, plus the target histogram for the explicit kind.

    histogram[i] is the number of peers seeded with i chunks (uniform
    random subsets of that size); it must have k+1 entries summing to n.
    """

    kind: SeedingKind
    histogram: tuple[int, ...] | None = None

    @classmethod
    def explicit(cls, histogram: tuple[int, ...]) -> "Seeding":
        return cls(SeedingKind.EXPLICIT_HISTOGRAM, tuple(histogram))


DEFAULT_SEEDING = {
    Scenario.SPREADING: Seeding(SeedingKind.EMPTY_PEERS_PLUS_ROOTS),
    Scenario.DISTRIBUTED_OPTIMISTIC: Seeding(SeedingKind.STAIRCASE),
    Scenario.RANDOM_MATCHING: Seeding(SeedingKind.HALF_EMPTY_HALF_ONE),
}


class Aliveness(NamedTuple):
    alive: bool
    missing: int


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one trial.

    survival_time is the first round at which some chunk was absent
    network-wide, or the round the trial stopped at if that never
    happened (censored=True in that case: horizon reached, or spreading
    finished with the network still alive). downloads_completed counts
    transitions of a node to the full k-chunk state.
    """

    survival_time: int
    censored: bool
    spread_succeeded: bool | None
    downloads_completed: int
    final_histogram: tuple[int, ...]
    presence_history: tuple[int, ...] | None = None


class NetworkState:
    """Mutable per-trial state, owned by exactly one trial.

    For the spreading scenario only the live-root count and the set of
    already dispatched chunks matter; the other two scenarios carry the
    full (n, k) holdings matrix plus root flags and ages.
    """

    def __init__(self, cfg: ScenarioConfig, rng: np.random.Generator) -> None:
        self.n = cfg.n
        self.k = cfg.k
        self.scenario = cfg.scenario
        self.round = 0
        self.rng = rng
        self.downloads_completed = 0
        if cfg.scenario is Scenario.SPREADING:
            self.chunks = None
            self.is_root = None
            self.ages = None
            self.root_count = cfg.roots
            self.sent = np.zeros(cfg.k, dtype=bool)
        else:
            self.chunks = np.zeros((cfg.n, cfg.k), dtype=bool)
            self.is_root = np.zeros(cfg.n, dtype=bool)
            self.ages = np.zeros(cfg.n, dtype=np.int64)
            self.root_count = 0
            self.sent = None

    @property
    def peers(self) -> list[PeerState]:
        if self.scenario is Scenario.SPREADING:
            full = ChunkSet.full(self.k)
            return [PeerState(i, full, is_root=True) for i in range(self.root_count)]
        out = []
        for i in range(self.n):
            members = np.nonzero(self.chunks[i])[0]
            out.append(
                PeerState(
                    i,
                    ChunkSet(self.k, members.tolist()),
                    is_root=bool(self.is_root[i]),
                    age=int(self.ages[i]),
                )
            )
        return out

    def chunk_histogram(self) -> tuple[int, ...]:
        if self.scenario is Scenario.SPREADING:
            hist = [0] * (self.k + 1)
            hist[self.k] = self.root_count
            return tuple(hist)
        counts = self.chunks.sum(axis=1)
        return tuple(np.bincount(counts, minlength=self.k + 1).tolist())


def check_network_alive(state: NetworkState) -> Aliveness:
    """True iff the union of all nodes' holdings covers every chunk id.

    Also reports how many chunk ids are absent. While any root is alive
    in the spreading scenario every chunk is present by definition; after
    the last root leaves, only dispatched chunks remain.
    """
    if state.scenario is Scenario.SPREADING:
        if state.root_count > 0:
            return Aliveness(True, 0)
        missing = state.k - int(state.sent.sum())
        return Aliveness(missing == 0, missing)
    present = state.chunks.any(axis=0)
    missing = state.k - int(present.sum())
    return Aliveness(missing == 0, missing)


def _distinct_present(state: NetworkState) -> int:
    return state.k - check_network_alive(state).missing


def initial_state(cfg: ScenarioConfig, seeding: Seeding | None = None) -> NetworkState:
    """Build the round-0 state for a trial according to the seeding rule."""
    if seeding is None:
        seeding = DEFAULT_SEEDING[cfg.scenario]
    rng = np.random.default_rng(cfg.seed)
    state = NetworkState(cfg, rng)
    if cfg.scenario is Scenario.SPREADING:
        if seeding.kind is not SeedingKind.EMPTY_PEERS_PLUS_ROOTS:
            raise ConfigurationError(
                f"spreading supports only the {SeedingKind.EMPTY_PEERS_PLUS_ROOTS.value} seeding"
            )
        return state

    n, k = cfg.n, cfg.k
    kind = seeding.kind
    if kind is SeedingKind.EMPTY_PEERS_PLUS_ROOTS:
        if cfg.roots > n:
            raise ConfigurationError(f"{cfg.roots} roots do not fit into {n} nodes")
        state.chunks[: cfg.roots] = True
        state.is_root[: cfg.roots] = True
    elif kind is SeedingKind.STAIRCASE:
        # peer i of 1..n holds a uniform random subset of floor((i-1)k/n) chunks
        sizes = np.array([(i * k) // n for i in range(n)])
        _seed_random_subsets(state.chunks, sizes, rng)
    elif kind is SeedingKind.UNIFORM_ONE_CHUNK:
        if n < k:
            raise ConfigurationError(
                f"uniform one-chunk seeding needs n >= k, got n={n}, k={k}"
            )
        j = np.arange(k)
        state.chunks[(j * n) // k, j] = True
    elif kind is SeedingKind.HALF_EMPTY_HALF_ONE:
        # half the peers empty, half with one chunk, chunk ids round-robin
        holders = n // 2
        idx = np.arange(holders)
        state.chunks[n - holders + idx, idx % k] = True
    elif kind is SeedingKind.EXPLICIT_HISTOGRAM:
        hist = seeding.histogram
        if hist is None or len(hist) != k + 1:
            raise ConfigurationError("explicit seeding needs a k+1 entry histogram")
        if any(h < 0 for h in hist) or sum(hist) != n:
            raise ConfigurationError(f"histogram must be non-negative and sum to n={n}")
        sizes = np.repeat(np.arange(k + 1), hist)
        _seed_random_subsets(state.chunks, sizes, rng)
    else:  # pragma: no cover
        raise ConfigurationError(f"unknown seeding kind {kind}")
    return state


def _seed_random_subsets(chunks: np.ndarray, sizes: np.ndarray, rng: np.random.Generator) -> None:
    """Fill each row with a uniform random subset of the given size."""
    if sizes.max(initial=0) == 0:
        return
    n, k = chunks.shape
    r = rng.random((n, k))
    ranks = r.argsort(axis=1).argsort(axis=1)
    chunks[:] = ranks < sizes[:, None]


def run_spreading_round(state: NetworkState, cfg: ScenarioConfig) -> NetworkState:
    """One round of root-driven dispatch.

    Each live root draws one chunk uniformly from the not-yet-dispatched
    ones; draws are independent across roots, so several roots may pick
    the same chunk within a round (coordination happens between rounds).
    Then every root departs independently with probability alpha_r.
    """
    if state.scenario is not Scenario.SPREADING:
        raise ConfigurationError("run_spreading_round needs a spreading-scenario state")
    rng = state.rng
    remaining = np.nonzero(~state.sent)[0]
    if remaining.size > 0 and state.root_count > 0:
        picks = rng.integers(0, remaining.size, size=state.root_count)
        state.sent[remaining[picks]] = True
    if state.root_count > 0:
        survived = int((rng.random(state.root_count) >= cfg.alpha_r).sum())
        state.root_count = survived
    state.round += 1
    return state


def run_distributed_optimistic_round(state: NetworkState, cfg: ScenarioConfig) -> NetworkState:
    """One round of the patient-peer pipeline.

    Every incomplete peer picks one of its missing chunks uniformly and
    acquires it iff some other node currently holds it. There is no
    probabilistic churn: a non-root node that holds all k chunks departs
    and is replaced by an empty peer. Roots persist.
    """
    if state.scenario is not Scenario.DISTRIBUTED_OPTIMISTIC:
        raise ConfigurationError("run_distributed_optimistic_round needs an optimistic-scenario state")
    rng = state.rng
    chunks = state.chunks
    n, k = state.n, state.k

    present = chunks.any(axis=0)
    missing = ~chunks
    w = rng.random((n, k))
    w[~missing] = -1.0
    pick = w.argmax(axis=1)
    acquires = missing.any(axis=1) & present[pick]
    was_full = chunks.all(axis=1)
    chunks[np.nonzero(acquires)[0], pick[acquires]] = True

    full = chunks.all(axis=1)
    state.downloads_completed += int((full & ~was_full).sum())
    depart = full & ~state.is_root
    chunks[depart] = False
    state.ages[depart] = 0
    state.ages[~depart] += 1
    state.round += 1
    return state


def run_matching_round(state: NetworkState, cfg: ScenarioConfig) -> NetworkState:
    """One round of random server matching.

    Every peer picks a uniformly random other peer as its server; every
    server with at least one customer picks one of them uniformly (the
    lucky one) and sends it a chunk drawn uniformly from the useful set,
    or nothing if the server has nothing the customer lacks. Transfers
    are computed against pre-round holdings and applied simultaneously;
    each node sends at most one chunk and receives at most one chunk.
    Afterwards incomplete nodes depart with probability alpha, full nodes
    with probability alpha_r, each replaced by an empty peer.
    """
    if state.scenario is not Scenario.RANDOM_MATCHING:
        raise ConfigurationError("run_matching_round needs a matching-scenario state")
    if state.n < 2:
        raise ConfigurationError("random matching needs at least 2 peers")
    rng = state.rng
    chunks = state.chunks
    n, k = state.n, state.k

    r = rng.integers(0, n - 1, size=n)
    servers = r + (r >= np.arange(n))
    # uniform lucky customer per server: scatter a random permutation,
    # the customer landing last wins
    perm = rng.permutation(n)
    lucky = np.full(n, -1, dtype=np.int64)
    lucky[servers[perm]] = perm
    srv = np.nonzero(lucky >= 0)[0]
    cust = lucky[srv]

    useful = chunks[srv] & ~chunks[cust]
    w = rng.random(useful.shape)
    w[~useful] = -1.0
    pick = w.argmax(axis=1)
    ok = useful[np.arange(srv.size), pick]
    was_full = chunks.all(axis=1)
    chunks[cust[ok], pick[ok]] = True

    counts = chunks.sum(axis=1)
    state.downloads_completed += int(((counts == k) & ~was_full).sum())
    u = rng.random(n)
    depart = np.where(counts == k, u < cfg.alpha_r, u < cfg.alpha)
    chunks[depart] = False
    state.is_root[depart] = False
    state.ages[depart] = 0
    state.ages[~depart] += 1
    state.round += 1
    return state


_ROUND_FUNCS = {
    Scenario.SPREADING: run_spreading_round,
    Scenario.DISTRIBUTED_OPTIMISTIC: run_distributed_optimistic_round,
    Scenario.RANDOM_MATCHING: run_matching_round,
}


def run_trial(
    cfg: ScenarioConfig,
    seeding: Seeding | None = None,
    record_presence: bool = False,
) -> TrialReport:
    """Run rounds until the network dies, spreading resolves, or the
    horizon is reached, and summarise the outcome.

    Reaching max_rounds is not an error: the report carries the
    right-censored survival time with censored=True.
    """
    state = initial_state(cfg, seeding)
    step = _ROUND_FUNCS[cfg.scenario]
    history = [_distinct_present(state)] if record_presence else None

    alive = check_network_alive(state)
    if not alive.alive:
        return TrialReport(
            survival_time=0,
            censored=False,
            spread_succeeded=False if cfg.scenario is Scenario.SPREADING else None,
            downloads_completed=0,
            final_histogram=state.chunk_histogram(),
            presence_history=tuple(history) if history is not None else None,
        )

    spread_succeeded: bool | None = None
    censored = True
    while state.round < cfg.max_rounds:
        step(state, cfg)
        if history is not None:
            history.append(_distinct_present(state))
        if cfg.scenario is Scenario.SPREADING:
            if bool(state.sent.all()):
                spread_succeeded = True
                break
            if state.root_count == 0:
                spread_succeeded = False
                censored = False
                break
        else:
            if not check_network_alive(state).alive:
                censored = False
                break

    if cfg.scenario is Scenario.SPREADING and spread_succeeded is None:
        spread_succeeded = False  # horizon hit with chunks still undispatched

    return TrialReport(
        survival_time=state.round,
        censored=censored,
        spread_succeeded=spread_succeeded,
        downloads_completed=state.downloads_completed,
        final_histogram=state.chunk_histogram(),
        presence_history=tuple(history) if history is not None else None,
    )
