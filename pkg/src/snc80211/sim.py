"""Slot-level discrete-event simulator of an 802.11 DCF WLAN.

n saturated or Poisson-fed nodes contend for one channel. Time advances in
idle-slot quanta but the loop jumps event to event (next backoff expiry,
next arrival boundary, busy-period end), so cost scales with events, not
slots. All transmissions start at idle-slot boundaries; a successful
exchange occupies exactly L idle slots including the trailing DIFS, matching
the analytic model's geometry.

Replication i draws from an independent stream spawned from the root seed,
so results are bit-reproducible for a fixed (config, seed).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dcf import Params80211, _ceil_slots, data_slots, slot_length

__all__ = [
    "TRAFFIC_MODES",
    "COLLISION_MODES",
    "SimConfig",
    "NodeState",
    "SimResult",
    "run",
    "empirical_tail",
]

TRAFFIC_MODES = ("poisson", "saturated")
COLLISION_MODES = ("same-as-success", "data-plus-difs")
_SATURATED_QUEUE = 1 << 40
_INF = float("inf")


@dataclass(frozen=True)
class SimConfig:
    """One experiment: parameters, traffic, horizon and seeding.

    rate is in packets per network-calculus slot (L idle slots); the
    per-idle-slot arrival rate is rate/L. sample_time is where the tagged
    node's backlog is recorded, once per replication.
    """

    params: Params80211 = field(default_factory=Params80211)
    traffic: str = "poisson"
    rate: float = 0.0
    duration: float = 100.0
    replications: int = 100
    sample_time: float = 50.0
    seed: int = 0
    collision_duration_mode: str = "same-as-success"

    def __post_init__(self):
        if self.traffic not in TRAFFIC_MODES:
            raise ValueError(f"traffic must be one of {TRAFFIC_MODES}")
        if self.collision_duration_mode not in COLLISION_MODES:
            raise ValueError(f"collision_duration_mode must be one of {COLLISION_MODES}")
        if self.traffic == "poisson" and self.rate < 0:
            raise ValueError("poisson rate must be nonnegative")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if not 0 <= self.sample_time <= self.duration:
            raise ValueError("need 0 <= sample_time <= duration")


@dataclass(slots=True)
class NodeState:
    """Mutable per-node MAC state.

    difs_wait counts idle slots the node must still observe before its
    backoff counter may resume; it is re-armed after every busy period and
    on a packet arriving to an empty queue.
    """

    queue_len: int
    cw: int
    backoff_counter: int
    retries: int
    difs_wait: int


@dataclass(eq=False)
class SimResult:
    """Aggregated outcome over all replications.

    backlogs holds the tagged node's backlog at sample_time, one entry per
    replication. throughput_per_node is in packets per network-calculus
    slot, averaged over replications. tagged_attempt_rate is attempts per
    backoff-chain slot of the tagged node (countdown decrements plus its own
    attempt slots), the simulator's estimate of tau.
    """

    backlogs: np.ndarray
    mean_backlog: float
    drops: int
    throughput_per_node: np.ndarray
    tagged_attempt_rate: float
    tagged_collision_fraction: float
    replications: int
    sample_time: float

    def empirical_tail(self, x: int) -> float:
        """Fraction of replications whose sampled backlog exceeds x."""
        if x < 0:
            raise ValueError("x must be nonnegative")
        return float(np.mean(self.backlogs > x))


def empirical_tail(result: SimResult, x: int) -> float:
    return result.empirical_tail(x)


@dataclass
class _RepStats:
    sample: int
    succ: list
    drops: list
    attempts0: int
    colls0: int
    ticks0: int


def _run_one(config: SimConfig, rng: np.random.Generator) -> _RepStats:
    p = config.params
    n = p.n_nodes
    L = slot_length(p)
    difs_arm = _ceil_slots(p.difs, p.idle_slot)
    busy_success = L - difs_arm  # DATA+SIFS+ACK; success cycle is exactly L
    if config.collision_duration_mode == "same-as-success":
        busy_collision = busy_success
    else:
        busy_collision = data_slots(p)
    slots_per_sec = 1e6 / p.idle_slot
    t_end = int(round(config.duration * slots_per_sec))
    s_slot = config.sample_time * slots_per_sec
    saturated = config.traffic == "saturated"
    q0 = _SATURATED_QUEUE if saturated else 0

    nodes = [NodeState(queue_len=q0, cw=p.cw_min,
                       backoff_counter=int(rng.integers(p.cw_min)), retries=0,
                       difs_wait=difs_arm if q0 else 0)
             for _ in range(n)]
    tagged = nodes[0]
    if saturated or config.rate <= 0:
        mean_gap = _INF
        next_arr = [_INF] * n
    else:
        mean_gap = L / config.rate
        next_arr = [float(rng.exponential(mean_gap)) for _ in range(n)]

    delivered = [0] * n
    succ = [0] * n
    dropped = [0] * n
    attempts0 = colls0 = ticks0 = 0
    sampled = False
    sample_val = 0

    def deliver(limit: float):
        # hand queued arrivals with time <= limit to their nodes, in order
        while True:
            j = min(range(n), key=next_arr.__getitem__)
            u = next_arr[j]
            if u > limit:
                return
            st = nodes[j]
            st.queue_len += 1
            delivered[j] += 1
            if st.queue_len == 1:
                st.difs_wait = difs_arm
            next_arr[j] = u + rng.exponential(mean_gap)

    def advance(limit: float):
        # the backlog sample fires the first time the clock would pass
        # s_slot: arrivals up to the sample instant count, departures whose
        # busy period ends later do not
        nonlocal sampled, sample_val
        if not sampled and limit > s_slot:
            deliver(s_slot)
            sample_val = tagged.queue_len
            sampled = True
        deliver(limit)

    t = 0
    while t < t_end:
        k = None
        for st in nodes:
            if st.queue_len > 0:
                w = st.difs_wait + st.backoff_counter
                if k is None or w < k:
                    k = w
        if k is None:
            # idle system: jump to the next arrival boundary
            u = min(next_arr)
            if u > t_end:
                break
            nt = math.ceil(u)
            advance(nt)
            t = nt
            continue
        u = min(next_arr)
        tx_t = t + k
        if u <= tx_t - 1 and u <= t_end:
            # an arrival boundary lands inside the countdown; stop there so
            # the newly backlogged node joins the race consistently
            nt = math.ceil(u)
            ticks0 += _elapse(nodes, tagged, nt - t)
            advance(nt)
            t = nt
            continue
        if tx_t > t_end:
            advance(t_end)
            t = t_end
            break
        ticks0 += _elapse(nodes, tagged, k)
        transmitters = [i for i in range(n)
                        if nodes[i].queue_len > 0
                        and nodes[i].difs_wait + nodes[i].backoff_counter == 0]
        assert transmitters, "countdown expired with no transmitter"
        if len(transmitters) == 1:
            b_end = tx_t + busy_success
        else:
            b_end = tx_t + busy_collision
        advance(b_end)
        if len(transmitters) == 1:
            i = transmitters[0]
            st = nodes[i]
            if i == 0:
                attempts0 += 1
                ticks0 += 1
            st.queue_len -= 1
            succ[i] += 1
            st.cw = p.cw_min
            st.retries = 0
            # mandatory fresh backoff between consecutive transmissions
            st.backoff_counter = int(rng.integers(st.cw))
        else:
            for i in transmitters:
                st = nodes[i]
                if i == 0:
                    attempts0 += 1
                    ticks0 += 1
                    colls0 += 1
                st.retries += 1
                if st.retries >= p.retry_limit:
                    st.queue_len -= 1
                    dropped[i] += 1
                    st.cw = p.cw_min
                    st.retries = 0
                else:
                    st.cw = min(2 * st.cw, p.cw_max)
                st.backoff_counter = int(rng.integers(st.cw))
                assert st.cw <= p.cw_max and st.retries < p.retry_limit
        for st in nodes:
            if st.queue_len > 0:
                st.difs_wait = difs_arm
        t = b_end

    if not sampled:
        deliver(s_slot)
        sample_val = tagged.queue_len
    deliver(t_end)

    for i in range(n):
        # conservation: every delivered packet is served, dropped, or queued
        assert delivered[i] == succ[i] + dropped[i] + (nodes[i].queue_len - q0)
    return _RepStats(sample=sample_val, succ=succ, drops=dropped,
                     attempts0=attempts0, colls0=colls0, ticks0=ticks0)


def _elapse(nodes, tagged, delta: int) -> int:
    """Advance delta idle slots of countdown for all backlogged nodes;
    returns the tagged node's backoff decrements for attempt-rate accounting."""
    ticks = 0
    for st in nodes:
        if st.queue_len == 0:
            continue
        d = st.difs_wait
        if d >= delta:
            st.difs_wait = d - delta
        else:
            st.difs_wait = 0
            rem = delta - d
            st.backoff_counter -= rem
            assert st.backoff_counter >= 0
            if st is tagged:
                ticks = rem
    return ticks


def run(config: SimConfig) -> SimResult:
    """Run all replications and aggregate.

    Replication streams come from spawning the root SeedSequence, so each
    replication is independent and the whole result is a pure function of
    (config, seed).
    """
    p = config.params
    L = slot_length(p)
    slots_per_sec = 1e6 / p.idle_slot
    t_end = int(round(config.duration * slots_per_sec))
    children = np.random.SeedSequence(config.seed).spawn(config.replications)
    reps = [_run_one(config, np.random.default_rng(s)) for s in children]

    backlogs = np.array([r.sample for r in reps], dtype=np.int64)
    thr = np.array([[s * L / t_end for s in r.succ] for r in reps], dtype=float)
    attempts = sum(r.attempts0 for r in reps)
    ticks = sum(r.ticks0 for r in reps)
    colls = sum(r.colls0 for r in reps)
    return SimResult(
        backlogs=backlogs,
        mean_backlog=float(backlogs.mean()),
        drops=int(sum(sum(r.drops) for r in reps)),
        throughput_per_node=thr.mean(axis=0),
        tagged_attempt_rate=attempts / ticks if ticks else 0.0,
        tagged_collision_fraction=colls / attempts if attempts else 0.0,
        replications=config.replications,
        sample_time=config.sample_time,
    )
