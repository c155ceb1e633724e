"""Deterministic discrete-event engine for request flows through service nodes.

Events are ordered by ``(time, sequence)`` where ``sequence`` is the order in
which they were scheduled, so simultaneous events run first-scheduled first.
Each node is a FIFO queue in front of ``concurrency`` identical servers.
"""

from __future__ import annotations

import enum
import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

from .analytic import sample_gaussian
from .domain import ModelError, NoiseSpec, RngStream

DEFAULT_EVENT_BUDGET = 10**8


class TimeInPast(ValueError):
    pass


class NonTermination(RuntimeError):
    pass


class SimEventKind(enum.Enum):
    ARRIVAL = "arrival"
    SERVICE_START = "service_start"
    SERVICE_END = "service_end"
    NETWORK_DELIVER = "network_deliver"
    CONTROL = "control"


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: SimEventKind
    request_id: int | None = None
    node_id: str | None = None
    sequence: int = -1
    action: Callable[[Engine], None] | None = field(default=None, compare=False, repr=False)


class EventQueue:
    """Min-heap of events with a causality guard on the simulation clock."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, int, SimEvent]] = []
        self._seq = 0
        self.clock = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, event: SimEvent) -> SimEvent:
        if not event.time >= self.clock:
            raise TimeInPast(f"event at t={event.time} scheduled at clock {self.clock}")
        event = replace(event, sequence=self._seq)
        self._seq += 1
        heapq.heappush(self._heap, (event.time, event.sequence, event))
        return event

    def pop(self) -> SimEvent:
        _, _, event = heapq.heappop(self._heap)
        self.clock = event.time
        return event


@dataclass(frozen=True)
class ServiceNode:
    node_id: str
    service_time: float = 0.0
    contention_coefficient: float = 0.0
    concurrency: int = 1
    sidecar_overhead: float = 0.0
    sidecar_enabled: bool = False
    jitter: NoiseSpec = NoiseSpec(0.0)
    role: str = ""

    def __post_init__(self) -> None:
        if self.service_time < 0 or self.contention_coefficient < 0 or self.sidecar_overhead < 0:
            raise ModelError(f"node {self.node_id}: negative timing parameter")
        if self.concurrency < 1:
            raise ModelError(f"node {self.node_id}: concurrency must be >= 1")


def effective_service_time(node: ServiceNode, active_users: int) -> float:
    t = node.service_time + node.contention_coefficient * active_users
    if node.sidecar_enabled:
        t += node.sidecar_overhead
    return t


@dataclass(frozen=True)
class NetworkLink:
    from_node: str
    to_node: str
    latency: float = 0.0

    def __post_init__(self) -> None:
        if not (self.latency >= 0 and math.isfinite(self.latency)):
            raise ModelError(f"link {self.from_node}->{self.to_node}: latency must be >= 0")


@dataclass
class Request:
    request_id: int
    path: tuple[str, ...]
    user_id: int | None = None
    item: Any = None
    arrival_time: float | None = None
    completion_time: float | None = None
    hop: int = 0
    hops: list[tuple[str, float, float]] = field(default_factory=list)
    result: Any = None


@dataclass(frozen=True)
class CompletedRequest:
    request_id: int
    arrival_time: float
    completion_time: float
    path: tuple[str, ...]
    hops: tuple[tuple[str, float, float], ...] = ()
    user_id: int | None = None
    result: Any = None

    @property
    def latency(self) -> float:
        return self.completion_time - self.arrival_time


@dataclass(frozen=True)
class SimTrace:
    completed: tuple[CompletedRequest, ...]
    dropped: tuple = ()
    events_processed: int = 0


@dataclass
class _NodeState:
    queue: deque = field(default_factory=deque)
    busy: int = 0


Router = Callable[[Request], Sequence[str]]


class Engine:
    """Single-threaded event loop over a fixed set of nodes and links.

    ``router`` maps a request to its node path (default: just the entry
    node). ``on_arrival`` runs when a request reaches its entry node and may
    set ``request.result``; ``on_complete`` runs when it leaves the last node.
    """

    def __init__(
        self,
        nodes: Iterable[ServiceNode],
        links: Iterable[NetworkLink] = (),
        router: Router | None = None,
        active_users: int = 1,
        seed: int = 0,
        event_budget: int = DEFAULT_EVENT_BUDGET,
        on_arrival: Callable[[Engine, Request], None] | None = None,
        on_complete: Callable[[Engine, CompletedRequest], None] | None = None,
    ) -> None:
        self.nodes = {n.node_id: n for n in nodes}
        self.links = {(l.from_node, l.to_node): l.latency for l in links}
        self.router = router
        self.active_users = active_users
        self.seed = seed
        self.event_budget = event_budget
        self.on_arrival = on_arrival
        self.on_complete = on_complete
        self.events = EventQueue()
        self.requests: dict[int, Request] = {}
        self.completed: list[CompletedRequest] = []
        self.processed = 0
        self._state = {nid: _NodeState() for nid in self.nodes}

    @property
    def now(self) -> float:
        return self.events.clock

    def schedule(self, event: SimEvent) -> SimEvent:
        return self.events.push(event)

    def at(self, time: float, action: Callable[[Engine], None]) -> SimEvent:
        """Schedule a control action (bus drain, registry change, ...)."""
        return self.schedule(SimEvent(time, SimEventKind.CONTROL, action=action))

    def inject(self, time: float, entry_node: str, user_id: int | None = None, item: Any = None) -> Request:
        rid = len(self.requests)
        req = Request(rid, (entry_node,), user_id=user_id, item=item)
        if self.router is not None:
            req.path = tuple(self.router(req))
        if not req.path or req.path[0] != entry_node:
            raise ModelError(f"request {rid}: path {req.path} does not start at {entry_node}")
        for a, b in zip(req.path, req.path[1:]):
            if (a, b) not in self.links:
                raise ModelError(f"request {rid}: no link {a}->{b}")
        missing = [nid for nid in req.path if nid not in self.nodes]
        if missing:
            raise ModelError(f"request {rid}: unknown nodes {missing}")
        self.requests[rid] = req
        self.schedule(SimEvent(time, SimEventKind.ARRIVAL, rid, entry_node))
        return req

    def inject_workload(
        self,
        request_count: int,
        inter_arrival: float,
        entry_node: str,
        users: Sequence[int] | None = None,
        items: Sequence[Any] | None = None,
        start: float = 0.0,
    ) -> list[Request]:
        if inter_arrival < 0:
            raise ModelError(f"inter_arrival must be >= 0, got {inter_arrival}")
        return [
            self.inject(
                start + r * inter_arrival,
                entry_node,
                None if users is None else users[r],
                None if items is None else items[r],
            )
            for r in range(request_count)
        ]

    def service_time(self, node: ServiceNode, req: Request) -> float:
        t = effective_service_time(node, self.active_users)
        if node.jitter.sigma > 0:
            rng = RngStream.substream(self.seed, req.request_id, node.node_id, req.hop)
            t = max(0.0, t + sample_gaussian(rng, node.jitter))
        return t

    def _enqueue(self, req: Request, node_id: str) -> None:
        st = self._state[node_id]
        if st.busy < self.nodes[node_id].concurrency:
            st.busy += 1
            self.schedule(SimEvent(self.now, SimEventKind.SERVICE_START, req.request_id, node_id))
        else:
            st.queue.append(req)

    def _complete(self, req: Request) -> None:
        req.completion_time = self.now
        done = CompletedRequest(
            req.request_id,
            req.arrival_time,
            req.completion_time,
            req.path,
            tuple(req.hops),
            req.user_id,
            req.result,
        )
        self.completed.append(done)
        if self.on_complete is not None:
            self.on_complete(self, done)

    def _handle(self, ev: SimEvent) -> None:
        kind = ev.kind
        if kind is SimEventKind.CONTROL:
            ev.action(self)
            return
        req = self.requests[ev.request_id]
        if kind is SimEventKind.ARRIVAL:
            req.arrival_time = self.now
            if self.on_arrival is not None:
                self.on_arrival(self, req)
            self._enqueue(req, ev.node_id)
        elif kind is SimEventKind.NETWORK_DELIVER:
            self._enqueue(req, ev.node_id)
        elif kind is SimEventKind.SERVICE_START:
            s = self.service_time(self.nodes[ev.node_id], req)
            req.hops.append((ev.node_id, self.now, math.nan))
            self.schedule(SimEvent(self.now + s, SimEventKind.SERVICE_END, req.request_id, ev.node_id))
        elif kind is SimEventKind.SERVICE_END:
            node_id, start, _ = req.hops[-1]
            req.hops[-1] = (node_id, start, self.now)
            st = self._state[ev.node_id]
            st.busy -= 1
            if st.queue:
                self._enqueue(st.queue.popleft(), ev.node_id)
            req.hop += 1
            if req.hop < len(req.path):
                nxt = req.path[req.hop]
                delay = self.links[(ev.node_id, nxt)]
                self.schedule(SimEvent(self.now + delay, SimEventKind.NETWORK_DELIVER, req.request_id, nxt))
            else:
                self._complete(req)

    def step(self) -> SimEvent:
        ev = self.events.pop()
        self.processed += 1
        if self.processed > self.event_budget:
            raise NonTermination(f"event budget {self.event_budget} exhausted at t={self.now}")
        self._handle(ev)
        return ev

    def run_until_drained(self) -> SimTrace:
        while self.events:
            self.step()
        unfinished = [r.request_id for r in self.requests.values() if r.completion_time is None]
        if unfinished:
            raise RuntimeError(f"requests never completed: {unfinished[:10]}")
        return SimTrace(
            completed=tuple(sorted(self.completed, key=lambda c: c.request_id)),
            events_processed=self.processed,
        )


def schedule(engine: Engine, event: SimEvent) -> SimEvent:
    return engine.schedule(event)


def inject_workload(engine: Engine, request_count: int, inter_arrival: float, entry_node: str, **kw) -> list[Request]:
    return engine.inject_workload(request_count, inter_arrival, entry_node, **kw)


def run_until_drained(engine: Engine) -> SimTrace:
    return engine.run_until_drained()


def collect_latencies(trace: SimTrace) -> list[float]:
    return [c.completion_time - c.arrival_time for c in sorted(trace.completed, key=lambda c: c.request_id)]
