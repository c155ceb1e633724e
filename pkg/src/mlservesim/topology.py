"""Service graphs and deployment plans for the canonical scenarios.

``monolith``      gateway -> central node holding every preference vector
``microservice``  gateway -> shard node co-located with its users' vectors
``three_layer``   gateway -> shard (online inference) -> ranking, with a
                  nearline processor, offline trainer and monitor beside
                  the request path
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Any, Callable, Mapping

from .control_plane import (
    MODEL_TOPIC,
    PREFERENCE_TOPIC,
    ControlEvent,
    EventBus,
    NearlineProcessor,
    Registry,
)
from .desim import CompletedRequest, Engine, NetworkLink, Request, ServiceNode
from .domain import Architecture, ItemVector, LatencyModelParams, ModelError, NoiseSpec, UnknownUser, as_user_count
from .recsys import PreferenceStore, ShardedStore, ShardMap, assign_shards

GATEWAY = "gateway"
CENTRAL = "central"
RANKING = "ranking"
NEARLINE = "nearline"
OFFLINE = "offline"
MONITOR = "monitor"


class Scenario(str, enum.Enum):
    MONOLITH = "monolith"
    MICROSERVICE = "microservice"
    THREE_LAYER = "three_layer"


class Role(str, enum.Enum):
    GATEWAY = "Gateway"
    PREFERENCE_STORE = "PreferenceStoreNode"
    INFERENCE = "InferenceNode"
    RANKING = "RankingNode"
    NEARLINE = "NearlineProcessor"
    OFFLINE = "OfflineTrainer"
    MONITOR = "Monitor"


class GraphError(ModelError):
    pass


@dataclass(frozen=True)
class Options:
    """Knobs outside the latency model. Defaults give the model's exact
    latencies (free gateway, zero-latency links, no sidecars, no jitter)."""

    gateway_time: float = 0.0
    ranking_time: float = 0.5
    link_latency: float = 0.0
    sidecar_overhead: float = 0.0
    sidecar_enabled: bool = False
    jitter: bool = False


@dataclass(frozen=True)
class ServiceGraph:
    nodes: Mapping[str, Role]
    edges: tuple[tuple[str, str], ...]
    control_edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        gateways = [nid for nid, role in self.nodes.items() if role is Role.GATEWAY]
        if len(gateways) != 1:
            raise GraphError(f"need exactly one gateway, found {gateways}")
        for a, b in self.edges + self.control_edges:
            if a not in self.nodes or b not in self.nodes:
                raise GraphError(f"edge {a}->{b} references an unknown node")
        ts = TopologicalSorter({nid: set() for nid in self.nodes})
        for a, b in self.edges:
            ts.add(b, a)
        try:
            tuple(ts.static_order())
        except CycleError as exc:
            raise GraphError(f"request path has a cycle: {exc.args[1]}") from None

    @property
    def gateway(self) -> str:
        return next(nid for nid, role in self.nodes.items() if role is Role.GATEWAY)

    def successors(self, node_id: str) -> list[str]:
        return [b for a, b in self.edges if a == node_id]


@dataclass(frozen=True)
class DeploymentPlan:
    style: Architecture
    services: Mapping[str, ServiceNode]
    links: tuple[NetworkLink, ...]
    shard_map: ShardMap | None = None
    tail: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.style is Architecture.MICROSERVICE and self.shard_map is None:
            raise GraphError("a microservice plan needs a shard map")

    @property
    def contention(self) -> dict[str, float]:
        return {nid: s.contention_coefficient for nid, s in self.services.items()}

    @property
    def link_latencies(self) -> dict[tuple[str, str], float]:
        return {(l.from_node, l.to_node): l.latency for l in self.links}

    def route(self, user_id: int) -> tuple[str, ...]:
        if self.style is Architecture.MONOLITH:
            return (GATEWAY, CENTRAL) + self.tail
        return (GATEWAY, shard_node(self.shard_map.shard_of(user_id))) + self.tail


def shard_node(shard: int) -> str:
    return f"shard-{shard}"


def _params_ok(p: LatencyModelParams) -> LatencyModelParams:
    if not isinstance(p, LatencyModelParams):
        raise TypeError(f"expected LatencyModelParams, got {type(p).__name__}")
    return p


def _gateway(opts: Options) -> ServiceNode:
    return ServiceNode(GATEWAY, service_time=opts.gateway_time, role=Role.GATEWAY.value)


def _link(a: str, b: str, opts: Options) -> NetworkLink:
    return NetworkLink(a, b, opts.link_latency)


def build_monolith(n: int, p: LatencyModelParams, opts: Options = Options()) -> tuple[ServiceGraph, DeploymentPlan]:
    as_user_count(n)
    p = _params_ok(p)
    central = ServiceNode(
        CENTRAL,
        service_time=p.t_comp,
        contention_coefficient=p.alpha,
        sidecar_overhead=opts.sidecar_overhead,
        sidecar_enabled=opts.sidecar_enabled,
        jitter=NoiseSpec(p.sigma_mono if opts.jitter else 0.0),
        role=Role.PREFERENCE_STORE.value,
    )
    graph = ServiceGraph({GATEWAY: Role.GATEWAY, CENTRAL: Role.PREFERENCE_STORE}, ((GATEWAY, CENTRAL),))
    # one process: the gateway hop is in-memory
    plan = DeploymentPlan(
        Architecture.MONOLITH,
        {GATEWAY: _gateway(opts), CENTRAL: central},
        (NetworkLink(GATEWAY, CENTRAL, 0.0),),
    )
    return graph, plan


def _shards(n: int, num_shards: int, p: LatencyModelParams, opts: Options) -> tuple[ShardMap, dict[str, ServiceNode]]:
    shard_map = assign_shards(n, num_shards)
    nodes = {
        shard_node(s): ServiceNode(
            shard_node(s),
            service_time=p.t_comp + p.t_local,
            sidecar_overhead=opts.sidecar_overhead,
            sidecar_enabled=opts.sidecar_enabled,
            jitter=NoiseSpec(p.sigma_micro if opts.jitter else 0.0),
            role=Role.INFERENCE.value,
        )
        for s in range(num_shards)
    }
    return shard_map, nodes


def build_microservice(
    n: int, num_shards: int, p: LatencyModelParams, opts: Options = Options()
) -> tuple[ServiceGraph, DeploymentPlan]:
    n = as_user_count(n)
    p = _params_ok(p)
    shard_map, shards = _shards(n, num_shards, p, opts)
    graph = ServiceGraph(
        {GATEWAY: Role.GATEWAY, **{sid: Role.INFERENCE for sid in shards}},
        tuple((GATEWAY, sid) for sid in shards),
    )
    plan = DeploymentPlan(
        Architecture.MICROSERVICE,
        {GATEWAY: _gateway(opts), **shards},
        tuple(_link(GATEWAY, sid, opts) for sid in shards),
        shard_map,
    )
    return graph, plan


def build_three_layer(
    n: int, p: LatencyModelParams, num_shards: int = 10, opts: Options = Options()
) -> tuple[ServiceGraph, DeploymentPlan]:
    n = as_user_count(n)
    p = _params_ok(p)
    shard_map, shards = _shards(n, num_shards, p, opts)
    ranking = ServiceNode(
        RANKING,
        service_time=opts.ranking_time,
        sidecar_overhead=opts.sidecar_overhead,
        sidecar_enabled=opts.sidecar_enabled,
        role=Role.RANKING.value,
    )
    roles = {
        GATEWAY: Role.GATEWAY,
        **{sid: Role.INFERENCE for sid in shards},
        RANKING: Role.RANKING,
        NEARLINE: Role.NEARLINE,
        OFFLINE: Role.OFFLINE,
        MONITOR: Role.MONITOR,
    }
    edges = tuple((GATEWAY, sid) for sid in shards) + tuple((sid, RANKING) for sid in shards)
    control = (
        tuple((NEARLINE, sid) for sid in shards)
        + tuple((OFFLINE, sid) for sid in shards)
        + ((RANKING, MONITOR),)
    )
    graph = ServiceGraph(roles, edges, control)
    links = tuple(_link(GATEWAY, sid, opts) for sid in shards) + tuple(_link(sid, RANKING, opts) for sid in shards)
    plan = DeploymentPlan(
        Architecture.MICROSERVICE,
        {GATEWAY: _gateway(opts), **shards, RANKING: ranking},
        links,
        shard_map,
        tail=(RANKING,),
    )
    return graph, plan


def build(scenario: Scenario | str, n: int, p: LatencyModelParams, num_shards: int = 10, opts: Options = Options()):
    scenario = Scenario(scenario)
    if scenario is Scenario.MONOLITH:
        return build_monolith(n, p, opts)
    if scenario is Scenario.MICROSERVICE:
        return build_microservice(n, num_shards, p, opts)
    return build_three_layer(n, p, num_shards, opts)


def functional_result(graph: ServiceGraph, plan: DeploymentPlan, store: PreferenceStore, user_id: int, v: ItemVector) -> float:
    """Score returned to the gateway for ``user_id``; never depends on the
    deployment style."""
    if user_id not in store:
        raise UnknownUser(user_id)
    if plan.style is Architecture.MONOLITH:
        return store.score(user_id, v)
    return ShardedStore(store, plan.shard_map).score(user_id, v)


def deploy(
    graph: ServiceGraph,
    plan: DeploymentPlan,
    n: int,
    seed: int = 0,
    on_arrival: Callable[[Engine, Request], None] | None = None,
    on_complete: Callable[[Engine, CompletedRequest], None] | None = None,
    **engine_kw: Any,
) -> Engine:
    """An engine for ``plan`` with ``n`` registered users. Requests need a
    ``user_id`` for routing."""
    path_nodes = {nid for nid in plan.services}
    if not path_nodes <= set(graph.nodes):
        raise GraphError(f"plan nodes {sorted(path_nodes - set(graph.nodes))} missing from graph")
    return Engine(
        plan.services.values(),
        plan.links,
        router=lambda req: plan.route(req.user_id),
        active_users=as_user_count(n),
        seed=seed,
        on_arrival=on_arrival,
        on_complete=on_complete,
        **engine_kw,
    )


def light_load_spacing(p: LatencyModelParams, n: int, opts: Options = Options()) -> float:
    """A power-of-two inter-arrival gap comfortably above any single
    request's latency, so no request ever waits in a queue."""
    worst = (
        opts.gateway_time
        + p.t_comp
        + p.t_local
        + p.alpha * n
        + opts.ranking_time
        + 2 * opts.link_latency
        + 2 * opts.sidecar_overhead
        + 12 * max(p.sigma_mono, p.sigma_micro)
    )
    gap = 1.0
    while gap < 2 * worst:
        gap *= 2
    return gap


@dataclass
class ThreeLayerPipeline:
    """Runs a three-layer deployment with its control plane attached.

    Requests are scored against the preference store version current at
    their arrival. Preference updates go through the bus and only take
    effect at an explicit drain.
    """

    graph: ServiceGraph
    plan: DeploymentPlan
    store: PreferenceStore
    n: int
    seed: int = 0
    bus: EventBus = field(default_factory=EventBus)
    registry: Registry = field(default_factory=Registry)

    def __post_init__(self) -> None:
        self.nearline = NearlineProcessor(self.store)
        self.bus.subscribe(PREFERENCE_TOPIC, self.nearline)
        self.published_models: list[int] = []
        self.bus.subscribe(MODEL_TOPIC, lambda ev: self.published_models.append(ev.version_id))
        self.monitor: list[CompletedRequest] = []
        self.served_version: dict[int, int | None] = {}
        self._sharded: tuple[PreferenceStore, ShardedStore] | None = None
        self.engine = deploy(
            self.graph,
            self.plan,
            self.n,
            seed=self.seed,
            on_arrival=self._score,
            on_complete=lambda _eng, done: self.monitor.append(done),
        )

    def _score(self, engine: Engine, req: Request) -> None:
        if req.item is not None:
            if self._sharded is None or self._sharded[0] is not self.nearline.store:
                self._sharded = (self.nearline.store, ShardedStore(self.nearline.store, self.plan.shard_map))
            req.result = self._sharded[1].score(req.user_id, req.item)
        self.served_version[req.request_id] = self.registry.active

    def request(self, time: float, user_id: int, item: ItemVector | None = None) -> Request:
        if user_id not in self.nearline.store:
            raise UnknownUser(user_id)
        return self.engine.inject(time, GATEWAY, user_id, item)

    def publish_update_at(self, time: float, user_id: int, vector) -> None:
        self.engine.at(
            time,
            lambda eng: self.bus.publish(PREFERENCE_TOPIC, ControlEvent.preference_update(user_id, vector, eng.now)),
        )

    def drain_at(self, time: float) -> None:
        def _drain(_eng: Engine) -> None:
            self.bus.drain(PREFERENCE_TOPIC)
            self.bus.drain(MODEL_TOPIC)

        self.engine.at(time, _drain)

    def train_at(self, time: float, metadata=None, training_config=None, performance_score: float = 0.0) -> None:
        """Offline trainer: register a model version and announce it."""

        def _train(eng: Engine) -> None:
            vid = self.registry.register(metadata, training_config, performance_score, created_at=eng.now)
            self.bus.publish(MODEL_TOPIC, ControlEvent.model_published(vid, eng.now))

        self.engine.at(time, _train)

    def run(self):
        return self.engine.run_until_drained()
