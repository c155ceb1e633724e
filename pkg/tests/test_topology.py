import pytest

from mlservesim.analytic import eval_micro, eval_mono
from mlservesim.desim import collect_latencies
from mlservesim.domain import Architecture, ItemVector, LatencyModelParams, RngStream, UnknownUser
from mlservesim.recsys import PreferenceStore, generate_item, generate_store
from mlservesim.topology import (
    GATEWAY,
    GraphError,
    Options,
    Role,
    ServiceGraph,
    ThreeLayerPipeline,
    build_microservice,
    build_monolith,
    build_three_layer,
    deploy,
    functional_result,
    light_load_spacing,
)

P = LatencyModelParams().noiseless()
SWEEP = (100, 500, 1000, 2000, 5000, 10000)


def light_latencies(graph, plan, n, p=P, requests=3, users=None):
    eng = deploy(graph, plan, n)
    users = users or [r % n for r in range(requests)]
    eng.inject_workload(len(users), light_load_spacing(p, n), GATEWAY, users=users)
    return collect_latencies(eng.run_until_drained())


def test_monolith_examples():
    graph, plan = build_monolith(1000, P)
    assert light_latencies(graph, plan, 1000, requests=1) == [25.0]
    assert len(graph.nodes) == 2
    assert plan.style is Architecture.MONOLITH
    assert plan.contention["central"] == P.alpha
    flat = LatencyModelParams(alpha=0.0).noiseless()
    assert light_latencies(*build_monolith(1, flat), 1, p=flat, requests=1) == [5.0]


def test_microservice_examples():
    graph, plan = build_microservice(1000, 10, P)
    assert set(light_latencies(graph, plan, 1000, requests=20)) == {7.0}
    one = build_microservice(1000, 1, P)
    assert one[1].style is Architecture.MICROSERVICE
    assert light_latencies(*one, 1000) == [7.0] * 3
    assert light_latencies(*build_microservice(10**6, 10, P), 10**6) == light_latencies(*build_microservice(10, 10, P), 10)
    assert all(c == 0 for c in plan.contention.values())


@pytest.mark.parametrize("n", SWEEP)
def test_desim_equals_closed_form(n):
    assert light_latencies(*build_monolith(n, P), n, requests=5) == [eval_mono(n, P)] * 5
    assert light_latencies(*build_microservice(n, 10, P), n, requests=5) == [eval_micro(P)] * 5


def test_three_layer_latency():
    graph, plan = build_three_layer(1000, P)
    assert set(light_latencies(graph, plan, 1000, requests=12)) == {7.5}
    roles = set(graph.nodes.values())
    assert {Role.NEARLINE, Role.OFFLINE, Role.MONITOR, Role.RANKING} <= roles
    # observability taps stay off the request path
    on_path = {b for _, b in graph.edges} | {a for a, _ in graph.edges}
    assert "monitor" not in on_path and "nearline" not in on_path


def test_three_layer_reduces_to_microservice_plus_ranking():
    n = 700
    micro = light_latencies(*build_microservice(n, 10, P), n, requests=8)
    three = light_latencies(*build_three_layer(n, P), n, requests=8)
    assert three == [m + Options().ranking_time for m in micro]


def test_graph_needs_one_gateway():
    with pytest.raises(GraphError):
        ServiceGraph({"a": Role.INFERENCE}, ())
    with pytest.raises(GraphError):
        ServiceGraph({"g": Role.GATEWAY, "h": Role.GATEWAY}, ())


def test_graph_rejects_cycles():
    with pytest.raises(GraphError):
        ServiceGraph({"g": Role.GATEWAY, "a": Role.INFERENCE, "b": Role.RANKING}, (("g", "a"), ("a", "b"), ("b", "a")))


def test_sidecar_adds_overhead():
    opts = Options(sidecar_overhead=0.5, sidecar_enabled=True)
    assert light_latencies(*build_microservice(100, 4, P, opts), 100) == [7.5] * 3


def test_functional_result_invariant():
    store = PreferenceStore.from_rows({0: (1, 2, 3), 1: (0, 0, 1)})
    v = ItemVector((4, 5, 6))
    for g, plan in (build_monolith(2, P), build_microservice(2, 2, P), build_three_layer(2, P, num_shards=2)):
        assert functional_result(g, plan, store, 0, v) == 32.0
        with pytest.raises(UnknownUser):
            functional_result(g, plan, store, 9, v)


def test_functional_result_random_requests():
    rng = RngStream(77)
    n = 300
    store = generate_store(n, 16, rng)
    plans = [build_monolith(n, P), build_microservice(n, 7, P), build_three_layer(n, P, num_shards=5)]
    for _ in range(100):
        uid = rng.next_u64() % n
        v = generate_item(16, rng)
        scores = {functional_result(g, p, store, uid, v) for g, p in plans}
        assert len(scores) == 1


def test_nearline_freshness():
    store = PreferenceStore.from_rows({u: (1.0, 0.0) for u in range(6)})
    pipe = ThreeLayerPipeline(*build_three_layer(6, P, num_shards=2), store, 6)
    v = ItemVector((1.0, 1.0))
    pipe.publish_update_at(5, 3, (9.0, 9.0))
    before_publish = pipe.request(1, 3, v)
    pending = pipe.request(10, 3, v)
    pipe.drain_at(15)
    after = pipe.request(20, 3, v)
    other = pipe.request(21, 2, v)
    trace = pipe.run()
    assert [before_publish.result, pending.result, after.result, other.result] == [1.0, 1.0, 18.0, 1.0]
    assert pipe.nearline.store.score(3, v) == 18.0
    assert store.score(3, v) == 1.0
    assert len(pipe.monitor) == len(trace.completed) == 4
    assert set(collect_latencies(trace)) == {7.5}


def test_model_version_recorded_at_arrival():
    store = PreferenceStore.from_rows({0: (1.0,)})
    pipe = ThreeLayerPipeline(*build_three_layer(1, P, num_shards=1), store, 1)
    pipe.train_at(0, {"name": "v1"})
    r1 = pipe.request(1, 0)
    pipe.train_at(2, {"name": "v2"})
    r2 = pipe.request(3, 0)
    pipe.engine.at(4, lambda e: pipe.registry.rollback(1))
    r3 = pipe.request(5, 0)
    pipe.drain_at(6)
    pipe.run()
    assert [pipe.served_version[r.request_id] for r in (r1, r2, r3)] == [1, 2, 1]
    assert pipe.published_models == [1, 2]
