import random

import pytest

from mlservesim.desim import (
    Engine,
    EventQueue,
    NetworkLink,
    NonTermination,
    ServiceNode,
    SimEvent,
    SimEventKind,
    SimTrace,
    TimeInPast,
    collect_latencies,
    effective_service_time,
    inject_workload,
    run_until_drained,
    schedule,
)
from mlservesim.domain import ModelError, NoiseSpec

CTRL = SimEventKind.CONTROL


def chain(service_times, link_latencies=(), concurrency=1):
    ids = [f"n{i}" for i in range(len(service_times))]
    nodes = [ServiceNode(i, service_time=s, concurrency=concurrency) for i, s in zip(ids, service_times)]
    links = [NetworkLink(a, b, lat) for a, b, lat in zip(ids, ids[1:], link_latencies)]
    return Engine(nodes, links, router=lambda req: ids), ids


def fifo_oracle(arrivals, service_times, link_latencies):
    """c_r = max(a_r, c_{r-1}) + s at each node; next node's arrival is c_r + link."""
    times = list(arrivals)
    for k, s in enumerate(service_times):
        done, prev = [], float("-inf")
        for a in times:
            prev = max(a, prev) + s
            done.append(prev)
        times = done if k == len(service_times) - 1 else [c + link_latencies[k] for c in done]
    return times


def test_queue_orders_by_time():
    q = EventQueue()
    q.push(SimEvent(5, CTRL))
    q.push(SimEvent(3, CTRL))
    assert [q.pop().time, q.pop().time] == [3, 5]


def test_queue_ties_keep_schedule_order():
    q = EventQueue()
    a = q.push(SimEvent(5, CTRL, node_id="A"))
    b = q.push(SimEvent(5, CTRL, node_id="B"))
    assert a.sequence < b.sequence
    assert [q.pop().node_id, q.pop().node_id] == ["A", "B"]


def test_schedule_in_past_rejected():
    eng = Engine([ServiceNode("x")])
    schedule(eng, SimEvent(2, CTRL, action=lambda e: None))
    eng.step()
    with pytest.raises(TimeInPast):
        schedule(eng, SimEvent(1, CTRL, action=lambda e: None))


def test_single_hop():
    eng, ids = chain([5])
    inject_workload(eng, 1, 10, ids[0])
    trace = run_until_drained(eng)
    assert trace.completed[0].completion_time == 5
    assert collect_latencies(trace) == [5.0]


def test_fifo_queueing():
    eng, ids = chain([5])
    eng.inject(0, ids[0])
    eng.inject(1, ids[0])
    trace = eng.run_until_drained()
    assert [c.completion_time for c in trace.completed] == [5, 10]


def test_two_node_path_sum():
    eng, ids = chain([5, 5], [2])
    eng.inject_workload(1, 0, ids[0])
    trace = eng.run_until_drained()
    assert collect_latencies(trace) == [12.0]
    assert trace.completed[0].path == ("n0", "n1")


def test_effective_service_time():
    assert effective_service_time(ServiceNode("c", 5, 0.02), 1000) == 25.0
    assert effective_service_time(ServiceNode("c", 5, 0.0), 123456) == 5
    node = ServiceNode("c", 5, 0.0, sidecar_overhead=0.5, sidecar_enabled=True)
    assert effective_service_time(node, 1000) == 5.5
    assert effective_service_time(ServiceNode("c", 5, sidecar_overhead=0.5), 1) == 5


def test_inject_workload_arrivals():
    eng, ids = chain([1])
    reqs = eng.inject_workload(3, 10, ids[0])
    eng.run_until_drained()
    assert [r.arrival_time for r in reqs] == [0, 10, 20]


def test_single_request_arrives_at_zero():
    eng, ids = chain([1])
    (req,) = eng.inject_workload(1, 10, ids[0])
    eng.run_until_drained()
    assert req.arrival_time == 0


def test_zero_gap_processed_in_injection_order():
    eng, ids = chain([3])
    eng.inject_workload(2, 0, ids[0])
    trace = eng.run_until_drained()
    assert [(c.request_id, c.completion_time) for c in trace.completed] == [(0, 3), (1, 6)]


def test_negative_gap_rejected():
    eng, ids = chain([3])
    with pytest.raises(ModelError):
        eng.inject_workload(2, -1, ids[0])


def test_collect_latencies_empty_and_ordered():
    assert collect_latencies(SimTrace(())) == []
    eng, ids = chain([5])
    eng.inject(0, ids[0])
    assert collect_latencies(eng.run_until_drained()) == [5.0]


def test_event_budget():
    eng, ids = chain([1, 1], [0])
    eng.event_budget = 5
    eng.inject_workload(3, 0, ids[0])
    with pytest.raises(NonTermination):
        eng.run_until_drained()


def test_missing_link_rejected():
    eng = Engine([ServiceNode("a"), ServiceNode("b")], router=lambda r: ["a", "b"])
    with pytest.raises(ModelError):
        eng.inject(0, "a")


def test_concurrency_two_servers():
    eng, ids = chain([5], concurrency=2)
    eng.inject_workload(3, 0, ids[0])
    trace = eng.run_until_drained()
    assert [c.completion_time for c in trace.completed] == [5, 5, 10]


@pytest.mark.parametrize("seed", range(25))
def test_fifo_recursion_oracle(seed):
    rnd = random.Random(seed)
    k = rnd.randint(1, 3)
    services = [rnd.choice([0.0, 0.5, 1.0, 2.5, 4.0]) for _ in range(k)]
    links = [rnd.choice([0.0, 1.0, 3.0]) for _ in range(k - 1)]
    count = rnd.randint(1, 10)
    arrivals = sorted(rnd.choice([0.0, 1.0, 2.0, 3.5, 7.0, 12.0]) for _ in range(count))
    eng, ids = chain(services, links)
    for a in arrivals:
        eng.inject(a, ids[0])
    trace = eng.run_until_drained()
    assert [c.completion_time for c in trace.completed] == fifo_oracle(arrivals, services, links)


def test_conservation_and_causality():
    eng, ids = chain([1.5, 0.5, 2.0], [1.0, 0.25])
    eng.inject_workload(10, 0.7, ids[0])
    times = []
    while eng.events:
        times.append(eng.step().time)
    assert times == sorted(times)
    trace = SimTrace(tuple(sorted(eng.completed, key=lambda c: c.request_id)))
    assert len(trace.completed) == 10
    for c in trace.completed:
        assert c.completion_time >= c.arrival_time
        stamps = [t for _, start, end in c.hops for t in (start, end)]
        assert stamps == sorted(stamps)


def test_jitter_deterministic_and_clamped():
    def run(seed):
        node = ServiceNode("a", service_time=0.1, jitter=NoiseSpec(5.0))
        eng = Engine([node], seed=seed)
        eng.inject_workload(50, 100, "a")
        return collect_latencies(eng.run_until_drained())

    a, b = run(3), run(3)
    assert a == b
    assert a != run(4)
    assert min(a) == 0.0
    assert all(x >= 0 for x in a)


def test_control_events_interleave():
    seen = []
    eng, ids = chain([5])
    eng.inject(0, ids[0])
    eng.at(2, lambda e: seen.append(e.now))
    eng.run_until_drained()
    assert seen == [2]
