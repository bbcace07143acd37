import numpy as np
import pytest

from ucarp.instance import (
    Edge,
    Instance,
    InstanceFormatError,
    UnreachableVerticesError,
    build_distance_oracle,
    list_benchmarks,
    load_benchmark,
    min_vehicles,
    parse_instance,
    serialize_instance,
)
from util import brute_shortest, random_connected_instance

KSHS_TOY = """\
NOMBRE : toy1
COMENTARIO : test fixture
VERTICES : 4
ARISTAS_REQ : 3
ARISTAS_NOREQ : 1
VEHICULOS : 2
CAPACIDAD : 5
TIPO_COSTES_ARISTAS : EXPLICITOS
COSTE_TOTAL_REQ : 9
LISTA_ARISTAS_REQ :
( 1 , 2 )   coste 3   demanda 2
( 2 , 3 )   coste 4   demanda 3
( 3 , 4 )   coste 2   demanda 4
LISTA_ARISTAS_NOREQ :
( 1 , 4 )   coste 9
DEPOSITO : 1
"""

EGL_TOY = """\
Name:\t\ttoy-egl
Optimal value:\t-1
#Vehicles:\t2
Capacity:\t6
Depot Node:\t1
#Nodes:\t4
#Edges:\t4
#Required E:\t2
#Non-req E:\t2
LIST_REQ_EDGES :
(1,2)   trav_cost 3   demand 2   serv_cost 4
(3,4)   trav_cost 2   demand 4   serv_cost 2
LIST_NON_REQ_EDGES :
(2,3)   trav_cost 5
(1,4)   trav_cost 9
END
"""


def test_parse_kshs_toy():
    inst = parse_instance(KSHS_TOY)
    assert inst.name == "toy1"
    assert inst.vertices == 4
    assert len(inst.edges) == 4
    assert len(inst.tasks) == 3
    assert inst.depot == 1
    assert inst.capacity == 5
    assert inst.num_vehicles == 2  # ceil(9 / 5)
    e = inst.edges[0]
    assert (e.u, e.v, e.traversal_cost, e.serving_cost, e.demand) == (1, 2, 3, 3, 2)
    noreq = inst.edges[3]
    assert noreq.demand == 0 and noreq.serving_cost == 0


def test_parse_egl_toy():
    inst = parse_instance(EGL_TOY)
    assert inst.name == "toy-egl"
    assert inst.vertices == 4
    assert len(inst.tasks) == 2
    assert inst.capacity == 6
    # serving cost is independent of traversal cost in this layout
    assert inst.tasks[0].serving_cost == 4
    assert inst.tasks[0].traversal_cost == 3
    assert inst.num_vehicles == 1


def test_format_detection_and_explicit_format_agree():
    assert parse_instance(KSHS_TOY, fmt="gdb") == parse_instance(KSHS_TOY)
    assert parse_instance(EGL_TOY, fmt="egl") == parse_instance(EGL_TOY)


def test_roundtrip_fixed_point_toys():
    for text in (KSHS_TOY, EGL_TOY):
        inst = parse_instance(text)
        again = parse_instance(serialize_instance(inst))
        assert again == inst
        assert parse_instance(serialize_instance(again)) == again


def test_parse_errors():
    with pytest.raises(InstanceFormatError):
        parse_instance(KSHS_TOY.replace("ARISTAS_REQ : 3", "ARISTAS_REQ : 4"))
    with pytest.raises(InstanceFormatError):
        parse_instance(KSHS_TOY.replace("VERTICES : 4", "VERTICES : 9"))  # disconnected
    with pytest.raises(InstanceFormatError):
        parse_instance("garbage that is not an instance")
    # a task demand above capacity is rejected
    with pytest.raises(InstanceFormatError):
        parse_instance(KSHS_TOY.replace("CAPACIDAD : 5", "CAPACIDAD : 3"))
    # duplicate edges are rejected
    dup = KSHS_TOY.replace("( 3 , 4 )   coste 2   demanda 4",
                           "( 1 , 2 )   coste 2   demanda 4")
    with pytest.raises(InstanceFormatError):
        parse_instance(dup)


def test_min_vehicles_boundaries():
    def mk(demands, q):
        edges = tuple(
            Edge(i + 1, i + 2, 1.0, 1.0, d) for i, d in enumerate(demands)
        )
        return Instance("t", len(demands) + 1, edges, 1, q)

    assert min_vehicles(mk([1.0] * 22, 5)) == 5  # 22/5 -> 5
    assert min_vehicles(mk([5.0], 5)) == 1  # exact fit stays 1
    assert min_vehicles(mk([3.0, 3.0], 6)) == 1
    assert min_vehicles(mk([0.6 * 6, 0.5 * 6], 6)) == 2  # just over one load
    inst = mk([2.0, 2.0], 4)
    total = sum(e.demand for e in inst.edges)
    m = inst.num_vehicles
    assert (m - 1) * inst.capacity < total <= m * inst.capacity


def test_min_vehicles_invariant_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        inst = random_connected_instance(rng)
        total = sum(e.demand for e in inst.edges)
        m = min_vehicles(inst)
        assert (m - 1) * inst.capacity < total <= m * inst.capacity


# ---------------------------------------------------------------------------
# distance oracle
# ---------------------------------------------------------------------------


def test_oracle_matches_bruteforce_on_random_graphs():
    rng = np.random.default_rng(42)
    for _ in range(40):
        inst = random_connected_instance(rng)
        oracle = build_distance_oracle(inst)
        for a in range(1, inst.vertices + 1):
            for b in range(1, inst.vertices + 1):
                assert oracle.distance(a, b) == pytest.approx(
                    brute_shortest(inst, a, b)
                )


def test_oracle_invariants_random():
    rng = np.random.default_rng(3)
    for _ in range(25):
        inst = random_connected_instance(rng)
        oracle = build_distance_oracle(inst)
        n = inst.vertices
        d = oracle.dist[1:, 1:]
        assert np.allclose(d, d.T)
        assert np.all(np.diag(d) == 0)
        # triangle inequality
        for k in range(n):
            assert np.all(d <= d[:, [k]] + d[[k], :] + 1e-9)
        # successor chains reach the target and are locally consistent
        for a in range(1, n + 1):
            for b in range(1, n + 1):
                if a == b:
                    assert oracle.successor(a, b) == a
                    continue
                s = oracle.successor(a, b)
                step = next(
                    e.traversal_cost
                    for e in inst.edges
                    if {e.u, e.v} == {a, s}
                )
                assert step + oracle.distance(s, b) == pytest.approx(
                    oracle.distance(a, b)
                )
                path = oracle.path(a, b)
                assert path[0] == a and path[-1] == b


def test_oracle_respects_exclusions():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(60):
        inst = random_connected_instance(rng)
        e = inst.edges[int(rng.integers(0, len(inst.edges)))]
        try:
            oracle = build_distance_oracle(inst, excluded_edges=[(e.u, e.v)])
        except UnreachableVerticesError as err:
            # the excluded edge was a bridge; brute force agrees nothing passes
            assert all(
                np.isinf(brute_shortest(inst, inst.depot, v, [(e.u, e.v)]))
                for v in err.stranded
            )
            continue
        hits += 1
        for a in range(1, inst.vertices + 1):
            assert oracle.distance(1, a) == pytest.approx(
                brute_shortest(inst, 1, a, [(e.u, e.v)])
            )
    assert hits > 10


def test_oracle_exclusion_line_graph():
    # 1-2-3 path: cutting (2,3) strands vertex 3
    edges = (Edge(1, 2, 1.0, 1.0, 1.0), Edge(2, 3, 1.0, 1.0, 1.0))
    inst = Instance("line", 3, edges, 1, 5.0)
    with pytest.raises(UnreachableVerticesError) as exc:
        build_distance_oracle(inst, excluded_edges=[(3, 2)])
    assert exc.value.stranded == [3]


def test_successor_tie_breaks_to_lowest_vertex():
    # two equal-cost 1->4 paths: via 2 and via 3; the lower first hop wins
    edges = (
        Edge(1, 2, 1.0, 0.0, 0.0),
        Edge(1, 3, 1.0, 0.0, 0.0),
        Edge(2, 4, 1.0, 0.0, 0.0),
        Edge(3, 4, 1.0, 0.0, 0.0),
    )
    inst = Instance("tie", 4, edges, 1, 1.0)
    oracle = build_distance_oracle(inst)
    assert oracle.successor(1, 4) == 2
    assert oracle.path(1, 4) == [1, 2, 4]


# ---------------------------------------------------------------------------
# bundled data
# ---------------------------------------------------------------------------


def test_gdb1_contents():
    inst = load_benchmark("gdb1")
    assert inst.vertices == 12
    assert len(inst.edges) == 22
    assert len(inst.tasks) == 22
    assert inst.capacity == 5
    assert inst.num_vehicles == 5
    assert sum(e.traversal_cost for e in inst.edges) == 267
    oracle = build_distance_oracle(inst)
    # frozen spot checks, confirmed against the brute-force oracle
    assert oracle.distance(1, 10) == 19
    assert oracle.distance(9, 1) == 19
    assert oracle.distance(3, 12) == 15
    for a in range(1, 13):
        for b in range(1, 13):
            assert oracle.distance(a, b) == pytest.approx(brute_shortest(inst, a, b))


def test_bundled_instances_roundtrip_and_validate():
    names = list_benchmarks()
    assert "gdb1" in names
    for name in names:
        inst = load_benchmark(name)
        assert parse_instance(serialize_instance(inst)) == inst
        assert inst.num_vehicles == min_vehicles(inst)
        assert all(t.demand <= inst.capacity for t in inst.tasks)


def test_list_benchmarks_by_family():
    assert "gdb1" in list_benchmarks("gdb")
    assert all(n.startswith("val") for n in list_benchmarks("val"))
