"""Arc-routing instances: benchmark file parsing, fleet sizing, shortest paths.

An instance is an undirected connected graph.  A subset of edges (the tasks)
carries positive mean demand and a serving cost; every edge carries a mean
deadheading (traversal) cost.  Vehicles are based at a single depot vertex and
share one capacity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy.sparse.csgraph import floyd_warshall


class InstanceFormatError(ValueError):
    """Raised when a benchmark file cannot be parsed or fails validation."""


class UnreachableVerticesError(RuntimeError):
    """Raised when excluded edges cut vertices off from the depot."""

    def __init__(self, stranded):
        self.stranded = sorted(stranded)
        super().__init__(f"vertices unreachable from depot: {self.stranded}")


@dataclass(frozen=True)
class Edge:
    """Undirected edge with mean costs; ``demand > 0`` marks it as a task."""

    u: int
    v: int
    traversal_cost: float  # mean deadheading cost
    serving_cost: float
    demand: float  # mean demand, 0 for non-task edges

    def endpoints(self):
        return (self.u, self.v)


@dataclass
class Instance:
    name: str
    vertices: int
    edges: tuple
    depot: int
    capacity: float
    num_vehicles: int = field(default=0)

    def __post_init__(self):
        if self.num_vehicles == 0:
            self.num_vehicles = min_vehicles(self)
        self._edge_pos = {(e.u, e.v): i for i, e in enumerate(self.edges)}
        self._task_pos = {(e.u, e.v): i for i, e in enumerate(self.tasks)}

    @property
    def tasks(self):
        """Edges with positive mean demand, in file order."""
        return tuple(e for e in self.edges if e.demand > 0)

    def edge_position(self, u: int, v: int) -> int:
        """Index of the (u, v) edge within ``edges``; endpoint order-free."""
        return self._edge_pos[(u, v) if u < v else (v, u)]

    def task_position(self, u: int, v: int) -> int:
        """Index of the (u, v) task within ``tasks``; endpoint order-free."""
        return self._task_pos[(u, v) if u < v else (v, u)]

    def __repr__(self):
        return (
            f"Instance({self.name}: {self.vertices} vertices, "
            f"{len(self.edges)} edges, {len(self.tasks)} tasks, "
            f"Q={self.capacity:g}, m={self.num_vehicles})"
        )


def min_vehicles(instance) -> int:
    """Smallest fleet able to carry the total mean demand: ceil(sum d / Q).

    The fleet size used everywhere else in the toolkit; benchmark files may
    carry their own vehicle counts but those are ignored.
    """
    total = sum(e.demand for e in instance.edges)
    q = instance.capacity
    if total == 0:
        return 0
    if float(total).is_integer() and float(q).is_integer():
        return int(-(-int(total) // int(q)))
    return int(math.ceil(total / q))


# ---------------------------------------------------------------------------
# parsing / serialization
# ---------------------------------------------------------------------------

_EDGE_RE = re.compile(
    r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*coste\s+(\d+(?:\.\d+)?)"
    r"(?:\s+demanda\s+(\d+(?:\.\d+)?))?"
)
_EGL_REQ_RE = re.compile(
    r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*trav_cost\s+(\d+(?:\.\d+)?)"
    r"\s+demand\s+(\d+(?:\.\d+)?)\s+serv_cost\s+(\d+(?:\.\d+)?)"
)
_EGL_NOREQ_RE = re.compile(
    r"\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*trav_cost\s+(\d+(?:\.\d+)?)"
)


def _header_value(text, key, cast=int, required=True):
    m = re.search(rf"^\s*{re.escape(key)}\s*:\s*(\S+)", text, re.MULTILINE)
    if m is None:
        if required:
            raise InstanceFormatError(f"missing header field {key!r}")
        return None
    return cast(m.group(1))


def detect_format(text: str) -> str:
    head = text.lstrip()[:200]
    if head.startswith("NOMBRE"):
        # gdb and val share one layout; use the declared name to tell them apart
        name = _header_value(text, "NOMBRE", cast=str).lower()
        return "val" if name.startswith("val") else "gdb"
    if head.startswith("Name"):
        return "egl"
    raise InstanceFormatError("unrecognized benchmark file layout")


def parse_instance(text: str, fmt: str | None = None) -> Instance:
    """Parse a benchmark DAT file into an Instance.

    ``fmt`` is one of 'gdb', 'val', 'egl'; when omitted it is detected from
    the header.  See docs/formats.md for the exact field layout of each
    family.
    """
    if fmt is None:
        fmt = detect_format(text)
    if fmt in ("gdb", "val"):
        inst = _parse_kshs(text)
    elif fmt == "egl":
        inst = _parse_egl(text)
    else:
        raise InstanceFormatError(f"unknown format {fmt!r}")
    _validate(inst)
    return inst


def _parse_kshs(text):
    name = _header_value(text, "NOMBRE", cast=str)
    n = _header_value(text, "VERTICES")
    n_req = _header_value(text, "ARISTAS_REQ")
    n_noreq = _header_value(text, "ARISTAS_NOREQ")
    capacity = _header_value(text, "CAPACIDAD", cast=float)
    depot = _header_value(text, "DEPOSITO")

    req_part = text.partition("LISTA_ARISTAS_REQ")[2]
    noreq_part = ""
    if "LISTA_ARISTAS_NOREQ" in req_part:
        req_part, _, noreq_part = req_part.partition("LISTA_ARISTAS_NOREQ")
    edges = []
    for m in _EDGE_RE.finditer(req_part):
        u, v = int(m.group(1)), int(m.group(2))
        cost = float(m.group(3))
        if m.group(4) is None:
            raise InstanceFormatError(f"required edge ({u},{v}) is missing a demand")
        edges.append(Edge(min(u, v), max(u, v), cost, cost, float(m.group(4))))
    if len(edges) != n_req:
        raise InstanceFormatError(
            f"{name}: header declares {n_req} required edges, found {len(edges)}"
        )
    noreq = [
        Edge(min(int(m.group(1)), int(m.group(2))),
             max(int(m.group(1)), int(m.group(2))),
             float(m.group(3)), 0.0, 0.0)
        for m in _EDGE_RE.finditer(noreq_part)
    ]
    if len(noreq) != n_noreq:
        raise InstanceFormatError(
            f"{name}: header declares {n_noreq} non-required edges, found {len(noreq)}"
        )
    return Instance(name, n, tuple(edges + noreq), depot, capacity)


def _parse_egl(text):
    name = _header_value(text, "Name", cast=str)
    n = _header_value(text, "#Nodes")
    capacity = _header_value(text, "Capacity", cast=float)
    depot = _header_value(text, "Depot Node")
    n_req = _header_value(text, "#Required E")
    n_noreq = _header_value(text, "#Non-req E")

    req_part = text.partition("LIST_REQ_EDGES")[2]
    req_part, _, noreq_part = req_part.partition("LIST_NON_REQ_EDGES")
    edges = []
    for m in _EGL_REQ_RE.finditer(req_part):
        u, v = int(m.group(1)), int(m.group(2))
        edges.append(
            Edge(min(u, v), max(u, v), float(m.group(3)), float(m.group(5)),
                 float(m.group(4)))
        )
    if len(edges) != n_req:
        raise InstanceFormatError(
            f"{name}: header declares {n_req} required edges, found {len(edges)}"
        )
    noreq = [
        Edge(min(int(m.group(1)), int(m.group(2))),
             max(int(m.group(1)), int(m.group(2))),
             float(m.group(3)), 0.0, 0.0)
        for m in _EGL_NOREQ_RE.finditer(noreq_part)
    ]
    if len(noreq) != n_noreq:
        raise InstanceFormatError(
            f"{name}: header declares {n_noreq} non-required edges, found {len(noreq)}"
        )
    return Instance(name, n, tuple(edges + noreq), depot, capacity)


def _validate(inst):
    seen = set()
    for e in inst.edges:
        if e.u == e.v:
            raise InstanceFormatError(f"{inst.name}: self-loop at vertex {e.u}")
        if not (1 <= e.u <= inst.vertices and 1 <= e.v <= inst.vertices):
            raise InstanceFormatError(
                f"{inst.name}: edge ({e.u},{e.v}) outside vertex range 1..{inst.vertices}"
            )
        if e.traversal_cost <= 0:
            raise InstanceFormatError(
                f"{inst.name}: edge ({e.u},{e.v}) has non-positive cost"
            )
        key = (e.u, e.v)
        if key in seen:
            raise InstanceFormatError(f"{inst.name}: duplicate edge ({e.u},{e.v})")
        seen.add(key)
    if not (1 <= inst.depot <= inst.vertices):
        raise InstanceFormatError(f"{inst.name}: depot {inst.depot} out of range")
    if inst.capacity <= 0:
        raise InstanceFormatError(f"{inst.name}: capacity must be positive")
    for t in inst.tasks:
        if t.demand > inst.capacity:
            raise InstanceFormatError(
                f"{inst.name}: task ({t.u},{t.v}) demand exceeds capacity"
            )
    # connectivity (over all edges, ignoring none)
    adj = {v: [] for v in range(1, inst.vertices + 1)}
    for e in inst.edges:
        adj[e.u].append(e.v)
        adj[e.v].append(e.u)
    seen = {inst.depot}
    stack = [inst.depot]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != inst.vertices:
        missing = sorted(set(range(1, inst.vertices + 1)) - seen)
        raise InstanceFormatError(f"{inst.name}: disconnected, e.g. vertices {missing[:5]}")


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def serialize_instance(instance: Instance, fmt: str | None = None) -> str:
    """Render an Instance back to its family's DAT layout.

    Parsing the result yields a value equal to ``instance`` (round-trip fixed
    point); byte-level layout is canonicalized, not preserved.
    """
    if fmt is None:
        # the kshs layout cannot express a serving cost that differs from the
        # traversal cost, so such instances canonicalize to the egl layout
        split_costs = any(
            e.serving_cost != e.traversal_cost for e in instance.edges if e.demand > 0
        )
        fmt = "egl" if (instance.name.lower().startswith("egl") or split_costs) else "gdb"
    if fmt in ("gdb", "val"):
        req = [e for e in instance.edges if e.demand > 0]
        noreq = [e for e in instance.edges if e.demand == 0]
        lines = [
            f"NOMBRE : {instance.name}",
            "COMENTARIO : CARP benchmark",
            f"VERTICES : {instance.vertices}",
            f"ARISTAS_REQ : {len(req)}",
            f"ARISTAS_NOREQ : {len(noreq)}",
            f"VEHICULOS : {instance.num_vehicles}",
            f"CAPACIDAD : {_fmt_num(instance.capacity)}",
            "TIPO_COSTES_ARISTAS : EXPLICITOS",
            f"COSTE_TOTAL_REQ : {_fmt_num(sum(e.traversal_cost for e in req))}",
            "LISTA_ARISTAS_REQ :",
        ]
        lines += [
            f"( {e.u} , {e.v} )   coste {_fmt_num(e.traversal_cost)}   "
            f"demanda {_fmt_num(e.demand)}"
            for e in req
        ]
        if noreq:
            lines.append("LISTA_ARISTAS_NOREQ :")
            lines += [
                f"( {e.u} , {e.v} )   coste {_fmt_num(e.traversal_cost)}"
                for e in noreq
            ]
        lines.append(f"DEPOSITO : {instance.depot}")
        return "\n".join(lines) + "\n"
    if fmt == "egl":
        req = [e for e in instance.edges if e.demand > 0]
        noreq = [e for e in instance.edges if e.demand == 0]
        lines = [
            f"Name:\t\t{instance.name}",
            "Optimal value:\t-1",
            f"#Vehicles:\t{instance.num_vehicles}",
            f"Capacity:\t{_fmt_num(instance.capacity)}",
            f"Depot Node:\t{instance.depot}",
            f"#Nodes:\t{instance.vertices}",
            f"#Edges:\t{len(instance.edges)}",
            f"#Required E:\t{len(req)}",
            f"#Non-req E:\t{len(noreq)}",
            "LIST_REQ_EDGES :",
        ]
        lines += [
            f"({e.u},{e.v})   trav_cost {_fmt_num(e.traversal_cost)}"
            f"   demand {_fmt_num(e.demand)}   serv_cost {_fmt_num(e.serving_cost)}"
            for e in req
        ]
        lines.append("LIST_NON_REQ_EDGES :")
        lines += [
            f"({e.u},{e.v})   trav_cost {_fmt_num(e.traversal_cost)}" for e in noreq
        ]
        lines.append("END")
        return "\n".join(lines) + "\n"
    raise InstanceFormatError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# shortest paths
# ---------------------------------------------------------------------------


@dataclass
class DistanceOracle:
    """All-pairs shortest paths over mean traversal costs.

    ``dist`` and ``succ`` are (n+1) x (n+1) arrays indexed directly by vertex
    id (row/column 0 unused).  ``succ[a, b]`` is the first hop on a cheapest
    a-to-b walk; ties between first hops are broken toward the lowest vertex
    id, so replanning is deterministic.
    """

    dist: np.ndarray
    succ: np.ndarray
    excluded: frozenset

    def distance(self, a: int, b: int) -> float:
        return float(self.dist[a, b])

    def successor(self, a: int, b: int) -> int:
        return int(self.succ[a, b])

    def path(self, a: int, b: int):
        """Vertex sequence of the canonical shortest a-to-b walk."""
        out = [a]
        guard = self.dist.shape[0] + 1
        while a != b:
            a = int(self.succ[a, b])
            out.append(a)
            guard -= 1
            if guard < 0:
                raise RuntimeError("successor chain failed to reach target")
        return out


def build_distance_oracle(instance: Instance, excluded_edges=()) -> DistanceOracle:
    """Floyd-Warshall distances and first-hop successors, minus excluded edges.

    ``excluded_edges`` holds (u, v) endpoint pairs of edges discovered to be
    impassable.  Raises UnreachableVerticesError if any vertex is cut off from
    the depot after exclusion.
    """
    n = instance.vertices
    excl = frozenset((min(u, v), max(u, v)) for (u, v) in excluded_edges)
    w = np.full((n + 1, n + 1), np.inf)
    np.fill_diagonal(w, 0.0)
    for e in instance.edges:
        if (e.u, e.v) in excl:
            continue
        c = e.traversal_cost
        if c < w[e.u, e.v]:
            w[e.u, e.v] = c
            w[e.v, e.u] = c
    dist = floyd_warshall(w[1:, 1:])
    full = np.full((n + 1, n + 1), np.inf)
    full[1:, 1:] = dist

    stranded = [v for v in range(1, n + 1) if not np.isfinite(full[instance.depot, v])]
    if stranded:
        raise UnreachableVerticesError(stranded)

    succ = np.zeros((n + 1, n + 1), dtype=np.int32)
    neighbors = {v: [] for v in range(1, n + 1)}
    for e in instance.edges:
        if (e.u, e.v) in excl:
            continue
        neighbors[e.u].append(e.v)
        neighbors[e.v].append(e.u)
    for s in range(1, n + 1):
        nbrs = np.array(sorted(set(neighbors[s])), dtype=np.int32)
        # first hop minimizes step cost + remaining distance; argmin takes the
        # lowest vertex id on ties because nbrs is sorted
        through = w[s, nbrs][:, None] + full[nbrs, :]
        succ[s, :] = nbrs[np.argmin(through, axis=0)]
        succ[s, s] = s
    return DistanceOracle(full, succ, excl)


# ---------------------------------------------------------------------------
# bundled benchmark data
# ---------------------------------------------------------------------------


def load_benchmark(name: str) -> Instance:
    """Load a bundled benchmark instance by name, e.g. 'gdb1' or 'egl-s1-A'."""
    family = name[:3].lower()
    if family not in ("gdb", "val", "egl"):
        raise KeyError(f"unknown benchmark family for {name!r}")
    ref = resources.files(__package__) / "data" / family / f"{name}.dat"
    if not ref.is_file():
        raise KeyError(f"no bundled instance named {name!r}")
    return parse_instance(ref.read_text(), fmt=family)


def list_benchmarks(family: str | None = None):
    """Names of bundled instances, optionally restricted to one family."""
    families = [family] if family else ["gdb", "val", "egl"]
    names = []
    for fam in families:
        root = resources.files(__package__) / "data" / fam
        if root.is_dir():
            names += [f.name[:-4] for f in root.iterdir() if f.name.endswith(".dat")]

    def key(n):
        return (n[:3], [int(p) if p.isdigit() else p
                        for p in re.findall(r"\d+|\D+", n)])

    return sorted(names, key=key)
