"""Routing policies: expression trees scoring candidate task arcs.

A policy is an immutable expression tree over thirteen decision-time features
and numeric constants.  At every decision point the simulator hands the
policy one feature matrix (one column per candidate arc); the arc with the
*lowest* score is chosen.  Trees are plain nested tuples so they hash, cache,
and compare structurally:

    ("-", ("*", 10000.0, "CFH"), "CTD")

Internal nodes are ("+", a, b), ("-", a, b), ("*", a, b), ("/", a, b),
("max", a, b), ("min", a, b), plus a four-argument conditional
("if<", a, b, then, else) used by one of the fixed benchmark policies.
Division is protected: anything divided by exactly zero is 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

#: feature rows, in the fixed order used by every feature matrix
FEATURE_NAMES = (
    "CFH",   # deadhead cost from the vehicle's node to the arc's tail
    "CFR1",  # cost from the closest other vehicle to either arc endpoint
    "CR",    # deadhead cost from the vehicle's node to the depot
    "CTD",   # deadhead cost from the arc's head to the depot
    "CTT1",  # cost from the arc's head to the nearest other unserved task
    "DEM",   # estimated remaining demand of the arc's task
    "DEM1",  # estimated remaining demand of that nearest other task
    "FRT",   # fraction of all tasks still unserved
    "FUT",   # fraction of all tasks still unassigned
    "FULL",  # fraction of capacity already used
    "RQ",    # remaining capacity of the deciding vehicle
    "RQ1",   # remaining capacity of the closest other vehicle
    "SC",    # serving cost of the arc's task
)

FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

BINARY_OPS = ("+", "-", "*", "/", "max", "min")


# ---------------------------------------------------------------------------
# tree basics
# ---------------------------------------------------------------------------


def tree_depth(tree) -> int:
    """Number of nodes on the longest root-to-leaf path (a leaf is 1)."""
    if isinstance(tree, tuple):
        return 1 + max(tree_depth(c) for c in tree[1:])
    return 1


def tree_size(tree) -> int:
    """Total node count."""
    if isinstance(tree, tuple):
        return 1 + sum(tree_size(c) for c in tree[1:])
    return 1


def validate_tree(tree):
    """Raise ValueError when ``tree`` is not a well-formed policy."""
    if isinstance(tree, tuple):
        if not tree:
            raise ValueError("empty tuple node")
        op = tree[0]
        if op in BINARY_OPS:
            if len(tree) != 3:
                raise ValueError(f"operator {op!r} takes 2 children")
        elif op == "if<":
            if len(tree) != 5:
                raise ValueError("'if<' takes 4 children")
        else:
            raise ValueError(f"unknown operator {op!r}")
        for child in tree[1:]:
            validate_tree(child)
    elif isinstance(tree, str):
        if tree not in FEATURE_INDEX:
            raise ValueError(f"unknown feature {tree!r}")
    elif not isinstance(tree, (int, float)):
        raise ValueError(f"bad leaf {tree!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _protected_div(a, b):
    if isinstance(b, float):
        if b == 0.0:
            return np.ones_like(a) if isinstance(a, np.ndarray) else 1.0
        return a / b
    return np.where(b == 0.0, 1.0, a / np.where(b == 0.0, 1.0, b))


_SCALAR_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: 1.0 if b == 0.0 else a / b,
    "max": max,
    "min": min,
}

_ARRAY_OPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": _protected_div,
    "max": np.maximum,
    "min": np.minimum,
}


@lru_cache(maxsize=8192)
def _compile(tree):
    """Flatten a tree to postfix instructions, folding constant subtrees."""
    program = []

    def emit(node):
        # returns a float when the subtree folds to a constant, else appends
        # its instructions and returns None
        if isinstance(node, str):
            program.append(("feat", FEATURE_INDEX[node]))
            return None
        if not isinstance(node, tuple):
            return float(node)
        op = node[0]
        mark = len(program)
        folded = [emit(c) for c in node[1:]]
        if all(f is not None for f in folded):
            if op == "if<":
                a, b, t, e = folded
                return t if a < b else e
            return float(_SCALAR_OPS[op](*folded))
        # mixed node: replay the children in order so constant ones land on
        # the stack in the right positions
        del program[mark:]
        for c in node[1:]:
            v = emit(c)
            if v is not None:
                program.append(("const", v))
        program.append(("op", op))
        return None

    top = emit(tree)
    if top is not None:
        program.append(("const", top))
    return tuple(program)


def evaluate(tree, features: np.ndarray) -> np.ndarray:
    """Score every candidate: ``features`` is (13, n), the result is (n,).

    Lower scores are better; the simulator picks the argmin.  Constant
    subtrees are folded at compile time and compiled programs are cached,
    so repeated evaluation of one policy is a short loop of numpy calls.
    """
    n = features.shape[1]
    stack = []
    for kind, arg in _compile(tree):
        if kind == "feat":
            stack.append(features[arg])
        elif kind == "const":
            stack.append(arg)
        else:
            if arg == "if<":
                e = stack.pop()
                t = stack.pop()
                b = stack.pop()
                a = stack.pop()
                stack.append(np.where(np.less(a, b), t, e))
            else:
                b = stack.pop()
                a = stack.pop()
                if isinstance(a, float) and isinstance(b, float):
                    stack.append(_SCALAR_OPS[arg](a, b))
                else:
                    stack.append(_ARRAY_OPS[arg](a, b))
    out = stack.pop()
    if isinstance(out, float):
        return np.full(n, out)
    return np.broadcast_to(out, (n,)).astype(float, copy=False) \
        if out.shape != (n,) else out


# ---------------------------------------------------------------------------
# fixed benchmark policies
# ---------------------------------------------------------------------------

# weight making the deadhead-cost term dominate any tie-breaker term
_W = 10000.0

_PS1 = ("-", ("*", _W, "CFH"), "CTD")
_PS2 = ("+", ("*", _W, "CFH"), "CTD")
_PS3 = ("-", ("*", _W, "CFH"), ("/", "DEM", "SC"))
_PS4 = ("+", ("*", _W, "CFH"), ("/", "DEM", "SC"))
_PS5 = ("if<", "FULL", 0.5, _PS1, _PS2)

#: hand-written priority rules: nearest-arc first, with different tie-breaks
MANUAL_POLICIES = {
    "PS1": _PS1,  # prefer arcs far from the depot
    "PS2": _PS2,  # prefer arcs near the depot
    "PS3": _PS3,  # prefer demand-dense arcs
    "PS4": _PS4,  # prefer demand-sparse arcs
    "PS5": _PS5,  # far-from-depot while mostly empty, then near-depot
}


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

_ALIASES = str.maketrans({"×": "*", "÷": "/", "−": "-", "–": "-"})


def serialize_policy(tree) -> str:
    """Render a policy as a prefix s-expression, e.g. ``(+ (* 10000 CFH) CTD)``."""
    if isinstance(tree, tuple):
        return "(" + " ".join(
            [tree[0]] + [serialize_policy(c) for c in tree[1:]]
        ) + ")"
    if isinstance(tree, str):
        return tree
    v = float(tree)
    return str(int(v)) if v.is_integer() else repr(v)


def parse_policy(text: str):
    """Parse the s-expression form back into a tree.

    Accepts the unicode spellings ×, ÷ and − as aliases for * / and -.
    """
    tokens = text.translate(_ALIASES).replace("(", " ( ").replace(")", " ) ").split()
    if not tokens:
        raise ValueError("empty policy text")
    pos = 0

    def parse_node():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of policy text")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens):
                raise ValueError("unexpected end of policy text")
            op = tokens[pos]
            pos += 1
            children = []
            while pos < len(tokens) and tokens[pos] != ")":
                children.append(parse_node())
            if pos >= len(tokens):
                raise ValueError("unbalanced parentheses")
            pos += 1  # consume ')'
            node = tuple([op] + children)
            return node
        if tok == ")":
            raise ValueError("unexpected ')'")
        if tok in FEATURE_INDEX:
            return tok
        try:
            return float(tok)
        except ValueError:
            raise ValueError(f"unknown token {tok!r}") from None

    tree = parse_node()
    if pos != len(tokens):
        raise ValueError("trailing text after policy expression")
    validate_tree(tree)
    return tree


def named_policy(name: str):
    """Look up a fixed policy ('PS1'..'PS5') or parse an s-expression."""
    if name in MANUAL_POLICIES:
        return MANUAL_POLICIES[name]
    return parse_policy(name)


# ---------------------------------------------------------------------------
# decision features
# ---------------------------------------------------------------------------


@dataclass
class DecisionContext:
    """Everything the feature extractor sees at one decision point.

    ``arcs`` holds one row (tail, head) per candidate service direction;
    serving starts at the tail.  ``task_prox[x, t]`` is the deadhead cost
    from vertex ``x`` to the nearer endpoint of task ``t`` (precomputed once
    per distance rebuild).  ``estimates`` and ``serving_costs`` align with
    the instance's task list, ``unserved`` marks tasks not yet fully served,
    and the ``other_*`` arrays describe the non-deciding vehicles.
    """

    dist: np.ndarray
    task_prox: np.ndarray
    arcs: np.ndarray
    arc_tasks: np.ndarray
    estimates: np.ndarray
    serving_costs: np.ndarray
    unserved: np.ndarray
    unassigned_count: int
    vehicle_node: int
    vehicle_remaining: float
    other_nodes: np.ndarray
    other_remaining: np.ndarray
    depot: int
    capacity: float


def task_proximity(dist: np.ndarray, task_endpoints: np.ndarray) -> np.ndarray:
    """Distance from every vertex to each task's nearer endpoint.

    ``task_endpoints`` is (n_tasks, 2); the result is (n_vertices+1, n_tasks).
    """
    return np.minimum(dist[:, task_endpoints[:, 0]], dist[:, task_endpoints[:, 1]])


def extract_features(ctx: DecisionContext) -> np.ndarray:
    """Build the (13, n_candidates) feature matrix for one decision."""
    arcs = np.asarray(ctx.arcs)
    tails = arcs[:, 0]
    heads = arcs[:, 1]
    n = len(arcs)
    own = np.asarray(ctx.arc_tasks)
    out = np.empty((len(FEATURE_NAMES), n))

    out[FEATURE_INDEX["CFH"]] = ctx.dist[ctx.vehicle_node, tails]
    out[FEATURE_INDEX["CR"]] = ctx.dist[ctx.vehicle_node, ctx.depot]
    out[FEATURE_INDEX["CTD"]] = ctx.dist[heads, ctx.depot]
    out[FEATURE_INDEX["DEM"]] = ctx.estimates[own]
    out[FEATURE_INDEX["SC"]] = ctx.serving_costs[own]

    n_tasks = len(ctx.estimates)
    out[FEATURE_INDEX["FRT"]] = np.count_nonzero(ctx.unserved) / n_tasks
    out[FEATURE_INDEX["FUT"]] = ctx.unassigned_count / n_tasks
    out[FEATURE_INDEX["FULL"]] = (ctx.capacity - ctx.vehicle_remaining) / ctx.capacity
    out[FEATURE_INDEX["RQ"]] = ctx.vehicle_remaining

    # nearest other unserved task from each arc's head
    rows = np.arange(n)
    prox = np.where(ctx.unserved, ctx.task_prox[heads], np.inf)
    prox[rows, own] = np.inf
    nearest = np.argmin(prox, axis=1)
    nearest_cost = prox[rows, nearest]
    none_left = ~np.isfinite(nearest_cost)
    out[FEATURE_INDEX["CTT1"]] = np.where(none_left, 0.0, nearest_cost)
    out[FEATURE_INDEX["DEM1"]] = np.where(none_left, 0.0, ctx.estimates[nearest])

    # closest other vehicle to either arc endpoint
    if len(ctx.other_nodes) == 0:
        out[FEATURE_INDEX["CFR1"]] = 0.0
        out[FEATURE_INDEX["RQ1"]] = 0.0
    else:
        from_others = ctx.dist[ctx.other_nodes]
        approach = np.minimum(from_others[:, tails], from_others[:, heads])
        k = np.argmin(approach, axis=0)
        out[FEATURE_INDEX["CFR1"]] = approach[k, rows]
        out[FEATURE_INDEX["RQ1"]] = np.asarray(ctx.other_remaining)[k]

    return out
