"""Radial network parsing and bus-matrix construction.

A network is a rooted tree: node 0 is the slack bus with fixed complex
voltage, nodes 1..N are PQ buses.  The admittance bus matrix is built
from the edge list; the impedance bus matrix is built by summing line
impedances over intersecting root paths, never by inversion.  Both
constructions are cross-checked against each other at build time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, TopologyError

# Fixed tolerance for the inversion / path-formula cross checks.
IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class NetworkTopology:
    """Rooted tree of buses; node 0 is the slack, 1..N are PQ buses.

    ``edges`` holds (from, to, r, x) in renumbered node indices.
    ``labels`` maps index -> original node id from the input file.
    """

    n: int
    v0: complex
    edges: tuple[tuple[int, int, float, float], ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.n < 0:
            raise TopologyError("node count must be nonnegative")
        if abs(self.v0) <= 0.0:
            raise TopologyError("slack voltage magnitude must be positive")
        if len(self.edges) != self.n:
            raise TopologyError(
                f"a tree over {self.n + 1} nodes needs {self.n} edges, "
                f"got {len(self.edges)}"
            )
        seen = set()
        adjacency = {i: [] for i in range(self.n + 1)}
        for a, b, r, x in self.edges:
            if not (0 <= a <= self.n and 0 <= b <= self.n) or a == b:
                raise TopologyError(f"edge ({a},{b}) out of range")
            if r < 0 or x < 0:
                raise TopologyError(f"edge ({a},{b}) has negative impedance")
            if r == 0 and x == 0:
                raise TopologyError(f"edge ({a},{b}) has zero impedance")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise TopologyError(f"duplicate edge ({a},{b})")
            seen.add(key)
            adjacency[a].append(b)
            adjacency[b].append(a)
        # N edges + connected from the root => spanning tree.
        stack, visited = [0], {0}
        while stack:
            for nb in adjacency[stack.pop()]:
                if nb not in visited:
                    visited.add(nb)
                    stack.append(nb)
        if len(visited) != self.n + 1:
            raise TopologyError("edges do not connect every node to the slack")


@dataclass(frozen=True)
class BusMatrices:
    """Admittance matrix blocks plus the impedance bus matrix Z = R + iX."""

    y00: complex
    y0l: np.ndarray  # (N,)
    yl0: np.ndarray  # (N,)
    yll: np.ndarray  # (N, N)
    z: np.ndarray  # (N, N)
    r: np.ndarray  # (N, N)
    x: np.ndarray  # (N, N)
    v0: complex

    @property
    def n(self) -> int:
        return self.yll.shape[0]

    def full_admittance(self) -> np.ndarray:
        """Assemble the (N+1) x (N+1) admittance matrix from the blocks."""
        n = self.n
        y = np.zeros((n + 1, n + 1), dtype=np.complex128)
        y[0, 0] = self.y00
        y[0, 1:] = self.y0l
        y[1:, 0] = self.yl0
        y[1:, 1:] = self.yll
        return y


_TOP_KEYS = {"v0", "nodes", "edges"}
_V0_KEYS = {"re", "im"}
_NODE_KEYS = {"id", "slack"}
_EDGE_KEYS = {"from", "to", "r", "x"}


def _check_keys(obj: dict, allowed: set, where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) {sorted(unknown)} in {where}")


def parse_network(text: str) -> NetworkTopology:
    """Parse a UTF-8 JSON network document into a validated topology.

    Node ids may be arbitrary labels; they are renumbered so the slack
    is 0 and PQ buses are 1..N in file order.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    _check_keys(doc, _TOP_KEYS, "document")
    for key in _TOP_KEYS:
        if key not in doc:
            raise ParseError(f"missing required field '{key}'")

    v0_obj = doc["v0"]
    if not isinstance(v0_obj, dict):
        raise ParseError("'v0' must be an object with 're' and 'im'")
    _check_keys(v0_obj, _V0_KEYS, "'v0'")
    try:
        v0 = complex(float(v0_obj["re"]), float(v0_obj.get("im", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("'v0' entries must be numbers") from exc

    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise ParseError("'nodes' and 'edges' must be arrays")

    index: dict[str, int] = {}
    labels: list[str] = []
    slack_label = None
    pq_labels = []
    for node in doc["nodes"]:
        if not isinstance(node, dict):
            raise ParseError("each node must be an object")
        _check_keys(node, _NODE_KEYS, "node")
        if "id" not in node:
            raise ParseError("node missing 'id'")
        label = str(node["id"])
        if label in index or label in pq_labels or label == slack_label:
            raise ParseError(f"duplicate node id '{label}'")
        if node.get("slack", False):
            if slack_label is not None:
                raise ParseError("multiple slack nodes")
            slack_label = label
        else:
            pq_labels.append(label)
    if slack_label is None:
        raise ParseError("no slack node declared")
    index[slack_label] = 0
    labels.append(slack_label)
    for i, label in enumerate(pq_labels, start=1):
        index[label] = i
        labels.append(label)

    edges = []
    for edge in doc["edges"]:
        if not isinstance(edge, dict):
            raise ParseError("each edge must be an object")
        _check_keys(edge, _EDGE_KEYS, "edge")
        for key in _EDGE_KEYS:
            if key not in edge:
                raise ParseError(f"edge missing '{key}'")
        a_label, b_label = str(edge["from"]), str(edge["to"])
        if a_label not in index or b_label not in index:
            raise ParseError(f"edge references unknown node "
                             f"'{a_label if a_label not in index else b_label}'")
        try:
            r, x = float(edge["r"]), float(edge["x"])
        except (TypeError, ValueError) as exc:
            raise ParseError("edge 'r' and 'x' must be numbers") from exc
        if r < 0 or x < 0:
            raise ParseError(f"edge ({a_label},{b_label}) has negative r or x")
        edges.append((index[a_label], index[b_label], r, x))

    return NetworkTopology(
        n=len(pq_labels), v0=v0, edges=tuple(edges), labels=tuple(labels)
    )


def _root_paths(topology: NetworkTopology) -> list[set[int]]:
    """Edge-index set of the unique path from each PQ bus to the slack."""
    n = topology.n
    adjacency: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n + 1)}
    for e_idx, (a, b, _, _) in enumerate(topology.edges):
        adjacency[a].append((b, e_idx))
        adjacency[b].append((a, e_idx))
    parent_edge = [-1] * (n + 1)
    parent = [-1] * (n + 1)
    order = []
    stack, visited = [0], {0}
    while stack:
        node = stack.pop()
        order.append(node)
        for nb, e_idx in adjacency[node]:
            if nb not in visited:
                visited.add(nb)
                parent[nb] = node
                parent_edge[nb] = e_idx
                stack.append(nb)
    paths: list[set[int]] = [set() for _ in range(n + 1)]
    for node in order:
        if node == 0:
            continue
        paths[node] = paths[parent[node]] | {parent_edge[node]}
    return paths[1:]


def build_bus_matrices(topology: NetworkTopology) -> BusMatrices:
    """Build admittance blocks and Z, R, X for a validated topology.

    Z entries come from the path-intersection formula (sum of line
    impedances over the common part of the two root paths); the result
    is cross-checked against the reduced admittance block.
    """
    n = topology.n
    y_full = np.zeros((n + 1, n + 1), dtype=np.complex128)
    z_line = np.empty(len(topology.edges), dtype=np.complex128)
    for e_idx, (a, b, r, x) in enumerate(topology.edges):
        z_line[e_idx] = complex(r, x)
        y = 1.0 / z_line[e_idx]
        y_full[a, b] -= y
        y_full[b, a] -= y
        y_full[a, a] += y
        y_full[b, b] += y

    paths = _root_paths(topology)
    z = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        for k in range(j, n):
            shared = paths[j] & paths[k]
            if shared:
                val = sum(z_line[e] for e in shared)
                z[j, k] = val
                z[k, j] = val

    matrices = BusMatrices(
        y00=complex(y_full[0, 0]),
        y0l=y_full[0, 1:].copy(),
        yl0=y_full[1:, 0].copy(),
        yll=y_full[1:, 1:].copy(),
        z=z,
        r=z.real.copy(),
        x=z.imag.copy(),
        v0=topology.v0,
    )
    _verify_identities(matrices)
    return matrices


def _verify_identities(matrices: BusMatrices) -> None:
    n = matrices.n
    if n == 0:
        return
    product = matrices.yll @ matrices.z
    if np.abs(product - np.eye(n)).max() > IDENTITY_TOL:
        raise TopologyError("YLL * Z deviates from identity beyond tolerance")
    ones = -matrices.z @ matrices.yl0
    if np.abs(ones - 1.0).max() > IDENTITY_TOL:
        raise TopologyError("-Z * YL0 deviates from all-ones beyond tolerance")
