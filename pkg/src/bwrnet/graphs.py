"""Connectivity and spectral structure of the observation network.

The spectral radius of the adjacency matrix and its normalized left Perron
eigenvector (the centrality weights) drive the global belief statistics;
topology recognition separates the directed-circle case, where the belief
dynamics learn, from general strongly connected graphs, where they do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import PreconditionError
from .model import Network

POWER_ITER_STEP_TOL = 1e-13  # successive-iterate gap in the infinity norm
POWER_ITER_CAP = 10**6
RESIDUAL_TOL = 1e-9


class Topology(Enum):
    DIRECTED_CIRCLE = "DirectedCircle"
    ROOT_CIRCLE_TREE = "RootCircleTree"
    STRONGLY_CONNECTED_GENERAL = "StronglyConnectedGeneral"
    OTHER = "Other"


@dataclass(frozen=True)
class SpectralData:
    """Spectral radius and normalized left Perron eigenvector."""

    rho: float
    alpha: np.ndarray

    def residual(self, network: Network) -> float:
        """Infinity norm of alpha^T A - rho alpha^T."""
        r = self.alpha @ network.adjacency - self.rho * self.alpha
        return float(np.max(np.abs(r)))


def _scc_count(adjacency: np.ndarray) -> int:
    if adjacency.shape[0] == 0:
        return 0
    graph = csr_matrix(adjacency)
    count, _ = connected_components(graph, directed=True, connection="strong")
    return count


def strongly_connected(network: Network) -> bool:
    """True iff every ordered pair of distinct nodes is joined by a directed path."""
    if network.n <= 1:
        return True
    return _scc_count(network.adjacency) == 1


def weakly_connected(network: Network) -> bool:
    if network.n <= 1:
        return True
    graph = csr_matrix(network.adjacency)
    count, _ = connected_components(graph, directed=True, connection="weak")
    return count == 1


def is_directed_circle(network: Network) -> bool:
    """True iff the graph is a single directed cycle covering all nodes."""
    n = network.n
    if n < 2:
        return False
    if np.any(network.in_degrees() != 1) or np.any(network.out_degrees() != 1):
        return False
    return strongly_connected(network)


def graph_period(network: Network) -> int:
    """Period of a strongly connected digraph (gcd of its cycle lengths)."""
    A = network.adjacency
    n = network.n
    dist = np.full(n, -1, dtype=int)
    dist[0] = 0
    queue = [0]
    # edge u -> v in the walk direction is A[v, u] == 1
    out_lists = [np.flatnonzero(A[:, u]) for u in range(n)]
    while queue:
        u = queue.pop()
        for v in out_lists[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(int(v))
    g = 0
    for u in range(n):
        for v in out_lists[u]:
            g = math.gcd(g, dist[u] + 1 - dist[v])
    return g if g > 0 else 1


def perron(network: Network) -> SpectralData:
    """Spectral radius and left Perron eigenvector of a strongly connected graph.

    Directed circles are handled analytically (rho = 1, uniform weights),
    since power iteration does not converge on periodic chains.  Otherwise
    power iteration runs on the transpose; for periodic non-circle graphs it
    runs on the shifted matrix A + I, which is primitive whenever A is
    irreducible and has the same eigenvector with eigenvalue rho + 1.
    Deterministic: uniform start, fixed tolerances.
    """
    n = network.n
    if n < 2 or not strongly_connected(network):
        raise PreconditionError(
            "perron requires a strongly connected network with at least 2 nodes; "
            "check strongly_connected first"
        )
    if is_directed_circle(network):
        return SpectralData(rho=1.0, alpha=np.full(n, 1.0 / n))

    shift = 0.0 if graph_period(network) == 1 else 1.0
    B = network.adjacency.T.astype(float) + shift * np.eye(n)
    x = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(POWER_ITER_CAP):
        y = B @ x
        lam = float(y.sum())  # x >= 0 and sums to 1, so the L1 growth is the eigenvalue
        y /= lam
        if np.max(np.abs(y - x)) < POWER_ITER_STEP_TOL:
            x = y
            break
        x = y
    rho = lam - shift
    return SpectralData(rho=rho, alpha=x)


def classify_topology(network: Network) -> Topology:
    """Mutually exclusive, exhaustive topology classification.

    A root circle tree is a weakly connected graph in which every node has
    exactly one in-neighbor: following parents from any node leads into the
    unique directed cycle, and all remaining nodes hang off it directed away
    from the cycle.
    """
    if is_directed_circle(network):
        return Topology.DIRECTED_CIRCLE
    if network.n >= 2 and strongly_connected(network):
        return Topology.STRONGLY_CONNECTED_GENERAL
    if weakly_connected(network) and network.n >= 2 and np.all(network.in_degrees() == 1):
        return Topology.ROOT_CIRCLE_TREE
    return Topology.OTHER


def root_circle(network: Network) -> list:
    """Nodes of the unique cycle of a directed circle or root circle tree.

    Returned in walk order starting from the smallest cycle node.
    """
    kind = classify_topology(network)
    if kind not in (Topology.DIRECTED_CIRCLE, Topology.ROOT_CIRCLE_TREE):
        raise PreconditionError(f"graph has no root circle (topology {kind.value})")
    # every node has in-degree exactly 1; walk the parent chain until it repeats
    parent = [int(network.neighbors(i)[0]) for i in range(network.n)]
    seen = {}
    node = 0
    while node not in seen:
        seen[node] = len(seen)
        node = parent[node]
    cycle = [node]
    cur = parent[node]
    while cur != node:
        cycle.append(cur)
        cur = parent[cur]
    start = cycle.index(min(cycle))
    cycle = cycle[start:] + cycle[:start]
    # cycle currently follows parent (reverse-edge) direction; flip to walk order
    return [cycle[0]] + cycle[:0:-1]
