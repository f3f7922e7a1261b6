import numpy as np
import pytest

from bwrnet import PreconditionError, Topology, classify_topology, is_directed_circle, perron, root_circle, strongly_connected
from bwrnet.graphs import graph_period, weakly_connected
from bwrnet.harness import example1_model
from bwrnet.model import Network

from modelgen import random_strongly_connected


def circle(n):
    A = np.zeros((n, n), dtype=int)
    for i in range(n):
        A[(i + 1) % n, i] = 1
    return Network(A)


def complete(n):
    A = np.ones((n, n), dtype=int) - np.eye(n, dtype=int)
    return Network(A)


def test_strongly_connected_cases():
    assert strongly_connected(circle(3))
    assert not strongly_connected(Network(np.zeros((2, 2), dtype=int)))
    assert not strongly_connected(example1_model().network)


def test_perron_directed_circle_analytic():
    for n in (2, 3, 5, 8):
        sd = perron(circle(n))
        assert sd.rho == 1.0
        assert np.array_equal(sd.alpha, np.full(n, 1.0 / n))


def test_perron_complete_digraph():
    sd = perron(complete(3))
    assert sd.rho == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(sd.alpha, 1 / 3, atol=1e-12)


def test_perron_rejects_disconnected_and_trivial():
    with pytest.raises(PreconditionError):
        perron(Network(np.zeros((3, 3), dtype=int)))
    with pytest.raises(PreconditionError):
        perron(Network(np.zeros((1, 1), dtype=int)))


def test_perron_random_graph_spectral_radius_at_least_one():
    rng = np.random.default_rng(5)
    A = random_strongly_connected(rng, 4)
    sd = perron(Network(A))
    assert sd.rho >= 1.0


def test_perron_deterministic():
    rng = np.random.default_rng(6)
    net = Network(random_strongly_connected(rng, 6))
    a = perron(net)
    b = perron(net)
    assert a.rho == b.rho
    assert np.array_equal(a.alpha, b.alpha)


def test_perron_on_periodic_noncircle_graph():
    # 4-cycle plus a chord back, cycle lengths {2, 4}: period 2, not a circle
    A = np.zeros((4, 4), dtype=int)
    for j, i in [(0, 1), (1, 2), (2, 3), (3, 0), (1, 0)]:
        A[i, j] = 1
    net = Network(A)
    assert strongly_connected(net) and not is_directed_circle(net)
    assert graph_period(net) == 2
    sd = perron(net)
    reference = np.max(np.abs(np.linalg.eigvals(A.astype(float))))
    assert sd.rho == pytest.approx(reference, abs=1e-9)
    assert sd.residual(net) < 1e-9


def test_is_directed_circle_cases():
    assert is_directed_circle(circle(3))
    two = np.zeros((6, 6), dtype=int)
    for j, i in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)]:
        two[i, j] = 1
    assert not is_directed_circle(Network(two))  # two disjoint circles, not spanning
    assert not is_directed_circle(Network(np.zeros((1, 1), dtype=int)))


def test_degree_two_node_forces_rho_above_one():
    # the 3-circle plus one extra edge: node 0 now has in-degree 2
    A = circle(3).adjacency.copy()
    A.setflags(write=True)
    A[0, 1] = 1
    net = Network(A)
    assert strongly_connected(net) and not is_directed_circle(net)
    sd = perron(net)
    assert sd.rho > 1.0
    reference = np.max(np.abs(np.linalg.eigvals(A.astype(float))))
    assert sd.rho == pytest.approx(reference, abs=1e-9)


def test_classify_topology_cases():
    assert classify_topology(example1_model().network) is Topology.ROOT_CIRCLE_TREE
    assert classify_topology(circle(5)) is Topology.DIRECTED_CIRCLE
    assert classify_topology(complete(4)) is Topology.STRONGLY_CONNECTED_GENERAL
    assert classify_topology(Network(np.zeros((3, 3), dtype=int))) is Topology.OTHER
    # weakly connected with an in-degree-0 node is not a root circle tree
    A = np.zeros((3, 3), dtype=int)
    A[1, 0] = A[2, 1] = 1
    assert classify_topology(Network(A)) is Topology.OTHER


def test_root_circle_extraction():
    model = example1_model()
    assert root_circle(model.network) == [0, 1, 2]
    assert root_circle(circle(4)) == [0, 1, 2, 3]
    with pytest.raises(PreconditionError):
        root_circle(complete(3))


def test_root_circle_walk_order():
    # 0 -> 1 -> 2 -> 0 with a tail 0 -> 3: walk order must follow the edges
    A = np.zeros((4, 4), dtype=int)
    for j, i in [(0, 1), (1, 2), (2, 0), (0, 3)]:
        A[i, j] = 1
    net = Network(A)
    assert classify_topology(net) is Topology.ROOT_CIRCLE_TREE
    cyc = root_circle(net)
    assert cyc[0] == 0
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        assert net.adjacency[b, a] == 1  # a -> b is an edge


def test_spectral_invariants_randomized():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        A = random_strongly_connected(rng, n)
        net = Network(A)
        sd = perron(net)
        assert sd.rho >= 1.0 - 1e-12
        assert np.all(sd.alpha > 0)
        assert abs(sd.alpha.sum() - 1.0) < 1e-10
        assert sd.residual(net) < 1e-9
        reference = np.max(np.abs(np.linalg.eigvals(A.astype(float))))
        assert sd.rho == pytest.approx(reference, abs=1e-8)
        # unit spectral radius exactly characterizes directed circles
        assert (abs(sd.rho - 1.0) < 1e-9) == is_directed_circle(net)


def test_weakly_connected():
    assert weakly_connected(example1_model().network)
    assert not weakly_connected(Network(np.zeros((2, 2), dtype=int)))
