"""Random model factories shared across the test suite.

All generators take a numpy Generator so every test is reproducible from its
own fixed seed.
"""

import numpy as np

from bwrnet import make_model, validate
from bwrnet.actions import ising_constants
from bwrnet.chain import profile_matrix


def random_digraph(rng, n, edge_prob=0.5, require_edges=False):
    A = (rng.random((n, n)) < edge_prob).astype(int)
    np.fill_diagonal(A, 0)
    if require_edges:
        for i in range(n):
            if A[i].sum() == 0:
                j = int(rng.integers(n - 1))
                A[i, j if j < i else j + 1] = 1
    return A


def random_likelihood(rng, signal_count, m, floor=0.05):
    """Column-normalized likelihood matrix with entries bounded away from 0."""
    L = rng.gamma(1.0, 1.0, size=(signal_count, m)) + floor
    return L / L.sum(axis=0, keepdims=True)


def random_prior(rng, m, floor=0.1):
    p = rng.gamma(1.0, 1.0, size=m) + floor
    return p / p.sum()


def random_model(rng, n=None, m=None, max_signals=4, edge_prob=0.5, truth=None):
    if n is None:
        n = int(rng.integers(2, 5))
    if m is None:
        m = int(rng.integers(2, 5))
    likelihoods = [random_likelihood(rng, int(rng.integers(2, max_signals + 1)), m) for _ in range(n)]
    priors = [random_prior(rng, m) for _ in range(n)]
    A = random_digraph(rng, n, edge_prob)
    if truth is None:
        truth = int(rng.integers(m))
    model = make_model(likelihoods, priors, adjacency=A, truth=truth)
    assert validate(model) == []
    return model


def random_binary_model(rng, n=None, max_signals=4, edge_prob=0.5, require_edges=False):
    if n is None:
        n = int(rng.integers(2, 6))
    likelihoods = [random_likelihood(rng, int(rng.integers(2, max_signals + 1)), 2) for _ in range(n)]
    priors = [random_prior(rng, 2) for _ in range(n)]
    A = random_digraph(rng, n, edge_prob, require_edges=require_edges)
    model = make_model(likelihoods, priors, adjacency=A, truth=int(rng.integers(2)))
    assert validate(model) == []
    return model


def tie_margin(model, constants):
    """Smallest |sign argument| over all profiles, agents, and signals."""
    n = model.n
    profiles = profile_matrix(n).astype(float)
    social = profiles * constants.w[None, :] @ model.network.adjacency.T.astype(float)
    worst = np.inf
    for i in range(n):
        lam = constants.lam1[i]
        lam = lam[~np.isnan(lam)]
        args = social[:, i, None] + constants.eta[i] + lam[None, :]
        worst = min(worst, float(np.min(np.abs(args))))
    # time-zero arguments: prior log ratio + lambda
    for i in range(n):
        lam = constants.lam1[i]
        lam = lam[~np.isnan(lam)]
        nu = model.priors.vector(i)
        args = np.log(nu[0] / nu[1]) + lam
        worst = min(worst, float(np.min(np.abs(args))))
    return worst


def random_binary_model_no_ties(rng, margin=1e-9, **kwargs):
    """Rejection-sample binary models whose sign arguments avoid 0 by ``margin``."""
    while True:
        model = random_binary_model(rng, **kwargs)
        constants = ising_constants(model)
        if tie_margin(model, constants) > margin:
            return model, constants


def random_strongly_connected(rng, n, edge_prob=0.4):
    from bwrnet import strongly_connected
    from bwrnet.model import Network

    while True:
        A = random_digraph(rng, n, edge_prob)
        if strongly_connected(Network(A)):
            return A
