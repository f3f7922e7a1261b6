import numpy as np
import pytest

from bwrnet import (
    CapacityError,
    absorption_analysis,
    activation_probability,
    analyze_chain,
    classify_states,
    consensus_equilibrium_check,
    equilibria_by_inequality,
    initial_profile_distribution,
    make_model,
    simulate_actions,
    stationary_distribution,
    transition_kernel,
)
from bwrnet.actions import ising_constants
from bwrnet.chain import (
    absorption_matrix,
    index_to_profile,
    profile_matrix,
    profile_to_index,
)
from bwrnet.errors import PreconditionError

from modelgen import random_binary_model, random_binary_model_no_ties, random_digraph


def test_profile_encoding_round_trip():
    for n in (1, 3, 5):
        for idx in range(2**n):
            assert profile_to_index(index_to_profile(idx, n)) == idx
    mat = profile_matrix(3)
    assert mat.shape == (8, 3)
    assert mat[0].tolist() == [-1, -1, -1]
    assert mat[7].tolist() == [1, 1, 1]
    assert mat[5].tolist() == [1, -1, 1]


def test_activation_probability_extremes():
    # strong positive bias: every signal clears the threshold
    model = make_model(
        [[[0.6, 0.4], [0.4, 0.6]]], [[0.999, 0.001]], edges=[]
    )
    c = ising_constants(model)
    assert activation_probability(model, c, [1], 0) == 1.0
    flipped = make_model([[[0.6, 0.4], [0.4, 0.6]]], [[0.001, 0.999]], edges=[])
    c2 = ising_constants(flipped)
    assert activation_probability(flipped, c2, [1], 0) == 0.0


def test_activation_probability_two_signal_threshold():
    # uniform prior, no neighbors: only the plus-cell signal passes, so the
    # activation probability is that signal's truth-conditional mass
    model = make_model([[[0.3, 0.1], [0.7, 0.9]]], [[0.5, 0.5]], edges=[], truth=0)
    c = ising_constants(model)
    assert activation_probability(model, c, [1], 0) == pytest.approx(0.3, abs=1e-15)
    under_state1 = make_model([[[0.3, 0.1], [0.7, 0.9]]], [[0.5, 0.5]], edges=[], truth=1)
    c2 = ising_constants(under_state1)
    assert activation_probability(under_state1, c2, [1], 0) == pytest.approx(0.1, abs=1e-15)


def test_kernel_point_mass_when_activation_one():
    model = make_model(
        [[[0.6, 0.4], [0.4, 0.6]]] * 2,
        [[0.999, 0.001]] * 2,
        edges=[(0, 1), (1, 0)],
    )
    kernel = transition_kernel(model)
    all_plus = profile_to_index([1, 1])
    for src in range(4):
        assert kernel[src, all_plus] == pytest.approx(1.0, abs=1e-12)


def test_kernel_single_agent_row():
    model = make_model([[[0.3, 0.1], [0.7, 0.9]]], [[0.5, 0.5]], edges=[], truth=0)
    kernel = transition_kernel(model)
    plus_idx = profile_to_index([1])
    minus_idx = profile_to_index([-1])
    for src in range(2):
        assert kernel[src, plus_idx] == pytest.approx(0.3, abs=1e-15)
        assert kernel[src, minus_idx] == pytest.approx(0.7, abs=1e-15)


def test_kernel_rows_sum_to_one_randomized():
    rng = np.random.default_rng(31)
    for _ in range(30):
        model = random_binary_model(rng, n=3)
        kernel = transition_kernel(model)
        assert np.allclose(kernel.sum(axis=1), 1.0, atol=1e-12)


def test_kernel_capacity_cap():
    model = random_binary_model(np.random.default_rng(0), n=2)
    big = make_model(
        [model.signals.likelihood(0)] * 15,
        [model.priors.vector(0)] * 15,
        adjacency=np.zeros((15, 15), dtype=int),
    )
    with pytest.raises(CapacityError):
        transition_kernel(big)


def test_classify_identity_kernel():
    transient, recurrent = classify_states(np.eye(8))
    assert transient == []
    assert recurrent == [[k] for k in range(8)]


def test_classify_single_absorbing_target():
    kernel = np.zeros((4, 4))
    kernel[:, 0] = 1.0  # everything jumps to state 0, which holds itself
    transient, recurrent = classify_states(kernel)
    assert recurrent == [[0]]
    assert sorted(s for cls in transient for s in cls) == [1, 2, 3]


def test_absorption_matrix_rows_sum_to_one_randomized():
    rng = np.random.default_rng(32)
    for _ in range(25):
        model = random_binary_model(rng, n=3)
        kernel = transition_kernel(model)
        t_states, recurrent, B = absorption_matrix(kernel)
        if t_states:
            assert np.allclose(B.sum(axis=1), 1.0, atol=1e-9)
        law = absorption_analysis(kernel, initial_profile_distribution(model))
        assert np.all(law >= -1e-12)
        assert law.sum() == pytest.approx(1.0, abs=1e-9)


def test_equilibria_uninformative_signals_consensus():
    # with lambda == 0 and eta == 0 everywhere, every agent's worst case is
    # exactly 0 <= sum of weighted neighbor agreements: both consensus
    # profiles qualify (ties favor the equilibrium)
    flat = [[0.25, 0.25], [0.75, 0.75]]
    model = make_model(
        [flat] * 3,
        [[0.5, 0.5]] * 3,
        edges=[(0, 1), (0, 2), (1, 0), (2, 0)],
    )
    c = ising_constants(model)
    eq = equilibria_by_inequality(model, c)
    assert profile_to_index([1, 1, 1]) in eq
    assert profile_to_index([-1, -1, -1]) in eq
    # the zero-argument ties make the minus consensus convention sensitive
    from bwrnet.chain import tie_sensitive_equilibria

    sensitive = tie_sensitive_equilibria(model, c)
    assert profile_to_index([-1, -1, -1]) in sensitive
    assert profile_to_index([1, 1, 1]) not in sensitive


def test_equilibria_strong_signals_empty():
    # two mutually connected agents whose private evidence dominates the weights
    model = make_model(
        [[[0.9, 0.1], [0.1, 0.9]]] * 2,
        [[0.5, 0.5]] * 2,
        edges=[(0, 1), (1, 0)],
    )
    c = ising_constants(model)
    # by hand: w_j = log 9 equals max |lambda|, so the non-strict inequality
    # -min a*(lambda+eta) <= w a*_j a*_i fails exactly when signs oppose
    eq = equilibria_by_inequality(model, c)
    mat = profile_matrix(2)
    expected = set()
    for idx in range(4):
        a = mat[idx].astype(float)
        ok = True
        for i in range(2):
            lam = c.lam1[i]
            lhs = -min(a[i] * (lam + c.eta[i]))
            rhs = c.w[1 - i] * a[1 - i] * a[i]
            if lhs > rhs:
                ok = False
        if ok:
            expected.add(idx)
    assert eq == expected
    assert eq == {profile_to_index([1, 1]), profile_to_index([-1, -1])}


def test_equilibria_match_absorbing_states_randomized():
    rng = np.random.default_rng(33)
    for _ in range(60):
        n = int(rng.integers(2, 6))
        model, constants = random_binary_model_no_ties(rng, n=n)
        eq = equilibria_by_inequality(model, constants)
        kernel = transition_kernel(model, constants)
        absorbing = set(np.flatnonzero(np.diag(kernel) >= 1 - 1e-9).tolist())
        assert eq == absorbing


def test_consensus_check_trivial_cases():
    # informative core whose mutual weights dominate private evidence, plus
    # flat followers whose own lambda range is 0 < the observed weight
    flat = [[0.25, 0.25], [0.75, 0.75]]
    core = [[[p, 1 - p], [1 - p, p]] for p in (0.65, 0.70, 0.75)]
    likelihoods = core + [flat, flat]
    core_edges = [(j, i) for i in range(3) for j in range(3) if i != j]
    model = make_model(
        likelihoods,
        [[0.5, 0.5]] * 5,
        edges=core_edges + [(0, 3), (0, 4)],
    )
    assert consensus_equilibrium_check(model)
    informative = [[0.8, 0.2], [0.2, 0.8]]
    lonely = make_model([informative], [[0.5, 0.5]], edges=[])
    assert not consensus_equilibrium_check(lonely)


def test_consensus_check_implies_absorbing_consensus():
    rng = np.random.default_rng(34)
    confirmed = 0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        ps = rng.uniform(0.55, 0.8, size=n)
        lik = [[[p, 1 - p], [1 - p, p]] for p in ps]
        A = random_digraph(rng, n, 0.8)
        model = make_model(lik, [[0.5, 0.5]] * n, adjacency=A, truth=int(rng.integers(2)))
        c = ising_constants(model)
        if not consensus_equilibrium_check(model, c):
            continue
        kernel = transition_kernel(model, c)
        both = [profile_to_index([1] * n), profile_to_index([-1] * n)]
        for idx in both:
            assert kernel[idx, idx] == pytest.approx(1.0, abs=1e-9)
        eq = equilibria_by_inequality(model, c)
        assert set(both) <= eq
        confirmed += 1
    assert confirmed > 20


def test_mislearning_has_positive_probability():
    # whenever consensus is an equilibrium, a full-support start can land on
    # the untruth consensus
    rng = np.random.default_rng(35)
    confirmed = 0
    while confirmed < 15:
        n = int(rng.integers(2, 5))
        ps = rng.uniform(0.6, 0.8, size=n)
        lik = [[[p, 1 - p], [1 - p, p]] for p in ps]
        A = random_digraph(rng, n, 0.9, require_edges=True)
        model = make_model(lik, [[0.5, 0.5]] * n, adjacency=A, truth=int(rng.integers(2)))
        c = ising_constants(model)
        if not consensus_equilibrium_check(model, c):
            continue
        kernel = transition_kernel(model, c)
        initial = initial_profile_distribution(model, c)
        assert np.all(initial > 0)
        _, recurrent, _ = (lambda t: t)(absorption_matrix(kernel))
        law = absorption_analysis(kernel, initial)
        untruth = profile_to_index([-1 if model.truth == 0 else 1] * n)
        untruth_class = next(
            r for r, cls in enumerate(recurrent) if cls == [untruth]
        )
        assert law[untruth_class] > 0
        confirmed += 1


def test_stationary_absorbing_singleton():
    kernel = np.array([[1.0, 0.0], [0.5, 0.5]])
    assert stationary_distribution(kernel, [0]).tolist() == [1.0]


def test_stationary_symmetric_two_state_class():
    kernel = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(stationary_distribution(kernel, [0, 1]), [0.5, 0.5], atol=1e-12)


def test_stationary_periodic_class():
    kernel = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(stationary_distribution(kernel, [0, 1]), [0.5, 0.5], atol=1e-10)


def test_stationary_rejects_leaky_class():
    kernel = np.array([[0.5, 0.25, 0.25], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(PreconditionError):
        stationary_distribution(kernel, [0, 1])


def test_stationary_satisfies_balance_randomized():
    rng = np.random.default_rng(36)
    for _ in range(30):
        model = random_binary_model(rng, n=3)
        analysis = analyze_chain(model)
        for r, cls in enumerate(analysis.recurrent_classes):
            p = analysis.stationary(r)
            P = analysis.kernel[np.ix_(cls, cls)]
            assert np.max(np.abs(p @ P - p)) < 1e-10
            assert p.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(p >= 0)


def test_initial_distribution_point_mass():
    # deterministic signals under the truth: the time-zero law is defined
    # from the dichotomies alone, even where the weight constants are not
    model = make_model(
        [[[1.0, 0.5], [0.0, 0.5]]] * 2, [[0.5, 0.5]] * 2, edges=[(0, 1)], truth=0
    )
    law = initial_profile_distribution(model)
    assert law[profile_to_index([1, 1])] == 1.0
    assert law.sum() == 1.0


def test_initial_distribution_product_law():
    model = make_model(
        [[[0.3, 0.2], [0.7, 0.8]], [[0.6, 0.5], [0.4, 0.5]]],
        [[0.5, 0.5]] * 2,
        edges=[],
        truth=0,
    )
    c = ising_constants(model)
    # plus-cell truth masses by hand
    p0 = model.signals.likelihood(0)[c.plus_cells[0], 0].sum()
    p1 = model.signals.likelihood(1)[c.plus_cells[1], 0].sum()
    law = initial_profile_distribution(model, c)
    assert law[profile_to_index([1, 1])] == pytest.approx(p0 * p1, abs=1e-15)
    assert law[profile_to_index([1, -1])] == pytest.approx(p0 * (1 - p1), abs=1e-15)
    assert law[profile_to_index([-1, 1])] == pytest.approx((1 - p0) * p1, abs=1e-15)
    assert law[profile_to_index([-1, -1])] == pytest.approx((1 - p0) * (1 - p1), abs=1e-15)


def test_initial_distribution_matches_simulation():
    rng = np.random.default_rng(37)
    model, constants = random_binary_model_no_ties(rng, n=3)
    law = initial_profile_distribution(model, constants)
    res = simulate_actions(model, 0, 10_000, 17)
    bits = (res.actions[:, 0, :] > 0).astype(np.int64)
    idx = (bits << np.arange(3)).sum(axis=1)
    emp = np.bincount(idx, minlength=8) / len(idx)
    assert 0.5 * np.abs(emp - law).sum() < 0.02


def test_analyze_chain_classes_partition_cube():
    rng = np.random.default_rng(38)
    model = random_binary_model(rng, n=4)
    analysis = analyze_chain(model)
    everything = sorted(
        s for cls in analysis.transient_classes + analysis.recurrent_classes for s in cls
    )
    assert everything == list(range(16))
    assert analysis.equilibria <= {
        s for cls in analysis.recurrent_classes for s in cls
    }
