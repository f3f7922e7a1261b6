"""Exact analysis of the Markov chain of action profiles on {+1,-1}^n.

Profiles are encoded as bitmasks with bit i set iff agent i plays +1, so
index 0 is all-minus and index 2^n - 1 is all-plus.  The kernel is stored
row-stochastically: kernel[src, dst] is the probability of jumping from
profile src to profile dst in one synchronous update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .actions import IsingConstants, ising_constants, signal_dichotomy
from .errors import CapacityError, PreconditionError
from .model import ModelSpec

MAX_DENSE_AGENTS = 14  # dense 2^n x 2^n kernels beyond this exhaust memory
ABSORBING_TOL = 1e-9  # self-transition mass this close to 1 counts as absorbing


def profile_to_index(profile) -> int:
    """Bitmask of a +/-1 profile: bit i set iff agent i plays +1."""
    idx = 0
    for i, a in enumerate(profile):
        if a > 0:
            idx |= 1 << i
    return idx


def index_to_profile(index: int, n: int) -> np.ndarray:
    bits = (index >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def profile_matrix(n: int) -> np.ndarray:
    """All 2^n profiles as rows of +/-1, ordered by bitmask index."""
    idx = np.arange(2**n)[:, None]
    bits = (idx >> np.arange(n)[None, :]) & 1
    return (2 * bits - 1).astype(np.int8)


def activation_probability(
    model: ModelSpec, constants: IsingConstants, profile, agent: int
) -> float:
    """Probability that ``agent`` plays +1 next, given the current profile.

    Sums the truth-conditional signal mass over the signals whose
    log-likelihood ratio clears the social threshold; the comparison is
    non-strict, consistent with sign(0) = +1.
    """
    profile = np.asarray(profile, dtype=float)
    w_sum = float(model.network.adjacency[agent] @ (constants.w * profile))
    threshold = w_sum + constants.eta[agent]
    L = model.signals.likelihood(agent)[:, model.truth]
    lam = constants.lam1[agent]
    live = L > 0
    passing = live & (lam >= -threshold)
    return float(L[passing].sum())


def activation_matrix(model: ModelSpec, constants: IsingConstants) -> np.ndarray:
    """activation_probability for every (profile, agent) pair; shape (2^n, n)."""
    n = model.n
    profiles = profile_matrix(n).astype(float)
    thresholds = profiles * constants.w[None, :] @ model.network.adjacency.T.astype(float)
    thresholds += constants.eta[None, :]
    pi = np.empty((2**n, n))
    for i in range(n):
        L = model.signals.likelihood(i)[:, model.truth]
        lam = constants.lam1[i]
        live = L > 0
        passing = live[None, :] & (lam[None, :] >= -thresholds[:, i, None])
        pi[:, i] = passing @ L
    return pi


def transition_kernel(model: ModelSpec, constants: IsingConstants | None = None) -> np.ndarray:
    """Row-stochastic transition matrix of the action-profile chain.

    Entry [src, dst] multiplies each agent's activation probability or its
    complement according to agent's action in dst.  Dense representation,
    capped at n <= 14.
    """
    if model.n > MAX_DENSE_AGENTS:
        raise CapacityError(
            f"dense kernel needs 2^{model.n} x 2^{model.n} entries; "
            f"cap is n <= {MAX_DENSE_AGENTS} (use simulation beyond that)"
        )
    if constants is None:
        constants = ising_constants(model)
    n = model.n
    pi = activation_matrix(model, constants)
    size = 2**n
    dst_plus = ((np.arange(size)[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
    kernel = np.ones((size, size))
    for i in range(n):
        kernel *= np.where(dst_plus[i][None, :], pi[:, i, None], 1.0 - pi[:, i, None])
    return kernel


def classify_states(kernel: np.ndarray):
    """Communication classes of the positive-transition digraph.

    Returns (transient_classes, recurrent_classes), each a list of sorted
    state lists; a class is recurrent iff it has no positive-probability
    edge leaving it.  Classes are ordered by their smallest state.
    """
    positive = csr_matrix(kernel > 0)
    _, labels = connected_components(positive, directed=True, connection="strong")
    size = kernel.shape[0]
    classes = {}
    for s in range(size):
        classes.setdefault(labels[s], []).append(s)
    src, dst = (kernel > 0).nonzero()
    leaky = set(labels[src[labels[src] != labels[dst]]].tolist())
    transient, recurrent = [], []
    for lab, members in classes.items():
        (transient if lab in leaky else recurrent).append(sorted(members))
    transient.sort(key=lambda c: c[0])
    recurrent.sort(key=lambda c: c[0])
    return transient, recurrent


def _agentwise_bounds(model: ModelSpec, constants: IsingConstants):
    """Per-agent min and max of lambda + eta over signals possible in some state."""
    n = model.n
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        lam = constants.lam1[i]
        valid = ~np.isnan(lam)
        vals = lam[valid] + constants.eta[i]
        lo[i] = vals.min()
        hi[i] = vals.max()
    return lo, hi


def equilibria_by_inequality(model: ModelSpec, constants: IsingConstants | None = None) -> set:
    """Profiles that the dynamics hold with probability one, by direct inequality.

    A profile qualifies iff for every agent the worst-case signal cannot
    overturn her action against the social field.  Ties are broken in favor
    of the equilibrium profile (non-strict comparisons on both sides), the
    convention under which the characterization is exact.
    """
    if constants is None:
        constants = ising_constants(model)
    n = model.n
    lo, hi = _agentwise_bounds(model, constants)
    profiles = profile_matrix(n).astype(float)
    social = profiles * constants.w[None, :] @ model.network.adjacency.T.astype(float)
    plus_ok = -lo[None, :] <= social
    minus_ok = hi[None, :] <= -social
    ok = np.where(profiles > 0, plus_ok, minus_ok)
    return set(np.flatnonzero(ok.all(axis=1)).tolist())


def tie_sensitive_equilibria(
    model: ModelSpec, constants: IsingConstants | None = None
) -> set:
    """Equilibria whose status depends on the tie-breaking convention.

    With sign(0) = +1 instead of ties-favor-the-equilibrium, a minus action
    whose worst signal lands exactly on the threshold would flip; these
    profiles are reported so exact-zero arguments are never silently
    resolved.
    """
    if constants is None:
        constants = ising_constants(model)
    n = model.n
    _, hi = _agentwise_bounds(model, constants)
    eq = equilibria_by_inequality(model, constants)
    profiles = profile_matrix(n).astype(float)
    social = profiles * constants.w[None, :] @ model.network.adjacency.T.astype(float)
    sensitive = set()
    for p in eq:
        minus = profiles[p] < 0
        if np.any(minus & (hi == -social[p])):
            sensitive.add(p)
    return sensitive


def consensus_equilibrium_check(model: ModelSpec, constants: IsingConstants | None = None) -> bool:
    """True iff both consensus profiles are equilibria by the strict margin test.

    Requires every agent's social pull at consensus to strictly dominate her
    worst-case private evidence.
    """
    if constants is None:
        constants = ising_constants(model)
    lo, hi = _agentwise_bounds(model, constants)
    margin = np.maximum(np.abs(lo), np.abs(hi))
    w_sums = model.network.adjacency @ constants.w
    return bool(np.all(margin < w_sums))


def stationary_distribution(kernel: np.ndarray, recurrent_class) -> np.ndarray:
    """Unique stationary law of the kernel restricted to one recurrent class.

    Solved directly from the balance equations with the normalization row
    appended; falls back to Cesaro-averaged power iteration, which converges
    for periodic classes as well.
    """
    members = list(recurrent_class)
    P = kernel[np.ix_(members, members)]
    k = len(members)
    if np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise PreconditionError("class is not closed: rows leak probability mass")
    system = np.vstack([P.T - np.eye(k), np.ones((1, k))])
    rhs = np.zeros(k + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    if np.all(p >= -1e-12):
        p = np.clip(p, 0.0, None)
        return p / p.sum()
    # ill-conditioned solve: Cesaro averaging of the power iterates
    v = np.full(k, 1.0 / k)
    mean = v.copy()
    for it in range(1, 200000):
        v = v @ P
        prev = mean.copy()
        mean += (v - mean) / (it + 1)
        if it % 64 == 0 and np.max(np.abs(mean - prev)) < 1e-13:
            break
    return mean / mean.sum()


def absorption_matrix(kernel: np.ndarray):
    """Absorption probabilities from each transient state into each recurrent class.

    Returns (transient_states, recurrent_classes, B) where B[t, r] is the
    probability that the chain started at transient_states[t] is absorbed by
    recurrent_classes[r]; rows of B sum to 1.
    """
    transient, recurrent = classify_states(kernel)
    t_states = [s for cls in transient for s in cls]
    t_states.sort()
    if not t_states:
        return t_states, recurrent, np.zeros((0, len(recurrent)))
    Q = kernel[np.ix_(t_states, t_states)]
    R = np.column_stack(
        [kernel[np.ix_(t_states, cls)].sum(axis=1) for cls in recurrent]
    )
    B = np.linalg.solve(np.eye(len(t_states)) - Q, R)
    return t_states, recurrent, B


def absorption_analysis(kernel: np.ndarray, initial_distribution) -> np.ndarray:
    """Probability of each recurrent class being the first one reached.

    ``initial_distribution`` is a law over profile indices; the result is a
    probability vector aligned with the recurrent classes of
    ``classify_states(kernel)``.
    """
    p0 = np.asarray(initial_distribution, dtype=float)
    t_states, recurrent, B = absorption_matrix(kernel)
    out = np.array([p0[cls].sum() for cls in recurrent])
    if t_states:
        out += p0[t_states] @ B
    return out


def initial_profile_distribution(
    model: ModelSpec, constants: IsingConstants | None = None
) -> np.ndarray:
    """Exact law of the time-zero profile under the initial action rule.

    Agents draw independent signals, so the law is the product over agents
    of the truth-conditional mass of the plus or minus dichotomy cell.  Only
    the dichotomies are needed, so this is defined even when the weight
    constants are not.
    """
    n = model.n
    if n > MAX_DENSE_AGENTS:
        raise CapacityError(f"dense profile law capped at n <= {MAX_DENSE_AGENTS}")
    if constants is not None:
        plus_cells = constants.plus_cells
    else:
        plus_cells = tuple(signal_dichotomy(model, i)[0] for i in range(n))
    p_plus = np.array(
        [
            float(model.signals.likelihood(i)[plus_cells[i], model.truth].sum())
            for i in range(n)
        ]
    )
    size = 2**n
    plus_bit = ((np.arange(size)[None, :] >> np.arange(n)[:, None]) & 1).astype(bool)
    law = np.ones(size)
    for i in range(n):
        law *= np.where(plus_bit[i], p_plus[i], 1.0 - p_plus[i])
    return law


@dataclass(frozen=True)
class ChainAnalysis:
    """Kernel plus derived classification of the action-profile chain."""

    n: int
    kernel: np.ndarray
    transient_classes: list
    recurrent_classes: list
    equilibria: set
    tie_sensitive: set

    def stationary(self, class_index: int) -> np.ndarray:
        return stationary_distribution(self.kernel, self.recurrent_classes[class_index])


def analyze_chain(model: ModelSpec, constants: IsingConstants | None = None) -> ChainAnalysis:
    """Build the kernel and classify every profile of the action chain."""
    if constants is None:
        constants = ising_constants(model)
    kernel = transition_kernel(model, constants)
    transient, recurrent = classify_states(kernel)
    diag = np.diag(kernel)
    equilibria = set(np.flatnonzero(diag >= 1.0 - ABSORBING_TOL).tolist())
    return ChainAnalysis(
        n=model.n,
        kernel=kernel,
        transient_classes=transient,
        recurrent_classes=recurrent,
        equilibria=equilibria,
        tie_sensitive=tie_sensitive_equilibria(model, constants),
    )
