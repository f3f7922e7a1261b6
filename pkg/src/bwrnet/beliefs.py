"""Log-linear belief dynamics, their oracles, and learning-rate analysis.

All belief arithmetic happens in the log domain with max-shift
normalization; probabilities appear only at output boundaries.  A belief
vector here is therefore an array of log-probabilities over the states.

Three network update modes are provided: the full-network rule (every
neighbor's reported belief enters multiplicatively, discounted by that
neighbor's prior), the circular rule (the unique neighbor's belief replaces
the agent's own in a Bayes step), and the random-neighbor rule (one neighbor
drawn per step, then the circular rule).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .actions import draw_signal_matrix
from .chain import stationary_distribution
from .errors import PreconditionError
from .graphs import SpectralData, perron, strongly_connected
from .model import ModelSpec, kl_divergence, signal_cdf
from .seeding import spawn_rngs

PHI_CLAMP = 700.0  # log-ratio magnitude clamp applied before exponentiation only
ORACLE_BELIEF_TOL = 1e-9  # TV tolerance when inverting reported beliefs to signal sets


def _xlog(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(a)


def log_normalize(logv: np.ndarray) -> np.ndarray:
    """Normalize log weights to log probabilities; rejects an all-zero vector."""
    mx = np.max(logv)
    if mx == -math.inf:
        raise PreconditionError("belief update produced an identically zero posterior")
    z = mx + math.log(np.sum(np.exp(logv - mx)))
    return logv - z


def _log_normalize_batch(logv: np.ndarray) -> np.ndarray:
    """Same as log_normalize over the last axis of a stack."""
    mx = np.max(logv, axis=-1, keepdims=True)
    if np.any(mx == -math.inf):
        raise PreconditionError("belief update produced an identically zero posterior")
    z = mx + np.log(np.sum(np.exp(logv - mx), axis=-1, keepdims=True))
    return logv - z


def belief_probabilities(log_belief: np.ndarray) -> np.ndarray:
    """Probabilities from normalized log beliefs (clamped for float safety)."""
    return np.exp(np.clip(log_belief, -PHI_CLAMP, PHI_CLAMP))


def log_belief_ratios(log_beliefs: np.ndarray, truth: int) -> np.ndarray:
    """Log ratios against the truth state along the last axis; truth column is 0."""
    return log_beliefs - log_beliefs[..., truth : truth + 1]


def common_prior(model: ModelSpec) -> bool:
    first = model.priors.vector(0)
    return all(np.array_equal(first, model.priors.vector(i)) for i in range(model.n))


def bayes_initial_belief(model: ModelSpec, agent: int, signal: int) -> np.ndarray:
    """Posterior from the prior and one private signal (time-zero inference)."""
    L = model.signals.likelihood(agent)
    logv = _xlog(model.priors.vector(agent)) + _xlog(L[signal])
    return log_normalize(logv)


def single_agent_bayes_step(
    model: ModelSpec, agent: int, log_belief: np.ndarray, signal: int
) -> np.ndarray:
    """One sequential Bayes update of an isolated agent."""
    L = model.signals.likelihood(agent)
    return log_normalize(np.asarray(log_belief) + _xlog(L[signal]))


def bwr_belief_step(
    model: ModelSpec, agent: int, neighbor_log_beliefs, signal: int
) -> np.ndarray:
    """Full-network memoryless update from the neighbors' reported beliefs.

    ``neighbor_log_beliefs`` holds one log-belief vector per in-neighbor of
    ``agent`` in ascending neighbor order.  Each report enters through its
    ratio to that neighbor's prior, as if it had been formed from the prior
    by a single private observation.
    """
    neighbors = model.network.neighbors(agent)
    reports = [np.asarray(b, dtype=float) for b in neighbor_log_beliefs]
    if len(reports) != len(neighbors):
        raise PreconditionError(
            f"agent {agent} has {len(neighbors)} in-neighbors, got {len(reports)} beliefs"
        )
    L = model.signals.likelihood(agent)
    logv = _xlog(model.priors.vector(agent)) + _xlog(L[signal])
    for j, rep in zip(neighbors, reports):
        logv = logv + rep - _xlog(model.priors.vector(j))
    return log_normalize(logv)


def time_one_oracle(
    model: ModelSpec,
    agent: int,
    neighbor_log_beliefs,
    signal: int,
    belief_tol: float = ORACLE_BELIEF_TOL,
) -> np.ndarray:
    """Brute-force time-one posterior, independent of the product-form update.

    Inverts each reported belief to the set of neighbor signals that produce
    it (within total-variation ``belief_tol``; several signals may collide
    and are then all counted), enumerates every joint signal assignment, and
    sums the joint prior-times-likelihood weights state by state.  Rejects a
    report no signal can explain.
    """
    neighbors = model.network.neighbors(agent)
    reports = [np.asarray(b, dtype=float) for b in neighbor_log_beliefs]
    if len(reports) != len(neighbors):
        raise PreconditionError(
            f"agent {agent} has {len(neighbors)} in-neighbors, got {len(reports)} beliefs"
        )
    signal_sets = []
    for j, rep in zip(neighbors, reports):
        target = belief_probabilities(rep)
        matches = []
        for s in range(model.signals.signal_count(j)):
            if not np.any(model.signals.likelihood(j)[s] > 0):
                continue
            candidate = belief_probabilities(bayes_initial_belief(model, j, s))
            if 0.5 * np.sum(np.abs(candidate - target)) <= belief_tol:
                matches.append(s)
        if not matches:
            raise PreconditionError(
                f"neighbor {j}: reported belief is unreachable from any signal "
                f"(tolerance {belief_tol:g})"
            )
        signal_sets.append(matches)

    m = model.m
    nu_i = model.priors.vector(agent)
    L_i = model.signals.likelihood(agent)
    weights = np.zeros(m)
    for combo in itertools.product(*signal_sets):
        joint = nu_i * L_i[signal]
        for j, s_j in zip(neighbors, combo):
            joint = joint * model.signals.likelihood(j)[s_j]
        weights += joint
    if not np.any(weights > 0):
        raise PreconditionError("oracle posterior is identically zero")
    return log_normalize(_xlog(weights))


def circle_step(
    model: ModelSpec, agent: int, predecessor_log_belief: np.ndarray, signal: int
) -> np.ndarray:
    """Circular update: Bayes step with the unique neighbor's belief as prior."""
    if model.network.degree(agent) != 1:
        raise PreconditionError(
            f"circle update needs in-degree 1, agent {agent} has {model.network.degree(agent)}"
        )
    L = model.signals.likelihood(agent)
    return log_normalize(np.asarray(predecessor_log_belief) + _xlog(L[signal]))


def neighbor_choice_matrix(model: ModelSpec, neighbor_choice=None) -> np.ndarray:
    """Row-stochastic neighbor-selection matrix; uniform over in-neighbors by default."""
    n = model.n
    A = model.network.adjacency
    if neighbor_choice is None:
        deg = A.sum(axis=1)
        if np.any(deg == 0):
            raise PreconditionError("uniform neighbor choice undefined for isolated agents")
        return A / deg[:, None]
    M = np.asarray(neighbor_choice, dtype=float)
    if M.shape != (n, n):
        raise PreconditionError(f"neighbor choice matrix must be {n}x{n}")
    if np.any((M > 0) & (A == 0)):
        raise PreconditionError("neighbor choice puts mass on non-neighbors")
    if np.any(np.abs(M.sum(axis=1) - 1.0) > 1e-9):
        raise PreconditionError("neighbor choice rows must sum to 1")
    return M


def random_neighbor_step(
    model: ModelSpec,
    agent: int,
    rng: np.random.Generator,
    current_log_beliefs: np.ndarray,
    signal: int,
    neighbor_choice=None,
):
    """Pick one neighbor at random, then apply the circular update to her belief.

    Returns (log_belief, chosen_neighbor); the chosen index is surfaced so
    runs can be audited.  ``current_log_beliefs`` is the full (n, m) stack.
    """
    neighbors = model.network.neighbors(agent)
    if neighbors.size == 0:
        raise PreconditionError(f"agent {agent} has no neighbors to sample")
    M = neighbor_choice_matrix(model, neighbor_choice)
    probs = M[agent, neighbors]
    cdf = np.cumsum(probs)
    k = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(neighbors) - 1)
    chosen = int(neighbors[k])
    L = model.signals.likelihood(agent)
    out = log_normalize(np.asarray(current_log_beliefs[chosen]) + _xlog(L[signal]))
    return out, chosen


@dataclass(frozen=True)
class GlobalStats:
    """Centrality-weighted network statistics at one time step, per state.

    ``phi`` aggregates the agents' log-belief ratios against the truth,
    ``lam`` the log-likelihood ratios of the step's signals, and ``beta``
    the prior log-ratios (the total bias of the network).  Truth entries
    are 0 by construction.
    """

    phi: np.ndarray
    lam: np.ndarray
    beta: np.ndarray


def prior_bias(model: ModelSpec, alpha: np.ndarray) -> np.ndarray:
    gammas = np.stack(
        [
            _xlog(model.priors.vector(i)) - math.log(model.priors.vector(i)[model.truth])
            for i in range(model.n)
        ]
    )
    return alpha @ gammas


def global_stats(
    model: ModelSpec, spectral: SpectralData, log_beliefs: np.ndarray, signals
) -> GlobalStats:
    """Aggregate one step's beliefs and signals with the centrality weights."""
    alpha = spectral.alpha
    phi = alpha @ log_belief_ratios(np.asarray(log_beliefs), model.truth)
    lam = np.zeros(model.m)
    for i in range(model.n):
        row = model.signals.likelihood(i)[signals[i]]
        lam += alpha[i] * (_xlog(row) - _xlog(row[model.truth]))
    return GlobalStats(phi=phi, lam=lam, beta=prior_bias(model, alpha))


@dataclass(frozen=True)
class RateReport:
    """Asymptotic exponential learning rates and their binding false states."""

    centralized: float
    circle: float
    individual: np.ndarray
    centralized_binding: int
    individual_binding: np.ndarray
    random_walk: float | None = None
    random_walk_binding: int | None = None
    pi: np.ndarray | None = None

    def to_dict(self, model: ModelSpec) -> dict:
        labels = model.states.labels
        out = {
            "centralized": {
                "rate": self.centralized,
                "binding_state": labels[self.centralized_binding],
            },
            "circle": {
                "rate": self.circle,
                "binding_state": labels[self.centralized_binding],
            },
            "individual": [
                {"agent": i, "rate": float(r), "binding_state": labels[int(b)]}
                for i, (r, b) in enumerate(zip(self.individual, self.individual_binding))
            ],
        }
        if self.random_walk is not None:
            out["random_walk"] = {
                "rate": self.random_walk,
                "binding_state": labels[int(self.random_walk_binding)],
                "pi": self.pi.tolist(),
            }
        return out


def kl_table(model: ModelSpec) -> np.ndarray:
    """KL divergence of each agent's signal law, truth against every state."""
    table = np.zeros((model.n, model.m))
    for i in range(model.n):
        for k in range(model.m):
            table[i, k] = kl_divergence(model, i, model.truth, k)
    return table


def learning_rates(model: ModelSpec, neighbor_choice=None) -> RateReport:
    """Centralized, circular, random-walk, and per-agent learning rates.

    The centralized rate is the binding sum of per-agent divergences; the
    circular rate divides it by n; the random-walk rate weights agents by
    the stationary law of the neighbor-selection chain (only defined on
    strongly connected networks).
    """
    D = kl_table(model)
    false_states = [k for k in range(model.m) if k != model.truth]
    sums = D.sum(axis=0)
    central_binding = min(false_states, key=lambda k: sums[k])
    centralized = float(sums[central_binding])
    indiv_binding = np.array(
        [min(false_states, key=lambda k: D[i, k]) for i in range(model.n)]
    )
    individual = D[np.arange(model.n), indiv_binding]

    random_walk = None
    rw_binding = None
    pi = None
    if model.n >= 2 and strongly_connected(model.network):
        M = neighbor_choice_matrix(model, neighbor_choice)
        pi = stationary_distribution(M, list(range(model.n)))
        weighted = pi @ D
        rw_binding = min(false_states, key=lambda k: weighted[k])
        random_walk = float(weighted[rw_binding])

    return RateReport(
        centralized=centralized,
        circle=centralized / model.n,
        individual=individual,
        centralized_binding=central_binding,
        individual_binding=indiv_binding,
        random_walk=random_walk,
        random_walk_binding=rw_binding,
        pi=pi,
    )


@dataclass(frozen=True)
class LearningVerdict:
    agent: int
    learned: bool
    rate: float
    saturated: bool


def detect_learning(
    trajectory: np.ndarray,
    truth: int,
    threshold: float = 0.99,
    window: int | None = None,
) -> list:
    """Operational learning check over the trailing window of a trajectory.

    ``trajectory`` is a (T+1, n, m) stack of log beliefs for one trial.  An
    agent learns when her belief in the truth stays at or above ``threshold``
    throughout the final ``window`` steps (default: the final 20%).  The
    rate is the negated least-squares slope of her worst log-belief ratio;
    trajectories pinned at a point mass are flagged saturated.
    """
    traj = np.asarray(trajectory, dtype=float)
    steps, n, m = traj.shape
    if window is None:
        window = max(2, int(round(0.2 * steps)))
    window = min(max(window, 2), steps)
    tail = traj[steps - window :]
    t_axis = np.arange(steps - window, steps, dtype=float)

    verdicts = []
    for i in range(n):
        p_truth = belief_probabilities(tail[:, i, truth])
        learned = bool(np.all(p_truth >= threshold))
        phi = np.delete(log_belief_ratios(tail[:, i, :], truth), truth, axis=-1)
        worst = phi.max(axis=-1)
        if not np.all(np.isfinite(worst)):
            rate = math.inf if learned else math.nan
            verdicts.append(LearningVerdict(agent=i, learned=learned, rate=rate, saturated=True))
            continue
        slope = np.polyfit(t_axis, worst, 1)[0]
        verdicts.append(
            LearningVerdict(agent=i, learned=learned, rate=float(-slope), saturated=False)
        )
    return verdicts


@dataclass(frozen=True)
class GlobalStatsSeries:
    """Per-step global statistics for every trial of a belief simulation."""

    Phi: np.ndarray
    Lam: np.ndarray
    beta: np.ndarray
    rho: float
    alpha: np.ndarray


@dataclass(frozen=True)
class BeliefSimResult:
    """Trajectories of a belief simulation.

    ``log_beliefs`` has shape (trials, horizon+1, n, m); ``choices`` is the
    audit log of neighbor selections in random-neighbor mode (-1 where not
    applicable) and ``stats`` the global statistics series when the network
    is strongly connected.
    """

    mode: str
    log_beliefs: np.ndarray
    signals: np.ndarray
    choices: np.ndarray | None
    stats: GlobalStatsSeries | None


BELIEF_MODES = ("full", "circle", "random-neighbor")


def _check_mode_preconditions(model: ModelSpec, mode: str, neighbor_choice) -> None:
    if mode not in BELIEF_MODES:
        raise PreconditionError(f"unknown belief mode {mode!r}; pick one of {BELIEF_MODES}")
    if mode == "circle":
        deg = model.network.in_degrees()
        if np.any(deg != 1):
            bad = int(np.flatnonzero(deg != 1)[0])
            raise PreconditionError(
                f"circle mode needs in-degree 1 everywhere; agent {bad} has {deg[bad]}"
            )
        if not common_prior(model):
            raise PreconditionError("circle mode requires a common prior")
    if mode == "random-neighbor":
        if not strongly_connected(model.network) or model.n < 2:
            raise PreconditionError("random-neighbor mode requires a strongly connected network")
        if not common_prior(model):
            raise PreconditionError("random-neighbor mode requires a common prior")
        neighbor_choice_matrix(model, neighbor_choice)


def simulate_beliefs(
    model: ModelSpec,
    mode: str,
    horizon: int,
    trials: int,
    rng,
    neighbor_choice=None,
) -> BeliefSimResult:
    """Seeded Monte Carlo of the selected belief dynamics.

    Per trial: time-zero posteriors from fresh signals, then one update per
    step with fresh signals (agents ascending within each step; in
    random-neighbor mode the step's neighbor draws follow its signal draws,
    again agents ascending).  Trials run on independent child generators.
    """
    _check_mode_preconditions(model, mode, neighbor_choice)
    n, m = model.n, model.m
    rngs = spawn_rngs(rng, trials)

    signals = np.empty((trials, horizon + 1, n), dtype=np.int16)
    choices = None
    if mode == "random-neighbor":
        M = neighbor_choice_matrix(model, neighbor_choice)
        neighbor_lists = [model.network.neighbors(i) for i in range(n)]
        choice_cdfs = [np.cumsum(M[i, neighbor_lists[i]]) for i in range(n)]
        choices = np.full((trials, horizon + 1, n), -1, dtype=np.int32)
        sig_cdfs = [signal_cdf(model, i) for i in range(n)]
        for k in range(trials):
            u0 = rngs[k].random(n)
            for i in range(n):
                s = np.searchsorted(sig_cdfs[i], u0[i], side="right")
                signals[k, 0, i] = min(int(s), len(sig_cdfs[i]) - 1)
            if horizon > 0:
                u = rngs[k].random((horizon, 2, n))
                for i in range(n):
                    s = np.searchsorted(sig_cdfs[i], u[:, 0, i], side="right")
                    signals[k, 1:, i] = np.minimum(s, len(sig_cdfs[i]) - 1)
                    c = np.searchsorted(choice_cdfs[i], u[:, 1, i], side="right")
                    c = np.minimum(c, len(neighbor_lists[i]) - 1)
                    choices[k, 1:, i] = neighbor_lists[i][c]
    else:
        for k in range(trials):
            signals[k] = draw_signal_matrix(model, rngs[k], horizon + 1)

    log_L = [_xlog(model.signals.likelihood(i)) for i in range(n)]
    log_nu = np.stack([_xlog(model.priors.vector(i)) for i in range(n)])

    def gather_loglik(t: int) -> np.ndarray:
        out = np.empty((trials, n, m))
        for i in range(n):
            out[:, i, :] = log_L[i][signals[:, t, i]]
        return out

    log_beliefs = np.empty((trials, horizon + 1, n, m))
    log_beliefs[:, 0] = _log_normalize_batch(log_nu[None, :, :] + gather_loglik(0))

    if mode == "circle":
        pred = np.array([int(model.network.neighbors(i)[0]) for i in range(n)])
    A = model.network.adjacency.astype(float)
    trial_idx = np.arange(trials)[:, None]

    for t in range(1, horizon + 1):
        prev = log_beliefs[:, t - 1]
        step_lik = gather_loglik(t)
        if mode == "full":
            social = np.einsum("ij,tjm->tim", A, prev - log_nu[None, :, :])
            raw = log_nu[None, :, :] + step_lik + social
        elif mode == "circle":
            raw = prev[:, pred, :] + step_lik
        else:
            raw = prev[trial_idx, choices[:, t, :], :] + step_lik
        log_beliefs[:, t] = _log_normalize_batch(raw)

    stats = None
    if model.n >= 2 and strongly_connected(model.network):
        spectral = perron(model.network)
        phi = log_belief_ratios(log_beliefs, model.truth)
        Phi = np.tensordot(phi, spectral.alpha, axes=([2], [0]))
        Lam = np.zeros((trials, horizon + 1, m))
        for i in range(n):
            lamtab = log_L[i] - log_L[i][:, model.truth : model.truth + 1]
            Lam += spectral.alpha[i] * lamtab[signals[:, :, i]]
        stats = GlobalStatsSeries(
            Phi=Phi,
            Lam=Lam,
            beta=prior_bias(model, spectral.alpha),
            rho=spectral.rho,
            alpha=spectral.alpha,
        )
    return BeliefSimResult(
        mode=mode, log_beliefs=log_beliefs, signals=signals, choices=choices, stats=stats
    )
