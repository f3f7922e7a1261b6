"""Binary-state, binary-action dynamics: weighted majority with thresholds.

State 0 is bound to action +1 and state 1 to action -1.  Each agent's update
is the sign of a weighted sum of her neighbors' previous actions plus a bias
term and the log-likelihood ratio of her fresh private signal.  The weights
and biases derive from a dichotomy of each signal space: the signals whose
posterior favors state 0 versus the rest.

Sign conventions: sign(0) = +1 everywhere in the dynamics (agents pick +1
when indifferent).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .model import ModelSpec, signal_cdf
from .seeding import spawn_rngs

NEAR_TIE_TOL = 1e-9  # sign arguments closer to zero than this are instrumented
_W_SNAP_TOL = 1e-12  # float guard: exactly balanced dichotomies give w == 0


def _require_binary(model: ModelSpec, op: str) -> None:
    if model.m != 2:
        raise PreconditionError(f"{op} requires a binary state space, got m={model.m}")


def signal_dichotomy(model: ModelSpec, agent: int):
    """Split the agent's signal space by which state the time-zero posterior favors.

    A signal lands in the plus cell when l(s|state0) * prior(state0) >=
    l(s|state1) * prior(state1); ties go to the plus cell, matching
    sign(0) = +1.  Returns (plus, minus) as ascending index arrays.
    """
    _require_binary(model, "signal_dichotomy")
    L = model.signals.likelihood(agent)
    nu = model.priors.vector(agent)
    plus = L[:, 0] * nu[0] >= L[:, 1] * nu[1]
    return np.flatnonzero(plus), np.flatnonzero(~plus)


@dataclass(frozen=True)
class IsingConstants:
    """Per-agent constants of the weighted-majority update.

    w[i] is the interaction weight carried by agent i's action (a measure of
    her observational ability); eta[i] is agent i's innate propensity toward
    +1, combining her prior log-ratio with the aggregate pull V of her
    neighbors' dichotomies.  lam1[i][s] is the state0-vs-state1 signal
    log-likelihood ratio (+/-inf allowed, NaN for signals impossible under
    both states).  Agents whose own dichotomy carries no information have
    w == 0 and are flagged rather than rejected.
    """

    plus_cells: tuple
    minus_cells: tuple
    V: np.ndarray
    W: np.ndarray
    w: np.ndarray
    eta: np.ndarray
    lam1: tuple
    uninformative: np.ndarray


def _lam1_table(model: ModelSpec, agent: int) -> np.ndarray:
    L = model.signals.likelihood(agent)
    with np.errstate(divide="ignore", invalid="ignore"):
        tab = np.log(L[:, 0]) - np.log(L[:, 1])
    tab[(L[:, 0] == 0) & (L[:, 1] == 0)] = np.nan
    return tab


def ising_constants(model: ModelSpec) -> IsingConstants:
    """Dichotomies and the constants V, W, w, eta for every agent.

    An empty dichotomy cell corresponds to an action that is never taken at
    time zero; its mass ratio contributes a factor of 1.  A nonempty cell
    with zero probability under either state makes the ratios diverge and is
    rejected, naming the agent and cell.
    """
    _require_binary(model, "ising_constants")
    n = model.n
    plus_cells, minus_cells, lam1 = [], [], []
    log_rp = np.zeros(n)  # log of plus-cell mass ratio state0/state1
    log_rm = np.zeros(n)  # log of minus-cell mass ratio state0/state1
    for i in range(n):
        plus, minus = signal_dichotomy(model, i)
        plus_cells.append(plus)
        minus_cells.append(minus)
        lam1.append(_lam1_table(model, i))
        L = model.signals.likelihood(i)
        for cell, name, out in ((plus, "plus", log_rp), (minus, "minus", log_rm)):
            if cell.size == 0:
                out[i] = 0.0
                continue
            m0 = float(L[cell, 0].sum())
            m1 = float(L[cell, 1].sum())
            if m0 <= 0.0 or m1 <= 0.0:
                raise PreconditionError(
                    f"agent {i}: {name} dichotomy cell has zero probability under "
                    f"state {'1' if m0 <= 0 else '0'}; weight constants are undefined"
                )
            out[i] = math.log(m0) - math.log(m1)

    w = 0.5 * (log_rp - log_rm)
    w[(w < 0) & (w > -_W_SNAP_TOL)] = 0.0
    log_v_per_neighbor = 0.5 * (log_rp + log_rm)
    A = model.network.adjacency
    log_V = A @ log_v_per_neighbor
    prior_ratio = np.array(
        [math.log(model.priors.vector(i)[0] / model.priors.vector(i)[1]) for i in range(n)]
    )
    return IsingConstants(
        plus_cells=tuple(plus_cells),
        minus_cells=tuple(minus_cells),
        V=np.exp(log_V),
        W=np.exp(w),
        w=w,
        eta=prior_ratio + log_V,
        lam1=tuple(lam1),
        uninformative=(w == 0.0),
    )


def initial_action(model: ModelSpec, constants: IsingConstants, agent: int, signal: int) -> int:
    """Time-zero action: +1 iff the signal falls in the plus dichotomy cell.

    Equivalent to the sign of the prior log-ratio plus the signal
    log-likelihood ratio, with sign(0) = +1, but robust to zero likelihoods.
    """
    _require_binary(model, "initial_action")
    return 1 if signal in constants.plus_cells[agent] else -1


def step_arguments(
    model: ModelSpec,
    constants: IsingConstants,
    profile: np.ndarray,
    signals,
) -> np.ndarray:
    """The sign arguments of a synchronous update from ``profile``."""
    profile = np.asarray(profile, dtype=float)
    lam = np.array([constants.lam1[i][signals[i]] for i in range(model.n)])
    if np.any(np.isnan(lam)):
        bad = int(np.flatnonzero(np.isnan(lam))[0])
        raise PreconditionError(
            f"agent {bad}: signal {signals[bad]} is impossible under both states"
        )
    social = model.network.adjacency @ (constants.w * profile)
    return social + constants.eta + lam


def step_actions(
    model: ModelSpec,
    constants: IsingConstants,
    profile: np.ndarray,
    signals,
) -> np.ndarray:
    """Synchronous weighted-majority update of all agents; sign(0) = +1."""
    _require_binary(model, "step_actions")
    args = step_arguments(model, constants, profile, signals)
    return np.where(args >= 0.0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class ActionSimResult:
    """Seeded Monte Carlo trajectories of the action-profile chain.

    ``actions`` has shape (trials, horizon+1, n) with entries +/-1 and
    ``signals`` the matching signal draws.  ``near_ties`` lists
    (trial, t, agent) rows whose sign argument fell within NEAR_TIE_TOL of
    zero; float tie behavior is representation dependent there.
    """

    actions: np.ndarray
    signals: np.ndarray
    near_ties: np.ndarray
    constants: IsingConstants


def draw_signal_matrix(model: ModelSpec, rng: np.random.Generator, steps: int) -> np.ndarray:
    """Signals for one trial: shape (steps, n), drawn agents-ascending per step.

    Consumes exactly steps * n uniforms in the documented order, so the
    result matches repeated ``sample_signal`` calls on the same generator.
    """
    n = model.n
    u = rng.random((steps, n))
    sig = np.empty((steps, n), dtype=np.int16)
    for i in range(n):
        cdf = signal_cdf(model, i)
        sig[:, i] = np.minimum(np.searchsorted(cdf, u[:, i], side="right"), len(cdf) - 1)
    return sig


def simulate_actions(model: ModelSpec, horizon: int, trials: int, rng) -> ActionSimResult:
    """Run the action dynamics for ``trials`` independent seeded trials.

    Each trial draws fresh signals per step (agents ascending), applies the
    time-zero rule, then the synchronous update up to ``horizon``.
    Trials use independent child generators spawned from ``rng``, so the
    output is independent of trial execution order.
    """
    _require_binary(model, "simulate_actions")
    constants = ising_constants(model)
    n = model.n
    rngs = spawn_rngs(rng, trials)
    signals = np.empty((trials, horizon + 1, n), dtype=np.int16)
    for k in range(trials):
        signals[k] = draw_signal_matrix(model, rngs[k], horizon + 1)

    plus_mask = []
    for i in range(n):
        mask = np.zeros(model.signals.signal_count(i), dtype=bool)
        mask[constants.plus_cells[i]] = True
        plus_mask.append(mask)

    actions = np.empty((trials, horizon + 1, n), dtype=np.int8)
    lam = np.empty((trials, n))
    prior_ratio = constants.eta - np.log(constants.V)
    ties = []

    for i in range(n):
        actions[:, 0, i] = np.where(plus_mask[i][signals[:, 0, i]], 1, -1)
        lam[:, i] = constants.lam1[i][signals[:, 0, i]]
    args0 = prior_ratio[None, :] + lam
    ties.append(np.argwhere(np.abs(args0) < NEAR_TIE_TOL))

    A = model.network.adjacency.astype(float)
    for t in range(1, horizon + 1):
        for i in range(n):
            lam[:, i] = constants.lam1[i][signals[:, t, i]]
        social = (actions[:, t - 1, :] * constants.w[None, :]) @ A.T
        args = social + constants.eta[None, :] + lam
        actions[:, t, :] = np.where(args >= 0.0, 1, -1)
        near = np.argwhere(np.abs(args) < NEAR_TIE_TOL)
        if near.size:
            ties.append(np.column_stack([near[:, 0], np.full(len(near), t), near[:, 1]]))

    first = ties[0]
    tie_rows = [np.column_stack([first[:, 0], np.zeros(len(first), dtype=int), first[:, 1]])]
    tie_rows += ties[1:]
    near_ties = (
        np.vstack(tie_rows) if any(len(r) for r in tie_rows) else np.empty((0, 3), dtype=int)
    )
    return ActionSimResult(
        actions=actions, signals=signals, near_ties=near_ties.astype(int), constants=constants
    )
