"""Problem instances: states, signal structures, priors, network, truth.

A model bundles everything that is common knowledge among the agents plus
the realized true state.  Agents are indexed 0..n-1 and states 0..m-1; the
truth is always an explicit stored index.  Signals are agent-local: signal
index s of agent i has no relation to signal index s of agent j.

All probabilities are double precision.  Zero likelihood entries are
permitted; the log-ratio conventions for them are documented on the
operations below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError, ValidationError

PROB_TOL = 1e-12  # normalization tolerance for priors and likelihood columns


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateSpace:
    """Ordered finite set of world states."""

    labels: tuple

    def __init__(self, labels: Sequence):
        object.__setattr__(self, "labels", tuple(str(x) for x in labels))

    @property
    def m(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        return self.labels.index(str(label))


@dataclass(frozen=True)
class SignalStructure:
    """Per-agent likelihood matrices, rows = signals, columns = states."""

    likelihoods: tuple

    def __init__(self, likelihoods: Sequence):
        object.__setattr__(
            self, "likelihoods", tuple(_frozen(np.atleast_2d(L)) for L in likelihoods)
        )

    def likelihood(self, agent: int) -> np.ndarray:
        return self.likelihoods[agent]

    def signal_count(self, agent: int) -> int:
        return self.likelihoods[agent].shape[0]


@dataclass(frozen=True)
class Prior:
    """Per-agent full-support prior over the states."""

    vectors: tuple

    def __init__(self, vectors: Sequence):
        object.__setattr__(self, "vectors", tuple(_frozen(v) for v in vectors))

    def vector(self, agent: int) -> np.ndarray:
        return self.vectors[agent]


@dataclass(frozen=True)
class Network:
    """Directed graph as a 0/1 adjacency matrix.

    ``adjacency[i, j] == 1`` means j is an in-neighbor of i (edge j -> i),
    so row i lists who agent i observes.  Self-loops are not allowed.
    """

    adjacency: np.ndarray

    def __init__(self, adjacency):
        A = np.array(adjacency, dtype=int)
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, agent: int) -> np.ndarray:
        """In-neighbors of ``agent`` in ascending order."""
        return np.flatnonzero(self.adjacency[agent])

    def degree(self, agent: int) -> int:
        return int(self.adjacency[agent].sum())

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def out_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def edges(self) -> list:
        """Edge list as (source j, target i) pairs."""
        rows, cols = np.nonzero(self.adjacency)
        return [(int(j), int(i)) for i, j in zip(rows, cols)]


@dataclass(frozen=True)
class ModelSpec:
    """A complete problem instance; immutable and safe to share."""

    states: StateSpace
    signals: SignalStructure
    priors: Prior
    network: Network
    truth: int

    @property
    def n(self) -> int:
        return self.network.n

    @property
    def m(self) -> int:
        return self.states.m


def make_model(
    likelihoods,
    priors,
    edges=None,
    adjacency=None,
    state_labels=None,
    truth=0,
) -> ModelSpec:
    """Assemble a ModelSpec from plain lists/arrays.

    ``edges`` is a list of (j, i) pairs meaning j -> i; alternatively pass a
    full ``adjacency`` matrix.  ``truth`` may be a state index or a label.
    """
    likelihoods = [np.atleast_2d(np.asarray(L, dtype=float)) for L in likelihoods]
    priors = [np.asarray(p, dtype=float) for p in priors]
    n = len(likelihoods)
    m = likelihoods[0].shape[1] if likelihoods else 0
    if state_labels is None:
        state_labels = [str(k + 1) for k in range(m)]
    states = StateSpace(state_labels)
    if adjacency is None:
        A = np.zeros((n, n), dtype=int)
        for j, i in edges or []:
            A[int(i), int(j)] = 1
    else:
        A = np.asarray(adjacency, dtype=int)
    if not isinstance(truth, (int, np.integer)):
        truth = states.index(truth)
    return ModelSpec(
        states=states,
        signals=SignalStructure(likelihoods),
        priors=Prior(priors),
        network=Network(A),
        truth=int(truth),
    )


def validate(model: ModelSpec) -> list:
    """Check every structural invariant; returns violation messages.

    An empty list means the model is valid.  Violations are data, not
    faults: nothing is raised here.
    """
    v = []
    m = model.states.m
    if m < 2:
        v.append(f"state space has {m} states, need at least 2")
    if len(set(model.states.labels)) != m:
        v.append("state labels are not distinct")

    n = model.network.n
    if len(model.signals.likelihoods) != n:
        v.append(
            f"signal structure covers {len(model.signals.likelihoods)} agents, network has {n}"
        )
    if len(model.priors.vectors) != n:
        v.append(f"priors cover {len(model.priors.vectors)} agents, network has {n}")

    A = model.network.adjacency
    if A.shape != (n, n):
        v.append(f"adjacency shape {A.shape} is not square of size {n}")
    else:
        if np.any((A != 0) & (A != 1)):
            v.append("adjacency entries must be 0 or 1")
        if np.any(np.diag(A) != 0):
            loops = np.flatnonzero(np.diag(A))
            v.append(f"self-loops at agents {loops.tolist()}")

    for i, L in enumerate(model.signals.likelihoods):
        if L.shape[0] < 1:
            v.append(f"agent {i}: no signals")
            continue
        if L.shape[1] != m:
            v.append(f"agent {i}: likelihood has {L.shape[1]} state columns, expected {m}")
            continue
        if np.any(L < 0) or np.any(L > 1):
            v.append(f"agent {i}: likelihood entries outside [0, 1]")
        col_sums = L.sum(axis=0)
        for k, s in enumerate(col_sums):
            if abs(s - 1.0) > PROB_TOL:
                v.append(
                    f"agent {i}: likelihood column for state {model.states.labels[k]} "
                    f"sums to {s:.12g}, expected 1"
                )

    for i, p in enumerate(model.priors.vectors):
        if p.shape != (m,):
            v.append(f"agent {i}: prior has length {p.shape}, expected ({m},)")
            continue
        for k, pk in enumerate(p):
            if pk <= 0:
                v.append(
                    f"agent {i}: prior on state {model.states.labels[k]} is {pk:.12g}, "
                    "full support requires > 0"
                )
        if abs(p.sum() - 1.0) > PROB_TOL:
            v.append(f"agent {i}: prior sums to {p.sum():.12g}, expected 1")

    if not (0 <= model.truth < m):
        v.append(f"truth index {model.truth} outside state range 0..{m - 1}")
    return v


def signal_cdf(model: ModelSpec, agent: int, state: int | None = None) -> np.ndarray:
    """Cumulative distribution of agent's signals under ``state`` (default truth)."""
    if state is None:
        state = model.truth
    return np.cumsum(model.signals.likelihood(agent)[:, state])


def sample_signal(model: ModelSpec, agent: int, rng: np.random.Generator) -> int:
    """Draw one signal for ``agent`` under the model's truth.

    One uniform variate is consumed per call and mapped through the inverse
    CDF of the agent's likelihood column, so repeated calls are i.i.d. and a
    fixed generator state reproduces the same sequence.  The batch
    simulators consume uniforms in the same documented order (agents in
    ascending index within each time step).
    """
    cdf = signal_cdf(model, agent)
    u = rng.random()
    s = int(np.searchsorted(cdf, u, side="right"))
    return min(s, len(cdf) - 1)


def log_state_ratio(
    model: ModelSpec, agent: int, signal: int, num_state: int, den_state: int
) -> float:
    """log of l(signal | num_state) / l(signal | den_state) with +/-inf conventions.

    Returns -inf when only the numerator vanishes, +inf when only the
    denominator vanishes.  A signal impossible under both states has no
    defined ratio and is rejected.
    """
    L = model.signals.likelihood(agent)
    num = L[signal, num_state]
    den = L[signal, den_state]
    if num == 0.0 and den == 0.0:
        raise PreconditionError(
            f"agent {agent}: signal {signal} has zero probability under both states "
            f"{num_state} and {den_state}"
        )
    if num == 0.0:
        return -math.inf
    if den == 0.0:
        return math.inf
    return math.log(num / den)


def log_likelihood_ratio(model: ModelSpec, agent: int, signal: int, false_state: int) -> float:
    """Information content of ``signal`` for the false state against the truth.

    Rejects signals with zero probability under the truth: such a signal
    cannot have been sampled consistently with the model.
    """
    L = model.signals.likelihood(agent)
    if L[signal, model.truth] == 0.0:
        raise PreconditionError(
            f"agent {agent}: signal {signal} is impossible under the truth "
            f"(state {model.states.labels[model.truth]})"
        )
    return log_state_ratio(model, agent, signal, false_state, model.truth)


def kl_divergence(model: ModelSpec, agent: int, true_state: int, false_state: int) -> float:
    """Relative entropy between the agent's signal laws under two states.

    Returns +inf when the true-state support is not contained in the
    false-state support; 0 exactly when the two columns are identical.
    """
    L = model.signals.likelihood(agent)
    p = L[:, true_state]
    q = L[:, false_state]
    mask = p > 0
    if np.any(q[mask] == 0.0):
        return math.inf
    s = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    return max(s, 0.0)


def model_to_dict(model: ModelSpec) -> dict:
    """Plain-JSON representation used by the model file format."""
    return {
        "states": list(model.states.labels),
        "truth": model.states.labels[model.truth],
        "priors": [p.tolist() for p in model.priors.vectors],
        "likelihoods": [L.tolist() for L in model.signals.likelihoods],
        "edges": [[j, i] for j, i in model.network.edges()],
    }


def model_from_dict(doc: dict) -> ModelSpec:
    """Build and validate a model from its JSON document; invalid input raises."""
    try:
        labels = doc["states"]
        priors = doc["priors"]
        likelihoods = doc["likelihoods"]
        edges = [tuple(e) for e in doc.get("edges", [])]
        truth = doc["truth"]
    except (KeyError, TypeError) as exc:
        raise ValidationError([f"model document missing field: {exc}"]) from exc
    states = StateSpace(labels)
    try:
        truth_idx = states.index(truth)
    except ValueError:
        raise ValidationError([f"truth label {truth!r} is not a state"]) from None
    model = make_model(
        likelihoods, priors, edges=edges, state_labels=labels, truth=truth_idx
    )
    violations = validate(model)
    if violations:
        raise ValidationError(violations)
    return model


def load_model(path) -> ModelSpec:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return model_from_dict(doc)


def save_model(model: ModelSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")
