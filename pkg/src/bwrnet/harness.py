"""Scenario configuration, seeded batch execution, and artifact emission.

A scenario bundles a model, a dynamics mode, horizon/trials/seed, and the
artifact selectors to write.  Runs emit plot-ready CSV files plus a JSON
manifest (written last) that echoes the scenario; re-running the echoed
scenario reproduces the CSV bodies byte for byte.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .actions import ActionSimResult, simulate_actions
from .beliefs import (
    BeliefSimResult,
    belief_probabilities,
    detect_learning,
    learning_rates,
    simulate_beliefs,
)
from .chain import (
    absorption_analysis,
    absorption_matrix,
    analyze_chain,
    index_to_profile,
    initial_profile_distribution,
)
from .errors import PreconditionError, ValidationError
from .graphs import classify_topology, root_circle
from .model import ModelSpec, make_model, model_from_dict, model_to_dict, validate

CSV_SCHEMA_VERSION = 1
DYNAMICS = ("actions", "beliefs-full", "beliefs-circle", "beliefs-random-neighbor")
OUTPUTS = ("trajectories", "global-stats", "rates", "chain-analysis")


@dataclass(frozen=True)
class Scenario:
    """One reproducible experiment: model, dynamics, sizes, seed, outputs."""

    model: ModelSpec
    dynamics: str
    horizon: int
    trials: int
    seed: int
    outputs: tuple = ("trajectories",)
    name: str = "custom"

    def check(self) -> list:
        problems = list(validate(self.model))
        if self.dynamics not in DYNAMICS:
            problems.append(f"unknown dynamics {self.dynamics!r}")
        if self.dynamics == "actions" and self.model.m != 2:
            problems.append("action dynamics require a binary state space")
        if self.seed is None:
            problems.append("seed is mandatory")
        if self.horizon < 0 or self.trials < 0:
            problems.append("horizon and trials must be nonnegative")
        for out in self.outputs:
            if out not in OUTPUTS:
                problems.append(f"unknown output selector {out!r}")
        if "chain-analysis" in self.outputs and self.model.m != 2:
            problems.append("chain-analysis output requires a binary state space")
        return problems


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "model": model_to_dict(scenario.model),
        "dynamics": scenario.dynamics,
        "horizon": scenario.horizon,
        "trials": scenario.trials,
        "seed": scenario.seed,
        "outputs": list(scenario.outputs),
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if "builtin" in doc:
        base = builtin_scenario(doc["builtin"])
        overrides = {k: doc[k] for k in ("horizon", "trials", "seed") if k in doc}
        return replace(base, **overrides) if overrides else base
    try:
        scenario = Scenario(
            model=model_from_dict(doc["model"]),
            dynamics=doc["dynamics"],
            horizon=int(doc["horizon"]),
            trials=int(doc["trials"]),
            seed=int(doc["seed"]),
            outputs=tuple(doc.get("outputs", ("trajectories",))),
            name=doc.get("name", "custom"),
        )
    except KeyError as exc:
        raise ValidationError([f"scenario document missing field: {exc}"]) from exc
    problems = scenario.check()
    if problems:
        raise ValidationError(problems)
    return scenario


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# built-in scenarios


def example1_model() -> ModelSpec:
    """Eight agents, binary signals, three states, truth = state "1".

    Agents 0-2 form a directed root circle (0 -> 1 -> 2 -> 0); agents 3-7
    hang off agent 2 in a chain, each with in-degree 1, so agent 7 sits at
    depth 5 from the circle.  Agent 0 separates state "3" from the truth,
    agent 1 separates state "2", and everyone else is uninformative.
    """
    informative_a = [[1 / 3, 1 / 3, 1 / 5], [2 / 3, 2 / 3, 4 / 5]]
    informative_b = [[1 / 2, 2 / 3, 1 / 2], [1 / 2, 1 / 3, 1 / 2]]
    flat = [[1 / 4, 1 / 4, 1 / 4], [3 / 4, 3 / 4, 3 / 4]]
    likelihoods = [informative_a, informative_b] + [flat] * 6
    priors = [[1 / 3, 1 / 3, 1 / 3]] * 8
    edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7)]
    return make_model(likelihoods, priors, edges=edges, state_labels=["1", "2", "3"], truth=0)


def theorem1_model() -> ModelSpec:
    """Complete 3-agent digraph (spectral radius 2) with mirror-signal agents.

    States "2" and "3" perturb the flat signal law by +/-d, so the truth is
    globally identifiable but only barely: the noise amplification of the
    full-network dynamics swamps the drift and beliefs run off toward
    whichever false state the early signals happened to favor.
    """
    ds = (0.0010, 0.0012, 0.0008)
    likelihoods = [
        [[1 / 2, 1 / 2 + d, 1 / 2 - d], [1 / 2, 1 / 2 - d, 1 / 2 + d]] for d in ds
    ]
    priors = [[1 / 3, 1 / 3, 1 / 3]] * 3
    edges = [(j, i) for i in range(3) for j in range(3) if i != j]
    return make_model(likelihoods, priors, edges=edges, state_labels=["1", "2", "3"], truth=0)


def ising_consensus_model() -> ModelSpec:
    """Complete 3-agent digraph with symmetric binary signals.

    The social weights dominate every agent's strongest private evidence, so
    both consensus profiles are absorbing and every run herds.
    """
    ps = (0.65, 0.70, 0.75)
    likelihoods = [[[p, 1 - p], [1 - p, p]] for p in ps]
    priors = [[1 / 2, 1 / 2]] * 3
    edges = [(j, i) for i in range(3) for j in range(3) if i != j]
    return make_model(likelihoods, priors, edges=edges, state_labels=["1", "2"], truth=0)


BUILTIN_SEEDS = {"example1": 5, "theorem1-demo": 60901, "ising-consensus-demo": 4242}


def builtin_scenario(name: str) -> Scenario:
    if name == "example1":
        return Scenario(
            model=example1_model(),
            dynamics="beliefs-circle",
            horizon=2000,
            trials=20,
            seed=BUILTIN_SEEDS[name],
            outputs=("trajectories", "rates"),
            name=name,
        )
    if name == "theorem1-demo":
        return Scenario(
            model=theorem1_model(),
            dynamics="beliefs-full",
            horizon=60,
            trials=50,
            seed=BUILTIN_SEEDS[name],
            outputs=("trajectories", "global-stats", "rates"),
            name=name,
        )
    if name == "ising-consensus-demo":
        return Scenario(
            model=ising_consensus_model(),
            dynamics="actions",
            horizon=60,
            trials=200,
            seed=BUILTIN_SEEDS[name],
            outputs=("trajectories", "chain-analysis"),
            name=name,
        )
    raise ValidationError([f"unknown built-in scenario {name!r}"])


# ---------------------------------------------------------------------------
# artifact emission


def _actions_frame(result: ActionSimResult) -> pd.DataFrame:
    trials, steps, n = result.actions.shape
    cols = {"trial": np.repeat(np.arange(trials), steps), "time": np.tile(np.arange(steps), trials)}
    flat = result.actions.reshape(trials * steps, n)
    for i in range(n):
        cols[f"agent_{i}"] = flat[:, i]
    return pd.DataFrame(cols)


def _beliefs_frame(result: BeliefSimResult, model: ModelSpec) -> pd.DataFrame:
    trials, steps, n, m = result.log_beliefs.shape
    probs = belief_probabilities(result.log_beliefs)
    idx_trial, idx_t, idx_agent, idx_state = np.indices((trials, steps, n, m))
    labels = np.array(model.states.labels)
    return pd.DataFrame(
        {
            "trial": idx_trial.ravel(),
            "t": idx_t.ravel(),
            "agent": idx_agent.ravel(),
            "state": labels[idx_state.ravel()],
            "belief": probs.ravel(),
        }
    )


def _global_stats_frame(result: BeliefSimResult, model: ModelSpec) -> pd.DataFrame:
    stats = result.stats
    trials, steps, m = stats.Phi.shape
    false_states = [k for k in range(m) if k != model.truth]
    labels = np.array(model.states.labels)
    rows = {"trial": [], "t": [], "false_state": [], "Phi": [], "Lambda": []}
    for k in false_states:
        rows["trial"].append(np.repeat(np.arange(trials), steps))
        rows["t"].append(np.tile(np.arange(steps), trials))
        rows["false_state"].append(np.full(trials * steps, labels[k]))
        rows["Phi"].append(stats.Phi[:, :, k].ravel())
        rows["Lambda"].append(stats.Lam[:, :, k].ravel())
    frame = pd.DataFrame({key: np.concatenate(val) for key, val in rows.items()})
    return frame.sort_values(["trial", "t", "false_state"], kind="stable").reset_index(drop=True)


def _chain_report(model: ModelSpec) -> dict:
    analysis = analyze_chain(model)
    n = model.n
    initial = initial_profile_distribution(model)
    stationary = [analysis.stationary(r).tolist() for r in range(len(analysis.recurrent_classes))]
    absorbed = absorption_analysis(analysis.kernel, initial)
    t_states, _, b_matrix = absorption_matrix(analysis.kernel)
    return {
        "n": n,
        "equilibria": [index_to_profile(p, n).tolist() for p in sorted(analysis.equilibria)],
        "tie_sensitive_equilibria": [
            index_to_profile(p, n).tolist() for p in sorted(analysis.tie_sensitive)
        ],
        "transient_classes": analysis.transient_classes,
        "recurrent_classes": analysis.recurrent_classes,
        "stationary_distributions": stationary,
        "initial_distribution": initial.tolist(),
        "first_class_probabilities": absorbed.tolist(),
        "absorption_matrix": {"transient_states": t_states, "rows": b_matrix.tolist()},
        "profile_encoding": "bit i of the class-member index is 1 iff agent i plays +1",
    }


def run(scenario: Scenario, out_dir) -> dict:
    """Execute a scenario and write its artifact bundle plus manifest."""
    problems = scenario.check()
    if problems:
        raise ValidationError([f"scenario {scenario.name}: {p}" for p in problems])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    artifacts = []

    def write_json(name: str, payload) -> None:
        (out / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        artifacts.append(name)

    def write_csv(name: str, frame: pd.DataFrame) -> None:
        frame.to_csv(out / name, index=False)
        artifacts.append(name)

    model = scenario.model
    if scenario.dynamics == "actions":
        result = simulate_actions(model, scenario.horizon, scenario.trials, scenario.seed)
        if "trajectories" in scenario.outputs:
            write_csv("actions.csv", _actions_frame(result))
            write_json(
                "constants.json",
                {
                    "V": result.constants.V.tolist(),
                    "W": result.constants.W.tolist(),
                    "w": result.constants.w.tolist(),
                    "eta": result.constants.eta.tolist(),
                    "uninformative_agents": np.flatnonzero(
                        result.constants.uninformative
                    ).tolist(),
                    "near_ties": result.near_ties.tolist(),
                },
            )
    else:
        mode = scenario.dynamics.removeprefix("beliefs-")
        result = simulate_beliefs(model, mode, scenario.horizon, scenario.trials, scenario.seed)
        if "trajectories" in scenario.outputs:
            write_csv("beliefs.csv", _beliefs_frame(result, model))
        if "global-stats" in scenario.outputs:
            if result.stats is None:
                raise PreconditionError(
                    "global-stats output requires a strongly connected network"
                )
            write_csv("global_stats.csv", _global_stats_frame(result, model))

    if "rates" in scenario.outputs:
        write_json("rates.json", learning_rates(model).to_dict(model))
    if "chain-analysis" in scenario.outputs:
        write_json("chain.json", _chain_report(model))

    manifest = {
        "toolkit": "bwrnet",
        "version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "scenario": scenario_to_dict(scenario),
        "edge_list": [[j, i] for j, i in model.network.edges()],
        "artifacts": artifacts,
        "wall_clock_seconds": time.perf_counter() - start,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# summaries


def _beliefs_from_frame(frame: pd.DataFrame, model: ModelSpec, trials: int, steps: int):
    """Rebuild the (trials, steps, n, m) log-belief stack from the long CSV."""
    n, m = model.n, model.m
    probs = frame["belief"].to_numpy().reshape(trials, steps, n, m)
    with np.errstate(divide="ignore"):
        return np.log(probs)


def summarize(artifact_dir) -> dict:
    """Summary statistics computed purely from an artifact bundle on disk."""
    out = Path(artifact_dir)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise ValidationError([f"no manifest.json under {out}"])
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    scenario_doc = manifest.get("scenario", {})
    try:
        model = model_from_dict(scenario_doc["model"])
        dynamics = scenario_doc["dynamics"]
        trials = int(scenario_doc["trials"])
        horizon = int(scenario_doc["horizon"])
    except (KeyError, TypeError) as exc:
        raise ValidationError([f"manifest scenario malformed: {exc}"]) from exc

    summary = {"scenario": scenario_doc.get("name", "custom"), "dynamics": dynamics}
    steps = horizon + 1

    if dynamics == "actions":
        frame = pd.read_csv(out / "actions.csv")
        expected = trials * steps
        if len(frame) != expected:
            raise ValidationError(
                [f"actions.csv has {len(frame)} rows, expected {expected}"]
            )
        agent_cols = [f"agent_{i}" for i in range(model.n)]
        final = frame[frame["time"] == horizon].sort_values("trial")[agent_cols].to_numpy()
        truth_action = 1 if model.truth == 0 else -1
        profiles, counts = np.unique(final, axis=0, return_counts=True)
        consensus = np.all(final == final[:, :1], axis=1)
        on_truth = consensus & (final[:, 0] == truth_action)
        summary.update(
            {
                "trials": trials,
                "final_profiles": [
                    {"profile": list(p), "count": int(c)}
                    for p, c in zip(profiles.tolist(), counts)
                ],
                "consensus_fraction": float(consensus.mean()) if trials else 0.0,
                "consensus_on_truth_fraction": float(on_truth.mean()) if trials else 0.0,
            }
        )
        return summary

    frame = pd.read_csv(out / "beliefs.csv", dtype={"state": str})
    expected = trials * steps * model.n * model.m
    if len(frame) != expected:
        raise ValidationError([f"beliefs.csv has {len(frame)} rows, expected {expected}"])
    log_beliefs = _beliefs_from_frame(frame, model, trials, steps)
    per_agent = {i: {"learned": [], "rates": []} for i in range(model.n)}
    for k in range(trials):
        for verdict in detect_learning(log_beliefs[k], model.truth):
            per_agent[verdict.agent]["learned"].append(verdict.learned)
            if not verdict.saturated:
                per_agent[verdict.agent]["rates"].append(verdict.rate)
    agents = []
    for i in range(model.n):
        flags = per_agent[i]["learned"]
        rates = per_agent[i]["rates"]
        agents.append(
            {
                "agent": i,
                "learned_all_trials": bool(flags and all(flags)),
                "learned_fraction": float(np.mean(flags)) if flags else 0.0,
                "mean_rate": float(np.mean(rates)) if rates else None,
            }
        )
    summary["per_agent"] = agents
    summary["all_agents_learned_fraction"] = (
        float(np.mean([all(per_agent[i]["learned"][k] for i in range(model.n)) for k in range(trials)]))
        if trials
        else 0.0
    )
    kind = classify_topology(model.network)
    if kind.value in ("DirectedCircle", "RootCircleTree"):
        circle = root_circle(model.network)
        circle_rates = [a["mean_rate"] for a in agents if a["agent"] in circle]
        if all(r is not None for r in circle_rates):
            summary["root_circle"] = {
                "members": circle,
                "mean_rate": float(np.mean(circle_rates)),
            }
    return summary
