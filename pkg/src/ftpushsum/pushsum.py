"""Push-sum dynamics on digraphs, plain and state-decomposed.

The decomposed form splits every node state into a shared alpha substate
and a hidden beta substate.  Round k=0 runs with randomized column-sum-one
weights (the privacy degrees of freedom); every later round uses constant
out-degree weights, which is what makes the trajectories amenable to
finite-time final-value extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .digraph import DiGraph, neighbor_sets

PHASE_INITIAL = "initial"
PHASE_STEADY = "steady"


# ---------------------------------------------------------------------------
# baseline push-sum


@dataclass(frozen=True)
class BaselineState:
    """Value and mass iterations of plain push-sum."""

    x1: np.ndarray
    x2: np.ndarray

    @classmethod
    def from_values(cls, values) -> "BaselineState":
        x1 = np.asarray(values, dtype=np.float64).copy()
        return cls(x1=x1, x2=np.ones_like(x1))

    def ratios(self) -> np.ndarray:
        return self.x1 / self.x2


def baseline_matrix(g: DiGraph) -> np.ndarray:
    """Column-stochastic update matrix with weights 1/(1 + out-degree)."""
    nbrs = neighbor_sets(g)
    p = np.zeros((g.n, g.n))
    for j in range(g.n):
        w = 1.0 / (1.0 + nbrs.out_degree[j])
        p[j, j] = w
        for i in nbrs.out_neighbors[j]:
            p[i, j] = w
    return p


def baseline_push_sum_round(state: BaselineState, g: DiGraph) -> BaselineState:
    p = baseline_matrix(g)
    stacked = np.ascontiguousarray(np.vstack([state.x1, state.x2]))
    out = _backend.baseline_round(p, stacked)
    return BaselineState(x1=out[0], x2=out[1])


def baseline_run(g: DiGraph, values, n_rounds: int) -> BaselineState:
    """Iterate plain push-sum for a fixed number of rounds."""
    p = baseline_matrix(g)
    stacked = np.ascontiguousarray(
        np.vstack([np.asarray(values, dtype=np.float64), np.ones(g.n)])
    )
    for _ in range(n_rounds):
        stacked = _backend.baseline_round(p, stacked)
    return BaselineState(x1=stacked[0], x2=stacked[1])


# ---------------------------------------------------------------------------
# weight mechanism


@dataclass(frozen=True)
class WeightSet:
    """Per-round coupling weights.

    ``p[j, i]`` is the weight node i puts on its link to node j (column i
    belongs to sender i); ``a_ab``, ``a_ba``, ``a_bb`` are the per-node
    alpha<-beta, beta<-alpha and beta<-beta couplings.
    """

    phase: str
    p: np.ndarray
    a_ab: np.ndarray
    a_ba: np.ndarray
    a_bb: np.ndarray

    @property
    def n(self) -> int:
        return self.p.shape[0]


def make_weights(
    g: DiGraph,
    phase: str,
    seed: int | np.random.Generator | None = None,
    spread: float = 1.0,
) -> WeightSet:
    """Build a WeightSet for the requested phase.

    initial: link weights and the beta<-alpha coupling are free random
    reals, with one summand adjusted so every sender's column sums to one
    exactly; the beta state hands everything to alpha (a_ab=1, a_bb=0).

    steady: constant weights 1/(2 + out-degree) on links, self-links and
    the beta<-alpha coupling; both substates keep half of beta (a_ab =
    a_bb = 1/2).
    """
    nbrs = neighbor_sets(g)
    n = g.n
    p = np.zeros((n, n))
    if phase == PHASE_STEADY:
        a_ab = np.full(n, 0.5)
        a_bb = np.full(n, 0.5)
        a_ba = np.empty(n)
        for i in range(n):
            w = 1.0 / (2.0 + nbrs.out_degree[i])
            p[i, i] = w
            for j in nbrs.out_neighbors[i]:
                p[j, i] = w
            a_ba[i] = w
    elif phase == PHASE_INITIAL:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        a_ab = np.ones(n)
        a_bb = np.zeros(n)
        a_ba = np.empty(n)
        for i in range(n):
            recipients = sorted(nbrs.out_neighbors[i] | {i})
            for j in recipients:
                p[j, i] = rng.uniform(-spread, spread)
            # the residual summand makes the column sum exactly one
            col = p[:, i].sum()
            a_ba[i] = 1.0 - col
            for _ in range(3):
                err = col + a_ba[i] - 1.0
                if err == 0.0:
                    break
                a_ba[i] -= err
    else:
        raise ValueError(f"phase must be 'initial' or 'steady', got {phase!r}")
    return WeightSet(phase=phase, p=p, a_ab=a_ab, a_ba=a_ba, a_bb=a_bb)


def stacked_matrix(w: WeightSet) -> np.ndarray:
    """The 2n x 2n one-round update matrix [[P, I/2], [Lambda, I/2]].

    Only defined for steady weights; the initial phase has a different
    block structure and is rejected.
    """
    if w.phase != PHASE_STEADY:
        raise ValueError("stacked matrix form requires steady-phase weights")
    n = w.n
    top = np.hstack([w.p, np.diag(w.a_ab)])
    bottom = np.hstack([np.diag(w.a_ba), np.diag(w.a_bb)])
    return np.vstack([top, bottom])


# ---------------------------------------------------------------------------
# decomposed dynamics (scalar per-node value, iterations l = 1, 2)


@dataclass(frozen=True)
class AgentConsensusState:
    """Substate pairs of one node for the value (l=1) and mass (l=2)
    iterations, plus the recorded alpha trajectories (from round 1 on;
    the round-0 state is never trajectory data)."""

    alpha: tuple[float, float]
    beta: tuple[float, float]
    alpha_history: tuple[tuple[float, ...], tuple[float, ...]] = ((), ())


def decompose_initial(
    values,
    seed: int | np.random.Generator | None = None,
    spread: float = 1.0,
) -> list[AgentConsensusState]:
    """Random substate split of private values.

    The transmitted alpha substate is drawn independently of the value
    (beta absorbs the remainder of 2*x), so an observed alpha carries no
    information on its own.  Mass substates are fixed at (0, 2).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    states = []
    for x in np.asarray(values, dtype=np.float64):
        a1 = rng.uniform(-spread, spread)
        states.append(
            AgentConsensusState(alpha=(a1, 0.0), beta=(2.0 * x - a1, 2.0))
        )
    return states


def decomposed_round(
    states: list[AgentConsensusState],
    w: WeightSet,
    g: DiGraph,
) -> list[AgentConsensusState]:
    """One synchronous round of the decomposed dynamics for l = 1, 2.

    Pure function: returns fresh states with the new alpha values appended
    to each node's history.  Conserves sum(alpha_l) + sum(beta_l) per l.
    """
    if w.n != g.n or len(states) != g.n:
        raise ValueError("states, weights and graph disagree on the node count")
    alpha = np.ascontiguousarray(
        [[s.alpha[l] for s in states] for l in range(2)], dtype=np.float64
    )
    beta = np.ascontiguousarray(
        [[s.beta[l] for s in states] for l in range(2)], dtype=np.float64
    )
    new_alpha, new_beta = _backend.decomposed_round(
        w.p, w.a_ab, w.a_ba, w.a_bb, alpha, beta
    )
    out = []
    for i, s in enumerate(states):
        out.append(
            AgentConsensusState(
                alpha=(new_alpha[0, i], new_alpha[1, i]),
                beta=(new_beta[0, i], new_beta[1, i]),
                alpha_history=(
                    s.alpha_history[0] + (new_alpha[0, i],),
                    s.alpha_history[1] + (new_alpha[1, i],),
                ),
            )
        )
    return out
