"""Executable uncertainty-based privacy audit.

Given a recorded run and an adversary model, this module captures exactly
what the adversary sees, constructs an alternative execution in which one
node's private value is shifted by an arbitrary amount, and re-runs the
protocol to check that the adversary's view is unchanged.  Every verified
shift widens the lower bound on the adversary's uncertainty set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .digraph import DiGraph, neighbor_sets
from .errors import ZeroDenominatorError
from .prftps import ExecutionRecord, _compute_outputs, replay_rounds
from .pushsum import WeightSet

HONEST_BUT_CURIOUS = "honest_but_curious"
EAVESDROPPER = "eavesdropper"


@dataclass(frozen=True)
class AdversaryModel:
    """Either a set of colluding protocol-following nodes or an external
    wiretapper on a set of directed links ((receiver, sender) pairs)."""

    kind: str
    nodes: frozenset[int] = frozenset()
    edges: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self):
        if self.kind not in (HONEST_BUT_CURIOUS, EAVESDROPPER):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))


@dataclass
class ObservationTrace:
    """Flat keyed view of everything the adversary observed."""

    entries: dict[tuple, float]

    def max_deviation(self, other: "ObservationTrace") -> float:
        if self.entries.keys() != other.entries.keys():
            raise ValueError("traces cover different observations")
        if not self.entries:
            return 0.0
        return max(abs(v - other.entries[k]) for k, v in self.entries.items())

    def __len__(self) -> int:
        return len(self.entries)


def _validate_model(g: DiGraph, adv: AdversaryModel) -> None:
    if any(not 0 <= a < g.n for a in adv.nodes):
        raise ValueError("corrupted node outside the graph")
    if any(e not in g.edges for e in adv.edges):
        raise ValueError("tapped edge not present in the graph")


def capture_trace(record: ExecutionRecord, adv: AdversaryModel) -> ObservationTrace:
    """Filter the run transcript down to the adversary's information set.

    Honest-but-curious nodes pool their own substates and couplings, all
    their outgoing link weights, and the values plus link weights arriving
    from their in-neighbors.  An eavesdropper sees the transmitted value
    and link weight on each tapped edge.  Self-weights of honest nodes and
    beta substates are never transmitted, hence never captured.
    """
    g = record.graph
    _validate_model(g, adv)
    nbrs = neighbor_sets(g)
    n_traj = record.n_components + 1
    entries: dict[tuple, float] = {}

    for k in range(record.k1):
        for t in range(n_traj):
            w = record.w0s[t] if k == 0 else record.steady
            if adv.kind == HONEST_BUT_CURIOUS:
                for a in sorted(adv.nodes):
                    entries[("own-alpha", k, a, t)] = record.alphas[k, t, a]
                    entries[("own-beta", k, a, t)] = record.betas[k, t, a]
                    entries[("own-a-ab", k, a, t)] = w.a_ab[a]
                    entries[("own-a-ba", k, a, t)] = w.a_ba[a]
                    entries[("own-a-bb", k, a, t)] = w.a_bb[a]
                    for j in sorted(nbrs.out_neighbors[a] | {a}):
                        entries[("out-weight", k, a, j, t)] = w.p[j, a]
                    for src in sorted(nbrs.in_neighbors[a]):
                        entries[("in-weight", k, a, src, t)] = w.p[a, src]
                        entries[("in-value", k, a, src, t)] = record.alphas[k, t, src]
            else:
                for recv, send in sorted(adv.edges):
                    entries[("edge-value", k, recv, send, t)] = record.alphas[k, t, send]
                    entries[("edge-weight", k, recv, send, t)] = w.p[recv, send]
    return ObservationTrace(entries=entries)


@dataclass(frozen=True)
class PrivacyVerdict:
    preserved: bool
    witness_node: int | None = None
    witness_edge: tuple[int, int] | None = None
    situation: str | None = None


def privacy_condition(g: DiGraph, j: int, adv: AdversaryModel) -> PrivacyVerdict:
    """Topological sufficient condition for node j's privacy.

    Honest-but-curious: some neighbor of j must be honest.  Eavesdropper:
    some edge into or out of j must be untapped.  Returns the witnessing
    neighbor/edge; in-neighbor witnesses are preferred for determinism.
    """
    _validate_model(g, adv)
    nbrs = neighbor_sets(g)
    ins = nbrs.in_neighbors[j]
    outs = nbrs.out_neighbors[j]
    if adv.kind == HONEST_BUT_CURIOUS:
        if j in adv.nodes:
            return PrivacyVerdict(preserved=False)
        for m in sorted(ins):
            if m not in adv.nodes:
                return PrivacyVerdict(
                    preserved=True, witness_node=m, witness_edge=(j, m), situation="I"
                )
        for m in sorted(outs):
            if m not in adv.nodes:
                return PrivacyVerdict(
                    preserved=True, witness_node=m, witness_edge=(m, j), situation="II"
                )
        return PrivacyVerdict(preserved=False)
    for m in sorted(ins):
        if (j, m) not in adv.edges:
            return PrivacyVerdict(
                preserved=True, witness_node=m, witness_edge=(j, m), situation="I"
            )
    for m in sorted(outs):
        if (m, j) not in adv.edges:
            return PrivacyVerdict(
                preserved=True, witness_node=m, witness_edge=(m, j), situation="II"
            )
    return PrivacyVerdict(preserved=False)


@dataclass
class EquivalentExecution:
    """Alternative initial substates and round-0 weights encoding a shifted
    private value for the target node."""

    target: int
    witness: int
    situation: str
    e: np.ndarray  # per-component shift
    alpha0: np.ndarray
    beta0: np.ndarray
    w0s: list[WeightSet]


def build_equivalent_execution(
    record: ExecutionRecord,
    j: int,
    m: int,
    e,
    zero_tol: float = 1e-9,
) -> EquivalentExecution:
    """Construct the substituted execution for target j and witness m.

    The target's hidden substate absorbs +2e and the witness's -2e; the
    witness (situation I, m an in-neighbor of j) or the target (situation
    II, m an out-neighbor) rebalances its round-0 self-weight against the
    weight on the j<->m link so every transmitted value is reproduced.
    Only never-transmitted quantities change.
    """
    g = record.graph
    nbrs = neighbor_sets(g)
    p = record.n_components
    if m in nbrs.in_neighbors[j]:
        situation = "I"
    elif m in nbrs.out_neighbors[j]:
        situation = "II"
    else:
        raise ValueError(f"witness {m} is not a neighbor of target {j}")

    e_arr = np.broadcast_to(np.asarray(e, dtype=np.float64), (p,)).copy()
    # substituted quantities live on the extended-precision grid: storing a
    # huge shift in float64 would quantize it by ~|e|*eps, which the
    # round-0 cancellation could not absorb within the trace tolerance
    alpha0 = record.alpha0.astype(np.longdouble)
    beta0 = record.beta0.astype(np.longdouble)
    w0s = []
    for t, w in enumerate(record.w0s):
        if t >= p or e_arr[t] == 0.0:  # mass weights and zero shifts stay put
            w0s.append(w)
            continue
        shift = np.longdouble(2.0) * np.longdouble(e_arr[t])
        beta0[t, j] += shift
        beta0[t, m] -= shift
        p_new = w.p.astype(np.longdouble)
        if situation == "I":
            denom = record.alpha0[t, m]
            if abs(denom) <= zero_tol:
                raise ZeroDenominatorError(
                    f"witness alpha substate {denom:.3e} too small; re-randomize the run"
                )
            q = shift / np.longdouble(denom)
            p_new[m, m] += q
            p_new[j, m] -= q
        else:
            denom = record.alpha0[t, j]
            if abs(denom) <= zero_tol:
                raise ZeroDenominatorError(
                    f"target alpha substate {denom:.3e} too small; re-randomize the run"
                )
            q = shift / np.longdouble(denom)
            p_new[j, j] -= q
            p_new[m, j] += q
        w0s.append(replace(w, p=p_new))
    return EquivalentExecution(
        target=j, witness=m, situation=situation, e=e_arr,
        alpha0=alpha0, beta0=beta0, w0s=w0s,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    traces_equal: bool
    max_trace_deviation: float
    outputs_agree: bool
    max_output_deviation: float
    trace_size: int


def verify_equivalence(
    record: ExecutionRecord,
    alt: EquivalentExecution,
    adv: AdversaryModel,
    trace_tol: float = 1e-10,
    output_tol: float = 1e-9,
) -> EquivalenceReport:
    """Re-run the protocol under the substitution and compare views.

    The alternative run reuses the recorded steady weights, round count and
    recurrence kernels (its trajectories coincide after round 1).  Returns
    whether the adversary traces match elementwise and whether both runs
    deliver the same averages, which they must: the substitution moves
    value between two hidden substates without changing the total.
    """
    g = record.graph
    n = g.n
    p = record.n_components
    alphas, betas = replay_rounds(
        g, alt.alpha0, alt.beta0, alt.w0s, record.steady, record.k1,
        round0_longdouble=True,
    )
    alt_outputs = _compute_outputs(alphas, record.value_poly, n, p)
    alt_record = ExecutionRecord(
        graph=g, n_components=p, alpha0=alt.alpha0, beta0=alt.beta0,
        w0s=alt.w0s, steady=record.steady, alphas=alphas, betas=betas,
        poly=record.poly, value_poly=record.value_poly,
        dmax=record.dmax, k1=record.k1, outputs=alt_outputs,
    )
    trace = capture_trace(record, adv)
    alt_trace = capture_trace(alt_record, adv)
    deviation = trace.max_deviation(alt_trace)
    out_scale = 1.0 + float(np.abs(record.outputs).max(initial=0.0))
    out_dev = float(np.abs(record.outputs - alt_outputs).max(initial=0.0))
    return EquivalenceReport(
        traces_equal=deviation <= trace_tol,
        max_trace_deviation=deviation,
        outputs_agree=out_dev <= output_tol * out_scale,
        max_output_deviation=out_dev,
        trace_size=len(trace),
    )
