"""Distributed termination: counters, max-consensus and the round budget.

Each node counts rounds (c), freezes the count when its Hankel defect is
found, and runs a max-consensus (theta) over the counters.  A stability
counter (r) measures how long theta has been unchanged; once it reaches
the frozen count the node can bound the network-wide defect dimension and
every node derives the same shared round budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .digraph import DiGraph, neighbor_sets
from .errors import ProtocolError


@dataclass(frozen=True)
class TerminationState:
    """Counters of one node.

    c freezes at 2*(D_j+1)+1 once the defect is found; stop_round is the
    round index at which r first reached the frozen count.
    """

    c: int = 0
    r: int = 0
    theta: int = 0
    rounds: int = 0
    c_frozen: int | None = None
    stop_round: int | None = None
    theta_at_stop: int | None = None

    @property
    def frozen(self) -> bool:
        return self.c_frozen is not None


def initial_termination_states(n: int) -> list[TerminationState]:
    return [TerminationState() for _ in range(n)]


def termination_round(
    states: list[TerminationState],
    g: DiGraph,
    defect_found: list[bool],
) -> list[TerminationState]:
    """One synchronous counter round, run alongside the consensus round.

    Counters increment first (a node whose defect was just found freezes
    at the incremented value); the max-consensus exchange then carries
    each in-neighbor's previous theta together with its current count.
    """
    if len(states) != g.n or len(defect_found) != g.n:
        raise ValueError("states/flags do not match the graph size")
    nbrs = neighbor_sets(g)

    new_c: list[int] = []
    new_frozen: list[int | None] = []
    for s, found in zip(states, defect_found):
        if s.frozen:
            new_c.append(s.c_frozen)
            new_frozen.append(s.c_frozen)
        else:
            c = s.c + 1
            new_c.append(c)
            new_frozen.append(c if found else None)

    out: list[TerminationState] = []
    for j, s in enumerate(states):
        theta = max(
            max(states[i].theta, new_c[i]) for i in (set(nbrs.in_neighbors[j]) | {j})
        )
        r = 0 if theta != s.theta else s.r + 1
        rounds = s.rounds + 1
        stop = s.stop_round
        theta_at_stop = s.theta_at_stop
        if stop is None and new_frozen[j] is not None and r == new_frozen[j]:
            stop = rounds
            theta_at_stop = theta
        out.append(
            TerminationState(
                c=new_c[j],
                r=r,
                theta=theta,
                rounds=rounds,
                c_frozen=new_frozen[j],
                stop_round=stop,
                theta_at_stop=theta_at_stop,
            )
        )
    return out


def compute_dmax(stop_round: int, degree: int) -> int:
    """Network defect-dimension bound from a node's stop round.

    Every node evaluates (stop_round - 2*degree - 2)/2 - 1 with its own
    degree; the protocol guarantees a common nonnegative integer, anything
    else is a protocol violation.
    """
    num = stop_round - 2 * degree - 2
    if num < 0 or num % 2 != 0:
        raise ProtocolError(
            f"stop round {stop_round} and degree {degree} do not yield an integer bound"
        )
    dmax = num // 2 - 1
    if dmax < 0:
        raise ProtocolError(f"negative round-budget bound {dmax}")
    return dmax


def first_stage_rounds(dmax: int) -> int:
    """Total rounds of the discovery stage: 4*(dmax+1)."""
    return 4 * (dmax + 1)


def steady_stage_rounds(dmax: int) -> int:
    """Steady per-step round count: dmax+2."""
    return dmax + 2
