"""End-to-end privacy-preserving finite-time average consensus.

A session's first step (t=0) discovers each node's recurrence kernel and
the shared round budget while running the decomposed dynamics and the
termination counters.  Later steps decompose fresh inputs, rerun the short
cached schedule and reuse the kernels, which stay valid because they
depend only on the constant steady-phase update matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from ._exact import (
    ModularShadow,
    RationalShadow,
    exact_kernel,
    final_value_vector,
)
from .digraph import DiGraph, is_strongly_connected
from .errors import (
    DegenerateTrajectoryError,
    NotStronglyConnectedError,
    ProtocolError,
    ZeroDenominatorError,
)
from .hankel import (
    PolyCoefficients,
    _canonical_kernel,
    final_value,
    stacked_defect,
    testable_sizes,
)
from .pushsum import PHASE_INITIAL, PHASE_STEADY, WeightSet, make_weights
from .termination import (
    compute_dmax,
    first_stage_rounds,
    initial_termination_states,
    steady_stage_rounds,
    termination_round,
)

# generous ceiling on discovery rounds; hit only when the rank test never
# fires, which the retry loop treats as a degenerate draw
_MAX_DISCOVERY_ROUNDS_PER_STATE = 12


@dataclass
class ExecutionRecord:
    """Complete transcript of one consensus run (for audits and replays)."""

    graph: DiGraph
    n_components: int
    alpha0: np.ndarray  # (p+1, n): component rows, then the mass row
    beta0: np.ndarray
    w0s: list[WeightSet]  # per-trajectory round-0 weights
    steady: WeightSet
    alphas: np.ndarray  # (rounds+1, p+1, n): states at times 0..rounds
    betas: np.ndarray
    poly: list[PolyCoefficients]
    value_poly: list[PolyCoefficients]  # (z-1)-quotients used for outputs
    dmax: int
    k1: int
    outputs: np.ndarray  # (n, p)

    def alpha_history(self, node: int, traj: int) -> np.ndarray:
        """Recorded trajectory of one node (from round 1 on)."""
        return self.alphas[1:, traj, node]


@dataclass
class PrftpsSession:
    """One graph-bound consensus session with a cached round schedule."""

    graph: DiGraph
    seed: int | None = None
    detection: str = "exact"  # "exact": prime-field rank; "svd": thresholded
    rank_tol: float = 1e-8
    weight_spread: float = 1.0
    max_retries: int = 5
    poly: list[PolyCoefficients] | None = None
    value_poly: list[PolyCoefficients] | None = None
    dmax: int | None = None
    k_max: int | None = None
    rounds_log: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not is_strongly_connected(self.graph):
            raise NotStronglyConnectedError(
                "the session graph must be strongly connected"
            )
        if self.detection not in ("exact", "svd"):
            raise ValueError(f"detection must be 'exact' or 'svd', got {self.detection!r}")
        self._seeds = np.random.SeedSequence(self.seed)

    @property
    def discovered(self) -> bool:
        return self.poly is not None


def _decompose(inputs: np.ndarray, rng: np.random.Generator, spread: float):
    """Fresh random substate split; the transmitted alpha rows carry no
    information about the inputs on their own."""
    n, p = inputs.shape
    alpha0 = np.zeros((p + 1, n))
    beta0 = np.zeros((p + 1, n))
    for c in range(p):
        draw = rng.uniform(-spread, spread, n)
        alpha0[c] = draw
        beta0[c] = 2.0 * inputs[:, c] - draw
    beta0[p] = 2.0  # mass iteration starts at (0, 2) on every node
    return alpha0, beta0


def _round0(alpha, beta, w0s):
    """The randomized round: every trajectory has its own weight draw."""
    rows_a, rows_b = [], []
    for t, w in enumerate(w0s):
        ra, rb = _backend.decomposed_round(
            w.p, w.a_ab, w.a_ba, w.a_bb, alpha[t : t + 1], beta[t : t + 1]
        )
        rows_a.append(ra[0])
        rows_b.append(rb[0])
    return np.ascontiguousarray(rows_a), np.ascontiguousarray(rows_b)


def _round0_longdouble(alpha, beta, w0s):
    """Extended-precision variant; replays with large substate shifts keep
    cancellation error well under the trace tolerance."""
    rows_a, rows_b = [], []
    for t, w in enumerate(w0s):
        a = alpha[t].astype(np.longdouble)
        b = beta[t].astype(np.longdouble)
        ra = w.p.astype(np.longdouble) @ a + w.a_ab.astype(np.longdouble) * b
        rb = w.a_ba.astype(np.longdouble) * a + w.a_bb.astype(np.longdouble) * b
        rows_a.append(ra.astype(np.float64))
        rows_b.append(rb.astype(np.float64))
    return np.ascontiguousarray(rows_a), np.ascontiguousarray(rows_b)


def replay_rounds(
    graph: DiGraph,
    alpha0: np.ndarray,
    beta0: np.ndarray,
    w0s: list[WeightSet],
    steady: WeightSet,
    n_rounds: int,
    round0_longdouble: bool = False,
):
    """Rerun a fixed schedule, returning all states at times 0..n_rounds."""
    m, n = alpha0.shape
    alphas = np.empty((n_rounds + 1, m, n))
    betas = np.empty((n_rounds + 1, m, n))
    alphas[0], betas[0] = alpha0, beta0
    round0 = _round0_longdouble if round0_longdouble else _round0
    alpha, beta = round0(alpha0, beta0, w0s)
    alphas[1], betas[1] = alpha, beta
    if n_rounds > 1:
        history = np.empty((n_rounds - 1, m, n))
        alpha, beta = _backend.run_steady_rounds(
            steady.p, steady.a_ab, steady.a_ba, steady.a_bb,
            alpha, beta, n_rounds - 1, history,
        )
        alphas[2:] = history
        # beta snapshots follow from the recurrence; recompute cheaply
        for r in range(1, n_rounds):
            betas[r + 1] = steady.a_ba[None, :] * alphas[r] + steady.a_bb[None, :] * betas[r]
    return alphas, betas


def _compute_outputs(alphas, poly, n, p):
    outputs = np.empty((n, p))
    for j in range(n):
        mass = alphas[1:, p, j]
        for c in range(p):
            outputs[j, c] = final_value(alphas[1:, c, j], mass, poly[j])
    return outputs


def _network_budget(term, poly, detection):
    """Common round-budget bound once every node has crossed its threshold.

    Each node's max-consensus value at its stop round equals the largest
    frozen counter in the network (that equality is the protocol's safety
    guarantee and is asserted here), which makes (theta - 1)/2 a shared
    bound.  When every node detected the same degree, it coincides with
    the stop-round formula, which is cross-checked.
    """
    c_star = max(s.c_frozen for s in term)
    for j, s in enumerate(term):
        if s.theta_at_stop != c_star:
            raise ProtocolError(
                f"node {j} stopped at counter {s.theta_at_stop}, network max {c_star}"
            )
    dmax = (c_star - 1) // 2
    degrees = {p.degree for p in poly}
    if len(degrees) == 1:
        for j, s in enumerate(term):
            formula = compute_dmax(s.stop_round, poly[j].degree)
            if formula != dmax:
                raise ProtocolError(
                    f"node {j}: stop-round formula gives {formula}, counters give {dmax}"
                )
    return dmax


class _ExactKernelCache:
    """Per-size exact kernels, shared across nodes once verified.

    Generically every node detects the same recurrence (the update
    matrix's minimal polynomial), so one fraction-free solve serves the
    whole network; the modular shadow certifies the reuse.  Nodes whose
    data rejects the shared kernel get their own solve.
    """

    def __init__(self, shadow: ModularShadow, rationals: RationalShadow):
        self.shadow = shadow
        self.rationals = rationals
        self.shared: dict[int, list] = {}

    def kernel_for(self, node: int, size: int):
        cached = self.shared.get(size)
        if cached is not None:
            return cached
        seqs = [
            self.rationals.node_diffs(t, node)[: 2 * size - 1]
            for t in range(len(self.rationals.diffs))
        ]
        # single-trajectory solves are cheapest and almost always pin the
        # kernel; the stacked solve is the sound fallback
        for candidate in ([seqs[0]], [seqs[-1]], seqs):
            kernel = exact_kernel(candidate, size)
            if kernel is None:
                continue
            ints = _kernel_to_ints(kernel)
            if self.shadow.annihilates_node(ints, node):
                if self.shadow.annihilates_everywhere(ints):
                    self.shared[size] = kernel
                return kernel
        raise DegenerateTrajectoryError(
            f"node {node}: no monic recurrence of order {size - 1}"
        )


def _kernel_to_ints(kernel):
    """Common-denominator integer form for modular verification."""
    den = 1
    for v in kernel:
        d = int(v.denominator)
        den = den * d // _gcd_int(den, d)
    return [int(v.numerator) * (den // int(v.denominator)) for v in kernel]


def _gcd_int(a, b):
    while b:
        a, b = b, a % b
    return a


def _poly_pair_from_exact(kernel, size):
    """Spec kernel object plus the final-value quotient, both float."""
    beta = _canonical_kernel(np.array([float(v) for v in kernel]))
    spec = PolyCoefficients(degree=size - 1, beta=beta, defect_round=2 * size + 1)
    quot = final_value_vector(kernel)
    value = PolyCoefficients(
        degree=len(quot) - 1, beta=quot, defect_round=2 * size + 1
    )
    return spec, value


def _discover(graph, inputs, rng, rank_tol, spread, want_record, detection):
    n, p = inputs.shape
    m = p + 1
    alpha0, beta0 = _decompose(inputs, rng, spread)
    w0s = [make_weights(graph, PHASE_INITIAL, rng, spread) for _ in range(m)]
    steady = make_weights(graph, PHASE_STEADY)
    if detection == "exact":
        shadow = ModularShadow(w0s, steady, alpha0, beta0)
        kernels = _ExactKernelCache(shadow, RationalShadow(w0s, steady, alpha0, beta0))
    else:
        shadow = kernels = None

    snapshots_a = [alpha0.copy()]
    snapshots_b = [beta0.copy()]
    alpha, beta = alpha0, beta0
    term = initial_termination_states(n)
    poly: list[PolyCoefficients | None] = [None] * n
    value_poly: list[PolyCoefficients | None] = [None] * n
    found = [False] * n
    next_size = [1] * n
    dmax = None
    k1 = None
    round_cap = _MAX_DISCOVERY_ROUNDS_PER_STATE * (2 * n + 2)

    k = 0
    while True:
        if k == 0:
            alpha, beta = _round0(alpha, beta, w0s)
        else:
            alpha, beta = _backend.decomposed_round(
                steady.p, steady.a_ab, steady.a_ba, steady.a_bb, alpha, beta
            )
        snapshots_a.append(alpha.copy())
        snapshots_b.append(beta.copy())
        samples = k + 1

        if not all(found):
            if shadow is not None:
                shadow.advance(k)
                kernels.rationals.advance(k)
            hist = np.asarray(snapshots_a[1:])  # (samples, m, n)
            for j in range(n):
                while not found[j] and next_size[j] <= testable_sizes(samples):
                    size = next_size[j]
                    if shadow is not None:
                        if shadow.defect_at(j, size):
                            found[j] = True
                            kernel = kernels.kernel_for(j, size)
                            poly[j], value_poly[j] = _poly_pair_from_exact(kernel, size)
                        else:
                            next_size[j] += 1
                    else:
                        trajs = [hist[:, t, j] for t in range(m)]
                        deficient, kernel = stacked_defect(trajs, size, rank_tol)
                        if deficient:
                            found[j] = True
                            poly[j] = PolyCoefficients(
                                degree=size - 1, beta=kernel, defect_round=2 * size + 1
                            )
                            value_poly[j] = poly[j]
                        else:
                            next_size[j] += 1

        term = termination_round(term, graph, found)
        k += 1

        if k1 is None and all(s.stop_round is not None for s in term):
            dmax = _network_budget(term, poly, detection)
            k1 = first_stage_rounds(dmax)
            if k1 < k:
                raise ProtocolError(f"budget {k1} is below the {k} rounds already run")
        if k1 is not None and k >= k1:
            break
        if k > round_cap:
            raise DegenerateTrajectoryError(
                f"no rank defect within {round_cap} rounds"
            )

    alphas = np.asarray(snapshots_a)
    betas = np.asarray(snapshots_b)
    outputs = _compute_outputs(alphas, value_poly, n, p)
    record = None
    if want_record:
        record = ExecutionRecord(
            graph=graph, n_components=p, alpha0=alpha0, beta0=beta0,
            w0s=w0s, steady=steady, alphas=alphas, betas=betas,
            poly=list(poly), value_poly=list(value_poly),
            dmax=dmax, k1=k1, outputs=outputs,
        )
    return outputs, list(poly), list(value_poly), dmax, k1, record


def _cached_step(graph, inputs, rng, spread, value_poly, k_max):
    n, p = inputs.shape
    m = p + 1
    alpha0, beta0 = _decompose(inputs, rng, spread)
    w0s = [make_weights(graph, PHASE_INITIAL, rng, spread) for _ in range(m)]
    steady = make_weights(graph, PHASE_STEADY)
    n_rounds = 1 + k_max
    alphas, _ = replay_rounds(graph, alpha0, beta0, w0s, steady, n_rounds)
    return _compute_outputs(alphas, value_poly, n, p), n_rounds


def prftps_step(
    session: PrftpsSession,
    inputs,
    t: int,
    record: bool = False,
):
    """Run one consensus step and return every node's exact average.

    t=0 runs discovery and fills the session cache; t>=1 reruns the short
    cached schedule on freshly decomposed inputs.  Accepts per-node scalars
    (shape (n,)) or vectors (shape (n, p)); outputs match.  Degenerate
    draws are retried with fresh randomness up to the session's budget.
    """
    arr = np.asarray(inputs, dtype=np.float64)
    scalar = arr.ndim == 1
    if scalar:
        arr = arr[:, None]
    if arr.shape[0] != session.graph.n:
        raise ValueError(
            f"expected one input per node ({session.graph.n}), got {arr.shape[0]}"
        )
    if t == 0 and session.discovered:
        raise ValueError("discovery already ran for this session; pass t >= 1")
    if t > 0 and not session.discovered:
        raise ValueError("cached step requested before discovery (run t=0 first)")
    if record and t > 0:
        raise ValueError("recording is only supported for discovery steps")

    step_seed = session._seeds.spawn(1)[0]
    attempt_seeds = step_seed.spawn(session.max_retries + 1)
    last_error: Exception | None = None
    for attempt_seed in attempt_seeds:
        rng = np.random.default_rng(attempt_seed)
        try:
            if t == 0:
                outputs, poly, value_poly, dmax, k1, rec = _discover(
                    session.graph, arr, rng, session.rank_tol,
                    session.weight_spread, record, session.detection,
                )
                session.poly = poly
                session.value_poly = value_poly
                session.dmax = dmax
                session.k_max = steady_stage_rounds(dmax)
                session.rounds_log.append(k1)
            else:
                outputs, rounds = _cached_step(
                    session.graph, arr, rng, session.weight_spread,
                    session.value_poly, session.k_max,
                )
                rec = None
                session.rounds_log.append(rounds)
            result = outputs[:, 0] if scalar else outputs
            return (result, rec) if record else result
        except (DegenerateTrajectoryError, ZeroDenominatorError) as exc:
            last_error = exc
    raise DegenerateTrajectoryError(
        f"no usable run in {session.max_retries + 1} attempts"
    ) from last_error


def run_recorded(
    graph: DiGraph,
    inputs,
    seed: int | None = None,
    rank_tol: float = 1e-8,
    weight_spread: float = 1.0,
) -> ExecutionRecord:
    """Discovery run returning the full transcript (for privacy audits)."""
    session = PrftpsSession(
        graph=graph, seed=seed, rank_tol=rank_tol, weight_spread=weight_spread
    )
    _, record = prftps_step(session, inputs, 0, record=True)
    return record
