"""Distributed gradient descent driven by exact finite-time averaging.

Per step, every node feeds its local gradient through the consensus layer
(which returns the exact network-average gradient), mixes its decision
vector with in-neighbors through a row-stochastic matrix, and takes a
constant-stepsize descent step.  Exact averaging is what buys the linear
rate at a constant stepsize.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .digraph import DiGraph, is_strongly_connected, neighbor_sets
from .errors import NotStronglyConnectedError
from .prftps import PrftpsSession, prftps_step


@dataclass
class LeastSquaresObjective:
    """f(x) = ||A x - b||^2 with closed-form curvature bounds."""

    a: np.ndarray
    b: np.ndarray
    mu: float = field(init=False)
    lipschitz: float = field(init=False)

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        eigs = np.linalg.eigvalsh(self.a.T @ self.a)
        self.mu = 2.0 * float(eigs[0])
        self.lipschitz = 2.0 * float(eigs[-1])

    def value(self, x) -> float:
        r = self.a @ x - self.b
        return float(r @ r)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * self.a.T @ (self.a @ x - self.b)


def least_squares_instance(
    n: int, q: int, p: int, seed: int | np.random.Generator | None = None
) -> list[LeastSquaresObjective]:
    """Standard-normal data matrices and measurements, one block per node."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return [
        LeastSquaresObjective(a=rng.standard_normal((q, p)), b=rng.standard_normal(q))
        for _ in range(n)
    ]


def normal_equations_solution(objectives: list[LeastSquaresObjective]) -> np.ndarray:
    """Centralized minimizer of sum ||A_i x - b_i||^2 (the test oracle)."""
    gram = sum(o.a.T @ o.a for o in objectives)
    rhs = sum(o.a.T @ o.b for o in objectives)
    return np.linalg.solve(gram, rhs)


def stepsize_bound(objectives) -> float:
    """Conservative admissible-stepsize bound 1/(mu + L) with mu the worst
    strong-convexity modulus and L the worst gradient Lipschitz constant."""
    mu = min(o.mu for o in objectives)
    lip = max(o.lipschitz for o in objectives)
    return 1.0 / (mu + lip)


@dataclass(frozen=True)
class RowStochasticMixer:
    """Row-stochastic mixing matrix with its left Perron vector (normalized
    to sum n) and the contraction radius of the consensus-error map."""

    abar: np.ndarray
    perron_left: np.ndarray
    contraction: float


def make_mixer(g: DiGraph, rule: str = "uniform-in-neighbors") -> RowStochasticMixer:
    """Uniform averaging over in-neighbors plus self.

    Validates that the induced consensus-error operator is a strict
    contraction, which strong connectivity plus the positive diagonal
    guarantees.
    """
    if rule != "uniform-in-neighbors":
        raise ValueError(f"unknown mixing rule {rule!r}")
    if not is_strongly_connected(g):
        raise NotStronglyConnectedError("mixing requires a strongly connected digraph")
    nbrs = neighbor_sets(g)
    n = g.n
    abar = np.zeros((n, n))
    for i in range(n):
        w = 1.0 / (1.0 + len(nbrs.in_neighbors[i]))
        abar[i, i] = w
        for j in nbrs.in_neighbors[i]:
            abar[i, j] = w
    vals, vecs = np.linalg.eig(abar.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    u = np.real(vecs[:, idx])
    if u.sum() < 0:
        u = -u
    u = np.clip(u, 0.0, None)
    u *= n / u.sum()
    deviation_map = abar - np.outer(np.ones(n), u) / n
    contraction = float(np.abs(np.linalg.eigvals(deviation_map)).max())
    if contraction >= 1.0:
        raise NotStronglyConnectedError(
            f"consensus-error map is not a contraction (radius {contraction})"
        )
    return RowStochasticMixer(abar=abar, perron_left=u, contraction=contraction)


@dataclass
class OptimizerState:
    """Per-node decision vectors and the last averaged gradient."""

    x: np.ndarray  # (n, p)
    eta: float
    t: int = 0
    y: np.ndarray | None = None


def gd_step(
    state: OptimizerState,
    mixer: RowStochasticMixer,
    session: PrftpsSession,
    objectives,
) -> OptimizerState:
    """One outer iteration: average gradients exactly, mix, descend."""
    grads = np.array([obj.gradient(xi) for obj, xi in zip(objectives, state.x)])
    y = prftps_step(session, grads, state.t)
    x_next = mixer.abar @ state.x - state.eta * y
    return OptimizerState(x=x_next, eta=state.eta, t=state.t + 1, y=y)


@dataclass
class ConvergenceReport:
    """Per-step diagnostics of one optimization run."""

    residuals: list[float]
    consensus_errors: list[float]
    rounds_cumulative: list[int]
    x_star: np.ndarray
    x_final: np.ndarray
    eta: float
    eta_bound: float
    k1: int
    k_max: int
    eta_exceeds_bound: bool
    non_monotone: bool
    diverged: bool
    rate_slope: float | None
    tail_ratio_median: float | None

    def rows(self):
        """(t, cumulative rounds, normalized residual, consensus error)."""
        for t, (rounds, res, cons) in enumerate(
            zip(self.rounds_cumulative, self.residuals, self.consensus_errors)
        ):
            yield t, rounds, res, cons


def _normalized_residual(x: np.ndarray, x0_norms: np.ndarray, x_star: np.ndarray) -> float:
    ratios = np.linalg.norm(x - x_star, axis=1) / x0_norms
    return float(ratios.mean())


def _consensus_error(x: np.ndarray) -> float:
    return float(np.linalg.norm(x - x.mean(axis=0)))


def run(
    graph: DiGraph,
    objectives,
    eta: float = 0.1,
    steps: int = 200,
    seed: int | None = None,
    rank_tol: float = 1e-8,
    residual_floor: float = 1e-12,
) -> ConvergenceReport:
    """Run the full outer loop and fit the empirical rate.

    The normalized residual is the per-node distance to the centralized
    optimum, relative to its initial value and averaged over nodes (so the
    step-0 entry is exactly 1).  Rate fitting ignores points at the
    floating-point floor.
    """
    n = graph.n
    p = objectives[0].a.shape[1]
    rng = np.random.default_rng(seed)
    x_star = normal_equations_solution(objectives)
    mixer = make_mixer(graph)
    session = PrftpsSession(graph=graph, seed=seed, rank_tol=rank_tol)

    x0 = rng.standard_normal((n, p))
    x0_norms = np.linalg.norm(x0 - x_star, axis=1)
    if np.any(x0_norms == 0.0):
        raise ValueError("a node started exactly at the optimum; reseed")

    state = OptimizerState(x=x0, eta=eta)
    residuals = [1.0]
    consensus_errors = [_consensus_error(x0)]
    rounds = [0]
    for _ in range(steps):
        state = gd_step(state, mixer, session, objectives)
        residuals.append(_normalized_residual(state.x, x0_norms, x_star))
        consensus_errors.append(_consensus_error(state.x))
        rounds.append(rounds[-1] + session.rounds_log[-1])

    arr = np.asarray(residuals)
    finite = np.isfinite(arr)
    diverged = bool(not finite.all() or arr[-1] > arr[0])
    both = finite[1:] & finite[:-1]
    non_monotone = bool(
        not finite.all() or np.any(arr[1:][both] > 1.01 * arr[:-1][both])
    )
    live = np.where(finite & (arr > residual_floor))[0]
    rate_slope = None
    tail_ratio_median = None
    if live.size >= 4:
        tail = live[live.size // 2 :]
        rate_slope = float(np.polyfit(tail, np.log(arr[tail]), 1)[0])
        consecutive = tail[:-1][np.diff(tail) == 1]
        if consecutive.size:
            tail_ratio_median = float(
                np.median(arr[consecutive + 1] / arr[consecutive])
            )
    bound = stepsize_bound(objectives)
    return ConvergenceReport(
        residuals=residuals,
        consensus_errors=consensus_errors,
        rounds_cumulative=rounds,
        x_star=x_star,
        x_final=state.x,
        eta=eta,
        eta_bound=bound,
        k1=session.rounds_log[0] if session.rounds_log else 0,
        k_max=session.k_max if session.k_max is not None else 0,
        eta_exceeds_bound=eta >= bound,
        non_monotone=non_monotone,
        diverged=diverged,
        rate_slope=rate_slope,
        tail_ratio_median=tail_ratio_median,
    )
