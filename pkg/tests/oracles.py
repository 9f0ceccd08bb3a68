"""Independent reference implementations the tests check against.

Each oracle recomputes a quantity by a different route than the library
(closure matrices instead of traversal, dense matrix powers instead of
round kernels, eigendecompositions instead of Hankel scans), so agreement
is meaningful.
"""

import numpy as np


def closure_connected(n: int, edges) -> bool:
    """Strong connectivity via boolean transitive closure (Floyd-Warshall)."""
    reach = np.eye(n, dtype=bool)
    for dst, src in edges:
        reach[src, dst] = True
    for k in range(n):
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return bool(reach.all())


def all_digraphs(n: int):
    """Every digraph on n nodes (no self-loops), as edge frozensets."""
    pairs = [(j, i) for i in range(n) for j in range(n) if i != j]
    for mask in range(1 << len(pairs)):
        yield frozenset(p for b, p in enumerate(pairs) if mask >> b & 1)


def power_iterate(matrix: np.ndarray, vec: np.ndarray, rounds: int) -> np.ndarray:
    out = vec.astype(np.float64).copy()
    for _ in range(rounds):
        out = matrix @ out
    return out


def central_difference_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def expected_defect_size(ph: np.ndarray, x1: np.ndarray, node: int,
                         coef_tol: float = 1e-10) -> int:
    """Defect size predicted from the update matrix's eigenstructure.

    The recorded difference sequence is a sum of modes; its numerical
    recurrence order is the number of distinct eigenvalues whose
    coefficient in the differences is non-negligible.  The defect shows up
    one size above that order.
    """
    dim = ph.shape[0]
    vals, vecs = np.linalg.eig(ph)
    coeffs = np.linalg.solve(vecs, x1.astype(complex))
    # difference-sequence coefficient of mode m observed at `node`
    weights = np.abs(vecs[node, :] * coeffs * (vals - 1.0))
    scale = weights.max()
    # group numerically equal eigenvalues, keep excited ones
    excited = []
    for lam, w in zip(vals, weights):
        if w <= coef_tol * scale:
            continue
        if not any(abs(lam - mu) < 1e-9 for mu in excited):
            excited.append(lam)
    return len(excited) + 1


def simulate_counters(in_neighbors, defect_round, total_rounds):
    """Literal re-simulation of the counter/stability protocol.

    defect_round[j] is the 1-based round at whose end node j reports its
    defect; returns per-node dicts with the full trace.
    """
    n = len(in_neighbors)
    c = [0] * n
    theta = [0] * n
    r = [0] * n
    frozen = [None] * n
    stop = [None] * n
    theta_at_stop = [None] * n
    trace = []
    for k in range(1, total_rounds + 1):
        new_c = [frozen[j] if frozen[j] is not None else c[j] + 1 for j in range(n)]
        new_frozen = list(frozen)
        for j in range(n):
            if frozen[j] is None and defect_round[j] is not None and k >= defect_round[j]:
                new_frozen[j] = new_c[j]
        new_theta = [
            max(max(theta[i], new_c[i]) for i in set(in_neighbors[j]) | {j})
            for j in range(n)
        ]
        new_r = [0 if new_theta[j] != theta[j] else r[j] + 1 for j in range(n)]
        for j in range(n):
            if stop[j] is None and new_frozen[j] is not None and new_r[j] == new_frozen[j]:
                stop[j] = k
                theta_at_stop[j] = new_theta[j]
        c, theta, r, frozen = new_c, new_theta, new_r, new_frozen
        trace.append({"c": list(c), "theta": list(theta), "r": list(r)})
    return {
        "trace": trace,
        "frozen": frozen,
        "stop": stop,
        "theta_at_stop": theta_at_stop,
    }
