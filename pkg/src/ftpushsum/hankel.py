"""Finite-time final-value extraction from recorded trajectories.

A node's alpha trajectory (recorded from round 1 on) satisfies a linear
recurrence once the steady weights are active.  Building Hankel matrices of
successive differences and watching for the first rank defect recovers the
recurrence coefficients; a ratio of dot products against them then yields
the exact limit of the value/mass ratio without waiting for convergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTrajectoryError, ZeroDenominatorError

DEFAULT_RANK_TOL = 1e-8

# a Hankel of size m is only tested once 2m+1 raw samples are available;
# the frozen counter value 2*(D_j+1)+1 and every downstream round-count
# identity hinge on this data rule
def testable_sizes(n_samples: int) -> int:
    """Largest Hankel size testable with `n_samples` raw samples."""
    return (n_samples - 1) // 2


class Trajectory:
    """Append-only scalar sample sequence, indexed from round 1."""

    def __init__(self, samples=()):
        self._samples = [float(s) for s in samples]

    def append(self, value: float) -> None:
        self._samples.append(float(value))

    def extend(self, values) -> None:
        for v in values:
            self.append(v)

    def __len__(self) -> int:
        return len(self._samples)

    def as_array(self) -> np.ndarray:
        return np.asarray(self._samples, dtype=np.float64)


@dataclass(frozen=True)
class PolyCoefficients:
    """Recurrence data of one node: degree, canonical kernel vector and the
    sample count consumed when the defect was first detectable."""

    degree: int
    beta: np.ndarray
    defect_round: int


def _as_samples(t) -> np.ndarray:
    if isinstance(t, Trajectory):
        return t.as_array()
    return np.asarray(t, dtype=np.float64)


def difference_sequence(t) -> np.ndarray:
    """Successive differences: element m is samples[m+1] - samples[m]."""
    samples = _as_samples(t)
    if samples.size < 2:
        raise ValueError(f"need at least 2 samples, got {samples.size}")
    return np.diff(samples)


def hankel_matrix(s, k: int) -> np.ndarray:
    """(k+1) x (k+1) Hankel matrix with entry (r, c) = s[r+c]."""
    s = np.asarray(s, dtype=np.float64)
    if s.size < 2 * k + 1:
        raise ValueError(f"need {2 * k + 1} elements for dimension {k}, got {s.size}")
    return np.lib.stride_tricks.sliding_window_view(s[: 2 * k + 1], k + 1).copy()


def _canonical_kernel(v: np.ndarray) -> np.ndarray:
    """Unit norm with the first significant entry positive."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm > 0:
        v = v / norm
    significant = np.abs(v) > 1e-8 * max(np.abs(v).max(), 1e-300)
    idx = int(np.argmax(significant))
    if v[idx] < 0:
        v = -v
    return v


def _defect(h: np.ndarray, tol: float) -> tuple[bool, np.ndarray]:
    """Rank-deficiency test via the smallest/largest singular value ratio;
    returns the canonical right-kernel candidate as well."""
    u, s, vh = np.linalg.svd(h)
    if s[0] == 0.0:
        return True, _canonical_kernel(np.eye(h.shape[1])[0])
    ratio = s[-1] / s[0]
    return bool(ratio < tol), _canonical_kernel(vh[-1])


def _difference_hankel(samples: np.ndarray, size: int) -> np.ndarray:
    diffs = np.diff(samples[: 2 * size])
    return hankel_matrix(diffs, size - 1)


def first_defect(t1, t2, tol: float = DEFAULT_RANK_TOL) -> PolyCoefficients | None:
    """Scan growing Hankel sizes until both difference matrices lose rank.

    Rank deficiency is monotone in the size, so the answer is the smallest
    size at which both matrices are deficient (the mass iteration often
    settles earlier than the value iteration, e.g. on symmetric graphs).
    Returns None while more data is needed.  The kernel comes from the
    value-iteration (l=1) matrix; it must annihilate the mass differences
    too, otherwise the two matrices share no kernel at this size — a
    measure-zero initial condition reported as degenerate so the caller
    can re-randomize.
    """
    s1 = _as_samples(t1)
    s2 = _as_samples(t2)
    if s1.size != s2.size:
        raise ValueError("trajectories must grow in lockstep")
    m_max = testable_sizes(s1.size)
    for m in range(1, m_max + 1):
        deficient1, kernel = _defect(_difference_hankel(s1, m), tol)
        if not deficient1:
            continue
        deficient2, _ = _defect(_difference_hankel(s2, m), tol)
        if not deficient2:
            continue
        h2 = _difference_hankel(s2, m)
        scale = float(np.linalg.norm(h2))
        residual = float(np.linalg.norm(h2 @ kernel))
        if residual > max(tol, 1e-7) * max(scale, 1e-300):
            raise DegenerateTrajectoryError(
                f"value-iteration kernel at size {m} does not annihilate the "
                f"mass differences (residual {residual:.3e})"
            )
        return PolyCoefficients(degree=m - 1, beta=kernel, defect_round=2 * m + 1)
    return None


def stacked_defect(trajectories, size: int, tol: float) -> tuple[bool, np.ndarray | None]:
    """Joint rank test at one size across several trajectories.

    Stacks the per-trajectory difference Hankels, so a defect certifies a
    single kernel annihilating every sequence at once (components that are
    identically zero or settle early cannot poison the kernel).
    """
    blocks = []
    for t in trajectories:
        samples = _as_samples(t)
        if samples.size < 2 * size + 1:
            raise ValueError(f"size {size} needs {2 * size + 1} samples, got {samples.size}")
        blocks.append(_difference_hankel(samples, size))
    deficient, kernel = _defect(np.vstack(blocks), tol)
    return (True, kernel) if deficient else (False, None)


def stacked_kernel(trajectories, size: int) -> tuple[float, np.ndarray]:
    """Best annihilating vector of the given size across trajectories.

    Uses every available difference window (tall Hankel blocks), so the
    kernel is the least-squares-optimal recurrence over the whole record.
    Returns (singular-value ratio, canonical kernel); no thresholding.
    """
    blocks = []
    for t in trajectories:
        diffs = np.diff(_as_samples(t))
        if diffs.size < size:
            raise ValueError(f"need at least {size} differences, got {diffs.size}")
        blocks.append(np.lib.stride_tricks.sliding_window_view(diffs, size))
    stack = np.vstack(blocks)
    u, s, vh = np.linalg.svd(stack)
    ratio = 0.0 if s[0] == 0.0 else float(s[-1] / s[0])
    return ratio, _canonical_kernel(vh[-1])


def first_defect_stacked(trajectories, tol: float = DEFAULT_RANK_TOL) -> PolyCoefficients | None:
    """Smallest size at which the stacked difference Hankels lose rank."""
    n_samples = min(len(_as_samples(t)) for t in trajectories)
    for m in range(1, testable_sizes(n_samples) + 1):
        deficient, kernel = stacked_defect(trajectories, m, tol)
        if deficient:
            return PolyCoefficients(degree=m - 1, beta=kernel, defect_round=2 * m + 1)
    return None


def final_value(t1, t2, poly: PolyCoefficients, zero_tol: float = 1e-12) -> float:
    """Exact limit of the value/mass trajectory ratio.

    Dot products of the first degree+1 samples of both trajectories
    against the kernel vector; the transient modes are annihilated, so the
    ratio equals the network average of the decomposed inputs.
    """
    need = poly.degree + 1
    s1 = _as_samples(t1)
    s2 = _as_samples(t2)
    if s1.size < need or s2.size < need:
        raise ValueError(f"need {need} samples, got {s1.size} and {s2.size}")
    num = float(poly.beta @ s1[:need])
    den = float(poly.beta @ s2[:need])
    scale = float(np.linalg.norm(s2[:need])) + 1.0
    if abs(den) <= zero_tol * scale:
        raise ZeroDenominatorError(
            f"mass dot product {den:.3e} below tolerance; kernel is degenerate"
        )
    return num / den
