"""NumPy reference implementation of the per-round update kernels.

Mirrors the compiled extension in `_kernels.pyx`; either backend may be
active (see `_backend`).  State blocks are ``(m, n)`` arrays: one row per
tracked trajectory, one column per node.
"""

from __future__ import annotations

import numpy as np


def decomposed_round(p_mat, a_ab, a_ba, a_bb, alpha, beta):
    """One synchronous round of the two-substate dynamics.

    alpha[t, i] <- sum_j p_mat[i, j] * alpha[t, j] + a_ab[i] * beta[t, i]
    beta[t, i]  <- a_ba[i] * alpha[t, i] + a_bb[i] * beta[t, i]
    """
    alpha_next = alpha @ p_mat.T + a_ab * beta
    beta_next = a_ba * alpha + a_bb * beta
    return alpha_next, beta_next


def baseline_round(p_mat, x):
    """One plain push-sum round: x[t, i] <- sum_j p_mat[i, j] * x[t, j]."""
    return x @ p_mat.T


def run_steady_rounds(p_mat, a_ab, a_ba, a_bb, alpha, beta, n_rounds, history):
    """Run `n_rounds` rounds, storing each post-round alpha block in
    ``history[r]`` (preallocated ``(n_rounds, m, n)``)."""
    for r in range(n_rounds):
        alpha, beta = decomposed_round(p_mat, a_ab, a_ba, a_bb, alpha, beta)
        history[r] = alpha
    return alpha, beta
