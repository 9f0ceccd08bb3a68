"""Exact trajectory arithmetic: prime-field rank detection and rational
recurrence extraction.

Every quantity in a run is a dyadic rational (float64 inputs and weights),
so the dynamics can be mirrored exactly.  Two tools come out of that:

- Rank detection modulo two fixed 31-bit primes.  A rational rank drop
  survives reduction mod every prime, while a spurious modular drop would
  need both primes to divide the same nonzero minor.  This sidesteps the
  floating-point rank test entirely, whose threshold provably cannot
  separate the defect from the noise floor once the trajectory's spectrum
  spans many orders of magnitude.

- The exact recurrence kernel at the detected size, found by fraction-free
  elimination over the rational trajectory.  Its quotient by (z - 1) is
  the final-value vector; unlike a floating-point least-squares kernel it
  annihilates every trajectory of the same steady matrix, not just the
  window it was fitted on.
"""

from __future__ import annotations

import numpy as np

try:
    from gmpy2 import mpq, mpz
except ImportError:  # pure-Python fallback; slower but identical results
    from fractions import Fraction as mpq

    mpz = int

# both verified prime; products of two residues fit comfortably in int64
PRIMES = (2147483647, 2147483629)


def float_to_mod(values, p: int) -> np.ndarray:
    """Exact embedding of float64 values into F_p (values are rationals
    with power-of-two denominators)."""
    flat = np.asarray(values, dtype=np.float64).reshape(-1)
    out = np.empty(flat.shape, dtype=np.int64)
    for idx, v in enumerate(flat):
        num, den = float(v).as_integer_ratio()
        out[idx] = (num % p) * pow(den % p, p - 2, p) % p
    return out.reshape(np.shape(values))


def mod_round(p_mat, a_ab, a_ba, a_bb, alpha, beta, p: int):
    """Modular mirror of the decomposed round; states are (m, n) residues."""
    prod = (p_mat[None, :, :] * alpha[:, None, :]) % p
    new_a = (prod.sum(axis=2) + a_ab[None, :] * beta) % p
    new_b = (a_ba[None, :] * alpha + a_bb[None, :] * beta) % p
    return new_a, new_b


def rank_deficient(stack: np.ndarray, p: int) -> bool:
    """True iff the stacked matrix has column rank below its column count.

    Plain Gaussian elimination in F_p; any column without a pivot proves
    the deficiency, so the scan exits early.
    """
    m = (stack % p).astype(np.int64)
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r >= rows:
            return True
        col = m[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            return True
        piv = r + int(nz[0])
        if piv != r:
            m[[r, piv], c:] = m[[piv, r], c:]
        inv = pow(int(m[r, c]), p - 2, p)
        m[r, c:] = (m[r, c:] * inv) % p
        below = m[r + 1 :, c]
        mask = below != 0
        if mask.any():
            m[r + 1 :, c:][mask] = (
                m[r + 1 :, c:][mask] - below[mask, None] * m[r, c:][None, :]
            ) % p
        r += 1
    return False


class ModularShadow:
    """Per-prime exact copies of a run's trajectories.

    Advanced round by round in lockstep with the float64 dynamics; exposes
    the stacked difference-Hankel deficiency test used for defect
    detection.
    """

    def __init__(self, w0s, steady, alpha0, beta0):
        self.states = []
        self.weights = []
        self.steady = []
        self.diffs = []  # per prime: list of (m, n) residue diff blocks
        self.prev = []
        for p in PRIMES:
            w0_mod = [
                (
                    float_to_mod(w.p, p),
                    float_to_mod(w.a_ab, p),
                    float_to_mod(w.a_ba, p),
                    float_to_mod(w.a_bb, p),
                )
                for w in w0s
            ]
            steady_mod = (
                float_to_mod(steady.p, p),
                float_to_mod(steady.a_ab, p),
                float_to_mod(steady.a_ba, p),
                float_to_mod(steady.a_bb, p),
            )
            self.weights.append(w0_mod)
            self.steady.append(steady_mod)
            self.states.append(
                (float_to_mod(alpha0, p), float_to_mod(beta0, p))
            )
            self.diffs.append([])
            self.prev.append(None)

    def advance(self, round_index: int) -> None:
        for idx, p in enumerate(PRIMES):
            alpha, beta = self.states[idx]
            if round_index == 0:
                rows_a, rows_b = [], []
                for t, (pw, wa, wb, wc) in enumerate(self.weights[idx]):
                    na, nb = mod_round(
                        pw, wa, wb, wc, alpha[t : t + 1], beta[t : t + 1], p
                    )
                    rows_a.append(na[0])
                    rows_b.append(nb[0])
                alpha, beta = np.array(rows_a), np.array(rows_b)
            else:
                pw, wa, wb, wc = self.steady[idx]
                alpha, beta = mod_round(pw, wa, wb, wc, alpha, beta, p)
            self.states[idx] = (alpha, beta)
            if self.prev[idx] is not None:
                self.diffs[idx].append((alpha - self.prev[idx]) % p)
            self.prev[idx] = alpha

    def defect_at(self, node: int, size: int) -> bool:
        """Stacked difference Hankels of one node are rank-deficient at
        `size` in both prime fields.

        Full rank in the first field already certifies full rational rank
        (reduction can only lose rank), so the second field is consulted
        only to rule out a spurious modular drop.
        """
        for idx, p in enumerate(PRIMES):
            diffs = np.asarray(self.diffs[idx])  # (n_diffs, m, n)
            if diffs.shape[0] < 2 * size - 1:
                raise ValueError(f"size {size} needs {2 * size - 1} differences")
            blocks = []
            for t in range(diffs.shape[1]):
                seq = np.ascontiguousarray(diffs[: 2 * size - 1, t, node])
                blocks.append(
                    np.lib.stride_tricks.sliding_window_view(seq, size)
                )
            if not rank_deficient(np.vstack(blocks), p):
                return False
        return True

    def _annihilation_residuals(self, vec_ints, idx, node=None):
        p = PRIMES[idx]
        size = len(vec_ints)
        vec = np.array([v % p for v in vec_ints], dtype=np.int64)
        diffs = np.asarray(self.diffs[idx])
        nodes = range(diffs.shape[2]) if node is None else (node,)
        for t in range(diffs.shape[1]):
            for j in nodes:
                seq = np.ascontiguousarray(diffs[:, t, j])
                windows = np.lib.stride_tricks.sliding_window_view(seq, size)
                acc = np.zeros(windows.shape[0], dtype=np.int64)
                for c in range(size):  # stay within int64 throughout
                    acc = (acc + vec[c] * windows[:, c]) % p
                if np.any(acc):
                    return False
        return True

    def annihilates_node(self, coeffs, node: int) -> bool:
        """The integer vector kills all of one node's difference sequences
        at every shift, mod both primes."""
        return all(
            self._annihilation_residuals([int(c) for c in coeffs], idx, node)
            for idx in range(len(PRIMES))
        )

    def annihilates_everywhere(self, coeffs) -> bool:
        """As `annihilates_node`, but across the whole network."""
        return all(
            self._annihilation_residuals([int(c) for c in coeffs], idx)
            for idx in range(len(PRIMES))
        )

def _to_mpq(value: float) -> "mpq":
    num, den = float(value).as_integer_ratio()
    return mpq(num, den)


class RationalShadow:
    """Exact rational mirror of the dynamics, kept only as long as the
    defect scan needs samples."""

    def __init__(self, w0s, steady, alpha0, beta0):
        def conv_mat(a):
            return [[_to_mpq(v) for v in row] for row in np.atleast_2d(a)]

        def conv_vec(a):
            return [_to_mpq(v) for v in np.asarray(a)]

        self.w0s = [
            (conv_mat(w.p), conv_vec(w.a_ab), conv_vec(w.a_ba), conv_vec(w.a_bb))
            for w in w0s
        ]
        self.steady = (
            conv_mat(steady.p),
            conv_vec(steady.a_ab),
            conv_vec(steady.a_ba),
            conv_vec(steady.a_bb),
        )
        self.alpha = [conv_vec(row) for row in alpha0]
        self.beta = [conv_vec(row) for row in beta0]
        self.prev = None
        self.diffs: list[list[list["mpq"]]] = [
            [] for _ in range(len(self.alpha))
        ]  # per trajectory: list of per-round (n,) diffs

    def advance(self, round_index: int) -> None:
        n = len(self.alpha[0])
        new_alpha, new_beta = [], []
        for t in range(len(self.alpha)):
            pw, a_ab, a_ba, a_bb = self.w0s[t] if round_index == 0 else self.steady
            at, bt = self.alpha[t], self.beta[t]
            na = [
                sum(pw[i][j] * at[j] for j in range(n)) + a_ab[i] * bt[i]
                for i in range(n)
            ]
            nb = [a_ba[i] * at[i] + a_bb[i] * bt[i] for i in range(n)]
            new_alpha.append(na)
            new_beta.append(nb)
        if self.prev is not None:
            for t in range(len(new_alpha)):
                self.diffs[t].append(
                    [new_alpha[t][i] - self.prev[t][i] for i in range(n)]
                )
        self.prev = new_alpha
        self.alpha, self.beta = new_alpha, new_beta

    def node_diffs(self, traj: int, node: int) -> list["mpq"]:
        return [row[node] for row in self.diffs[traj]]


def _clear_denominators(rows):
    """Scale a rational matrix row-wise to integers (row scaling preserves
    the kernel)."""
    out = []
    for row in rows:
        den = mpz(1)
        for v in row:
            d = mpz(v.denominator)
            den = den * d // _gcd(den, d)
        out.append([mpz(v.numerator) * (den // mpz(v.denominator)) for v in row])
    return out


def _gcd(a, b):
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def _bareiss_solve(int_rows, m):
    """Solve A[:, :m-1] y = -A[:, m-1] exactly over the integers.

    Fraction-free forward elimination with row pivoting, rational back
    substitution.  Returns the monic kernel vector (y..., 1) as mpq, or
    None when the system is rank-deficient or inconsistent (the caller
    falls back to richer data).
    """
    a = [row[:] for row in int_rows]
    rows = len(a)
    cols = m
    if rows < m - 1:
        return None
    prev_pivot = mpz(1)
    pivot_rows = []
    r = 0
    for c in range(m - 1):
        piv = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if piv is None:
            return None
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, rows):
            for cc in range(c + 1, cols):
                a[i][cc] = (a[r][c] * a[i][cc] - a[i][c] * a[r][cc]) // prev_pivot
            a[i][c] = mpz(0)
        prev_pivot = a[r][c]
        pivot_rows.append((r, c))
        r += 1
    # consistency: remaining rows must have vanished entirely
    for i in range(r, rows):
        if any(v != 0 for v in a[i]):
            return None
    kernel = [mpq(0)] * m
    kernel[m - 1] = mpq(1)
    for rr, cc in reversed(pivot_rows):
        acc = mpq(0)
        for c2 in range(cc + 1, m):
            acc += mpq(a[rr][c2]) * kernel[c2]
        kernel[cc] = -acc / mpq(a[rr][cc])
    return kernel


def exact_kernel(diff_seqs, size: int):
    """Exact monic kernel of the stacked difference Hankels at `size`.

    diff_seqs: per-trajectory exact difference sequences (>= 2*size-1
    entries each).  Returns mpq coefficients (low order first, last = 1)
    or None when the stacked system does not pin a monic kernel.
    """
    rows = []
    for seq in diff_seqs:
        if len(seq) < 2 * size - 1:
            raise ValueError(f"size {size} needs {2 * size - 1} differences")
        for r in range(size):
            rows.append(list(seq[r : r + size]))
    return _bareiss_solve(_clear_denominators(rows), size)


def final_value_vector(kernel, unit_root_tol: float = 1e-12) -> np.ndarray:
    """Float cast of the dot-product vector that extracts the limit.

    The exact difference-recurrence kernel either already excludes the
    unit root (weights whose columns sum to one exactly) and is itself the
    final-value vector, or it carries a root within rounding distance of
    one (float-perturbed weights) that must be divided out.  An exact
    Newton step at z=1 tells the cases apart; the synthetic-division
    remainder it corresponds to is dropped.
    """
    degree = len(kernel) - 1
    quot = [mpq(0)] * degree
    carry = mpq(kernel[degree])
    for i in range(degree - 1, -1, -1):
        quot[i] = carry
        carry = carry + mpq(kernel[i])
    remainder = carry  # = kernel evaluated at 1
    derivative = sum(mpq(i) * mpq(kernel[i]) for i in range(1, degree + 1))
    if derivative != 0 and abs(remainder / derivative) < unit_root_tol:
        return np.array([float(q) for q in quot], dtype=np.float64)
    return np.array([float(q) for q in kernel], dtype=np.float64)
