"""Exact matrix permanents, permanental minors and the F matrix.

``permanent_ryser`` is the production path. It walks the subsets of columns in
Gray-code order, so consecutive row-sum vectors differ by a single column, and
accumulates the signed products with ``math.fsum`` (exactly rounded). The walk
is vectorized: the per-step column updates are stacked and prefix-summed,
which keeps the sequential Gray-code order while avoiding a Python-level loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np

from .errors import DimensionError, SizeError
from .matcore import as_square, check_psd

NAIVE_MAX_N = 9
RYSER_MAX_N = 30
F_MATRIX_MAX_N = 16
MINC_MAX_N = 6

# Gray-code steps processed per vectorized block.
_BLOCK = 1 << 16


@dataclass(frozen=True)
class PermanentValue:
    value: complex
    algorithm: str  # "naive" or "ryser"
    n: int

    def __complex__(self) -> complex:
        return complex(self.value)

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag


@dataclass(frozen=True)
class FMatrix:
    """``F[i, j] = A[i, j] * perm(A with row i and column j removed)``."""

    matrix: np.ndarray
    source_perm: complex


def _fsum_complex(terms: np.ndarray) -> complex:
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def _square_allow_empty(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 2 and arr.shape == (0, 0):
        return arr
    return as_square(arr)


def permanent_naive(a) -> PermanentValue:
    """Permanent straight from the definition, summing over all n! permutations."""
    a = _square_allow_empty(a)
    n = a.shape[0]
    if n > NAIVE_MAX_N:
        raise SizeError(f"naive permanent supports n <= {NAIVE_MAX_N}, got {n}")
    if n == 0:
        return PermanentValue(1.0 + 0.0j, "naive", 0)
    perms = np.array(list(permutations(range(n))), dtype=np.intp)
    terms = np.prod(a[np.arange(n), perms], axis=1)
    return PermanentValue(_fsum_complex(terms), "naive", n)


@lru_cache(maxsize=None)
def _gray_steps(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Column index flipped and its direction (+1 added, -1 removed) at steps 1 .. 2^n - 1."""
    return _gray_block(1, 1 << n)


def _gray_block(start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    k = np.arange(start, stop, dtype=np.int64)
    gray = k ^ (k >> 1)
    low_bit = k & -k
    col = np.frexp(low_bit.astype(np.float64))[1].astype(np.intp) - 1
    direction = np.where((gray >> col) & 1, 1.0, -1.0)
    return col, direction


def _ryser(a: np.ndarray) -> complex:
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(a[0, 0])
    total_steps = 1 << n
    cols_t = a.T  # cols_t[j] is column j
    partial: list[complex] = []
    row_sum = np.zeros(n, dtype=np.complex128)
    start = 1
    while start < total_steps:
        stop = min(start + _BLOCK, total_steps)
        if stop - start == total_steps - 1:
            col, direction = _gray_steps(n)
        else:
            col, direction = _gray_block(start, stop)
        sums = np.cumsum(cols_t[col] * direction[:, None], axis=0)
        sums += row_sum
        row_sum = sums[-1].copy()
        prods = np.prod(sums, axis=1)
        # subset size parity equals step parity
        if start % 2 == 1:
            prods[0::2] *= -1.0
        else:
            prods[1::2] *= -1.0
        partial.append(_fsum_complex(prods))
        start = stop
    total = _fsum_complex(np.array(partial))
    return total if n % 2 == 0 else -total


def permanent_ryser(a) -> PermanentValue:
    """Permanent via Ryser's inclusion-exclusion formula, O(2^n n)."""
    a = _square_allow_empty(a)
    n = a.shape[0]
    if n > RYSER_MAX_N:
        raise SizeError(f"Ryser permanent supports n <= {RYSER_MAX_N}, got {n}")
    return PermanentValue(_ryser(a), "ryser", n)


def perm(a) -> complex:
    """Shorthand for ``complex(permanent_ryser(a))``; the 0x0 permanent is 1."""
    return permanent_ryser(a).value


def permanent_minor(a, i: int, j: int) -> complex:
    """Permanent of ``a`` with row ``i`` and column ``j`` deleted (0-based indices)."""
    a = as_square(a)
    n = a.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"minor index ({i}, {j}) out of range for order {n}")
    sub = np.delete(np.delete(a, i, axis=0), j, axis=1)
    return perm(sub)


def f_matrix(a, psd_rtol: float = 1e-10) -> FMatrix:
    """Entrywise product of ``a`` with its matrix of permanental minors."""
    a = check_psd(a, psd_rtol)
    n = a.shape[0]
    if n > F_MATRIX_MAX_N:
        raise SizeError(f"f_matrix supports n <= {F_MATRIX_MAX_N}, got {n}")
    f = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            f[i, j] = a[i, j] * permanent_minor(a, i, j)
    return FMatrix(matrix=f, source_perm=perm(a))


def minc_sum_expansion(a, b) -> complex:
    """perm(A + B) expanded over pairs of increasing index sequences.

    Sums perm(A[alpha, beta]) * perm(B with rows alpha and columns beta removed)
    over all alpha, beta of equal length r = 0 .. n.
    """
    a = as_square(a, "A")
    b = as_square(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n > MINC_MAX_N:
        raise SizeError(f"Minc expansion supports n <= {MINC_MAX_N}, got {n}")
    idx = range(n)
    terms = []
    for r in range(n + 1):
        for rows in combinations(idx, r):
            keep_rows = [k for k in idx if k not in rows]
            for cols in combinations(idx, r):
                keep_cols = [k for k in idx if k not in cols]
                pa = perm(a[np.ix_(rows, cols)]) if r else 1.0
                pb = perm(b[np.ix_(keep_rows, keep_cols)]) if r < n else 1.0
                terms.append(pa * pb)
    return _fsum_complex(np.array(terms, dtype=np.complex128))
