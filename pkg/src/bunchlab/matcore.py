"""Small dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The helpers here
validate them (finite entries, Hermitian, positive semidefinite, unit
diagonal) and provide the few factorizations the physics modules rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError, SizeError, ValidationError

# Default tolerances. Every public function accepts keyword overrides.
HERMITIAN_RTOL = 1e-12
HERMITIAN_INPUT_RTOL = 1e-8
PSD_RTOL = 1e-10
DIAG_ATOL = 1e-12
RANK_RTOL = 1e-10
UNIT_NORM_ATOL = 1e-10
MAX_EIG_ORDER = 64


@dataclass(frozen=True)
class HermitianEig:
    """Spectrum of a Hermitian matrix, eigenvalues ascending.

    Column ``k`` of ``eigenvectors`` belongs to ``eigenvalues[k]``; each column
    has its largest-magnitude component made real and positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array (copy-free when possible)."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def as_square(a, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def maxabs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two equally shaped matrices."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= rtol * max(maxabs(a), 1e-300))


def phase_fix(vec: np.ndarray) -> np.ndarray:
    """Rotate ``vec`` so its largest-magnitude component is real and positive.

    Near-ties (relative 1e-9) are resolved in favour of the lowest index, so
    the result does not depend on rounding noise in nearly flat vectors.
    """
    vec = np.asarray(vec, dtype=np.complex128)
    mags = np.abs(vec)
    top = mags.max()
    if top == 0.0:
        return vec.copy()
    idx = int(np.flatnonzero(mags >= top * (1.0 - 1e-9))[0])
    return vec * (abs(vec[idx]) / vec[idx])


def hermitian_eig(a, rtol: float = HERMITIAN_INPUT_RTOL) -> HermitianEig:
    """Full eigendecomposition of a Hermitian matrix (LAPACK ``heevd``).

    The input is symmetrized before factorization so that the result is a
    deterministic function of the input bits.
    """
    a = as_square(a)
    n = a.shape[0]
    if n > MAX_EIG_ORDER:
        raise SizeError(f"hermitian_eig supports n <= {MAX_EIG_ORDER}, got {n}")
    if not is_hermitian(a, rtol):
        raise ValidationError("matrix is not Hermitian within tolerance")
    sym = 0.5 * (a + a.conj().T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    v = np.column_stack([phase_fix(v[:, k]) for k in range(n)])
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def check_psd(a, rtol: float = PSD_RTOL, name: str = "matrix") -> np.ndarray:
    """Validate that ``a`` is Hermitian positive semidefinite and return it."""
    a = as_square(a, name)
    if not is_hermitian(a, HERMITIAN_INPUT_RTOL):
        raise ValidationError(f"{name} is not Hermitian")
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    if w[0] < -rtol * max(1.0, w[-1]):
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return a


def check_gram(
    s,
    psd_rtol: float = PSD_RTOL,
    herm_rtol: float = HERMITIAN_RTOL,
    diag_atol: float = DIAG_ATOL,
    name: str = "Gram matrix",
) -> np.ndarray:
    """Validate a distinguishability (Gram) matrix: Hermitian, p.s.d., unit diagonal."""
    s = as_square(s, name)
    if not is_hermitian(s, herm_rtol):
        raise ValidationError(f"{name} is not Hermitian")
    if np.max(np.abs(np.diag(s) - 1.0)) > diag_atol:
        raise ValidationError(f"{name} does not have a unit diagonal")
    return check_psd(s, psd_rtol, name)


def pivoted_cholesky(a, rank_rtol: float = RANK_RTOL, psd_rtol: float = PSD_RTOL) -> np.ndarray:
    """Rank-revealing Cholesky factor of a p.s.d. matrix.

    Returns ``C`` of shape ``(r, n)`` with ``C^H C = a``, where ``r`` is the
    numerical rank at threshold ``rank_rtol * lambda_max``. Pivots follow the
    largest remaining diagonal entry (lowest index on ties) and every pivot of
    the triangular factor is real and non-negative.
    """
    a = check_psd(a, psd_rtol)
    n = a.shape[0]
    lam_max = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[-1])
    threshold = rank_rtol * max(lam_max, 0.0)

    work = 0.5 * (a + a.conj().T)
    perm = np.arange(n)
    low = np.zeros((n, n), dtype=np.complex128)
    r = 0
    for k in range(n):
        diag = work.diagonal().real[k:]
        p = k + int(np.argmax(diag))
        if lam_max <= 0.0 or diag[p - k] <= threshold:
            break
        if p != k:
            work[[k, p], :] = work[[p, k], :]
            work[:, [k, p]] = work[:, [p, k]]
            low[[k, p], :k] = low[[p, k], :k]
            perm[[k, p]] = perm[[p, k]]
        pivot = np.sqrt(work[k, k].real)
        low[k, k] = pivot
        low[k + 1 :, k] = work[k + 1 :, k] / pivot
        col = low[k + 1 :, k]
        work[k + 1 :, k + 1 :] -= np.outer(col, col.conj())
        r += 1

    c = np.zeros((r, n), dtype=np.complex128)
    c[:, perm] = low[:, :r].conj().T
    return c


def cholesky_gram(s, rank_rtol: float = RANK_RTOL, **gram_tol) -> np.ndarray:
    """Factor a Gram matrix as ``S = C^H C``; the rows of ``C`` are the vectors u^k."""
    s = check_gram(s, **gram_tol)
    return pivoted_cholesky(s, rank_rtol)


def gram_from_vectors(vectors, atol: float = UNIT_NORM_ATOL) -> np.ndarray:
    """Overlap matrix ``S[i, j] = <v_i|v_j>`` of unit vectors (rows of ``vectors``)."""
    vecs = np.asarray(vectors, dtype=np.complex128)
    if vecs.ndim != 2 or vecs.shape[0] == 0:
        raise DimensionError("vectors must be a non-empty list of equal-length vectors")
    if not np.all(np.isfinite(vecs)):
        raise ValidationError("vectors have non-finite entries")
    norms = np.linalg.norm(vecs, axis=1)
    if np.max(np.abs(norms - 1.0)) > atol:
        raise ValidationError("all vectors must have unit norm")
    vecs = vecs / norms[:, None]
    s = vecs.conj() @ vecs.T
    s = 0.5 * (s + s.conj().T)
    np.fill_diagonal(s, 1.0)
    return s


def spectral_norm(a) -> float:
    """Largest singular value."""
    a = as_matrix(a)
    return float(np.linalg.norm(a, 2))


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_gram(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Gram matrix of ``n`` random unit vectors in ``C^d``."""
    v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return gram_from_vectors(v)


def random_psd(n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """``G^H G`` for a ``rank x n`` complex Gaussian ``G``."""
    g = rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n))
    a = g.conj().T @ g
    return 0.5 * (a + a.conj().T)
