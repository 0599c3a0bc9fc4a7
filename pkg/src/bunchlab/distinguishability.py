"""Partial distinguishability: internal states, perturbations and bunching.

For photons in input modes ``0..n-1`` with Gram matrix
``S[i, j] = <phi_i|phi_j>``, the probability that all of them are detected in
the output subset behind ``H`` is ``perm(H * S)`` (entrywise product). This
index order matches the column-input convention of
:mod:`bunchlab.interferometry` and is checked against the Fock-space oracle.

Around the indistinguishable point ``S = ones`` the first-order change of the
probability vanishes and the second-order change is governed by the F matrix
of ``H``: for an orthogonal perturbation with ``Delta = ones`` the
coefficient of ``epsilon^2`` is ``v^H F v - perm(H)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DimensionError, NumericError, ValidationError
from .interferometry import BunchingSetup
from .matcore import (
    UNIT_NORM_ATOL,
    as_square,
    check_gram,
    check_psd,
    gram_from_vectors,
    hermitian_eig,
)
from .permanent import F_MATRIX_MAX_N, f_matrix, perm

IMAG_RTOL = 1e-10
PROB_SLACK = 1e-10
DEGENERACY_RTOL = 1e-10


@dataclass(frozen=True)
class InternalStateFamily:
    """``n`` unit vectors in ``C^d``, one internal state per photon (rows)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=np.complex128))
        if np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0)) > UNIT_NORM_ATOL:
            raise ValidationError("internal states must have unit norm")
        object.__setattr__(self, "vectors", v)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def gram(self) -> np.ndarray:
        return gram_from_vectors(self.vectors)


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation ``phi0 + epsilon * v_i * eta_i`` applied to photon ``i``.

    Give either ``delta`` (the Gram matrix of the eta_i) or ``etas`` (the
    vectors themselves, rows). ``orthogonal`` asserts ``<eta_i|phi0> = 0``.
    """

    epsilon: float
    v: np.ndarray
    delta: np.ndarray | None = None
    etas: np.ndarray | None = None
    orthogonal: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValidationError("epsilon must be non-negative")
        v = np.asarray(self.v, dtype=np.complex128).ravel()
        if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_ATOL:
            raise ValidationError("direction vector v must have unit norm")
        object.__setattr__(self, "v", v)
        if self.etas is not None:
            etas = np.atleast_2d(np.asarray(self.etas, dtype=np.complex128))
            if etas.shape[0] != v.size:
                raise DimensionError("need one eta vector per photon")
            object.__setattr__(self, "etas", etas)
            if self.delta is None:
                object.__setattr__(self, "delta", gram_from_vectors(etas))
        if self.delta is None:
            raise ValidationError("either delta or etas must be given")
        delta = check_gram(self.delta, name="perturbation Gram matrix")
        if delta.shape[0] != v.size:
            raise DimensionError("delta and v sizes differ")
        object.__setattr__(self, "delta", delta)

    @property
    def n(self) -> int:
        return self.v.size

    def with_epsilon(self, epsilon: float) -> "PerturbationSpec":
        return PerturbationSpec(epsilon, self.v, self.delta, self.etas, self.orthogonal)


@dataclass(frozen=True)
class Directions:
    """Extreme second-order perturbation weights of a bunching matrix."""

    v_max: np.ndarray
    v_min: np.ndarray
    lambda_max: float
    lambda_min: float
    perm_h: float
    degenerate_max: bool
    degenerate_min: bool
    F: np.ndarray


@dataclass
class ScanResult:
    epsilon: np.ndarray
    p_bunch: np.ndarray
    ratio: np.ndarray
    indistinguishability: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def argmax_index(self) -> int:
        return int(np.argmax(self.ratio))

    @property
    def argmax_epsilon(self) -> float:
        return float(self.epsilon[self.argmax_index])

    def rows(self):
        yield from zip(self.epsilon, self.p_bunch, self.ratio, self.indistinguishability)


def _h_of(h) -> np.ndarray:
    if isinstance(h, BunchingSetup):
        return h.H
    return as_square(h, "H")


def bunching_probability(h, s, validate: bool = True) -> float:
    """Probability that all photons end up in the detected subset: perm(H * S)."""
    h = _h_of(h)
    s = check_gram(s) if validate else as_square(s, "S")
    if h.shape != s.shape:
        raise DimensionError(f"H is {h.shape} but S is {s.shape}")
    value = perm(h * s)
    if abs(value.imag) > IMAG_RTOL * (1.0 + abs(value)):
        raise NumericError(f"bunching probability has imaginary part {value.imag:.3e}")
    p = value.real
    if not -PROB_SLACK <= p <= 1.0 + PROB_SLACK:
        raise NumericError(f"bunching probability {p!r} outside [0, 1]")
    # rounding inside the slack is clamped so callers always see a probability
    return float(min(max(p, 0.0), 1.0))


def indistinguishability(s) -> float:
    """perm(S) / n!, equal to 1 for identical internal states."""
    s = check_gram(s)
    n = s.shape[0]
    if n > F_MATRIX_MAX_N:
        raise ValidationError(f"indistinguishability supports n <= {F_MATRIX_MAX_N}")
    return float(perm(s).real / math.factorial(n))


def perturbed_states(phi0, spec: PerturbationSpec) -> InternalStateFamily:
    """Normalized states ``phi0 + epsilon v_i eta_i`` (explicit eta vectors required)."""
    phi0 = np.asarray(phi0, dtype=np.complex128).ravel()
    if abs(np.linalg.norm(phi0) - 1.0) > UNIT_NORM_ATOL:
        raise ValidationError("phi0 must have unit norm")
    if spec.etas is None:
        raise ValidationError("perturbed_states needs explicit eta vectors")
    if spec.etas.shape[1] != phi0.size:
        raise DimensionError("eta vectors and phi0 have different dimensions")
    raw = phi0[None, :] + spec.epsilon * spec.v[:, None] * spec.etas
    norms = np.linalg.norm(raw, axis=1)
    if np.any(norms < 1e-12):
        raise DegenerateError("perturbation cancels phi0 for some photon")
    return InternalStateFamily(raw / norms[:, None])


def perturbed_gram(spec: PerturbationSpec) -> np.ndarray:
    """Closed-form Gram matrix of orthogonally perturbed states (no truncation)."""
    if not spec.orthogonal:
        raise ValidationError("closed form requires eta_i orthogonal to phi0")
    e2 = spec.epsilon**2
    v = spec.v
    num = 1.0 + e2 * np.outer(v.conj(), v) * spec.delta
    scale = np.sqrt(1.0 + e2 * np.abs(v) ** 2)
    s = num / np.outer(scale, scale)
    s = 0.5 * (s + s.conj().T)
    np.fill_diagonal(s, 1.0)
    return s


def interpolation_gram(n: int, epsilon: float) -> np.ndarray:
    """Uniform mixing towards mutually orthogonal states; identity at epsilon = sqrt(n)."""
    if n < 1:
        raise ValidationError("n must be positive")
    if epsilon < 0 or epsilon > math.sqrt(n) * (1 + 1e-15):
        raise ValidationError(f"epsilon must lie in [0, sqrt(n)] = [0, {math.sqrt(n):.6g}]")
    off = max(1.0 - epsilon**2 / n, 0.0)
    s = np.full((n, n), off, dtype=np.complex128)
    np.fill_diagonal(s, 1.0)
    return s


def predicted_delta_p(h, spec: PerturbationSpec, f: np.ndarray | None = None) -> float:
    """Coefficient of epsilon^2 in P(epsilon) - P(0) for an orthogonal perturbation.

    sum_ij (conj(v_i) v_j Delta_ij - |v_i|^2/2 - |v_j|^2/2) F_ij
    """
    h = _h_of(h)
    if not spec.orthogonal:
        raise ValidationError("second-order prediction requires an orthogonal perturbation")
    n = h.shape[0]
    if spec.n != n:
        raise DimensionError(f"H has order {n} but the perturbation has {spec.n} photons")
    if f is None:
        f = f_matrix(h).matrix
    v = spec.v
    a = np.abs(v) ** 2
    x = np.outer(v.conj(), v) * spec.delta - 0.5 * (a[:, None] + a[None, :])
    return float(np.sum(x * f).real)


def optimal_directions(h, degeneracy_rtol: float = DEGENERACY_RTOL) -> Directions:
    """Extreme eigenpairs of F; the eigenvectors are the perturbation weights that
    maximize and minimize the second-order bunching change (Delta = ones)."""
    h = check_psd(_h_of(h), name="H")
    fm = f_matrix(h)
    eig = hermitian_eig(fm.matrix)
    w = eig.eigenvalues
    scale = max(abs(w[0]), abs(w[-1]), 1e-300)
    n = w.size
    deg_max = n > 1 and (w[-1] - w[-2]) < degeneracy_rtol * scale
    deg_min = n > 1 and (w[1] - w[0]) < degeneracy_rtol * scale
    return Directions(
        v_max=eig.eigenvectors[:, -1],
        v_min=eig.eigenvectors[:, 0],
        lambda_max=float(w[-1]),
        lambda_min=float(w[0]),
        perm_h=float(fm.source_perm.real),
        degenerate_max=bool(deg_max),
        degenerate_min=bool(deg_min),
        F=fm.matrix,
    )


def default_grid() -> np.ndarray:
    return np.linspace(0.0, 2.5, 51)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get("BUNCHLAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def epsilon_scan(h, v, delta=None, grid=None, workers: int | None = None) -> ScanResult:
    """Bunching probability, violation ratio and indistinguishability along epsilon."""
    h = _h_of(h)
    n = h.shape[0]
    if delta is None:
        delta = np.ones((n, n), dtype=np.complex128)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValidationError("epsilon grid is empty")
    if np.any(grid < 0) or np.any(np.diff(grid) < 0):
        raise ValidationError("epsilon grid must be non-negative and ascending")
    base = PerturbationSpec(0.0, v, delta)
    if base.n != n:
        raise DimensionError(f"H has order {n} but v has {base.n} entries")
    p0 = perm(h).real
    if p0 <= 1e-300:
        raise DegenerateError("perm(H) vanishes; the violation ratio is undefined")

    def row(eps: float) -> tuple[float, float]:
        s = perturbed_gram(base.with_epsilon(float(eps)))
        return bunching_probability(h, s, validate=False), indistinguishability(s)

    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(row, grid))
    else:
        results = [row(e) for e in grid]
    p = np.array([r[0] for r in results])
    d = np.array([r[1] for r in results])
    return ScanResult(
        epsilon=grid,
        p_bunch=p,
        ratio=p / p0,
        indistinguishability=d,
        metadata={"perm_h": p0, "n": n},
    )


def second_order_estimate(h, spec: PerturbationSpec, eps=(1e-2, 1e-3, 1e-4), phi0=None) -> dict:
    """Finite-difference estimates of (P(eps) - P(0)) / eps^k from one-sided stencils.

    Uses the closed-form Gram matrix for orthogonal specs and explicit states
    otherwise. Returns the per-eps quotients for k = 1 and k = 2 together with
    a Richardson extrapolation of the k = 2 quotient (valid for orthogonal
    perturbations, whose expansion is even in eps).
    """
    h = _h_of(h)
    p0 = bunching_probability(h, np.ones_like(h), validate=False)
    eps = np.asarray(eps, dtype=float)
    diffs = []
    for e in eps:
        s_e = spec.with_epsilon(float(e))
        if spec.orthogonal:
            s = perturbed_gram(s_e)
        else:
            if phi0 is None:
                raise ValidationError("phi0 required for explicit-state perturbations")
            s = perturbed_states(phi0, s_e).gram()
        diffs.append(bunching_probability(h, s) - p0)
    diffs = np.array(diffs)
    second = diffs / eps**2
    richardson = None
    if eps.size >= 2:
        ratio = (eps[0] / eps[1]) ** 2
        richardson = float((ratio * second[1] - second[0]) / (ratio - 1.0))
    return {"eps": eps, "first": np.abs(diffs) / eps, "second": second, "richardson": richardson}
