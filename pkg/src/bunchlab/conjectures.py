"""Numerical verdicts for two permanent inequalities on p.s.d. matrices.

* ``M1`` (Hadamard product): perm(A * B) <= perm(A) * prod_i B_ii.
* ``M2`` (F-matrix eigenvalue): the largest eigenvalue of
  F[i, j] = A[i, j] * perm(A(i, j)) equals perm(A).

Both are known to fail. :func:`verify_theorem1` checks the second-order
expansion that turns any M2 violation into an M1 violation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DimensionError, SizeError, ValidationError
from .matcore import UNIT_NORM_ATOL, check_psd, hermitian_eig, random_psd
from .permanent import f_matrix, perm

VIOLATION_RTOL = 1e-8
M1_MAX_N = 12
M2_MAX_N = 14


@dataclass(frozen=True)
class ConjectureVerdict:
    conjecture: str  # "M1" or "M2"
    ratio: float
    tolerance_used: float = VIOLATION_RTOL
    witness: dict = field(default_factory=dict, compare=False)
    applicable: bool = True

    @property
    def margin(self) -> float:
        """Positive when the inequality is violated."""
        return self.ratio - 1.0

    @property
    def violated(self) -> bool:
        return self.applicable and self.ratio > 1.0 + self.tolerance_used

    def to_dict(self) -> dict:
        out = {
            "conjecture": self.conjecture,
            "applicable": self.applicable,
            "violated": self.violated,
            "ratio": self.ratio,
            "margin": self.margin,
            "tolerance_used": self.tolerance_used,
        }
        out["witness"] = {k: _jsonable(v) for k, v in self.witness.items()}
        return out


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return [[float(z.real), float(z.imag)] for z in value.ravel()]
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    return value


def check_m1(a, b, tol: float = VIOLATION_RTOL) -> ConjectureVerdict:
    a = check_psd(a, name="A")
    b = check_psd(b, name="B")
    if a.shape != b.shape:
        raise DimensionError(f"A is {a.shape} but B is {b.shape}")
    n = a.shape[0]
    if n > M1_MAX_N:
        raise SizeError(f"check_m1 supports n <= {M1_MAX_N}")
    perm_a = perm(a).real
    diag = float(np.prod(np.diag(b).real))
    perm_ab = perm(a * b).real
    witness = {"perm_AB": perm_ab, "perm_A": perm_a, "prod_diag_B": diag}
    if perm_a * diag <= 1e-300:
        return ConjectureVerdict("M1", float("nan"), tol, witness, applicable=False)
    return ConjectureVerdict("M1", perm_ab / (perm_a * diag), tol, witness)


def check_m2(a, tol: float = VIOLATION_RTOL) -> ConjectureVerdict:
    a = check_psd(a, name="A")
    n = a.shape[0]
    if n > M2_MAX_N:
        raise SizeError(f"check_m2 supports n <= {M2_MAX_N}")
    fm = f_matrix(a)
    perm_a = fm.source_perm.real
    if perm_a < 1e-300:
        raise DegenerateError("perm(A) vanishes; the eigenvalue ratio is undefined")
    eig = hermitian_eig(fm.matrix)
    witness = {"lambda_max": eig.lambda_max, "perm_A": perm_a, "v_max": eig.eigenvectors[:, -1]}
    return ConjectureVerdict("M2", eig.lambda_max / perm_a, tol, witness)


def correlation_matrix(v, epsilon: float) -> np.ndarray:
    """B(eps) = M^H M where column i of M is (1, eps v_i) / sqrt(1 + eps^2 |v_i|^2).

    B(0) is the all-ones matrix and every B(eps) has unit diagonal.
    """
    v = np.asarray(v, dtype=np.complex128).ravel()
    scale = 1.0 / np.sqrt(1.0 + epsilon**2 * np.abs(v) ** 2)
    m = np.vstack([scale, epsilon * v * scale])
    b = m.conj().T @ m
    return 0.5 * (b + b.conj().T)


@dataclass
class Theorem1Report:
    epsilons: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    perm_a: float
    quadratic_form: float
    slope: float | None
    m1_verdicts: list = field(default_factory=list)

    @property
    def residual(self) -> np.ndarray:
        return np.abs(self.measured - self.predicted)

    def first_violation(self) -> ConjectureVerdict | None:
        return next((v for v in self.m1_verdicts if v.violated), None)


def verify_theorem1(a, v, epsilons) -> Theorem1Report:
    """Compare perm(A * B(eps)) with perm(A) + eps^2 (v^H F v - perm(A)).

    The log-log slope of the residual over the supplied epsilons should be 4.
    """
    a = check_psd(a, name="A")
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != a.shape[0]:
        raise DimensionError("v must have one entry per row of A")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_NORM_ATOL:
        raise ValidationError("v must have unit norm")
    eps = np.asarray(epsilons, dtype=float).ravel()
    if np.any(eps < 0) or np.any(eps > 1):
        raise ValidationError("epsilons must lie in [0, 1]")
    fm = f_matrix(a)
    perm_a = fm.source_perm.real
    quad = float((v.conj() @ fm.matrix @ v).real)
    measured = np.array([perm(a * correlation_matrix(v, e)).real for e in eps])
    predicted = perm_a + eps**2 * (quad - perm_a)
    verdicts = [check_m1(a, correlation_matrix(v, e)) for e in eps]

    slope = None
    resid = np.abs(measured - predicted)
    ok = (eps > 0) & (resid > 0)
    if ok.sum() >= 2:
        slope = float(np.polyfit(np.log(eps[ok]), np.log(resid[ok]), 1)[0])
    return Theorem1Report(eps, measured, predicted, perm_a, quad, slope, verdicts)


def _trial(n: int, seed: int, index: int) -> ConjectureVerdict:
    rng = np.random.default_rng([seed, index])
    rank = int(rng.integers(2, n + 1))
    a = random_psd(n, rank, rng)
    verdict = check_m2(a)
    verdict.witness.update({"trial": index, "rank": rank, "source": "gaussian"})
    return verdict


def random_violation_search(
    n: int,
    trials: int,
    seed: int = 0,
    inject=(),
    workers: int = 1,
    keep_above: float = 1.0 - 1e-6,
) -> list[ConjectureVerdict]:
    """Seeded search for M2 violations among low-rank Gaussian p.s.d. matrices.

    Matrices in ``inject`` are checked first (as trials 0, 1, ...); random trial
    ``t`` draws from its own generator seeded by ``(seed, t)``, so results do not
    depend on ``workers``. Returns verdicts with ratio above ``keep_above``,
    largest ratio first.
    """
    if not 2 <= n <= 10:
        raise SizeError("random_violation_search supports 2 <= n <= 10")
    verdicts = []
    for i, a in enumerate(inject):
        verdict = check_m2(a)
        verdict.witness.update({"trial": i, "source": "injected"})
        verdicts.append(verdict)
    indices = range(len(verdicts), len(verdicts) + trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts.extend(pool.map(lambda t: _trial(n, seed, t), indices))
    else:
        verdicts.extend(_trial(n, seed, t) for t in indices)
    kept = [v for v in verdicts if v.ratio > keep_above]
    kept.sort(key=lambda v: (-v.ratio, v.witness["trial"]))
    return kept
