"""Linear interferometers, bunching setups and the Drury construction.

Convention: ``U[l, a]`` is the amplitude for a photon entering input mode
``a`` to leave through output mode ``l`` (columns are inputs). With this
convention the bunching matrix of an output subset ``K`` is

    H[a, b] = sum_{l in K} conj(U[l, a]) * U[l, b],

and placing a block ``B`` in the top-left corner of ``U`` gives ``H = B^H B``
for ``K`` = the first rows. All mode indices in the library are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, DimensionError, ValidationError
from .matcore import as_matrix, as_square, phase_fix, pivoted_cholesky, spectral_norm

UNITARY_ATOL = 1e-9
CONTRACTION_ATOL = 1e-9

_DRURY_RE = np.array(
    [
        [-7, 9, -6, 3, 7, 4, 0, 5],
        [4, 1, -8, -7, 1, 1, 8, 1],
    ],
    dtype=float,
)
_DRURY_IM = np.array(
    [
        [4, -3, 2, 4, 6, -4, 1, -8],
        [-5, 4, -2, 4, -4, -8, -6, -3],
    ],
    dtype=float,
)


def unitarity_error(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))


@dataclass(frozen=True)
class Interferometer:
    U: np.ndarray
    atol: float = field(default=UNITARY_ATOL, compare=False)

    def __post_init__(self):
        u = as_square(self.U, "U")
        err = unitarity_error(u)
        if err > self.atol:
            raise ValidationError(f"U is not unitary (max |U^H U - I| = {err:.3e})")
        object.__setattr__(self, "U", u)

    @property
    def m(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class BunchingSetup:
    """Photons in input modes ``0 .. n-1``; detection in output ``subset``."""

    interferometer: Interferometer
    n: int
    subset: tuple[int, ...]
    H: np.ndarray

    @property
    def m(self) -> int:
        return self.interferometer.m


@dataclass(frozen=True)
class MeshElement:
    """Two-mode coupler on modes ``(mode, mode + 1)``.

    Acts as ``[[e^{i phi} cos(theta), -sin(theta)], [e^{i phi} sin(theta), cos(theta)]]``.
    """

    mode: int
    theta: float
    phi: float

    def is_identity(self, atol: float = 1e-12) -> bool:
        return abs(self.theta) <= atol and abs(np.angle(np.exp(1j * self.phi))) <= atol


@dataclass(frozen=True)
class BeamsplitterMesh:
    """Couplers in the order light traverses them, then output phases."""

    m: int
    elements: tuple[MeshElement, ...]
    output_phases: np.ndarray

    def non_identity_count(self, atol: float = 1e-12) -> int:
        return sum(not e.is_identity(atol) for e in self.elements)


def drury_matrix() -> np.ndarray:
    """The 2x8 complex matrix M whose Gram matrix M^H M breaks the F-matrix eigenvalue conjecture."""
    return _DRURY_RE + 1j * _DRURY_IM


def drury_gram() -> np.ndarray:
    m = drury_matrix()
    return m.conj().T @ m


def rescale_to_contraction(m) -> tuple[np.ndarray, float]:
    """Scale ``M`` by sqrt(alpha) so that alpha * M^H M has unit spectral norm."""
    m = as_matrix(m, "M")
    if m.shape[0] > m.shape[1]:
        raise DimensionError(f"expected k x m with k <= m, got {m.shape}")
    norm = spectral_norm(m.conj().T @ m)
    if norm == 0.0:
        raise DegenerateError("cannot rescale the zero matrix")
    alpha = 1.0 / norm
    return np.sqrt(alpha) * m, alpha


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def complete_to_unitary(b, m_total: int | None = None, rng=0) -> Interferometer:
    """Embed a contraction ``B`` (k x m) as the top-left block of a unitary.

    The first ``k`` rows are ``[B | C | 0]`` with ``C C^H = I - B B^H`` from a
    pivoted Cholesky factor (real non-negative pivots), so ``C`` has
    rank(I - B B^H) columns and ``m_total`` defaults to ``m + k``. The remaining rows are
    Gram-Schmidt orthogonalized complex Gaussian vectors drawn from ``rng``,
    each phase-fixed so its largest entry is real positive.
    """
    b = as_matrix(b, "B")
    k, m = b.shape
    bbh = b @ b.conj().T
    top_eig = float(np.linalg.eigvalsh(0.5 * (bbh + bbh.conj().T))[-1])
    if top_eig > 1.0 + CONTRACTION_ATOL:
        raise ValidationError(f"B is not a contraction (largest eigenvalue of B B^H = {top_eig:.6g})")

    # only rank(I - B B^H) extra columns are needed to make the first k rows orthonormal
    factor = pivoted_cholesky(np.eye(k) - bbh, psd_rtol=10 * CONTRACTION_ATOL)
    r = factor.shape[0]
    if m_total is None:
        m_total = m + k
    if m_total < m + r:
        raise DimensionError(f"m_total must be >= {m + r}, got {m_total}")

    u = np.zeros((m_total, m_total), dtype=np.complex128)
    u[:k, :m] = b
    u[:k, m : m + r] = factor.conj().T

    gen = _as_rng(rng)
    row = k
    while row < m_total:
        z = gen.standard_normal(m_total) + 1j * gen.standard_normal(m_total)
        for _ in range(2):
            z -= u[:row].T @ (u[:row].conj() @ z)
        norm = np.linalg.norm(z)
        if norm < 1e-8:
            continue
        u[row] = phase_fix(z / norm)
        row += 1
    return Interferometer(u)


def h_matrix(interferometer, subset, n: int) -> BunchingSetup:
    """Bunching matrix for photons in inputs ``0..n-1`` detected in ``subset``."""
    itf = interferometer if isinstance(interferometer, Interferometer) else Interferometer(interferometer)
    m = itf.m
    subset = tuple(sorted({int(s) for s in subset}))
    if not subset:
        raise ValidationError("subset must be non-empty")
    if subset[0] < 0 or subset[-1] >= m:
        raise ValidationError(f"subset indices must lie in 0..{m - 1}")
    if not 1 <= n <= m:
        raise ValidationError(f"photon number must be in 1..{m}, got {n}")
    block = itf.U[np.array(subset), :n]
    h = block.conj().T @ block
    h = 0.5 * (h + h.conj().T)
    return BunchingSetup(interferometer=itf, n=n, subset=subset, H=h)


def drury_setup(rng=0) -> tuple[BunchingSetup, float]:
    """The 8-photon, 10-mode bunching setup whose H is alpha * M^H M. Returns (setup, alpha)."""
    b, alpha = rescale_to_contraction(drury_matrix())
    itf = complete_to_unitary(b, 10, rng)
    return h_matrix(itf, (0, 1), 8), alpha


def coupler(m: int, mode: int, theta: float, phi: float) -> np.ndarray:
    t = np.eye(m, dtype=np.complex128)
    c, s, e = np.cos(theta), np.sin(theta), np.exp(1j * phi)
    t[mode, mode] = e * c
    t[mode, mode + 1] = -s
    t[mode + 1, mode] = e * s
    t[mode + 1, mode + 1] = c
    return t


def _wrap(phi: float) -> float:
    phi = float(np.mod(phi, 2 * np.pi))
    return 0.0 if np.isclose(phi, 2 * np.pi, rtol=0.0, atol=1e-15) else phi


def _null_right(a: complex, b: complex) -> tuple[float, float]:
    # (x T^H)_0 = 0 for x = (a, b)
    theta = float(np.arctan2(abs(a), abs(b)))
    phi = float(np.angle(a) - np.angle(b)) if (a != 0 and b != 0) else 0.0
    return theta, _wrap(phi)


def _null_left(a: complex, b: complex) -> tuple[float, float]:
    # (T y)_1 = 0 for y = (a, b)
    theta = float(np.arctan2(abs(b), abs(a)))
    phi = float(np.angle(-b) - np.angle(a)) if (a != 0 and b != 0) else 0.0
    return theta, _wrap(phi)


def clements_decompose(interferometer, atol: float = 1e-8) -> BeamsplitterMesh:
    """Rectangular-mesh decomposition of a unitary into nearest-neighbour couplers."""
    u0 = interferometer.U if isinstance(interferometer, Interferometer) else interferometer
    u = Interferometer(u0, atol=atol).U.copy()
    m = u.shape[0]
    right: list[MeshElement] = []
    left: list[MeshElement] = []
    for i in range(m - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                row, col = m - 1 - j, i - j
                theta, phi = _null_right(u[row, col], u[row, col + 1])
                u = u @ coupler(m, col, theta, phi).conj().T
                right.append(MeshElement(col, theta, phi))
        else:
            for j in range(i + 1):
                row, col = m - i - 1 + j, j
                theta, phi = _null_left(u[row - 1, col], u[row, col])
                u = coupler(m, row - 1, theta, phi) @ u
                left.append(MeshElement(row - 1, theta, phi))

    d = np.diag(u).copy()
    moved: list[MeshElement] = []
    for el in reversed(left):
        if el.is_identity(0.0):
            moved.append(el)
            continue
        d1, d2 = d[el.mode], d[el.mode + 1]
        new_phi = _wrap(float(np.angle(-d1 / d2)))
        d[el.mode] = -np.exp(-1j * el.phi) * d2
        moved.append(MeshElement(el.mode, el.theta, new_phi))
    # the last-created left coupler ends up adjacent to the right-side couplers
    elements = tuple(right) + tuple(moved)
    phases = np.array([_wrap(float(p)) for p in np.angle(d)])
    return BeamsplitterMesh(m=m, elements=elements, output_phases=phases)


def clements_reconstruct(mesh: BeamsplitterMesh) -> Interferometer:
    m = mesh.m
    if len(mesh.output_phases) != m:
        raise ValidationError("output_phases must have one entry per mode")
    u = np.eye(m, dtype=np.complex128)
    for el in mesh.elements:
        if not 0 <= el.mode < m - 1:
            raise ValidationError(f"coupler mode pair ({el.mode}, {el.mode + 1}) outside 0..{m - 1}")
        u = coupler(m, el.mode, el.theta, el.phi) @ u
    u = np.exp(1j * np.asarray(mesh.output_phases, dtype=float))[:, None] * u
    return Interferometer(u)


def extend_counterexample(setup: BunchingSetup, second_stage, n_extra: int = 0) -> BunchingSetup:
    """Feed the detected outputs of ``setup`` into a second interferometer.

    The second stage has ``m2 >= |K|`` modes: its first ``|K|`` inputs are the
    outputs in ``setup.subset`` (in order), the others are fresh modes appended
    after the original ones and left in vacuum. Detection is on every output
    of the second stage, so the new subset has ``m2`` modes while the bunching
    matrix, and hence every bunching probability, is unchanged.
    """
    if n_extra != 0:
        raise ValidationError("only vacuum in the extra second-stage inputs (n_extra = 0) is supported")
    u2 = second_stage.U if isinstance(second_stage, Interferometer) else as_square(second_stage, "U2")
    Interferometer(u2)
    m1, k = setup.m, len(setup.subset)
    m2 = u2.shape[0]
    if m2 < k:
        raise DimensionError(f"second stage needs at least {k} modes, got {m2}")
    extra = m2 - k
    total = m1 + extra
    stage1 = np.eye(total, dtype=np.complex128)
    stage1[:m1, :m1] = setup.interferometer.U
    routed = np.array(list(setup.subset) + list(range(m1, total)))
    stage2 = np.eye(total, dtype=np.complex128)
    stage2[np.ix_(routed, routed)] = u2
    composite = Interferometer(stage2 @ stage1)
    return h_matrix(composite, tuple(routed), setup.n)
