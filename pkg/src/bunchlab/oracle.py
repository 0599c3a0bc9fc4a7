"""Brute-force Fock-space simulation of linear interference with internal states.

Independent of the permanent formula: the input creation operators are
expanded monomial by monomial, so this is only usable for a handful of
photons. Used to validate ``bunching_probability``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .distinguishability import InternalStateFamily
from .errors import DimensionError, SizeError, ValidationError
from .interferometry import Interferometer
from .matcore import cholesky_gram

MAX_PHOTONS = 4
MAX_MODES = 6


@dataclass(frozen=True)
class FockState:
    """One basis state of the output: occupation[l][k] photons in spatial mode l, internal mode k."""

    occupation: tuple[tuple[int, ...], ...]
    amplitude: complex

    @property
    def spatial(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.occupation)

    @property
    def probability(self) -> float:
        return abs(self.amplitude) ** 2


def _check_caps(u: np.ndarray, states: InternalStateFamily) -> None:
    m = u.shape[0]
    if states.n > MAX_PHOTONS or m > MAX_MODES:
        raise SizeError(f"oracle supports n <= {MAX_PHOTONS} photons and m <= {MAX_MODES} modes")
    if states.n > m:
        raise DimensionError("more photons than modes")


def evolve(interferometer, states: InternalStateFamily) -> list[FockState]:
    """Output state for photon ``j`` entering input mode ``j`` in internal state ``states[j]``."""
    itf = interferometer if isinstance(interferometer, Interferometer) else Interferometer(interferometer)
    u = itf.U
    _check_caps(u, states)
    m, n = u.shape[0], states.n
    # orthonormal internal basis: column j of coef holds photon j's components
    coef = cholesky_gram(states.gram())
    d = coef.shape[0]

    terms: dict[tuple[int, ...], complex] = {(): 1.0 + 0.0j}
    for j in range(n):
        creation = [
            (l * d + k, u[l, j] * coef[k, j])
            for l in range(m)
            for k in range(d)
            if u[l, j] != 0 and coef[k, j] != 0
        ]
        nxt: dict[tuple[int, ...], complex] = {}
        for key, amp in terms.items():
            for mode, c in creation:
                new_key = tuple(sorted(key + (mode,)))
                nxt[new_key] = nxt.get(new_key, 0.0) + amp * c
        terms = nxt

    out = []
    for key in sorted(terms):
        counts = np.bincount(np.array(key, dtype=np.intp), minlength=m * d)
        norm = math.sqrt(math.prod(math.factorial(int(c)) for c in counts))
        occ = tuple(tuple(int(c) for c in counts[l * d : (l + 1) * d]) for l in range(m))
        out.append(FockState(occ, terms[key] * norm))
    return out


def fock_bunching_oracle(interferometer, subset, states: InternalStateFamily) -> float:
    """Probability that every photon exits in ``subset`` (0-based output modes)."""
    fock = evolve(interferometer, states)
    m = len(fock[0].occupation)
    subset = set(int(s) for s in subset)
    if not subset or min(subset) < 0 or max(subset) >= m:
        raise ValidationError(f"subset must be a non-empty subset of 0..{m - 1}")
    outside = [l for l in range(m) if l not in subset]
    return float(
        math.fsum(s.probability for s in fock if all(s.spatial[l] == 0 for l in outside))
    )


def output_distribution(interferometer, states: InternalStateFamily) -> list[tuple[tuple[int, ...], float]]:
    """Probabilities of all spatial occupation patterns, internal modes traced out."""
    fock = evolve(interferometer, states)
    m = len(fock[0].occupation)
    n = states.n
    acc: dict[tuple[int, ...], list[float]] = {}
    for s in fock:
        acc.setdefault(s.spatial, []).append(s.probability)
    patterns = [p for p in product(range(n, -1, -1), repeat=m) if sum(p) == n]
    return [(p, math.fsum(acc.get(p, []))) for p in patterns]
